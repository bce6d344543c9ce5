//! Label vectors on the Bloch sphere and the assignment rule.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::packing::{self, PackingOptions};
use crate::{seed, Error, Result};

pub const MAX_LABELS: usize = 64;

/// `(theta, phi)` of a single-qubit label state
/// `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochAngles {
    pub theta: f64,
    pub phi: f64,
}

impl BlochAngles {
    pub fn to_vector(self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [cp * st, sp * st, ct]
    }
}

/// Polar and azimuthal angles of a unit Bloch vector. Poles get `phi = 0`.
pub fn bloch_angles(v: [f64; 3]) -> Result<BlochAngles> {
    let n = norm(&v);
    if (n - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!(
            "label vector {v:?} has norm {n}, not 1"
        )));
    }
    let theta = (v[2] / n).clamp(-1.0, 1.0).acos();
    let phi = if v[0] == 0.0 && v[1] == 0.0 {
        0.0
    } else {
        let p = v[1].atan2(v[0]);
        if p < 0.0 {
            p + TAU
        } else {
            p
        }
    };
    // atan2 of a tiny negative y can round up to exactly TAU.
    let phi = if phi >= TAU { 0.0 } else { phi };
    Ok(BlochAngles { theta, phi })
}

/// The `L` label vectors of a classification problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub vectors: Vec<[f64; 3]>,
    pub params: Vec<BlochAngles>,
    /// Smallest angle between two label vectors, radians.
    pub min_pairwise_angle: f64,
}

impl LabelSet {
    pub fn from_vectors(vectors: Vec<[f64; 3]>) -> Result<Self> {
        if vectors.len() < 2 {
            return Err(Error::invalid("a label set needs at least two classes"));
        }
        let params = vectors
            .iter()
            .map(|&v| bloch_angles(v))
            .collect::<Result<Vec<_>>>()?;
        let as_vecs: Vec<Vec<f64>> = vectors.iter().map(|v| v.to_vec()).collect();
        let min_pairwise_angle = packing::min_pairwise_angle(&as_vecs, false);
        Ok(Self {
            vectors,
            params,
            min_pairwise_angle,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Tammes placement of `count` label vectors.
///
/// Two to four classes use fixed optimal configurations (poles, equatorial
/// triangle, tetrahedron with a vertex at the north pole). Larger counts are
/// optimized numerically from `seed` and rotated so the first vector is
/// `(0, 0, 1)` and the second lies in the `x >= 0` half of the x-z plane.
pub fn tammes_placement(count: usize, seed: u64) -> Result<LabelSet> {
    if !(2..=MAX_LABELS).contains(&count) {
        return Err(Error::invalid(format!(
            "label count {count} outside 2..={MAX_LABELS}"
        )));
    }
    let h = 3f64.sqrt() / 2.0;
    let t = 2f64.sqrt() / 3.0;
    let u = (2.0f64 / 3.0).sqrt();
    let vectors = match count {
        2 => vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]],
        3 => vec![[1.0, 0.0, 0.0], [-0.5, h, 0.0], [-0.5, -h, 0.0]],
        4 => vec![
            [0.0, 0.0, 1.0],
            [-t, u, -1.0 / 3.0],
            [-t, -u, -1.0 / 3.0],
            [2.0 * t, 0.0, -1.0 / 3.0],
        ],
        _ => {
            let mut rng = seed::rng(seed, &[count as u64]);
            let points = packing::pack(count, 3, false, &PackingOptions::default(), &mut rng);
            canonicalize(points.iter().map(|p| [p[0], p[1], p[2]]).collect())
        }
    };
    LabelSet::from_vectors(vectors)
}

fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn rotate(v: [f64; 3], axis: [f64; 3], angle: f64) -> [f64; 3] {
    // Rodrigues' formula; `axis` is unit length.
    let (s, c) = angle.sin_cos();
    let k_dot_v = axis[0] * v[0] + axis[1] * v[1] + axis[2] * v[2];
    let cross = [
        axis[1] * v[2] - axis[2] * v[1],
        axis[2] * v[0] - axis[0] * v[2],
        axis[0] * v[1] - axis[1] * v[0],
    ];
    std::array::from_fn(|i| v[i] * c + cross[i] * s + axis[i] * k_dot_v * (1.0 - c))
}

fn canonicalize(mut points: Vec<[f64; 3]>) -> Vec<[f64; 3]> {
    let first = points[0];
    // Rotate `first` onto +z about the axis first x z.
    let axis = [first[1], -first[0], 0.0];
    let axis_norm = norm(&axis);
    if axis_norm > 1e-15 {
        let axis = axis.map(|a| a / axis_norm);
        let angle = first[2].clamp(-1.0, 1.0).acos();
        points.iter_mut().for_each(|p| *p = rotate(*p, axis, angle));
    } else if first[2] < 0.0 {
        points.iter_mut().for_each(|p| *p = [p[0], -p[1], -p[2]]);
    }
    let second = points[1];
    let phi = second[1].atan2(second[0]);
    points
        .iter_mut()
        .for_each(|p| *p = rotate(*p, [0.0, 0.0, 1.0], -phi));
    points[0] = [0.0, 0.0, 1.0];
    points[1][1] = 0.0;
    for p in points.iter_mut() {
        let n = norm(p);
        *p = p.map(|x| x / n);
    }
    points
}

/// Outcome of the assignment rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub class: usize,
    /// The predicted vector was numerically zero, so the class is arbitrary.
    pub degenerate: bool,
}

/// Class whose label vector has the largest inner product with `y_pred`.
/// Ties go to the lowest class index.
pub fn assign(y_pred: &[f64; 3], labels: &LabelSet) -> Assignment {
    if norm(y_pred) < 1e-12 {
        return Assignment {
            class: 0,
            degenerate: true,
        };
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in labels.vectors.iter().enumerate() {
        let d = v[0] * y_pred[0] + v[1] * y_pred[1] + v[2] * y_pred[2];
        if d > best.1 {
            best = (i, d);
        }
    }
    Assignment {
        class: best.0,
        degenerate: false,
    }
}

/// `cos` of the angle between `y_pred` and each label vector.
pub fn label_cosines(y_pred: &[f64; 3], labels: &LabelSet) -> Vec<f64> {
    let n = norm(y_pred);
    labels
        .vectors
        .iter()
        .map(|v| (v[0] * y_pred[0] + v[1] * y_pred[1] + v[2] * y_pred[2]) / (n * norm(v)))
        .collect()
}

/// Whether `phi` is a valid azimuth.
pub fn azimuth_in_range(phi: f64) -> bool {
    (0.0..TAU).contains(&phi)
}

/// Whether `theta` is a valid polar angle.
pub fn polar_in_range(theta: f64) -> bool {
    (0.0..=PI).contains(&theta)
}
