//! Max-min point packing on the unit sphere in any dimension.
//!
//! Used for label vectors (points on the 2-sphere) and for the class
//! directions of the XOR generator (lines through the origin, i.e. points
//! identified with their antipodes). The optimizer runs repulsion dynamics
//! with a sharpening exponent, then a local polish that only accepts moves
//! which increase the minimum pairwise angle.

use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy)]
pub struct PackingOptions {
    pub restarts: usize,
    pub repulsion_steps: usize,
    pub polish_steps: usize,
}

impl Default for PackingOptions {
    fn default() -> Self {
        Self {
            restarts: 6,
            repulsion_steps: 1500,
            polish_steps: 4000,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Angle between two unit vectors, or between the lines they span when
/// `antipodal` is set.
pub fn angle_between(a: &[f64], b: &[f64], antipodal: bool) -> f64 {
    let c = dot(a, b);
    let c = if antipodal { c.abs() } else { c };
    c.clamp(-1.0, 1.0).acos()
}

/// Smallest pairwise angle of a configuration; `PI` for fewer than two points.
pub fn min_pairwise_angle(points: &[Vec<f64>], antipodal: bool) -> f64 {
    let mut best = std::f64::consts::PI;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.min(angle_between(a, b, antipodal));
        }
    }
    best
}

pub fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if dot(&v, &v) > 1e-12 {
            normalize(&mut v);
            return v;
        }
    }
}

/// Places `count` unit vectors in `dim` dimensions maximizing the minimum
/// pairwise angle. Deterministic for a given RNG state.
pub fn pack<R: Rng + ?Sized>(
    count: usize,
    dim: usize,
    antipodal: bool,
    options: &PackingOptions,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for _ in 0..options.restarts.max(1) {
        let mut points: Vec<Vec<f64>> = (0..count).map(|_| random_unit(dim, rng)).collect();
        if count > 1 {
            repel(&mut points, antipodal, options.repulsion_steps);
            polish(&mut points, antipodal, options.polish_steps);
        }
        let score = min_pairwise_angle(&points, antipodal);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, points));
        }
    }
    best.map(|(_, p)| p).unwrap_or_default()
}

/// Images of point `j` that repel others: itself, plus its antipode for lines.
fn images(p: &[f64], antipodal: bool) -> impl Iterator<Item = (f64, &[f64])> {
    std::iter::once((1.0, p)).chain(antipodal.then_some((-1.0, p)))
}

fn repel(points: &mut [Vec<f64>], antipodal: bool, steps: usize) {
    let n = points.len();
    let dim = points[0].len();
    let mut forces = vec![vec![0.0; dim]; n];
    for t in 0..steps {
        let frac = t as f64 / steps as f64;
        // Sharpen from Coulomb-like toward max-min as the run proceeds.
        let power = 1.0 + 15.0 * frac;
        let step = 0.15 * (1.0 - frac) + 0.002;
        for f in forces.iter_mut() {
            f.iter_mut().for_each(|x| *x = 0.0);
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for (sign, q) in images(&points[j], antipodal) {
                    let d2: f64 = points[i]
                        .iter()
                        .zip(q)
                        .map(|(a, b)| (a - sign * b).powi(2))
                        .sum();
                    let scale = d2.max(1e-18).powf(-(power + 1.0) / 2.0);
                    for (f, (a, b)) in forces[i].iter_mut().zip(points[i].iter().zip(q)) {
                        *f += scale * (a - sign * b);
                    }
                }
            }
        }
        for (p, f) in points.iter_mut().zip(&mut forces) {
            // Tangential component only.
            let radial = dot(f, p);
            f.iter_mut()
                .zip(p.iter())
                .for_each(|(x, q)| *x -= radial * q);
        }
        let max = forces.iter().map(|f| dot(f, f).sqrt()).fold(0.0, f64::max);
        if max == 0.0 {
            break;
        }
        for (p, f) in points.iter_mut().zip(&forces) {
            p.iter_mut().zip(f).for_each(|(x, g)| *x += step * g / max);
            normalize(p);
        }
    }
}

/// Pushes apart the nearly-closest pairs while the minimum angle improves.
fn polish(points: &mut [Vec<f64>], antipodal: bool, steps: usize) {
    let n = points.len();
    let mut current = min_pairwise_angle(points, antipodal);
    let mut step: f64 = 1e-2;
    for _ in 0..steps {
        if step < 1e-13 {
            break;
        }
        let tol = current + step.max(1e-9) * 4.0;
        let mut candidate = points.to_vec();
        for i in 0..n {
            let mut push = vec![0.0; points[i].len()];
            for j in 0..n {
                if i == j || angle_between(&points[i], &points[j], antipodal) > tol {
                    continue;
                }
                let sign = if antipodal && dot(&points[i], &points[j]) < 0.0 {
                    -1.0
                } else {
                    1.0
                };
                for (x, (a, b)) in push.iter_mut().zip(points[i].iter().zip(&points[j])) {
                    *x += a - sign * b;
                }
            }
            let norm = dot(&push, &push).sqrt();
            if norm > 0.0 {
                for (x, g) in candidate[i].iter_mut().zip(&push) {
                    *x += step * g / norm;
                }
                normalize(&mut candidate[i]);
            }
        }
        let score = min_pairwise_angle(&candidate, antipodal);
        if score > current {
            points.clone_from_slice(&candidate);
            current = score;
            step *= 1.5;
        } else {
            step *= 0.5;
        }
    }
}
