//! Depolarizing noise on the label qubit and the label-capacity estimate.
//!
//! The channel `rho -> p I/2 + (1 - p) rho` is applied in Kraus form with
//! operators `sqrt(1 - 3p/4) I` and `sqrt(p/4)` times each Pauli. Because all
//! four operators are scaled unitaries, the post-channel state is an
//! ensemble of at most four pure branches with state-independent weights.
//!
//! The capacity estimate divides the Bloch-sphere area `4 pi |r|^2` by the
//! area `pi dtheta dphi` of the standard-error ellipse of the measured
//! vector, with the errors of `(theta, phi)` propagated to first order from
//! the binomial standard errors of the three measured components.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::classifier::PredictedVector;
use crate::qsim::{self, Gate, Statevector};
use crate::{Error, Result};

pub fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "depolarizing probability {p} outside [0, 1]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn gate(self, qubit: usize) -> Option<Gate> {
        match self {
            Pauli::I => None,
            Pauli::X => Some(Gate::X(qubit)),
            Pauli::Y => Some(Gate::Y(qubit)),
            Pauli::Z => Some(Gate::Z(qubit)),
        }
    }

    fn matrix(self) -> [[Complex64; 2]; 2] {
        let (o, z, i) = (
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 1.0),
        );
        match self {
            Pauli::I => [[o, z], [z, o]],
            Pauli::X => [[z, o], [o, z]],
            Pauli::Y => [[z, -i], [i, z]],
            Pauli::Z => [[o, z], [z, -o]],
        }
    }
}

/// Probabilities of the I, X, Y, Z Kraus branches.
pub fn kraus_weights(p: f64) -> Result<[f64; 4]> {
    check_probability(p)?;
    let q = p / 4.0;
    Ok([1.0 - 3.0 * q, q, q, q])
}

/// The four Kraus operators as 2x2 matrices.
pub fn kraus_operators(p: f64) -> Result<[[[Complex64; 2]; 2]; 4]> {
    let w = kraus_weights(p)?;
    Ok(std::array::from_fn(|k| {
        Pauli::ALL[k]
            .matrix()
            .map(|row| row.map(|x| x * w[k].sqrt()))
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepolarizeMode {
    /// Keep every Kraus branch with its probability (the channel average).
    Exact,
    /// Draw a single Kraus branch.
    KrausSample,
}

/// Probabilistic mixture of pure states.
#[derive(Debug, Clone)]
pub struct Ensemble {
    branches: Vec<(f64, Statevector)>,
}

impl Ensemble {
    pub fn pure(state: Statevector) -> Self {
        Self {
            branches: vec![(1.0, state)],
        }
    }

    pub fn branches(&self) -> &[(f64, Statevector)] {
        &self.branches
    }

    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.branches
            .iter()
            .map(|(w, s)| Ok(w * s.expectation_z(qubit)?))
            .sum()
    }

    /// Mean of `shots` `Z` measurements, drawing the branch afresh per shot.
    pub fn sample_z<R: Rng + ?Sized>(&self, qubit: usize, shots: u64, rng: &mut R) -> Result<f64> {
        if shots == 0 {
            return Err(Error::invalid("shot count must be at least 1"));
        }
        // Sequential binomials give the multinomial split of shots over
        // branches; each branch then yields its own +1 count.
        let mut remaining = shots;
        let mut mass = 1.0;
        let mut plus = 0u64;
        for (k, (w, state)) in self.branches.iter().enumerate() {
            let n = if k + 1 == self.branches.len() || mass <= 0.0 {
                remaining
            } else {
                let frac = (w / mass).clamp(0.0, 1.0);
                Binomial::new(remaining, frac)
                    .map_err(|e| Error::invalid(e.to_string()))?
                    .sample(rng)
            };
            if n > 0 {
                plus += qsim::count_plus(state.expectation_z(qubit)?, n, rng)?;
            }
            remaining -= n;
            mass -= w;
        }
        Ok((2.0 * plus as f64 - shots as f64) / shots as f64)
    }
}

/// Applies the depolarizing channel to `qubit` of `state`.
pub fn depolarize_label_qubit<R: Rng + ?Sized>(
    state: Statevector,
    qubit: usize,
    p: f64,
    mode: DepolarizeMode,
    rng: &mut R,
) -> Result<Ensemble> {
    let weights = kraus_weights(p)?;
    if qubit >= state.num_qubits() {
        return Err(Error::InvalidGate(format!(
            "qubit {qubit} out of range for {} qubits",
            state.num_qubits()
        )));
    }
    let with_pauli = |pauli: Pauli, mut s: Statevector| -> Result<Statevector> {
        if let Some(g) = pauli.gate(qubit) {
            s.apply(&g)?;
        }
        Ok(s)
    };
    match mode {
        DepolarizeMode::Exact => {
            let mut branches = Vec::with_capacity(4);
            for (pauli, &w) in Pauli::ALL.iter().zip(&weights).skip(1) {
                if w > 0.0 {
                    branches.push((w, with_pauli(*pauli, state.clone())?));
                }
            }
            if weights[0] > 0.0 {
                branches.insert(0, (weights[0], state));
            }
            Ok(Ensemble { branches })
        }
        DepolarizeMode::KrausSample => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = Pauli::Z;
            for (pauli, w) in Pauli::ALL.iter().zip(weights) {
                acc += w;
                if u < acc {
                    chosen = *pauli;
                    break;
                }
            }
            Ok(Ensemble::pure(with_pauli(chosen, state)?))
        }
    }
}

/// `(1 - p) y_pred`, the predicted vector behind a depolarizing channel.
pub fn scale_prediction(y_pred: &PredictedVector, p: f64) -> Result<PredictedVector> {
    check_probability(p)?;
    let f = 1.0 - p;
    Ok(PredictedVector {
        xyz: y_pred.xyz.map(|x| f * x),
        alphas: y_pred
            .alphas
            .as_ref()
            .map(|a| a.iter().map(|x| f * x).collect()),
    })
}

/// Binomial standard error of a `<Z>` estimate from `repetitions` shots.
pub fn standard_error(expect: f64, repetitions: u64) -> Result<f64> {
    if repetitions == 0 {
        return Err(Error::invalid("repetitions must be at least 1"));
    }
    if !(-1.0..=1.0).contains(&expect) {
        return Err(Error::invalid(format!(
            "expectation {expect} outside [-1, 1]"
        )));
    }
    let ps = 0.5 * (expect + 1.0);
    Ok((4.0 * ps * (1.0 - ps) / repetitions as f64).sqrt())
}

/// Standard errors of the polar and azimuthal angles of a measured vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub delta_theta: f64,
    pub delta_phi: f64,
    /// `pi * delta_theta * delta_phi`.
    pub area: f64,
}

pub fn uncertainty_ellipsoid(r: [f64; 3], repetitions: u64) -> Result<Ellipsoid> {
    let [x, y, z] = r;
    let rho2 = x * x + y * y + z * z;
    if rho2.is_nan() || rho2 <= 0.0 {
        return Err(Error::invalid("measured vector must be nonzero"));
    }
    let u = x * x + y * y;
    if u <= 1e-24 * rho2 {
        return Err(Error::PoleDegenerate(r));
    }
    let ds = [
        standard_error(x, repetitions)?,
        standard_error(y, repetitions)?,
        standard_error(z, repetitions)?,
    ];
    let su = u.sqrt();
    let d_theta = [x * z / (rho2 * su), y * z / (rho2 * su), -su / rho2];
    let d_phi = [-y / u, x / u, 0.0];
    let propagate = |g: [f64; 3]| {
        g.iter()
            .zip(&ds)
            .map(|(g, d)| (g * d).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let delta_theta = propagate(d_theta);
    let delta_phi = propagate(d_phi);
    Ok(Ellipsoid {
        delta_theta,
        delta_phi,
        area: PI * delta_theta * delta_phi,
    })
}

/// Label capacity of one measured predicted vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub r: [f64; 3],
    pub repetitions: u64,
    pub p: Option<f64>,
    pub delta_theta: f64,
    pub delta_phi: f64,
    pub ellipsoid_area: f64,
    /// Noise-free label capacity.
    pub n_states: f64,
    /// Ellipse of the shrunken vector `(1 - p) r`, when `p` is given.
    pub noisy_ellipsoid: Option<Ellipsoid>,
    pub noisy_n_states: Option<f64>,
}

pub fn capacity(r: [f64; 3], repetitions: u64, p: Option<f64>) -> Result<CapacityEstimate> {
    let e = uncertainty_ellipsoid(r, repetitions)?;
    let rho2 = r.iter().map(|v| v * v).sum::<f64>();
    let n_states = 4.0 * PI * rho2 / e.area;
    let (noisy_ellipsoid, noisy_n_states) = match p {
        None => (None, None),
        Some(p) => {
            check_probability(p)?;
            if p == 1.0 {
                (None, Some(0.0))
            } else {
                let shrunk = r.map(|v| (1.0 - p) * v);
                let a = uncertainty_ellipsoid(shrunk, repetitions)?;
                let n = 4.0 * PI * (1.0 - p).powi(2) * rho2 / a.area;
                (Some(a), Some(n))
            }
        }
    };
    Ok(CapacityEstimate {
        r,
        repetitions,
        p,
        delta_theta: e.delta_theta,
        delta_phi: e.delta_phi,
        ellipsoid_area: e.area,
        n_states,
        noisy_ellipsoid,
        noisy_n_states,
    })
}

/// Worst-case fraction of label capacity kept under depolarization,
/// `1 - 5p + 6p^2`.
pub fn worst_case_factor(p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(1.0 - 5.0 * p + 6.0 * p * p)
}
