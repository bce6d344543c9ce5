//! The multi-class SWAP-Test classifier.
//!
//! For each tomography basis the circuit is rebuilt from scratch:
//!
//! 1. load `sum_m sqrt(w_m) |0>|x~>|x_m>|y_m>|m>` by amplitude assignment,
//! 2. `H` on the ancilla, controlled swap of test and training registers,
//!    `H` on the ancilla,
//! 3. rotate the label qubit into the measured basis (`H` for x, `H S^dag`
//!    for y, nothing for z),
//! 4. `CNOT` from ancilla to label qubit, which folds the ancilla parity into
//!    a single-qubit `<Z>` on the label qubit.
//!
//! The three `<Z>` values form the predicted vector
//! `sum_i alpha_i y_i` with `alpha_i = sum_{m: y_m = i} w_m |<x~|x_m>|^2`,
//! which [`predicted_classical`] computes directly from the kernel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::encoding::{self, Encoding, Kernel};
use crate::labels::{self, LabelSet};
use crate::noise::{self, DepolarizeMode, Ensemble};
use crate::qsim::{self, Gate, RegisterLayout, Statevector};
use crate::{seed, Error, Result};

/// Labelled training rows with their index-register weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    weights: Vec<f64>,
}

impl TrainingSet {
    /// Uniform weights `1 / M`.
    pub fn uniform(points: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let m = points.len();
        Self::with_weights(points, labels, vec![1.0 / m.max(1) as f64; m])
    }

    pub fn with_weights(
        points: Vec<Vec<f64>>,
        labels: Vec<usize>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("training set is empty"));
        }
        if labels.len() != points.len() || weights.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: if labels.len() != points.len() {
                    labels.len()
                } else {
                    weights.len()
                },
            });
        }
        let dim = points[0].len();
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        if weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(Error::invalid("training weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "training weights sum to {total}, not 1"
            )));
        }
        Ok(Self {
            points,
            labels,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check_labels(&self, labels: &LabelSet) -> Result<()> {
        match self.labels.iter().find(|&&y| y >= labels.len()) {
            Some(y) => Err(Error::invalid(format!(
                "training label {y} has no label vector ({} classes)",
                labels.len()
            ))),
            None => Ok(()),
        }
    }
}

/// Reconstructed Bloch vector of the label qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedVector {
    pub xyz: [f64; 3],
    /// Class-wise kernel sums; only known on the classical path.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
}

impl PredictedVector {
    pub fn norm(&self) -> f64 {
        self.xyz.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// How the predicted vector is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum Execution {
    /// Statevector simulation with exact expectations.
    ExactCircuit,
    /// Statevector simulation with `shots` measurements per basis.
    SampledCircuit { shots: u64 },
    /// Direct kernel sums.
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub encoding: Encoding,
    pub execution: Execution,
    /// Depolarizing probability on the label qubit before measurement.
    pub noise: Option<f64>,
    pub seed: u64,
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.encoding == Encoding::Angle && self.execution != Execution::Classical {
            return Err(Error::invalid(
                "angle encoding is only evaluated on the classical path",
            ));
        }
        if let Execution::SampledCircuit { shots: 0 } = self.execution {
            return Err(Error::invalid("sampled execution needs at least one shot"));
        }
        if let Some(p) = self.noise {
            noise::check_probability(p)?;
        }
        Ok(())
    }
}

/// Tomography basis of the label qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];
}

fn label_state(labels: &LabelSet, class: usize) -> [Complex64; 2] {
    let a = labels.params[class];
    let half = a.theta / 2.0;
    [
        Complex64::new(half.cos(), 0.0),
        Complex64::from_polar(half.sin(), a.phi),
    ]
}

/// Builds the initial register state and its layout.
pub fn prepare_initial_state(
    test: &[f64],
    train: &TrainingSet,
    labels: &LabelSet,
) -> Result<(Statevector, RegisterLayout)> {
    if test.len() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            got: test.len(),
        });
    }
    train.check_labels(labels)?;
    let test_state = encoding::amplitude_encode(test)?;
    let n = test_state.num_qubits;
    let layout = RegisterLayout::new(n, encoding::qubits_for(train.len()))?;

    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << layout.total_qubits];
    for (m, ((x, &y), &w)) in train
        .points
        .iter()
        .zip(&train.labels)
        .zip(&train.weights)
        .enumerate()
    {
        let train_state = encoding::amplitude_encode(x)?;
        let label = label_state(labels, y);
        let branch = w.sqrt();
        for (i, &a) in test_state.amplitudes.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in train_state.amplitudes.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                for (l, &c) in label.iter().enumerate() {
                    let idx = (i << layout.test.start)
                        | (j << layout.train.start)
                        | (l << layout.label)
                        | (m << layout.index.start);
                    amplitudes[idx] = c * (branch * a * b);
                }
            }
        }
    }
    Ok((qsim::init_state(amplitudes, &layout)?, layout))
}

/// Gates applied after state preparation for one basis.
pub fn basis_circuit(layout: &RegisterLayout, basis: Basis) -> Vec<Gate> {
    let mut gates = vec![
        Gate::H(layout.ancilla),
        Gate::CswapRegister {
            control: layout.ancilla,
            a: layout.test,
            b: layout.train,
        },
        Gate::H(layout.ancilla),
    ];
    match basis {
        Basis::X => gates.push(Gate::H(layout.label)),
        Basis::Y => gates.extend([Gate::Sdg(layout.label), Gate::H(layout.label)]),
        Basis::Z => {}
    }
    gates.push(Gate::Cnot {
        control: layout.ancilla,
        target: layout.label,
    });
    gates
}

/// Predicted vector from simulated circuits.
pub fn run_tomography(
    test: &[f64],
    train: &TrainingSet,
    labels: &LabelSet,
    config: &ClassifierConfig,
) -> Result<PredictedVector> {
    config.validate()?;
    if config.encoding != Encoding::Amplitude {
        return Err(Error::invalid(
            "circuit execution requires amplitude encoding",
        ));
    }
    let mut xyz = [0.0; 3];
    for (k, basis) in Basis::ALL.into_iter().enumerate() {
        let (mut state, layout) = prepare_initial_state(test, train, labels)?;
        for gate in basis_circuit(&layout, basis) {
            state.apply(&gate)?;
        }
        let mut rng = seed::rng(config.seed, &[k as u64]);
        let ensemble = match config.noise {
            Some(p) if p > 0.0 => noise::depolarize_label_qubit(
                state,
                layout.label,
                p,
                DepolarizeMode::Exact,
                &mut rng,
            )?,
            _ => Ensemble::pure(state),
        };
        xyz[k] = match config.execution {
            Execution::ExactCircuit => ensemble.expectation_z(layout.label)?,
            Execution::SampledCircuit { shots } => {
                ensemble.sample_z(layout.label, shots, &mut rng)?
            }
            Execution::Classical => {
                return Err(Error::invalid("classical execution has no circuit to run"))
            }
        };
    }
    Ok(PredictedVector { xyz, alphas: None })
}

/// Predicted vector `sum_i alpha_i y_i` from direct kernel evaluation.
pub fn predicted_classical(
    test: &[f64],
    train: &TrainingSet,
    labels: &LabelSet,
    kernel: Kernel,
) -> Result<PredictedVector> {
    if test.len() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            got: test.len(),
        });
    }
    train.check_labels(labels)?;
    let mut alphas = vec![0.0; labels.len()];
    for ((x, &y), &w) in train.points.iter().zip(&train.labels).zip(&train.weights) {
        alphas[y] += w * kernel.eval(test, x)?;
    }
    let mut xyz = [0.0; 3];
    for (a, v) in alphas.iter().zip(&labels.vectors) {
        for k in 0..3 {
            xyz[k] += a * v[k];
        }
    }
    Ok(PredictedVector {
        xyz,
        alphas: Some(alphas),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: usize,
    pub degenerate: bool,
    pub y_pred: PredictedVector,
}

/// Predicted vector under `config`, whichever path it selects.
pub fn predict(
    test: &[f64],
    train: &TrainingSet,
    labels: &LabelSet,
    config: &ClassifierConfig,
) -> Result<PredictedVector> {
    config.validate()?;
    match config.execution {
        Execution::Classical => {
            let y = predicted_classical(test, train, labels, config.encoding.kernel())?;
            match config.noise {
                Some(p) => noise::scale_prediction(&y, p),
                None => Ok(y),
            }
        }
        _ => run_tomography(test, train, labels, config),
    }
}

pub fn classify(
    test: &[f64],
    train: &TrainingSet,
    labels: &LabelSet,
    config: &ClassifierConfig,
) -> Result<Prediction> {
    let y_pred = predict(test, train, labels, config)?;
    let a = labels::assign(&y_pred.xyz, labels);
    Ok(Prediction {
        class: a.class,
        degenerate: a.degenerate,
        y_pred,
    })
}
