//! Feature maps and the kernels they induce.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How features are loaded into the data registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    /// Normalized features as computational-basis amplitudes.
    Amplitude,
    /// One rotation per feature. Only ever evaluated through its kernel.
    Angle,
}

impl Encoding {
    pub fn kernel(self) -> Kernel {
        match self {
            Encoding::Amplitude => Kernel::Linear,
            Encoding::Angle => Kernel::Angle,
        }
    }
}

/// Kernel induced by an [`Encoding`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `|<x|z>|^2` of the normalized inputs.
    Linear,
    /// `prod_k cos^2(x_k - z_k)`.
    Angle,
}

impl Kernel {
    pub fn eval(self, x: &[f64], z: &[f64]) -> Result<f64> {
        match self {
            Kernel::Linear => linear_kernel(x, z),
            Kernel::Angle => angle_kernel(x, z),
        }
    }
}

/// Amplitude-encoded feature vector: `x / |x|` zero-padded to `2^num_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedState {
    pub amplitudes: Vec<f64>,
    pub num_qubits: usize,
}

/// Number of qubits needed to hold `n` amplitudes.
pub fn qubits_for(n: usize) -> usize {
    n.max(1).next_power_of_two().trailing_zeros() as usize
}

pub fn amplitude_encode(x: &[f64]) -> Result<EncodedState> {
    check_finite(x)?;
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let num_qubits = qubits_for(x.len());
    let mut amplitudes: Vec<f64> = x.iter().map(|v| v / norm).collect();
    amplitudes.resize(1 << num_qubits, 0.0);
    Ok(EncodedState {
        amplitudes,
        num_qubits,
    })
}

pub fn linear_kernel(x: &[f64], z: &[f64]) -> Result<f64> {
    check_dims(x, z)?;
    let dot: f64 = x.iter().zip(z).map(|(a, b)| a * b).sum();
    let nx: f64 = x.iter().map(|a| a * a).sum();
    let nz: f64 = z.iter().map(|b| b * b).sum();
    if nx == 0.0 || nz == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot * dot / (nx * nz)).min(1.0))
}

pub fn angle_kernel(x: &[f64], z: &[f64]) -> Result<f64> {
    check_dims(x, z)?;
    Ok(x.iter()
        .zip(z)
        .map(|(a, b)| (a - b).cos().powi(2))
        .product())
}

fn check_dims(x: &[f64], z: &[f64]) -> Result<()> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: z.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::invalid("feature vectors must be non-empty"));
    }
    check_finite(x)?;
    check_finite(z)
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("feature vector has non-finite entries"));
    }
    Ok(())
}

/// Per-feature affine min-max map onto `[lo, hi]`, fitted on one set of rows
/// and applied to others. Constant features map to the midpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub lo: f64,
    pub hi: f64,
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>], lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || hi <= lo {
            return Err(Error::invalid(format!(
                "scaling range [{lo}, {hi}] is empty"
            )));
        }
        let first = rows
            .first()
            .ok_or_else(|| Error::invalid("cannot fit a scaler on an empty dataset"))?;
        let mut mins = first.clone();
        let mut maxs = first.clone();
        for row in rows {
            if row.len() != mins.len() {
                return Err(Error::DimensionMismatch {
                    expected: mins.len(),
                    got: row.len(),
                });
            }
            for (k, &v) in row.iter().enumerate() {
                mins[k] = mins[k].min(v);
                maxs[k] = maxs[k].max(v);
            }
        }
        Ok(Self { lo, hi, mins, maxs })
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mins.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mins.len(),
                got: row.len(),
            });
        }
        let mid = 0.5 * (self.lo + self.hi);
        Ok(row
            .iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&v, (&min, &max))| {
                if max > min {
                    self.lo + (v - min) / (max - min) * (self.hi - self.lo)
                } else {
                    mid
                }
            })
            .collect())
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Fits on `rows` and returns them scaled onto `[lo, hi]`.
pub fn scale_features(rows: &[Vec<f64>], lo: f64, hi: f64) -> Result<Vec<Vec<f64>>> {
    MinMaxScaler::fit(rows, lo, hi)?.transform(rows)
}
