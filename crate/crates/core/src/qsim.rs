//! Dense statevector simulator with the handful of gates the classifier needs.
//!
//! Qubit `q` is bit `q` of the amplitude index (qubit 0 is the least
//! significant bit). Gates act in place on an exclusively owned state.

use std::ops::Range;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 24;

/// A contiguous run of qubits `start..start + len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub len: usize,
}

impl Span {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn qubits(&self) -> Range<usize> {
        self.start..self.end()
    }

    pub fn contains(&self, qubit: usize) -> bool {
        self.qubits().contains(&qubit)
    }

    fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end() && other.start < self.end()
    }
}

/// Register layout of the classifier circuit.
///
/// Bit order from least significant: ancilla, test register, training
/// register, label qubit, index register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    pub ancilla: usize,
    pub test: Span,
    pub train: Span,
    pub label: usize,
    pub index: Span,
    pub total_qubits: usize,
}

impl RegisterLayout {
    /// Layout for `data_qubits`-qubit data registers and an index register of
    /// `index_qubits` qubits.
    pub fn new(data_qubits: usize, index_qubits: usize) -> Result<Self> {
        let layout = Self {
            ancilla: 0,
            test: Span::new(1, data_qubits),
            train: Span::new(1 + data_qubits, data_qubits),
            label: 1 + 2 * data_qubits,
            index: Span::new(2 + 2 * data_qubits, index_qubits),
            total_qubits: 2 + 2 * data_qubits + index_qubits,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if self.test.len != self.train.len {
            return Err(Error::InvalidState(format!(
                "test span has {} qubits but train span has {}",
                self.test.len, self.train.len
            )));
        }
        if self.total_qubits > MAX_QUBITS {
            return Err(Error::InvalidState(format!(
                "{} qubits exceed the simulator ceiling of {MAX_QUBITS}",
                self.total_qubits
            )));
        }
        let mut owner = vec![0u8; self.total_qubits];
        let singles = [self.ancilla, self.label];
        let spans = [self.test, self.train, self.index];
        for q in singles
            .into_iter()
            .chain(spans.iter().flat_map(Span::qubits))
        {
            match owner.get_mut(q) {
                Some(count) => *count += 1,
                None => {
                    return Err(Error::InvalidState(format!(
                        "qubit {q} outside a {}-qubit register",
                        self.total_qubits
                    )))
                }
            }
        }
        if let Some(q) = owner.iter().position(|&c| c != 1) {
            return Err(Error::InvalidState(format!(
                "qubit {q} is claimed by {} registers",
                owner[q]
            )));
        }
        Ok(())
    }
}

/// Gate set of the classifier circuits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Ry {
        qubit: usize,
        angle: f64,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    /// Controlled swap of two equal-length registers, position by position.
    CswapRegister {
        control: usize,
        a: Span,
        b: Span,
    },
}

type Matrix2 = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl Gate {
    fn matrix(&self) -> Option<(usize, Matrix2)> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
        Some(match *self {
            Gate::H(q) => (q, [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]),
            Gate::Sdg(q) => (q, [[o, z], [z, c(0.0, -1.0)]]),
            Gate::X(q) => (q, [[z, o], [o, z]]),
            Gate::Y(q) => (q, [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]]),
            Gate::Z(q) => (q, [[o, z], [z, -o]]),
            Gate::Ry { qubit, angle } => {
                let (sin, cos) = (angle / 2.0).sin_cos();
                (
                    qubit,
                    [[c(cos, 0.0), c(-sin, 0.0)], [c(sin, 0.0), c(cos, 0.0)]],
                )
            }
            _ => return None,
        })
    }
}

/// Dense complex amplitudes of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// Builds the state for `layout` from raw amplitudes, renormalizing them.
pub fn init_state(amplitudes: Vec<Complex64>, layout: &RegisterLayout) -> Result<Statevector> {
    layout.validate()?;
    Statevector::from_amplitudes(amplitudes, layout.total_qubits)
}

impl Statevector {
    /// `|0...0>` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        check_width(num_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn from_amplitudes(mut amplitudes: Vec<Complex64>, num_qubits: usize) -> Result<Self> {
        check_width(num_qubits)?;
        if amplitudes.len() != 1 << num_qubits {
            return Err(Error::InvalidState(format!(
                "{} amplitudes do not match a {num_qubits}-qubit register",
                amplitudes.len()
            )));
        }
        let norm = amplitudes
            .iter()
            .map(Complex64::norm_sqr)
            .sum::<f64>()
            .sqrt();
        if !norm.is_finite() {
            return Err(Error::InvalidState("non-finite amplitudes".into()));
        }
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(Complex64::norm_sqr)
            .sum::<f64>()
            .sqrt()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::InvalidGate(format!(
                "qubit {qubit} out of range for {} qubits",
                self.num_qubits
            )));
        }
        Ok(())
    }

    fn check_span(&self, span: &Span) -> Result<()> {
        if span.end() > self.num_qubits {
            return Err(Error::InvalidGate(format!(
                "span {}..{} out of range for {} qubits",
                span.start,
                span.end(),
                self.num_qubits
            )));
        }
        Ok(())
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        if let Some((q, m)) = gate.matrix() {
            self.check_qubit(q)?;
            self.apply_single(q, &m);
            return Ok(());
        }
        match *gate {
            Gate::Cnot { control, target } => {
                self.check_qubit(control)?;
                self.check_qubit(target)?;
                if control == target {
                    return Err(Error::InvalidGate("CNOT control equals target".into()));
                }
                let (cm, tm) = (1usize << control, 1usize << target);
                for i in 0..self.amplitudes.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amplitudes.swap(i, i | tm);
                    }
                }
            }
            Gate::CswapRegister { control, a, b } => {
                self.check_qubit(control)?;
                self.check_span(&a)?;
                self.check_span(&b)?;
                if a.len != b.len {
                    return Err(Error::InvalidGate(format!(
                        "C-SWAP spans differ in length ({} vs {})",
                        a.len, b.len
                    )));
                }
                if a.overlaps(&b) || a.contains(control) || b.contains(control) {
                    return Err(Error::InvalidGate("C-SWAP operands overlap".into()));
                }
                let cm = 1usize << control;
                let field = (1usize << a.len) - 1;
                for i in 0..self.amplitudes.len() {
                    if i & cm == 0 {
                        continue;
                    }
                    let va = (i >> a.start) & field;
                    let vb = (i >> b.start) & field;
                    let j = (i & !(field << a.start) & !(field << b.start))
                        | (vb << a.start)
                        | (va << b.start);
                    if i < j {
                        self.amplitudes.swap(i, j);
                    }
                }
            }
            _ => unreachable!("single-qubit gates handled above"),
        }
        Ok(())
    }

    fn apply_single(&mut self, qubit: usize, m: &Matrix2) {
        let mask = 1usize << qubit;
        for i in 0..self.amplitudes.len() {
            if i & mask != 0 {
                continue;
            }
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | mask]);
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[i | mask] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    /// Probability of reading `1` on `qubit`.
    pub fn probability_one(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = 1usize << qubit;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Exact `<Z>` of `qubit`.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = 1usize << qubit;
        let z = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if i & mask == 0 {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum::<f64>();
        Ok(z.clamp(-1.0, 1.0))
    }

    /// Mean of `shots` simulated `Z` measurements of `qubit`.
    pub fn sample_z<R: Rng + ?Sized>(&self, qubit: usize, shots: u64, rng: &mut R) -> Result<f64> {
        let expect = self.expectation_z(qubit)?;
        sample_pm1_mean(expect, shots, rng)
    }
}

/// Mean of `shots` independent ±1 draws with `P(+1) = (expect + 1) / 2`.
pub fn sample_pm1_mean<R: Rng + ?Sized>(expect: f64, shots: u64, rng: &mut R) -> Result<f64> {
    let plus = count_plus(expect, shots, rng)?;
    Ok((2.0 * plus as f64 - shots as f64) / shots as f64)
}

pub(crate) fn count_plus<R: Rng + ?Sized>(expect: f64, shots: u64, rng: &mut R) -> Result<u64> {
    if shots == 0 {
        return Err(Error::invalid("shot count must be at least 1"));
    }
    let p_plus = ((expect + 1.0) / 2.0).clamp(0.0, 1.0);
    let dist = Binomial::new(shots, p_plus)
        .map_err(|e| Error::invalid(format!("binomial({shots}, {p_plus}): {e}")))?;
    Ok(dist.sample(rng))
}

fn check_width(num_qubits: usize) -> Result<()> {
    if num_qubits > MAX_QUBITS {
        return Err(Error::InvalidState(format!(
            "{num_qubits} qubits exceed the simulator ceiling of {MAX_QUBITS}"
        )));
    }
    Ok(())
}
