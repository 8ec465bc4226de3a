//! Dense state-vector simulator for the circuits used by the convolution engine.
//!
//! Qubit ordering is big-endian: qubit 0 is the most significant bit of the
//! computational-basis index. A register lists its qubits most-significant
//! first, so the register value of basis index `b` reads off the listed bits
//! in order.
//!
//! The QFT is applied as the exact dense transform over a register, which is
//! unitarily identical to the usual Hadamard + controlled-phase ladder;
//! gate-level decompositions only matter for resource accounting (see
//! `qconv::circuit_stats`).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Norm below which a post-selected component counts as null.
pub const POST_SELECTION_EPS: f64 = 1e-14;

/// A named, ordered set of qubit indices (most significant first).
#[derive(Debug, Clone)]
pub struct QubitRegister {
    label: String,
    qubits: Vec<usize>,
}

impl QubitRegister {
    pub fn new(label: impl Into<String>, qubits: Vec<usize>) -> Result<Self> {
        for (n, &q) in qubits.iter().enumerate() {
            if qubits[..n].contains(&q) {
                return Err(Error::DuplicateQubit);
            }
        }
        Ok(Self {
            label: label.into(),
            qubits,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }
}

/// Complex amplitudes over `2^n` basis states plus the classical norm stripped
/// during encoding. The amplitude vector stays unit-norm; all scale lives in
/// `norm_factor`.
#[derive(Debug, Clone)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
    norm_factor: f64,
}

impl StateVector {
    /// Amplitude-encodes a real vector: `amplitudes[i] = values[i] / ||values||`,
    /// zero-padded beyond `values.len()`, with the norm kept classically.
    pub fn encode(values: &[f64], n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if values.len() > dim {
            return Err(Error::EncodingCapacity {
                len: values.len(),
                n_qubits,
            });
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateEncoding);
        }
        let mut amplitudes = vec![Complex64::ZERO; dim];
        for (a, v) in amplitudes.iter_mut().zip(values.iter()) {
            *a = Complex64::new(v / norm, 0.0);
        }
        Ok(Self {
            n_qubits,
            amplitudes,
            norm_factor: norm,
        })
    }

    /// The all-zeros basis state |0...0>.
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::ZERO; 1 << n_qubits];
        amplitudes[0] = Complex64::ONE;
        Self {
            n_qubits,
            amplitudes,
            norm_factor: 1.0,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Mutable amplitude access for in-crate diagonal gate application.
    /// Callers must keep the vector unit norm.
    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm_factor(&self) -> f64 {
        self.norm_factor
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Bit mask of `qubit` in a basis index (big-endian).
    #[inline]
    fn mask_of(&self, qubit: usize) -> usize {
        1usize << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    fn check_register(&self, reg: &QubitRegister) -> Result<()> {
        for &q in reg.qubits() {
            self.check_qubit(q)?;
        }
        Ok(())
    }

    /// Single-qubit Hadamard.
    pub fn apply_hadamard(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let mask = self.mask_of(qubit);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for idx in 0..self.amplitudes.len() {
            if idx & mask == 0 {
                let a = self.amplitudes[idx];
                let b = self.amplitudes[idx | mask];
                self.amplitudes[idx] = (a + b) * s;
                self.amplitudes[idx | mask] = (a - b) * s;
            }
        }
        Ok(())
    }

    /// Applies `e^{i angle}` to every basis component whose control bits match
    /// the required values and whose target bit is 1.
    pub fn apply_controlled_phase(
        &mut self,
        controls: &[(usize, bool)],
        target: usize,
        angle: f64,
    ) -> Result<()> {
        self.check_qubit(target)?;
        for &(q, _) in controls {
            self.check_qubit(q)?;
            if q == target {
                return Err(Error::OverlappingQubits);
            }
        }
        for (n, &(q, _)) in controls.iter().enumerate() {
            if controls[..n].iter().any(|&(p, _)| p == q) {
                return Err(Error::OverlappingQubits);
            }
        }
        let phase = Complex64::from_polar(1.0, angle);
        let t_mask = self.mask_of(target);
        let mut want = 0usize;
        let mut care = t_mask;
        for &(q, v) in controls {
            let m = self.mask_of(q);
            care |= m;
            if v {
                want |= m;
            }
        }
        want |= t_mask;
        for (idx, a) in self.amplitudes.iter_mut().enumerate() {
            if idx & care == want {
                *a *= phase;
            }
        }
        Ok(())
    }

    /// Applies a dense `2^m x 2^m` matrix (row-major) over a register, for every
    /// assignment of the remaining qubits. Callers must pass a unitary matrix
    /// for norm preservation to hold.
    pub fn apply_register_matrix(
        &mut self,
        reg: &QubitRegister,
        matrix: &[Complex64],
    ) -> Result<()> {
        self.check_register(reg)?;
        let m = reg.len();
        let dim = 1usize << m;
        if matrix.len() != dim * dim {
            return Err(Error::InvalidParameter(format!(
                "register matrix must be {dim}x{dim}"
            )));
        }
        // Offsets of each register value inside a basis index.
        let masks: Vec<usize> = reg.qubits().iter().map(|&q| self.mask_of(q)).collect();
        let mut offsets = vec![0usize; dim];
        for (v, off) in offsets.iter_mut().enumerate() {
            for (t, mask) in masks.iter().enumerate() {
                if (v >> (m - 1 - t)) & 1 == 1 {
                    *off |= mask;
                }
            }
        }
        let rest_masks: Vec<usize> = (0..self.n_qubits)
            .filter(|q| !reg.qubits().contains(q))
            .map(|q| self.mask_of(q))
            .collect();
        let rest_count = 1usize << rest_masks.len();

        let mut buf = vec![Complex64::ZERO; dim];
        let mut out = vec![Complex64::ZERO; dim];
        for r in 0..rest_count {
            let mut base = 0usize;
            for (t, mask) in rest_masks.iter().enumerate() {
                if (r >> t) & 1 == 1 {
                    base |= mask;
                }
            }
            for v in 0..dim {
                buf[v] = self.amplitudes[base | offsets[v]];
            }
            for (j, o) in out.iter_mut().enumerate() {
                let row = &matrix[j * dim..(j + 1) * dim];
                let mut acc = Complex64::ZERO;
                for (mv, bv) in row.iter().zip(buf.iter()) {
                    acc += mv * bv;
                }
                *o = acc;
            }
            for v in 0..dim {
                self.amplitudes[base | offsets[v]] = out[v];
            }
        }
        Ok(())
    }

    /// Exact discrete Fourier transform over the register's value axis.
    ///
    /// Forward: `|j> -> (1/sqrt(2^m)) sum_k e^{+2 pi i j k / 2^m} |k>`;
    /// the inverse flag applies the conjugate transpose.
    pub fn apply_qft(&mut self, reg: &QubitRegister, inverse: bool) -> Result<()> {
        let matrix = dft_matrix(reg.len(), inverse);
        self.apply_register_matrix(reg, &matrix)
    }

    /// Keeps the component with every register bit zero, renormalized.
    /// Returns the new state and the pre-renormalization norm of that
    /// component (the post-selection success amplitude).
    pub fn project_zero(&self, reg: &QubitRegister) -> Result<(StateVector, f64)> {
        self.check_register(reg)?;
        let mut mask = 0usize;
        for &q in reg.qubits() {
            mask |= self.mask_of(q);
        }
        let success_sq: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx & mask == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        let success = success_sq.sqrt();
        if success < POST_SELECTION_EPS {
            return Err(Error::PostSelectionFailure { amplitude: success });
        }
        let mut amplitudes = vec![Complex64::ZERO; self.amplitudes.len()];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            if idx & mask == 0 {
                amplitudes[idx] = a / success;
            }
        }
        Ok((
            StateVector {
                n_qubits: self.n_qubits,
                amplitudes,
                norm_factor: self.norm_factor,
            },
            success,
        ))
    }
}

/// Dense DFT matrix of size `2^m`, row-major.
pub fn dft_matrix(m: usize, inverse: bool) -> Vec<Complex64> {
    let dim = 1usize << m;
    let sign = if inverse { -1.0 } else { 1.0 };
    let scale = 1.0 / (dim as f64).sqrt();
    let mut matrix = vec![Complex64::ZERO; dim * dim];
    for j in 0..dim {
        for k in 0..dim {
            let angle = sign * 2.0 * PI * ((j * k) % dim) as f64 / dim as f64;
            matrix[j * dim + k] = Complex64::from_polar(scale, angle);
        }
    }
    matrix
}
