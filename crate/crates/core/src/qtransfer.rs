//! Quantum inter-grid transfer operators.
//!
//! Restriction encodes a 2x2 block on two qubits and applies H (x) H; the
//! |00> amplitude is then proportional to the block sum. Prolongation runs the
//! circuit the other way: H (x) H on |00> is the uniform state, so a scalar
//! spreads evenly over a 2x2 block. The circuit natively produces block sums;
//! the 1/4 averaging weight of the classical restriction stencil is applied as
//! a classical post-scale so both backends realize the same operators.

use crate::error::Result;
use crate::field::Field2D;
use crate::statevector::StateVector;

/// Which engine evaluates transfers and operator windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransferBackend {
    Quantum,
    #[default]
    Classical,
}

/// Default restriction weight: the classical 2x2 averaging stencil.
pub const RESTRICTION_WEIGHT: f64 = 0.25;

/// Result of a single block transfer.
#[derive(Debug, Clone, Copy)]
pub struct TransferResult {
    pub value: f64,
    pub success_amplitude: f64,
}

/// Maps a 2x2 block to `weight * sum(block)` through the H (x) H circuit.
pub fn quantum_restrict_block(block: &[f64; 4], weight: f64) -> Result<TransferResult> {
    if block.iter().all(|&v| v == 0.0) {
        return Ok(TransferResult {
            value: 0.0,
            success_amplitude: 0.0,
        });
    }
    let mut sv = StateVector::encode(block, 2)?;
    sv.apply_hadamard(0)?;
    sv.apply_hadamard(1)?;
    let a00 = sv.amplitudes()[0].re;
    Ok(TransferResult {
        value: weight * 2.0 * sv.norm_factor() * a00,
        success_amplitude: a00.abs(),
    })
}

/// Spreads a scalar uniformly over a 2x2 block: H (x) H on |00> gives
/// amplitudes 1/2, and the classical scale `2 * value` decodes every entry
/// back to `value`. Signs ride on the classical scale.
pub fn quantum_prolong_scalar(value: f64) -> [f64; 4] {
    let mut sv = StateVector::zero_state(2);
    sv.apply_hadamard(0).expect("qubit 0 in range");
    sv.apply_hadamard(1).expect("qubit 1 in range");
    let scale = 2.0 * value;
    let mut out = [0.0; 4];
    for (o, a) in out.iter_mut().zip(sv.amplitudes()) {
        *o = scale * a.re;
    }
    out
}

fn classical_restrict_block(block: &[f64; 4], weight: f64) -> f64 {
    weight * block.iter().sum::<f64>()
}

/// Coarsens a field by 2x2 block averaging (weighted block sums).
///
/// Odd trailing rows/columns fall back to classical averaging over the cells
/// that exist, so constants are preserved on any shape. Coarse spacing is 2h.
pub fn restrict_field(fine: &Field2D, backend: TransferBackend) -> Field2D {
    let (h, w) = fine.shape();
    let ch = h.div_ceil(2);
    let cw = w.div_ceil(2);
    let mut coarse = Field2D::new(ch, cw, fine.spacing() * 2.0, fine.boundary());
    for ci in 0..ch {
        for cj in 0..cw {
            let i0 = 2 * ci;
            let j0 = 2 * cj;
            let full = i0 + 1 < h && j0 + 1 < w;
            let value = if full {
                let block = [
                    fine.at(i0, j0),
                    fine.at(i0, j0 + 1),
                    fine.at(i0 + 1, j0),
                    fine.at(i0 + 1, j0 + 1),
                ];
                match backend {
                    TransferBackend::Quantum => {
                        quantum_restrict_block(&block, RESTRICTION_WEIGHT)
                            .expect("2x2 encode cannot fail")
                            .value
                    }
                    TransferBackend::Classical => {
                        classical_restrict_block(&block, RESTRICTION_WEIGHT)
                    }
                }
            } else {
                // Truncated block: average the available cells.
                let mut sum = 0.0;
                let mut count = 0.0;
                for i in i0..(i0 + 2).min(h) {
                    for j in j0..(j0 + 2).min(w) {
                        sum += fine.at(i, j);
                        count += 1.0;
                    }
                }
                sum / count
            };
            coarse.set(ci, cj, value);
        }
    }
    coarse
}

/// Refines a field by replicating each value into its 2x2 fine block.
/// Fine spacing is h/2.
pub fn prolong_field(coarse: &Field2D, backend: TransferBackend) -> Field2D {
    let (ch, cw) = coarse.shape();
    let mut fine = Field2D::new(2 * ch, 2 * cw, coarse.spacing() / 2.0, coarse.boundary());
    for ci in 0..ch {
        for cj in 0..cw {
            let v = coarse.at(ci, cj);
            let block = match backend {
                TransferBackend::Quantum => quantum_prolong_scalar(v),
                TransferBackend::Classical => [v; 4],
            };
            fine.set(2 * ci, 2 * cj, block[0]);
            fine.set(2 * ci, 2 * cj + 1, block[1]);
            fine.set(2 * ci + 1, 2 * cj, block[2]);
            fine.set(2 * ci + 1, 2 * cj + 1, block[3]);
        }
    }
    fine
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::BoundaryKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(h: usize, w: usize, rng: &mut ChaCha8Rng) -> Field2D {
        Field2D::from_fn(h, w, 1.0, BoundaryKind::DirichletZero, |_, _| {
            rng.gen_range(-2.0..2.0)
        })
    }

    #[test]
    fn restrict_equal_entries_gives_average() {
        let r = quantum_restrict_block(&[1.0, 1.0, 1.0, 1.0], 0.25).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn restrict_one_two_three_four() {
        // |00> amplitude 10/(2 sqrt(30)), rescaled by 2 sqrt(30).
        let r = quantum_restrict_block(&[1.0, 2.0, 3.0, 4.0], 1.0).unwrap();
        assert!((r.value - 10.0).abs() < 1e-10);
        assert!((r.success_amplitude - 10.0 / (2.0 * 30.0_f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn restrict_zero_block() {
        let r = quantum_restrict_block(&[0.0; 4], 0.25).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn prolong_unit_and_sign() {
        for v in quantum_prolong_scalar(1.0) {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let neg = quantum_prolong_scalar(-2.5);
        for v in neg {
            assert!((v + 2.5).abs() < 1e-12);
        }
        // Scale 2 * 3 = 6 over uniform amplitudes 1/2 decodes to 3.
        let three = quantum_prolong_scalar(3.0);
        for v in three {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn restrict_constant_field_preserved() {
        let f = Field2D::from_fn(6, 10, 1.0, BoundaryKind::DirichletZero, |_, _| 2.25);
        for backend in [TransferBackend::Quantum, TransferBackend::Classical] {
            let c = restrict_field(&f, backend);
            assert_eq!(c.shape(), (3, 5));
            assert!((c.spacing() - 2.0).abs() < 1e-15);
            for &v in c.values() {
                assert!((v - 2.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn restrict_spike_block_average() {
        let mut f = Field2D::from_fn(4, 4, 1.0, BoundaryKind::DirichletZero, |_, _| 1.0);
        f.set(1, 1, 5.0);
        let c = restrict_field(&f, TransferBackend::Quantum);
        assert!((c.at(0, 0) - 2.0).abs() < 1e-12);
        for (idx, &v) in c.values().iter().enumerate() {
            if idx != 0 {
                assert!((v - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn odd_dimension_falls_back_to_truncated_average() {
        let f = Field2D::from_fn(3, 5, 1.0, BoundaryKind::DirichletZero, |i, j| {
            (i * 5 + j) as f64
        });
        let c = restrict_field(&f, TransferBackend::Quantum);
        assert_eq!(c.shape(), (2, 3));
        // Trailing column of row 0: cells (0,4) and (1,4).
        assert!((c.at(0, 2) - (4.0 + 9.0) / 2.0).abs() < 1e-12);
        // Trailing corner: single cell (2,4).
        assert!((c.at(1, 2) - 14.0).abs() < 1e-12);
    }

    #[test]
    fn backends_agree_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let f = random_field(8, 8, &mut rng);
            let q = restrict_field(&f, TransferBackend::Quantum);
            let c = restrict_field(&f, TransferBackend::Classical);
            assert!(q.max_abs_diff(&c).unwrap() < 1e-10);

            let g = random_field(4, 4, &mut rng);
            let pq = prolong_field(&g, TransferBackend::Quantum);
            let pc = prolong_field(&g, TransferBackend::Classical);
            assert!(pq.max_abs_diff(&pc).unwrap() < 1e-10);
        }
    }

    #[test]
    fn prolong_then_restrict_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let c0 = random_field(5, 7, &mut rng);
        let fine = prolong_field(&c0, TransferBackend::Quantum);
        assert_eq!(fine.shape(), (10, 14));
        let back = restrict_field(&fine, TransferBackend::Quantum);
        assert!(back.max_abs_diff(&c0).unwrap() < 1e-10);
    }

    #[test]
    fn prolongation_conserves_scaled_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let c = random_field(6, 6, &mut rng);
        let fine = prolong_field(&c, TransferBackend::Classical);
        assert!((fine.sum() - 4.0 * c.sum()).abs() < 1e-10);
    }

    #[test]
    fn single_cell_prolong() {
        let mut c = Field2D::new(1, 1, 2.0, BoundaryKind::DirichletZero);
        c.set(0, 0, 1.0);
        let f = prolong_field(&c, TransferBackend::Quantum);
        assert_eq!(f.shape(), (2, 2));
        for &v in f.values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!((f.spacing() - 1.0).abs() < 1e-15);
    }
}
