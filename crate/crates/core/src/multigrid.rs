//! W-cycle geometric multigrid where the operator runs through the hybrid
//! sliding-window quantum convolution and the transfers run through the
//! two-qubit restriction/prolongation circuits.
//!
//! Coarse operators come from re-discretizing the analytic stencil at the
//! coarser spacing (not Galerkin products). The smoother is damped Jacobi,
//! which is itself a convolution and therefore runs on either backend.

use rayon::prelude::*;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::qconv::quantum_convolve_block;
use crate::qtransfer::{prolong_field, restrict_field, TransferBackend};
use crate::stencils::{apply_kernel, OperatorSpec};

/// Which engine evaluates the sliding-window operator.
///
/// `HybridSpotCheck` runs classically; callers re-verify designated solves
/// with the quantum backend and compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    Quantum,
    #[default]
    Classical,
    HybridSpotCheck,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Pre-smoothing sweeps per level (eta).
    pub pre_smooths: usize,
    /// Post-smoothing sweeps per level (phi).
    pub post_smooths: usize,
    pub max_cycles: usize,
    /// Relative residual stopping threshold.
    pub tolerance: f64,
    /// Quantum window size K; tiles advance with stride K - 2.
    pub window: usize,
    pub backend: Backend,
    /// Jacobi damping factor.
    pub omega: f64,
    /// Damped-Jacobi sweeps approximating the coarsest-level solve.
    pub coarse_iterations: usize,
    /// Hierarchy depth cap.
    pub max_levels: usize,
    /// Stop coarsening below this dimension.
    pub min_coarse_dim: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            pre_smooths: 2,
            post_smooths: 2,
            max_cycles: 50,
            tolerance: 1e-8,
            window: 4,
            backend: Backend::Classical,
            omega: 2.0 / 3.0,
            coarse_iterations: 50,
            max_levels: 3,
            min_coarse_dim: 6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pre_smooths < 1 || self.post_smooths < 1 {
            return Err(Error::InvalidParameter(
                "smoothing counts must be at least 1".into(),
            ));
        }
        if self.window < 4 {
            return Err(Error::WindowTooSmall { k: self.window });
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "omega = {} must lie in (0, 1]",
                self.omega
            )));
        }
        if self.tolerance <= 0.0 {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        if self.max_cycles == 0 {
            return Err(Error::InvalidParameter("max_cycles must be positive".into()));
        }
        Ok(())
    }

    fn transfer_backend(&self) -> TransferBackend {
        match self.backend {
            Backend::Quantum => TransferBackend::Quantum,
            _ => TransferBackend::Classical,
        }
    }
}

/// Backend call accounting, shared across parallel window evaluations.
#[derive(Debug, Default)]
pub struct CallCounters {
    quantum: AtomicU64,
    classical: AtomicU64,
}

impl CallCounters {
    pub fn quantum_calls(&self) -> u64 {
        self.quantum.load(Ordering::Relaxed)
    }

    pub fn classical_fallback_calls(&self) -> u64 {
        self.classical.load(Ordering::Relaxed)
    }
}

/// Per-cycle relative residuals plus backend call totals.
#[derive(Debug, Clone)]
pub struct ConvergenceHistory {
    pub residuals: Vec<f64>,
    pub quantum_calls: u64,
    pub classical_fallback_calls: u64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct Level {
    pub height: usize,
    pub width: usize,
    pub spacing: f64,
    pub op: OperatorSpec,
}

/// The level stack, finest first. Each level halves both dimensions of the
/// previous one (odd dimensions round up, matching the transfer operators).
#[derive(Debug, Clone)]
pub struct GridHierarchy {
    levels: Vec<Level>,
}

impl GridHierarchy {
    pub fn build(
        height: usize,
        width: usize,
        spacing: f64,
        op_builder: &dyn Fn(f64) -> OperatorSpec,
        config: &SolverConfig,
    ) -> Result<Self> {
        if height < 3 || width < 3 {
            return Err(Error::BlockTooSmall {
                h: height,
                w: width,
            });
        }
        let mut levels = Vec::new();
        let (mut h, mut w, mut s) = (height, width, spacing);
        loop {
            let op = op_builder(s);
            if op.kernel().center() == 0.0 {
                return Err(Error::SmootherUndefined);
            }
            levels.push(Level {
                height: h,
                width: w,
                spacing: s,
                op,
            });
            let (nh, nw) = (h.div_ceil(2), w.div_ceil(2));
            if levels.len() >= config.max_levels
                || nh.min(nw) < config.min_coarse_dim
                || nh < 3
                || nw < 3
            {
                break;
            }
            h = nh;
            w = nw;
            s *= 2.0;
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

/// Applies the operator over the whole field.
///
/// Quantum backend: the interior tiles into K x K windows at stride K - 2
/// (the last window per axis shifts inward so it always fits), each run
/// through the quantum convolution circuit; the one-cell boundary ring uses
/// the direct convolution with the field's boundary padding. Fields smaller
/// than the window fall back to the classical path entirely.
pub fn apply_operator_sliding_window(
    field: &Field2D,
    op: &OperatorSpec,
    config: &SolverConfig,
    counters: &CallCounters,
) -> Result<Field2D> {
    let (h, w) = field.shape();
    if h < 3 || w < 3 {
        return Err(Error::BlockTooSmall { h, w });
    }
    match config.backend {
        Backend::Classical | Backend::HybridSpotCheck => {
            counters.classical.fetch_add(1, Ordering::Relaxed);
            Ok(apply_kernel(field, op.kernel()))
        }
        Backend::Quantum => {
            let k = config.window;
            if k < 4 {
                return Err(Error::WindowTooSmall { k });
            }
            if h < k || w < k {
                counters.classical.fetch_add(1, Ordering::Relaxed);
                return Ok(apply_kernel(field, op.kernel()));
            }
            let mut out = apply_boundary_ring(field, op);
            counters.classical.fetch_add(1, Ordering::Relaxed);

            let starts = |dim: usize| -> Vec<usize> {
                let tiles = (dim - 2).div_ceil(k - 2);
                let mut v: Vec<usize> = (0..tiles)
                    .map(|t| (1 + t * (k - 2)).min(dim - k + 1))
                    .collect();
                v.dedup();
                v
            };
            let row_starts = starts(h);
            let col_starts = starts(w);
            let mut tiles = Vec::with_capacity(row_starts.len() * col_starts.len());
            for &si in &row_starts {
                for &sj in &col_starts {
                    tiles.push((si, sj));
                }
            }
            counters
                .quantum
                .fetch_add(tiles.len() as u64, Ordering::Relaxed);

            let kernel = *op.kernel();
            let results: Result<Vec<(usize, usize, Vec<f64>)>> = tiles
                .par_iter()
                .map(|&(si, sj)| {
                    let mut window = vec![0.0; k * k];
                    for r in 0..k {
                        for c in 0..k {
                            window[r * k + c] = field.at(si - 1 + r, sj - 1 + c);
                        }
                    }
                    let tile = quantum_convolve_block(&window, k, &kernel)?;
                    Ok((si, sj, tile))
                })
                .collect();
            for (si, sj, tile) in results? {
                let side = k - 2;
                for r in 0..side {
                    for c in 0..side {
                        out.set(si + r, sj + c, tile[r * side + c]);
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Direct evaluation of only the one-cell boundary ring (interior left zero).
fn apply_boundary_ring(field: &Field2D, op: &OperatorSpec) -> Field2D {
    let (h, w) = field.shape();
    let mut out = Field2D::zeros_like(field);
    let kernel = op.kernel();
    let eval = |i: usize, j: usize, out: &mut Field2D| {
        let mut acc = 0.0;
        for dr in -1..=1 {
            for dc in -1..=1 {
                let c = kernel.at(dr, dc);
                if c != 0.0 {
                    acc += c * field.sample_padded(i as isize + dr, j as isize + dc);
                }
            }
        }
        out.set(i, j, acc);
    };
    for j in 0..w {
        eval(0, j, &mut out);
        eval(h - 1, j, &mut out);
    }
    for i in 1..h - 1 {
        eval(i, 0, &mut out);
        eval(i, w - 1, &mut out);
    }
    out
}

/// Damped Jacobi: `x <- x + omega (b - A x) / a_center`, repeated.
pub fn smooth(
    x: &mut Field2D,
    op: &OperatorSpec,
    b: &Field2D,
    iterations: usize,
    omega: f64,
    config: &SolverConfig,
    counters: &CallCounters,
) -> Result<()> {
    let center = op.kernel().center();
    if center == 0.0 {
        return Err(Error::SmootherUndefined);
    }
    if x.shape() != b.shape() {
        let (bh, bw) = b.shape();
        return Err(Error::ShapeMismatch(x.height(), x.width(), bh, bw));
    }
    let scale = omega / center;
    for _ in 0..iterations {
        let ax = apply_operator_sliding_window(x, op, config, counters)?;
        let xv = x.values_mut();
        for (idx, (&bv, &av)) in b.values().iter().zip(ax.values().iter()).enumerate() {
            xv[idx] += scale * (bv - av);
        }
    }
    Ok(())
}

/// `r = b - A x` with the operator's boundary padding supplying the
/// boundary-condition contribution (zero ghost cells under Dirichlet).
pub fn residual(
    x: &Field2D,
    op: &OperatorSpec,
    b: &Field2D,
    config: &SolverConfig,
    counters: &CallCounters,
) -> Result<Field2D> {
    if x.shape() != b.shape() {
        let (bh, bw) = b.shape();
        return Err(Error::ShapeMismatch(x.height(), x.width(), bh, bw));
    }
    let mut r = apply_operator_sliding_window(x, op, config, counters)?;
    r.scale(-1.0);
    r.axpy(1.0, b)?;
    Ok(r)
}

/// One W-cycle at `level`: smooth, restrict the residual, recurse twice,
/// prolong and correct, smooth again. The coarsest level runs
/// `coarse_iterations` Jacobi sweeps instead of recursing.
pub fn w_cycle(
    level: usize,
    x: &mut Field2D,
    b: &Field2D,
    hierarchy: &GridHierarchy,
    config: &SolverConfig,
    counters: &CallCounters,
) -> Result<()> {
    let lvl = &hierarchy.levels()[level];
    smooth(x, &lvl.op, b, config.pre_smooths, config.omega, config, counters)?;
    if level + 1 < hierarchy.depth() {
        let r = residual(x, &lvl.op, b, config, counters)?;
        let rc = restrict_field(&r, config.transfer_backend());
        let next = &hierarchy.levels()[level + 1];
        debug_assert_eq!(rc.shape(), (next.height, next.width));
        let mut e = Field2D::new(next.height, next.width, next.spacing, b.boundary());
        w_cycle(level + 1, &mut e, &rc, hierarchy, config, counters)?;
        w_cycle(level + 1, &mut e, &rc, hierarchy, config, counters)?;
        let correction = prolong_field(&e, config.transfer_backend());
        let (h, w) = x.shape();
        for i in 0..h {
            for j in 0..w {
                let v = x.at(i, j) + correction.at(i, j);
                x.set(i, j, v);
            }
        }
    } else {
        smooth(
            x,
            &lvl.op,
            b,
            config.coarse_iterations,
            config.omega,
            config,
            counters,
        )?;
    }
    smooth(x, &lvl.op, b, config.post_smooths, config.omega, config, counters)?;
    Ok(())
}

/// Repeats W-cycles from a zero initial guess until the relative residual
/// meets the tolerance or `max_cycles` is exhausted. Non-convergence is
/// reported through the history flag, not as an error.
pub fn solve(
    op_builder: &dyn Fn(f64) -> OperatorSpec,
    b: &Field2D,
    config: &SolverConfig,
) -> Result<(Field2D, ConvergenceHistory)> {
    config.validate()?;
    let hierarchy = GridHierarchy::build(b.height(), b.width(), b.spacing(), op_builder, config)?;
    solve_on(&hierarchy, b, config)
}

/// `solve` against a prebuilt hierarchy (reused across time steps).
pub fn solve_on(
    hierarchy: &GridHierarchy,
    b: &Field2D,
    config: &SolverConfig,
) -> Result<(Field2D, ConvergenceHistory)> {
    solve_with_guess(hierarchy, b, Field2D::zeros_like(b), config)
}

/// `solve` from a caller-supplied initial guess. Time-stepping cases warm
/// start from the previous step's solution so the per-step work tracks the
/// shrinking transient instead of re-solving from scratch.
pub fn solve_with_guess(
    hierarchy: &GridHierarchy,
    b: &Field2D,
    guess: Field2D,
    config: &SolverConfig,
) -> Result<(Field2D, ConvergenceHistory)> {
    config.validate()?;
    let counters = CallCounters::default();
    let mut x = guess;
    let b_norm = b.l2_norm();
    let denom = if b_norm == 0.0 { 1.0 } else { b_norm };
    let fine_op = &hierarchy.levels()[0].op;
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_cycles {
        w_cycle(0, &mut x, b, hierarchy, config, &counters)?;
        let rel = residual(&x, fine_op, b, config, &counters)?.l2_norm() / denom;
        residuals.push(rel);
        if rel <= config.tolerance {
            converged = true;
            break;
        }
    }
    Ok((
        x,
        ConvergenceHistory {
            residuals,
            quantum_calls: counters.quantum_calls(),
            classical_fallback_calls: counters.classical_fallback_calls(),
            converged,
        },
    ))
}
