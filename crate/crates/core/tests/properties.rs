//! Cross-module invariant suites under fixed seeds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qnp_core::field::{BoundaryKind, Field2D};
use qnp_core::multigrid::{solve, Backend, SolverConfig};
use qnp_core::pde_suite::{run_convection_diffusion_case, run_diffusion_case, SolverOverrides};
use qnp_core::qconv::{
    circuit_stats, classical_convolve_block, decompose_kernel, quantum_convolve_block,
    BlockPadding, Kernel3x3,
};
use qnp_core::stencils::{
    assemble_operator, central_convection_kernel, convfem_convection_kernel,
    convfem_diffusion_kernel, identity_kernel, laplacian_fdm_kernel, OperatorSpec,
};

fn random_kernel(rng: &mut ChaCha8Rng) -> Kernel3x3 {
    loop {
        let mut k = Kernel3x3::zero();
        for dr in -1..=1 {
            for dc in -1..=1 {
                if rng.gen_bool(0.7) {
                    k.set(dr, dc, rng.gen_range(-2.0..2.0));
                }
            }
        }
        if !k.is_zero() {
            return k;
        }
    }
}

#[test]
fn oracle_equivalence_on_random_kernel_block_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0_f64;
    for trial in 0..200 {
        let k = if trial % 2 == 0 { 4 } else { 8 };
        let kernel = random_kernel(&mut rng);
        let block: Vec<f64> = (0..k * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = quantum_convolve_block(&block, k, &kernel).unwrap();
        let c = classical_convolve_block(&block, k, k, &kernel, BlockPadding::None).unwrap();
        for (a, b) in q.iter().zip(c.iter()) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst <= 1e-9, "max abs gap {worst}");
}

#[test]
fn lcu_lambda_matches_absolute_sum_on_random_kernels() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..50 {
        let kernel = random_kernel(&mut rng);
        let d = decompose_kernel(&kernel).unwrap();
        let lambda: f64 = d.terms().iter().map(|t| t.coefficient.abs()).sum();
        assert!((d.lambda() - lambda).abs() < 1e-12);
        let sq: f64 = d.prepare_amplitudes().iter().map(|a| a * a).sum();
        assert!((sq - 1.0).abs() < 1e-12);
    }
}

#[test]
fn quantum_convolution_is_linear_on_random_kernels() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..20 {
        let kernel = random_kernel(&mut rng);
        let b1: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b2: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (alpha, beta) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let mixed: Vec<f64> = b1
            .iter()
            .zip(b2.iter())
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        if mixed.iter().all(|&v| v == 0.0) {
            continue;
        }
        let om = quantum_convolve_block(&mixed, 4, &kernel).unwrap();
        let o1 = quantum_convolve_block(&b1, 4, &kernel).unwrap();
        let o2 = quantum_convolve_block(&b2, 4, &kernel).unwrap();
        for i in 0..om.len() {
            assert!((om[i] - (alpha * o1[i] + beta * o2[i])).abs() < 1e-9);
        }
    }
}

#[test]
fn depth_grows_at_most_logarithmically() {
    // depth(K) <= c log2(K) for a single fitted constant over K in {4, 8, 16}.
    let depths: Vec<(f64, f64)> = [4usize, 8, 16]
        .iter()
        .map(|&k| {
            (
                (k as f64).log2(),
                circuit_stats(k).unwrap().depth as f64,
            )
        })
        .collect();
    let c = depths
        .iter()
        .map(|(l, d)| d / l)
        .fold(0.0_f64, f64::max);
    for (l, d) in &depths {
        assert!(*d <= c * l + 1e-9);
    }
    // The fitted constant must not blow up between consecutive sizes.
    assert!(depths[2].1 / depths[0].1 <= 2.5);
}

/// solve() backend invariance across the operator families of the benchmark
/// suite at reduced 16x16 size.
#[test]
fn solve_backend_invariance_across_case_operators() {
    let builders: Vec<(&str, Box<dyn Fn(f64) -> OperatorSpec>)> = vec![
        (
            "poisson",
            Box::new(|s: f64| {
                assemble_operator(&[(-1.0, laplacian_fdm_kernel(s).unwrap())], "poisson", s)
                    .unwrap()
            }),
        ),
        (
            "implicit diffusion",
            Box::new(|s: f64| {
                assemble_operator(
                    &[
                        (1.0, identity_kernel()),
                        (0.5, laplacian_fdm_kernel(s).unwrap().scaled(-1.0)),
                    ],
                    "implicit diffusion",
                    s,
                )
                .unwrap()
            }),
        ),
        (
            "implicit convection-diffusion (central)",
            Box::new(|s: f64| {
                assemble_operator(
                    &[
                        (1.0, identity_kernel()),
                        (0.01, central_convection_kernel(0.3, 0.15, s).unwrap()),
                        (0.0001, laplacian_fdm_kernel(s).unwrap().scaled(-1.0)),
                    ],
                    "cd central",
                    s,
                )
                .unwrap()
            }),
        ),
        (
            "implicit convection-diffusion (nine-point)",
            Box::new(|s: f64| {
                assemble_operator(
                    &[
                        (1.0, identity_kernel()),
                        (0.01, convfem_convection_kernel(0.3, 0.15, s).unwrap()),
                        (0.0001, convfem_diffusion_kernel(s).unwrap()),
                    ],
                    "cd nine-point",
                    s,
                )
                .unwrap()
            }),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for (name, builder) in &builders {
        let spacing = if name.contains("convection") { 0.0625 } else { 1.0 };
        let b = Field2D::from_fn(16, 16, spacing, BoundaryKind::DirichletZero, |_, _| {
            rng.gen_range(-1.0..1.0)
        });
        let cc = SolverConfig {
            tolerance: 1e-11,
            ..SolverConfig::default()
        };
        let cq = SolverConfig {
            backend: Backend::Quantum,
            ..cc.clone()
        };
        let (xc, hc) = solve(builder.as_ref(), &b, &cc).unwrap();
        let (xq, hq) = solve(builder.as_ref(), &b, &cq).unwrap();
        assert!(hc.converged && hq.converged, "{name} did not converge");
        let gap = xc.max_abs_diff(&xq).unwrap();
        assert!(gap < 1e-7, "{name}: backend gap {gap}");
    }
}

/// The field-level residual agrees with the explicit banded-matrix oracle.
#[test]
fn residual_matches_dense_matrix_oracle() {
    use qnp_core::multigrid::{residual, CallCounters};
    use qnp_core::pde_suite::linear_system_matrix;

    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let (h, w) = (8usize, 8usize);
    let a = linear_system_matrix(h, w);
    let x = Field2D::from_fn(h, w, 1.0, BoundaryKind::DirichletZero, |_, _| {
        rng.gen_range(-1.0..1.0)
    });
    let b = Field2D::from_fn(h, w, 1.0, BoundaryKind::DirichletZero, |_, _| {
        rng.gen_range(-1.0..1.0)
    });
    let op = assemble_operator(
        &[(-1.0, laplacian_fdm_kernel(1.0).unwrap())],
        "negated laplacian",
        1.0,
    )
    .unwrap();
    let counters = CallCounters::default();
    for backend in [Backend::Classical, Backend::Quantum] {
        let config = SolverConfig {
            backend,
            ..SolverConfig::default()
        };
        let r = residual(&x, &op, &b, &config, &counters).unwrap();
        for p in 0..h * w {
            let mut ax = 0.0;
            for q in 0..h * w {
                ax += a[(p, q)] * x.values()[q];
            }
            let expect = b.values()[p] - ax;
            assert!(
                (r.values()[p] - expect).abs() < 1e-9,
                "cell {p}: {} vs {expect}",
                r.values()[p]
            );
        }
    }
}

#[test]
fn diffusion_energy_grows_and_stays_bounded() {
    let r = run_diffusion_case(&SolverOverrides::default()).unwrap();
    let energy = &r.series["thermal_energy"];
    for pair in energy.windows(2) {
        assert!(pair[1] >= pair[0], "thermal energy decreased: {pair:?}");
    }
    assert!(energy.iter().all(|e| e.is_finite()));
    // Bounded well below the steady state of the continuous problem.
    assert!(*energy.last().unwrap() < 1e6);
}

#[test]
fn convection_diffusion_mass_drift_per_step_is_tiny() {
    let r = run_convection_diffusion_case(&SolverOverrides::default()).unwrap();
    let per_step = &r.series["step_mass_drift"];
    assert!(per_step.iter().all(|&d| d <= 1e-4), "per-step drift too large");
    let cumulative = &r.series["mass_drift"];
    assert!(cumulative.iter().all(|&d| d <= 2e-3));
}
