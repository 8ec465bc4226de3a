//! Analytic construction of the discrete differential operators as 3x3 kernels,
//! plus operator assembly, the CFL bound, and explicit time stepping.
//!
//! Orientation convention (fixed crate-wide and validated by the consistency
//! tests): kernels apply by sliding dot product
//! `out(i, j) = sum k(dr, dc) f(i + dr, j + dc)` with columns along x and rows
//! along y. Convection kernels compute `+v . grad f`; the minus sign of the
//! transport term enters at assembly time (`A = -C + D L`).
//!
//! Diffusion sign conventions follow the generating formulas: the five-point
//! FDM kernel represents `+laplacian` (quadratics map to +4), while the
//! ConvFEM nine-point kernel represents `-laplacian` (quadratics map to -4);
//! assemblers negate whichever side the problem needs.

use crate::error::{Error, Result};
use crate::field::{BoundaryKind, Field2D};
use crate::qconv::Kernel3x3;

/// A kernel together with the spacing it was assembled at.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    kernel: Kernel3x3,
    description: String,
    spacing: f64,
}

impl OperatorSpec {
    pub fn new(kernel: Kernel3x3, description: impl Into<String>, spacing: f64) -> Self {
        Self {
            kernel,
            description: description.into(),
            spacing,
        }
    }

    pub fn kernel(&self) -> &Kernel3x3 {
        &self.kernel
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

fn check_spacing(h: f64) -> Result<()> {
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("spacing h = {h} must be positive")));
    }
    Ok(())
}

/// Identity as a kernel: center 1. Used to assemble implicit operators.
pub fn identity_kernel() -> Kernel3x3 {
    let mut k = Kernel3x3::zero();
    k.set(0, 0, 1.0);
    k
}

/// Five-point FDM Laplacian, `(1/h^2) [[0,1,0],[1,-4,1],[0,1,0]]` (+laplacian).
pub fn laplacian_fdm_kernel(h: f64) -> Result<Kernel3x3> {
    check_spacing(h)?;
    let s = 1.0 / (h * h);
    Ok(Kernel3x3::new([
        [0.0, s, 0.0],
        [s, -4.0 * s, s],
        [0.0, s, 0.0],
    ]))
}

/// First-order upwind convection `u df/dx + v df/dy`, per-component upwinding:
/// each velocity couples the center to its upwind neighbor, switching sides
/// when the component is negative.
pub fn upwind_convection_kernel(u: f64, v: f64, h: f64) -> Result<Kernel3x3> {
    check_spacing(h)?;
    let mut k = Kernel3x3::zero();
    let inv = 1.0 / h;
    if u >= 0.0 {
        k.set(0, -1, k.at(0, -1) - u * inv);
        k.set(0, 0, k.at(0, 0) + u * inv);
    } else {
        k.set(0, 1, k.at(0, 1) + u * inv);
        k.set(0, 0, k.at(0, 0) - u * inv);
    }
    if v >= 0.0 {
        k.set(-1, 0, k.at(-1, 0) - v * inv);
        k.set(0, 0, k.at(0, 0) + v * inv);
    } else {
        k.set(1, 0, k.at(1, 0) + v * inv);
        k.set(0, 0, k.at(0, 0) - v * inv);
    }
    Ok(k)
}

/// Second-order central-difference convection `u df/dx + v df/dy`.
pub fn central_convection_kernel(u: f64, v: f64, h: f64) -> Result<Kernel3x3> {
    check_spacing(h)?;
    let s = 1.0 / (2.0 * h);
    let mut k = Kernel3x3::zero();
    k.set(0, -1, -u * s);
    k.set(0, 1, u * s);
    k.set(-1, 0, -v * s);
    k.set(1, 0, v * s);
    Ok(k)
}

/// Nine-point ConvFEM diffusion kernel `(1/3h^2) [[-1,-1,-1],[-1,8,-1],[-1,-1,-1]]`.
/// Represents `-laplacian`: applied to `x^2 + y^2` at h = 1 it yields -4.
pub fn convfem_diffusion_kernel(h: f64) -> Result<Kernel3x3> {
    check_spacing(h)?;
    let s = 1.0 / (3.0 * h * h);
    Ok(Kernel3x3::new([
        [-s, -s, -s],
        [-s, 8.0 * s, -s],
        [-s, -s, -s],
    ]))
}

/// Second-order ConvFEM convection `u df/dx + v df/dy`: the tensor-mass-
/// weighted central difference with (1, 4, 1)/6 transverse weights.
pub fn convfem_convection_kernel(u: f64, v: f64, h: f64) -> Result<Kernel3x3> {
    check_spacing(h)?;
    let s = 1.0 / (12.0 * h);
    Ok(Kernel3x3::new([
        [(-u - v) * s, -4.0 * v * s, (u - v) * s],
        [-4.0 * u * s, 0.0, 4.0 * u * s],
        [(-u + v) * s, 4.0 * v * s, (u + v) * s],
    ]))
}

/// Entrywise scaled sum of kernels.
pub fn assemble_operator(
    parts: &[(f64, Kernel3x3)],
    description: impl Into<String>,
    h: f64,
) -> Result<OperatorSpec> {
    if parts.is_empty() {
        return Err(Error::EmptyAssembly);
    }
    let mut kernel = Kernel3x3::zero();
    for (scale, part) in parts {
        kernel = kernel.add_scaled(*scale, part);
    }
    Ok(OperatorSpec::new(kernel, description, h))
}

/// Largest stable explicit time step
/// `min(h / 2|u|max, h / 2|v|max, h^2 / 4D)`, skipping zero-parameter terms.
pub fn cfl_max_timestep(u_max: f64, v_max: f64, diffusivity: f64, h: f64) -> Result<f64> {
    check_spacing(h)?;
    let mut dt = f64::INFINITY;
    if u_max != 0.0 {
        dt = dt.min(h / (2.0 * u_max.abs()));
    }
    if v_max != 0.0 {
        dt = dt.min(h / (2.0 * v_max.abs()));
    }
    if diffusivity != 0.0 {
        dt = dt.min(h * h / (4.0 * diffusivity.abs()));
    }
    if !dt.is_finite() {
        return Err(Error::InvalidParameter(
            "CFL bound needs at least one nonzero coefficient".into(),
        ));
    }
    Ok(dt)
}

/// Full-size classical kernel application with the field's boundary padding.
pub fn apply_kernel(field: &Field2D, kernel: &Kernel3x3) -> Field2D {
    let (h, w) = field.shape();
    let mut out = Field2D::zeros_like(field);
    let k = kernel.coefficients();
    if h >= 3 && w >= 3 {
        // Interior sweep without padding lookups.
        let src = field.values();
        let dst = out.values_mut();
        for i in 1..h - 1 {
            let row = i * w;
            for j in 1..w - 1 {
                let (up, mid, down) = (row + j - w, row + j, row + j + w);
                dst[mid] = k[0][0] * src[up - 1]
                    + k[0][1] * src[up]
                    + k[0][2] * src[up + 1]
                    + k[1][0] * src[mid - 1]
                    + k[1][1] * src[mid]
                    + k[1][2] * src[mid + 1]
                    + k[2][0] * src[down - 1]
                    + k[2][1] * src[down]
                    + k[2][2] * src[down + 1];
            }
        }
    }
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
        if h > 1 {
            eval(h - 1, j, &mut out);
        }
    }
    for i in 1..h.saturating_sub(1) {
        eval(i, 0, &mut out);
        if w > 1 {
            eval(i, w - 1, &mut out);
        }
    }
    out
}

/// One explicit Euler step `T + dt (op(T) + S)`, with homogeneous Dirichlet
/// values reimposed on the boundary ring afterwards. Warns (without failing)
/// when `dt` exceeds the Gershgorin stability estimate `2 / sum|k|`.
pub fn explicit_euler_step(
    t: &Field2D,
    op: &OperatorSpec,
    source: &Field2D,
    dt: f64,
) -> Result<Field2D> {
    if t.shape() != source.shape() {
        let (sh, sw) = source.shape();
        return Err(Error::ShapeMismatch(t.height(), t.width(), sh, sw));
    }
    if dt <= 0.0 {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
    }
    let radius: f64 = op
        .kernel()
        .coefficients()
        .iter()
        .flatten()
        .map(|c| c.abs())
        .sum();
    if radius > 0.0 && dt > 2.0 / radius {
        log::warn!(
            "explicit step dt = {dt} exceeds the stability estimate {:.3e} for '{}'",
            2.0 / radius,
            op.description()
        );
    }
    let mut next = apply_kernel(t, op.kernel());
    next.axpy(1.0, source)?;
    next.scale(dt);
    next.axpy(1.0, t)?;
    if t.boundary() == BoundaryKind::DirichletZero {
        let (h, w) = next.shape();
        for j in 0..w {
            next.set(0, j, 0.0);
            next.set(h - 1, j, 0.0);
        }
        for i in 0..h {
            next.set(i, 0, 0.0);
            next.set(i, w - 1, 0.0);
        }
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::BoundaryKind;

    fn interior_values(field: &Field2D) -> Vec<f64> {
        let (h, w) = field.shape();
        let mut out = Vec::new();
        for i in 1..h - 1 {
            for j in 1..w - 1 {
                out.push(field.at(i, j));
            }
        }
        out
    }

    fn linear_field(h: usize, w: usize, spacing: f64, a: f64, b: f64) -> Field2D {
        Field2D::from_fn(h, w, spacing, BoundaryKind::DirichletZero, |i, j| {
            a * (j as f64) * spacing + b * (i as f64) * spacing
        })
    }

    #[test]
    fn laplacian_entries() {
        let k = laplacian_fdm_kernel(1.0).unwrap();
        assert_eq!(k.center(), -4.0);
        assert_eq!(k.at(0, 1), 1.0);
        assert_eq!(k.at(-1, 0), 1.0);
        assert_eq!(k.at(1, 1), 0.0);
        let k_half = laplacian_fdm_kernel(0.5).unwrap();
        for dr in -1..=1 {
            for dc in -1..=1 {
                assert!((k_half.at(dr, dc) - 4.0 * k.at(dr, dc)).abs() < 1e-12);
            }
        }
        assert!(laplacian_fdm_kernel(0.0).is_err());
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        let f = Field2D::from_fn(6, 7, 1.0, BoundaryKind::DirichletZero, |i, j| {
            (i * i + j * j) as f64
        });
        let out = apply_kernel(&f, &laplacian_fdm_kernel(1.0).unwrap());
        for v in interior_values(&out) {
            assert!((v - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn upwind_positive_velocities() {
        let k = upwind_convection_kernel(1.0, 1.0, 1.0).unwrap();
        assert_eq!(
            *k.coefficients(),
            [[0.0, -1.0, 0.0], [-1.0, 2.0, 0.0], [0.0, 0.0, 0.0]]
        );
        assert!(upwind_convection_kernel(0.0, 0.0, 1.0).unwrap().is_zero());
    }

    #[test]
    fn upwind_negative_velocity_switches_side() {
        // u < 0 differences toward +x; on f = x the result is u itself.
        let k = upwind_convection_kernel(-1.0, 0.0, 1.0).unwrap();
        assert_eq!(k.center(), 1.0);
        assert_eq!(k.at(0, 1), -1.0);
        assert_eq!(k.at(0, -1), 0.0);
        let f = linear_field(5, 5, 1.0, 1.0, 0.0);
        let out = apply_kernel(&f, &k);
        for v in interior_values(&out) {
            assert!((v + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn central_convection_entries_and_consistency() {
        let k = central_convection_kernel(1.0, 0.0, 1.0).unwrap();
        assert_eq!(k.at(0, -1), -0.5);
        assert_eq!(k.at(0, 1), 0.5);
        assert_eq!(k.entry_sum(), 0.0);
        let f = linear_field(5, 6, 1.0, 1.0, 0.0);
        let out = apply_kernel(&f, &k);
        for v in interior_values(&out) {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let c = Field2D::from_fn(5, 6, 1.0, BoundaryKind::DirichletZero, |_, _| 3.0);
        let out_c = apply_kernel(&c, &k);
        for v in interior_values(&out_c) {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn convfem_diffusion_entries_and_quadratics() {
        let k = convfem_diffusion_kernel(1.0).unwrap();
        assert!((k.center() - 8.0 / 3.0).abs() < 1e-15);
        assert!((k.at(1, 1) + 1.0 / 3.0).abs() < 1e-15);
        assert!(k.entry_sum().abs() < 1e-12);
        let f = Field2D::from_fn(6, 6, 1.0, BoundaryKind::DirichletZero, |i, j| {
            (i * i + j * j) as f64
        });
        let out = apply_kernel(&f, &k);
        for v in interior_values(&out) {
            assert!((v + 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn convfem_convection_consistency() {
        // f = a x + b y must map to a u + b v for any velocities.
        for &(u, v, a, b, h) in &[
            (1.0, 0.0, 1.0, 0.0, 1.0),
            (0.3, 0.15, 2.0, -1.5, 0.0625),
            (-0.7, 0.4, 0.5, 3.0, 0.25),
        ] {
            let k = convfem_convection_kernel(u, v, h).unwrap();
            assert!(k.entry_sum().abs() < 1e-12);
            let f = linear_field(6, 6, h, a, b);
            let out = apply_kernel(&f, &k);
            for val in interior_values(&out) {
                assert!(
                    (val - (a * u + b * v)).abs() < 1e-10,
                    "u={u} v={v}: {val} vs {}",
                    a * u + b * v
                );
            }
        }
    }

    #[test]
    fn convfem_convection_magnitudes_match_tensor_weights() {
        let k = convfem_convection_kernel(1.0, 0.0, 1.0).unwrap();
        for (dr, dc, expect) in [
            (0, -1, -4.0 / 12.0),
            (0, 1, 4.0 / 12.0),
            (-1, -1, -1.0 / 12.0),
            (1, 1, 1.0 / 12.0),
            (0, 0, 0.0),
        ] {
            assert!((k.at(dr, dc) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn convection_kernels_scale_as_inverse_h() {
        for h in [0.25, 1.0, 4.0] {
            let k = central_convection_kernel(1.0, 2.0, h).unwrap();
            let k1 = central_convection_kernel(1.0, 2.0, 1.0).unwrap();
            for dr in -1..=1 {
                for dc in -1..=1 {
                    assert!((k.at(dr, dc) - k1.at(dr, dc) / h).abs() < 1e-12);
                }
            }
            let d = convfem_diffusion_kernel(h).unwrap();
            let d1 = convfem_diffusion_kernel(1.0).unwrap();
            for dr in -1..=1 {
                for dc in -1..=1 {
                    assert!((d.at(dr, dc) - d1.at(dr, dc) / (h * h)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_row_sum_kernels_annihilate_constants() {
        let kernels = [
            laplacian_fdm_kernel(1.0).unwrap(),
            upwind_convection_kernel(1.0, 1.0, 1.0).unwrap(),
            central_convection_kernel(0.4, -0.2, 1.0).unwrap(),
            convfem_diffusion_kernel(1.0).unwrap(),
            convfem_convection_kernel(0.3, 0.15, 1.0).unwrap(),
        ];
        let c = Field2D::from_fn(5, 5, 1.0, BoundaryKind::DirichletZero, |_, _| -1.7);
        for k in &kernels {
            assert!(k.entry_sum().abs() < 1e-12);
            let out = apply_kernel(&c, k);
            for v in interior_values(&out) {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn assemble_identity_and_implicit_diffusion() {
        let lap = laplacian_fdm_kernel(1.0).unwrap();
        let single = assemble_operator(&[(1.0, lap)], "laplacian", 1.0).unwrap();
        assert_eq!(single.kernel(), &lap);

        // I + dt alpha (-L) at alpha = 1, dt = 0.5: center 3, neighbors -0.5.
        let implicit = assemble_operator(
            &[(1.0, identity_kernel()), (-0.5, lap)],
            "implicit diffusion",
            1.0,
        )
        .unwrap();
        assert!((implicit.kernel().center() - 3.0).abs() < 1e-12);
        assert!((implicit.kernel().at(0, 1) + 0.5).abs() < 1e-12);
        assert_eq!(implicit.kernel().at(1, 1), 0.0);
    }

    #[test]
    fn assemble_transport_operator_entrywise() {
        // A = -C_upwind + D L at u = v = 1, D = 1, h = 1.
        let c = upwind_convection_kernel(1.0, 1.0, 1.0).unwrap();
        let l = laplacian_fdm_kernel(1.0).unwrap();
        let a = assemble_operator(&[(-1.0, c), (1.0, l)], "transport", 1.0).unwrap();
        for dr in -1..=1 {
            for dc in -1..=1 {
                let expect = -c.at(dr, dc) + l.at(dr, dc);
                assert!((a.kernel().at(dr, dc) - expect).abs() < 1e-12);
            }
        }
        assert!(matches!(
            assemble_operator(&[], "empty", 1.0),
            Err(Error::EmptyAssembly)
        ));
    }

    #[test]
    fn assemble_is_linear_in_scales() {
        let l = laplacian_fdm_kernel(1.0).unwrap();
        let c = central_convection_kernel(1.0, 2.0, 1.0).unwrap();
        let a = assemble_operator(&[(2.0, l), (3.0, c)], "a", 1.0).unwrap();
        let b = assemble_operator(&[(1.0, l), (1.5, c)], "b", 1.0).unwrap();
        for dr in -1..=1 {
            for dc in -1..=1 {
                assert!((a.kernel().at(dr, dc) - 2.0 * b.kernel().at(dr, dc)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cfl_examples() {
        assert!((cfl_max_timestep(1.0, 1.0, 0.25, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((cfl_max_timestep(2.0, 0.0, 0.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((cfl_max_timestep(0.0, 0.0, 1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(cfl_max_timestep(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn euler_step_trivial_cases() {
        let op = assemble_operator(
            &[(1.0, laplacian_fdm_kernel(1.0).unwrap())],
            "diffusion",
            1.0,
        )
        .unwrap();
        let zero = Field2D::new(5, 5, 1.0, BoundaryKind::DirichletZero);
        let out = explicit_euler_step(&zero, &op, &zero, 0.1).unwrap();
        assert!(out.is_all_zero());

        // A steady state (annihilated by the operator, no source) is unchanged.
        let steady = Field2D::from_fn(5, 5, 1.0, BoundaryKind::NeumannZero, |_, _| 2.0);
        let out = explicit_euler_step(&steady, &op, &Field2D::zeros_like(&steady), 0.1).unwrap();
        assert!(out.max_abs_diff(&steady).unwrap() < 1e-12);
    }

    #[test]
    fn euler_step_delta_spike_diffusion() {
        let op = assemble_operator(
            &[(1.0, laplacian_fdm_kernel(1.0).unwrap())],
            "diffusion",
            1.0,
        )
        .unwrap();
        let mut t = Field2D::new(7, 7, 1.0, BoundaryKind::DirichletZero);
        t.set(3, 3, 1.0);
        let out = explicit_euler_step(&t, &op, &Field2D::zeros_like(&t), 0.1).unwrap();
        assert!((out.at(3, 3) - 0.6).abs() < 1e-12);
        for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
            let v = out.at((3 + di) as usize, (3 + dj) as usize);
            assert!((v - 0.1).abs() < 1e-12);
        }
        assert!(out.at(2, 2).abs() < 1e-15);
    }

    #[test]
    fn euler_step_shape_mismatch() {
        let op = assemble_operator(&[(1.0, identity_kernel())], "id", 1.0).unwrap();
        let t = Field2D::new(4, 4, 1.0, BoundaryKind::DirichletZero);
        let s = Field2D::new(5, 4, 1.0, BoundaryKind::DirichletZero);
        assert!(matches!(
            explicit_euler_step(&t, &op, &s, 0.1),
            Err(Error::ShapeMismatch(..))
        ));
    }
}
