//! The diffusion generator `D h = u . grad(h) + (1/2) tr(Sigma Hess(h))`
//! and drift-condition checks evaluated over point grids.

use super::{DiffusionError, DiffusionModel, FieldError, Region, ScalarField};

/// Default finite-difference step: scales with the norm of the evaluation
/// point to keep the relative truncation error stable away from the origin.
pub fn default_fd_step(x: &[f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    1e-4 * (1.0 + norm)
}

/// Applies the generator of the model to `h` at `x`. Closed-form derivatives
/// are used when the field carries them; otherwise central differences with
/// step `fd_step` (default [`default_fd_step`]).
pub fn generator_apply(
    model: &DiffusionModel,
    h: &ScalarField,
    x: &[f64],
    fd_step: Option<f64>,
) -> Result<f64, DiffusionError> {
    if h.dim() != model.dim() {
        return Err(DiffusionError::Dimension {
            expected: model.dim(),
            got: h.dim(),
        });
    }
    let step = fd_step.unwrap_or_else(|| default_fd_step(x));
    if step <= 0.0 || !step.is_finite() {
        return Err(DiffusionError::InvalidParams(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let grad = h.gradient(x, step)?;
    let hess = h.hessian(x, step)?;
    let drift = model.drift(x)?;
    let sigma = model.sigma(x)?;
    let d = model.dim();
    let mut value = 0.0;
    for i in 0..d {
        value += drift[i] * grad[i];
        for j in 0..d {
            value += 0.5 * sigma[(i, j)] * hess[(i, j)];
        }
    }
    if !value.is_finite() {
        return Err(DiffusionError::Field(FieldError::NonFinite {
            context: "generator application",
        }));
    }
    Ok(value)
}

/// A drift certificate whose data are scalar fields over the model's state
/// space.
#[derive(Debug, Clone)]
pub struct FieldCertificate {
    pub v: ScalarField,
    pub f: ScalarField,
    pub c: Region,
    pub b: f64,
    pub delta: f64,
}

/// Grid verdict for a drift condition check.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMarginReport {
    /// Largest margin `D V(x) + delta f(x) - b 1_C(x)` over the grid.
    pub max_margin: f64,
    pub worst_point: Vec<f64>,
    pub points_checked: usize,
    /// Margins are required to be nonpositive up to this tolerance.
    pub tolerance: f64,
    pub valid: bool,
}

/// Margin tolerance for grid drift checks; grid evaluations mix
/// finite differences, so the slack is looser than the exact-chain one.
pub const GRID_MARGIN_TOL: f64 = 1e-6;

/// Evaluates `D V + delta f - b 1_C` at every grid point and reports the
/// worst margin. The grid must be nonempty.
pub fn drift_condition_check(
    model: &DiffusionModel,
    cert: &FieldCertificate,
    grid: &[Vec<f64>],
    fd_step: Option<f64>,
) -> Result<GridMarginReport, DiffusionError> {
    if grid.is_empty() {
        return Err(DiffusionError::InvalidParams(
            "drift check needs a nonempty grid".into(),
        ));
    }
    let mut max_margin = f64::NEG_INFINITY;
    let mut worst_point = grid[0].clone();
    for x in grid {
        let dv = generator_apply(model, &cert.v, x, fd_step)?;
        let fx = cert.f.eval(x)?;
        let inside = cert.c.contains(x)?;
        let margin = dv + cert.delta * fx - if inside { cert.b } else { 0.0 };
        if margin > max_margin {
            max_margin = margin;
            worst_point = x.clone();
        }
    }
    Ok(GridMarginReport {
        max_margin,
        worst_point,
        points_checked: grid.len(),
        tolerance: GRID_MARGIN_TOL,
        valid: max_margin <= GRID_MARGIN_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::grid_1d;
    use approx::assert_abs_diff_eq;

    fn ou_certificate() -> FieldCertificate {
        FieldCertificate {
            v: ScalarField::from_fn(1, |x| x[0] * x[0]),
            f: ScalarField::from_fn(1, |x| x[0] * x[0] + 1.0),
            c: Region::interval(-(3.0f64.sqrt()), 3.0f64.sqrt()),
            b: 3.0,
            delta: 1.0,
        }
    }

    #[test]
    fn generator_of_constant_vanishes() {
        let model = DiffusionModel::ou();
        let h = ScalarField::from_fn(1, |_| 4.2);
        let v = generator_apply(&model, &h, &[0.7], None).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn ou_generator_of_square_closed_form() {
        // u = -x, Sigma = 2: D(x^2) = -2x^2 + 2
        let model = DiffusionModel::ou();
        let h = ScalarField::from_fn(1, |x| x[0] * x[0])
            .with_gradient(|x| vec![2.0 * x[0]])
            .with_hessian(|_| nalgebra::DMatrix::from_element(1, 1, 2.0));
        for &x in &[-2.0, 0.0, 0.5, 3.0] {
            let v = generator_apply(&model, &h, &[x], None).unwrap();
            assert_abs_diff_eq!(v, -2.0 * x * x + 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn fd_generator_matches_closed_form() {
        let model = DiffusionModel::ou();
        let fd_field = ScalarField::from_fn(1, |x| x[0] * x[0]);
        for &x in &[-1.3, 0.2, 2.4] {
            let v = generator_apply(&model, &fd_field, &[x], None).unwrap();
            assert_abs_diff_eq!(v, -2.0 * x * x + 2.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn fd_error_richardson_ratio() {
        // exp has a nonvanishing third derivative, so the central-difference
        // error scales as h^2 and halving h divides it by ~4
        let model = DiffusionModel::ou();
        let h_field = ScalarField::from_fn(1, |x| x[0].exp());
        let x = [0.7f64];
        let exact = x[0].exp() * (1.0 - x[0]);
        let coarse = (generator_apply(&model, &h_field, &x, Some(1e-2)).unwrap() - exact).abs();
        let fine = (generator_apply(&model, &h_field, &x, Some(5e-3)).unwrap() - exact).abs();
        let ratio = coarse / fine;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn ou_certificate_margins_nonpositive() {
        let model = DiffusionModel::ou();
        let cert = ou_certificate();
        let grid = grid_1d(-10.0, 10.0, 0.01);
        let report = drift_condition_check(&model, &cert, &grid, None).unwrap();
        assert!(report.valid, "max margin {}", report.max_margin);
        assert_eq!(report.points_checked, 2001);
    }

    #[test]
    fn zero_b_fails_at_origin() {
        let model = DiffusionModel::ou();
        let mut cert = ou_certificate();
        cert.b = 0.0;
        let grid = grid_1d(-1.0, 1.0, 0.5);
        let report = drift_condition_check(&model, &cert, &grid, None).unwrap();
        assert!(!report.valid);
        // margin at the origin is exactly 3
        assert!(report.max_margin > 2.9);
        assert_abs_diff_eq!(report.worst_point[0], 0.0);
    }

    #[test]
    fn scaling_certificate_preserves_verdict() {
        let model = DiffusionModel::ou();
        let cert = ou_certificate();
        let scaled = FieldCertificate {
            v: ScalarField::from_fn(1, |x| 2.0 * x[0] * x[0]),
            f: ScalarField::from_fn(1, |x| 2.0 * (x[0] * x[0] + 1.0)),
            c: cert.c.clone(),
            b: 2.0 * cert.b,
            delta: cert.delta,
        };
        let grid = grid_1d(-5.0, 5.0, 0.1);
        let a = drift_condition_check(&model, &cert, &grid, None).unwrap();
        let b = drift_condition_check(&model, &scaled, &grid, None).unwrap();
        assert_eq!(a.valid, b.valid);
    }
}
