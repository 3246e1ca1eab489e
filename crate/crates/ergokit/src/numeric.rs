//! Shared numerical kernels: matrix exponentials, linear solves, spectral
//! gaps, and Simpson quadrature with refinement-based error estimates.

use nalgebra::{DMatrix, DVector};

/// `exp(A)` by scaling-and-squaring with Pade approximation.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.exp()
}

/// Computes `(exp(tQ), int_0^t exp(sQ) c ds)` with a single exponential of
/// the augmented block matrix `[[Q, c], [0, 0]]`.
pub fn expm_with_integral(q: &DMatrix<f64>, c: &DVector<f64>, t: f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = q.nrows();
    let mut block = DMatrix::zeros(n + 1, n + 1);
    block.view_mut((0, 0), (n, n)).copy_from(q);
    block.view_mut((0, n), (n, 1)).copy_from(c);
    let e = (block * t).exp();
    let etq = e.view((0, 0), (n, n)).into_owned();
    let integral = DVector::from_iterator(n, (0..n).map(|i| e[(i, n)]));
    (etq, integral)
}

/// Solves `A x = b`, returning `None` when `A` is singular.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().lu().solve(b)
}

/// Inverts `A`, returning `None` when `A` is singular.
pub fn invert(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().lu().try_inverse()
}

/// Spectral gap of a rate matrix: the smallest `-Re(lambda)` over nonzero
/// eigenvalues. `None` when every eigenvalue is (numerically) zero.
pub fn spectral_gap(q: &DMatrix<f64>) -> Option<f64> {
    let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = 1e-9 * scale;
    q.clone()
        .complex_eigenvalues()
        .iter()
        .filter(|ev| ev.norm() > tol)
        .map(|ev| -ev.re)
        .fold(None, |acc, g| Some(acc.map_or(g, |a: f64| a.min(g))))
}

/// Composite Simpson on `[a, b]` with an even number of panels.
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels >= 2 && panels % 2 == 0, "panel count must be even");
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Difference between the two finest refinement levels; a conservative
    /// error proxy for smooth integrands.
    pub error_estimate: f64,
    pub panels: usize,
}

/// Simpson with panel doubling until two successive levels agree to `tol`
/// (absolute) or the panel budget is spent.
pub fn simpson_refined<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> QuadResult {
    let mut panels = 16;
    let mut prev = simpson(&mut f, a, b, panels);
    loop {
        panels *= 2;
        let next = simpson(&mut f, a, b, panels);
        let err = (next - prev).abs();
        if err <= tol || panels >= max_panels {
            return QuadResult {
                value: next,
                error_estimate: err,
                panels,
            };
        }
        prev = next;
    }
}
