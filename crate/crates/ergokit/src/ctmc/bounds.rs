//! Weighted-norm convergence: decay curves, integral bounds between pairs of
//! initial conditions, their skeleton-sum counterparts, and the norm
//! inequality relating the sampled chain to the continuous flow.

use nalgebra::{DMatrix, RowDVector};

use crate::measures::{SignedMeasure, Weight};
use crate::numeric;

use super::{CtmcError, RateMatrix};

/// Pointwise-exact decay curve `t -> ||P^t(x, .) - pi||_f`, with the
/// total variation curve computed alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    pub f_norms: Vec<f64>,
    pub tv: Vec<f64>,
    /// Whether the total variation curve is non-increasing over the grid
    /// (up to rounding); a kernel contraction argument says it must be.
    pub tv_non_increasing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairIntegral {
    pub x: usize,
    pub y: usize,
    /// Quadrature value of `int_0^{t_max} ||P^t(x,.) - P^t(y,.)||_f dt`.
    pub integral: f64,
    /// Geometric tail estimate `curve(t_max) / gap`.
    pub tail: f64,
    /// `(integral + tail) / (V(x) + V(y) + 1)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationIntegral {
    pub x: usize,
    pub integral: f64,
    pub tail: f64,
    /// `(integral + tail) / (V(x) + 1)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicBounds {
    pub pairs: Vec<PairIntegral>,
    pub stations: Vec<StationIntegral>,
    /// Largest pair ratio; finite whenever the integrals are.
    pub b0_estimate: f64,
    /// Largest stationary ratio.
    pub b_estimate: f64,
    pub gap: f64,
    pub t_max: f64,
    /// Largest per-integral quadrature error proxy.
    pub quadrature_error: f64,
}

/// Truncated skeleton norm sum with its matched truncated integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonSums {
    /// `sum_{k=0}^{K} ||mu_k||_{f_Delta}`.
    pub sum: f64,
    /// Number of skeleton terms `K + 1` kept.
    pub terms: usize,
    /// Geometric tail estimate for the dropped terms.
    pub tail: f64,
    /// `int_0^{(K+1) Delta} ||mu P^t||_f dt` over the same horizon, summed
    /// interval by interval so the comparison is term-by-term.
    pub matched_integral: f64,
    pub quadrature_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEquivalence {
    /// `||mu||_{f_Delta}`.
    pub lhs: f64,
    /// `int_0^Delta ||mu P^t||_f dt`.
    pub rhs: f64,
    pub quadrature_error: f64,
}

impl RateMatrix {
    /// Exact evaluation of `||P^t(x, .) - pi||_f` on a time grid.
    pub fn fnorm_decay_curve(
        &self,
        f: &Weight,
        x: usize,
        t_grid: &[f64],
    ) -> Result<DecayCurve, CtmcError> {
        if f.len() != self.n() {
            return Err(CtmcError::DimensionMismatch {
                expected: self.n(),
                got: f.len(),
            });
        }
        if x >= self.n() {
            return Err(CtmcError::DimensionMismatch {
                expected: self.n(),
                got: x,
            });
        }
        for w in t_grid.windows(2) {
            if w[1] < w[0] {
                return Err(CtmcError::Precondition(
                    "time grid must be sorted ascending".into(),
                ));
            }
        }
        let pi = self.stationary_distribution()?;
        let mut f_norms = Vec::with_capacity(t_grid.len());
        let mut tv = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            if t < 0.0 {
                return Err(CtmcError::NegativeTime(t));
            }
            let p = self.transition_semigroup(t)?;
            let mu = SignedMeasure::difference(&p.row(x), &pi)?;
            f_norms.push(mu.f_norm(f)?);
            tv.push(mu.total_variation());
        }
        let tv_non_increasing = tv.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        Ok(DecayCurve {
            times: t_grid.to_vec(),
            f_norms,
            tv,
            tv_non_increasing,
        })
    }

    /// Integral convergence bounds: for each requested pair the truncated
    /// integral of `||P^t(x,.) - P^t(y,.)||_f` plus a spectral tail, divided
    /// by `V(x) + V(y) + 1`; and for every state the analogous stationary
    /// quantity over `V(x) + 1`.
    pub fn theorem2_bound(
        &self,
        f: &Weight,
        v: &[f64],
        t_max: f64,
        pairs: &[(usize, usize)],
    ) -> Result<ErgodicBounds, CtmcError> {
        let n = self.n();
        if f.len() != n || v.len() != n {
            return Err(CtmcError::DimensionMismatch {
                expected: n,
                got: f.len().min(v.len()),
            });
        }
        for (i, &value) in v.iter().enumerate() {
            if !value.is_finite() {
                return Err(CtmcError::Precondition(format!(
                    "V must be finite everywhere for the integral bounds, V({i}) = {value}"
                )));
            }
        }
        if t_max <= 0.0 || !t_max.is_finite() {
            return Err(CtmcError::Precondition(format!(
                "integration horizon must be positive, got {t_max}"
            )));
        }
        let gap = numeric::spectral_gap(self.q()).unwrap_or(f64::INFINITY);
        if !(gap > 0.0) || (gap.is_finite() && gap * t_max < 1.0) {
            return Err(CtmcError::TailUnresolved { t_max, gap });
        }
        let pi = self.stationary_distribution()?;
        let quad = IntervalQuad::new(self, t_max, 4096)?;
        let end_norm = |mu: &RowDVector<f64>| -> f64 {
            let pushed = mu * quad.end_kernel();
            pushed
                .iter()
                .zip(f.values())
                .map(|(m, fv)| fv * m.abs())
                .sum()
        };
        let mut quadrature_error = 0.0f64;

        let mut pair_results = Vec::with_capacity(pairs.len());
        for &(x, y) in pairs {
            if x >= n || y >= n {
                return Err(CtmcError::DimensionMismatch {
                    expected: n,
                    got: x.max(y),
                });
            }
            let (integral, tail) = if x == y {
                (0.0, 0.0)
            } else {
                let mut mu = RowDVector::zeros(n);
                mu[x] += 1.0;
                mu[y] -= 1.0;
                let (value, err) = quad.integrate_norm(&mu, f);
                quadrature_error = quadrature_error.max(err);
                let tail = if gap.is_finite() {
                    end_norm(&mu) / gap
                } else {
                    0.0
                };
                (value, tail)
            };
            let ratio = (integral + tail) / (v[x] + v[y] + 1.0);
            pair_results.push(PairIntegral {
                x,
                y,
                integral,
                tail,
                ratio,
            });
        }

        let mut station_results = Vec::with_capacity(n);
        for x in 0..n {
            let mut mu = RowDVector::from_iterator(n, pi.iter().map(|p| -p));
            mu[x] += 1.0;
            let (integral, err) = quad.integrate_norm(&mu, f);
            quadrature_error = quadrature_error.max(err);
            let tail = if gap.is_finite() {
                end_norm(&mu) / gap
            } else {
                0.0
            };
            let ratio = (integral + tail) / (v[x] + 1.0);
            station_results.push(StationIntegral {
                x,
                integral,
                tail,
                ratio,
            });
        }

        let b0_estimate = pair_results
            .iter()
            .map(|p| p.ratio)
            .fold(0.0f64, f64::max);
        let b_estimate = station_results
            .iter()
            .map(|s| s.ratio)
            .fold(0.0f64, f64::max);
        Ok(ErgodicBounds {
            pairs: pair_results,
            stations: station_results,
            b0_estimate,
            b_estimate,
            gap,
            t_max,
            quadrature_error,
        })
    }

    /// Truncated sum `sum_k ||(delta_x - delta_y) P^{k Delta}||_{f_Delta}`
    /// together with the same-horizon integral it must dominate.
    pub fn skeleton_pair_sum(
        &self,
        f: &Weight,
        delta: f64,
        x: usize,
        y: usize,
    ) -> Result<SkeletonSums, CtmcError> {
        let n = self.n();
        if x >= n || y >= n {
            return Err(CtmcError::DimensionMismatch {
                expected: n,
                got: x.max(y),
            });
        }
        let mut mu = RowDVector::zeros(n);
        mu[x] += 1.0;
        mu[y] -= 1.0;
        self.skeleton_sum_impl(f, delta, mu)
    }

    /// Truncated sum `sum_k ||P^{k Delta}(x, .) - pi||_{f_Delta}` with its
    /// matched integral.
    pub fn skeleton_station_sum(
        &self,
        f: &Weight,
        delta: f64,
        x: usize,
    ) -> Result<SkeletonSums, CtmcError> {
        let n = self.n();
        if x >= n {
            return Err(CtmcError::DimensionMismatch { expected: n, got: x });
        }
        let pi = self.stationary_distribution()?;
        let mut mu = RowDVector::from_iterator(n, pi.iter().map(|p| -p));
        mu[x] += 1.0;
        self.skeleton_sum_impl(f, delta, mu)
    }

    fn skeleton_sum_impl(
        &self,
        f: &Weight,
        delta: f64,
        mut mu: RowDVector<f64>,
    ) -> Result<SkeletonSums, CtmcError> {
        if delta <= 0.0 || !delta.is_finite() {
            return Err(CtmcError::NonpositiveDelta(delta));
        }
        if f.len() != self.n() {
            return Err(CtmcError::DimensionMismatch {
                expected: self.n(),
                got: f.len(),
            });
        }
        let gap = numeric::spectral_gap(self.q());
        let f_delta = self.f_delta(f, delta)?;
        let quad = IntervalQuad::new(self, delta, 512)?;

        const MAX_TERMS: usize = 2000;
        let step = quad.end_kernel();
        let mut sum = 0.0;
        let mut matched_integral = 0.0;
        let mut quadrature_error = 0.0;
        let mut terms = 0;
        let mut last_term = 0.0;
        while terms < MAX_TERMS {
            let term: f64 = mu
                .iter()
                .zip(&f_delta)
                .map(|(m, fd)| fd * m.abs())
                .sum();
            let (part, err) = quad.integrate_norm(&mu, f);
            sum += term;
            matched_integral += part;
            quadrature_error += err;
            terms += 1;
            last_term = term;
            if term <= 1e-12 * (1.0 + sum) {
                break;
            }
            mu *= step;
        }
        let tail = match gap {
            Some(g) if g > 0.0 => {
                let rho = (-g * delta).exp();
                last_term * rho / (1.0 - rho)
            }
            _ => 0.0,
        };
        Ok(SkeletonSums {
            sum,
            terms,
            tail,
            matched_integral,
            quadrature_error,
        })
    }

    /// Both sides of the norm inequality `||mu||_{f_Delta} >=
    /// int_0^Delta ||mu P^t||_f dt`. The left side is exact; the right side
    /// carries the reported quadrature error.
    pub fn norm_equiv_check(
        &self,
        mu: &SignedMeasure,
        f: &Weight,
        delta: f64,
    ) -> Result<NormEquivalence, CtmcError> {
        if mu.len() != self.n() || f.len() != self.n() {
            return Err(CtmcError::DimensionMismatch {
                expected: self.n(),
                got: mu.len().min(f.len()),
            });
        }
        if delta <= 0.0 || !delta.is_finite() {
            return Err(CtmcError::NonpositiveDelta(delta));
        }
        let f_delta = self.f_delta(f, delta)?;
        let lhs = mu.weighted_norm(&f_delta)?;
        let quad = IntervalQuad::new(self, delta, 1024)?;
        let row = RowDVector::from_row_slice(mu.mass());
        let (rhs, quadrature_error) = quad.integrate_norm(&row, f);
        Ok(NormEquivalence {
            lhs,
            rhs,
            quadrature_error,
        })
    }
}

/// Simpson nodes for `int_0^Delta ||mu P^t||_f dt`, with the kernels
/// `P^{t_j}` precomputed once so repeated integrals against different
/// measures cost only vector products. The error proxy compares the full
/// rule with its half-resolution subsample.
struct IntervalQuad {
    kernels: Vec<DMatrix<f64>>,
    h: f64,
    panels: usize,
}

impl IntervalQuad {
    fn new(q: &RateMatrix, delta: f64, panels: usize) -> Result<Self, CtmcError> {
        debug_assert!(panels % 4 == 0);
        let h = delta / panels as f64;
        let step = numeric::expm(&(q.q() * h));
        let n = q.n();
        let mut kernels = Vec::with_capacity(panels + 1);
        kernels.push(DMatrix::identity(n, n));
        for j in 1..=panels {
            let next = &kernels[j - 1] * &step;
            kernels.push(next);
        }
        Ok(Self { kernels, h, panels })
    }

    fn end_kernel(&self) -> &DMatrix<f64> {
        &self.kernels[self.panels]
    }

    fn integrate_norm(&self, mu: &RowDVector<f64>, f: &Weight) -> (f64, f64) {
        let values: Vec<f64> = self
            .kernels
            .iter()
            .map(|k| {
                let pushed = mu * k;
                pushed
                    .iter()
                    .zip(f.values())
                    .map(|(m, fv)| fv * m.abs())
                    .sum()
            })
            .collect();
        let fine = simpson_from_samples(&values, self.h);
        let coarse_values: Vec<f64> = values.iter().step_by(2).copied().collect();
        let coarse = simpson_from_samples(&coarse_values, 2.0 * self.h);
        (fine, (fine - coarse).abs())
    }
}

fn simpson_from_samples(values: &[f64], h: f64) -> f64 {
    let panels = values.len() - 1;
    debug_assert!(panels % 2 == 0);
    let mut sum = values[0] + values[panels];
    for (k, v) in values.iter().enumerate().take(panels).skip(1) {
        sum += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    sum * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::{random_rate_matrix, two_state_example};
    use crate::measures::StateSet;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dirac_minus_pi(q: &RateMatrix, x: usize) -> SignedMeasure {
        let pi = q.stationary_distribution().unwrap();
        let mut mass = pi.iter().map(|p| -p).collect::<Vec<_>>();
        mass[x] += 1.0;
        SignedMeasure::new(mass)
    }

    #[test]
    fn decay_curve_two_state_closed_form() {
        let q = two_state_example();
        let f = Weight::ones(2);
        let grid: Vec<f64> = (0..30).map(|k| k as f64 * 0.2).collect();
        let curve = q.fnorm_decay_curve(&f, 0, &grid).unwrap();
        for (k, &t) in grid.iter().enumerate() {
            let expected = 2.0 / 3.0 * (-3.0 * t).exp();
            assert_abs_diff_eq!(curve.f_norms[k], expected, epsilon = 1e-10);
            assert_abs_diff_eq!(curve.tv[k], expected, epsilon = 1e-10);
        }
        assert!(curve.tv_non_increasing);
        // t = 0 gives ||delta_x - pi||_f, and the curve heads to zero
        assert_abs_diff_eq!(curve.f_norms[0], 2.0 / 3.0, epsilon = 1e-12);
        assert!(*curve.f_norms.last().unwrap() < 1e-6);
    }

    #[test]
    fn decay_curve_rejects_unsorted_grid() {
        let q = two_state_example();
        let f = Weight::ones(2);
        assert!(q.fnorm_decay_curve(&f, 0, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn decay_monotone_on_random_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let n = rng.random_range(2..=6);
            let q = random_rate_matrix(n, 0.1, 1.1, &mut rng);
            let f = Weight::ones(n);
            let grid: Vec<f64> = (0..25).map(|k| k as f64 * 0.3).collect();
            let curve = q.fnorm_decay_curve(&f, 0, &grid).unwrap();
            assert!(curve.tv_non_increasing);
        }
    }

    #[test]
    fn theorem2_two_state_integral() {
        let q = two_state_example();
        let f = Weight::ones(2);
        let cert = q
            .lyapunov_from_resolvent(&f, &StateSet::new([0], 2).unwrap())
            .unwrap();
        let bounds = q
            .theorem2_bound(&f, &cert.v, 12.0, &[(0, 1), (1, 1)])
            .unwrap();
        // ||P^t(0,.) - pi||_1 = (2/3) e^{-3t}, so the stationary integral
        // from state 0 is 2/9
        assert_abs_diff_eq!(
            bounds.stations[0].integral + bounds.stations[0].tail,
            2.0 / 9.0,
            epsilon = 1e-6
        );
        // coincident pair integrates to zero
        assert_eq!(bounds.pairs[1].integral, 0.0);
        assert!(bounds.b0_estimate.is_finite());
        assert!(bounds.b_estimate.is_finite());
        assert_abs_diff_eq!(bounds.gap, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn theorem2_rejects_unresolved_tail() {
        let q = two_state_example();
        let f = Weight::ones(2);
        let v = vec![1.0, 1.0];
        assert!(matches!(
            q.theorem2_bound(&f, &v, 0.01, &[(0, 1)]),
            Err(CtmcError::TailUnresolved { .. })
        ));
    }

    #[test]
    fn theorem2_rejects_infinite_v() {
        let q = two_state_example();
        let f = Weight::ones(2);
        let v = vec![1.0, f64::INFINITY];
        assert!(q.theorem2_bound(&f, &v, 10.0, &[(0, 1)]).is_err());
    }

    #[test]
    fn skeleton_sum_dominates_matched_integral() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..5 {
            let n = rng.random_range(2..=6);
            let q = random_rate_matrix(n, 0.1, 1.1, &mut rng);
            let f =
                Weight::new((0..n).map(|_| 1.0 + rng.random_range(0.0..2.0)).collect()).unwrap();
            let sums = q.skeleton_pair_sum(&f, 1.0, 0, n - 1).unwrap();
            assert!(
                sums.sum >= sums.matched_integral - sums.quadrature_error - 1e-9,
                "sum {} vs integral {}",
                sums.sum,
                sums.matched_integral
            );
            let station = q.skeleton_station_sum(&f, 1.0, 0).unwrap();
            assert!(
                station.sum >= station.matched_integral - station.quadrature_error - 1e-9
            );
        }
    }

    #[test]
    fn norm_equiv_zero_measure() {
        let q = two_state_example();
        let f = Weight::ones(2);
        let mu = SignedMeasure::new(vec![0.0, 0.0]);
        let check = q.norm_equiv_check(&mu, &f, 1.0).unwrap();
        assert_eq!(check.lhs, 0.0);
        assert_abs_diff_eq!(check.rhs, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn norm_equiv_signed_measure_dominates() {
        let q = two_state_example();
        let f = Weight::new(vec![1.0, 2.0]).unwrap();
        let mu = dirac_minus_pi(&q, 0);
        let check = q.norm_equiv_check(&mu, &f, 1.0).unwrap();
        assert!(check.lhs >= check.rhs - check.quadrature_error - 1e-9);
    }

    #[test]
    fn norm_equiv_equality_for_nonnegative_measure() {
        // without cancellation both sides equal the integral of f against
        // the pushed measure
        let q = two_state_example();
        let f = Weight::new(vec![1.0, 3.0]).unwrap();
        let mu = SignedMeasure::new(vec![0.4, 0.6]);
        let check = q.norm_equiv_check(&mu, &f, 1.5).unwrap();
        assert_abs_diff_eq!(check.lhs, check.rhs, epsilon = 1e-6);
    }
}
