//! Skeleton chains: the discrete-time chain obtained by sampling the process
//! at a fixed interval, its matched weight `f_Delta`, hitting sums, and the
//! constructive Lyapunov function for the sampled chain.

use nalgebra::{DMatrix, DVector};

use crate::measures::{StateSet, Weight};
use crate::numeric;

use super::{CtmcError, RateMatrix, TransitionKernel};

/// `P^Delta` plus a flag recording that the conventional restriction
/// `Delta >= 1` was relaxed.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonKernel {
    pub kernel: TransitionKernel,
    pub delta: f64,
    /// Set when `Delta < 1`; the computations go through unchanged but the
    /// caller may want to know the conventional range was left.
    pub sub_unit_delta: bool,
}

/// A minorization certificate `P^T(x, .) >= epsilon nu(.)` on a set.
#[derive(Debug, Clone, PartialEq)]
pub struct Minorization {
    pub epsilon: f64,
    /// `None` when the minorization is empty (`epsilon = 0`).
    pub nu: Option<Vec<f64>>,
    pub t: f64,
}

/// Output of the skeleton Lyapunov construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonLyapunov {
    pub v_delta: Vec<f64>,
    /// Smallest constant making the skeleton drift inequality hold on `C`.
    pub b: f64,
    /// `max_{y in C} G_C(y, f; Delta)`, the coefficient on the hitting-sum
    /// correction term.
    pub b0: f64,
    /// `P_x{tau_C <= Delta}` for each state.
    pub hit_prob: Vec<f64>,
    /// `P^Delta V_Delta - V_Delta + f_Delta - b 1_C`, componentwise; all
    /// entries must be `<= tolerance` for the construction to be valid.
    pub margins: Vec<f64>,
    pub max_margin: f64,
    /// `max_x |V_Delta(x) - G_C(x, f; 0)|`.
    pub sup_gap_r0: f64,
    /// `max_x |V_Delta(x) - G_C(x, f; 1)|`, reported alongside the `r = 0`
    /// gap because the constructions in the literature mix both indices.
    pub sup_gap_r1: f64,
    /// Constants of `P^{k0 Delta}(x, C) >= epsilon0 s(x)`.
    pub minorization_epsilon: f64,
    pub minorization_k0: u32,
    /// `max_x (epsilon0 s(x) - P^{k0 Delta}(x, C))`; nonpositive up to
    /// rounding when the certificate is exact.
    pub minorization_residual: f64,
    pub sub_unit_delta: bool,
}

impl RateMatrix {
    /// The sampling kernel `P^Delta`.
    pub fn skeleton_kernel(&self, delta: f64) -> Result<SkeletonKernel, CtmcError> {
        if delta <= 0.0 || !delta.is_finite() {
            return Err(CtmcError::NonpositiveDelta(delta));
        }
        Ok(SkeletonKernel {
            kernel: self.transition_semigroup(delta)?,
            delta,
            sub_unit_delta: delta < 1.0,
        })
    }

    /// The matched weight `f_Delta(x) = int_0^Delta (P^t f)(x) dt`, computed
    /// through the augmented matrix exponential (no quadrature error).
    pub fn f_delta(&self, f: &Weight, delta: f64) -> Result<Vec<f64>, CtmcError> {
        if delta <= 0.0 || !delta.is_finite() {
            return Err(CtmcError::NonpositiveDelta(delta));
        }
        if f.len() != self.n() {
            return Err(CtmcError::DimensionMismatch {
                expected: self.n(),
                got: f.len(),
            });
        }
        let (_, integral) =
            numeric::expm_with_integral(self.q(), &DVector::from_column_slice(f.values()), delta);
        Ok(integral.iter().copied().collect())
    }

    /// Expected weighted visit count up to and including the first return to
    /// `B`: `G(x) = E_x[sum_{i=0}^{tau} w(X_i)]` with `tau = min{i >= 1 :
    /// X_i in B}` for the `Delta`-sampled chain.
    pub fn skeleton_hitting_sum(
        &self,
        delta: f64,
        weight: &[f64],
        b: &StateSet,
    ) -> Result<Vec<f64>, CtmcError> {
        let kernel = self.skeleton_kernel(delta)?.kernel;
        skeleton_return_sum(&kernel, weight, b)
    }

    /// Drift inequality data for the sampled chain: builds
    /// `V_Delta = G_C(., f; 0) + b0 U` where `U` is the expected sum of the
    /// hit probability `s` along the sampled path up to first entry into `C`
    /// (entry counted at step zero). Off `C` the summed term obeys
    /// `P^Delta U = U - s` exactly, which is what makes the componentwise
    /// margins nonpositive there.
    pub fn construct_skeleton_lyapunov(
        &self,
        f: &Weight,
        delta: f64,
        c: &StateSet,
    ) -> Result<SkeletonLyapunov, CtmcError> {
        if delta <= 0.0 || !delta.is_finite() {
            return Err(CtmcError::NonpositiveDelta(delta));
        }
        if f.len() != self.n() || c.n() != self.n() {
            return Err(CtmcError::DimensionMismatch {
                expected: self.n(),
                got: f.len().max(c.n()),
            });
        }
        if c.is_empty() {
            return Err(CtmcError::EmptySet);
        }
        let n = self.n();
        let skeleton = self.skeleton_kernel(delta)?;
        let p_delta = skeleton.kernel.p().clone();

        let f_delta = self.f_delta(f, delta)?;
        let v0 = self.hitting_functional(f, c, 0.0)?;
        let g_delta = self.hitting_functional(f, c, delta)?;
        let b0 = c.iter().map(|x| g_delta[x]).fold(0.0f64, f64::max);

        // s(x) = P_x{tau_C <= Delta}: make C absorbing and read off the mass
        // sitting in C after time Delta.
        let mut absorbed = self.q().clone();
        for x in c.iter() {
            for j in 0..n {
                absorbed[(x, j)] = 0.0;
            }
        }
        let p_absorbed = numeric::expm(&(absorbed * delta));
        let hit_prob: Vec<f64> = (0..n)
            .map(|x| c.iter().map(|y| p_absorbed[(x, y)]).sum::<f64>().min(1.0))
            .collect();

        // U(x) = E_x[sum_{i=0}^{sigma_C} s(X_i)], sigma_C = min{i >= 0 : X_i in C}
        let u = absorbed_hitting_sum(&p_delta, &hit_prob, c)?;

        let v_delta: Vec<f64> = (0..n).map(|x| v0[x] + b0 * u[x]).collect();

        let vd = DVector::from_column_slice(&v_delta);
        let pvd = &p_delta * vd;
        let raw: Vec<f64> = (0..n)
            .map(|x| pvd[x] - v_delta[x] + f_delta[x])
            .collect();
        let b = c
            .iter()
            .map(|x| raw[x])
            .fold(0.0f64, f64::max);
        let margins: Vec<f64> = (0..n)
            .map(|x| raw[x] - if c.contains(x) { b } else { 0.0 })
            .collect();
        let max_margin = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let g1 = self.hitting_functional(f, c, 1.0)?;
        let sup_gap_r0 = (0..n)
            .map(|x| (v_delta[x] - v0[x]).abs())
            .fold(0.0f64, f64::max);
        let sup_gap_r1 = (0..n)
            .map(|x| (v_delta[x] - g1[x]).abs())
            .fold(0.0f64, f64::max);

        let (minorization_epsilon, minorization_k0, minorization_residual) =
            minorization_search(self, c, &hit_prob, delta)?;

        Ok(SkeletonLyapunov {
            v_delta,
            b,
            b0,
            hit_prob,
            margins,
            max_margin,
            sup_gap_r0,
            sup_gap_r1,
            minorization_epsilon,
            minorization_k0,
            minorization_residual,
            sub_unit_delta: skeleton.sub_unit_delta,
        })
    }
}

/// Solves the return-time system (`tau >= 1`, terminal state included).
fn skeleton_return_sum(
    kernel: &TransitionKernel,
    weight: &[f64],
    b: &StateSet,
) -> Result<Vec<f64>, CtmcError> {
    let n = kernel.n();
    if weight.len() != n || b.n() != n {
        return Err(CtmcError::DimensionMismatch {
            expected: n,
            got: weight.len().max(b.n()),
        });
    }
    if b.is_empty() {
        return Err(CtmcError::EmptySet);
    }
    for (i, &w) in weight.iter().enumerate() {
        if w < 0.0 || !w.is_finite() {
            return Err(CtmcError::Precondition(format!(
                "hitting-sum weight must be nonnegative, got {w} at state {i}"
            )));
        }
    }
    let p = kernel.p();
    let outside = b.complement();
    let m = outside.len();
    // source term: w(x) + sum_{y in B} P(x,y) w(y)
    let source: Vec<f64> = (0..n)
        .map(|x| weight[x] + b.iter().map(|y| p[(x, y)] * weight[y]).sum::<f64>())
        .collect();
    let mut g = vec![0.0; n];
    let interior = if m > 0 {
        let sub = DMatrix::from_fn(m, m, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            delta - p[(outside[i], outside[j])]
        });
        check_substochastic_block(p, &outside)?;
        let rhs = DVector::from_iterator(m, outside.iter().map(|&x| source[x]));
        let sol = numeric::solve(&sub, &rhs).ok_or(CtmcError::SingularSystem {
            context: "skeleton hitting sum (target unreachable)",
        })?;
        sol.iter().copied().collect::<Vec<f64>>()
    } else {
        Vec::new()
    };
    for (k, &x) in outside.iter().enumerate() {
        g[x] = interior[k];
    }
    for x in b.iter() {
        g[x] = source[x]
            + outside
                .iter()
                .enumerate()
                .map(|(k, &y)| p[(x, y)] * interior[k])
                .sum::<f64>();
    }
    Ok(g)
}

/// Solves the absorbed system (`sigma >= 0`): `U = w` on `C`, and off `C`
/// `U(x) = w(x) + (PU)(x)`.
fn absorbed_hitting_sum(
    p: &DMatrix<f64>,
    weight: &[f64],
    c: &StateSet,
) -> Result<Vec<f64>, CtmcError> {
    let n = p.nrows();
    let outside = c.complement();
    let m = outside.len();
    let mut u = vec![0.0; n];
    for x in c.iter() {
        u[x] = weight[x];
    }
    if m == 0 {
        return Ok(u);
    }
    check_substochastic_block(p, &outside)?;
    let sub = DMatrix::from_fn(m, m, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - p[(outside[i], outside[j])]
    });
    let rhs = DVector::from_iterator(
        m,
        outside.iter().map(|&x| {
            weight[x] + c.iter().map(|y| p[(x, y)] * weight[y]).sum::<f64>()
        }),
    );
    let sol = numeric::solve(&sub, &rhs).ok_or(CtmcError::SingularSystem {
        context: "absorbed hitting sum (set unreachable)",
    })?;
    for (k, &x) in outside.iter().enumerate() {
        u[x] = sol[k];
    }
    Ok(u)
}

/// The Neumann series behind a hitting sum converges only when the spectral
/// radius of the off-target block is below one.
fn check_substochastic_block(p: &DMatrix<f64>, outside: &[usize]) -> Result<(), CtmcError> {
    let m = outside.len();
    if m == 0 {
        return Ok(());
    }
    let sub = DMatrix::from_fn(m, m, |i, j| p[(outside[i], outside[j])]);
    let radius = sub
        .complex_eigenvalues()
        .iter()
        .map(|ev| ev.norm())
        .fold(0.0f64, f64::max);
    if radius >= 1.0 - 1e-12 {
        return Err(CtmcError::SingularSystem {
            context: "sub-stochastic block has spectral radius >= 1 (target unreachable)",
        });
    }
    Ok(())
}

/// Scans `k0 = 1, 2, ...` for the first horizon at which
/// `min_x P^{k0 Delta}(x, C) / s(x)` is strictly positive, then reports that
/// minimum ratio as `epsilon0` together with the residual of the certified
/// inequality.
fn minorization_search(
    q: &RateMatrix,
    c: &StateSet,
    hit_prob: &[f64],
    delta: f64,
) -> Result<(f64, u32, f64), CtmcError> {
    const MAX_K: u32 = 64;
    let n = q.n();
    let step = q.transition_semigroup(delta)?.p().clone();
    let mut power = step.clone();
    for k in 1..=MAX_K {
        let reach: Vec<f64> = (0..n)
            .map(|x| c.iter().map(|y| power[(x, y)]).sum())
            .collect();
        let eps = (0..n)
            .filter(|&x| hit_prob[x] > 0.0)
            .map(|x| reach[x] / hit_prob[x])
            .fold(f64::INFINITY, f64::min);
        if eps.is_finite() && eps > 0.0 {
            let residual = (0..n)
                .map(|x| eps * hit_prob[x] - reach[x])
                .fold(f64::NEG_INFINITY, f64::max);
            return Ok((eps, k, residual));
        }
        power *= &step;
    }
    Err(CtmcError::Precondition(format!(
        "no minorization horizon found within {MAX_K} skeleton steps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::{random_rate_matrix, two_state_example, CERTIFICATE_TOL};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn skeleton_kernel_flags_small_delta() {
        let q = two_state_example();
        assert!(q.skeleton_kernel(0.5).unwrap().sub_unit_delta);
        assert!(!q.skeleton_kernel(1.0).unwrap().sub_unit_delta);
        assert!(matches!(
            q.skeleton_kernel(0.0),
            Err(CtmcError::NonpositiveDelta(_))
        ));
    }

    #[test]
    fn skeleton_power_matches_longer_horizon() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random_rate_matrix(4, 0.1, 1.1, &mut rng);
        let delta = 0.7;
        let k = 4;
        let single = q.skeleton_kernel(delta).unwrap().kernel;
        let mut power = single.clone();
        for _ in 1..k {
            power = power.compose(&single).unwrap();
        }
        let direct = q.transition_semigroup(delta * k as f64).unwrap();
        assert!((power.p() - direct.p()).amax() < 1e-10);
    }

    #[test]
    fn f_delta_of_unit_weight_is_delta() {
        let q = two_state_example();
        let f = Weight::ones(2);
        let fd = q.f_delta(&f, 2.5).unwrap();
        assert_abs_diff_eq!(fd[0], 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fd[1], 2.5, epsilon = 1e-12);
    }

    #[test]
    fn f_delta_matches_quadrature() {
        let q = two_state_example();
        let f = Weight::new(vec![1.0, 5.0]).unwrap();
        let delta = 1.3;
        let fd = q.f_delta(&f, delta).unwrap();
        for x in 0..2 {
            let direct = numeric::simpson(
                |t| {
                    let p = numeric::expm(&(q.q() * t));
                    (0..2).map(|j| p[(x, j)] * f.get(j)).sum::<f64>()
                },
                0.0,
                delta,
                2048,
            );
            assert_abs_diff_eq!(fd[x], direct, epsilon = 1e-8);
        }
    }

    #[test]
    fn f_delta_monotone_in_delta() {
        let q = two_state_example();
        let f = Weight::new(vec![1.0, 3.0]).unwrap();
        let small = q.f_delta(&f, 0.5).unwrap();
        let large = q.f_delta(&f, 1.5).unwrap();
        for x in 0..2 {
            assert!(large[x] > small[x]);
            assert!(small[x] >= 0.5);
        }
    }

    #[test]
    fn single_state_return_sum_counts_two_terms() {
        let q = RateMatrix::from_rows(&[vec![0.0]]).unwrap();
        let b = StateSet::new([0], 1).unwrap();
        let f = Weight::ones(1);
        let f_delta = q.f_delta(&f, 1.0).unwrap();
        let g = q.skeleton_hitting_sum(1.0, &f_delta, &b).unwrap();
        // tau = 1, so the sum has the i = 0 and i = 1 terms
        assert_abs_diff_eq!(g[0], 2.0 * f_delta[0], epsilon = 1e-12);
    }

    #[test]
    fn return_sum_dominates_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let q = random_rate_matrix(5, 0.1, 1.0, &mut rng);
        let f = Weight::new((0..5).map(|_| 1.0 + rng.random_range(0.0..2.0)).collect()).unwrap();
        let delta = 1.0;
        let fd = q.f_delta(&f, delta).unwrap();
        let b = StateSet::new([2], 5).unwrap();
        let g = q.skeleton_hitting_sum(delta, &fd, &b).unwrap();
        for x in 0..5 {
            assert!(g[x] >= fd[x] - 1e-12, "state {x}");
        }
    }

    #[test]
    fn return_sum_unreachable_target_errors() {
        let q = RateMatrix::from_rows(&[vec![-1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let b = StateSet::new([0], 2).unwrap();
        let err = q.skeleton_hitting_sum(1.0, &[1.0, 1.0], &b);
        assert!(matches!(err, Err(CtmcError::SingularSystem { .. })));
    }

    #[test]
    fn skeleton_lyapunov_two_state() {
        let q = two_state_example();
        let f = Weight::ones(2);
        let c = StateSet::new([0], 2).unwrap();
        let built = q.construct_skeleton_lyapunov(&f, 1.0, &c).unwrap();
        assert!(built.max_margin <= CERTIFICATE_TOL, "margin {}", built.max_margin);
        // s = 1 on C
        assert_abs_diff_eq!(built.hit_prob[0], 1.0, epsilon = 1e-12);
        assert!(built.hit_prob[1] > 0.0 && built.hit_prob[1] <= 1.0);
        assert!(built.sup_gap_r0.is_finite());
        assert!(built.sup_gap_r1.is_finite());
        assert!(built.minorization_epsilon > 0.0);
        assert!(built.minorization_residual <= 1e-10);
    }

    #[test]
    fn skeleton_lyapunov_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let n = rng.random_range(2..=7);
            let q = random_rate_matrix(n, 0.1, 1.1, &mut rng);
            let f =
                Weight::new((0..n).map(|_| 1.0 + rng.random_range(0.0..3.0)).collect()).unwrap();
            let c_size = rng.random_range(1..=n);
            let c = StateSet::new(0..c_size, n).unwrap();
            let delta = rng.random_range(0.5..2.0);
            let built = q.construct_skeleton_lyapunov(&f, delta, &c).unwrap();
            assert!(
                built.max_margin <= CERTIFICATE_TOL,
                "margin {} at n = {n}",
                built.max_margin
            );
            assert!(built.minorization_epsilon > 0.0);
            assert!(built.minorization_residual <= 1e-10);
        }
    }

    #[test]
    fn skeleton_lyapunov_matches_mc_return_sum() {
        // Monte Carlo check of the return-sum system on the sampled chain
        let q = two_state_example();
        let f = Weight::ones(2);
        let delta = 1.0;
        let fd = q.f_delta(&f, delta).unwrap();
        let b = StateSet::new([0], 2).unwrap();
        let exact = q.skeleton_hitting_sum(delta, &fd, &b).unwrap();

        let kernel = q.skeleton_kernel(delta).unwrap().kernel;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n_paths = 40_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n_paths {
            let mut x = 1usize;
            let mut acc = fd[x];
            loop {
                let u: f64 = rng.random_range(0.0..1.0);
                let mut cdf = 0.0;
                let mut next = 0usize;
                for j in 0..2 {
                    cdf += kernel.p()[(x, j)];
                    if u <= cdf {
                        next = j;
                        break;
                    }
                }
                acc += fd[next];
                x = next;
                if b.contains(x) {
                    break;
                }
            }
            sum += acc;
            sumsq += acc * acc;
        }
        let mean = sum / n_paths as f64;
        let var = (sumsq / n_paths as f64 - mean * mean).max(0.0);
        let se = (var / n_paths as f64).sqrt();
        assert!(
            (mean - exact[1]).abs() <= 3.0 * se + 1e-9,
            "mc {mean} vs exact {} (se {se})",
            exact[1]
        );
    }
}
