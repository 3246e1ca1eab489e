//! Drift certificates: the data `(V, f, C, b, delta)` asserting the
//! inequality `QV <= -delta f + b 1_C`, and their validation.

use crate::measures::{StateSet, Weight};

use super::{CtmcError, RateMatrix, CERTIFICATE_TOL};

/// A Lyapunov drift certificate. `v` may contain `+inf` entries but must be
/// finite and positive somewhere; validity is only required where `v` is
/// finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftCertificate {
    pub v: Vec<f64>,
    pub f: Weight,
    pub c: StateSet,
    pub b: f64,
    pub delta: f64,
}

impl DriftCertificate {
    pub fn new(
        v: Vec<f64>,
        f: Weight,
        c: StateSet,
        b: f64,
        delta: f64,
    ) -> Result<Self, CtmcError> {
        if v.len() != f.len() || v.len() != c.n() {
            return Err(CtmcError::DimensionMismatch {
                expected: v.len(),
                got: f.len().max(c.n()),
            });
        }
        if !v.iter().any(|x| x.is_finite()) {
            return Err(CtmcError::Precondition(
                "V must be finite at at least one state".into(),
            ));
        }
        for (i, &x) in v.iter().enumerate() {
            if x.is_nan() || x <= 0.0 {
                return Err(CtmcError::Precondition(format!(
                    "V must take values in (0, inf], got {x} at state {i}"
                )));
            }
        }
        if !b.is_finite() {
            return Err(CtmcError::Precondition(format!("b must be finite, got {b}")));
        }
        if !(delta > 0.0) {
            return Err(CtmcError::Precondition(format!(
                "delta must be positive, got {delta}"
            )));
        }
        Ok(Self { v, f, c, b, delta })
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }
}

/// Per-state drift margins `(QV)(x) + delta f(x) - b 1_C(x)`. Entries are
/// `None` where `V` is infinite (the inequality is not required there).
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateMargins {
    pub margins: Vec<Option<f64>>,
    pub max_margin: f64,
    pub valid: bool,
    pub tolerance: f64,
}

impl RateMatrix {
    /// Converse construction: `V = R_{1_C} f` solves `QV = -f + 1_C V`
    /// exactly, so `(V, f, C, b, 1)` with `b = max_{x in C} V(x)` is a valid
    /// certificate whenever `C` is nonempty and reachable.
    pub fn lyapunov_from_resolvent(
        &self,
        f: &Weight,
        c: &StateSet,
    ) -> Result<DriftCertificate, CtmcError> {
        if f.len() != self.n() {
            return Err(CtmcError::DimensionMismatch {
                expected: self.n(),
                got: f.len(),
            });
        }
        if c.n() != self.n() {
            return Err(CtmcError::DimensionMismatch {
                expected: self.n(),
                got: c.n(),
            });
        }
        if c.is_empty() {
            return Err(CtmcError::EmptySet);
        }
        let rh = self.generalized_resolvent(&c.indicator())?;
        let v: Vec<f64> = (0..self.n())
            .map(|i| (0..self.n()).map(|j| rh[(i, j)] * f.get(j)).sum())
            .collect();
        let b = c.iter().map(|x| v[x]).fold(f64::NEG_INFINITY, f64::max);
        DriftCertificate::new(v, f.clone(), c.clone(), b, 1.0)
    }

    /// Max-norm residual of the exact identity `QV + f - 1_C V = 0` for
    /// `V = R_{1_C} f`.
    pub fn drift_identity_residual(&self, f: &Weight, c: &StateSet) -> Result<f64, CtmcError> {
        let cert = self.lyapunov_from_resolvent(f, c)?;
        let qv = self.apply(&cert.v)?;
        let mut worst = 0.0f64;
        for x in 0..self.n() {
            let indicator = if c.contains(x) { 1.0 } else { 0.0 };
            let residual = qv[x] + f.get(x) - indicator * cert.v[x];
            worst = worst.max(residual.abs());
        }
        Ok(worst)
    }

    /// Evaluates the margins `(QV)(x) + delta f(x) - b 1_C(x)` wherever `V`
    /// is finite. Errors if an infinite-`V` state is reachable at positive
    /// rate from a finite-`V` state, which makes `QV` meaningless there.
    pub fn validate_certificate(
        &self,
        cert: &DriftCertificate,
    ) -> Result<CertificateMargins, CtmcError> {
        if cert.n() != self.n() {
            return Err(CtmcError::DimensionMismatch {
                expected: self.n(),
                got: cert.n(),
            });
        }
        let n = self.n();
        for x in 0..n {
            if !cert.v[x].is_finite() {
                continue;
            }
            for y in 0..n {
                if y != x && !cert.v[y].is_finite() && self.rate(x, y) > 0.0 {
                    return Err(CtmcError::MalformedCertificate {
                        state: y,
                        from: x,
                        rate: self.rate(x, y),
                    });
                }
            }
        }
        let mut margins = vec![None; n];
        let mut max_margin = f64::NEG_INFINITY;
        for x in 0..n {
            if !cert.v[x].is_finite() {
                continue;
            }
            let qv: f64 = (0..n)
                .filter(|&y| cert.v[y].is_finite())
                .map(|y| self.rate(x, y) * cert.v[y])
                .sum();
            let indicator = if cert.c.contains(x) { 1.0 } else { 0.0 };
            let m = qv + cert.delta * cert.f.get(x) - cert.b * indicator;
            margins[x] = Some(m);
            max_margin = max_margin.max(m);
        }
        Ok(CertificateMargins {
            margins,
            max_margin,
            valid: max_margin <= CERTIFICATE_TOL,
            tolerance: CERTIFICATE_TOL,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::two_state_example;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn converse_construction_two_state() {
        let q = two_state_example();
        let f = Weight::ones(2);
        let c = StateSet::new([0], 2).unwrap();
        let cert = q.lyapunov_from_resolvent(&f, &c).unwrap();
        assert_abs_diff_eq!(cert.v[0], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(cert.v[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cert.b, 1.5, epsilon = 1e-12);
        // QV = -f + 1_C V: (0.5, -1)
        let qv = q.apply(&cert.v).unwrap();
        assert_abs_diff_eq!(qv[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(qv[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn converse_with_full_set_is_unit_resolvent() {
        let q = two_state_example();
        let f = Weight::ones(2);
        let cert = q
            .lyapunov_from_resolvent(&f, &StateSet::full(2))
            .unwrap();
        // R_1 applied to 1 is 1
        assert_abs_diff_eq!(cert.v[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cert.v[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn drift_identity_on_random_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let n = rng.random_range(2..=8);
            let q = crate::ctmc::random_rate_matrix(n, 0.1, 1.1, &mut rng);
            let f = Weight::new((0..n).map(|_| 1.0 + rng.random_range(0.0..4.0)).collect())
                .unwrap();
            let c_size = rng.random_range(1..=n);
            let c = StateSet::new(0..c_size, n).unwrap();
            let residual = q.drift_identity_residual(&f, &c).unwrap();
            assert!(residual <= 1e-10, "residual {residual}");
        }
    }

    #[test]
    fn constructed_certificate_validates() {
        let q = two_state_example();
        let f = Weight::ones(2);
        let c = StateSet::new([0], 2).unwrap();
        let cert = q.lyapunov_from_resolvent(&f, &c).unwrap();
        let margins = q.validate_certificate(&cert).unwrap();
        assert!(margins.valid, "max margin {}", margins.max_margin);
        assert!(margins.max_margin <= 1e-10);
    }

    #[test]
    fn constant_v_fails_off_c() {
        // QV = 0 for constant V, so the margin equals delta f > 0 off C when b = 0
        let q = two_state_example();
        let f = Weight::ones(2);
        let c = StateSet::new([0], 2).unwrap();
        let cert = DriftCertificate::new(vec![5.0, 5.0], f, c, 0.0, 1.0).unwrap();
        let margins = q.validate_certificate(&cert).unwrap();
        assert!(!margins.valid);
        assert_abs_diff_eq!(margins.margins[1].unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn scaling_preserves_verdict() {
        let q = two_state_example();
        let c = StateSet::new([0], 2).unwrap();
        let f = Weight::ones(2);
        let cert = q.lyapunov_from_resolvent(&f, &c).unwrap();
        let scaled = DriftCertificate::new(
            cert.v.iter().map(|v| 2.0 * v).collect(),
            Weight::new(cert.f.values().iter().map(|v| 2.0 * v).collect()).unwrap(),
            cert.c.clone(),
            2.0 * cert.b,
            cert.delta,
        )
        .unwrap();
        let before = q.validate_certificate(&cert).unwrap();
        let after = q.validate_certificate(&scaled).unwrap();
        assert_eq!(before.valid, after.valid);
    }

    #[test]
    fn infinite_v_reachable_from_finite_is_malformed() {
        let q = two_state_example();
        let f = Weight::ones(2);
        let c = StateSet::new([0], 2).unwrap();
        let cert = DriftCertificate::new(vec![1.0, f64::INFINITY], f, c, 1.0, 1.0).unwrap();
        assert!(matches!(
            q.validate_certificate(&cert),
            Err(CtmcError::MalformedCertificate { state: 1, from: 0, .. })
        ));
    }

    #[test]
    fn infinite_v_allowed_when_unreachable() {
        // 0 -> 1 only; V infinite at 0 is fine since nothing finite feeds it
        let q = crate::ctmc::RateMatrix::from_rows(&[vec![-1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let f = Weight::ones(2);
        let c = StateSet::new([1], 2).unwrap();
        let cert = DriftCertificate::new(vec![f64::INFINITY, 1.0], f, c, 2.0, 1.0).unwrap();
        let margins = q.validate_certificate(&cert).unwrap();
        assert!(margins.margins[0].is_none());
        assert!(margins.margins[1].is_some());
        assert!(margins.valid);
    }

    #[test]
    fn certificate_requires_finite_somewhere() {
        let f = Weight::ones(2);
        let c = StateSet::new([0], 2).unwrap();
        let err = DriftCertificate::new(vec![f64::INFINITY, f64::INFINITY], f, c, 1.0, 1.0);
        assert!(err.is_err());
    }
}
