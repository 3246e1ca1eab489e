//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//! Tolerances are pinned here and match the library's published constants:
//! 1e-10 for algebraic identities, 1e-6 for quadrature cross-checks, three
//! standard errors for Monte Carlo.

use ergokit::analysis::equivalence_suite;
use ergokit::ctmc::{
    self, mc_hitting_functional, mc_lyapunov, random_rate_matrix, two_state_example,
};
use ergokit::diffusion::{
    drift_condition_check, ergodic_average, generator_apply, grid_1d, FieldCertificate,
};
use ergokit::measures::{SignedMeasure, StateSet, Weight};
use ergokit::{DiffusionModel, RateMatrix, Region, ScalarField};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const IDENTITY_TOL: f64 = 1e-10;
const QUADRATURE_TOL: f64 = 1e-6;
const CLOSED_FORM_TOL: f64 = 1e-8;
const SKELETON_MARGIN_TOL: f64 = 1e-9;

fn criterion(number: u32, description: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("[acceptance] criterion {number:2}: PASS - {description}"),
        Err(message) => {
            println!("[acceptance] criterion {number:2}: FAIL - {description}: {message}");
            panic!("criterion {number} failed: {message}");
        }
    }
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

/// The shared random instance set used by criteria 1-3.
fn random_instances(count: usize) -> Vec<(RateMatrix, Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE60);
    (0..count)
        .map(|_| {
            let n = rng.random_range(2..=8);
            let q = random_rate_matrix(n, 0.05, 1.05, &mut rng);
            let h: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let g: Vec<f64> = h.iter().map(|v| v + rng.random_range(0.0..1.0)).collect();
            (q, g, h)
        })
        .collect()
}

#[test]
fn criterion_01_resolvent_equation() {
    criterion(
        1,
        "resolvent equation residual <= 1e-10 on 100 random chains",
        || {
            for (i, (q, g, h)) in random_instances(100).iter().enumerate() {
                let residual = q
                    .resolvent_equation_residual(g, h)
                    .map_err(|e| e.to_string())?;
                ensure!(
                    residual <= IDENTITY_TOL,
                    "instance {i}: residual {residual}"
                );
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_02_drift_identity() {
    criterion(
        2,
        "drift identity residual <= 1e-10 on 100 random (Q, f, C)",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(0xE61);
            for i in 0..100 {
                let n = rng.random_range(2..=8);
                let q = random_rate_matrix(n, 0.05, 1.05, &mut rng);
                let f = Weight::new((0..n).map(|_| 1.0 + rng.random_range(0.0..4.0)).collect())
                    .map_err(|e| e.to_string())?;
                let c_size = rng.random_range(1..=n);
                let c = StateSet::new(0..c_size, n).map_err(|e| e.to_string())?;
                let residual = q.drift_identity_residual(&f, &c).map_err(|e| e.to_string())?;
                ensure!(
                    residual <= IDENTITY_TOL,
                    "instance {i}: residual {residual}"
                );
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_03_generator_resolvent_identity() {
    criterion(
        3,
        "generator-of-resolvent residual <= 1e-10 on the same instances",
        || {
            for (i, (q, g, _)) in random_instances(100).iter().enumerate() {
                let residual = q.generator_resolvent_residual(g).map_err(|e| e.to_string())?;
                ensure!(
                    residual <= IDENTITY_TOL,
                    "instance {i}: residual {residual}"
                );
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_04_two_state_closed_forms() {
    criterion(4, "two-state chain closed forms to 1e-8", || {
        let q = two_state_example();
        let f = Weight::ones(2);

        let r = q.resolvent(1.0).map_err(|e| e.to_string())?;
        let expected_r = [[0.75, 0.25], [0.5, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                ensure!(
                    (r[(i, j)] - expected_r[i][j]).abs() <= CLOSED_FORM_TOL,
                    "R1[({i},{j})] = {}",
                    r[(i, j)]
                );
            }
        }

        let c = StateSet::new([0], 2).map_err(|e| e.to_string())?;
        let cert = q.lyapunov_from_resolvent(&f, &c).map_err(|e| e.to_string())?;
        ensure!(
            (cert.v[0] - 1.5).abs() <= CLOSED_FORM_TOL && (cert.v[1] - 2.0).abs() <= CLOSED_FORM_TOL,
            "V = {:?}",
            cert.v
        );

        let pi = q.stationary_distribution().map_err(|e| e.to_string())?;
        ensure!(
            (pi[0] - 2.0 / 3.0).abs() <= CLOSED_FORM_TOL && (pi[1] - 1.0 / 3.0).abs() <= CLOSED_FORM_TOL,
            "pi = {pi:?}"
        );

        let grid: Vec<f64> = (0..=60).map(|k| k as f64 * 0.1).collect();
        let curve = q.fnorm_decay_curve(&f, 0, &grid).map_err(|e| e.to_string())?;
        for (k, &t) in grid.iter().enumerate() {
            let expected = 2.0 / 3.0 * (-3.0 * t).exp();
            ensure!(
                (curve.tv[k] - expected).abs() <= CLOSED_FORM_TOL,
                "decay at t = {t}: {} vs {expected}",
                curve.tv[k]
            );
        }

        let bounds = q
            .theorem2_bound(&f, &cert.v, 12.0, &[(0, 1)])
            .map_err(|e| e.to_string())?;
        let integral = bounds.stations[0].integral + bounds.stations[0].tail;
        ensure!(
            (integral - 2.0 / 9.0).abs() <= QUADRATURE_TOL,
            "integral of the decay curve: {integral} vs 2/9"
        );
        Ok(())
    });
}

#[test]
fn criterion_05_norm_inequality() {
    criterion(
        5,
        "sampled-chain norm dominates the interval integral (Lemma-style inequality)",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(0xE62);
            for i in 0..100 {
                let n = rng.random_range(2..=6);
                let q = random_rate_matrix(n, 0.1, 1.1, &mut rng);
                let f = Weight::new((0..n).map(|_| 1.0 + rng.random_range(0.0..3.0)).collect())
                    .map_err(|e| e.to_string())?;
                let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let mean = raw.iter().sum::<f64>() / n as f64;
                let mu = SignedMeasure::new(raw.iter().map(|v| v - mean).collect());
                let check = q.norm_equiv_check(&mu, &f, 1.0).map_err(|e| e.to_string())?;
                ensure!(
                    check.lhs >= check.rhs - QUADRATURE_TOL,
                    "instance {i}: lhs {} < rhs {} - tol",
                    check.lhs,
                    check.rhs
                );
            }
            // equality without cancellation
            for i in 0..20 {
                let n = rng.random_range(2..=6);
                let q = random_rate_matrix(n, 0.1, 1.1, &mut rng);
                let f = Weight::new((0..n).map(|_| 1.0 + rng.random_range(0.0..3.0)).collect())
                    .map_err(|e| e.to_string())?;
                let mu = SignedMeasure::new((0..n).map(|_| rng.random_range(0.0..1.0)).collect());
                let check = q.norm_equiv_check(&mu, &f, 1.0).map_err(|e| e.to_string())?;
                ensure!(
                    (check.lhs - check.rhs).abs() <= QUADRATURE_TOL,
                    "nonnegative instance {i}: lhs {} vs rhs {}",
                    check.lhs,
                    check.rhs
                );
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_06_integral_bounds_and_skeleton_sums() {
    criterion(
        6,
        "integral bounds finite and dominated by unit-interval skeleton sums",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(0xE63);
            for i in 0..20 {
                let n = rng.random_range(2..=6);
                let q = random_rate_matrix(n, 0.1, 1.1, &mut rng);
                let f = Weight::new((0..n).map(|_| 1.0 + rng.random_range(0.0..2.0)).collect())
                    .map_err(|e| e.to_string())?;
                let c = StateSet::new(0..rng.random_range(1..=n), n).map_err(|e| e.to_string())?;
                let cert = q.lyapunov_from_resolvent(&f, &c).map_err(|e| e.to_string())?;
                let pair = (0, n - 1);
                let bounds = q
                    .theorem2_bound(&f, &cert.v, 15.0, &[pair])
                    .map_err(|e| e.to_string())?;
                ensure!(
                    bounds.b0_estimate.is_finite() && bounds.b_estimate.is_finite(),
                    "instance {i}: ratios not finite"
                );

                let sums = q
                    .skeleton_pair_sum(&f, 1.0, pair.0, pair.1)
                    .map_err(|e| e.to_string())?;
                ensure!(
                    sums.sum >= sums.matched_integral - sums.quadrature_error - 1e-9,
                    "instance {i}: pair sum {} < matched integral {}",
                    sums.sum,
                    sums.matched_integral
                );
                let station = q.skeleton_station_sum(&f, 1.0, 0).map_err(|e| e.to_string())?;
                ensure!(
                    station.sum >= station.matched_integral - station.quadrature_error - 1e-9,
                    "instance {i}: station sum {} < matched integral {}",
                    station.sum,
                    station.matched_integral
                );
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_07_skeleton_construction() {
    criterion(
        7,
        "skeleton Lyapunov margins <= 1e-9 and minorization certified on 20 instances",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(0xE64);
            for i in 0..20 {
                let n = rng.random_range(2..=7);
                let q = random_rate_matrix(n, 0.1, 1.1, &mut rng);
                let f = Weight::new((0..n).map(|_| 1.0 + rng.random_range(0.0..3.0)).collect())
                    .map_err(|e| e.to_string())?;
                let c = StateSet::new(0..rng.random_range(1..=n), n).map_err(|e| e.to_string())?;
                let delta = rng.random_range(0.5..2.0);
                let built = q
                    .construct_skeleton_lyapunov(&f, delta, &c)
                    .map_err(|e| e.to_string())?;
                ensure!(
                    built.max_margin <= SKELETON_MARGIN_TOL,
                    "instance {i}: margin {}",
                    built.max_margin
                );
                ensure!(
                    built.minorization_epsilon > 0.0,
                    "instance {i}: epsilon0 = {}",
                    built.minorization_epsilon
                );
                ensure!(
                    built.minorization_residual <= IDENTITY_TOL,
                    "instance {i}: minorization residual {}",
                    built.minorization_residual
                );
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_08_monte_carlo_vs_oracle() {
    criterion(
        8,
        "path-simulated hitting and clock values match linear algebra within 3 SE",
        || {
            let q = RateMatrix::from_rows(&[
                vec![-1.3, 0.9, 0.4],
                vec![0.2, -0.7, 0.5],
                vec![1.1, 0.6, -1.7],
            ])
            .map_err(|e| e.to_string())?;
            let f = Weight::new(vec![1.0, 2.0, 1.5]).map_err(|e| e.to_string())?;
            let c = StateSet::new([0], 3).map_err(|e| e.to_string())?;
            let n_paths = 100_000;

            for &r in &[0.0, 0.7] {
                let exact = q.hitting_functional(&f, &c, r).map_err(|e| e.to_string())?;
                let est = mc_hitting_functional(&q, &f, &c, r, 2, n_paths, 1e3, 0xE65)
                    .map_err(|e| e.to_string())?;
                ensure!(est.censored == 0, "censored paths at r = {r}");
                ensure!(
                    (est.mean - exact[2]).abs() <= 3.0 * est.std_error,
                    "hitting r = {r}: mc {} vs exact {} (se {})",
                    est.mean,
                    exact[2],
                    est.std_error
                );
            }

            let cert = q.lyapunov_from_resolvent(&f, &c).map_err(|e| e.to_string())?;
            let est = mc_lyapunov(&q, &f, &c, 2, n_paths, 1e3, 0xE66).map_err(|e| e.to_string())?;
            ensure!(
                (est.mean - cert.v[2]).abs() <= 3.0 * est.std_error,
                "clock value: mc {} vs exact {} (se {})",
                est.mean,
                cert.v[2],
                est.std_error
            );
            Ok(())
        },
    );
}

#[test]
fn criterion_09_ou_diffusion() {
    criterion(
        9,
        "OU certificate, ergodic second moment, and Richardson ratio",
        || {
            let model = DiffusionModel::ou();
            let cert = FieldCertificate {
                v: ScalarField::from_fn(1, |x| x[0] * x[0]),
                f: ScalarField::from_fn(1, |x| x[0] * x[0] + 1.0),
                c: Region::interval(-(3.0f64.sqrt()), 3.0f64.sqrt()),
                b: 3.0,
                delta: 1.0,
            };
            let grid = grid_1d(-10.0, 10.0, 0.01);
            let report =
                drift_condition_check(&model, &cert, &grid, None).map_err(|e| e.to_string())?;
            ensure!(
                report.valid,
                "certificate margin {} at {:?}",
                report.max_margin,
                report.worst_point
            );

            let square = ScalarField::from_fn(1, |x| x[0] * x[0]);
            let average = ergodic_average(&model, &square, &[0.0], 1e4, 1e-2, 100.0, 0xE67)
                .map_err(|e| e.to_string())?;
            ensure!(
                (average.mean - 1.0).abs() <= 3.0 * average.std_error,
                "ergodic average {} (se {})",
                average.mean,
                average.std_error
            );

            let h = ScalarField::from_fn(1, |x| x[0].exp());
            let x = [0.7f64];
            let exact = x[0].exp() * (1.0 - x[0]);
            let coarse =
                (generator_apply(&model, &h, &x, Some(1e-2)).map_err(|e| e.to_string())? - exact)
                    .abs();
            let fine =
                (generator_apply(&model, &h, &x, Some(5e-3)).map_err(|e| e.to_string())? - exact)
                    .abs();
            let ratio = coarse / fine;
            ensure!(
                (3.5..=4.5).contains(&ratio),
                "Richardson ratio {ratio} outside 4 +/- 0.5"
            );
            Ok(())
        },
    );
}

#[test]
fn criterion_10_monotone_tv_decay() {
    criterion(10, "total variation decay non-increasing on all grids", || {
        let grid: Vec<f64> = (0..=50).map(|k| k as f64 * 0.15).collect();
        let two_state = two_state_example();
        let f = Weight::ones(2);
        let curve = two_state
            .fnorm_decay_curve(&f, 0, &grid)
            .map_err(|e| e.to_string())?;
        ensure!(curve.tv_non_increasing, "two-state curve increased");

        let mut rng = ChaCha8Rng::seed_from_u64(0xE68);
        for i in 0..20 {
            let n = rng.random_range(2..=7);
            let q = random_rate_matrix(n, 0.05, 1.2, &mut rng);
            let f = Weight::ones(n);
            for x in 0..n {
                let curve = q.fnorm_decay_curve(&f, x, &grid).map_err(|e| e.to_string())?;
                ensure!(
                    curve.tv_non_increasing,
                    "instance {i}, state {x}: TV curve increased"
                );
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_11_deterministic_outputs() {
    criterion(
        11,
        "identical config and seed give byte-identical CSV/JSON artifacts",
        || {
            let bin = env!("CARGO_BIN_EXE_ergokit");
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let decay_config = dir.path().join("decay.json");
            std::fs::write(
                &decay_config,
                r#"{
                    "kind": "ctmc",
                    "rates": [[-1.0, 1.0], [2.0, -2.0]],
                    "set_c": [0],
                    "params": {"state": 0, "t_grid": [0.0, 0.5, 1.0, 1.5, 2.0], "seed": 7}
                }"#,
            )
            .map_err(|e| e.to_string())?;
            let mc_config = dir.path().join("hitting.json");
            std::fs::write(
                &mc_config,
                r#"{
                    "kind": "diffusion",
                    "builtin": "ou",
                    "f": "x1^2 + 1",
                    "set_b": {"lo": [-0.5], "hi": [0.5]},
                    "params": {"x0": [2.0], "n_paths": 400, "dt": 0.01, "t_cap": 100.0, "seed": 9}
                }"#,
            )
            .map_err(|e| e.to_string())?;

            let runs = [
                ("decay", &decay_config, "decay_report.json", Some("decay_curve.csv")),
                ("hitting", &mc_config, "hitting_report.json", None),
            ];
            for (sub, config, report_name, curve_name) in runs {
                let mut artifacts: Vec<Vec<u8>> = Vec::new();
                for attempt in 0..2 {
                    let out = dir.path().join(format!("{sub}_out{attempt}"));
                    let status = std::process::Command::new(bin)
                        .args([
                            sub,
                            "--config",
                            config.to_str().unwrap(),
                            "--out",
                            out.to_str().unwrap(),
                            "--quiet",
                        ])
                        .status()
                        .map_err(|e| e.to_string())?;
                    ensure!(status.success(), "{sub} run {attempt} exited {status}");
                    let mut bundle =
                        std::fs::read(out.join(report_name)).map_err(|e| e.to_string())?;
                    if let Some(curve) = curve_name {
                        bundle.extend(std::fs::read(out.join(curve)).map_err(|e| e.to_string())?);
                    }
                    artifacts.push(bundle);
                }
                ensure!(
                    artifacts[0] == artifacts[1],
                    "{sub}: artifacts differ between identical runs"
                );
            }
            Ok(())
        },
    );
}

/// The first-class suites should pass out of the box on the worked example;
/// kept here as a smoke check that the acceptance instances and the
/// experiment reports agree.
#[test]
fn equivalence_suite_self_test() {
    let q = two_state_example();
    let f = Weight::new(vec![1.0, 4.0]).unwrap();
    let c = StateSet::new([0], 2).unwrap();
    let report = equivalence_suite(&q, &f, &c).unwrap();
    assert!(
        report.passed,
        "failed: {:?}",
        report.failed_checks().collect::<Vec<_>>()
    );
    let _ = ctmc::QUADRATURE_TOL;
}
