//! The Ornstein-Uhlenbeck model end to end: generator evaluation against
//! the closed form, a drift certificate checked on a grid, path simulation,
//! Monte Carlo hitting and Lyapunov estimates, and the ergodic average of
//! the second moment (stationary law is standard normal).
//!
//! ```bash
//! cargo run --release --example ou_diffusion
//! ```

use ergokit::diffusion::{
    drift_condition_check, ergodic_average, generator_apply, grid_1d, mc_hitting_functional,
    mc_lyapunov, simulate_path, FieldCertificate, McConfig,
};
use ergokit::{DiffusionModel, Region, ScalarField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = DiffusionModel::ou();

    // D(x^2) = -2x^2 + 2 for u = -x, Sigma = 2
    let square = ScalarField::from_fn(1, |x| x[0] * x[0]);
    for &x in &[-1.0, 0.0, 1.5] {
        let value = generator_apply(&model, &square, &[x], None)?;
        println!("D(x^2) at {x:>4}: {value:>9.5}   [exact {:>9.5}]", -2.0 * x * x + 2.0);
    }

    let cert = FieldCertificate {
        v: ScalarField::from_fn(1, |x| x[0] * x[0]),
        f: ScalarField::from_fn(1, |x| x[0] * x[0] + 1.0),
        c: Region::interval(-(3.0f64.sqrt()), 3.0f64.sqrt()),
        b: 3.0,
        delta: 1.0,
    };
    let report = drift_condition_check(&model, &cert, &grid_1d(-10.0, 10.0, 0.01), None)?;
    println!(
        "\ndrift condition on [-10, 10]: max margin {:.3e} at x = {:.2} => valid = {}",
        report.max_margin, report.worst_point[0], report.valid
    );

    let path = simulate_path(&model, &[2.0], 0.01, 5.0, 42, Some(&cert.c))?;
    println!(
        "\nsample path from x0 = 2: {} steps, final state {:.4}, occupation of C = {:.4}",
        path.times.len() - 1,
        path.states.last().unwrap()[0],
        path.occupation.last().unwrap()
    );

    let mc = McConfig {
        n_paths: 20_000,
        dt: 0.01,
        t_cap: 500.0,
        seed: 11,
    };
    let f = ScalarField::from_fn(1, |x| x[0] * x[0] + 1.0);
    let hit = mc_hitting_functional(&model, &f, &cert.c, 0.0, &[2.0], &mc)?;
    println!(
        "\nhitting functional from 2.0 into C: {:.4} +/- {:.4} ({} censored)",
        hit.mean, hit.std_error, hit.censored
    );
    let clock = mc_lyapunov(&model, &f, &cert.c, &[2.0], &mc)?;
    println!(
        "exponential-clock Lyapunov estimate:  {:.4} +/- {:.4} (always >= the hitting value)",
        clock.mean, clock.std_error
    );

    let average = ergodic_average(&model, &square, &[0.0], 5_000.0, 0.01, 50.0, 12)?;
    println!(
        "\nergodic average of x^2 over T = 5000: {:.4} +/- {:.4}   [stationary value 1]",
        average.mean, average.std_error
    );

    // the double-well drift is also built in
    let well = DiffusionModel::double_well();
    let well_avg = ergodic_average(&well, &square, &[1.0], 2_000.0, 0.01, 50.0, 13)?;
    println!(
        "double-well second moment estimate:   {:.4} +/- {:.4}",
        well_avg.mean, well_avg.std_error
    );
    Ok(())
}
