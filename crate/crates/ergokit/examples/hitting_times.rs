//! Hitting-time functionals on a three-state chain, evaluated two ways:
//! exactly by a linear solve, and by simulating jump paths. The Monte Carlo
//! estimate lands within a few standard errors of the exact value.
//!
//! ```bash
//! cargo run --example hitting_times
//! ```

use ergokit::ctmc::{mc_hitting_functional, mc_lyapunov};
use ergokit::measures::{StateSet, Weight};
use ergokit::RateMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = RateMatrix::from_rows(&[
        vec![-1.3, 0.9, 0.4],
        vec![0.2, -0.7, 0.5],
        vec![1.1, 0.6, -1.7],
    ])?;
    let f = Weight::new(vec![1.0, 2.0, 1.5])?;
    let target = StateSet::new([0], 3)?;

    println!("weighted time to reach state 0 (f-weighted, delay r):");
    for &r in &[0.0, 0.5, 1.0] {
        let exact = q.hitting_functional(&f, &target, r)?;
        println!(
            "  r = {r:3.1}:  G = ({:.5}, {:.5}, {:.5})",
            exact[0], exact[1], exact[2]
        );
    }

    let n_paths = 50_000;
    let exact = q.hitting_functional(&f, &target, 0.0)?;
    let estimate = mc_hitting_functional(&q, &f, &target, 0.0, 2, n_paths, 1e3, 7)?;
    println!(
        "\nMonte Carlo from state 2 ({n_paths} paths): {:.5} +/- {:.5}  (exact {:.5})",
        estimate.mean, estimate.std_error, exact[2]
    );
    println!(
        "difference in standard errors: {:.2}",
        (estimate.mean - exact[2]).abs() / estimate.std_error
    );

    // the exponential-clock construction estimates the resolvent Lyapunov
    // function; the exact value is (R_{1_C} f)(x)
    let cert = q.lyapunov_from_resolvent(&f, &target)?;
    let clock = mc_lyapunov(&q, &f, &target, 2, n_paths, 1e3, 8)?;
    println!(
        "\nexponential-clock estimate of V(2): {:.5} +/- {:.5}  (exact {:.5})",
        clock.mean, clock.std_error, cert.v[2]
    );
    Ok(())
}
