//! The worked two-state chain `Q = [[-1, 1], [2, -2]]`: every quantity the
//! toolkit computes has a closed form here, so this example doubles as a
//! sanity check.
//!
//! ```bash
//! cargo run --example two_state_chain
//! ```

use ergokit::ctmc::two_state_example;
use ergokit::measures::{StateSet, Weight};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = two_state_example();
    let f = Weight::ones(2);

    let pi = q.stationary_distribution()?;
    println!("stationary distribution: ({:.6}, {:.6})   [exact: 2/3, 1/3]", pi[0], pi[1]);

    let p1 = q.transition_semigroup(1.0)?;
    println!(
        "P^1 row 0: ({:.6}, {:.6})   [exact: 2/3 + e^-3/3, 1/3 - e^-3/3]",
        p1.p()[(0, 0)],
        p1.p()[(0, 1)]
    );

    let r = q.resolvent(1.0)?;
    println!(
        "unit resolvent: [[{:.4}, {:.4}], [{:.4}, {:.4}]]   [exact: (1/4)[[3,1],[2,2]]]",
        r[(0, 0)],
        r[(0, 1)],
        r[(1, 0)],
        r[(1, 1)]
    );

    let c = StateSet::new([0], 2)?;
    let cert = q.lyapunov_from_resolvent(&f, &c)?;
    println!(
        "Lyapunov function from the resolvent: V = ({:.4}, {:.4}), b = {:.4}   [exact: 1.5, 2, 1.5]",
        cert.v[0], cert.v[1], cert.b
    );
    let margins = q.validate_certificate(&cert)?;
    println!(
        "drift margins: max {:.3e} (valid: {})",
        margins.max_margin, margins.valid
    );

    println!("\nconvergence to stationarity (exact: (2/3) e^(-3t)):");
    let grid: Vec<f64> = (0..=6).map(|k| k as f64 * 0.5).collect();
    let curve = q.fnorm_decay_curve(&f, 0, &grid)?;
    for (t, tv) in curve.times.iter().zip(&curve.tv) {
        println!("  t = {t:4.1}   ||P^t(0,.) - pi||_1 = {tv:.8}");
    }
    println!("non-increasing: {}", curve.tv_non_increasing);

    let minorization = q.minorization_certificate(&StateSet::full(2), 1.0)?;
    println!(
        "\nminorization of the whole space at T = 1: epsilon = {:.6}   [exact: 1 - e^-3 = {:.6}]",
        minorization.epsilon,
        1.0 - (-3.0f64).exp()
    );
    Ok(())
}
