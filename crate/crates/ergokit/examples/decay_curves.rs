//! Weighted-norm decay curves toward stationarity, and the norm inequality
//! tying the sampled chain's norm to the time-integrated one.
//!
//! ```bash
//! cargo run --example decay_curves
//! ```

use ergokit::ctmc::random_rate_matrix;
use ergokit::measures::{SignedMeasure, Weight};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 4;
    let q = random_rate_matrix(n, 0.1, 0.9, &mut rng);
    let f = Weight::new(vec![1.0, 3.0, 2.0, 1.5])?;

    let grid: Vec<f64> = (0..=16).map(|k| k as f64 * 0.4).collect();
    let curve = q.fnorm_decay_curve(&f, 0, &grid)?;
    println!("{:>6} {:>14} {:>14}", "t", "f-norm", "total variation");
    for ((t, fv), tv) in curve.times.iter().zip(&curve.f_norms).zip(&curve.tv) {
        println!("{t:>6.2} {fv:>14.8} {tv:>14.8}");
    }
    println!("TV curve non-increasing: {}", curve.tv_non_increasing);

    // the f_Delta norm of a signed measure dominates the integral of the
    // pushed-forward f norms over one sampling interval
    let pi = q.stationary_distribution()?;
    let mut mass: Vec<f64> = pi.iter().map(|p| -p).collect();
    mass[0] += 1.0;
    let mu = SignedMeasure::new(mass);
    let check = q.norm_equiv_check(&mu, &f, 1.0)?;
    println!(
        "\nnorm inequality at Delta = 1: ||mu||_f_Delta = {:.8} >= {:.8} = integral (quad err {:.1e})",
        check.lhs, check.rhs, check.quadrature_error
    );

    // without sign cancellation the two sides agree
    let positive = SignedMeasure::new(vec![0.4, 0.3, 0.2, 0.1]);
    let equality = q.norm_equiv_check(&positive, &f, 1.0)?;
    println!(
        "nonnegative measure: lhs - rhs = {:.2e} (equality up to quadrature)",
        equality.lhs - equality.rhs
    );
    Ok(())
}
