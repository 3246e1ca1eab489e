//! Integral convergence bounds: for states x, y the time integral of
//! `||P^t(x,.) - P^t(y,.)||_f` stays within a constant multiple of
//! `V(x) + V(y) + 1`, and the unit-interval skeleton sums dominate the
//! corresponding integrals term by term.
//!
//! ```bash
//! cargo run --example ergodic_bounds
//! ```

use ergokit::ctmc::random_rate_matrix;
use ergokit::measures::{StateSet, Weight};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = 5;
    let q = random_rate_matrix(n, 0.1, 1.0, &mut rng);
    let f = Weight::new((0..n).map(|_| 1.0 + rng.random_range(0.0..2.0)).collect())?;
    let c = StateSet::new([0], n)?;
    let cert = q.lyapunov_from_resolvent(&f, &c)?;

    let pairs: Vec<(usize, usize)> = (1..n).map(|y| (0, y)).collect();
    let bounds = q.theorem2_bound(&f, &cert.v, 20.0, &pairs)?;
    println!("spectral gap: {:.5}, horizon: {}", bounds.gap, bounds.t_max);

    println!("\npair integrals of ||P^t(x,.) - P^t(y,.)||_f:");
    println!("{:>4} {:>4} {:>12} {:>12} {:>10}", "x", "y", "integral", "tail", "ratio");
    for p in &bounds.pairs {
        println!(
            "{:>4} {:>4} {:>12.6} {:>12.2e} {:>10.5}",
            p.x, p.y, p.integral, p.tail, p.ratio
        );
    }
    println!("largest pair ratio (bound constant estimate): {:.5}", bounds.b0_estimate);

    println!("\nstationary integrals of ||P^t(x,.) - pi||_f:");
    for s in &bounds.stations {
        println!(
            "  x = {}: integral {:.6} + tail {:.2e}, over V(x)+1 gives {:.5}",
            s.x, s.integral, s.tail, s.ratio
        );
    }
    println!("largest stationary ratio: {:.5}", bounds.b_estimate);

    // skeleton sums at Delta = 1 dominate the matched integrals
    let pair_sums = q.skeleton_pair_sum(&f, 1.0, 0, n - 1)?;
    println!(
        "\nskeleton pair sum: {:.6} >= {:.6} (matched integral over {} terms, quad err {:.1e})",
        pair_sums.sum, pair_sums.matched_integral, pair_sums.terms, pair_sums.quadrature_error
    );
    let station_sums = q.skeleton_station_sum(&f, 1.0, 0)?;
    println!(
        "skeleton stationary sum: {:.6} >= {:.6} (+ tail estimate {:.2e})",
        station_sums.sum, station_sums.matched_integral, station_sums.tail
    );

    // the exponential domination probe behind the qualitative convergence
    let unit = Weight::ones(n);
    let grid: Vec<f64> = (0..30).map(|k| k as f64 * 0.3).collect();
    let domination = q.exponential_domination_check(&unit, 1.0, &grid)?;
    println!(
        "\nP^t 1 <= e^t holds on the grid: {} (max ratio {:.4})",
        domination.holds, domination.max_ratio
    );
    Ok(())
}
