//! Resolvent algebra on random chains: the generalized resolvent, the
//! resolvent equation relating two rate functions, and the generator
//! identity for resolvent images. All three hold to rounding error because
//! they are exact matrix identities.
//!
//! ```bash
//! cargo run --example resolvent_identities
//! ```

use ergokit::ctmc::random_rate_matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    println!("{:>4} {:>6} {:>14} {:>14}", "case", "n", "resolvent eq", "generator id");
    let mut worst_eq = 0.0f64;
    let mut worst_gen = 0.0f64;
    for case in 0..12 {
        let n = rng.random_range(2..=8);
        let q = random_rate_matrix(n, 0.05, 1.05, &mut rng);
        let h: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let g: Vec<f64> = h.iter().map(|v| v + rng.random_range(0.0..1.0)).collect();

        let eq = q.resolvent_equation_residual(&g, &h)?;
        let gen = q.generator_resolvent_residual(&g)?;
        worst_eq = worst_eq.max(eq);
        worst_gen = worst_gen.max(gen);
        println!("{case:>4} {n:>6} {eq:>14.3e} {gen:>14.3e}");
    }
    println!("\nworst residuals: {worst_eq:.3e} / {worst_gen:.3e} (tolerance 1e-10)");

    // constant rates recover the classical resolvent
    let q = random_rate_matrix(4, 0.1, 1.0, &mut rng);
    let alpha = 0.8;
    let constant = q.generalized_resolvent(&[alpha; 4])?;
    let classical = q.resolvent(alpha)?;
    println!(
        "constant-rate reduction: max |R_h - R_alpha| = {:.3e}",
        (constant - classical).amax()
    );

    // rows of the resolvent integrate the semigroup, so they sum to 1/alpha
    let r = q.resolvent(alpha)?;
    let row_sum: f64 = (0..4).map(|j| r[(0, j)]).sum();
    println!("resolvent row sum: {row_sum:.10} (exact: {:.10})", 1.0 / alpha);
    Ok(())
}
