//! The sampled-chain machinery: the skeleton kernel `P^Delta`, the matched
//! weight `f_Delta`, hitting sums for the sampled chain, and the
//! constructed Lyapunov function satisfying the skeleton drift inequality
//! `P^Delta V_Delta <= V_Delta - f_Delta + b 1_C` componentwise.
//!
//! ```bash
//! cargo run --example skeleton_construction
//! ```

use ergokit::ctmc::random_rate_matrix;
use ergokit::measures::{StateSet, Weight};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 5;
    let q = random_rate_matrix(n, 0.1, 1.1, &mut rng);
    let f = Weight::new(vec![1.0, 2.0, 1.5, 3.0, 1.2])?;
    let c = StateSet::new([0, 1], n)?;
    let delta = 1.0;

    let skeleton = q.skeleton_kernel(delta)?;
    println!(
        "skeleton at Delta = {delta}: sub-unit flag = {}",
        skeleton.sub_unit_delta
    );

    let f_delta = q.f_delta(&f, delta)?;
    println!("matched weight f_Delta (entries >= Delta since f >= 1):");
    for (i, v) in f_delta.iter().enumerate() {
        println!("  f_Delta({i}) = {v:.5}");
    }

    let sums = q.skeleton_hitting_sum(delta, &f_delta, &c)?;
    println!("\nsampled-chain hitting sums into C = {{0, 1}}:");
    for (i, v) in sums.iter().enumerate() {
        println!("  G^Delta({i}) = {v:.5}");
    }

    let built = q.construct_skeleton_lyapunov(&f, delta, &c)?;
    println!("\nconstructed V_Delta with b0 = {:.5}, b = {:.5}:", built.b0, built.b);
    for i in 0..n {
        println!(
            "  V_Delta({i}) = {:>9.5}   hit prob s({i}) = {:.5}   margin = {:+.2e}",
            built.v_delta[i], built.hit_prob[i], built.margins[i]
        );
    }
    println!("worst margin: {:.3e} (must be <= 1e-9)", built.max_margin);
    println!(
        "distance to the continuous functional: sup|V_Delta - G_C(.,f;0)| = {:.5}, vs r = 1 index: {:.5}",
        built.sup_gap_r0, built.sup_gap_r1
    );
    println!(
        "minorization: P^(k0 Delta)(x, C) >= eps0 s(x) with eps0 = {:.5}, k0 = {} (residual {:.2e})",
        built.minorization_epsilon, built.minorization_k0, built.minorization_residual
    );

    // sampling the kernel at a finer interval only flags the convention
    let fine = q.skeleton_kernel(0.25)?;
    println!("\nDelta = 0.25 sets the sub-unit flag: {}", fine.sub_unit_delta);
    Ok(())
}
