//! The analysis suites bundle related checks into structured reports:
//! every record carries its value, tolerance, and verdict, and the
//! provenance block holds the seeds and grids needed to reproduce it.
//!
//! ```bash
//! cargo run --example experiment_reports
//! ```

use ergokit::analysis::{equivalence_suite, regularity_transfer_check, skeleton_suite};
use ergokit::ctmc::random_rate_matrix;
use ergokit::measures::{StateSet, Weight};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let n = 5;
    let q = random_rate_matrix(n, 0.1, 1.1, &mut rng);
    let f = Weight::new((0..n).map(|_| 1.0 + rng.random_range(0.0..2.0)).collect())?;
    let c = StateSet::new([0, 1], n)?;

    let equivalence = equivalence_suite(&q, &f, &c)?;
    println!("== {} (digest {}...) ==", equivalence.experiment, &equivalence.inputs_digest[..12]);
    for check in &equivalence.checks {
        println!(
            "  [{}] {:<40} value {:>12.6e}  tol {:>9.1e}",
            if check.passed { "pass" } else { "FAIL" },
            check.name,
            check.value,
            check.tolerance
        );
    }
    println!("  overall: {}", if equivalence.passed { "pass" } else { "FAIL" });

    let b_probe = StateSet::new([n - 1], n)?;
    let regularity = regularity_transfer_check(&q, &f, &c, &[b_probe], 0.5)?;
    println!("\n== {} ==", regularity.experiment);
    for check in &regularity.checks {
        println!(
            "  [{}] {}",
            if check.passed { "pass" } else { "FAIL" },
            check.name
        );
    }
    println!(
        "  slope constant b_C = {}",
        regularity.provenance["b_C"]
    );

    let skeleton = skeleton_suite(&q, &f, 1.0, &c)?;
    println!("\n== {} ==", skeleton.experiment);
    for check in &skeleton.checks {
        println!(
            "  [{}] {:<44} value {:>12.6e}",
            if check.passed { "pass" } else { "FAIL" },
            check.name,
            check.value
        );
    }
    println!(
        "  minorization constants: epsilon0 = {}, k0 = {}",
        skeleton.provenance["epsilon0"], skeleton.provenance["k0"]
    );

    // reports serialize to JSON for persistence; this is what the CLI writes
    let serialized = serde_json::to_string_pretty(&skeleton)?;
    println!(
        "\nserialized skeleton report: {} bytes of JSON, {} checks",
        serialized.len(),
        skeleton.checks.len()
    );
    Ok(())
}
