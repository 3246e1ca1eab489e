//! Building and validating drift certificates on a birth-death chain. The
//! converse construction `V = R_{1_C} f` always yields a valid certificate
//! on an irreducible chain; hand-rolled candidates can fail, and the margin
//! table says where.
//!
//! ```bash
//! cargo run --example drift_certificates
//! ```

use ergokit::ctmc::DriftCertificate;
use ergokit::measures::{StateSet, Weight};
use ergokit::RateMatrix;
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // birth-death chain on 6 states with drift toward 0
    let n = 6;
    let mut rates = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        rates[(i, i + 1)] = 0.4;
        rates[(i + 1, i)] = 1.0;
    }
    let q = RateMatrix::from_off_diagonal_rates(&rates)?;
    let f = Weight::new((0..n).map(|i| 1.0 + i as f64).collect())?;
    let c = StateSet::new([0, 1], n)?;

    let cert = q.lyapunov_from_resolvent(&f, &c)?;
    println!("constructed certificate (delta = {}):", cert.delta);
    for (i, v) in cert.v.iter().enumerate() {
        println!("  V({i}) = {v:.5}");
    }
    println!("  b = {:.5}", cert.b);

    let margins = q.validate_certificate(&cert)?;
    println!(
        "validation: max margin {:.3e} <= {:.0e}  =>  valid = {}",
        margins.max_margin, margins.tolerance, margins.valid
    );

    // a constant candidate cannot absorb the -f term away from C
    let constant = DriftCertificate::new(vec![10.0; n], f.clone(), c.clone(), 0.0, 1.0)?;
    let failing = q.validate_certificate(&constant)?;
    println!("\nconstant V with b = 0: valid = {}", failing.valid);
    for (i, margin) in failing.margins.iter().enumerate() {
        if let Some(m) = margin {
            if *m > 0.0 {
                println!("  violated at state {i}: margin {m:.4}");
            }
        }
    }

    // scaling (V, f, b) together preserves the verdict
    let scaled = DriftCertificate::new(
        cert.v.iter().map(|v| 2.0 * v).collect(),
        Weight::new(f.values().iter().map(|v| 2.0 * v).collect())?,
        c,
        2.0 * cert.b,
        cert.delta,
    )?;
    println!(
        "\nscaled certificate stays valid: {}",
        q.validate_certificate(&scaled)?.valid
    );
    Ok(())
}
