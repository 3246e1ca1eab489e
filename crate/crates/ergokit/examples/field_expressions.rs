//! The field expression language: parsing, evaluation, printing, error
//! positions, and finite differences. Expressions define drift components,
//! weights, and Lyapunov candidates in config files.
//!
//! ```bash
//! cargo run --example field_expressions
//! ```

use ergokit::dsl::{self, Expr};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sources = [
        "x1^2 + 1",
        "exp(-(x1^2 + x2^2) / 2)",
        "min(x1, max(x2, 0.5))",
        "2^3^2",
        "-x1^2",
        "tanh(x1) * sqrt(x2 + 3)",
    ];
    println!("{:<32} {:<36} {:>12}", "source", "printed back", "at (1, 2)");
    for source in sources {
        let expr: Expr = dsl::parse(source, 2)?;
        let value = expr.evaluate(&[1.0, 2.0])?;
        println!("{source:<32} {:<36} {value:>12.6}", expr.to_string());
    }

    // operator precedence in one line
    let precedence = dsl::parse("2+3*4", 1)?.evaluate(&[0.0])?;
    println!("\n2+3*4 = {precedence} (multiplication binds tighter)");
    let right_assoc = dsl::parse("2^3^2", 1)?.evaluate(&[0.0])?;
    println!("2^3^2 = {right_assoc} (power associates right)");

    // errors carry positions and domains are strict
    match dsl::parse("x1 + frob(2)", 1) {
        Err(e) => println!("\nparse error: {e}"),
        Ok(_) => unreachable!(),
    }
    match dsl::parse("x3", 2) {
        Err(e) => println!("parse error: {e}"),
        Ok(_) => unreachable!(),
    }
    match dsl::parse("log(x1)", 1)?.evaluate(&[-1.0]) {
        Err(e) => println!("eval error: {e}"),
        Ok(_) => unreachable!(),
    }

    // central differences with the expected quadratic error decay
    let expr = dsl::parse("exp(x1)", 1)?;
    let exact = 0.7f64.exp();
    println!("\nd/dx exp(x) at 0.7 (exact {exact:.8}):");
    for &h in &[1e-1, 1e-2, 1e-3] {
        let fd = expr.differentiate_fd(&[0.7], 0, h)?;
        println!("  h = {h:>5}: {fd:.8}  (error {:.2e})", (fd - exact).abs());
    }
    Ok(())
}
