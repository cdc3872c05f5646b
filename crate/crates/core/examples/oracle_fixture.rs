//! Regenerates the brute-force fixture and reports agreement with the
//! reduced formulas.
//!
//! ```text
//! cargo run --release --example oracle_fixture -- fixtures/oracle_v1.csv
//! ```

use std::time::Instant;

use udw::oracle::{fixture_cases, generate_fixture, reduced_case, write_fixture, EpsilonLadder};
use udw::quadrature::QuadratureBudget;

fn main() -> udw::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "oracle_v1.csv".into());
    let ladder = EpsilonLadder::default();
    let cases = fixture_cases();
    let start = Instant::now();
    let rows = generate_fixture(&cases, &ladder)?;
    write_fixture(&out, &rows)?;
    eprintln!("{} rows in {:.1?} -> {out}", rows.len(), start.elapsed());

    let budget = QuadratureBudget::default();
    let mut worst: f64 = 0.0;
    for row in &rows {
        let reduced = reduced_case(&row.case(), &budget)?;
        let oracle = num_complex::Complex64::new(row.value_re, row.value_im);
        let rel = (reduced - oracle).norm() / reduced.norm();
        worst = worst.max(rel);
        println!("{:3} {:?} oracle={:+.10e} {:+.10e}i reduced={:+.10e} {:+.10e}i rel={rel:.2e}",
            row.case_id, row.operation, oracle.re, oracle.im, reduced.re, reduced.im);
    }
    println!("worst relative deviation {worst:.3e}");
    Ok(())
}
