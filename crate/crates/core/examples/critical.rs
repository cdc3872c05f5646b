//! Crossing acceleration of the uniform and circular probabilities, then the
//! critical acceleration above which P(R) has no interior peak.

use udw::critical::{find_critical, CriticalQuery};

fn main() -> udw::Result<()> {
    for query in [CriticalQuery::circ_uniform_crossing(2.0, 0.1, 0.05), CriticalQuery::accel_monotonicity(0.1, 0.2)] {
        let r = find_critical(&query, &query.recommended_budget())?;
        println!("{:?}: {:.4} in [{:.4}, {:.4}] after {} evaluations", r.kind, r.value, r.bracket.0, r.bracket.1, r.evaluations);
    }
    Ok(())
}
