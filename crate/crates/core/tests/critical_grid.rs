use udw::critical::{find_critical, CriticalQuery};

fn refined_shift(query: CriticalQuery) -> (f64, f64) {
    let budget = query.recommended_budget();
    let coarse = find_critical(&query, &budget).unwrap().value;
    let fine = find_critical(&query.with_grid(query.grid.refined()), &budget).unwrap().value;
    (coarse, (fine - coarse).abs())
}

#[test]
fn accel_threshold_stable_under_grid_doubling() {
    let (a_c, shift) = refined_shift(CriticalQuery::accel_monotonicity(0.1, 0.2));
    assert!(shift < 1e-2, "a_c {a_c} moved by {shift}");
}

#[test]
fn dz_threshold_stable_under_grid_doubling() {
    let (dz_c, shift) = refined_shift(CriticalQuery::dz_intersection(0.1));
    assert!(shift < 2e-3, "dz_c {dz_c} moved by {shift}");
}

#[test]
fn omega_threshold_stable_under_grid_doubling() {
    let (omega_c, shift) = refined_shift(CriticalQuery::omega_intersection());
    assert!(shift < 2e-3, "omega_c {omega_c} moved by {shift}");
}

#[test]
fn crossing_ignores_grid() {
    let (_, shift) = refined_shift(CriticalQuery::circ_uniform_crossing(2.0, 0.1, 0.05));
    assert!(shift < 1e-3);
}
