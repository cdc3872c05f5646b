//! Harvested concurrence of a comoving circular pair and a uniform pair.

use udw::entanglement::{harvest_pair, PairConfig, PairTrajectory};
use udw::quadrature::QuadratureBudget;

fn main() -> udw::Result<()> {
    let budget = QuadratureBudget::default();
    for trajectory in [
        PairTrajectory::CircularComoving { accel: 1.0, radius: 1.0 },
        PairTrajectory::Uniform { accel: 1.0 },
    ] {
        let h = harvest_pair(&PairConfig::new(trajectory, 0.1, 0.2, 0.2), &budget)?;
        println!("{trajectory:?}: P_A={:.6e} P_B={:.6e} |X|={:.6e} C={:.6e}", h.p_a, h.p_b, h.abs_x, h.concurrence);
    }
    Ok(())
}
