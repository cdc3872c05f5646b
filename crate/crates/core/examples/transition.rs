//! Transition probability for circular and uniform motion, split into its terms.

use udw::kinematics::{derive_circular, DetectorSpec, UniformKinematics};
use udw::quadrature::QuadratureBudget;
use udw::response::{transition_circular, transition_uniform};

fn main() -> udw::Result<()> {
    let budget = QuadratureBudget::default();
    let det = DetectorSpec::new(0.1)?;
    let c = transition_circular(&derive_circular(2.0, 1.0, 0.2)?, &det, &budget)?;
    println!("circular  P = {:.10e}  (free {:.4e}, pv {:.4e}, static {:.4e}, residue {:.4e}) err {:.1e}",
        c.probability, c.term_free_oscillatory, c.term_boundary_pv, c.term_static, c.term_residue, c.err_est);
    let u = transition_uniform(&UniformKinematics::new(2.0, 0.2)?, &det, &budget)?;
    println!("uniform   P = {:.10e}  err {:.1e}", u.probability, u.err_est);
    Ok(())
}
