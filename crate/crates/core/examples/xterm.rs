//! The nonlocal term X for the three pair configurations.

use udw::correlation::{x_comoving_circular, x_sync_two_radii, x_uniform_pair};
use udw::kinematics::{CircularKinematics, DetectorSpec, PairGeometry, PairKind, UniformKinematics};
use udw::quadrature::QuadratureBudget;

fn main() -> udw::Result<()> {
    let budget = QuadratureBudget::default();
    let det = DetectorSpec::new(0.1)?;
    let (dd, dz) = (0.2, 0.2);

    let kin = CircularKinematics::new(1.0, 1.0, dz)?;
    let x = x_comoving_circular(&kin, &PairGeometry::new(dd, dz, PairKind::CircularComoving)?, &det, &budget)?;
    println!("comoving   X = {:+.8e} {:+.8e}i  |X| = {:.8e}", x.x_real, x.x_imag, x.abs_x);

    let ka = CircularKinematics::from_angular_velocity(0.4, 1.0, dz)?;
    let kb = CircularKinematics::from_angular_velocity(0.4, 1.5, dz + dd)?;
    let x = x_sync_two_radii(&ka, &kb, &PairGeometry::new(dd, dz, PairKind::CircularSyncTwoRadii)?, &det, &budget)?;
    println!("two radii  X = {:+.8e} {:+.8e}i  |X| = {:.8e}", x.x_real, x.x_imag, x.abs_x);

    let ku = UniformKinematics::new(1.0, dz)?;
    let x = x_uniform_pair(&ku, &PairGeometry::new(dd, dz, PairKind::UniformPair)?, &det, &budget)?;
    println!("uniform    X = {:+.8e} {:+.8e}i  |X| = {:.8e}", x.x_real, x.x_imag, x.abs_x);
    Ok(())
}
