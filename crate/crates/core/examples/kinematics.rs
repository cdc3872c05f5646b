//! Derived quantities of a circular worldline and its light-cone root.

use udw::kinematics::derive_circular;

fn main() -> udw::Result<()> {
    for (a, r) in [(1.0, 1.0), (8.0, 0.2), (0.5, 3.0)] {
        let k = derive_circular(a, r, 0.2)?;
        println!(
            "a={a} R={r}: v={:.6} gamma={:.6} omega={:.6} alpha={:.6} S={:.6}",
            k.speed(),
            k.gamma(),
            k.omega(),
            k.alpha(),
            k.light_cone_root()?
        );
    }
    Ok(())
}
