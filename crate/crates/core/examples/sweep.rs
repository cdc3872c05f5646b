//! Concurrence against R for both trajectory families, written as CSV to stdout.

use udw::config::{write_rows, RunConfig, TrajectoryChoice};
use udw::quadrature::QuadratureBudget;
use udw::sweep::{run_sweep, Axis, Quantity, Spacing, SweepSpec};

fn main() -> udw::Result<()> {
    let fixed = RunConfig {
        a_sigma: 3.0,
        omega_sigma: 1.8,
        ..RunConfig::default()
    };
    let spec = SweepSpec::new(Axis::ROverSigma, 1e-3, 10.0, 25, fixed)
        .with_spacing(Spacing::Log)
        .with_quantity(Quantity::Concurrence)
        .with_trajectory(TrajectoryChoice::Both);
    let rows = run_sweep(&spec, &QuadratureBudget::default(), None)?;
    write_rows(std::io::stdout().lock(), &rows)
}
