//! Observables against the Fock cutoff, and the cutoff-doubling rule used
//! by sweeps.

use qbus::dynamics::{converge_cutoff, ModelParams, PropagatorConfig, Schedule, Window};
use qbus::experiment::{convergence_study, SweepConfig};
use qbus::hilbert::{BlochVector, DensityMatrix, FockCutoff, Subsystem};
use qbus::information::coherent_information;

fn main() -> qbus::Result<()> {
    print!("{}", convergence_study(&SweepConfig::default(), 1.0)?.to_text());

    let params = ModelParams::new(0.5)?;
    let schedule = Schedule::standard(&params, Window::Rectangular)?;
    let rho_u = DensityMatrix::from_bloch(BlochVector::ORIGIN, Subsystem::Qubit1)?;
    let start = PropagatorConfig::default().with_cutoff(FockCutoff::new(4)?);
    let c = converge_cutoff(
        &start,
        FockCutoff::new(64)?,
        |cfg| coherent_information(&params, &schedule, cfg, &rho_u),
        |a, b| (a - b).abs(),
    )?;
    println!("g = 0.5: Ic_u = {:.10} at n_max = {} (converged: {}, change {:.1e})", c.value, c.cutoff.n_max(), c.converged, c.change);
    Ok(())
}
