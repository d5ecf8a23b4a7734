//! Under the rotating-wave approximation the protocol swaps Q1 into the
//! cavity and the cavity into Q2, so every input state arrives intact.

use qbus::dynamics::{run_protocol, ModelParams, PropagatorConfig, Schedule, Window};
use qbus::hilbert::{BlochVector, DensityMatrix, JointState, Subsystem};
use qbus::information::coherent_information;

fn main() -> qbus::Result<()> {
    let params = ModelParams::new(0.5)?.with_rwa(true);
    let schedule = Schedule::standard(&params, Window::Rectangular)?;
    let config = PropagatorConfig::default();

    let inputs = [
        ("|e>", BlochVector::new(0.0, 0.0, -1.0)?),
        ("|g>", BlochVector::new(0.0, 0.0, 1.0)?),
        ("|+>", BlochVector::new(1.0, 0.0, 0.0)?),
        ("|+i>", BlochVector::new(0.0, 1.0, 0.0)?),
    ];
    for (name, r) in inputs {
        let rho = DensityMatrix::from_bloch(r, Subsystem::Qubit1)?;
        let out = run_protocol(&rho, &params, &schedule, &config, false)?;
        let b = out.partial_trace(&[Subsystem::Qubit2])?.bloch_vector()?;
        println!("{name:>5} -> Q2 Bloch ({:+.6}, {:+.6}, {:+.6})", b.x, b.y, b.z);
    }

    let rho_u = DensityMatrix::from_bloch(BlochVector::ORIGIN, Subsystem::Qubit1)?;
    let ic = coherent_information(&params, &schedule, &config, &rho_u)?;
    println!("coherent information of the unpolarized input: {ic:.10}");
    Ok(())
}
