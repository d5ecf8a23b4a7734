//! Smooth coupling switching: coherent information under a rectangular
//! window and under Hamming windows of increasing depth.

use qbus::dynamics::{ModelParams, PropagatorConfig, Schedule, Window};
use qbus::hilbert::{BlochVector, DensityMatrix, Subsystem};
use qbus::information::coherent_information;

fn main() -> qbus::Result<()> {
    let config = PropagatorConfig::default();
    let rho_u = DensityMatrix::from_bloch(BlochVector::ORIGIN, Subsystem::Qubit1)?;
    let windows = [
        ("rect", Window::Rectangular),
        ("xi=0.25", Window::hamming(0.25)?),
        ("xi=0.5", Window::hamming(0.5)?),
        ("xi=0.75", Window::hamming(0.75)?),
    ];
    print!("{:>6}", "g");
    for (name, _) in &windows {
        print!(" {name:>10}");
    }
    println!();
    for g in [0.1, 0.2, 0.3, 0.4, 0.5] {
        let params = ModelParams::new(g)?;
        print!("{g:>6.2}");
        for (_, w) in &windows {
            let schedule = Schedule::standard(&params, *w)?;
            print!(" {:>10.5}", coherent_information(&params, &schedule, &config, &rho_u)?);
        }
        println!();
    }
    Ok(())
}
