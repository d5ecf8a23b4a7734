//! The two halves of the transfer as separate channels: Q1 to cavity and
//! cavity to Q2, their composition, and the capacity of the first half.

use qbus::channel::{choi_distance, choi_of_protocol, stage_compose};
use qbus::dynamics::{ModelParams, PropagatorConfig, Schedule, Stage, Window};
use qbus::hilbert::FockCutoff;
use qbus::information::{q1, q1_stage_e1};

fn main() -> qbus::Result<()> {
    let params = ModelParams::new(0.5)?;
    let schedule = Schedule::standard(&params, Window::Rectangular)?;
    let config = PropagatorConfig::default().with_cutoff(FockCutoff::new(12)?);

    let e1 = choi_of_protocol(&params, &schedule.with_stage(Stage::E1), &config)?;
    let e2 = choi_of_protocol(&params, &schedule.with_stage(Stage::E2), &config)?;
    let full = choi_of_protocol(&params, &schedule, &config)?;
    let composed = stage_compose(&e1, &e2)?;
    println!("E1: {} -> {}, E2: {} -> {}", e1.d_in, e1.d_out, e2.d_in, e2.d_out);
    println!("min Choi eigenvalue E1 {:+.2e}, E2 {:+.2e}", e1.min_eigenvalue(), e2.min_eigenvalue());
    println!("|E2∘E1 - full| = {:.3e}", choi_distance(&composed, &full)?);

    let config = PropagatorConfig::default();
    let whole = q1(&params, &schedule, &config)?;
    let first = q1_stage_e1(&params, &schedule, &config)?;
    println!("Q1 of the full transfer {:.6}", whole.q1);
    println!("Q1 of Q1 -> cavity      {:.6}", first.q1);
    Ok(())
}
