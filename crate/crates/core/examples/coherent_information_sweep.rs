//! Coherent information, photon numbers and rate across the coupling range
//! with the counter-rotating terms kept.

use qbus::experiment::{run_sweep, SweepConfig};

fn main() -> qbus::Result<()> {
    let cfg = SweepConfig { g_min: 0.05, g_max: 1.0, steps: 20, jobs: Some(4), ..SweepConfig::default() };
    let out = run_sweep(&cfg)?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>10}", "g", "Ic_u", "Q1", "n_end", "n_dce", "rate");
    let show = |v: Option<f64>| v.map_or("-".into(), |x| format!("{x:.5}"));
    for r in &out.records {
        println!(
            "{:>6.3} {:>10} {:>10} {:>10} {:>10} {:>10}",
            r.g,
            show(r.ic_u),
            show(r.q1),
            show(r.n_end),
            show(r.n_dce),
            show(r.rate)
        );
    }
    for f in &out.failures {
        eprintln!("g = {}: {}", f.g, f.message);
    }
    Ok(())
}
