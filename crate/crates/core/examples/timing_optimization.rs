//! Searches the swap durations and the idle time for the largest
//! one-shot capacity estimate.

use qbus::dynamics::{ModelParams, PropagatorConfig, Window};
use qbus::information::optimize_timing;

fn main() -> qbus::Result<()> {
    let config = PropagatorConfig::default();
    println!("{:>5} {:>9} {:>9} {:>8} {:>8} {:>8} {:>6}", "g", "standard", "optimum", "T1/τ", "T2/τ", "Tc", "evals");
    for g in [0.2, 0.3, 0.4, 0.45] {
        let params = ModelParams::new(g)?;
        let opt = optimize_timing(&params, Window::Rectangular, &config)?;
        println!(
            "{g:>5.2} {:>9.5} {:>9.5} {:>8.4} {:>8.4} {:>8.4} {:>6}",
            opt.standard_value, opt.value, opt.candidate.t1_frac, opt.candidate.t2_frac, opt.candidate.tc, opt.evaluations
        );
    }
    Ok(())
}
