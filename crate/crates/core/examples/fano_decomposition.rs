//! Bloch-sphere map of the transfer, its split into a displacement, two
//! z rotations and a diagonal deformation, and Kraus operators.

use qbus::channel::tomography;
use qbus::dynamics::{ModelParams, PropagatorConfig, Schedule, Window};
use qbus::fano::{elementary_sequence, kraus_from_sequence};

fn main() -> qbus::Result<()> {
    let config = PropagatorConfig::default();
    for g in [0.3, 0.5, 1.0] {
        let params = ModelParams::new(g)?;
        let schedule = Schedule::standard(&params, Window::Rectangular)?;
        let map = tomography(&params, &schedule, &config)?;
        let p = map.fano_parameters();
        println!("g = {g}");
        println!(
            "  m_xx {:+.6} m_xy {:+.6} m_yx {:+.6} m_yy {:+.6} m_zz {:+.6} a_z {:+.6}",
            p.m_xx, p.m_xy, p.m_yx, p.m_yy, p.m_zz, p.a_z
        );
        println!("  structural residual {:.2e}", map.structural_residuals().max_abs());

        let seq = elementary_sequence(&map)?;
        let back = seq.compose();
        println!(
            "  theta {:.6} toward {:?}, rotations {:+.6} / {:+.6}, D = {:?}",
            seq.displacement.theta,
            seq.displacement.toward,
            seq.outer_rotation,
            seq.inner_rotation,
            seq.deformation.as_slice()
        );
        println!("  reconstruction error {:.2e}", (back.m - map.m).abs().max().max((back.a - map.a).abs().max()));
        match kraus_from_sequence(&seq) {
            Ok(ks) => println!("  {} Kraus operators", ks.len()),
            Err(e) => println!("  no Kraus form: {e}"),
        }
    }
    Ok(())
}
