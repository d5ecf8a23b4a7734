use super::{BusHamiltonian, ModelParams, PropagatorConfig, Schedule, Segment};
use crate::error::{Error, Result};
use crate::hilbert::{FockCutoff, Layout, PureState, Subsystem, C64};
use crate::integrate::{integrate, IntegrationStats, StepControl};

/// Norm drift above which a propagation is rejected outright.
pub(crate) const HARD_DRIFT: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Propagation {
    /// Renormalized final state.
    pub state: PureState,
    /// `|‖ψ(t1)‖ − 1|` before renormalization.
    pub norm_drift: f64,
    pub stats: IntegrationStats,
}

/// Cutoff of a bus layout `[R] ⊗ Q1 ⊗ C ⊗ Q2`.
pub(crate) fn bus_cutoff(layout: &Layout) -> Result<FockCutoff> {
    let parts = layout.parts();
    let tail = match parts {
        [(Subsystem::Reference, _), rest @ ..] => rest,
        rest => rest,
    };
    match tail {
        [(Subsystem::Qubit1, 2), (Subsystem::Cavity, nc), (Subsystem::Qubit2, 2)] => {
            FockCutoff::new(nc - 1)
        }
        _ => Err(Error::InvalidState(format!(
            "propagation needs a [R ⊗] Q1 ⊗ C ⊗ Q2 layout, got {layout}"
        ))),
    }
}

/// Coupling windows of `schedule` that overlap `[t0, t1]`, clipped to it.
/// Both windows are considered whatever the stage.
pub(crate) fn active_windows(schedule: &Schedule, t0: f64, t1: f64) -> Vec<(Segment, f64, f64)> {
    let both = [
        Segment { qubit: Subsystem::Qubit1, start: 0.0, len: schedule.t1 },
        Segment { qubit: Subsystem::Qubit2, start: schedule.t1 + schedule.tc, len: schedule.t2 },
    ];
    both.into_iter()
        .filter_map(|s| {
            let a = t0.max(s.start);
            let b = t1.min(s.end());
            (b > a && s.len > 0.0).then_some((s, a, b))
        })
        .collect()
}

/// Evolves `state` under `H̃(t)` from `t0` to `t1`.
pub fn propagate(
    state: &PureState,
    t0: f64,
    t1: f64,
    params: &ModelParams,
    schedule: &Schedule,
    config: &PropagatorConfig,
) -> Result<Propagation> {
    params.validate()?;
    config.validate()?;
    if !(t1 >= t0) {
        return Err(Error::InvalidParameter(format!("t1 = {t1} precedes t0 = {t0}")));
    }
    let norm0 = state.norm();
    if (norm0 - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!("initial norm {norm0} differs from 1")));
    }
    let cutoff = bus_cutoff(state.layout())?;
    let h = BusHamiltonian::new(params, cutoff);

    let mut psi: Vec<C64> = state.amplitudes().iter().copied().collect();
    let mut stats = IntegrationStats::default();
    let mut h_step = config.dt_initial;
    if params.g > 0.0 {
        for (seg, a, b) in active_windows(schedule, t0, t1) {
            let window = schedule.window;
            let rhs = |t: f64, y: &[C64], out: &mut [C64]| {
                let f = window.value(t - seg.start, seg.len);
                h.rhs(seg.qubit, f, t, y, out);
            };
            let control = StepControl { tol: config.tol, h_initial: h_step };
            let (s, last) = integrate(rhs, a, b, &mut psi, control)?;
            stats += s;
            h_step = last;
        }
    }

    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let norm_drift = (norm - 1.0).abs();
    if norm_drift > HARD_DRIFT {
        return Err(Error::NormDrift { drift: norm_drift, t: t1 });
    }
    let amps = nalgebra::DVector::from_iterator(psi.len(), psi.into_iter().map(|z| z / norm));
    Ok(Propagation {
        state: PureState::from_raw(amps, state.layout().clone()),
        norm_drift,
        stats,
    })
}
