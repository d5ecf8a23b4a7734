use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{propagate, ModelParams, Propagation, PropagatorConfig, Schedule, Stage};
#[cfg(test)]
use super::Window;
use crate::error::{Error, Result};
use crate::hilbert::{
    hermitian_eigen, mean_photon_number, purify, DensityMatrix, FockCutoff, JointState, Layout,
    PureState, Subsystem, C64, GROUND, ZERO,
};

/// Final joint state of a protocol run.
#[derive(Clone, Debug)]
pub enum ProtocolOutput {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl ProtocolOutput {
    pub fn to_density(&self) -> DensityMatrix {
        match self {
            ProtocolOutput::Pure(psi) => psi.to_density(),
            ProtocolOutput::Mixed(rho) => rho.clone(),
        }
    }
}

impl JointState for ProtocolOutput {
    fn layout(&self) -> &Layout {
        match self {
            ProtocolOutput::Pure(psi) => psi.layout(),
            ProtocolOutput::Mixed(rho) => rho.layout(),
        }
    }

    fn partial_trace(&self, keep: &[Subsystem]) -> Result<DensityMatrix> {
        match self {
            ProtocolOutput::Pure(psi) => psi.partial_trace(keep),
            ProtocolOutput::Mixed(rho) => rho.partial_trace(keep),
        }
    }
}

/// Checks that the input layout is the stage's input subsystem and returns
/// its dimension.
fn input_dim(stage: Stage, layout: &Layout, cutoff: FockCutoff) -> Result<usize> {
    let expect = stage.input();
    match layout.parts() {
        [(s, d)] if *s == expect => {
            let max = if expect == Subsystem::Cavity { cutoff.dim() } else { 2 };
            if *d > max || (expect != Subsystem::Cavity && *d != 2) {
                return Err(Error::InvalidStage(format!(
                    "input on {s} has dimension {d}, stage {stage:?} allows {max}"
                )));
            }
            Ok(*d)
        }
        _ => Err(Error::InvalidStage(format!(
            "stage {stage:?} takes its input on {expect}, got a state on {layout}"
        ))),
    }
}

/// Bus index of input basis state `i` with every other subsystem in its
/// ground state.
fn input_index(stage: Stage, i: usize, cutoff: FockCutoff) -> usize {
    let bus = Layout::bus(cutoff);
    let digits = match stage.input() {
        Subsystem::Cavity => [GROUND, i, GROUND],
        _ => [i, 0, GROUND],
    };
    bus.index_of(&digits).expect("digits within the bus layout")
}

/// Runs the selected stage of the protocol starting from a pure state on
/// `[R ⊗] X`, with `X` the stage's input subsystem; the remaining bus
/// subsystems start in `|0⟩` and `|g⟩`.
pub fn run_protocol_from(
    psi: &PureState,
    params: &ModelParams,
    schedule: &Schedule,
    config: &PropagatorConfig,
) -> Result<Propagation> {
    let cutoff = config.cutoff;
    let parts = psi.layout().parts();
    let (r_dim, x_layout) = match parts {
        [(Subsystem::Reference, r), rest @ ..] => (*r, Layout::new(rest.to_vec())?),
        _ => (1, psi.layout().clone()),
    };
    let d_in = input_dim(schedule.stage, &x_layout, cutoff)?;
    let bus = Layout::bus(cutoff);
    let layout = if r_dim > 1 || psi.layout().contains(Subsystem::Reference) {
        bus.with_reference(r_dim)?
    } else {
        bus.clone()
    };
    let mut amps = DVector::from_element(layout.dim(), ZERO);
    for r in 0..r_dim {
        for i in 0..d_in {
            amps[r * bus.dim() + input_index(schedule.stage, i, cutoff)] = psi.amplitudes()[r * d_in + i];
        }
    }
    let start = PureState::new(amps, layout)?;
    propagate(&start, schedule.start_time(), schedule.end_time(), params, schedule, config)
}

/// Runs the protocol on `rho_in`, given on the stage's input subsystem.
///
/// With `attach_reference` the input is purified onto `R` first and the
/// final pure state on `R ⊗ Q1 ⊗ C ⊗ Q2` is returned. Otherwise the
/// result is pure for pure inputs and mixed on `Q1 ⊗ C ⊗ Q2` otherwise.
pub fn run_protocol(
    rho_in: &DensityMatrix,
    params: &ModelParams,
    schedule: &Schedule,
    config: &PropagatorConfig,
    attach_reference: bool,
) -> Result<ProtocolOutput> {
    rho_in.validate()?;
    input_dim(schedule.stage, rho_in.layout(), config.cutoff)?;
    let (vals, vecs) = hermitian_eigen(rho_in.matrix());
    let rank = vals.iter().filter(|&&l| l > 1e-14).count();
    if !attach_reference && rank == 1 {
        let v = vecs.column(0).into_owned();
        let psi = PureState::new(v.normalize(), rho_in.layout().clone())?;
        let out = run_protocol_from(&psi, params, schedule, config)?;
        return Ok(ProtocolOutput::Pure(out.state));
    }
    let out = run_protocol_from(&purify(rho_in)?, params, schedule, config)?;
    if attach_reference {
        Ok(ProtocolOutput::Pure(out.state))
    } else {
        let keep = [Subsystem::Qubit1, Subsystem::Cavity, Subsystem::Qubit2];
        Ok(ProtocolOutput::Mixed(out.state.partial_trace(&keep)?))
    }
}

/// Stinespring isometry `V: X → Q1 ⊗ C ⊗ Q2` of one protocol stage,
/// one propagated column per input basis state.
#[derive(Clone, Debug)]
pub struct ChannelDilation {
    stage: Stage,
    cutoff: FockCutoff,
    columns: DMatrix<C64>,
    max_drift: f64,
}

impl ChannelDilation {
    pub fn compute(params: &ModelParams, schedule: &Schedule, config: &PropagatorConfig) -> Result<Self> {
        let stage = schedule.stage;
        let d_in = match stage.input() {
            Subsystem::Cavity => config.cutoff.dim(),
            _ => 2,
        };
        let x = Layout::single(stage.input(), d_in);
        let runs: Vec<Propagation> = (0..d_in)
            .into_par_iter()
            .map(|i| {
                let psi = PureState::basis(x.clone(), &[i])?;
                run_protocol_from(&psi, params, schedule, config)
            })
            .collect::<Result<_>>()?;
        let bus_dim = Layout::bus(config.cutoff).dim();
        let mut columns = DMatrix::from_element(bus_dim, d_in, ZERO);
        let mut max_drift: f64 = 0.0;
        for (i, run) in runs.iter().enumerate() {
            columns.set_column(i, run.state.amplitudes());
            max_drift = max_drift.max(run.norm_drift);
        }
        Ok(ChannelDilation { stage, cutoff: config.cutoff, columns, max_drift })
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn input_dim(&self) -> usize {
        self.columns.ncols()
    }

    /// Largest norm drift among the propagated columns.
    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    pub fn isometry(&self) -> &DMatrix<C64> {
        &self.columns
    }

    /// `(I_R ⊗ V)|ψ⟩` for `psi` on `[R ⊗] X`.
    pub fn joint_from(&self, psi: &PureState) -> Result<PureState> {
        let d_in = self.input_dim();
        let bus = Layout::bus(self.cutoff);
        let (r_dim, layout) = match psi.layout().parts() {
            [(Subsystem::Reference, r), rest @ ..] => {
                input_dim(self.stage, &Layout::new(rest.to_vec())?, self.cutoff)?;
                (*r, bus.with_reference(*r)?)
            }
            _ => {
                input_dim(self.stage, psi.layout(), self.cutoff)?;
                (1, bus.clone())
            }
        };
        let x_dim = psi.amplitudes().len() / r_dim;
        let mut coeffs = DMatrix::from_element(d_in, r_dim, ZERO);
        for r in 0..r_dim {
            for i in 0..x_dim {
                coeffs[(i, r)] = psi.amplitudes()[r * x_dim + i];
            }
        }
        let out = &self.columns * coeffs;
        // column r of `out` is the bus state paired with |r⟩_R
        let amps = DVector::from_iterator(layout.dim(), out.column_iter().flat_map(|c| c.iter().copied().collect::<Vec<_>>()));
        Ok(PureState::from_raw(amps, layout))
    }

    /// Purifies `rho` onto `R` and applies the isometry.
    pub fn joint_state(&self, rho: &DensityMatrix) -> Result<PureState> {
        self.joint_from(&purify(rho)?)
    }

    /// Channel output `E(ρ)` on the stage's output subsystem.
    pub fn output_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.joint_state(rho)?.partial_trace(&[self.stage.output()])
    }
}

/// Where the cavity photon number is read out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DceObservable {
    /// `|g⟩|0⟩` evolved for `T1` under the `Q1`–`C` coupling alone.
    PureDce,
    /// End of the protocol with input `ρ_u`.
    EndOfProtocol,
}

/// Cavity `⟨a†a⟩` for the given readout.
pub fn dce_photons(
    params: &ModelParams,
    schedule: &Schedule,
    config: &PropagatorConfig,
    at: DceObservable,
) -> Result<f64> {
    match at {
        DceObservable::PureDce => {
            let s = schedule.with_stage(Stage::E1);
            let psi = PureState::basis(Layout::single(Subsystem::Qubit1, 2), &[GROUND])?;
            let out = run_protocol_from(&psi, params, &s, config)?;
            mean_photon_number(&out.state)
        }
        DceObservable::EndOfProtocol => {
            let s = schedule.with_stage(Stage::Full);
            let rho = DensityMatrix::maximally_mixed(Layout::single(Subsystem::Qubit1, 2));
            let out = run_protocol(&rho, params, &s, config, true)?;
            mean_photon_number(&out)
        }
    }
}

/// Result of a cutoff-doubling study.
#[derive(Clone, Debug, PartialEq)]
pub struct Converged<T> {
    pub value: T,
    /// Smallest cutoff whose doubling changed the value by less than the threshold.
    pub cutoff: FockCutoff,
    pub converged: bool,
    /// Change observed under the last doubling.
    pub change: f64,
}

/// Evaluates `f` at `config.cutoff` and doubles the cutoff until the
/// change measured by `distance` drops below the configured threshold
/// or `max` is exceeded.
pub fn converge_cutoff<T, F, D>(config: &PropagatorConfig, max: FockCutoff, f: F, distance: D) -> Result<Converged<T>>
where
    F: Fn(&PropagatorConfig) -> Result<T>,
    D: Fn(&T, &T) -> f64,
{
    let mut cutoff = config.cutoff;
    let mut value = f(config)?;
    let mut change = f64::INFINITY;
    while cutoff.doubled().n_max() <= max.n_max() {
        let next_cut = cutoff.doubled();
        let next = f(&config.with_cutoff(next_cut))?;
        change = distance(&value, &next);
        if change < config.convergence_threshold {
            return Ok(Converged { value, cutoff, converged: true, change });
        }
        value = next;
        cutoff = next_cut;
    }
    Ok(Converged { value, cutoff, converged: false, change })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::BlochVector;

    fn cfg(n: usize) -> PropagatorConfig {
        PropagatorConfig::default().with_cutoff(FockCutoff::new(n).unwrap())
    }

    #[test]
    fn rwa_transfer_flips_equator() {
        let p = ModelParams::new(0.25).unwrap().with_rwa(true);
        let s = Schedule::standard(&p, Window::Rectangular).unwrap();
        let r = BlochVector::new(0.3, -0.5, 0.6).unwrap();
        let rho = DensityMatrix::from_bloch(r, Subsystem::Qubit1).unwrap();
        let out = run_protocol(&rho, &p, &s, &cfg(4), false).unwrap();
        let q2 = out.partial_trace(&[Subsystem::Qubit2]).unwrap().bloch_vector().unwrap();
        assert!((q2.x + 0.3).abs() < 1e-8 && (q2.y - 0.5).abs() < 1e-8 && (q2.z - 0.6).abs() < 1e-8, "{q2}");
    }

    #[test]
    fn stage_input_is_checked() {
        let p = ModelParams::new(0.25).unwrap();
        let s = Schedule::standard(&p, Window::Rectangular).unwrap().with_stage(Stage::E2);
        let rho = DensityMatrix::maximally_mixed(Layout::single(Subsystem::Qubit1, 2));
        assert!(matches!(run_protocol(&rho, &p, &s, &cfg(4), false), Err(Error::InvalidStage(_))));
    }

    #[test]
    fn dilation_matches_direct_run() {
        let p = ModelParams::new(0.5).unwrap();
        let s = Schedule::standard(&p, Window::Rectangular).unwrap();
        let c = cfg(12);
        let rho = DensityMatrix::from_bloch(BlochVector::new(0.1, 0.4, -0.3).unwrap(), Subsystem::Qubit1).unwrap();
        let direct = run_protocol(&rho, &p, &s, &c, true).unwrap();
        let dil = ChannelDilation::compute(&p, &s, &c).unwrap();
        let joint = dil.joint_state(&rho).unwrap();
        let keep = [Subsystem::Reference, Subsystem::Qubit2];
        let a = direct.partial_trace(&keep).unwrap();
        let b = joint.partial_trace(&keep).unwrap();
        assert!(crate::hilbert::max_abs(&(a.matrix() - b.matrix())) < 1e-9);
    }

    #[test]
    fn mixed_output_has_unit_trace() {
        let p = ModelParams::new(0.5).unwrap();
        let s = Schedule::standard(&p, Window::Rectangular).unwrap();
        let rho = DensityMatrix::maximally_mixed(Layout::single(Subsystem::Qubit1, 2));
        let out = run_protocol(&rho, &p, &s, &cfg(10), false).unwrap();
        let ProtocolOutput::Mixed(m) = out else { panic!("expected a mixed state") };
        assert!((m.trace().re - 1.0).abs() < 1e-10);
        assert!(m.eigenvalues().last().unwrap() > &-1e-10);
    }
}
