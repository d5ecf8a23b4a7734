//! Time evolution of the `Q1 ⊗ C ⊗ Q2` bus in the interaction picture.
//!
//! The Rabi interaction `g σx⁽ᵏ⁾ (a + a†)` of qubit `k` is switched on by a
//! window `f_k(t)`; qubit 1 couples on `[0, T1]` and qubit 2 on
//! `[T1 + Tc, T1 + Tc + T2]`. States are propagated with an adaptive
//! eighth-order integrator and checked against two exact oracles.

mod hamiltonian;
mod oracle;
mod propagate;
mod protocol;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{FockCutoff, Subsystem};

pub use hamiltonian::interaction_hamiltonian;
pub(crate) use hamiltonian::BusHamiltonian;
pub use oracle::{coefficient_ode_oracle, exact_step_oracle, RabiCoefficients};
pub use propagate::{propagate, Propagation};
pub use protocol::{
    converge_cutoff, dce_photons, run_protocol, run_protocol_from, ChannelDilation, Converged,
    DceObservable, ProtocolOutput,
};

/// Physical parameters in units `ħ = ω = 1` unless `omega` says otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub g: f64,
    /// Drop the counter-rotating terms `σ+a†` and `σ−a`.
    pub rwa: bool,
}

impl ModelParams {
    pub fn new(g: f64) -> Result<Self> {
        let p = ModelParams { omega: 1.0, g, rwa: false };
        p.validate()?;
        Ok(p)
    }

    pub fn with_rwa(mut self, rwa: bool) -> Self {
        self.rwa = rwa;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {}", self.omega)));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::InvalidParameter(format!("g must be non-negative, got {}", self.g)));
        }
        Ok(())
    }

    /// RWA swap time `τ = π / 2g`.
    pub fn swap_time(&self) -> Result<f64> {
        if self.g <= 0.0 {
            return Err(Error::InvalidParameter("swap time π/2g undefined for g = 0".into()));
        }
        Ok(PI / (2.0 * self.g))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Window {
    /// Sudden switch on and off.
    Rectangular,
    /// `1 − ξ cos(2π t/T)`; same area as the rectangular window.
    Hamming { xi: f64 },
}

impl Window {
    pub fn hamming(xi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::InvalidParameter(format!("Hamming depth must lie in [0, 1], got {xi}")));
        }
        Ok(Window::Hamming { xi })
    }

    pub fn value(&self, t_k: f64, len: f64) -> f64 {
        window_value(*self, t_k, len)
    }

    /// True when the coupling is constant while the window is open.
    pub fn is_constant(&self) -> bool {
        match *self {
            Window::Rectangular => true,
            Window::Hamming { xi } => xi == 0.0,
        }
    }
}

/// Envelope `f_k` at time `t_k` after the window opened; zero outside `[0, len]`
/// and for an empty window.
pub fn window_value(window: Window, t_k: f64, len: f64) -> f64 {
    if !(len > 0.0) || !(0.0..=len).contains(&t_k) {
        return 0.0;
    }
    match window {
        Window::Rectangular => 1.0,
        Window::Hamming { xi } => 1.0 - xi * (2.0 * PI * t_k / len).cos(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// `Q1 → Q2`.
    Full,
    /// `Q1 → C`, stops after `T1`.
    E1,
    /// `C → Q2`, runs only the second coupling window.
    E2,
}

impl Stage {
    /// Subsystem carrying the channel input.
    pub fn input(self) -> Subsystem {
        match self {
            Stage::Full | Stage::E1 => Subsystem::Qubit1,
            Stage::E2 => Subsystem::Cavity,
        }
    }

    /// Subsystem carrying the channel output.
    pub fn output(self) -> Subsystem {
        match self {
            Stage::Full | Stage::E2 => Subsystem::Qubit2,
            Stage::E1 => Subsystem::Cavity,
        }
    }
}

/// One coupling window of a schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub qubit: Subsystem,
    pub start: f64,
    pub len: f64,
}

impl Segment {
    pub fn end(&self) -> f64 {
        self.start + self.len
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// `Q1`–`C` interaction time.
    pub t1: f64,
    /// Idle time between the two windows.
    pub tc: f64,
    /// `C`–`Q2` interaction time.
    pub t2: f64,
    pub window: Window,
    pub stage: Stage,
}

impl Schedule {
    pub fn new(t1: f64, tc: f64, t2: f64, window: Window) -> Result<Self> {
        for (name, v) in [("T1", t1), ("Tc", tc), ("T2", t2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        if let Window::Hamming { xi } = window {
            Window::hamming(xi)?;
        }
        Ok(Schedule { t1, tc, t2, window, stage: Stage::Full })
    }

    /// `T1 = T2 = π/2g`, `Tc = 0`.
    pub fn standard(params: &ModelParams, window: Window) -> Result<Self> {
        let tau = params.swap_time()?;
        Schedule::new(tau, 0.0, tau, window)
    }

    pub fn with_stage(mut self, stage: Stage) -> Self {
        self.stage = stage;
        self
    }

    pub fn duration(&self) -> f64 {
        self.t1 + self.tc + self.t2
    }

    /// Coupling windows that the selected stage runs through.
    pub fn segments(&self) -> Vec<Segment> {
        let first = Segment { qubit: Subsystem::Qubit1, start: 0.0, len: self.t1 };
        let second = Segment { qubit: Subsystem::Qubit2, start: self.t1 + self.tc, len: self.t2 };
        match self.stage {
            Stage::Full => vec![first, second],
            Stage::E1 => vec![first],
            Stage::E2 => vec![second],
        }
    }

    /// Time at which the selected stage ends.
    pub fn end_time(&self) -> f64 {
        match self.stage {
            Stage::E1 => self.t1,
            Stage::Full | Stage::E2 => self.duration(),
        }
    }

    /// Time at which the selected stage starts.
    pub fn start_time(&self) -> f64 {
        match self.stage {
            Stage::Full | Stage::E1 => 0.0,
            Stage::E2 => self.t1 + self.tc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    pub cutoff: FockCutoff,
    pub dt_initial: f64,
    /// Local error tolerance of the integrator.
    pub tol: f64,
    /// Largest observable change accepted under cutoff doubling.
    pub convergence_threshold: f64,
}

impl PropagatorConfig {
    pub fn with_cutoff(mut self, cutoff: FockCutoff) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.dt_initial > 0.0) {
            return Err(Error::InvalidParameter("tolerance and initial step must be positive".into()));
        }
        Ok(())
    }
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            cutoff: FockCutoff::default(),
            dt_initial: 0.05,
            tol: 1e-10,
            convergence_threshold: 1e-6,
        }
    }
}
