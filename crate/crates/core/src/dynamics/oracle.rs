//! Reference propagators used to validate [`propagate`](super::propagate).

use nalgebra::{DMatrix, DVector};

use super::propagate::{active_windows, bus_cutoff, HARD_DRIFT};
use super::{BusHamiltonian, ModelParams, PropagatorConfig, Schedule};
use crate::error::{Error, Result};
use crate::hilbert::{hermitian_eigen, PureState, Subsystem, C64, ZERO};
use crate::integrate::{integrate, StepControl};

/// Exact propagation for rectangular windows: on every piece of `[t0, t1]`
/// with constant couplings, `ψ ← e^{iH0 b} e^{−iH(b−a)} e^{−iH0 a} ψ`
/// using the eigendecomposition of the Schrödinger-picture `H = H0 + H_I`.
pub fn exact_step_oracle(
    state: &PureState,
    t0: f64,
    t1: f64,
    params: &ModelParams,
    schedule: &Schedule,
    _config: &PropagatorConfig,
) -> Result<PureState> {
    params.validate()?;
    if !schedule.window.is_constant() {
        return Err(Error::TimeDependentWindow);
    }
    if !(t1 >= t0) {
        return Err(Error::InvalidParameter(format!("t1 = {t1} precedes t0 = {t0}")));
    }
    let cutoff = bus_cutoff(state.layout())?;
    let h = BusHamiltonian::new(params, cutoff);
    let d = h.dim();
    let energies = h.energies().to_vec();
    let mut psi = state.amplitudes().clone();

    for (seg, a, b) in active_windows(schedule, t0, t1) {
        let f = match seg.qubit {
            Subsystem::Qubit1 => [1.0, 0.0],
            _ => [0.0, 1.0],
        };
        let (vals, vecs) = hermitian_eigen(&h.schrodinger_dense(f));
        let phases = DVector::from_iterator(d, vals.iter().map(|&l| C64::from_polar(1.0, -l * (b - a))));
        let u = &vecs * DMatrix::from_diagonal(&phases) * vecs.adjoint();
        let into = DVector::from_iterator(d, energies.iter().map(|&e| C64::from_polar(1.0, -e * a)));
        let out = DVector::from_iterator(d, energies.iter().map(|&e| C64::from_polar(1.0, e * b)));
        for block in 0..psi.len() / d {
            let mut v = psi.rows(block * d, d).component_mul(&into);
            v = &u * v;
            psi.rows_mut(block * d, d).copy_from(&v.component_mul(&out));
        }
    }
    Ok(PureState::from_raw(psi, state.layout().clone()))
}

/// Amplitudes `C_{g,n}` and `C_{e,n}` of one qubit coupled to the cavity,
/// `n = 0..=n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct RabiCoefficients {
    pub ground: Vec<C64>,
    pub excited: Vec<C64>,
}

impl RabiCoefficients {
    /// `|g⟩|0⟩` with `n_max` photons allowed.
    pub fn vacuum(n_max: usize) -> Self {
        let mut ground = vec![ZERO; n_max + 1];
        ground[0] = C64::from(1.0);
        RabiCoefficients { ground, excited: vec![ZERO; n_max + 1] }
    }

    pub fn norm(&self) -> f64 {
        self.ground.iter().chain(&self.excited).map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.ground
            .iter()
            .zip(&self.excited)
            .enumerate()
            .map(|(n, (g, e))| n as f64 * (g.norm_sqr() + e.norm_sqr()))
            .sum()
    }
}

/// Integrates the amplitude equations of a single Rabi-coupled qubit
/// in the interaction picture,
///
/// ```text
/// i dC_{g,n}/dt = Ω_n C_{e,n−1} + Ω_{n+1} e^{−2iωt} C_{e,n+1}
/// i dC_{e,m}/dt = Ω_{m+1} C_{g,m+1} + Ω_m e^{+2iωt} C_{g,m−1}
/// ```
///
/// with `Ω_n = g√n` and amplitudes outside `0..=n_max` held at zero.
pub fn coefficient_ode_oracle(
    g: f64,
    omega: f64,
    init: &RabiCoefficients,
    duration: f64,
    config: &PropagatorConfig,
) -> Result<RabiCoefficients> {
    let n = init.ground.len();
    if init.excited.len() != n || n == 0 {
        return Err(Error::DimensionMismatch { expected: n, found: init.excited.len() });
    }
    if (init.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!("coefficient norm {} differs from 1", init.norm())));
    }
    let rabi: Vec<f64> = (0..=n).map(|k| g * (k as f64).sqrt()).collect();
    let mut y: Vec<C64> = init.ground.iter().chain(&init.excited).copied().collect();
    let minus_i = C64::new(0.0, -1.0);
    let rhs = |t: f64, y: &[C64], out: &mut [C64]| {
        let (cg, ce) = y.split_at(n);
        let (dg, de) = out.split_at_mut(n);
        let up = C64::from_polar(1.0, 2.0 * omega * t);
        for k in 0..n {
            let mut s = ZERO;
            if k >= 1 {
                s += ce[k - 1] * rabi[k];
            }
            if k + 1 < n {
                s += ce[k + 1] * rabi[k + 1] * up.conj();
            }
            dg[k] = minus_i * s;

            let mut s = ZERO;
            if k + 1 < n {
                s += cg[k + 1] * rabi[k + 1];
            }
            if k >= 1 {
                s += cg[k - 1] * rabi[k] * up;
            }
            de[k] = minus_i * s;
        }
    };
    let control = StepControl { tol: config.tol, h_initial: config.dt_initial };
    integrate(rhs, 0.0, duration, &mut y, control)?;
    let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > HARD_DRIFT {
        return Err(Error::NormDrift { drift: (norm - 1.0).abs(), t: duration });
    }
    let (g_part, e_part) = y.split_at(n);
    Ok(RabiCoefficients { ground: g_part.to_vec(), excited: e_part.to_vec() })
}
