//! Entropies, coherent information, single-shot capacity and the timing
//! optimizer of the transfer protocol.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_protocol, ChannelDilation, ModelParams, PropagatorConfig, Schedule, Stage, Window};
use crate::error::{Error, Result};
use crate::hilbert::{BlochVector, DensityMatrix, JointState, Layout, PureState, Subsystem};
use crate::simplex::{minimize, SimplexOptions};

/// `−Tr ρ log₂ ρ`, negative eigenvalues clipped to zero.
pub fn entropy(rho: &DensityMatrix) -> f64 {
    rho.eigenvalues().into_iter().filter(|&l| l > 0.0).map(|l| -l * l.log2()).sum::<f64>().max(0.0)
}

/// Output entropy `S(E(ρ))` and entropy exchange `S_e = S(R ⊗ out)` read off
/// one joint pure state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyBalance {
    pub output: f64,
    pub exchange: f64,
}

impl EntropyBalance {
    pub fn coherent_information(&self) -> f64 {
        self.output - self.exchange
    }
}

/// Entropies of a pure joint state on `R ⊗ Q1 ⊗ C ⊗ Q2` for the channel
/// ending on `output`.
pub fn entropy_balance(joint: &PureState, output: Subsystem) -> Result<EntropyBalance> {
    Ok(EntropyBalance {
        output: entropy(&joint.partial_trace(&[output])?),
        exchange: entropy(&joint.partial_trace(&[Subsystem::Reference, output])?),
    })
}

/// Entropy of everything except `R` and `output`; equals the entropy
/// exchange for a pure joint state.
pub fn complement_entropy(joint: &PureState, output: Subsystem) -> Result<f64> {
    let keep: Vec<Subsystem> = joint
        .layout()
        .parts()
        .iter()
        .map(|(s, _)| *s)
        .filter(|s| *s != Subsystem::Reference && *s != output)
        .collect();
    Ok(entropy(&joint.partial_trace(&keep)?))
}

fn direct_balance(params: &ModelParams, schedule: &Schedule, config: &PropagatorConfig, rho: &DensityMatrix) -> Result<EntropyBalance> {
    let joint = match run_protocol(rho, params, schedule, config, true)? {
        crate::dynamics::ProtocolOutput::Pure(psi) => psi,
        crate::dynamics::ProtocolOutput::Mixed(_) => unreachable!("a reference was attached"),
    };
    entropy_balance(&joint, schedule.stage.output())
}

/// `S[(I ⊗ E)(|ψ⟩⟨ψ|)]` for a purification `|ψ⟩` of `rho`.
pub fn entropy_exchange(params: &ModelParams, schedule: &Schedule, config: &PropagatorConfig, rho: &DensityMatrix) -> Result<f64> {
    Ok(direct_balance(params, schedule, config, rho)?.exchange)
}

/// `I_c = S(E(ρ)) − S_e` from one propagation with the reference attached.
pub fn coherent_information(params: &ModelParams, schedule: &Schedule, config: &PropagatorConfig, rho: &DensityMatrix) -> Result<f64> {
    Ok(direct_balance(params, schedule, config, rho)?.coherent_information())
}

/// `I_c` of the stage described by `dilation`.
pub fn dilated_coherent_information(dilation: &ChannelDilation, rho: &DensityMatrix) -> Result<f64> {
    Ok(entropy_balance(&dilation.joint_state(rho)?, dilation.stage().output())?.coherent_information())
}

/// Coherent information of `ρ_u = I/2` on `Q1`.
pub fn unpolarized_coherent_information(dilation: &ChannelDilation) -> Result<f64> {
    dilated_coherent_information(dilation, &DensityMatrix::maximally_mixed(Layout::single(Subsystem::Qubit1, 2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    /// `max(best I_c, 0)`.
    pub q1: f64,
    pub best_ic: f64,
    pub best_input: BlochVector,
    /// False when a simplex refinement hit its iteration cap.
    pub converged: bool,
    pub evaluations: usize,
}

/// Deterministic starting set over the Bloch ball: the centre, radial shells
/// along axes and cube diagonals, and an equatorial ring.
pub fn bloch_grid() -> Vec<BlochVector> {
    let s = 1.0 / 3f64.sqrt();
    let mut dirs = vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                dirs.push([sx * s, sy * s, sz * s]);
            }
        }
    }
    let mut grid = vec![BlochVector::ORIGIN];
    for r in [0.25, 0.5, 0.75, 1.0] {
        grid.extend(dirs.iter().map(|d| BlochVector::new_unchecked(r * d[0], r * d[1], r * d[2])));
    }
    for k in 0..8 {
        let phi = (2 * k + 1) as f64 * PI / 8.0;
        grid.push(BlochVector::new_unchecked(phi.cos(), phi.sin(), 0.0));
    }
    grid
}

/// Maps an unconstrained point into the unit ball.
fn to_ball(v: &[f64]) -> BlochVector {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1.0);
    BlochVector::new_unchecked(v[0] / n, v[1] / n, v[2] / n)
}

/// Maximizes `I_c` over qubit inputs of `dilation`.
pub fn q1_of(dilation: &ChannelDilation) -> Result<CapacityEstimate> {
    if dilation.input_dim() != 2 {
        return Err(Error::InvalidStage("capacity search needs a qubit input".into()));
    }
    let label = dilation.stage().input();
    let ic = |r: BlochVector| -> Result<f64> { dilated_coherent_information(dilation, &DensityMatrix::from_bloch(r, label)?) };
    let grid = bloch_grid();
    let values: Vec<f64> = grid.par_iter().map(|r| ic(*r)).collect::<Result<_>>()?;
    let mut ranked: Vec<usize> = (0..grid.len()).collect();
    ranked.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let refined: Vec<(BlochVector, f64, bool, usize)> = ranked[..3]
        .par_iter()
        .map(|&i| {
            let start = grid[i].to_vector();
            let mut count = 0;
            let res = minimize(
                |v| {
                    count += 1;
                    ic(to_ball(v)).map(|x| -x).unwrap_or(f64::INFINITY)
                },
                start.as_slice(),
                &[0.1, 0.1, 0.1],
                SimplexOptions::default(),
            );
            (to_ball(&res.x), -res.value, res.converged, count)
        })
        .collect();

    let mut best = (grid[ranked[0]], values[ranked[0]]);
    let mut converged = true;
    let mut evaluations = grid.len();
    for (r, v, c, n) in refined {
        converged &= c;
        evaluations += n;
        if v > best.1 {
            best = (r, v);
        }
    }
    Ok(CapacityEstimate { q1: best.1.max(0.0), best_ic: best.1, best_input: best.0, converged, evaluations })
}

/// Single-shot capacity `Q1 = max(max_ρ I_c, 0)` of the selected stage,
/// searched over the whole Bloch ball.
pub fn q1(params: &ModelParams, schedule: &Schedule, config: &PropagatorConfig) -> Result<CapacityEstimate> {
    if schedule.stage.input() != Subsystem::Qubit1 {
        return Err(Error::InvalidStage(format!("stage {:?} does not take a qubit input", schedule.stage)));
    }
    q1_of(&ChannelDilation::compute(params, schedule, config)?)
}

/// `Q1` of the first stage `Q1 → C`.
pub fn q1_stage_e1(params: &ModelParams, schedule: &Schedule, config: &PropagatorConfig) -> Result<CapacityEstimate> {
    q1(params, &schedule.with_stage(Stage::E1), config)
}

/// `I_c / (T1 + Tc + T2)`.
pub fn rate_of(ic: f64, schedule: &Schedule) -> Result<f64> {
    let t = schedule.duration();
    if t <= 0.0 {
        return Err(Error::ZeroDuration);
    }
    Ok(ic / t)
}

/// Coherent information per unit protocol time.
pub fn transmission_rate(params: &ModelParams, schedule: &Schedule, config: &PropagatorConfig, rho: &DensityMatrix) -> Result<f64> {
    if schedule.duration() <= 0.0 {
        return Err(Error::ZeroDuration);
    }
    rate_of(coherent_information(params, schedule, config, rho)?, schedule)
}

/// `T1`, `T2` in units of `τ = π/2g`, `Tc` in absolute time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingCandidate {
    pub t1_frac: f64,
    pub t2_frac: f64,
    pub tc: f64,
}

impl TimingCandidate {
    pub const STANDARD: TimingCandidate = TimingCandidate { t1_frac: 1.0, t2_frac: 1.0, tc: 0.0 };

    pub fn schedule(&self, params: &ModelParams, window: Window) -> Result<Schedule> {
        let tau = params.swap_time()?;
        Schedule::new(self.t1_frac * tau, self.tc, self.t2_frac * tau, window)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingOptimum {
    pub candidate: TimingCandidate,
    pub value: f64,
    /// `I_c(ρ_u)` at the standard timing.
    pub standard_value: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Search box of the timing optimizer.
pub const FRACTION_RANGE: (f64, f64) = (0.8, 1.2);
pub const IDLE_RANGE: (f64, f64) = (0.0, 2.0 * PI);

/// Maximizes `I_c(ρ_u)` over `T1, T2 ∈ [0.8, 1.2]·τ` and `Tc ∈ [0, 2π]`.
///
/// The channel only depends on `Tc` modulo `π/ω` (the counter-rotating
/// phases are `e^{±2iωt}`), so the idle grid spans one period and the
/// reported `Tc` is the shortest equivalent idle time.
pub fn optimize_timing(params: &ModelParams, window: Window, config: &PropagatorConfig) -> Result<TimingOptimum> {
    params.swap_time()?;
    let period = PI / params.omega;
    let clamp = |v: &[f64]| TimingCandidate {
        t1_frac: v[0].clamp(FRACTION_RANGE.0, FRACTION_RANGE.1),
        t2_frac: v[1].clamp(FRACTION_RANGE.0, FRACTION_RANGE.1),
        tc: v[2].clamp(IDLE_RANGE.0, IDLE_RANGE.1).rem_euclid(period),
    };
    let value = |c: &TimingCandidate| -> Result<f64> {
        let d = ChannelDilation::compute(params, &c.schedule(params, window)?, config)?;
        unpolarized_coherent_information(&d)
    };

    let fracs = [0.8, 0.9, 1.0, 1.1, 1.2];
    let mut grid = Vec::with_capacity(200);
    for &t1 in &fracs {
        for &t2 in &fracs {
            for k in 0..8 {
                grid.push(TimingCandidate { t1_frac: t1, t2_frac: t2, tc: k as f64 * period / 8.0 });
            }
        }
    }
    let values: Vec<f64> = grid.par_iter().map(&value).collect::<Result<_>>()?;
    let standard_idx = grid.iter().position(|c| *c == TimingCandidate::STANDARD).expect("standard timing on the grid");
    let standard_value = values[standard_idx];
    let best_idx = (0..grid.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });

    let start = grid[best_idx];
    let mut evaluations = grid.len();
    let res = minimize(
        |v| {
            evaluations += 1;
            value(&clamp(v)).map(|x| -x).unwrap_or(f64::INFINITY)
        },
        &[start.t1_frac, start.t2_frac, start.tc],
        &[0.05, 0.05, period / 16.0],
        SimplexOptions::default(),
    );
    let (candidate, best) = if -res.value > values[best_idx] {
        (clamp(&res.x), -res.value)
    } else {
        (start, values[best_idx])
    };
    Ok(TimingOptimum { candidate, value: best, standard_value, converged: res.converged, evaluations })
}
