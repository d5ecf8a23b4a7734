//! Parameter sweeps over the coupling strength and the reports built on them.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{tomography, AffineMap, FanoParameters, StructuralResiduals};
use crate::dynamics::{
    converge_cutoff, dce_photons, ChannelDilation, DceObservable, ModelParams, PropagatorConfig, Schedule, Stage,
    Window,
};
use crate::error::{Error, Result};
use crate::fano::{elementary_sequence, kraus_from_sequence, ElementaryMapSequence, Pole};
use crate::hilbert::{mean_photon_number, DensityMatrix, FockCutoff, Layout, Subsystem, C64};
use crate::information::{dilated_coherent_information, optimize_timing, q1_of, rate_of, TimingOptimum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Standard timing, coupling window as configured (rectangular by default).
    P0,
    /// Standard timing with the Hamming window of depth `xi`.
    P1,
    /// Timing optimized over `T1`, `T2`, `Tc`.
    P2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    IcU,
    Q1,
    NEnd,
    NDce,
    Rate,
}

impl Observable {
    pub const ALL: [Observable; 5] =
        [Observable::IcU, Observable::Q1, Observable::NEnd, Observable::NDce, Observable::Rate];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowFamily {
    Rect,
    Hamming,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Starting cutoff, doubled while observables still move by more than
/// `threshold`, up to `max_n_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffPolicy {
    pub n_max: usize,
    pub max_n_max: usize,
    pub threshold: f64,
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        CutoffPolicy { n_max: 32, max_n_max: 64, threshold: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub g_min: f64,
    pub g_max: f64,
    pub steps: usize,
    pub window: WindowFamily,
    pub xi: f64,
    pub protocol: Protocol,
    pub stage: Stage,
    pub rwa: bool,
    pub observables: Vec<Observable>,
    pub cutoff: CutoffPolicy,
    /// Local error tolerance of the integrator.
    pub tol: f64,
    /// Worker threads; `None` uses the available parallelism.
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            g_min: 0.05,
            g_max: 1.0,
            steps: 96,
            window: WindowFamily::Rect,
            xi: 0.5,
            protocol: Protocol::P0,
            stage: Stage::Full,
            rwa: false,
            observables: Observable::ALL.to_vec(),
            cutoff: CutoffPolicy::default(),
            tol: 1e-10,
            jobs: None,
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.g_min > 0.0 && self.g_min <= self.g_max && self.g_max.is_finite()) {
            return Err(Error::Config(format!("need 0 < g_min ≤ g_max, got [{}, {}]", self.g_min, self.g_max)));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return Err(Error::Config(format!("xi must lie in [0, 1], got {}", self.xi)));
        }
        if self.cutoff.n_max == 0 || self.cutoff.max_n_max < self.cutoff.n_max {
            return Err(Error::Config("cutoff must satisfy 1 ≤ n_max ≤ max_n_max".into()));
        }
        if !(self.tol > 0.0) || !(self.cutoff.threshold > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if self.protocol == Protocol::P2 && self.stage != Stage::Full {
            return Err(Error::Config("timing optimization needs the full stage".into()));
        }
        Ok(())
    }

    /// Uniform grid `g_min..=g_max` with `steps` points.
    pub fn grid(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.g_min];
        }
        let h = (self.g_max - self.g_min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| if i + 1 == self.steps { self.g_max } else { self.g_min + i as f64 * h }).collect()
    }

    /// Coupling window implied by protocol, family and depth.
    pub fn coupling_window(&self) -> Window {
        match (self.protocol, self.window) {
            (Protocol::P1, _) | (_, WindowFamily::Hamming) => Window::Hamming { xi: self.xi },
            _ => Window::Rectangular,
        }
    }

    pub fn propagator(&self) -> Result<PropagatorConfig> {
        Ok(PropagatorConfig {
            cutoff: FockCutoff::new(self.cutoff.n_max)?,
            tol: self.tol,
            convergence_threshold: self.cutoff.threshold,
            ..PropagatorConfig::default()
        })
    }

    pub fn max_cutoff(&self) -> Result<FockCutoff> {
        FockCutoff::new(self.cutoff.max_n_max)
    }

    pub fn wants(&self, o: Observable) -> bool {
        self.observables.contains(&o)
    }

    fn params(&self, g: f64) -> Result<ModelParams> {
        Ok(ModelParams::new(g)?.with_rwa(self.rwa))
    }
}

/// One row of sweep output. Observables that were not requested or are
/// undefined for the stage are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub g: f64,
    pub n_max: usize,
    #[serde(rename = "Ic_u")]
    pub ic_u: Option<f64>,
    #[serde(rename = "Q1")]
    pub q1: Option<f64>,
    pub n_end: Option<f64>,
    pub n_dce: Option<f64>,
    pub rate: Option<f64>,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "Tc")]
    pub tc: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    pub converged: bool,
}

impl SweepRecord {
    fn observables(&self) -> [Option<f64>; 5] {
        [self.ic_u, self.q1, self.n_end, self.n_dce, self.rate]
    }

    fn failed(g: f64, n_max: usize) -> Self {
        SweepRecord {
            g,
            n_max,
            ic_u: None,
            q1: None,
            n_end: None,
            n_dce: None,
            rate: None,
            t1: 0.0,
            tc: 0.0,
            t2: 0.0,
            converged: false,
        }
    }
}

/// Largest change between two records over the observables present in both.
fn record_change(a: &SweepRecord, b: &SweepRecord) -> f64 {
    a.observables()
        .iter()
        .zip(b.observables())
        .filter_map(|(x, y)| Some((x.as_ref()? - y?).abs()))
        .fold(0.0, f64::max)
}

/// Per-point failure kept next to the records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub g: f64,
    pub message: String,
    pub numerical: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub failures: Vec<PointFailure>,
}

fn unpolarized_input() -> DensityMatrix {
    DensityMatrix::maximally_mixed(Layout::single(Subsystem::Qubit1, 2))
}

/// Observables of one point at one cutoff, for a fixed schedule.
fn evaluate(
    cfg: &SweepConfig,
    params: &ModelParams,
    schedule: &Schedule,
    prop: &PropagatorConfig,
) -> Result<SweepRecord> {
    let stage = cfg.stage;
    let staged = schedule.with_stage(stage);
    let rho_u = unpolarized_input();
    let needs_channel = cfg.wants(Observable::IcU)
        || cfg.wants(Observable::Rate)
        || cfg.wants(Observable::Q1)
        || cfg.wants(Observable::NEnd);

    let (mut ic, mut q1, mut n_end) = (None, None, None);
    if needs_channel {
        let dilation = ChannelDilation::compute(params, &staged, prop)?;
        // the second stage takes the cavity state left by the first on ρ_u
        let input = match stage {
            Stage::E2 => {
                let first = ChannelDilation::compute(params, &schedule.with_stage(Stage::E1), prop)?;
                first.output_state(&rho_u)?
            }
            _ => rho_u,
        };
        let joint = dilation.joint_state(&input)?;
        if cfg.wants(Observable::IcU) || cfg.wants(Observable::Rate) {
            ic = Some(dilated_coherent_information(&dilation, &input)?);
        }
        if cfg.wants(Observable::NEnd) {
            n_end = Some(mean_photon_number(&joint)?);
        }
        if cfg.wants(Observable::Q1) && stage != Stage::E2 {
            q1 = Some(q1_of(&dilation)?.q1);
        }
    }
    let n_dce = if cfg.wants(Observable::NDce) {
        Some(dce_photons(params, schedule, prop, DceObservable::PureDce)?)
    } else {
        None
    };
    let rate = match ic {
        Some(v) if cfg.wants(Observable::Rate) => Some(rate_of(v, schedule)?),
        _ => None,
    };
    Ok(SweepRecord {
        g: params.g,
        n_max: prop.cutoff.n_max(),
        ic_u: if cfg.wants(Observable::IcU) { ic } else { None },
        q1,
        n_end,
        n_dce,
        rate,
        t1: schedule.t1,
        tc: schedule.tc,
        t2: schedule.t2,
        converged: true,
    })
}

/// Schedule used at coupling `g`; for P2 the optimizer runs at the starting cutoff.
fn schedule_for(cfg: &SweepConfig, params: &ModelParams, prop: &PropagatorConfig) -> Result<(Schedule, Option<TimingOptimum>)> {
    let window = cfg.coupling_window();
    match cfg.protocol {
        Protocol::P0 | Protocol::P1 => Ok((Schedule::standard(params, window)?, None)),
        Protocol::P2 => {
            let opt = optimize_timing(params, window, prop)?;
            Ok((opt.candidate.schedule(params, window)?, Some(opt)))
        }
    }
}

/// Evaluates one grid point under the cutoff-doubling policy.
pub fn sweep_point(cfg: &SweepConfig, g: f64) -> Result<SweepRecord> {
    let params = cfg.params(g)?;
    let prop = cfg.propagator()?;
    let (schedule, opt) = schedule_for(cfg, &params, &prop)?;
    let conv = converge_cutoff(&prop, cfg.max_cutoff()?, |p| evaluate(cfg, &params, &schedule, p), record_change)?;
    let mut record = conv.value;
    record.n_max = conv.cutoff.n_max();
    record.converged = conv.converged && opt.is_none_or(|o| o.converged);
    Ok(record)
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs the sweep; records come back in grid order and failed points are
/// kept as unconverged rows.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let grid = cfg.grid();
    let results: Vec<Result<SweepRecord>> = with_pool(cfg.jobs, || grid.par_iter().map(|&g| sweep_point(cfg, g)).collect())?;
    let mut records = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for (g, r) in grid.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                failures.push(PointFailure { g: *g, message: e.to_string(), numerical: e.is_numerical() });
                records.push(SweepRecord::failed(*g, cfg.cutoff.n_max));
            }
        }
    }
    Ok(SweepOutput { records, failures })
}

/// Sweep with the timing optimizer switched on.
pub fn run_optimize(cfg: &SweepConfig) -> Result<SweepOutput> {
    let mut cfg = cfg.clone();
    cfg.protocol = Protocol::P2;
    cfg.stage = Stage::Full;
    run_sweep(&cfg)
}

/// Fano parameters of the transfer map at one coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FanoRecord {
    pub g: f64,
    pub n_max: usize,
    pub parameters: FanoParameters,
    pub residuals: StructuralResiduals,
    pub converged: bool,
}

impl FanoRecord {
    fn values(&self) -> [f64; 12] {
        let p = &self.parameters;
        let r = self.residuals.as_array();
        [p.m_xx, p.m_xy, p.m_yx, p.m_yy, p.m_zz, p.a_z, r[0], r[1], r[2], r[3], r[4], r[5]]
    }

    pub fn map(&self) -> AffineMap {
        let p = &self.parameters;
        let r = &self.residuals;
        AffineMap::new(
            nalgebra::Matrix3::new(p.m_xx, p.m_xy, r.m_xz, p.m_yx, p.m_yy, r.m_yz, r.m_zx, r.m_zy, p.m_zz),
            nalgebra::Vector3::new(r.a_x, r.a_y, p.a_z),
        )
    }
}

/// Tomography of the transfer map at rectangular windows and standard
/// timing for one coupling, under the cutoff policy.
pub fn fano_point(cfg: &SweepConfig, g: f64) -> Result<FanoRecord> {
    let params = cfg.params(g)?;
    let schedule = Schedule::standard(&params, Window::Rectangular)?;
    let prop = cfg.propagator()?;
    let conv = converge_cutoff(
        &prop,
        cfg.max_cutoff()?,
        |p| tomography(&params, &schedule, p),
        |a, b| (a.m - b.m).abs().max().max((a.a - b.a).abs().max()),
    )?;
    Ok(FanoRecord {
        g,
        n_max: conv.cutoff.n_max(),
        parameters: conv.value.fano_parameters(),
        residuals: conv.value.structural_residuals(),
        converged: conv.converged,
    })
}

pub struct FanoOutput {
    pub records: Vec<FanoRecord>,
    pub failures: Vec<PointFailure>,
}

pub fn run_fano(cfg: &SweepConfig) -> Result<FanoOutput> {
    cfg.validate()?;
    let grid = cfg.grid();
    let results: Vec<Result<FanoRecord>> = with_pool(cfg.jobs, || grid.par_iter().map(|&g| fano_point(cfg, g)).collect())?;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (g, r) in grid.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(PointFailure { g: *g, message: e.to_string(), numerical: e.is_numerical() }),
        }
    }
    Ok(FanoOutput { records, failures })
}

/// Record values as a flat array, for format round trips.
pub fn fano_values(r: &FanoRecord) -> [f64; 12] {
    r.values()
}

/// Decomposition of the transfer map at one coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub g: f64,
    pub rwa: bool,
    pub n_max: usize,
    pub map: AffineMap,
    pub structural_residual: f64,
    pub theta: f64,
    pub toward: Pole,
    pub outer_rotation: f64,
    pub inner_rotation: f64,
    /// `outer + inner`, reduced to `(−π, π]`.
    pub net_rotation: f64,
    pub singular_values: [f64; 3],
    pub reconstruction_residual: f64,
    /// Row-major `[re, im]` entries of each operator.
    pub kraus: Option<Vec<[[f64; 2]; 4]>>,
    pub kraus_completeness: Option<f64>,
    pub kraus_error: Option<String>,
}

fn wrap(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * std::f64::consts::PI);
    if w > std::f64::consts::PI { w - 2.0 * std::f64::consts::PI } else { w }
}

pub fn decompose_report(cfg: &SweepConfig, g: f64) -> Result<DecomposeReport> {
    if !(g > 0.0) {
        return Err(Error::Config(format!("decomposition needs g > 0 (standard timing π/2g), got {g}")));
    }
    let params = cfg.params(g)?;
    let schedule = Schedule::standard(&params, Window::Rectangular)?;
    let prop = cfg.propagator()?;
    let map = tomography(&params, &schedule, &prop)?;
    let seq: ElementaryMapSequence = elementary_sequence(&map)?;
    let rec = seq.compose();
    let reconstruction_residual = (rec.m - map.m).abs().max().max((rec.a - map.a).abs().max());
    let (kraus, kraus_completeness, kraus_error) = match kraus_from_sequence(&seq) {
        Ok(ks) => {
            let mut sum = nalgebra::DMatrix::<C64>::zeros(2, 2);
            for k in &ks {
                sum += k.adjoint() * k;
            }
            let completeness = crate::hilbert::max_abs(&(sum - nalgebra::DMatrix::identity(2, 2)));
            let ops = ks
                .iter()
                .map(|k| {
                    let mut e = [[0.0; 2]; 4];
                    for (i, z) in [k[(0, 0)], k[(0, 1)], k[(1, 0)], k[(1, 1)]].iter().enumerate() {
                        e[i] = [z.re, z.im];
                    }
                    e
                })
                .collect();
            (Some(ops), Some(completeness), None)
        }
        Err(e) => (None, None, Some(e.to_string())),
    };
    Ok(DecomposeReport {
        g,
        rwa: cfg.rwa,
        n_max: prop.cutoff.n_max(),
        map,
        structural_residual: map.structural_residuals().max_abs(),
        theta: seq.displacement.theta,
        toward: seq.displacement.toward,
        outer_rotation: seq.outer_rotation,
        inner_rotation: seq.inner_rotation,
        net_rotation: wrap(seq.outer_rotation + seq.inner_rotation),
        singular_values: [seq.deformation[0], seq.deformation[1], seq.deformation[2]],
        reconstruction_residual,
        kraus,
        kraus_completeness,
        kraus_error,
    })
}

impl DecomposeReport {
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "g = {}  (rwa = {}, n_max = {})", self.g, self.rwa, self.n_max);
        let _ = writeln!(s, "M =");
        for i in 0..3 {
            let _ = writeln!(s, "  [{:+.10} {:+.10} {:+.10}]", self.map.m[(i, 0)], self.map.m[(i, 1)], self.map.m[(i, 2)]);
        }
        let _ = writeln!(s, "a = [{:+.10} {:+.10} {:+.10}]", self.map.a[0], self.map.a[1], self.map.a[2]);
        let _ = writeln!(s, "structural residual     {:.3e}", self.structural_residual);
        let _ = writeln!(s, "displacement theta      {:.12}  toward {:?}", self.theta, self.toward);
        let _ = writeln!(s, "rotation M2 (outer)     {:.12}", self.outer_rotation);
        let _ = writeln!(s, "rotation M4 (inner)     {:.12}", self.inner_rotation);
        let _ = writeln!(s, "net rotation            {:.12}", self.net_rotation);
        let _ = writeln!(
            s,
            "singular values         {:.12} {:.12} {:.12}",
            self.singular_values[0], self.singular_values[1], self.singular_values[2]
        );
        let _ = writeln!(s, "reconstruction residual {:.3e}", self.reconstruction_residual);
        match (&self.kraus, &self.kraus_error) {
            (Some(ks), _) => {
                let _ = writeln!(s, "Kraus operators ({}), completeness {:.3e}", ks.len(), self.kraus_completeness.unwrap_or(f64::NAN));
                for (n, k) in ks.iter().enumerate() {
                    let z = |e: [f64; 2]| format!("{:+.8}{:+.8}i", e[0], e[1]);
                    let _ = writeln!(s, "  K{n} = [[{}, {}], [{}, {}]]", z(k[0]), z(k[1]), z(k[2]), z(k[3]));
                }
            }
            (None, Some(e)) => {
                let _ = writeln!(s, "Kraus synthesis failed: {e}");
            }
            _ => {}
        }
        s
    }
}

/// One cutoff of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n_max: usize,
    pub ic_u: f64,
    pub n_end: f64,
    pub n_dce: f64,
    /// Largest change with respect to the previous row.
    pub change: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub g: f64,
    pub threshold: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Smallest cutoff whose doubling changed nothing by more than the threshold.
    pub recommended: Option<usize>,
}

pub const STUDY_CUTOFFS: [usize; 4] = [8, 16, 32, 64];

pub fn convergence_study(cfg: &SweepConfig, g: f64) -> Result<ConvergenceReport> {
    let params = cfg.params(g)?;
    let base = cfg.propagator()?;
    let (schedule, _) = schedule_for(cfg, &params, &base)?;
    let rows: Vec<(usize, Result<SweepRecord>)> = STUDY_CUTOFFS
        .par_iter()
        .map(|&n| {
            let mut c = cfg.clone();
            c.observables = vec![Observable::IcU, Observable::NEnd, Observable::NDce];
            c.stage = Stage::Full;
            (n, FockCutoff::new(n).and_then(|cut| evaluate(&c, &params, &schedule, &base.with_cutoff(cut))))
        })
        .collect();
    let mut out: Vec<ConvergenceRow> = Vec::new();
    for (n, r) in rows {
        let r = r?;
        let row = ConvergenceRow {
            n_max: n,
            ic_u: r.ic_u.unwrap_or(f64::NAN),
            n_end: r.n_end.unwrap_or(f64::NAN),
            n_dce: r.n_dce.unwrap_or(f64::NAN),
            change: out.last().map(|p| {
                (p.ic_u - r.ic_u.unwrap_or(f64::NAN))
                    .abs()
                    .max((p.n_end - r.n_end.unwrap_or(f64::NAN)).abs())
                    .max((p.n_dce - r.n_dce.unwrap_or(f64::NAN)).abs())
            }),
        };
        out.push(row);
    }
    let recommended = out.windows(2).find(|w| w[1].change.is_some_and(|c| c < cfg.cutoff.threshold)).map(|w| w[0].n_max);
    Ok(ConvergenceReport { g, threshold: cfg.cutoff.threshold, rows: out, recommended })
}

impl ConvergenceReport {
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = format!("g = {}  threshold = {:e}\n", self.g, self.threshold);
        let _ = writeln!(s, "{:>6} {:>24} {:>24} {:>24} {:>12}", "n_max", "Ic_u", "n_end", "n_dce", "change");
        for r in &self.rows {
            let change = r.change.map_or("-".to_string(), |c| format!("{c:.3e}"));
            let _ = writeln!(s, "{:>6} {:>24.16e} {:>24.16e} {:>24.16e} {:>12}", r.n_max, r.ic_u, r.n_end, r.n_dce, change);
        }
        match self.recommended {
            Some(n) => {
                let _ = writeln!(s, "recommended n_max = {n}");
            }
            None => {
                let _ = writeln!(s, "not converged up to n_max = {}", STUDY_CUTOFFS[STUDY_CUTOFFS.len() - 1]);
            }
        }
        s
    }
}
