//! Qubit channels of the bus: Bloch-sphere affine maps and Choi matrices.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_protocol, run_protocol_from, ModelParams, PropagatorConfig, Schedule, Stage};
use crate::error::{Error, Result};
use crate::hilbert::{
    bloch_of, hermitian_eigen, max_abs, qubit_ops, BlochVector, DensityMatrix, JointState, Layout,
    PureState, Subsystem, C64, ONE, ZERO,
};

/// `r ↦ M r + a` on Bloch vectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub m: Matrix3<f64>,
    pub a: Vector3<f64>,
}

/// The six numbers that describe a map of the block form
/// `M = [[m_xx, m_xy, 0], [m_yx, m_yy, 0], [0, 0, m_zz]]`, `a = (0, 0, a_z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FanoParameters {
    pub m_xx: f64,
    pub m_xy: f64,
    pub m_yx: f64,
    pub m_yy: f64,
    pub m_zz: f64,
    pub a_z: f64,
}

/// Entries that vanish for the block form, in the order
/// `m_xz, m_yz, m_zx, m_zy, a_x, a_y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralResiduals {
    pub m_xz: f64,
    pub m_yz: f64,
    pub m_zx: f64,
    pub m_zy: f64,
    pub a_x: f64,
    pub a_y: f64,
}

impl StructuralResiduals {
    pub fn as_array(&self) -> [f64; 6] {
        [self.m_xz, self.m_yz, self.m_zx, self.m_zy, self.a_x, self.a_y]
    }

    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl AffineMap {
    pub fn new(m: Matrix3<f64>, a: Vector3<f64>) -> Self {
        AffineMap { m, a }
    }

    pub fn identity() -> Self {
        AffineMap { m: Matrix3::identity(), a: Vector3::zeros() }
    }

    pub fn from_fano(p: &FanoParameters) -> Self {
        AffineMap {
            m: Matrix3::new(p.m_xx, p.m_xy, 0.0, p.m_yx, p.m_yy, 0.0, 0.0, 0.0, p.m_zz),
            a: Vector3::new(0.0, 0.0, p.a_z),
        }
    }

    pub fn apply(&self, r: &BlochVector) -> BlochVector {
        BlochVector::from_vector(&(self.m * r.to_vector() + self.a))
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap { m: self.m * inner.m, a: self.m * inner.a + self.a }
    }

    pub fn structural_residuals(&self) -> StructuralResiduals {
        StructuralResiduals {
            m_xz: self.m[(0, 2)],
            m_yz: self.m[(1, 2)],
            m_zx: self.m[(2, 0)],
            m_zy: self.m[(2, 1)],
            a_x: self.a[0],
            a_y: self.a[1],
        }
    }

    pub fn fano_parameters(&self) -> FanoParameters {
        FanoParameters {
            m_xx: self.m[(0, 0)],
            m_xy: self.m[(0, 1)],
            m_yx: self.m[(1, 0)],
            m_yy: self.m[(1, 1)],
            m_zz: self.m[(2, 2)],
            a_z: self.a[2],
        }
    }

    /// Image of the operator `x` (not necessarily a state).
    fn apply_operator(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let p = qubit_ops();
        let paulis = [&p.x.matrix, &p.y.matrix, &p.z.matrix];
        let tr = x.trace();
        let coords: Vec<C64> = paulis.iter().map(|s| (x * *s).trace()).collect();
        let mut out = DMatrix::identity(2, 2) * tr;
        for (k, s) in paulis.iter().enumerate() {
            let mut c = tr * self.a[k];
            for (j, cj) in coords.iter().enumerate() {
                c += *cj * self.m[(k, j)];
            }
            out += *s * c;
        }
        out / C64::from(2.0)
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        let mut j = DMatrix::from_element(4, 4, ZERO);
        for i in 0..2 {
            for k in 0..2 {
                let mut e = DMatrix::from_element(2, 2, ZERO);
                e[(i, k)] = ONE;
                j.view_mut((2 * i, 2 * k), (2, 2)).copy_from(&self.apply_operator(&e));
            }
        }
        ChoiMatrix { matrix: j, d_in: 2, d_out: 2 }
    }
}

/// `ρ' = (I + (M r + a)·σ)/2`.
pub fn apply_affine(map: &AffineMap, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let r = rho.bloch_vector()?;
    let out = map.apply(&r);
    let label = rho.layout().parts()[0].0;
    DensityMatrix::from_bloch(out, label)
}

/// `J = Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)`, input index slow.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    pub matrix: DMatrix<C64>,
    pub d_in: usize,
    pub d_out: usize,
}

impl ChoiMatrix {
    pub fn new(matrix: DMatrix<C64>, d_in: usize, d_out: usize) -> Result<Self> {
        if matrix.nrows() != d_in * d_out || !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: d_in * d_out, found: matrix.nrows() });
        }
        Ok(ChoiMatrix { matrix, d_in, d_out })
    }

    pub fn identity(d: usize) -> Self {
        let mut j = DMatrix::from_element(d * d, d * d, ZERO);
        for i in 0..d {
            for k in 0..d {
                j[(i * d + i, k * d + k)] = ONE;
            }
        }
        ChoiMatrix { matrix: j, d_in: d, d_out: d }
    }

    /// `E(|i⟩⟨j|)`.
    pub fn block(&self, i: usize, j: usize) -> DMatrix<C64> {
        self.matrix.view((i * self.d_out, j * self.d_out), (self.d_out, self.d_out)).into_owned()
    }

    /// `E(x) = Σ_ij x_ij E(|i⟩⟨j|)`.
    pub fn apply(&self, x: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        if x.nrows() != self.d_in || x.ncols() != self.d_in {
            return Err(Error::DimensionMismatch { expected: self.d_in, found: x.nrows() });
        }
        let mut out = DMatrix::from_element(self.d_out, self.d_out, ZERO);
        for i in 0..self.d_in {
            for j in 0..self.d_in {
                if x[(i, j)] != ZERO {
                    out += self.block(i, j) * x[(i, j)];
                }
            }
        }
        Ok(out)
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &ChoiMatrix) -> Result<ChoiMatrix> {
        if first.d_out != self.d_in {
            return Err(Error::DimensionMismatch { expected: self.d_in, found: first.d_out });
        }
        let (d_in, d_out) = (first.d_in, self.d_out);
        let mut j = DMatrix::from_element(d_in * d_out, d_in * d_out, ZERO);
        for a in 0..d_in {
            for b in 0..d_in {
                let e = self.apply(&first.block(a, b))?;
                j.view_mut((a * d_out, b * d_out), (d_out, d_out)).copy_from(&e);
            }
        }
        Ok(ChoiMatrix { matrix: j, d_in, d_out })
    }

    /// Eigenvalues of `J / d_in`, descending.
    pub fn normalized_eigenvalues(&self) -> Vec<f64> {
        let (vals, _) = hermitian_eigen(&self.matrix);
        vals.into_iter().map(|l| l / self.d_in as f64).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.matrix).0.last().copied().unwrap_or(0.0)
    }

    /// `max |Tr_out J − I|`.
    pub fn trace_preservation_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.d_in {
            for j in 0..self.d_in {
                let t = self.block(i, j).trace();
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((t - target).norm());
            }
        }
        worst
    }

    /// Number of eigenvalues of `J / d_in` above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.normalized_eigenvalues().iter().filter(|&&l| l > threshold).count()
    }

    /// Kraus operators `K_k = √λ_k · unvec(v_k)` for eigenvalues above `threshold`.
    pub fn kraus(&self, threshold: f64) -> Result<Vec<DMatrix<C64>>> {
        let (vals, vecs) = hermitian_eigen(&self.matrix);
        let min = vals.last().copied().unwrap_or(0.0);
        if min < -1e-8 {
            return Err(Error::NotCompletelyPositive(min));
        }
        Ok(vals
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > threshold)
            .map(|(k, &l)| {
                let s = l.sqrt();
                DMatrix::from_fn(self.d_out, self.d_in, |a, i| vecs[(i * self.d_out + a, k)] * s)
            })
            .collect())
    }

    /// Bloch-sphere form of a qubit-to-qubit channel.
    pub fn to_affine(&self) -> Result<AffineMap> {
        if self.d_in != 2 || self.d_out != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: self.d_in.max(self.d_out) });
        }
        let p = qubit_ops();
        let half = DMatrix::<C64>::identity(2, 2) / C64::from(2.0);
        let a = bloch_of(&self.apply(&half)?).to_vector();
        let mut m = Matrix3::zeros();
        for (k, s) in [&p.x.matrix, &p.y.matrix, &p.z.matrix].into_iter().enumerate() {
            let out = bloch_of(&self.apply(&(&half + s / C64::from(2.0)))?).to_vector();
            m.set_column(k, &(out - a));
        }
        Ok(AffineMap { m, a })
    }
}

/// `E2 ∘ E1`.
pub fn stage_compose(e1: &ChoiMatrix, e2: &ChoiMatrix) -> Result<ChoiMatrix> {
    e2.after(e1)
}

/// Bloch-sphere map of the full transfer, from the protocol run on `ρ_u`
/// and on the three `+1` Pauli eigenstates.
pub fn tomography(params: &ModelParams, schedule: &Schedule, config: &PropagatorConfig) -> Result<AffineMap> {
    if schedule.stage != Stage::Full {
        return Err(Error::InvalidStage("tomography maps Q1 to Q2 and needs the full stage".into()));
    }
    let inputs = [
        BlochVector::ORIGIN,
        BlochVector::new_unchecked(1.0, 0.0, 0.0),
        BlochVector::new_unchecked(0.0, 1.0, 0.0),
        BlochVector::new_unchecked(0.0, 0.0, 1.0),
    ];
    let outputs: Vec<Vector3<f64>> = inputs
        .par_iter()
        .map(|r| {
            let rho = DensityMatrix::from_bloch(*r, Subsystem::Qubit1)?;
            let out = run_protocol(&rho, params, schedule, config, false)?;
            Ok(out.partial_trace(&[Subsystem::Qubit2])?.bloch_vector()?.to_vector())
        })
        .collect::<Result<_>>()?;
    let a = outputs[0];
    let mut m = Matrix3::zeros();
    for k in 0..3 {
        m.set_column(k, &(outputs[k + 1] - a));
    }
    Ok(AffineMap { m, a })
}

/// Choi matrix of the selected stage from one run on `|Φ⁺⟩` between a
/// reference and the stage's input.
pub fn choi_of_protocol(params: &ModelParams, schedule: &Schedule, config: &PropagatorConfig) -> Result<ChoiMatrix> {
    let stage = schedule.stage;
    let d_in = match stage.input() {
        Subsystem::Cavity => config.cutoff.dim(),
        _ => 2,
    };
    let layout = Layout::new(vec![(Subsystem::Reference, d_in), (stage.input(), d_in)])?;
    let mut amps = DVector::from_element(d_in * d_in, ZERO);
    for i in 0..d_in {
        amps[i * d_in + i] = C64::from(1.0 / (d_in as f64).sqrt());
    }
    let phi = PureState::new(amps, layout)?;
    let out = run_protocol_from(&phi, params, schedule, config)?;
    let rho = out.state.partial_trace(&[Subsystem::Reference, stage.output()])?;
    let d_out = rho.matrix().nrows() / d_in;
    ChoiMatrix::new(rho.into_matrix() * C64::from(d_in as f64), d_in, d_out)
}

/// Largest entrywise difference of two Choi matrices.
pub fn choi_distance(a: &ChoiMatrix, b: &ChoiMatrix) -> Result<f64> {
    if a.matrix.shape() != b.matrix.shape() {
        return Err(Error::DimensionMismatch { expected: a.matrix.nrows(), found: b.matrix.nrows() });
    }
    Ok(max_abs(&(&a.matrix - &b.matrix)))
}
