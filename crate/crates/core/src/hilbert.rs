//! Finite-dimensional Hilbert-space machinery for the qubit–cavity–qubit bus.
//!
//! Conventions used throughout the crate:
//!
//! * a qubit basis is ordered `{|e⟩, |g⟩}`. Together with
//!   `σ± = (σx ∓ iσy)/2` this fixes `σz = diag(-1, +1)`, so `|g⟩` is the
//!   `+z` pole of the Bloch ball and `H0 = -ω σz / 2` gives `|e⟩` the higher
//!   energy;
//! * composite indices are ordered reference `R` (slowest), `Q1`, `C`,
//!   `Q2` (fastest).

use std::fmt;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub(crate) const ZERO: C64 = Complex::new(0.0, 0.0);
pub(crate) const ONE: C64 = Complex::new(1.0, 0.0);
pub(crate) const I: C64 = Complex::new(0.0, 1.0);

/// Index of `|e⟩` in a qubit factor.
pub const EXCITED: usize = 0;
/// Index of `|g⟩` in a qubit factor.
pub const GROUND: usize = 1;

const STATE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subsystem {
    Reference,
    Qubit1,
    Cavity,
    Qubit2,
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subsystem::Reference => "R",
            Subsystem::Qubit1 => "Q1",
            Subsystem::Cavity => "C",
            Subsystem::Qubit2 => "Q2",
        })
    }
}

/// Highest Fock occupation kept in the cavity basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FockCutoff(usize);

impl FockCutoff {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidCutoff(n_max));
        }
        Ok(FockCutoff(n_max))
    }

    pub fn n_max(self) -> usize {
        self.0
    }

    /// Dimension of the truncated cavity space.
    pub fn dim(self) -> usize {
        self.0 + 1
    }

    pub fn doubled(self) -> Self {
        FockCutoff(self.0 * 2)
    }
}

impl Default for FockCutoff {
    fn default() -> Self {
        FockCutoff(32)
    }
}

/// Ordered list of subsystems and their dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    parts: Vec<(Subsystem, usize)>,
}

/// Index bookkeeping for a bipartition of a layout.
pub(crate) struct Split {
    pub kept: Vec<usize>,
    pub traced: Vec<usize>,
    pub kept_dim: usize,
    pub traced_dim: usize,
}

impl Layout {
    pub fn new(parts: Vec<(Subsystem, usize)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidState("empty layout".into()));
        }
        for (i, &(s, d)) in parts.iter().enumerate() {
            if d == 0 {
                return Err(Error::InvalidState(format!("subsystem {s} has dimension 0")));
            }
            if parts[..i].iter().any(|&(t, _)| t == s) {
                return Err(Error::DuplicateSubsystem(s));
            }
        }
        Ok(Layout { parts })
    }

    /// `Q1 ⊗ C ⊗ Q2`.
    pub fn bus(cutoff: FockCutoff) -> Self {
        Layout {
            parts: vec![
                (Subsystem::Qubit1, 2),
                (Subsystem::Cavity, cutoff.dim()),
                (Subsystem::Qubit2, 2),
            ],
        }
    }

    pub fn single(s: Subsystem, dim: usize) -> Self {
        Layout { parts: vec![(s, dim)] }
    }

    /// Prepends a reference factor of dimension `dim`.
    pub fn with_reference(&self, dim: usize) -> Result<Self> {
        let mut parts = vec![(Subsystem::Reference, dim)];
        parts.extend_from_slice(&self.parts);
        Layout::new(parts)
    }

    pub fn parts(&self) -> &[(Subsystem, usize)] {
        &self.parts
    }

    pub fn dim(&self) -> usize {
        self.parts.iter().map(|&(_, d)| d).product()
    }

    pub fn contains(&self, s: Subsystem) -> bool {
        self.parts.iter().any(|&(t, _)| t == s)
    }

    pub fn dim_of(&self, s: Subsystem) -> Result<usize> {
        self.parts
            .iter()
            .find(|&&(t, _)| t == s)
            .map(|&(_, d)| d)
            .ok_or(Error::UnknownSubsystem(s))
    }

    pub fn position(&self, s: Subsystem) -> Result<usize> {
        self.parts
            .iter()
            .position(|&(t, _)| t == s)
            .ok_or(Error::UnknownSubsystem(s))
    }

    /// The sub-layout of `keep`, in this layout's order.
    pub fn restrict(&self, keep: &[Subsystem]) -> Result<Layout> {
        if keep.is_empty() {
            return Err(Error::EmptyKeep);
        }
        for &s in keep {
            self.position(s)?;
        }
        Layout::new(self.parts.iter().copied().filter(|(s, _)| keep.contains(s)).collect())
    }

    /// Flat index of a multi-index given in layout order.
    pub fn index_of(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.parts.len() {
            return Err(Error::DimensionMismatch { expected: self.parts.len(), found: digits.len() });
        }
        let mut idx = 0;
        for (&digit, &(s, d)) in digits.iter().zip(&self.parts) {
            if digit >= d {
                return Err(Error::InvalidState(format!("index {digit} out of range for {s}")));
            }
            idx = idx * d + digit;
        }
        Ok(idx)
    }

    pub(crate) fn split(&self, keep: &[Subsystem]) -> Result<Split> {
        let kept_layout = self.restrict(keep)?;
        let kept_dim = kept_layout.dim();
        let traced_dim = self.dim() / kept_dim;
        let dim = self.dim();
        let mut kept = vec![0; dim];
        let mut traced = vec![0; dim];
        for idx in 0..dim {
            let mut rest = idx;
            let (mut k, mut ks, mut t, mut ts) = (0, 1, 0, 1);
            for &(s, d) in self.parts.iter().rev() {
                let digit = rest % d;
                rest /= d;
                if keep.contains(&s) {
                    k += digit * ks;
                    ks *= d;
                } else {
                    t += digit * ts;
                    ts *= d;
                }
            }
            kept[idx] = k;
            traced[idx] = t;
        }
        Ok(Split { kept, traced, kept_dim, traced_dim })
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(|(s, d)| format!("{s}({d})")).collect();
        f.write_str(&parts.join("⊗"))
    }
}

/// Normalized state vector over a layout.
#[derive(Clone, Debug)]
pub struct PureState {
    amplitudes: DVector<C64>,
    layout: Layout,
}

impl PureState {
    pub fn new(amplitudes: DVector<C64>, layout: Layout) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), found: amplitudes.len() });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("state norm {norm} differs from 1")));
        }
        Ok(PureState { amplitudes, layout })
    }

    pub(crate) fn from_raw(amplitudes: DVector<C64>, layout: Layout) -> Self {
        debug_assert_eq!(amplitudes.len(), layout.dim());
        PureState { amplitudes, layout }
    }

    /// Computational basis state; `digits` follow the layout order.
    pub fn basis(layout: Layout, digits: &[usize]) -> Result<Self> {
        let idx = layout.index_of(digits)?;
        let mut amplitudes = DVector::from_element(layout.dim(), ZERO);
        amplitudes[idx] = ONE;
        Ok(PureState { amplitudes, layout })
    }

    /// Tensor product of normalized factor states, in the given order.
    pub fn product(factors: &[(Subsystem, DVector<C64>)]) -> Result<Self> {
        let layout = Layout::new(factors.iter().map(|(s, v)| (*s, v.len())).collect())?;
        let mut amplitudes = DVector::from_element(1, ONE);
        for (_, v) in factors {
            amplitudes = amplitudes.kronecker(v);
        }
        PureState::new(amplitudes, layout)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &PureState) -> Result<C64> {
        if self.layout != other.layout {
            return Err(Error::InvalidState(format!(
                "layouts differ: {} vs {}",
                self.layout, other.layout
            )));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
            layout: self.layout.clone(),
        }
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix over a layout.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
    layout: Layout,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<C64>, layout: Layout) -> Result<Self> {
        let rho = DensityMatrix::from_raw(matrix, layout)?;
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_raw(matrix: DMatrix<C64>, layout: Layout) -> Result<Self> {
        if matrix.nrows() != layout.dim() || matrix.ncols() != layout.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), found: matrix.nrows() });
        }
        Ok(DensityMatrix { matrix, layout })
    }

    pub fn validate(&self) -> Result<()> {
        let herm = max_abs(&(&self.matrix - self.matrix.adjoint()));
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.matrix.trace();
        if (tr - ONE).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = self.eigenvalues().last().copied().unwrap_or(0.0);
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn maximally_mixed(layout: Layout) -> Self {
        let d = layout.dim();
        DensityMatrix { matrix: DMatrix::identity(d, d) / C64::from(d as f64), layout }
    }

    /// Qubit state `(I + r·σ)/2` on subsystem `label`.
    pub fn from_bloch(r: BlochVector, label: Subsystem) -> Result<Self> {
        if r.norm() > 1.0 + STATE_TOL {
            return Err(Error::InvalidState(format!("Bloch vector {r} outside the unit ball")));
        }
        let p = qubit_ops();
        let m = (DMatrix::identity(2, 2)
            + p.x.matrix * C64::from(r.x)
            + p.y.matrix * C64::from(r.y)
            + p.z.matrix * C64::from(r.z))
            / C64::from(2.0);
        DensityMatrix::new(m, Layout::single(label, 2))
    }

    /// Bloch vector of a single-qubit density matrix.
    pub fn bloch_vector(&self) -> Result<BlochVector> {
        if self.matrix.nrows() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: self.matrix.nrows() });
        }
        Ok(bloch_of(&self.matrix))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Eigenvalues in descending order (not clipped).
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    /// `Tr[ρ A]`.
    pub fn expectation(&self, op: &DMatrix<C64>) -> C64 {
        (&self.matrix * op).trace()
    }
}

pub(crate) fn bloch_of(m: &DMatrix<C64>) -> BlochVector {
    let p = qubit_ops();
    let ex = |s: &DMatrix<C64>| (m * s).trace().re;
    BlochVector::new_unchecked(ex(&p.x.matrix), ex(&p.y.matrix), ex(&p.z.matrix))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let r = BlochVector { x, y, z };
        if r.norm() > 1.0 + STATE_TOL {
            return Err(Error::InvalidState(format!("Bloch vector {r} outside the unit ball")));
        }
        Ok(r)
    }

    pub const fn new_unchecked(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    pub const ORIGIN: BlochVector = BlochVector::new_unchecked(0.0, 0.0, 0.0);

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        BlochVector::new_unchecked(v[0], v[1], v[2])
    }
}

impl fmt::Display for BlochVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Square complex matrix, flagged Hermitian when it is one.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    pub matrix: DMatrix<C64>,
    pub hermitian: bool,
}

impl Operator {
    pub fn new(matrix: DMatrix<C64>) -> Self {
        let hermitian = max_abs(&(&matrix - matrix.adjoint())) < 1e-12;
        Operator { matrix, hermitian }
    }

    pub fn identity(dim: usize) -> Self {
        Operator { matrix: DMatrix::identity(dim, dim), hermitian: true }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Operator { matrix: self.matrix.adjoint(), hermitian: self.hermitian }
    }

    pub fn apply(&self, psi: &DVector<C64>) -> DVector<C64> {
        &self.matrix * psi
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        Operator::new(&self.matrix * &rhs.matrix)
    }
}

/// Annihilation and creation operators `(a, a†)` on the truncated Fock space.
///
/// `a†|n_max⟩` is dropped, so `[a, a†] = 1` fails in the last row.
pub fn fock_ladder(cutoff: FockCutoff) -> (Operator, Operator) {
    let d = cutoff.dim();
    let mut a = DMatrix::from_element(d, d, ZERO);
    for n in 1..d {
        a[(n - 1, n)] = C64::from((n as f64).sqrt());
    }
    let adag = a.adjoint();
    (Operator { matrix: a, hermitian: false }, Operator { matrix: adag, hermitian: false })
}

/// `a†a` on the truncated Fock space.
pub fn number_operator(cutoff: FockCutoff) -> Operator {
    let d = cutoff.dim();
    Operator {
        matrix: DMatrix::from_diagonal(&DVector::from_fn(d, |n, _| C64::from(n as f64))),
        hermitian: true,
    }
}

#[derive(Clone, Debug)]
pub struct QubitOps {
    pub x: Operator,
    pub y: Operator,
    pub z: Operator,
    pub plus: Operator,
    pub minus: Operator,
}

/// Pauli and ladder operators in the `{|e⟩, |g⟩}` basis.
pub fn qubit_ops() -> QubitOps {
    let m = |a: [C64; 4]| DMatrix::from_row_slice(2, 2, &a);
    let n1 = -ONE;
    QubitOps {
        x: Operator { matrix: m([ZERO, ONE, ONE, ZERO]), hermitian: true },
        y: Operator { matrix: m([ZERO, I, -I, ZERO]), hermitian: true },
        z: Operator { matrix: m([n1, ZERO, ZERO, ONE]), hermitian: true },
        plus: Operator { matrix: m([ZERO, ONE, ZERO, ZERO]), hermitian: false },
        minus: Operator { matrix: m([ZERO, ZERO, ONE, ZERO]), hermitian: false },
    }
}

/// `op` on `target`, identity on every other factor of `layout`.
pub fn embed(op: &Operator, target: Subsystem, layout: &Layout) -> Result<Operator> {
    let pos = layout.position(target)?;
    let d = layout.parts()[pos].1;
    if op.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: op.dim() });
    }
    let before: usize = layout.parts()[..pos].iter().map(|&(_, d)| d).product();
    let after: usize = layout.parts()[pos + 1..].iter().map(|&(_, d)| d).product();
    let matrix = DMatrix::<C64>::identity(before, before)
        .kronecker(&op.matrix)
        .kronecker(&DMatrix::<C64>::identity(after, after));
    Ok(Operator { matrix, hermitian: op.hermitian })
}

/// States that can be reduced to a subset of their subsystems.
pub trait JointState {
    fn layout(&self) -> &Layout;
    fn partial_trace(&self, keep: &[Subsystem]) -> Result<DensityMatrix>;
}

impl JointState for PureState {
    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn partial_trace(&self, keep: &[Subsystem]) -> Result<DensityMatrix> {
        let split = self.layout.split(keep)?;
        let mut psi = DMatrix::from_element(split.kept_dim, split.traced_dim, ZERO);
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            psi[(split.kept[idx], split.traced[idx])] = *amp;
        }
        let layout = self.layout.restrict(keep)?;
        Ok(DensityMatrix { matrix: &psi * psi.adjoint(), layout })
    }
}

impl JointState for DensityMatrix {
    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn partial_trace(&self, keep: &[Subsystem]) -> Result<DensityMatrix> {
        let split = self.layout.split(keep)?;
        let mut full_of = vec![0; self.layout.dim()];
        for idx in 0..self.layout.dim() {
            full_of[split.kept[idx] * split.traced_dim + split.traced[idx]] = idx;
        }
        let kd = split.kept_dim;
        let td = split.traced_dim;
        let m = DMatrix::from_fn(kd, kd, |k, l| {
            (0..td).map(|t| self.matrix[(full_of[k * td + t], full_of[l * td + t])]).sum()
        });
        let layout = self.layout.restrict(keep)?;
        Ok(DensityMatrix { matrix: m, layout })
    }
}

pub fn partial_trace<S: JointState + ?Sized>(state: &S, keep: &[Subsystem]) -> Result<DensityMatrix> {
    state.partial_trace(keep)
}

/// Purification `Σ_i √λ_i |i⟩_R |v_i⟩` on `R ⊗ (layout of rho)`.
pub fn purify(rho: &DensityMatrix) -> Result<PureState> {
    rho.validate()?;
    if rho.layout.contains(Subsystem::Reference) {
        return Err(Error::InvalidState("state already carries a reference".into()));
    }
    let d = rho.layout.dim();
    let (vals, vecs) = hermitian_eigen(&rho.matrix);
    let mut amps = DVector::from_element(d * d, ZERO);
    for (i, &lam) in vals.iter().enumerate() {
        let w = lam.max(0.0).sqrt();
        if w == 0.0 {
            continue;
        }
        for j in 0..d {
            amps[i * d + j] = vecs[(j, i)] * w;
        }
    }
    let norm = amps.norm();
    amps /= C64::from(norm);
    let layout = rho.layout.with_reference(d)?;
    Ok(PureState { amplitudes: amps, layout })
}

/// `⟨a†a⟩` of the cavity factor.
pub fn mean_photon_number<S: JointState + ?Sized>(state: &S) -> Result<f64> {
    let rho = state.partial_trace(&[Subsystem::Cavity])?;
    Ok(rho.matrix.diagonal().iter().enumerate().map(|(n, p)| n as f64 * p.re).sum())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let sym = (m + m.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
