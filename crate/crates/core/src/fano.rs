//! Factorization of a block-structured qubit map into a displacement along
//! `z`, two rotations about `z` and a diagonal deformation, and the Kraus
//! operators obtained by composing the pieces.

use nalgebra::{DMatrix, Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::channel::{AffineMap, ChoiMatrix};
use crate::error::{Error, Result};
use crate::hilbert::{C64, EXCITED, GROUND, ONE, ZERO};

/// Largest off-pattern entry accepted as zero.
pub const STRUCTURE_TOL: f64 = 1e-7;
/// Below this `|a_z|` the displacement is dropped.
pub const DISPLACEMENT_FLOOR: f64 = 1e-10;

/// Pole that a displacement pushes the Bloch ball toward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pole {
    /// `+z`, the ground state `|g⟩`; `a_z > 0` (zero-temperature damping).
    PlusZ,
    /// `−z`, the excited state `|e⟩`; `a_z < 0` (thermal excitation).
    MinusZ,
}

/// `M1`: `diag(cos θ, cos θ, cos²θ)` with `a = ±sin²θ ẑ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Displacement {
    pub theta: f64,
    pub toward: Pole,
}

impl Displacement {
    pub const NONE: Displacement = Displacement { theta: 0.0, toward: Pole::PlusZ };

    pub fn gamma(&self) -> f64 {
        self.theta.sin().powi(2)
    }

    pub fn to_affine(&self) -> AffineMap {
        let c = self.theta.cos();
        let sign = match self.toward {
            Pole::PlusZ => 1.0,
            Pole::MinusZ => -1.0,
        };
        AffineMap::new(
            Matrix3::from_diagonal(&Vector3::new(c, c, c * c)),
            Vector3::new(0.0, 0.0, sign * self.gamma()),
        )
    }

    /// Amplitude-damping pair `{|p⟩⟨p| + √(1−γ)|q⟩⟨q|, √γ |p⟩⟨q|}` toward pole `p`.
    pub fn kraus(&self) -> Vec<DMatrix<C64>> {
        let gamma = self.gamma();
        if gamma == 0.0 {
            return vec![DMatrix::identity(2, 2)];
        }
        let (p, q) = match self.toward {
            Pole::PlusZ => (GROUND, EXCITED),
            Pole::MinusZ => (EXCITED, GROUND),
        };
        let mut k0 = DMatrix::from_element(2, 2, ZERO);
        k0[(p, p)] = ONE;
        k0[(q, q)] = C64::from((1.0 - gamma).sqrt());
        let mut k1 = DMatrix::from_element(2, 2, ZERO);
        k1[(p, q)] = C64::from(gamma.sqrt());
        vec![k0, k1]
    }
}

/// Rotation of the Bloch ball by `angle` about `z`.
pub fn z_rotation(angle: f64) -> AffineMap {
    let (s, c) = angle.sin_cos();
    AffineMap::new(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0), Vector3::zeros())
}

/// `exp(−i α σz / 2)`, the unitary that rotates Bloch vectors by `α` about `z`.
pub fn z_rotation_unitary(angle: f64) -> DMatrix<C64> {
    // σz = diag(−1, +1) in the {|e⟩, |g⟩} ordering
    let mut u = DMatrix::from_element(2, 2, ZERO);
    u[(EXCITED, EXCITED)] = C64::from_polar(1.0, angle / 2.0);
    u[(GROUND, GROUND)] = C64::from_polar(1.0, -angle / 2.0);
    u
}

fn check_structure(map: &AffineMap) -> Result<()> {
    let r = map.structural_residuals().max_abs();
    if r > STRUCTURE_TOL {
        return Err(Error::NotBlockStructured(r));
    }
    Ok(())
}

/// Splits `map = M1 ∘ M'` with `M1` a displacement along `z` and `M'` linear.
pub fn split_displacement(map: &AffineMap) -> Result<(Displacement, AffineMap)> {
    check_structure(map)?;
    let a_z = map.a[2];
    if a_z.abs() > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!("|a_z| = {} exceeds 1", a_z.abs())));
    }
    let mut m = map.m;
    // structural zeros are verified above and set exactly here
    m[(0, 2)] = 0.0;
    m[(1, 2)] = 0.0;
    m[(2, 0)] = 0.0;
    m[(2, 1)] = 0.0;
    if a_z.abs() < DISPLACEMENT_FLOOR {
        return Ok((Displacement::NONE, AffineMap::new(m, Vector3::zeros())));
    }
    let theta = a_z.abs().min(1.0).sqrt().asin();
    let toward = if a_z > 0.0 { Pole::PlusZ } else { Pole::MinusZ };
    let c = theta.cos();
    if c < 1e-12 {
        if m.abs().max() > 1e-12 {
            return Err(Error::SingularDisplacement);
        }
        return Ok((Displacement { theta, toward }, AffineMap::new(Matrix3::zeros(), Vector3::zeros())));
    }
    let mut mp = m;
    for i in 0..2 {
        for j in 0..2 {
            mp[(i, j)] /= c;
        }
    }
    mp[(2, 2)] /= c * c;
    Ok((Displacement { theta, toward }, AffineMap::new(mp, Vector3::zeros())))
}

/// `M' = O1 D O2ᵀ` with `O1`, `O2` rotations about `z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvdSplit {
    /// Angle of `O1`.
    pub outer_angle: f64,
    /// Diagonal of `D`; the `xy` entries are ordered by magnitude and carry
    /// any reflection as a sign on the second one.
    pub d: Vector3<f64>,
    /// Angle of `O2ᵀ`.
    pub inner_angle: f64,
}

impl SvdSplit {
    pub fn o1(&self) -> Matrix3<f64> {
        z_rotation(self.outer_angle).m
    }

    pub fn o2(&self) -> Matrix3<f64> {
        z_rotation(-self.inner_angle).m
    }

    pub fn reconstruct(&self) -> Matrix3<f64> {
        self.o1() * Matrix3::from_diagonal(&self.d) * self.o2().transpose()
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * std::f64::consts::PI);
    if w > std::f64::consts::PI { w - 2.0 * std::f64::consts::PI } else { w }
}

/// Closed-form singular value decomposition of the `xy` block of `M'`
/// into `R(φ) diag(s1, s2) R(θ)`; `m'_zz` is carried through unchanged.
pub fn svd_split(m_prime: &Matrix3<f64>) -> Result<SvdSplit> {
    let off = [m_prime[(0, 2)], m_prime[(1, 2)], m_prime[(2, 0)], m_prime[(2, 1)]]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if off > STRUCTURE_TOL {
        return Err(Error::NotBlockStructured(off));
    }
    let b = Matrix2::new(m_prime[(0, 0)], m_prime[(0, 1)], m_prime[(1, 0)], m_prime[(1, 1)]);
    let e = (b[(0, 0)] + b[(1, 1)]) / 2.0;
    let f = (b[(0, 0)] - b[(1, 1)]) / 2.0;
    let g = (b[(1, 0)] + b[(0, 1)]) / 2.0;
    let h = (b[(1, 0)] - b[(0, 1)]) / 2.0;
    let q = e.hypot(h);
    let r = f.hypot(g);
    let scale = b.abs().max().max(1e-300);
    let (mut a1, mut a2) = (g.atan2(f), h.atan2(e));
    if r <= 1e-14 * scale {
        // conformal block: the whole rotation goes into O1
        a1 = a2;
    } else if q <= 1e-14 * scale {
        a2 = a1;
    }
    let mut inner = (a2 - a1) / 2.0;
    let mut outer = (a2 + a1) / 2.0;
    let half_pi = std::f64::consts::FRAC_PI_2;
    if inner > half_pi {
        inner -= std::f64::consts::PI;
        outer -= std::f64::consts::PI;
    } else if inner <= -half_pi {
        inner += std::f64::consts::PI;
        outer += std::f64::consts::PI;
    }
    Ok(SvdSplit {
        outer_angle: wrap_angle(outer),
        d: Vector3::new(q + r, q - r, m_prime[(2, 2)]),
        inner_angle: inner,
    })
}

/// `M = M1 ∘ M2 ∘ M3 ∘ M4`: rotation `M4`, deformation `M3`, rotation `M2`,
/// displacement `M1`. Six real parameters in total.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementaryMapSequence {
    pub displacement: Displacement,
    /// Angle of `M2`.
    pub outer_rotation: f64,
    /// Diagonal of `M3`.
    pub deformation: Vector3<f64>,
    /// Angle of `M4`.
    pub inner_rotation: f64,
}

impl ElementaryMapSequence {
    pub fn identity() -> Self {
        ElementaryMapSequence {
            displacement: Displacement::NONE,
            outer_rotation: 0.0,
            deformation: Vector3::new(1.0, 1.0, 1.0),
            inner_rotation: 0.0,
        }
    }

    pub fn m1(&self) -> AffineMap {
        self.displacement.to_affine()
    }

    pub fn m2(&self) -> AffineMap {
        z_rotation(self.outer_rotation)
    }

    pub fn m3(&self) -> AffineMap {
        AffineMap::new(Matrix3::from_diagonal(&self.deformation), Vector3::zeros())
    }

    pub fn m4(&self) -> AffineMap {
        z_rotation(self.inner_rotation)
    }

    pub fn compose(&self) -> AffineMap {
        self.m1().compose(&self.m2().compose(&self.m3().compose(&self.m4())))
    }

    /// `(θ, φ_outer, d_x, d_y, d_z, φ_inner)`.
    pub fn parameters(&self) -> [f64; 6] {
        [
            self.displacement.theta,
            self.outer_rotation,
            self.deformation[0],
            self.deformation[1],
            self.deformation[2],
            self.inner_rotation,
        ]
    }
}

pub fn elementary_sequence(map: &AffineMap) -> Result<ElementaryMapSequence> {
    let (displacement, m_prime) = split_displacement(map)?;
    let svd = svd_split(&m_prime.m)?;
    Ok(ElementaryMapSequence {
        displacement,
        outer_rotation: svd.outer_angle,
        deformation: svd.d,
        inner_rotation: svd.inner_angle,
    })
}

fn product_set(outer: &[DMatrix<C64>], inner: &[DMatrix<C64>]) -> Vec<DMatrix<C64>> {
    outer.iter().flat_map(|a| inner.iter().map(move |b| a * b)).collect()
}

/// Choi matrix of a Kraus set on a qubit.
pub fn choi_of_kraus(ks: &[DMatrix<C64>]) -> ChoiMatrix {
    let d_in = ks[0].ncols();
    let d_out = ks[0].nrows();
    let mut j = DMatrix::from_element(d_in * d_out, d_in * d_out, ZERO);
    for k in ks {
        let v = nalgebra::DVector::from_fn(d_in * d_out, |idx, _| k[(idx % d_out, idx / d_out)]);
        j += &v * v.adjoint();
    }
    ChoiMatrix { matrix: j, d_in, d_out }
}

/// `Σ_k K ρ K†`.
pub fn apply_kraus(ks: &[DMatrix<C64>], rho: &DMatrix<C64>) -> DMatrix<C64> {
    ks.iter().map(|k| k * rho * k.adjoint()).sum()
}

/// Kraus operators of the sequence: unitaries for the rotations, the
/// damping pair for the displacement and the Choi eigenvectors of the
/// deformation, multiplied out and reduced to at most four operators.
pub fn kraus_from_sequence(seq: &ElementaryMapSequence) -> Result<Vec<DMatrix<C64>>> {
    let deform = seq.m3().to_choi();
    let min = deform.min_eigenvalue();
    if min < -1e-8 {
        return Err(Error::NotCompletelyPositive(min / 2.0));
    }
    let k3 = deform.kraus(1e-14)?;
    let k4 = [z_rotation_unitary(seq.inner_rotation)];
    let k2 = [z_rotation_unitary(seq.outer_rotation)];
    let k1 = seq.displacement.kraus();
    let all = product_set(&k1, &product_set(&k2, &product_set(&k3, &k4)));
    choi_of_kraus(&all).kraus(1e-10)
}
