use nalgebra::DMatrix;

use super::{ModelParams, Schedule};
use crate::hilbert::{FockCutoff, Operator, Subsystem, C64, EXCITED, GROUND, ZERO};

/// Phase class of an interaction-picture matrix element: `E_row − E_col`
/// is `0` or `±2ω` for every nonzero entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Resonant,
    Up,
    Down,
}

#[derive(Clone, Copy, Debug)]
struct Coupling {
    row: usize,
    col: usize,
    amp: f64,
    phase: Phase,
}

/// Sparse Schrödinger-picture couplings of both qubits plus the bare
/// energies used for the interaction-picture conjugation.
#[derive(Clone, Debug)]
pub(crate) struct BusHamiltonian {
    omega: f64,
    dim: usize,
    energies: Vec<f64>,
    terms: [Vec<Coupling>; 2],
}

fn qubit_energy(q: usize, omega: f64) -> f64 {
    if q == EXCITED {
        0.5 * omega
    } else {
        -0.5 * omega
    }
}

impl BusHamiltonian {
    pub fn new(params: &ModelParams, cutoff: FockCutoff) -> Self {
        let nc = cutoff.dim();
        let dim = 4 * nc;
        let omega = params.omega;
        let index = |q1: usize, n: usize, q2: usize| (q1 * nc + n) * 2 + q2;
        let mut energies = vec![0.0; dim];
        for q1 in 0..2 {
            for n in 0..nc {
                for q2 in 0..2 {
                    energies[index(q1, n, q2)] =
                        qubit_energy(q1, omega) + n as f64 * omega + qubit_energy(q2, omega);
                }
            }
        }

        let mut terms = [Vec::new(), Vec::new()];
        for (k, list) in terms.iter_mut().enumerate() {
            for q1 in 0..2 {
                for n in 0..nc {
                    for q2 in 0..2 {
                        let col = index(q1, n, q2);
                        let q = if k == 0 { q1 } else { q2 };
                        let raised = q == GROUND;
                        let flipped = 1 - q;
                        let (r1, r2) = if k == 0 { (flipped, q2) } else { (q1, flipped) };
                        // a† (n -> n+1) and a (n -> n-1)
                        for up in [true, false] {
                            if (!up && n == 0) || (up && n + 1 >= nc) {
                                continue;
                            }
                            // σ+a† and σ−a are the counter-rotating pair
                            if params.rwa && raised == up {
                                continue;
                            }
                            let m = if up { n + 1 } else { n - 1 };
                            let row = index(r1, m, r2);
                            let amp = params.g * (n.max(m) as f64).sqrt();
                            let gap = energies[row] - energies[col];
                            let phase = if gap.abs() < 0.5 * omega {
                                Phase::Resonant
                            } else if gap > 0.0 {
                                Phase::Up
                            } else {
                                Phase::Down
                            };
                            list.push(Coupling { row, col, amp, phase });
                        }
                    }
                }
            }
        }
        BusHamiltonian { omega, dim, energies, terms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    fn qubit_slot(qubit: Subsystem) -> usize {
        match qubit {
            Subsystem::Qubit1 => 0,
            Subsystem::Qubit2 => 1,
            other => panic!("{other} is not a coupled qubit"),
        }
    }

    /// `out = −i f H̃_k(t) psi`, applied to every `dim`-sized block of `psi`.
    pub fn rhs(&self, qubit: Subsystem, f: f64, t: f64, psi: &[C64], out: &mut [C64]) {
        out.fill(ZERO);
        if f == 0.0 {
            return;
        }
        let up = C64::from_polar(1.0, 2.0 * self.omega * t);
        let factors = [C64::new(0.0, -f), C64::new(0.0, -f) * up, C64::new(0.0, -f) * up.conj()];
        let terms = &self.terms[Self::qubit_slot(qubit)];
        for (block, out_block) in psi.chunks_exact(self.dim).zip(out.chunks_exact_mut(self.dim)) {
            for c in terms {
                let fac = match c.phase {
                    Phase::Resonant => factors[0],
                    Phase::Up => factors[1],
                    Phase::Down => factors[2],
                };
                out_block[c.row] += fac * (c.amp * block[c.col]);
            }
        }
    }

    /// Dense interaction-picture Hamiltonian with envelope values `f`.
    pub fn interaction_dense(&self, t: f64, f: [f64; 2]) -> DMatrix<C64> {
        let mut h = DMatrix::from_element(self.dim, self.dim, ZERO);
        for (k, terms) in self.terms.iter().enumerate() {
            if f[k] == 0.0 {
                continue;
            }
            for c in terms {
                let gap = self.energies[c.row] - self.energies[c.col];
                h[(c.row, c.col)] += C64::from_polar(f[k] * c.amp, gap * t);
            }
        }
        h
    }

    /// Dense Schrödinger-picture `H0 + Σ f_k H_I,k` (zero-point energy dropped).
    pub fn schrodinger_dense(&self, f: [f64; 2]) -> DMatrix<C64> {
        let mut h = DMatrix::from_element(self.dim, self.dim, ZERO);
        for (i, &e) in self.energies.iter().enumerate() {
            h[(i, i)] = C64::from(e);
        }
        for (k, terms) in self.terms.iter().enumerate() {
            for c in terms {
                h[(c.row, c.col)] += C64::from(f[k] * c.amp);
            }
        }
        h
    }
}

/// Dense interaction-picture Hamiltonian `e^{iH0 t} H_I(t) e^{−iH0 t}` on
/// `Q1 ⊗ C ⊗ Q2` at time `t` of `schedule`.
pub fn interaction_hamiltonian(
    t: f64,
    params: &ModelParams,
    schedule: &Schedule,
    cutoff: FockCutoff,
) -> Operator {
    let f1 = schedule.window.value(t, schedule.t1);
    let f2 = schedule.window.value(t - schedule.t1 - schedule.tc, schedule.t2);
    let h = BusHamiltonian::new(params, cutoff);
    Operator::new(h.interaction_dense(t, [f1, f2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Window;
    use crate::hilbert::{embed, fock_ladder, max_abs, qubit_ops, Layout};

    fn params(g: f64, rwa: bool) -> ModelParams {
        ModelParams::new(g).unwrap().with_rwa(rwa)
    }

    #[test]
    fn idle_interval_gives_zero_operator() {
        let p = params(0.3, false);
        let s = Schedule::new(1.0, 2.0, 1.0, Window::Rectangular).unwrap();
        let h = interaction_hamiltonian(2.0, &p, &s, FockCutoff::new(3).unwrap());
        assert_eq!(max_abs(&h.matrix), 0.0);
    }

    #[test]
    fn interaction_picture_is_hermitian() {
        let p = params(0.5, false);
        let s = Schedule::new(4.0, 0.5, 4.0, Window::Hamming { xi: 0.4 }).unwrap();
        for &t in &[0.37, 1.9, 3.99, 4.7, 7.123] {
            let h = interaction_hamiltonian(t, &p, &s, FockCutoff::new(5).unwrap());
            assert!(h.hermitian);
            assert!(max_abs(&(&h.matrix - h.matrix.adjoint())) < 1e-12);
        }
    }

    /// Schrödinger-picture couplings equal g σx(a + a†) built from
    /// the Hilbert-space primitives.
    #[test]
    fn sparse_couplings_match_operator_algebra() {
        let cut = FockCutoff::new(4).unwrap();
        let layout = Layout::bus(cut);
        let (a, adag) = fock_ladder(cut);
        let q = qubit_ops();
        let g = 0.37;
        let field = crate::hilbert::Operator::new(&a.matrix + &adag.matrix);
        let c = embed(&field, Subsystem::Cavity, &layout).unwrap();
        let x1 = embed(&q.x, Subsystem::Qubit1, &layout).unwrap();
        let h = BusHamiltonian::new(&params(g, false), cut);
        let mut expected = &x1.matrix * &c.matrix * C64::from(g);
        for i in 0..layout.dim() {
            expected[(i, i)] += C64::from(h.energies()[i]);
        }
        assert!(max_abs(&(h.schrodinger_dense([1.0, 0.0]) - expected)) < 1e-14);
    }

    /// With the RWA only the Jaynes–Cummings blocks σ+a + σ−a† survive.
    #[test]
    fn rwa_matches_hand_built_jaynes_cummings() {
        let cut = FockCutoff::new(2).unwrap();
        let layout = Layout::bus(cut);
        let (a, adag) = fock_ladder(cut);
        let q = qubit_ops();
        let g = 0.2;
        let sp_a = embed(&q.plus, Subsystem::Qubit2, &layout).unwrap().matrix
            * embed(&a, Subsystem::Cavity, &layout).unwrap().matrix;
        let sm_ad = embed(&q.minus, Subsystem::Qubit2, &layout).unwrap().matrix
            * embed(&adag, Subsystem::Cavity, &layout).unwrap().matrix;
        let jc = (sp_a + sm_ad) * C64::from(g);
        let s = Schedule::new(0.0, 0.0, 10.0, Window::Rectangular).unwrap();
        for &t in &[0.0, 0.8, 3.3] {
            let h = interaction_hamiltonian(t, &params(g, true), &s, cut);
            // resonant blocks carry no phase in the interaction picture
            assert!(max_abs(&(&h.matrix - &jc)) < 1e-15);
            // every counter-rotating ⟨e,n+1|·|g,n⟩ entry vanishes
            for n in 0..2 {
                for q1 in 0..2 {
                    let row = layout.index_of(&[q1, n + 1, EXCITED]).unwrap();
                    let col = layout.index_of(&[q1, n, GROUND]).unwrap();
                    assert_eq!(h.matrix[(row, col)], ZERO);
                }
            }
        }
    }

    /// Phases follow `e^{i(E_i − E_j)t}` with the two-photon-detuned pairs at ±2ω.
    #[test]
    fn counter_rotating_phase_is_two_omega() {
        let cut = FockCutoff::new(3).unwrap();
        let layout = Layout::bus(cut);
        let g = 0.3;
        let s = Schedule::new(10.0, 0.0, 0.0, Window::Rectangular).unwrap();
        let t = 1.234;
        let h = interaction_hamiltonian(t, &params(g, false), &s, cut);
        // ⟨g,n| H̃ |e,n+1⟩ = Ω_{n+1} e^{−2iωt}
        for n in 0..3 {
            let row = layout.index_of(&[GROUND, n, GROUND]).unwrap();
            let col = layout.index_of(&[EXCITED, n + 1, GROUND]).unwrap();
            let expect = C64::from_polar(g * ((n + 1) as f64).sqrt(), -2.0 * t);
            assert!((h.matrix[(row, col)] - expect).norm() < 1e-14);
        }
    }
}
