//! Adaptive explicit Runge–Kutta integration of complex linear systems.
//!
//! Dormand–Prince 8(5,3): twelve stages of order 8 with the combined
//! fifth/third order error estimator, the same tableau as Hairer's DOP853.

use crate::error::{Error, Result};
use crate::hilbert::C64;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    /// Relative and absolute local error tolerance.
    pub tol: f64,
    /// First trial step.
    pub h_initial: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl std::ops::AddAssign for IntegrationStats {
    fn add_assign(&mut self, o: Self) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.evaluations += o.evaluations;
    }
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1` in place.
///
/// `rhs(t, y, out)` must overwrite `out`. Returns the step statistics and
/// the last accepted step size.
pub fn integrate<F>(
    mut rhs: F,
    t0: f64,
    t1: f64,
    y: &mut [C64],
    control: StepControl,
) -> Result<(IntegrationStats, f64)>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y.len();
    let mut stats = IntegrationStats::default();
    if t1 <= t0 || n == 0 {
        return Ok((stats, control.h_initial));
    }
    let zero = C64::new(0.0, 0.0);
    let mut k = vec![vec![zero; n]; 13];
    let mut ytmp = vec![zero; n];
    let mut ynew = vec![zero; n];

    let mut t = t0;
    let mut h_abs = control.h_initial.abs().max(1e-12);
    rhs(t, y, &mut k[0]);
    stats.evaluations += 1;

    while t < t1 {
        let min_step = 10.0 * f64::EPSILON * t.abs().max(1.0);
        let mut rejected = false;
        loop {
            if h_abs < min_step {
                return Err(Error::StepUnderflow { t, h: h_abs });
            }
            let t_new = if t + h_abs >= t1 { t1 } else { t + h_abs };
            let h = t_new - t;

            for s in 1..12 {
                ytmp.copy_from_slice(y);
                for (j, &a) in A[s][..s].iter().enumerate() {
                    if a != 0.0 {
                        let c = h * a;
                        for (yt, kj) in ytmp.iter_mut().zip(&k[j]) {
                            *yt += kj * c;
                        }
                    }
                }
                rhs(t + C[s] * h, &ytmp, &mut k[s]);
            }
            ynew.copy_from_slice(y);
            for (j, &b) in B.iter().enumerate() {
                if b != 0.0 {
                    let c = h * b;
                    for (yn, kj) in ynew.iter_mut().zip(&k[j]) {
                        *yn += kj * c;
                    }
                }
            }
            rhs(t_new, &ynew, &mut k[12]);
            stats.evaluations += 12;

            let err = error_norm(&k, y, &ynew, h, control.tol);
            if err < 1.0 {
                let mut factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    MAX_FACTOR.min(SAFETY * err.powf(ERROR_EXPONENT))
                };
                if rejected {
                    factor = factor.min(1.0);
                }
                // keep the trial step when the final step was clipped to t1
                if t_new < t1 || h >= h_abs {
                    h_abs *= factor;
                }
                t = t_new;
                y.copy_from_slice(&ynew);
                k.swap(0, 12);
                stats.accepted += 1;
                break;
            }
            h_abs *= MIN_FACTOR.max(SAFETY * err.powf(ERROR_EXPONENT));
            rejected = true;
            stats.rejected += 1;
        }
    }
    Ok((stats, h_abs))
}

fn error_norm(k: &[Vec<C64>], y: &[C64], ynew: &[C64], h: f64, tol: f64) -> f64 {
    let n = y.len();
    let mut e5sq = 0.0;
    let mut e3sq = 0.0;
    for i in 0..n {
        let mut e5 = C64::new(0.0, 0.0);
        let mut e3 = C64::new(0.0, 0.0);
        for j in 0..13 {
            let kj = k[j][i];
            if E5[j] != 0.0 {
                e5 += kj * E5[j];
            }
            if E3[j] != 0.0 {
                e3 += kj * E3[j];
            }
        }
        let scale = tol + tol * y[i].norm().max(ynew[i].norm());
        e5sq += (e5.norm() / scale).powi(2);
        e3sq += (e3.norm() / scale).powi(2);
    }
    if e5sq == 0.0 && e3sq == 0.0 {
        return 0.0;
    }
    let denom = e5sq + 0.01 * e3sq;
    h.abs() * e5sq / (denom * n as f64).sqrt()
}

const C: [f64; 12] = [0.0, 0.05260015195876773, 0.0789002279381516, 0.1183503419072274, 0.2816496580927726, 0.3333333333333333, 0.25, 0.3076923076923077, 0.6512820512820513, 0.6, 0.8571428571428571, 1.0];
const A: [[f64; 12]; 12] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.05260015195876773, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0197250569845379, 0.0591751709536137, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.02958758547680685, 0.0, 0.08876275643042054, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.03709200011850479, 0.0, 0.0, 0.17038392571223998, 0.10726203044637328, -0.015319437748624402, 0.008273789163814023, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.6241109587160757, 0.0, 0.0, -3.3608926294469414, -0.868219346841726, 27.59209969944671, 20.154067550477894, -43.48988418106996, 0.0, 0.0, 0.0, 0.0],
    [0.47766253643826434, 0.0, 0.0, -2.4881146199716677, -0.590290826836843, 21.230051448181193, 15.279233632882423, -33.28821096898486, -0.020331201708508627, 0.0, 0.0, 0.0],
    [-0.9371424300859873, 0.0, 0.0, 5.186372428844064, 1.0914373489967295, -8.149787010746927, -18.52006565999696, 22.739487099350505, 2.4936055526796523, -3.0467644718982196, 0.0, 0.0],
    [2.273310147516538, 0.0, 0.0, -10.53449546673725, -2.0008720582248625, -17.9589318631188, 27.94888452941996, -2.8589982771350235, -8.87285693353063, 12.360567175794303, 0.6433927460157636, 0.0],
];
const B: [f64; 12] = [0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259];
const E3: [f64; 13] = [-0.18980075407240762, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, -0.4226823213237919, -0.1521609496625161, 0.20136540080403034, 0.02265179219836082, 0.0];
const E5: [f64; 13] = [0.01312004499419488, 0.0, 0.0, 0.0, 0.0, -1.2251564463762044, -0.4957589496572502, 1.6643771824549864, -0.35032884874997366, 0.3341791187130175, 0.08192320648511571, -0.022355307863886294, 0.0];

#[cfg(test)]
mod tests {
    use super::*;

    fn control(tol: f64) -> StepControl {
        StepControl { tol, h_initial: 0.01 }
    }

    #[test]
    fn tableau_is_consistent() {
        for s in 1..12 {
            let row: f64 = A[s].iter().sum();
            assert!((row - C[s]).abs() < 1e-14, "row {s}");
        }
        assert!((B.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn harmonic_phase_is_exact() {
        // y' = -i w y  =>  y(t) = exp(-i w t)
        let w = 2.3;
        let mut y = vec![C64::new(1.0, 0.0)];
        let (stats, _) =
            integrate(|_, y, out| out[0] = y[0] * C64::new(0.0, -w), 0.0, 10.0, &mut y, control(1e-12))
                .unwrap();
        let exact = C64::new(0.0, -w * 10.0).exp();
        assert!((y[0] - exact).norm() < 1e-10, "{:e}", (y[0] - exact).norm());
        assert!(stats.accepted > 0);
    }

    #[test]
    fn driven_two_level_agrees_with_closed_form() {
        // resonant Rabi flop: populations cos^2(gt), sin^2(gt)
        let g = 0.7;
        let mut y = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        integrate(
            |_, y, out| {
                out[0] = y[1] * C64::new(0.0, -g);
                out[1] = y[0] * C64::new(0.0, -g);
            },
            0.0,
            3.0,
            &mut y,
            control(1e-12),
        )
        .unwrap();
        assert!((y[0].norm_sqr() - (g * 3.0f64).cos().powi(2)).abs() < 1e-10);
        assert!((y[1].norm_sqr() - (g * 3.0f64).sin().powi(2)).abs() < 1e-10);
    }

    #[test]
    fn empty_interval_is_a_no_op() {
        let mut y = vec![C64::new(0.3, 0.1)];
        let (stats, _) = integrate(|_, _, out| out[0] = C64::new(1.0, 0.0), 1.0, 1.0, &mut y, control(1e-10))
            .unwrap();
        assert_eq!(stats.accepted, 0);
        assert_eq!(y[0], C64::new(0.3, 0.1));
    }
}
