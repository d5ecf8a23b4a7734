//! Invariants of the dynamics, the channel representations and the
//! decomposition, checked on randomized inputs.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qbus::channel::{apply_affine, choi_of_protocol, tomography, AffineMap};
use qbus::dynamics::{propagate, run_protocol, ChannelDilation, ModelParams, PropagatorConfig, Schedule, Stage, Window};
use qbus::fano::{
    apply_kraus, elementary_sequence, kraus_from_sequence, svd_split, z_rotation, Displacement, ElementaryMapSequence,
    Pole,
};
use qbus::hilbert::{
    embed, qubit_ops, BlochVector, DensityMatrix, FockCutoff, JointState, Layout, Operator, PureState, Subsystem, C64,
    EXCITED, GROUND,
};
use qbus::information::{complement_entropy, entropy_exchange, q1, unpolarized_coherent_information};

fn config(n_max: usize) -> PropagatorConfig {
    PropagatorConfig::default().with_cutoff(FockCutoff::new(n_max).unwrap())
}

fn random_bloch(rng: &mut ChaCha8Rng) -> BlochVector {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if v.norm() <= 1.0 {
            return BlochVector::from_vector(&v);
        }
    }
}

fn random_state(layout: Layout, rng: &mut ChaCha8Rng) -> PureState {
    let v = DVector::from_fn(layout.dim(), |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    PureState::new(v.normalize(), layout).unwrap()
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn window(xi: f64) -> Window {
    if xi == 0.0 { Window::Rectangular } else { Window::hamming(xi).unwrap() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn propagation_is_unitary(g in 0.05f64..1.0, xi in prop_oneof![Just(0.0), 0.0f64..0.9]) {
        let params = ModelParams::new(g).unwrap();
        let schedule = Schedule::standard(&params, window(xi)).unwrap();
        let cfg = config(4);
        let layout = Layout::bus(cfg.cutoff);
        let d = layout.dim();
        let mut u = DMatrix::from_element(d, d, C64::from(0.0));
        for i in 0..d {
            let mut e = DVector::from_element(d, C64::from(0.0));
            e[i] = C64::from(1.0);
            let p = propagate(&PureState::new(e, layout.clone()).unwrap(), 0.0, schedule.duration(), &params, &schedule, &cfg).unwrap();
            prop_assert!(p.norm_drift < 1e-8, "drift {}", p.norm_drift);
            u.set_column(i, p.state.amplitudes());
        }
        let err = max_abs(&(u.adjoint() * &u - DMatrix::identity(d, d)));
        prop_assert!(err < 1e-7, "unitarity error {err}");
    }

    #[test]
    fn excitation_parity_is_conserved(g in 0.05f64..1.0, xi in prop_oneof![Just(0.0), 0.0f64..0.9]) {
        let params = ModelParams::new(g).unwrap();
        let schedule = Schedule::standard(&params, window(xi)).unwrap();
        let cfg = config(16);
        let layout = Layout::bus(cfg.cutoff);
        let start = PureState::basis(layout.clone(), &[GROUND, 0, GROUND]).unwrap();
        let mut state = start;
        let mut t = 0.0;
        let step = schedule.duration() / 4.0;
        for _ in 0..4 {
            state = propagate(&state, t, t + step, &params, &schedule, &cfg).unwrap().state;
            t += step;
            let mut odd = 0.0f64;
            for q1 in [EXCITED, GROUND] {
                for n in 0..=16 {
                    for q2 in [EXCITED, GROUND] {
                        let excitations = (q1 == EXCITED) as usize + n + (q2 == EXCITED) as usize;
                        if excitations % 2 == 1 {
                            odd = odd.max(state.amplitudes()[layout.index_of(&[q1, n, q2]).unwrap()].norm());
                        }
                    }
                }
            }
            prop_assert!(odd < 1e-10, "odd-sector amplitude {odd} at t = {t}");
        }
    }

    #[test]
    fn rwa_conserves_excitations(g in 0.05f64..1.0, seed in any::<u64>()) {
        let params = ModelParams::new(g).unwrap().with_rwa(true);
        let schedule = Schedule::standard(&params, Window::Rectangular).unwrap();
        let cfg = config(6);
        let layout = Layout::bus(cfg.cutoff);
        let ops = qubit_ops();
        let excited = Operator::new(&ops.plus.matrix * &ops.minus.matrix);
        let number = qbus::hilbert::number_operator(cfg.cutoff);
        let total = embed(&excited, Subsystem::Qubit1, &layout).unwrap().matrix
            + embed(&excited, Subsystem::Qubit2, &layout).unwrap().matrix
            + embed(&number, Subsystem::Cavity, &layout).unwrap().matrix;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = random_state(layout, &mut rng);
        let expect = |psi: &PureState| (psi.amplitudes().adjoint() * &total * psi.amplitudes())[(0, 0)].re;
        let before = expect(&start);
        let end = propagate(&start, 0.0, schedule.duration(), &params, &schedule, &cfg).unwrap().state;
        prop_assert!((expect(&end) - before).abs() < 1e-9, "{} vs {before}", expect(&end));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn tomography_predicts_random_inputs(g in 0.05f64..1.0, seed in any::<u64>()) {
        let params = ModelParams::new(g).unwrap();
        let schedule = Schedule::standard(&params, Window::Rectangular).unwrap();
        let cfg = config(16);
        let map = tomography(&params, &schedule, &cfg).unwrap();
        let dilation = ChannelDilation::compute(&params, &schedule, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let r = random_bloch(&mut rng);
            let rho = DensityMatrix::from_bloch(r, Subsystem::Qubit1).unwrap();
            let direct = dilation.output_state(&rho).unwrap().bloch_vector().unwrap().to_vector();
            let predicted = map.apply(&r).to_vector();
            prop_assert!((direct - predicted).amax() < 1e-8, "{direct:?} vs {predicted:?}");
        }
    }

    #[test]
    fn choi_matrices_are_cptp_and_match_affine_map(g in 0.05f64..1.0, seed in any::<u64>()) {
        let params = ModelParams::new(g).unwrap();
        let schedule = Schedule::standard(&params, Window::Rectangular).unwrap();
        let cfg = config(8);
        for stage in [Stage::Full, Stage::E1, Stage::E2] {
            let j = choi_of_protocol(&params, &schedule.with_stage(stage), &cfg).unwrap();
            prop_assert!(j.min_eigenvalue() >= -1e-8, "{stage:?}: {}", j.min_eigenvalue());
            prop_assert!(j.trace_preservation_error() < 1e-8, "{stage:?}: {}", j.trace_preservation_error());
        }
        let j = choi_of_protocol(&params, &schedule, &cfg).unwrap();
        let map = tomography(&params, &schedule, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let rho = DensityMatrix::from_bloch(random_bloch(&mut rng), Subsystem::Qubit1).unwrap();
            let via_choi = j.apply(rho.matrix()).unwrap();
            let via_map = apply_affine(&map, &rho).unwrap();
            prop_assert!(max_abs(&(via_choi - via_map.matrix())) < 1e-8);
        }
    }

    #[test]
    fn entropy_exchange_agrees_with_complement(g in 0.05f64..1.0, seed in any::<u64>()) {
        let params = ModelParams::new(g).unwrap();
        let schedule = Schedule::standard(&params, Window::Rectangular).unwrap();
        let cfg = config(12);
        let dilation = ChannelDilation::compute(&params, &schedule, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = DensityMatrix::from_bloch(random_bloch(&mut rng), Subsystem::Qubit1).unwrap();
        let direct = entropy_exchange(&params, &schedule, &cfg, &rho).unwrap();
        let complement = complement_entropy(&dilation.joint_state(&rho).unwrap(), Subsystem::Qubit2).unwrap();
        prop_assert!((direct - complement).abs() < 1e-8, "{direct} vs {complement}");
        let out = run_protocol(&rho, &params, &schedule, &cfg, true).unwrap();
        let s_out = qbus::information::entropy(&out.partial_trace(&[Subsystem::Qubit2]).unwrap());
        // I_c = S_out − S_e ≤ S_out
        prop_assert!(direct >= -1e-9 && s_out >= -1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn capacity_bounds_unpolarized_information(g in 0.05f64..1.0) {
        let params = ModelParams::new(g).unwrap();
        let schedule = Schedule::standard(&params, Window::Rectangular).unwrap();
        let cfg = config(12);
        let est = q1(&params, &schedule, &cfg).unwrap();
        let ic = unpolarized_coherent_information(&ChannelDilation::compute(&params, &schedule, &cfg).unwrap()).unwrap();
        prop_assert!(est.q1 >= ic.max(0.0) - 1e-12, "Q1 {} < Ic_u {ic}", est.q1);
    }
}

fn rotated(angle_out: f64, m: Matrix3<f64>, angle_in: f64) -> Matrix3<f64> {
    z_rotation(angle_out).m * m * z_rotation(angle_in).m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn block_svd_reconstructs_and_matches_eigenvalues(
        b in prop::array::uniform4(-1.0f64..1.0),
        zz in -1.0f64..1.0,
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
    ) {
        let m = Matrix3::new(b[0], b[1], 0.0, b[2], b[3], 0.0, 0.0, 0.0, zz);
        let s = svd_split(&m).unwrap();
        prop_assert!((s.reconstruct() - m).amax() < 1e-12);
        prop_assert!((s.o1().determinant() - 1.0).abs() < 1e-12 && (s.o2().determinant() - 1.0).abs() < 1e-12);

        let block = Matrix2::new(b[0], b[1], b[2], b[3]);
        let mut ev: Vec<f64> = (block * block.transpose()).symmetric_eigenvalues().iter().map(|l| l.max(0.0).sqrt()).collect();
        ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
        prop_assert!((s.d[0].abs() - ev[0]).abs() < 1e-7 && (s.d[1].abs() - ev[1]).abs() < 1e-7, "{:?} vs {ev:?}", s.d);
        prop_assert!((s.d[0] * s.d[1] - block.determinant()).abs() < 1e-12);

        // the diagonal does not depend on how the rotations are split off
        let t = svd_split(&rotated(alpha, m, beta)).unwrap();
        prop_assert!((t.d - s.d).amax() < 1e-9, "{:?} vs {:?}", t.d, s.d);
    }

    #[test]
    fn kraus_operators_reproduce_affine_map(
        theta in 0.0f64..1.5,
        plus in any::<bool>(),
        outer in -3.0f64..3.0,
        inner in -3.0f64..3.0,
        l1 in 0.0f64..1.0,
        ratio in -1.0f64..1.0,
        t in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        // any diagonal with |λ1 ± λ2| ≤ |1 ± λ3| is completely positive
        let l2 = l1 * ratio;
        let (lo, hi) = ((l1 + l2).abs() - 1.0, 1.0 - (l1 - l2).abs());
        let seq = ElementaryMapSequence {
            displacement: Displacement { theta, toward: if plus { Pole::PlusZ } else { Pole::MinusZ } },
            outer_rotation: outer,
            deformation: Vector3::new(l1, l2, lo + t * (hi - lo)),
            inner_rotation: inner,
        };
        let map: AffineMap = seq.compose();
        let ks = kraus_from_sequence(&seq).unwrap();
        prop_assert!(ks.len() <= 4);
        let completeness: DMatrix<C64> = ks.iter().map(|k| k.adjoint() * k).sum::<DMatrix<C64>>() - DMatrix::identity(2, 2);
        prop_assert!(max_abs(&completeness) < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let rho = DensityMatrix::from_bloch(random_bloch(&mut rng), Subsystem::Qubit2).unwrap();
            let via_kraus = apply_kraus(&ks, rho.matrix());
            let via_map = apply_affine(&map, &rho).unwrap();
            prop_assert!(max_abs(&(via_kraus - via_map.matrix())) < 1e-8);
        }

        let back = elementary_sequence(&map).unwrap().compose();
        prop_assert!((back.m - map.m).amax() < 1e-9 && (back.a - map.a).amax() < 1e-9);
    }
}
