//! Cross-checks between the region evaluators and searchers on random
//! instances.

use proptest::prelude::*;

use skw_core::region::{
    assemble_joint, grid_oracle, optimize_key_rate, reduce_tu, region_terms,
    separation_key_rate, theorem1_key_rate, AuxiliaryPair, Baseline, JointSource,
    OptimizerConfig, RateConstraints, TermEvaluator,
};

fn random_source() -> impl Strategy<Value = JointSource> {
    prop::collection::vec(1e-4..1.0f64, 8).prop_map(|w| {
        let total: f64 = w.iter().sum();
        JointSource::from_dense(2, 2, 2, w.iter().map(|v| v / total).collect()).unwrap()
    })
}

fn random_aux(card_u: usize, card_t: usize) -> impl Strategy<Value = AuxiliaryPair> {
    let u_cells = 2 * card_u;
    let t_cells = card_u * card_t;
    (
        prop::collection::vec(1e-4..1.0f64, u_cells),
        prop::collection::vec(1e-4..1.0f64, t_cells),
    )
        .prop_map(move |(uw, tw)| {
            let norm = |w: &[f64], rows: usize, cols: usize| {
                (0..rows)
                    .map(|r| {
                        let row = &w[r * cols..(r + 1) * cols];
                        let total: f64 = row.iter().sum();
                        row.iter().map(|v| v / total).collect::<Vec<f64>>()
                    })
                    .collect::<Vec<_>>()
            };
            AuxiliaryPair::from_rows(norm(&uw, 2, card_u), norm(&tw, card_u, card_t)).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fast_terms_equal_generic_terms(
        src in random_source(),
        aux in random_aux(3, 2),
    ) {
        let slow = region_terms(&src, &aux).unwrap();
        let mut ev = TermEvaluator::new(&src, 3, 2);
        let u: Vec<f64> = aux.u_given_x().rows().iter().flatten().copied().collect();
        let t: Vec<f64> = aux.t_given_u().rows().iter().flatten().copied().collect();
        let fast = ev.eval(&u, &t);
        prop_assert!((fast.i_uy_t - slow.i_uy_t).abs() < 1e-11);
        prop_assert!((fast.i_uz_t - slow.i_uz_t).abs() < 1e-11);
        prop_assert!((fast.i_ux_y - slow.i_ux_y).abs() < 1e-11);
        prop_assert!((fast.i_tx_y - slow.i_tx_y).abs() < 1e-11);
    }

    #[test]
    fn separation_feasibility_implies_joint_feasibility(
        src in random_source(),
        aux in random_aux(2, 2),
        r1 in 0.0..1.2f64,
        r2 in 0.0..0.8f64,
    ) {
        let rc = RateConstraints::new(r1, r2).unwrap();
        let sep = separation_key_rate(&src, &aux, rc).unwrap();
        let joint = theorem1_key_rate(&src, &aux, rc).unwrap();
        if sep.feasible {
            prop_assert!(joint.feasible);
            prop_assert!((sep.key_rate - joint.key_rate).abs() < 1e-12);
        }
    }

    #[test]
    fn region_point_recomputes_from_witness(
        src in random_source(),
        aux in random_aux(2, 2),
    ) {
        let rc = RateConstraints::new(0.7, 0.2).unwrap();
        let point = theorem1_key_rate(&src, &aux, rc).unwrap();
        let again = theorem1_key_rate(&src, &point.witness, rc).unwrap();
        prop_assert!((point.key_rate - again.key_rate).abs() < 1e-9);
    }

    #[test]
    fn reduction_postconditions(
        src in random_source(),
        aux in random_aux(2, 2),
    ) {
        let before = region_terms(&src, &aux).unwrap();
        let reduced = reduce_tu(&src, &aux).unwrap();
        let after = region_terms(&src, &reduced).unwrap();
        prop_assert!(after.mi_difference() >= before.mi_difference() - 1e-9);
        prop_assert!(after.i_tx_y <= before.i_tx_y + 1e-9);
    }

    #[test]
    fn markov_chain_holds_for_assembled_joints(
        src in random_source(),
        aux in random_aux(2, 3),
    ) {
        use skw_core::prob::conditional_mutual_information as cmi;
        let joint = assemble_joint(&src, &aux).unwrap();
        prop_assert!(cmi(&joint, &["t"], &["x"], &["u"]).unwrap().abs() <= 1e-12);
        prop_assert!(
            cmi(&joint, &["t", "u"], &["y", "z"], &["x"]).unwrap().abs() <= 1e-12
        );
    }
}

#[test]
fn optimizer_tracks_oracle_on_a_fixed_batch() {
    // a smaller, faster version of the acceptance cross-check
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(424242);
    for case in 0..4 {
        let mut w: Vec<f64> = (0..8).map(|_| rng.gen_range(1e-3..1.0)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        let src = JointSource::from_dense(2, 2, 2, w).unwrap();
        let rc = RateConstraints::new(0.4, 0.15).unwrap();
        let cfg = OptimizerConfig { restarts: 24, seed: 7, ..Default::default() };
        let opt = optimize_key_rate(&src, rc, 2, 2, &cfg, Baseline::Joint, &[]).unwrap();
        let oracle = grid_oracle(&src, rc, 2, 2, 16, Baseline::Joint).unwrap();
        assert!(
            (opt.key_rate - oracle.key_rate).abs() < 2e-3,
            "case {}: optimizer {} vs oracle {}",
            case,
            opt.key_rate,
            oracle.key_rate
        );
    }
}

#[test]
fn sweep_joint_curve_dominates_separation_everywhere() {
    use skw_core::region::{sweep, VaryAxis};
    let src = JointSource::bsc_pair(0.1, 0.2).unwrap();
    let cfg = OptimizerConfig { restarts: 8, seed: 3, ..Default::default() };
    let pts = sweep(&src, VaryAxis::R2, 0.3, 0.0, 0.5, 6, 1, 2, &cfg).unwrap();
    for p in &pts {
        assert!(p.joint.key_rate >= p.separation.key_rate - 1e-9);
        // every reported point recomputes from its witness
        let again = theorem1_key_rate(
            &src,
            &p.joint.witness,
            RateConstraints::new(0.3, p.varied_rate).unwrap(),
        )
        .unwrap();
        assert!((p.joint.key_rate - again.key_rate).abs() < 1e-9);
    }
}
