mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fcm_cad::eval::{self, confusion_at, sweep_scores, ConfusionMatrix, Metric};
use fcm_cad::fcm::{self, ConvergenceConfig, InferenceStatus, StateVector, WeightMatrix};
use fcm_cad::fuzzy::{derive_weight, ExpertOpinionSet, Grade, LinguisticTerm};
use fcm_cad::model::{ConceptId, Label, PatientRecord, Provenance, Stage, WeightSet};
use fcm_cad::{CadModel, MetricsReport};

fn model() -> &'static CadModel {
    static MODEL: std::sync::OnceLock<CadModel> = std::sync::OnceLock::new();
    MODEL.get_or_init(CadModel::bundled)
}

fn record(seed: u64) -> PatientRecord {
    support::random_record(&mut ChaCha8Rng::seed_from_u64(seed), model())
}

fn term() -> impl Strategy<Value = LinguisticTerm> {
    (0usize..13).prop_map(|g| match g {
        0 => LinguisticTerm::Zero,
        1..=6 => LinguisticTerm::positive(Grade::ALL[g - 1]),
        _ => LinguisticTerm::negative(Grade::ALL[g - 7]),
    })
}

fn labeled_scores() -> impl Strategy<Value = Vec<(f64, Label)>> {
    prop::collection::vec(
        ((-20i32..=20).prop_map(|k| k as f64 / 20.0), any::<bool>())
            .prop_map(|(s, d)| (s, if d { Label::Diseased } else { Label::Healthy })),
        1..80,
    )
}

fn grid() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(-40i32..=40, 1..25).prop_map(|s| s.into_iter().map(|k| k as f64 / 40.0).collect())
}

proptest! {
    #[test]
    fn squash_is_odd_and_monotone(x in -50.0f64..50.0, d in 0.0f64..5.0) {
        let f = |v: f64| fcm::squash(v).unwrap();
        prop_assert_eq!(f(-x), -f(x));
        prop_assert!(f(x + d) >= f(x));
        prop_assert!(f(x).abs() <= 1.0);
    }

    #[test]
    fn zero_state_is_fixed(n in 2usize..12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = WeightMatrix::zeros(n);
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                w.set(i, j, rand::Rng::gen_range(&mut rng, -1.0..=1.0)).unwrap();
            }
        }
        let zero = StateVector::zeros(n);
        prop_assert_eq!(fcm::step(&zero, &w).unwrap(), zero.clone());
        let r = fcm::run_to_fixed_point(&zero, &w, &ConvergenceConfig::default()).unwrap();
        prop_assert_eq!(r.status, InferenceStatus::Converged);
        prop_assert_eq!(r.iterations, 1);
    }

    #[test]
    fn converged_state_is_a_fixed_point(
        inputs in prop::collection::vec(0.0f64..=1.0, 30),
        weights in prop::collection::vec(-1.0f64..=1.0, 30),
    ) {
        let mut v = inputs.clone();
        v.push(0.0);
        let state = StateVector::new(v).unwrap();
        let matrix = WeightMatrix::star(&weights).unwrap();
        let clamped: Vec<usize> = (0..30).collect();
        let cfg = ConvergenceConfig::default();
        let r = fcm::run_clamped(&state, &matrix, &clamped, &cfg).unwrap();
        if r.status == InferenceStatus::Converged {
            let again = fcm::step_clamped(&r.final_state, &matrix, &clamped).unwrap();
            prop_assert!(again.max_abs_diff(&r.final_state) < cfg.epsilon);
        }
        prop_assert!(r.iterations <= cfg.max_iterations);
    }

    #[test]
    fn single_pass_matches_one_step(
        inputs in prop::collection::vec(0.0f64..=1.0, 30),
        weights in prop::collection::vec(-1.0f64..=1.0, 30),
    ) {
        let s = fcm::single_pass_score(&inputs, &weights).unwrap();
        let mut v = inputs.clone();
        v.push(0.0);
        let next = fcm::step(&StateVector::new(v).unwrap(), &WeightMatrix::star(&weights).unwrap()).unwrap();
        prop_assert!((next.values()[30] - s.tanh()).abs() <= 1e-12);
    }

    #[test]
    fn single_pass_is_monotone_in_each_input(
        inputs in prop::collection::vec(0.0f64..=0.5, 30),
        weights in prop::collection::vec(-1.0f64..=1.0, 30),
        k in 0usize..30,
        bump in 0.0f64..=0.5,
    ) {
        let before = fcm::single_pass_score(&inputs, &weights).unwrap();
        let mut raised = inputs.clone();
        raised[k] += bump;
        let after = fcm::single_pass_score(&raised, &weights).unwrap();
        let tol = 1e-12;
        if weights[k] >= 0.0 {
            prop_assert!(after >= before - tol);
        } else {
            prop_assert!(after <= before + tol);
        }
    }

    #[test]
    fn defuzzified_weight_properties(terms in prop::collection::vec(term(), 1..10), k in 2usize..5) {
        let set = ExpertOpinionSet::new(terms.clone()).unwrap();
        let w: f64 = derive_weight(&set).unwrap();
        prop_assert!((-1.0..=1.0).contains(&w));
        let m: f64 = derive_weight(&set.mirrored()).unwrap();
        prop_assert!((w + m).abs() <= 1e-9);
        let repeated = ExpertOpinionSet::new(terms.iter().flat_map(|t| std::iter::repeat(*t).take(k)).collect()).unwrap();
        let r: f64 = derive_weight(&repeated).unwrap();
        prop_assert!((w - r).abs() <= 1e-9);
    }

    #[test]
    fn rules_keep_weights_in_range(seed in any::<u64>(), base in prop::collection::vec(-1.0f64..=1.0, 30)) {
        let base = WeightSet::new(base.try_into().unwrap(), Provenance::UserDefuzzified).unwrap();
        let r = record(seed);
        let w = model().apply_rules(&r, &base);
        prop_assert!(w.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
        prop_assert_eq!(model().apply_rules(&r, &base), w);
    }

    #[test]
    fn diagnosis_is_consistent(seed in any::<u64>(), threshold in -1.0f64..=1.0) {
        let r = record(seed);
        let d = model().diagnose(&r, threshold).unwrap();
        let (lo, hi) = model().score_bounds(&d.effective_weights);
        prop_assert!(lo <= d.raw_score && d.raw_score <= hi);
        prop_assert_eq!(d.normalized_score, d.raw_score.tanh());
        prop_assert_eq!(model().band_of(d.normalized_score).unwrap(), d.band);
        prop_assert_eq!(Label::from(d.classification) == Label::Diseased, d.normalized_score >= threshold);
        let summed = d.contributions.iter().fold(0.0, |acc, c| acc + c.contribution);
        prop_assert_eq!(summed, d.raw_score);
    }

    #[test]
    fn adding_a_risk_factor_moves_score_with_its_weight(seed in any::<u64>(), pick in 0usize..7) {
        // concepts that no rule reads or rewrites
        let n = [13, 14, 15, 16, 17, 19, 20][pick];
        let id = ConceptId::new(n).unwrap();
        let without = record(seed).with_stage(id, Stage::No);
        let with = without.clone().with_stage(id, Stage::Yes);
        let a = model().diagnose(&without, 0.25).unwrap();
        let b = model().diagnose(&with, 0.25).unwrap();
        let w = model().baseline_weights().get(id);
        prop_assert_eq!(a.effective_weights.clone(), b.effective_weights.clone());
        prop_assert_eq!(w > 0.0, b.raw_score > a.raw_score);
        prop_assert!(b.normalized_score >= a.normalized_score);
    }

    #[test]
    fn band_is_total_on_the_unit_interval(x in -1.0f64..=1.0) {
        let band = model().band_of(x).unwrap();
        let lower = model().bands().boundaries().into_iter().rev().find(|b| x >= b.lower).unwrap();
        prop_assert_eq!(band, lower.band);
    }

    #[test]
    fn metric_identities(tp in 0usize..200, fp in 0usize..200, fn_ in 0usize..200, tn in 0usize..200) {
        let cm = ConfusionMatrix::new(tp, fp, fn_, tn);
        let m = MetricsReport::from_confusion(&cm);
        prop_assert_eq!(m.sensitivity.is_defined(), tp + fn_ > 0);
        prop_assert_eq!(m.specificity.is_defined(), tn + fp > 0);
        prop_assert_eq!(m.ppv.is_defined(), tp + fp > 0);
        prop_assert_eq!(m.npv.is_defined(), tn + fn_ > 0);
        if let Metric::Defined(acc) = m.accuracy {
            let (se, sp) = (m.sensitivity.value(), m.specificity.value());
            if let (Some(se), Some(sp)) = (se, sp) {
                let p = (tp + fn_) as f64;
                let n = (tn + fp) as f64;
                prop_assert!((acc - (se * p + sp * n) / (p + n)).abs() < 1e-12);
                prop_assert!((m.youden().value().unwrap() - (se + sp - 1.0)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn confusion_matches_sorted_counts(scores in labeled_scores(), t in -1.0f64..=1.0) {
        let cm = confusion_at(&scores, t);
        let positives = scores.iter().filter(|s| s.1 == Label::Diseased).count();
        prop_assert_eq!(cm.tp + cm.fn_, positives);
        prop_assert_eq!(cm.fp + cm.tn, scores.len() - positives);
        let mut pos: Vec<f64> = scores.iter().filter(|s| s.1 == Label::Diseased).map(|s| s.0).collect();
        let mut neg: Vec<f64> = scores.iter().filter(|s| s.1 == Label::Healthy).map(|s| s.0).collect();
        pos.sort_by(f64::total_cmp);
        neg.sort_by(f64::total_cmp);
        prop_assert_eq!(cm.tp, pos.len() - pos.partition_point(|&s| s < t));
        prop_assert_eq!(cm.tn, neg.partition_point(|&s| s < t));
    }

    #[test]
    fn sweep_is_monotone_and_picks_youden_max(scores in labeled_scores(), grid in grid()) {
        let sweep = sweep_scores(&scores, &grid).unwrap();
        for pair in sweep.points.windows(2) {
            prop_assert!(pair[1].confusion.tp <= pair[0].confusion.tp);
            prop_assert!(pair[1].confusion.tn >= pair[0].confusion.tn);
        }
        let flags: Vec<(f64, bool)> = scores.iter().map(|&(s, l)| (s, l == Label::Diseased)).collect();
        let oracle = support::youden_oracle(&flags, &grid);
        prop_assert_eq!(sweep.recommended.map(|r| r.threshold), oracle.map(|o| o.0));
        if let (Some(r), Some((_, j))) = (sweep.recommended, oracle) {
            prop_assert!((r.youden - j).abs() < 1e-12);
        }
    }
}

#[test]
fn default_grid_is_sorted_and_spans_unit_interval() {
    let g: Vec<f64> = eval::default_grid(41);
    assert!(g.windows(2).all(|w| w[1] > w[0]));
    assert_eq!((g[0], g[40]), (-1.0, 1.0));
}
