use std::sync::Arc;

use proptest::prelude::*;

use moalign::aggregate::{arithmetic_mean, geometric_mean, lse_gradient, lse_softmin};
use moalign::metrics::{sor, ssor, MetricsReport, EvalPair};
use moalign::optim::{clipped_surrogate, grpo_advantages, kl_divergence, ClipConfig};
use moalign::policy::{ContextOrder, Policy, SnapshotRole};
use moalign::property::{annotate, fingerprint, tanimoto, Candidate, Direction, OracleRegistry, PropertySpec, TaskSpec};
use moalign::shaping::{improvement_score, stability_score};
use moalign::vocab::Vocabulary;

fn vocab() -> Arc<Vocabulary> {
    Arc::new(Vocabulary::new(&["A", "B", "C"]).unwrap())
}

fn tokens(max: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..5, 0..=max)
}

proptest! {
    #[test]
    fn improvement_score_is_monotone(t in -5.0..5.0f64, alpha in 0.1..50.0f64, a in -5.0..5.0f64, b in -5.0..5.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(improvement_score(lo, t, alpha, 1.0) <= improvement_score(hi, t, alpha, 1.0));
        prop_assert!(improvement_score(lo, t, alpha, -1.0) >= improvement_score(hi, t, alpha, -1.0));
    }

    #[test]
    fn stability_score_peaks_inside(center in -5.0..5.0f64, delta in 0.01..3.0f64, off in 0.0..1.0f64) {
        let alpha = 5.0 / delta;
        let (l, u) = (center - delta, center + delta);
        let mid = stability_score(center, l, u, alpha).unwrap();
        let edge = stability_score(center + off * delta, l, u, alpha).unwrap();
        let out = stability_score(u + off * delta + 1e-9, l, u, alpha).unwrap();
        prop_assert!(mid >= edge - 1e-15 && edge >= out - 1e-15);
        prop_assert!((0.0..1.0).contains(&mid));
    }

    #[test]
    fn mean_inequalities(v in prop::collection::vec(1e-9..1.0f64, 1..9), k in 0.05..40.0f64) {
        let gm = geometric_mean(&v).unwrap();
        prop_assert!(gm <= arithmetic_mean(&v).unwrap());
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let lse = lse_softmin(&v, k).unwrap();
        prop_assert!(lse <= min && lse >= min - (v.len() as f64).ln() / k);
        let g = lse_gradient(&v, k).unwrap();
        prop_assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn surrogate_is_pessimistic(rho in 0.0..3.0f64, a in -3.0..3.0f64, eps in 0.01..0.9f64) {
        let clip = ClipConfig::new(eps).unwrap();
        prop_assert!(clipped_surrogate(rho, a, clip) <= rho * a + 1e-15);
    }

    #[test]
    fn kl_is_nonnegative(p in prop::collection::vec(-6.0..6.0f64, 2..8), shift in -3.0..3.0f64) {
        let q: Vec<f64> = p.iter().rev().map(|x| x * 0.5 + shift).collect();
        prop_assert!(kl_divergence(&p, &q) >= 0.0);
        let shifted: Vec<f64> = p.iter().map(|x| x + shift).collect();
        prop_assert!(kl_divergence(&p, &shifted).abs() < 1e-12);
    }

    #[test]
    fn group_normalization(r in prop::collection::vec(-100.0..100.0f64, 2..32)) {
        let a = grpo_advantages(&r, 0.0).unwrap();
        let n = a.len() as f64;
        let mean = a.iter().sum::<f64>() / n;
        let sd = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        prop_assert!(mean.abs() < 1e-12);
        prop_assert!(sd == 0.0 || (sd - 1.0).abs() < 1e-9);
    }

    #[test]
    fn snapshots_are_isolated(row in 0usize..9, col in 0usize..2, g in -5.0..5.0f64) {
        let mut p = Policy::uniform(Arc::new(Vocabulary::new(&["A"]).unwrap()), ContextOrder::Two, 1).unwrap();
        let snap = p.snapshot(SnapshotRole::Old);
        let before = snap.logits().to_vec();
        let mut grad = p.zero_gradient();
        grad.row_mut(row)[col] = g;
        p.apply_gradient(&grad, 1.0).unwrap();
        prop_assert_eq!(snap.logits(), &before[..]);
        prop_assert_eq!(p.version(), snap.version() + 1);
    }

    #[test]
    fn tanimoto_bounds(a in tokens(10), b in tokens(10)) {
        let v = vocab();
        let fa = fingerprint(&a, &v, 256).unwrap();
        let fb = fingerprint(&b, &v, 256).unwrap();
        let s = tanimoto(&fa, &fb).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, tanimoto(&fb, &fa).unwrap());
    }

    #[test]
    fn metrics_ignore_pair_order(seqs in prop::collection::vec(tokens(8), 1..12), rot in 0usize..12) {
        let v = vocab();
        let mut reg = OracleRegistry::new(v.clone(), 8);
        reg.resolve("frac_A").unwrap();
        reg.resolve("frac_B").unwrap();
        let props = vec![
            PropertySpec::new("a", Direction::Maximize, 0.125, 0.5, "frac_A").unwrap(),
            PropertySpec::new("b", Direction::Minimize, 0.25, 0.5, "frac_B").unwrap(),
        ];
        let task = Arc::new(TaskSpec::new("t", 0, v.parse("A B C C").unwrap(), props, &reg, 256).unwrap());
        let mut pairs: Vec<EvalPair> = seqs
            .into_iter()
            .map(|s| {
                let mut c = Candidate::new(s, true, &v);
                annotate(&mut c, &task, &reg).unwrap();
                EvalPair::new(task.clone(), c)
            })
            .collect();
        let before = MetricsReport::compute(&pairs, true).unwrap();
        prop_assert!(ssor(&pairs, true).unwrap() <= sor(&pairs).unwrap());
        let k = rot % pairs.len();
        pairs.rotate_left(k);
        pairs.reverse();
        let after = MetricsReport::compute(&pairs, true).unwrap();
        prop_assert_eq!(before.sor, after.sor);
        prop_assert_eq!(before.ssor, after.ssor);
        prop_assert!((before.ri - after.ri).abs() <= 1e-12 * before.ri.abs().max(1.0));
        prop_assert!((before.sim - after.sim).abs() <= 1e-12);
    }
}
