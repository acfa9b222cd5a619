//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use moalign::aggregate::{
    arithmetic_mean, geometric_mean, gm_gradient, lse_gradient, lse_softmin, pareto_argmax, Aggregator, Location,
    ParetoFront,
};
use moalign::harness::{default_ablation_config, run_ablation, Diagnostics, PRESETS, DIAGNOSTICS_FILE, LOG_FILE};
use moalign::metrics::{select_candidate, EvalPair, MetricsReport};
use moalign::optim::{
    batch_normalize, decoupled_advantages, grpo_advantages, policy_loss, AdvantageBatch, AdvantageConfig,
    AdvantageMode, ClipConfig, GroupRollout, RatioMode,
};
use moalign::policy::{beam_search, ContextOrder, Policy};
use moalign::property::{
    Candidate, Direction, Fingerprint, OracleRegistry, PropertyRole, PropertySpec, TaskSpec,
};
use moalign::shaping::{improvement_score, sigmoid, stability_score};
use moalign::vocab::{Vocabulary, END};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64()))
}

// 1

fn shaping_exactness() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0f64;
    for _ in 0..1000 {
        let t: f64 = rng.gen_range(-50.0..50.0);
        let alpha: f64 = rng.gen_range(1e-3..500.0);
        let dir = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        worst = worst.max((improvement_score(t, t, alpha, dir) - 0.5).abs());
    }
    ensure(worst <= f64::EPSILON, || format!("improvement at target off by {worst:e}"))?;

    let expect = 0.5 * sigmoid(10.0);
    ensure((expect - 0.4999773).abs() < 1e-7, || format!("0.5*sigma(10) = {expect}"))?;
    let mut worst_band = 0f64;
    for _ in 0..1000 {
        let delta: f64 = rng.gen_range(1e-3..10.0);
        let center: f64 = rng.gen_range(-10.0..10.0);
        let (lo, hi) = (center - delta, center + delta);
        let s = stability_score(hi, lo, hi, 5.0 / delta).map_err(|e| e.to_string())?;
        worst_band = worst_band.max((s - expect).abs());
    }
    ensure(worst_band < 1e-9, || format!("band edge off by {worst_band:e}"))?;
    within(t0.elapsed(), 1.0)?;
    Ok(format!("max |S-0.5| {worst:.1e}, max band-edge error {worst_band:.1e}"))
}

// 2

fn sandwich() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..10_000 {
        let n = rng.gen_range(1..=8);
        let pos: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-6..1.0)).collect();
        let am = arithmetic_mean(&pos).map_err(|e| e.to_string())?;
        let gm = geometric_mean(&pos).map_err(|e| e.to_string())?;
        ensure(gm <= am, || format!("vector {i}: GM {gm} > AM {am} for {pos:?}"))?;

        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let k: f64 = rng.gen_range(0.1..50.0);
        let lse = lse_softmin(&x, k).map_err(|e| e.to_string())?;
        let min = x.iter().copied().fold(f64::INFINITY, f64::min);
        let lower = min - (n as f64).ln() / k;
        ensure(lower <= lse && lse <= min, || format!("vector {i}: {lower} <= {lse} <= {min} fails"))?;
    }
    within(t0.elapsed(), 1.0)?;
    Ok("10000 vectors".into())
}

// 3

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn gradient_identities() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_gm, mut worst_lse, mut worst_sum) = (0f64, 0f64, 0f64);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=8);
        let r: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let g = gm_gradient(&r).map_err(|e| e.to_string())?;
        let mut fd = vec![0.0; n];
        for i in 0..n {
            let h = 1e-6 * r[i];
            let (mut up, mut dn) = (r.clone(), r.clone());
            up[i] += h;
            dn[i] -= h;
            fd[i] = (geometric_mean(&up).unwrap() - geometric_mean(&dn).unwrap()) / (2.0 * h);
        }
        let err: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
        worst_gm = worst_gm.max(max_abs(&err) / max_abs(&fd));

        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let k: f64 = rng.gen_range(0.2..10.0);
        let g = lse_gradient(&x, k).map_err(|e| e.to_string())?;
        worst_sum = worst_sum.max((g.iter().sum::<f64>() - 1.0).abs());
        let h = 1e-5;
        for i in 0..n {
            let (mut up, mut dn) = (x.clone(), x.clone());
            up[i] += h;
            dn[i] -= h;
            fd[i] = (lse_softmin(&up, k).unwrap() - lse_softmin(&dn, k).unwrap()) / (2.0 * h);
        }
        let err: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
        worst_lse = worst_lse.max(max_abs(&err) / max_abs(&fd));
    }
    ensure(worst_gm < 1e-6, || format!("gm gradient relative error {worst_gm:e}"))?;
    ensure(worst_lse < 1e-6, || format!("lse gradient relative error {worst_lse:e}"))?;
    ensure(worst_sum < 1e-12, || format!("lse gradient sums off by {worst_sum:e}"))?;
    within(t0.elapsed(), 5.0)?;
    Ok(format!("gm {worst_gm:.1e}, lse {worst_lse:.1e}, softmax sum {worst_sum:.1e}"))
}

// 4

fn moments(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn advantage_normalization() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_mu, mut worst_sd) = (0f64, 0f64);
    for _ in 0..1000 {
        let g = rng.gen_range(2..=16);
        let scale = 10f64.powf(rng.gen_range(-3.0..2.0));
        let r: Vec<f64> = (0..g).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        let (mu, sd) = moments(&grpo_advantages(&r, 0.0).map_err(|e| e.to_string())?);
        worst_mu = worst_mu.max(mu.abs());
        worst_sd = worst_sd.max((sd - 1.0).abs());

        let m = rng.gen_range(1..=5);
        let matrix: Vec<Vec<f64>> = (0..g).map(|_| (0..m).map(|_| rng.gen_range(0.0..scale)).collect()).collect();
        let d = decoupled_advantages(&matrix, 0.0).map_err(|e| e.to_string())?;
        for j in 0..m {
            let col: Vec<f64> = d.iter().map(|row| row[j]).collect();
            let (mu, sd) = moments(&col);
            worst_mu = worst_mu.max(mu.abs());
            worst_sd = worst_sd.max((sd - 1.0).abs());
        }
    }
    ensure(worst_mu < 1e-12, || format!("group mean {worst_mu:e}"))?;
    ensure(worst_sd < 1e-9, || format!("group std off by {worst_sd:e}"))?;

    // sum_bn through the batch path, several mini-batches per batch.
    let task = small_task(&Vocabulary::new(&["A", "B"]).unwrap(), 4);
    let (mut bn_mu, mut bn_sd) = (0f64, 0f64);
    for _ in 0..200 {
        let groups = rng.gen_range(2..=12);
        let minibatches = rng.gen_range(1..=groups.min(3));
        let rollouts: Vec<GroupRollout> = (0..groups)
            .map(|_| {
                let g = rng.gen_range(2..=6);
                let cands: Vec<Candidate> = (0..g).map(|_| Candidate::new(vec![], true, task.1.vocab())).collect();
                let matrix: Vec<Vec<f64>> = (0..g).map(|_| vec![rng.gen_range(0.0..1.0)]).collect();
                let totals = vec![0.0; g];
                GroupRollout::new(task.0.clone(), cands, matrix, totals, vec![vec![0.0]; g], vec![vec![0.0]; g]).unwrap()
            })
            .collect();
        let cfg = AdvantageConfig { mode: AdvantageMode::GdpoSumBn, ..Default::default() };
        let batch = AdvantageBatch::compute(&rollouts, &cfg, minibatches).map_err(|e| e.to_string())?;
        for range in moalign::optim::minibatch_ranges(groups, minibatches).unwrap() {
            let flat: Vec<f64> = batch.values[range].iter().flatten().copied().collect();
            let (mu, sd) = moments(&flat);
            bn_mu = bn_mu.max(mu.abs());
            bn_sd = bn_sd.max((sd - 1.0).abs());
        }
    }
    let direct = batch_normalize(&[3.0, -1.0, 0.5, 7.0], 1e-8).map_err(|e| e.to_string())?;
    let (mu, sd) = moments(&direct);
    bn_mu = bn_mu.max(mu.abs());
    bn_sd = bn_sd.max((sd - 1.0).abs());
    ensure(bn_mu < 1e-6 && bn_sd < 1e-6, || format!("sum_bn mean {bn_mu:e}, std off by {bn_sd:e}"))?;
    within(t0.elapsed(), 2.0)?;
    Ok(format!("group |mu| {worst_mu:.1e}, |sd-1| {worst_sd:.1e}; batch |mu| {bn_mu:.1e}, |sd-1| {bn_sd:.1e}"))
}

/// One-property task (`frac_A`) over `vocab` on slot 0.
fn small_task(vocab: &Vocabulary, max_len: usize) -> (Arc<TaskSpec>, OracleRegistry) {
    let mut reg = OracleRegistry::new(Arc::new(vocab.clone()), max_len);
    reg.resolve("frac_A").unwrap();
    let props = vec![PropertySpec::new("a", Direction::Maximize, 0.25, 0.9, "frac_A").unwrap()];
    let src = vocab.parse("A").unwrap();
    let task = TaskSpec::new("t", 0, src, props, &reg, 64).unwrap();
    (Arc::new(task), reg)
}

// 5

fn random_policy(vocab: &Arc<Vocabulary>, rng: &mut ChaCha8Rng, spread: f64) -> Policy {
    let p = Policy::uniform(vocab.clone(), ContextOrder::Two, 1).unwrap();
    let logits = (0..p.logits().len()).map(|_| rng.gen_range(-spread..spread)).collect();
    Policy::from_parts(vocab.clone(), ContextOrder::Two, 1, logits, 0).unwrap()
}

fn with_logits(p: &Policy, logits: Vec<f64>) -> Policy {
    Policy::from_parts(p.vocab().clone(), p.order(), p.slots(), logits, 0).unwrap()
}

/// Importance ratios the loss will see, token or sequence level.
fn ratios(rollouts: &[GroupRollout], policy: &Policy, mode: RatioMode) -> Vec<f64> {
    let mut out = Vec::new();
    for g in rollouts {
        for (c, old) in g.candidates.iter().zip(&g.logp_old) {
            let lp = policy.log_prob(0, &c.actions()).unwrap();
            let diffs: Vec<f64> = lp.iter().zip(old).map(|(a, b)| a - b).collect();
            match mode {
                RatioMode::Token => out.extend(diffs.iter().map(|d| d.exp())),
                RatioMode::Sequence => out.push(diffs.iter().sum::<f64>().exp()),
            }
        }
    }
    out
}

fn loss_gradient() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let vocab = Arc::new(Vocabulary::new(&["A"]).unwrap());
    assert_eq!(vocab.len(), 3);
    let (task, _) = small_task(&vocab, 3);
    let clip = ClipConfig::default();
    let mut worst = 0f64;
    let mut done = 0;
    let mut modes = [0usize; 2];
    while done < 20 {
        let policy = random_policy(&vocab, &mut rng, 1.5);
        let old = random_policy(&vocab, &mut rng, 1.5);
        let reference = random_policy(&vocab, &mut rng, 1.5);
        let mode = if done % 2 == 0 { RatioMode::Token } else { RatioMode::Sequence };
        let beta = if done % 4 < 2 { rng.gen_range(0.01..0.5) } else { 0.0 };
        let n_groups = rng.gen_range(1..=3);
        let rollouts: Vec<GroupRollout> = (0..n_groups)
            .map(|_| {
                let cands: Vec<Candidate> = (0..2)
                    .map(|_| {
                        let len = rng.gen_range(0..=3);
                        Candidate::new(vec![2; len], len < 3, &vocab)
                    })
                    .collect();
                let logp_old = cands.iter().map(|c| old.log_prob(0, &c.actions()).unwrap()).collect();
                let logp_ref = cands.iter().map(|c| reference.log_prob(0, &c.actions()).unwrap()).collect();
                GroupRollout::new(task.clone(), cands, vec![vec![0.0]; 2], vec![0.0; 2], logp_old, logp_ref).unwrap()
            })
            .collect();
        // Skip draws sitting on a clip boundary, where the loss has a kink.
        let near_kink = ratios(&rollouts, &policy, mode)
            .iter()
            .any(|r| (r - (1.0 + clip.eps_clip)).abs() < 1e-4 || (r - (1.0 - clip.eps_clip)).abs() < 1e-4);
        if near_kink {
            continue;
        }
        let values = (0..n_groups).map(|_| (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let adv = AdvantageBatch { values, mode: AdvantageMode::Grpo, eps_grp: 1e-8, eps_bn: 1e-8 };
        let loss_at = |p: &Policy| policy_loss(&rollouts, &adv, p, &reference, clip, beta, mode).unwrap();
        let analytic = loss_at(&policy).grad.values;
        let h = 1e-6;
        let mut fd = vec![0.0; analytic.len()];
        for (i, f) in fd.iter_mut().enumerate() {
            let mut up = policy.logits().to_vec();
            let mut dn = up.clone();
            up[i] += h;
            dn[i] -= h;
            *f = (loss_at(&with_logits(&policy, up)).loss - loss_at(&with_logits(&policy, dn)).loss) / (2.0 * h);
        }
        let num: f64 = analytic.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = fd.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rel = if den > 0.0 { num / den } else { num };
        ensure(rel < 1e-5, || format!("instance {done} ({mode:?}, beta {beta:.3}): relative error {rel:e}"))?;
        worst = worst.max(rel);
        modes[done % 2] += 1;
        done += 1;
    }
    within(t0.elapsed(), 30.0)?;
    Ok(format!("20 instances ({} token, {} sequence), worst relative error {worst:.1e}", modes[0], modes[1]))
}

// 6

fn grid(rng: &mut ChaCha8Rng, lo: i32, hi: i32) -> f64 {
    f64::from(rng.gen_range(lo..=hi)) / 8.0
}

/// A task built field by field so every quantity sits on an exact binary grid
/// and boundary cases actually occur.
fn random_task(rng: &mut ChaCha8Rng, vocab: &Vocabulary, width: usize) -> Arc<TaskSpec> {
    let m = rng.gen_range(1..=4);
    let mut props = Vec::new();
    let mut src = Vec::new();
    let mut roles = Vec::new();
    for j in 0..m {
        let dir = if rng.gen_bool(0.5) { Direction::Maximize } else { Direction::Minimize };
        let delta = grid(rng, 1, 8);
        let theta = grid(rng, -8, 8);
        let v = if rng.gen_bool(0.15) { 0.0 } else if rng.gen_bool(0.15) { theta } else { grid(rng, -8, 8) };
        let p = PropertySpec::new(&format!("p{j}"), dir, delta, theta, "frac_A").unwrap();
        let s = p.direction.sign();
        roles.push(if s * v < s * theta {
            PropertyRole::Improve { target: v + s * delta }
        } else {
            PropertyRole::Stabilize { lower: v - delta, upper: v + delta }
        });
        props.push(p);
        src.push(v);
    }
    let mut source = Candidate::new(vec![2], true, vocab);
    source.props = Some(src);
    source.fp = Some(random_fp(rng, width));
    Arc::new(TaskSpec { name: "t".into(), slot: 0, source, properties: props, roles })
}

fn random_fp(rng: &mut ChaCha8Rng, width: usize) -> Fingerprint {
    let n = rng.gen_range(0..=12);
    Fingerprint::from_bits(width, (0..n).map(|_| rng.gen_range(0..width))).unwrap()
}

fn random_candidate(rng: &mut ChaCha8Rng, vocab: &Vocabulary, task: &TaskSpec, width: usize) -> Candidate {
    let mut c = Candidate::new(vec![2], true, vocab);
    c.valid = rng.gen_bool(0.85);
    if c.valid {
        let src = task.source_values();
        let props = task
            .properties
            .iter()
            .zip(src)
            .map(|(p, &v)| match rng.gen_range(0..4) {
                0 => v + p.delta,
                1 => v - p.delta,
                2 => p.theta,
                _ => grid(rng, -16, 16),
            })
            .collect();
        c.props = Some(props);
        c.fp = Some(random_fp(rng, width));
    }
    c
}

struct Brute {
    sor: bool,
    strict: bool,
    ri: f64,
}

fn brute(task: &TaskSpec, c: &Candidate) -> Brute {
    if !c.valid {
        return Brute { sor: false, strict: false, ri: 0.0 };
    }
    let gen = c.props.as_ref().unwrap();
    let src = task.source.props.as_ref().unwrap();
    let mut sor = true;
    let mut thresholds = true;
    let (mut ri_sum, mut n_imp) = (0.0, 0usize);
    for (i, p) in task.properties.iter().enumerate() {
        let up = p.direction == Direction::Maximize;
        let needs_improve = if up { src[i] < p.theta } else { src[i] > p.theta };
        if needs_improve {
            let moved = if up { gen[i] - src[i] } else { src[i] - gen[i] };
            sor &= moved >= p.delta;
            let denom = src[i].abs().max(1e-8);
            ri_sum += moved / denom;
            n_imp += 1;
        } else {
            sor &= (gen[i] - src[i]).abs() <= p.delta;
        }
        thresholds &= if up { gen[i] >= p.theta } else { gen[i] <= p.theta };
    }
    let ri = if n_imp == 0 { 0.0 } else { ri_sum / n_imp as f64 };
    Brute { sor, strict: sor && thresholds, ri }
}

fn brute_tanimoto(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let sa: std::collections::BTreeSet<usize> = a.ones().collect();
    let sb: std::collections::BTreeSet<usize> = b.ones().collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        1.0
    } else {
        sa.intersection(&sb).count() as f64 / union as f64
    }
}

fn metrics_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let vocab = Vocabulary::new(&["A"]).unwrap();
    let width = 64;

    let pairs: Vec<EvalPair> = (0..1000)
        .map(|_| {
            let t = random_task(&mut rng, &vocab, width);
            let c = random_candidate(&mut rng, &vocab, &t, width);
            EvalPair::new(t, c)
        })
        .collect();
    let report = MetricsReport::compute(&pairs, true).map_err(|e| e.to_string())?;
    let b: Vec<Brute> = pairs.iter().map(|p| brute(&p.task, &p.generated)).collect();
    let n = pairs.len() as f64;
    let sor = b.iter().filter(|x| x.sor).count() as f64 / n;
    let ssor = b.iter().filter(|x| x.strict).count() as f64 / n;
    let ri = b.iter().map(|x| x.ri).sum::<f64>() / n;
    let sims: Vec<f64> = pairs
        .iter()
        .filter(|p| p.generated.valid)
        .map(|p| brute_tanimoto(p.generated.fp.as_ref().unwrap(), p.task.source.fp.as_ref().unwrap()))
        .collect();
    let sim = sims.iter().sum::<f64>() / sims.len() as f64;
    ensure(report.sor == sor, || format!("SOR {} vs {sor}", report.sor))?;
    ensure(report.ssor == ssor, || format!("SSOR {} vs {ssor}", report.ssor))?;
    ensure(report.ri == ri, || format!("RI {} vs {ri}", report.ri))?;
    ensure(report.sim == sim, || format!("Sim {} vs {sim}", report.sim))?;
    ensure(sor > 0.0 && sor < 1.0 && ssor > 0.0, || format!("degenerate draw: SOR {sor}, SSOR {ssor}"))?;

    let mut fallbacks = 0;
    for k in 0..100 {
        let task = random_task(&mut rng, &vocab, width);
        let beam: Vec<Candidate> = (0..20).map(|_| random_candidate(&mut rng, &vocab, &task, width)).collect();
        let got = select_candidate(&beam, &task).map_err(|e| e.to_string())?;
        let scored: Vec<(usize, Brute)> = beam.iter().map(|c| brute(&task, c)).enumerate().collect();
        let best = |keep: &dyn Fn(&Brute, &Candidate) -> bool| {
            let mut idx: Vec<usize> = (0..beam.len()).filter(|&i| keep(&scored[i].1, &beam[i])).collect();
            idx.sort_by(|&a, &b| scored[b].1.ri.partial_cmp(&scored[a].1.ri).unwrap().then(a.cmp(&b)));
            idx.first().copied()
        };
        let expect = match best(&|s, _| s.sor) {
            Some(i) => (i, true),
            None => {
                fallbacks += 1;
                (best(&|_, c| c.valid).unwrap_or(0), false)
            }
        };
        ensure((got.index, got.sor_compliant) == expect, || {
            format!("beam {k}: picked {:?}, expected {expect:?}", (got.index, got.sor_compliant))
        })?;
        ensure(got.candidate == beam[got.index], || format!("beam {k}: returned candidate differs"))?;
    }
    within(t0.elapsed(), 10.0)?;
    Ok(format!("SOR {sor:.3}, SSOR {ssor:.3}, RI {ri:.3e}, Sim {sim:.3}; 100 beams, {fallbacks} via fallback"))
}

// 7

fn beam_exactness() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vocab = Arc::new(Vocabulary::new(&["A", "B"]).unwrap());
    assert_eq!(vocab.len(), 4);
    let (task, _) = small_task(&vocab, 3);
    let max_len = 3;
    for trial in 0..20 {
        let policy = random_policy(&vocab, &mut rng, 2.0);
        // Every action sequence that ends in END or stops at max_len.
        let mut all: Vec<Vec<usize>> = Vec::new();
        let mut frontier: Vec<Vec<usize>> = vec![vec![]];
        while let Some(prefix) = frontier.pop() {
            for tok in 1..vocab.len() {
                let mut s = prefix.clone();
                s.push(tok);
                if tok == END || s.len() == max_len {
                    all.push(s);
                } else {
                    frontier.push(s);
                }
            }
        }
        let mut scored: Vec<(Vec<usize>, f64)> = all
            .into_iter()
            .map(|s| {
                let lp: f64 = policy.log_prob(0, &s).unwrap().iter().sum();
                (s, lp)
            })
            .collect();
        let total: f64 = scored.iter().map(|(_, l)| l.exp()).sum();
        ensure((total - 1.0).abs() < 1e-12, || format!("enumeration mass {total}"))?;
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));

        let beam = beam_search(&policy, &task, 64, max_len).map_err(|e| e.to_string())?;
        ensure(beam.len() == scored.len(), || format!("trial {trial}: {} hypotheses, expected {}", beam.len(), scored.len()))?;
        for (i, (h, (s, lp))) in beam.iter().zip(&scored).enumerate() {
            ensure(&h.candidate.actions() == s, || format!("trial {trial}: rank {i} is {:?}, expected {s:?}", h.candidate.actions()))?;
            ensure((h.logp - lp).abs() < 1e-12, || format!("trial {trial}: rank {i} logp {} vs {lp}", h.logp))?;
        }
    }
    within(t0.elapsed(), 5.0)?;
    Ok("20 random tables, 15 sequences each".into())
}

// 8

fn pareto_geometry() -> Outcome {
    let t0 = Instant::now();
    let mut seen = Vec::new();
    for front in ParetoFront::bowed_family(1000) {
        let am = pareto_argmax(&front, &Aggregator::arithmetic()).map_err(|e| e.to_string())?;
        let gm = pareto_argmax(&front, &Aggregator::geometric()).map_err(|e| e.to_string())?;
        ensure(am.location == Location::Boundary, || format!("{:?}: AM argmax at t={} is interior", front.shape, am.t))?;
        ensure(gm.location == Location::Interior, || format!("{:?}: GM argmax at t={} is on the boundary", front.shape, gm.t))?;
        seen.push(format!("{:?} gm t={:.3}", front.shape, gm.t));
    }
    within(t0.elapsed(), 5.0)?;
    Ok(seen.join(", "))
}

// 9 and 10

struct AblationResult {
    rows: Vec<moalign::harness::AblationRow>,
    narrow: std::collections::BTreeMap<(String, u64), f64>,
    elapsed: Duration,
}

fn run_shipped_ablation(dir: &Path) -> Result<AblationResult, String> {
    let t0 = Instant::now();
    let base = default_ablation_config().map_err(|e| e.to_string())?;
    ensure(base.max_steps == 300, || format!("shipped config trains {} steps", base.max_steps))?;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let rows = run_ablation(&PRESETS, &[1, 2, 3], &base, dir, threads).map_err(|e| e.to_string())?;
    let elapsed = t0.elapsed();
    let mut narrow = std::collections::BTreeMap::new();
    for r in &rows {
        let path = dir.join(&r.preset).join(format!("seed-{}", r.seed)).join(DIAGNOSTICS_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let d: Diagnostics = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        narrow.insert((r.preset.clone(), r.seed), d.mean_score["narrow"]);
    }
    Ok(AblationResult { rows, narrow, elapsed })
}

fn row<'a>(a: &'a AblationResult, preset: &str, seed: u64) -> &'a moalign::harness::AblationRow {
    a.rows.iter().find(|r| r.preset == preset && r.seed == seed).expect("preset ran")
}

fn ablation_trends(a: &AblationResult) -> Outcome {
    let seeds = [1u64, 2, 3];
    let mut notes = Vec::new();
    for (am, good) in [("grpo_am", "grpo_gm"), ("gdpo_am", "gdpo_lse")] {
        for &s in &seeds {
            let (x, y) = (row(a, am, s).band_violation, row(a, good, s).band_violation);
            ensure(x > y, || format!("seed {s}: band violation {am} {x:.3} <= {good} {y:.3}"))?;
        }
        let wins = seeds.iter().filter(|&&s| row(a, good, s).sor > row(a, am, s).sor).count();
        let sors = |p: &str| seeds.iter().map(|&s| format!("{:.3}", row(a, p, s).sor)).collect::<Vec<_>>().join("/");
        ensure(wins >= 2, || format!("SOR {good} [{}] beats {am} [{}] on {wins}/3 seeds", sors(good), sors(am)))?;
        notes.push(format!("{good} SOR {} vs {am} {} ({wins}/3)", sors(good), sors(am)));
    }
    ensure(a.elapsed.as_secs_f64() < 600.0, || format!("ablation took {:.1}s", a.elapsed.as_secs_f64()))?;
    Ok(format!("{}; 18 runs in {:.1}s", notes.join("; "), a.elapsed.as_secs_f64()))
}

fn sigmoid_alignment(a: &AblationResult) -> Outcome {
    let seeds = [1u64, 2, 3];
    let score = |p: &str, s: u64| a.narrow[&(p.to_string(), s)];
    let fmt = |p: &str| seeds.iter().map(|&s| format!("{:.3}", score(p, s))).collect::<Vec<_>>().join("/");
    let mut notes = Vec::new();
    let mut failed = false;
    for (on, off) in [("grpo_gm_sigmoid", "grpo_gm"), ("gdpo_lse_sigmoid", "gdpo_lse")] {
        let wins = seeds.iter().filter(|&&s| score(on, s) >= score(off, s)).count();
        failed |= wins < 2;
        notes.push(format!("narrow score {on} [{}] vs {off} [{}] ({wins}/3)", fmt(on), fmt(off)));
    }
    ensure(!failed, || notes.join("; "))?;
    Ok(notes.join("; "))
}

// 11

fn strip_wall_time(log: &str) -> Result<String, String> {
    let mut lines = log.lines();
    let header = lines.next().ok_or("empty log")?;
    let col = header.split(',').position(|h| h == "wall_time").ok_or("no wall_time column")?;
    let keep = |line: &str| {
        line.split(',').enumerate().filter(|(i, _)| *i != col).map(|(_, f)| f).collect::<Vec<_>>().join(",")
    };
    Ok(std::iter::once(header).chain(lines).map(keep).collect::<Vec<_>>().join("\n"))
}

fn determinism(tmp: &Path) -> Outcome {
    let t0 = Instant::now();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/conflict.toml");
    let mut logs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_moalign"))
            .args(["train", "--config"])
            .arg(&config)
            .args(["--seed", "11", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
        let log = std::fs::read_to_string(out.join(LOG_FILE)).map_err(|e| e.to_string())?;
        logs.push((strip_wall_time(&log)?, std::fs::read(out.join("metrics.json")).map_err(|e| e.to_string())?));
    }
    ensure(logs[0].0.as_bytes() == logs[1].0.as_bytes(), || "train logs differ".into())?;
    ensure(logs[0].1 == logs[1].1, || "metrics differ".into())?;
    within(t0.elapsed(), 120.0)?;
    Ok(format!("{} log lines identical", logs[0].0.lines().count()))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let ablation = run_shipped_ablation(&tmp.path().join("ablation"));
    let from_ablation = |f: fn(&AblationResult) -> Outcome| match &ablation {
        Ok(a) => f(a),
        Err(e) => Err(e.clone()),
    };

    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "shaping exactness", shaping_exactness()),
        (2, "AM-GM and soft-min sandwich", sandwich()),
        (3, "gradient identities", gradient_identities()),
        (4, "advantage normalization", advantage_normalization()),
        (5, "loss gradient", loss_gradient()),
        (6, "metric and selection oracles", metrics_oracle()),
        (7, "beam exactness", beam_exactness()),
        (8, "Pareto geometry", pareto_geometry()),
    ];
    results.push((9, "ablation trends", from_ablation(ablation_trends)));
    results.push((10, "sigmoid alignment", from_ablation(sigmoid_alignment)));
    results.push((11, "end-to-end determinism", determinism(tmp.path())));

    let mut failed = 0;
    for (id, name, r) in &results {
        match r {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
