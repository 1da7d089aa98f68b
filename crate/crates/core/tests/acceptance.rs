//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured quantity and the wall time.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use offpolicy_betting::bandit::{LoggedInteraction, Policy, TabularEnv};
use offpolicy_betting::confidence::{evaluate_policy_interval, lcb, BoundMethod, BoundSpec, TheoryEnvelope};
use offpolicy_betting::experiments::{derive_seed, run_coverage, run_heavytail, CoverageConfig, HeavyTailConfig};
use offpolicy_betting::learning::{
    assumption1_check, log_grid, objective_gradient, objective_value, Family, Objective, ScoreFunction,
};
use offpolicy_betting::numerics::integrate;
use offpolicy_betting::selection::{pub_select, SelectionTask};
use offpolicy_betting::wealth::{pcrp_log_wealth, BetaPrior, LbupState, SampleBuffer, UpDpState};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Writes straight to the process stdout so the line survives test capture.
fn verdict(id: u8, name: &str, pass: bool, detail: &str, elapsed: Duration, budget: Duration) {
    let in_time = elapsed <= budget;
    let line = format!(
        "criterion {id:>2} {name:<34} {}  {detail}  [{:.1}s, budget {}s]\n",
        if pass && in_time { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} exceeded its time budget: {elapsed:?}");
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn random_sequence(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.0..3.0) })
        .collect()
}

#[test]
fn criterion_01_dp_exactness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=12);
        let ys = random_sequence(&mut rng, n);
        // brute-force sums of products over all subsets of each size
        let mut e = vec![0.0f64; n + 1];
        for mask in 0u32..(1 << n) {
            let prod: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ys[i]).product();
            e[mask.count_ones() as usize] += prod;
        }
        let state = UpDpState::from_slice(BetaPrior::Jeffreys, &ys).unwrap();
        for (k, (&ln_dp, &exact)) in state.log_y().iter().zip(&e).enumerate() {
            let dp = ln_dp.exp();
            let rel = if exact == 0.0 { dp.abs() } else { ((dp - exact) / exact).abs() };
            assert!(rel.is_finite(), "k = {k}: {dp} vs {exact}");
            worst = worst.max(rel);
        }
    }
    verdict(1, "dp exactness", worst <= 1e-12, &format!("max rel err {worst:.2e}"), start.elapsed(), secs(5));
}

/// `ln ∫ Π_t (1 - b + b y_t/ν) π(b) db` by adaptive quadrature, with the
/// arcsine prior handled through `b = sin²θ`.
fn mixture_log_wealth(ys: &[f64], nu: f64, prior: BetaPrior) -> f64 {
    let lw = |b: f64| ys.iter().map(|&y| (b * (y / nu - 1.0)).ln_1p()).sum::<f64>();
    let (g, hi, weight): (Box<dyn Fn(f64) -> f64>, f64, f64) = match prior {
        BetaPrior::Jeffreys => (
            Box::new(move |t: f64| lw(t.sin().powi(2))),
            std::f64::consts::FRAC_PI_2,
            2.0 / std::f64::consts::PI,
        ),
        BetaPrior::Uniform => (Box::new(lw), 1.0, 1.0),
    };
    let shift = (0..=1000).map(|i| g(hi * i as f64 / 1000.0)).fold(f64::NEG_INFINITY, f64::max);
    let total = integrate(|t| (g(t) - shift).exp(), 0.0, hi, 1e-300, 1e-12).unwrap().value;
    shift + (weight * total).ln()
}

#[test]
fn criterion_02_mixture_integral() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=20);
        let ys = random_sequence(&mut rng, n);
        for prior in [BetaPrior::Jeffreys, BetaPrior::Uniform] {
            let ev = UpDpState::from_slice(prior, &ys).unwrap().evaluator().unwrap();
            for _ in 0..5 {
                let nu = rng.random_range(0.1..3.0);
                let dp = ev.log_wealth(nu);
                let quad = mixture_log_wealth(&ys, nu, prior);
                worst = worst.max((dp - quad).exp_m1().abs());
            }
        }
    }
    verdict(2, "mixture-integral equivalence", worst <= 1e-6, &format!("max rel err {worst:.2e}"), start.elapsed(), secs(30));
}

#[test]
fn criterion_03_dominance() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut pcrp_excess, mut lbup_excess) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..1000 {
        let n = rng.random_range(1..=40);
        let ys = random_sequence(&mut rng, n);
        let nu = rng.random_range(0.05..3.0);
        let up_j = UpDpState::from_slice(BetaPrior::Jeffreys, &ys).unwrap().log_wealth(nu).unwrap().log_wealth;
        let up_u = UpDpState::from_slice(BetaPrior::Uniform, &ys).unwrap().log_wealth(nu).unwrap().log_wealth;
        let pc = pcrp_log_wealth(&SampleBuffer::from_slice(&ys).unwrap(), nu).unwrap().log_wealth;
        let lb = LbupState::from_slice(1 + i % 2, &ys).unwrap().log_wealth(nu).unwrap().log_wealth;
        pcrp_excess = pcrp_excess.max(pc - up_j);
        lbup_excess = lbup_excess.max(lb - up_u);
    }
    verdict(
        3,
        "wealth dominance",
        pcrp_excess <= 1e-6 && lbup_excess <= 1e-6,
        &format!("max(pcrp - up) {pcrp_excess:.2e}, max(lbup - up-uniform) {lbup_excess:.2e}"),
        start.elapsed(),
        secs(60),
    );
}

#[test]
fn criterion_04_coverage() {
    let start = Instant::now();
    let cfg = CoverageConfig {
        n: 500,
        trials: 1000,
        delta: 0.1,
        checkpoints: vec![],
        ..CoverageConfig::default()
    };
    let report = run_coverage(&cfg, BTreeMap::new()).unwrap();
    let rates: Vec<(String, f64)> = report
        .find("violation_rate_final", None)
        .map(|r| (format!("{}/{}", r.dataset, r.method), r.value.unwrap()))
        .collect();
    assert_eq!(rates.len(), 21);
    let (worst_cell, worst) = rates
        .iter()
        .cloned()
        .fold((String::new(), f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    verdict(
        4,
        "coverage at n = 500",
        worst <= 0.1 + 0.03,
        &format!("worst violation rate {worst:.3} ({worst_cell}) over {} cells", rates.len()),
        start.elapsed(),
        secs(600),
    );
}

#[test]
fn criterion_05_rate_envelope() {
    let start = Instant::now();
    let (shape, scale, n, delta, trials) = (6.0, 0.125, 10_000, 0.05, 300u64);
    let (mu, var) = (shape * scale, shape * scale * scale);
    let env = TheoryEnvelope::new(mu, var, n, delta).unwrap();
    let spec = BoundSpec::new(BoundMethod::PCrp, delta).unwrap();
    let gamma = Gamma::new(shape, scale).unwrap();
    let exceed = (0..trials)
        .into_par_iter()
        .filter(|&trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(505, &[trial]));
            let ys: Vec<f64> = (0..n).map(|_| gamma.sample(&mut rng)).collect();
            mu - lcb(&ys, &spec).unwrap().lcb > env.first_regime
        })
        .count();
    let rate = exceed as f64 / trials as f64;
    verdict(
        5,
        "pcrp gap within rate envelope",
        rate <= 2.0 * delta + 0.04,
        &format!("exceedance {rate:.3} (envelope {:.4})", env.first_regime),
        start.elapsed(),
        secs(300),
    );
}

/// Candidates interpolate between the greedy policy and the behavior policy,
/// so values are close while importance-weight variances differ widely.
fn selection_env() -> (TabularEnv, Vec<(String, Policy)>) {
    let behavior = vec![vec![0.48, 0.3, 0.2, 0.02], vec![0.25, 0.25, 0.25, 0.25], vec![0.1, 0.2, 0.3, 0.4]];
    let rewards = vec![vec![0.3, 0.5, 0.6, 0.9], vec![0.7, 0.2, 0.4, 0.5], vec![0.5, 0.6, 0.1, 0.3]];
    let env = TabularEnv::new(vec![0.3, 0.4, 0.3], rewards, Policy::tabular(behavior.clone()).unwrap()).unwrap();
    let greedy = [3, 0, 1];
    let candidates = [1.0, 0.95, 0.9, 0.8, 0.5]
        .iter()
        .map(|&lambda| {
            let table = behavior
                .iter()
                .zip(greedy)
                .map(|(row, g)| {
                    row.iter()
                        .enumerate()
                        .map(|(a, &p)| (1.0 - lambda) * p + if a == g { lambda } else { 0.0 })
                        .collect()
                })
                .collect();
            (format!("mix-{lambda}"), Policy::tabular(table).unwrap())
        })
        .collect();
    (env, candidates)
}

#[test]
fn criterion_06_selection_regret() {
    let start = Instant::now();
    let (n, delta, trials) = (2000, 0.1, 500u64);
    let (env, candidates) = selection_env();
    let values: BTreeMap<String, f64> = candidates
        .iter()
        .map(|(name, p)| (name.clone(), env.true_value(p).unwrap()))
        .collect();
    let (star, mu_star) = values.iter().fold(("", f64::NEG_INFINITY), |a, (k, &v)| if v > a.1 { (k, v) } else { a });
    let pi_star = &candidates.iter().find(|(k, _)| k == star).unwrap().1;
    let (m1, m2) = env.iw_moments(pi_star).unwrap();
    let v_star = m2 - m1 * m1;
    let envelope = TheoryEnvelope::new(mu_star, v_star, n, delta / candidates.len() as f64)
        .unwrap()
        .first_regime;
    let regrets: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let log = env.sample(n, derive_seed(606, &[trial])).unwrap();
            let spec = BoundSpec::new(BoundMethod::PCrp, delta).unwrap();
            let task = SelectionTask::new(log, candidates.clone(), spec).unwrap();
            let pub_choice = pub_select(&task).unwrap().chosen;
            let eb_choice = pub_select(&task.with_method(BoundMethod::MaurerEb).unwrap()).unwrap().chosen;
            (mu_star - values[&pub_choice], mu_star - values[&eb_choice])
        })
        .collect();
    let exceed = regrets.iter().filter(|r| r.0 > envelope).count() as f64 / trials as f64;
    let mean_pub = regrets.iter().map(|r| r.0).sum::<f64>() / trials as f64;
    let mean_eb = regrets.iter().map(|r| r.1).sum::<f64>() / trials as f64;
    verdict(
        6,
        "selection regret within envelope",
        exceed <= 2.0 * delta + 0.04,
        &format!(
            "exceedance {exceed:.3} (envelope {envelope:.4}); mean regret pcrp {mean_pub:.4} {} maurer-eb {mean_eb:.4} (reported)",
            if mean_pub <= mean_eb { "<=" } else { ">" }
        ),
        start.elapsed(),
        secs(300),
    );
}

#[test]
fn criterion_07_score_sandwich() {
    let start = Instant::now();
    let grid = log_grid(1e-4, 1e3, 49);
    let violations: usize = ScoreFunction::ALL
        .iter()
        .map(|&s| assumption1_check(s, &grid).unwrap().violations)
        .sum();
    verdict(
        7,
        "score-function sandwich",
        violations == 0 && grid.len() == 49,
        &format!("{violations} violations over 3 x {} points", grid.len()),
        start.elapsed(),
        secs(1),
    );
}

/// Worst relative error between the analytic gradient and central finite
/// differences over random points, skipping points near a kink.
fn gradient_error(family: Family, rng: &mut ChaCha8Rng) -> (f64, usize) {
    let (k, d, n) = (3, 3, 25);
    let mut worst = 0.0f64;
    let mut points = 0;
    while points < 20 {
        let beta = match family {
            Family::Iw | Family::Naive => 0.0,
            Family::Pl => rng.random_range(0.01..0.5),
            _ => rng.random_range(0.05..1.0),
        };
        let obj = Objective::new(family, beta).unwrap();
        let weights: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let behavior = Policy::fixed(vec![0.5, 0.3, 0.2]).unwrap();
        let log: Vec<_> = (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let (a, p) = behavior.sample_action(&x, rng).unwrap();
                LoggedInteraction::new(x, a, rng.random::<f64>(), p).unwrap()
            })
            .collect();
        let pi = Policy::linear_softmax(weights.clone(), 1.0).unwrap();
        // clipping and freezing are not differentiable where β r̃ = 1
        let near_kink = matches!(family, Family::Score(ScoreFunction::Freezing | ScoreFunction::Clipping))
            && log.iter().any(|rec| {
                let prob = pi.prob(&rec.context, rec.action).unwrap();
                (beta * prob / rec.propensity * rec.reward - 1.0).abs() < 1e-3
            });
        if near_kink {
            continue;
        }
        points += 1;
        let grad = objective_gradient(&obj, &log, &pi, Some(&behavior)).unwrap();
        let h = 1e-6;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for a in 0..k {
            for j in 0..d {
                let eval = |delta: f64| {
                    let mut w = weights.clone();
                    w[a][j] += delta;
                    objective_value(&obj, &log, &Policy::linear_softmax(w, 1.0).unwrap(), Some(&behavior)).unwrap()
                };
                let fd = (eval(h) - eval(-h)) / (2.0 * h);
                num = num.max((grad[a][j] - fd).abs());
                den = den.max(grad[a][j].abs());
            }
        }
        worst = worst.max(num / den.max(1e-3));
    }
    (worst, points)
}

#[test]
fn criterion_08_gradient_check() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut details = Vec::new();
    let mut worst = 0.0f64;
    for family in Family::ALL {
        let (err, points) = gradient_error(family, &mut rng);
        assert_eq!(points, 20);
        details.push(format!("{family} {err:.1e}"));
        worst = worst.max(err);
    }
    verdict(
        8,
        "objective gradients vs differences",
        worst <= 1e-5,
        &format!("max rel err {worst:.2e} [{}]", details.join(", ")),
        start.elapsed(),
        secs(30),
    );
}

#[test]
fn criterion_09_two_sided_evaluation() {
    let start = Instant::now();
    let behavior = Policy::tabular(vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.5, 0.3]]).unwrap();
    let env = TabularEnv::new(vec![0.4, 0.6], vec![vec![0.2, 0.5, 0.9], vec![0.4, 0.6, 0.1]], behavior).unwrap();
    let target = Policy::tabular(vec![vec![0.0, 0.2, 0.8], vec![0.1, 0.9, 0.0]]).unwrap();
    let truth = env.true_value(&target).unwrap();
    let spec = BoundSpec::new(BoundMethod::PCrp, 0.05).unwrap();
    let trials = 1000u64;
    let covered = (0..trials)
        .into_par_iter()
        .filter(|&trial| {
            let log = env.sample(500, derive_seed(909, &[trial])).unwrap();
            let iv = evaluate_policy_interval(&log, &target, &spec).unwrap();
            iv.lcb <= truth && truth <= iv.ucb
        })
        .count();
    let rate = covered as f64 / trials as f64;
    verdict(
        9,
        "two-sided interval coverage",
        rate >= 0.90 - 0.03,
        &format!("coverage {rate:.3} of {trials} (truth {truth:.4})"),
        start.elapsed(),
        secs(180),
    );
}

#[test]
fn criterion_10_heavy_tail_bands() {
    let start = Instant::now();
    let cfg = HeavyTailConfig {
        beta: 3.0,
        methods: vec![
            BoundMethod::PCrp,
            BoundMethod::MaurerEb,
            BoundMethod::wswrkm(1e-4),
            BoundMethod::wswrkm(1.0),
            BoundMethod::wswrkm(1e4),
        ],
        checkpoints: vec![10_000],
        trials: 100,
        delta: 0.1,
        seed: 10,
        target: None,
    };
    let report = run_heavytail(&cfg, BTreeMap::new()).unwrap();
    let band = |m: &BoundMethod| {
        report
            .find("band@t=10000", Some(&m.to_string()))
            .next()
            .unwrap()
            .value
            .unwrap()
    };
    let bands: Vec<String> = cfg.methods.iter().map(|m| format!("{m} {:.4}", band(m))).collect();
    let (pc, eb) = (band(&BoundMethod::PCrp), band(&BoundMethod::MaurerEb));
    verdict(
        10,
        "heavy-tail quantile bands at t = 1e4",
        pc < eb,
        &format!("10-90% bands: {}", bands.join(", ")),
        start.elapsed(),
        secs(300),
    );
}

#[test]
fn criterion_11_cli_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let opbet = |args: &[&str]| -> i32 {
        let mut argv = vec!["opbet".to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        offpolicy_betting::cli::run(argv)
    };
    let bytes = |out: &std::path::Path| {
        (
            std::fs::read(out.join("report.csv")).unwrap(),
            std::fs::read(out.join("manifest.json")).unwrap(),
        )
    };
    let s = |p: std::path::PathBuf| p.to_string_lossy().into_owned();
    let learn_out = s(root.join("learn"));
    let select_out = s(root.join("select"));
    let pool = format!("pool={learn_out}");
    let pool_dir = root.join("learn/pool/synthetic-600-3-3/f0.5/s1");
    let log = s(pool_dir.join("test.csv"));
    let policy = s(pool_dir.join("ls.policy"));
    let cov_out = s(root.join("coverage"));
    let ht_out = s(root.join("heavytail"));
    let eval_out = s(root.join("evaluate"));
    let runs: Vec<(&str, Vec<&str>, &str)> = vec![
        ("coverage", vec!["--seeds", "20", "--set", "n=60", "--method", "pcrp,up,maurer-eb"], cov_out.as_str()),
        ("heavytail", vec!["--seeds", "5", "--set", "checkpoints=10,100"], ht_out.as_str()),
        (
            "learn",
            vec!["--seeds", "2", "--dataset", "synthetic:600:3:3", "--fraction", "0.5", "--set", "epochs=3"],
            learn_out.as_str(),
        ),
        ("select", vec!["--set", pool.as_str()], select_out.as_str()),
        ("evaluate", vec!["--dataset", log.as_str(), "--policy", policy.as_str()], eval_out.as_str()),
    ];
    let mut identical = Vec::new();
    for (cmd, args, out) in &runs {
        let mut argv = vec![*cmd, "--out", out];
        argv.extend(args.iter().copied());
        assert_eq!(opbet(&argv), 0, "{cmd} failed");
        let first = bytes(std::path::Path::new(out));
        assert_eq!(opbet(&argv), 0, "{cmd} failed on rerun");
        let second = bytes(std::path::Path::new(out));
        identical.push((cmd.to_string(), first == second && !first.0.is_empty()));
        assert_eq!(opbet(&[cmd, "--out", out, "--check"]), 0, "{cmd} report fails --check");
    }
    let all = identical.iter().all(|(_, same)| *same);
    let detail: Vec<String> = identical
        .iter()
        .map(|(c, same)| format!("{c} {}", if *same { "identical" } else { "DIFFERS" }))
        .collect();
    verdict(11, "byte-identical cli reruns", all, &detail.join(", "), start.elapsed(), secs(120));
}
