//! Acceptance suite. Each test checks one criterion and writes a single
//! `[PASS]`/`[FAIL]` line straight to stderr, so the lines show up even
//! under the default captured test output.

use std::io::Write as _;
use std::time::{Duration, Instant};

use planmod::bounds::{
    consistency_prob, goal_in_some_postcond_prob, lower_bound_alpha, one_op_success_prob_fixed,
    one_op_success_prob_variable, upper_bound_alpha,
};
use planmod::cli;
use planmod::experiment::{
    adaptive_sweep, check_upper_bound, one_step_counts, wilson_ci, AdaptiveGrid, Curve, SweepConfig,
};
use planmod::generate::{
    gen_modification_instance, gen_operator, gen_raw_instance, ModelKind, ModelParams, RngStream,
};
use planmod::model::{execute, validate_plan, Instance, Literal, Plan, State};
use planmod::modify::{modify_plan, one_step_solvable, ModificationOutcome, ModificationProblem, OutcomeKind};
use planmod::oracle::{enumerate_consistency_prob, exhaustive_one_step, plan_bfs, SearchBudget, SearchOutcome};
use rand::Rng;

fn report(id: u32, name: &str, ok: bool, elapsed: Duration, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "[{tag}] criterion {id} ({name}): {detail} [{:.2}s]",
        elapsed.as_secs_f64()
    );
}

fn within_ci(hits: u64, trials: u64, truth: f64) -> (bool, String) {
    let (lo, hi) = wilson_ci(hits, trials, 0.99).unwrap();
    (lo <= truth && truth <= hi, format!("{:.5} in [{lo:.5}, {hi:.5}] vs {truth:.6}", hits as f64 / trials as f64))
}

#[test]
fn criterion_1_recurrence_matches_enumeration() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut boundaries_exact = true;
    for n in 0..=6 {
        for j in 0..=n {
            for w in 0..=n {
                let dp = consistency_prob(j, n, w).unwrap().value();
                let brute = enumerate_consistency_prob(j, n, w).unwrap().value();
                worst = worst.max((dp - brute).abs());
            }
            boundaries_exact &= consistency_prob(j, n, n).unwrap().value() == 2f64.powi(-(j as i32));
        }
        for w in 0..=n {
            boundaries_exact &= consistency_prob(n, n, w).unwrap().value() == 2f64.powi(-(w as i32));
        }
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-12 && boundaries_exact && elapsed < Duration::from_secs(1);
    report(1, "recurrence oracle equivalence", ok, elapsed, &format!("max |dp - enum| = {worst:e}"));
    assert!(ok);
}

#[test]
fn criterion_2_closed_form_values() {
    let start = Instant::now();
    let ub = upper_bound_alpha(10, 2, 0.5).unwrap();
    let ub_exact = upper_bound_alpha(10, 2, 0.1).unwrap();
    let lb = lower_bound_alpha(10, 3, 2, 2, 0.5).unwrap();
    let p_var = one_op_success_prob_variable(10, 3, 2, 2).unwrap().value();
    let p_fix = one_op_success_prob_fixed(4, 1, 1, 1).unwrap().value();
    let checks = [
        (ub - 6.5788).abs() <= 1e-4,
        ub_exact == 1.0,
        (lb - 2.0662e4).abs() <= 2.0662e4 * 1e-3,
        (p_var - 1.5016e-3).abs() <= 1e-6,
        p_fix == 0.0625,
    ];
    let ok = checks.iter().all(|&c| c);
    report(
        2,
        "closed-form spot values",
        ok,
        start.elapsed(),
        &format!("alpha_ub={ub:.6} alpha_ub(0.1)={ub_exact} alpha_lb={lb:.2} p_var={p_var:.7e} p_fix={p_fix}"),
    );
    assert!(ok, "{checks:?}");
}

#[test]
fn criterion_3_probability_atoms() {
    let start = Instant::now();
    let samples = 100_000u64;
    let mut lines = Vec::new();
    let mut all_ok = true;
    let mut check = |label: &str, hits: u64, truth: f64| {
        let (ok, text) = within_ci(hits, samples, truth);
        all_ok &= ok;
        lines.push(format!("{label}: {text}"));
    };

    for model in [ModelKind::Variable, ModelKind::Fixed] {
        let params = ModelParams { model, n: 10, r: 3, c: 2, m: 1, seed: 20261016, ..Default::default() };

        let hits = (0..samples as usize)
            .filter(|&i| gen_operator(&params, i).unwrap().post().contains(&Literal::pos(0)))
            .count() as u64;
        check(&format!("(a) {model} literal in post"), hits, 0.1);

        let mut state_rng = RngStream::new(params.seed, &[0xa70b]);
        let hits = (0..samples as usize)
            .filter(|&i| {
                let op = gen_operator(&params, i).unwrap();
                let state = State((0..params.n).map(|_| state_rng.gen()).collect());
                op.pre().iter().all(|l| l.holds(&state))
            })
            .count() as u64;
        match model {
            ModelKind::Variable => check("(b) variable pre satisfied", hits, 0.85f64.powi(10)),
            ModelKind::Fixed => check("(c) fixed pre satisfied", hits, 0.125),
        }

        let counts = one_step_counts(&params, 6, samples as usize).unwrap();
        check(&format!("(d) {model} target in some post, o=6"), counts.target_in_post, 1.0 - 0.9f64.powi(6));
    }
    let elapsed = start.elapsed();
    let ok = all_ok && elapsed < Duration::from_secs(30);
    report(3, "probability-atom Monte Carlo", ok, elapsed, &lines.join("; "));
    assert!(ok, "{lines:#?}");
}

#[test]
fn criterion_4_upper_bound_soundness() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for model in [ModelKind::Variable, ModelKind::Fixed] {
        let base = ModelParams { model, n: 10, r: 3, c: 2, m: 1, seed: 4242, ..Default::default() };
        let rep = check_upper_bound(&base, 0.25, 20_000).unwrap();
        ok &= rep.pass;
        detail.push(format!(
            "{model}: o={} solvable {:.4} (target in post {:.4}) <= 0.25 + {:.4}",
            rep.operators,
            rep.fraction,
            rep.counts.target_in_post as f64 / rep.counts.trials as f64,
            (rep.ci_high - rep.ci_low) / 2.0
        ));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(60);
    report(4, "upper-bound soundness", ok, elapsed, &detail.join("; "));
    assert!(ok);
}

fn crossings(curve: &Curve) -> usize {
    curve.points.windows(2).filter(|w| (w[0].p_hat >= 0.5) != (w[1].p_hat >= 0.5)).count()
}

fn max_step(curve: &Curve) -> f64 {
    curve.points.windows(2).map(|w| w[1].alpha - w[0].alpha).fold(0.0, f64::max)
}

#[test]
fn criterion_5_phase_transition() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for n in [10, 20] {
        let mut estimates = Vec::new();
        for seed in [11u64, 12_345] {
            let base = ModelParams { model: ModelKind::Variable, n, r: 3, c: 2, m: 1, ..Default::default() };
            let mut config = SweepConfig::new(base, Vec::new());
            config.seed = seed;
            config.trials = 2000;
            let curve = adaptive_sweep(&config, AdaptiveGrid::default()).unwrap();

            let dominated = curve.points.iter().all(|p| {
                p.p_hat <= goal_in_some_postcond_prob(n, 2, p.operators).unwrap().value() + p.half_width()
            });
            let first = curve.points.first().unwrap().p_hat;
            let last = curve.points.last().unwrap().p_hat;
            let rises = first < 0.05 && last > 0.95;
            let unique = crossings(&curve) == 1 && curve.threshold_estimate.is_some();
            ok &= dominated && rises && unique;
            detail.push(format!(
                "n={n} seed={seed}: {} pts, p {first:.3}->{last:.3}, alpha_c={:?}, dominated={dominated}, unique={unique}",
                curve.points.len(),
                curve.threshold_estimate
            ));
            estimates.push((curve.threshold_estimate.unwrap_or(f64::NAN), max_step(&curve)));
        }
        let (a, b) = (estimates[0], estimates[1]);
        let reproducible = (a.0 - b.0).abs() <= a.1.max(b.1);
        ok &= reproducible;
        detail.push(format!("n={n}: |dalpha_c| = {:.3} vs grid step {:.3}", (a.0 - b.0).abs(), a.1.max(b.1)));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(300);
    report(5, "phase-transition reproduction", ok, elapsed, &detail.join("; "));
    assert!(ok, "{detail:#?}");
}

fn small_instance(seed: u64) -> Instance {
    let mut rng = RngStream::new(seed, &[0x5eed]);
    let n = rng.gen_range(2..=8);
    let m = rng.gen_range(0..=2.min(n - 1));
    let params = ModelParams {
        model: if rng.gen() { ModelKind::Variable } else { ModelKind::Fixed },
        n,
        o: rng.gen_range(0..=12),
        r: rng.gen_range(0..=3.min(n)),
        c: rng.gen_range(1..=3.min(n)),
        m,
        g: rng.gen_range(1..=n.min(4)),
        seed,
        protect_achieved: rng.gen(),
    };
    if m >= 1 && rng.gen() {
        gen_modification_instance(&params).unwrap()
    } else {
        gen_raw_instance(&params).unwrap()
    }
}

#[test]
fn criterion_6_oracle_agreement() {
    let start = Instant::now();
    let budget = SearchBudget { max_depth: 6, max_beliefs: 200_000 };
    let (mut disagreements, mut bad_plans, mut found, mut exhausted) = (0, 0, 0, 0);
    for seed in 0..1000 {
        let inst = small_instance(seed);
        let fast = one_step_solvable(&inst);
        let brute = exhaustive_one_step(&inst).unwrap();
        if fast != brute.first().copied() {
            disagreements += 1;
        }
        match plan_bfs(&inst, budget).unwrap() {
            SearchOutcome::FoundPlan(plan) => {
                found += 1;
                let valid = validate_plan(&inst, &plan).unwrap().is_valid();
                let shortest = plan.is_empty()
                    || plan_bfs(&inst, SearchBudget { max_depth: plan.len() - 1, ..budget }).unwrap()
                        == SearchOutcome::NoPlanWithinDepth;
                if !valid || !shortest {
                    bad_plans += 1;
                }
            }
            SearchOutcome::NoPlanWithinDepth => {}
            SearchOutcome::BudgetExhausted => exhausted += 1,
        }
    }
    let elapsed = start.elapsed();
    let ok = disagreements == 0 && bad_plans == 0 && elapsed < Duration::from_secs(120);
    report(
        6,
        "oracle agreement",
        ok,
        elapsed,
        &format!("1000 instances: {disagreements} one-step disagreements, {found} plans found, {bad_plans} invalid/non-shortest, {exhausted} budget-exhausted"),
    );
    assert!(ok);
}

/// Whether the outcome could have been a more preferred one.
fn preference_violated(prob: &ModificationProblem, outcome: &ModificationOutcome) -> bool {
    let reusable = validate_plan(&prob.new, &prob.old_plan).unwrap().is_valid();
    let extendable = || match execute(prob.new.operators(), prob.new.initial(), &prob.old_plan).unwrap() {
        Some(after) => !exhaustive_one_step(&prob.new.with_initial(after).unwrap()).unwrap().is_empty(),
        None => false,
    };
    match outcome.kind() {
        OutcomeKind::Reused => !reusable,
        OutcomeKind::ExtendedOneStep => reusable,
        OutcomeKind::Replanned | OutcomeKind::Failed => reusable || extendable(),
    }
}

#[test]
fn criterion_7_modification_pipeline() {
    let start = Instant::now();
    let budget = SearchBudget { max_depth: 6, max_beliefs: 200_000 };
    let mut tallies = [0usize; 4];
    let (mut triples, mut unsound, mut removed_not_reused, mut order_violations) = (0, 0, 0, 0);
    let mut seed = 0u64;
    while triples < 500 {
        seed += 1;
        let old = small_instance(seed);
        let old_plan: Plan = match plan_bfs(&old, budget).unwrap() {
            SearchOutcome::FoundPlan(plan) => plan,
            _ => continue,
        };
        let mut rng = RngStream::new(seed, &[0xde17a]);
        let free: Vec<usize> =
            (0..old.n()).filter(|&p| old.goal().iter().all(|l| l.prop.0 != p)).collect();
        let remove = old.goal().len() >= 2 && (free.is_empty() || rng.gen());
        let new_goal: Vec<Literal> = if remove {
            let drop = rng.gen_range(0..old.goal().len());
            old.goal().iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, &l)| l).collect()
        } else if !free.is_empty() {
            let mut goal = old.goal().to_vec();
            goal.push(Literal::new(free[rng.gen_range(0..free.len())], rng.gen()));
            goal
        } else {
            continue;
        };
        let new = old.with_goal(new_goal).unwrap();
        let prob = ModificationProblem { old, old_plan, new };
        let outcome = modify_plan(&prob, budget).unwrap();
        triples += 1;
        tallies[outcome.kind() as usize] += 1;
        if let Some(plan) = outcome.plan() {
            if !validate_plan(&prob.new, plan).unwrap().is_valid() {
                unsound += 1;
            }
        }
        if remove && outcome.kind() != OutcomeKind::Reused {
            removed_not_reused += 1;
        }
        if preference_violated(&prob, &outcome) {
            order_violations += 1;
        }
    }
    let elapsed = start.elapsed();
    let ok = unsound == 0 && removed_not_reused == 0 && order_violations == 0 && elapsed < Duration::from_secs(120);
    report(
        7,
        "modification pipeline",
        ok,
        elapsed,
        &format!(
            "500 triples: reused {} extended {} replanned {} failed {}; unsound {unsound}, removal-not-reused {removed_not_reused}, order violations {order_violations}",
            tallies[0], tallies[1], tallies[2], tallies[3]
        ),
    );
    assert!(ok);
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(std::iter::once("planmod").chain(args.iter().copied()), &mut out, &mut err);
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));
    (code, out)
}

#[test]
fn criterion_8_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

    let gen = ["gen", "--model", "fixed", "--n", "10", "--o", "20", "--r", "3", "--c", "2", "--m", "1", "--seed", "42"];
    let (a, b) = (path("a.json"), path("b.json"));
    run_cli(&[&gen[..], &["--output", &a]].concat());
    run_cli(&[&gen[..], &["--output", &b]].concat());
    let gen_same = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();

    let sweep = ["sweep", "--n", "10", "--densities", "0,1,4,8,16,32", "--trials", "500", "--seed", "9"];
    let mut csvs = Vec::new();
    for (i, workers) in ["1", "4", "4"].iter().enumerate() {
        let out = path(&format!("curve{i}.csv"));
        run_cli(&[&sweep[..], &["--workers", workers, "--output", &out]].concat());
        csvs.push(std::fs::read(&out).unwrap());
    }
    let sweep_same = csvs[0] == csvs[1] && csvs[1] == csvs[2];
    let parsed = cli::parse_curve_csv(std::str::from_utf8(&csvs[0]).unwrap()).unwrap();

    let elapsed = start.elapsed();
    let ok = gen_same && sweep_same && parsed.len() == 6;
    report(
        8,
        "determinism",
        ok,
        elapsed,
        &format!("gen byte-identical={gen_same}, sweep 1-vs-4 workers and rerun byte-identical={sweep_same}"),
    );
    assert!(ok);
}
