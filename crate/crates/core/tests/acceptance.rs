//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints exactly one PASS/FAIL line. The process exits non-zero on any
//! failure other than a documented known one.

mod common;

use std::io::Cursor;
use std::time::{Duration, Instant};

use common::{run_local_job, WorkerPlan};
use rand::seq::SliceRandom;
use rand::Rng;
use ratelessmv::analysis::{
    exp_order_stat_mean, lt_latency_bounds_f, mds_comp_tail_bound, mds_latency_mean,
    rep_comp_tail_bound, rep_latency_mean,
};
use ratelessmv::delaysim::{DelayParams, MonteCarlo, MonteCarloReport};
use ratelessmv::ltcode::{
    build_degree_distribution, decode_full, encode_matrix, estimate_overhead, DecodeOutcome,
    EncodingGraph,
};
use ratelessmv::par::{seeded_rng, trial_rng};
use ratelessmv::runtime::wire::{read_frame, write_frame};
use ratelessmv::runtime::{encode_and_stage, ResultCollector, WireMessage};
use ratelessmv::strategies::{Strategy, StrategySpec};
use ratelessmv::Matrix;

const M: usize = 10_000;
const P: usize = 10;
const MU: f64 = 0.2;
const TAU: f64 = 0.005;
const MDS_K: usize = 5;
const REP_R: usize = 2;
const LT_ALPHA: f64 = 2.0;
const LT_C: f64 = 0.03;
const LT_DELTA: f64 = 0.5;
const SEED: u64 = 20_240_601;

const MEAN_REL_TOL: f64 = 0.02;
const MDS_MEAN_REF: f64 = 13.2282;
const REP_MEAN_REF: f64 = 15.7083;
const SE_ALLOWANCE: f64 = 3.0;

/// Failure detail, plus a reason when the failure is known and documented.
type Check = Result<String, (String, Option<&'static str>)>;
type Criterion = (&'static str, fn() -> Check);

/// The stated MDS computation tail bound is not a valid lower bound for the
/// model it describes. It is still checked and reported as FAIL.
const MDS_TAIL_KNOWN: &str =
    "the MDS computation tail bound exceeds the exact Erlang(p-k, mu) probability at every C0 tested";

fn params() -> DelayParams {
    DelayParams::new(MU, TAU, P).unwrap()
}

fn lt() -> Strategy {
    Strategy::Lt {
        alpha: LT_ALPHA,
        c: LT_C,
        delta: LT_DELTA,
    }
}

fn simulate(m: usize, strategy: Strategy, trials: usize, seed: u64) -> MonteCarloReport {
    MonteCarlo::new(m, params(), trials, seed)
        .run(&StrategySpec::new(strategy, P))
        .unwrap()
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err((detail, None))
    }
}

fn closed_form_agreement() -> Check {
    let start = Instant::now();
    let mds = simulate(M, Strategy::Mds { k: MDS_K }, 500, SEED)
        .summary
        .latency_mean;
    let rep = simulate(M, Strategy::Replication { r: REP_R }, 500, SEED)
        .summary
        .latency_mean;
    let elapsed = start.elapsed();

    let mds_ref = mds_latency_mean(M, &params(), MDS_K).unwrap();
    let rep_ref = rep_latency_mean(M, &params(), REP_R).unwrap();
    let refs_ok = (mds_ref - MDS_MEAN_REF).abs() < 1e-4 && (rep_ref - REP_MEAN_REF).abs() < 1e-4;
    let mds_err = (mds - MDS_MEAN_REF).abs() / MDS_MEAN_REF;
    let rep_err = (rep - REP_MEAN_REF).abs() / REP_MEAN_REF;
    ensure(
        refs_ok && mds_err <= MEAN_REL_TOL && rep_err <= MEAN_REL_TOL && elapsed < Duration::from_secs(10),
        format!(
            "E[T_mds] {mds:.4} vs {mds_ref:.4} ({:.2}%), E[T_rep] {rep:.4} vs {rep_ref:.4} ({:.2}%), {elapsed:.2?}",
            100.0 * mds_err,
            100.0 * rep_err
        ),
    )
}

fn lt_sandwich_at(m: usize) -> Check {
    let report = simulate(m, lt(), 500, SEED);
    let mean = report.summary.latency_mean;
    let m_d = report
        .summary
        .m_d_mean
        .ok_or(("no decode threshold recorded".to_string(), None))?;
    let (lo, hi) = lt_latency_bounds_f(m_d, &params());
    ensure(
        lo <= mean && mean <= hi,
        format!("m={m}: {lo:.4} <= E[T_lt] {mean:.4} <= {hi:.4} (mean m_d {m_d:.1})"),
    )
}

fn lt_sandwich() -> Check {
    let start = Instant::now();
    let full = lt_sandwich_at(M);
    let elapsed = start.elapsed();
    let small = lt_sandwich_at(2_000);
    let detail = format!(
        "{}; {}; {elapsed:.2?}",
        full.as_ref().unwrap_or_else(|e| &e.0),
        small.as_ref().unwrap_or_else(|e| &e.0)
    );
    ensure(
        full.is_ok() && small.is_ok() && elapsed < Duration::from_secs(60),
        detail,
    )
}

fn strategy_ordering() -> Check {
    let lt = simulate(M, lt(), 500, SEED);
    let mds = simulate(M, Strategy::Mds { k: MDS_K }, 500, SEED);
    let rep = simulate(M, Strategy::Replication { r: REP_R }, 500, SEED);
    let (l, d, r) = (&lt.summary, &mds.summary, &rep.summary);

    let mut sorted = lt.latencies();
    sorted.sort_by(f64::total_cmp);
    let t90 = sorted[(0.9 * sorted.len() as f64).ceil() as usize - 1];
    let (tail_lt, tail_mds) = (lt.latency_tail(t90), mds.latency_tail(t90));

    let latency_ok = l.latency_mean < d.latency_mean && d.latency_mean < r.latency_mean;
    let comp_ok =
        l.computations_mean < d.computations_mean && l.computations_mean < r.computations_mean;
    ensure(
        latency_ok && comp_ok && tail_lt <= tail_mds,
        format!(
            "E[T] lt {:.3} < mds {:.3} < rep {:.3}; E[C] lt {:.0}, mds {:.0}, rep {:.0}; Pr(T>{t90:.3}) lt {tail_lt:.3} <= mds {tail_mds:.3}",
            l.latency_mean, d.latency_mean, r.latency_mean, l.computations_mean, d.computations_mean, r.computations_mean
        ),
    )
}

fn decoder_correctness() -> Check {
    let (m, n) = (1_000, 4);
    let dist = build_degree_distribution(m, LT_C, LT_DELTA).unwrap();
    let mut complete = 0;
    let mut mismatches = 0;
    for t in 0..100u64 {
        let mut rng = trial_rng(SEED, t);
        let a = Matrix::random_integer(m, n, -10, 10, &mut rng);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10..=10) as f64).collect();
        let graph = EncodingGraph::generate(m, 2 * m, &dist, SEED ^ t).unwrap();
        let be = encode_matrix(&a, &graph).unwrap().matvec(&x).unwrap();
        let mut order: Vec<usize> = (0..2 * m).collect();
        order.shuffle(&mut rng);
        let outcome = decode_full(order.into_iter().map(|j| (j, be[j])), &graph).unwrap();
        if let DecodeOutcome::Complete { values, used } = outcome {
            complete += usize::from(used <= 2 * m);
            mismatches += usize::from(values != a.matvec(&x).unwrap());
        }
    }
    ensure(
        complete >= 99 && mismatches == 0,
        format!("{complete}/100 complete within 2m, {mismatches} inexact"),
    )
}

fn avalanche() -> Check {
    let report = estimate_overhead(M, LT_C, LT_DELTA, LT_ALPHA, 10, SEED).unwrap();
    let mut worst_early = 0.0f64;
    let mut ok = true;
    for trial in &report.trials {
        let Some(used) = trial.used else {
            ok = false;
            continue;
        };
        let traj = &trial.trajectory;
        let early = traj[(0.8 * used as f64).floor() as usize - 1] as f64 / M as f64;
        worst_early = worst_early.max(early);
        ok &= early <= 0.10 && traj[used - 1] == M && traj.windows(2).all(|w| w[0] <= w[1]);
    }
    ensure(
        ok,
        format!(
            "{} trials complete, worst decoded fraction at 0.8 M' {:.2}%",
            report.trials.len() - report.failures(),
            100.0 * worst_early
        ),
    )
}

/// `Pr(Gamma(n, rate) <= x)`: the exact probability that `n` spacings of
/// exponential order statistics sum to at most `x`.
fn gamma_cdf(n: usize, rate: f64, x: f64) -> f64 {
    let lx = rate * x;
    let mut term = (-lx).exp();
    let mut below = 0.0;
    for i in 0..n {
        below += term;
        term *= lx / (i + 1) as f64;
    }
    1.0 - below
}

fn tail_bounds() -> Check {
    let trials = 2_000;
    let mds = simulate(M, Strategy::Mds { k: MDS_K }, trials, SEED);
    let rep = simulate(M, Strategy::Replication { r: REP_R }, trials, SEED);
    let (mut mds_ok, mut rep_ok) = (true, true);
    let mut parts = Vec::new();
    for c0 in [500.0, 1000.0, 2000.0] {
        let se = |b: f64| (b * (1.0 - b) / trials as f64).sqrt();
        let mds_bound = mds_comp_tail_bound(M, &params(), MDS_K, c0).unwrap();
        let mds_emp = mds.computation_at_least((M * P / MDS_K) as f64 - c0);
        let rep_bound = rep_comp_tail_bound(M, &params(), REP_R, c0).unwrap();
        let rep_emp = rep.computation_at_least((REP_R * M) as f64 - c0);
        mds_ok &= mds_emp >= mds_bound - SE_ALLOWANCE * se(mds_bound);
        rep_ok &= rep_emp >= rep_bound - SE_ALLOWANCE * se(rep_bound);
        // exact MDS tail ignoring per-worker caps and partial-task rounding
        let mds_exact = gamma_cdf(P - MDS_K, MU, TAU * c0);
        parts.push(format!(
            "C0={c0}: mds {mds_emp:.4}>={mds_bound:.4} (exact {mds_exact:.4}), rep {rep_emp:.4}>={rep_bound:.4}"
        ));
    }
    let anchor = mds_comp_tail_bound(M, &params(), MDS_K, 1000.0).unwrap();
    let anchor_ok = (anchor - 0.0390).abs() < 5e-4;
    let detail = parts.join("; ");
    match (mds_ok, rep_ok && anchor_ok) {
        (true, true) => Ok(detail),
        (false, true) => Err((detail, Some(MDS_TAIL_KNOWN))),
        _ => Err((detail, None)),
    }
}

fn order_statistics() -> Check {
    let samples = 100_000;
    let p = params();
    let mut rng = seeded_rng(SEED);
    let mut by_k = [
        Vec::with_capacity(samples),
        Vec::with_capacity(samples),
        Vec::with_capacity(samples),
    ];
    let ks = [1, 5, 10];
    for _ in 0..samples {
        let mut x = p.sample_delays(&mut rng);
        x.sort_by(f64::total_cmp);
        for (slot, &k) in by_k.iter_mut().zip(&ks) {
            slot.push(x[k - 1]);
        }
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (xs, &k) in by_k.iter().zip(&ks) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        let want = exp_order_stat_mean(P, k, MU).unwrap();
        ok &= (mean - want).abs() <= SE_ALLOWANCE * se;
        parts.push(format!("k={k}: {mean:.4} vs {want:.4} (se {se:.4})"));
    }
    ensure(ok, parts.join("; "))
}

fn end_to_end() -> Check {
    let start = Instant::now();
    let (m, n) = (500, 200);
    let mut rng = seeded_rng(SEED);
    let a = Matrix::random_integer(m, n, -10, 10, &mut rng);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10..=10) as f64).collect();
    let want = a.matvec(&x).unwrap();

    let dir = tempfile::tempdir().map_err(fail)?;
    let manifest =
        encode_and_stage(&a, &StrategySpec::new(lt(), 4), SEED, dir.path()).map_err(fail)?;
    let assigned = manifest.workers[3].count;
    let plans = vec![
        WorkerPlan::per_task(2),
        WorkerPlan::per_task(2),
        WorkerPlan::per_task(2),
        WorkerPlan::per_task(20),
    ];
    let report = run_local_job(dir.path(), &x, plans).0.map_err(fail)?;
    let straggler = report.per_worker[3];
    let lt_ok =
        report.b == want && report.results_used <= 2 * m && straggler >= 1 && straggler < assigned;

    let dir = tempfile::tempdir().map_err(fail)?;
    encode_and_stage(
        &a,
        &StrategySpec::new(Strategy::Mds { k: 2 }, 3),
        SEED,
        dir.path(),
    )
    .map_err(fail)?;
    let mut plans: Vec<WorkerPlan> = (0..3).map(|_| WorkerPlan::per_task(1)).collect();
    plans[0].fail_after = Some(10);
    let mds = run_local_job(dir.path(), &x, plans).0;
    let mds_ok = match &mds {
        Ok(r) => {
            r.b.iter()
                .zip(&want)
                .all(|(u, v)| (u - v).abs() <= 1e-9 * v.abs().max(1.0))
        }
        Err(_) => false,
    };
    let elapsed = start.elapsed();
    ensure(
        lt_ok && mds_ok && elapsed < Duration::from_secs(30),
        format!(
            "lt exact {}, used {}, straggler {straggler}/{assigned}; mds with killed worker {}; {elapsed:.2?}",
            report.b == want,
            report.results_used,
            if mds_ok { "exact" } else { "failed" }
        ),
    )
}

fn fail(e: impl ToString) -> (String, Option<&'static str>) {
    (e.to_string(), None)
}

fn random_message<R: Rng>(rng: &mut R) -> WireMessage {
    let any_f64 = |rng: &mut R| f64::from_bits(rng.random());
    match rng.random_range(0..6) {
        0 => WireMessage::Setup {
            worker_id: rng.random(),
            m: rng.random(),
            n: rng.random(),
        },
        1 => {
            let len = rng.random_range(0..64);
            WireMessage::Vector((0..len).map(|_| any_f64(rng)).collect())
        }
        2 => WireMessage::Result {
            encoded_index: rng.random(),
            value: any_f64(rng),
        },
        3 => WireMessage::Progress(rng.random()),
        4 => WireMessage::Done,
        _ => {
            let len = rng.random_range(0..40);
            WireMessage::Error((0..len).map(|_| rng.random::<char>()).collect())
        }
    }
}

fn protocol() -> Check {
    let mut rng = seeded_rng(SEED);
    let mut stream = Vec::new();
    let mut sent = Vec::new();
    for _ in 0..10_000 {
        let msg = random_message(&mut rng);
        write_frame(&mut stream, &msg).map_err(fail)?;
        sent.push(msg.encode());
    }
    let mut cursor = Cursor::new(stream);
    let mut exact = 0;
    while let Some(msg) = read_frame(&mut cursor).map_err(fail)? {
        exact += usize::from(sent.get(exact) == Some(&msg.encode()));
    }

    let mut rng = seeded_rng(SEED ^ 1);
    let a = Matrix::random_integer(60, 3, -10, 10, &mut rng);
    let x = [1.0, -2.0, 3.0];
    let dir = tempfile::tempdir().map_err(fail)?;
    let manifest =
        encode_and_stage(&a, &StrategySpec::new(lt(), 2), 5, dir.path()).map_err(fail)?;
    let graph = manifest.lt_graph().map_err(fail)?;
    let be = encode_matrix(&a, &graph).unwrap().matvec(&x).unwrap();
    let mut collector = ResultCollector::for_manifest(&manifest).map_err(fail)?;
    let per = manifest.workers[0].count;
    let mut next = 0;
    while !collector.is_complete() && next < be.len() {
        collector.ingest(next / per, next, be[next]).map_err(fail)?;
        next += 1;
    }
    let before = collector.finish().map_err(fail)?;
    let used = collector.results_used();
    let late_ok = next < be.len()
        && collector.ingest(1, next, f64::NAN).map_err(fail)?
        && collector.finish().ok() == Some(before.clone())
        && collector.results_used() == used
        && before == a.matvec(&x).unwrap();
    ensure(
        exact == 10_000 && late_ok,
        format!("{exact}/10000 frames bit-exact, late result ignored: {late_ok}"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("closed-form latency agreement", closed_form_agreement),
        ("LT latency sandwich", lt_sandwich),
        ("strategy ordering", strategy_ordering),
        ("decoder correctness", decoder_correctness),
        ("avalanche", avalanche),
        ("computation tail bounds", tail_bounds),
        ("order statistics", order_statistics),
        ("end-to-end runtime", end_to_end),
        ("wire protocol", protocol),
    ];
    let (mut failed, mut expected) = (0, 0);
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err((detail, known)) => match known {
                Some(why) => {
                    expected += 1;
                    println!("FAIL {} {name}: {detail} [known: {why}]", i + 1);
                }
                None => {
                    failed += 1;
                    println!("FAIL {} {name}: {detail}", i + 1);
                }
            },
        }
    }
    println!(
        "acceptance: {} passed, {} failed ({expected} known unattainable)",
        criteria.len() - failed - expected,
        failed + expected
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
