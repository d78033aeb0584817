use proptest::prelude::*;
use ratelessmv::analysis::{lt_latency_bounds_f, mds_latency_mean, rep_latency_mean};
use ratelessmv::delaysim::{DelayParams, LtThreshold, MonteCarlo};
use ratelessmv::ltcode::estimate_overhead_with;
use ratelessmv::par::{seeded_rng, Execution};
use ratelessmv::strategies::{Strategy, StrategySpec};

fn params(p: usize) -> DelayParams {
    DelayParams::new(0.2, 0.005, p).unwrap()
}

fn mean_and_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn order_statistic_spacings_are_exponential() {
    // X_{l+1:p} - X_{l:p} ~ Exp((p - l) mu)
    let p = params(8);
    let mut rng = seeded_rng(31);
    let mut spacings = vec![Vec::new(); p.p - 1];
    for _ in 0..40_000 {
        let mut x = p.sample_delays(&mut rng);
        x.sort_by(f64::total_cmp);
        for (l, s) in spacings.iter_mut().enumerate() {
            s.push(x[l + 1] - x[l]);
        }
    }
    for (l, s) in spacings.iter().enumerate() {
        let (mean, sem) = mean_and_sem(s);
        let want = 1.0 / ((p.p - l - 1) as f64 * p.mu);
        assert!(
            (mean - want).abs() <= 3.0 * sem,
            "l={}: {mean} vs {want}",
            l + 1
        );
    }
}

#[test]
fn closed_form_means_match_simulation() {
    let p = params(12);
    let m = 3_000;
    for (strategy, want) in [
        (Strategy::Mds { k: 4 }, mds_latency_mean(m, &p, 4).unwrap()),
        (
            Strategy::Mds { k: 10 },
            mds_latency_mean(m, &p, 10).unwrap(),
        ),
        (
            Strategy::Replication { r: 3 },
            rep_latency_mean(m, &p, 3).unwrap(),
        ),
        (Strategy::uncoded(), rep_latency_mean(m, &p, 1).unwrap()),
    ] {
        let report = MonteCarlo::new(m, p, 4_000, 2)
            .run(&StrategySpec::new(strategy, 12))
            .unwrap();
        let (mean, sem) = mean_and_sem(&report.latencies());
        assert!(
            (mean - want).abs() <= 3.0 * sem,
            "{strategy:?}: {mean} vs {want} (sem {sem})"
        );
    }
}

#[test]
fn lt_mean_latency_within_bounds() {
    let p = params(10);
    let lt = Strategy::Lt {
        alpha: 2.0,
        c: 0.03,
        delta: 0.5,
    };
    let report = MonteCarlo::new(1_000, p, 300, 4)
        .run(&StrategySpec::new(lt, 10))
        .unwrap();
    let m_d = report.summary.m_d_mean.unwrap();
    let (lo, hi) = lt_latency_bounds_f(m_d, &p);
    let mean = report.summary.latency_mean;
    assert!(lo <= mean && mean <= hi, "{lo} <= {mean} <= {hi}");

    // every trial stops exactly at its own threshold
    for o in &report.outcomes {
        assert_eq!(Some(o.total), o.m_d);
    }
}

#[test]
fn fixed_threshold_uses_requested_overhead() {
    let p = params(5);
    let lt = Strategy::Lt {
        alpha: 1.5,
        c: 0.03,
        delta: 0.5,
    };
    let report = MonteCarlo::new(2_000, p, 50, 9)
        .with_threshold(LtThreshold::Fixed { epsilon: 0.1 })
        .run(&StrategySpec::new(lt, 5))
        .unwrap();
    assert!(report
        .outcomes
        .iter()
        .all(|o| o.total == 2_200 && o.decode_retries == 0));
}

#[test]
fn execution_mode_does_not_change_results() {
    let p = params(6);
    for strategy in [
        Strategy::Lt {
            alpha: 2.0,
            c: 0.05,
            delta: 0.5,
        },
        Strategy::Mds { k: 3 },
        Strategy::Replication { r: 2 },
    ] {
        let spec = StrategySpec::new(strategy, 6);
        let run = |e| {
            MonteCarlo::new(600, p, 24, 77)
                .with_execution(e)
                .run(&spec)
                .unwrap()
                .outcomes
        };
        assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
    }
    let seq = estimate_overhead_with(400, 0.05, 0.5, 2.0, 12, 3, Execution::Sequential).unwrap();
    let par = estimate_overhead_with(400, 0.05, 0.5, 2.0, 12, 3, Execution::Parallel).unwrap();
    assert_eq!(seq.trials, par.trials);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn monte_carlo_is_a_function_of_its_seed(seed in any::<u64>(), k in 1usize..=6) {
        let p = params(6);
        let spec = StrategySpec::new(Strategy::Mds { k }, 6);
        let a = MonteCarlo::new(120, p, 8, seed).run(&spec).unwrap();
        let b = MonteCarlo::new(120, p, 8, seed).run(&spec).unwrap();
        prop_assert_eq!(a.outcomes, b.outcomes);
    }
}
