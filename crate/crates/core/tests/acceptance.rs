//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use ransaac::aggregation::{
    fit_from_cloud, predefined_source_points, AggregationMethod, ModelKind,
};
use ransaac::benchmark::{
    generate_scenario, reference_scenario, run_experiment, run_iteration_trace, Execution,
    Experiment, ExperimentReport, TraceConfig,
};
use ransaac::geometry::dlt_fit;
use ransaac::local_opt::{local_optimize, LoConfig};
use ransaac::rng::{SampleStream, STREAM_LOCAL_OPT, STREAM_SCENARIO};
use ransaac::robust::{chi2_threshold, required_iterations, ChiSquareDof};
use ransaac::{estimate, Homography, Match, Method, MethodConfig, Point2};

use AggregationMethod::{WeightedGeometricMedian as Wgmed, WeightedMean as Wmean};

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn grid(
    scenarios: Vec<ransaac::benchmark::Scenario>,
    methods: Vec<MethodConfig>,
    trials: usize,
) -> Vec<ExperimentReport> {
    let exp = Experiment {
        scenarios,
        methods,
        trials,
        master_seed: SEED,
        random_gt: None,
    };
    run_experiment(&exp, Execution::Parallel).expect("experiment")
}

fn cell<'a>(reports: &'a [ExperimentReport], scenario: usize, label: &str) -> &'a ExperimentReport {
    reports
        .iter()
        .find(|r| r.scenario_id == scenario && r.method == label)
        .unwrap_or_else(|| panic!("no report for {label}"))
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

fn table1_cell() -> Outcome {
    let start = Instant::now();
    let methods = [
        Method::LoRansaac(Wgmed),
        Method::LoRansaac(Wmean),
        Method::Ransaac(Wmean),
    ]
    .map(|m| MethodConfig::new(m, 5.0, 1000));
    let r = grid(
        vec![reference_scenario(1000, 0.5, 5.0, SEED)],
        methods.to_vec(),
        100,
    );
    let elapsed = start.elapsed();
    let (lw, lm, pm) = (
        cell(&r, 0, "lo-ransaac-wgmed"),
        cell(&r, 0, "lo-ransaac-wmean"),
        cell(&r, 0, "ransaac-wmean"),
    );
    outcome(
        within(lw.mean_error, 0.4, 1.0)
            && within(lm.mean_error, 0.5, 1.2)
            && within(pm.mean_error, 3.0, 5.5)
            && elapsed <= Duration::from_secs(600),
        format!(
            "LO-wgmed {:.3} in [0.4,1.0], LO-wmean {:.3} in [0.5,1.2], wmean {:.3} in [3.0,5.5], failures {}/{}/{}, {:.0} s",
            lw.mean_error, lm.mean_error, pm.mean_error, lw.failures, lm.failures, pm.failures,
            elapsed.as_secs_f64()
        ),
    )
}

fn table1_trend() -> Outcome {
    let trials = 50;
    let rows = [0.0, 0.05, 0.2, 0.5];
    let sigmas = [0.5, 2.0, 5.0];
    let scenarios: Vec<_> = sigmas
        .iter()
        .flat_map(|&s| {
            rows.iter()
                .map(move |&r| reference_scenario(1000, r, s, SEED))
        })
        .collect();
    let methods = [
        Method::Ransaac(Wmean),
        Method::Ransaac(Wgmed),
        Method::LoRansaac(Wmean),
        Method::LoRansaac(Wgmed),
    ]
    .map(|m| MethodConfig::new(m, 1.0, 1000));
    let r = grid(scenarios.clone(), methods.to_vec(), trials);
    let mut bad = Vec::new();
    let mut worst_margin = f64::INFINITY;
    for (sid, s) in scenarios.iter().enumerate() {
        let lo = ["lo-ransaac-wmean", "lo-ransaac-wgmed"].map(|m| cell(&r, sid, m).mean_error);
        let plain = ["ransaac-wmean", "ransaac-wgmed"].map(|m| cell(&r, sid, m).mean_error);
        let (max_lo, min_plain) = (lo[0].max(lo[1]), plain[0].min(plain[1]));
        worst_margin = worst_margin.min(min_plain - max_lo);
        if !(max_lo <= min_plain) {
            bad.push(format!(
                "sigma {} ratio {}: {max_lo:.3} > {min_plain:.3}",
                s.sigma, s.outlier_ratio
            ));
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{} cells, {trials} trials: every LO mean <= every non-LO mean (smallest gap {worst_margin:.3} px){}",
            scenarios.len(),
            if bad.is_empty() { String::new() } else { format!("; violated at {}", bad.join(", ")) }
        ),
    )
}

fn table3() -> Outcome {
    let start = Instant::now();
    let methods = [Method::LoRansaac(Wgmed), Method::RansacM, Method::Oracle]
        .map(|m| MethodConfig::new(m, 5.0, 10_000));
    let r = grid(
        vec![reference_scenario(1000, 0.9, 5.0, SEED)],
        methods.to_vec(),
        50,
    );
    let elapsed = start.elapsed();
    let (lw, rm, or) = (
        cell(&r, 0, "lo-ransaac-wgmed"),
        cell(&r, 0, "ransac+m"),
        cell(&r, 0, "oracle"),
    );
    outcome(
        lw.mean_error <= 2.0 && rm.mean_error >= 10.0 && within(or.mean_error, 0.5, 1.1) && elapsed <= Duration::from_secs(1800),
        format!(
            "LO-wgmed {:.3} <= 2.0, RANSAC+M {:.3} >= 10, oracle {:.3} in [0.5,1.1], failures {}/{}/{}, {:.0} s",
            lw.mean_error, rm.mean_error, or.mean_error, lw.failures, rm.failures, or.failures,
            elapsed.as_secs_f64()
        ),
    )
}

fn crossing() -> Outcome {
    let cfg = TraceConfig {
        scenario: reference_scenario(100, 0.5, 5.0, SEED),
        iterations: 20_000,
        trials: 200,
        master_seed: SEED,
        p: 5.0,
    };
    let t = run_iteration_trace(&cfg, Execution::Parallel).expect("trace");
    let (a, b) = (
        t.curve("ransaac-wmean").unwrap(),
        t.curve("ransac").unwrap(),
    );
    let first_below = t
        .checkpoints
        .iter()
        .zip(a.iter().zip(b))
        .find(|(_, (x, y))| x < y)
        .map(|(i, _)| *i);
    let stays = t.crossing("ransaac-wmean", "ransac", 20_000);
    let (la, lb) = (a[a.len() - 1], b[b.len() - 1]);
    outcome(
        stays.is_some_and(|c| c < 500) && la < lb,
        format!(
            "200 trials: first below at {}, below for good from {}, at 20000 {la:.3} vs {lb:.3}",
            first_below.map_or("never".into(), |c| c.to_string()),
            stays.map_or("never".into(), |c| c.to_string()),
        ),
    )
}

fn adaptive() -> Outcome {
    let bound = required_iterations(0.99, 0.5, 4, usize::MAX);
    let fixed = MethodConfig::new(Method::LoRansaac(Wgmed), 5.0, 1000);
    let adaptive = fixed.clone().with_adaptive(1.0);
    let r = grid(
        vec![reference_scenario(1000, 0.5, 5.0, SEED)],
        vec![fixed.clone(), adaptive.clone()],
        100,
    );
    let (f, a) = (cell(&r, 0, &fixed.label()), cell(&r, 0, &adaptive.label()));
    let ratio = a.mean_error / f.mean_error;
    outcome(
        bound == 72 && ratio <= 1.25,
        format!(
            "bound {bound}; LO-wgmed adaptive {:.3} px after {:.0} iterations vs fixed {:.3} px, ratio {ratio:.3} <= 1.25",
            a.mean_error,
            a.mean_iterations_used(),
            f.mean_error
        ),
    )
}

fn timing() -> Outcome {
    let s = reference_scenario(1000, 1.0 / 3.0, 2.0, SEED);
    let data =
        generate_scenario(&s, &mut SampleStream::new(SEED, STREAM_SCENARIO)).expect("scenario");
    let configs = [
        Method::Ransac,
        Method::Ransaac(Wmean),
        Method::Ransaac(Wgmed),
    ]
    .map(|m| MethodConfig::new(m, 2.0, 100_000));
    let mut best = [f64::INFINITY; 3];
    let mut clouds = Vec::new();
    // Wall time on a shared core drifts by 15% between runs; the minimum over
    // rotated interleaved rounds tracks the cost of the code itself.
    for round in 0..10 {
        for k in 0..3 {
            let k = (k + round) % 3;
            let cfg = &configs[k];
            let t = Instant::now();
            let est = estimate(&data.matches, cfg, SEED, &s.extents_src, None).expect("estimate");
            best[k] = best[k].min(t.elapsed().as_secs_f64());
            if let (0, Some(c)) = (round, est.cloud) {
                clouds.push((cfg.agg_config().unwrap(), c));
            }
        }
    }
    let basis = predefined_source_points(&s.extents_src, ModelKind::Homography);
    let post = clouds
        .iter()
        .map(|(agg, cloud)| {
            let t = Instant::now();
            fit_from_cloud(&basis, cloud, agg).expect("aggregate");
            t.elapsed().as_secs_f64()
        })
        .fold(0.0, f64::max);
    let (rw, rg) = (best[1] / best[0], best[2] / best[0]);
    outcome(
        rw <= 1.05 && rg <= 1.05 && post <= 1.0,
        format!(
            "RANSAC {:.3} s, RANSAAC wmean {:.3} s (x{rw:.3}), wgmed {:.3} s (x{rg:.3}), limit x1.05; post-pass {post:.4} s <= 1 s",
            best[0], best[1], best[2]
        ),
    )
}

fn chi2() -> Outcome {
    let a = chi2_threshold(1.0, 0.95, ChiSquareDof::Two);
    let b = chi2_threshold(1.0, 0.99, ChiSquareDof::Four);
    let c = chi2_threshold(1.0, 0.95, ChiSquareDof::Four);
    outcome(
        (a - 5.99).abs() <= 0.01 && (b - 13.2767).abs() <= 0.001 && (c - 9.4877).abs() <= 0.001,
        format!("{a:.4} ~ 5.99, {b:.4} ~ 13.2767, {c:.4} ~ 9.4877"),
    )
}

fn invariants() -> Outcome {
    let mut failed = Vec::new();
    for (name, suite) in common::invariants::ALL {
        if let Err(e) = suite(1000) {
            failed.push(format!("{name}: {e}"));
        }
    }
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} suites x 1000 cases", common::invariants::ALL.len())
        } else {
            failed.join("; ")
        },
    )
}

fn lo_bookkeeping() -> Outcome {
    let h = Homography::from_row_major(&[1.02, 0.05, 12.0, -0.03, 0.97, -7.0, 2e-5, -1e-5, 1.0])
        .unwrap();
    let exact: Vec<Match> = (0..60)
        .map(|i| {
            let p = Point2::new((i * 37 % 97) as f64 * 10.0, (i * 53 % 89) as f64 * 8.0);
            Match::new(p, h.project(p).unwrap())
        })
        .collect();
    let all: Vec<usize> = (0..exact.len()).collect();
    let cfg = LoConfig::default();
    let full = cfg.reps * (cfg.ls_iters + 2);
    let run = |m: &[Match], idx: &[usize]| {
        local_optimize(
            m,
            idx,
            10.0,
            &cfg,
            &mut SampleStream::new(SEED, STREAM_LOCAL_OPT),
        )
    };

    let general = run(&exact, &all).models.len();

    // Replay the inner samples to count those whose fit must be skipped.
    let mut mixed = exact.clone();
    for m in mixed.iter_mut().take(50) {
        let p = Point2::new(m.src.x, 0.5 * m.src.x + 3.0);
        *m = Match::new(p, h.project(p).unwrap());
    }
    let mut stream = SampleStream::new(SEED, STREAM_LOCAL_OPT);
    let mut skipped = 0;
    for _ in 0..cfg.reps {
        let picks =
            ransaac::robust::draw_minimal_sample(&mut stream, mixed.len(), cfg.s_is).unwrap();
        let subset: Vec<Match> = picks.iter().map(|&i| mixed[i]).collect();
        if dlt_fit(&subset).is_err() {
            skipped += 1;
        }
    }
    let mixed_count = run(&mixed, &all).models.len();

    let collinear: Vec<Match> = (0..40)
        .map(|i| {
            let p = Point2::new(i as f64 * 7.0, i as f64 * 3.0 + 1.0);
            Match::new(p, h.project(p).unwrap())
        })
        .collect();
    let none = run(&collinear, &(0..40).collect::<Vec<_>>()).models.len();
    let few = run(&exact, &all[..2 * cfg.s_is - 1]);

    let expect_mixed = full - skipped * (cfg.ls_iters + 2);
    outcome(
        general == full && mixed_count == expect_mixed && none == 0 && few.models.is_empty() && few.max_score == 0,
        format!(
            "general position {general} = {full}; partly collinear {mixed_count} = {full} - {skipped} skipped x {}; collinear {none} = 0; K < 2 s_is gives {} models",
            cfg.ls_iters + 2,
            few.models.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "preset 1 cell, 1000 inliers, 50% outliers, sigma 5",
            table1_cell,
        ),
        (
            "LO variants beat plain aggregation over the preset 1 grid",
            table1_trend,
        ),
        ("9000 outliers, 10000 iterations", table3),
        ("per-iteration crossing of RANSAAC below RANSAC", crossing),
        ("adaptive termination", adaptive),
        ("aggregation time overhead", timing),
        ("chi-square thresholds", chi2),
        ("invariant suites", invariants),
        ("local optimization bookkeeping", lo_bookkeeping),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!(
            "{} criterion {}: {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
