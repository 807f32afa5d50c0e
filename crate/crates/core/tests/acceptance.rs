//! One line per acceptance criterion; exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use iet_lab::catalog;
use iet_lab::experiments::{
    run_experiment, stratified_unit_points, stream_rng, window_height, CampaignReport, Experiment, ExperimentConfig,
};
use iet_lab::iet::{IdocOutcome, Iet};
use iet_lab::induction::{check_facts, matrix_product, return_time_oracle, run_induction};
use iet_lab::skew::{induced_step, SkewState, Window};
use iet_lab::step::{sample_step, BoundedFamily, SampleOptions, StepError};
use iet_lab::ExactScalar;
use rand::Rng;

type Outcome = Result<(bool, String), String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

const CAP: u64 = 10_000_000;

const SIGN: &str = r#"
[iet]
preset = "golden"

[step]
widths = ["1/2", "1/2"]
values = ["1", "-1"]
"#;

fn s(text: &str) -> ExactScalar {
    text.parse().unwrap()
}

fn int(n: i64) -> ExactScalar {
    ExactScalar::from_integer(n)
}

fn campaign(head: &str, section: &str, which: Experiment) -> Result<CampaignReport, String> {
    let text = format!("{head}\n{SIGN}\n{section}");
    let cfg = ExperimentConfig::from_toml(&text).map_err(|e| e.to_string())?;
    run_experiment(&cfg, which).map_err(|e| e.to_string())
}

fn verdict(report: &CampaignReport) -> (bool, String) {
    let detail: Vec<String> = report
        .checks
        .iter()
        .map(|c| format!("{}: {} vs {}", c.name, c.observed, c.threshold))
        .collect();
    (report.passed(), detail.join("; "))
}

fn oracle_equivalence() -> Outcome {
    let mut compared = 0u64;
    for (name, iet) in [("golden", catalog::golden()), ("three", catalog::three_interval())] {
        let ind = run_induction(&iet, 10, CAP).map_err(|e| e.to_string())?;
        for k in 0..ind.depth() {
            for l in k + 1..=ind.depth() {
                let sums = matrix_product(&ind, k, l - k - 1).map_err(|e| e.to_string())?.column_sums();
                for (j, &sum) in sums.iter().enumerate() {
                    let brute = return_time_oracle(&iet, &ind, k, l, j, CAP).map_err(|e| e.to_string())?;
                    if brute != sum {
                        return Ok((false, format!("{name}: k={k} l={l} j={j}: {brute} ≠ {sum}")));
                    }
                    compared += 1;
                }
            }
        }
    }
    Ok((true, format!("{compared} column sums equal")))
}

fn facts_suite() -> Outcome {
    let ind = run_induction(&catalog::golden(), 15, CAP).map_err(|e| e.to_string())?;
    let report = check_facts(&ind).map_err(|e| e.to_string())?;
    let first_row_ones = ind
        .matrices
        .iter()
        .all(|m| (0..ind.piece_count()).all(|j| m.get(0, j) == 1));
    let lag_ok = report.positivity_lag.is_some_and(|r| r <= 2);
    let norms: Vec<u64> = ind.matrices.iter().map(|m| m.norm1()).collect();
    let (early, late) = norms.split_at(norms.len() / 2);
    let d3_bounded = late.iter().max() <= early.iter().max();
    let mut ratios_ok = report.rho1 > 1.0;
    for stage in &ind.stages {
        for piece in &stage.lengths {
            let r = (&stage.length / piece).to_f64();
            ratios_ok &= r > 1.0 && r <= report.rho2;
        }
    }
    let gamma_ok = report.gamma < 0.9;
    let pass = first_row_ones && lag_ok && d3_bounded && ratios_ok && gamma_ok && report.column_sums_exact;
    Ok((
        pass,
        format!(
            "B_k(1,j)=1 {first_row_ones}, lag {:?}, D3 {} (bounded {d3_bounded}), rho1 {:.4}, rho2 {:.4}, gamma {:.4}",
            report.positivity_lag, report.d3, report.rho1, report.rho2, report.gamma
        ),
    ))
}

fn power_saving() -> Outcome {
    let report = campaign(
        "name = \"acceptance-power-saving\"\nseed = 20240601",
        "[power_saving]\ngamma = \"1/2\"\nhorizons = [1000, 10000, 100000]\nsamples = 100",
        Experiment::PowerSaving,
    )?;
    Ok(verdict(&report))
}

fn atkinson() -> Outcome {
    let report = campaign(
        "name = \"acceptance-atkinson\"\nseed = 20240602",
        "[atkinson]\ngamma = \"1/2\"\nepsilon = \"1/10\"\nwindow = \"1/2\"\nhorizon = 100000\nseeds = 20\nmin_fraction = 0.95",
        Experiment::Atkinson,
    )?;
    Ok(verdict(&report))
}

fn f5_census() -> Outcome {
    let report = campaign(
        "name = \"acceptance-f5\"\nseed = 20240603",
        "[f5_census]\nwindow = \"10\"\nbeta = \"1/10\"\nk_max = 17\nm_min = 5\nsamples = 100\nmin_fraction = 0.9",
        Experiment::F5Census,
    )?;
    Ok(verdict(&report))
}

fn nudge_contract() -> Outcome {
    let mut rng = stream_rng(20240606, 0);
    let big_d = int(1);
    let family = |d| BoundedFamily::new(d, big_d.clone()).unwrap();
    let (mut checked, mut seed) = (0, 0u64);
    while checked < 1000 {
        seed += 1;
        let d = rng.gen_range(1..=4usize);
        let f = sample_step(&family(d), seed, &SampleOptions::default()).map_err(|e| e.to_string())?;
        let i = rng.gen_range(0..d);
        // ζ uniform on the dyadic grid strictly inside (−ξ/4, ξ/4)
        let m: i64 = rng.gen_range(-(1 << 20) + 1..(1 << 20));
        let zeta = &(f.xi() / &int(4)) * &ExactScalar::rational(m, 1 << 20).unwrap();
        let g = match f.nudge(i, &zeta) {
            Ok(g) => g,
            Err(StepError::EqualAdjacentValues { .. }) => continue,
            Err(e) => return Ok((false, format!("seed {seed}: {e}"))),
        };
        if !g.mean().is_zero() {
            return Ok((false, format!("seed {seed}: mean {}", g.mean())));
        }
        let value_term = &(&(&zeta.abs() * &int(8)) * &big_d) / &(f.xi() * &int(3));
        let bound = std::cmp::max(zeta.abs(), value_term);
        let dist = f.distance(&g).map_err(|e| e.to_string())?;
        if dist > bound {
            return Ok((false, format!("seed {seed}: distance {dist} > {bound}")));
        }
        checked += 1;
    }
    Ok((true, format!("{checked} nudges exact")))
}

fn shadow_exactness() -> Outcome {
    let report = campaign(
        "name = \"acceptance-shadow\"\nseed = 20240605",
        "[shadow_probe]\ninstances = 50\nscales = [8, 10, 12]\nmax_attempts = 2000",
        Experiment::ShadowProbe,
    )?;
    let table = report.tables.iter().find(|t| t.name == "shadow_probe").ok_or("no summary table")?;
    let col = |c: &str| table.columns.iter().position(|x| x == c).unwrap();
    let (constructed, matched) = table.rows.iter().fold((0u64, 0u64), |(a, b), row| {
        (a + row[col("constructed")].parse::<u64>().unwrap(), b + row[col("matched")].parse::<u64>().unwrap())
    });
    let every_scale = table.rows.iter().all(|row| row[col("constructed")] == "50");
    let fraction = matched as f64 / constructed.max(1) as f64;
    Ok((
        report.passed() && every_scale && constructed > 0 && matched == constructed,
        format!("{matched}/{constructed} matched, fraction {fraction:.2}"),
    ))
}

fn friend_trend() -> Outcome {
    let report = campaign(
        "name = \"acceptance-friends\"\nseed = 20240604",
        "[friend_census]\nwindows = [\"2\", \"5\", \"10\", \"20\"]\nbeta = \"1/10\"\nk_max = 14\nm_min = 1\nsamples = 200\ntolerance = 0.05",
        Experiment::FriendCensus,
    )?;
    let table = report.tables.iter().find(|t| t.name == "friend_census").ok_or("no summary table")?;
    let fractions: Vec<&str> = table.rows.iter().map(|r| r[3].as_str()).collect();
    let (pass, detail) = verdict(&report);
    Ok((pass, format!("fractions {fractions:?}; {detail}")))
}

fn idoc_detection() -> Outcome {
    let quarter = Iet::rotation(&s("1/4")).map_err(|e| e.to_string())?;
    let q = quarter.check_idoc(10).map_err(|e| e.to_string())?;
    let g = catalog::golden().check_idoc(10_000).map_err(|e| e.to_string())?;
    let pass = matches!(q, IdocOutcome::FailsAt { n: 4, .. }) && g == IdocOutcome::PassedToDepth(10_000);
    Ok((pass, format!("rotation 1/4: {q:?}; golden: {g:?}")))
}

fn induced_uniformity() -> Outcome {
    let (iet, b) = (catalog::golden(), s("2"));
    let f = iet_lab::step::StepFunction::new(vec![s("1/2"), s("1/2")], vec![s("1"), s("-1")])
        .map_err(|e| e.to_string())?;
    let window = Window::new(b.clone()).map_err(|e| e.to_string())?;
    let (n, side) = (10_000usize, 10usize);
    let mut counts = vec![0u64; side * side];
    let mut rng = stream_rng(20240607, 0);
    let scale = int(side as i64);
    for (x, y) in stratified_unit_points(n, 30, &mut rng) {
        let start = SkewState::new(x, window_height(&y, &b)).map_err(|e| e.to_string())?;
        let (image, _) = induced_step(&iet, &f, &window, &start, 1_000_000).map_err(|e| e.to_string())?;
        let col: usize = (&image.x * &scale).floor().try_into().map_err(|_| "column")?;
        let unit_t = &(&image.t + &b) / &(&b * &int(2));
        let row: usize = usize::try_from((&unit_t * &scale).floor()).map_err(|_| "row")?.min(side - 1);
        counts[row * side + col] += 1;
    }
    let p = 1.0 / (side * side) as f64;
    let (mean, sd) = (n as f64 * p, (n as f64 * p * (1.0 - p)).sqrt());
    let inside = counts.iter().filter(|&&c| (c as f64 - mean).abs() <= 3.0 * sd).count();
    Ok((
        inside * 100 >= 95 * counts.len(),
        format!("{inside}/{} boxes within 3σ of {mean:.0}", counts.len()),
    ))
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, name: "oracle equivalence", limit: Some(Duration::from_secs(60)), run: oracle_equivalence },
    Criterion { id: 2, name: "facts suite", limit: Some(Duration::from_secs(60)), run: facts_suite },
    Criterion { id: 3, name: "power saving", limit: Some(Duration::from_secs(120)), run: power_saving },
    Criterion { id: 4, name: "quantitative atkinson", limit: Some(Duration::from_secs(120)), run: atkinson },
    Criterion { id: 5, name: "F5 census", limit: Some(Duration::from_secs(600)), run: f5_census },
    Criterion { id: 6, name: "nudge contract", limit: Some(Duration::from_secs(10)), run: nudge_contract },
    Criterion { id: 7, name: "shadow-orbit exactness", limit: Some(Duration::from_secs(60)), run: shadow_exactness },
    Criterion { id: 8, name: "friend census trend", limit: Some(Duration::from_secs(900)), run: friend_trend },
    Criterion { id: 9, name: "IDOC detection", limit: None, run: idoc_detection },
    Criterion { id: 10, name: "induced-map uniformity", limit: None, run: induced_uniformity },
];

fn main() -> ExitCode {
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in CRITERIA.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_time = c.limit.is_none_or(|l| elapsed < l);
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let limit = c.limit.map_or(String::new(), |l| format!(" < {} s", l.as_secs()));
        println!(
            "{} {:>2} {}: {} [{:.1} s{limit}]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            elapsed.as_secs_f64()
        );
        failed += usize::from(!pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
