//! `reproduce`: named sample → analyze → report pipelines with a verdict summary.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::analyze::{cmd_analyze, AnalysisReport, HeightSummary};
use super::config::ExperimentConfig;
use super::sample::{cmd_sample, snapshot_paths, Manifest};
use super::snapshot::Snapshot;
use crate::error::{Error, Result};
use crate::interfaces::{extract_potts_interface, InterfaceSet};
use crate::lattice::{BoundaryCondition, DomainKind, ModelParams, BLUE};
use crate::par;
use crate::potts_sampler::{Algorithm, ChainPlan, Schedule};
use crate::rates::{estimate_point_to_plane_pair, fit_xi, h_star, height_concentration_statistic, RateOptions, RateSeries};
use crate::stats::{neg_log, weighted_least_squares};

pub const EXPERIMENTS: [&str; 4] = ["main-theorem-height", "dobrushin-tails", "rate-table", "cylinder-insensitivity"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Seconds-long runs on small boxes; checks the plumbing, not the physics.
    Quick,
    /// The sizes and sample counts of the acceptance criteria.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReproduceOptions {
    pub seed: u64,
    pub scale: Scale,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub label: String,
    pub dir: PathBuf,
    pub n_samples: usize,
    pub tau_energy: f64,
    pub elapsed_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub experiment: String,
    pub scale: Scale,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<VerdictCheck>,
    pub runs: Vec<RunRecord>,
    pub tables: Vec<String>,
    pub warnings: Vec<String>,
    pub elapsed_secs: f64,
}

impl Verdict {
    fn new(experiment: &str, opts: ReproduceOptions) -> Verdict {
        Verdict {
            experiment: experiment.to_string(),
            scale: opts.scale,
            seed: opts.seed,
            passed: false,
            checks: Vec::new(),
            runs: Vec::new(),
            tables: Vec::new(),
            warnings: Vec::new(),
            elapsed_secs: 0.0,
        }
    }

    fn check(&mut self, name: &str, value: f64, threshold: f64, passed: bool, detail: String) {
        self.checks.push(VerdictCheck {
            name: name.to_string(),
            value,
            threshold,
            passed,
            detail,
        });
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

/// Distinct seed per run of one experiment.
fn run_seed(seed: u64, k: u64) -> u64 {
    seed ^ (k + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Sampling {
    algorithm: Algorithm,
    burnin: u64,
    interval: u64,
    n_samples: usize,
    chains: usize,
}

fn config(q: u8, beta: f64, kind: DomainKind, n: usize, m: usize, bc: BoundaryCondition, s: &Sampling, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.model.q = q;
    cfg.model.beta = beta;
    cfg.domain.kind = kind;
    cfg.domain.n = n;
    cfg.domain.m = m;
    cfg.bc = bc;
    cfg.sampler.algorithm = s.algorithm;
    cfg.sampler.burnin = s.burnin;
    cfg.sampler.interval = s.interval;
    cfg.sampler.n_samples = s.n_samples;
    cfg.sampler.chains = s.chains;
    cfg.sampler.seed = seed;
    cfg
}

fn run(v: &mut Verdict, label: &str, cfg: &ExperimentConfig, root: &Path) -> Result<(Manifest, AnalysisReport, PathBuf)> {
    let dir = root.join(label);
    let snaps = dir.join("snapshots");
    let manifest = cmd_sample(cfg, &snaps)?;
    let paths = snapshot_paths(&snaps)?;
    let report = cmd_analyze(&paths, &cfg.analyses, &dir.join("analysis"))?;
    fs::write(dir.join("config.json"), cfg.to_json())?;
    v.runs.push(RunRecord {
        label: label.to_string(),
        dir: dir.clone(),
        n_samples: manifest.files.len(),
        tau_energy: manifest.tau_energy,
        elapsed_secs: manifest.elapsed_secs,
    });
    Ok((manifest, report, snaps))
}

fn blue<'a>(r: &'a AnalysisReport) -> Result<&'a HeightSummary> {
    r.height("blue").ok_or_else(|| Error::Param("analysis produced no blue heights".into()))
}

fn rate_plan(n_samples: usize, seed: u64) -> RateOptions {
    RateOptions {
        plan: ChainPlan {
            algorithm: Algorithm::HeatBath,
            schedule: Schedule { burnin: 200, interval: 1 },
            n_samples,
            chains: 4,
            seed,
        },
        margin: None,
    }
}

fn write_rate_table(path: &Path, xi: &RateSeries, tilde: &RateSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["h", "xi_hat", "xi_stderr", "xi_hits", "xi_tilde_hat", "xi_tilde_stderr", "xi_tilde_hits"])?;
    for p in &xi.points {
        let t = tilde.point(p.h);
        w.serialize((
            p.h,
            p.rate,
            p.rate_stderr,
            p.hits,
            t.map_or(f64::NAN, |t| t.rate),
            t.map_or(f64::NAN, |t| t.rate_stderr),
            t.map_or(0, |t| t.hits),
        ))?;
    }
    w.flush()?;
    Ok(())
}

fn main_theorem_height(v: &mut Verdict, opts: ReproduceOptions, root: &Path) -> Result<()> {
    let (q, beta) = (2, 1.0);
    let eps = 0.5;
    let (ns, m, s, rate_n, rate_h, rate_samples): (&[usize], usize, Sampling, usize, u32, usize) = match opts.scale {
        Scale::Full => (
            &[8, 16, 32, 64],
            16,
            Sampling { algorithm: Algorithm::Alternating, burnin: 400, interval: 4, n_samples: 400, chains: 4 },
            16,
            3,
            40_000,
        ),
        Scale::Quick => (
            &[4, 8],
            4,
            Sampling { algorithm: Algorithm::Alternating, burnin: 20, interval: 2, n_samples: 20, chains: 2 },
            8,
            2,
            400,
        ),
    };
    let params = ModelParams::new(q, beta)?;
    let (xi, tilde) = estimate_point_to_plane_pair(&params, rate_n, rate_h, &rate_plan(rate_samples, run_seed(opts.seed, 99)))?;
    write_rate_table(&root.join("rates_for_h_star.csv"), &xi, &tilde)?;
    v.tables.push("rates_for_h_star.csv".into());
    let slope = fit_xi(&xi).ok().map(|f| f.slope);

    let mut w = csv::Writer::from_path(root.join("main_theorem_height.csv"))?;
    w.write_record(["n", "x", "median", "y", "yerr", "h_star", "outside_fraction", "outside_stderr"])?;
    let mut medians = Vec::new();
    for (k, &n) in ns.iter().enumerate() {
        let cfg = config(q, beta, DomainKind::FloorBox, n, m, BoundaryCondition::Floor, &s, run_seed(opts.seed, k as u64));
        let (_, report, snaps) = run(v, &format!("n{n}"), &cfg, root)?;
        let b = blue(&report)?;
        medians.push((n, b.median));
        let hs = slope.and_then(|x| h_star(n, x).ok());
        let outside = match hs {
            Some(h) => {
                let paths = snapshot_paths(&snaps)?;
                let interfaces: Vec<InterfaceSet> = par::map_indexed(paths.len(), |i| -> Result<InterfaceSet> {
                    let snap = Snapshot::read(&paths[i])?;
                    let sigma = snap.spin_config(&snap.header.system()?)?;
                    extract_potts_interface(&sigma, BLUE)
                })
                .into_iter()
                .collect::<Result<_>>()?;
                Some(height_concentration_statistic(&interfaces, h, eps)?.outside_fraction)
            }
            None => None,
        };
        w.serialize((
            n,
            (n as f64).ln(),
            b.median,
            b.mean.mean,
            b.mean.stderr,
            hs.map_or(-1, |h| h as i64),
            outside.map_or(f64::NAN, |o| o.mean),
            outside.map_or(f64::NAN, |o| o.stderr),
        ))?;
    }
    w.flush()?;
    v.tables.push("main_theorem_height.csv".into());
    if slope.is_none() {
        v.warnings.push("ξ̂ fit unusable; h* and the outside fraction are not reported".into());
    }
    let monotone = medians.windows(2).all(|p| p[1].1 >= p[0].1);
    v.check(
        "median_nondecreasing_in_n",
        f64::from(u8::from(monotone)),
        1.0,
        monotone,
        format!("medians {medians:?}"),
    );
    let gain = medians.last().expect("n list").1 - medians[0].1;
    v.check("median_gain", gain, 1.0, gain >= 1.0, format!("median(n = {}) − median(n = {})", ns[ns.len() - 1], ns[0]));
    Ok(())
}

fn dobrushin_tails(v: &mut Verdict, opts: ReproduceOptions, root: &Path) -> Result<()> {
    let (q, beta) = (2, 1.2);
    let (n, m, s) = match opts.scale {
        Scale::Full => (12, 6, Sampling { algorithm: Algorithm::Alternating, burnin: 400, interval: 4, n_samples: 4000, chains: 4 }),
        Scale::Quick => (6, 3, Sampling { algorithm: Algorithm::Alternating, burnin: 20, interval: 2, n_samples: 40, chains: 2 }),
    };
    let mut cfg = config(q, beta, DomainKind::SlabBox, n, m, BoundaryCondition::Split { h: 0 }, &s, run_seed(opts.seed, 0));
    cfg.analyses.full = true;
    let (_, report, _) = run(v, "split0", &cfg, root)?;
    let full = report.height("full").ok_or_else(|| Error::Param("no full-interface heights".into()))?;
    let tail: Vec<_> = full.bulk_tail.iter().filter(|(k, _)| (1..=3).contains(k)).collect();
    let mut w = csv::Writer::from_path(root.join("dobrushin_tails.csv"))?;
    w.write_record(["statistic", "k", "p_hat", "stderr"])?;
    for (stat, t) in [("bulk_column", &full.bulk_tail), ("max", &full.max_tail)] {
        for (k, e) in t {
            w.serialize((stat, k, e.mean, e.stderr))?;
        }
    }
    w.flush()?;
    v.tables.push("dobrushin_tails.csv".into());

    let ps: Vec<f64> = tail.iter().map(|(_, e)| e.mean).collect();
    let decreasing = ps.len() == 3 && ps.windows(2).all(|p| p[1] < p[0]) && ps[2] > 0.0;
    v.check("tail_strictly_decreasing", f64::from(u8::from(decreasing)), 1.0, decreasing, format!("P(hgt ≥ k), k = 1..3: {ps:?}"));
    let pts: Vec<(f64, f64, f64)> = tail
        .iter()
        .filter(|(_, e)| e.mean > 0.0)
        .map(|(k, e)| {
            let (y, se) = neg_log(e.mean, e.stderr);
            (*k as f64, y, se)
        })
        .collect();
    let fit = weighted_least_squares(
        &pts.iter().map(|p| p.0).collect::<Vec<_>>(),
        &pts.iter().map(|p| p.1).collect::<Vec<_>>(),
        &pts.iter().map(|p| p.2).collect::<Vec<_>>(),
    );
    match fit.filter(|_| pts.len() == 3) {
        Some(f) => v.check(
            "tail_decay_rate",
            f.slope,
            beta - 2.0,
            f.slope >= beta - 2.0,
            format!("−log P slope {:.4} ± {:.4}, intercept {:.4}", f.slope, f.slope_se, f.intercept),
        ),
        None => v.check("tail_decay_rate", f64::NAN, beta - 2.0, false, "fewer than three positive tail points".into()),
    }
    Ok(())
}

fn rate_table(v: &mut Verdict, opts: ReproduceOptions, root: &Path) -> Result<()> {
    let (q, beta) = (2, 1.2);
    let (n, h_max, samples) = match opts.scale {
        Scale::Full => (16, 3, 300_000),
        Scale::Quick => (8, 2, 400),
    };
    let params = ModelParams::new(q, beta)?;
    let start = Instant::now();
    let plan = rate_plan(samples, run_seed(opts.seed, 0));
    let (xi, tilde) = estimate_point_to_plane_pair(&params, n, h_max, &plan)?;
    v.runs.push(RunRecord {
        label: "red_all".into(),
        dir: root.to_path_buf(),
        n_samples: samples,
        tau_energy: f64::NAN,
        elapsed_secs: start.elapsed().as_secs_f64(),
    });
    xi.write_csv(File::create(root.join("xi.csv"))?)?;
    tilde.write_csv(File::create(root.join("xi_tilde.csv"))?)?;
    write_rate_table(&root.join("rate_table.csv"), &xi, &tilde)?;
    let fits = (fit_xi(&xi).ok(), fit_xi(&tilde).ok());
    fs::write(root.join("rate_fit.json"), serde_json::to_string_pretty(&fits)?)?;
    v.tables.extend(["xi.csv", "xi_tilde.csv", "rate_table.csv", "rate_fit.json"].map(String::from));

    let get = |s: &RateSeries, h| s.rate(h).unwrap_or((f64::NAN, f64::NAN));
    let (x1, s1) = get(&xi, 1);
    let (x2, s2) = get(&xi, 2);
    let (t1, st1) = get(&tilde, 1);
    let nondecreasing = x2 >= x1;
    v.check("xi_nondecreasing", x2 - x1, 0.0, nondecreasing, format!("ξ̂₁ = {x1:.4} ± {s1:.4}, ξ̂₂ = {x2:.4} ± {s2:.4}"));
    let defect = (x2 - x1) - t1;
    let se = (s1 * s1 + s2 * s2 + st1 * st1).sqrt();
    v.check(
        "xi_increment_vs_tilde",
        defect.abs(),
        3.0 * se,
        defect.abs() <= 3.0 * se,
        format!("(ξ̂₂ − ξ̂₁) − ξ̃̂₁ = {defect:.4}, ξ̃̂₁ = {t1:.4} ± {st1:.4}"),
    );
    let (lo, hi) = (4.0 * beta - 4.0, 4.0 * beta + 4.0);
    v.check("xi1_window", x1, hi, (lo..=hi).contains(&x1), format!("ξ̂₁ = {x1:.4}, window [{lo:.2}, {hi:.2}]"));
    Ok(())
}

fn cylinder_insensitivity(v: &mut Verdict, opts: ReproduceOptions, root: &Path) -> Result<()> {
    let (q, beta) = (2, 1.2);
    let (n, ms, s) = match opts.scale {
        Scale::Full => (8, [8, 16], Sampling { algorithm: Algorithm::Alternating, burnin: 400, interval: 4, n_samples: 2000, chains: 4 }),
        Scale::Quick => (4, [4, 8], Sampling { algorithm: Algorithm::Alternating, burnin: 20, interval: 2, n_samples: 40, chains: 2 }),
    };
    let mut hists = Vec::new();
    for (k, &m) in ms.iter().enumerate() {
        let cfg = config(q, beta, DomainKind::FloorBox, n, m, BoundaryCondition::Floor, &s, run_seed(opts.seed, k as u64));
        let (_, report, _) = run(v, &format!("m{m}"), &cfg, root)?;
        hists.push(blue(&report)?.histogram.clone());
    }
    let heights: std::collections::BTreeSet<i32> = hists.iter().flatten().map(|(h, _)| *h).collect();
    let lookup = |hist: &[(i32, crate::stats::McEstimate)], h: i32| hist.iter().find(|(x, _)| *x == h).map_or((0.0, 0.0), |(_, e)| (e.mean, e.stderr));
    let mut w = csv::Writer::from_path(root.join("cylinder_hist.csv"))?;
    w.write_record(["height", "fraction_a", "stderr_a", "fraction_b", "stderr_b"])?;
    let (mut tv, mut var) = (0.0, 0.0);
    for &h in &heights {
        let (a, sa) = lookup(&hists[0], h);
        let (b, sb) = lookup(&hists[1], h);
        tv += 0.5 * (a - b).abs();
        var += 0.25 * (sa * sa + sb * sb);
        w.serialize((h, a, sa, b, sb))?;
    }
    w.flush()?;
    v.tables.push("cylinder_hist.csv".into());
    let se = var.sqrt();
    v.check(
        "height_histogram_tv",
        tv,
        3.0 * se,
        tv <= 3.0 * se,
        format!("TV between m = {} and m = {} is {tv:.5}, combined stderr {se:.5}", ms[0], ms[1]),
    );
    Ok(())
}

/// Soft wall-clock budgets per experiment, in seconds.
fn budget(id: &str) -> f64 {
    match id {
        "main-theorem-height" => 4.0 * 3600.0,
        "dobrushin-tails" => 1800.0,
        "rate-table" => 3600.0,
        _ => 1200.0,
    }
}

/// Runs experiment `id` into `out/<id>` and writes `summary.json` there.
pub fn cmd_reproduce(id: &str, opts: ReproduceOptions, out: &Path) -> Result<Verdict> {
    if !EXPERIMENTS.contains(&id) {
        return Err(Error::Param(format!("unknown experiment `{id}`; available: {}", EXPERIMENTS.join(", "))));
    }
    let root = out.join(id);
    if root.exists() {
        return Err(Error::Param(format!("{} already exists; remove it or choose another --out", root.display())));
    }
    fs::create_dir_all(&root)?;
    let start = Instant::now();
    let mut v = Verdict::new(id, opts);
    match id {
        "main-theorem-height" => main_theorem_height(&mut v, opts, &root)?,
        "dobrushin-tails" => dobrushin_tails(&mut v, opts, &root)?,
        "rate-table" => rate_table(&mut v, opts, &root)?,
        _ => cylinder_insensitivity(&mut v, opts, &root)?,
    }
    v.elapsed_secs = start.elapsed().as_secs_f64();
    if v.elapsed_secs > budget(id) {
        v.warnings.push(format!("took {:.0} s, over the {:.0} s budget", v.elapsed_secs, budget(id)));
    }
    v.passed = v.checks.iter().all(|c| c.passed);
    fs::write(root.join("summary.json"), serde_json::to_string_pretty(&v)?)?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(seed: u64) -> ReproduceOptions {
        ReproduceOptions { seed, scale: Scale::Quick }
    }

    #[test]
    fn unknown_experiment_lists_all() {
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_reproduce("nope", quick(1), dir.path()).unwrap_err();
        assert!(err.to_string().contains("rate-table"));
    }

    #[test]
    fn quick_cylinder_run_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let va = cmd_reproduce("cylinder-insensitivity", quick(5), a.path()).unwrap();
        let vb = par::with_workers(1, || cmd_reproduce("cylinder-insensitivity", quick(5), b.path()).unwrap());
        assert_eq!(va.checks, vb.checks);
        let table = |d: &Path| fs::read(d.join("cylinder-insensitivity").join("cylinder_hist.csv")).unwrap();
        assert_eq!(table(a.path()), table(b.path()));
        assert!(a.path().join("cylinder-insensitivity/summary.json").exists());
        assert!(cmd_reproduce("cylinder-insensitivity", quick(5), a.path()).is_err());
    }

    #[test]
    fn quick_rate_table_schema() {
        let dir = tempfile::tempdir().unwrap();
        let v = cmd_reproduce("rate-table", quick(2), dir.path()).unwrap();
        assert_eq!(v.checks.len(), 3);
        let text = fs::read_to_string(dir.path().join("rate-table/xi.csv")).unwrap();
        assert!(text.starts_with("h,p_hat,stderr,n_eff,rate_hat,rate_stderr"));
    }
}
