//! `analyze`: per-sample and aggregate CSV reports over a set of snapshots.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::AnalysisSection;
use super::sample::edge_rng;
use super::snapshot::{Snapshot, SnapshotHeader};
use crate::error::{Error, Result};
use crate::interfaces::{extract_all, extract_full_interface, extract_potts_interface, verify_ordering, InterfaceSet};
use crate::lattice::{BoundaryCondition, Domain, BLUE};
use crate::oracle::checks::{run_suite, OracleConfig};
use crate::par;
use crate::rates::{default_margin, fit_xi, point_to_plane_counts, rate_series_from_counts, PointToPlaneCounts, RateSeries, XiFit};
use crate::rc_coupling::couple_edges_from_spins;
use crate::stats::McEstimate;
use crate::walls::{wall_area_statistics, wall_sample, WallSample, WallSummary};

/// Chain id used for edges drawn at analysis time.
const ANALYSIS_CHAIN: u64 = 0xFFFF_FFFF;

#[derive(Clone, Debug, Serialize)]
pub struct HeightSummary {
    pub interface: String,
    pub n: usize,
    /// Median of all per-column maximal heights, pooled over samples.
    pub median: f64,
    /// Per-sample mean column height.
    pub mean: McEstimate,
    /// Per-sample fraction of columns at each height.
    pub histogram: Vec<(i32, McEstimate)>,
    /// `P(overline-hgt_x ≥ k)` averaged over bulk columns.
    pub bulk_tail: Vec<(i32, McEstimate)>,
    /// `P(max_x overline-hgt_x ≥ k)`.
    pub max_tail: Vec<(i32, McEstimate)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderingSummary {
    pub checked: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    pub xi: RateSeries,
    pub xi_tilde: RateSeries,
    pub fit_xi: Option<XiFit>,
    pub fit_xi_tilde: Option<XiFit>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub n_samples: usize,
    pub header: SnapshotHeader,
    pub heights: Vec<HeightSummary>,
    pub ordering: Option<OrderingSummary>,
    pub walls: Option<WallSummary>,
    pub rates: Option<RateReport>,
    pub oracle: Vec<(String, bool)>,
    pub files: Vec<String>,
}

impl AnalysisReport {
    pub fn height(&self, interface: &str) -> Option<&HeightSummary> {
        self.heights.iter().find(|h| h.interface == interface)
    }
}

#[derive(Default)]
struct PerSample {
    sweep: u64,
    energy: u64,
    blue: Option<Vec<Option<i32>>>,
    full: Option<Vec<Option<i32>>>,
    full_size: Option<usize>,
    ordering_ok: Option<bool>,
    wall: Option<WallSample>,
    counts: Option<PointToPlaneCounts>,
}

fn analyze_one(id: usize, path: &Path, a: &AnalysisSection) -> Result<PerSample> {
    let snap = Snapshot::read(path)?;
    let h = snap.header;
    let sys = h.system()?;
    let params = h.params()?;
    let sigma = snap.spin_config(&sys)?;
    let two_class = h.bc != BoundaryCondition::RedAll;
    let mut out = PerSample {
        sweep: h.sweep,
        energy: sigma.energy(),
        ..Default::default()
    };
    let blue = if two_class && (a.heights || a.walls || a.ordering_audit) {
        Some(extract_potts_interface(&sigma, BLUE)?)
    } else {
        None
    };
    if a.full || a.walls || a.ordering_audit {
        let omega = match snap.edge_config(&sys)? {
            Some(w) => w,
            None => couple_edges_from_spins(&sigma, &params, &mut edge_rng(h.seed, ANALYSIS_CHAIN, id as u64)),
        };
        let full = if a.ordering_audit {
            let all = extract_all(&sigma, &omega)?;
            out.ordering_ok = Some(verify_ordering(&all.top, &all.red, &all.blue, &all.bot)?);
            all.full
        } else {
            extract_full_interface(&omega)?
        };
        if a.walls {
            let b = blue.as_ref().expect("blue interface extracted for walls");
            out.wall = Some(wall_sample(id, &full, b, a.wall_level)?);
        }
        out.full_size = Some(full.len());
        if a.full {
            out.full = Some(full.height_maps().0);
        }
    }
    if a.heights {
        out.blue = blue.as_ref().map(|b: &InterfaceSet| b.height_maps().0);
    }
    if a.rates {
        let n = sys.domain().n();
        out.counts = Some(point_to_plane_counts(&sigma, a.rate_h_max, default_margin(n)));
    }
    Ok(out)
}

fn median(mut xs: Vec<i32>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_unstable();
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid] as f64
    } else {
        (xs[mid - 1] + xs[mid]) as f64 / 2.0
    }
}

fn height_summary(interface: &str, d: &Domain, maps: &[&Vec<Option<i32>>]) -> HeightSummary {
    let n = d.n();
    let bulk: Vec<usize> = (0..n * n)
        .filter(|&c| {
            let (i, j) = d.column_cell(c);
            d.lateral_distance(i, j) > (n / 4) as i32
        })
        .collect();
    let pooled: Vec<i32> = maps.iter().flat_map(|m| m.iter().flatten().copied()).collect();
    let lo = pooled.iter().copied().min().unwrap_or(0);
    let hi = pooled.iter().copied().max().unwrap_or(0);
    let series = |f: &dyn Fn(&Vec<Option<i32>>) -> f64| McEstimate::from_series(&maps.iter().map(|m| f(m)).collect::<Vec<_>>());
    let mean = series(&|m| {
        let xs: Vec<i32> = m.iter().flatten().copied().collect();
        xs.iter().sum::<i32>() as f64 / xs.len().max(1) as f64
    });
    let histogram = (lo..=hi)
        .map(|h| (h, series(&|m| m.iter().filter(|&&x| x == Some(h)).count() as f64 / m.len() as f64)))
        .collect();
    let k_hi = hi.max(3);
    let bulk_tail = (1..=k_hi)
        .map(|k| {
            let frac = |m: &Vec<Option<i32>>| bulk.iter().filter(|&&c| m[c].is_some_and(|x| x >= k)).count() as f64 / bulk.len().max(1) as f64;
            (k, series(&frac))
        })
        .collect();
    let max_tail = (1..=k_hi)
        .map(|k| (k, series(&|m| f64::from(u8::from(m.iter().flatten().any(|&x| x >= k))))))
        .collect();
    HeightSummary {
        interface: interface.to_string(),
        n,
        median: median(pooled),
        mean,
        histogram,
        bulk_tail,
        max_tail,
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn write_height_csvs(out: &Path, d: &Domain, per: &[PerSample], summaries: &[HeightSummary]) -> Result<Vec<String>> {
    let mut w = csv_writer(&out.join("heights.csv"))?;
    w.write_record(["sample_id", "i", "j", "interface", "height"])?;
    for (id, s) in per.iter().enumerate() {
        for (name, map) in [("blue", &s.blue), ("full", &s.full)] {
            if let Some(map) = map {
                for (c, h) in map.iter().enumerate() {
                    let (i, j) = d.column_cell(c);
                    w.write_record([id.to_string(), i.to_string(), j.to_string(), name.to_string(), opt(*h)])?;
                }
            }
        }
    }
    w.flush()?;

    let mut w = csv_writer(&out.join("heights_summary.csv"))?;
    w.write_record(["interface", "n", "x", "median", "y", "yerr", "n_samples"])?;
    for s in summaries {
        w.serialize((&s.interface, s.n, (s.n as f64).ln(), s.median, s.mean.mean, s.mean.stderr, s.mean.n_samples))?;
    }
    w.flush()?;

    let mut w = csv_writer(&out.join("heights_hist.csv"))?;
    w.write_record(["interface", "height", "fraction", "stderr"])?;
    for s in summaries {
        for (h, e) in &s.histogram {
            w.serialize((&s.interface, h, e.mean, e.stderr))?;
        }
    }
    w.flush()?;

    let mut w = csv_writer(&out.join("heights_tail.csv"))?;
    w.write_record(["interface", "statistic", "k", "p_hat", "stderr"])?;
    for s in summaries {
        for (stat, tail) in [("bulk_column", &s.bulk_tail), ("max", &s.max_tail)] {
            for (k, e) in tail {
                w.serialize((&s.interface, stat, k, e.mean, e.stderr))?;
            }
        }
    }
    w.flush()?;
    Ok(["heights.csv", "heights_summary.csv", "heights_hist.csv", "heights_tail.csv"].map(String::from).to_vec())
}

/// Reads every snapshot, checks they share one ensemble, runs the selected
/// analyses and writes the CSV and JSON reports into `out`.
pub fn cmd_analyze(paths: &[PathBuf], a: &AnalysisSection, out: &Path) -> Result<AnalysisReport> {
    let mut paths = paths.to_vec();
    paths.sort();
    let first = paths.first().ok_or_else(|| Error::Param("no snapshots to analyze".into()))?;
    let header = Snapshot::read(first)?.header;
    for p in &paths[1..] {
        let h = Snapshot::read(p)?.header;
        if !h.same_ensemble(&header) {
            return Err(Error::Param(format!(
                "mixed-parameter inputs: {} has {:?}, {} has {:?}",
                first.display(),
                header,
                p.display(),
                h
            )));
        }
    }
    let two_class = header.bc != BoundaryCondition::RedAll;
    if !two_class && (a.full || a.walls || a.ordering_audit) {
        return Err(Error::Param("full, walls and ordering analyses need a two-class bc".into()));
    }
    if a.rates && two_class {
        return Err(Error::Param("rate analysis needs red_all snapshots".into()));
    }
    let system = header.system()?;
    let d = system.domain();
    let n = d.n();
    fs::create_dir_all(out)?;

    let per: Vec<PerSample> = par::map_indexed(paths.len(), |i| analyze_one(i, &paths[i], a))
        .into_iter()
        .collect::<Result<_>>()?;

    let mut files = vec!["samples.csv".to_string()];
    let mut w = csv_writer(&out.join("samples.csv"))?;
    let mut cols = vec!["sample_id", "file", "sweep", "energy"];
    if a.heights && two_class {
        cols.extend(["blue_mean_height", "blue_max_height"]);
    }
    if a.full || a.walls || a.ordering_audit {
        cols.push("full_size");
    }
    if a.ordering_audit {
        cols.push("ordering_ok");
    }
    w.write_record(&cols)?;
    for (id, (s, p)) in per.iter().zip(&paths).enumerate() {
        let mut row = vec![
            id.to_string(),
            p.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned()),
            s.sweep.to_string(),
            s.energy.to_string(),
        ];
        if a.heights && two_class {
            let hs: Vec<i32> = s.blue.iter().flatten().flatten().copied().collect();
            let mean = hs.iter().sum::<i32>() as f64 / hs.len().max(1) as f64;
            row.push(mean.to_string());
            row.push(opt(hs.iter().max()));
        }
        if a.full || a.walls || a.ordering_audit {
            row.push(opt(s.full_size));
        }
        if a.ordering_audit {
            row.push(opt(s.ordering_ok));
        }
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut heights = Vec::new();
    if a.heights && two_class {
        let maps: Vec<&Vec<Option<i32>>> = per.iter().filter_map(|s| s.blue.as_ref()).collect();
        heights.push(height_summary("blue", d, &maps));
    }
    if a.full {
        let maps: Vec<&Vec<Option<i32>>> = per.iter().filter_map(|s| s.full.as_ref()).collect();
        heights.push(height_summary("full", d, &maps));
    }
    if !heights.is_empty() {
        files.extend(write_height_csvs(out, d, &per, &heights)?);
    }

    let ordering = a.ordering_audit.then(|| OrderingSummary {
        checked: per.len(),
        failures: per.iter().filter(|s| s.ordering_ok == Some(false)).count(),
    });

    let walls = if a.walls {
        let rows: Vec<WallSample> = per.iter().filter_map(|s| s.wall.clone()).collect();
        let mut w = csv_writer(&out.join("walls.csv"))?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        let summary = wall_area_statistics(&rows, n);
        fs::write(out.join("walls_summary.json"), serde_json::to_string_pretty(&summary)?)?;
        files.extend(["walls.csv".to_string(), "walls_summary.json".to_string()]);
        Some(summary)
    } else {
        None
    };

    let rates = if a.rates {
        let counts: Vec<PointToPlaneCounts> = per.iter().filter_map(|s| s.counts.clone()).collect();
        let (xi, xi_tilde) = rate_series_from_counts(&counts, &header.params()?, n, a.rate_h_max)?;
        xi.write_csv(File::create(out.join("xi.csv"))?)?;
        xi_tilde.write_csv(File::create(out.join("xi_tilde.csv"))?)?;
        let report = RateReport {
            fit_xi: fit_xi(&xi).ok(),
            fit_xi_tilde: fit_xi(&xi_tilde).ok(),
            xi,
            xi_tilde,
        };
        fs::write(out.join("rates.json"), serde_json::to_string_pretty(&report)?)?;
        files.extend(["xi.csv", "xi_tilde.csv", "rates.json"].map(String::from));
        Some(report)
    } else {
        None
    };

    let mut oracle = Vec::new();
    for suite in &a.oracle {
        let report = run_suite(suite, &OracleConfig::default())?;
        let name = format!("oracle_{suite}.json");
        fs::write(out.join(&name), report.to_json())?;
        oracle.push((suite.clone(), report.passed()));
        files.push(name);
    }

    files.push("analysis.json".to_string());
    let report = AnalysisReport {
        n_samples: per.len(),
        header,
        heights,
        ordering,
        walls,
        rates,
        oracle,
        files,
    };
    fs::write(out.join("analysis.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::sample::{cmd_sample, snapshot_paths};
    use crate::experiments::ExperimentConfig;
    use crate::lattice::{DomainKind, ModelParams, System};
    use crate::potts_sampler::SpinConfig;

    fn write_flat(dir: &Path, count: usize, beta: f64) -> Vec<PathBuf> {
        let sys = System::build(DomainKind::SlabBox, 4, 2, BoundaryCondition::Split { h: 0 }).unwrap();
        let p = ModelParams::new(2, beta).unwrap();
        (0..count)
            .map(|i| {
                let path = dir.join(format!("flat_{i}.pfs"));
                Snapshot::capture(&SpinConfig::flat(sys.clone(), 0), None, &p, 3, i as u64).write(&path).unwrap();
                path
            })
            .collect()
    }

    #[test]
    fn flat_snapshots_give_zero_heights() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_flat(dir.path(), 3, 1.0);
        let a = AnalysisSection {
            ordering_audit: true,
            ..Default::default()
        };
        let out = dir.path().join("report");
        let r = cmd_analyze(&paths, &a, &out).unwrap();
        let text = fs::read_to_string(out.join("heights.csv")).unwrap();
        assert!(text.lines().skip(1).all(|l| l.ends_with(",0")));
        assert_eq!(text.lines().count(), 1 + 3 * 16);
        assert_eq!(r.height("blue").unwrap().median, 0.0);
        let samples = fs::read_to_string(out.join("samples.csv")).unwrap();
        assert!(samples.lines().next().unwrap().ends_with("ordering_ok"));
        assert_eq!(r.ordering.unwrap().checked, 3);
    }

    #[test]
    fn mixed_inputs_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut paths = write_flat(dir.path(), 1, 1.0);
        let other = tempfile::tempdir().unwrap();
        paths.extend(write_flat(other.path(), 1, 1.5));
        let err = cmd_analyze(&paths, &AnalysisSection::default(), &dir.path().join("r")).unwrap_err();
        assert!(err.to_string().contains("mixed-parameter"));
    }

    #[test]
    fn rate_schema_over_red_all_run() {
        let cfg = ExperimentConfig::from_json(
            r#"{"domain": {"n": 8, "m": 8}, "bc": {"variant": "red_all"},
                "sampler": {"burnin": 5, "interval": 1, "n_samples": 6, "chains": 2},
                "analyses": {"heights": false, "rates": true, "rate_h_max": 2}}"#,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        cmd_sample(&cfg, dir.path()).unwrap();
        let out = dir.path().join("report");
        let r = cmd_analyze(&snapshot_paths(dir.path()).unwrap(), &cfg.analyses, &out).unwrap();
        let text = fs::read_to_string(out.join("xi.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap(), "h,p_hat,stderr,n_eff,rate_hat,rate_stderr");
        assert_eq!(r.rates.unwrap().xi.points.len(), 3);
    }

    #[test]
    fn walls_and_full_from_sampled_run() {
        let cfg = ExperimentConfig::from_json(
            r#"{"domain": {"kind": "SlabBox", "n": 4, "m": 2}, "bc": {"variant": "split", "h": 0},
                "sampler": {"burnin": 5, "interval": 1, "n_samples": 4},
                "analyses": {"full": true, "walls": true}}"#,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        cmd_sample(&cfg, dir.path()).unwrap();
        let out = dir.path().join("report");
        let r = cmd_analyze(&snapshot_paths(dir.path()).unwrap(), &cfg.analyses, &out).unwrap();
        assert_eq!(r.walls.as_ref().unwrap().identity_violations, 0);
        assert!(r.height("full").is_some());
        let again = cmd_analyze(&snapshot_paths(dir.path()).unwrap(), &cfg.analyses, &dir.path().join("again")).unwrap();
        assert_eq!(
            fs::read(out.join("walls.csv")).unwrap(),
            fs::read(dir.path().join("again").join("walls.csv")).unwrap()
        );
        assert_eq!(again.n_samples, 4);
    }
}
