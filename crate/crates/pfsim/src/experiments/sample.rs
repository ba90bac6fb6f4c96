//! `sample`: runs the chains of a config and writes snapshots plus a manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::snapshot::Snapshot;
use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, ModelParams, System, RED};
use crate::par;
use crate::potts_sampler::{sample_conditional_soft_floor, ChainState, ConditionalMethod, Schedule, SpinConfig};
use crate::rc_coupling::{couple_edges_from_spins, EdgeConfig};
use crate::stats::McEstimate;

pub const MANIFEST: &str = "manifest.json";
const STAGING: &str = ".staging";
const EDGE_SALT: u64 = 0x6564_6765_5f72_6e67;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub chain: usize,
    pub samples: usize,
    pub mean_energy: f64,
    /// Integrated autocorrelation time of the energy, in units of the sampling interval.
    pub tau_energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalSummary {
    pub method: ConditionalMethod,
    pub attempts: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub config: ExperimentConfig,
    pub files: Vec<String>,
    pub chains: Vec<ChainSummary>,
    /// Largest per-chain energy autocorrelation time.
    pub tau_energy: f64,
    pub conditional: Option<ConditionalSummary>,
    pub elapsed_secs: f64,
    pub workers: usize,
    pub parallel: bool,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Manifest> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST))?)?)
    }
}

/// Independent RNG for drawing FK edges of sample `i` of chain `c`.
pub fn edge_rng(seed: u64, c: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ EDGE_SALT);
    rng.set_stream((c << 32) | i);
    rng
}

/// Ground state of the boundary condition: flat at the split height, else all red.
pub fn initial_config(system: &Arc<System>) -> SpinConfig {
    match system.bc() {
        BoundaryCondition::Split { h } => SpinConfig::flat(system.clone(), h),
        _ => SpinConfig::uniform(system.clone(), RED),
    }
}

struct ChainOutput {
    files: Vec<PathBuf>,
    energies: Vec<f64>,
}

fn snapshot_name(i: usize) -> String {
    format!("sample_{i:06}.pfs")
}

pub fn snapshot_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pfs"))
        .collect();
    paths.sort();
    Ok(paths)
}

fn write_sample(
    dir: &Path,
    i: usize,
    sigma: &SpinConfig,
    params: &ModelParams,
    cfg: &ExperimentConfig,
    chain: usize,
    sweep: u64,
) -> Result<PathBuf> {
    let seed = cfg.sampler.seed;
    let omega: Option<EdgeConfig> = cfg
        .sampler
        .save_edges
        .then(|| couple_edges_from_spins(sigma, params, &mut edge_rng(seed, chain as u64, i as u64)));
    let path = dir.join(format!("{i:06}.pfs"));
    Snapshot::capture(sigma, omega.as_ref(), params, seed, sweep).write(&path)?;
    Ok(path)
}

/// Runs every chain, staging snapshots per chain, then renames them into
/// `out` in chain order and writes the manifest.
pub fn cmd_sample(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    cfg.validate()?;
    let start = Instant::now();
    fs::create_dir_all(out)?;
    if out.join(snapshot_name(0)).exists() {
        return Err(Error::Param(format!(
            "{} already holds snapshots; pass an empty --out directory",
            out.display()
        )));
    }
    let staging = out.join(STAGING);
    let params = cfg.params()?;
    let system = cfg.system()?;
    let plan = cfg.plan();
    let s = &cfg.sampler;

    let (outputs, conditional) = if let Some(method) = s.conditional {
        let schedule = Schedule {
            burnin: s.burnin,
            interval: s.interval,
        };
        let run = sample_conditional_soft_floor(system, &params, s.n_samples, s.seed, method, schedule, s.budget)?;
        let dir = staging.join("chain_0000");
        fs::create_dir_all(&dir)?;
        let mut files = Vec::with_capacity(run.samples.len());
        let mut energies = Vec::with_capacity(run.samples.len());
        for (i, sigma) in run.samples.iter().enumerate() {
            let sweep = s.burnin + (i as u64 + 1) * s.interval;
            files.push(write_sample(&dir, i, sigma, &params, cfg, 0, sweep)?);
            energies.push(sigma.energy() as f64);
        }
        let summary = ConditionalSummary {
            method,
            attempts: run.attempts,
            accepted: run.accepted,
            acceptance_rate: run.acceptance_rate(),
        };
        (vec![ChainOutput { files, energies }], Some(summary))
    } else {
        let init = initial_config(&system);
        let outputs: Vec<Result<ChainOutput>> = par::map_indexed(plan.chains, |c| {
            let dir = staging.join(format!("chain_{c:04}"));
            fs::create_dir_all(&dir)?;
            let mut chain = ChainState::with_stream(init.clone(), plan.seed, c as u64);
            chain.run(plan.algorithm, &params, plan.schedule.burnin);
            let k = plan.samples_in_chain(c);
            let mut out = ChainOutput {
                files: Vec::with_capacity(k),
                energies: Vec::with_capacity(k),
            };
            for i in 0..k {
                chain.run(plan.algorithm, &params, plan.schedule.interval);
                out.energies.push(chain.energy() as f64);
                out.files.push(write_sample(&dir, i, &chain.config, &params, cfg, c, chain.sweeps)?);
            }
            Ok(out)
        });
        (outputs.into_iter().collect::<Result<Vec<_>>>()?, None)
    };

    let mut files = Vec::new();
    let mut chains = Vec::new();
    for (c, output) in outputs.iter().enumerate() {
        for staged in &output.files {
            let name = snapshot_name(files.len());
            fs::rename(staged, out.join(&name))?;
            files.push(name);
        }
        let est = McEstimate::from_series(&output.energies);
        chains.push(ChainSummary {
            chain: c,
            samples: output.files.len(),
            mean_energy: est.mean,
            tau_energy: est.tau,
        });
    }
    fs::remove_dir_all(&staging)?;
    let manifest = Manifest {
        format: String::from_utf8_lossy(super::snapshot::TAG).into_owned(),
        config: cfg.clone(),
        files,
        tau_energy: chains.iter().map(|c| c.tau_energy).fold(0.0, f64::max),
        chains,
        conditional,
        elapsed_secs: start.elapsed().as_secs_f64(),
        workers: par::current_workers(),
        parallel: par::parallel_enabled(),
    };
    fs::write(out.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
