//! Experiment configuration: one JSON document, with every default written
//! back so that a run is described by its config and seed alone.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, DomainKind, ModelParams, System};
use crate::potts_sampler::{Algorithm, ChainPlan, ConditionalMethod, Schedule};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub q: u8,
    pub beta: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { q: 2, beta: 1.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    pub kind: DomainKind,
    pub n: usize,
    pub m: usize,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection {
            kind: DomainKind::FloorBox,
            n: 8,
            m: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub algorithm: Algorithm,
    pub burnin: u64,
    pub interval: u64,
    pub n_samples: usize,
    pub chains: usize,
    pub seed: u64,
    /// Sample the Split(h) measure conditioned on the blue interface staying above height 0.
    pub conditional: Option<ConditionalMethod>,
    /// Attempt budget for rejection sampling before giving up on a tiny acceptance rate.
    pub budget: u64,
    /// Store the coupled FK edges with each snapshot.
    pub save_edges: bool,
}

impl Default for SamplerSection {
    fn default() -> Self {
        SamplerSection {
            algorithm: Algorithm::Alternating,
            burnin: 200,
            interval: 5,
            n_samples: 100,
            chains: 1,
            seed: 1,
            conditional: None,
            budget: 1_000_000,
            save_edges: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Blue-interface column heights; ignored for `red_all`.
    pub heights: bool,
    /// Full-interface sizes, heights and tails.
    pub full: bool,
    /// Adds a per-sample `ordering_ok` column.
    pub ordering_audit: bool,
    pub walls: bool,
    pub rates: bool,
    pub rate_h_max: u32,
    /// Height level for the walls level-set count.
    pub wall_level: i32,
    pub oracle: Vec<String>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            heights: true,
            full: false,
            ordering_audit: false,
            walls: false,
            rates: false,
            rate_h_max: 3,
            wall_level: 0,
            oracle: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("pfsim-out") }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub domain: DomainSection,
    pub bc: BoundaryCondition,
    pub sampler: SamplerSection,
    pub analyses: AnalysisSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Param(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.system()?;
        let s = &self.sampler;
        if s.n_samples == 0 {
            return Err(Error::Param("sampler.n_samples must be positive".into()));
        }
        if s.interval == 0 {
            return Err(Error::Param("sampler.interval must be at least 1".into()));
        }
        if s.chains == 0 {
            return Err(Error::Param("sampler.chains must be at least 1".into()));
        }
        if s.conditional.is_some() && !(self.domain.kind == DomainKind::SlabBox && matches!(self.bc, BoundaryCondition::Split { h } if h >= 0)) {
            return Err(Error::Param("sampler.conditional needs domain.kind = SlabBox and bc = split with h ≥ 0".into()));
        }
        let a = &self.analyses;
        if a.rates && self.bc != BoundaryCondition::RedAll {
            return Err(Error::Param("analyses.rates needs bc = red_all".into()));
        }
        if self.bc == BoundaryCondition::RedAll && (a.full || a.walls || a.ordering_audit) {
            return Err(Error::Param(
                "analyses.full, walls and ordering_audit need a two-class bc (floor or split)".into(),
            ));
        }
        for suite in &self.analyses.oracle {
            if !crate::oracle::checks::SUITES.contains(&suite.as_str()) {
                return Err(Error::Param(format!(
                    "unknown oracle suite `{suite}`; available: {}",
                    crate::oracle::checks::SUITES.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.model.q, self.model.beta)
    }

    pub fn system(&self) -> Result<Arc<System>> {
        System::build(self.domain.kind, self.domain.n, self.domain.m, self.bc)
    }

    pub fn plan(&self) -> ChainPlan {
        let s = &self.sampler;
        ChainPlan {
            algorithm: s.algorithm,
            schedule: Schedule {
                burnin: s.burnin,
                interval: s.interval,
            },
            n_samples: s.n_samples,
            chains: s.chains,
            seed: s.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert!(cfg.to_json().contains("\"burnin\": 200"));
    }

    #[test]
    fn partial_and_invalid() {
        let cfg = ExperimentConfig::from_json(r#"{"domain": {"n": 4}, "bc": {"variant": "split", "h": 1}}"#).unwrap();
        assert_eq!((cfg.domain.n, cfg.domain.m), (4, 8));
        assert_eq!(cfg.bc, BoundaryCondition::Split { h: 1 });
        let err = ExperimentConfig::from_json(r#"{"model": {"q": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("q = 1"));
        assert!(ExperimentConfig::from_json(r#"{"modle": {}}"#).is_err());
        let err = ExperimentConfig::from_json(r#"{"analyses": {"oracle": ["bogus"]}}"#).unwrap_err();
        assert!(err.to_string().contains("coupling"));
    }
}
