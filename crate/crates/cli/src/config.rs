//! Experiment configuration: one JSON document per run, command defaults
//! underneath, flags on top.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use treepotts::graphgen::{GenSpec, Model};
use treepotts::oracle::SuiteConfig;
use treepotts::sampler::{Budget, TiConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Gen,
    Phase,
    Fixedpoint,
    Sample,
    Lwc,
    Purestate,
    Critical,
    FreeEnergy,
    Oracle,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Gen,
        Command::Phase,
        Command::Fixedpoint,
        Command::Sample,
        Command::Lwc,
        Command::Purestate,
        Command::Critical,
        Command::FreeEnergy,
        Command::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Phase => "phase",
            Command::Fixedpoint => "fixedpoint",
            Command::Sample => "sample",
            Command::Lwc => "lwc",
            Command::Purestate => "purestate",
            Command::Critical => "critical",
            Command::FreeEnergy => "free-energy",
            Command::Oracle => "oracle",
        }
    }
}

/// A parameter point; `q` falls back to the config's.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    pub beta: f64,
    pub field: f64,
}

impl Point {
    pub fn new(beta: f64, field: f64) -> Self {
        Point {
            q: None,
            beta,
            field,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub n: usize,
    pub model: Model,
}

/// Pass/fail thresholds applied by the embedded checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Total variation bound on neighborhood laws.
    pub tv: f64,
    /// Monte Carlo agreement in standard errors.
    pub se_multiple: f64,
    pub free_energy_rel: f64,
    /// Lower bound on the local dominant-color rate.
    pub dominance: f64,
    /// Curve coincidence at B_+.
    pub merge: f64,
    pub fixed_point: f64,
    pub oracle_seconds: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tv: 0.05,
            se_multiple: 3.0,
            free_energy_rel: 0.01,
            dominance: 0.9,
            merge: 1e-5,
            fixed_point: 1e-10,
            oracle_seconds: 60.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; results do not depend on it.
    pub threads: Option<usize>,
    pub q: usize,
    pub d: usize,
    pub points: Vec<Point>,
    pub graph: GraphConfig,
    pub budget: Budget,
    pub chains: usize,
    /// Neighborhood depth t.
    pub depth: usize,
    /// Radius of the local dominant color.
    pub ell: usize,
    /// Field grid intervals for phase curves.
    pub grid: usize,
    /// (q, d) per phase panel.
    pub panels: Vec<(usize, usize)>,
    /// Critical probe at B = fraction * B_+.
    pub field_fraction: f64,
    pub ti: TiConfig,
    pub oracle: SuiteConfig,
    pub thresholds: Thresholds,
}

impl ExperimentConfig {
    pub fn defaults(cmd: Command) -> Self {
        let base = ExperimentConfig {
            experiment: cmd.name().into(),
            seed: 1,
            out_dir: PathBuf::from("out"),
            threads: None,
            q: 3,
            d: 3,
            points: vec![Point::new(1.0, 0.2)],
            graph: GraphConfig {
                n: 10_000,
                model: Model::Configuration,
            },
            budget: Budget::default(),
            chains: 1,
            depth: 1,
            ell: 3,
            grid: 200,
            panels: vec![(30, 3), (30, 10)],
            field_fraction: 0.25,
            ti: TiConfig::default(),
            oracle: SuiteConfig::default(),
            thresholds: Thresholds::default(),
        };
        match cmd {
            Command::Gen | Command::Phase | Command::Fixedpoint | Command::Oracle => base,
            Command::Sample => ExperimentConfig { chains: 4, ..base },
            Command::Lwc => ExperimentConfig {
                points: vec![
                    Point::new(1.0, 0.2),
                    Point::new(0.5, 0.05),
                    Point::new(1.3415, 0.001),
                    Point::new(1.342, 0.001),
                    Point::new(1.355, 0.001),
                    Point::new(1.358, 0.001),
                ],
                ..base
            },
            Command::Purestate => ExperimentConfig {
                points: vec![Point::new(1.0, 0.0), Point::new(1.6, 0.0)],
                budget: Budget {
                    samples: 200,
                    ..Budget::default()
                },
                ..base
            },
            Command::Critical => ExperimentConfig {
                q: 30,
                d: 4,
                chains: 4,
                points: Vec::new(),
                budget: Budget {
                    samples: 200,
                    ..Budget::default()
                },
                ..base
            },
            Command::FreeEnergy => ExperimentConfig {
                points: [2, 3]
                    .into_iter()
                    .flat_map(|q| {
                        [0.0, 0.1].into_iter().flat_map(move |b| {
                            [0.5, 1.0, 1.8].into_iter().map(move |beta| Point {
                                q: Some(q),
                                beta,
                                field: b,
                            })
                        })
                    })
                    .collect(),
                ..base
            },
        }
    }

    /// Command defaults overlaid with the fields present in a JSON document.
    pub fn from_json(cmd: Command, text: &str) -> Result<Self> {
        let overlay: Value = serde_json::from_str(text).context("config is not valid JSON")?;
        if !overlay.is_object() {
            bail!("config must be a JSON object");
        }
        let mut merged = serde_json::to_value(Self::defaults(cmd))?;
        merge(&mut merged, overlay);
        let cfg: Self = serde_json::from_value(merged).context("invalid config")?;
        Ok(cfg)
    }

    pub fn load(cmd: Command, path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::defaults(cmd)),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                Self::from_json(cmd, &text)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.is_empty()
            || self
                .experiment
                .contains(|c: char| !(c.is_ascii_alphanumeric() || c == '-' || c == '_'))
        {
            bail!("experiment name must be non-empty [A-Za-z0-9_-]");
        }
        if self.chains == 0 {
            bail!("chains must be positive");
        }
        self.budget.validate()?;
        for pt in &self.points {
            treepotts::Params::f64(pt.q.unwrap_or(self.q), self.d, pt.beta, pt.field)?;
        }
        Ok(())
    }

    pub fn gen_spec(&self) -> GenSpec {
        GenSpec {
            n: self.graph.n,
            d: self.d,
            model: self.graph.model,
            seed: self.graph_seed(),
        }
    }

    pub fn params(&self, pt: &Point) -> Result<treepotts::Params64> {
        Ok(treepotts::Params::f64(
            pt.q.unwrap_or(self.q),
            self.d,
            pt.beta,
            pt.field,
        )?)
    }

    pub fn graph_seed(&self) -> u64 {
        self.seed
    }

    /// Master seed of the chain streams, distinct from the graph seed.
    pub fn chain_seed(&self) -> u64 {
        self.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(1)
    }

    /// SHA-256 of the canonical JSON, with fields that cannot change results blanked.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        c.threads = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        for cmd in Command::ALL {
            ExperimentConfig::defaults(cmd).validate().unwrap();
        }
    }

    #[test]
    fn partial_overlay() {
        let cfg = ExperimentConfig::from_json(
            Command::Lwc,
            r#"{"seed": 9, "graph": {"n": 500}, "budget": {"samples": 40}}"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.graph.n, 500);
        assert_eq!(cfg.graph.model, Model::Configuration);
        assert_eq!(cfg.budget.samples, 40);
        assert_eq!(cfg.budget.burn_in, Budget::default().burn_in);
        assert_eq!(cfg.points.len(), 6);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(ExperimentConfig::from_json(Command::Gen, r#"{"sede": 3}"#).is_err());
        assert!(ExperimentConfig::from_json(Command::Gen, "[1]").is_err());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = ExperimentConfig::defaults(Command::Phase);
        let mut b = a.clone();
        b.out_dir = "elsewhere".into();
        b.threads = Some(3);
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn round_trip() {
        let a = ExperimentConfig::defaults(Command::FreeEnergy);
        let text = serde_json::to_string(&a).unwrap();
        assert_eq!(ExperimentConfig::from_json(Command::Gen, &text).unwrap(), a);
    }
}
