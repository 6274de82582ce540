//! Experiment configuration: a JSON document, strictly parsed.

use std::path::{Path, PathBuf};

use drsub_core::objectives::{QpDistribution, MAX_QP_DIM};
use drsub_core::offline::Variant;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    RevenueOffline,
    RevenueOnline,
    LocationOnline,
    QpOffline,
}

impl Experiment {
    pub fn is_online(self) -> bool {
        matches!(self, Experiment::RevenueOnline | Experiment::LocationOnline)
    }

    pub fn name(self) -> &'static str {
        match self {
            Experiment::RevenueOffline => "revenue-offline",
            Experiment::RevenueOnline => "revenue-online",
            Experiment::LocationOnline => "location-online",
            Experiment::QpOffline => "qp-offline",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Alg1,
    Alg2,
    Alg3,
    FwDown,
    FwGeneral,
    /// Online hybrid at the configured switching time.
    Fixed,
    /// Hedge over every switching time.
    Meta,
    /// Online Frank-Wolfe.
    Baseline,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Fixed => "fixed",
            Solver::Meta => "meta",
            Solver::Baseline => "baseline",
            other => other.variant().map_or("", Variant::name),
        }
    }

    pub fn variant(self) -> Option<Variant> {
        match self {
            Solver::Alg1 => Some(Variant::Alg1),
            Solver::Alg2 => Some(Variant::Alg2),
            Solver::Alg3 => Some(Variant::Alg3),
            Solver::FwDown => Some(Variant::FwDown),
            Solver::FwGeneral => Some(Variant::FwGeneral),
            _ => None,
        }
    }

    pub fn is_online(self) -> bool {
        self.variant().is_none()
    }
}

/// Instance parameters; each experiment reads the ones it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstanceParams {
    /// QP dimensions swept by `qp-offline`.
    pub n: Vec<usize>,
    /// Packing rows of a QP; defaults to `n`.
    pub m_rows: Option<usize>,
    pub dist: QpDistribution,
    /// Revenue price parameter.
    pub p: f64,
    /// Edge list to load instead of the synthetic graph.
    pub graph: Option<PathBuf>,
    /// Synthetic graph size and edge probability.
    pub nodes: usize,
    pub p_edge: f64,
    pub weighted: bool,
    /// Nodes kept per step of a revenue stream.
    pub subgraph: usize,
    /// Stream length.
    pub steps: usize,
    pub locations: usize,
    pub features: usize,
    pub bandwidth: f64,
    pub width: f64,
    pub height: f64,
    /// Random restarts of the reference-optimum ascent.
    pub ascent_starts: usize,
    /// Declared gradient bound for the online learners.
    pub grad_bound: Option<f64>,
}

impl Default for InstanceParams {
    fn default() -> Self {
        InstanceParams {
            n: vec![8],
            m_rows: None,
            dist: QpDistribution::Uniform,
            p: 1e-4,
            graph: None,
            nodes: 200,
            p_edge: 0.05,
            weighted: false,
            subgraph: 50,
            steps: 200,
            locations: 20,
            features: 6,
            bandwidth: 2.0,
            width: 1.0,
            height: 0.6,
            ascent_starts: 50,
            grad_bound: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub solvers: Vec<Solver>,
    pub epsilon: f64,
    pub seeds: Vec<u64>,
    /// Switching time; offline hybrids sweep the grid when it is absent.
    #[serde(default)]
    pub t_s: Option<f64>,
    /// Value of the down-closed comparator for `alg1`; brute-forced on a
    /// grid when absent.
    #[serde(default)]
    pub known_p1_value: Option<f64>,
    #[serde(default)]
    pub instance: InstanceParams,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, Failure> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| bad(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies command-line overrides and re-validates.
    pub fn with_overrides(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self, Failure> {
        if let Some(s) = seed {
            self.seeds = vec![s];
        }
        if out.is_some() {
            self.out = out;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("results"))
    }

    /// The config without its output directory, which does not affect
    /// results.
    pub fn portable(&self) -> ExperimentConfig {
        ExperimentConfig {
            out: None,
            ..self.clone()
        }
    }

    /// Canonical JSON of [`Self::portable`], the input of the manifest hash.
    pub fn canonical(&self) -> String {
        serde_json::to_string(&self.portable()).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let p = &self.instance;
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(bad(format!("epsilon = {} outside (0,1]", self.epsilon)));
        }
        if self.seeds.is_empty() {
            return Err(bad("no seeds"));
        }
        if self.solvers.is_empty() {
            return Err(bad("no solvers"));
        }
        let mut seen = self.solvers.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.solvers.len() {
            return Err(bad("solver listed twice"));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(bad("seed listed twice"));
        }
        for s in &self.solvers {
            if s.is_online() != self.experiment.is_online() {
                return Err(bad(format!(
                    "solver {} does not apply to {}",
                    s.name(),
                    self.experiment.name()
                )));
            }
        }
        if let Some(t) = self.t_s {
            if !(0.0..=1.0).contains(&t) {
                return Err(bad(format!("t_s = {t} outside [0,1]")));
            }
        } else if self.solvers.contains(&Solver::Fixed) {
            return Err(bad("solver fixed needs t_s"));
        }
        if let Some(v) = self.known_p1_value {
            if !v.is_finite() || v < 0.0 {
                return Err(bad("known_p1_value must be finite and non-negative"));
            }
        }
        if let Some(g) = p.grad_bound {
            if !(g.is_finite() && g > 0.0) {
                return Err(bad("grad_bound must be positive"));
            }
        }
        match self.experiment {
            Experiment::QpOffline => {
                if p.n.is_empty() {
                    return Err(bad("qp-offline needs at least one n"));
                }
                if p.n.iter().any(|&n| n == 0 || n > MAX_QP_DIM) {
                    return Err(bad(format!("every n must lie in 1..={MAX_QP_DIM}")));
                }
                if p.m_rows == Some(0) {
                    return Err(bad("m_rows must be positive"));
                }
            }
            Experiment::RevenueOffline | Experiment::RevenueOnline => {
                if !(p.p > 0.0 && p.p <= 1.0) {
                    return Err(bad(format!("p = {} outside (0,1]", p.p)));
                }
                if p.graph.is_none() {
                    if p.nodes == 0 {
                        return Err(bad("nodes must be positive"));
                    }
                    if !(0.0..=1.0).contains(&p.p_edge) {
                        return Err(bad(format!("p_edge = {} outside [0,1]", p.p_edge)));
                    }
                    if self.experiment == Experiment::RevenueOnline && p.subgraph > p.nodes {
                        return Err(bad(format!("subgraph {} exceeds {} nodes", p.subgraph, p.nodes)));
                    }
                }
            }
            Experiment::LocationOnline => {
                if p.locations == 0 || p.features == 0 {
                    return Err(bad("locations and features must be positive"));
                }
                if !(p.bandwidth > 0.0 && p.width > 0.0 && p.height > 0.0) {
                    return Err(bad("bandwidth, width and height must be positive"));
                }
            }
        }
        if self.experiment.is_online() && p.steps == 0 {
            return Err(bad("steps must be positive"));
        }
        if self.experiment == Experiment::RevenueOnline && p.subgraph == 0 {
            return Err(bad("subgraph must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"{"experiment": "qp-offline", "solvers": ["alg3"], "epsilon": 0.1, "seeds": [1]}"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_json(MIN).unwrap();
        assert_eq!(cfg.instance, InstanceParams::default());
        assert_eq!(cfg.out_dir(), PathBuf::from("results"));
    }

    #[test]
    fn unknown_fields_are_rejected_at_every_level() {
        let top = MIN.replace("\"seeds\"", "\"sedes\": [], \"seeds\"");
        assert!(matches!(ExperimentConfig::from_json(&top), Err(Failure::Config(_))));
        let nested = MIN.replace("}", ", \"instance\": {\"nn\": [3]}}");
        let err = ExperimentConfig::from_json(&nested).unwrap_err();
        assert!(err.to_string().contains("nn"), "{err}");
    }

    #[test]
    fn solvers_must_match_the_experiment() {
        let cfg = MIN.replace("alg3", "meta");
        assert!(ExperimentConfig::from_json(&cfg).is_err());
        let online = r#"{"experiment": "location-online", "solvers": ["fixed"], "epsilon": 0.1, "seeds": [1]}"#;
        assert!(ExperimentConfig::from_json(online).unwrap_err().to_string().contains("t_s"));
    }

    #[test]
    fn overrides_replace_seeds_and_output() {
        let cfg = ExperimentConfig::from_json(MIN)
            .unwrap()
            .with_overrides(Some(9), Some("elsewhere".into()))
            .unwrap();
        assert_eq!(cfg.seeds, vec![9]);
        assert_eq!(cfg.out_dir(), PathBuf::from("elsewhere"));
    }

    #[test]
    fn out_of_range_values_fail() {
        for (from, to) in [("0.1", "0"), ("[1]", "[]"), ("[1]", "[1, 1]")] {
            assert!(ExperimentConfig::from_json(&MIN.replace(from, to)).is_err(), "{to}");
        }
        let big = MIN.replace("}", ", \"instance\": {\"n\": [40]}}");
        assert!(ExperimentConfig::from_json(&big).is_err());
    }
}
