//! Experiment configuration files (TOML).
//!
//! Every field has a materialized default, so a loaded config written back
//! out is a complete description of the experiment.

use std::fs;
use std::path::Path;

use hybrid_ilqr::systems::SystemSpec;
use hybrid_ilqr::{GradientVariant, IntegratorConfig, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::seeds::SeedPolicy;
use crate::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub notes: String,
    pub system: SystemSpec,
    pub problem: ProblemConfig,
    pub cost: CostConfig,
    pub seed: SeedPolicy,
    #[serde(default = "default_variants")]
    pub variants: Vec<GradientVariant>,
    #[serde(default)]
    pub solver: SolverConfig<f64>,
    #[serde(default)]
    pub integrator: IntegratorConfig<f64>,
    #[serde(default)]
    pub labels: TableLabels,
}

fn default_variants() -> Vec<GradientVariant> {
    vec![GradientVariant::Saltation, GradientVariant::ResetJacobian]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub x0: Vec<f64>,
    #[serde(default)]
    pub mode0: usize,
    pub x_des: Vec<f64>,
    pub n_steps: usize,
    pub dt: f64,
}

/// Diagonal cost weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub q_terminal: Vec<f64>,
    pub r_input: Vec<f64>,
    /// Running state weight; empty means none.
    #[serde(default)]
    pub q_running: Vec<f64>,
}

/// Results-table row labels. Absent labels print as "-".
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableLabels {
    pub optimal: Option<usize>,
    pub seed: Option<usize>,
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub variants: Option<Vec<GradientVariant>>,
    pub seed_bounces: Option<usize>,
    pub no_extension: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |m: String| Err(HarnessError::Config(format!("{}: {m}", self.name)));
        let sys = self
            .system
            .build::<f64>()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let (n, m) = (sys.state_dim(), sys.input_dim());
        let p = &self.problem;
        if p.x0.len() != n || p.x_des.len() != n {
            return err(format!("x0 and x_des need {n} entries"));
        }
        if p.mode0 >= sys.num_modes() {
            return err(format!("mode0 {} does not exist", p.mode0));
        }
        if p.n_steps == 0 || !(p.dt > 0.0) || !(p.n_steps as f64 * p.dt > 0.0) {
            return err("n_steps and dt must be positive".into());
        }
        if self.cost.q_terminal.len() != n || self.cost.r_input.len() != m {
            return err(format!("q_terminal needs {n} and r_input {m} entries"));
        }
        if !self.cost.q_running.is_empty() && self.cost.q_running.len() != n {
            return err(format!("q_running needs {n} entries"));
        }
        if self.variants.is_empty() {
            return err("at least one variant is required".into());
        }
        self.solver.validate().or_else(|e| err(e))?;
        self.integrator.validate().or_else(|e| err(e))?;
        self.seed.validate(n, m).or_else(|e| err(e))?;
        Ok(())
    }

    pub fn apply(&self, o: &Overrides) -> Result<Self, HarnessError> {
        let mut cfg = self.clone();
        if let Some(v) = &o.variants {
            cfg.variants = v.clone();
        }
        if o.no_extension {
            cfg.solver.use_extensions = false;
        }
        if let Some(n) = o.seed_bounces {
            match &mut cfg.seed {
                SeedPolicy::BounceCount { count, .. } => *count = n,
                _ => {
                    return Err(HarnessError::Config(format!(
                        "{}: --seed-bounces needs a bounce_count seed policy",
                        cfg.name
                    )))
                }
            }
            cfg.labels.seed = Some(n);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
