use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use skewlab::pressure::PressureOptions;
use skewlab::skew::ProductPotential;
use skewlab::symbolic::{BasePotential, BaseSpec, PotentialSpec, SymbolicBase};
use skewlab::torus::{FiberFamily, FiberSpec};
use skewlab::SkewSystem64;

/// One experiment: system, potential, solver budgets and output location.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub potential: PotentialConfig,
    pub solver: SolverConfig,
    pub outputs: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub base: BaseSpec,
    pub fibers: FiberSpec,
    /// Stored radius of sampled base words.
    pub window: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            base: SymbolicBase::full_shift(2).to_spec(),
            fibers: FiberSpec::default(),
            window: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    pub base: PotentialSpec,
    pub fiber_constant: f64,
}

fn zero_one_block(alphabet: usize) -> PotentialSpec {
    PotentialSpec {
        window_radius: 0,
        values: (0..alphabet).map(|a| (a.to_string(), 0.0)).collect(),
    }
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            base: zero_one_block(2),
            fiber_constant: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub seed: u64,
    /// Series length `N` for the semi-conjugacy.
    pub terms: usize,
    pub grid: usize,
    pub residual_samples: usize,
    pub residual_tolerance: f64,
    pub pressure: PressureOptions,
    /// Relative tolerance of the pressure slope against the exact value.
    pub pressure_tolerance: f64,
    pub equilibrium: EquilibriumConfig,
    pub stability: StabilityConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            terms: 40,
            grid: 64,
            residual_samples: 1000,
            residual_tolerance: 1e-6,
            pressure: PressureOptions::default(),
            pressure_tolerance: 0.15,
            equilibrium: EquilibriumConfig::default(),
            stability: StabilityConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub lift_budget: usize,
    pub b_x_samples: usize,
    pub b_grid: usize,
    pub b_steps: usize,
    pub preimage_samples: usize,
    pub leaf_resolution: f64,
    pub k_sigma: f64,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        Self {
            lift_budget: 100_000,
            b_x_samples: 200,
            b_grid: 16,
            b_steps: 10_000,
            preimage_samples: 1000,
            leaf_resolution: 1e-4,
            k_sigma: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub t_ladder: Vec<f64>,
    /// Direction `η` of the potential ladder; `None` means `1` on `[x_0 = q̄]`.
    pub direction: Option<PotentialSpec>,
    /// `β_max` ladder as multiples of the configured value.
    pub beta_factors: Vec<f64>,
    pub lift_budget: usize,
    pub openness_trials: usize,
    pub openness_samples: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            t_ladder: vec![0.1, 0.05, 0.01],
            direction: None,
            beta_factors: vec![1.05, 1.01, 1.001],
            lift_budget: 20_000,
            openness_trials: 5,
            openness_samples: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Everything a subcommand needs, built and validated from the config.
pub struct Resolved {
    pub system: SkewSystem64,
    pub potential: ProductPotential<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let base = SymbolicBase::from_spec(&self.system.base)?;
        let fibers = FiberFamily::new(&self.system.fibers, base.fixed_symbol())?;
        if self.system.window == 0 {
            bail!("system.window must be positive");
        }
        let system = SkewSystem64::new(base, fibers)?.with_window(self.system.window);
        let potential = ProductPotential::new(
            BasePotential::from_spec(system.base(), &self.potential.base)?,
            self.potential.fiber_constant,
        );
        let s = &self.solver;
        if s.terms > self.system.window {
            bail!("solver.terms = {} exceeds system.window = {}", s.terms, self.system.window);
        }
        if !(s.equilibrium.leaf_resolution > 0.0) {
            bail!("solver.equilibrium.leaf_resolution must be positive");
        }
        if let Some(d) = &s.stability.direction {
            BasePotential::<f64>::from_spec(system.base(), d)?;
        }
        Ok(Resolved { system, potential })
    }

    /// The stability direction, defaulting to the indicator of `[x_0 = q̄]`.
    pub fn direction(&self, r: &Resolved) -> Result<ProductPotential<f64>> {
        let base = r.system.base();
        let part = match &self.solver.stability.direction {
            Some(spec) => BasePotential::from_spec(base, spec)?,
            None => {
                let q = base.fixed_symbol();
                let values: BTreeMap<Vec<u8>, f64> = (0..base.alphabet() as u8)
                    .map(|a| (vec![a], if a == q { 1.0 } else { 0.0 }))
                    .collect();
                BasePotential::new(base, 0, values)?
            }
        };
        Ok(ProductPotential::new(part, 0.0))
    }
}
