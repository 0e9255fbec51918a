//! Interchangeable solving engines behind one trait, looked up by name.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{AssignmentIndex, CnfFormula};
use crate::machine::{enumerate_models, run_ldo, MachineConfig, MachineError, RunReport, Verdict};
use crate::mask::{cnf_mask_direct_capped, models_of_mask, MaskError, TruthMask};
use crate::oracle::{brute_force_capped, OracleError, DEFAULT_ORACLE_CAP};
use crate::saldo::{run_saldo, saldo_models, VariableRegistry, DEFAULT_ANGLE_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("unknown engine {name:?}; available: {available}")]
    UnknownEngine { name: String, available: String },
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub machine: MachineConfig,
    pub oracle_cap: u32,
    pub angle_threshold: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            machine: MachineConfig::default(),
            oracle_cap: DEFAULT_ORACLE_CAP,
            angle_threshold: DEFAULT_ANGLE_THRESHOLD,
        }
    }
}

/// What an engine reports. `mask` and `models` always use the formula's own
/// assignment numbering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub engine: String,
    pub verdict: Verdict,
    pub mask: TruthMask,
    pub models: Vec<AssignmentIndex>,
    /// Present for the disk machines.
    pub run: Option<RunReport>,
    /// Present for the self-assembling machine.
    pub registry: Option<VariableRegistry>,
}

pub trait Engine: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn solve(&self, formula: &CnfFormula, config: &EngineConfig) -> Result<Outcome, EngineError>;
}

fn mask_from_models(num_vars: u32, models: &[AssignmentIndex]) -> TruthMask {
    let mut mask = TruthMask::zeros(num_vars);
    for j in models {
        mask.set(j.0 as usize, true);
    }
    mask
}

fn check_cap(formula: &CnfFormula, config: &EngineConfig) -> Result<(), EngineError> {
    let n_max = config.machine.n_max;
    if formula.num_vars() > n_max {
        return Err(MachineError::TooManyVars {
            num_vars: formula.num_vars(),
            n_max,
        }
        .into());
    }
    Ok(())
}

/// Digitwise mask algebra over the whole truth table.
pub struct MaskEngine;

impl Engine for MaskEngine {
    fn name(&self) -> &'static str {
        "mask"
    }

    fn description(&self) -> &'static str {
        "truth-mask algebra: AND of clause ORs over 2^n-bit strings"
    }

    fn solve(&self, formula: &CnfFormula, config: &EngineConfig) -> Result<Outcome, EngineError> {
        let mask = cnf_mask_direct_capped(formula, config.machine.n_max)?;
        Ok(Outcome {
            engine: self.name().to_string(),
            verdict: Verdict::from_bool(!mask.is_all_zeros()),
            models: models_of_mask(&mask),
            mask,
            run: None,
            registry: None,
        })
    }
}

/// Fixed-size disk machine with one disk per declared variable.
pub struct LdoEngine;

impl Engine for LdoEngine {
    fn name(&self) -> &'static str {
        "ldo"
    }

    fn description(&self) -> &'static str {
        "logical disk operator with a disk per declared variable"
    }

    fn solve(&self, formula: &CnfFormula, config: &EngineConfig) -> Result<Outcome, EngineError> {
        check_cap(formula, config)?;
        let (machine, report) = run_ldo(formula, config.machine)?;
        let models = enumerate_models(&machine);
        Ok(Outcome {
            engine: self.name().to_string(),
            verdict: report.verdict,
            mask: mask_from_models(formula.num_vars(), &models),
            models,
            run: Some(report),
            registry: None,
        })
    }
}

/// Self-assembling disk machine that grows a disk per new variable.
pub struct SaldoEngine;

impl Engine for SaldoEngine {
    fn name(&self) -> &'static str {
        "saldo"
    }

    fn description(&self) -> &'static str {
        "self-assembling disk operator, variables numbered by first appearance"
    }

    fn solve(&self, formula: &CnfFormula, config: &EngineConfig) -> Result<Outcome, EngineError> {
        check_cap(formula, config)?;
        let (machine, report) = run_saldo(formula, config.machine)?;
        let models = saldo_models(&machine, formula.num_vars());
        Ok(Outcome {
            engine: self.name().to_string(),
            verdict: report.verdict,
            mask: mask_from_models(formula.num_vars(), &models),
            models,
            run: Some(report),
            registry: machine.registry().cloned(),
        })
    }
}

/// Assignment-by-assignment evaluation of the symbolic formula.
pub struct OracleEngine;

impl Engine for OracleEngine {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn description(&self) -> &'static str {
        "brute-force truth-table search"
    }

    fn solve(&self, formula: &CnfFormula, config: &EngineConfig) -> Result<Outcome, EngineError> {
        let result = brute_force_capped(formula, config.oracle_cap)?;
        Ok(Outcome {
            engine: self.name().to_string(),
            verdict: result.verdict,
            mask: mask_from_models(formula.num_vars(), &result.models),
            models: result.models,
            run: None,
            registry: None,
        })
    }
}

pub struct EngineRegistry {
    engines: BTreeMap<&'static str, Box<dyn Engine>>,
}

impl EngineRegistry {
    pub fn empty() -> Self {
        EngineRegistry {
            engines: BTreeMap::new(),
        }
    }

    /// Registry with `mask`, `ldo`, `saldo` and `oracle`.
    pub fn builtin() -> Self {
        let mut r = EngineRegistry::empty();
        r.register(Box::new(MaskEngine));
        r.register(Box::new(LdoEngine));
        r.register(Box::new(SaldoEngine));
        r.register(Box::new(OracleEngine));
        r
    }

    /// Adds an engine, replacing any previous one with the same name.
    pub fn register(&mut self, engine: Box<dyn Engine>) {
        self.engines.insert(engine.name(), engine);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Engine, EngineError> {
        self.engines
            .get(name)
            .map(|e| e.as_ref())
            .ok_or_else(|| EngineError::UnknownEngine {
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.engines.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Engine> {
        self.engines.values().map(|e| e.as_ref())
    }
}

impl Default for EngineRegistry {
    fn default() -> Self {
        EngineRegistry::builtin()
    }
}
