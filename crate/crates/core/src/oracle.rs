//! Exhaustive truth-table search over the symbolic formula.
//!
//! Every other evaluation path in the crate is checked against this one, so
//! it only relies on [`crate::formula`]: no masks, no disks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{decode_assignment, eval_cnf, AssignmentIndex, CnfFormula, FormulaError};
use crate::machine::Verdict;

pub const DEFAULT_ORACLE_CAP: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{num_vars} variables exceeds the oracle cap of {cap}")]
    OverCap { num_vars: u32, cap: u32 },
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    pub verdict: Verdict,
    pub models: Vec<AssignmentIndex>,
}

pub fn brute_force(formula: &CnfFormula) -> Result<OracleResult, OracleError> {
    brute_force_capped(formula, DEFAULT_ORACLE_CAP)
}

pub fn brute_force_capped(formula: &CnfFormula, cap: u32) -> Result<OracleResult, OracleError> {
    let n = formula.num_vars();
    if n > cap {
        return Err(OracleError::OverCap { num_vars: n, cap });
    }
    let mut models = Vec::new();
    for j in 0..(1u64 << n) {
        let asg = decode_assignment(AssignmentIndex(j), n)?;
        if eval_cnf(formula, &asg)? {
            models.push(AssignmentIndex(j));
        }
    }
    Ok(OracleResult {
        verdict: Verdict::from_bool(!models.is_empty()),
        models,
    })
}
