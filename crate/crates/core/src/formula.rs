//! Symbolic CNF formulas and truth-assignment numbering.
//!
//! Assignment `j` gives variable `a_k` the value of bit `k - 1` of `j`
//! (bit 0 is the least significant). Every mask and disk in the crate is
//! indexed with this convention.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest variable count for which assignment indices fit comfortably in `u64`.
pub const MAX_ASSIGNMENT_VARS: u32 = 63;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("variable index must be at least 1")]
    ZeroVariable,
    #[error("assignment {index} out of range for {num_vars} variables")]
    AssignmentOutOfRange { index: u64, num_vars: u32 },
    #[error("variable a{0} has no value in the assignment")]
    Unmapped(u32),
    #[error("variable a{var} exceeds declared variable count {num_vars}")]
    VariableOutOfRange { var: u32, num_vars: u32 },
    #[error("{0} variables is too many to enumerate assignments")]
    TooManyVariables(u32),
}

/// A 1-based propositional variable index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct VarId(u32);

impl VarId {
    pub fn new(index: u32) -> Result<Self, FormulaError> {
        if index == 0 {
            Err(FormulaError::ZeroVariable)
        } else {
            Ok(VarId(index))
        }
    }

    pub fn index(self) -> u32 {
        self.0
    }

    /// Bit position of this variable inside an assignment index.
    pub fn bit(self) -> u32 {
        self.0 - 1
    }
}

impl TryFrom<u32> for VarId {
    type Error = FormulaError;

    fn try_from(value: u32) -> Result<Self, Self::Error> {
        VarId::new(value)
    }
}

impl From<VarId> for u32 {
    fn from(v: VarId) -> u32 {
        v.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub var: VarId,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: VarId) -> Self {
        Literal {
            var,
            negated: false,
        }
    }

    pub fn neg(var: VarId) -> Self {
        Literal { var, negated: true }
    }

    /// Literal from a signed DIMACS-style integer. Panics on zero.
    pub fn from_dimacs(value: i64) -> Self {
        assert!(value != 0, "zero is not a literal");
        let var = VarId(value.unsigned_abs() as u32);
        Literal {
            var,
            negated: value < 0,
        }
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var.index() as i64;
        if self.negated {
            -v
        } else {
            v
        }
    }

    pub fn eval(self, value: bool) -> bool {
        value != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "~{}", self.var)
        } else {
            write!(f, "{}", self.var)
        }
    }
}

/// A disjunction of literals, kept exactly as written (order, duplicates and
/// tautologies included) because the machine's cost depends on it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Self {
        Clause { literals }
    }

    pub fn empty() -> Self {
        Clause::default()
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    fn max_var(&self) -> u32 {
        self.literals
            .iter()
            .map(|l| l.var.index())
            .max()
            .unwrap_or(0)
    }
}

impl FromIterator<Literal> for Clause {
    fn from_iter<I: IntoIterator<Item = Literal>>(iter: I) -> Self {
        Clause::new(iter.into_iter().collect())
    }
}

/// A conjunction of clauses over `num_vars` variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CnfFormula {
    clauses: Vec<Clause>,
    num_vars: u32,
}

impl CnfFormula {
    /// Builds a formula whose variable count is the largest referenced index.
    pub fn new(clauses: Vec<Clause>) -> Self {
        let num_vars = clauses.iter().map(Clause::max_var).max().unwrap_or(0);
        CnfFormula { clauses, num_vars }
    }

    /// Builds a formula with an explicitly declared variable count.
    pub fn with_num_vars(clauses: Vec<Clause>, num_vars: u32) -> Result<Self, FormulaError> {
        let f = CnfFormula::new(clauses);
        f.declare_vars(num_vars)
    }

    /// Raises the declared variable count. Unreferenced variables are legal.
    pub fn declare_vars(mut self, num_vars: u32) -> Result<Self, FormulaError> {
        if num_vars < self.num_vars {
            return Err(FormulaError::VariableOutOfRange {
                var: self.num_vars,
                num_vars,
            });
        }
        self.num_vars = num_vars;
        Ok(self)
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Total literal occurrences across all clauses.
    pub fn num_literals(&self) -> usize {
        self.clauses.iter().map(Clause::len).sum()
    }

    /// Formula made of the first `count` clauses, same declared variable count.
    pub fn prefix(&self, count: usize) -> CnfFormula {
        CnfFormula {
            clauses: self.clauses[..count.min(self.clauses.len())].to_vec(),
            num_vars: self.num_vars,
        }
    }
}

/// Index of a truth assignment: bit `k - 1` holds the value of `a_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AssignmentIndex(pub u64);

impl AssignmentIndex {
    pub fn value(self) -> u64 {
        self.0
    }
}

impl fmt::Display for AssignmentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Variable values, ordered by variable index.
pub type Assignment = BTreeMap<VarId, bool>;

pub fn decode_assignment(j: AssignmentIndex, num_vars: u32) -> Result<Assignment, FormulaError> {
    if num_vars > MAX_ASSIGNMENT_VARS {
        return Err(FormulaError::TooManyVariables(num_vars));
    }
    if j.0 >> num_vars != 0 {
        return Err(FormulaError::AssignmentOutOfRange {
            index: j.0,
            num_vars,
        });
    }
    Ok((1..=num_vars)
        .map(|k| (VarId(k), (j.0 >> (k - 1)) & 1 == 1))
        .collect())
}

/// Inverse of [`decode_assignment`] over variables `1..=num_vars`.
pub fn encode_assignment(asg: &Assignment, num_vars: u32) -> Result<AssignmentIndex, FormulaError> {
    let mut j = 0u64;
    for k in 1..=num_vars {
        let v = VarId(k);
        if *asg.get(&v).ok_or(FormulaError::Unmapped(k))? {
            j |= 1 << (k - 1);
        }
    }
    Ok(AssignmentIndex(j))
}

pub fn eval_clause(clause: &Clause, asg: &Assignment) -> Result<bool, FormulaError> {
    // Evaluate every literal so that unmapped variables are always reported.
    let mut value = false;
    for lit in clause.literals() {
        let v = asg
            .get(&lit.var)
            .ok_or(FormulaError::Unmapped(lit.var.index()))?;
        value |= lit.eval(*v);
    }
    Ok(value)
}

pub fn eval_cnf(formula: &CnfFormula, asg: &Assignment) -> Result<bool, FormulaError> {
    let mut value = true;
    for clause in formula.clauses() {
        value &= eval_clause(clause, asg)?;
    }
    Ok(value)
}
