//! A simulator of the logical disk machine for CNF satisfiability.
//!
//! Formulas are evaluated four ways, all selectable by name through
//! [`engine::EngineRegistry`]:
//!
//! * `mask`: digitwise algebra on `2^n`-bit truth tables ([`mask`]).
//! * `ldo`: the fixed disk machine, one transparency disk per variable
//!   ([`machine`]).
//! * `saldo`: the self-assembling machine that builds disks on demand
//!   ([`saldo`]).
//! * `oracle`: brute-force evaluation of the symbolic formula ([`oracle`]).
//!
//! The disk machines keep a [`machine::CostLedger`] that counts machine
//! steps and per-field operations separately.

pub mod engine;
pub mod formula;
pub mod machine;
pub mod mask;
pub mod oracle;
pub mod random;
pub mod saldo;
pub mod word;

pub use engine::{Engine, EngineConfig, EngineError, EngineRegistry, Outcome};
pub use formula::{AssignmentIndex, Clause, CnfFormula, Literal, VarId};
pub use machine::{CostLedger, Machine, MachineConfig, RunReport, Verdict};
pub use mask::TruthMask;
