//! Self-assembly: a machine that starts with a single variable disk and
//! builds one more, finer disk each time the input names a new variable.
//!
//! The assembly cycle runs in the assembly area AA under the photoactive
//! lamp:
//!
//! * g0: the finest disk goes to AA with a blank on top; exposure leaves its
//!   negative on top.
//! * g1: every disk doubles its field count, the negative turns by one new
//!   field, and a second blank is exposed over the pair.
//! * g2: that sheet turns by two fields and is exposed again; the result,
//!   the alternating pattern at the new resolution, is lifted and fixed.
//! * g3: AA is cleared, the new disk is photographed once more for a second
//!   copy, and both copies go to storage.
//!
//! Variables are numbered by first appearance. The disk created `i`-th of
//! `n` has period `2^(n - i + 1)`, so the most recent one is the finest.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::formula::{Assignment, AssignmentIndex, CnfFormula, FormulaError, VarId};
use crate::machine::{
    CostLedger, Disk, DiskLabel, Machine, MachineConfig, MachineError, Mode, Rule, RunReport,
};
use crate::mask::HARD_N_MAX;
use crate::word::word_tokens;

/// Default angle below which the precision report warns, in radians.
pub const DEFAULT_ANGLE_THRESHOLD: f64 = 1e-6;

/// Binds input variable names to assembled disks in order of appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableRegistry {
    names: Vec<VarId>,
    #[serde(skip)]
    ordinals: HashMap<VarId, u32>,
    disks: u32,
}

impl VariableRegistry {
    fn new() -> Self {
        VariableRegistry {
            names: Vec::new(),
            ordinals: HashMap::new(),
            disks: 1,
        }
    }

    /// Variable disks the machine has, bound or not.
    pub fn disks(&self) -> u32 {
        self.disks
    }

    /// Bound names in creation order; position `i` holds ordinal `i + 1`.
    pub fn names(&self) -> &[VarId] {
        &self.names
    }

    pub fn ordinal(&self, name: VarId) -> Option<u32> {
        self.ordinals.get(&name).copied()
    }

    /// Assignment bit that carries the variable with `ordinal`.
    fn bit_of(&self, ordinal: u32) -> u32 {
        self.disks - ordinal
    }

    fn bind(&mut self, name: VarId) -> u32 {
        self.names.push(name);
        let ordinal = self.names.len() as u32;
        self.ordinals.insert(name, ordinal);
        ordinal
    }

    /// The machine field that corresponds to assignment `j` of the original
    /// numbering over `num_vars` variables. Unbound machine variables read
    /// as false.
    pub fn field_for(&self, j: AssignmentIndex) -> usize {
        self.names
            .iter()
            .enumerate()
            .filter(|(_, name)| (j.0 >> name.bit()) & 1 == 1)
            .map(|(i, _)| 1usize << self.bit_of(i as u32 + 1))
            .sum()
    }
}

/// Cyclic counterclockwise turn by `fields` fields. Fields are numbered
/// clockwise, so content moves toward lower indices.
pub fn rotate_ccw(disk: &Disk, fields: usize) -> Disk {
    let mut d = disk.clone();
    d.rotate_fields(fields);
    d
}

/// Variable values read from machine field `j`.
pub fn decode_model_saldo(
    registry: &VariableRegistry,
    j: AssignmentIndex,
) -> Result<Assignment, FormulaError> {
    if j.0 >> registry.disks != 0 {
        return Err(FormulaError::AssignmentOutOfRange {
            index: j.0,
            num_vars: registry.disks,
        });
    }
    Ok(registry
        .names
        .iter()
        .enumerate()
        .map(|(i, &name)| (name, (j.0 >> registry.bit_of(i as u32 + 1)) & 1 == 1))
        .collect())
}

impl Machine {
    /// A self-assembling machine holding two copies of its one initial disk.
    pub fn saldo(config: MachineConfig) -> Self {
        let mut m = Machine::with_mode(Mode::SelfAssembling(VariableRegistry::new()), 1, config);
        for _ in 0..2 {
            let disk = Disk::variable(1, m.slot_pattern(1));
            m.put_in_storage(disk);
        }
        m
    }

    fn registry_mut(&mut self) -> Result<&mut VariableRegistry, MachineError> {
        match &mut self.mode {
            Mode::SelfAssembling(r) => Ok(r),
            Mode::Fixed { .. } => Err(MachineError::NotSelfAssembling),
        }
    }

    fn disk_count(&self) -> Result<u32, MachineError> {
        self.registry()
            .map(VariableRegistry::disks)
            .ok_or(MachineError::NotSelfAssembling)
    }

    /// Doubles the field count of every disk in every area. Each pattern
    /// keeps representing the same function.
    pub fn double_resolution(&mut self) {
        let disks = self.storage.len() + self.wa1.len() + self.wa2.len() + self.aa.len();
        for d in &mut self.storage {
            d.double_resolution();
        }
        self.wa1.double_resolution();
        self.wa2.double_resolution();
        self.aa.double_resolution();
        self.resolution_vars += 1;
        let t = self.resolution();
        self.ledger.set_resolution(t);
        self.charge((disks * t) as u64);
    }

    fn assembly_blank(&mut self) -> Result<Disk, MachineError> {
        let blank = self.take_blank()?;
        self.ledger.assembly_blanks += 1;
        Ok(blank)
    }

    fn g_step_done(&mut self, rule: Rule, field_ops_before: u64, blanks_before: u64) {
        self.ledger.machine_steps += 1;
        self.pending.push(crate::machine::SubStep {
            rule,
            field_ops: self.ledger.field_ops - field_ops_before,
            blanks: self.ledger.blanks_consumed - blanks_before,
        });
    }

    /// One assembly cycle g0-g3. Returns the new finest disk.
    pub fn g_cycle(&mut self) -> Result<Disk, MachineError> {
        let finest = self.disk_count()?;
        let n_max = self.config.n_max.min(HARD_N_MAX);
        if finest + 1 > n_max {
            return Err(MachineError::ResolutionLimit { n_max });
        }

        // g0
        let (f0, b0) = (self.ledger.field_ops, self.ledger.blanks_consumed);
        let t = self.resolution() as u64;
        let source = self.take_from_storage(finest);
        self.aa.push(source);
        let blank = self.assembly_blank()?;
        self.aa.push(blank);
        self.aa.illuminate(true);
        self.charge(2 * t);
        self.g_step_done(Rule::G0, f0, b0);

        // g1
        let (f0, b0) = (self.ledger.field_ops, self.ledger.blanks_consumed);
        self.double_resolution();
        let t = self.resolution() as u64;
        self.aa.rotate_top(1);
        let blank = self.assembly_blank()?;
        self.aa.push(blank);
        self.aa.illuminate(true);
        self.charge(2 * t);
        self.g_step_done(Rule::G1, f0, b0);

        // g2
        let (f0, b0) = (self.ledger.field_ops, self.ledger.blanks_consumed);
        self.aa.rotate_top(2);
        self.aa.illuminate(true);
        let mut new_disk = self.aa.pop().expect("g1 left a sheet on top");
        new_disk.fix();
        let slot = finest + 1;
        new_disk.set_label(DiskLabel::Variable { slot });
        self.charge(3 * t);
        self.g_step_done(Rule::G2, f0, b0);

        // g3
        let (f0, b0) = (self.ledger.field_ops, self.ledger.blanks_consumed);
        for d in self.aa.clear() {
            if matches!(d.label(), DiskLabel::Variable { .. }) {
                self.put_in_storage(d);
            } else {
                self.discarded += 1;
            }
        }
        self.aa.push(new_disk);
        let blank = self.assembly_blank()?;
        self.aa.push(blank);
        self.aa.illuminate(true);
        let mut copy = self.aa.pop().expect("blank was just placed");
        copy.fix();
        // The photonegative of an alternating pattern is the same pattern
        // turned by one field; store it in the positive orientation.
        let mut copy = rotate_ccw(&copy, 1);
        copy.set_label(DiskLabel::Variable { slot });
        copy.mark_normalized();
        let new_disk = self.aa.pop().expect("new disk under the copy");
        self.charge(3 * t);
        self.g_step_done(Rule::G3, f0, b0);

        self.registry_mut()?.disks += 1;
        self.ledger.g_cycles += 1;
        debug_assert_eq!(copy.blackness(), new_disk.blackness());
        debug_assert_eq!(new_disk.blackness(), &self.slot_pattern(slot));
        self.put_in_storage(copy);
        self.put_in_storage(new_disk.clone());
        Ok(new_disk)
    }

    /// Slot for `name`, assembling a new disk on first appearance. The first
    /// name takes the disk the machine started with.
    pub fn ensure_variable(&mut self, name: VarId) -> Result<u32, MachineError> {
        let registry = self.registry_mut()?;
        if let Some(ordinal) = registry.ordinal(name) {
            return Ok(ordinal);
        }
        if (registry.names().len() as u32) < registry.disks() {
            return Ok(registry.bind(name));
        }
        self.g_cycle()?;
        Ok(self.registry_mut()?.bind(name))
    }

    /// True when storage holds two copies of the finest disk.
    pub fn finest_inventory_ok(&self) -> bool {
        let Some(registry) = self.registry() else {
            return false;
        };
        let slot = registry.disks();
        self.storage()
            .iter()
            .filter(|d| d.label() == DiskLabel::Variable { slot } && !d.is_flipped())
            .count()
            >= 2
    }
}

/// Runs `formula` on a fresh self-assembling machine.
pub fn run_saldo(
    formula: &CnfFormula,
    config: MachineConfig,
) -> Result<(Machine, RunReport), MachineError> {
    let mut machine = Machine::saldo(config);
    let report = machine.run(&word_tokens(formula))?;
    Ok((machine, report))
}

/// Satisfying assignments of the original numbering over `num_vars`
/// variables, read through the registry from a finished run.
pub fn saldo_models(machine: &Machine, num_vars: u32) -> Vec<AssignmentIndex> {
    let Some(registry) = machine.registry() else {
        return Vec::new();
    };
    let fields = machine.transparent_fields();
    if fields.is_empty() {
        return Vec::new();
    }
    let t = machine.resolution();
    let mut lit = vec![false; t];
    for f in fields {
        lit[f] = true;
    }
    (0..1u64 << num_vars)
        .map(AssignmentIndex)
        .filter(|&j| lit[registry.field_for(j)])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub min_field_angle: f64,
    pub fields_per_disk: usize,
    pub disks_created: u64,
    pub blanks_consumed: u64,
    pub assembly_blanks: u64,
    pub clause_blanks: u64,
    pub angle_threshold: f64,
    pub warning: Option<String>,
}

pub fn precision_report(ledger: &CostLedger, angle_threshold: f64) -> PrecisionReport {
    let angle = 2.0 * PI / ledger.resolution as f64;
    let warning = (angle < angle_threshold).then(|| {
        format!(
            "field angle {angle:.3e} rad is below {angle_threshold:.1e} rad; \
             real components cannot resolve fields this small"
        )
    });
    PrecisionReport {
        min_field_angle: angle,
        fields_per_disk: ledger.resolution,
        disks_created: ledger.resolution.trailing_zeros() as u64,
        blanks_consumed: ledger.blanks_consumed,
        assembly_blanks: ledger.assembly_blanks,
        clause_blanks: ledger.clause_blanks,
        angle_threshold,
        warning,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::flip_disk;
    use crate::mask::{var_mask_direct, TruthMask};
    use crate::word::parse_word_text;

    fn v(k: u32) -> VarId {
        VarId::new(k).unwrap()
    }

    fn m(s: &str) -> TruthMask {
        s.parse().unwrap()
    }

    fn disk_with(pattern: &str) -> Disk {
        Disk::variable(1, pattern.parse().unwrap())
    }

    #[test]
    fn rotation() {
        assert_eq!(rotate_ccw(&disk_with("0011"), 1).blackness(), &m("1001"));
        assert_eq!(rotate_ccw(&disk_with("0011"), 4).blackness(), &m("0011"));
        assert_eq!(rotate_ccw(&disk_with("0011"), 0).blackness(), &m("0011"));
    }

    #[test]
    fn doubling_preserves_function() {
        let mut machine = Machine::saldo(MachineConfig::default());
        assert_eq!(machine.storage()[0].blackness(), &m("10"));
        machine.double_resolution();
        assert_eq!(machine.storage()[0].blackness(), &m("1100"));
        machine.double_resolution();
        assert_eq!(machine.storage()[0].blackness(), &m("11110000"));
        assert_eq!(machine.ledger().field_ops, 2 * 4 + 2 * 8);
        assert!((machine.ledger().min_field_angle - std::f64::consts::PI / 4.0).abs() < 1e-15);
        assert_eq!(m("1010").duplicate_bits(), m("11001100"));
        assert!(TruthMask::ones(1).duplicate_bits().is_all_ones());
    }

    #[test]
    fn first_cycle_builds_1010() {
        let mut machine = Machine::saldo(MachineConfig::default());
        let disk = machine.g_cycle().unwrap();
        assert_eq!(disk.blackness(), &m("1010"));
        assert!(disk.is_fixed());
        assert_eq!(machine.resolution(), 4);
        assert_eq!(machine.ledger().assembly_blanks, 3);
        assert!(machine.assembly_area().is_empty());
        assert_eq!(machine.discarded(), 1);
        assert!(machine.finest_inventory_ok());
        assert_eq!(machine.storage().len(), 4);
    }

    #[test]
    fn second_cycle_builds_10101010() {
        let mut machine = Machine::saldo(MachineConfig::default());
        machine.g_cycle().unwrap();
        let disk = machine.g_cycle().unwrap();
        assert_eq!(disk.blackness(), &m("10101010"));
        assert_eq!(disk.blackness(), &var_mask_direct(v(1), 3).unwrap());
    }

    #[test]
    fn stored_disks_keep_their_variables() {
        let mut machine = Machine::saldo(MachineConfig::default());
        for cycles in 1..=5u32 {
            machine.g_cycle().unwrap();
            let n = cycles + 1;
            for d in machine.storage() {
                let DiskLabel::Variable { slot } = d.label() else {
                    panic!("scrap in storage");
                };
                assert_eq!(d.blackness(), &var_mask_direct(v(n - slot + 1), n).unwrap());
            }
            assert_eq!(machine.storage().len(), 2 * n as usize);
        }
    }

    #[test]
    fn ensure_variable_binding() {
        let mut machine = Machine::saldo(MachineConfig::default());
        assert_eq!(machine.ensure_variable(v(7)).unwrap(), 1);
        assert_eq!(machine.resolution(), 2);
        assert_eq!(machine.ledger().field_ops, 0);
        assert_eq!(machine.ensure_variable(v(2)).unwrap(), 2);
        assert_eq!(machine.resolution(), 4);
        let before = machine.ledger().clone();
        assert_eq!(machine.ensure_variable(v(7)).unwrap(), 1);
        assert_eq!(machine.ledger(), &before);
    }

    #[test]
    fn ensure_variable_needs_saldo() {
        let mut machine = Machine::ldo(2, MachineConfig::default()).unwrap();
        assert_eq!(
            machine.ensure_variable(v(1)),
            Err(MachineError::NotSelfAssembling)
        );
        assert_eq!(machine.g_cycle(), Err(MachineError::NotSelfAssembling));
    }

    #[test]
    fn resolution_limit() {
        let config = MachineConfig {
            n_max: 2,
            ..MachineConfig::default()
        };
        let mut machine = Machine::saldo(config);
        machine.g_cycle().unwrap();
        assert_eq!(
            machine.g_cycle(),
            Err(MachineError::ResolutionLimit { n_max: 2 })
        );
    }

    #[test]
    fn registry_decoding() {
        let mut machine = Machine::saldo(MachineConfig::default());
        machine.ensure_variable(v(5)).unwrap();
        machine.ensure_variable(v(9)).unwrap();
        let r = machine.registry().unwrap();
        let at1 = decode_model_saldo(r, AssignmentIndex(1)).unwrap();
        assert_eq!((at1[&v(5)], at1[&v(9)]), (false, true));
        let at0 = decode_model_saldo(r, AssignmentIndex(0)).unwrap();
        assert!(at0.values().all(|b| !b));
        assert!(decode_model_saldo(r, AssignmentIndex(4)).is_err());

        // the decode rule agrees with the disks themselves
        for j in 0..4usize {
            let asg = decode_model_saldo(r, AssignmentIndex(j as u64)).unwrap();
            for (i, name) in r.names().iter().enumerate() {
                let pattern = machine.slot_pattern(i as u32 + 1);
                assert_eq!(pattern.get(j), asg[name]);
            }
        }

        let mut single = Machine::saldo(MachineConfig::default());
        single.ensure_variable(v(3)).unwrap();
        let asg = decode_model_saldo(single.registry().unwrap(), AssignmentIndex(1)).unwrap();
        assert!(asg[&v(3)]);
    }

    #[test]
    fn three_variable_run() {
        let f = parse_word_text("[a1 ~a3][a2 a3]$").unwrap();
        let (machine, report) = run_saldo(&f, MachineConfig::default()).unwrap();
        assert_eq!(report.ledger.g_cycles, 2);
        assert_eq!(report.ledger.blanks_consumed, 3 * 2 + 2);
        let precision = precision_report(&report.ledger, DEFAULT_ANGLE_THRESHOLD);
        assert_eq!(precision.blanks_consumed, 8);
        assert_eq!(precision.disks_created, 3);
        assert_eq!(precision.fields_per_disk, 8);
        assert!(precision.warning.is_none());
        let models: Vec<u64> = saldo_models(&machine, 3).iter().map(|a| a.0).collect();
        assert_eq!(models, vec![2, 3, 5, 7]);
    }

    #[test]
    fn precision_fresh_and_deep() {
        let machine = Machine::saldo(MachineConfig::default());
        let r = precision_report(machine.ledger(), DEFAULT_ANGLE_THRESHOLD);
        assert_eq!(r.min_field_angle, std::f64::consts::PI);
        assert!(r.warning.is_none());

        let mut deep = machine.ledger().clone();
        deep.resolution = 1 << 24;
        let r = precision_report(&deep, DEFAULT_ANGLE_THRESHOLD);
        assert!((r.min_field_angle - 3.745e-7).abs() < 1e-9);
        assert!(r.warning.is_some());
    }

    #[test]
    fn mid_clause_assembly_doubles_wa1() {
        let f = parse_word_text("[a1 a2]$").unwrap();
        let mut machine = Machine::saldo(MachineConfig::default());
        let tokens = word_tokens(&f);
        machine.step(0, tokens[0]).unwrap();
        machine.step(1, tokens[1]).unwrap();
        assert_eq!(machine.wa1().composite(), &m("10"));
        let ev = machine.step(2, tokens[2]).unwrap();
        let rules: Vec<Rule> = ev.sub.iter().map(|s| s.rule).collect();
        assert_eq!(rules, vec![Rule::G0, Rule::G1, Rule::G2, Rule::G3]);
        // a1 now has period 4, a2 period 2
        assert_eq!(machine.wa1().composite(), &m("1110"));
        assert_eq!(ev.sub.iter().map(|s| s.blanks).sum::<u64>(), 3);
    }

    #[test]
    fn flipped_disk_of_finest_is_negation() {
        let mut machine = Machine::saldo(MachineConfig::default());
        let d = machine.g_cycle().unwrap();
        assert_eq!(flip_disk(&d).blackness(), &d.blackness().not());
    }
}
