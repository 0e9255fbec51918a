//! The logical disk machine.
//!
//! A disk carries one truth mask as a pattern of black fields: field `j` is
//! black exactly when the represented formula is true under assignment `j`.
//! Stacking disks therefore computes OR (light passes a field only where
//! every disk is clear), and exposing a photosensitive blank on top of a
//! stack produces the complement of the stack. Clauses are built in WA1,
//! their negatives accumulate in WA2, and a photocell over WA2 reports
//! whether any field still passes light.
//!
//! Every action is charged to a [`CostLedger`] twice: once as a machine step
//! and once per field touched.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{AssignmentIndex, CnfFormula, Literal, VarId};
use crate::mask::{var_mask_direct, MaskError, TruthMask, DEFAULT_N_MAX, HARD_N_MAX};
use crate::saldo::VariableRegistry;
use crate::word::{parse_word, word_tokens, Token, WordError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MachineError {
    #[error("machine has halted; token {0} cannot be read")]
    Halted(Token),
    #[error("no disk for variable a{var}; machine holds {num_vars}")]
    UnknownVariable { var: u32, num_vars: u32 },
    #[error("blank supply exhausted")]
    BlanksExhausted,
    #[error("resolution {0} is not a power of two")]
    BadResolution(usize),
    #[error("operation needs a self-assembling machine")]
    NotSelfAssembling,
    #[error("assembling another variable would exceed the cap of {n_max} variables")]
    ResolutionLimit { n_max: u32 },
    #[error("{num_vars} variables exceeds the cap of {n_max}")]
    TooManyVars { num_vars: u32, n_max: u32 },
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Mask(#[from] MaskError),
}

/// What a disk is, for inventory and trace purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiskLabel {
    /// A variable disk. `slot` is the variable index in a fixed machine and
    /// the creation ordinal in a self-assembling one.
    Variable { slot: u32 },
    /// The photographed negative of clause number `clause` (0-based).
    ClauseNegative { clause: usize },
    /// A photosensitive sheet drawn from the blank supply.
    Blank,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disk {
    blackness: TruthMask,
    label: DiskLabel,
    photosensitive: bool,
    fixed: bool,
    flipped: bool,
    /// Set on the second copy made during assembly, which is stored after a
    /// one-field rotation of its photonegative.
    normalized: bool,
}

impl Disk {
    pub(crate) fn variable(slot: u32, blackness: TruthMask) -> Disk {
        Disk {
            blackness,
            label: DiskLabel::Variable { slot },
            photosensitive: false,
            fixed: true,
            flipped: false,
            normalized: false,
        }
    }

    /// A fully transparent photosensitive sheet.
    pub fn blank(resolution_vars: u32) -> Disk {
        Disk {
            blackness: TruthMask::zeros(resolution_vars),
            label: DiskLabel::Blank,
            photosensitive: true,
            fixed: false,
            flipped: false,
            normalized: false,
        }
    }

    pub fn blackness(&self) -> &TruthMask {
        &self.blackness
    }

    pub fn label(&self) -> DiskLabel {
        self.label
    }

    /// Number of fields `t`.
    pub fn resolution(&self) -> usize {
        self.blackness.width()
    }

    pub fn is_fixed(&self) -> bool {
        self.fixed
    }

    pub fn is_flipped(&self) -> bool {
        self.flipped
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_photosensitive(&self) -> bool {
        self.photosensitive
    }

    pub(crate) fn fix(&mut self) {
        self.fixed = true;
    }

    pub(crate) fn set_label(&mut self, label: DiskLabel) {
        self.label = label;
    }

    pub(crate) fn mark_normalized(&mut self) {
        self.normalized = true;
    }

    /// Blackens the sheet wherever `light` (a set of lit fields) reaches it.
    /// Returns false, changing nothing, for fixed or non-sensitive disks.
    fn expose(&mut self, light: &TruthMask) -> bool {
        if !self.photosensitive || self.fixed {
            return false;
        }
        self.blackness
            .or_assign(light)
            .expect("stack members share a resolution");
        true
    }

    pub(crate) fn rotate_fields(&mut self, fields: usize) {
        self.blackness = self.blackness.rotate_down(fields);
    }

    pub(crate) fn double_resolution(&mut self) {
        self.blackness = self.blackness.duplicate_bits();
    }
}

/// Builds the disk for `a_k` at `resolution` fields.
pub fn make_variable_disk(k: VarId, resolution: usize) -> Result<Disk, MachineError> {
    if !resolution.is_power_of_two() {
        return Err(MachineError::BadResolution(resolution));
    }
    let n = resolution.trailing_zeros();
    Ok(Disk::variable(k.index(), var_mask_direct(k, n)?))
}

/// Turns a disk over about the diameter between fields `t/2 - 1` and `t/2`.
/// The pattern is read backwards, which negates variable disks only.
pub fn flip_disk(disk: &Disk) -> Disk {
    let mut d = disk.clone();
    d.blackness = d.blackness.reverse();
    d.flipped = !d.flipped;
    d
}

/// A stack of disks and the OR of their blackness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkingArea {
    stack: Vec<Disk>,
    composite: TruthMask,
}

impl WorkingArea {
    pub fn new(resolution_vars: u32) -> Self {
        WorkingArea {
            stack: Vec::new(),
            composite: TruthMask::zeros(resolution_vars),
        }
    }

    pub fn stack(&self) -> &[Disk] {
        &self.stack
    }

    pub fn len(&self) -> usize {
        self.stack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stack.is_empty()
    }

    /// Black fields of the whole stack.
    pub fn composite(&self) -> &TruthMask {
        &self.composite
    }

    pub fn push(&mut self, disk: Disk) {
        self.composite
            .or_assign(&disk.blackness)
            .expect("disk resolution must match the working area");
        self.stack.push(disk);
    }

    pub fn pop(&mut self) -> Option<Disk> {
        let d = self.stack.pop();
        self.recompute();
        d
    }

    pub fn clear(&mut self) -> Vec<Disk> {
        let out = std::mem::take(&mut self.stack);
        self.recompute();
        out
    }

    fn top_mut(&mut self) -> Option<&mut Disk> {
        self.stack.last_mut()
    }

    fn below_top(&self) -> TruthMask {
        let n = self.composite.num_vars();
        let mut below = TruthMask::zeros(n);
        let count = self.stack.len().saturating_sub(1);
        for d in &self.stack[..count] {
            below.or_assign(&d.blackness).expect("uniform resolution");
        }
        below
    }

    fn recompute(&mut self) {
        let mut c = TruthMask::zeros(self.composite.num_vars());
        for d in &self.stack {
            c.or_assign(&d.blackness).expect("uniform resolution");
        }
        self.composite = c;
    }

    /// Illuminates from below. A photoactive source develops the topmost
    /// disk if it is an unfixed photosensitive sheet, blackening it wherever
    /// light passes the disks beneath. Returns the fields that let light out
    /// of the top of the stack.
    pub(crate) fn illuminate(&mut self, photoactive: bool) -> TruthMask {
        if photoactive
            && self
                .stack
                .last()
                .is_some_and(|d| d.photosensitive && !d.fixed)
        {
            let light = self.below_top().not();
            if let Some(top) = self.top_mut() {
                top.expose(&light);
            }
            self.recompute();
        }
        self.composite.not()
    }

    pub(crate) fn rotate_top(&mut self, fields: usize) {
        if let Some(top) = self.top_mut() {
            top.rotate_fields(fields);
        }
        self.recompute();
    }

    pub(crate) fn double_resolution(&mut self) {
        for d in &mut self.stack {
            d.double_resolution();
        }
        self.composite = self.composite.duplicate_bits();
    }
}

/// `true` iff some field of the stack is transparent.
pub fn photocell(area: &WorkingArea) -> bool {
    !area.composite.is_all_ones()
}

/// The inner state `(mu, nu, s)` plus halting status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineState {
    pub mu: usize,
    pub nu: usize,
    pub s: bool,
    pub halted: bool,
    pub output: Option<bool>,
}

impl MachineState {
    fn initial() -> Self {
        MachineState {
            mu: 0,
            nu: 0,
            s: true,
            halted: false,
            output: None,
        }
    }
}

/// Transition rules, clause commands and assembly steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "7a")]
    PushLiteral,
    #[serde(rename = "7b")]
    HaltAtOpen,
    #[serde(rename = "7c")]
    Proceed,
    #[serde(rename = "7d")]
    FinishClause,
    #[serde(rename = "7e")]
    HaltUnsat,
    #[serde(rename = "7f")]
    HaltSat,
    #[serde(rename = "i")]
    Expose,
    #[serde(rename = "ii")]
    MoveToWa2,
    #[serde(rename = "iii")]
    ClearWa1,
    #[serde(rename = "iv")]
    Photocell,
    #[serde(rename = "v")]
    UpdateS,
    #[serde(rename = "g0")]
    G0,
    #[serde(rename = "g1")]
    G1,
    #[serde(rename = "g2")]
    G2,
    #[serde(rename = "g3")]
    G3,
}

impl Rule {
    pub fn tag(self) -> &'static str {
        match self {
            Rule::PushLiteral => "7a",
            Rule::HaltAtOpen => "7b",
            Rule::Proceed => "7c",
            Rule::FinishClause => "7d",
            Rule::HaltUnsat => "7e",
            Rule::HaltSat => "7f",
            Rule::Expose => "i",
            Rule::MoveToWa2 => "ii",
            Rule::ClearWa1 => "iii",
            Rule::Photocell => "iv",
            Rule::UpdateS => "v",
            Rule::G0 => "g0",
            Rule::G1 => "g1",
            Rule::G2 => "g2",
            Rule::G3 => "g3",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A clause command or assembly step executed while handling one token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubStep {
    pub rule: Rule,
    pub field_ops: u64,
    pub blanks: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    /// 0-based ordinal of the token in the input word.
    pub step: usize,
    pub token: Token,
    pub rule: Rule,
    pub before: MachineState,
    pub after: MachineState,
    /// Field operations charged while handling this token, sub-steps included.
    pub field_ops: u64,
    pub sub: Vec<SubStep>,
}

impl TraceEvent {
    /// `step=3 token=] rule=7d mu=0 nu=1 s=1 field_ops+=24`, with
    /// ` out=B` on halting events and the sub-step breakdown appended when
    /// `detail` is set.
    pub fn render_line(&self, detail: bool) -> String {
        let mut line = format!(
            "step={} token={} rule={} mu={} nu={} s={} field_ops+={}",
            self.step,
            self.token,
            self.rule,
            self.after.mu,
            self.after.nu,
            u8::from(self.after.s),
            self.field_ops
        );
        if let Some(out) = self.after.output {
            line.push_str(&format!(" out={}", u8::from(out)));
        }
        if detail && !self.sub.is_empty() {
            let parts: Vec<String> = self
                .sub
                .iter()
                .map(|s| format!("{}:{}", s.rule, s.field_ops))
                .collect();
            line.push_str(" sub=");
            line.push_str(&parts.join(","));
        }
        line
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_line(false))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    /// One per token consumed, per clause command, and per assembly step.
    pub machine_steps: u64,
    /// Per-field primitive reads and writes.
    pub field_ops: u64,
    pub blanks_consumed: u64,
    pub assembly_blanks: u64,
    pub clause_blanks: u64,
    pub disks_in_sa: usize,
    /// Variable disks copied because every copy was already in use.
    pub disks_duplicated: u64,
    pub g_cycles: u64,
    /// Current field count `t`.
    pub resolution: usize,
    /// `2 pi / t` radians.
    pub min_field_angle: f64,
}

impl CostLedger {
    fn new(resolution: usize) -> Self {
        CostLedger {
            machine_steps: 0,
            field_ops: 0,
            blanks_consumed: 0,
            assembly_blanks: 0,
            clause_blanks: 0,
            disks_in_sa: 0,
            disks_duplicated: 0,
            g_cycles: 0,
            resolution,
            min_field_angle: 2.0 * PI / resolution as f64,
        }
    }

    pub(crate) fn set_resolution(&mut self, t: usize) {
        self.resolution = t;
        self.min_field_angle = 2.0 * PI / t as f64;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhotocellMode {
    /// The test inspects every field: `t` field operations.
    #[default]
    Scan,
    /// An idealised single-reading detector: one field operation.
    Analog,
}

/// How WA2's contents are kept from developing further under test light.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IlluminationModel {
    /// Clause negatives are fixed before they move to WA2; one kind of lamp.
    #[default]
    FixOnMove,
    /// WA2 has its own lamp that does not trigger the photochemistry.
    DistinctSources,
    /// Neither safeguard. The last clause negative keeps developing under
    /// the photocell lamp, which is what goes wrong without one of the two.
    Unprotected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineConfig {
    pub photocell: PhotocellMode,
    pub illumination: IlluminationModel,
    /// Command (iii) puts WA1's disks back into storage. When off, storage
    /// acts as an unlimited inventory of copies and used disks are discarded.
    pub return_to_storage: bool,
    /// `None` for an unlimited blank supply.
    pub blank_supply: Option<u64>,
    pub n_max: u32,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            photocell: PhotocellMode::Scan,
            illumination: IlluminationModel::FixOnMove,
            return_to_storage: true,
            blank_supply: None,
            n_max: DEFAULT_N_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Mode {
    Fixed { num_vars: u32 },
    SelfAssembling(VariableRegistry),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "SAT")]
    Sat,
    #[serde(rename = "UNSAT")]
    Unsat,
}

impl Verdict {
    pub fn from_bool(sat: bool) -> Self {
        if sat {
            Verdict::Sat
        } else {
            Verdict::Unsat
        }
    }

    pub fn is_sat(self) -> bool {
        self == Verdict::Sat
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Sat => "SAT",
            Verdict::Unsat => "UNSAT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub verdict: Verdict,
    pub ledger: CostLedger,
    pub trace: Vec<TraceEvent>,
    pub tokens_consumed: usize,
    /// Tokens left unread after an early halt.
    pub tokens_unconsumed: usize,
    pub literals_pushed: usize,
    pub clauses_finished: usize,
    /// The rule that stopped the machine.
    pub halted_by: Rule,
}

#[derive(Debug, Clone)]
pub struct Machine {
    pub(crate) config: MachineConfig,
    pub(crate) resolution_vars: u32,
    pub(crate) storage: Vec<Disk>,
    pub(crate) wa1: WorkingArea,
    pub(crate) wa2: WorkingArea,
    pub(crate) aa: WorkingArea,
    pub(crate) discarded: usize,
    pub(crate) state: MachineState,
    pub(crate) ledger: CostLedger,
    pub(crate) mode: Mode,
    pub(crate) blanks_left: Option<u64>,
    pub(crate) pending: Vec<SubStep>,
    literals_pushed: usize,
    clauses_finished: usize,
    last_rule: Option<Rule>,
}

impl Machine {
    pub(crate) fn with_mode(mode: Mode, resolution_vars: u32, config: MachineConfig) -> Self {
        let ledger = CostLedger::new(1usize << resolution_vars);
        Machine {
            config,
            resolution_vars,
            storage: Vec::new(),
            wa1: WorkingArea::new(resolution_vars),
            wa2: WorkingArea::new(resolution_vars),
            aa: WorkingArea::new(resolution_vars),
            discarded: 0,
            state: MachineState::initial(),
            ledger,
            mode,
            blanks_left: config.blank_supply,
            pending: Vec::new(),
            literals_pushed: 0,
            clauses_finished: 0,
            last_rule: None,
        }
    }

    /// A fixed machine holding one disk for each of `a_1 .. a_n`.
    pub fn ldo(num_vars: u32, config: MachineConfig) -> Result<Self, MachineError> {
        let n_max = config.n_max.min(HARD_N_MAX);
        if num_vars > n_max {
            return Err(MachineError::TooManyVars { num_vars, n_max });
        }
        let mut m = Machine::with_mode(Mode::Fixed { num_vars }, num_vars, config);
        for k in 1..=num_vars {
            let var = VarId::new(k).expect("k >= 1");
            m.storage
                .push(Disk::variable(k, var_mask_direct(var, num_vars)?));
        }
        m.ledger.disks_in_sa = m.storage.len();
        Ok(m)
    }

    pub fn config(&self) -> &MachineConfig {
        &self.config
    }

    pub fn state(&self) -> MachineState {
        self.state
    }

    pub fn ledger(&self) -> &CostLedger {
        &self.ledger
    }

    pub fn resolution(&self) -> usize {
        1usize << self.resolution_vars
    }

    pub fn wa1(&self) -> &WorkingArea {
        &self.wa1
    }

    pub fn wa2(&self) -> &WorkingArea {
        &self.wa2
    }

    pub fn assembly_area(&self) -> &WorkingArea {
        &self.aa
    }

    pub fn storage(&self) -> &[Disk] {
        &self.storage
    }

    /// Disks thrown away: scrap from assembly, plus WA1 disks when storage
    /// returns are disabled.
    pub fn discarded(&self) -> usize {
        self.discarded
    }

    pub fn registry(&self) -> Option<&VariableRegistry> {
        match &self.mode {
            Mode::SelfAssembling(r) => Some(r),
            Mode::Fixed { .. } => None,
        }
    }

    pub(crate) fn charge(&mut self, field_ops: u64) {
        self.ledger.field_ops += field_ops;
    }

    fn t(&self) -> u64 {
        self.resolution() as u64
    }

    pub(crate) fn take_blank(&mut self) -> Result<Disk, MachineError> {
        if let Some(left) = self.blanks_left.as_mut() {
            if *left == 0 {
                return Err(MachineError::BlanksExhausted);
            }
            *left -= 1;
        }
        self.ledger.blanks_consumed += 1;
        Ok(Disk::blank(self.resolution_vars))
    }

    /// Pattern a variable disk in `slot` must carry at the current resolution.
    pub(crate) fn slot_pattern(&self, slot: u32) -> TruthMask {
        let k = match &self.mode {
            Mode::Fixed { .. } => slot,
            Mode::SelfAssembling(r) => r.disks() - slot + 1,
        };
        let var = VarId::new(k).expect("slots start at 1");
        var_mask_direct(var, self.resolution_vars).expect("slot within resolution")
    }

    /// Takes a disk for `slot` out of storage, copying one if every copy is
    /// in use. With storage returns disabled the stored disk stays put.
    pub(crate) fn take_from_storage(&mut self, slot: u32) -> Disk {
        let label = DiskLabel::Variable { slot };
        let found = self.storage.iter().position(|d| d.label == label);
        let disk = match (found, self.config.return_to_storage) {
            (Some(i), true) => self.storage.remove(i),
            (Some(i), false) => self.storage[i].clone(),
            (None, _) => {
                self.ledger.disks_duplicated += 1;
                Disk::variable(slot, self.slot_pattern(slot))
            }
        };
        self.ledger.disks_in_sa = self.storage.len();
        disk
    }

    pub(crate) fn put_in_storage(&mut self, mut disk: Disk) {
        if disk.flipped {
            disk = flip_disk(&disk);
        }
        self.storage.push(disk);
        self.ledger.disks_in_sa = self.storage.len();
    }

    fn slot_for(&mut self, var: VarId) -> Result<u32, MachineError> {
        match &self.mode {
            Mode::Fixed { num_vars } => {
                if var.index() > *num_vars {
                    Err(MachineError::UnknownVariable {
                        var: var.index(),
                        num_vars: *num_vars,
                    })
                } else {
                    Ok(var.index())
                }
            }
            Mode::SelfAssembling(_) => self.ensure_variable(var),
        }
    }

    fn ensure_running(&self, token: Token) -> Result<(), MachineError> {
        if self.state.halted {
            Err(MachineError::Halted(token))
        } else {
            Ok(())
        }
    }

    /// Places the disk for `lit` on WA1, turned over if negated.
    pub fn push_literal(&mut self, lit: Literal) -> Result<(), MachineError> {
        self.ensure_running(Token::Literal(lit))?;
        let slot = self.slot_for(lit.var)?;
        let disk = self.take_from_storage(slot);
        let disk = if lit.negated { flip_disk(&disk) } else { disk };
        self.wa1.push(disk);
        self.state.mu += 1;
        self.literals_pushed += 1;
        self.charge(self.t());
        self.ledger.machine_steps += 1;
        Ok(())
    }

    /// Commands (i) and the removal half of (ii): expose a blank on top of
    /// WA1 and lift it off. The returned disk is black exactly where light
    /// passed WA1, i.e. it carries the negated clause.
    pub fn expose_clause_negative(&mut self) -> Result<Disk, MachineError> {
        self.ensure_running(Token::CloseBracket)?;
        let blank = self.take_blank()?;
        self.ledger.clause_blanks += 1;
        self.wa1.push(blank);
        self.wa1.illuminate(true);
        let mut negative = self.wa1.pop().expect("blank was just placed");
        negative.set_label(DiskLabel::ClauseNegative {
            clause: self.clauses_finished,
        });
        self.charge(self.t());
        self.ledger.machine_steps += 1;
        Ok(negative)
    }

    fn record(&mut self, rule: Rule, field_ops_before: u64, blanks_before: u64) {
        self.pending.push(SubStep {
            rule,
            field_ops: self.ledger.field_ops - field_ops_before,
            blanks: self.ledger.blanks_consumed - blanks_before,
        });
    }

    /// Commands (i)-(v) for a closing bracket.
    pub fn finish_clause(&mut self) -> Result<(), MachineError> {
        self.ensure_running(Token::CloseBracket)?;
        let t = self.t();

        let (f0, b0) = (self.ledger.field_ops, self.ledger.blanks_consumed);
        let mut negative = self.expose_clause_negative()?;
        self.record(Rule::Expose, f0, b0);

        let (f0, b0) = (self.ledger.field_ops, self.ledger.blanks_consumed);
        if self.config.illumination == IlluminationModel::FixOnMove {
            negative.fix();
        }
        self.wa2.push(negative);
        self.state.nu += 1;
        self.charge(t);
        self.ledger.machine_steps += 1;
        self.record(Rule::MoveToWa2, f0, b0);

        let (f0, b0) = (self.ledger.field_ops, self.ledger.blanks_consumed);
        for disk in self.wa1.clear() {
            if self.config.return_to_storage {
                self.put_in_storage(disk);
            } else {
                self.discarded += 1;
            }
        }
        self.state.mu = 0;
        self.ledger.machine_steps += 1;
        self.record(Rule::ClearWa1, f0, b0);

        let (f0, b0) = (self.ledger.field_ops, self.ledger.blanks_consumed);
        let photoactive = self.config.illumination != IlluminationModel::DistinctSources;
        self.wa2.illuminate(photoactive);
        let signal = photocell(&self.wa2);
        self.charge(match self.config.photocell {
            PhotocellMode::Scan => t,
            PhotocellMode::Analog => 1,
        });
        self.ledger.machine_steps += 1;
        self.record(Rule::Photocell, f0, b0);

        let (f0, b0) = (self.ledger.field_ops, self.ledger.blanks_consumed);
        self.state.s = signal;
        self.ledger.machine_steps += 1;
        self.record(Rule::UpdateS, f0, b0);

        self.clauses_finished += 1;
        Ok(())
    }

    fn halt(&mut self, output: bool) {
        self.state.halted = true;
        self.state.output = Some(output);
        self.state.s = output;
    }

    /// Reads one token and applies the matching transition.
    pub fn step(&mut self, ordinal: usize, token: Token) -> Result<TraceEvent, MachineError> {
        self.ensure_running(token)?;
        let before = self.state;
        let ops_before = self.ledger.field_ops;
        self.pending.clear();
        let rule = match token {
            Token::Literal(lit) => {
                self.push_literal(lit)?;
                Rule::PushLiteral
            }
            Token::OpenBracket => {
                self.ledger.machine_steps += 1;
                if self.state.s {
                    Rule::Proceed
                } else {
                    self.halt(false);
                    Rule::HaltAtOpen
                }
            }
            Token::CloseBracket => {
                self.ledger.machine_steps += 1;
                self.finish_clause()?;
                Rule::FinishClause
            }
            Token::End => {
                self.ledger.machine_steps += 1;
                if self.state.s {
                    self.halt(true);
                    Rule::HaltSat
                } else {
                    self.halt(false);
                    Rule::HaltUnsat
                }
            }
        };
        self.last_rule = Some(rule);
        Ok(TraceEvent {
            step: ordinal,
            token,
            rule,
            before,
            after: self.state,
            field_ops: self.ledger.field_ops - ops_before,
            sub: std::mem::take(&mut self.pending),
        })
    }

    /// Runs a complete word. The word is validated against the grammar
    /// first; reading stops at the first halting transition.
    pub fn run(&mut self, tokens: &[Token]) -> Result<RunReport, MachineError> {
        parse_word(tokens)?;
        let mut trace = Vec::with_capacity(tokens.len());
        for (i, &token) in tokens.iter().enumerate() {
            trace.push(self.step(i, token)?);
            if self.state.halted {
                break;
            }
        }
        let consumed = trace.len();
        Ok(RunReport {
            verdict: Verdict::from_bool(self.state.output == Some(true)),
            ledger: self.ledger.clone(),
            trace,
            tokens_consumed: consumed,
            tokens_unconsumed: tokens.len() - consumed,
            literals_pushed: self.literals_pushed,
            clauses_finished: self.clauses_finished,
            halted_by: self.last_rule.expect("a valid word has at least one token"),
        })
    }

    /// Fields of WA2 that pass light after a run that read the whole word,
    /// in the machine's own field numbering. Empty after an early halt.
    pub fn transparent_fields(&self) -> Vec<usize> {
        if self.last_rule == Some(Rule::HaltAtOpen) || !self.state.halted {
            return Vec::new();
        }
        self.wa2.composite().iter_zeros().collect()
    }
}

/// Runs `formula` on a fixed machine sized to its variable count.
pub fn run_ldo(
    formula: &CnfFormula,
    config: MachineConfig,
) -> Result<(Machine, RunReport), MachineError> {
    let mut machine = Machine::ldo(formula.num_vars(), config)?;
    let report = machine.run(&word_tokens(formula))?;
    Ok((machine, report))
}

/// One photocell per field: the assignments whose field in WA2 passes light.
pub fn enumerate_models(machine: &Machine) -> Vec<AssignmentIndex> {
    machine
        .transparent_fields()
        .into_iter()
        .map(|j| AssignmentIndex(j as u64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::{parse_word_text, tokenize};

    fn v(k: u32) -> VarId {
        VarId::new(k).unwrap()
    }

    fn m(s: &str) -> TruthMask {
        s.parse().unwrap()
    }

    fn ldo(n: u32) -> Machine {
        Machine::ldo(n, MachineConfig::default()).unwrap()
    }

    fn run_text(text: &str, n: u32) -> (Machine, RunReport) {
        let mut machine = ldo(n);
        let report = machine.run(&tokenize(text).unwrap()).unwrap();
        (machine, report)
    }

    #[test]
    fn variable_disks() {
        assert_eq!(
            make_variable_disk(v(3), 8).unwrap().blackness(),
            &m("11110000")
        );
        assert_eq!(make_variable_disk(v(1), 2).unwrap().blackness(), &m("10"));
        assert_eq!(
            make_variable_disk(v(1), 8).unwrap().blackness(),
            &m("10101010")
        );
        assert_eq!(
            make_variable_disk(v(1), 6),
            Err(MachineError::BadResolution(6))
        );
        assert!(make_variable_disk(v(4), 8).is_err());
    }

    #[test]
    fn flipping() {
        let a3 = make_variable_disk(v(3), 8).unwrap();
        assert_eq!(flip_disk(&a3).blackness(), &m("00001111"));
        let a1 = make_variable_disk(v(1), 8).unwrap();
        assert_eq!(flip_disk(&a1).blackness(), &a1.blackness().not());
        let mut odd = Disk::blank(2);
        odd.blackness = m("1000");
        assert_eq!(flip_disk(&odd).blackness(), &m("0001"));
        assert_ne!(flip_disk(&odd).blackness(), &m("0111"));
        assert!(flip_disk(&a3).is_flipped());
        assert!(!flip_disk(&flip_disk(&a3)).is_flipped());
    }

    #[test]
    fn stack_is_transparent_only_at_five() {
        let mut machine = ldo(3);
        machine.push_literal(Literal::neg(v(1))).unwrap();
        machine.push_literal(Literal::pos(v(2))).unwrap();
        machine.push_literal(Literal::neg(v(3))).unwrap();
        let clear: Vec<usize> = machine.wa1().composite().iter_zeros().collect();
        assert_eq!(clear, vec![5]);
        assert_eq!(machine.state().mu, 3);
        assert_eq!(machine.ledger().field_ops, 24);
    }

    #[test]
    fn push_single_and_repeated() {
        let mut machine = ldo(1);
        machine.push_literal(Literal::pos(v(1))).unwrap();
        assert_eq!(machine.wa1().composite(), &m("10"));
        machine.push_literal(Literal::pos(v(1))).unwrap();
        assert_eq!(machine.wa1().composite(), &m("10"));
        assert_eq!(machine.state().mu, 2);
        assert_eq!(machine.ledger().field_ops, 4);
        assert_eq!(machine.ledger().disks_duplicated, 1);
    }

    #[test]
    fn push_unknown_variable() {
        let mut machine = ldo(2);
        assert_eq!(
            machine.push_literal(Literal::pos(v(3))),
            Err(MachineError::UnknownVariable {
                var: 3,
                num_vars: 2
            })
        );
    }

    #[test]
    fn exposure_gives_complement() {
        let mut machine = ldo(3);
        machine.push_literal(Literal::pos(v(1))).unwrap();
        machine.push_literal(Literal::neg(v(3))).unwrap();
        let neg = machine.expose_clause_negative().unwrap();
        assert_eq!(neg.blackness(), &m("01010000"));
        assert_eq!(machine.ledger().blanks_consumed, 1);

        let mut empty = ldo(3);
        assert_eq!(
            empty.expose_clause_negative().unwrap().blackness(),
            &m("11111111")
        );

        let mut taut = ldo(1);
        taut.push_literal(Literal::pos(v(1))).unwrap();
        taut.push_literal(Literal::neg(v(1))).unwrap();
        assert!(taut
            .expose_clause_negative()
            .unwrap()
            .blackness()
            .is_all_zeros());
    }

    #[test]
    fn finite_blank_supply() {
        let config = MachineConfig {
            blank_supply: Some(1),
            ..MachineConfig::default()
        };
        let mut machine = Machine::ldo(1, config).unwrap();
        machine.finish_clause().unwrap();
        assert_eq!(machine.finish_clause(), Err(MachineError::BlanksExhausted));
    }

    #[test]
    fn finish_table_clause() {
        let mut machine = ldo(3);
        machine.push_literal(Literal::pos(v(1))).unwrap();
        machine.push_literal(Literal::neg(v(3))).unwrap();
        machine.finish_clause().unwrap();
        assert_eq!(machine.wa2().composite(), &m("01010000"));
        assert!(machine.state().s);
        assert_eq!(machine.state().mu, 0);
        assert_eq!(machine.state().nu, 1);
        assert!(machine.wa1().is_empty());
        assert_eq!(machine.storage().len(), 3);
        assert!(machine.wa2().stack()[0].is_fixed());
    }

    #[test]
    fn finish_empty_clause_darkens() {
        let mut machine = ldo(2);
        machine.finish_clause().unwrap();
        assert!(machine.wa2().composite().is_all_ones());
        assert!(!machine.state().s);
    }

    #[test]
    fn contradiction_on_one_variable() {
        let mut machine = ldo(1);
        machine.push_literal(Literal::pos(v(1))).unwrap();
        machine.finish_clause().unwrap();
        machine.push_literal(Literal::neg(v(1))).unwrap();
        machine.finish_clause().unwrap();
        assert_eq!(machine.wa2().composite(), &m("11"));
        assert!(!machine.state().s);
    }

    #[test]
    fn photocell_readings() {
        let mut area = WorkingArea::new(3);
        assert!(photocell(&area));
        let mut d = Disk::blank(3);
        d.blackness = TruthMask::ones(3);
        area.push(d);
        assert!(!photocell(&area));
        let mut partial = WorkingArea::new(3);
        let mut d = Disk::blank(3);
        d.blackness = m("01010000");
        partial.push(d);
        assert!(photocell(&partial));
    }

    #[test]
    fn step_rules() {
        let mut machine = ldo(1);
        let ev = machine.step(0, Token::OpenBracket).unwrap();
        assert_eq!(ev.rule, Rule::Proceed);
        assert_eq!(ev.before, ev.after);

        let mut dark = ldo(1);
        let prefix = tokenize("[a1][~a1]").unwrap();
        for (i, t) in prefix.iter().enumerate() {
            dark.step(i, *t).unwrap();
        }
        assert_eq!(
            (dark.state().mu, dark.state().nu, dark.state().s),
            (0, 2, false)
        );
        let ev = dark.step(6, Token::OpenBracket).unwrap();
        assert_eq!(ev.rule, Rule::HaltAtOpen);
        assert_eq!(ev.after.output, Some(false));
        assert!(matches!(
            dark.step(7, Token::End),
            Err(MachineError::Halted(Token::End))
        ));

        let mut sat = ldo(1);
        let ev = sat.step(0, Token::End).unwrap();
        assert_eq!(ev.rule, Rule::HaltSat);
        assert_eq!(ev.after.output, Some(true));
    }

    #[test]
    fn run_examples() {
        let (machine, report) = run_text("[a1 ~a3]$", 3);
        assert_eq!(report.verdict, Verdict::Sat);
        assert_eq!(report.halted_by, Rule::HaltSat);
        let models: Vec<u64> = enumerate_models(&machine).iter().map(|a| a.0).collect();
        assert_eq!(models, vec![0, 1, 2, 3, 5, 7]);

        let (machine, report) = run_text("[a1][~a1]$", 1);
        assert_eq!(report.verdict, Verdict::Unsat);
        assert_eq!(report.halted_by, Rule::HaltUnsat);
        assert!(enumerate_models(&machine).is_empty());

        let (machine, report) = run_text("$", 0);
        assert_eq!(report.verdict, Verdict::Sat);
        assert_eq!(report.ledger.field_ops, 0);
        assert_eq!(enumerate_models(&machine).len(), 1);
    }

    #[test]
    fn early_halt_leaves_tokens() {
        let (machine, report) = run_text("[a1][~a1][a1 a1]$", 1);
        assert_eq!(report.halted_by, Rule::HaltAtOpen);
        assert_eq!(report.tokens_consumed, 7);
        assert_eq!(report.tokens_unconsumed, 4);
        assert_eq!(report.clauses_finished, 2);
        assert!(enumerate_models(&machine).is_empty());
    }

    #[test]
    fn run_rejects_ill_formed_word() {
        let mut machine = ldo(1);
        assert!(matches!(
            machine.run(&tokenize("[a1]").unwrap()),
            Err(MachineError::Word(WordError::MissingEnd))
        ));
    }

    #[test]
    fn enumerate_other_clause() {
        let (machine, _) = run_text("[~a1 a2 ~a3]$", 3);
        let models: Vec<u64> = enumerate_models(&machine).iter().map(|a| a.0).collect();
        assert_eq!(models, vec![0, 1, 2, 3, 4, 6, 7]);
    }

    #[test]
    fn trace_line_format() {
        let (_, report) = run_text("[a1 ~a3]$", 3);
        assert_eq!(
            report.trace[3].to_string(),
            "step=3 token=] rule=7d mu=0 nu=1 s=1 field_ops+=24"
        );
        assert_eq!(
            report.trace[3].render_line(true),
            "step=3 token=] rule=7d mu=0 nu=1 s=1 field_ops+=24 sub=i:8,ii:8,iii:0,iv:8,v:0"
        );
        assert_eq!(
            report.trace[4].to_string(),
            "step=4 token=$ rule=7f mu=0 nu=1 s=1 field_ops+=0 out=1"
        );
    }

    #[test]
    fn cost_contract_sample_formula() {
        let (_, report) = run_text("[a1 ~a3]$", 3);
        assert_eq!(report.ledger.field_ops, 8 * (2 + 3));
        assert_eq!(report.ledger.machine_steps, 5 + 5);
    }

    #[test]
    fn analog_photocell_costs_one() {
        let config = MachineConfig {
            photocell: PhotocellMode::Analog,
            ..MachineConfig::default()
        };
        let f = parse_word_text("[a1 ~a3]$").unwrap();
        let (_, report) = run_ldo(&f, config).unwrap();
        assert_eq!(report.ledger.field_ops, 8 * 2 + 8 * 2 + 1);
    }

    #[test]
    fn illumination_models() {
        let f = parse_word_text("[a1 ~a3][a2]$").unwrap();
        let run = |illumination| {
            let config = MachineConfig {
                illumination,
                ..MachineConfig::default()
            };
            let (machine, report) = run_ldo(&f, config).unwrap();
            (report.verdict, enumerate_models(&machine))
        };
        let fixed = run(IlluminationModel::FixOnMove);
        assert_eq!(fixed.0, Verdict::Sat);
        assert_eq!(run(IlluminationModel::DistinctSources), fixed);
        // Without either safeguard the photocell lamp blackens the newest
        // negative until the stack goes dark.
        assert_eq!(run(IlluminationModel::Unprotected).0, Verdict::Unsat);
    }

    #[test]
    fn storage_returns_disabled() {
        let config = MachineConfig {
            return_to_storage: false,
            ..MachineConfig::default()
        };
        let f = parse_word_text("[a1 a1 ~a2][a2]$").unwrap();
        let (machine, report) = run_ldo(&f, config).unwrap();
        assert_eq!(report.ledger.disks_in_sa, 2);
        assert_eq!(report.ledger.disks_duplicated, 0);
        assert_eq!(machine.discarded(), 4);
        let (_, default_report) = run_ldo(&f, MachineConfig::default()).unwrap();
        assert_eq!(
            default_report.ledger.machine_steps,
            report.ledger.machine_steps
        );
        assert_eq!(default_report.ledger.field_ops, report.ledger.field_ops);
        assert_eq!(default_report.ledger.disks_in_sa, 3);
    }

    #[test]
    fn returned_disks_are_turned_back() {
        let f = parse_word_text("[~a1 ~a2]$").unwrap();
        let (machine, _) = run_ldo(&f, MachineConfig::default()).unwrap();
        assert!(machine.storage().iter().all(|d| !d.is_flipped()));
        for d in machine.storage() {
            let DiskLabel::Variable { slot } = d.label() else {
                panic!("non-variable disk in storage");
            };
            assert_eq!(d.blackness(), &var_mask_direct(v(slot), 2).unwrap());
        }
    }

    #[test]
    fn too_many_vars() {
        let config = MachineConfig {
            n_max: 4,
            ..MachineConfig::default()
        };
        assert_eq!(
            Machine::ldo(5, config).unwrap_err(),
            MachineError::TooManyVars {
                num_vars: 5,
                n_max: 4
            }
        );
    }
}
