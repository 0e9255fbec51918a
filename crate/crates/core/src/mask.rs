//! Truth masks: the `2^n`-bit string of a formula's values over all
//! assignments, and the digitwise algebra on them.
//!
//! Bit `j` of a mask is the value of the represented formula under
//! assignment `j`. The text form is most-significant-bit first, so the
//! mask of `a1 + ~a3` over three variables renders as `10101111`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::formula::{AssignmentIndex, CnfFormula, Literal, VarId};

/// Default cap on the variable count of any mask the engines will build.
pub const DEFAULT_N_MAX: u32 = 24;

/// Absolute ceiling; beyond this a single mask would not fit in memory.
pub const HARD_N_MAX: u32 = 32;

const WORD: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error("mask widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("variable a{var} out of range for {num_vars} variables")]
    VarOutOfRange { var: u32, num_vars: u32 },
    #[error("{num_vars} variables exceeds the mask cap of {cap}")]
    TooManyVars { num_vars: u32, cap: u32 },
    #[error("invalid mask text: {0}")]
    Parse(String),
}

/// A `2^n`-bit truth table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthMask {
    num_vars: u32,
    words: Vec<u64>,
}

fn word_count(width: usize) -> usize {
    width.div_ceil(WORD)
}

impl TruthMask {
    pub fn zeros(num_vars: u32) -> Self {
        assert!(num_vars <= HARD_N_MAX, "mask over {num_vars} variables");
        let width = 1usize << num_vars;
        TruthMask {
            num_vars,
            words: vec![0; word_count(width)],
        }
    }

    pub fn ones(num_vars: u32) -> Self {
        let mut m = TruthMask::zeros(num_vars);
        m.words.iter_mut().for_each(|w| *w = !0);
        m.clear_tail();
        m
    }

    pub fn from_fn(num_vars: u32, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut m = TruthMask::zeros(num_vars);
        for j in 0..m.width() {
            if f(j) {
                m.set(j, true);
            }
        }
        m
    }

    /// Number of variables `n`; the width is `2^n`.
    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn width(&self) -> usize {
        1usize << self.num_vars
    }

    pub fn get(&self, j: usize) -> bool {
        assert!(j < self.width(), "bit {j} out of range");
        (self.words[j / WORD] >> (j % WORD)) & 1 == 1
    }

    pub fn set(&mut self, j: usize, value: bool) {
        assert!(j < self.width(), "bit {j} out of range");
        let bit = 1u64 << (j % WORD);
        if value {
            self.words[j / WORD] |= bit;
        } else {
            self.words[j / WORD] &= !bit;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_all_zeros(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_all_ones(&self) -> bool {
        self.count_ones() == self.width() as u64
    }

    /// Indices of set bits in increasing order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD + b)
            })
        })
    }

    /// Indices of clear bits in increasing order.
    pub fn iter_zeros(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width()).filter(move |&j| !self.get(j))
    }

    fn check_width(&self, other: &TruthMask) -> Result<(), MaskError> {
        if self.num_vars != other.num_vars {
            Err(MaskError::WidthMismatch(self.width(), other.width()))
        } else {
            Ok(())
        }
    }

    fn clear_tail(&mut self) {
        let width = self.width();
        if !width.is_multiple_of(WORD) {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << (width % WORD)) - 1;
        }
    }

    fn zip_with(&self, other: &TruthMask, op: impl Fn(u64, u64) -> u64) -> Result<Self, MaskError> {
        self.check_width(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(TruthMask {
            num_vars: self.num_vars,
            words,
        })
    }

    pub fn or(&self, other: &TruthMask) -> Result<Self, MaskError> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn and(&self, other: &TruthMask) -> Result<Self, MaskError> {
        self.zip_with(other, |a, b| a & b)
    }

    /// In-place OR, used by stacks that accumulate a composite.
    pub fn or_assign(&mut self, other: &TruthMask) -> Result<(), MaskError> {
        self.check_width(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    pub fn not(&self) -> Self {
        let mut m = TruthMask {
            num_vars: self.num_vars,
            words: self.words.iter().map(|w| !w).collect(),
        };
        m.clear_tail();
        m
    }

    /// Bit `j` of the result is bit `t - 1 - j` of `self`.
    pub fn reverse(&self) -> Self {
        let t = self.width();
        TruthMask::from_fn(self.num_vars, |j| self.get(t - 1 - j))
    }

    /// Each bit duplicated in place: bit `j` of the result is bit `j / 2`.
    /// The represented function is unchanged; every existing variable moves
    /// up by one position and a new lowest variable appears.
    pub fn duplicate_bits(&self) -> Self {
        TruthMask::from_fn(self.num_vars + 1, |j| self.get(j / 2))
    }

    /// The string repeated twice: bit `j` of the result is bit `j mod t`.
    pub fn repeat_twice(&self) -> Self {
        let t = self.width();
        TruthMask::from_fn(self.num_vars + 1, |j| self.get(j % t))
    }

    /// Cyclic shift toward lower indices: bit `j` of the result is bit
    /// `(j + shift) mod t` of `self`.
    pub fn rotate_down(&self, shift: usize) -> Self {
        let t = self.width();
        let shift = shift % t;
        TruthMask::from_fn(self.num_vars, |j| self.get((j + shift) % t))
    }
}

impl fmt::Display for TruthMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in (0..self.width()).rev() {
            f.write_str(if self.get(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for TruthMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num_vars <= 8 {
            write!(f, "TruthMask({self})")
        } else {
            write!(
                f,
                "TruthMask(n={}, ones={})",
                self.num_vars,
                self.count_ones()
            )
        }
    }
}

impl FromStr for TruthMask {
    type Err = MaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let width = s.len();
        if width == 0 || !width.is_power_of_two() {
            return Err(MaskError::Parse(format!(
                "length {width} is not a power of two"
            )));
        }
        let num_vars = width.trailing_zeros();
        if num_vars > HARD_N_MAX {
            return Err(MaskError::TooManyVars {
                num_vars,
                cap: HARD_N_MAX,
            });
        }
        let mut m = TruthMask::zeros(num_vars);
        for (pos, c) in s.chars().enumerate() {
            let j = width - 1 - pos;
            match c {
                '1' => m.set(j, true),
                '0' => {}
                other => return Err(MaskError::Parse(format!("unexpected {other:?}"))),
            }
        }
        Ok(m)
    }
}

impl Serialize for TruthMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TruthMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn check_var(k: VarId, num_vars: u32) -> Result<(), MaskError> {
    if k.index() > num_vars {
        return Err(MaskError::VarOutOfRange {
            var: k.index(),
            num_vars,
        });
    }
    if num_vars > HARD_N_MAX {
        return Err(MaskError::TooManyVars {
            num_vars,
            cap: HARD_N_MAX,
        });
    }
    Ok(())
}

fn kronecker(a: usize, b: usize) -> usize {
    usize::from(a == b)
}

/// Variable mask from the closed form
/// `T_r(a_k) = sum_s sum_l delta(r, s + 2^k l)` with `s` in
/// `2^(k-1) ..= 2^k - 1` and `l` in `0 ..= 2^(n-k) - 1`.
///
/// Evaluated term by term for every `r`, which costs `O(t^2 / 2)`. It is only
/// used to cross-check [`var_mask_direct`].
pub fn var_mask_closed_form(k: VarId, num_vars: u32) -> Result<TruthMask, MaskError> {
    check_var(k, num_vars)?;
    let k = k.index();
    let s_range = (1usize << (k - 1))..(1usize << k);
    let l_range = 0..(1usize << (num_vars - k));
    let mut mask = TruthMask::zeros(num_vars);
    for r in 0..mask.width() {
        let mut total = 0;
        for s in s_range.clone() {
            for l in l_range.clone() {
                total += kronecker(r, s + (l << k));
            }
        }
        debug_assert!(total <= 1, "closed form produced digit {total}");
        mask.set(r, total == 1);
    }
    Ok(mask)
}

/// Variable mask by the doubling construction: `a_k` first appears at `n = k`
/// as ones over the upper half, and each added variable repeats the string.
pub fn var_mask_direct(k: VarId, num_vars: u32) -> Result<TruthMask, MaskError> {
    check_var(k, num_vars)?;
    let k = k.index();
    let half = 1usize << (k - 1);
    let mut mask = TruthMask::from_fn(k, |j| j >= half);
    for _ in k..num_vars {
        mask = mask.repeat_twice();
    }
    Ok(mask)
}

pub fn or_mask(q: &TruthMask, r: &TruthMask) -> Result<TruthMask, MaskError> {
    q.or(r)
}

pub fn and_mask(q: &TruthMask, r: &TruthMask) -> Result<TruthMask, MaskError> {
    q.and(r)
}

pub fn not_mask(q: &TruthMask) -> TruthMask {
    q.not()
}

pub fn reverse_mask(q: &TruthMask) -> TruthMask {
    q.reverse()
}

fn check_cap(formula: &CnfFormula, cap: u32) -> Result<(), MaskError> {
    let cap = cap.min(HARD_N_MAX);
    if formula.num_vars() > cap {
        Err(MaskError::TooManyVars {
            num_vars: formula.num_vars(),
            cap,
        })
    } else {
        Ok(())
    }
}

fn literal_mask(lit: &Literal, num_vars: u32) -> Result<TruthMask, MaskError> {
    let m = var_mask_direct(lit.var, num_vars)?;
    Ok(if lit.negated { m.not() } else { m })
}

/// AND over clauses of the OR of literal masks.
pub fn cnf_mask_direct(formula: &CnfFormula) -> Result<TruthMask, MaskError> {
    cnf_mask_direct_capped(formula, DEFAULT_N_MAX)
}

pub fn cnf_mask_direct_capped(formula: &CnfFormula, n_max: u32) -> Result<TruthMask, MaskError> {
    check_cap(formula, n_max)?;
    let n = formula.num_vars();
    let mut acc = TruthMask::ones(n);
    for clause in formula.clauses() {
        let mut clause_mask = TruthMask::zeros(n);
        for lit in clause.literals() {
            clause_mask.or_assign(&literal_mask(lit, n)?)?;
        }
        acc = acc.and(&clause_mask)?;
    }
    Ok(acc)
}

/// Same result as [`cnf_mask_direct`] using only OR and NOT:
/// `~C = ~C_1 + ... + ~C_m`, then one final negation.
pub fn cnf_mask_demorgan(formula: &CnfFormula) -> Result<TruthMask, MaskError> {
    cnf_mask_demorgan_capped(formula, DEFAULT_N_MAX)
}

pub fn cnf_mask_demorgan_capped(formula: &CnfFormula, n_max: u32) -> Result<TruthMask, MaskError> {
    check_cap(formula, n_max)?;
    let n = formula.num_vars();
    let mut negated = TruthMask::zeros(n);
    for clause in formula.clauses() {
        let mut clause_mask = TruthMask::zeros(n);
        for lit in clause.literals() {
            clause_mask = or_mask(&clause_mask, &literal_mask(lit, n)?)?;
        }
        negated = or_mask(&negated, &not_mask(&clause_mask))?;
    }
    Ok(not_mask(&negated))
}

pub fn models_of_mask(mask: &TruthMask) -> Vec<AssignmentIndex> {
    mask.iter_ones()
        .map(|j| AssignmentIndex(j as u64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Clause;

    fn v(k: u32) -> VarId {
        VarId::new(k).unwrap()
    }

    fn m(s: &str) -> TruthMask {
        s.parse().unwrap()
    }

    fn sample_formula() -> CnfFormula {
        CnfFormula::new(vec![Clause::new(vec![
            Literal::pos(v(1)),
            Literal::neg(v(3)),
        ])])
    }

    #[test]
    fn closed_form_masks_n3() {
        assert_eq!(
            var_mask_closed_form(v(1), 3).unwrap().to_string(),
            "10101010"
        );
        assert_eq!(
            var_mask_closed_form(v(3), 3).unwrap().to_string(),
            "11110000"
        );
        assert_eq!(var_mask_closed_form(v(1), 1).unwrap().to_string(), "10");
    }

    #[test]
    fn doubling_masks() {
        assert_eq!(var_mask_direct(v(2), 3).unwrap().to_string(), "11001100");
        assert_eq!(var_mask_direct(v(2), 2).unwrap().to_string(), "1100");
        assert_eq!(
            var_mask_direct(v(4), 4).unwrap().to_string(),
            "1111111100000000"
        );
    }

    #[test]
    fn var_out_of_range() {
        assert_eq!(
            var_mask_direct(v(4), 3),
            Err(MaskError::VarOutOfRange {
                var: 4,
                num_vars: 3
            })
        );
        assert!(var_mask_closed_form(v(2), 1).is_err());
    }

    #[test]
    fn or_examples() {
        assert_eq!(
            or_mask(&m("10101010"), &m("00001111")).unwrap(),
            m("10101111")
        );
        let x = m("10011100");
        assert_eq!(or_mask(&x, &TruthMask::zeros(3)).unwrap(), x);
        assert_eq!(or_mask(&x, &x).unwrap(), x);
    }

    #[test]
    fn and_examples() {
        let x = m("10011100");
        assert_eq!(and_mask(&x, &TruthMask::ones(3)).unwrap(), x);
        assert_eq!(
            and_mask(&m("10101010"), &m("11110000")).unwrap(),
            m("10100000")
        );
        assert!(and_mask(&x, &not_mask(&x)).unwrap().is_all_zeros());
    }

    #[test]
    fn width_mismatch() {
        assert_eq!(
            or_mask(&m("10"), &m("1010")),
            Err(MaskError::WidthMismatch(2, 4))
        );
    }

    #[test]
    fn not_examples() {
        assert_eq!(not_mask(&m("11110000")), m("00001111"));
        assert_eq!(not_mask(&TruthMask::zeros(4)), TruthMask::ones(4));
        let x = m("1011");
        assert_eq!(not_mask(&not_mask(&x)), x);
    }

    #[test]
    fn reverse_examples() {
        assert_eq!(reverse_mask(&m("11110000")), m("00001111"));
        assert_eq!(reverse_mask(&m("1001")), m("1001"));
        assert_eq!(reverse_mask(&m("11001100")), not_mask(&m("11001100")));
    }

    #[test]
    fn reverse_is_not_negation_in_general() {
        let x = m("1000");
        assert_eq!(reverse_mask(&x), m("0001"));
        assert_ne!(reverse_mask(&x), not_mask(&x));
    }

    #[test]
    fn sample_formula_masks() {
        let f = sample_formula();
        assert_eq!(cnf_mask_direct(&f).unwrap(), m("10101111"));
        assert_eq!(cnf_mask_demorgan(&f).unwrap(), m("10101111"));
    }

    #[test]
    fn three_literal_clause_false_only_at_five() {
        let f = CnfFormula::new(vec![Clause::new(vec![
            Literal::neg(v(1)),
            Literal::pos(v(2)),
            Literal::neg(v(3)),
        ])]);
        let mask = cnf_mask_direct(&f).unwrap();
        assert_eq!(mask.iter_zeros().collect::<Vec<_>>(), vec![5]);
    }

    #[test]
    fn empty_clause_and_empty_formula() {
        let unsat = CnfFormula::with_num_vars(vec![Clause::empty()], 3).unwrap();
        assert_eq!(cnf_mask_direct(&unsat).unwrap(), m("00000000"));
        assert_eq!(cnf_mask_demorgan(&unsat).unwrap(), m("00000000"));
        let empty = CnfFormula::default();
        assert_eq!(cnf_mask_demorgan(&empty).unwrap().to_string(), "1");
        assert_eq!(cnf_mask_direct(&empty).unwrap().to_string(), "1");
    }

    #[test]
    fn models_examples() {
        let models: Vec<u64> = models_of_mask(&m("10101111"))
            .into_iter()
            .map(|a| a.0)
            .collect();
        assert_eq!(models, vec![0, 1, 2, 3, 5, 7]);
        assert!(models_of_mask(&TruthMask::zeros(3)).is_empty());
        assert_eq!(models_of_mask(&TruthMask::ones(2)).len(), 4);
    }

    #[test]
    fn cap_enforced() {
        let f = CnfFormula::with_num_vars(vec![], 25).unwrap();
        assert_eq!(
            cnf_mask_direct(&f),
            Err(MaskError::TooManyVars {
                num_vars: 25,
                cap: 24
            })
        );
        assert!(cnf_mask_direct_capped(&f, 4).is_err());
    }

    #[test]
    fn duplicate_and_rotate() {
        assert_eq!(m("10").duplicate_bits(), m("1100"));
        assert_eq!(m("1010").duplicate_bits(), m("11001100"));
        assert_eq!(m("1010").repeat_twice(), m("10101010"));
        // black {0,1} of 4, shifted one field down, lands on {3,0}
        assert_eq!(m("0011").rotate_down(1), m("1001"));
        assert_eq!(m("0011").rotate_down(4), m("0011"));
    }

    #[test]
    fn text_form_rejects_bad_input() {
        assert!("101".parse::<TruthMask>().is_err());
        assert!("1x".parse::<TruthMask>().is_err());
        assert!("".parse::<TruthMask>().is_err());
    }

    #[test]
    fn wide_mask_tail_stays_clear() {
        let ones = TruthMask::ones(7);
        assert_eq!(ones.count_ones(), 128);
        assert!(ones.not().is_all_zeros());
        let one = TruthMask::ones(0);
        assert_eq!(one.count_ones(), 1);
        assert_eq!(one.not().count_ones(), 0);
    }
}
