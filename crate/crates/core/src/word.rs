//! Input words and DIMACS CNF.
//!
//! The word syntax spells each clause as a bracketed run of literals and
//! ends the input with `$`:
//!
//! ```text
//! [a1 ~a3][~a1 a2 ~a3]$
//! ```
//!
//! Whitespace is ignored everywhere. DIMACS input follows the usual `p cnf`
//! conventions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Clause, CnfFormula, Literal, VarId};

/// Serialized as its text form: `[`, `]`, `$`, `a3`, `~a3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Token {
    OpenBracket,
    CloseBracket,
    End,
    Literal(Literal),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::OpenBracket => f.write_str("["),
            Token::CloseBracket => f.write_str("]"),
            Token::End => f.write_str("$"),
            Token::Literal(lit) => write!(f, "{lit}"),
        }
    }
}

impl FromStr for Token {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "[" => return Ok(Token::OpenBracket),
            "]" => return Ok(Token::CloseBracket),
            "$" => return Ok(Token::End),
            _ => {}
        }
        let (negated, rest) = match s.strip_prefix('~') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let var = rest
            .strip_prefix('a')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|d| d.parse().ok())
            .and_then(|k| VarId::new(k).ok())
            .ok_or(WordError::MalformedLiteral { offset: 0 })?;
        Ok(Token::Literal(Literal { var, negated }))
    }
}

impl From<Token> for String {
    fn from(token: Token) -> String {
        token.to_string()
    }
}

impl TryFrom<String> for Token {
    type Error = WordError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// A token and the byte offset where it starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Spanned {
    pub token: Token,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("unexpected character {ch:?} at offset {offset}")]
    UnknownChar { ch: char, offset: usize },
    #[error("malformed literal at offset {offset}")]
    MalformedLiteral { offset: usize },
    #[error("literal outside a clause at {at}")]
    LiteralOutsideClause { at: usize },
    #[error("empty input")]
    Empty,
    #[error("missing end marker `$`")]
    MissingEnd,
    #[error("nested `[` at {at}")]
    NestedBracket { at: usize },
    #[error("`]` without matching `[` at {at}")]
    UnbalancedClose { at: usize },
    #[error("clause opened at {at} is never closed")]
    UnclosedClause { at: usize },
    #[error("input continues after `$` at {at}")]
    TrailingTokens { at: usize },
}

/// Lexes word text into positioned tokens.
///
/// Only lexical structure and literal placement are checked here; bracket
/// nesting and the end marker are the parser's job.
pub fn tokenize_spanned(text: &str) -> Result<Vec<Spanned>, WordError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut inside = false;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let token = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'[' => {
                inside = true;
                i += 1;
                Token::OpenBracket
            }
            b']' => {
                inside = false;
                i += 1;
                Token::CloseBracket
            }
            b'$' => {
                i += 1;
                Token::End
            }
            b'~' | b'a' => {
                let negated = c == b'~';
                if negated {
                    i += 1;
                    if bytes.get(i) != Some(&b'a') {
                        return Err(WordError::MalformedLiteral { offset: start });
                    }
                }
                i += 1;
                let digits_start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let index: u32 = text[digits_start..i]
                    .parse()
                    .map_err(|_| WordError::MalformedLiteral { offset: start })?;
                let var =
                    VarId::new(index).map_err(|_| WordError::MalformedLiteral { offset: start })?;
                if !inside {
                    return Err(WordError::LiteralOutsideClause { at: start });
                }
                Token::Literal(Literal { var, negated })
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('\u{fffd}');
                return Err(WordError::UnknownChar { ch, offset: i });
            }
        };
        out.push(Spanned {
            token,
            offset: start,
        });
    }
    Ok(out)
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, WordError> {
    Ok(tokenize_spanned(text)?
        .into_iter()
        .map(|s| s.token)
        .collect())
}

/// Parses a token sequence of the form `[L ... L] ... [L ... L] $`.
///
/// Error positions are token indices.
pub fn parse_word(tokens: &[Token]) -> Result<CnfFormula, WordError> {
    if tokens.is_empty() {
        return Err(WordError::Empty);
    }
    let mut clauses = Vec::new();
    let mut open: Option<(usize, Vec<Literal>)> = None;
    for (at, token) in tokens.iter().enumerate() {
        match token {
            Token::OpenBracket => {
                if open.is_some() {
                    return Err(WordError::NestedBracket { at });
                }
                open = Some((at, Vec::new()));
            }
            Token::CloseBracket => match open.take() {
                Some((_, lits)) => clauses.push(Clause::new(lits)),
                None => return Err(WordError::UnbalancedClose { at }),
            },
            Token::Literal(lit) => match open.as_mut() {
                Some((_, lits)) => lits.push(*lit),
                None => return Err(WordError::LiteralOutsideClause { at }),
            },
            Token::End => {
                if let Some((opened, _)) = open {
                    return Err(WordError::UnclosedClause { at: opened });
                }
                if at + 1 != tokens.len() {
                    return Err(WordError::TrailingTokens { at: at + 1 });
                }
                return Ok(CnfFormula::new(clauses));
            }
        }
    }
    if let Some((opened, _)) = open {
        return Err(WordError::UnclosedClause { at: opened });
    }
    Err(WordError::MissingEnd)
}

/// Tokenizes and parses, reporting error positions as byte offsets.
pub fn parse_word_text(text: &str) -> Result<CnfFormula, WordError> {
    let spanned = tokenize_spanned(text)?;
    let tokens: Vec<Token> = spanned.iter().map(|s| s.token).collect();
    let offset = |at: usize| spanned.get(at).map(|s| s.offset).unwrap_or(text.len());
    parse_word(&tokens).map_err(|e| match e {
        WordError::NestedBracket { at } => WordError::NestedBracket { at: offset(at) },
        WordError::UnbalancedClose { at } => WordError::UnbalancedClose { at: offset(at) },
        WordError::LiteralOutsideClause { at } => {
            WordError::LiteralOutsideClause { at: offset(at) }
        }
        WordError::UnclosedClause { at } => WordError::UnclosedClause { at: offset(at) },
        WordError::TrailingTokens { at } => WordError::TrailingTokens { at: offset(at) },
        other => other,
    })
}

/// The token sequence the machine reads for `formula`.
pub fn word_tokens(formula: &CnfFormula) -> Vec<Token> {
    let mut out = Vec::with_capacity(formula.num_literals() + 2 * formula.num_clauses() + 1);
    for clause in formula.clauses() {
        out.push(Token::OpenBracket);
        out.extend(clause.literals().iter().copied().map(Token::Literal));
        out.push(Token::CloseBracket);
    }
    out.push(Token::End);
    out
}

pub fn encode_word(formula: &CnfFormula) -> String {
    let mut s = String::new();
    for clause in formula.clauses() {
        s.push('[');
        for (i, lit) in clause.literals().iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(&lit.to_string());
        }
        s.push(']');
    }
    s.push('$');
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimacsError {
    #[error("line {line}: missing `p cnf` header before clauses")]
    MissingHeader { line: usize },
    #[error("line {line}: duplicate `p cnf` header")]
    DuplicateHeader { line: usize },
    #[error("line {line}: malformed header")]
    BadHeader { line: usize },
    #[error("line {line}: invalid literal {text:?}")]
    BadLiteral { line: usize, text: String },
    #[error("line {line}: variable {var} exceeds declared count {declared}")]
    VarExceedsHeader {
        line: usize,
        var: u32,
        declared: u32,
    },
    #[error("final clause is not terminated by 0")]
    UnterminatedClause,
    #[error("no `p cnf` header")]
    NoHeader,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DimacsWarning {
    ClauseCountMismatch { declared: usize, found: usize },
}

impl fmt::Display for DimacsWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DimacsWarning::ClauseCountMismatch { declared, found } => write!(
                f,
                "header declares {declared} clauses but {found} were found"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimacsParse {
    pub formula: CnfFormula,
    pub warnings: Vec<DimacsWarning>,
}

/// Parses DIMACS CNF, keeping non-fatal findings as warnings.
pub fn parse_dimacs_with_warnings(text: &str) -> Result<DimacsParse, DimacsError> {
    let mut header: Option<(u32, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut pending = false;

    'lines: for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(DimacsError::DuplicateHeader { line });
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
                return Err(DimacsError::BadHeader { line });
            }
            let n = fields[2]
                .parse()
                .map_err(|_| DimacsError::BadHeader { line })?;
            let m = fields[3]
                .parse()
                .map_err(|_| DimacsError::BadHeader { line })?;
            header = Some((n, m));
            continue;
        }
        let Some((declared, _)) = header else {
            return Err(DimacsError::MissingHeader { line });
        };
        for word in trimmed.split_whitespace() {
            if word == "%" {
                break 'lines;
            }
            let value: i64 = word.parse().map_err(|_| DimacsError::BadLiteral {
                line,
                text: word.to_string(),
            })?;
            if value == 0 {
                clauses.push(Clause::new(std::mem::take(&mut current)));
                pending = false;
                continue;
            }
            let var = value.unsigned_abs();
            if var > declared as u64 {
                return Err(DimacsError::VarExceedsHeader {
                    line,
                    var: var.min(u32::MAX as u64) as u32,
                    declared,
                });
            }
            current.push(Literal::from_dimacs(value));
            pending = true;
        }
    }

    let (declared_vars, declared_clauses) = header.ok_or(DimacsError::NoHeader)?;
    if pending {
        return Err(DimacsError::UnterminatedClause);
    }
    let mut warnings = Vec::new();
    if clauses.len() != declared_clauses {
        warnings.push(DimacsWarning::ClauseCountMismatch {
            declared: declared_clauses,
            found: clauses.len(),
        });
    }
    let formula = CnfFormula::with_num_vars(clauses, declared_vars)
        .expect("literals were checked against the header");
    Ok(DimacsParse { formula, warnings })
}

pub fn parse_dimacs(text: &str) -> Result<CnfFormula, DimacsError> {
    parse_dimacs_with_warnings(text).map(|p| p.formula)
}

pub fn emit_dimacs(formula: &CnfFormula) -> String {
    let mut s = format!("p cnf {} {}\n", formula.num_vars(), formula.num_clauses());
    for clause in formula.clauses() {
        for lit in clause.literals() {
            s.push_str(&lit.to_dimacs().to_string());
            s.push(' ');
        }
        s.push_str("0\n");
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Word,
    Dimacs,
}

impl InputFormat {
    /// DIMACS if any line starts with a `p cnf` header, word otherwise.
    pub fn detect(text: &str) -> InputFormat {
        let is_header = |l: &str| {
            let mut it = l.split_whitespace();
            it.next() == Some("p") && it.next() == Some("cnf")
        };
        if text.lines().any(|l| is_header(l.trim_start())) {
            InputFormat::Dimacs
        } else {
            InputFormat::Word
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InputError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Dimacs(#[from] DimacsError),
}

pub fn parse_input(text: &str, format: InputFormat) -> Result<DimacsParse, InputError> {
    match format {
        InputFormat::Word => Ok(DimacsParse {
            formula: parse_word_text(text)?,
            warnings: Vec::new(),
        }),
        InputFormat::Dimacs => Ok(parse_dimacs_with_warnings(text)?),
    }
}
