//! Numeric fragment of a byte-pair-encoding vocabulary.
//!
//! Digits are grouped left to right into chunks of at most three on each
//! side of the decimal point; `-`, `.`, `,` and newline are single tokens.
//! Token identities are symbolic strings.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Token {
    /// One to three decimal digits.
    Digits(String),
    Minus,
    Point,
    Comma,
    Newline,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Digits(s) => f.write_str(s),
            Token::Minus => f.write_str("-"),
            Token::Point => f.write_str("."),
            Token::Comma => f.write_str(","),
            Token::Newline => f.write_str("\n"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("malformed decimal literal {0:?}")]
pub struct TokenFormatError(pub String);

fn push_groups(digits: &str, out: &mut Vec<Token>) {
    let bytes = digits.as_bytes();
    for chunk in bytes.chunks(3) {
        out.push(Token::Digits(String::from_utf8(chunk.to_vec()).expect("ascii digits")));
    }
}

/// Segments a finite decimal literal such as `-32.7914`.
pub fn tokenize_number(s: &str) -> Result<Vec<Token>, TokenFormatError> {
    let err = || TokenFormatError(s.to_string());
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let all_digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || frac_part.is_some_and(|f| !all_digits(f)) {
        return Err(err());
    }
    let mut out = Vec::new();
    if negative {
        out.push(Token::Minus);
    }
    push_groups(int_part, &mut out);
    if let Some(f) = frac_part {
        out.push(Token::Point);
        push_groups(f, &mut out);
    }
    Ok(out)
}

/// Tokenizes a CSV block of numbers; blanks between cells are ignored.
pub fn tokenize_csv(text: &str) -> Result<Vec<Token>, TokenFormatError> {
    let mut out = Vec::new();
    for line in text.split_inclusive('\n') {
        let (body, newline) = match line.strip_suffix('\n') {
            Some(b) => (b, true),
            None => (line, false),
        };
        let cells: Vec<&str> = body.split(',').collect();
        for (i, cell) in cells.iter().enumerate() {
            let cell = cell.trim();
            if !cell.is_empty() {
                out.extend(tokenize_number(cell)?);
            }
            if i + 1 < cells.len() {
                out.push(Token::Comma);
            }
        }
        if newline {
            out.push(Token::Newline);
        }
    }
    Ok(out)
}

/// The restricted numeric vocabulary: every 1-, 2- and 3-digit string plus
/// the four separators.
#[derive(Clone, Copy, Debug, Default)]
pub struct NumericVocabulary;

impl NumericVocabulary {
    pub fn members(&self) -> Vec<Token> {
        let mut out = Vec::new();
        for width in 1..=3u32 {
            for n in 0..10usize.pow(width) {
                out.push(Token::Digits(format!("{n:0w$}", w = width as usize)));
            }
        }
        out.extend([Token::Point, Token::Minus, Token::Comma, Token::Newline]);
        out
    }

    pub fn contains(&self, token: &Token) -> bool {
        match token {
            Token::Digits(s) => (1..=3).contains(&s.len()) && s.bytes().all(|b| b.is_ascii_digit()),
            _ => true,
        }
    }
}

/// Token budget for numbers printed with a fixed digit precision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokenModel {
    pub digit_precision: usize,
}

impl TokenModel {
    pub fn new(digit_precision: usize) -> Self {
        Self { digit_precision }
    }

    /// `ceil(N_digit / 3) + 3` tokens per number.
    ///
    /// The `+3` is kept as the formula states even though four separator
    /// kinds exist; a number only ever carries a subset of them.
    pub fn tokens_per_number(&self) -> usize {
        self.digit_precision.div_ceil(3) + 3
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceSize {
    pub vocabulary: usize,
    pub tokens_per_number: usize,
    /// `log10 |S| = P·D·N_token·log10 |T|`.
    pub log10_states: f64,
}

pub fn state_space_size(p: usize, d: usize, digit_precision: usize) -> StateSpaceSize {
    let vocabulary = NumericVocabulary.members().len();
    let tokens_per_number = TokenModel::new(digit_precision).tokens_per_number();
    let log10_states = (p * d * tokens_per_number) as f64 * (vocabulary as f64).log10();
    StateSpaceSize {
        vocabulary,
        tokens_per_number,
        log10_states,
    }
}
