//! Loading-profile complexity through symbolic aggregate approximation.

use std::fmt;

use serde::Serialize;

use crate::error::{FcgError, Result};

/// Piecewise aggregate approximation to `word_length` segment means.
///
/// When `word_length` does not divide the series, the series is right-padded
/// by repeating its last value.
pub fn paa(series: &[f64], word_length: usize) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(FcgError::domain("PAA of an empty series"));
    }
    if word_length == 0 {
        return Err(FcgError::domain("word length must be >= 1"));
    }
    let seg = series.len().div_ceil(word_length);
    let last = *series.last().unwrap();
    let padded = series
        .iter()
        .copied()
        .chain(std::iter::repeat(last))
        .take(seg * word_length)
        .collect::<Vec<_>>();
    Ok(padded
        .chunks(seg)
        .map(|c| c.iter().sum::<f64>() / seg as f64)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaxWord {
    pub paa_values: Vec<f64>,
    pub letters: Vec<usize>,
    pub alphabet_size: usize,
    pub word_length: usize,
}

impl fmt::Display for SaxWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.alphabet_size <= 26 {
            for &l in &self.letters {
                write!(f, "{}", (b'a' + l as u8) as char)?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
            write!(f, "{}", parts.join("-"))
        }
    }
}

/// Map PAA values onto `alphabet_size` equal-width bins spanning their range.
pub fn sax_discretize(paa_values: &[f64], alphabet_size: usize) -> Result<SaxWord> {
    if alphabet_size < 2 {
        return Err(FcgError::domain("alphabet size must be >= 2"));
    }
    if paa_values.is_empty() {
        return Err(FcgError::domain("cannot discretize an empty PAA vector"));
    }
    let lo = paa_values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = paa_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let letters = paa_values
        .iter()
        .map(|&v| {
            if span <= 0.0 {
                return 0;
            }
            // letter j when beta_{j-1} <= v < beta_j
            let pos = (v - lo) / span * alphabet_size as f64;
            (pos.floor() as usize).min(alphabet_size - 1)
        })
        .collect();
    Ok(SaxWord {
        paa_values: paa_values.to_vec(),
        letters,
        alphabet_size,
        word_length: paa_values.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Complexity {
    Exact(u128),
    /// log10 of the word count when it overflows u128.
    Log10(f64),
}

impl Complexity {
    pub fn log10(&self) -> f64 {
        match *self {
            Complexity::Exact(n) => (n as f64).log10(),
            Complexity::Log10(v) => v,
        }
    }
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Complexity::Exact(n) => write!(f, "{n}"),
            Complexity::Log10(v) => write!(f, "10^{v:.3}"),
        }
    }
}

/// Number of distinct words, alphabet_size^word_length.
pub fn data_complexity(word_length: usize, alphabet_size: usize) -> Result<Complexity> {
    if word_length == 0 {
        return Err(FcgError::domain("word length must be >= 1"));
    }
    if alphabet_size < 2 {
        return Err(FcgError::domain("alphabet size must be >= 2"));
    }
    let exact = u32::try_from(word_length)
        .ok()
        .and_then(|w| (alphabet_size as u128).checked_pow(w));
    Ok(match exact {
        Some(n) => Complexity::Exact(n),
        None => Complexity::Log10(word_length as f64 * (alphabet_size as f64).log10()),
    })
}
