//! Surface features of a student answer relative to its reference answer.
//!
//! Tokens are maximal runs of ASCII letters, digits and apostrophes,
//! lowercased.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SEGMENT_BREAKS: [char; 5] = ['.', ';', ':', '!', '?'];
const MIN_SEGMENT_TOKENS: usize = 3;
const COVERAGE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalFeatures {
    pub token_count: usize,
    /// `None` for an empty answer.
    pub ttr: Option<f64>,
    /// `None` when the reference has no tokens.
    pub unigram_overlap: Option<f64>,
    /// `None` when the reference has fewer than two tokens.
    pub bigram_overlap: Option<f64>,
    pub missing_segments: usize,
}

fn is_token_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '\''
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !is_token_char(c))
        .filter(|t| !t.is_empty())
        .map(|t| t.to_ascii_lowercase())
        .collect()
}

fn unique(tokens: &[String]) -> HashSet<&str> {
    tokens.iter().map(String::as_str).collect()
}

fn bigrams(tokens: &[String]) -> HashSet<(&str, &str)> {
    tokens
        .windows(2)
        .map(|w| (w[0].as_str(), w[1].as_str()))
        .collect()
}

/// Share of the reference's unique tokens that appear in the answer.
pub fn unigram_overlap(answer: &[String], reference: &[String]) -> Result<f64> {
    let r = unique(reference);
    if r.is_empty() {
        return Err(Error::InvalidArgument(
            "unigram overlap needs a non-empty reference".into(),
        ));
    }
    let a = unique(answer);
    Ok(r.intersection(&a).count() as f64 / r.len() as f64)
}

/// Share of the reference's unique bigrams that appear in the answer.
pub fn bigram_overlap(answer: &[String], reference: &[String]) -> Option<f64> {
    let r = bigrams(reference);
    if r.is_empty() {
        return None;
    }
    let a = bigrams(answer);
    Some(r.intersection(&a).count() as f64 / r.len() as f64)
}

pub fn ttr(answer: &[String]) -> Option<f64> {
    if answer.is_empty() {
        None
    } else {
        Some(unique(answer).len() as f64 / answer.len() as f64)
    }
}

/// Reference segments with at least three tokens, split at `. ; : ! ?`.
pub fn reference_segments(reference: &str) -> Vec<Vec<String>> {
    reference
        .split(SEGMENT_BREAKS)
        .map(tokenize)
        .filter(|t| t.len() >= MIN_SEGMENT_TOKENS)
        .collect()
}

/// Number of retained reference segments whose unique tokens are less than
/// half covered by the answer.
pub fn missing_segments(reference: &str, answer: &[String]) -> usize {
    let a = unique(answer);
    reference_segments(reference)
        .iter()
        .filter(|seg| {
            let s = unique(seg);
            (s.intersection(&a).count() as f64 / s.len() as f64) < COVERAGE_THRESHOLD
        })
        .count()
}

impl LexicalFeatures {
    pub fn compute(reference: &str, answer: &str) -> Self {
        let ref_tokens = tokenize(reference);
        let ans_tokens = tokenize(answer);
        LexicalFeatures {
            token_count: ans_tokens.len(),
            ttr: ttr(&ans_tokens),
            unigram_overlap: unigram_overlap(&ans_tokens, &ref_tokens).ok(),
            bigram_overlap: bigram_overlap(&ans_tokens, &ref_tokens),
            missing_segments: missing_segments(reference, &ans_tokens),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tokenizer_fixtures() {
        assert_eq!(toks("The bulb, lights!"), ["the", "bulb", "lights"]);
        assert_eq!(toks("don't"), ["don't"]);
        assert_eq!(toks("A1 B2"), ["a1", "b2"]);
        assert!(toks("").is_empty());
        assert_eq!(toks("naïve"), ["na", "ve"]);
    }

    #[test]
    fn unigram_fixtures() {
        let r = toks("the battery is connected");
        assert_eq!(unigram_overlap(&toks("battery connected"), &r).unwrap(), 0.5);
        assert_eq!(unigram_overlap(&r, &r).unwrap(), 1.0);
        assert_eq!(unigram_overlap(&toks("zinc copper"), &r).unwrap(), 0.0);
        assert!(unigram_overlap(&r, &[]).is_err());
    }

    #[test]
    fn bigram_fixtures() {
        let r = toks("a b c");
        assert_eq!(bigram_overlap(&toks("a b"), &r), Some(0.5));
        assert_eq!(bigram_overlap(&r, &r), Some(1.0));
        assert_eq!(bigram_overlap(&r, &toks("single")), None);
    }

    #[test]
    fn ttr_fixtures() {
        assert_eq!(ttr(&toks("a a b")), Some(2.0 / 3.0));
        assert_eq!(ttr(&toks("a b c")), Some(1.0));
        assert_eq!(ttr(&[]), None);
    }

    #[test]
    fn missing_segment_fixtures() {
        let reference = "The bulb lights. The circuit is closed.";
        assert_eq!(missing_segments(reference, &toks("the bulb lights")), 1);
        assert_eq!(missing_segments(reference, &toks(reference)), 0);
        assert_eq!(missing_segments("Yes. No.", &[]), 0);
        // consecutive punctuation is one boundary
        assert_eq!(reference_segments("one two three?! four five six").len(), 2);
    }

    #[test]
    fn empty_answer() {
        let f = LexicalFeatures::compute("the bulb is lit", "");
        assert_eq!(f.token_count, 0);
        assert_eq!(f.ttr, None);
        assert_eq!(f.unigram_overlap, Some(0.0));
        assert_eq!(f.bigram_overlap, Some(0.0));
        assert_eq!(f.missing_segments, 1);
    }
}
