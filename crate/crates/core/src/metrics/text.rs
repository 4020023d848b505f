//! BLEU-4 and ROUGE-L over token sequences.

use std::collections::HashMap;
use std::hash::Hash;

use crate::{Error, Result};

/// Lowercases, splits on whitespace and strips trailing punctuation.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_end_matches(|c: char| c.is_ascii_punctuation()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Sentence BLEU with n-grams up to 4, uniform weights, clipped counts and
/// the brevity penalty. No smoothing: any zero precision gives 0.
pub fn bleu4<T: Eq + Hash>(candidate: &[T], references: &[Vec<T>]) -> Result<f64> {
    const MAX_N: usize = 4;
    if candidate.is_empty() {
        return Err(Error::Empty("BLEU candidate"));
    }
    if references.is_empty() {
        return Err(Error::Empty("BLEU references"));
    }

    let mut log_sum = 0.0;
    for n in 1..=MAX_N {
        if candidate.len() < n {
            return Ok(0.0);
        }
        let cand = ngram_counts(candidate, n);
        let refs: Vec<_> = references.iter().map(|r| ngram_counts(r, n)).collect();
        let clipped: usize = cand
            .iter()
            .map(|(gram, &count)| {
                let max_ref = refs
                    .iter()
                    .map(|r| r.get(gram).copied().unwrap_or(0))
                    .max()
                    .unwrap_or(0);
                count.min(max_ref)
            })
            .sum();
        if clipped == 0 {
            return Ok(0.0);
        }
        let total = candidate.len() + 1 - n;
        log_sum += (clipped as f64 / total as f64).ln();
    }

    let c = candidate.len();
    // Closest reference length, shorter on ties.
    let r = references
        .iter()
        .map(Vec::len)
        .min_by_key(|&len| (len.abs_diff(c), len))
        .unwrap_or(c);
    let brevity = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    Ok(brevity * (log_sum / MAX_N as f64).exp())
}

fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L with the balanced F-measure.
pub fn rouge_l<T: Eq>(candidate: &[T], reference: &[T]) -> Result<f64> {
    rouge_l_beta(candidate, reference, 1.0)
}

/// ROUGE-L F-measure `(1 + b^2) P R / (R + b^2 P)`; `beta > 1` favours recall.
pub fn rouge_l_beta<T: Eq>(candidate: &[T], reference: &[T], beta: f64) -> Result<f64> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(Error::Empty("ROUGE-L input"));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let lcs = lcs_len(candidate, reference);
    if lcs == 0 {
        return Ok(0.0);
    }
    // P = l/|c| and R = l/|r| substituted into the F-measure.
    let b2 = beta * beta;
    Ok((1.0 + b2) * lcs as f64 / (candidate.len() as f64 + b2 * reference.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tokenizer() {
        assert_eq!(
            toks("The first Car, on the left."),
            vec!["the", "first", "car", "on", "the", "left"]
        );
        assert!(toks("  ").is_empty());
    }

    #[test]
    fn bleu_perfect_match() {
        let s = toks("the first orange traffic cone on the left");
        assert_eq!(bleu4(&s, std::slice::from_ref(&s)).unwrap(), 1.0);
    }

    #[test]
    fn bleu_clips_repeated_words() {
        let c = toks("the the the the");
        assert_eq!(bleu4(&c, &[toks("the cat")]).unwrap(), 0.0);
    }

    #[test]
    fn bleu_brevity_penalty() {
        let r = toks("the first white car on the right side");
        let c = toks("the first white car on the");
        let score = bleu4(&c, &[r]).unwrap();
        assert!((score - (1.0f64 - 8.0 / 6.0).exp()).abs() < 1e-12, "{score}");
        assert!(score < 1.0);
    }

    #[test]
    fn bleu_short_candidate_and_errors() {
        assert_eq!(bleu4(&toks("car"), &[toks("car")]).unwrap(), 0.0);
        assert!(bleu4::<String>(&[], &[toks("a")]).is_err());
        assert!(bleu4(&toks("a b c d"), &[]).is_err());
    }

    #[test]
    fn rouge_examples() {
        let s = toks("the second car");
        assert_eq!(rouge_l(&s, &s).unwrap(), 1.0);
        let score = rouge_l(&toks("a b c"), &toks("a x c")).unwrap();
        assert!((score - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(rouge_l(&toks("a b"), &toks("c d")).unwrap(), 0.0);
        assert!(rouge_l::<String>(&[], &toks("a")).is_err());
    }

    #[test]
    fn rouge_beta_weights_recall() {
        // P = 1, R = 1/2.
        let c = toks("a b");
        let r = toks("a b c d");
        assert!((rouge_l(&c, &r).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let recall_heavy = rouge_l_beta(&c, &r, 8.0).unwrap();
        assert!((recall_heavy - 65.0 * 0.5 / (0.5 + 64.0)).abs() < 1e-15);
    }
}
