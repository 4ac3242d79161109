//! Wilcoxon rank-sum (Mann–Whitney) comparisons and the per-function
//! better/equal/worse tally used by the report tables.
//!
//! Verdicts are two-sided at a configurable significance level. Ties share
//! mid-ranks. Small samples (fewer than 10 per side) are judged by exact
//! enumeration of all rank assignments; larger ones by the normal
//! approximation with tie-corrected variance and continuity correction.
//! `Better` always means the first sample is stochastically lower, which is
//! better under the minimization convention.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Verdict of one pairwise comparison, from the first sample's point of
/// view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Better,
    Equal,
    Worse,
}

impl Outcome {
    pub fn flipped(self) -> Self {
        match self {
            Outcome::Better => Outcome::Worse,
            Outcome::Equal => Outcome::Equal,
            Outcome::Worse => Outcome::Better,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Outcome::Better => "+",
            Outcome::Equal => "=",
            Outcome::Worse => "-",
        }
    }
}

/// Both sides at least this large use the normal approximation.
const NORMAL_APPROX_MIN: usize = 10;
/// Exact enumeration is skipped above this many arrangements.
const EXACT_ENUMERATION_CAP: u128 = 10_000_000;

/// Mid-ranks of the concatenated samples, in input order.
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i..j (0-based) share the average 1-based rank.
        let shared = (i + j + 1) as f64 / 2.0;
        for &index in &order[i..j] {
            ranks[index] = shared;
        }
        i = j;
    }
    ranks
}

/// Sizes of tied groups in the combined sample (needed for the variance
/// correction).
fn tie_group_sizes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > 1 {
            sizes.push(j - i);
        }
        i = j;
    }
    sizes
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    result
}

/// Exact two-sided p-value: the fraction of all `C(n, n_a)` rank
/// assignments whose rank sum deviates from its mean at least as much as
/// the observed one. Mid-ranks are multiples of one half, so comparisons
/// are exact in f64.
fn exact_two_sided_p(ranks: &[f64], n_a: usize) -> f64 {
    let n = ranks.len();
    let mean = n_a as f64 * (n + 1) as f64 / 2.0;
    let observed: f64 = ranks[..n_a].iter().sum();
    let target = (observed - mean).abs();

    let mut combo: Vec<usize> = (0..n_a).collect();
    let mut hits: u64 = 0;
    let mut total: u64 = 0;
    loop {
        let w: f64 = combo.iter().map(|&i| ranks[i]).sum();
        if (w - mean).abs() >= target {
            hits += 1;
        }
        total += 1;

        // Advance to the next lexicographic combination.
        let mut i = n_a;
        loop {
            if i == 0 {
                return hits as f64 / total as f64;
            }
            i -= 1;
            if combo[i] != i + n - n_a {
                break;
            }
        }
        if combo[i] == i + n - n_a {
            return hits as f64 / total as f64;
        }
        combo[i] += 1;
        for j in (i + 1)..n_a {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

/// Normal approximation with tie-corrected variance and continuity
/// correction.
fn normal_two_sided_p(w_a: f64, n_a: usize, n_b: usize, ties: &[usize]) -> f64 {
    let n = (n_a + n_b) as f64;
    let mean = n_a as f64 * (n + 1.0) / 2.0;
    let tie_term: f64 = ties
        .iter()
        .map(|&t| (t * t * t - t) as f64)
        .sum::<f64>()
        / (n * (n - 1.0));
    let variance = n_a as f64 * n_b as f64 / 12.0 * ((n + 1.0) - tie_term);
    if variance <= 0.0 {
        return 1.0;
    }
    let z = ((w_a - mean).abs() - 0.5).max(0.0) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 0.5], got {alpha}"
        )));
    }
    Ok(())
}

fn validate_samples(sample_a: &[f64], sample_b: &[f64]) -> Result<Vec<f64>> {
    let (n_a, n_b) = (sample_a.len(), sample_b.len());
    if n_a < 2 || n_b < 2 {
        return Err(Error::InvalidArgument(format!(
            "rank-sum test needs at least 2 values per side, got {n_a} and {n_b}"
        )));
    }
    let combined: Vec<f64> = sample_a.iter().chain(sample_b).copied().collect();
    if combined.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "rank-sum samples must be finite".into(),
        ));
    }
    Ok(combined)
}

/// Exact two-sided p-value by enumerating every rank assignment. Rejects
/// inputs whose arrangement count exceeds an enumeration cap.
pub fn rank_sum_p_exact(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    let combined = validate_samples(sample_a, sample_b)?;
    if combined.iter().all(|&v| v == combined[0]) {
        return Ok(1.0);
    }
    if binomial(combined.len(), sample_a.len()) > EXACT_ENUMERATION_CAP {
        return Err(Error::InvalidArgument(format!(
            "exact enumeration over C({}, {}) arrangements is too large",
            combined.len(),
            sample_a.len()
        )));
    }
    Ok(exact_two_sided_p(&midranks(&combined), sample_a.len()))
}

/// Normal-approximation two-sided p-value with tie-corrected variance and
/// continuity correction.
pub fn rank_sum_p_normal(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    let combined = validate_samples(sample_a, sample_b)?;
    if combined.iter().all(|&v| v == combined[0]) {
        return Ok(1.0);
    }
    let ranks = midranks(&combined);
    let w_a: f64 = ranks[..sample_a.len()].iter().sum();
    Ok(normal_two_sided_p(
        w_a,
        sample_a.len(),
        sample_b.len(),
        &tie_group_sizes(&combined),
    ))
}

/// Two-sided rank-sum p-value, choosing the exact or approximate path by
/// sample size: exact enumeration below 10 per side (while feasible), the
/// normal approximation otherwise.
pub fn rank_sum_p(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    let use_exact = sample_a.len().min(sample_b.len()) < NORMAL_APPROX_MIN
        && binomial(sample_a.len() + sample_b.len(), sample_a.len()) <= EXACT_ENUMERATION_CAP;
    if use_exact {
        rank_sum_p_exact(sample_a, sample_b)
    } else {
        rank_sum_p_normal(sample_a, sample_b)
    }
}

/// Rank-sum verdict at significance `alpha`: `Better` when `sample_a` is
/// significantly stochastically lower, `Worse` when higher, `Equal`
/// otherwise (including fully tied samples).
pub fn rank_sum_test(sample_a: &[f64], sample_b: &[f64], alpha: f64) -> Result<Outcome> {
    validate_alpha(alpha)?;
    let p = rank_sum_p(sample_a, sample_b)?;
    if p > alpha {
        return Ok(Outcome::Equal);
    }
    let combined: Vec<f64> = sample_a.iter().chain(sample_b).copied().collect();
    let ranks = midranks(&combined);
    let mean_rank_a: f64 = ranks[..sample_a.len()].iter().sum::<f64>() / sample_a.len() as f64;
    let mean_rank_b: f64 = ranks[sample_a.len()..].iter().sum::<f64>() / sample_b.len() as f64;
    if mean_rank_a < mean_rank_b {
        Ok(Outcome::Better)
    } else if mean_rank_a > mean_rank_b {
        Ok(Outcome::Worse)
    } else {
        Ok(Outcome::Equal)
    }
}

/// Verdict counts over a function set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub plus: usize,
    pub equal: usize,
    pub minus: usize,
}

impl OutcomeCounts {
    pub fn total(&self) -> usize {
        self.plus + self.equal + self.minus
    }

    fn add(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Better => self.plus += 1,
            Outcome::Equal => self.equal += 1,
            Outcome::Worse => self.minus += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionOutcome {
    pub function: String,
    pub outcome: Outcome,
}

/// The serialized comparison result: per-function verdicts for the
/// reference algorithm against the opponent, plus the tallies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub reference: String,
    pub opponent: String,
    pub alpha: f64,
    pub per_function: Vec<FunctionOutcome>,
    pub counts: OutcomeCounts,
}

/// Applies the rank-sum test per function over final best-error samples and
/// tallies the verdicts. Both sides must cover the same function set.
pub fn summarize(
    reference_label: &str,
    reference: &[(String, Vec<f64>)],
    opponent_label: &str,
    opponent: &[(String, Vec<f64>)],
    alpha: f64,
) -> Result<ComparisonReport> {
    validate_alpha(alpha)?;
    let missing: Vec<&str> = reference
        .iter()
        .filter(|(name, _)| !opponent.iter().any(|(other, _)| other == name))
        .map(|(name, _)| name.as_str())
        .chain(
            opponent
                .iter()
                .filter(|(name, _)| !reference.iter().any(|(other, _)| other == name))
                .map(|(name, _)| name.as_str()),
        )
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "function coverage mismatch; missing on one side: {}",
            missing.join(", ")
        )));
    }

    let mut per_function = Vec::with_capacity(reference.len());
    let mut counts = OutcomeCounts::default();
    for (name, samples_a) in reference {
        let samples_b = &opponent
            .iter()
            .find(|(other, _)| other == name)
            .unwrap()
            .1;
        let outcome = rank_sum_test(samples_a, samples_b, alpha)?;
        counts.add(outcome);
        per_function.push(FunctionOutcome {
            function: name.clone(),
            outcome,
        });
    }
    Ok(ComparisonReport {
        reference: reference_label.to_string(),
        opponent: opponent_label.to_string(),
        alpha,
        per_function,
        counts,
    })
}
