//! Wilcoxon rank-sum (Mann-Whitney U) tests and box-plot summaries.
//!
//! `U` is always the statistic of the first sample,
//! `U = R1 - n1 (n1 + 1) / 2` with `R1` its midrank sum, so larger `U`
//! means the first sample sits higher. The exact null distribution of `U`
//! is enumerated with the subset-count recursion
//!
//! ```text
//! c(m, n, u) = c(m - 1, n, u - n) + c(m, n - 1, u)
//! ```
//!
//! which counts the rank subsets of size `m` out of `m + n` ranks giving
//! statistic `u`. Two-sided p-values double the smaller tail (each tail
//! includes the observed point mass) and are capped at 1.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::format::{fmt_real, round_sig};
use crate::indicator::IndicatorSeries;
use crate::region::Region;

pub const BOX_HEADER: &str = "year,min,q1,median,q3,max,lower_fence,upper_fence,n_outliers";

/// Largest number of rank subsets the exact method will enumerate:
/// `C(25, 12)`, the worst case for a combined size of 25.
pub const EXACT_SUBSET_LIMIT: u64 = 5_200_300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RankTestError {
    #[error("sample {0} is empty")]
    EmptySample(u8),
    #[error("samples contain a non-finite value")]
    NonFinite,
    #[error("ties present; the exact test does not handle them, use the normal approximation")]
    TiesPresent,
    #[error("exact enumeration for n1={n1}, n2={n2} exceeds the subset limit; use the normal approximation")]
    TooLargeForExact { n1: usize, n2: usize },
    #[error("all values are tied; the rank-sum statistic has zero variance")]
    Degenerate,
    #[error("need at least 3 defined points, found {0}")]
    InsufficientData(usize),
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("cannot summarise an empty list of values")]
    EmptyValues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTestResult {
    pub u_statistic: f64,
    pub n1: usize,
    pub n2: usize,
    /// `P(U >= u)` under the null: the alternative "sample 1 shifted up".
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    pub method: TestMethod,
    pub tie_correction_applied: bool,
}

/// Exact tail counts out of `total = C(n1 + n2, n1)` equally likely rank
/// assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactTail {
    /// Assignments with `U >= u`.
    pub upper: u64,
    /// Assignments with `U <= u`.
    pub lower: u64,
    pub total: u64,
}

impl ExactTail {
    pub fn p_one_sided(&self) -> f64 {
        self.upper as f64 / self.total as f64
    }

    pub fn p_two_sided(&self) -> f64 {
        (2.0 * self.upper.min(self.lower) as f64 / self.total as f64).min(1.0)
    }
}

struct Ranked {
    u: f64,
    /// Sizes of groups of tied values (only groups larger than one).
    tie_groups: Vec<usize>,
}

fn rank_samples(sample1: &[f64], sample2: &[f64]) -> Result<Ranked, RankTestError> {
    if sample1.is_empty() {
        return Err(RankTestError::EmptySample(1));
    }
    if sample2.is_empty() {
        return Err(RankTestError::EmptySample(2));
    }
    if sample1.iter().chain(sample2).any(|v| !v.is_finite()) {
        return Err(RankTestError::NonFinite);
    }
    let mut all: Vec<(f64, bool)> = sample1
        .iter()
        .map(|&v| (v, true))
        .chain(sample2.iter().map(|&v| (v, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut rank_sum1 = 0.0;
    let mut tie_groups = Vec::new();
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let midrank = (i + 1 + j) as f64 / 2.0;
        let in_first = all[i..j].iter().filter(|e| e.1).count();
        rank_sum1 += midrank * in_first as f64;
        if j - i > 1 {
            tie_groups.push(j - i);
        }
        i = j;
    }
    let n1 = sample1.len() as f64;
    Ok(Ranked {
        u: rank_sum1 - n1 * (n1 + 1.0) / 2.0,
        tie_groups,
    })
}

fn binomial_capped(n: usize, k: usize, cap: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > cap as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Whether the exact method will enumerate `n1 x n2`.
pub fn exact_supported(n1: usize, n2: usize) -> bool {
    n1 > 0 && n2 > 0 && binomial_capped(n1 + n2, n1, EXACT_SUBSET_LIMIT).is_some()
}

/// Null frequency of each `U = 0 ..= n1 * n2`.
pub fn u_distribution(n1: usize, n2: usize) -> Vec<u64> {
    // row[n] holds c(m, n, .) for the current m
    let mut row: Vec<Vec<u64>> = vec![vec![1]; n2 + 1];
    for m in 1..=n1 {
        let mut next: Vec<Vec<u64>> = Vec::with_capacity(n2 + 1);
        next.push(vec![1]);
        for n in 1..=n2 {
            let mut counts = vec![0u64; m * n + 1];
            // c(m - 1, n, u - n): the largest rank belongs to sample 1
            for (u, &c) in row[n].iter().enumerate() {
                counts[u + n] += c;
            }
            // c(m, n - 1, u): the largest rank belongs to sample 2
            for (u, &c) in next[n - 1].iter().enumerate() {
                counts[u] += c;
            }
            next.push(counts);
        }
        row = next;
    }
    row.pop().expect("n2 + 1 rows")
}

/// Exact tail counts for an integer statistic `u`.
pub fn exact_tail(n1: usize, n2: usize, u: u64) -> ExactTail {
    let dist = u_distribution(n1, n2);
    let u = u as usize;
    ExactTail {
        upper: dist.iter().skip(u).sum(),
        lower: dist.iter().take(u + 1).sum(),
        total: dist.iter().sum(),
    }
}

/// Exact Wilcoxon rank-sum test. Refuses tied inputs and inputs whose rank
/// subsets exceed [`EXACT_SUBSET_LIMIT`].
pub fn mann_whitney_exact(sample1: &[f64], sample2: &[f64]) -> Result<RankTestResult, RankTestError> {
    let ranked = rank_samples(sample1, sample2)?;
    if !ranked.tie_groups.is_empty() {
        return Err(RankTestError::TiesPresent);
    }
    let (n1, n2) = (sample1.len(), sample2.len());
    if !exact_supported(n1, n2) {
        return Err(RankTestError::TooLargeForExact { n1, n2 });
    }
    let tail = exact_tail(n1, n2, ranked.u as u64);
    Ok(RankTestResult {
        u_statistic: ranked.u,
        n1,
        n2,
        p_one_sided: tail.p_one_sided(),
        p_two_sided: tail.p_two_sided(),
        method: TestMethod::Exact,
        tie_correction_applied: false,
    })
}

/// Normal approximation with continuity correction and tie-corrected
/// variance.
pub fn mann_whitney_approx(
    sample1: &[f64],
    sample2: &[f64],
) -> Result<RankTestResult, RankTestError> {
    let ranked = rank_samples(sample1, sample2)?;
    let (n1, n2) = (sample1.len(), sample2.len());
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let n = n1f + n2f;
    let tie_sum: f64 = ranked
        .tie_groups
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let variance = n1f * n2f / 12.0 * ((n + 1.0) - tie_sum / (n * (n - 1.0)));
    if variance.is_nan() || variance <= 0.0 {
        return Err(RankTestError::Degenerate);
    }
    let sigma = variance.sqrt();
    let mean = n1f * n2f / 2.0;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let z_upper = (ranked.u - mean - 0.5) / sigma;
    let z_abs = ((ranked.u - mean).abs() - 0.5).max(0.0) / sigma;
    Ok(RankTestResult {
        u_statistic: ranked.u,
        n1,
        n2,
        p_one_sided: std_normal.sf(z_upper).min(1.0),
        p_two_sided: (2.0 * std_normal.sf(z_abs)).min(1.0),
        method: TestMethod::NormalApprox,
        tie_correction_applied: !ranked.tie_groups.is_empty(),
    })
}

/// Exact when possible, otherwise the normal approximation.
pub fn mann_whitney(sample1: &[f64], sample2: &[f64]) -> Result<RankTestResult, RankTestError> {
    match mann_whitney_exact(sample1, sample2) {
        Err(RankTestError::TiesPresent | RankTestError::TooLargeForExact { .. }) => {
            mann_whitney_approx(sample1, sample2)
        }
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMethod {
    Exact,
    NormalApprox,
    /// Every value was tied; reported with p = 1.
    Degenerate,
}

impl From<TestMethod> for ScanMethod {
    fn from(m: TestMethod) -> Self {
        match m {
            TestMethod::Exact => ScanMethod::Exact,
            TestMethod::NormalApprox => ScanMethod::NormalApprox,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub year: i32,
    pub avg_rho: f64,
    pub u: f64,
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    pub method: ScanMethod,
}

/// One year tested against all the others, for every defined year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub focal: Region,
    pub alpha: f64,
    /// Smallest two-sided p a single year can reach: `2 / N`.
    pub p_floor: f64,
    pub entries: Vec<ScanEntry>,
    pub significant_years: Vec<i32>,
}

impl ScanReport {
    /// Copy with every real rounded to 12 significant digits, as written to
    /// disk.
    pub fn rounded(&self) -> ScanReport {
        ScanReport {
            focal: self.focal.clone(),
            alpha: self.alpha,
            p_floor: round_sig(self.p_floor),
            entries: self
                .entries
                .iter()
                .map(|e| ScanEntry {
                    avg_rho: round_sig(e.avg_rho),
                    u: round_sig(e.u),
                    p_one_sided: round_sig(e.p_one_sided),
                    p_two_sided: round_sig(e.p_two_sided),
                    ..e.clone()
                })
                .collect(),
            significant_years: self.significant_years.clone(),
        }
    }

    pub fn entry(&self, year: i32) -> Option<&ScanEntry> {
        self.entries.iter().find(|e| e.year == year)
    }
}

/// Tests each defined year's average against the rest of the series.
///
/// A year is significant when its two-sided p is below `alpha` and it sits
/// above the rest (`U > n2 / 2`).
pub fn scan_years(series: &IndicatorSeries, alpha: f64) -> Result<ScanReport, RankTestError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(RankTestError::InvalidAlpha(alpha));
    }
    let defined: Vec<(i32, f64)> = series.defined().collect();
    if defined.len() < 3 {
        return Err(RankTestError::InsufficientData(defined.len()));
    }
    let mut entries = Vec::with_capacity(defined.len());
    let mut rest = Vec::with_capacity(defined.len() - 1);
    for (i, &(year, value)) in defined.iter().enumerate() {
        rest.clear();
        rest.extend(
            defined
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &(_, v))| v),
        );
        let entry = match mann_whitney(&[value], &rest) {
            Ok(r) => ScanEntry {
                year,
                avg_rho: value,
                u: r.u_statistic,
                p_one_sided: r.p_one_sided,
                p_two_sided: r.p_two_sided,
                method: r.method.into(),
            },
            Err(RankTestError::Degenerate) => ScanEntry {
                year,
                avg_rho: value,
                u: rest.len() as f64 / 2.0,
                p_one_sided: 1.0,
                p_two_sided: 1.0,
                method: ScanMethod::Degenerate,
            },
            Err(e) => return Err(e),
        };
        entries.push(entry);
    }
    // Only upward departures count: a strict minimum reaches the same
    // two-sided p as a strict maximum but is a contraction.
    let centre = rest.len() as f64 / 2.0;
    let significant_years = entries
        .iter()
        .filter(|e| e.p_two_sided < alpha && e.u > centre)
        .map(|e| e.year)
        .collect();
    Ok(ScanReport {
        focal: series.focal.clone(),
        alpha,
        p_floor: 2.0 / defined.len() as f64,
        entries,
        significant_years,
    })
}

/// Five-number summary with 1.5 IQR fences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub year: i32,
    pub minimum: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub maximum: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    /// Values strictly outside the fences, ascending.
    pub outliers: Vec<f64>,
}

/// Linear interpolation at position `(n - 1) p` of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn box_summary(values: &[f64], year: i32) -> Result<BoxSummary, RankTestError> {
    if values.is_empty() {
        return Err(RankTestError::EmptyValues);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(RankTestError::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let lower_fence = q1 - 1.5 * iqr;
    let upper_fence = q3 + 1.5 * iqr;
    let outliers = sorted
        .iter()
        .copied()
        .filter(|&v| v < lower_fence || v > upper_fence)
        .collect();
    Ok(BoxSummary {
        year,
        minimum: sorted[0],
        q1,
        median,
        q3,
        maximum: sorted[sorted.len() - 1],
        lower_fence,
        upper_fence,
        outliers,
    })
}

pub fn write_box_csv<W: Write>(boxes: &[BoxSummary], mut out: W) -> io::Result<()> {
    writeln!(out, "{BOX_HEADER}")?;
    for b in boxes {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            b.year,
            fmt_real(b.minimum),
            fmt_real(b.q1),
            fmt_real(b.median),
            fmt_real(b.q3),
            fmt_real(b.maximum),
            fmt_real(b.lower_fence),
            fmt_real(b.upper_fence),
            b.outliers.len()
        )?;
    }
    Ok(())
}

/// Box summaries of each year's per-partner rho values, skipping years with
/// none.
pub fn yearly_boxes(series: &IndicatorSeries) -> Vec<BoxSummary> {
    series
        .years
        .iter()
        .filter_map(|&y| box_summary(&series.rho_values(y), y).ok())
        .collect()
}
