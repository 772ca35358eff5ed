use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!(
            "correlation inputs differ in length: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Empty("correlation needs at least two points"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in correlation input".into()));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("xs"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("ys"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i..j (0-based) share ranks i+1..=j.
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Number of pairs tied within `values`.
fn tied_pairs(values: &[f64]) -> u64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let run = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count() as u64;
        ties += run * (run - 1) / 2;
        i += run as usize;
    }
    ties
}

/// Kendall τ-b: `S / sqrt((n0 - n1)(n0 - n2))` with `S` the signed pair
/// agreement and `n1`, `n2` the tied pairs in each input.
pub fn kendall_tau_b(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    let n = xs.len() as u64;
    let n0 = n * (n - 1) / 2;
    let (n1, n2) = (tied_pairs(xs), tied_pairs(ys));
    if n1 == n0 {
        return Err(Error::ZeroVariance("xs (all values tied)"));
    }
    if n2 == n0 {
        return Err(Error::ZeroVariance("ys (all values tied)"));
    }
    let mut s: i64 = 0;
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            let sx = (xs[i] - xs[j]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            let sy = (ys[i] - ys[j]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            s += sx * sy;
        }
    }
    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    Ok((s as f64 / denom).clamp(-1.0, 1.0))
}

/// Two-sided p-value of a Pearson coefficient under the t approximation.
/// `None` when `n ≤ 2`.
pub fn pearson_p_value(r: f64, n: usize) -> Option<f64> {
    if n <= 2 {
        return None;
    }
    let df = (n - 2) as f64;
    if r.abs() >= 1.0 {
        return Some(0.0);
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some((2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0))
}

/// All three coefficients between metric and human scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub n: usize,
    pub pearson: f64,
    pub pearson_p_value: Option<f64>,
    pub spearman: f64,
    pub kendall: f64,
    pub kendall_variant: &'static str,
}

pub fn correlation_report(metric: &[f64], human: &[f64]) -> Result<CorrelationReport> {
    let r = pearson(metric, human)?;
    Ok(CorrelationReport {
        n: metric.len(),
        pearson: r,
        pearson_p_value: pearson_p_value(r, metric.len()),
        spearman: spearman(metric, human)?,
        kendall: kendall_tau_b(metric, human)?,
        kendall_variant: "tau-b",
    })
}

impl std::fmt::Display for CorrelationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<12} {:>10}", "coefficient", "value")?;
        writeln!(f, "{:<12} {:>10.4}", "Pearson", self.pearson)?;
        if let Some(p) = self.pearson_p_value {
            writeln!(f, "{:<12} {:>10.2e}", "  p-value", p)?;
        }
        writeln!(f, "{:<12} {:>10.4}", "Spearman", self.spearman)?;
        writeln!(f, "{:<12} {:>10.4}", "Kendall τ-b", self.kendall)?;
        write!(f, "n = {}", self.n)
    }
}
