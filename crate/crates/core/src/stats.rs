//! Summary statistics, two-sample Kolmogorov–Smirnov distance and Pearson
//! chi-square.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma_q;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance; `None` for a single observation.
    pub variance: Option<f64>,
    /// Standard error of the mean; `None` for a single observation.
    pub stderr: Option<f64>,
}

/// Mean, variance and standard error, accumulated in input order.
pub fn summarize(xs: &[f64]) -> Result<Summary> {
    if xs.is_empty() {
        return Err(Error::EmptyInput("summary of an empty sample"));
    }
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let (variance, stderr) = if n > 1 {
        let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
        let var = ss / (n - 1) as f64;
        (Some(var), Some((var / n as f64).sqrt()))
    } else {
        (None, None)
    };
    Ok(Summary {
        count: n,
        mean,
        variance,
        stderr,
    })
}

/// Linear-interpolation quantile of a sorted sample (`q` in `[0, 1]`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptyInput("quantile of an empty sample"));
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

pub fn sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs
}

/// Supremum distance between the empirical CDFs of two sorted samples.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("KS distance needs two nonempty samples"));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        // Step past every copy of v in both samples before comparing.
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic two-sample KS critical distance at level `alpha`.
pub fn ks_critical(alpha: f64, na: usize, nb: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((na + nb) as f64 / (na as f64 * nb as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square goodness of fit. Adjacent cells are pooled until each
/// pooled cell expects at least 5 counts; `expected` is rescaled to the
/// observed total.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> Result<ChiSquare> {
    if observed.is_empty() || observed.len() != expected.len() {
        return Err(Error::EmptyInput(
            "chi-square needs matching nonempty observed and expected cells",
        ));
    }
    let total_obs: u64 = observed.iter().sum();
    let total_exp: f64 = expected.iter().sum();
    if total_obs == 0 || !(total_exp > 0.0) {
        return Err(Error::EmptyInput("chi-square with no observations"));
    }
    let scale = total_obs as f64 / total_exp;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &ex) in observed.iter().zip(expected) {
        o += ob as f64;
        e += ex * scale;
        if e >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => cells.push((o, e)),
        }
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        gamma_q(dof as f64 / 2.0, statistic / 2.0)
    };
    Ok(ChiSquare {
        statistic,
        dof,
        p_value,
    })
}
