//! The m-ary Yule process: particles live for unit-exponential times and then
//! split into `m`. It is observed at time `-ln x`, so `x = 1` is time 0.

use crate::error::{invalid, Error, Result};
use crate::randomness::RngStream;

/// Particle cap beyond which a simulation is aborted.
pub const MAX_PARTICLES: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YuleSnapshot {
    pub m: u32,
    pub x: f64,
    /// Particles alive at time `-ln x`.
    pub count: u64,
    /// `x^(m-1) · count`.
    pub scaled: f64,
}

fn check(m: u32, x: f64) -> Result<()> {
    if m < 2 {
        return Err(invalid(format!("the Yule process needs m >= 2, got {m}")));
    }
    if !(x > 0.0 && x <= 1.0) {
        return Err(invalid(format!("x must lie in (0, 1], got {x}")));
    }
    Ok(())
}

/// Simulates the process from `m` particles up to time `-ln x`.
pub fn yule_at(m: u32, x: f64, stream: &mut RngStream) -> Result<YuleSnapshot> {
    Ok(yule_path(m, &[x], stream)?[0])
}

/// Observes a single realization at several values of `x` (any order).
pub fn yule_path(m: u32, xs: &[f64], stream: &mut RngStream) -> Result<Vec<YuleSnapshot>> {
    for &x in xs {
        check(m, x)?;
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    // Increasing observation time = decreasing x.
    order.sort_by(|&a, &b| xs[b].total_cmp(&xs[a]));
    let mut counts = vec![0u64; xs.len()];
    let mut count = m as u64;
    let mut time = 0.0;
    let mut next_split = stream.exponential() / count as f64;
    for &i in &order {
        let horizon = -xs[i].ln();
        while time + next_split <= horizon {
            time += next_split;
            count += m as u64 - 1;
            if count > MAX_PARTICLES {
                return Err(Error::Resource(format!(
                    "Yule process exceeded {MAX_PARTICLES} particles before x = {}",
                    xs[i]
                )));
            }
            next_split = stream.exponential() / count as f64;
        }
        counts[i] = count;
    }
    Ok(xs
        .iter()
        .zip(counts)
        .map(|(&x, count)| YuleSnapshot {
            m,
            x,
            count,
            scaled: x.powi(m as i32 - 1) * count as f64,
        })
        .collect())
}
