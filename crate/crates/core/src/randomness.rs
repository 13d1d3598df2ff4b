//! Counter-based random streams and the variate samplers built on them.
//!
//! A stream is Philox4x32-10 keyed by the master seed, with the stream id in
//! the upper half of the counter. Every variate is therefore a pure function of
//! `(master_seed, stream_id, draw index)`, whichever thread consumes it.

use rand_core::RngCore;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const PHILOX_M0: u64 = 0xD251_1F53;
const PHILOX_M1: u64 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u64, b: u32) -> (u32, u32) {
    let p = a * b as u64;
    ((p >> 32) as u32, p as u32)
}

/// One application of Philox4x32 with 10 rounds.
pub fn philox4x32_10(mut ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, ctr[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, ctr[2]);
        ctr = [hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0];
    }
    ctr
}

/// The serializable identity of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub master_seed: u64,
    pub stream_id: u64,
}

/// A single-owner random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    key: StreamKey,
    block: u64,
    buf: [u64; 2],
    used: usize,
}

/// Creates the stream `stream_id` of the family `master_seed`, positioned at draw 0.
pub fn make_stream(master_seed: u64, stream_id: u64) -> RngStream {
    RngStream::new(master_seed, stream_id)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngStream {
            key: StreamKey {
                master_seed,
                stream_id,
            },
            block: 0,
            buf: [0; 2],
            used: 2,
        }
    }

    pub fn from_key(key: StreamKey) -> Self {
        Self::new(key.master_seed, key.stream_id)
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    /// Number of 64-bit words consumed so far.
    pub fn position(&self) -> u64 {
        self.block * 2 - (2 - self.used as u64)
    }

    fn refill(&mut self) {
        let ctr = [
            self.block as u32,
            (self.block >> 32) as u32,
            self.key.stream_id as u32,
            (self.key.stream_id >> 32) as u32,
        ];
        let key = [
            self.key.master_seed as u32,
            (self.key.master_seed >> 32) as u32,
        ];
        let out = philox4x32_10(ctr, key);
        self.buf = [
            out[0] as u64 | (out[1] as u64) << 32,
            out[2] as u64 | (out[3] as u64) << 32,
        ];
        self.block += 1;
        self.used = 0;
    }

    #[inline]
    pub fn next_word(&mut self) -> u64 {
        if self.used == 2 {
            self.refill();
        }
        let w = self.buf[self.used];
        self.used += 1;
        w
    }

    /// Uniform on the open interval (0, 1), with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_word() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)`; `bound` must be positive.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        // Lemire's multiply-shift with rejection of the biased low zone.
        let mut prod = self.next_word() as u128 * bound as u128;
        let mut low = prod as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                prod = self.next_word() as u128 * bound as u128;
                low = prod as u64;
            }
        }
        (prod >> 64) as u64
    }

    /// Standard exponential variate.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        Exp1.sample(self)
    }

    /// Standard normal variate.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_word() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_word()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_word().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Gamma(shape, scale) sampler with precomputed Marsaglia–Tsang constants.
#[derive(Debug, Clone, Copy)]
pub struct Gamma {
    scale: f64,
    d: f64,
    c: f64,
    // 1/shape when shape < 1 (boosted through shape + 1).
    inv_shape: Option<f64>,
}

impl Gamma {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(invalid(format!("gamma shape must be positive, got {shape}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid(format!("gamma scale must be positive, got {scale}")));
        }
        Ok(Self::new_unchecked(shape, scale))
    }

    #[inline]
    fn new_unchecked(shape: f64, scale: f64) -> Self {
        let (base, inv_shape) = if shape < 1.0 {
            (shape + 1.0, Some(1.0 / shape))
        } else {
            (shape, None)
        };
        let d = base - 1.0 / 3.0;
        Gamma {
            scale,
            d,
            c: 1.0 / (9.0 * d).sqrt(),
            inv_shape,
        }
    }

    #[inline]
    fn marsaglia_tsang(&self, rng: &mut RngStream) -> f64 {
        loop {
            let x = rng.normal();
            let v = 1.0 + self.c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = rng.uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return self.d * v;
            }
            if u.ln() < 0.5 * x2 + self.d * (1.0 - v + v.ln()) {
                return self.d * v;
            }
        }
    }

    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let g = self.marsaglia_tsang(rng);
        match self.inv_shape {
            None => g * self.scale,
            Some(inv) => g * rng.uniform().powf(inv) * self.scale,
        }
    }

    /// Natural log of a unit-scale draw; stays finite for tiny shapes whose
    /// draws underflow.
    #[inline]
    pub fn sample_ln(&self, rng: &mut RngStream) -> f64 {
        let g = self.marsaglia_tsang(rng).ln();
        match self.inv_shape {
            None => g,
            Some(inv) => g + rng.uniform().ln() * inv,
        }
    }
}

/// One Gamma(shape, scale) draw.
pub fn sample_gamma(rng: &mut RngStream, shape: f64, scale: f64) -> Result<f64> {
    Ok(Gamma::new(shape, scale)?.sample(rng))
}

/// One Beta(a, b) draw, as `g₁/(g₁+g₂)` with independent unit gammas.
pub fn sample_beta(rng: &mut RngStream, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(invalid(format!(
            "beta shapes must be positive, got ({a}, {b})"
        )));
    }
    Ok(beta_unchecked(rng, a, b))
}

/// Beta draw without parameter validation, for hot loops with known-good shapes.
#[inline]
pub(crate) fn beta_unchecked(rng: &mut RngStream, a: f64, b: f64) -> f64 {
    if a < 1.0 || b < 1.0 {
        // Small shapes: compare in log space so neither gamma underflows.
        let la = Gamma::new_unchecked(a, 1.0).sample_ln(rng);
        let lb = Gamma::new_unchecked(b, 1.0).sample_ln(rng);
        let r = 1.0 / (1.0 + (lb - la).exp());
        return r.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    }
    let g1 = Gamma::new_unchecked(a, 1.0).marsaglia_tsang(rng);
    let g2 = Gamma::new_unchecked(b, 1.0).marsaglia_tsang(rng);
    g1 / (g1 + g2)
}

const INVERSION_MEAN_LIMIT: f64 = 30.0;

/// One Binomial(count, p) draw: inversion when `count·min(p, 1-p) <= 30`,
/// BTPE acceptance-rejection otherwise.
///
/// # Panics
/// If `p` is not in `[0, 1]`.
pub fn sample_binomial(rng: &mut RngStream, count: u64, p: f64) -> u64 {
    assert!((0.0..=1.0).contains(&p), "binomial p must lie in [0, 1], got {p}");
    if count == 0 || p == 0.0 {
        return 0;
    }
    if p == 1.0 {
        return count;
    }
    let flipped = p > 0.5;
    let q_small = if flipped { 1.0 - p } else { p };
    let draw = if count as f64 * q_small <= INVERSION_MEAN_LIMIT {
        binomial_inversion(rng, count, q_small)
    } else {
        btpe(rng, count, q_small)
    };
    if flipped {
        count - draw
    } else {
        draw
    }
}

fn binomial_inversion(rng: &mut RngStream, count: u64, p: f64) -> u64 {
    let q = 1.0 - p;
    let s = p / q;
    let a = (count as f64 + 1.0) * s;
    let r0 = (count as f64 * (-p).ln_1p()).exp();
    // Mean <= 30 puts anything past 200 hundreds of sd out; such a walk only
    // happens through rounding, so it restarts.
    let cap = count.min(200);
    'outer: loop {
        let mut u = rng.uniform();
        let mut r = r0;
        let mut x = 0u64;
        while u > r {
            u -= r;
            x += 1;
            if x > cap {
                continue 'outer;
            }
            r *= a / x as f64 - s;
        }
        return x;
    }
}

// Kachitvichyanukul & Schmeiser (1988) BTPE, for count·p > 30 and p <= 1/2.
#[allow(clippy::many_single_char_names)]
fn btpe(rng: &mut RngStream, count: u64, p: f64) -> u64 {
    const SQUEEZE_THRESHOLD: i64 = 20;
    let n = count as f64;
    let q = 1.0 - p;
    let np = n * p;
    let npq = np * q;
    let f_m = np + p;
    let m = f_m.floor() as i64;
    let p1 = (2.195 * npq.sqrt() - 4.6 * q).floor() + 0.5;
    let x_m = m as f64 + 0.5;
    let x_l = x_m - p1;
    let x_r = x_m + p1;
    let c = 0.134 + 20.5 / (15.3 + m as f64);
    let p2 = p1 * (1.0 + 2.0 * c);
    let lambda = |a: f64| a * (1.0 + 0.5 * a);
    let lambda_l = lambda((f_m - x_l) / (f_m - x_l * p));
    let lambda_r = lambda((x_r - f_m) / (x_r * q));
    let p3 = p2 + c / lambda_l;
    let p4 = p3 + c / lambda_r;

    loop {
        let u = rng.uniform() * p4;
        let mut v = rng.uniform();
        let y: i64;
        if u <= p1 {
            return (x_m - p1 * v + u).floor() as u64;
        } else if u <= p2 {
            let x = x_l + (u - p1) / c;
            v = v * c + 1.0 - (x - x_m).abs() / p1;
            if v > 1.0 {
                continue;
            }
            y = x.floor() as i64;
        } else if u <= p3 {
            y = (x_l + v.ln() / lambda_l).floor() as i64;
            if y < 0 {
                continue;
            }
            v *= (u - p2) * lambda_l;
        } else {
            y = (x_r - v.ln() / lambda_r).floor() as i64;
            if y > count as i64 {
                continue;
            }
            v *= (u - p3) * lambda_r;
        }

        let k = (y - m).abs();
        if k <= SQUEEZE_THRESHOLD || k as f64 >= 0.5 * npq - 1.0 {
            // Evaluate f(y)/f(m) by the pmf recursion from the mode.
            let s = p / q;
            let a = s * (n + 1.0);
            let mut f = 1.0;
            if m < y {
                for i in (m + 1)..=y {
                    f *= a / i as f64 - s;
                }
            } else if m > y {
                for i in (y + 1)..=m {
                    f /= a / i as f64 - s;
                }
            }
            if v <= f {
                return y as u64;
            }
            continue;
        }

        let kf = k as f64;
        let rho = (kf / npq) * ((kf * (kf / 3.0 + 0.625) + 1.0 / 6.0) / npq + 0.5);
        let t = -0.5 * kf * kf / npq;
        let alpha = v.ln();
        if alpha < t - rho {
            return y as u64;
        }
        if alpha > t + rho {
            continue;
        }

        let x1 = (y + 1) as f64;
        let f1 = (m + 1) as f64;
        let z = (count as i64 + 1 - m) as f64;
        let w = (count as i64 - y + 1) as f64;
        let stirling = |a: f64| {
            let a2 = a * a;
            (13860.0 - (462.0 - (132.0 - (99.0 - 140.0 / a2) / a2) / a2) / a2) / a / 166_320.0
        };
        let bound = x_m * (f1 / x1).ln()
            + (n - m as f64 + 0.5) * (z / w).ln()
            + (y - m) as f64 * (w * p / (x1 * q)).ln()
            + stirling(f1)
            + stirling(z)
            - stirling(x1)
            - stirling(w);
        if alpha <= bound {
            return y as u64;
        }
    }
}

/// One draw of `Z ~ Bin(count, B)` with `B ~ Beta(a, b)` integrated out.
///
/// When `a` is a small positive integer the probability of `Z = 0` is the
/// finite product `∏_{j<a} (b+j)/(b+count+j)`, so the common case costs a
/// handful of multiplications and one uniform. Other cases draw `B` explicitly.
#[inline]
pub fn sample_beta_binomial(rng: &mut RngStream, count: u64, a: f64, b: f64) -> u64 {
    if count == 0 {
        return 0;
    }
    let y = count as f64;
    let int_a = a.fract() == 0.0 && (1.0..=16.0).contains(&a);
    if !int_a || y * a / (a + b) > INVERSION_MEAN_LIMIT {
        let p = beta_unchecked(rng, a, b);
        return sample_binomial(rng, count, p);
    }
    let mut p0 = 1.0;
    let mut j = 0.0;
    while j < a {
        p0 *= (b + j) / (b + y + j);
        j += 1.0;
    }
    if !(p0 > 1e-280) {
        let p = beta_unchecked(rng, a, b);
        return sample_binomial(rng, count, p);
    }
    'outer: loop {
        let mut u = rng.uniform();
        let mut pmf = p0;
        let mut z = 0u64;
        while u > pmf {
            u -= pmf;
            if z == count {
                continue 'outer;
            }
            let zf = z as f64;
            pmf *= (y - zf) * (a + zf) / ((zf + 1.0) * (b + y - zf - 1.0));
            z += 1;
        }
        return z;
    }
}
