//! Descendant counts: reachability on explicit graphs, and the top-down
//! recursion that tracks only the number of unresolved edges.
//!
//! In the recursion, vertex `n` starts with `m` outgoing edges whose endpoints
//! are still unknown. Walking `k = n-1, ..., 1`, each such edge lands on `k`
//! independently with probability `B_k`; if any does, `k` is reached and adds
//! its own `m` unresolved edges. `Y_k` counts unresolved edges on arrival at
//! `k`, `Z_k` those landing on `k`, and `J_k = 1[Z_k >= 1]`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::generators::Digraph;
use crate::randomness::{beta_unchecked, sample_beta_binomial, sample_binomial, RngStream};
use crate::theory::{beta_shapes, ModelParams, Variant};

/// Number of vertices reachable from vertex `n`, counting `n` itself.
/// Self-loops are ignored.
pub fn count_descendants(g: &Digraph) -> u64 {
    if g.n <= 1 {
        return g.n;
    }
    let mut reached = vec![false; g.n as usize + 1];
    reached[g.n as usize] = true;
    let mut count = 0;
    // Edges point to smaller labels, so one descending pass settles reachability.
    for k in (1..=g.n).rev() {
        if !reached[k as usize] {
            continue;
        }
        count += 1;
        for &t in g.out_edges(k) {
            if t as u64 != k {
                reached[t as usize] = true;
            }
        }
    }
    count
}

/// `n1 = ⌊n / ln n⌋`, clamped to `[1, n-1]`; the level at which the
/// normalized edge count is read off.
pub fn level_n1(n: u64) -> u64 {
    if n < 3 {
        return 1;
    }
    let n1 = (n as f64 / (n as f64).ln()).floor() as u64;
    n1.clamp(1, n - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceDepth {
    /// Only `X` (plus any requested recorded levels and `Ξ`).
    #[default]
    Count,
    /// `X` and the sum `P_0` of conditional reach probabilities.
    CountWithP,
    /// Every per-level array.
    Full,
}

#[derive(Debug, Clone, Default)]
pub struct TraceOptions {
    pub depth: TraceDepth,
    /// Levels `k` at which to record `Y_k` (in any order; out-of-range levels record 0).
    pub record_at: Vec<u64>,
    /// Compute `Ξ = Φ_{n1} Y_{n1} / n^((m-1)χ)`.
    pub xi: bool,
    /// End the sweep right after recording level `k` (count depth only). `X`
    /// then counts only the reached vertices above `k`, and `Ξ` is skipped.
    pub stop_at: Option<u64>,
}

/// Per-level arrays, each indexed by `k = 0..n-1` (`Z[0]`, `J[0]` are unused).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceArrays {
    pub y: Vec<u64>,
    pub z: Vec<u64>,
    pub j: Vec<bool>,
    pub phi: Vec<f64>,
    pub w: Vec<f64>,
    /// The compensator `A`, nonincreasing in `k` with `A[n-1] = 0`.
    pub a: Vec<f64>,
    /// `M = W + A`.
    pub mart: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescendantTrace {
    pub n: u64,
    pub m: u32,
    /// Exponent of `n` scaling `Y` and `P`.
    pub nu: f64,
    /// Exponent of `n` scaling `W`, `A` and `Ξ`.
    pub kappa: f64,
    pub x: u64,
    /// `Y_k` at each level of `TraceOptions::record_at`, in the same order.
    pub recorded: Vec<u64>,
    pub n1: u64,
    pub y_n1: Option<u64>,
    pub xi: Option<f64>,
    pub p0: Option<f64>,
    pub arrays: Option<TraceArrays>,
}

// Scaling exponents; for m = 1 and the uniform variant nu = kappa = 0.
fn exponents(params: &ModelParams) -> (f64, f64) {
    let mf = params.m as f64;
    if params.m < 2 || params.variant == Variant::Uniform {
        return (0.0, 0.0);
    }
    let rho = params.rho;
    let chi = (mf + rho) / (2.0 * mf + rho);
    let kappa = (mf - 1.0) * chi;
    (kappa / (1.0 + kappa), kappa)
}

/// Draws `N_k`, the number of self-loops vertex `k >= 2` receives.
fn sample_loops(stream: &mut RngStream, k: u64, m: u32, rho: f64) -> u32 {
    let mut red = 1.0 + rho;
    let mut black = (2 * (k - 1)) as f64 * m as f64 + (k - 1) as f64 * rho;
    let mut loops = 0;
    for _ in 0..m {
        if stream.uniform() * (red + black) < red {
            loops += 1;
            red += 2.0;
        } else {
            red += 1.0;
            black += 1.0;
        }
    }
    loops
}

fn shapes(k: u64, m: u32, rho: f64, loops: Option<u32>) -> (f64, f64) {
    match loops {
        None => beta_shapes(k, m, rho),
        Some(nk) => {
            let (mf, kf, nf) = (m as f64, k as f64, nk as f64);
            (mf + nf + rho, (2.0 * kf - 1.0) * mf - nf + (kf - 1.0) * rho)
        }
    }
}

/// `(1 - b)^y`, exact at `b = 1`.
#[inline]
fn survive(b: f64, y: u64) -> f64 {
    if y == 0 {
        1.0
    } else if b >= 1.0 {
        0.0
    } else {
        (y as f64 * (-b).ln_1p()).exp()
    }
}

/// Runs the recursion for the Pólya-urn, self-loop or uniform variant.
pub fn simulate_recursion(
    params: &ModelParams,
    stream: &mut RngStream,
    opts: &TraceOptions,
) -> Result<DescendantTrace> {
    params.validate()?;
    if params.variant == Variant::Sequential {
        return Err(invalid(
            "the recursion needs independent beta factors; use the polya-urn variant",
        ));
    }
    if params.variant == Variant::SelfLoop && params.rho <= -1.0 {
        return Err(invalid("the self-loop variant needs rho > -1"));
    }
    if opts.depth == TraceDepth::Full {
        simulate_full(params, stream, opts)
    } else {
        simulate_fast(params, stream, opts)
    }
}

fn simulate_fast(
    params: &ModelParams,
    stream: &mut RngStream,
    opts: &TraceOptions,
) -> Result<DescendantTrace> {
    let (n, m, rho) = (params.n, params.m, params.rho);
    let (nu, kappa) = exponents(params);
    let selfloop = params.variant == Variant::SelfLoop;
    let uniform = params.variant == Variant::Uniform;
    let want_p = opts.depth == TraceDepth::CountWithP;
    let n1 = level_n1(n);
    let want_xi = opts.xi && n >= 3 && opts.stop_at.is_none();

    // Recording levels visited in descending order.
    let mut order: Vec<usize> = (0..opts.record_at.len()).collect();
    order.sort_by(|&a, &b| opts.record_at[b].cmp(&opts.record_at[a]));
    let mut recorded = vec![0u64; opts.record_at.len()];
    let mut next_rec = 0;

    let mut trace = DescendantTrace {
        n,
        m,
        nu,
        kappa,
        x: 1,
        recorded: Vec::new(),
        n1,
        y_n1: None,
        xi: None,
        p0: want_p.then_some(0.0),
        arrays: None,
    };
    if n == 1 {
        trace.recorded = recorded;
        return Ok(trace);
    }

    let mut y = m as u64;
    if selfloop {
        y -= sample_loops(stream, n, m, rho) as u64;
    }
    let mut x = 1u64;
    let mut p0 = 0.0;
    let mut log_phi = 0.0;
    let mf1 = m as f64 - 1.0;

    for k in (1..n).rev() {
        while next_rec < order.len() && opts.record_at[order[next_rec]] >= k {
            if opts.record_at[order[next_rec]] == k {
                recorded[order[next_rec]] = y;
            }
            next_rec += 1;
        }
        if k == n1 {
            trace.y_n1 = Some(y);
        }
        if opts.stop_at == Some(k) {
            break;
        }
        if k == 1 {
            if y > 0 {
                x += 1;
                p0 += 1.0;
            }
            log_phi += (m as f64).ln();
            break;
        }
        let loops = if selfloop {
            Some(sample_loops(stream, k, m, rho))
        } else {
            None
        };
        let need_b = uniform || want_p || (want_xi && k <= n1);
        let z = if need_b {
            let b = if uniform {
                1.0 / k as f64
            } else {
                let (a, bb) = shapes(k, m, rho, loops);
                beta_unchecked(stream, a, bb)
            };
            if want_xi && k <= n1 {
                log_phi += (mf1 * b).ln_1p();
            }
            if want_p {
                p0 += 1.0 - survive(b, y);
            }
            sample_binomial(stream, y, b)
        } else if y == 0 {
            0
        } else {
            let (a, bb) = shapes(k, m, rho, loops);
            sample_beta_binomial(stream, y, a, bb)
        };
        if z > 0 {
            x += 1;
            y = y - z + (m - loops.unwrap_or(0)) as u64;
        }
        // Once nothing is pending and no later factor is needed, the rest is inert.
        if y == 0 && !(want_xi && k > 1) && !want_p {
            break;
        }
    }
    trace.x = x;
    trace.recorded = recorded;
    if want_p {
        trace.p0 = Some(p0);
    }
    if want_xi {
        let yn1 = trace.y_n1.unwrap_or(0);
        trace.y_n1 = Some(yn1);
        trace.xi = Some((log_phi - kappa * (n as f64).ln()).exp() * yn1 as f64);
    } else if trace.y_n1.is_none() && n >= 2 {
        trace.y_n1 = Some(0);
    }
    Ok(trace)
}

fn simulate_full(
    params: &ModelParams,
    stream: &mut RngStream,
    opts: &TraceOptions,
) -> Result<DescendantTrace> {
    let (n, m, rho) = (params.n, params.m, params.rho);
    if n > 50_000_000 {
        return Err(Error::Resource(format!(
            "a full trace at n = {n} needs more than 3 GB; use the count depth"
        )));
    }
    let (nu, kappa) = exponents(params);
    let nn = n as usize;
    let mf = m as f64;
    let selfloop = params.variant == Variant::SelfLoop;

    // All factors first: Φ_{k-1} enters the compensator at level k.
    let mut loops = vec![0u32; nn + 1];
    let mut b = vec![0.0; nn.max(2)];
    b[1] = 1.0;
    if selfloop {
        loops[1] = m;
        if n >= 2 {
            loops[nn] = sample_loops(stream, n, m, rho);
        }
    }
    for k in (2..nn).rev() {
        let kk = k as u64;
        b[k] = match params.variant {
            Variant::Uniform => 1.0 / kk as f64,
            Variant::SelfLoop => {
                loops[k] = sample_loops(stream, kk, m, rho);
                let (a, bb) = shapes(kk, m, rho, Some(loops[k]));
                beta_unchecked(stream, a, bb)
            }
            _ => {
                let (a, bb) = beta_shapes(kk, m, rho);
                beta_unchecked(stream, a, bb)
            }
        };
    }
    let mut phi = vec![1.0; nn];
    for k in 1..nn {
        phi[k] = phi[k - 1] * (1.0 + (mf - 1.0) * b[k]);
    }

    let mut arr = TraceArrays {
        y: vec![0; nn],
        z: vec![0; nn],
        j: vec![false; nn],
        phi,
        w: vec![0.0; nn],
        a: vec![0.0; nn],
        mart: vec![0.0; nn],
        p: vec![0.0; nn],
    };
    let mut x = 1u64;
    if n >= 2 {
        arr.y[nn - 1] = m as u64 - loops[nn] as u64;
    }
    for k in (1..nn).rev() {
        let y = arr.y[k];
        let z = sample_binomial(stream, y, b[k]);
        let j = z > 0;
        arr.z[k] = z;
        arr.j[k] = j;
        x += j as u64;
        let pw = survive(b[k], y);
        if k >= 2 {
            arr.y[k - 1] = y - z + if j { (m - loops[k]) as u64 } else { 0 };
            // W_k - E(W_{k-1} | F_k); Bernoulli's inequality makes it >= 0.
            let bernoulli_gap = if y <= 1 {
                0.0
            } else {
                (pw - 1.0 + b[k] * y as f64).max(0.0)
            };
            let inc = arr.phi[k - 1]
                * (mf * bernoulli_gap + loops[k] as f64 * (1.0 - pw));
            arr.a[k - 1] = arr.a[k] + inc;
        } else {
            // Vertex 1 has no out-edges, so W_0 = 0 and the last increment is W_1.
            arr.y[0] = 0;
            arr.a[0] = arr.a[1] + arr.phi[1] * y as f64;
        }
        arr.p[k - 1] = arr.p[k] + (1.0 - pw);
    }
    for k in 0..nn {
        arr.w[k] = arr.phi[k] * arr.y[k] as f64;
        arr.mart[k] = arr.w[k] + arr.a[k];
    }

    let n1 = level_n1(n);
    let recorded = opts
        .record_at
        .iter()
        .map(|&k| if k < n { arr.y[k as usize] } else { 0 })
        .collect();
    let (y_n1, xi) = if n >= 3 {
        let k = n1 as usize;
        let xi = arr.phi[k] * arr.y[k] as f64 / (n as f64).powf(kappa);
        (Some(arr.y[k]), opts.xi.then_some(xi))
    } else {
        (None, None)
    };
    Ok(DescendantTrace {
        n,
        m,
        nu,
        kappa,
        x,
        recorded,
        n1,
        y_n1,
        xi,
        p0: Some(arr.p[0]),
        arrays: Some(arr),
    })
}

impl DescendantTrace {
    /// Checks the structural identities of a full trace.
    pub fn check_invariants(&self) -> Result<()> {
        let arr = self.arrays.as_ref().ok_or(Error::MissingTrace("Y"))?;
        let n = self.n as usize;
        let fail = |msg: String| Err(Error::Domain(msg));
        if n < 2 {
            return Ok(());
        }
        if arr.y[0] != 0 {
            return fail(format!("Y[0] = {}", arr.y[0]));
        }
        let mut x = 1;
        for k in 1..n {
            if arr.z[k] > arr.y[k] {
                return fail(format!("Z[{k}] > Y[{k}]"));
            }
            if arr.j[k] != (arr.z[k] >= 1) {
                return fail(format!("J[{k}] disagrees with Z[{k}]"));
            }
            if k >= 2 && arr.y[k - 1] + arr.z[k] < arr.y[k] {
                return fail(format!("Y[{}] lost edges", k - 1));
            }
            x += arr.j[k] as u64;
            if arr.a[k - 1] < arr.a[k] {
                return fail(format!("A decreases at {k}"));
            }
        }
        if x != self.x {
            return fail(format!("X = {} but 1 + ΣJ = {x}", self.x));
        }
        if arr.a[n - 1] != 0.0 {
            return fail("A[n-1] != 0".into());
        }
        for k in 0..n {
            if arr.mart[k] != arr.w[k] + arr.a[k] || arr.w[k] != arr.phi[k] * arr.y[k] as f64 {
                return fail(format!("decomposition fails at {k}"));
            }
        }
        Ok(())
    }

    /// Writes the per-level arrays as CSV with columns `k,Y,Z,J,Phi,W,A,M,P`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let arr = self.arrays.as_ref().ok_or(Error::MissingTrace("Y"))?;
        let io = |e| Error::Io {
            path: "<trace>".into(),
            source: e,
        };
        writeln!(out, "k,Y,Z,J,Phi,W,A,M,P").map_err(io)?;
        for k in 0..self.n as usize {
            writeln!(
                out,
                "{},{},{},{},{:e},{:e},{:e},{:e},{:e}",
                k,
                arr.y[k],
                arr.z[k],
                arr.j[k] as u8,
                arr.phi[k],
                arr.w[k],
                arr.a[k],
                arr.mart[k],
                arr.p[k]
            )
            .map_err(io)?;
        }
        Ok(())
    }
}

/// Scaled processes at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    /// `Y / n^nu`
    pub y: f64,
    /// `W / n^kappa`
    pub w: f64,
    /// `A / n^kappa`
    pub a: f64,
    /// `P / n^nu`
    pub p: f64,
}

/// Reads the processes at index `t n^nu` (linearly interpolated, constant past
/// `n-1`) and rescales them.
pub fn extract_scaled_curves(trace: &DescendantTrace, t_grid: &[f64]) -> Result<Vec<CurvePoint>> {
    let arr = trace.arrays.as_ref().ok_or(Error::MissingTrace("Y"))?;
    let nf = trace.n as f64;
    let (snu, skappa) = (nf.powf(trace.nu), nf.powf(trace.kappa));
    let last = trace.n as usize - 1;
    let at = |v: &dyn Fn(usize) -> f64, s: f64| -> f64 {
        if s >= last as f64 {
            return v(last);
        }
        let lo = s.floor() as usize;
        let frac = s - lo as f64;
        if frac == 0.0 {
            v(lo)
        } else {
            v(lo) * (1.0 - frac) + v(lo + 1) * frac
        }
    };
    t_grid
        .iter()
        .map(|&t| {
            if !(t > 0.0) {
                return Err(invalid(format!("curve times must be positive, got {t}")));
            }
            let s = t * snu;
            Ok(CurvePoint {
                t,
                y: at(&|k| arr.y[k] as f64, s) / snu,
                w: at(&|k| arr.w[k], s) / skappa,
                a: at(&|k| arr.a[k], s) / skappa,
                p: at(&|k| arr.p[k], s) / snu,
            })
        })
        .collect()
}
