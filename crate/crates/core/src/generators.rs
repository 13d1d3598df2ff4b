//! Graph generators for the four model variants.
//!
//! Vertices are numbered from 1. Vertex `k >= 2` sends `m` edges to earlier
//! vertices (or, in the self-loop variant, possibly to itself).

use std::io::Write;

use crate::error::{invalid, Result};
use crate::randomness::{beta_unchecked, RngStream};
use crate::theory::{beta_shapes, ModelParams, Variant};

/// Out-edges of a generated graph, stored flat: the `m` targets of vertex `k`
/// occupy `targets[(k-2)m .. (k-1)m]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    pub n: u64,
    pub m: u32,
    pub allows_loops: bool,
    pub targets: Vec<u32>,
}

impl Digraph {
    fn with_capacity(n: u64, m: u32, allows_loops: bool) -> Self {
        let len = (n.saturating_sub(1) * m as u64) as usize;
        Digraph {
            n,
            m,
            allows_loops,
            targets: Vec::with_capacity(len),
        }
    }

    /// Targets of vertex `k` (empty for `k = 1`).
    pub fn out_edges(&self, k: u64) -> &[u32] {
        if k < 2 {
            return &[];
        }
        let m = self.m as usize;
        let start = (k as usize - 2) * m;
        &self.targets[start..start + m]
    }

    /// Target of the `l`-th edge (1-based) of vertex `k`.
    pub fn target(&self, k: u64, l: u32) -> u32 {
        self.out_edges(k)[l as usize - 1]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    /// Degrees `d_j(n)` indexed by vertex (index 0 unused). A loop adds 2 to its
    /// vertex, and in the self-loop variant vertex 1 carries `m` initial loops.
    pub fn degrees(&self) -> Vec<u64> {
        let mut d = vec![0u64; self.n as usize + 1];
        if self.allows_loops && self.n >= 1 {
            d[1] = 2 * self.m as u64;
        }
        for k in 2..=self.n {
            for &t in self.out_edges(k) {
                d[k as usize] += 1;
                d[t as usize] += 1;
            }
        }
        d
    }

    /// Checks the structural invariants: `m` edges per vertex `k >= 2`, each
    /// into `[1, k-1]` (or `[1, k]` when loops are allowed).
    pub fn validate(&self) -> Result<()> {
        let expected = self.n.saturating_sub(1) as usize * self.m as usize;
        if self.targets.len() != expected {
            return Err(invalid(format!(
                "expected {expected} targets, found {}",
                self.targets.len()
            )));
        }
        for k in 2..=self.n {
            let top = if self.allows_loops { k } else { k - 1 };
            for &t in self.out_edges(k) {
                if t < 1 || t as u64 > top {
                    return Err(invalid(format!("vertex {k} has an edge to {t}")));
                }
            }
        }
        Ok(())
    }

    /// Writes the graph as a tab-separated edge list preceded by a header line.
    pub fn write_edge_list<W: Write>(
        &self,
        out: &mut W,
        rho: f64,
        variant: Variant,
        seed: u64,
    ) -> std::io::Result<()> {
        writeln!(
            out,
            "# pa-graph n={} m={} rho={} variant={} seed={}",
            self.n, self.m, rho, variant, seed
        )?;
        for k in 2..=self.n {
            for &t in self.out_edges(k) {
                writeln!(out, "{k}\t{t}")?;
            }
        }
        Ok(())
    }
}

/// Beta variables behind a Pólya-urn graph.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaTrace {
    /// `b[j] = B_j` for `1 <= j <= n-1`, with `b[0]` unused; empty when the
    /// graph was built sequentially.
    pub b: Vec<f64>,
    /// `s[j] = S_{n,j}` for `0 <= j <= n-1`.
    pub s: Option<Vec<f64>>,
    /// `loops[i] = N_i`, the number of self-loops at vertex `i` (index 0 unused).
    pub loops: Option<Vec<u32>>,
}

fn expect_variant(params: &ModelParams, variant: Variant) -> Result<()> {
    params.validate()?;
    if params.variant != variant {
        return Err(invalid(format!(
            "expected variant {variant}, got {}",
            params.variant
        )));
    }
    if params.n > u32::MAX as u64 {
        return Err(invalid("n must fit in 32 bits for explicit graphs"));
    }
    Ok(())
}

/// How the sequential generator draws each target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequentialMethod {
    /// Mixture sampling when `rho >= 0`, weight scan otherwise.
    Auto,
    /// O(1) per edge: a uniform endpoint slot or, with probability
    /// proportional to `(k-1) rho`, a uniform vertex.
    Mixture,
    /// O(k) per edge: explicit scan of the attachment weights.
    Scan,
}

/// Edge-by-edge preferential attachment: the `l`-th edge of vertex `k` picks
/// `j < k` with weight `d_j + (edges already sent from k to j) + rho`.
pub fn gen_sequential(params: &ModelParams, stream: &mut RngStream) -> Result<Digraph> {
    gen_sequential_with(params, stream, SequentialMethod::Auto)
}

pub fn gen_sequential_with(
    params: &ModelParams,
    stream: &mut RngStream,
    method: SequentialMethod,
) -> Result<Digraph> {
    expect_variant(params, Variant::Sequential)?;
    let mixture = match method {
        SequentialMethod::Auto => params.rho >= 0.0,
        SequentialMethod::Mixture => {
            if params.rho < 0.0 {
                return Err(invalid("mixture sampling needs rho >= 0"));
            }
            true
        }
        SequentialMethod::Scan => false,
    };
    let (n, m) = (params.n, params.m);
    let mut g = Digraph::with_capacity(n, m, false);
    if n >= 2 {
        g.targets.extend(std::iter::repeat_n(1, m as usize));
    }
    if mixture {
        sequential_mixture(&mut g, params.rho, stream);
    } else {
        sequential_scan(&mut g, params.rho, stream);
    }
    Ok(g)
}

fn sequential_mixture(g: &mut Digraph, rho: f64, stream: &mut RngStream) {
    let (n, m) = (g.n, g.m as usize);
    // Every edge endpoint placed so far; a uniform slot is a degree-biased vertex.
    let mut slots: Vec<u32> = Vec::with_capacity(2 * m * n as usize);
    if n >= 2 {
        slots.extend(std::iter::repeat_n(2, m));
        slots.extend(std::iter::repeat_n(1, m));
    }
    for k in 3..=n {
        let vertices = (k - 1) as f64;
        for _ in 0..m {
            let len = slots.len() as f64;
            let t = if rho == 0.0 || stream.uniform() * (len + vertices * rho) < len {
                slots[stream.below(slots.len() as u64) as usize]
            } else {
                1 + stream.below(k - 1) as u32
            };
            g.targets.push(t);
            slots.push(t);
        }
        slots.extend(std::iter::repeat_n(k as u32, m));
    }
}

fn sequential_scan(g: &mut Digraph, rho: f64, stream: &mut RngStream) {
    let (n, m) = (g.n, g.m);
    let mut deg = vec![0u64; n as usize + 1];
    if n >= 2 {
        deg[1] = m as u64;
        deg[2] = m as u64;
    }
    for k in 3..=n {
        for l in 0..m {
            let total = 2.0 * m as f64 * (k - 2) as f64 + l as f64 + (k - 1) as f64 * rho;
            let mut u = stream.uniform() * total;
            let mut t = k - 1;
            for j in 1..k {
                let w = deg[j as usize] as f64 + rho;
                if u < w {
                    t = j;
                    break;
                }
                u -= w;
            }
            deg[t as usize] += 1;
            g.targets.push(t as u32);
        }
        deg[k as usize] += m as u64;
    }
}

/// Options for [`gen_polya_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PolyaOptions {
    /// Resolve targets against `ln S_{n,j}` instead of `S_{n,j}`.
    pub log_space: bool,
}

/// Pólya-urn construction: `B_j ~ Beta(m+ρ, (2j-3)m + (j-1)ρ)`, `S_{n,j}` the
/// products of `1 - B_i` above `j`, and edge `(k, l)` goes to the `i` with
/// `S_{n,k-1} Ũ ∈ [S_{n,i-1}, S_{n,i})`.
pub fn gen_polya(params: &ModelParams, stream: &mut RngStream) -> Result<(Digraph, BetaTrace)> {
    gen_polya_with(params, stream, PolyaOptions::default())
}

pub fn gen_polya_with(
    params: &ModelParams,
    stream: &mut RngStream,
    opts: PolyaOptions,
) -> Result<(Digraph, BetaTrace)> {
    expect_variant(params, Variant::PolyaUrn)?;
    let (n, m, rho) = (params.n, params.m, params.rho);
    let nu = n as usize;
    let mut b = vec![0.0; nu.max(1)];
    if nu >= 2 {
        b[1] = 1.0;
    }
    for (j, slot) in b.iter_mut().enumerate().skip(2) {
        let (a, bb) = beta_shapes(j as u64, m, rho);
        *slot = beta_unchecked(stream, a, bb);
    }
    let mut g = Digraph::with_capacity(n, m, false);
    if nu < 2 {
        return Ok((
            g,
            BetaTrace {
                b,
                s: Some(vec![1.0]),
                loops: None,
            },
        ));
    }
    let mut s = vec![0.0; nu];
    s[nu - 1] = 1.0;
    if opts.log_space {
        let mut ls = vec![0.0; nu];
        for j in (1..nu - 1).rev() {
            ls[j] = ls[j + 1] + (-b[j + 1]).ln_1p();
        }
        ls[0] = f64::NEG_INFINITY;
        for k in 2..=nu {
            for _ in 0..m {
                let lu = ls[k - 1] + stream.uniform().ln();
                let i = ls[..k].partition_point(|&x| x <= lu).min(k - 1);
                g.targets.push(i as u32);
            }
        }
        for j in 0..nu {
            s[j] = ls[j].exp();
        }
    } else {
        for j in (1..nu - 1).rev() {
            s[j] = s[j + 1] * (1.0 - b[j + 1]);
        }
        for k in 2..=nu {
            for _ in 0..m {
                let i = resolve_target(&s, k, stream.uniform());
                g.targets.push(i as u32);
            }
        }
    }
    Ok((
        g,
        BetaTrace {
            b,
            s: Some(s),
            loops: None,
        },
    ))
}

/// The vertex `i in [1, k-1]` whose interval `[S[i-1], S[i])` contains
/// `S[k-1]·u`; the leftmost such `i` if intervals are degenerate.
pub fn resolve_target(s: &[f64], k: usize, u: f64) -> usize {
    let x = s[k - 1] * u;
    s[..k].partition_point(|&v| v <= x).clamp(1, k - 1)
}

/// Sequential attachment with self-loops: vertex 1 starts with `m` loops, and
/// the `l`-th edge of vertex `k` picks `j < k` with weight
/// `d_j + (edges from k to j so far) + rho` or `k` itself with weight
/// `l + 1 + (loops so far) + rho`.
pub fn gen_selfloop(
    params: &ModelParams,
    stream: &mut RngStream,
) -> Result<(Digraph, BetaTrace)> {
    expect_variant(params, Variant::SelfLoop)?;
    if params.rho <= -1.0 {
        return Err(invalid(format!(
            "the self-loop weight 1 + rho of a first edge must be positive, got rho = {}",
            params.rho
        )));
    }
    let (n, m, rho) = (params.n, params.m, params.rho);
    let mut g = Digraph::with_capacity(n, m, true);
    let mut loops = vec![0u32; n as usize + 1];
    loops[1] = m;
    if rho >= 0.0 {
        let mut slots: Vec<u32> = Vec::with_capacity(2 * m as usize * n as usize);
        slots.extend(std::iter::repeat_n(1, 2 * m as usize));
        for k in 2..=n {
            for _ in 0..m {
                slots.push(k as u32);
                let len = slots.len() as f64;
                let t = if rho == 0.0 || stream.uniform() * (len + k as f64 * rho) < len {
                    slots[stream.below(slots.len() as u64) as usize]
                } else {
                    1 + stream.below(k) as u32
                };
                if t as u64 == k {
                    loops[k as usize] += 1;
                }
                g.targets.push(t);
                slots.push(t);
            }
        }
    } else {
        let mut deg = vec![0u64; n as usize + 1];
        deg[1] = 2 * m as u64;
        for k in 2..=n {
            for l in 0..m {
                deg[k as usize] += 1;
                let total = 2.0 * m as f64 * (k - 1) as f64
                    + 2.0 * l as f64
                    + 1.0
                    + k as f64 * rho;
                let mut u = stream.uniform() * total;
                let mut t = k;
                for j in 1..=k {
                    let w = deg[j as usize] as f64 + rho;
                    if u < w {
                        t = j;
                        break;
                    }
                    u -= w;
                }
                deg[t as usize] += 1;
                if t == k {
                    loops[k as usize] += 1;
                }
                g.targets.push(t as u32);
            }
        }
    }
    Ok((
        g,
        BetaTrace {
            b: Vec::new(),
            s: None,
            loops: Some(loops),
        },
    ))
}

/// Uniform attachment: every target independent and uniform on `[1, k-1]`.
pub fn gen_uniform(m: u32, n: u64, stream: &mut RngStream) -> Result<Digraph> {
    if m == 0 || n == 0 {
        return Err(invalid("m and n must be positive"));
    }
    if n > u32::MAX as u64 {
        return Err(invalid("n must fit in 32 bits for explicit graphs"));
    }
    let mut g = Digraph::with_capacity(n, m, false);
    for k in 2..=n {
        for _ in 0..m {
            g.targets.push(1 + stream.below(k - 1) as u32);
        }
    }
    Ok(g)
}

/// Generates a graph of whichever variant `params` names.
pub fn generate(params: &ModelParams, stream: &mut RngStream) -> Result<Digraph> {
    match params.variant {
        Variant::Sequential => gen_sequential(params, stream),
        Variant::PolyaUrn => gen_polya(params, stream).map(|r| r.0),
        Variant::SelfLoop => gen_selfloop(params, stream).map(|r| r.0),
        Variant::Uniform => gen_uniform(params.m, params.n, stream),
    }
}

const MAX_TUPLES: usize = 10_000_000;

/// Mixed-radix index of the ordered target tuple of vertices `3..=n`
/// (vertex 2 is deterministic); the digit for each edge of `k` has base `k-1`.
pub fn tuple_code(g: &Digraph) -> usize {
    let mut code = 0usize;
    for k in 3..=g.n {
        for &t in g.out_edges(k) {
            code = code * (k as usize - 1) + (t as usize - 1);
        }
    }
    code
}

/// Exact probabilities of every target tuple of the sequential model at small
/// `n`, indexed by [`tuple_code`].
pub fn sequential_tuple_probabilities(m: u32, rho: f64, n: u64) -> Result<Vec<f64>> {
    ModelParams::new(Variant::Sequential, m, rho, n, 0).validate()?;
    let mut size = 1usize;
    for k in 3..=n {
        for _ in 0..m {
            size = size.saturating_mul(k as usize - 1);
        }
    }
    if size > MAX_TUPLES {
        return Err(invalid(format!("{size} tuples is too many to enumerate")));
    }
    let mut probs = vec![0.0; size];
    let mut deg = vec![0u64; n as usize + 1];
    if n >= 2 {
        deg[1] = m as u64;
        deg[2] = m as u64;
    }
    enumerate_tuples(3, 0, 0, 1.0, n, m, rho, &mut deg, &mut probs);
    Ok(probs)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_tuples(
    k: u64,
    l: u32,
    code: usize,
    prob: f64,
    n: u64,
    m: u32,
    rho: f64,
    deg: &mut [u64],
    probs: &mut [f64],
) {
    if k > n {
        probs[code] += prob;
        return;
    }
    if l == m {
        deg[k as usize] += m as u64;
        enumerate_tuples(k + 1, 0, code, prob, n, m, rho, deg, probs);
        deg[k as usize] -= m as u64;
        return;
    }
    let total = 2.0 * m as f64 * (k - 2) as f64 + l as f64 + (k - 1) as f64 * rho;
    for j in 1..k {
        let w = deg[j as usize] as f64 + rho;
        deg[j as usize] += 1;
        let next = code * (k as usize - 1) + (j as usize - 1);
        enumerate_tuples(k, l + 1, next, prob * w / total, n, m, rho, deg, probs);
        deg[j as usize] -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomness::make_stream;

    fn params(variant: Variant, m: u32, rho: f64, n: u64) -> ModelParams {
        ModelParams::new(variant, m, rho, n, 9)
    }

    #[test]
    fn tiny_graphs() {
        let mut s = make_stream(1, 0);
        let g = gen_sequential(&params(Variant::Sequential, 3, 0.0, 1), &mut s).unwrap();
        assert!(g.targets.is_empty());
        let g = gen_sequential(&params(Variant::Sequential, 3, 0.5, 2), &mut s).unwrap();
        assert_eq!(g.targets, vec![1, 1, 1]);
        let (g, _) = gen_polya(&params(Variant::PolyaUrn, 2, 0.0, 2), &mut s).unwrap();
        assert_eq!(g.targets, vec![1, 1]);
        let g = gen_uniform(4, 2, &mut s).unwrap();
        assert_eq!(g.targets, vec![1; 4]);
        let (g, t) = gen_selfloop(&params(Variant::SelfLoop, 2, 0.0, 1), &mut s).unwrap();
        assert!(g.targets.is_empty());
        assert_eq!(t.loops.unwrap()[1], 2);
    }

    #[test]
    fn half_open_resolution() {
        let s = [0.0, 0.25, 1.0];
        assert_eq!(resolve_target(&s, 3, 0.25), 2);
        assert_eq!(resolve_target(&s, 3, 0.2499), 1);
        assert_eq!(resolve_target(&s, 3, 0.999), 2);
    }

    #[test]
    fn tuple_probabilities_sum_to_one() {
        let p = sequential_tuple_probabilities(2, 0.0, 4).unwrap();
        assert_eq!(p.len(), 36);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // Vertex 3, first edge: d_1 = d_2 = 2, so each has probability 1/2.
        let first_to_1: f64 = p[..18].iter().sum();
        assert!((first_to_1 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn variant_mismatch_rejected() {
        let mut s = make_stream(0, 0);
        assert!(gen_polya(&params(Variant::Sequential, 2, 0.0, 5), &mut s).is_err());
        assert!(gen_selfloop(&params(Variant::SelfLoop, 2, -1.5, 5), &mut s).is_err());
        assert!(gen_sequential(&params(Variant::Sequential, 2, -2.0, 5), &mut s).is_err());
    }

    #[test]
    fn edge_list_format() {
        let mut s = make_stream(0, 0);
        let g = gen_uniform(2, 3, &mut s).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf, 0.0, Variant::Uniform, 5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# pa-graph n=3 m=2 rho=0 variant=uniform seed=5");
        assert_eq!(lines[1], "2\t1");
        assert_eq!(lines.len(), 5);
    }
}
