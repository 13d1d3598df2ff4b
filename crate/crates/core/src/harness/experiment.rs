use super::{parallel_map, ExperimentConfig, Pipeline, ResultRow, ResultTable, REFERENCE_STREAM_BASE};
use crate::descendants::{count_descendants, simulate_recursion, TraceDepth, TraceOptions};
use crate::error::{invalid, Result};
use crate::generators::generate;
use crate::randomness::make_stream;
use crate::stats::{quantile_sorted, sorted, summarize, two_sample_ks};
use crate::theory::{
    limit_law, limit_moment, limit_reference_sample, mean_curve_y, m1_drift,
    tree_expected_descendants, Variant,
};

/// What one replicate contributes: the descendant count and `Y` at the
/// levels derived from the configured `t_grid`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicateOutcome {
    pub x: u64,
    pub levels: Vec<u64>,
}

const QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

fn curve_levels(config: &ExperimentConfig, nu: f64) -> Vec<u64> {
    let n = config.params.n;
    let scale = (n as f64).powf(nu);
    config
        .t_grid
        .iter()
        .map(|t| ((t * scale).floor() as u64).min(n.saturating_sub(1)))
        .collect()
}

fn limit_exponent(config: &ExperimentConfig) -> Option<f64> {
    let p = &config.params;
    if p.m < 2 || p.variant == Variant::Uniform {
        return None;
    }
    limit_law(p.m, p.rho).ok().map(|l| l.constants.nu)
}

/// Runs every replicate (replicate `r` draws from stream `r`).
pub fn run_replicates(config: &ExperimentConfig) -> Result<Vec<ReplicateOutcome>> {
    config.validate()?;
    let params = config.params;
    if config.pipeline == Pipeline::Recursion && params.variant == Variant::Sequential {
        return Err(invalid(
            "the sequential variant has no recursion pipeline; use the graph pipeline",
        ));
    }
    let levels = match limit_exponent(config) {
        Some(nu) if config.pipeline == Pipeline::Recursion => curve_levels(config, nu),
        _ => Vec::new(),
    };
    let opts = TraceOptions {
        depth: match config.trace_depth {
            TraceDepth::Full => TraceDepth::CountWithP,
            d => d,
        },
        record_at: levels.clone(),
        xi: false,
        stop_at: None,
    };
    parallel_map(config.threads, config.replicates, |r| {
        let mut stream = make_stream(params.master_seed, r);
        match config.pipeline {
            Pipeline::GraphBfs => {
                let g = generate(&params, &mut stream)?;
                Ok(ReplicateOutcome {
                    x: count_descendants(&g),
                    levels: Vec::new(),
                })
            }
            Pipeline::Recursion => {
                let t = simulate_recursion(&params, &mut stream, &opts)?;
                Ok(ReplicateOutcome {
                    x: t.x,
                    levels: t.recorded,
                })
            }
        }
    })
}

/// Simulates `X` for every replicate and summarizes `X / n^nu` against the
/// limit law: moments, quantiles, KS distance and mean curve values.
pub fn run_distribution_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    let outcomes = run_replicates(config)?;
    let p = config.params;
    let reps = config.replicates;
    let variant = p.variant.as_str();
    let row = |name: String, estimate: f64| {
        ResultRow::new(name, variant, estimate)
            .model(p.m, p.rho, p.n)
            .replicates(reps)
    };
    let nf = p.n as f64;
    let xs: Vec<f64> = outcomes.iter().map(|o| o.x as f64).collect();
    let mut rows = Vec::new();

    let Some(nu) = limit_exponent(config) else {
        let s = summarize(&xs)?;
        let mut r = row("mean(X)".into(), s.mean).stderr(s.stderr);
        if p.m == 1 && p.variant != Variant::Uniform {
            r = r.reference(
                tree_expected_descendants(p.n, p.rho)?,
                "tree_expected_descendants",
            );
            rows.push(r);
            let scaled: Vec<f64> = xs.iter().map(|x| x / nf.ln()).collect();
            let s = summarize(&scaled)?;
            rows.push(
                row("mean(X/ln n)".into(), s.mean)
                    .stderr(s.stderr)
                    .reference(m1_drift(p.rho)?, "m1_drift"),
            );
        } else {
            rows.push(r);
        }
        return Ok(ResultTable { rows });
    };

    let law = limit_law(p.m, p.rho)?;
    let scale = nf.powf(nu);
    let scaled: Vec<f64> = xs.iter().map(|x| x / scale).collect();
    let s = summarize(&scaled)?;
    rows.push(
        row("mean(X/n^nu)".into(), s.mean)
            .stderr(s.stderr)
            .reference(limit_moment(&law, 1.0)?, "limit_moment(p=1)"),
    );
    if let Some(var) = s.variance {
        let m1 = limit_moment(&law, 1.0)?;
        rows.push(row("var(X/n^nu)".into(), var).reference(
            limit_moment(&law, 2.0)? - m1 * m1,
            "limit_moment(p=2) - limit_moment(p=1)^2",
        ));
    }
    for &order in &config.moments {
        let powered: Vec<f64> = scaled.iter().map(|x| x.powf(order)).collect();
        let s = summarize(&powered)?;
        rows.push(
            row(format!("moment(X/n^nu,p={order})"), s.mean)
                .stderr(s.stderr)
                .reference(limit_moment(&law, order)?, format!("limit_moment(p={order})")),
        );
    }

    let mut ref_stream = make_stream(p.master_seed, REFERENCE_STREAM_BASE);
    let reference = limit_reference_sample(&law, config.reference_size, &mut ref_stream);
    let sample = sorted(scaled);
    let ref_label = format!("limit_reference_sample(size={})", config.reference_size);
    for q in QUANTILES {
        rows.push(
            row(format!("quantile(X/n^nu,q={q})"), quantile_sorted(&sample, q)?)
                .reference(quantile_sorted(&reference, q)?, format!("{ref_label} quantile")),
        );
    }
    rows.push(
        row("ks(X/n^nu)".into(), two_sample_ks(&sample, &reference)?)
            .provenance(format!("two_sample_ks against {ref_label}")),
    );

    for (i, &t) in config.t_grid.iter().enumerate() {
        let ys: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.levels.get(i).map(|&y| y as f64 / scale))
            .collect();
        if ys.is_empty() {
            continue;
        }
        let s = summarize(&ys)?;
        rows.push(
            row(format!("mean(Y/n^nu,t={t})"), s.mean)
                .stderr(s.stderr)
                .reference(mean_curve_y(t, p.m, p.rho)?, format!("mean_curve_y(t={t})")),
        );
    }
    Ok(ResultTable { rows })
}
