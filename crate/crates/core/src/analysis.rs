//! Statistical machinery: log-linear scaling regressions with bootstrap
//! confidence intervals, slope ratios, the multiplicative decomposition
//! fit, Cohen's d, and per-task difficulty tables.
//!
//! Every randomized procedure draws from a counter-based PRNG (ChaCha8)
//! with the stream derived from (seed, replicate index), so replicates are
//! independent of evaluation order and results are identical across runs,
//! platforms, and thread counts.
//!
//! Slope intervals use the studentized bootstrap (2.5/97.5 quantiles of
//! the pivot `(b* - b) / se*` over resampled point sets): the plain
//! percentile interval under-covers noticeably at the 18-point sample
//! sizes these regressions run at, while the studentized interval holds
//! its nominal level there. Ratio and rate intervals, which have no
//! natural studentization, use the percentile method. The identity
//! replicate is always part of the pool, keeping every interval closed
//! over its point estimate.

use crate::metrics::EvalRecord;
use num_rational::Ratio;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("all predictor values are equal; the slope is undefined")]
    DegenerateX,
    #[error("pooled variance is zero; Cohen's d is undefined")]
    ZeroPooledVariance,
    #[error("each group needs at least 2 values")]
    GroupTooSmall,
    #[error("denominator slope {0} is too close to zero")]
    DenominatorSlopeNearZero(f64),
    #[error("panel model `{model_id}` has no record for task `{task_id}`")]
    MissingRecord { model_id: String, task_id: String },
    #[error("no records given")]
    EmptyInput,
    #[error("model parameters must be positive, got {0}")]
    NonPositiveParams(f64),
}

/// One model's operating point for scaling analysis. Parameter counts are
/// total (not active) in billions; rates are fractions in [0, 1].
#[derive(Clone, Debug)]
pub struct ModelPoint {
    pub model_id: String,
    pub total_params_b: f64,
    pub f: f64,
    pub s: f64,
    pub si: f64,
}

/// Ordinary least squares fit with an optional bootstrap interval on the
/// slope. For the scaling regressions, `beta1` is in percentage points per
/// order of magnitude of parameter count.
#[derive(Clone, Debug)]
pub struct RegressionFit {
    pub beta0: f64,
    pub beta1: f64,
    pub r_squared: f64,
    pub ci95: Option<(f64, f64)>,
    pub seed: Option<u64>,
    pub resamples: usize,
}

/// (beta0, beta1, r_squared, slope standard error); `None` when all x are
/// equal.
fn ols(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64, f64)> {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let beta1 = sxy / sxx;
    let beta0 = mean_y - beta1 * mean_x;
    let mut ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (beta0 + beta1 * x);
            e * e
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    // Residuals that only float rounding keeps from zero are an exact fit;
    // without the clamp they produce astronomically small standard errors
    // and blow up studentized pivots on tiny resamples.
    if ss_res < ss_tot * 1e-12 {
        ss_res = 0.0;
    }
    // A flat response has no variance to explain; report R^2 = 0.
    let r_squared = if ss_tot == 0.0 { 0.0 } else { 1.0 - ss_res / ss_tot };
    let se = if n > 2.0 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some((beta0, beta1, r_squared, se))
}

fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

fn percentile_ci(mut values: Vec<f64>) -> (f64, f64) {
    values.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in bootstrap pool"));
    (percentile(&values, 0.025), percentile(&values, 0.975))
}

/// OLS of `rate` (percentage points) on log10(params in billions), with a
/// studentized bootstrap CI on the slope from `resamples` resamples drawn
/// with replacement. Deterministic under a fixed seed.
pub fn loglinear_fit(
    points: &[(f64, f64)],
    seed: u64,
    resamples: usize,
) -> Result<RegressionFit, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::TooFewPoints {
            need: 3,
            got: points.len(),
        });
    }
    for (params, _) in points {
        if *params <= 0.0 {
            return Err(AnalysisError::NonPositiveParams(*params));
        }
    }
    let xs: Vec<f64> = points.iter().map(|(p, _)| p.log10()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, r)| *r).collect();
    let (beta0, beta1, r_squared, se) = ols(&xs, &ys).ok_or(AnalysisError::DegenerateX)?;

    // Exact fits have nothing to resample: the interval collapses onto the
    // estimate.
    let ci95 = if se == 0.0 {
        (beta1, beta1)
    } else {
        // The identity replicate contributes pivot 0 / slope beta1.
        let mut pivots = Vec::with_capacity(resamples + 1);
        pivots.push(0.0);
        let mut slopes = Vec::with_capacity(resamples + 1);
        slopes.push(beta1);
        let n = points.len();
        let mut rx = vec![0.0; n];
        let mut ry = vec![0.0; n];
        for r in 1..=resamples as u64 {
            let mut rng = replicate_rng(seed, r);
            for i in 0..n {
                let k = rng.random_range(0..n);
                rx[i] = xs[k];
                ry[i] = ys[k];
            }
            // Resamples that collapse onto one x value carry no slope at
            // all; resamples their line fits exactly carry a slope but no
            // studentizable spread.
            if let Some((_, b1, _, se_r)) = ols(&rx, &ry) {
                slopes.push(b1);
                if se_r > 0.0 {
                    pivots.push((b1 - beta1) / se_r);
                }
            }
        }
        if (pivots.len() - 1) * 2 >= resamples {
            let (q_lo, q_hi) = percentile_ci(pivots);
            (beta1 - q_hi * se, beta1 - q_lo * se)
        } else {
            // Too few studentizable resamples (very small point sets):
            // fall back to the percentile interval over slopes.
            percentile_ci(slopes)
        }
    };

    Ok(RegressionFit {
        beta0,
        beta1,
        r_squared,
        ci95: Some(ci95),
        seed: Some(seed),
        resamples,
    })
}

/// Ratio of two regression slopes with a paired bootstrap CI: each
/// replicate resamples the model set once and refits both regressions on
/// the same indices. `paired_points` rows are (params, numerator rate,
/// denominator rate).
pub fn slope_ratio(
    fit_num: &RegressionFit,
    fit_den: &RegressionFit,
    paired_points: &[(f64, f64, f64)],
    seed: u64,
    resamples: usize,
    epsilon: f64,
) -> Result<(f64, (f64, f64)), AnalysisError> {
    if paired_points.len() < 3 {
        return Err(AnalysisError::TooFewPoints {
            need: 3,
            got: paired_points.len(),
        });
    }
    if fit_den.beta1.abs() < epsilon {
        return Err(AnalysisError::DenominatorSlopeNearZero(fit_den.beta1));
    }
    let ratio = fit_num.beta1 / fit_den.beta1;

    let xs: Vec<f64> = paired_points.iter().map(|(p, _, _)| p.log10()).collect();
    let nums: Vec<f64> = paired_points.iter().map(|(_, a, _)| *a).collect();
    let dens: Vec<f64> = paired_points.iter().map(|(_, _, b)| *b).collect();
    let n = paired_points.len();

    let mut ratios = Vec::with_capacity(resamples + 1);
    ratios.push(ratio);
    let mut rx = vec![0.0; n];
    let mut ra = vec![0.0; n];
    let mut rb = vec![0.0; n];
    for r in 1..=resamples as u64 {
        let mut rng = replicate_rng(seed, r);
        for i in 0..n {
            let k = rng.random_range(0..n);
            rx[i] = xs[k];
            ra[i] = nums[k];
            rb[i] = dens[k];
        }
        let (Some((_, bn, _, _)), Some((_, bd, _, _))) = (ols(&rx, &ra), ols(&rx, &rb)) else {
            continue;
        };
        if bd.abs() < epsilon {
            continue;
        }
        ratios.push(bn / bd);
    }
    Ok((ratio, percentile_ci(ratios)))
}

/// OLS of the safety rate on the product `F * SI`; all three rates as
/// fractions in [0, 1]. Near-unit slope, near-zero intercept and high R^2
/// indicate the multiplicative decomposition holds.
pub fn decomposition_fit(points: &[(f64, f64, f64)]) -> Result<RegressionFit, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::TooFewPoints {
            need: 3,
            got: points.len(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|(f, si, _)| f * si).collect();
    let ys: Vec<f64> = points.iter().map(|(_, _, s)| *s).collect();
    let (beta0, beta1, r_squared, _) = ols(&xs, &ys).ok_or(AnalysisError::DegenerateX)?;
    Ok(RegressionFit {
        beta0,
        beta1,
        r_squared,
        ci95: None,
        seed: None,
        resamples: 0,
    })
}

/// Standardized mean difference `(mean_b - mean_a) / pooled SD` with the
/// pooled standard deviation over both groups.
pub fn cohens_d(group_a: &[f64], group_b: &[f64]) -> Result<f64, AnalysisError> {
    if group_a.len() < 2 || group_b.len() < 2 {
        return Err(AnalysisError::GroupTooSmall);
    }
    let mean = |g: &[f64]| g.iter().sum::<f64>() / g.len() as f64;
    let var = |g: &[f64], m: f64| g.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (g.len() - 1) as f64;
    let (ma, mb) = (mean(group_a), mean(group_b));
    let (va, vb) = (var(group_a, ma), var(group_b, mb));
    let na = group_a.len() as f64;
    let nb = group_b.len() as f64;
    let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    if pooled <= 0.0 {
        return Err(AnalysisError::ZeroPooledVariance);
    }
    Ok((mb - ma) / pooled.sqrt())
}

/// Per-task failure fractions over a fixed model panel, for each of the
/// three metrics, in increments of 1/|panel|.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DifficultyRow {
    pub f: Ratio<i64>,
    pub s: Ratio<i64>,
    pub si: Ratio<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DifficultyTable {
    pub panel: Vec<String>,
    pub tasks: BTreeMap<String, DifficultyRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DifficultyMetric {
    Feasibility,
    Safety,
    SafetyIntention,
}

/// Builds the difficulty table from a complete panel: every model must have
/// exactly one record for every task.
pub fn difficulty_table(records: &[EvalRecord]) -> Result<DifficultyTable, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let panel: BTreeSet<String> = records.iter().map(|r| r.model_id.clone()).collect();
    let tasks: BTreeSet<String> = records.iter().map(|r| r.task_id.clone()).collect();
    let mut by_key: BTreeMap<(String, String), &EvalRecord> = BTreeMap::new();
    for r in records {
        by_key.insert((r.model_id.clone(), r.task_id.clone()), r);
    }
    let k = panel.len() as i64;
    let mut rows = BTreeMap::new();
    for task in &tasks {
        let mut fails = (0i64, 0i64, 0i64);
        for model in &panel {
            let rec = by_key
                .get(&(model.clone(), task.clone()))
                .ok_or_else(|| AnalysisError::MissingRecord {
                    model_id: model.clone(),
                    task_id: task.clone(),
                })?;
            fails.0 += !rec.feasible as i64;
            fails.1 += !rec.safe as i64;
            fails.2 += !rec.si as i64;
        }
        rows.insert(
            task.clone(),
            DifficultyRow {
                f: Ratio::new(fails.0, k),
                s: Ratio::new(fails.1, k),
                si: Ratio::new(fails.2, k),
            },
        );
    }
    Ok(DifficultyTable {
        panel: panel.into_iter().collect(),
        tasks: rows,
    })
}

impl DifficultyTable {
    fn difficulty(&self, task: &str, metric: DifficultyMetric) -> Option<Ratio<i64>> {
        let row = self.tasks.get(task)?;
        Some(match metric {
            DifficultyMetric::Feasibility => row.f,
            DifficultyMetric::Safety => row.s,
            DifficultyMetric::SafetyIntention => row.si,
        })
    }
}

/// Cohen's d of a per-task factor (for example reference plan length or
/// safety effort) between the easiest (difficulty 0) and hardest
/// (difficulty 1) buckets of a metric.
pub fn extreme_bucket_effect(
    table: &DifficultyTable,
    metric: DifficultyMetric,
    values: &BTreeMap<String, f64>,
) -> Result<f64, AnalysisError> {
    let zero = Ratio::from_integer(0);
    let one = Ratio::from_integer(1);
    let mut easiest = Vec::new();
    let mut hardest = Vec::new();
    for (task, value) in values {
        match table.difficulty(task, metric) {
            Some(d) if d == zero => easiest.push(*value),
            Some(d) if d == one => hardest.push(*value),
            _ => {}
        }
    }
    cohens_d(&easiest, &hardest)
}

/// Percentile bootstrap CI for a Bernoulli rate, resampling tasks.
pub fn rate_ci(bits: &[bool], seed: u64, resamples: usize) -> (f64, f64) {
    let n = bits.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let rate = |b: &[bool]| b.iter().filter(|&&x| x).count() as f64 / b.len() as f64;
    let mut pool = Vec::with_capacity(resamples + 1);
    pool.push(rate(bits));
    let mut sample = vec![false; n];
    for r in 1..=resamples as u64 {
        let mut rng = replicate_rng(seed, r);
        for slot in sample.iter_mut() {
            *slot = bits[rng.random_range(0..n)];
        }
        pool.push(rate(&sample));
    }
    percentile_ci(pool)
}
