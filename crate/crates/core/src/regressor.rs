//! Linear performance model fitted by full-batch gradient descent on the
//! halved mean squared error, plus a closed-form least-squares oracle.
//!
//! Optimization runs on normalized features; [`ModelParams`] always carries
//! coefficients in raw feature units together with the normalization used,
//! so the two parametrizations can be converted either way.

use crate::cohort_sim::{Feature, StudentRecord, NUM_FEATURES};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng_stats::RngState;

/// Intercept followed by one coefficient per feature.
pub type Theta = [f64; NUM_FEATURES + 1];

/// One feature row.
pub type FeatureRow = [f64; NUM_FEATURES];

/// How feature offsets and scales are derived from training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormScheme {
    /// Offset = mean, scale = population standard deviation.
    #[default]
    ZScore,
    /// Offset = min, scale = max - min; training columns land in [0, 1].
    MinMax,
}

impl NormScheme {
    pub fn name(self) -> &'static str {
        match self {
            NormScheme::ZScore => "zscore",
            NormScheme::MinMax => "minmax",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zscore" => Some(NormScheme::ZScore),
            "minmax" => Some(NormScheme::MinMax),
            _ => None,
        }
    }
}

/// Per-feature affine map `x -> (x - offset) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormMeta {
    pub scheme: NormScheme,
    pub offsets: FeatureRow,
    pub scales: FeatureRow,
}

impl NormMeta {
    pub fn new(scheme: NormScheme, offsets: FeatureRow, scales: FeatureRow) -> Result<Self> {
        for (f, s) in Feature::ALL.iter().zip(&scales) {
            if !(s.is_finite() && *s > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "normalization scale for `{}` must be finite and > 0, got {s}",
                    f.name()
                )));
            }
        }
        if offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidInput(
                "normalization offsets must be finite".into(),
            ));
        }
        Ok(Self {
            scheme,
            offsets,
            scales,
        })
    }

    /// Identity map, for parameters already in raw units.
    pub fn identity() -> Self {
        Self {
            scheme: NormScheme::ZScore,
            offsets: [0.0; NUM_FEATURES],
            scales: [1.0; NUM_FEATURES],
        }
    }

    pub fn fit(rows: &[FeatureRow], scheme: NormScheme) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput(
                "cannot normalize an empty record set".into(),
            ));
        }
        let mut offsets = [0.0; NUM_FEATURES];
        let mut scales = [0.0; NUM_FEATURES];
        for (j, feature) in Feature::ALL.iter().enumerate() {
            let col = rows.iter().map(|r| r[j]);
            let (offset, scale) = match scheme {
                NormScheme::MinMax => {
                    let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    });
                    (lo, hi - lo)
                }
                NormScheme::ZScore => {
                    let m = col.clone().sum::<f64>() / rows.len() as f64;
                    let var = col.map(|v| (v - m).powi(2)).sum::<f64>() / rows.len() as f64;
                    (m, var.sqrt())
                }
            };
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::DegenerateFeature {
                    column: feature.name(),
                });
            }
            offsets[j] = offset;
            scales[j] = scale;
        }
        Ok(Self {
            scheme,
            offsets,
            scales,
        })
    }

    pub fn apply(&self, row: &FeatureRow) -> FeatureRow {
        std::array::from_fn(|j| (row[j] - self.offsets[j]) / self.scales[j])
    }

    pub fn invert(&self, row: &FeatureRow) -> FeatureRow {
        std::array::from_fn(|j| row[j] * self.scales[j] + self.offsets[j])
    }
}

/// Where normalization metadata comes from.
#[derive(Debug, Clone, Copy)]
pub enum Normalization<'a> {
    /// Compute fresh metadata from these records (training path).
    Fit(NormScheme),
    /// Reuse metadata computed elsewhere (test path).
    Apply(&'a NormMeta),
}

/// Fitted coefficients in raw feature units plus the normalization they
/// were optimized under.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub theta: Theta,
    pub norm: NormMeta,
}

impl ModelParams {
    /// Convert coefficients learned on normalized features back to raw units.
    pub fn from_normalized(theta_norm: &Theta, norm: NormMeta) -> Self {
        let mut theta = [0.0; NUM_FEATURES + 1];
        theta[0] = theta_norm[0];
        for j in 0..NUM_FEATURES {
            theta[j + 1] = theta_norm[j + 1] / norm.scales[j];
            theta[0] -= theta[j + 1] * norm.offsets[j];
        }
        Self { theta, norm }
    }

    pub fn normalized_theta(&self) -> Theta {
        let mut out = [0.0; NUM_FEATURES + 1];
        out[0] = self.theta[0];
        for j in 0..NUM_FEATURES {
            out[j + 1] = self.theta[j + 1] * self.norm.scales[j];
            out[0] += self.theta[j + 1] * self.norm.offsets[j];
        }
        out
    }

    /// Prediction on raw features.
    pub fn predict(&self, raw: &FeatureRow) -> f64 {
        hypothesis(&self.theta, raw)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Learning rate; 0 freezes the parameters.
    pub alpha: f64,
    pub iterations: usize,
    /// Fraction of records assigned to the training partition.
    pub split_ratio: f64,
    pub shuffle_seed: u64,
    pub normalization: NormScheme,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            iterations: 20_000,
            split_ratio: 0.8,
            shuffle_seed: 7,
            normalization: NormScheme::ZScore,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::Config(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!(
                "split_ratio must lie strictly between 0 and 1, got {}",
                self.split_ratio
            )));
        }
        Ok(())
    }
}

/// Cost after each update, starting with the initial parameters at index 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostHistory {
    entries: Vec<(usize, f64)>,
}

impl CostHistory {
    pub fn push(&mut self, iteration: usize, cost: f64) {
        if let Some(&(last, _)) = self.entries.last() {
            assert!(iteration > last, "iteration indices must increase");
        } else {
            assert_eq!(iteration, 0, "history starts at iteration 0");
        }
        self.entries.push((iteration, cost));
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn costs(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|&(_, c)| c)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn first_cost(&self) -> Option<f64> {
        self.entries.first().map(|e| e.1)
    }

    pub fn final_cost(&self) -> Option<f64> {
        self.entries.last().map(|e| e.1)
    }

    /// `|J(end - window) - J(end)| / J(end - window)`; `None` if the history is
    /// shorter than the window. Zero when the reference cost is zero.
    pub fn relative_change_over(&self, window: usize) -> Option<f64> {
        let n = self.entries.len();
        if n <= window {
            return None;
        }
        let then = self.entries[n - 1 - window].1;
        let now = self.entries[n - 1].1;
        if then == 0.0 {
            return Some(0.0);
        }
        Some((then - now).abs() / then.abs())
    }

    /// Largest single-step increase `J(t+1) - J(t)`; negative when strictly decreasing.
    pub fn max_increase(&self) -> f64 {
        self.entries
            .windows(2)
            .map(|w| w[1].1 - w[0].1)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: Vec<StudentRecord>,
    pub test: Vec<StudentRecord>,
}

/// Seeded shuffle, then partition into `round(split_ratio * n)` training
/// records and the rest. Both partitions are kept non-empty.
pub fn split(cohort: &[StudentRecord], cfg: &TrainConfig) -> Result<SplitDataset> {
    cfg.validate()?;
    let n = cohort.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 records to split, got {n}"
        )));
    }
    let n_train = ((cfg.split_ratio * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    RngState::new(cfg.shuffle_seed).shuffle(&mut order);
    let (train_idx, test_idx) = order.split_at(n_train);
    Ok(SplitDataset {
        train: train_idx.iter().map(|&i| cohort[i].clone()).collect(),
        test: test_idx.iter().map(|&i| cohort[i].clone()).collect(),
    })
}

/// Feature matrix and target vector; every record must carry a performance.
pub fn design(records: &[StudentRecord]) -> Result<(Vec<FeatureRow>, Vec<f64>)> {
    let mut x = Vec::with_capacity(records.len());
    let mut y = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let target = r
            .performance
            .ok_or_else(|| Error::InvalidInput(format!("record {i} has no performance value")))?;
        x.push(r.features());
        y.push(target);
    }
    Ok((x, y))
}

/// Normalized feature matrix together with the metadata that produced it.
pub fn normalize(
    records: &[StudentRecord],
    how: Normalization<'_>,
) -> Result<(Vec<FeatureRow>, NormMeta)> {
    if records.is_empty() {
        return Err(Error::InvalidInput(
            "cannot normalize an empty record set".into(),
        ));
    }
    let raw: Vec<FeatureRow> = records.iter().map(StudentRecord::features).collect();
    let meta = match how {
        Normalization::Fit(scheme) => NormMeta::fit(&raw, scheme)?,
        Normalization::Apply(meta) => meta.clone(),
    };
    let rows = raw.iter().map(|r| meta.apply(r)).collect();
    Ok((rows, meta))
}

/// theta0 + sum(theta_i * x_i).
pub fn hypothesis(theta: &Theta, x: &FeatureRow) -> f64 {
    x.iter()
        .zip(&theta[1..])
        .fold(theta[0], |acc, (xi, ti)| acc + ti * xi)
}

fn check_shapes(x: &[FeatureRow], y: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::InvalidInput("need at least one example".into()));
    }
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} feature rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// (1 / 2m) * sum((H(x) - y)^2).
pub fn cost(theta: &Theta, x: &[FeatureRow], y: &[f64]) -> Result<f64> {
    check_shapes(x, y)?;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(row, yi)| (hypothesis(theta, row) - yi).powi(2))
        .sum();
    Ok(sse / (2.0 * x.len() as f64))
}

/// Analytic partial derivatives of [`cost`]: (1/m) * sum((H(x) - y) * x_j), x_0 = 1.
pub fn gradient(theta: &Theta, x: &[FeatureRow], y: &[f64]) -> Result<Theta> {
    check_shapes(x, y)?;
    Ok(cost_and_gradient(theta, x, y).1)
}

fn cost_and_gradient(theta: &Theta, x: &[FeatureRow], y: &[f64]) -> (f64, Theta) {
    let m = x.len() as f64;
    let mut grad = [0.0; NUM_FEATURES + 1];
    let mut sse = 0.0;
    for (row, yi) in x.iter().zip(y) {
        let r = hypothesis(theta, row) - yi;
        sse += r * r;
        grad[0] += r;
        for j in 0..NUM_FEATURES {
            grad[j + 1] += r * row[j];
        }
    }
    for g in &mut grad {
        *g /= m;
    }
    (sse / (2.0 * m), grad)
}

/// Central finite differences of [`cost`] with step `h`.
pub fn finite_difference_gradient(
    theta: &Theta,
    x: &[FeatureRow],
    y: &[f64],
    h: f64,
) -> Result<Theta> {
    let mut out = [0.0; NUM_FEATURES + 1];
    for j in 0..out.len() {
        let mut plus = *theta;
        let mut minus = *theta;
        plus[j] += h;
        minus[j] -= h;
        out[j] = (cost(&plus, x, y)? - cost(&minus, x, y)?) / (2.0 * h);
    }
    Ok(out)
}

/// Finite-difference step used by [`gradient_check`].
pub const FD_STEP: f64 = 1e-6;

/// Worst per-component disagreement between [`gradient`] and
/// [`finite_difference_gradient`].
///
/// Each component's error is `|g - fd| / max(|g|, |fd|, 1e-3 * max_k |g_k|)`;
/// the floor keeps components that happen to sit near zero from being judged
/// against finite-difference roundoff alone.
pub fn gradient_check(theta: &Theta, x: &[FeatureRow], y: &[f64]) -> Result<f64> {
    let g = gradient(theta, x, y)?;
    let fd = finite_difference_gradient(theta, x, y, FD_STEP)?;
    let scale = g.iter().chain(&fd).fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (1e-3 * scale).max(f64::MIN_POSITIVE);
    Ok(g.iter()
        .zip(&fd)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
        .fold(0.0, f64::max))
}

/// Fit by gradient descent on `records`, starting from theta = 0.
pub fn fit(records: &[StudentRecord], cfg: &TrainConfig) -> Result<(ModelParams, CostHistory)> {
    cfg.validate()?;
    let (_, y) = design(records)?;
    let (x, meta) = normalize(records, Normalization::Fit(cfg.normalization))?;

    let mut theta = [0.0; NUM_FEATURES + 1];
    let mut history = CostHistory::default();
    for it in 0..=cfg.iterations {
        let (j, grad) = cost_and_gradient(&theta, &x, &y);
        if !j.is_finite() {
            return Err(Error::Diverged {
                iteration: it,
                alpha: cfg.alpha,
                cost: j,
            });
        }
        history.push(it, j);
        if it == cfg.iterations {
            break;
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= cfg.alpha * g;
        }
    }
    Ok((ModelParams::from_normalized(&theta, meta), history))
}

/// Gradient descent on the training partition.
pub fn train(split: &SplitDataset, cfg: &TrainConfig) -> Result<(ModelParams, CostHistory)> {
    fit(&split.train, cfg)
}

/// Gradient descent on the test partition alone, for comparing a second
/// independent fit against the injected weights.
pub fn refit_on_test(
    split: &SplitDataset,
    cfg: &TrainConfig,
) -> Result<(ModelParams, CostHistory)> {
    fit(&split.test, cfg)
}

/// Exact least-squares coefficients in raw units.
///
/// Solves the centered normal equations for the slopes, then recovers the
/// intercept from the means.
pub fn least_squares(records: &[StudentRecord]) -> Result<Theta> {
    let (x, y) = design(records)?;
    check_shapes(&x, &y)?;
    let m = x.len() as f64;
    let x_mean: FeatureRow = std::array::from_fn(|j| x.iter().map(|r| r[j]).sum::<f64>() / m);
    let y_mean = y.iter().sum::<f64>() / m;

    let mut sxx = vec![vec![0.0; NUM_FEATURES]; NUM_FEATURES];
    let mut sxy = vec![0.0; NUM_FEATURES];
    for (row, yi) in x.iter().zip(&y) {
        let d: FeatureRow = std::array::from_fn(|j| row[j] - x_mean[j]);
        let dy = yi - y_mean;
        for a in 0..NUM_FEATURES {
            sxy[a] += d[a] * dy;
            for b in 0..NUM_FEATURES {
                sxx[a][b] += d[a] * d[b];
            }
        }
    }
    let slopes = linalg::solve(sxx, sxy)?;
    let mut theta = [0.0; NUM_FEATURES + 1];
    theta[0] = y_mean;
    theta[1..].copy_from_slice(&slopes);
    for j in 0..NUM_FEATURES {
        theta[0] -= slopes[j] * x_mean[j];
    }
    Ok(theta)
}

/// Closed-form fit of the training partition. The returned params carry the
/// training set's z-score normalization so they can be ranked like a
/// gradient-descent fit.
pub fn solve_normal_equations(split: &SplitDataset) -> Result<ModelParams> {
    let theta = least_squares(&split.train)?;
    let raw: Vec<FeatureRow> = split.train.iter().map(StudentRecord::features).collect();
    let norm = NormMeta::fit(&raw, NormScheme::ZScore)?;
    Ok(ModelParams { theta, norm })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub cost: f64,
    pub predictions: Vec<f64>,
}

/// Cost and per-record predictions of `params` on `records`.
pub fn evaluate(params: &ModelParams, records: &[StudentRecord]) -> Result<Evaluation> {
    let (x, y) = design(records)?;
    check_shapes(&x, &y)?;
    Ok(Evaluation {
        cost: cost(&params.theta, &x, &y)?,
        predictions: x.iter().map(|r| params.predict(r)).collect(),
    })
}
