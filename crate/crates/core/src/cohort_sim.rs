//! Synthetic cohorts of student activity records.
//!
//! Each of the five activity features is drawn independently; performance is
//! the injected linear combination of the features plus Gaussian noise.

use crate::error::{Error, Result};
use crate::rng_stats::{sample_categorical, sample_gaussian, RngState};

pub const NUM_FEATURES: usize = 5;

/// Number of understanding-rating categories (ratings 1..=10).
pub const UNDERSTANDING_CATEGORIES: usize = 10;

/// The five activity features in column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    Attendance,
    Attentiveness,
    Homework,
    Understanding,
    PrevPerformance,
}

impl Feature {
    pub const ALL: [Feature; NUM_FEATURES] = [
        Feature::Attendance,
        Feature::Attentiveness,
        Feature::Homework,
        Feature::Understanding,
        Feature::PrevPerformance,
    ];

    /// CSV column name.
    pub fn name(self) -> &'static str {
        match self {
            Feature::Attendance => "attendance",
            Feature::Attentiveness => "attentiveness",
            Feature::Homework => "homework",
            Feature::Understanding => "understanding",
            Feature::PrevPerformance => "prev_performance",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One row of the cohort table: five features and the (optional) target.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentRecord {
    /// Percent of classes attended, in [0, 100].
    pub attendance: f64,
    /// Percent of class time judged attentive, in [0, 100].
    pub attentiveness: f64,
    /// Percent of assigned homework completed, in [0, 100].
    pub homework: f64,
    /// Self-reported understanding rating, 1..=10.
    pub understanding: u8,
    /// Previous exam score, in [0, 100].
    pub prev_performance: f64,
    pub performance: Option<f64>,
}

impl StudentRecord {
    pub fn new(features: [f64; NUM_FEATURES]) -> Result<Self> {
        let understanding = features[3];
        if understanding.fract() != 0.0
            || !(1.0..=UNDERSTANDING_CATEGORIES as f64).contains(&understanding)
        {
            return Err(Error::InvalidInput(format!(
                "understanding must be an integer in 1..={UNDERSTANDING_CATEGORIES}, got {understanding}"
            )));
        }
        Ok(Self {
            attendance: features[0],
            attentiveness: features[1],
            homework: features[2],
            understanding: understanding as u8,
            prev_performance: features[4],
            performance: None,
        })
    }

    pub fn features(&self) -> [f64; NUM_FEATURES] {
        [
            self.attendance,
            self.attentiveness,
            self.homework,
            f64::from(self.understanding),
            self.prev_performance,
        ]
    }

    pub fn feature(&self, f: Feature) -> f64 {
        self.features()[f.index()]
    }

    pub fn with_performance(mut self, performance: f64) -> Self {
        self.performance = Some(performance);
        self
    }
}

/// Mean and standard deviation of a Gaussian feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    pub mean: f64,
    pub sd: f64,
}

impl GaussianSpec {
    pub const fn new(mean: f64, sd: f64) -> Self {
        Self { mean, sd }
    }
}

/// Injected generator weights c0 (intercept) through c5.
pub type Weights = [f64; NUM_FEATURES + 1];

/// Weights used to generate the reference experiment: 0.20, 0.30, 0.05, 0.40, 0.10, 0.15.
pub const REFERENCE_WEIGHTS: Weights = [0.20, 0.30, 0.05, 0.40, 0.10, 0.15];

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub n_students: usize,
    pub seed: u64,
    /// Percent units.
    pub attendance: GaussianSpec,
    /// Percent units.
    pub attentiveness: GaussianSpec,
    /// Percent units.
    pub homework: GaussianSpec,
    /// Relative weights of ratings 1..=len; at most ten categories.
    pub understanding_weights: Vec<f64>,
    /// Score units.
    pub prev_score: GaussianSpec,
    pub weights: Weights,
    pub noise_sd: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_students: 3000,
            seed: 2023,
            attendance: GaussianSpec::new(70.0, 3.0),
            attentiveness: GaussianSpec::new(60.0, 3.0),
            homework: GaussianSpec::new(70.0, 10.0),
            understanding_weights: vec![1.0; UNDERSTANDING_CATEGORIES],
            prev_score: GaussianSpec::new(70.0, 3.0),
            weights: REFERENCE_WEIGHTS,
            noise_sd: 2.0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_students < 2 {
            return Err(Error::Config(format!(
                "n_students must be >= 2, got {}",
                self.n_students
            )));
        }
        for (name, g) in [
            ("attendance", self.attendance),
            ("attentiveness", self.attentiveness),
            ("homework", self.homework),
            ("prev_score", self.prev_score),
        ] {
            if !g.mean.is_finite() {
                return Err(Error::Config(format!("{name} mean must be finite")));
            }
            if !(g.sd.is_finite() && g.sd >= 0.0) {
                return Err(Error::Config(format!(
                    "{name} sd must be finite and >= 0, got {}",
                    g.sd
                )));
            }
        }
        let w = &self.understanding_weights;
        if w.is_empty() || w.len() > UNDERSTANDING_CATEGORIES {
            return Err(Error::Config(format!(
                "understanding weights must list 1..={UNDERSTANDING_CATEGORIES} categories, got {}",
                w.len()
            )));
        }
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config(
                "understanding weights must be non-negative with a positive sum".into(),
            ));
        }
        if self.weights.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("weights c0..c5 must be finite".into()));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::Config(format!(
                "noise_sd must be finite and >= 0, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }
}

fn clamp_percent(x: f64) -> f64 {
    x.clamp(0.0, 100.0)
}

/// Draw one student's features; performance is left unset.
pub fn sample_student(state: &mut RngState, cfg: &SimulationConfig) -> Result<StudentRecord> {
    cfg.validate()?;
    let draw = |state: &mut RngState, g: GaussianSpec| -> Result<f64> {
        Ok(clamp_percent(sample_gaussian(state, g.mean, g.sd)?))
    };
    let attendance = draw(state, cfg.attendance)?;
    let attentiveness = draw(state, cfg.attentiveness)?;
    let homework = draw(state, cfg.homework)?;
    let understanding = sample_categorical(state, &cfg.understanding_weights)? as u8 + 1;
    let prev_performance = draw(state, cfg.prev_score)?;
    Ok(StudentRecord {
        attendance,
        attentiveness,
        homework,
        understanding,
        prev_performance,
        performance: None,
    })
}

/// Noise-free linear combination c0 + sum(ci * xi).
pub fn linear_performance(weights: &Weights, features: &[f64; NUM_FEATURES]) -> f64 {
    features
        .iter()
        .zip(&weights[1..])
        .fold(weights[0], |acc, (x, c)| acc + c * x)
}

/// Set the record's performance to the injected linear model plus noise.
/// The result is deliberately not clamped.
pub fn synthesize_performance(
    rec: StudentRecord,
    cfg: &SimulationConfig,
    state: &mut RngState,
) -> Result<StudentRecord> {
    let noise = sample_gaussian(state, 0.0, cfg.noise_sd)?;
    let performance = linear_performance(&cfg.weights, &rec.features()) + noise;
    Ok(rec.with_performance(performance))
}

pub fn generate_cohort(cfg: &SimulationConfig) -> Result<Vec<StudentRecord>> {
    cfg.validate()?;
    let mut state = RngState::new(cfg.seed);
    (0..cfg.n_students)
        .map(|_| {
            let rec = sample_student(&mut state, cfg)?;
            synthesize_performance(rec, cfg, &mut state)
        })
        .collect()
}
