//! Credit scores: the fitted linear model evaluated on a student's activity
//! features, plus feature-importance ranking and per-class tracking.

use std::fmt;

use crate::cohort_sim::{Feature, StudentRecord};
use crate::regressor::{hypothesis, ModelParams};

/// Fitted model evaluated on raw features. Same units as performance, unclamped.
pub fn credit_score(params: &ModelParams, rec: &StudentRecord) -> f64 {
    hypothesis(&params.theta, &rec.features())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Importance {
    pub feature: Feature,
    /// Coefficient in normalized feature space.
    pub weight: f64,
    /// `|weight| / sum(|weights|)`; zero when every weight is zero.
    pub share: f64,
}

/// Features ordered by descending absolute normalized coefficient. Ties keep
/// column order.
pub fn rank_importance(params: &ModelParams) -> Vec<Importance> {
    let theta = params.normalized_theta();
    let total: f64 = theta[1..].iter().map(|w| w.abs()).sum();
    let mut out: Vec<Importance> = Feature::ALL
        .iter()
        .map(|&feature| {
            let weight = theta[feature.index() + 1];
            Importance {
                feature,
                weight,
                share: if total > 0.0 {
                    weight.abs() / total
                } else {
                    0.0
                },
            }
        })
        .collect();
    // stable sort preserves column order on ties
    out.sort_by(|a, b| b.weight.abs().total_cmp(&a.weight.abs()));
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassCreditPoint {
    pub score: f64,
    /// Mean of this and all earlier scores.
    pub running_mean: f64,
}

/// One credit score per class session, in session order.
pub fn class_credit_series(
    params: &ModelParams,
    sessions: &[StudentRecord],
) -> Vec<ClassCreditPoint> {
    let mut sum = 0.0;
    sessions
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let score = credit_score(params, rec);
            sum += score;
            ClassCreditPoint {
                score,
                running_mean: sum / (i + 1) as f64,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreditScoreReport {
    pub scores: Vec<f64>,
    /// `None` for an empty cohort.
    pub summary: Option<ScoreSummary>,
    pub importance: Vec<Importance>,
}

impl CreditScoreReport {
    pub fn build(params: &ModelParams, records: &[StudentRecord]) -> Self {
        let scores: Vec<f64> = records.iter().map(|r| credit_score(params, r)).collect();
        let summary = (!scores.is_empty()).then(|| ScoreSummary {
            mean: scores.iter().sum::<f64>() / scores.len() as f64,
            min: scores.iter().copied().fold(f64::INFINITY, f64::min),
            max: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
        Self {
            scores,
            summary,
            importance: rank_importance(params),
        }
    }
}

impl fmt::Display for CreditScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "students: {}", self.scores.len())?;
        match &self.summary {
            Some(s) => {
                writeln!(f, "credit score mean: {:.4}", s.mean)?;
                writeln!(f, "credit score min:  {:.4}", s.min)?;
                writeln!(f, "credit score max:  {:.4}", s.max)?;
            }
            None => writeln!(f, "no students to score")?,
        }
        writeln!(f, "feature importance (normalized weight, share):")?;
        for (rank, imp) in self.importance.iter().enumerate() {
            writeln!(
                f,
                "  {}. {:<17} {:>10.4}  {:>6.2}%",
                rank + 1,
                imp.feature.name(),
                imp.weight,
                100.0 * imp.share
            )?;
        }
        Ok(())
    }
}
