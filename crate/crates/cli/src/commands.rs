//! The simulate, train, verify and score stages. Each returns a structured
//! outcome and writes its artifacts into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use credit_core::cohort_sim::{generate_cohort, Feature, StudentRecord};
use credit_core::credit::CreditScoreReport;
use credit_core::regressor::{self, gradient_check, normalize, Normalization, Theta};
use credit_core::rng_stats::{mean, sample_uniform, variance, RngState};
use credit_core::{CostHistory, ModelParams};

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::files::{self, ParamsFile};

pub const COHORT_FILE: &str = "cohort.csv";
pub const PARAMS_FILE: &str = "params.txt";
pub const COST_FILE: &str = "cost_history.csv";
pub const COMPARISON_TEXT_FILE: &str = "theta_comparison.txt";
pub const COMPARISON_CSV_FILE: &str = "theta_comparison.csv";
pub const VERIFY_FILE: &str = "verify_report.txt";
pub const SCORES_FILE: &str = "scores.csv";
pub const IMPORTANCE_FILE: &str = "importance.csv";
pub const SCORE_SUMMARY_FILE: &str = "score_summary.txt";

/// Maximum allowed |theta_gd - theta_oracle| per raw-space component.
pub const ORACLE_TOLERANCE: f64 = 1e-4;
/// Maximum allowed gradient-check relative error.
pub const GRADIENT_TOLERANCE: f64 = 1e-5;
/// Number of random parameter points probed by the gradient check.
pub const GRADIENT_CHECK_POINTS: usize = 10;
const GRADIENT_CHECK_SEED: u64 = 0x6772_6164;

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub cohort_path: PathBuf,
    pub cohort: Vec<StudentRecord>,
    pub summary: String,
}

pub fn cmd_simulate(cfg: &PipelineConfig, out_dir: &Path) -> Result<SimulateOutcome> {
    ensure_dir(out_dir)?;
    let cohort = generate_cohort(&cfg.simulation)?;
    let cohort_path = out_dir.join(COHORT_FILE);
    files::write_cohort(&cohort_path, &cohort)?;
    let summary = cohort_summary(&cohort);
    Ok(SimulateOutcome {
        cohort_path,
        cohort,
        summary,
    })
}

fn cohort_summary(cohort: &[StudentRecord]) -> String {
    let mut s = format!("students: {}\n", cohort.len());
    let mut column = |name: &str, xs: Vec<f64>| {
        let m = mean(&xs).unwrap_or(f64::NAN);
        let sd = variance(&xs).map_or(f64::NAN, f64::sqrt);
        let _ = writeln!(s, "  {name:<17} mean {m:>9.4}  sd {sd:>8.4}");
    };
    for f in Feature::ALL {
        column(f.name(), cohort.iter().map(|r| r.feature(f)).collect());
    }
    column(
        "performance",
        cohort.iter().filter_map(|r| r.performance).collect(),
    );
    s
}

/// Injected weights next to the two gradient-descent fits.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaTable {
    pub injected: Theta,
    pub fitted_train: Theta,
    pub fitted_test: Theta,
}

impl ThetaTable {
    fn rows(&self) -> [(&'static str, &Theta); 3] {
        [
            ("Injected", &self.injected),
            ("Fitted(training)", &self.fitted_train),
            ("Fitted(testing)", &self.fitted_test),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{:<18}", "Parameter");
        for i in 0..self.injected.len() {
            let _ = write!(s, "{:>10}", format!("theta{i}"));
        }
        s.push('\n');
        for (name, theta) in self.rows() {
            let _ = write!(s, "{name:<18}");
            for v in theta {
                let _ = write!(s, "{v:>10.4}");
            }
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,theta0,theta1,theta2,theta3,theta4,theta5\n");
        for (name, theta) in self.rows() {
            let cells: Vec<String> = theta.iter().map(f64::to_string).collect();
            let _ = writeln!(s, "{name},{}", cells.join(","));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: CostHistory,
    pub table: ThetaTable,
    /// Cost of the training-set fit evaluated on the held-out partition.
    pub test_cost: f64,
    pub params_path: PathBuf,
    pub cost_path: PathBuf,
}

pub fn cmd_train(cfg: &PipelineConfig, cohort_path: &Path, out_dir: &Path) -> Result<TrainOutcome> {
    ensure_dir(out_dir)?;
    let cohort = files::read_cohort(cohort_path)?;
    if let Some(i) = cohort.iter().position(|r| r.performance.is_none()) {
        return Err(CliError::schema(
            cohort_path,
            Some(i + 2),
            "column `performance` is empty; training needs a target",
        ));
    }
    let split = regressor::split(&cohort, &cfg.training)?;
    let (params, history) = regressor::train(&split, &cfg.training)?;
    let (refit, _) = regressor::refit_on_test(&split, &cfg.training)?;
    let test_cost = regressor::evaluate(&params, &split.test)?.cost;

    let table = ThetaTable {
        injected: cfg.simulation.weights,
        fitted_train: params.theta,
        fitted_test: refit.theta,
    };
    let params_path = out_dir.join(PARAMS_FILE);
    let cost_path = out_dir.join(COST_FILE);
    files::write_params(
        &params_path,
        &ParamsFile {
            params: params.clone(),
            training: cfg.training.clone(),
        },
    )?;
    files::write_cost_history(&cost_path, &history)?;
    let mut text = table.to_text();
    let _ = writeln!(
        text,
        "\ntrain examples: {}  test examples: {}\nfinal training cost: {}\nheld-out cost: {}",
        split.train.len(),
        split.test.len(),
        history.final_cost().unwrap_or(f64::NAN),
        test_cost
    );
    files::write_text(&out_dir.join(COMPARISON_TEXT_FILE), &text)?;
    files::write_text(&out_dir.join(COMPARISON_CSV_FILE), &table.to_csv())?;
    Ok(TrainOutcome {
        params,
        history,
        table,
        test_cost,
        params_path,
        cost_path,
    })
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub gd_theta: Theta,
    pub oracle_theta: Theta,
    pub deviations: Theta,
    pub max_deviation: f64,
    pub gradient_error: f64,
    pub pass: bool,
    pub report: String,
}

impl VerifyOutcome {
    /// Components whose deviation exceeds [`ORACLE_TOLERANCE`].
    pub fn offending(&self) -> Vec<usize> {
        (0..self.deviations.len())
            .filter(|&i| self.deviations[i].is_nan() || self.deviations[i] > ORACLE_TOLERANCE)
            .collect()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            return Ok(self);
        }
        let list: Vec<String> = self
            .offending()
            .iter()
            .map(|i| format!("theta{i}"))
            .collect();
        let mut msg = format!("max deviation {:.3e}", self.max_deviation);
        if !list.is_empty() {
            let _ = write!(msg, "; offending components: {}", list.join(", "));
        }
        if self.gradient_error.is_nan() || self.gradient_error > GRADIENT_TOLERANCE {
            let _ = write!(msg, "; gradient check error {:.3e}", self.gradient_error);
        }
        Err(CliError::VerifyFailed(msg))
    }
}

/// Cross-check a params file against the closed-form least-squares fit of
/// the same training partition, and check the analytic gradient.
pub fn cmd_verify(cohort_path: &Path, params_path: &Path, out_dir: &Path) -> Result<VerifyOutcome> {
    ensure_dir(out_dir)?;
    let cohort = files::read_cohort(cohort_path)?;
    let pf = files::read_params(params_path)?;
    let split = regressor::split(&cohort, &pf.training)?;
    let oracle = regressor::solve_normal_equations(&split)?;

    let gd_theta = pf.params.theta;
    let deviations: Theta = std::array::from_fn(|i| (gd_theta[i] - oracle.theta[i]).abs());
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);

    let (_, y) = regressor::design(&split.train)?;
    let (x, _) = normalize(&split.train, Normalization::Apply(&pf.params.norm))?;
    let center = pf.params.normalized_theta();
    let mut rng = RngState::new(GRADIENT_CHECK_SEED);
    let mut gradient_error: f64 = 0.0;
    for _ in 0..GRADIENT_CHECK_POINTS {
        let point: Theta =
            std::array::from_fn(|i| center[i] + 2.0 * sample_uniform(&mut rng) - 1.0);
        gradient_error = gradient_error.max(gradient_check(&point, &x, &y)?);
    }

    let pass = max_deviation <= ORACLE_TOLERANCE && gradient_error <= GRADIENT_TOLERANCE;
    let mut report =
        String::from("component   gradient-descent         normal-equations         |diff|\n");
    for i in 0..gd_theta.len() {
        let flag = if deviations[i] <= ORACLE_TOLERANCE {
            ""
        } else {
            "  <-- FAIL"
        };
        let _ = writeln!(
            report,
            "theta{i}      {:>22.15}  {:>22.15}  {:.3e}{flag}",
            gd_theta[i], oracle.theta[i], deviations[i]
        );
    }
    let _ = writeln!(
        report,
        "max deviation: {max_deviation:.3e} (tolerance {ORACLE_TOLERANCE:e})"
    );
    let _ = writeln!(
        report,
        "gradient check: max relative error {gradient_error:.3e} over {GRADIENT_CHECK_POINTS} points (tolerance {GRADIENT_TOLERANCE:e})"
    );
    let _ = writeln!(report, "result: {}", if pass { "PASS" } else { "FAIL" });
    files::write_text(&out_dir.join(VERIFY_FILE), &report)?;

    Ok(VerifyOutcome {
        gd_theta,
        oracle_theta: oracle.theta,
        deviations,
        max_deviation,
        gradient_error,
        pass,
        report,
    })
}

#[derive(Debug, Clone)]
pub struct ScoreOutcome {
    pub report: CreditScoreReport,
    pub summary: String,
}

pub fn cmd_score(cohort_path: &Path, params_path: &Path, out_dir: &Path) -> Result<ScoreOutcome> {
    ensure_dir(out_dir)?;
    let cohort = files::read_cohort(cohort_path)?;
    let pf = files::read_params(params_path)?;
    let report = CreditScoreReport::build(&pf.params, &cohort);
    files::write_scores(&out_dir.join(SCORES_FILE), &report)?;
    files::write_importance(&out_dir.join(IMPORTANCE_FILE), &report.importance)?;
    let summary = report.to_string();
    files::write_text(&out_dir.join(SCORE_SUMMARY_FILE), &summary)?;
    Ok(ScoreOutcome { report, summary })
}

/// Run the enabled stages in order inside `out_dir`. Returns the text each
/// stage would print.
pub fn run_all(cfg: &PipelineConfig, out_dir: &Path) -> Result<Vec<String>> {
    let mut log = Vec::new();
    let cohort_path = out_dir.join(COHORT_FILE);
    let params_path = out_dir.join(PARAMS_FILE);
    if cfg.stages.simulate {
        let out = cmd_simulate(cfg, out_dir)?;
        log.push(format!(
            "simulate: wrote {}\n{}",
            out.cohort_path.display(),
            out.summary
        ));
    }
    if cfg.stages.train {
        let out = cmd_train(cfg, &cohort_path, out_dir)?;
        log.push(format!(
            "train: wrote {}\n{}",
            out.params_path.display(),
            out.table.to_text()
        ));
    }
    if cfg.stages.verify {
        let out = cmd_verify(&cohort_path, &params_path, out_dir)?.into_result()?;
        log.push(format!("verify:\n{}", out.report));
    }
    if cfg.stages.score {
        let out = cmd_score(&cohort_path, &params_path, out_dir)?;
        log.push(format!("score:\n{}", out.summary));
    }
    Ok(log)
}
