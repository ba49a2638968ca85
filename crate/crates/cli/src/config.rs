//! Flat `key = value` configuration files with `#` comments.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use credit_core::cohort_sim::GaussianSpec;
use credit_core::{NormScheme, SimulationConfig, TrainConfig};

use crate::error::{CliError, Result};

/// One parsed `key = value` pair and the 1-based line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Split text into entries. Blank lines and `#` comments are skipped;
/// duplicate keys are rejected.
pub fn parse_key_values(text: &str, path: &Path) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::config(
                path,
                Some(line),
                format!("expected `key = value`, got `{content}`"),
            ));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::config(path, Some(line), "empty key"));
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(CliError::config(
                path,
                Some(line),
                format!("duplicate key `{key}` (first set on line {})", prev.line),
            ));
        }
        out.push(Entry {
            line,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

pub(crate) fn parse_value<T: FromStr>(entry: &Entry, path: &Path) -> Result<T> {
    entry.value.parse().map_err(|_| {
        CliError::config(
            path,
            Some(entry.line),
            format!("invalid value `{}` for `{}`", entry.value, entry.key),
        )
    })
}

fn parse_bool(entry: &Entry, path: &Path) -> Result<bool> {
    match entry.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::config(
            path,
            Some(entry.line),
            format!("invalid boolean `{}` for `{}`", entry.value, entry.key),
        )),
    }
}

/// Which stages `run-all` executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub simulate: bool,
    pub train: bool,
    pub verify: bool,
    pub score: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Self {
            simulate: true,
            train: true,
            verify: true,
            score: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub simulation: SimulationConfig,
    pub training: TrainConfig,
    pub out_dir: PathBuf,
    pub stages: Stages,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            simulation: SimulationConfig::default(),
            training: TrainConfig::default(),
            out_dir: PathBuf::from("out"),
            stages: Stages::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parse config text. `path` is only used in error messages.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for e in parse_key_values(text, path)? {
            let sim = &mut cfg.simulation;
            let tr = &mut cfg.training;
            match e.key.as_str() {
                "n_students" => sim.n_students = parse_value(&e, path)?,
                "seed" => sim.seed = parse_value(&e, path)?,
                "attendance_mean" => sim.attendance.mean = parse_value(&e, path)?,
                "attendance_sd" => sim.attendance.sd = parse_value(&e, path)?,
                "attentiveness_mean" => sim.attentiveness.mean = parse_value(&e, path)?,
                "attentiveness_sd" => sim.attentiveness.sd = parse_value(&e, path)?,
                "homework_mean" => sim.homework.mean = parse_value(&e, path)?,
                "homework_sd" => sim.homework.sd = parse_value(&e, path)?,
                "prev_score_mean" => sim.prev_score.mean = parse_value(&e, path)?,
                "prev_score_sd" => sim.prev_score.sd = parse_value(&e, path)?,
                "understanding_weights" => {
                    sim.understanding_weights = e
                        .value
                        .split(',')
                        .map(|v| {
                            v.trim().parse::<f64>().map_err(|_| {
                                CliError::config(
                                    path,
                                    Some(e.line),
                                    format!("invalid weight `{}`", v.trim()),
                                )
                            })
                        })
                        .collect::<Result<_>>()?;
                }
                "c0" | "c1" | "c2" | "c3" | "c4" | "c5" => {
                    let idx = (e.key.as_bytes()[1] - b'0') as usize;
                    sim.weights[idx] = parse_value(&e, path)?;
                }
                "noise_sd" => sim.noise_sd = parse_value(&e, path)?,
                "alpha" => tr.alpha = parse_value(&e, path)?,
                "iterations" => tr.iterations = parse_value(&e, path)?,
                "split_ratio" => tr.split_ratio = parse_value(&e, path)?,
                "shuffle_seed" => tr.shuffle_seed = parse_value(&e, path)?,
                "normalization" => {
                    tr.normalization = NormScheme::parse(&e.value).ok_or_else(|| {
                        CliError::config(
                            path,
                            Some(e.line),
                            format!(
                                "unknown normalization `{}` (expected zscore or minmax)",
                                e.value
                            ),
                        )
                    })?;
                }
                "out_dir" => cfg.out_dir = PathBuf::from(&e.value),
                "run_simulate" => cfg.stages.simulate = parse_bool(&e, path)?,
                "run_train" => cfg.stages.train = parse_bool(&e, path)?,
                "run_verify" => cfg.stages.verify = parse_bool(&e, path)?,
                "run_score" => cfg.stages.score = parse_bool(&e, path)?,
                other => {
                    return Err(CliError::config(
                        path,
                        Some(e.line),
                        format!("unknown key `{other}`"),
                    ));
                }
            }
        }
        cfg.validate(path)?;
        Ok(cfg)
    }

    pub fn validate(&self, path: &Path) -> Result<()> {
        self.simulation
            .validate()
            .and_then(|()| self.training.validate())
            .map_err(|e| CliError::config(path, None, e.to_string()))
    }

    /// Render as a config file that [`PipelineConfig::parse`] reads back to `self`.
    pub fn to_text(&self) -> String {
        let s = &self.simulation;
        let t = &self.training;
        let g = |name: &str, spec: GaussianSpec| {
            format!("{name}_mean = {}\n{name}_sd = {}\n", spec.mean, spec.sd)
        };
        let weights: Vec<String> = s.understanding_weights.iter().map(f64::to_string).collect();
        let mut out = String::new();
        out.push_str("# simulation\n");
        out.push_str(&format!(
            "n_students = {}\nseed = {}\n",
            s.n_students, s.seed
        ));
        out.push_str(&g("attendance", s.attendance));
        out.push_str(&g("attentiveness", s.attentiveness));
        out.push_str(&g("homework", s.homework));
        out.push_str(&g("prev_score", s.prev_score));
        out.push_str(&format!("understanding_weights = {}\n", weights.join(",")));
        for (i, c) in s.weights.iter().enumerate() {
            out.push_str(&format!("c{i} = {c}\n"));
        }
        out.push_str(&format!("noise_sd = {}\n", s.noise_sd));
        out.push_str("\n# training\n");
        out.push_str(&format!(
            "alpha = {}\niterations = {}\nsplit_ratio = {}\nshuffle_seed = {}\nnormalization = {}\n",
            t.alpha,
            t.iterations,
            t.split_ratio,
            t.shuffle_seed,
            t.normalization.name()
        ));
        out.push_str("\n# pipeline\n");
        out.push_str(&format!("out_dir = {}\n", self.out_dir.display()));
        out.push_str(&format!(
            "run_simulate = {}\nrun_train = {}\nrun_verify = {}\nrun_score = {}\n",
            self.stages.simulate, self.stages.train, self.stages.verify, self.stages.score
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test.conf")
    }

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(
            PipelineConfig::parse("# nothing\n\n", p()).unwrap(),
            PipelineConfig::default()
        );
    }

    #[test]
    fn parses_values_and_comments() {
        let text = "seed = 9  # trailing\nnoise_sd=0\nc3 = 0.5\nunderstanding_weights = 1, 2 ,3\nnormalization = minmax\nrun_verify = false\n";
        let cfg = PipelineConfig::parse(text, p()).unwrap();
        assert_eq!(cfg.simulation.seed, 9);
        assert_eq!(cfg.simulation.noise_sd, 0.0);
        assert_eq!(cfg.simulation.weights[3], 0.5);
        assert_eq!(cfg.simulation.understanding_weights, vec![1.0, 2.0, 3.0]);
        assert_eq!(cfg.training.normalization, NormScheme::MinMax);
        assert!(!cfg.stages.verify);
    }

    #[test]
    fn malformed_line_names_line_number() {
        let err = PipelineConfig::parse("seed = 1\n\nthis is not valid\n", p()).unwrap_err();
        assert!(
            matches!(err, CliError::Config { line: Some(3), .. }),
            "{err}"
        );
        assert!(err.to_string().contains("test.conf:3"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn bad_values_unknown_and_duplicate_keys() {
        for (text, line) in [
            ("alpha = fast\n", 1),
            ("\nfoo = 1\n", 2),
            ("seed = 1\nseed = 2\n", 2),
            ("normalization = l2\n", 1),
            ("run_score = maybe\n", 1),
            ("understanding_weights = 1,x\n", 1),
        ] {
            match PipelineConfig::parse(text, p()) {
                Err(CliError::Config { line: Some(l), .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn semantic_validation() {
        let err = PipelineConfig::parse("split_ratio = 1.5\n", p()).unwrap_err();
        assert!(matches!(err, CliError::Config { line: None, .. }));
        assert!(PipelineConfig::parse("n_students = 1\n", p()).is_err());
    }

    #[test]
    fn text_roundtrip() {
        let mut cfg = PipelineConfig::default();
        cfg.simulation.noise_sd = 0.25;
        cfg.simulation.understanding_weights = vec![0.5; 10];
        cfg.training.iterations = 1234;
        cfg.stages.score = false;
        assert_eq!(PipelineConfig::parse(&cfg.to_text(), p()).unwrap(), cfg);
    }
}
