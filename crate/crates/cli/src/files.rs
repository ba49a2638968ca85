//! On-disk formats: cohort CSV, params key=value file, cost history,
//! score and importance CSVs.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! value reads back bit-identical and reruns produce identical bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use credit_core::cohort_sim::{Feature, StudentRecord, NUM_FEATURES};
use credit_core::credit::{CreditScoreReport, Importance};
use credit_core::{CostHistory, ModelParams, NormMeta, NormScheme, TrainConfig};

use crate::config::{parse_key_values, parse_value};
use crate::error::{CliError, Result};

pub const COHORT_HEADER: [&str; 6] = [
    "attendance",
    "attentiveness",
    "homework",
    "understanding",
    "prev_performance",
    "performance",
];

pub const COST_HEADER: [&str; 2] = ["iteration", "cost"];
pub const SCORE_HEADER: [&str; 2] = ["student_id", "credit_score"];
pub const IMPORTANCE_HEADER: [&str; 3] = ["feature", "weight", "share"];

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::schema(path, None, format!("{other:?}")),
    }
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        let row: Vec<String> = row.into_iter().collect();
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Exact header check; reports the first missing, unexpected or misplaced column.
pub fn check_header(path: &Path, found: &[&str], expected: &[&str]) -> Result<()> {
    if found == expected {
        return Ok(());
    }
    if let Some(missing) = expected.iter().find(|c| !found.contains(c)) {
        return Err(CliError::schema(
            path,
            Some(1),
            format!("missing column `{missing}`"),
        ));
    }
    if let Some(extra) = found.iter().find(|c| !expected.contains(c)) {
        return Err(CliError::schema(
            path,
            Some(1),
            format!("unexpected column `{extra}`"),
        ));
    }
    let (pos, col) = expected
        .iter()
        .zip(found)
        .enumerate()
        .find(|(_, (e, f))| e != f)
        .map(|(i, (e, _))| (i + 1, *e))
        .unwrap_or((found.len() + 1, "?"));
    Err(CliError::schema(
        path,
        Some(1),
        format!(
            "column `{col}` must be at position {pos}; expected header {}",
            expected.join(",")
        ),
    ))
}

pub fn write_cohort(path: &Path, cohort: &[StudentRecord]) -> Result<()> {
    write_rows(
        path,
        &COHORT_HEADER,
        cohort.iter().map(|r| {
            [
                r.attendance.to_string(),
                r.attentiveness.to_string(),
                r.homework.to_string(),
                r.understanding.to_string(),
                r.prev_performance.to_string(),
                r.performance.map(|p| p.to_string()).unwrap_or_default(),
            ]
        }),
    )
}

/// Read a cohort CSV. An empty performance cell yields `None`.
pub fn read_cohort(path: &Path) -> Result<Vec<StudentRecord>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let found: Vec<&str> = header.iter().collect();
    check_header(path, &found, &COHORT_HEADER)?;

    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| CliError::schema(path, Some(line), e.to_string()))?;
        let field = |j: usize| -> Result<f64> {
            let cell = row.get(j).unwrap_or("").trim();
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    CliError::schema(
                        path,
                        Some(line),
                        format!("column `{}`: invalid number `{cell}`", COHORT_HEADER[j]),
                    )
                })
        };
        let mut features = [0.0; NUM_FEATURES];
        for (j, slot) in features.iter_mut().enumerate() {
            *slot = field(j)?;
        }
        let mut rec = StudentRecord::new(features).map_err(|e| {
            CliError::schema(path, Some(line), format!("column `understanding`: {e}"))
        })?;
        if !row.get(5).unwrap_or("").trim().is_empty() {
            rec.performance = Some(field(5)?);
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_cost_history(path: &Path, history: &CostHistory) -> Result<()> {
    write_rows(
        path,
        &COST_HEADER,
        history
            .entries()
            .iter()
            .map(|(i, c)| [i.to_string(), c.to_string()]),
    )
}

pub fn read_cost_history(path: &Path) -> Result<CostHistory> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    check_header(path, &header.iter().collect::<Vec<_>>(), &COST_HEADER)?;
    let mut h = CostHistory::default();
    let mut last: Option<usize> = None;
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| CliError::schema(path, Some(line), e.to_string()))?;
        let bad = || CliError::schema(path, Some(line), "expected `iteration,cost`");
        let it: usize = row.get(0).and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let cost: f64 = row.get(1).and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        if last.map_or(it != 0, |l| it <= l) {
            return Err(CliError::schema(
                path,
                Some(line),
                "iteration indices must increase from 0",
            ));
        }
        last = Some(it);
        h.push(it, cost);
    }
    Ok(h)
}

/// Model parameters plus the training settings needed to reproduce the split.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamsFile {
    pub params: ModelParams,
    pub training: TrainConfig,
}

pub fn write_params(path: &Path, file: &ParamsFile) -> Result<()> {
    let p = &file.params;
    let t = &file.training;
    let mut s = String::from("# linear performance model, coefficients in raw feature units\n");
    for (i, v) in p.theta.iter().enumerate() {
        s.push_str(&format!("theta{i}={v}\n"));
    }
    s.push_str(&format!("normalization={}\n", p.norm.scheme.name()));
    for f in Feature::ALL {
        s.push_str(&format!(
            "offset_{}={}\n",
            f.name(),
            p.norm.offsets[f.index()]
        ));
        s.push_str(&format!(
            "scale_{}={}\n",
            f.name(),
            p.norm.scales[f.index()]
        ));
    }
    s.push_str("# training settings\n");
    s.push_str(&format!(
        "alpha={}\niterations={}\nsplit_ratio={}\nshuffle_seed={}\n",
        t.alpha, t.iterations, t.split_ratio, t.shuffle_seed
    ));
    let mut out = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    out.write_all(s.as_bytes())
        .map_err(|e| CliError::io(path, e))
}

pub fn read_params(path: &Path) -> Result<ParamsFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let entries = parse_key_values(&text, path)?;
    let get = |key: &str| {
        entries
            .iter()
            .find(|e| e.key == key)
            .ok_or_else(|| CliError::config(path, None, format!("missing key `{key}`")))
    };
    let mut theta = [0.0; NUM_FEATURES + 1];
    for (i, t) in theta.iter_mut().enumerate() {
        *t = parse_value(get(&format!("theta{i}"))?, path)?;
    }
    let scheme_entry = get("normalization")?;
    let scheme = NormScheme::parse(&scheme_entry.value).ok_or_else(|| {
        CliError::config(
            path,
            Some(scheme_entry.line),
            format!("unknown normalization `{}`", scheme_entry.value),
        )
    })?;
    let mut offsets = [0.0; NUM_FEATURES];
    let mut scales = [0.0; NUM_FEATURES];
    for f in Feature::ALL {
        offsets[f.index()] = parse_value(get(&format!("offset_{}", f.name()))?, path)?;
        scales[f.index()] = parse_value(get(&format!("scale_{}", f.name()))?, path)?;
    }
    let norm = NormMeta::new(scheme, offsets, scales)
        .map_err(|e| CliError::config(path, None, e.to_string()))?;
    let training = TrainConfig {
        alpha: parse_value(get("alpha")?, path)?,
        iterations: parse_value(get("iterations")?, path)?,
        split_ratio: parse_value(get("split_ratio")?, path)?,
        shuffle_seed: parse_value(get("shuffle_seed")?, path)?,
        normalization: scheme,
    };
    training
        .validate()
        .map_err(|e| CliError::config(path, None, e.to_string()))?;
    Ok(ParamsFile {
        params: ModelParams { theta, norm },
        training,
    })
}

/// `student_id` is the 0-based row index in the cohort file.
pub fn write_scores(path: &Path, report: &CreditScoreReport) -> Result<()> {
    write_rows(
        path,
        &SCORE_HEADER,
        report
            .scores
            .iter()
            .enumerate()
            .map(|(i, s)| [i.to_string(), s.to_string()]),
    )
}

pub fn write_importance(path: &Path, ranking: &[Importance]) -> Result<()> {
    write_rows(
        path,
        &IMPORTANCE_HEADER,
        ranking.iter().map(|imp| {
            [
                imp.feature.name().to_string(),
                imp.weight.to_string(),
                imp.share.to_string(),
            ]
        }),
    )
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}
