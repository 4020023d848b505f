//! Grid search over pipeline configurations and report/question emission.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{CalibSpec, EnsembleMode, OutputFn};
use crate::dataset::Scene;
use crate::metrics::{evaluate_method, EvalReport, Restrictions};
use crate::questiongen::{disambiguation_report, expressions_for};
use crate::uncertainty::{run_pipeline, Detector, FilterLevel, MethodSpec};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterChoice {
    #[serde(rename = "none")]
    NoFilter,
    #[serde(rename = "CF")]
    Class,
    #[serde(rename = "SCF")]
    Superclass,
}

impl FilterChoice {
    fn level(self) -> Option<FilterLevel> {
        match self {
            FilterChoice::NoFilter => None,
            FilterChoice::Class => Some(FilterLevel::Class),
            FilterChoice::Superclass => Some(FilterLevel::Superclass),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleChoice {
    Single,
    Average,
    KeepMembers,
}

/// A family of calibration specs: one per (size, temperature, output).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibGrid {
    pub ensemble: EnsembleChoice,
    /// Member used by `single`.
    #[serde(default)]
    pub member: usize,
    /// Ensemble sizes for `average` and `keep_members`.
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default = "unit_temperature")]
    pub temperatures: Vec<f64>,
    #[serde(default = "softmax_only")]
    pub outputs: Vec<OutputFn>,
}

fn unit_temperature() -> Vec<f64> {
    vec![1.0]
}

fn softmax_only() -> Vec<OutputFn> {
    vec![OutputFn::Softmax]
}

impl CalibGrid {
    fn expand(&self) -> Vec<CalibSpec> {
        let modes: Vec<(EnsembleMode, Option<usize>)> = match self.ensemble {
            EnsembleChoice::Single => vec![(EnsembleMode::Single(self.member), None)],
            EnsembleChoice::Average => self.sizes.iter().map(|&e| (EnsembleMode::Average, Some(e))).collect(),
            EnsembleChoice::KeepMembers => self
                .sizes
                .iter()
                .map(|&e| (EnsembleMode::KeepMembers, Some(e)))
                .collect(),
        };
        let mut out = Vec::new();
        for &(ensemble_mode, ensemble_size) in &modes {
            for &output_fn in &self.outputs {
                for &temperature in &self.temperatures {
                    out.push(CalibSpec {
                        temperature,
                        output_fn,
                        ensemble_mode,
                        ensemble_size,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorKind {
    SA,
    CAHC,
    SoftTr,
    SigmTr,
    RLT,
    Jenks,
    EV,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorGrid {
    pub method: DetectorKind,
    /// δ for CAHC, η for thresholds, the GVF target for Jenks.
    #[serde(default)]
    pub params: Vec<f64>,
}

impl DetectorGrid {
    fn new(method: DetectorKind, params: Vec<f64>) -> Self {
        DetectorGrid { method, params }
    }

    fn expand(&self) -> Vec<Detector> {
        let each = |f: fn(f64) -> Detector| self.params.iter().map(|&p| f(p)).collect();
        match self.method {
            DetectorKind::SA => vec![Detector::Sa],
            DetectorKind::EV => vec![Detector::Ev],
            DetectorKind::CAHC => each(|delta| Detector::Cahc { delta }),
            DetectorKind::SoftTr => each(|eta| Detector::SoftTr { eta }),
            DetectorKind::SigmTr => each(|eta| Detector::SigmTr { eta }),
            DetectorKind::RLT => each(|eta| Detector::Rlt { eta }),
            DetectorKind::Jenks => each(|gvf| Detector::Jenks { gvf }),
        }
    }
}

/// `start, start + step, ..., end` in hundredths.
fn hundredths(start: u32, end: u32, step: u32) -> Vec<f64> {
    (start..=end)
        .step_by(step as usize)
        .map(|i| f64::from(i) / 100.0)
        .collect()
}

/// Search space of the harness. Read from TOML; see `GridConfig::default`
/// for the built-in grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "topk")]
    pub topk_grid: Vec<usize>,
    pub filters: Vec<FilterChoice>,
    pub calibrations: Vec<CalibGrid>,
    pub detectors: Vec<DetectorGrid>,
    #[serde(default)]
    pub restrictions: Restrictions,
}

pub const DEFAULT_TEMPERATURES: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 3.0, 5.0];

impl Default for GridConfig {
    fn default() -> Self {
        let thresholds = hundredths(5, 95, 5);
        GridConfig {
            topk_grid: vec![8, 16, 32, 64],
            filters: vec![FilterChoice::NoFilter, FilterChoice::Class, FilterChoice::Superclass],
            calibrations: vec![
                CalibGrid {
                    ensemble: EnsembleChoice::Single,
                    member: 0,
                    sizes: vec![],
                    temperatures: DEFAULT_TEMPERATURES.to_vec(),
                    outputs: vec![OutputFn::Softmax],
                },
                CalibGrid {
                    ensemble: EnsembleChoice::Single,
                    member: 0,
                    sizes: vec![],
                    temperatures: vec![1.0],
                    outputs: vec![OutputFn::Sigmoid, OutputFn::Raw],
                },
                CalibGrid {
                    ensemble: EnsembleChoice::Average,
                    member: 0,
                    sizes: vec![2, 3, 4, 5],
                    temperatures: DEFAULT_TEMPERATURES.to_vec(),
                    outputs: vec![OutputFn::Softmax],
                },
                CalibGrid {
                    ensemble: EnsembleChoice::KeepMembers,
                    member: 0,
                    sizes: vec![2, 3, 4, 5],
                    temperatures: vec![1.0],
                    outputs: vec![OutputFn::Softmax],
                },
            ],
            detectors: vec![
                DetectorGrid::new(DetectorKind::SA, vec![]),
                DetectorGrid::new(DetectorKind::CAHC, hundredths(1, 20, 1)),
                DetectorGrid::new(DetectorKind::SoftTr, thresholds.clone()),
                DetectorGrid::new(DetectorKind::SigmTr, thresholds.clone()),
                DetectorGrid::new(DetectorKind::RLT, thresholds),
                DetectorGrid::new(DetectorKind::Jenks, vec![0.8, 0.9, 0.95]),
                DetectorGrid::new(DetectorKind::EV, vec![]),
            ],
            restrictions: Restrictions::default(),
        }
    }
}

impl GridConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: GridConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn check(&self) -> Result<()> {
        if self.topk_grid.is_empty()
            || self.filters.is_empty()
            || self.calibrations.is_empty()
            || self.detectors.is_empty()
        {
            return Err(Error::Config("every grid must be non-empty".into()));
        }
        for c in &self.calibrations {
            let sized = matches!(c.ensemble, EnsembleChoice::Average | EnsembleChoice::KeepMembers);
            if (sized && c.sizes.is_empty()) || c.temperatures.is_empty() || c.outputs.is_empty() {
                return Err(Error::Config(format!("calibration grid {:?} is empty", c.ensemble)));
            }
        }
        for d in &self.detectors {
            let needs_params = !matches!(d.method, DetectorKind::SA | DetectorKind::EV);
            if needs_params && d.params.is_empty() {
                return Err(Error::Config(format!("detector {:?} needs a parameter grid", d.method)));
            }
        }
        self.restrictions.check()
    }

    /// The full cross product, consistent or not, in a fixed order.
    pub fn methods(&self) -> Vec<MethodSpec> {
        let calibs: Vec<CalibSpec> = self.calibrations.iter().flat_map(CalibGrid::expand).collect();
        let detectors: Vec<Detector> = self.detectors.iter().flat_map(DetectorGrid::expand).collect();
        let mut out = Vec::with_capacity(self.topk_grid.len() * self.filters.len() * calibs.len() * detectors.len());
        for &k in &self.topk_grid {
            for f in &self.filters {
                for c in &calibs {
                    for d in &detectors {
                        out.push(MethodSpec::new(k, f.level(), *c, *d));
                    }
                }
            }
        }
        out
    }
}

/// Evaluates every consistent configuration of the grid.
///
/// Configurations that fail [`MethodSpec::check`] or need more ensemble
/// members than some scene has are skipped. Reports are sorted by Th.IoU
/// descending, then AvgUncObj ascending, then method string.
pub fn run_grid<T: Scalar>(scenes: &[Scene<T>], config: &GridConfig) -> Result<Vec<EvalReport>> {
    if scenes.is_empty() {
        return Err(Error::Empty("scene list"));
    }
    config.check()?;
    let min_members = scenes.iter().map(|s| s.scores.n_members()).min().unwrap_or(0);
    let methods: Vec<MethodSpec> = config
        .methods()
        .into_iter()
        .filter(
            |m| match m.check().and_then(|_| m.calibration.check_members(min_members)) {
                Ok(()) => true,
                Err(e) => {
                    debug!("skipping {m}: {e}");
                    false
                }
            },
        )
        .collect();
    if methods.is_empty() {
        return Err(Error::Config("no consistent method in the grid".into()));
    }

    let mut reports = methods
        .par_iter()
        .map(|m| evaluate_method(scenes, m).map(|r| (m.to_string(), r)))
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by(|(ma, a), (mb, b)| {
        b.th_iou
            .total_cmp(&a.th_iou)
            .then(a.avg_unc_obj.total_cmp(&b.avg_unc_obj))
            .then_with(|| ma.cmp(mb))
    });
    Ok(reports.into_iter().map(|(_, r)| r).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(Error::UnknownFormat(s.to_owned())),
        }
    }
}

const COLUMNS: [&str; 8] = [
    "Method",
    "top-k",
    "CertIoU.5",
    "CertAcc",
    "CorrUnc",
    "Th.IoU.5",
    "AvgUncObj",
    "MaxUncObj",
];

fn row_cells(r: &EvalReport) -> [String; 8] {
    [
        r.method.table_label(),
        r.method.top_k.to_string(),
        format!("{:.3}", r.cert_iou),
        format!("{:.3}", r.cert_acc),
        format!("{:.3}", r.corr_unc),
        format!("{:.3}", r.th_iou),
        format!("{:.2}", r.avg_unc_obj),
        r.max_unc_obj.to_string(),
    ]
}

/// Renders reports as a CSV or markdown table.
pub fn emit_report(reports: &[EvalReport], format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(&COLUMNS.join(", "));
            out.push('\n');
            for r in reports {
                out.push_str(&row_cells(r).join(", "));
                out.push('\n');
            }
        }
        ReportFormat::Markdown => {
            let _ = writeln!(out, "| {} |", COLUMNS.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(COLUMNS.len()));
            for r in reports {
                let _ = writeln!(out, "| {} |", row_cells(r).join(" | "));
            }
        }
    }
    out
}

/// Writes one disambiguation record per uncertain scene as JSON lines and
/// returns how many were written.
pub fn emit_questions<T>(scenes: &[Scene<T>], method: &MethodSpec, out_path: impl AsRef<Path>) -> Result<usize>
where
    T: Scalar + Serialize,
{
    method.check()?;
    for scene in scenes {
        method.check_scene(scene)?;
    }
    let lines = scenes
        .par_iter()
        .map(|scene| {
            let verdict = run_pipeline(scene, method)?;
            if verdict.is_certain() {
                return Ok(None);
            }
            let expressions = expressions_for(scene, &verdict)?;
            let report = disambiguation_report(scene, &verdict, &expressions)?;
            Ok(Some(serde_json::to_string(&report)?))
        })
        .collect::<Result<Vec<Option<String>>>>()?;

    let mut out = BufWriter::new(File::create(out_path)?);
    let mut count = 0;
    for line in lines.into_iter().flatten() {
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
        count += 1;
    }
    out.flush()?;
    Ok(count)
}
