//! Full pipeline configuration and its compact string form.
//!
//! The compact form joins tokens with `+`, e.g. `top16+CF+TS(1.5)+SoftTr(0.4)`
//! or `top64+CF+Ens5+EV`:
//!
//! | token              | meaning                                          |
//! |--------------------|--------------------------------------------------|
//! | `top<k>`           | keep the `k` highest RPN candidates (required)   |
//! | `CF` / `SCF`       | class / superclass filtering                     |
//! | `Ens<E>` / `Ens`   | ensemble of the first `E` (or all) members       |
//! | `M<i>`             | single member `i` (default `M0`)                 |
//! | `TS(<t>)`          | temperature                                      |
//! | `Sigm` / `Raw`     | output function, when the detector leaves it open |
//! | detector           | `SA`, `CAHC(d)`, `SoftTr(e)`, `SigmTr(e)`, `RLT(e)`, `Jenks(g)`, `EV` |
//!
//! An ensemble feeds ensemble voting with its members and every other
//! detector with the averaged distribution.

use std::fmt;
use std::str::FromStr;

use crate::calibration::{CalibSpec, EnsembleMode, OutputFn};
use crate::dataset::Scene;
use crate::{Error, Result, Scalar};

use super::detectors::Detector;
use super::filter::FilterLevel;

pub const DEFAULT_JENKS_GVF: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSpec {
    pub top_k: usize,
    pub filter: Option<FilterLevel>,
    pub calibration: CalibSpec,
    pub detector: Detector,
}

impl MethodSpec {
    pub fn new(top_k: usize, filter: Option<FilterLevel>, calibration: CalibSpec, detector: Detector) -> Self {
        MethodSpec {
            top_k,
            filter,
            calibration,
            detector,
        }
    }

    /// Checks that calibration and detector fit together.
    pub fn check(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::Config("top-k must be at least 1".into()));
        }
        self.calibration.check().map_err(|e| Error::Config(e.to_string()))?;
        self.detector.check().map_err(|e| Error::Config(e.to_string()))?;
        let keeps = self.calibration.ensemble_mode == EnsembleMode::KeepMembers;
        if self.detector.needs_members() != keeps {
            return Err(Error::Config(if keeps {
                format!("{} cannot consume per-member scores", self.detector.name())
            } else {
                "ensemble voting requires an ensemble kept per member".into()
            }));
        }
        if let Some(required) = self.detector.required_output() {
            if self.calibration.output_fn != required {
                return Err(Error::Config(format!(
                    "{} requires {:?} output, got {:?}",
                    self.detector.name(),
                    required,
                    self.calibration.output_fn
                )));
            }
        }
        Ok(())
    }

    /// Checks the spec against one scene's ensemble size.
    pub fn check_scene<T: Scalar>(&self, scene: &Scene<T>) -> Result<()> {
        self.calibration
            .check_members(scene.scores.n_members())
            .map_err(|e| Error::Config(format!("scene {}: {e}", scene.scene_id)))
    }

    fn implied_output(&self) -> OutputFn {
        self.detector.required_output().unwrap_or(OutputFn::Softmax)
    }

    /// Label for result tables, without top-k:
    /// `Ens_4 + CF + EV`, `TS(1.5) + SoftTr(0.4)`.
    pub fn table_label(&self) -> String {
        let mut parts = Vec::new();
        match (self.calibration.ensemble_mode, self.calibration.ensemble_size) {
            (EnsembleMode::Single(0), _) => {}
            (EnsembleMode::Single(i), _) => parts.push(format!("M{i}")),
            (_, Some(e)) => parts.push(format!("Ens_{e}")),
            (_, None) => parts.push("Ens".to_owned()),
        }
        if let Some(level) = self.filter {
            parts.push(level.token().to_owned());
        }
        parts.extend(self.calibration_tokens());
        parts.push(detector_token(&self.detector));
        parts.join(" + ")
    }

    fn calibration_tokens(&self) -> Vec<String> {
        let mut parts = Vec::new();
        if self.calibration.temperature != 1.0 {
            parts.push(format!("TS({})", self.calibration.temperature));
        }
        if self.calibration.output_fn != self.implied_output() {
            parts.push(
                match self.calibration.output_fn {
                    OutputFn::Softmax => "Soft",
                    OutputFn::Sigmoid => "Sigm",
                    OutputFn::Raw => "Raw",
                }
                .to_owned(),
            );
        }
        parts
    }
}

fn detector_token(d: &Detector) -> String {
    match d.param() {
        Some(p) => format!("{}({p})", d.name()),
        None => d.name().to_owned(),
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = vec![format!("top{}", self.top_k)];
        if let Some(level) = self.filter {
            parts.push(level.token().to_owned());
        }
        match (self.calibration.ensemble_mode, self.calibration.ensemble_size) {
            (EnsembleMode::Single(0), _) => {}
            (EnsembleMode::Single(i), _) => parts.push(format!("M{i}")),
            (_, Some(e)) => parts.push(format!("Ens{e}")),
            (_, None) => parts.push("Ens".to_owned()),
        }
        parts.extend(self.calibration_tokens());
        parts.push(detector_token(&self.detector));
        f.write_str(&parts.join("+"))
    }
}

fn split_call(token: &str) -> Result<(&str, Option<f64>)> {
    let Some(open) = token.find('(') else {
        return Ok((token, None));
    };
    let inner = token[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| Error::MethodSyntax(token.to_owned()))?;
    let value = inner
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::MethodSyntax(token.to_owned()))?;
    Ok((&token[..open], Some(value)))
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut top_k = None;
        let mut filter = None;
        let mut ensemble: Option<Option<usize>> = None;
        let mut member = None;
        let mut temperature = 1.0;
        let mut output = None;
        let mut detector = None;

        let unexpected = |t: &str| Error::MethodSyntax(t.to_owned());
        for raw in s.split('+') {
            let token = raw.trim();
            let (head, param) = split_call(token)?;
            let need = |p: Option<f64>| p.ok_or_else(|| unexpected(token));
            let found = match head {
                "CF" => filter.replace(FilterLevel::Class).is_some(),
                "SCF" => filter.replace(FilterLevel::Superclass).is_some(),
                "TS" => {
                    temperature = need(param)?;
                    false
                }
                "Soft" => output.replace(OutputFn::Softmax).is_some(),
                "Sigm" => output.replace(OutputFn::Sigmoid).is_some(),
                "Raw" => output.replace(OutputFn::Raw).is_some(),
                "SA" => detector.replace(Detector::Sa).is_some(),
                "EV" => detector.replace(Detector::Ev).is_some(),
                "CAHC" => detector.replace(Detector::Cahc { delta: need(param)? }).is_some(),
                "SoftTr" => detector.replace(Detector::SoftTr { eta: need(param)? }).is_some(),
                "SigmTr" => detector.replace(Detector::SigmTr { eta: need(param)? }).is_some(),
                "RLT" => detector.replace(Detector::Rlt { eta: need(param)? }).is_some(),
                "Jenks" => detector
                    .replace(Detector::Jenks {
                        gvf: param.unwrap_or(DEFAULT_JENKS_GVF),
                    })
                    .is_some(),
                _ => {
                    let number = |prefix: &str| -> Option<std::result::Result<usize, _>> {
                        head.strip_prefix(prefix)
                            .map(|rest| rest.trim_start_matches('_').parse::<usize>())
                    };
                    if let Some(k) = number("top") {
                        top_k.replace(k.map_err(|_| unexpected(token))?).is_some()
                    } else if head == "Ens" {
                        ensemble.replace(None).is_some()
                    } else if let Some(e) = number("Ens") {
                        ensemble.replace(Some(e.map_err(|_| unexpected(token))?)).is_some()
                    } else if let Some(i) = number("M") {
                        member.replace(i.map_err(|_| unexpected(token))?).is_some()
                    } else {
                        return Err(unexpected(token));
                    }
                }
            };
            if found {
                return Err(Error::MethodSyntax(format!("{token} (repeated)")));
            }
            if param.is_some() && matches!(head, "CF" | "SCF" | "SA" | "EV" | "Soft" | "Sigm" | "Raw") {
                return Err(unexpected(token));
            }
        }

        let top_k = top_k.ok_or_else(|| Error::MethodSyntax(format!("{s} (missing top-k)")))?;
        let detector = detector.ok_or_else(|| Error::MethodSyntax(format!("{s} (missing detector)")))?;
        if ensemble.is_some() && member.is_some() {
            return Err(Error::MethodSyntax(format!("{s} (both ensemble and single member)")));
        }
        let ensemble_mode = match (ensemble, member) {
            (Some(_), _) if detector.needs_members() => EnsembleMode::KeepMembers,
            (Some(_), _) => EnsembleMode::Average,
            (None, Some(i)) => EnsembleMode::Single(i),
            (None, None) => EnsembleMode::Single(0),
        };
        let output_fn = output.unwrap_or(detector.required_output().unwrap_or(OutputFn::Softmax));
        Ok(MethodSpec {
            top_k,
            filter,
            calibration: CalibSpec {
                temperature,
                output_fn,
                ensemble_mode,
                ensemble_size: ensemble.flatten(),
            },
            detector,
        })
    }
}
