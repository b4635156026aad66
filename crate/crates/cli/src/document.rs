//! The JSON result document written by `detect` and `crops` and read back by
//! `estimate` and `variance loglinear`.

use serde::de::Error as _;
use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use cpop_core::{CropsResult, DataSeries, FittedSegmentRow, Knot, Segmentation};

use crate::error::{CliError, CliResult};
use crate::table::format_number;

pub const SCHEMA_VERSION: u32 = 1;

/// A finite number written with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(S::Error::custom(format!("cannot store {} in a document", self.0)));
        }
        RawValue::from_string(format_number(self.0))
            .map_err(S::Error::custom)?
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if !v.is_finite() {
            return Err(D::Error::custom("non-finite number"));
        }
        Ok(Num(v))
    }
}

fn nums(v: &[f64]) -> Vec<Num> {
    v.iter().copied().map(Num).collect()
}

/// Echo of the options a run used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_min: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_max: Option<Num>,
    pub minseglen: Num,
    pub prune_approx: bool,
    pub grid: String,
    pub grid_size: usize,
    pub sd: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_radius: Option<Num>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnotEntry {
    pub x: Num,
    pub value: Num,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentEntry {
    pub x0: Num,
    pub y0: Num,
    pub x1: Num,
    pub y1: Num,
    pub gradient: Num,
    pub intercept: Num,
    pub rss: Num,
}

impl From<&FittedSegmentRow> for SegmentEntry {
    fn from(r: &FittedSegmentRow) -> Self {
        Self {
            x0: Num(r.x0),
            y0: Num(r.y0),
            x1: Num(r.x1),
            y1: Num(r.y1),
            gradient: Num(r.gradient),
            intercept: Num(r.intercept),
            rss: Num(r.rss),
        }
    }
}

/// A fitted piecewise-linear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    pub beta: Num,
    pub changepoints: Vec<Num>,
    pub knots: Vec<KnotEntry>,
    pub fitted: Vec<SegmentEntry>,
    pub rss: Num,
    pub cost: Num,
}

impl ModelSection {
    pub fn new(seg: &Segmentation, series: &DataSeries, beta: f64) -> Self {
        Self {
            beta: Num(beta),
            changepoints: nums(&seg.changepoints),
            knots: seg
                .knots
                .iter()
                .map(|k| KnotEntry {
                    x: Num(k.x),
                    value: Num(k.value),
                })
                .collect(),
            fitted: cpop_core::fitted_table(seg, series)
                .iter()
                .map(SegmentEntry::from)
                .collect(),
            rss: Num(seg.rss),
            cost: Num(seg.cost),
        }
    }

    /// Rebuilds the fit, checking that the knots describe a function.
    pub fn segmentation(&self) -> CliResult<Segmentation> {
        let knots: Vec<Knot> = self
            .knots
            .iter()
            .map(|k| Knot {
                x: k.x.0,
                value: k.value.0,
            })
            .collect();
        if knots.len() < 2 {
            return Err(CliError::Data("malformed document: fewer than two knots".into()));
        }
        if knots.windows(2).any(|w| w[0].x >= w[1].x) {
            return Err(CliError::Data(
                "malformed document: knot locations must be strictly increasing".into(),
            ));
        }
        Ok(Segmentation {
            changepoints: self.changepoints.iter().map(|c| c.0).collect(),
            knots,
            cost: self.cost.0,
            rss: self.rss.0,
        })
    }
}

/// One distinct segmentation on a penalty path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub beta: Num,
    #[serde(rename = "Qm")]
    pub qm: Num,
    pub penalised_cost: Num,
    pub m: usize,
    pub changepoints: Vec<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub method: String,
    /// Index into `records`.
    pub record: usize,
    pub m: usize,
    /// `None` when the selected fit has zero residuals.
    pub bic: Option<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSection {
    pub records: Vec<RecordEntry>,
    pub solver_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<Selection>,
}

impl PathSection {
    pub fn new(crops: &CropsResult) -> Self {
        Self {
            records: crops
                .records
                .iter()
                .map(|r| RecordEntry {
                    beta: Num(r.beta),
                    qm: Num(r.qm),
                    penalised_cost: Num(r.penalised_cost),
                    m: r.m,
                    changepoints: nums(&r.changepoints),
                })
                .collect(),
            solver_calls: crops.solver_calls,
            selected: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema_version: u32,
    /// `detect` or `crops`.
    pub kind: String,
    pub config: RunConfig,
    /// The fit; absent for a penalty path without a selected model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathSection>,
}

impl ResultDocument {
    pub fn to_json(&self) -> CliResult<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Internal(format!("serialising document: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let doc: Self = serde_json::from_str(text)
            .map_err(|e| CliError::Data(format!("malformed document: {e}")))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(CliError::Data(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    pub fn read(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The fitted model, or an error naming the document.
    pub fn require_model(&self) -> CliResult<&ModelSection> {
        self.model.as_ref().ok_or_else(|| {
            CliError::Data("document holds no fitted model (run crops with --select bic)".into())
        })
    }
}
