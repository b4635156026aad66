//! CSV input and output plus number formatting.
//!
//! Every number written by the tool goes through [`format_number`], which
//! prints 17 significant digits (enough to round-trip any `f64`) with trailing
//! zeros removed, so outputs are byte-deterministic.

use std::fmt::Write as _;
use std::path::Path;

use cpop_core::{DataSeries, NoiseScale};

use crate::error::{CliError, CliResult};

/// `%.{digits}g`-style formatting with trailing zeros trimmed.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return match v {
            v if v.is_nan() => "NaN".into(),
            v if v == f64::INFINITY => "Inf".into(),
            v if v == f64::NEG_INFINITY => "-Inf".into(),
            v if v.is_sign_negative() => "-0".into(),
            _ => "0".into(),
        };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

/// Lossless representation used in documents and CSV output.
pub fn format_number(v: f64) -> String {
    format_sig(v, 17)
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn parse_cell(path: &Path, line: u64, column: &str, raw: &str) -> CliResult<f64> {
    raw.trim().parse::<f64>().map_err(|_| {
        CliError::Data(format!(
            "{}: line {line}: column {column}: invalid number '{raw}'",
            path.display()
        ))
    })
}

fn open(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, err: csv::Error) -> CliError {
    match err.position() {
        Some(pos) => CliError::Data(format!("{}: line {}: {err}", path.display(), pos.line())),
        None => CliError::Data(format!("{}: {err}", path.display())),
    }
}

/// Named numeric columns of a CSV file with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Columns {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl Columns {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(name))
            .map(|i| self.values[i].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// Reads every column of `path` as numbers. Empty files and files with only
/// a header are data errors.
pub fn read_columns(path: &Path) -> CliResult<Columns> {
    let mut reader = open(path)?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.iter().all(String::is_empty) {
        return Err(CliError::Data(format!("{}: missing header row", path.display())));
    }
    let mut values = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        for ((name, col), raw) in names.iter().zip(values.iter_mut()).zip(record.iter()) {
            col.push(parse_cell(path, line, name, raw)?);
        }
    }
    if values[0].is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(Columns { names, values })
}

/// A single column of numbers, taken from the column called `name` when it
/// exists and from the only column otherwise.
pub fn read_single_column(path: &Path, name: &str) -> CliResult<Vec<f64>> {
    let cols = read_columns(path)?;
    if let Some(v) = cols.get(name) {
        return Ok(v.to_vec());
    }
    match cols.values.len() {
        1 => Ok(cols.values[0].clone()),
        _ => Err(CliError::Data(format!(
            "{}: expected a column named {name} or a single column",
            path.display()
        ))),
    }
}

/// How the noise scale was chosen, echoed into result documents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SdChoice {
    Column,
    Constant(f64),
}

impl std::str::FromStr for SdChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "column" {
            return Ok(SdChoice::Column);
        }
        s.parse::<f64>()
            .map(SdChoice::Constant)
            .map_err(|_| format!("expected 'column' or a number, got '{s}'"))
    }
}

impl SdChoice {
    pub fn describe(&self) -> String {
        match self {
            SdChoice::Column => "column".into(),
            SdChoice::Constant(v) => format!("constant:{}", format_number(*v)),
        }
    }
}

/// The `x`, `y` and optional `sd` columns of an input file.
#[derive(Debug, Clone, PartialEq)]
pub struct InputTable {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sd: Option<Vec<f64>>,
}

impl InputTable {
    pub fn read(path: &Path) -> CliResult<Self> {
        let cols = read_columns(path)?;
        let need = |name: &str| {
            cols.get(name).map(<[f64]>::to_vec).ok_or_else(|| {
                CliError::Data(format!("{}: missing column {name}", path.display()))
            })
        };
        Ok(Self {
            x: need("x")?,
            y: need("y")?,
            sd: cols.get("sd").map(<[f64]>::to_vec),
        })
    }

    /// Builds the series. Without an explicit choice the `sd` column is used
    /// when present and a unit scale otherwise.
    pub fn series(&self, choice: Option<SdChoice>) -> CliResult<(DataSeries, SdChoice)> {
        let choice = choice.unwrap_or(match self.sd {
            Some(_) => SdChoice::Column,
            None => SdChoice::Constant(1.0),
        });
        let sd = match choice {
            SdChoice::Column => match &self.sd {
                Some(sd) => NoiseScale::PerPoint(sd.clone()),
                None => return Err(CliError::Data("sd column missing".into())),
            },
            SdChoice::Constant(v) => NoiseScale::Constant(v),
        };
        let series = DataSeries::new(self.x.clone(), self.y.clone(), sd)?;
        Ok((series, choice))
    }
}

/// Renders rows of numbers as CSV text under `header`.
pub fn render_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(format_number).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Writes `contents` to `path`, or to standard output when `path` is absent.
pub fn emit(path: Option<&Path>, contents: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, contents).map_err(|e| CliError::io(p, e)),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(contents.as_bytes())
                .map_err(|e| CliError::Internal(format!("writing to standard output: {e}")))
        }
    }
}
