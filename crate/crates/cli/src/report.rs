//! Aggregated result rows and their CSV form.

use std::path::Path;

use crate::error::CliError;

pub const HEADER: [&str; 18] = [
    "sweep_param",
    "sweep_value",
    "method",
    "criterion",
    "evaluator",
    "trials",
    "youden_j",
    "hit_rate",
    "fa_rate",
    "rmse",
    "rmse_coverage",
    "mean_time_ms",
    "t_metric",
    "s_metric",
    "mean_k_hat",
    "seed",
    "failures",
    "warning",
];

/// One (sweep value, method) aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub method: String,
    pub criterion: String,
    pub evaluator: String,
    pub trials: usize,
    pub youden_j: f64,
    pub hit_rate: f64,
    pub fa_rate: f64,
    /// Absent when no trial had a target hit by every method.
    pub rmse: Option<f64>,
    /// Fraction of successful trials with a defined RMSE.
    pub rmse_coverage: f64,
    pub mean_time_ms: f64,
    pub t_metric: f64,
    pub s_metric: f64,
    pub mean_k_hat: f64,
    pub seed: u64,
    pub failures: usize,
    /// More than 5% of the trials failed for this method.
    pub warning: bool,
}

/// Sweep value ascending, then method id.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then_with(|| a.method.cmp(&b.method))
    });
}

/// Nine significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.8e}")
    }
}

impl ResultRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.sweep_param.clone(),
            format_float(self.sweep_value),
            self.method.clone(),
            self.criterion.clone(),
            self.evaluator.clone(),
            self.trials.to_string(),
            format_float(self.youden_j),
            format_float(self.hit_rate),
            format_float(self.fa_rate),
            self.rmse.map(format_float).unwrap_or_default(),
            format_float(self.rmse_coverage),
            format_float(self.mean_time_ms),
            format_float(self.t_metric),
            format_float(self.s_metric),
            format_float(self.mean_k_hat),
            self.seed.to_string(),
            self.failures.to_string(),
            self.warning.to_string(),
        ]
    }

    fn from_fields(r: &csv::StringRecord) -> Result<Self, String> {
        if r.len() != HEADER.len() {
            return Err(format!("expected {} fields, found {}", HEADER.len(), r.len()));
        }
        let float = |i: usize| r[i].parse::<f64>().map_err(|e| format!("{}: {e}", HEADER[i]));
        let int = |i: usize| r[i].parse::<u64>().map_err(|e| format!("{}: {e}", HEADER[i]));
        Ok(ResultRow {
            sweep_param: r[0].to_string(),
            sweep_value: float(1)?,
            method: r[2].to_string(),
            criterion: r[3].to_string(),
            evaluator: r[4].to_string(),
            trials: int(5)? as usize,
            youden_j: float(6)?,
            hit_rate: float(7)?,
            fa_rate: float(8)?,
            rmse: if r[9].is_empty() { None } else { Some(float(9)?) },
            rmse_coverage: float(10)?,
            mean_time_ms: float(11)?,
            t_metric: float(12)?,
            s_metric: float(13)?,
            mean_k_hat: float(14)?,
            seed: int(15)?,
            failures: int(16)? as usize,
            warning: r[17].parse().map_err(|e| format!("warning: {e}"))?,
        })
    }
}

pub fn write_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<(), CliError> {
    if rows.is_empty() {
        return Err(CliError::Config("refusing to write an empty table".into()));
    }
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_csv(rows, std::io::BufWriter::new(file)).map_err(|e| CliError::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(HEADER) {
        return Err(CliError::Config(format!("{}: unexpected header", path.display())));
    }
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            ResultRow::from_fields(&rec).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        })
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            _ => unreachable!("checked is_io_error"),
        }
    } else {
        CliError::Config(format!("{}: {e}", path.display()))
    }
}
