//! Per-iteration CSV, long-format plot data and the summary table.
//!
//! History CSV columns, in order:
//! `k, rel_err_a_norm, true_res_norm, upd_res_norm, residual_gap_norm,
//! nu_gap, w_gap_norm, s_gap_norm, lanczos_res_norm, succ_orth, alpha, beta,
//! nu, nu_prime`. Values that do not apply are empty cells. Floats use the
//! shortest representation that parses back to the same bits.

use std::fmt::Write as _;
use std::io::{self, Read, Write};

use thiserror::Error;

use pipecg_core::diagnostics::DiagnosticsError;
use pipecg_core::{summarize, ConvergenceHistory, IterationRecord, SolveStatus};

pub const CSV_COLUMNS: [&str; 14] = [
    "k",
    "rel_err_a_norm",
    "true_res_norm",
    "upd_res_norm",
    "residual_gap_norm",
    "nu_gap",
    "w_gap_norm",
    "s_gap_norm",
    "lanczos_res_norm",
    "succ_orth",
    "alpha",
    "beta",
    "nu",
    "nu_prime",
];

pub const PLOT_COLUMNS: [&str; 4] = ["variant", "k", "metric", "value"];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("I/O: {0}")]
    Io(#[from] io::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected CSV header {0:?}")]
    Header(Vec<String>),
}

pub fn emit_csv<W: Write>(records: &[IterationRecord], out: W) -> Result<(), OutputError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(records: &[IterationRecord]) -> String {
    let mut buf = Vec::new();
    emit_csv(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

pub fn parse_csv<R: Read>(input: R) -> Result<Vec<IterationRecord>, OutputError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?;
    if header.iter().ne(CSV_COLUMNS) {
        return Err(OutputError::Header(header.iter().map(str::to_string).collect()));
    }
    rdr.deserialize().map(|r| r.map_err(OutputError::from)).collect()
}

fn metrics(r: &IterationRecord) -> [(&'static str, Option<f64>); 13] {
    [
        ("rel_err_a_norm", r.rel_err_a_norm),
        ("true_res_norm", Some(r.true_res_norm)),
        ("upd_res_norm", Some(r.upd_res_norm)),
        ("residual_gap_norm", Some(r.residual_gap_norm)),
        ("nu_gap", r.nu_gap),
        ("w_gap_norm", r.w_gap_norm),
        ("s_gap_norm", r.s_gap_norm),
        ("lanczos_res_norm", r.lanczos_res_norm),
        ("succ_orth", r.succ_orth),
        ("alpha", Some(r.alpha)),
        ("beta", r.beta),
        ("nu", Some(r.nu)),
        ("nu_prime", r.nu_prime),
    ]
}

/// One row per (variant, k, metric) with a value; absent metrics are skipped.
pub fn emit_plot_data<W: Write>(histories: &[&ConvergenceHistory], out: W) -> Result<(), OutputError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(PLOT_COLUMNS)?;
    for h in histories {
        for r in &h.records {
            for (name, v) in metrics(r) {
                if let Some(v) = v {
                    w.serialize((&h.variant, r.k, name, v))?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryCell {
    /// First k with relative A-norm error below 1e-5; `None` if never reached.
    pub iters: Option<usize>,
    pub min_log10_err: Option<f64>,
}

impl SummaryCell {
    pub fn from_records(variant: &str, records: &[IterationRecord]) -> Self {
        let mut h = ConvergenceHistory::new(variant, "");
        h.records = records.to_vec();
        match summarize(&h) {
            Ok(s) => Self { iters: s.iters_to_1e5, min_log10_err: Some(s.min_log10_err) },
            Err(DiagnosticsError::EmptyHistory | DiagnosticsError::MissingError) => {
                Self { iters: None, min_log10_err: None }
            }
            Err(e) => unreachable!("summary of records cannot fail with {e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flag {
    Plain,
    /// More than ten percent away from HS.
    Bold,
    /// Accuracy never reached.
    Dash,
}

fn differs(v: f64, hs: f64) -> bool {
    (v - hs).abs() > 0.1 * hs.abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub problem: String,
    pub preconditioner: String,
    /// `(variant label, cell)` in column order.
    pub cells: Vec<(String, SummaryCell)>,
}

impl SummaryRow {
    pub fn cell(&self, label: &str) -> Option<&SummaryCell> {
        self.cells.iter().find(|(l, _)| l == label).map(|(_, c)| c)
    }

    fn hs(&self) -> Option<&SummaryCell> {
        self.cell("HS")
    }

    pub fn iter_flag(&self, label: &str) -> Option<Flag> {
        let c = self.cell(label)?;
        let Some(it) = c.iters else { return Some(Flag::Dash) };
        let bold = self.hs().and_then(|h| h.iters).is_some_and(|hs| differs(it as f64, hs as f64));
        Some(if bold { Flag::Bold } else { Flag::Plain })
    }

    pub fn err_flag(&self, label: &str) -> Option<Flag> {
        let c = self.cell(label)?;
        let Some(e) = c.min_log10_err else { return Some(Flag::Dash) };
        let bold = self.hs().and_then(|h| h.min_log10_err).is_some_and(|hs| differs(e, hs));
        Some(if bold { Flag::Bold } else { Flag::Plain })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn push(&mut self, row: SummaryRow) {
        self.rows.push(row);
    }

    /// Variant labels in first-seen order across rows.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = Vec::new();
        for r in &self.rows {
            for (l, _) in &r.cells {
                if !cols.contains(l) {
                    cols.push(l.clone());
                }
            }
        }
        cols
    }

    /// Plain text table with iteration and minimum-error blocks. Bold values
    /// are wrapped in `*`, failures are `-`.
    pub fn emit_table(&self) -> String {
        let cols = self.columns();
        let mut header = vec!["matrix".to_string(), "prec.".to_string()];
        header.extend(cols.iter().map(|c| format!("it:{c}")));
        header.extend(cols.iter().map(|c| format!("err:{c}")));
        let mut lines = vec![header];
        for r in &self.rows {
            let mut line =
                vec![r.problem.clone(), if r.preconditioner == "none" { "-".into() } else { r.preconditioner.clone() }];
            for c in &cols {
                line.push(match (r.cell(c), r.iter_flag(c)) {
                    (Some(cell), Some(flag)) => decorate(cell.iters.map(|i| i.to_string()), flag),
                    _ => String::new(),
                });
            }
            for c in &cols {
                line.push(match (r.cell(c), r.err_flag(c)) {
                    (Some(cell), Some(flag)) => decorate(cell.min_log10_err.map(|e| format!("{e:.2}")), flag),
                    _ => String::new(),
                });
            }
            lines.push(line);
        }
        let widths: Vec<usize> =
            (0..lines[0].len()).map(|j| lines.iter().map(|l| l[j].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for l in &lines {
            let cells: Vec<String> = l
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (s, &w))| if j < 2 { format!("{s:<w$}") } else { format!("{s:>w$}") })
                .collect();
            writeln!(out, "{}", cells.join("  ").trim_end()).unwrap();
        }
        out
    }

    /// Long-format summary: one line per (row, variant).
    pub fn emit_csv<W: Write>(
        &self,
        statuses: &[(String, String, String, SolveStatus)],
        out: W,
    ) -> Result<(), OutputError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record([
            "problem",
            "preconditioner",
            "variant",
            "iterations",
            "min_log10_err",
            "iter_flag",
            "err_flag",
            "status",
        ])?;
        for r in &self.rows {
            for (label, cell) in &r.cells {
                let status = statuses
                    .iter()
                    .find(|(p, m, v, _)| p == &r.problem && m == &r.preconditioner && v == label)
                    .map(|s| s.3.to_string())
                    .unwrap_or_default();
                w.serialize((
                    &r.problem,
                    &r.preconditioner,
                    label,
                    cell.iters,
                    cell.min_log10_err,
                    flag_name(r.iter_flag(label)),
                    flag_name(r.err_flag(label)),
                    status,
                ))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn flag_name(f: Option<Flag>) -> &'static str {
    match f {
        Some(Flag::Bold) => "bold",
        Some(Flag::Dash) => "dash",
        _ => "",
    }
}

fn decorate(v: Option<String>, flag: Flag) -> String {
    match (v, flag) {
        (_, Flag::Dash) | (None, _) => "-".into(),
        (Some(v), Flag::Bold) => format!("*{v}*"),
        (Some(v), Flag::Plain) => v,
    }
}
