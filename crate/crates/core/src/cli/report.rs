//! Report assembly and the table, JSON and CSV renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundsReport, Interval};
use crate::conditions::ValidationReport;
use crate::error::{Error, Result};
use crate::fem::PoincareConstant;
use crate::nonlinear::{NegativeSpectrum, PoincareCriterion};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub dim: usize,
    pub rank: usize,
    pub ab_star_hermitian: bool,
    pub hermitian_residual: f64,
    pub valid: bool,
    pub message: String,
}

impl From<&ValidationReport> for ValidationSummary {
    fn from(v: &ValidationReport) -> Self {
        Self {
            dim: v.dim,
            rank: v.rank,
            ab_star_hermitian: v.ab_star_hermitian,
            hermitian_residual: v.hermitian_residual,
            valid: v.valid,
            message: v.message(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FemSummary {
    pub nodes_per_unit: usize,
    pub truncation: Option<f64>,
    pub negative_eigenvalues: Vec<f64>,
    /// Largest `|λ_fem − λ_oracle| / |λ_oracle|` when the oracle ran.
    pub max_relative_deviation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactSummary {
    pub zero_modes: usize,
    pub criterion: PoincareCriterion,
    pub poincare: Option<PoincareConstant>,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<NegativeSpectrum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fem: Option<FemSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compact: Option<CompactSummary>,
}

impl Report {
    /// Fails if an oracle value escapes a printed interval.
    pub fn check_enclosures(&self) -> Result<()> {
        let (Some(b), Some(s)) = (&self.bounds, &self.spectrum) else {
            return Ok(());
        };
        for (ix, kappa) in b.indices.iter().zip(s.kappas()) {
            let slack = 1e-9 * (1.0 + kappa);
            let mut named = vec![("thm1", ix.thm1), ("thm3", ix.thm3), ("combined", ix.combined)];
            named.push(("thm2", Interval::new(ix.thm2.lower.unwrap_or(0.0), ix.thm2.upper)));
            for (name, iv) in named {
                if !iv.contains(kappa, slack) {
                    return Err(Error::Consistency(format!(
                        "index {}: κ = {kappa} lies outside the {name} interval [{}, {}]",
                        ix.index, iv.lower, iv.upper
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

pub const CSV_HEADER: [&str; 15] = [
    "index",
    "l",
    "m",
    "r",
    "thm1_lo",
    "thm1_hi",
    "thm2_lo",
    "thm2_hi",
    "thm3_lo",
    "thm3_hi",
    "combined_lo",
    "combined_hi",
    "kappa_oracle",
    "eigenvalue",
    "exact",
];

/// One CSV row; absent values are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub index: usize,
    pub values: [Option<f64>; 13],
    pub exact: bool,
}

pub fn csv_rows(report: &Report) -> Vec<CsvRow> {
    let Some(b) = &report.bounds else {
        return Vec::new();
    };
    let kappas = report.spectrum.as_ref().map(NegativeSpectrum::kappas);
    b.indices
        .iter()
        .enumerate()
        .map(|(k, ix)| {
            let kappa = kappas.as_ref().and_then(|ks| ks.get(k).copied());
            CsvRow {
                index: ix.index,
                values: [
                    Some(ix.l),
                    Some(ix.m),
                    Some(ix.r),
                    Some(ix.thm1.lower),
                    Some(ix.thm1.upper),
                    ix.thm2.lower,
                    Some(ix.thm2.upper),
                    Some(ix.thm3.lower),
                    Some(ix.thm3.upper),
                    Some(ix.combined.lower),
                    Some(ix.combined.upper),
                    kappa,
                    kappa.map(|x| -x * x),
                ],
                exact: b.exact,
            }
        })
        .collect()
}

/// 17 significant digits, which round-trips every finite `f64`.
fn csv_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn emit_csv(report: &Report) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Numerical(format!("csv output: {e}"));
    w.write_record(CSV_HEADER).map_err(to_err)?;
    for row in csv_rows(report) {
        let mut rec = vec![row.index.to_string()];
        rec.extend(row.values.iter().map(|v| v.map(csv_number).unwrap_or_default()));
        rec.push(row.exact.to_string());
        w.write_record(&rec).map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numerical(format!("csv output: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn parse_csv(text: &str) -> std::result::Result<Vec<CsvRow>, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(format!("unexpected header {header:?}"));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let index = rec[0].parse().map_err(|e| format!("index: {e}"))?;
        let mut values = [None; 13];
        for (k, slot) in values.iter_mut().enumerate() {
            let field = &rec[k + 1];
            if !field.is_empty() {
                *slot = Some(field.parse().map_err(|e| format!("{}: {e}", CSV_HEADER[k + 1]))?);
            }
        }
        let exact = rec[14].parse().map_err(|e| format!("exact: {e}"))?;
        rows.push(CsvRow { index, values, exact });
    }
    Ok(rows)
}

pub fn emit_json(report: &Report) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Numerical(format!("json output: {e}")))
}

/// Ten significant digits.
pub fn sig10(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.9e}");
    let exp: i32 = sci.rsplit_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if (-4..10).contains(&exp) {
        format!("{:.*}", (9 - exp).max(0) as usize, x)
    } else {
        sci
    }
}

fn interval(lo: Option<f64>, hi: f64) -> String {
    format!("[{}, {}]", lo.map_or_else(|| "-".to_owned(), sig10), sig10(hi))
}

struct Style {
    color: bool,
}

impl Style {
    fn heading(&self, s: &str) -> String {
        if self.color {
            format!("\x1b[1m{s}\x1b[0m")
        } else {
            s.to_owned()
        }
    }
}

pub fn emit_table(report: &Report, color: bool) -> String {
    let st = Style { color };
    let mut out = String::new();
    if let Some(v) = &report.validation {
        let _ = writeln!(out, "{}", st.heading("boundary conditions"));
        let _ = writeln!(out, "  dimension            {}", v.dim);
        let _ = writeln!(out, "  rank (A B)           {}", v.rank);
        let _ = writeln!(out, "  |AB* - BA*|          {}", sig10(v.hermitian_residual));
        let _ = writeln!(out, "  status               {}", v.message);
    }
    if let Some(b) = &report.bounds {
        let _ = writeln!(out, "{}", st.heading("negative spectrum bounds"));
        let _ = writeln!(out, "  negative eigenvalues {}", b.negative_count);
        if let Some(a) = b.a_min {
            let _ = writeln!(out, "  shortest edge        {}", sig10(a));
        }
        if b.exact {
            let _ = writeln!(out, "  star graph           all bounds are exact");
        }
        if let Some(note) = &b.note {
            let _ = writeln!(out, "  note                 {note}");
        }
        if !b.indices.is_empty() {
            let kappas = report.spectrum.as_ref().map(NegativeSpectrum::kappas);
            let _ = writeln!(
                out,
                "  {:>3}  {:>16}  {:>16}  {:>16}  {:>34}  {:>34}  {:>34}  {:>34}  {:>16}  {:>17}",
                "i", "l", "m", "r", "thm1", "thm2", "thm3", "combined", "kappa", "eigenvalue"
            );
            for (k, ix) in b.indices.iter().enumerate() {
                let kappa = kappas.as_ref().and_then(|ks| ks.get(k).copied());
                let _ = writeln!(
                    out,
                    "  {:>3}  {:>16}  {:>16}  {:>16}  {:>34}  {:>34}  {:>34}  {:>34}  {:>16}  {:>17}",
                    ix.index,
                    sig10(ix.l),
                    sig10(ix.m),
                    sig10(ix.r),
                    interval(Some(ix.thm1.lower), ix.thm1.upper),
                    interval(ix.thm2.lower, ix.thm2.upper),
                    interval(Some(ix.thm3.lower), ix.thm3.upper),
                    interval(Some(ix.combined.lower), ix.combined.upper),
                    kappa.map_or_else(|| "-".to_owned(), sig10),
                    kappa.map_or_else(|| "-".to_owned(), |x| sig10(-x * x)),
                );
            }
        }
        if let Some(cert) = &b.certificates {
            let _ = writeln!(
                out,
                "  thm1 optimal         {} (cosine {})",
                cert.thm1.holds,
                sig10(cert.thm1.cosine)
            );
            let _ = writeln!(
                out,
                "  thm2 optimal         {} (cosine {})",
                cert.thm2.holds,
                sig10(cert.thm2.cosine)
            );
        }
        if let Some(c) = &b.coarse {
            let _ = writeln!(out, "  spectrum bounded below by {}", sig10(c.xi_bound));
            if let Some(k) = c.kuchment {
                let _ = writeln!(out, "  vertex-count bound   {}", sig10(k));
            }
        }
        if let Some(gb) = &b.growth_bound {
            let _ = writeln!(out, "  growth bound         {}", interval(Some(gb.lower), gb.upper));
        }
    }
    if let Some(s) = &report.spectrum {
        let _ = writeln!(out, "{}", st.heading("negative eigenvalues"));
        if s.roots.is_empty() {
            let _ = writeln!(out, "  none");
        }
        for r in &s.roots {
            let _ = writeln!(
                out,
                "  kappa {:>16}  eigenvalue {:>17}  multiplicity {}  residual {}",
                sig10(r.kappa),
                sig10(r.eigenvalue),
                r.multiplicity,
                sig10(r.residual)
            );
        }
    }
    if let Some(f) = &report.fem {
        let _ = writeln!(out, "{}", st.heading("finite element check"));
        let _ = writeln!(out, "  nodes per unit       {}", f.nodes_per_unit);
        if let Some(t) = f.truncation {
            let _ = writeln!(out, "  truncation           {}", sig10(t));
        }
        let ev: Vec<String> = f.negative_eigenvalues.iter().map(|&x| sig10(x)).collect();
        let _ = writeln!(out, "  negative eigenvalues {}", if ev.is_empty() { "none".to_owned() } else { ev.join(", ") });
        if let Some(dev) = f.max_relative_deviation {
            let _ = writeln!(out, "  max rel. deviation   {}", sig10(dev));
        }
    }
    if let Some(c) = &report.compact {
        let _ = writeln!(out, "{}", st.heading("compact graph"));
        let _ = writeln!(out, "  zero modes           {}", c.zero_modes);
        let _ = writeln!(out, "  poincare criterion   {}", c.message);
        if let Some(p) = &c.poincare {
            let _ = writeln!(out, "  constant C           {}", sig10(p.constant));
            let _ = writeln!(out, "  lowest eigenvalue    {}", sig10(p.lowest_eigenvalue));
        }
    }
    out
}

pub fn emit(report: &Report, format: Format, color: bool) -> Result<String> {
    match format {
        Format::Table => Ok(emit_table(report, color)),
        Format::Json => emit_json(report),
        Format::Csv => emit_csv(report),
    }
}
