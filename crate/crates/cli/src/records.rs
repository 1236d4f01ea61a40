//! Output records, written as JSON lines or flattened to CSV rows.

use std::io::Write;

use serde::{Deserialize, Serialize};
use su3ff::formfactor::FormFactorResult;
use su3ff::{BetheState, C64};

use crate::config::{cxs, Cx, Format};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub id: usize,
    pub a: usize,
    pub b: usize,
    pub u: Vec<Cx>,
    pub v: Vec<Cx>,
    pub twist: [Cx; 3],
    pub residual: f64,
    pub on_shell: bool,
    pub modes_l: Vec<i64>,
    pub modes_m: Vec<i64>,
    pub admissible: bool,
}

impl StateRecord {
    pub fn new(id: usize, st: &BetheState) -> Self {
        let tw = st.twist().as_array();
        StateRecord {
            id,
            a: st.a(),
            b: st.b(),
            u: cxs(st.u()),
            v: cxs(st.v()),
            twist: [tw[0].into(), tw[1].into(), tw[2].into()],
            residual: st.residual_norm(),
            on_shell: st.on_shell(),
            modes_l: st.modes().l.clone(),
            modes_m: st.modes().m.clone(),
            admissible: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FfRecord {
    pub op: &'static str,
    pub left: usize,
    pub right: usize,
    pub s: usize,
    pub z: Cx,
    pub site: Option<usize>,
    pub value: Cx,
    pub cond: f64,
    pub scale: f64,
    pub p: Option<usize>,
}

impl FfRecord {
    pub fn new(
        op: &'static str,
        left: usize,
        right: usize,
        site: Option<usize>,
        r: &FormFactorResult,
    ) -> Self {
        FfRecord {
            op,
            left,
            right,
            s: r.s,
            z: r.z.into(),
            site,
            value: r.value.into(),
            cond: r.cond,
            scale: r.scale,
            p: r.p,
        }
    }
}

/// A number compared against a reference with its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value < tol`.
    pub fn below(label: impl Into<String>, value: f64, tol: f64) -> Self {
        Check {
            label: label.into(),
            value,
            tol,
            passed: value < tol,
        }
    }

    /// Passes when `|value - target| <= tol`.
    pub fn near(label: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Check {
            label: label.into(),
            value,
            tol,
            passed: (value - target).abs() <= tol,
        }
    }

    pub fn failed(label: impl Into<String>, reason: &str) -> Self {
        Check {
            label: format!("{}: {reason}", label.into()),
            value: f64::NAN,
            tol: f64::NAN,
            passed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumRuleRecord {
    pub rule: &'static str,
    pub left: usize,
    pub right: usize,
    pub z: Cx,
    pub sum: Cx,
    pub expected: Cx,
    pub check: Check,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarProductRecord {
    pub left: usize,
    pub right: usize,
    pub kappa: [Cx; 3],
    pub value: Cx,
    pub cond: f64,
    pub scale: f64,
    pub log_twist_ratio: Cx,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaRecord {
    pub identity: &'static str,
    pub n: usize,
    pub value: Cx,
    pub expected: Cx,
    pub check: Check,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionRecord {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub elapsed_s: f64,
    pub time_limit_s: Option<f64>,
    /// Identities exercised by the criterion.
    pub identities: Vec<&'static str>,
    pub checks: Vec<Check>,
}

/// One line of the CSV summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub kind: &'static str,
    pub key: String,
    pub label: String,
    pub re: f64,
    pub im: f64,
    pub tol: Option<f64>,
    pub passed: Option<bool>,
}

fn row(kind: &'static str, key: String, label: impl Into<String>, z: C64) -> CsvRow {
    CsvRow {
        kind,
        key,
        label: label.into(),
        re: z.re,
        im: z.im,
        tol: None,
        passed: None,
    }
}

fn check_row(kind: &'static str, key: String, c: &Check) -> CsvRow {
    CsvRow {
        kind,
        key,
        label: c.label.clone(),
        re: c.value,
        im: 0.0,
        tol: Some(c.tol),
        passed: Some(c.passed),
    }
}

/// Anything the CLI prints.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Record {
    State(StateRecord),
    Rejected {
        seed_index: usize,
        reason: String,
    },
    FormFactor(FfRecord),
    SumRule(SumRuleRecord),
    ScalarProduct(ScalarProductRecord),
    Lemma(LemmaRecord),
    Criterion(CriterionRecord),
    Summary {
        passed: bool,
        total: usize,
        failed: Vec<usize>,
        elapsed_s: f64,
    },
    Warning {
        message: String,
    },
}

impl Record {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        match self {
            Record::State(s) => {
                let key = format!("state {}", s.id);
                let mut rows: Vec<CsvRow> =
                    s.u.iter()
                        .enumerate()
                        .map(|(k, &z)| row("state", key.clone(), format!("u{}", k + 1), z.into()))
                        .collect();
                rows.extend(
                    s.v.iter()
                        .enumerate()
                        .map(|(k, &z)| row("state", key.clone(), format!("v{}", k + 1), z.into())),
                );
                rows.push(row("state", key, "residual", C64::new(s.residual, 0.0)));
                rows
            }
            Record::Rejected { seed_index, reason } => {
                vec![row(
                    "rejected",
                    format!("seed {seed_index}"),
                    reason.clone(),
                    C64::new(f64::NAN, 0.0),
                )]
            }
            Record::FormFactor(f) => {
                let key = format!("{} {}|{} s={} z={:?}", f.op, f.left, f.right, f.s, f.z.0);
                vec![
                    row("form-factor", key.clone(), "value", f.value.into()),
                    row("form-factor", key, "cond", C64::new(f.cond, 0.0)),
                ]
            }
            Record::SumRule(s) => vec![check_row(
                "sum-rule",
                format!("{} {}|{} z={:?}", s.rule, s.left, s.right, s.z.0),
                &s.check,
            )],
            Record::ScalarProduct(s) => vec![row(
                "scalar-product",
                format!("{}|{}", s.left, s.right),
                "value",
                s.value.into(),
            )],
            Record::Lemma(l) => vec![check_row(
                "lemma",
                format!("{} n={}", l.identity, l.n),
                &l.check,
            )],
            Record::Criterion(c) => {
                let key = format!("criterion {}", c.id);
                let mut rows: Vec<CsvRow> = c
                    .checks
                    .iter()
                    .map(|k| check_row("criterion", key.clone(), k))
                    .collect();
                rows.push(CsvRow {
                    kind: "criterion",
                    key,
                    label: format!("{} (elapsed s)", c.title),
                    re: c.elapsed_s,
                    im: 0.0,
                    tol: c.time_limit_s,
                    passed: Some(c.passed),
                });
                rows
            }
            Record::Summary {
                passed,
                total,
                elapsed_s,
                ..
            } => vec![CsvRow {
                kind: "summary",
                key: format!("{total} criteria"),
                label: "elapsed s".into(),
                re: *elapsed_s,
                im: 0.0,
                tol: None,
                passed: Some(*passed),
            }],
            Record::Warning { message } => vec![row(
                "warning",
                String::new(),
                message.clone(),
                C64::new(f64::NAN, 0.0),
            )],
        }
    }
}

/// Writes records in the chosen format.
pub struct Sink {
    format: Format,
    json: Option<Box<dyn Write>>,
    csv: Option<csv::Writer<Box<dyn Write>>>,
}

impl Sink {
    pub fn new(format: Format, out: Box<dyn Write>) -> Self {
        match format {
            Format::Json => Sink {
                format,
                json: Some(out),
                csv: None,
            },
            Format::Csv => Sink {
                format,
                json: None,
                csv: Some(csv::Writer::from_writer(out)),
            },
        }
    }

    pub fn emit(&mut self, record: &Record) -> std::io::Result<()> {
        match self.format {
            Format::Json => {
                let out = self.json.as_mut().expect("json sink");
                serde_json::to_writer(&mut *out, record)?;
                out.write_all(b"\n")
            }
            Format::Csv => {
                let w = self.csv.as_mut().expect("csv sink");
                for r in record.csv_rows() {
                    w.serialize(r).map_err(std::io::Error::other)?;
                }
                Ok(())
            }
        }
    }

    pub fn finish(&mut self) -> std::io::Result<()> {
        if let Some(w) = self.json.as_mut() {
            w.flush()?;
        }
        if let Some(w) = self.csv.as_mut() {
            w.flush()?;
        }
        Ok(())
    }
}
