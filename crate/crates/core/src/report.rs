//! Result tables: per-seed CSV, aggregate CSV, and a markdown report laid out
//! like the usual "baseline accuracy, then per-method gain in %p" table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::augment::Method;
use crate::experiment::RunResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Fraction in `[0, 1]`.
    pub accuracy: f64,
    pub macro_f1: f64,
    pub test_loss: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub n_train: usize,
    pub vocab_size: usize,
    pub test_digest: String,
}

impl From<RunResult> for RunMetrics {
    fn from(r: RunResult) -> Self {
        Self {
            accuracy: r.accuracy,
            macro_f1: r.macro_f1,
            test_loss: r.test_loss,
            best_epoch: r.best_epoch,
            epochs_run: r.epochs_run,
            n_train: r.n_train,
            vocab_size: r.vocab_size,
            test_digest: r.test_digest,
        }
    }
}

impl RunMetrics {
    /// Metrics with only the headline numbers set.
    pub fn scores(accuracy: f64, macro_f1: f64) -> Self {
        Self {
            accuracy,
            macro_f1,
            test_loss: 0.0,
            best_epoch: 0,
            epochs_run: 0,
            n_train: 0,
            vocab_size: 0,
            test_digest: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Ok(RunMetrics),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub method: Method,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub outcome: RunOutcome,
}

/// Mean/std over seeds for one (method, alpha) cell. Accuracies are in
/// percent, gains in percentage points.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub method: Method,
    pub alpha: Option<f64>,
    pub n_ok: usize,
    pub n_total: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
    pub gain: Option<f64>,
}

impl Aggregate {
    pub fn complete(&self) -> bool {
        self.n_ok == self.n_total && self.n_ok > 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub dataset: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<RunRow>,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Signed two-decimal %p cell, e.g. `+2.03` or `-1.37`; never `-0.00`.
pub fn format_gain(gain: f64) -> String {
    let s = format!("{gain:+.2}");
    if s == "-0.00" {
        "+0.00".to_string()
    } else {
        s
    }
}

fn format_alpha(alpha: Option<f64>) -> String {
    alpha.map(|a| format!("{a}")).unwrap_or_else(|| "na".into())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Highest mean accuracy among `(alpha, accuracy)` pairs; ties keep the
/// smaller alpha.
pub fn best_alpha(cells: &[(f64, f64)]) -> Option<(f64, f64)> {
    let mut sorted = cells.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted.into_iter().fold(None, |best, cell| match best {
        Some(b) if cell.1 <= b.1 => Some(b),
        _ => Some(cell),
    })
}

impl ReportTable {
    pub fn new(dataset: impl Into<String>, seeds: Vec<u64>, rows: Vec<RunRow>, note: impl Into<String>) -> Self {
        Self {
            dataset: dataset.into(),
            seeds,
            rows,
            note: note.into(),
        }
    }

    /// One aggregate per (method, alpha), ordered by method then alpha.
    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut groups: BTreeMap<(Method, Option<u64>), Vec<&RunRow>> = BTreeMap::new();
        for row in &self.rows {
            groups.entry((row.method, row.alpha.map(f64::to_bits))).or_default().push(row);
        }
        let mut out: Vec<Aggregate> = groups
            .into_values()
            .map(|rows| {
                let ok: Vec<&RunMetrics> = rows
                    .iter()
                    .filter_map(|r| match &r.outcome {
                        RunOutcome::Ok(m) => Some(m),
                        RunOutcome::Failed(_) => None,
                    })
                    .collect();
                let acc: Vec<f64> = ok.iter().map(|m| 100.0 * m.accuracy).collect();
                let f1: Vec<f64> = ok.iter().map(|m| m.macro_f1).collect();
                let (accuracy_mean, accuracy_std) = mean_std(&acc);
                let (macro_f1_mean, macro_f1_std) = mean_std(&f1);
                Aggregate {
                    method: rows[0].method,
                    alpha: rows[0].alpha,
                    n_ok: ok.len(),
                    n_total: rows.len(),
                    accuracy_mean,
                    accuracy_std,
                    macro_f1_mean,
                    macro_f1_std,
                    gain: None,
                }
            })
            .collect();
        out.sort_by(|a, b| {
            a.method
                .cmp(&b.method)
                .then(a.alpha.unwrap_or(-1.0).total_cmp(&b.alpha.unwrap_or(-1.0)))
        });
        let baseline = out
            .iter()
            .find(|a| a.method == Method::None && a.n_ok > 0)
            .map(|a| a.accuracy_mean);
        for a in &mut out {
            a.gain = match baseline {
                Some(_) if a.method == Method::None => Some(0.0),
                Some(b) if a.n_ok > 0 => Some(a.accuracy_mean - b),
                _ => None,
            };
        }
        out
    }

    pub fn baseline(&self) -> Option<Aggregate> {
        self.aggregates().into_iter().find(|a| a.method == Method::None && a.n_ok > 0)
    }

    /// The softEDA aggregate with the best mean accuracy.
    pub fn best_softeda(&self) -> Option<Aggregate> {
        let aggs = self.aggregates();
        let cells: Vec<(f64, f64)> = aggs
            .iter()
            .filter(|a| a.method == Method::SoftEda && a.n_ok > 0)
            .map(|a| (a.alpha.expect("softeda rows carry alpha"), a.accuracy_mean))
            .collect();
        let (alpha, _) = best_alpha(&cells)?;
        aggs.into_iter().find(|a| a.method == Method::SoftEda && a.alpha == Some(alpha))
    }

    pub fn emit(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Markdown => self.to_markdown(),
        }
    }

    /// Per-seed rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,alpha,seed,status,accuracy,macro_f1,test_loss,best_epoch,epochs_run,n_train,vocab_size,test_digest\n",
        );
        for r in &self.rows {
            let head = format!("{},{},{}", r.method, format_alpha(r.alpha), r.seed);
            match &r.outcome {
                RunOutcome::Ok(m) => writeln!(
                    out,
                    "{head},ok,{:.6},{:.6},{:.6},{},{},{},{},{}",
                    m.accuracy, m.macro_f1, m.test_loss, m.best_epoch, m.epochs_run, m.n_train, m.vocab_size, m.test_digest
                ),
                RunOutcome::Failed(e) => writeln!(out, "{head},{},,,,,,,,", csv_field(&format!("error: {e}"))),
            }
            .unwrap();
        }
        out
    }

    /// Aggregate rows plus a `softeda-best` row.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "method,alpha,runs_ok,runs_total,accuracy_mean,accuracy_std,macro_f1_mean,macro_f1_std,gain_pp\n",
        );
        let row = |out: &mut String, name: &str, a: &Aggregate| {
            let gain = a.gain.map(|g| format!("{g:.6}")).unwrap_or_else(|| "na".into());
            writeln!(
                out,
                "{name},{},{},{},{:.6},{:.6},{:.6},{:.6},{gain}",
                format_alpha(a.alpha),
                a.n_ok,
                a.n_total,
                a.accuracy_mean,
                a.accuracy_std,
                a.macro_f1_mean,
                a.macro_f1_std
            )
            .unwrap();
        };
        for a in self.aggregates() {
            row(&mut out, a.method.as_str(), &a);
        }
        if let Some(best) = self.best_softeda() {
            row(&mut out, "softeda-best", &best);
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let aggs = self.aggregates();
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let mut out = String::new();
        writeln!(out, "# Augmentation comparison: {}\n", self.dataset).unwrap();
        writeln!(
            out,
            "Accuracy (%) and gain (%p). Values are means over {} seed(s) ({}); Std is the sample standard deviation.",
            self.seeds.len(),
            seeds.join(", ")
        )
        .unwrap();
        if !self.note.is_empty() {
            writeln!(out, "{}", self.note).unwrap();
        }
        let best = self.best_softeda();
        if let Some(b) = &best {
            writeln!(
                out,
                "For softEDA the best smoothing value is reported (alpha = {}).",
                format_alpha(b.alpha)
            )
            .unwrap();
        }
        let failures = self.rows.iter().filter(|r| matches!(r.outcome, RunOutcome::Failed(_))).count();
        if failures > 0 {
            writeln!(out, "\n**{failures} run(s) failed**; see results.csv.").unwrap();
        }

        // headline table
        let baseline = aggs.iter().find(|a| a.method == Method::None && a.n_ok > 0);
        let mut lines: Vec<(String, String)> = Vec::new();
        if let Some(b) = baseline {
            lines.push(("CNN w/o Aug".into(), format!("{:.2}", b.accuracy_mean)));
        }
        let mut method_rows: Vec<&Aggregate> = aggs
            .iter()
            .filter(|a| matches!(a.method, Method::Eda | Method::Aeda) && a.n_ok > 0)
            .collect();
        if let Some(b) = &best {
            method_rows.push(b);
        }
        let cell = |a: &Aggregate| match a.gain {
            Some(g) => format_gain(g),
            None => format!("{:.2}", a.accuracy_mean),
        };
        let top = method_rows.iter().map(|a| cell(a)).max_by(|x, y| {
            x.parse::<f64>().unwrap_or(f64::NEG_INFINITY).total_cmp(&y.parse::<f64>().unwrap_or(f64::NEG_INFINITY))
        });
        for a in &method_rows {
            let c = cell(a);
            let c = if Some(&c) == top.as_ref() { format!("**{c}**") } else { c };
            lines.push((format!("w/ {}", a.method.label()), c));
        }
        writeln!(out, "\n| Model | {} |", self.dataset).unwrap();
        writeln!(out, "|:--|--:|").unwrap();
        for (name, value) in &lines {
            writeln!(out, "| {name} | {value} |").unwrap();
        }

        // full table
        writeln!(out, "\n## Full results\n").unwrap();
        writeln!(out, "| Model | Accuracy (%) | Std | Macro-F1 | Gain (%p) | Runs |").unwrap();
        writeln!(out, "|:--|--:|--:|--:|--:|--:|").unwrap();
        let top_acc = aggs
            .iter()
            .filter(|a| a.n_ok > 0)
            .map(|a| format!("{:.2}", a.accuracy_mean))
            .max_by(|x, y| x.parse::<f64>().unwrap().total_cmp(&y.parse::<f64>().unwrap()));
        for a in &aggs {
            let name = match (a.method, a.alpha) {
                (Method::None, _) => "CNN w/o Augmentation".to_string(),
                (m, Some(alpha)) => format!("w/ {} alpha={alpha}", m.label()),
                (m, None) => format!("w/ {}", m.label()),
            };
            if a.n_ok == 0 {
                writeln!(out, "| {name} | error | | | | 0/{} |", a.n_total).unwrap();
                continue;
            }
            let acc = format!("{:.2}", a.accuracy_mean);
            let acc = if Some(&acc) == top_acc.as_ref() { format!("**{acc}**") } else { acc };
            let gain = a.gain.map(format_gain).unwrap_or_else(|| "n/a".into());
            let f1 = format!("{:.4}", a.macro_f1_mean);
            writeln!(
                out,
                "| {name} | {acc} | {:.2} | {} | {gain} | {}/{} |",
                a.accuracy_std,
                f1.trim_start_matches('0'),
                a.n_ok,
                a.n_total
            )
            .unwrap();
        }
        out
    }
}
