//! Multi-label evaluation of generic frame predictions against gold labels.
//!
//! Per-label precision, recall and F1 come from pooled confusion counts. Averages follow
//! the usual multi-label conventions: micro pools counts, macro is the plain mean over
//! scored labels, weighted weights by gold support, samples averages per-article set
//! scores. A 0/0 ratio is scored 0 and listed in `zero_division`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::llm_gateway::GenericFrameAssignment;
use crate::taxonomy::{GenericInventory, NONE_LABEL};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("nothing to evaluate: no labeled pairs")]
    Empty,
    #[error("article {article_id}: label {label:?} is not in the generic frame inventory")]
    UnknownLabel { article_id: String, label: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub article_id: String,
    pub gold: BTreeSet<String>,
    pub predicted: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Score the "None" label as well (it is left out by default).
    pub include_none: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Average {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub labels: Vec<LabelMetrics>,
    pub micro: Average,
    #[serde(rename = "macro")]
    pub macro_avg: Average,
    pub weighted: Average,
    pub samples: Average,
    pub non_zero_overlap_rate: f64,
    pub pairs: usize,
    /// Cells where a 0/0 ratio was scored as 0, e.g. `"precision:Morality"`.
    pub zero_division: Vec<String>,
}

fn ratio(num: usize, den: usize, cell: impl FnOnce() -> String, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(cell());
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Plain mean; exact when every value is identical.
fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if values.iter().all(|v| v.to_bits() == values[0].to_bits()) {
        return values[0];
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Labels that are scored, in inventory order.
pub fn scored_labels(inventory: &GenericInventory, options: EvalOptions) -> Vec<String> {
    inventory.labels().filter(|l| options.include_none || *l != NONE_LABEL).map(str::to_string).collect()
}

pub fn evaluate(pairs: &[LabeledPair], inventory: &GenericInventory, options: EvalOptions) -> Result<MetricReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    for p in pairs {
        for l in p.gold.iter().chain(&p.predicted) {
            if !inventory.contains(l) {
                return Err(EvalError::UnknownLabel { article_id: p.article_id.clone(), label: l.clone() });
            }
        }
    }
    let labels = scored_labels(inventory, options);
    let scored: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
    let keep = |s: &BTreeSet<String>| -> BTreeSet<String> { s.iter().filter(|l| scored.contains(l.as_str())).cloned().collect() };
    // Pairs sorted by id so float sums do not depend on input order.
    let mut sets: Vec<(&str, BTreeSet<String>, BTreeSet<String>)> =
        pairs.iter().map(|p| (p.article_id.as_str(), keep(&p.gold), keep(&p.predicted))).collect();
    sets.sort();

    let mut flags = Vec::new();
    let mut per_label = Vec::new();
    for label in &labels {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (_, g, p) in &sets {
            match (g.contains(label), p.contains(label)) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        let precision = ratio(tp, tp + fp, || format!("precision:{label}"), &mut flags);
        let recall = ratio(tp, tp + fn_, || format!("recall:{label}"), &mut flags);
        per_label.push(LabelMetrics {
            label: label.clone(),
            precision,
            recall,
            f1: harmonic(precision, recall),
            support: tp + fn_,
            tp,
            fp,
            fn_,
        });
    }

    let (tp, fp, fn_) = per_label.iter().fold((0, 0, 0), |a, m| (a.0 + m.tp, a.1 + m.fp, a.2 + m.fn_));
    let mp = ratio(tp, tp + fp, || "precision:micro".into(), &mut flags);
    let mr = ratio(tp, tp + fn_, || "recall:micro".into(), &mut flags);
    let micro = Average { precision: mp, recall: mr, f1: harmonic(mp, mr) };

    let col = |f: fn(&LabelMetrics) -> f64| per_label.iter().map(f).collect::<Vec<f64>>();
    let macro_avg = Average {
        precision: mean(&col(|m| m.precision)),
        recall: mean(&col(|m| m.recall)),
        f1: mean(&col(|m| m.f1)),
    };

    let total_support: usize = per_label.iter().map(|m| m.support).sum();
    let weighted = if total_support == 0 {
        flags.push("weighted:support".into());
        Average { precision: 0.0, recall: 0.0, f1: 0.0 }
    } else {
        let w = |f: fn(&LabelMetrics) -> f64| {
            per_label.iter().map(|m| m.support as f64 * f(m)).sum::<f64>() / total_support as f64
        };
        Average { precision: w(|m| m.precision), recall: w(|m| m.recall), f1: w(|m| m.f1) }
    };

    let (mut sp, mut sr, mut sf) = (Vec::new(), Vec::new(), Vec::new());
    let (mut overlap, mut with_gold) = (0, 0);
    for (id, g, p) in &sets {
        let inter = g.intersection(p).count();
        let pp = ratio(inter, p.len(), || format!("samples_precision:{id}"), &mut flags);
        let rr = ratio(inter, g.len(), || format!("samples_recall:{id}"), &mut flags);
        sp.push(pp);
        sr.push(rr);
        sf.push(harmonic(pp, rr));
        if !g.is_empty() {
            with_gold += 1;
            overlap += usize::from(inter > 0);
        }
    }
    let samples = Average { precision: mean(&sp), recall: mean(&sr), f1: mean(&sf) };
    let non_zero_overlap_rate = ratio(overlap, with_gold, || "overlap:no pair has gold labels".into(), &mut flags);

    Ok(MetricReport {
        labels: per_label,
        micro,
        macro_avg,
        weighted,
        samples,
        non_zero_overlap_rate,
        pairs: pairs.len(),
        zero_division: flags,
    })
}

/// Table rows as `label  precision  recall  f1`, labels shown by their short alias and
/// sorted, followed by the four averages.
pub fn render_report_table(report: &MetricReport, inventory: &GenericInventory) -> String {
    let short = |label: &str| -> String {
        inventory
            .frames
            .iter()
            .find(|f| f.label == label)
            .and_then(|f| f.aliases.first())
            .cloned()
            .unwrap_or_else(|| label.to_string())
    };
    let mut rows: Vec<(String, f64, f64, f64)> =
        report.labels.iter().map(|m| (short(&m.label), m.precision, m.recall, m.f1)).collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let avgs = [
        ("micro avg", report.micro),
        ("macro avg", report.macro_avg),
        ("weighted avg", report.weighted),
        ("samples avg", report.samples),
    ];
    let width = rows.iter().map(|r| r.0.chars().count()).chain(avgs.iter().map(|a| a.0.len())).max().unwrap_or(5).max(5);
    let line = |name: &str, p: f64, r: f64, f: f64| format!("{name:<width$}  {p:>9.2}  {r:>6.2}  {f:>8.2}\n");
    let rule = format!("{}\n", "-".repeat(width + 31));
    let mut out = format!("{:<width$}  {:>9}  {:>6}  {:>8}\n", "Label", "Precision", "Recall", "F1-score");
    out.push_str(&rule);
    for (name, p, r, f) in &rows {
        out.push_str(&line(name, *p, *r, *f));
    }
    out.push_str(&rule);
    for (name, a) in avgs {
        out.push_str(&line(name, a.precision, a.recall, a.f1));
    }
    out.push_str(&format!("non-zero overlap rate: {:.3} over {} pairs\n", report.non_zero_overlap_rate, report.pairs));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoldFormat {
    #[default]
    /// One `{"article_id": ..., "labels": [...]}` object per line.
    Jsonl,
    /// Media Frames Corpus annotation JSON: an object keyed by article id whose records
    /// carry `annotations.framing.<annotator>: [{"code": 5.0, ...}]`.
    Mfc,
}

impl std::str::FromStr for GoldFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(GoldFormat::Jsonl),
            "mfc" | "json" => Ok(GoldFormat::Mfc),
            other => Err(format!("unknown gold format {other:?} (expected jsonl or mfc)")),
        }
    }
}

#[derive(Deserialize)]
struct GoldLine {
    article_id: String,
    #[serde(default)]
    labels: Vec<String>,
}

/// Article id -> gold label set. Names and codes map onto canonical labels; anything that
/// does not map is an error naming it.
pub fn load_gold(path: &Path, format: GoldFormat, inventory: &GenericInventory) -> Result<BTreeMap<String, BTreeSet<String>>, EvalError> {
    let p = path.display().to_string();
    let fail = |message: String| EvalError::Format { path: p.clone(), message };
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    match format {
        GoldFormat::Jsonl => {
            let lines = crate::jsonl::read_lines(path).map_err(|source| EvalError::Io { path: p.clone(), source })?;
            for (lineno, text) in lines.lines {
                let g: GoldLine = serde_json::from_str(&text).map_err(|e| fail(format!("line {lineno}: {e}")))?;
                let set = out.entry(g.article_id.clone()).or_default();
                for l in g.labels {
                    let label = inventory
                        .resolve(&l)
                        .ok_or(EvalError::UnknownLabel { article_id: g.article_id.clone(), label: l.clone() })?;
                    set.insert(label.to_string());
                }
            }
        }
        GoldFormat::Mfc => {
            let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io { path: p.clone(), source })?;
            let root: Value = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
            let records = root.as_object().ok_or_else(|| fail("expected an object keyed by article id".into()))?;
            for (id, record) in records {
                let set = out.entry(id.clone()).or_default();
                for item in mfc_annotations(record) {
                    let label = match &item {
                        Value::Number(n) => n.as_f64().and_then(|c| inventory.resolve_code(c)),
                        Value::String(s) => {
                            inventory.resolve(s).or_else(|| s.parse::<f64>().ok().and_then(|c| inventory.resolve_code(c)))
                        }
                        _ => None,
                    };
                    let label = label
                        .ok_or_else(|| EvalError::UnknownLabel { article_id: id.clone(), label: item.to_string() })?;
                    set.insert(label.to_string());
                }
            }
        }
    }
    Ok(out)
}

/// Frame codes or names annotated on one MFC record, across all annotators.
fn mfc_annotations(record: &Value) -> Vec<Value> {
    let framing = record.pointer("/annotations/framing").or_else(|| record.get("annotations"));
    let mut out = Vec::new();
    let mut take = |spans: &Value| {
        for s in spans.as_array().into_iter().flatten() {
            match s {
                Value::Object(o) => out.extend(o.get("code").cloned()),
                other => out.push(other.clone()),
            }
        }
    };
    match framing {
        Some(Value::Object(by_annotator)) => by_annotator.values().for_each(&mut take),
        Some(list @ Value::Array(_)) => take(list),
        _ => {}
    }
    out
}

/// Pairs every gold article with its prediction; articles never classified predict nothing.
pub fn pair_predictions(
    gold: &BTreeMap<String, BTreeSet<String>>,
    predictions: &[GenericFrameAssignment],
) -> (Vec<LabeledPair>, usize) {
    let by_id: BTreeMap<&str, &GenericFrameAssignment> = predictions.iter().map(|a| (a.article_id.as_str(), a)).collect();
    let mut missing = 0;
    let pairs = gold
        .iter()
        .map(|(id, g)| {
            let predicted = match by_id.get(id.as_str()) {
                Some(a) => a.frames.clone(),
                None => {
                    missing += 1;
                    BTreeSet::new()
                }
            };
            LabeledPair { article_id: id.clone(), gold: g.clone(), predicted }
        })
        .collect();
    (pairs, missing)
}
