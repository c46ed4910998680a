use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::AttackKind;
use crate::codec::{format_f64, to_json_fixed};
use crate::error::{Error, Result};
use crate::experiment::{AuditReport, ModelUtility};

/// Attack hidden-layer activations for every evaluated target node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub attack: AttackKind,
    pub rows: Vec<EmbeddingRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRow {
    pub member: bool,
    /// Index within the member (target train) or non-member (target test)
    /// partition.
    pub node: usize,
    pub score: f64,
    pub values: Vec<f64>,
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| Error::invalid(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn utility_row(model: &str, u: &ModelUtility) -> Vec<String> {
    vec![
        model.to_string(),
        u.arch.to_string(),
        format_f64(u.train_zero_hop),
        format_f64(u.train_two_hop),
        format_f64(u.test_zero_hop),
        format_f64(u.test_two_hop),
    ]
}

/// Writes `report.json`, `tables/*.csv` and (if any tables are given)
/// `embeddings.csv` under `out_dir`. Returns the report path.
pub fn emit_report(
    report: &AuditReport,
    embeddings: &[EmbeddingTable],
    out_dir: impl AsRef<Path>,
) -> Result<PathBuf> {
    let out_dir = out_dir.as_ref();
    let tables = out_dir.join("tables");
    fs::create_dir_all(&tables).map_err(|e| Error::io(&tables, e))?;

    let report_path = out_dir.join("report.json");
    fs::write(&report_path, to_json_fixed(report)?).map_err(|e| Error::io(&report_path, e))?;

    let mut utility = vec![
        utility_row("target", &report.utility.target),
        utility_row("shadow", &report.utility.shadow),
    ];
    if let Some(b) = &report.utility.baseline_mlp {
        utility.push(utility_row("baseline_mlp", b));
    }
    write_csv(
        &tables.join("utility.csv"),
        &strings(&[
            "model",
            "arch",
            "train_zero_hop",
            "train_two_hop",
            "test_zero_hop",
            "test_two_hop",
        ]),
        &utility,
    )?;

    let attack_rows: Vec<Vec<String>> = report
        .attacks
        .iter()
        .chain(report.label_only.iter().flatten())
        .map(|a| {
            let c = a.confusion;
            let r = a.ratios;
            vec![
                a.kind.to_string(),
                a.encoding.to_string(),
                format_f64(a.accuracy),
                format_f64(a.auc),
                c.tp.to_string(),
                c.fp.to_string(),
                c.tn.to_string(),
                c.fn_.to_string(),
                format_f64(r.tp),
                format_f64(r.fp),
                format_f64(r.tn),
                format_f64(r.fn_),
            ]
        })
        .collect();
    write_csv(
        &tables.join("confusion.csv"),
        &strings(&[
            "attack", "encoding", "accuracy", "auc", "tp", "fp", "tn", "fn", "tp_ratio",
            "fp_ratio", "tn_ratio", "fn_ratio",
        ]),
        &attack_rows,
    )?;

    for t in &report.grouped {
        let rows: Vec<Vec<String>> = t
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.group.to_string(),
                    format_f64(r.lower),
                    format_f64(r.upper),
                    r.nodes.to_string(),
                    r.members.to_string(),
                    r.auc.map(format_f64).unwrap_or_default(),
                ]
            })
            .collect();
        write_csv(
            &tables.join(format!("grouped_{}_{}.csv", t.attack, t.grouping)),
            &strings(&["group", "lower", "upper", "nodes", "members", "auc"]),
            &rows,
        )?;
    }

    if !embeddings.is_empty() {
        let width = embeddings
            .iter()
            .flat_map(|t| t.rows.iter().map(|r| r.values.len()))
            .max()
            .unwrap_or(0);
        let mut header = strings(&["attack", "member", "node", "score"]);
        header.extend((0..width).map(|i| format!("h{i}")));
        let rows: Vec<Vec<String>> = embeddings
            .iter()
            .flat_map(|t| {
                t.rows.iter().map(move |r| {
                    let mut row = vec![
                        t.attack.to_string(),
                        u8::from(r.member).to_string(),
                        r.node.to_string(),
                        format_f64(r.score),
                    ];
                    row.extend(r.values.iter().map(|&x| format_f64(x)));
                    row.resize(4 + width, String::new());
                    row
                })
            })
            .collect();
        write_csv(&out_dir.join("embeddings.csv"), &header, &rows)?;
    }
    Ok(report_path)
}
