use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Graph, GraphDataset};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Serialize, Deserialize)]
struct Meta {
    class_count: usize,
}

fn read_records(path: &Path) -> Result<Vec<(usize, csv::StringRecord)>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        out.push((line, rec));
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            file: path.display().to_string(),
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads `edges.csv`, `features.csv`, `labels.csv` and optional `meta.json`.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<GraphDataset> {
    let dir = dir.as_ref();

    let feat_path = dir.join("features.csv");
    let mut rows = Vec::new();
    for (line, rec) in read_records(&feat_path)? {
        let row: Vec<f64> = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_error(&feat_path, line, format!("bad real `{f}`")))
            })
            .collect::<Result<_>>()?;
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!(
                "{}:{line}: feature value",
                feat_path.display()
            )));
        }
        rows.push(row);
    }
    let features = Matrix::from_rows(&rows)?;
    let n = features.rows();

    let label_path = dir.join("labels.csv");
    let mut labels = Vec::new();
    for (line, rec) in read_records(&label_path)? {
        let field = rec.get(0).unwrap_or_default();
        let y = field
            .parse::<usize>()
            .map_err(|_| parse_error(&label_path, line, format!("bad label `{field}`")))?;
        labels.push(y);
    }
    if labels.len() != n {
        return Err(Error::RowCountMismatch(format!(
            "labels.csv has {} rows but features.csv has {n}",
            labels.len()
        )));
    }

    let edge_path = dir.join("edges.csv");
    let mut edges = Vec::new();
    for (line, rec) in read_records(&edge_path)? {
        if rec.len() != 2 {
            return Err(parse_error(&edge_path, line, "expected `u,v`"));
        }
        let mut ends = [0usize; 2];
        for (slot, field) in ends.iter_mut().zip(rec.iter()) {
            *slot = field.parse::<usize>().map_err(|_| {
                parse_error(&edge_path, line, format!("non-integer endpoint `{field}`"))
            })?;
            if *slot >= n {
                return Err(parse_error(
                    &edge_path,
                    line,
                    format!("endpoint {} out of range for {n} nodes", *slot),
                ));
            }
        }
        if ends[0] == ends[1] {
            return Err(parse_error(&edge_path, line, "self-loop"));
        }
        edges.push((ends[0], ends[1]));
    }
    let graph = Graph::from_edges(n, &edges)?;

    let meta_path = dir.join("meta.json");
    let class_count = if meta_path.is_file() {
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        serde_json::from_str::<Meta>(&text)?.class_count
    } else {
        labels.iter().max().map_or(0, |&m| m + 1)
    };

    GraphDataset::new(graph, features, labels, class_count)
}

/// Writes the dataset in the format read by [`load_dataset`].
pub fn write_dataset(ds: &GraphDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut edges = String::new();
    for (u, v) in ds.graph.edges() {
        writeln!(edges, "{u},{v}").unwrap();
    }
    let mut feats = String::new();
    for r in 0..ds.features.rows() {
        let row = ds.features.row(r);
        for (k, x) in row.iter().enumerate() {
            if k > 0 {
                feats.push(',');
            }
            write!(feats, "{x}").unwrap();
        }
        feats.push('\n');
    }
    let mut labels = String::new();
    for y in &ds.labels {
        writeln!(labels, "{y}").unwrap();
    }
    let meta = serde_json::to_string(&Meta {
        class_count: ds.class_count,
    })?;

    for (name, body) in [
        ("edges.csv", edges),
        ("features.csv", feats),
        ("labels.csv", labels),
        ("meta.json", meta + "\n"),
    ] {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, edges: &str, feats: &str, labels: &str) {
        fs::write(dir.join("edges.csv"), edges).unwrap();
        fs::write(dir.join("features.csv"), feats).unwrap();
        fs::write(dir.join("labels.csv"), labels).unwrap();
    }

    #[test]
    fn loads_path_graph() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "0,1\n1,2\n", "1,0\n0,1\n1,1\n", "0\n1\n0\n");
        let ds = load_dataset(tmp.path()).unwrap();
        assert_eq!(ds.node_count(), 3);
        assert_eq!(ds.class_count, 2);
        let deg: Vec<_> = (0..3).map(|v| ds.graph.degree(v)).collect();
        assert_eq!(deg, vec![1, 2, 1]);
    }

    #[test]
    fn collapses_reverse_duplicates() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "0,1\n1,0\n", "1\n2\n", "0\n1\n");
        let ds = load_dataset(tmp.path()).unwrap();
        assert_eq!(ds.graph.edge_count(), 1);
    }

    #[test]
    fn error_cases() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "0,1\n", "1\n2\n3\n", "0\n1\n");
        let err = load_dataset(tmp.path()).unwrap_err();
        assert!(err.to_string().contains("row count mismatch"), "{err}");

        write(tmp.path(), "0,x\n", "1\n2\n", "0\n1\n");
        assert!(load_dataset(tmp.path())
            .unwrap_err()
            .to_string()
            .contains("non-integer"));

        write(tmp.path(), "0,5\n", "1\n2\n", "0\n1\n");
        assert!(load_dataset(tmp.path())
            .unwrap_err()
            .to_string()
            .contains("out of range"));

        write(tmp.path(), "1,1\n", "1\n2\n", "0\n1\n");
        assert!(load_dataset(tmp.path()).is_err());

        write(tmp.path(), "0,1\n", "1\nNaN\n", "0\n1\n");
        assert!(matches!(load_dataset(tmp.path()), Err(Error::NonFinite(_))));

        write(tmp.path(), "0,1\n", "1\n2\n", "0\n1\n");
        fs::remove_file(tmp.path().join("labels.csv")).unwrap();
        assert!(matches!(
            load_dataset(tmp.path()),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn meta_overrides_class_count() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "", "1\n2\n", "0\n1\n");
        fs::write(tmp.path().join("meta.json"), r#"{"class_count": 5}"#).unwrap();
        assert_eq!(load_dataset(tmp.path()).unwrap().class_count, 5);
    }

    #[test]
    fn write_then_load_is_lossless() {
        let tmp = tempfile::tempdir().unwrap();
        let g = Graph::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        let x = Matrix::from_rows(&[[0.1, 1e-20], [-3.25, 1.0 / 3.0], [7.0, 0.0]]).unwrap();
        let ds = GraphDataset::new(g, x, vec![2, 0, 1], 4).unwrap();
        write_dataset(&ds, tmp.path()).unwrap();
        assert_eq!(load_dataset(tmp.path()).unwrap(), ds);
    }
}
