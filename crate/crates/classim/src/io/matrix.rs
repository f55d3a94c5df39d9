//! Labeled square matrices (similarity or distance) and their top-k tables.
//!
//! CSV layout, shared by both metrics:
//!
//! ```text
//! # classim-matrix format_version=1 distance=false
//! label,bay,beach,city
//! bay,1.0000000000000000e0,6.2600000000000000e-1,3.0100000000000001e-1
//! ...
//! ```
//!
//! The `distance` flag tells ranking consumers which way to sort (similarity
//! descends, distance ascends). Write → read → write is byte-identical: the
//! 17-significant-digit float format re-parses to the same bits.

use std::path::Path;

use super::{fmt_float, format_err, numbered_lines, read_file};
use crate::error::{Error, Result};
use crate::similarity::{format_ranked_entry, SimilarityMatrix};
use crate::types::ClassSet;

/// File format revision for matrices and top-k tables.
pub const TABLE_FORMAT_VERSION: u32 = 1;

/// A parsed square matrix over a class universe, not yet interpreted.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledMatrix {
    pub classes: ClassSet,
    /// Row-major `K×K` values.
    pub values: Vec<f64>,
    /// True when lower values mean more similar.
    pub distance: bool,
}

impl LabeledMatrix {
    /// Reinterpret as a similarity matrix, re-validating every invariant
    /// (range, unit diagonal, bit-exact symmetry).
    pub fn into_similarity(self) -> Result<SimilarityMatrix> {
        if self.distance {
            return Err(Error::InvalidParameter(
                "expected a similarity matrix, found distance=true".to_string(),
            ));
        }
        SimilarityMatrix::from_parts(self.classes, self.values)
    }
}

/// Render the matrix CSV (comment line, header, one row per class).
pub fn render_matrix_csv(classes: &ClassSet, values: &[f64], distance: bool) -> String {
    let k = classes.len();
    debug_assert_eq!(values.len(), k * k);
    let mut out = format!(
        "# classim-matrix format_version={TABLE_FORMAT_VERSION} distance={distance}\n"
    );
    out.push_str("label");
    for label in classes.labels() {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for (i, label) in classes.labels().iter().enumerate() {
        out.push_str(label);
        for j in 0..k {
            out.push(',');
            out.push_str(&fmt_float(values[i * k + j]));
        }
        out.push('\n');
    }
    out
}

/// Matrix as a JSON document (same fields as the CSV, nested rows).
pub fn render_matrix_json(classes: &ClassSet, values: &[f64], distance: bool) -> String {
    let k = classes.len();
    let rows: Vec<Vec<f64>> = (0..k).map(|i| values[i * k..(i + 1) * k].to_vec()).collect();
    let doc = serde_json::json!({
        "format_version": TABLE_FORMAT_VERSION,
        "kind": "classim-matrix",
        "distance": distance,
        "classes": classes.labels(),
        "values": rows,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("matrix document serializes");
    text.push('\n');
    text
}

/// Parse a matrix CSV written by [`render_matrix_csv`].
pub fn read_matrix_csv(path: &Path) -> Result<LabeledMatrix> {
    let text = read_file(path)?;
    let mut lines = numbered_lines(&text);
    let (_, comment) = lines.next().ok_or_else(|| Error::File {
        path: path.display().to_string(),
        msg: "empty file".to_string(),
    })?;
    let distance = parse_comment(path, comment)?;
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| format_err(path, 2, "missing header row"))?;
    let mut columns = header.split(',');
    if columns.next() != Some("label") {
        return Err(format_err(path, line_no, "header must start with `label`"));
    }
    let labels: Vec<&str> = columns.collect();
    if labels.is_empty() {
        return Err(format_err(path, line_no, "header names no classes"));
    }
    let classes = ClassSet::new(labels.iter().copied())?;
    if classes.labels().iter().map(String::as_str).ne(labels.iter().copied()) {
        return Err(format_err(
            path,
            line_no,
            "class labels not in canonical order",
        ));
    }
    let k = classes.len();
    let mut values = vec![0.0; k * k];
    let mut next_row = 0;
    for (line_no, line) in lines {
        if next_row == k {
            return Err(format_err(path, line_no, "more rows than classes"));
        }
        let mut fields = line.split(',');
        let row_label = fields.next().unwrap_or_default();
        if row_label != classes.label(next_row) {
            return Err(format_err(
                path,
                line_no,
                format!(
                    "row label `{row_label}` out of order, expected `{}`",
                    classes.label(next_row)
                ),
            ));
        }
        let mut col = 0;
        for field in fields {
            if col == k {
                return Err(format_err(path, line_no, "more values than classes"));
            }
            values[next_row * k + col] = field.parse().map_err(|_| {
                format_err(path, line_no, format!("invalid number `{field}`"))
            })?;
            col += 1;
        }
        if col != k {
            return Err(format_err(
                path,
                line_no,
                format!("expected {k} values, found {col}"),
            ));
        }
        next_row += 1;
    }
    if next_row != k {
        return Err(Error::File {
            path: path.display().to_string(),
            msg: format!("expected {k} matrix rows, found {next_row}"),
        });
    }
    Ok(LabeledMatrix {
        classes,
        values,
        distance,
    })
}

fn parse_comment(path: &Path, line: &str) -> Result<bool> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let fail = |msg: String| format_err(path, 1, msg);
    if fields.len() != 4 || fields[0] != "#" || fields[1] != "classim-matrix" {
        return Err(fail("expected `# classim-matrix format_version=.. distance=..`".into()));
    }
    let version = fields[2]
        .strip_prefix("format_version=")
        .ok_or_else(|| fail(format!("expected `format_version=..`, found `{}`", fields[2])))?;
    if version.parse::<u32>() != Ok(TABLE_FORMAT_VERSION) {
        return Err(fail(format!("unsupported format version `{version}`")));
    }
    match fields[3].strip_prefix("distance=") {
        Some("true") => Ok(true),
        Some("false") => Ok(false),
        _ => Err(fail(format!("expected `distance=true|false`, found `{}`", fields[3]))),
    }
}

/// A rendered ranking: the `k` nearest classes per class.
#[derive(Clone, Debug)]
pub struct TopK {
    pub k: usize,
    /// Mirrors the source matrix flag; distance rankings are ascending.
    pub distance: bool,
    /// Per class, its neighbors best-first.
    pub rows: Vec<(String, Vec<(String, f64)>)>,
}

/// Top-k CSV: one row per class, `class:score` entries at 3 decimals.
pub fn render_topk_csv(table: &TopK) -> String {
    let mut out = format!(
        "# classim-topk format_version={TABLE_FORMAT_VERSION} distance={} k={}\n",
        table.distance, table.k
    );
    out.push_str("class");
    for rank in 1..=table.k {
        out.push_str(&format!(",rank{rank}"));
    }
    out.push('\n');
    for (label, neighbors) in &table.rows {
        out.push_str(label);
        for (other, score) in neighbors {
            out.push(',');
            out.push_str(&format_ranked_entry(other, *score));
        }
        out.push('\n');
    }
    out
}

/// Top-k JSON: the same rendered `class:score` strings, row per class.
pub fn render_topk_json(table: &TopK) -> String {
    let rows: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|(label, neighbors)| {
            let rendered: Vec<String> = neighbors
                .iter()
                .map(|(other, score)| format_ranked_entry(other, *score))
                .collect();
            serde_json::json!({"class": label, "neighbors": rendered})
        })
        .collect();
    let doc = serde_json::json!({
        "format_version": TABLE_FORMAT_VERSION,
        "kind": "classim-topk",
        "distance": table.distance,
        "k": table.k,
        "rows": rows,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("top-k document serializes");
    text.push('\n');
    text
}
