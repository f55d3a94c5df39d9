//! Feature CSV: `id,label,f0..f{D-1}[,split]`.
//!
//! The split column is optional on ingest — without it the rows are divided
//! by the seeded stratified 0.64/0.16/0.20 scheme. Export always writes the
//! column so that a written file re-ingests to the identical dataset.

use std::collections::BTreeSet;
use std::path::Path;

use super::{fmt_float, format_err, numbered_lines, read_file, write_file};
use crate::error::{Error, Result};
use crate::types::{
    stratified_split, validate_label, validate_sample_id, ClassSet, LabeledFeatureSet, Sample,
    Split, SplitDataset,
};

/// Parse a feature CSV. `seed` drives the default split when the file has no
/// `split` column and is ignored otherwise.
pub fn read_features(path: &Path, seed: u64) -> Result<SplitDataset> {
    let text = read_file(path)?;
    let mut lines = numbered_lines(&text);
    let (_, header) = lines.next().ok_or_else(|| Error::File {
        path: path.display().to_string(),
        msg: "empty file".to_string(),
    })?;
    let (dim, has_split) = parse_header(path, header)?;
    let columns = 2 + dim + usize::from(has_split);

    struct Row {
        line: usize,
        id: String,
        label: String,
        features: Vec<f64>,
        split: Option<Split>,
    }
    let mut rows: Vec<Row> = Vec::new();
    let mut ids = BTreeSet::new();
    let mut labels = BTreeSet::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(format_err(
                path,
                line_no,
                format!("expected {columns} fields, found {}", fields.len()),
            ));
        }
        let id = fields[0];
        validate_sample_id(id).map_err(|e| format_err(path, line_no, e.to_string()))?;
        if !ids.insert(id.to_string()) {
            return Err(format_err(path, line_no, format!("duplicate sample id `{id}`")));
        }
        let label = fields[1];
        validate_label(label).map_err(|e| format_err(path, line_no, e.to_string()))?;
        labels.insert(label.to_string());
        let mut features = Vec::with_capacity(dim);
        for (d, field) in fields[2..2 + dim].iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                format_err(path, line_no, format!("column f{d}: invalid number `{field}`"))
            })?;
            if !value.is_finite() {
                return Err(format_err(
                    path,
                    line_no,
                    format!("column f{d}: non-finite feature value"),
                ));
            }
            features.push(value);
        }
        let split = if has_split {
            let tag = fields[columns - 1];
            Some(Split::from_tag(tag).ok_or_else(|| {
                format_err(path, line_no, format!("unknown split tag `{tag}`"))
            })?)
        } else {
            None
        };
        rows.push(Row {
            line: line_no,
            id: id.to_string(),
            label: label.to_string(),
            features,
            split,
        });
    }
    if rows.is_empty() {
        return Err(Error::File {
            path: path.display().to_string(),
            msg: "no data rows".to_string(),
        });
    }

    let classes = ClassSet::new(labels)?;
    let mut resolved = Vec::with_capacity(rows.len());
    for row in rows {
        let class = classes
            .require(&row.label)
            .map_err(|e| format_err(path, row.line, e.to_string()))?;
        resolved.push((
            Sample {
                id: row.id,
                class,
                features: row.features,
            },
            row.split,
        ));
    }
    if has_split {
        let mut parts: [Vec<Sample>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for (sample, split) in resolved {
            let slot = match split.expect("split column is present") {
                Split::Train => 0,
                Split::Validation => 1,
                Split::Test => 2,
            };
            parts[slot].push(sample);
        }
        let [train, validation, test] = parts;
        SplitDataset::new(
            LabeledFeatureSet::new(classes.clone(), Split::Train, dim, train)?,
            LabeledFeatureSet::new(classes.clone(), Split::Validation, dim, validation)?,
            LabeledFeatureSet::new(classes, Split::Test, dim, test)?,
        )
    } else {
        let samples = resolved.into_iter().map(|(s, _)| s).collect();
        stratified_split(classes, dim, samples, seed)
    }
}

fn parse_header(path: &Path, header: &str) -> Result<(usize, bool)> {
    let fields: Vec<&str> = header.split(',').collect();
    let bad = |msg: String| format_err(path, 1, msg);
    if fields.first() != Some(&"id") || fields.get(1) != Some(&"label") {
        return Err(bad("header must start with `id,label`".to_string()));
    }
    let mut rest = &fields[2..];
    let has_split = rest.last() == Some(&"split");
    if has_split {
        rest = &rest[..rest.len() - 1];
    }
    if rest.is_empty() {
        return Err(bad("header declares no feature columns".to_string()));
    }
    for (d, field) in rest.iter().enumerate() {
        let expected = format!("f{d}");
        if *field != expected {
            return Err(bad(format!(
                "feature column {} must be named `{expected}`, found `{field}`",
                d + 3
            )));
        }
    }
    Ok((rest.len(), has_split))
}

/// Write all three splits as one CSV with an explicit `split` column, in
/// train, validation, test order.
pub fn write_features(dataset: &SplitDataset, path: &Path) -> Result<()> {
    let dim = dataset.dim();
    let mut out = String::from("id,label");
    for d in 0..dim {
        out.push_str(&format!(",f{d}"));
    }
    out.push_str(",split\n");
    for part in [&dataset.train, &dataset.validation, &dataset.test] {
        let tag = part.split().as_str();
        for sample in part.samples() {
            out.push_str(&sample.id);
            out.push(',');
            out.push_str(part.classes().label(sample.class));
            for v in &sample.features {
                out.push(',');
                out.push_str(&fmt_float(*v));
            }
            out.push(',');
            out.push_str(tag);
            out.push('\n');
        }
    }
    write_file(path, &out)
}
