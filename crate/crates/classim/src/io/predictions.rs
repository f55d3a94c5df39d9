//! Prediction JSONL ingest: one JSON record per line, shape fixed by mode.
//!
//! ```text
//! ovr       {"id":"s1","true_label":"cat","target":"dog","score":0.12}
//! multi     {"id":"s1","true_label":"cat","scores":{"cat":0.7,"dog":0.3}}
//! pairwise  {"id":"s1","true_label":"cat","pair":["cat","dog"],"score":0.12}
//! ```
//!
//! Records are validated against the evaluation set they claim to describe:
//! ids must exist, `true_label` must agree with the set's annotation, and
//! after reading, coverage is checked — every score the counting stage will
//! ask for must be present. Pairwise `pair` arrays must be in canonical
//! (sorted) label order since the score reads as confidence for the second
//! class.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::{format_err, numbered_lines, read_file};
use crate::error::{Error, Result};
use crate::predictions::{PredictionMode, PredictionTable};
use crate::types::LabeledFeatureSet;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OvrRecord {
    id: String,
    true_label: String,
    target: String,
    score: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiRecord {
    id: String,
    true_label: String,
    scores: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairRecord {
    id: String,
    true_label: String,
    pair: [String; 2],
    score: f64,
}

/// Parse and fully validate a prediction file against `eval`.
pub fn read_predictions(
    path: &Path,
    mode: PredictionMode,
    eval: &LabeledFeatureSet,
) -> Result<PredictionTable> {
    if eval.is_empty() {
        return Err(Error::EmptySet("evaluation set"));
    }
    let classes = eval.classes();
    let class_of: BTreeMap<&str, usize> = eval
        .samples()
        .iter()
        .map(|s| (s.id.as_str(), s.class))
        .collect();
    let text = read_file(path)?;
    let mut table = match mode {
        PredictionMode::Ovr => PredictionTable::new_ovr(classes.clone()),
        PredictionMode::Multi => PredictionTable::new_multi(classes.clone()),
        PredictionMode::Pairwise => PredictionTable::new_pairwise(classes.clone()),
    };

    let mut saw_record = false;
    for (line_no, line) in numbered_lines(&text) {
        if line.trim().is_empty() {
            continue;
        }
        saw_record = true;
        let fail = |msg: String| format_err(path, line_no, msg);
        // check (id, true_label) against the evaluation set
        let check_identity = |id: &str, true_label: &str| -> Result<usize> {
            let &class = class_of
                .get(id)
                .ok_or_else(|| fail(format!("sample id `{id}` not in the evaluation set")))?;
            if classes.label(class) != true_label {
                return Err(fail(format!(
                    "true_label `{true_label}` disagrees with the evaluation set (`{}`)",
                    classes.label(class)
                )));
            }
            Ok(class)
        };
        match mode {
            PredictionMode::Ovr => {
                let rec: OvrRecord =
                    serde_json::from_str(line).map_err(|e| fail(e.to_string()))?;
                check_identity(&rec.id, &rec.true_label)?;
                let target = classes
                    .require(&rec.target)
                    .map_err(|e| fail(e.to_string()))?;
                table
                    .insert_ovr(&rec.id, target, rec.score)
                    .map_err(|e| fail(e.to_string()))?;
            }
            PredictionMode::Multi => {
                let rec: MultiRecord =
                    serde_json::from_str(line).map_err(|e| fail(e.to_string()))?;
                check_identity(&rec.id, &rec.true_label)?;
                let mut probs = Vec::with_capacity(classes.len());
                for label in classes.labels() {
                    let p = rec.scores.get(label).copied().ok_or_else(|| {
                        fail(format!("scores object is missing class `{label}`"))
                    })?;
                    probs.push(p);
                }
                if rec.scores.len() != classes.len() {
                    let stray = rec
                        .scores
                        .keys()
                        .find(|k| classes.index_of(k).is_none())
                        .expect("length mismatch implies an unknown key");
                    return Err(fail(format!("unknown class label `{stray}`")));
                }
                table
                    .insert_multi(&rec.id, probs)
                    .map_err(|e| fail(e.to_string()))?;
            }
            PredictionMode::Pairwise => {
                let rec: PairRecord =
                    serde_json::from_str(line).map_err(|e| fail(e.to_string()))?;
                check_identity(&rec.id, &rec.true_label)?;
                let first = classes
                    .require(&rec.pair[0])
                    .map_err(|e| fail(e.to_string()))?;
                let second = classes
                    .require(&rec.pair[1])
                    .map_err(|e| fail(e.to_string()))?;
                table
                    .insert_pairwise(&rec.id, (first, second), rec.score)
                    .map_err(|e| fail(e.to_string()))?;
            }
        }
    }
    if !saw_record {
        return Err(Error::File {
            path: path.display().to_string(),
            msg: "no prediction records".to_string(),
        });
    }
    check_coverage(&table, mode, eval)?;
    Ok(table)
}

/// Every score the counting stage will request must already be present.
fn check_coverage(
    table: &PredictionTable,
    mode: PredictionMode,
    eval: &LabeledFeatureSet,
) -> Result<()> {
    let classes = eval.classes();
    let missing = |sample: &str, target: &str| Error::MissingScore {
        sample: sample.to_string(),
        target: target.to_string(),
    };
    for sample in eval.samples() {
        match mode {
            PredictionMode::Ovr => {
                let row = table
                    .ovr_row(&sample.id)
                    .ok_or_else(|| Error::MissingPrediction(sample.id.clone()))?;
                for (target, slot) in row.iter().enumerate() {
                    if slot.is_none() {
                        return Err(missing(&sample.id, classes.label(target)));
                    }
                }
            }
            PredictionMode::Multi => {
                if table.multi_row(&sample.id).is_none() {
                    return Err(Error::MissingPrediction(sample.id.clone()));
                }
            }
            PredictionMode::Pairwise => {
                for other in 0..classes.len() {
                    if other == sample.class {
                        continue;
                    }
                    let pair = (sample.class.min(other), sample.class.max(other));
                    if table.pairwise_score(&sample.id, pair).is_none() {
                        return Err(missing(&sample.id, classes.label(other)));
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ClassSet, Sample, Split};

    fn eval_set() -> LabeledFeatureSet {
        let classes = ClassSet::new(["cat", "dog"]).unwrap();
        let samples = vec![
            Sample {
                id: "s1".into(),
                class: 0,
                features: vec![0.0],
            },
            Sample {
                id: "s2".into(),
                class: 1,
                features: vec![1.0],
            },
        ];
        LabeledFeatureSet::new(classes, Split::Validation, 1, samples).unwrap()
    }

    fn ingest(mode: PredictionMode, content: &str) -> Result<PredictionTable> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("preds.jsonl");
        std::fs::write(&path, content).unwrap();
        read_predictions(&path, mode, &eval_set())
    }

    #[test]
    fn full_ovr_coverage_is_accepted() {
        let mut content = String::new();
        for (id, label) in [("s1", "cat"), ("s2", "dog")] {
            for target in ["cat", "dog"] {
                content.push_str(&format!(
                    "{{\"id\":\"{id}\",\"true_label\":\"{label}\",\"target\":\"{target}\",\"score\":0.5}}\n"
                ));
            }
        }
        let table = ingest(PredictionMode::Ovr, &content).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.ovr_row("s1").unwrap()[1], Some(0.5));
    }

    #[test]
    fn incomplete_ovr_coverage_is_rejected() {
        let content = concat!(
            "{\"id\":\"s1\",\"true_label\":\"cat\",\"target\":\"cat\",\"score\":0.9}\n",
            "{\"id\":\"s1\",\"true_label\":\"cat\",\"target\":\"dog\",\"score\":0.1}\n",
            "{\"id\":\"s2\",\"true_label\":\"dog\",\"target\":\"dog\",\"score\":0.8}\n",
        );
        let err = ingest(PredictionMode::Ovr, content).unwrap_err();
        assert!(matches!(err, Error::MissingScore { .. }), "{err}");
    }

    #[test]
    fn multi_records_validate_keys_and_sum() {
        let ok = concat!(
            "{\"id\":\"s1\",\"true_label\":\"cat\",\"scores\":{\"cat\":0.7,\"dog\":0.3}}\n",
            "{\"id\":\"s2\",\"true_label\":\"dog\",\"scores\":{\"cat\":1.0,\"dog\":0.0}}\n",
        );
        let table = ingest(PredictionMode::Multi, ok).unwrap();
        assert_eq!(table.multi_row("s2").unwrap(), &[1.0, 0.0]);

        let bad_sum =
            "{\"id\":\"s1\",\"true_label\":\"cat\",\"scores\":{\"cat\":0.7,\"dog\":0.2}}\n";
        let err = ingest(PredictionMode::Multi, bad_sum).unwrap_err().to_string();
        assert!(err.contains("sums to"), "{err}");

        let missing_key = "{\"id\":\"s1\",\"true_label\":\"cat\",\"scores\":{\"cat\":1.0}}\n";
        let err = ingest(PredictionMode::Multi, missing_key).unwrap_err().to_string();
        assert!(err.contains("missing class `dog`"), "{err}");

        let stray_key = "{\"id\":\"s1\",\"true_label\":\"cat\",\"scores\":{\"cat\":0.5,\"dog\":0.25,\"fox\":0.25}}\n";
        let err = ingest(PredictionMode::Multi, stray_key).unwrap_err().to_string();
        assert!(err.contains("unknown class label `fox`"), "{err}");
    }

    #[test]
    fn pairwise_pairs_must_be_canonical_and_covering() {
        let ok = concat!(
            "{\"id\":\"s1\",\"true_label\":\"cat\",\"pair\":[\"cat\",\"dog\"],\"score\":0.2}\n",
            "{\"id\":\"s2\",\"true_label\":\"dog\",\"pair\":[\"cat\",\"dog\"],\"score\":0.9}\n",
        );
        let table = ingest(PredictionMode::Pairwise, ok).unwrap();
        assert_eq!(table.pairwise_score("s1", (0, 1)), Some(0.2));

        let swapped =
            "{\"id\":\"s1\",\"true_label\":\"cat\",\"pair\":[\"dog\",\"cat\"],\"score\":0.2}\n";
        let err = ingest(PredictionMode::Pairwise, swapped).unwrap_err().to_string();
        assert!(err.contains("canonical"), "{err}");
    }

    #[test]
    fn identity_and_shape_errors_carry_line_numbers() {
        let cases: &[(&str, &str)] = &[
            ("{\"id\":\"sX\",\"true_label\":\"cat\",\"target\":\"cat\",\"score\":0.5}", "not in the evaluation set"),
            ("{\"id\":\"s1\",\"true_label\":\"dog\",\"target\":\"cat\",\"score\":0.5}", "disagrees"),
            ("{\"id\":\"s1\",\"true_label\":\"cat\",\"target\":\"fox\",\"score\":0.5}", "unknown class label"),
            ("{\"id\":\"s1\",\"true_label\":\"cat\",\"target\":\"cat\",\"score\":1.5}", "outside [0, 1]"),
            ("{\"id\":\"s1\",\"true_label\":\"cat\",\"target\":\"cat\",\"score\":0.5,\"extra\":1}", "unknown field"),
            ("not json", "expected"),
        ];
        for (line, needle) in cases {
            let err = ingest(PredictionMode::Ovr, &format!("{line}\n"))
                .unwrap_err()
                .to_string();
            assert!(err.contains(":1:"), "`{err}` missing line number");
            assert!(err.contains(needle), "`{err}` missing `{needle}`");
        }
    }

    #[test]
    fn duplicates_and_empty_files_are_rejected() {
        let dup = concat!(
            "{\"id\":\"s1\",\"true_label\":\"cat\",\"target\":\"cat\",\"score\":0.5}\n",
            "{\"id\":\"s1\",\"true_label\":\"cat\",\"target\":\"cat\",\"score\":0.6}\n",
        );
        let err = ingest(PredictionMode::Ovr, dup).unwrap_err().to_string();
        assert!(err.contains(":2:") && err.contains("duplicate"), "{err}");

        let err = ingest(PredictionMode::Ovr, "\n\n").unwrap_err().to_string();
        assert!(err.contains("no prediction records"), "{err}");
    }

    #[test]
    fn score_of_exactly_one_is_accepted() {
        let mut content = String::new();
        for (id, label) in [("s1", "cat"), ("s2", "dog")] {
            for target in ["cat", "dog"] {
                content.push_str(&format!(
                    "{{\"id\":\"{id}\",\"true_label\":\"{label}\",\"target\":\"{target}\",\"score\":1.0}}\n"
                ));
            }
        }
        assert!(ingest(PredictionMode::Ovr, &content).is_ok());
    }
}
