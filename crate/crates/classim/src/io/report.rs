//! Report renderers: validation tables (oracle runs) and routing accuracy
//! reports (two-level evaluation).
//!
//! Each report has a machine rendering (CSV with a `# classim-*` comment
//! line, or JSON) and the evaluation report additionally a human rendering
//! with 3-decimal numbers.

use super::{fmt_float, matrix::TABLE_FORMAT_VERSION};
use crate::oracle::ValidationReport;
use crate::twolevel::EvalReport;

/// Validation CSV: one row per class pair.
pub fn render_validation_csv(report: &ValidationReport) -> String {
    let mut out = format!(
        "# classim-validation format_version={TABLE_FORMAT_VERSION} mode={} priors_equal={}\n",
        report.mode.as_str(),
        report.priors_equal
    );
    out.push_str("pair_a,pair_b,n_a,n_b,class_sim,area_estimate,exact_area,deviation,se_bound\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.a,
            row.b,
            row.n_a,
            row.n_b,
            fmt_float(row.class_sim),
            fmt_float(row.area_estimate),
            fmt_float(row.exact_area),
            fmt_float(row.deviation),
            fmt_float(row.se_bound),
        ));
    }
    out
}

/// Validation report as a JSON document.
pub fn render_validation_json(report: &ValidationReport) -> String {
    let rows: Vec<serde_json::Value> = report
        .rows
        .iter()
        .map(|row| {
            serde_json::json!({
                "pair_a": row.a,
                "pair_b": row.b,
                "n_a": row.n_a,
                "n_b": row.n_b,
                "class_sim": row.class_sim,
                "area_estimate": row.area_estimate,
                "exact_area": row.exact_area,
                "deviation": row.deviation,
                "se_bound": row.se_bound,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "format_version": TABLE_FORMAT_VERSION,
        "kind": "classim-validation",
        "mode": report.mode.as_str(),
        "priors_equal": report.priors_equal,
        "max_deviation": report.max_deviation(),
        "within_bounds": report.within_bounds(),
        "rows": rows,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("validation document serializes");
    text.push('\n');
    text
}

/// Accuracy summary CSV over one or more named routers (baseline first).
pub fn render_eval_csv(reports: &[(&str, &EvalReport)]) -> String {
    let mut out = format!("# classim-eval format_version={TABLE_FORMAT_VERSION}\n");
    out.push_str("model,accuracy,correct,total,none\n");
    for (name, report) in reports {
        out.push_str(&format!(
            "{name},{},{},{},{}\n",
            fmt_float(report.accuracy),
            report.correct,
            report.total,
            report.none_count,
        ));
    }
    out
}

/// Full evaluation JSON: summary plus per-class recall and the routed
/// confusion table for every router.
pub fn render_eval_json(reports: &[(&str, &EvalReport)]) -> String {
    let models: Vec<serde_json::Value> = reports
        .iter()
        .map(|(name, report)| {
            let per_class: Vec<serde_json::Value> = report
                .per_class
                .iter()
                .map(|c| {
                    serde_json::json!({
                        "class": c.class,
                        "total": c.total,
                        "correct": c.correct,
                        "recall": c.recall,
                    })
                })
                .collect();
            serde_json::json!({
                "model": name,
                "accuracy": report.accuracy,
                "correct": report.correct,
                "total": report.total,
                "none": report.none_count,
                "per_class": per_class,
                "confusion_columns": report.outcome_labels(),
                "confusion": report.confusion,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "format_version": TABLE_FORMAT_VERSION,
        "kind": "classim-eval",
        "models": models,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("eval document serializes");
    text.push('\n');
    text
}

/// Human-readable evaluation text: accuracy lines, the delta when exactly
/// two routers are compared, per-class recalls side by side, and the routed
/// confusion of the last router.
pub fn render_eval_text(reports: &[(&str, &EvalReport)]) -> String {
    let mut out = String::new();
    for (name, report) in reports {
        out.push_str(&format!(
            "{name}: accuracy {:.3} ({}/{}), none {}\n",
            report.accuracy, report.correct, report.total, report.none_count
        ));
    }
    if let [(_, first), (_, second)] = reports {
        out.push_str(&format!(
            "accuracy delta: {:+.3}\n",
            second.accuracy - first.accuracy
        ));
    }
    let Some((last_name, last)) = reports.last() else {
        return out;
    };
    let classes = &last.classes;
    let label_width = classes
        .labels()
        .iter()
        .map(String::len)
        .max()
        .unwrap_or(0)
        .max("class".len())
        .max("none".len());

    out.push_str("\nper-class recall");
    for (name, _) in reports {
        out.push_str(&format!(" ({name})"));
    }
    out.push('\n');
    for (c, label) in classes.labels().iter().enumerate() {
        out.push_str(&format!("  {label:<label_width$}"));
        for (_, report) in reports {
            out.push_str(&format!("  {:>6.3}", report.per_class[c].recall));
        }
        out.push('\n');
    }

    out.push_str(&format!(
        "\nrouted counts ({last_name}): rows true class, columns routed\n"
    ));
    let cell = label_width.max(5);
    out.push_str(&format!("  {:<label_width$}", "class"));
    for outcome in last.outcome_labels() {
        out.push_str(&format!("  {outcome:>cell$}"));
    }
    out.push('\n');
    for (c, label) in classes.labels().iter().enumerate() {
        out.push_str(&format!("  {label:<label_width$}"));
        for count in &last.confusion[c] {
            out.push_str(&format!("  {count:>cell$}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twolevel::ClassOutcome;
    use crate::types::ClassSet;

    /// 8 samples per class; ant always gets 7 right, bee `correct - 7`.
    fn demo_report(correct: u64) -> EvalReport {
        let classes = ClassSet::new(["ant", "bee"]).unwrap();
        let bee_correct = correct - 7;
        EvalReport {
            classes,
            total: 16,
            correct,
            accuracy: correct as f64 / 16.0,
            none_count: 2,
            per_class: vec![
                ClassOutcome {
                    class: "ant".into(),
                    total: 8,
                    correct: 7,
                    recall: 7.0 / 8.0,
                },
                ClassOutcome {
                    class: "bee".into(),
                    total: 8,
                    correct: bee_correct,
                    recall: bee_correct as f64 / 8.0,
                },
            ],
            confusion: vec![vec![7, 0, 1], vec![7 - bee_correct, bee_correct, 1]],
        }
    }

    #[test]
    fn eval_renderings_agree_on_the_numbers() {
        let base = demo_report(9);
        let two = demo_report(10);
        let pairs: Vec<(&str, &EvalReport)> = vec![("baseline", &base), ("twolevel", &two)];

        let csv = render_eval_csv(&pairs);
        assert!(csv.starts_with("# classim-eval format_version=1\n"));
        assert!(csv.contains("baseline,5.6250000000000000e-1,9,16,2\n"), "{csv}");
        assert!(csv.contains("twolevel,6.2500000000000000e-1,10,16,2\n"), "{csv}");

        let text = render_eval_text(&pairs);
        assert!(text.contains("baseline: accuracy 0.562 (9/16), none 2"), "{text}");
        assert!(text.contains("accuracy delta: +0.062"), "{text}");
        assert!(text.contains("per-class recall (baseline) (twolevel)"), "{text}");
        assert!(text.contains("routed counts (twolevel)"), "{text}");

        let parsed: serde_json::Value =
            serde_json::from_str(&render_eval_json(&pairs)).unwrap();
        assert_eq!(parsed["models"][0]["model"], "baseline");
        assert_eq!(parsed["models"][0]["correct"], 9);
        assert_eq!(parsed["models"][1]["confusion"][0][0], 7);
        assert_eq!(
            parsed["models"][0]["confusion_columns"],
            serde_json::json!(["ant", "bee", "none"])
        );
    }

    #[test]
    fn half_even_rounding_in_human_numbers() {
        // 9/16 = 0.5625 -> 0.562 under round-half-to-even
        let report = demo_report(9);
        let text = render_eval_text(&[("baseline", &report)]);
        assert!(text.contains("0.562"), "{text}");
        assert!(!text.contains("0.563"), "{text}");
    }
}
