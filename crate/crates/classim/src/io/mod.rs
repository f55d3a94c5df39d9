//! On-disk formats: feature CSV, prediction JSONL, matrix/top-k tables and
//! the report renderers.
//!
//! Everything here is deterministic text. Machine-facing numbers use
//! [`fmt_float`] (17 significant digits, enough to round-trip an IEEE
//! double exactly); human-facing tables round half-to-even at 3 decimals.
//! Labels and sample ids are validated to contain no separator characters,
//! so the CSV dialect needs no quoting and `split(',')` is a complete
//! parser.

mod features;
mod matrix;
mod predictions;
mod report;

pub use features::{read_features, write_features};
pub use matrix::{
    read_matrix_csv, render_matrix_csv, render_matrix_json, render_topk_csv, render_topk_json,
    LabeledMatrix, TopK, TABLE_FORMAT_VERSION,
};
pub use predictions::read_predictions;
pub use report::{
    render_eval_csv, render_eval_json, render_eval_text, render_validation_csv,
    render_validation_json,
};

use std::path::Path;

use crate::error::{Error, Result};

/// Machine float format: `{:.16e}` gives 17 significant digits, the minimum
/// that reproduces any f64 bit pattern on re-parse.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn format_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// 1-based numbered lines with trailing `\r` stripped, so CRLF files parse
/// the same as LF files.
pub(crate) fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.strip_suffix('\r').unwrap_or(line)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn machine_floats_round_trip_exactly() {
        let cases = [
            0.0,
            -0.0,
            1.0,
            0.1,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            2.2250738585072014e-308_f64.next_down(), // subnormal
            f64::MAX,
            -123456.789e-30,
        ];
        for v in cases {
            let parsed: f64 = fmt_float(v).parse().unwrap();
            assert_eq!(parsed.to_bits(), v.to_bits(), "{v:e}");
        }
    }

    #[test]
    fn numbered_lines_strip_carriage_returns() {
        let lines: Vec<(usize, &str)> = numbered_lines("a\r\nb\nc").collect();
        assert_eq!(lines, vec![(1, "a"), (2, "b"), (3, "c")]);
    }
}
