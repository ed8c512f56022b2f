//! Coincidence count records and the CSV count-file format
//! (`setting_label,input_label,counts,duration_s`).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::projectors::{ProjectorSet, Setting};
use crate::error::{Error, Result};

/// Counts accumulated for one projector setting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting_index: usize,
    pub counts: u64,
    pub duration_s: f64,
}

/// Per-setting data fed to the estimators: observed (or exact, expected)
/// event weights and the acquisition time of each setting. A setting with
/// zero duration was not measured.
#[derive(Clone, Debug, PartialEq)]
pub struct Observations {
    pub weights: Vec<f64>,
    pub durations: Vec<f64>,
}

impl Observations {
    pub fn from_records(records: &[CountRecord], n_settings: usize) -> Result<Self> {
        let mut weights = vec![0.0; n_settings];
        let mut durations = vec![0.0; n_settings];
        let mut seen = vec![false; n_settings];
        for rec in records {
            let k = rec.setting_index;
            if k >= n_settings {
                return Err(Error::DimensionMismatch {
                    expected: n_settings,
                    found: k + 1,
                });
            }
            if seen[k] {
                return Err(Error::Config(format!("setting {k} recorded twice")));
            }
            if !(rec.duration_s >= 0.0) || !rec.duration_s.is_finite() {
                return Err(Error::Config(format!(
                    "setting {k}: invalid duration {}",
                    rec.duration_s
                )));
            }
            seen[k] = true;
            weights[k] = rec.counts as f64;
            durations[k] = rec.duration_s;
        }
        Ok(Self { weights, durations })
    }

    /// Infinite-statistics data: weights are the probabilities themselves.
    pub fn from_probabilities(probs: &[f64]) -> Self {
        Self {
            weights: probs.to_vec(),
            durations: vec![1.0; probs.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Event rates `n_k / τ_k`; unmeasured settings give `None`.
    pub fn rates(&self) -> Vec<Option<f64>> {
        self.weights
            .iter()
            .zip(&self.durations)
            .map(|(&n, &t)| (t > 0.0).then(|| n / t))
            .collect()
    }
}

/// One row of a count file.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledCount {
    pub setting: Setting,
    /// Prepared input, written with the same `:`-joined ket labels.
    pub input: Setting,
    pub counts: u64,
    pub duration_s: f64,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    setting_label: String,
    input_label: String,
    counts: String,
    duration_s: String,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a count file with strict validation. Line numbers in errors are
/// 1-based and count the header.
pub fn read_counts(reader: impl Read) -> Result<Vec<LabeledCount>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let expected = ["setting_label", "input_label", "counts", "duration_s"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(parse_err(
            1,
            format!("expected header `{}`", expected.join(",")),
        ));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| parse_err(line, e.to_string()))?;
        let setting: Setting = row.setting_label.parse().map_err(|_| {
            parse_err(
                line,
                format!("unknown setting label `{}`", row.setting_label),
            )
        })?;
        let input: Setting = row
            .input_label
            .parse()
            .map_err(|_| parse_err(line, format!("unknown input label `{}`", row.input_label)))?;
        let counts: u64 = row.counts.parse().map_err(|_| {
            parse_err(
                line,
                format!(
                    "counts must be a non-negative integer, got `{}`",
                    row.counts
                ),
            )
        })?;
        let duration_s: f64 = row
            .duration_s
            .parse()
            .map_err(|_| parse_err(line, format!("invalid duration `{}`", row.duration_s)))?;
        if !(duration_s >= 0.0) || !duration_s.is_finite() {
            return Err(parse_err(
                line,
                format!("duration must be finite and >= 0, got {duration_s}"),
            ));
        }
        out.push(LabeledCount {
            setting,
            input,
            counts,
            duration_s,
        });
    }
    Ok(out)
}

pub fn write_counts(writer: impl Write, rows: &[LabeledCount]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(CsvRow {
            setting_label: row.setting.to_string(),
            input_label: row.input.to_string(),
            counts: row.counts.to_string(),
            duration_s: format!("{}", crate::qcore::json::round_sig(row.duration_s)),
        })
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

/// Resolves labelled rows for a single input against a projector set.
pub fn records_for_input(
    rows: &[LabeledCount],
    input: &Setting,
    projs: &ProjectorSet,
) -> Result<Vec<CountRecord>> {
    rows.iter()
        .filter(|r| &r.input == input)
        .map(|r| {
            let k = projs
                .settings()
                .iter()
                .position(|s| *s == r.setting)
                .ok_or_else(|| Error::UnknownLabel(r.setting.to_string()))?;
            Ok(CountRecord {
                setting_index: k,
                counts: r.counts,
                duration_s: r.duration_s,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "setting_label,input_label,counts,duration_s\n\
                        t1:t1,plus:L,12,600\n\
                        R:minus,plus:L,0,600\n";

    #[test]
    fn parses_well_formed_rows() {
        let rows = read_counts(GOOD.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].counts, 12);
        assert_eq!(rows[1].setting.to_string(), "R:minus");
    }

    #[test]
    fn negative_count_reports_line() {
        let bad =
            "setting_label,input_label,counts,duration_s\nt1:t1,plus:L,3,1\nt1:t2,plus:L,-4,1\n";
        match read_counts(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_label_rejected() {
        let bad = "setting_label,input_label,counts,duration_s\nt1:H,plus,3,1\n";
        assert!(matches!(
            read_counts(bad.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        let bad_header = "setting,input,counts,duration\nt1,plus,3,1\n";
        assert!(matches!(
            read_counts(bad_header.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn write_read_roundtrip() {
        let rows = read_counts(GOOD.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_counts(&mut buf, &rows).unwrap();
        assert_eq!(read_counts(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn observations_reject_duplicates() {
        let r = CountRecord {
            setting_index: 1,
            counts: 5,
            duration_s: 1.0,
        };
        assert!(Observations::from_records(&[r, r], 4).is_err());
        let obs = Observations::from_records(&[r], 4).unwrap();
        assert_eq!(obs.rates(), vec![None, Some(5.0), None, None]);
    }
}
