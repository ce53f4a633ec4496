//! On-disk artifacts: the round log (JSONL), the report document (JSON),
//! and the plotting curve (CSV).
//!
//! Every artifact embeds the seed and is a pure function of
//! `(config, seed, records)` — running the same scenario twice produces
//! byte-identical files. Logs are written strictly append-only (header
//! first, then one line per scored round) and carry everything needed to
//! re-score them from scratch.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ecr_core::channel::DetectionParams;
use ecr_core::metric::AntipodalMetric;
use ecr_core::verifier::{
    certify, null_variance, CertificationReport, RoundRecord, SelectionPolicy, VerifierError,
};
use serde::{Deserialize, Serialize};

pub const ROUNDS_LOG_SCHEMA: &str = "ecr-rounds-log";
pub const REPORT_SCHEMA: &str = "ecr-report";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Verifier(#[from] VerifierError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// First line of every round log: the session's full scoring context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct LogHeader {
    pub schema: String,
    pub version: u32,
    pub seed: u64,
    pub k_sigma: f64,
    pub rounds: u64,
    pub policy: SelectionPolicy,
    pub channel: DetectionParams,
}

impl LogHeader {
    pub fn new(
        seed: u64,
        k_sigma: f64,
        rounds: u64,
        policy: SelectionPolicy,
        channel: DetectionParams,
    ) -> LogHeader {
        LogHeader {
            schema: ROUNDS_LOG_SCHEMA.to_string(),
            version: ARTIFACT_VERSION,
            seed,
            k_sigma,
            rounds,
            policy,
            channel,
        }
    }
}

pub fn write_rounds_log(
    path: &Path,
    header: &LogHeader,
    records: &[RoundRecord],
) -> Result<(), ArtifactError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let mut emit = |value: String| -> Result<(), ArtifactError> {
        out.write_all(value.as_bytes()).map_err(io_err(path))?;
        out.write_all(b"\n").map_err(io_err(path))
    };
    emit(serde_json::to_string(header).expect("header serializes"))?;
    for record in records {
        emit(serde_json::to_string(record).expect("record serializes"))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn read_rounds_log(path: &Path) -> Result<(LogHeader, Vec<RoundRecord>), ArtifactError> {
    let file = File::open(path).map_err(io_err(path))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, first) = lines.next().ok_or_else(|| ArtifactError::Malformed {
        path: path.to_path_buf(),
        line: 1,
        message: "empty file; expected a header line".into(),
    })?;
    let first = first.map_err(io_err(path))?;
    let header: LogHeader =
        serde_json::from_str(&first).map_err(|e| ArtifactError::Malformed {
            path: path.to_path_buf(),
            line: 1,
            message: format!("bad header: {e}"),
        })?;
    if header.schema != ROUNDS_LOG_SCHEMA || header.version != ARTIFACT_VERSION {
        return Err(ArtifactError::Malformed {
            path: path.to_path_buf(),
            line: 1,
            message: format!(
                "not a {ROUNDS_LOG_SCHEMA} v{ARTIFACT_VERSION} file (schema {:?} v{})",
                header.schema, header.version
            ),
        });
    }

    let mut records = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RoundRecord =
            serde_json::from_str(&line).map_err(|e| ArtifactError::Malformed {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("bad round record: {e}"),
            })?;
        records.push(record);
    }
    Ok((header, records))
}

/// Re-derive the certification verdict for a stored log. Recomputes every
/// squared error along the way, so a tampered log is rejected rather than
/// re-certified.
pub fn rescore(header: &LogHeader, records: &[RoundRecord]) -> Result<CertificationReport, ArtifactError> {
    let prior = header.policy.prior_spec().validate().map_err(VerifierError::from)?;
    Ok(certify(
        records,
        header.k_sigma,
        &prior,
        AntipodalMetric::unit(),
    )?)
}

/// The report document. The seed is present when the writer is the party
/// that chose it (the verifier); a prover saving the report it received
/// over the wire does not know it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ReportArtifact {
    pub schema: String,
    pub version: u32,
    pub seed: Option<u64>,
    pub report: CertificationReport,
}

impl ReportArtifact {
    pub fn new(seed: Option<u64>, report: CertificationReport) -> ReportArtifact {
        ReportArtifact {
            schema: REPORT_SCHEMA.to_string(),
            version: ARTIFACT_VERSION,
            seed,
            report,
        }
    }

    pub fn render(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

pub fn write_report(path: &Path, artifact: &ReportArtifact) -> Result<(), ArtifactError> {
    std::fs::write(path, artifact.render()).map_err(io_err(path))
}

pub fn read_report(path: &Path) -> Result<ReportArtifact, ArtifactError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| ArtifactError::Malformed {
        path: path.to_path_buf(),
        line: 1,
        message: format!("bad report: {e}"),
    })
}

/// One plotting row: running statistics after `n` scored rounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRow {
    pub n: u64,
    /// Mean squared error over the first `n` rounds.
    pub mse: f64,
    /// ±1σ of that running mean (sample standard error; 0 while n = 1).
    pub mse_stderr: f64,
    /// Blind band `null_mean − k·√(null_var/n)`.
    pub null_lo: f64,
    /// Blind band `null_mean + k·√(null_var/n)`.
    pub null_hi: f64,
}

/// Running statistics for every prefix of the record sequence, against
/// the blind band at significance `k_sigma`.
pub fn curve_rows(
    records: &[RoundRecord],
    k_sigma: f64,
    null_mean: f64,
    null_var: f64,
) -> Vec<CurveRow> {
    let mut rows = Vec::with_capacity(records.len());
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for (i, record) in records.iter().enumerate() {
        let n = (i + 1) as f64;
        let delta = record.sq_err - mean;
        mean += delta / n;
        m2 += delta * (record.sq_err - mean);
        let stderr = if i == 0 {
            0.0
        } else {
            (m2 / (n - 1.0) / n).sqrt()
        };
        let half_band = k_sigma * (null_var / n).sqrt();
        rows.push(CurveRow {
            n: i as u64 + 1,
            mse: mean,
            mse_stderr: stderr,
            null_lo: null_mean - half_band,
            null_hi: null_mean + half_band,
        });
    }
    rows
}

/// Write the curve table: a seed comment, a header row, then one CSV row
/// per round.
pub fn write_curve(
    path: &Path,
    seed: u64,
    k_sigma: f64,
    policy: &SelectionPolicy,
    records: &[RoundRecord],
) -> Result<(), ArtifactError> {
    let m = AntipodalMetric::unit();
    let prior = policy.prior_spec().validate().map_err(VerifierError::from)?;
    let null_var = null_variance(&prior, m)?;
    let null_mean = m.diameter().powi(2) / 2.0;
    let rows = curve_rows(records, k_sigma, null_mean, null_var);

    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "# seed={seed} k-sigma={k_sigma} null-var={null_var}")
        .map_err(io_err(path))?;
    writeln!(out, "n,mse,mse_stderr,null_lo,null_hi").map_err(io_err(path))?;
    for row in &rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.n, row.mse, row.mse_stderr, row.null_lo, row.null_hi
        )
        .map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ecr_core::metric::Phase;

    fn sample_records() -> Vec<RoundRecord> {
        let m = AntipodalMetric::unit();
        [(0.0, 0.0), (1.0, 0.5), (0.25, 1.25), (1.5, 1.5)]
            .into_iter()
            .enumerate()
            .map(|(i, (t, e))| {
                let theta = Phase::wrap(t).unwrap();
                let estimate = Phase::wrap(e).unwrap();
                RoundRecord {
                    index: i as u64,
                    theta,
                    estimate,
                    sq_err: m.sq_distance(theta, estimate),
                }
            })
            .collect()
    }

    fn sample_header() -> LogHeader {
        LogHeader::new(
            42,
            5.0,
            4,
            SelectionPolicy::RoundRobinGrid { n: 6, epsilon: 0.0 },
            DetectionParams::new(1.0, 0.0).unwrap(),
        )
    }

    #[test]
    fn round_log_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rounds.jsonl");
        let header = sample_header();
        let records = sample_records();
        write_rounds_log(&path, &header, &records).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1 + records.len());
        assert!(text.lines().next().unwrap().contains("\"seed\":42"));

        let (back_header, back_records) = read_rounds_log(&path).unwrap();
        assert_eq!(back_header, header);
        assert_eq!(back_records, records);
    }

    #[test]
    fn rescoring_a_log_matches_direct_certification() {
        let header = sample_header();
        let records = sample_records();
        let report = rescore(&header, &records).unwrap();
        let direct = certify(
            &records,
            5.0,
            &header.policy.prior_spec().validate().unwrap(),
            AntipodalMetric::unit(),
        )
        .unwrap();
        assert_eq!(report, direct);
    }

    #[test]
    fn rescoring_rejects_a_tampered_record() {
        let header = sample_header();
        let mut records = sample_records();
        records[2].sq_err += 0.25;
        match rescore(&header, &records) {
            Err(ArtifactError::Verifier(VerifierError::CorruptRecord { index: 2, .. })) => {}
            other => panic!("expected corrupt-record rejection, got {other:?}"),
        }
    }

    #[test]
    fn curve_rows_track_running_statistics_and_band() {
        let records = sample_records();
        let rows = curve_rows(&records, 5.0, 0.5, 0.125);
        assert_eq!(rows.len(), records.len());
        assert_eq!(rows[0].mse, records[0].sq_err);
        assert_eq!(rows[0].mse_stderr, 0.0);

        // Row n: mean of the first n squared errors.
        let n = 3;
        let mean: f64 =
            records[..n].iter().map(|r| r.sq_err).sum::<f64>() / n as f64;
        assert!((rows[n - 1].mse - mean).abs() < 1e-15);
        let var: f64 = records[..n]
            .iter()
            .map(|r| (r.sq_err - mean).powi(2))
            .sum::<f64>()
            / (n as f64 - 1.0);
        assert!((rows[n - 1].mse_stderr - (var / n as f64).sqrt()).abs() < 1e-15);

        // The blind band follows k·√(null_var/n) exactly: at n = 120 and
        // k = 5 the half-width is 5·√(1/960) ≈ 0.16137.
        let many: Vec<RoundRecord> = (0..120)
            .map(|i| RoundRecord {
                index: i,
                theta: Phase::ZERO,
                estimate: Phase::ZERO,
                sq_err: 0.0,
            })
            .collect();
        let rows = curve_rows(&many, 5.0, 0.5, 0.125);
        let half = 5.0 * (0.125f64 / 120.0).sqrt();
        assert!((rows[119].null_hi - (0.5 + half)).abs() < 1e-15);
        assert!((rows[119].null_lo - (0.5 - half)).abs() < 1e-15);
        assert!((half - 0.161_374).abs() < 1e-6);
    }

    #[test]
    fn curve_file_has_comment_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        let records = sample_records();
        write_curve(
            &path,
            42,
            5.0,
            &SelectionPolicy::RoundRobinGrid { n: 6, epsilon: 0.0 },
            &records,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        // The null variance is printed at full precision (the grid sum
        // carries ~1 ulp of noise), so parse it rather than matching bytes.
        let header = lines.next().unwrap();
        assert!(header.starts_with("# seed=42 k-sigma=5 null-var="), "{header}");
        let null_var: f64 = header.rsplit('=').next().unwrap().parse().unwrap();
        assert!((null_var - 0.125).abs() < 1e-12);
        assert_eq!(lines.next().unwrap(), "n,mse,mse_stderr,null_lo,null_hi");
        assert_eq!(lines.count(), records.len());
    }

    #[test]
    fn report_artifact_renders_with_and_without_seed() {
        let records = sample_records();
        let report = rescore(&sample_header(), &records).unwrap();
        let with_seed = ReportArtifact::new(Some(42), report.clone()).render();
        assert!(with_seed.contains("\"seed\": 42"));
        let without = ReportArtifact::new(None, report).render();
        assert!(without.contains("\"seed\": null"));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let artifact: ReportArtifact = serde_json::from_str(&with_seed).unwrap();
        write_report(&path, &artifact).unwrap();
        assert_eq!(read_report(&path).unwrap(), artifact);
    }
}
