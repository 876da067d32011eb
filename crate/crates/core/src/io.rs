//! Run artifacts: the per-step trace CSV and the JSON run manifest.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{DiagRecord, FlowConfig, FlowTrace, StateSummary, Termination, Violations};
use crate::metric::MetricFile;

pub const TRACE_FILE: &str = "trace.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const TRACE_HEADER: [&str; 9] = [
    "t",
    "trace",
    "log_det",
    "entropy",
    "dist_flat",
    "curvature_norm",
    "lambda_min",
    "lambda_max",
    "step_used",
];

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_trace_csv<W: std::io::Write>(states: &[StateSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for s in states {
        let d = &s.diag;
        let row = [
            s.t,
            d.trace_c,
            d.log_det_c,
            d.entropy,
            d.dist_flat,
            d.curvature_norm,
            d.lambda_min,
            d.lambda_max,
            d.step_used,
        ];
        w.write_record(row.iter().map(|&v| fmt_f64(v))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a trace written by [`write_trace_csv`].
pub fn read_trace_csv(path: &Path) -> Result<Vec<StateSummary>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if !header.iter().eq(TRACE_HEADER) {
        return Err(Error::Validation(format!("unexpected trace header: {header:?}")));
    }
    let mut states = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let v: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Validation(format!("bad trace field {f:?}: {e}"))))
            .collect::<Result<_>>()?;
        states.push(StateSummary {
            t: v[0],
            diag: DiagRecord {
                trace_c: v[1],
                log_det_c: v[2],
                entropy: v[3],
                dist_flat: v[4],
                curvature_norm: v[5],
                lambda_min: v[6],
                lambda_max: v[7],
                step_used: v[8],
            },
        });
    }
    Ok(states)
}

/// Torus parameters as recorded in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestParams {
    pub n: usize,
    pub m: usize,
    pub x_choice: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_path: Option<String>,
}

/// How the initial metric was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricSource {
    Flat { alpha: f64 },
    Cigar { mass: f64 },
    Random { spread: f64, seed: u64 },
    File { path: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub params: ManifestParams,
    pub metric: MetricSource,
    pub density_mode: bool,
    /// Normalisation factor `1/τ(c0)` in density mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Controls actually used (already rescaled in density mode).
    pub config: FlowConfig,
    pub termination: Termination,
    pub c_infinity: f64,
    pub violations: Violations,
    pub accepted_steps: usize,
    pub rejected_steps: u32,
    pub final_t: f64,
    pub final_dist_flat: f64,
    pub final_metric: MetricFile,
    /// Seconds since the Unix epoch; not part of the reproducible output.
    pub timestamp: u64,
    /// Not part of the reproducible output.
    pub wall_clock_seconds: f64,
}

/// Manifest fields that vary between otherwise identical runs.
pub const NONDETERMINISTIC_FIELDS: [&str; 2] = ["timestamp", "wall_clock_seconds"];

impl Manifest {
    pub fn new(
        params: ManifestParams,
        metric: MetricSource,
        kappa: Option<f64>,
        trace: &FlowTrace,
        wall_clock_seconds: f64,
    ) -> Self {
        let last = trace.states.last().expect("trace holds the initial state");
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Manifest {
            params,
            metric,
            density_mode: kappa.is_some(),
            kappa,
            config: trace.config.clone(),
            termination: trace.termination,
            c_infinity: trace.c_infinity,
            violations: trace.violations,
            accepted_steps: trace.states.len() - 1,
            rejected_steps: trace.rejected_steps,
            final_t: last.t,
            final_dist_flat: last.diag.dist_flat,
            final_metric: trace.final_state.c.to_file(),
            timestamp,
            wall_clock_seconds,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&s).map_err(|e| Error::Validation(format!("malformed manifest: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(t: f64, x: f64) -> StateSummary {
        StateSummary {
            t,
            diag: DiagRecord {
                trace_c: x,
                log_det_c: -x,
                entropy: 0.1 + x,
                dist_flat: x * x,
                curvature_norm: 1.0 / 3.0,
                lambda_min: 1e-300,
                lambda_max: 7.0,
                step_used: 0.0,
            },
        }
    }

    #[test]
    fn trace_csv_round_trips_exactly() {
        let states = vec![summary(0.0, std::f64::consts::PI), summary(0.125, 1e-17), summary(2.5, -0.0)];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(TRACE_FILE);
        write_trace_csv(&states, std::fs::File::create(&p).unwrap()).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t,trace,log_det,entropy,dist_flat,curvature_norm,lambda_min,lambda_max,step_used\n"));
        assert!(text.contains("3.1415926535897931e0"));
        assert_eq!(read_trace_csv(&p).unwrap(), states);
    }

    #[test]
    fn metric_source_tags() {
        let s = serde_json::to_string(&MetricSource::Random { spread: 0.5, seed: 3 }).unwrap();
        assert_eq!(s, r#"{"kind":"random","spread":0.5,"seed":3}"#);
    }
}
