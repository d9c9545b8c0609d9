//! Result serialization.
//!
//! CSV output contains only values derived from the seed and the spec, so a
//! rerun produces byte-identical files no matter the thread count or host.
//! Volatile run information (wall time, worker count, tool version) goes in
//! the JSON report instead.

use serde_json::{json, Value};
use std::fmt::Write as _;

use crate::harness::config::ExperimentSpec;
use crate::harness::runner::{ExperimentResult, ResultRow};

pub const CSV_HEADER: &str = "sweep,sweep_value,method,mse,mse_db,mse_per_source,trials_ok,failures,crb_one_bit,crb_unquantized,loss_db";

fn push_f64(out: &mut String, v: f64) {
    // `Display` for f64 is shortest-roundtrip decimal, deterministic across
    // platforms; NaN/inf print as literals.
    write!(out, "{v}").expect("string write");
}

fn push_opt(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        push_f64(out, v);
    }
}

fn push_row(out: &mut String, row: &ResultRow) {
    write!(out, "{},", row.sweep).expect("string write");
    push_f64(out, row.sweep_value);
    write!(out, ",{},", row.method).expect("string write");
    push_f64(out, row.mse);
    out.push(',');
    push_f64(out, row.mse_db);
    out.push(',');
    push_f64(out, row.mse_per_source);
    write!(out, ",{},{},", row.trials_ok, row.failures).expect("string write");
    push_opt(out, row.crb_one_bit);
    out.push(',');
    push_opt(out, row.crb_unquantized);
    out.push(',');
    push_opt(out, row.loss_db);
    out.push('\n');
}

/// Render an experiment result as CSV (header + one line per row).
pub fn result_to_csv(result: &ExperimentResult) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &result.rows {
        push_row(&mut out, row);
    }
    out
}

/// Volatile facts about one run; kept out of the CSV on purpose.
#[derive(Debug, Clone, Default)]
pub struct RunMetadata {
    pub threads: Option<usize>,
    pub wall_ms: u128,
}

/// Render an experiment result plus its setup as a JSON report.
///
/// Non-finite floats become JSON null.
pub fn result_to_json(
    spec: &ExperimentSpec,
    result: &ExperimentResult,
    meta: &RunMetadata,
) -> Value {
    let rows: Vec<Value> = result
        .rows
        .iter()
        .map(|r| {
            json!({
                "sweep": r.sweep.name(),
                "sweep_value": r.sweep_value,
                "method": r.method.name(),
                "mse": r.mse,
                "mse_db": r.mse_db,
                "mse_per_source": r.mse_per_source,
                "trials_ok": r.trials_ok,
                "failures": r.failures,
                "crb_one_bit": r.crb_one_bit,
                "crb_unquantized": r.crb_unquantized,
                "loss_db": r.loss_db,
            })
        })
        .collect();
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": spec.seed,
        "array": spec.array.to_string(),
        "sources": spec.sources.len(),
        "snapshots": spec.snapshots,
        "trials": spec.trials,
        "sweep": spec.sweep.name(),
        "sweep_values": result.sweep_values,
        "methods": spec.methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "threads": meta.threads,
        "wall_ms": meta.wall_ms as u64,
        "rows": rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArrayConfig;
    use crate::harness::config::{DopPolicy, Method, PolarizationPolicy, SourceTemplate, Sweep};
    use crate::harness::runner::run_experiment;
    use crate::signal::TransmissionMode;

    fn sample_result() -> ExperimentResult {
        ExperimentResult {
            rows: vec![
                ResultRow {
                    sweep: Sweep::Snr,
                    sweep_value: -5.0,
                    method: Method::ObMusic2,
                    mse: 0.015625,
                    mse_per_source: 0.0078125,
                    mse_db: 10.0 * 0.0078125f64.log10(),
                    trials_ok: 9,
                    failures: 1,
                    crb_one_bit: Some(0.0009765625),
                    crb_unquantized: Some(0.000244140625),
                    loss_db: Some(3.0),
                },
                ResultRow {
                    sweep: Sweep::Snr,
                    sweep_value: -5.0,
                    method: Method::Baseline,
                    mse: f64::NAN,
                    mse_per_source: f64::NAN,
                    mse_db: f64::NAN,
                    trials_ok: 0,
                    failures: 10,
                    crb_one_bit: None,
                    crb_unquantized: None,
                    loss_db: None,
                },
            ],
            sweep_values: vec![-5.0],
        }
    }

    #[test]
    fn test_csv_layout_is_exact() {
        let csv = result_to_csv(&sample_result());
        let expected = format!(
            "{CSV_HEADER}\n\
             snr,-5,ob-music2,0.015625,{},0.0078125,9,1,0.0009765625,0.000244140625,3,\n\
             snr,-5,baseline,NaN,NaN,NaN,0,10,,,\n",
            10.0 * 0.0078125f64.log10()
        );
        // loss_db of 3.0 prints as "3"
        let expected = expected.replace(",3,\n", ",3\n");
        assert_eq!(csv, expected);
    }

    #[test]
    fn test_csv_bytes_stable_across_reruns_and_threads() {
        let spec = ExperimentSpec {
            sources: vec![SourceTemplate {
                theta_bar: -0.1,
                power: 1.0,
                dop: DopPolicy::Random,
                polarization: PolarizationPolicy::Random,
                mode: TransmissionMode::Dual,
            }],
            array: ArrayConfig::ula(4).unwrap(),
            snr_db: Some(5.0),
            noise_power: None,
            snapshots: 64,
            seed: 99,
            trials: 3,
            methods: vec![Method::ObMusic2, Method::Baseline],
            sweep: Sweep::None,
            grid: Vec::new(),
            compute_crb: false,
            couple_crb_y_gain: false,
        };
        let a = result_to_csv(&run_experiment(&spec, Some(1)).unwrap());
        let b = result_to_csv(&run_experiment(&spec, Some(3)).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with(CSV_HEADER));
        assert_eq!(a.lines().count(), 1 + 2);
    }

    #[test]
    fn test_json_report_fields() {
        let spec = ExperimentSpec {
            sources: vec![SourceTemplate {
                theta_bar: 0.2,
                power: 1.0,
                dop: DopPolicy::Fixed(1.0),
                polarization: PolarizationPolicy::Ellipse { alpha: 0.0, beta: 0.0 },
                mode: TransmissionMode::Dual,
            }],
            array: ArrayConfig::nested(2, 2).unwrap(),
            snr_db: None,
            noise_power: Some(0.5),
            snapshots: 10,
            seed: 1,
            trials: 10,
            methods: vec![Method::ObMusic2, Method::Baseline],
            sweep: Sweep::Snr,
            grid: vec![-5.0],
            compute_crb: true,
            couple_crb_y_gain: false,
        };
        let meta = RunMetadata {
            threads: Some(2),
            wall_ms: 1234,
        };
        let value = result_to_json(&spec, &sample_result(), &meta);
        assert_eq!(value["seed"], 1);
        assert_eq!(value["array"], "nested[1,2,3,6]");
        assert_eq!(value["methods"][0], "ob-music2");
        assert_eq!(value["threads"], 2);
        assert_eq!(value["wall_ms"], 1234);
        assert_eq!(value["rows"].as_array().unwrap().len(), 2);
        // NaN must serialize as null, keeping the report valid JSON.
        assert!(value["rows"][1]["mse"].is_null());
        assert!(value["rows"][1]["crb_one_bit"].is_null());
    }
}
