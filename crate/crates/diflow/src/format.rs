//! Instance and result file formats.
//!
//! An instance file is JSON with the shape
//!
//! ```json
//! {
//!   "horizon": 1,
//!   "x_sizes": [2, 2],
//!   "y_sizes": [2, 2],
//!   "input_kernels": [[[0.5, 0.5]], [[1.0, 0.0], ...]],
//!   "channel_kernels": [[[0.9, 0.1], [0.1, 0.9]], [...]]
//! }
//! ```
//!
//! `input_kernels[i]` lists one row per step-`i` input history and
//! `channel_kernels[i]` one row per step-`i` channel history, using the
//! interleaved mixed-radix packing documented in [`crate::measures`]
//! (earliest symbol most significant, x before y within a step, the
//! channel history appending the current input symbol). All reals are
//! decimal; rows must sum to 1 within 1e-9.
//!
//! Two optional fields extend an instance for the solvers:
//! `"distortion"` (per-step `|X_i|·|Y_i|` tables, row-major in `x`;
//! Hamming by default) and `"cost"` (per-step `|X_i|` input cost vectors;
//! zero by default).
//!
//! Result files are JSON objects or arrays built here so that identical
//! requests produce byte-identical output. Values that overflow to ±∞
//! serialize as the strings `"inf"` / `"-inf"`.

use crate::directed_info::DirectedInfoReport;
use crate::extremum::SolveResult;
use crate::measures::{ForwardChannel, InputPolicy, InstanceSpec, Pmf, INGEST_TOL};
use crate::properties::PropertyReport;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Raw instance file contents, exactly as serialized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub horizon: usize,
    pub x_sizes: Vec<usize>,
    pub y_sizes: Vec<usize>,
    pub input_kernels: Vec<Vec<Vec<f64>>>,
    pub channel_kernels: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distortion: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<Vec<Vec<f64>>>,
}

pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

/// Builds validated core objects from a parsed file.
pub fn build_instance(file: &InstanceFile) -> Result<(InstanceSpec, InputPolicy, ForwardChannel)> {
    let spec = InstanceSpec::new(file.horizon, file.x_sizes.clone(), file.y_sizes.clone())?;
    let to_rows = |steps: &[Vec<Vec<f64>>]| -> Result<Vec<Vec<Pmf>>> {
        steps
            .iter()
            .map(|rows| rows.iter().map(|r| Pmf::new(r.clone())).collect())
            .collect()
    };
    let policy = InputPolicy::new(spec.clone(), to_rows(&file.input_kernels)?)?;
    let channel = ForwardChannel::new(spec.clone(), to_rows(&file.channel_kernels)?)?;
    Ok((spec, policy, channel))
}

/// Serializes core objects back into the file dialect.
pub fn emit_instance(policy: &InputPolicy, channel: &ForwardChannel) -> InstanceFile {
    let spec = policy.spec();
    let kernel_rows = |steps: &[Vec<Pmf>]| -> Vec<Vec<Vec<f64>>> {
        steps
            .iter()
            .map(|rows| rows.iter().map(|r| r.mass().to_vec()).collect())
            .collect()
    };
    InstanceFile {
        horizon: spec.horizon(),
        x_sizes: spec.x_sizes().to_vec(),
        y_sizes: spec.y_sizes().to_vec(),
        input_kernels: kernel_rows(policy.kernels()),
        channel_kernels: kernel_rows(channel.kernels()),
        distortion: None,
        cost: None,
    }
}

/// Returns one diagnostic per violated invariant, each naming the
/// offending index path. An empty list means the file is a valid
/// instance.
pub fn validate_instance(file: &InstanceFile) -> Vec<String> {
    let mut out = Vec::new();
    let n = file.horizon;
    if file.x_sizes.len() != n + 1 {
        out.push(format!(
            "x_sizes: expected {} entries for horizon {n}, got {}",
            n + 1,
            file.x_sizes.len()
        ));
    }
    if file.y_sizes.len() != n + 1 {
        out.push(format!(
            "y_sizes: expected {} entries for horizon {n}, got {}",
            n + 1,
            file.y_sizes.len()
        ));
    }
    for (i, &s) in file.x_sizes.iter().enumerate() {
        if s == 0 {
            out.push(format!("x_sizes[{i}]: alphabet size must be at least 1"));
        }
    }
    for (i, &s) in file.y_sizes.iter().enumerate() {
        if s == 0 {
            out.push(format!("y_sizes[{i}]: alphabet size must be at least 1"));
        }
    }
    if !out.is_empty() {
        // Shape errors make the per-row expectations below meaningless.
        return out;
    }
    let spec = match InstanceSpec::new(n, file.x_sizes.clone(), file.y_sizes.clone()) {
        Ok(spec) => spec,
        Err(e) => {
            out.push(format!("instance: {e}"));
            return out;
        }
    };

    let mut check_rows = |name: &str,
                          steps: &[Vec<Vec<f64>>],
                          hist_len: &dyn Fn(usize) -> usize,
                          row_len: &dyn Fn(usize) -> usize| {
        if steps.len() != n + 1 {
            out.push(format!(
                "{name}: expected {} steps, got {}",
                n + 1,
                steps.len()
            ));
            return;
        }
        for (i, rows) in steps.iter().enumerate() {
            if rows.len() != hist_len(i) {
                out.push(format!(
                    "{name}[{i}]: expected {} rows, got {}",
                    hist_len(i),
                    rows.len()
                ));
                continue;
            }
            for (h, row) in rows.iter().enumerate() {
                if row.len() != row_len(i) {
                    out.push(format!(
                        "{name}[{i}][{h}]: expected {} entries, got {}",
                        row_len(i),
                        row.len()
                    ));
                    continue;
                }
                let mut bad_entry = false;
                for (k, &v) in row.iter().enumerate() {
                    if !v.is_finite() || v < 0.0 {
                        out.push(format!("{name}[{i}][{h}][{k}]: negative entry {v}"));
                        bad_entry = true;
                    }
                }
                if !bad_entry {
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > INGEST_TOL {
                        out.push(format!(
                            "{name}[{i}][{h}]: row sums to {sum}, outside 1 ± 1e-9"
                        ));
                    }
                }
            }
        }
    };
    check_rows(
        "input_kernels",
        &file.input_kernels,
        &|i| spec.policy_history_len(i),
        &|i| spec.x_sizes()[i],
    );
    check_rows(
        "channel_kernels",
        &file.channel_kernels,
        &|i| spec.channel_history_len(i),
        &|i| spec.y_sizes()[i],
    );

    if let Some(distortion) = &file.distortion {
        if distortion.len() != n + 1 {
            out.push(format!(
                "distortion: expected {} steps, got {}",
                n + 1,
                distortion.len()
            ));
        } else {
            for (i, t) in distortion.iter().enumerate() {
                let want = spec.x_sizes()[i] * spec.y_sizes()[i];
                if t.len() != want {
                    out.push(format!(
                        "distortion[{i}]: expected {want} entries, got {}",
                        t.len()
                    ));
                }
                for (k, &v) in t.iter().enumerate() {
                    if !v.is_finite() || v < 0.0 {
                        out.push(format!("distortion[{i}][{k}]: negative entry {v}"));
                    }
                }
            }
        }
    }
    if let Some(cost) = &file.cost {
        if cost.len() != n + 1 {
            out.push(format!("cost: expected {} steps, got {}", n + 1, cost.len()));
        } else {
            for (i, c) in cost.iter().enumerate() {
                if c.len() != spec.x_sizes()[i] {
                    out.push(format!(
                        "cost[{i}]: expected {} entries, got {}",
                        spec.x_sizes()[i],
                        c.len()
                    ));
                }
                for (k, &v) in c.iter().enumerate() {
                    if !v.is_finite() || v < 0.0 {
                        out.push(format!("cost[{i}][{k}]: negative entry {v}"));
                    }
                }
            }
        }
    }
    out
}

/// JSON-safe representation of a possibly infinite bit value.
pub fn bits_value(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v == f64::INFINITY {
        json!("inf")
    } else if v == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!("nan")
    }
}

pub fn report_json(report: &DirectedInfoReport) -> Value {
    json!({
        "total_bits": bits_value(report.total_bits),
        "per_step_bits": report.per_step_bits.iter().map(|&b| bits_value(b)).collect::<Vec<_>>(),
        "route": report.route.as_str(),
    })
}

/// CSV with one record per step and a `total` record per route.
pub fn reports_csv(reports: &[DirectedInfoReport]) -> String {
    let mut out = String::from("route,step,bits\r\n");
    for report in reports {
        for (i, &b) in report.per_step_bits.iter().enumerate() {
            push_record(&mut out, &[report.route.as_str(), &i.to_string(), &fmt_f64(b)]);
        }
        push_record(&mut out, &[report.route.as_str(), "total", &fmt_f64(report.total_bits)]);
    }
    out
}

pub fn property_reports_json(reports: &[PropertyReport]) -> Value {
    Value::Array(
        reports
            .iter()
            .map(|r| {
                json!({
                    "property_name": r.property_name,
                    "trials": r.trials,
                    "violations": r.violations,
                    "worst_margin": bits_value(r.worst_margin),
                    "seed": r.seed,
                })
            })
            .collect(),
    )
}

pub fn property_reports_csv(reports: &[PropertyReport]) -> String {
    let mut out = String::from("property,trials,violations,worst_margin,seed\r\n");
    for r in reports {
        push_record(
            &mut out,
            &[
                &r.property_name,
                &r.trials.to_string(),
                &r.violations.to_string(),
                &fmt_f64(r.worst_margin),
                &r.seed.to_string(),
            ],
        );
    }
    out
}

/// Solver result plus the argmax/argmin kernel family in the instance
/// dialect.
pub fn solve_json(result: &SolveResult, argument: &[Vec<Vec<f64>>]) -> Value {
    json!({
        "value_bits": bits_value(result.value_bits),
        "iterations": result.iterations,
        "converged": result.converged,
        "trace": result.trace.iter().map(|&b| bits_value(b)).collect::<Vec<_>>(),
        "argument": argument,
    })
}

pub fn kernel_table(steps: &[Vec<Pmf>]) -> Vec<Vec<Vec<f64>>> {
    steps
        .iter()
        .map(|rows| rows.iter().map(|r| r.mass().to_vec()).collect())
        .collect()
}

fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        let mut s = format!("{v}");
        if !s.contains('.') && !s.contains('e') && !s.contains("inf") {
            s.push_str(".0");
        }
        s
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        "nan".to_string()
    }
}

/// RFC 4180 quoting: fields containing commas, quotes or newlines get
/// wrapped, with inner quotes doubled.
fn push_record(out: &mut String, fields: &[&str]) {
    for (k, field) in fields.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        if field.contains(',') || field.contains('"') || field.contains('\n') {
            out.push('"');
            out.push_str(&field.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(field);
        }
    }
    out.push_str("\r\n");
}
