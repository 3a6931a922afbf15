//! Serialization of results. CSV is UTF-8 with a header row and '.' decimals;
//! floats are printed with Rust's shortest round-trip formatting, so re-read
//! values are bit-identical. JSON output is a single object with "meta" and
//! "data" keys.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use ddsim_core::analysis::{MapResult, SweepRow};
use ddsim_core::simulator::TraceResult;

use crate::CliError;

pub fn map_csv(map: &MapResult) -> String {
    let mut out = String::from("epsilon,offset,fidelity\n");
    for (ie, eps) in map.epsilon_axis.iter().enumerate() {
        for (io, off) in map.offset_axis.iter().enumerate() {
            out.push_str(&format!("{eps},{off},{}\n", map.at(ie, io)));
        }
    }
    out
}

pub fn trace_csv(trace: &TraceResult, value_column: &str) -> String {
    let mut out = format!("time_us,pulse_count,{value_column},stderr\n");
    for k in 0..trace.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            trace.times[k], trace.pulse_counts[k], trace.magnetization[k], trace.stderr[k]
        ));
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("sequence,tau_d_us,duty_cycle,t1e_us,censored\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.sequence, row.tau_d, row.duty_cycle, row.t_1e, row.censored
        ));
    }
    out
}

/// The `{"meta": ..., "data": ...}` JSON document.
pub fn json_document<T: Serialize>(meta: &Value, data: &T) -> Result<String, CliError> {
    let doc = serde_json::json!({ "meta": meta, "data": data });
    serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::invalid("output", e.to_string()))
}

/// Re-read a JSON document produced by [`json_document`].
pub fn read_json_document<T: DeserializeOwned>(text: &str) -> Result<(Value, T), CliError> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| CliError::invalid("input", e.to_string()))?;
    let meta = doc
        .get("meta")
        .cloned()
        .ok_or_else(|| CliError::invalid("input", "missing 'meta' key"))?;
    let data = doc
        .get("data")
        .ok_or_else(|| CliError::invalid("input", "missing 'data' key"))?;
    let parsed: T = serde_json::from_value(data.clone())
        .map_err(|e| CliError::invalid("input", e.to_string()))?;
    Ok((meta, parsed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn map_csv_header_and_order() {
        let map = MapResult {
            epsilon_axis: vec![-0.1, 0.1],
            offset_axis: vec![0.0],
            fidelity: vec![0.25, 0.75],
            pulses_applied: 4,
            label: "t".into(),
            meta: BTreeMap::new(),
        };
        let csv = map_csv(&map);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "epsilon,offset,fidelity");
        assert_eq!(lines[1], "-0.1,0,0.25");
        assert_eq!(lines[2], "0.1,0,0.75");
    }

    #[test]
    fn trace_csv_header() {
        let trace = TraceResult {
            times: vec![0.0, 1.5],
            pulse_counts: vec![0, 1],
            magnetization: vec![1.0, 0.5],
            stderr: vec![0.0, 0.01],
            meta: BTreeMap::new(),
        };
        let csv = trace_csv(&trace, "magnetization");
        assert!(csv.starts_with("time_us,pulse_count,magnetization,stderr\n"));
        assert!(csv.contains("1.5,1,0.5,0.01"));
    }

    #[test]
    fn sweep_csv_header() {
        let rows = vec![SweepRow {
            sequence: "xy4".into(),
            tau_d: 5.0,
            duty_cycle: 0.68,
            t_1e: 123.4,
            censored: false,
        }];
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with("sequence,tau_d_us,duty_cycle,t1e_us,censored\n"));
        assert!(csv.contains("xy4,5,0.68,123.4,false"));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let map = MapResult {
            epsilon_axis: vec![-0.1, 0.0, 0.1],
            offset_axis: vec![-0.05, 0.05],
            fidelity: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            pulses_applied: 100,
            label: "xy4".into(),
            meta: BTreeMap::new(),
        };
        let meta = serde_json::json!({"seed": 7});
        let text = json_document(&meta, &map).unwrap();
        let (meta_back, map_back): (_, MapResult) = read_json_document(&text).unwrap();
        assert_eq!(meta_back, meta);
        assert_eq!(map_back, map);
    }
}
