//! Result-document assembly. Documents are JSON objects with deterministic
//! (alphabetical) key order so fixed inputs reproduce byte-identical output.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use sicspin::fit::FitResult;
use sicspin::odmr::OdmrSpectrum;
use sicspin::trace::Trace;

pub type Inputs = BTreeMap<String, Value>;

pub fn document(command: &str, inputs: Inputs, payload: Vec<(&str, Value)>, warnings: Vec<String>) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("command".into(), json!(command));
    map.insert("inputs".into(), json!(inputs));
    for (key, value) in payload {
        map.insert(key.into(), value);
    }
    map.insert("warnings".into(), json!(warnings));
    Value::Object(map)
}

pub fn spectrum_value(spectrum: &OdmrSpectrum) -> Value {
    json!({
        "freqs_mhz": spectrum.freqs_mhz,
        "signal": spectrum.signal,
    })
}

pub fn trace_value(trace: &Trace) -> Value {
    json!({
        "x": trace.x,
        "y": trace.y,
        "y_err": trace.y_err,
        "x_unit": trace.x_unit,
        "y_unit": trace.y_unit,
    })
}

pub fn fit_values(result: &FitResult) -> (Value, Value) {
    let params: BTreeMap<&str, f64> = result
        .param_names
        .iter()
        .map(String::as_str)
        .zip(result.params.iter().copied())
        .collect();
    let uncertainties: Value = match &result.uncertainties {
        Some(sigmas) => json!(result
            .param_names
            .iter()
            .map(String::as_str)
            .zip(sigmas.iter().copied())
            .collect::<BTreeMap<&str, f64>>()),
        None => Value::Null,
    };
    (json!(params), uncertainties)
}

pub fn print_document(doc: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(doc).expect("documents are serializable")
    );
}
