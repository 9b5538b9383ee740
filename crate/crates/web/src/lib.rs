//! JSON-in, JSON-out bindings of the solver for the static demo page in
//! `www/`.
//!
//! Every exported function takes a JSON string and returns a JSON string,
//! so the page needs no generated TypeScript types. The plain-Rust
//! `*_json` functions carry the logic and are what the native tests call.

use serde_json::{json, Value};
use varphase::error::Result;
use varphase::oracles::OracleSpec;
use varphase::spectra::{self, KSpec, RunConfig, SourceRef};
use wasm_bindgen::prelude::*;

fn config(text: &str) -> Result<RunConfig> {
    let cfg = RunConfig::from_json(text)?;
    if matches!(cfg.source, SourceRef::File { .. }) {
        return Err(varphase::error::Error::InvalidArgument(
            "file sources are not available in the browser; use an inline spec".into(),
        ));
    }
    Ok(cfg)
}

/// Run a k-sweep described by a run configuration and return the tracked
/// eigenphases, per-point diagnostics, oracle comparison and `Δρ(k)`.
pub fn sweep_json(text: &str) -> Result<String> {
    let cfg = config(text)?;
    let out = spectra::run_sweep(&cfg)?;
    let points: Vec<Value> = out
        .ks
        .iter()
        .zip(&out.results)
        .map(|(k, r)| match r {
            Ok(r) => json!({ "k": k, "diagnostics": r.diagnostics }),
            Err(e) => json!({ "k": k, "error": e.to_string() }),
        })
        .collect();
    let value = json!({
        "engine": out.engine,
        "points": points,
        "eigenphases": out.eigenphases,
        "oracle": out.oracle,
        "max_oracle_deviation": out.max_oracle_deviation(),
        "density_of_states": out.density_of_states,
    });
    Ok(value.to_string())
}

/// Run the consistency checks for a configuration.
pub fn check_json(text: &str) -> Result<String> {
    let report = spectra::run_checks(&config(text)?)?;
    Ok(serde_json::to_string(&report)?)
}

/// Closed-form S and eigenphase for one channel over a k specification:
/// `{"oracle": {"kind": "square_well", "v0": .., "a": ..}, "channel": 0,
/// "polarization": 1, "k": {"grid": {..}}}`.
pub fn oracle_json(text: &str) -> Result<String> {
    let v: Value = serde_json::from_str(text)?;
    let spec: OracleSpec = serde_json::from_value(v["oracle"].clone())?;
    let channel = v["channel"].as_u64().unwrap_or(0) as u32;
    let polarization = v["polarization"].as_i64().unwrap_or(1) as i32;
    let ks: KSpec = match v.get("k") {
        Some(k) => serde_json::from_value(k.clone())?,
        None => KSpec::default(),
    };
    ks.validate()?;
    let rows: Vec<Value> = spectra::oracle_table(spec, channel, polarization, &ks.values())?
        .into_iter()
        .map(|(k, s)| json!({ "k": k, "s": s, "delta": 0.5 * s.arg() }))
        .collect();
    Ok(Value::Array(rows).to_string())
}

fn to_js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn sweep(config: &str) -> std::result::Result<String, JsError> {
    to_js(sweep_json(config))
}

#[wasm_bindgen]
pub fn check(config: &str) -> std::result::Result<String, JsError> {
    to_js(check_json(config))
}

#[wasm_bindgen]
pub fn oracle(request: &str) -> std::result::Result<String, JsError> {
    to_js(oracle_json(request))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_well_sweep_tracks_the_oracle() {
        let cfg = r#"{"source":{"type":"square_well","v0":-1.0,"a":1.0,"s":50.0},"lmax":1,
                      "compare_oracle":true,"k":{"grid":{"min":0.5,"max":2.0,"num":4}}}"#;
        let v: Value = serde_json::from_str(&sweep_json(cfg).unwrap()).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 4);
        assert_eq!(v["eigenphases"].as_array().unwrap().len(), 16);
        assert!(v["max_oracle_deviation"].as_f64().unwrap() < 5e-3);
        assert_eq!(v["density_of_states"].as_array().unwrap().len(), 4);
        let unit = v["points"][0]["diagnostics"]["unitarity_residual"]
            .as_f64()
            .unwrap();
        assert!(unit < 1e-6);
    }

    #[test]
    fn checks_report_passes_for_vacuum() {
        let v: Value = serde_json::from_str(
            &check_json(r#"{"engine":"maxwell","jmax":1,"k":{"value":[1.0,0.0]}}"#).unwrap(),
        )
        .unwrap();
        assert_eq!(v["passed"], true);
    }

    #[test]
    fn oracle_rows_are_unimodular() {
        let req = r#"{"oracle":{"kind":"dielectric_sphere","n":1.5,"a":1.0},"channel":1,"polarization":-1,
                      "k":{"grid":{"min":0.5,"max":3.0,"num":6}}}"#;
        let rows: Vec<Value> = serde_json::from_str(&oracle_json(req).unwrap()).unwrap();
        assert_eq!(rows.len(), 6);
        for r in rows {
            let s = &r["s"];
            let m = s[0].as_f64().unwrap().hypot(s[1].as_f64().unwrap());
            assert!((m - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn file_sources_and_bad_json_are_rejected() {
        assert!(sweep_json(r#"{"source":{"type":"file","path":"x.json"}}"#).is_err());
        assert!(sweep_json("{").is_err());
        assert!(oracle_json(r#"{"oracle":{"kind":"square_well","v0":1.0,"a":-1.0}}"#).is_err());
    }
}
