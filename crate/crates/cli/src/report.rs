//! JSON payloads for the report `result` field.

use anyhow::{anyhow, Context};
use serde_json::{json, Value};

use hyperstate::constructors::method2::StageRecord;
use hyperstate::{Amplitude, CertVerdict, SchmidtDecomposition, Window, WindowOutcome};

pub fn vectors(vs: &[Vec<Amplitude>]) -> Value {
    json!(vs)
}

pub fn verdict(v: &CertVerdict) -> Value {
    let per: Vec<Value> = v
        .per_subsystem
        .iter()
        .map(|o| {
            json!({
                "subsystem": o.subsystem.indices(),
                "pass": o.pass,
                "min_eigenvalue": o.min_eigenvalue,
                "rank": o.rank,
                "full_dim": o.full_dim,
                "zero_eigenvalues": o.zero_eigenvalues,
                "eigen_threshold": o.eigen_threshold,
                "witness": o.witness,
                "witness_residual": o.witness_residual,
            })
        })
        .collect();
    json!({
        "overall": v.overall,
        "feasibility": v.feasibility,
        "failing": v.failing().map(|o| o.subsystem.indices().to_vec()).collect::<Vec<_>>(),
        "per_subsystem": per,
    })
}

pub fn window(label: Value, w: &Window, o: &WindowOutcome) -> Value {
    json!({
        "window": label,
        "axis_set": w.axis_set,
        "size": o.size,
        "rank": o.rank,
        "pass": o.pass,
        "min_kept": o.report.min_kept,
        "max_dropped": o.report.max_dropped,
        "threshold": o.report.threshold,
    })
}

pub fn schmidt(s: &SchmidtDecomposition) -> Value {
    json!({
        "subsystem": s.subsystem.indices(),
        "coeffs": s.coeffs,
        "rank": s.rank,
        "tol_used": s.tol_used,
        "ties": s.ties,
        "left_vectors": s.left_vectors,
        "right_vectors": s.right_vectors,
    })
}

pub fn stages(st: &[StageRecord]) -> Value {
    json!(st)
}

pub fn parse_stages(value: Option<&Value>) -> anyhow::Result<Vec<StageRecord>> {
    let arr = value
        .and_then(Value::as_array)
        .ok_or_else(|| anyhow!("metadata construction.stages must be a list"))?;
    arr.iter()
        .enumerate()
        .map(|(k, s)| {
            let field = |name: &str| -> anyhow::Result<&Value> {
                s.get(name)
                    .ok_or_else(|| anyhow!("metadata construction.stages[{k}].{name} missing"))
            };
            let nat = |name: &str| -> anyhow::Result<usize> {
                field(name)?
                    .as_u64()
                    .map(|n| n as usize)
                    .with_context(|| format!("metadata construction.stages[{k}].{name} must be a natural number"))
            };
            let real = |name: &str| -> anyhow::Result<f64> {
                field(name)?
                    .as_f64()
                    .with_context(|| format!("metadata construction.stages[{k}].{name} must be a number"))
            };
            Ok(StageRecord {
                p: nat("p")?,
                m: nat("m")?,
                p_next: nat("p_next")?,
                epsilon: real("epsilon")?,
                added_mass: real("added_mass")?,
            })
        })
        .collect()
}
