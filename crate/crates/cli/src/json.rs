//! JSON trees for compiled schemes and run reports, plus the trace CSV.
//!
//! All objects are built with sorted keys (serde_json's default map), so a
//! given input always serializes to identical bytes. Rationals appear as
//! `{"exact": "p/q", "approx": <4-decimal float>}`; the float is derived
//! from the rounded decimal string and is display-only.

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};

use cdc_core::compile::{compile, AssignmentKind, CompiledScheme, FunctionAssignment};
use cdc_core::pda::{parse_pda, PdaEntry};
use cdc_core::rational::{dec4, format_rational, Rational};
use cdc_core::sim::{Dataset, MessageKind, RunReport, SimParams, TrafficLog};

pub const SCHEME_FORMAT: &str = "cdc-scheme/1";
pub const REPORT_FORMAT: &str = "cdc-run-report/1";

/// `{"exact": "p/q", "approx": 0.1234}`.
pub fn rational_value(x: &Rational) -> Value {
    let approx: f64 = dec4(x).parse().expect("decimal string parses");
    json!({ "exact": format_rational(x), "approx": approx })
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn pda_rows(scheme: &CompiledScheme) -> Vec<String> {
    let pda = scheme.pda();
    (0..pda.num_files())
        .map(|row| {
            pda.row(row)
                .iter()
                .map(PdaEntry::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// Full scheme description: placement, assignment, and the per-round
/// multicast plan down to individual XOR terms.
pub fn scheme_to_json(scheme: &CompiledScheme) -> Value {
    let pda = scheme.pda();
    let assignment = scheme.assignment();
    let loads = scheme.predicted_loads();

    let mode = match assignment.kind() {
        AssignmentKind::Window { replication } => json!({
            "mode": "window",
            "replication": replication,
        }),
        AssignmentKind::Custom => json!({
            "mode": "custom",
            "functions_per_node": (0..scheme.num_nodes())
                .map(|node| assignment.functions_of(node)[0])
                .collect::<Vec<_>>(),
        }),
    };

    let rounds: Vec<Value> = scheme
        .rounds()
        .iter()
        .map(|round| {
            let groups: Vec<Value> = round
                .groups
                .iter()
                .map(|group| {
                    let members: Vec<Value> = group
                        .members
                        .iter()
                        .map(|m| json!({ "row": m.row, "col": m.col, "function": m.function }))
                        .collect();
                    let messages: Vec<Value> = (0..group.members.len())
                        .map(|position| {
                            let terms: Vec<Value> = group
                                .message_terms(position)
                                .iter()
                                .map(|t| {
                                    json!({
                                        "function": t.function,
                                        "file": t.file,
                                        "segment": t.segment,
                                    })
                                })
                                .collect();
                            json!({
                                "transmitter": group.members[position].col,
                                "xor": terms,
                            })
                        })
                        .collect();
                    json!({ "label": group.label, "members": members, "messages": messages })
                })
                .collect();
            json!({ "functions": round.functions, "groups": groups })
        })
        .collect();

    let mut predicted = serde_json::Map::new();
    predicted.insert(
        "computation".into(),
        rational_value(&loads.computation),
    );
    if let Some(communication) = &loads.communication {
        predicted.insert("communication".into(), rational_value(communication));
    }
    predicted.insert(
        "total_coded_units".into(),
        rational_value(&loads.total_coded_units),
    );
    predicted.insert("exceeds_unity".into(), json!(loads.exceeds_unity));

    json!({
        "format": SCHEME_FORMAT,
        "pda": {
            "nodes": pda.num_nodes(),
            "files": pda.num_files(),
            "stars_per_column": pda.stars_per_column(),
            "labels": pda.num_labels(),
            "rows": pda_rows(scheme),
        },
        "regularity": scheme.regularity(),
        "assignment": mode,
        "num_functions": scheme.num_functions(),
        "num_rounds": scheme.rounds().len(),
        "uncoded_fallback": scheme.uncoded_fallback(),
        "placement": scheme.placement(),
        "predicted": Value::Object(predicted),
        "rounds": rounds,
    })
}

fn field<'a>(value: &'a Value, key: &str) -> Result<&'a Value> {
    value
        .get(key)
        .ok_or_else(|| anyhow!("scheme document is missing `{key}`"))
}

fn as_usize(value: &Value, key: &str) -> Result<usize> {
    field(value, key)?
        .as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| anyhow!("`{key}` is not an unsigned integer"))
}

/// Rebuild a compiled scheme from its JSON description.
///
/// The PDA, assignment mode, and fallback flag are authoritative; the
/// derived sections are recomputed and cross-checked where cheap.
pub fn scheme_from_json(text: &str) -> Result<CompiledScheme> {
    let value: Value = serde_json::from_str(text).context("scheme document is not valid JSON")?;
    let format = field(&value, "format")?.as_str().unwrap_or_default();
    if format != SCHEME_FORMAT {
        bail!("unsupported scheme format `{format}`, expected `{SCHEME_FORMAT}`");
    }

    let pda_value = field(&value, "pda")?;
    let rows = field(pda_value, "rows")?
        .as_array()
        .ok_or_else(|| anyhow!("`pda.rows` is not an array"))?;
    let mut text = format!(
        "{} {} {} {}\n",
        as_usize(pda_value, "nodes")?,
        as_usize(pda_value, "files")?,
        as_usize(pda_value, "stars_per_column")?,
        as_usize(pda_value, "labels")?,
    );
    for row in rows {
        text.push_str(
            row.as_str()
                .ok_or_else(|| anyhow!("`pda.rows` entries must be strings"))?,
        );
        text.push('\n');
    }
    let pda = parse_pda(&text).context("embedded PDA is malformed")?;

    let assignment_value = field(&value, "assignment")?;
    let assignment = match field(assignment_value, "mode")?.as_str() {
        Some("window") => {
            FunctionAssignment::window(pda.num_nodes(), as_usize(assignment_value, "replication")?)?
        }
        Some("custom") => {
            let functions: Vec<usize> = field(assignment_value, "functions_per_node")?
                .as_array()
                .ok_or_else(|| anyhow!("`functions_per_node` is not an array"))?
                .iter()
                .map(|x| {
                    x.as_u64()
                        .map(|v| v as usize)
                        .ok_or_else(|| anyhow!("function ids must be unsigned integers"))
                })
                .collect::<Result<_>>()?;
            FunctionAssignment::custom(&functions)?
        }
        other => bail!("unknown assignment mode {other:?}"),
    };

    let fallback = field(&value, "uncoded_fallback")?
        .as_bool()
        .ok_or_else(|| anyhow!("`uncoded_fallback` is not a boolean"))?;
    let scheme = compile(&pda, assignment, fallback)?;

    let declared_regularity = as_usize(&value, "regularity")?;
    if declared_regularity != scheme.regularity() {
        bail!(
            "document declares regularity {declared_regularity} but the PDA is {}-regular",
            scheme.regularity()
        );
    }
    let declared_functions = as_usize(&value, "num_functions")?;
    if declared_functions != scheme.num_functions() {
        bail!(
            "document declares {declared_functions} functions but the assignment yields {}",
            scheme.num_functions()
        );
    }
    Ok(scheme)
}

/// Run-report JSON tree.
pub fn report_to_json(
    scheme: &CompiledScheme,
    dataset: &Dataset,
    params: &SimParams,
    report: &RunReport,
) -> Value {
    let failures: Vec<Value> = report
        .decode_success
        .iter()
        .enumerate()
        .flat_map(|(node, rounds)| {
            rounds
                .iter()
                .enumerate()
                .filter(|(_, ok)| !**ok)
                .map(move |(round, _)| json!({ "node": node, "round": round }))
        })
        .collect();
    let outputs: Vec<Value> = report
        .outputs
        .iter()
        .enumerate()
        .flat_map(|(node, per_round)| {
            per_round.iter().enumerate().map(move |(round, output)| {
                json!({
                    "node": node,
                    "round": round,
                    "function": output.function,
                    "digest": hex(&output.bytes),
                })
            })
        })
        .collect();

    json!({
        "format": REPORT_FORMAT,
        "scheme": {
            "nodes": scheme.num_nodes(),
            "files": scheme.num_files(),
            "functions": scheme.num_functions(),
            "rounds": scheme.rounds().len(),
            "regularity": scheme.regularity(),
            "uncoded_fallback": scheme.uncoded_fallback(),
        },
        "dataset": {
            "files": dataset.num_files(),
            "bits_per_file": dataset.bits_per_file(),
            "seed": dataset.seed(),
        },
        "params": { "iva_bits": params.iva_bits, "output_bits": params.output_bits },
        "measured": {
            "computation": rational_value(&report.measured_computation),
            "communication": rational_value(&report.measured_communication),
            "total_iva_units": rational_value(&report.total_iva_units),
            "messages": report.total_messages,
            "bits": report.total_bits,
        },
        "decode": {
            "all_success": report.all_decodes_succeeded(),
            "failures": failures,
        },
        "outputs": outputs,
    })
}

/// Parse and structurally check a run-report document, returning the tree.
pub fn report_from_json(text: &str) -> Result<Value> {
    let value: Value = serde_json::from_str(text).context("report is not valid JSON")?;
    let format = field(&value, "format")?.as_str().unwrap_or_default();
    if format != REPORT_FORMAT {
        bail!("unsupported report format `{format}`, expected `{REPORT_FORMAT}`");
    }
    for key in ["scheme", "dataset", "params", "measured", "decode", "outputs"] {
        field(&value, key)?;
    }
    Ok(value)
}

/// Per-message trace: `round,label,transmitter,bits,recipients`, recipients
/// separated by `;`. Uncoded fallback messages carry `-` in the label
/// column.
pub fn trace_csv(log: &TrafficLog) -> String {
    let mut out = String::from("round,label,transmitter,bits,recipients\n");
    for record in log.records() {
        let label = match &record.kind {
            MessageKind::Coded { label } => label.to_string(),
            MessageKind::Uncoded { .. } => "-".to_string(),
        };
        let recipients: Vec<String> = record.recipients.iter().map(usize::to_string).collect();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            record.round,
            label,
            record.transmitter,
            record.bits,
            recipients.join(";")
        ));
    }
    out
}
