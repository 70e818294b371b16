//! Machine-readable verification reports.

use serde_json::{json, Map, Value};

use crate::interp::state_to_json;
use crate::solver::Verdict;
use crate::verify::{ProcedureReport, Report, Status, VcOutcome};

pub const REPORT_VERSION: u32 = 1;

fn vc_json(o: &VcOutcome) -> Value {
    let mut m = Map::new();
    m.insert("id".into(), json!(o.vc.id));
    m.insert("rule".into(), json!(o.vc.rule));
    m.insert("span".into(), json!(o.vc.span.to_string()));
    match &o.verdict {
        None => {
            m.insert("verdict".into(), json!("trusted"));
        }
        Some(v) => {
            m.insert("verdict".into(), json!(v.label()));
            match v {
                Verdict::Invalid { counterexample } => {
                    m.insert("counterexample".into(), state_to_json(counterexample));
                }
                Verdict::Unknown { reason } => {
                    m.insert("reason".into(), json!(reason));
                }
                Verdict::BoundedValid {
                    int_bound,
                    len_bound,
                } => {
                    m.insert("bounds".into(), json!({"int": int_bound, "len": len_bound}));
                }
                Verdict::Valid => {}
            }
        }
    }
    Value::Object(m)
}

fn procedure_json(p: &ProcedureReport) -> Value {
    json!({
        "procedure": p.procedure,
        "status": match p.status { Status::Pass => "pass", Status::Fail => "fail" },
        "vcs": p.vcs.iter().map(vc_json).collect::<Vec<_>>(),
        "erasable": p.erasable,
    })
}

/// `{version, file, procedures: [...]}`; contains nothing that varies
/// between runs on the same input.
pub fn report_json(report: &Report, file: &str) -> Value {
    json!({
        "version": REPORT_VERSION,
        "file": file,
        "procedures": report.procedures.iter().map(procedure_json).collect::<Vec<_>>(),
    })
}

/// Human-readable summary, one line per procedure plus failing VCs.
pub fn report_text(report: &Report) -> String {
    let mut out = String::new();
    for p in &report.procedures {
        let checked = p.vcs.iter().filter(|o| o.verdict.is_some()).count();
        let trusted = p.vcs.len() - checked;
        out.push_str(&format!(
            "{}: {} ({} VCs checked, {} trusted){}\n",
            p.procedure,
            match p.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
            },
            checked,
            trusted,
            if p.bounded && p.status == Status::Pass {
                " [within oracle bounds]"
            } else {
                ""
            }
        ));
        for o in p.failing() {
            let v = o.verdict.as_ref().expect("failing VCs were checked");
            out.push_str(&format!("  {} {} at {}: {}", o.vc.id, o.vc.rule, o.vc.span, v.label()));
            match v {
                Verdict::Invalid { counterexample } => {
                    out.push_str(&format!(" {}", state_to_json(counterexample)));
                }
                Verdict::Unknown { reason } => out.push_str(&format!(" ({reason})")),
                _ => {}
            }
            out.push('\n');
        }
    }
    out
}
