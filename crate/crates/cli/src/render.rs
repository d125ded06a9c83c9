use std::fmt::Write;

use accessgov_core::DecisionOutcome;

/// Operator-facing view of a decision.
pub fn human(o: &DecisionOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}  ({})", o.label, o.reason.as_str());
    let _ = writeln!(s, "request   {}", o.request_id);
    if o.raw_label != o.label {
        let _ = writeln!(s, "raw       {} -> {}", o.raw_label, o.label);
    }
    if let Some(g) = &o.gate_hit {
        let _ = writeln!(s, "gate      {} [{}] {}", g.gate_id, g.citation, g.message);
    }
    if o.controls.is_empty() {
        let _ = writeln!(s, "controls  none");
    } else {
        let _ = writeln!(s, "controls");
        for c in &o.controls {
            let _ = writeln!(s, "  - {}: {}", c.control_id, c.description);
        }
    }
    if !o.stage_trace.is_empty() {
        let _ = writeln!(s, "stages");
        for v in &o.stage_trace {
            let rules = if v.failure_rules.is_empty() {
                String::new()
            } else {
                format!(" [{}]", v.failure_rules.join(", "))
            };
            let _ = writeln!(s, "  {:<20} {}{rules}", v.stage.to_string(), v.status);
        }
    }
    if !o.rationale.cited_policies.is_empty() {
        let _ = writeln!(s, "policies  {}", o.rationale.cited_policies.join(", "));
    }
    if let Some(e) = &o.escalation {
        let _ = writeln!(s, "escalate  {e}");
    }
    let _ = writeln!(s, "latency   {} ms, {} retries", o.latency_ms, o.retry_count);
    let _ = writeln!(s, "\n{}", o.rationale.summary);
    s
}
