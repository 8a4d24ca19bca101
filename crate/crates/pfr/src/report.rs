//! Machine-readable run reports for the CLI.
//!
//! Two renderings of the same data: a text form and a JSON-lines form, both
//! opening with a schema line. Field order is fixed and floats print with
//! shortest round-trip formatting, so identical inputs under the same seed
//! and configuration produce byte-identical reports. Wall-clock timing goes
//! to stderr, never into the report.

use serde::Serialize;

use crate::tau::ConditionCheck;

pub const SCHEMA: &str = "pfr-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Stall,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Stall => "STALL",
        }
    }

    /// Process exit status: 0 only on pass.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Stall => 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub command: String,
    pub inputs_digest: String,
    pub config: Vec<(String, String)>,
    pub metrics: Vec<(String, String)>,
    pub checks: Vec<ConditionCheck>,
    pub outcome: Outcome,
}

impl RunReport {
    pub fn new(command: impl Into<String>, inputs_digest: impl Into<String>) -> Self {
        RunReport {
            schema: SCHEMA,
            command: command.into(),
            inputs_digest: inputs_digest.into(),
            config: Vec::new(),
            metrics: Vec::new(),
            checks: Vec::new(),
            outcome: Outcome::Pass,
        }
    }

    pub fn config(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.push((key.to_string(), value.to_string()));
        self
    }

    pub fn metric(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.metrics.push((key.to_string(), value.to_string()));
        self
    }

    pub fn check(&mut self, check: ConditionCheck) -> &mut Self {
        if !check.pass() && self.outcome == Outcome::Pass {
            self.outcome = Outcome::Fail;
        }
        self.checks.push(check);
        self
    }

    pub fn checks(&mut self, checks: impl IntoIterator<Item = ConditionCheck>) -> &mut Self {
        for c in checks {
            self.check(c);
        }
        self
    }

    pub fn set_outcome(&mut self, outcome: Outcome) -> &mut Self {
        self.outcome = outcome;
        self
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {SCHEMA}\n"));
        out.push_str(&format!("command: {}\n", self.command));
        out.push_str(&format!("inputs: {}\n", self.inputs_digest));
        let config = self
            .config
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!("config: {config}\n"));
        for c in &self.checks {
            out.push_str(&format!(
                "check {name}: instances={n} max_violation={v} tolerance={t} {label}\n",
                name = c.name,
                n = c.instances,
                v = c.max_violation,
                t = c.tolerance,
                label = if c.pass() { "PASS" } else { "FAIL" },
            ));
        }
        for (k, v) in &self.metrics {
            out.push_str(&format!("metric {k}: {v}\n"));
        }
        out.push_str(&format!("outcome: {}\n", self.outcome.label()));
        out
    }

    pub fn to_json_lines(&self) -> String {
        #[derive(Serialize)]
        struct SchemaLine<'a> {
            schema: &'a str,
        }
        #[derive(Serialize)]
        struct HeadLine<'a> {
            command: &'a str,
            inputs_digest: &'a str,
            config: &'a [(String, String)],
        }
        #[derive(Serialize)]
        struct CheckLine<'a> {
            check: &'a str,
            instances: usize,
            max_violation: f64,
            tolerance: f64,
            pass: bool,
        }
        #[derive(Serialize)]
        struct TailLine<'a> {
            metrics: &'a [(String, String)],
            outcome: Outcome,
        }

        let mut out = String::new();
        let mut push = |v: String| {
            out.push_str(&v);
            out.push('\n');
        };
        push(serde_json::to_string(&SchemaLine { schema: SCHEMA }).expect("serializes"));
        push(
            serde_json::to_string(&HeadLine {
                command: &self.command,
                inputs_digest: &self.inputs_digest,
                config: &self.config,
            })
            .expect("serializes"),
        );
        for c in &self.checks {
            push(
                serde_json::to_string(&CheckLine {
                    check: &c.name,
                    instances: c.instances,
                    max_violation: c.max_violation,
                    tolerance: c.tolerance,
                    pass: c.pass(),
                })
                .expect("serializes"),
            );
        }
        push(
            serde_json::to_string(&TailLine {
                metrics: &self.metrics,
                outcome: self.outcome,
            })
            .expect("serializes"),
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_check_flips_outcome() {
        let mut r = RunReport::new("verify", "digest");
        r.check(ConditionCheck {
            name: "ok".into(),
            instances: 3,
            max_violation: 0.0,
            tolerance: 1e-9,
        });
        assert_eq!(r.outcome, Outcome::Pass);
        r.check(ConditionCheck {
            name: "bad".into(),
            instances: 3,
            max_violation: 1.0,
            tolerance: 1e-9,
        });
        assert_eq!(r.outcome, Outcome::Fail);
        assert_eq!(r.outcome.exit_code(), 1);
    }

    #[test]
    fn renderings_are_deterministic() {
        let mut r = RunReport::new("cover", "abc123");
        r.config("n", 4).metric("k", 1.5);
        assert_eq!(r.to_text(), r.to_text());
        assert_eq!(r.to_json_lines(), r.to_json_lines());
        assert!(r.to_text().starts_with("# pfr-report/1\n"));
        assert!(r.to_json_lines().starts_with("{\"schema\":\"pfr-report/1\"}\n"));
    }
}
