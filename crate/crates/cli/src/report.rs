use std::io::Write;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    pub details: Value,
}

impl Check {
    pub fn new(id: impl Into<String>, ok: bool, details: impl Serialize) -> Self {
        Check { id: id.into(), status: Status::from_bool(ok), witness: None, details: to_value(details) }
    }

    pub fn with_witness(mut self, w: impl Serialize) -> Self {
        self.witness = Some(to_value(w));
        self
    }
}

pub fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub pass: bool,
    pub checks: usize,
    pub failed: usize,
}

/// Wall-clock fields; everything outside this object is reproducible.
#[derive(Debug, Serialize)]
pub struct Volatile {
    pub started: u64,
    pub elapsed_ms: u128,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub checks: Vec<Check>,
    pub summary: Summary,
    pub volatile: Volatile,
}

pub struct Clock {
    started: u64,
    t0: Instant,
}

impl Clock {
    pub fn start() -> Self {
        let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Clock { started, t0: Instant::now() }
    }
}

impl Report {
    pub fn new(command: String, config: Value, checks: Vec<Check>, clock: &Clock) -> Self {
        let failed = checks.iter().filter(|c| c.status == Status::Fail).count();
        Report {
            command,
            config,
            summary: Summary { pass: failed == 0, checks: checks.len(), failed },
            checks,
            volatile: Volatile { started: clock.started, elapsed_ms: clock.t0.elapsed().as_millis() },
        }
    }

    pub fn write_json(&self, out: &mut dyn Write) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut *out, self)?;
        writeln!(out)
    }

    /// One row per check; structured cells are JSON encoded.
    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["command", "id", "status", "witness", "details"])?;
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
            };
            let witness = c.witness.as_ref().map(Value::to_string).unwrap_or_default();
            w.write_record([self.command.as_str(), &c.id, status, &witness, &c.details.to_string()])?;
        }
        w.flush()
    }
}
