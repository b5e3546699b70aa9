//! Check reports shared by the checkers and the verifier.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    /// CLI exit status: 0 pass, 1 fail, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        }
    }

    /// Fail dominates inconclusive, which dominates pass.
    pub fn worst(items: impl IntoIterator<Item = Verdict>) -> Verdict {
        items.into_iter().max().unwrap_or(Verdict::Pass)
    }
}

/// One evaluated probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub radius: f64,
    pub direction: usize,
    pub x: Vec<f64>,
    /// What was estimated, e.g. `sup|q|` or `ball_mass(r=1)`.
    pub quantity: String,
    pub estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ProbeRecord {
    pub fn new(
        radius: f64,
        direction: usize,
        x: &[f64],
        quantity: impl Into<String>,
        estimate: f64,
    ) -> Self {
        ProbeRecord {
            radius,
            direction,
            x: x.to_vec(),
            quantity: quantity.into(),
            estimate,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub verdict: Verdict,
    pub probes: Vec<ProbeRecord>,
    /// Slope of log(estimate) against log(radius) beyond the first quartile.
    pub trend: Option<f64>,
    /// Max estimate over probes beyond the first quartile of radii.
    pub fitted_constant: Option<f64>,
    /// Max estimate over all probes.
    pub global_constant: Option<f64>,
    /// Index into `probes` of the worst offender.
    pub worst: Option<usize>,
    pub notes: Vec<String>,
    pub sub_reports: Vec<CheckReport>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            verdict: Verdict::Pass,
            probes: Vec::new(),
            trend: None,
            fitted_constant: None,
            global_constant: None,
            worst: None,
            notes: Vec::new(),
            sub_reports: Vec::new(),
        }
    }

    /// A report whose verdict is the worst of its parts.
    pub fn combined(name: impl Into<String>, parts: Vec<CheckReport>) -> Self {
        let mut r = CheckReport::new(name);
        r.verdict = Verdict::worst(parts.iter().map(|p| p.verdict));
        r.sub_reports = parts;
        r
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    pub fn worst_probe(&self) -> Option<&ProbeRecord> {
        self.worst.and_then(|i| self.probes.get(i))
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Line-oriented summary, sub-reports indented.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        self.write_summary(&mut out, 0);
        out
    }

    fn write_summary(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        let _ = write!(out, "{pad}{}: {}", self.name, self.verdict.as_str());
        if let Some(t) = self.trend {
            let _ = write!(out, " slope={t:.4}");
        }
        if let Some(c) = self.fitted_constant {
            let _ = write!(out, " c={c:.6e}");
        }
        if let Some(c) = self.global_constant {
            let _ = write!(out, " c_global={c:.6e}");
        }
        if let Some(p) = self.worst_probe() {
            let _ = write!(
                out,
                " worst=[{} at |x|={:.4e} x={:?}: {:.6e}]",
                p.quantity, p.radius, p.x, p.estimate
            );
        }
        out.push('\n');
        for n in &self.notes {
            let _ = writeln!(out, "{pad}  note: {n}");
        }
        for s in &self.sub_reports {
            s.write_summary(out, depth + 1);
        }
    }

    /// All probes of this report and its sub-reports, tagged with the report
    /// name.
    pub fn flat_records(&self) -> Vec<(String, ProbeRecord)> {
        let mut v: Vec<(String, ProbeRecord)> = self
            .probes
            .iter()
            .map(|p| (self.name.clone(), p.clone()))
            .collect();
        for s in &self.sub_reports {
            v.extend(s.flat_records());
        }
        v
    }
}
