//! Experiment reports: a machine-readable key-value document plus a short
//! human summary.

use std::fmt::Write as _;
use std::time::Duration;

use crate::kv::{fmt_exact, fmt_short, KvDocument};

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Replay key: the sample index fed to `rng_for(seed, sample)`.
    pub sample: u64,
    pub time: Option<f64>,
    pub margin: f64,
    /// Violation size relative to the scale used for the tolerance.
    pub magnitude: f64,
    pub context: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamSpec {
    Fixed { lambda1: f64, lambda2: f64 },
    Grid { points: usize },
    RandomPerSample,
    None,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub name: String,
    pub ns: Vec<usize>,
    pub params: ParamSpec,
    pub seed: u64,
    pub counts: Vec<(String, u64)>,
    pub metrics: Vec<(String, f64)>,
    pub notes: Vec<(String, String)>,
    pub skipped: Vec<(String, u64)>,
    pub violations: Vec<Violation>,
    /// Wall-clock time. Kept out of the machine report so that reports are a
    /// pure function of configuration and seed.
    pub duration: Duration,
    /// Extra files (name, contents), e.g. trajectories.
    pub artifacts: Vec<(String, String)>,
}

impl ExperimentReport {
    pub fn new(name: &str, ns: Vec<usize>, params: ParamSpec, seed: u64) -> Self {
        Self {
            name: name.to_string(),
            ns,
            params,
            seed,
            counts: Vec::new(),
            metrics: Vec::new(),
            notes: Vec::new(),
            skipped: Vec::new(),
            violations: Vec::new(),
            duration: Duration::ZERO,
            artifacts: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&mut self, key: &str, v: u64) {
        self.counts.push((key.to_string(), v));
    }

    pub fn metric(&mut self, key: &str, v: f64) {
        self.metrics.push((key.to_string(), v));
    }

    pub fn note(&mut self, key: &str, v: impl Into<String>) {
        self.notes.push((key.to_string(), v.into()));
    }

    pub fn skip(&mut self, reason: &str, v: u64) {
        match self.skipped.iter_mut().find(|(r, _)| r == reason) {
            Some(e) => e.1 += v,
            None => self.skipped.push((reason.to_string(), v)),
        }
    }

    pub fn get_count(&self, key: &str) -> Option<u64> {
        self.counts.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn get_metric(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn skipped_total(&self) -> u64 {
        self.skipped.iter().map(|(_, v)| v).sum()
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed() {
            "pass"
        } else {
            "fail"
        }
    }

    pub fn to_kv(&self) -> KvDocument {
        let mut doc = KvDocument::new();
        doc.set("", "experiment", self.name.clone());
        doc.set(
            "",
            "n",
            self.ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
        );
        match &self.params {
            ParamSpec::Fixed { lambda1, lambda2 } => {
                doc.set("", "params", "fixed");
                doc.set("", "lambda1", fmt_exact(*lambda1));
                doc.set("", "lambda2", fmt_exact(*lambda2));
            }
            ParamSpec::Grid { points } => {
                doc.set("", "params", "grid");
                doc.set("", "grid_points", points.to_string());
            }
            ParamSpec::RandomPerSample => doc.set("", "params", "random-per-sample"),
            ParamSpec::None => doc.set("", "params", "none"),
        }
        doc.set("", "seed", self.seed.to_string());
        doc.set("", "verdict", self.verdict());
        doc.set("", "violations", self.violations.len().to_string());
        doc.set("", "skipped", self.skipped_total().to_string());
        for (k, v) in &self.counts {
            doc.set("counts", k, v.to_string());
        }
        for (k, v) in &self.metrics {
            doc.set("metrics", k, fmt_exact(*v));
        }
        for (k, v) in &self.skipped {
            doc.set("skipped", k, v.to_string());
        }
        for (k, v) in &self.notes {
            doc.set("notes", k, v.clone());
        }
        for (i, v) in self.violations.iter().enumerate() {
            let s = format!("violation.{i}");
            doc.set(&s, "sample", v.sample.to_string());
            doc.set(&s, "time", v.time.map_or("none".to_string(), fmt_exact));
            doc.set(&s, "margin", fmt_exact(v.margin));
            doc.set(&s, "magnitude", fmt_exact(v.magnitude));
            doc.set(&s, "context", v.context.clone());
        }
        doc
    }

    pub fn render(&self) -> String {
        self.to_kv().render()
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} (n = {:?}, seed = {}): {}",
            self.name,
            self.ns,
            self.seed,
            self.verdict().to_uppercase()
        );
        for (k, v) in &self.counts {
            let _ = writeln!(out, "  {k}: {v}");
        }
        for (k, v) in &self.metrics {
            let _ = writeln!(out, "  {k}: {}", fmt_short(*v));
        }
        if !self.skipped.is_empty() {
            let _ = writeln!(out, "  skipped: {}", self.skipped_total());
            for (k, v) in &self.skipped {
                let _ = writeln!(out, "    {k}: {v}");
            }
        }
        for v in self.violations.iter().take(10) {
            let _ = writeln!(
                out,
                "  violation sample={} t={} margin={} magnitude={} ({})",
                v.sample,
                v.time.map_or("-".to_string(), fmt_short),
                fmt_short(v.margin),
                fmt_short(v.magnitude),
                v.context
            );
        }
        if self.violations.len() > 10 {
            let _ = writeln!(out, "  ... {} more violations", self.violations.len() - 10);
        }
        let _ = writeln!(out, "  wall-clock: {:.3} s", self.duration.as_secs_f64());
        out
    }
}
