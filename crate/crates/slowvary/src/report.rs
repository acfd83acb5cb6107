//! Model reports: a deterministic text form and a JSON tree.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A labelled canonical expression.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub key: String,
    pub value: String,
}

impl Entry {
    pub fn new(key: impl Into<String>, value: impl ToString) -> Self {
        Entry { key: key.into(), value: value.to_string() }
    }
}

/// The result of a construction, ready for printing or simulation.
///
/// `evolution` holds the autonomous right-hand side of each amplitude equation
/// with `x`-derivatives written `c_x`, `c_xx`, …; `coupling_error` holds the
/// remaining history and coupling terms of the same equation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelReport {
    pub problem: String,
    pub method: String,
    pub order: u32,
    pub grading: String,
    pub version: String,
    pub params: Vec<Entry>,
    pub amplitudes: Vec<String>,
    pub coefficients: Vec<Entry>,
    pub manifold: Vec<Entry>,
    pub evolution: Vec<Entry>,
    pub coupling_error: Vec<Entry>,
    pub transient_tag: String,
    pub notes: Vec<String>,
    pub log: Vec<String>,
}

impl ModelReport {
    pub fn new(problem: &str, method: &str, order: u32) -> Self {
        ModelReport {
            problem: problem.to_string(),
            method: method.to_string(),
            order,
            version: env!("CARGO_PKG_VERSION").to_string(),
            transient_tag: "O(e^{-gamma*t})".to_string(),
            ..Default::default()
        }
    }

    pub fn coefficient(&self, key: &str) -> Option<&str> {
        find(&self.coefficients, key)
    }

    pub fn evolution_of(&self, amp: &str) -> Option<&str> {
        find(&self.evolution, amp)
    }

    pub fn manifold_of(&self, key: &str) -> Option<&str> {
        find(&self.manifold, key)
    }

    pub fn coupling_of(&self, amp: &str) -> Option<&str> {
        find(&self.coupling_error, amp)
    }

    /// The full right-hand side of `amp`'s equation, autonomous part first.
    pub fn equation(&self, amp: &str) -> Option<String> {
        let auto = self.evolution_of(amp)?;
        Some(match self.coupling_of(amp) {
            None | Some("0") => auto.to_string(),
            Some(c) if auto == "0" => c.to_string(),
            Some(c) => {
                if let Some(rest) = c.strip_prefix('-') {
                    format!("{auto} - {rest}")
                } else {
                    format!("{auto} + {c}")
                }
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Name of the `n`-th `x`-derivative of an amplitude: `c`, `c_x`, `c_xx`, …
pub fn x_derivative(amp: &str, n: u32) -> String {
    if n == 0 {
        amp.to_string()
    } else {
        format!("{amp}_{}", "x".repeat(n as usize))
    }
}

fn find<'a>(entries: &'a [Entry], key: &str) -> Option<&'a str> {
    entries.iter().find(|e| e.key == key).map(|e| e.value.as_str())
}

fn section(f: &mut fmt::Formatter<'_>, title: &str, entries: &[Entry]) -> fmt::Result {
    writeln!(f, "{title}")?;
    if entries.is_empty() {
        writeln!(f, "  (none)")?;
    }
    for e in entries {
        writeln!(f, "  {} = {}", e.key, e.value)?;
    }
    Ok(())
}

impl fmt::Display for ModelReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "PROBLEM {}", self.problem)?;
        writeln!(f, "  method = {}", self.method)?;
        writeln!(f, "  order = {}", self.order)?;
        if !self.grading.is_empty() {
            writeln!(f, "  grading = {}", self.grading)?;
        }
        writeln!(f, "  version = {}", self.version)?;
        for p in &self.params {
            writeln!(f, "  param {} = {}", p.key, p.value)?;
        }
        section(f, "COEFFICIENTS", &self.coefficients)?;
        section(f, "MANIFOLD", &self.manifold)?;
        writeln!(f, "EVOLUTION")?;
        for a in &self.amplitudes {
            if let Some(eq) = self.equation(a) {
                writeln!(f, "  {a}_t = {eq}")?;
            }
        }
        section(f, "COUPLING_ERROR", &self.coupling_error)?;
        writeln!(f, "TRANSIENT_TAG")?;
        writeln!(f, "  {}", self.transient_tag)?;
        if !self.notes.is_empty() {
            writeln!(f, "NOTES")?;
            for n in &self.notes {
                writeln!(f, "  {n}")?;
            }
        }
        if !self.log.is_empty() {
            writeln!(f, "LOG")?;
            for l in &self.log {
                writeln!(f, "  {l}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_equation() {
        let mut r = ModelReport::new("p", "linear", 2);
        r.amplitudes.push("c".into());
        r.evolution.push(Entry::new("c", "c_xx"));
        r.coupling_error.push(Entry::new("c", "-3*Z[d2x;-1]"));
        assert_eq!(r.equation("c").unwrap(), "c_xx - 3*Z[d2x;-1]");
        let back = ModelReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_string().contains("  c_t = c_xx - 3*Z[d2x;-1]\n"));
    }
}
