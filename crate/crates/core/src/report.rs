//! Violation reporting shared by the model checker and solution validator.

use std::fmt;

/// One violated requirement, labeled by its source (constraint label or
/// validator check) with the amount by which it is off.
#[derive(Debug, Clone)]
pub struct Violation {
    pub label: String,
    pub amount: f64,
    pub detail: String,
}

/// Outcome of a feasibility check; empty means valid.
#[derive(Debug, Clone, Default)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn push(&mut self, label: impl Into<String>, amount: f64, detail: impl Into<String>) {
        self.violations.push(Violation { label: label.into(), amount, detail: detail.into() });
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.violations.iter().map(|v| v.label.as_str())
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "ok");
        }
        for v in &self.violations {
            writeln!(f, "{}: {} (by {:.6})", v.label, v.detail, v.amount)?;
        }
        Ok(())
    }
}
