//! Acceptance checks live in `tests/acceptance.rs`; this crate only exists so that they run
//! after every other test binary of the workspace.

use std::time::Duration;

/// Result of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Verdict {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<4} [{:>7.1}s] {}: {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.title,
            self.detail
        )
    }
}
