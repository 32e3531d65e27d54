use std::time::{Duration, Instant};

/// Cooperative wall-clock limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn never() -> Self {
        Deadline(None)
    }

    pub fn after_secs(secs: f64) -> Self {
        let secs = if secs.is_finite() { secs.max(0.0) } else { 1e9 };
        Deadline(Some(Instant::now() + Duration::from_secs_f64(secs.min(1e9))))
    }

    pub fn expired(&self) -> bool {
        self.0.is_some_and(|t| Instant::now() >= t)
    }

    /// The earlier of two deadlines.
    pub fn min(self, other: Deadline) -> Deadline {
        match (self.0, other.0) {
            (Some(a), Some(b)) => Deadline(Some(a.min(b))),
            (a, b) => Deadline(a.or(b)),
        }
    }
}

impl Default for Deadline {
    fn default() -> Self {
        Deadline::never()
    }
}
