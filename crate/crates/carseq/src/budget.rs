//! Deterministic work budgets.
//!
//! Solver runs are limited by a tick budget rather than the wall clock: one
//! tick is roughly one search-node expansion or one constructed sequence
//! position. Time limits given on the command line are converted through a
//! fixed calibration constant, so identical inputs always consume identical
//! budgets and produce identical outputs. Reported `wall_seconds` values
//! are ticks divided by the same constant.

/// Calibration constant mapping ticks to nominal seconds.
pub const TICKS_PER_SECOND: f64 = 50_000.0;

/// A consumable tick budget shared by the components of one solver run.
#[derive(Debug, Clone)]
pub struct Budget {
    limit: u64,
    used: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget { limit, used: 0 }
    }

    /// Budget equivalent to `seconds` of nominal solver time.
    pub fn from_seconds(seconds: f64) -> Self {
        let limit = if seconds.is_finite() && seconds >= 0.0 {
            (seconds * TICKS_PER_SECOND).round() as u64
        } else {
            u64::MAX
        };
        Budget::new(limit)
    }

    pub fn unlimited() -> Self {
        Budget::new(u64::MAX)
    }

    /// Consumes up to `n` ticks; returns false once the budget is spent.
    pub fn consume(&mut self, n: u64) -> bool {
        self.used = self.used.saturating_add(n);
        self.used <= self.limit
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.limit
    }

    pub fn remaining(&self) -> u64 {
        self.limit.saturating_sub(self.used)
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Nominal seconds consumed so far.
    pub fn elapsed_seconds(&self) -> f64 {
        self.used as f64 / TICKS_PER_SECOND
    }

    /// Splits off a child budget of at most `n` remaining ticks; merge the
    /// child back with [`Budget::absorb`] after the sub-run finishes.
    pub fn slice(&self, n: u64) -> Budget {
        Budget::new(self.remaining().min(n))
    }

    pub fn absorb(&mut self, child: &Budget) {
        self.used = self.used.saturating_add(child.used().min(child.limit()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consume_tracks_limit() {
        let mut b = Budget::new(10);
        assert!(b.consume(6));
        assert!(b.consume(4));
        assert!(!b.consume(1));
        assert!(b.exhausted());
    }

    #[test]
    fn slices_absorb_back() {
        let mut b = Budget::new(100);
        let mut child = b.slice(30);
        child.consume(25);
        b.absorb(&child);
        assert_eq!(b.used(), 25);
        assert_eq!(b.remaining(), 75);
    }

    #[test]
    fn seconds_round_trip() {
        let b = Budget::from_seconds(2.0);
        assert_eq!(b.limit(), (2.0 * TICKS_PER_SECOND) as u64);
    }
}
