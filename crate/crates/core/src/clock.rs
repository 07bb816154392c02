//! Elapsed-time accounting for budgets.
//!
//! Simulated targets report a modeled execution cost instead of measured
//! time. Summing those costs gives a virtual clock under which budgets,
//! path timestamps and reduction times are pure functions of the inputs.

use std::str::FromStr;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockMode {
    /// Virtual for simulated targets, wall for external ones.
    #[default]
    Auto,
    Wall,
    Virtual,
}

impl ClockMode {
    pub fn resolve(self, target_is_simulated: bool) -> ClockMode {
        match self {
            ClockMode::Auto if target_is_simulated => ClockMode::Virtual,
            ClockMode::Auto => ClockMode::Wall,
            other => other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClockMode::Auto => "auto",
            ClockMode::Wall => "wall",
            ClockMode::Virtual => "virtual",
        }
    }
}

impl FromStr for ClockMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(ClockMode::Auto),
            "wall" => Ok(ClockMode::Wall),
            "virtual" => Ok(ClockMode::Virtual),
            other => Err(format!("unknown clock `{other}` (expected auto, wall or virtual)")),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Clock {
    Wall(Instant),
    Virtual(Duration),
}

impl Clock {
    /// Starts a clock. `mode` must already be resolved; `Auto` falls back to wall.
    pub fn start(mode: ClockMode) -> Self {
        match mode {
            ClockMode::Virtual => Clock::Virtual(Duration::ZERO),
            ClockMode::Wall | ClockMode::Auto => Clock::Wall(Instant::now()),
        }
    }

    pub fn elapsed(&self) -> Duration {
        match self {
            Clock::Wall(start) => start.elapsed(),
            Clock::Virtual(total) => *total,
        }
    }

    /// Records one execution's reported time. No-op on a wall clock.
    pub fn charge(&mut self, wall_time: Duration) {
        if let Clock::Virtual(total) = self {
            *total += wall_time;
        }
    }

    pub fn expired(&self, budget: Duration) -> bool {
        self.elapsed() >= budget
    }
}
