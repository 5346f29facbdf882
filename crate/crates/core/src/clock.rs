use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

/// Milliseconds on the server's authoritative clock.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

/// Real elapsed time, starting from a chosen offset.
#[derive(Debug, Clone)]
pub struct WallClock {
    origin: Instant,
    offset_ms: u64,
}

impl WallClock {
    pub fn new() -> Self {
        Self::starting_at(0)
    }

    /// Reads `offset_ms` now and advances with real time.
    pub fn starting_at(offset_ms: u64) -> Self {
        Self {
            origin: Instant::now(),
            offset_ms,
        }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now_ms(&self) -> u64 {
        self.offset_ms + self.origin.elapsed().as_millis() as u64
    }
}

/// A clock that only moves when told to. Clones share the same time.
#[derive(Debug, Clone, Default)]
pub struct ManualClock(Arc<AtomicU64>);

impl ManualClock {
    pub fn new(start_ms: u64) -> Self {
        Self(Arc::new(AtomicU64::new(start_ms)))
    }

    pub fn set(&self, ms: u64) {
        self.0.store(ms, Ordering::SeqCst);
    }

    pub fn advance_ms(&self, ms: u64) -> u64 {
        self.0.fetch_add(ms, Ordering::SeqCst) + ms
    }

    pub fn advance_secs(&self, secs: u64) -> u64 {
        self.advance_ms(secs * 1000)
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

/// How a registry gives each tournament its clock.
#[derive(Debug, Clone)]
pub enum ClockSource {
    /// Real time; each tournament's clock continues from its last record.
    Wall,
    /// One shared manual clock for every tournament.
    Manual(ManualClock),
}

impl ClockSource {
    pub fn clock_for(&self, resume_at: u64) -> Arc<dyn Clock> {
        match self {
            ClockSource::Wall => Arc::new(WallClock::starting_at(resume_at)),
            ClockSource::Manual(clock) => Arc::new(clock.clone()),
        }
    }
}
