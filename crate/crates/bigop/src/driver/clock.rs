//! Monotonic clocks: the real one, and a settable fake for deterministic
//! runs and tests.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

/// Monotonic nanosecond clock.
pub trait Clock: Send + Sync {
    fn now_ns(&self) -> u64;

    /// Blocks (or advances virtual time) until `deadline_ns`.
    fn sleep_until(&self, deadline_ns: u64);
}

/// Wall clock anchored at construction.
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_ns(&self) -> u64 {
        self.origin.elapsed().as_nanos() as u64
    }

    fn sleep_until(&self, deadline_ns: u64) {
        // coarse sleep, then spin for the tail; thread::sleep alone
        // overshoots by scheduler quanta
        const SPIN_WINDOW_NS: u64 = 150_000;
        loop {
            let now = self.now_ns();
            if now >= deadline_ns {
                return;
            }
            let remaining = deadline_ns - now;
            if remaining > SPIN_WINDOW_NS {
                std::thread::sleep(Duration::from_nanos(remaining - SPIN_WINDOW_NS));
            } else {
                std::hint::spin_loop();
            }
        }
    }
}

/// Deterministic clock: `sleep_until` jumps time forward, and helpers let
/// tests (e.g. stall injectors) advance it from inside backend calls.
pub struct FakeClock {
    now: AtomicU64,
}

impl FakeClock {
    pub fn new() -> Self {
        FakeClock {
            now: AtomicU64::new(0),
        }
    }

    pub fn advance(&self, delta_ns: u64) {
        self.now.fetch_add(delta_ns, Ordering::SeqCst);
    }

    /// Moves time forward to `t_ns` if it is ahead of now (monotone).
    pub fn advance_to(&self, t_ns: u64) {
        self.now.fetch_max(t_ns, Ordering::SeqCst);
    }
}

impl Default for FakeClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for FakeClock {
    fn now_ns(&self) -> u64 {
        self.now.load(Ordering::SeqCst)
    }

    fn sleep_until(&self, deadline_ns: u64) {
        self.advance_to(deadline_ns);
    }
}

/// Which clock drives a run. A fake clock also switches the driver into its
/// deterministic virtual-time executor.
#[derive(Clone)]
pub enum ClockSource {
    System(Arc<SystemClock>),
    Fake(Arc<FakeClock>),
}

impl ClockSource {
    pub fn system() -> Self {
        ClockSource::System(Arc::new(SystemClock::new()))
    }

    pub fn fake() -> (Self, Arc<FakeClock>) {
        let clock = Arc::new(FakeClock::new());
        (ClockSource::Fake(clock.clone()), clock)
    }

    pub fn as_clock(&self) -> &dyn Clock {
        match self {
            ClockSource::System(c) => c.as_ref(),
            ClockSource::Fake(c) => c.as_ref(),
        }
    }
}
