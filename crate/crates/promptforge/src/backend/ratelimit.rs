//! Sliding-window request throttle for the remote backend.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Time source. Injectable so throttle behaviour is testable without
/// wall-clock sleeps; `now` is monotonic time since an arbitrary origin.
pub trait Clock: Send + Sync {
    fn now(&self) -> Duration;
    fn sleep(&self, duration: Duration);
}

impl<C: Clock + ?Sized> Clock for std::sync::Arc<C> {
    fn now(&self) -> Duration {
        (**self).now()
    }

    fn sleep(&self, duration: Duration) {
        (**self).sleep(duration)
    }
}

/// Real time: `Instant` anchored at construction, `thread::sleep`.
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
        SystemClock::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Allows at most `max_per_second` acquisitions in any trailing one-second
/// window. Callers block in `acquire` until a slot frees up; the internal
/// lock is held across the wait, which serializes concurrent callers by
/// design.
pub struct RateLimiter<C> {
    max_per_second: u32,
    clock: C,
    history: Mutex<VecDeque<Duration>>,
}

const WINDOW: Duration = Duration::from_secs(1);

impl<C: Clock> RateLimiter<C> {
    /// `max_per_second` must be at least 1; config validation upstream
    /// guarantees it.
    pub fn new(max_per_second: u32, clock: C) -> Self {
        assert!(max_per_second >= 1, "rate limit must be positive");
        RateLimiter {
            max_per_second,
            clock,
            history: Mutex::new(VecDeque::new()),
        }
    }

    /// Block until a request slot is available, then consume it.
    pub fn acquire(&self) {
        let mut history = self.history.lock().expect("rate limiter lock");
        loop {
            let now = self.clock.now();
            while let Some(&front) = history.front() {
                if front + WINDOW <= now {
                    history.pop_front();
                } else {
                    break;
                }
            }
            if history.len() < self.max_per_second as usize {
                history.push_back(now);
                return;
            }
            let front = *history.front().expect("non-empty at capacity");
            self.clock.sleep(front + WINDOW - now);
        }
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use std::sync::atomic::{AtomicU64, Ordering};
    use std::sync::Arc;

    /// Test clock: `sleep` advances virtual time instantly.
    #[derive(Clone, Default)]
    pub struct VirtualClock {
        nanos: Arc<AtomicU64>,
    }

    impl VirtualClock {
        pub fn new() -> Self {
            VirtualClock::default()
        }

        pub fn advance(&self, duration: Duration) {
            self.nanos
                .fetch_add(duration.as_nanos() as u64, Ordering::SeqCst);
        }
    }

    impl Clock for VirtualClock {
        fn now(&self) -> Duration {
            Duration::from_nanos(self.nanos.load(Ordering::SeqCst))
        }

        fn sleep(&self, duration: Duration) {
            self.advance(duration);
        }
    }
}
