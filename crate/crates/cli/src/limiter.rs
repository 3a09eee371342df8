//! Per-host sliding-window rate limiting.

use std::collections::VecDeque;

/// Counts events in a sliding window; admission never lets more than
/// `capacity` events land inside any window of `window_ms` milliseconds.
#[derive(Debug)]
pub struct SlidingWindow {
    capacity: u32,
    window_ms: u64,
    events: VecDeque<u64>,
}

impl SlidingWindow {
    pub fn new(capacity: u32, window_ms: u64) -> Self {
        Self {
            capacity,
            window_ms,
            events: VecDeque::new(),
        }
    }

    /// Admits an event at `now_ms` or returns how long to wait. An event at
    /// time `t` occupies the window until `t + window_ms` inclusive.
    pub fn try_acquire_at(&mut self, now_ms: u64) -> Result<(), u64> {
        while self
            .events
            .front()
            .is_some_and(|&t| t + self.window_ms <= now_ms)
        {
            self.events.pop_front();
        }
        if (self.events.len() as u32) < self.capacity {
            self.events.push_back(now_ms);
            Ok(())
        } else {
            let oldest = *self.events.front().expect("nonempty at capacity");
            Err((oldest + self.window_ms + 1).saturating_sub(now_ms).max(1))
        }
    }

    #[cfg(test)]
    fn count_in_window(&self, now_ms: u64) -> usize {
        self.events
            .iter()
            .filter(|&&t| t + self.window_ms > now_ms && t <= now_ms)
            .count()
    }
}

/// Async wrapper gate for one host.
#[derive(Debug)]
pub struct HostLimiter {
    window: tokio::sync::Mutex<SlidingWindow>,
    zero: tokio::time::Instant,
}

impl HostLimiter {
    /// `rate` requests per 60-second sliding window.
    pub fn per_minute(rate: u32) -> Self {
        Self {
            window: tokio::sync::Mutex::new(SlidingWindow::new(rate, 60_000)),
            zero: tokio::time::Instant::now(),
        }
    }

    pub async fn acquire(&self) {
        loop {
            let now_ms = self.zero.elapsed().as_millis() as u64;
            let wait_ms = {
                let mut window = self.window.lock().await;
                match window.try_acquire_at(now_ms) {
                    Ok(()) => return,
                    Err(wait) => wait,
                }
            };
            tokio::time::sleep(std::time::Duration::from_millis(wait_ms)).await;
        }
    }
}
