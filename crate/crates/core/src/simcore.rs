//! Deterministic discrete-event core: virtual clock, event queue, seeded substreams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Resolution used when comparing simulation times: two instants closer than
/// this are the same instant for ordering purposes.
pub const TIME_QUANTUM: f64 = 1e-9;

/// Quantize a time in seconds to the comparison grid.
pub fn quantize(time: f64) -> i64 {
    (time / TIME_QUANTUM).round() as i64
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("event scheduled in the past: t={time} < now={now}")]
    PastEvent { time: f64, now: f64 },
    #[error("simulation horizon must be positive, got {0}")]
    BadHorizon(f64),
    #[error("{0}")]
    Invalid(String),
}

/// Event payloads. They carry indices and ids rather than module data so the
/// queue stays independent of the modules it drives.
#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// A granule reaches the acquisition server. Index into the generated list.
    GranuleArrival { granule: usize },
    /// A transfer session finished a latency phase and joins its link.
    TransferPhase { transfer: u64 },
    /// A transfer session finished the data phase of its current file.
    /// `epoch` guards against stale completions after a reshare.
    TransferSegment { transfer: u64, epoch: u64, last: bool },
    /// Periodic node statistics tick.
    MetricPeriod,
    /// A data request is issued. Index into the workload list.
    RequestArrival { request: usize },
}

/// A scheduled event. Ordering key is (quantized time, insertion sequence).
#[derive(Debug, Clone)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl Event {
    fn key(&self) -> (i64, u64) {
        (quantize(self.time), self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

/// Event queue with the virtual clock folded in. Popping an event advances
/// the clock to the event's time; within a handler `now()` is constant.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: std::collections::BinaryHeap<std::cmp::Reverse<Event>>,
    next_seq: u64,
    now: f64,
    executed: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current simulation time in seconds.
    pub fn now(&self) -> f64 {
        self.now
    }

    /// Number of events dequeued so far.
    pub fn executed(&self) -> u64 {
        self.executed
    }

    /// Number of events still queued.
    pub fn pending(&self) -> usize {
        self.heap.len()
    }

    /// Enqueue an event at an absolute time. Scheduling before `now()` is a
    /// consistency error.
    pub fn schedule_at(&mut self, time: f64, kind: EventKind) -> Result<(), SimError> {
        if quantize(time) < quantize(self.now) {
            return Err(SimError::PastEvent {
                time,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(std::cmp::Reverse(Event { time, seq, kind }));
        Ok(())
    }

    /// Enqueue an event `delay` seconds from now (`delay` must be >= 0).
    pub fn schedule_in(&mut self, delay: f64, kind: EventKind) {
        self.schedule_at(self.now + delay.max(0.0), kind)
            .expect("non-negative delay cannot land in the past");
    }

    /// Time of the next event without dequeuing it.
    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|std::cmp::Reverse(e)| e.time)
    }

    /// Dequeue the next event and advance the clock to it.
    pub fn pop(&mut self) -> Option<Event> {
        let std::cmp::Reverse(event) = self.heap.pop()?;
        self.now = self.now.max(event.time);
        self.executed += 1;
        Some(event)
    }

    /// Dequeue the next event only if it fires strictly before `horizon`.
    pub fn pop_before(&mut self, horizon: f64) -> Option<Event> {
        match self.heap.peek() {
            Some(std::cmp::Reverse(e)) if quantize(e.time) < quantize(horizon) => self.pop(),
            _ => None,
        }
    }
}

/// Derive an independent, labeled random substream from a master seed.
/// Adding a new consumer label leaves every other stream untouched.
pub fn substream_rng(master_seed: u64, label: &str) -> ChaCha8Rng {
    // FNV-1a over the label, mixed with the master seed.
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    ChaCha8Rng::seed_from_u64(h ^ master_seed.wrapping_mul(0x9e3779b97f4a7c15))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn pop_order_is_time_then_insertion() {
        let mut q = EventQueue::new();
        q.schedule_at(2.0, EventKind::MetricPeriod).unwrap();
        q.schedule_at(1.0, EventKind::TransferPhase { transfer: 1 })
            .unwrap();
        q.schedule_at(1.0, EventKind::TransferPhase { transfer: 2 })
            .unwrap();
        let a = q.pop().unwrap();
        let b = q.pop().unwrap();
        let c = q.pop().unwrap();
        assert_eq!(a.kind, EventKind::TransferPhase { transfer: 1 });
        assert_eq!(b.kind, EventKind::TransferPhase { transfer: 2 });
        assert_eq!(c.kind, EventKind::MetricPeriod);
        assert!(a.seq < b.seq);
    }

    #[test]
    fn schedule_at_now_fires_before_later_events() {
        let mut q = EventQueue::new();
        q.schedule_at(5.0, EventKind::MetricPeriod).unwrap();
        q.pop();
        assert_eq!(q.now(), 5.0);
        q.schedule_at(7.0, EventKind::MetricPeriod).unwrap();
        q.schedule_at(q.now(), EventKind::TransferPhase { transfer: 9 })
            .unwrap();
        assert_eq!(
            q.pop().unwrap().kind,
            EventKind::TransferPhase { transfer: 9 }
        );
    }

    #[test]
    fn past_scheduling_rejected() {
        let mut q = EventQueue::new();
        q.schedule_at(10.0, EventKind::MetricPeriod).unwrap();
        q.pop();
        let err = q.schedule_at(9.0, EventKind::MetricPeriod).unwrap_err();
        assert!(matches!(err, SimError::PastEvent { .. }));
    }

    #[test]
    fn clock_is_monotone() {
        let mut q = EventQueue::new();
        for t in [3.0, 1.0, 2.0, 1.0, 8.0] {
            q.schedule_at(t, EventKind::MetricPeriod).unwrap();
        }
        let mut last = f64::MIN;
        while let Some(e) = q.pop() {
            assert!(e.time >= last);
            last = e.time;
            assert_eq!(q.now(), q.now().max(e.time));
        }
        assert_eq!(q.executed(), 5);
    }

    #[test]
    fn pop_before_leaves_later_events_queued() {
        let mut q = EventQueue::new();
        q.schedule_at(1.0, EventKind::MetricPeriod).unwrap();
        q.schedule_at(2.0, EventKind::MetricPeriod).unwrap();
        assert!(q.pop_before(2.0).is_some());
        assert!(q.pop_before(2.0).is_none());
        assert_eq!(q.pending(), 1);
    }

    #[test]
    fn substreams_are_independent_and_stable() {
        let mut a1 = substream_rng(42, "ingest-jitter");
        let mut a2 = substream_rng(42, "ingest-jitter");
        let mut b = substream_rng(42, "datagram-loss");
        let xs: Vec<u64> = (0..4).map(|_| a1.next_u64()).collect();
        let ys: Vec<u64> = (0..4).map(|_| a2.next_u64()).collect();
        let zs: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }
}
