use std::collections::VecDeque;

use super::{LedgerError, Order};

/// Bounded FIFO that stamps sequence numbers on entry.
#[derive(Debug, Clone)]
pub struct OrderRing {
    buf: VecDeque<Order>,
    capacity: usize,
    next_seq: u64,
}

impl OrderRing {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "ring capacity must be positive");
        Self {
            buf: VecDeque::with_capacity(capacity),
            capacity,
            next_seq: 1,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn push(&mut self, mut order: Order) -> Result<u64, LedgerError> {
        if self.buf.len() >= self.capacity {
            return Err(LedgerError::Backpressure(self.capacity));
        }
        order.seq = self.next_seq;
        self.next_seq += 1;
        self.buf.push_back(order);
        Ok(self.next_seq - 1)
    }

    pub fn drain(&mut self) -> impl Iterator<Item = Order> + '_ {
        self.buf.drain(..)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Order> {
        self.buf.iter()
    }
}
