use serde::{Deserialize, Serialize};

use super::Order;

/// Per-cell bidding heat, `h <- (1 - lambda) h + sum of bid values` each tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatMap {
    lambda: f64,
    h: Vec<f64>,
}

impl HeatMap {
    pub fn new(cells: usize, lambda: f64) -> Self {
        assert!((0.0..=1.0).contains(&lambda), "decay {lambda} outside [0,1]");
        Self {
            lambda,
            h: vec![0.0; cells],
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    /// Applies one tick given `(cell, value)` contributions.
    pub fn update(&mut self, contributions: impl IntoIterator<Item = (usize, f64)>) {
        let keep = 1.0 - self.lambda;
        for v in &mut self.h {
            *v *= keep;
        }
        for (cell, v) in contributions {
            if let Some(h) = self.h.get_mut(cell) {
                *h += v;
            }
        }
    }

    /// Tick update from raw orders. Virtual and real bids both count.
    pub fn update_from_orders<'a>(&mut self, orders: impl IntoIterator<Item = &'a Order>) {
        self.update(
            orders
                .into_iter()
                .filter(|o| o.kind != super::OrderKind::Release)
                .filter_map(|o| o.cell.map(|c| (c, o.value()))),
        );
    }
}
