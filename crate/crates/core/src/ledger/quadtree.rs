use super::LedgerError;

/// Aggregate block book over a `2^L x 2^L` zone.
///
/// Level `l` stores, for every aligned `2^l` block, the number of free leaves
/// and the largest level of a fully free aligned block inside it (`-1` for
/// none). Updates touch one node per level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadBook {
    levels: u32,
    free_leaves: Vec<Vec<u32>>,
    full_level: Vec<Vec<i8>>,
}

impl QuadBook {
    pub fn new(side: usize) -> Result<Self, LedgerError> {
        if side == 0 || !side.is_power_of_two() || side > 1 << 15 {
            return Err(LedgerError::ZoneSide(side));
        }
        let levels = side.trailing_zeros();
        let mut free_leaves = Vec::new();
        let mut full_level = Vec::new();
        for l in 0..=levels {
            let n = side >> l;
            free_leaves.push(vec![1u32 << (2 * l); n * n]);
            full_level.push(vec![l as i8; n * n]);
        }
        Ok(Self {
            levels,
            free_leaves,
            full_level,
        })
    }

    pub fn side(&self) -> usize {
        1 << self.levels
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn cells(&self) -> usize {
        self.side() * self.side()
    }

    fn width(&self, level: u32) -> usize {
        self.side() >> level
    }

    pub fn free_leaves(&self, level: u32, bx: usize, by: usize) -> u32 {
        self.free_leaves[level as usize][by * self.width(level) + bx]
    }

    pub fn free_full(&self, level: u32, bx: usize, by: usize) -> bool {
        self.free_leaves(level, bx, by) == 1 << (2 * level)
    }

    pub fn total_free(&self) -> u32 {
        self.free_leaves[self.levels as usize][0]
    }

    pub fn is_free(&self, cell: usize) -> bool {
        self.free_leaves[0][cell] == 1
    }

    /// Level of a fill-or-kill quantity, or the SKU it must round up to.
    pub fn sku_level(&self, quantity: u64) -> Result<u32, LedgerError> {
        if quantity == 0 {
            return Err(LedgerError::ZeroQuantity);
        }
        let mut level = 0u32;
        let mut sku = 1u64;
        while sku < quantity {
            sku = sku.saturating_mul(4);
            level += 1;
        }
        if sku != quantity {
            return Err(LedgerError::MisalignedSku {
                quantity,
                round_up: sku,
            });
        }
        if level > self.levels {
            return Err(LedgerError::BlockTooLarge { quantity });
        }
        Ok(level)
    }

    /// Lowest `(y, x)` fully free block at `level`, as block coordinates.
    pub fn find_free_block(&self, level: u32) -> Option<(usize, usize)> {
        if level > self.levels {
            return None;
        }
        self.search(self.levels, 0, 0, level as i8)
    }

    fn search(&self, at: u32, bx: usize, by: usize, want: i8) -> Option<(usize, usize)> {
        if self.full_level[at as usize][by * self.width(at) + bx] < want {
            return None;
        }
        if at as i8 == want {
            return Some((bx, by));
        }
        let (cx, cy) = (2 * bx, 2 * by);
        let pick = |a: Option<(usize, usize)>, b: Option<(usize, usize)>| match (a, b) {
            (Some(p), Some(q)) => Some(if (p.1, p.0) <= (q.1, q.0) { p } else { q }),
            (p, q) => p.or(q),
        };
        let top = pick(
            self.search(at - 1, cx, cy, want),
            self.search(at - 1, cx + 1, cy, want),
        );
        if top.is_some() {
            return top;
        }
        pick(
            self.search(at - 1, cx, cy + 1, want),
            self.search(at - 1, cx + 1, cy + 1, want),
        )
    }

    /// Marks every leaf of a block occupied; the block must be fully free.
    pub fn occupy_block(&mut self, level: u32, bx: usize, by: usize) -> Result<(), LedgerError> {
        if !self.free_full(level, bx, by) {
            return Err(LedgerError::Invalid(format!("block {level}:{bx},{by} not free")));
        }
        self.set_block(level, bx, by, false);
        Ok(())
    }

    /// Frees every leaf of a block; the block must be fully occupied.
    pub fn release_block(&mut self, level: u32, bx: usize, by: usize) -> Result<(), LedgerError> {
        if self.free_leaves(level, bx, by) != 0 {
            return Err(LedgerError::Invalid(format!("block {level}:{bx},{by} not occupied")));
        }
        self.set_block(level, bx, by, true);
        Ok(())
    }

    pub fn occupy(&mut self, cell: usize) -> Result<(), LedgerError> {
        if cell >= self.cells() {
            return Err(LedgerError::CellOutOfZone(cell));
        }
        let s = self.side();
        self.occupy_block(0, cell % s, cell / s)
    }

    pub fn release(&mut self, cell: usize) -> Result<(), LedgerError> {
        if cell >= self.cells() {
            return Err(LedgerError::CellOutOfZone(cell));
        }
        let s = self.side();
        self.release_block(0, cell % s, cell / s)
    }

    fn set_block(&mut self, level: u32, bx: usize, by: usize, free: bool) {
        // rewrite the subtree, then recompute the ancestors
        for l in 0..=level {
            let span = 1usize << (level - l);
            let w = self.width(l);
            let (x0, y0) = (bx * span, by * span);
            for y in y0..y0 + span {
                for x in x0..x0 + span {
                    let i = y * w + x;
                    self.free_leaves[l as usize][i] = if free { 1 << (2 * l) } else { 0 };
                    self.full_level[l as usize][i] = if free { l as i8 } else { -1 };
                }
            }
        }
        let (mut x, mut y) = (bx, by);
        for l in level + 1..=self.levels {
            x /= 2;
            y /= 2;
            self.recompute(l, x, y);
        }
    }

    fn recompute(&mut self, l: u32, x: usize, y: usize) {
        let cw = self.width(l - 1);
        let kids = [
            (2 * y) * cw + 2 * x,
            (2 * y) * cw + 2 * x + 1,
            (2 * y + 1) * cw + 2 * x,
            (2 * y + 1) * cw + 2 * x + 1,
        ];
        let lower = (l - 1) as usize;
        let free: u32 = kids.iter().map(|&k| self.free_leaves[lower][k]).sum();
        let i = y * self.width(l) + x;
        self.free_leaves[l as usize][i] = free;
        self.full_level[l as usize][i] = if free == 1 << (2 * l) {
            l as i8
        } else {
            kids.iter().map(|&k| self.full_level[lower][k]).max().unwrap_or(-1)
        };
    }

    /// Rebuilds all aggregates from the leaves.
    pub fn rebuilt(&self) -> Self {
        let mut b = self.clone();
        for l in 1..=self.levels {
            let w = self.width(l);
            for y in 0..w {
                for x in 0..w {
                    b.recompute(l, x, y);
                }
            }
        }
        b
    }

    /// Leaf cells of a block in row-major order.
    pub fn block_cells(&self, level: u32, bx: usize, by: usize) -> Vec<usize> {
        let span = 1usize << level;
        let s = self.side();
        (by * span..(by + 1) * span)
            .flat_map(|y| (bx * span..(bx + 1) * span).map(move |x| y * s + x))
            .collect()
    }

    /// Nested listing of blocks that are neither fully free nor fully used.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_node(self.levels, 0, 0, 0, &mut out);
        out
    }

    fn dump_node(&self, l: u32, x: usize, y: usize, depth: usize, out: &mut String) {
        let f = self.free_leaves(l, x, y);
        out.push_str(&format!(
            "{:indent$}L{l} ({x},{y}) free {f}/{}\n",
            "",
            1u32 << (2 * l),
            indent = depth * 2
        ));
        if l > 0 && f != 0 && f != 1 << (2 * l) {
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                self.dump_node(l - 1, 2 * x + dx, 2 * y + dy, depth + 1, out);
            }
        }
    }
}
