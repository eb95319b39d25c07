use super::{Grid, LatticeDomain, Vec2};

/// Restoring stiffness applied to positions clamped back into a bounded
/// domain.
pub const BOUNDARY_STIFFNESS: f64 = 10.0;

/// Node-wise central differences of a grid, bilinearly interpolated between
/// nodes. One-sided differences are used on the rim of a bounded lattice.
#[derive(Debug, Clone)]
pub struct GradientField {
    domain: LatticeDomain,
    gx: Vec<f64>,
    gy: Vec<f64>,
}

impl GradientField {
    pub fn new(grid: &Grid<f64>, domain: &LatticeDomain) -> Self {
        debug_assert!(grid.matches(domain));
        let (w, h) = (domain.width(), domain.height());
        let mut gx = vec![0.0; domain.len()];
        let mut gy = vec![0.0; domain.len()];
        for y in 0..h {
            for x in 0..w {
                let i = domain.index(x, y);
                gx[i] = axis_difference(domain, grid, x, y, true);
                gy[i] = axis_difference(domain, grid, x, y, false);
            }
        }
        Self {
            domain: *domain,
            gx,
            gy,
        }
    }

    pub fn domain(&self) -> &LatticeDomain {
        &self.domain
    }

    /// Gradient at a lattice node.
    pub fn at_node(&self, idx: usize) -> Vec2 {
        Vec2::new(self.gx[idx], self.gy[idx])
    }

    /// Gradient at a continuous position. Outside a bounded domain the
    /// position is clamped and `BOUNDARY_STIFFNESS * (pos - clamped)` is added,
    /// so the negative gradient points back inside.
    pub fn sample(&self, pos: Vec2) -> Vec2 {
        let clamped = self.domain.wrap_position(pos);
        let mut g = Vec2::new(
            bilinear(&self.domain, &self.gx, clamped),
            bilinear(&self.domain, &self.gy, clamped),
        );
        if !self.domain.wraps() {
            g += (pos - clamped) * BOUNDARY_STIFFNESS;
        }
        g
    }
}

fn axis_difference(domain: &LatticeDomain, grid: &Grid<f64>, x: usize, y: usize, along_x: bool) -> f64 {
    let n = if along_x { domain.width() } else { domain.height() };
    if n == 1 {
        return 0.0;
    }
    let at = |off: i64| -> Option<f64> {
        let (xi, yi) = if along_x {
            (x as i64 + off, y as i64)
        } else {
            (x as i64, y as i64 + off)
        };
        domain.resolve(xi, yi).map(|i| grid[i])
    };
    let here = at(0).unwrap_or(0.0);
    match (at(-1), at(1)) {
        (Some(l), Some(r)) => 0.5 * (r - l),
        (None, Some(r)) => r - here,
        (Some(l), None) => here - l,
        (None, None) => 0.0,
    }
}

/// Bilinear interpolation of node values at an in-domain position.
pub fn bilinear(domain: &LatticeDomain, values: &[f64], pos: Vec2) -> f64 {
    let (ix0, ix1, fx) = bracket(pos.x, domain.width(), domain.wraps());
    let (iy0, iy1, fy) = bracket(pos.y, domain.height(), domain.wraps());
    let v00 = values[domain.index(ix0, iy0)];
    let v10 = values[domain.index(ix1, iy0)];
    let v01 = values[domain.index(ix0, iy1)];
    let v11 = values[domain.index(ix1, iy1)];
    let top = v00 + (v10 - v00) * fx;
    let bot = v01 + (v11 - v01) * fx;
    top + (bot - top) * fy
}

fn bracket(coord: f64, n: usize, wrap: bool) -> (usize, usize, f64) {
    if n == 1 {
        return (0, 0, 0.0);
    }
    let base = coord.floor();
    let frac = coord - base;
    if wrap {
        let i0 = (base as i64).rem_euclid(n as i64) as usize;
        (i0, (i0 + 1) % n, frac)
    } else {
        let i0 = (base.max(0.0) as usize).min(n - 2);
        let frac = (coord - i0 as f64).clamp(0.0, 1.0);
        (i0, i0 + 1, frac)
    }
}

/// Interpolated value of a grid at a continuous position.
pub fn sample_value(grid: &Grid<f64>, domain: &LatticeDomain, pos: Vec2) -> f64 {
    bilinear(domain, grid.values(), domain.wrap_position(pos))
}

/// Convenience wrapper building the gradient field on the fly. Prefer a cached
/// [`GradientField`] when sampling many positions.
pub fn sample_gradient(grid: &Grid<f64>, domain: &LatticeDomain, pos: Vec2) -> Vec2 {
    GradientField::new(grid, domain).sample(pos)
}
