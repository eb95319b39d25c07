use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::FieldError;

/// Continuous in-plane position or velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Rotates counter-clockwise by `angle` radians.
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// The cluster as a 2-D lattice; node `(i, j)` sits at continuous position
/// `(i, j)` in cell-size units.
///
/// On a torus positions live in `[0, width) x [0, height)`; a bounded domain
/// spans `[0, width - 1] x [0, height - 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeDomain {
    width: usize,
    height: usize,
    wrap: bool,
}

impl LatticeDomain {
    pub fn new(width: usize, height: usize, wrap: bool) -> Result<Self, FieldError> {
        if width == 0 || height == 0 {
            return Err(FieldError::EmptyDomain { width, height });
        }
        Ok(Self {
            width,
            height,
            wrap,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn wraps(&self) -> bool {
        self.wrap
    }

    pub fn cell_size(&self) -> f64 {
        1.0
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    pub fn cell_center(&self, idx: usize) -> Vec2 {
        let (x, y) = self.coords(idx);
        Vec2::new(x as f64, y as f64)
    }

    /// Linear extent of the lattice, used as the macro length scale.
    pub fn diameter(&self) -> f64 {
        self.width.max(self.height) as f64 * self.cell_size()
    }

    /// Upper bound of the continuous coordinate range along x and y.
    pub fn extent(&self) -> Vec2 {
        if self.wrap {
            Vec2::new(self.width as f64, self.height as f64)
        } else {
            Vec2::new((self.width - 1) as f64, (self.height - 1) as f64)
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let e = self.extent();
        if self.wrap {
            p.x >= 0.0 && p.x < e.x && p.y >= 0.0 && p.y < e.y
        } else {
            p.x >= 0.0 && p.x <= e.x && p.y >= 0.0 && p.y <= e.y
        }
    }

    /// Maps a position back into the domain: modular on a torus, clamped on a
    /// bounded lattice.
    pub fn wrap_position(&self, p: Vec2) -> Vec2 {
        let e = self.extent();
        if self.wrap {
            let mut x = p.x.rem_euclid(e.x);
            let mut y = p.y.rem_euclid(e.y);
            // rem_euclid can round up to the modulus for tiny negatives
            if x >= e.x {
                x = 0.0;
            }
            if y >= e.y {
                y = 0.0;
            }
            Vec2::new(x, y)
        } else {
            Vec2::new(p.x.clamp(0.0, e.x), p.y.clamp(0.0, e.y))
        }
    }

    /// Shortest displacement `b - a`, using the minimum image on a torus.
    pub fn displacement(&self, a: Vec2, b: Vec2) -> Vec2 {
        let mut d = b - a;
        if self.wrap {
            let (w, h) = (self.width as f64, self.height as f64);
            d.x -= w * (d.x / w).round();
            d.y -= h * (d.y / h).round();
        }
        d
    }

    pub fn distance_sq(&self, a: Vec2, b: Vec2) -> f64 {
        self.displacement(a, b).norm_sq()
    }

    /// Index of the lattice node nearest to `p`.
    pub fn nearest_cell(&self, p: Vec2) -> usize {
        let p = self.wrap_position(p);
        let mut x = p.x.round() as i64;
        let mut y = p.y.round() as i64;
        if self.wrap {
            x = x.rem_euclid(self.width as i64);
            y = y.rem_euclid(self.height as i64);
        } else {
            x = x.clamp(0, self.width as i64 - 1);
            y = y.clamp(0, self.height as i64 - 1);
        }
        self.index(x as usize, y as usize)
    }

    /// Resolves a possibly out-of-range lattice coordinate. `None` on a
    /// bounded domain when the coordinate falls off the edge.
    pub fn resolve(&self, x: i64, y: i64) -> Option<usize> {
        if self.wrap {
            let x = x.rem_euclid(self.width as i64) as usize;
            let y = y.rem_euclid(self.height as i64) as usize;
            Some(self.index(x, y))
        } else if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            Some(self.index(x as usize, y as usize))
        } else {
            None
        }
    }
}

/// Row-major values over a lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(domain: &LatticeDomain, value: T) -> Self {
        Self {
            width: domain.width(),
            height: domain.height(),
            data: vec![value; domain.len()],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(domain: &LatticeDomain, data: Vec<T>) -> Result<Self, FieldError> {
        if data.len() != domain.len() {
            return Err(FieldError::ShapeMismatch {
                expected: (domain.width(), domain.height()),
                found: (data.len(), 1),
            });
        }
        Ok(Self {
            width: domain.width(),
            height: domain.height(),
            data,
        })
    }

    pub fn from_fn(domain: &LatticeDomain, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(domain.len());
        for y in 0..domain.height() {
            for x in 0..domain.width() {
                data.push(f(x, y));
            }
        }
        Self {
            width: domain.width(),
            height: domain.height(),
            data,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn at(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    pub fn matches(&self, domain: &LatticeDomain) -> bool {
        self.width == domain.width() && self.height == domain.height()
    }

    pub fn check_shape(&self, other_shape: (usize, usize)) -> Result<(), FieldError> {
        if self.shape() != other_shape {
            return Err(FieldError::ShapeMismatch {
                expected: self.shape(),
                found: other_shape,
            });
        }
        Ok(())
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T> Index<usize> for Grid<T> {
    type Output = T;
    fn index(&self, idx: usize) -> &T {
        &self.data[idx]
    }
}

impl<T> IndexMut<usize> for Grid<T> {
    fn index_mut(&mut self, idx: usize) -> &mut T {
        &mut self.data[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_lattice() {
        assert!(LatticeDomain::new(0, 3, true).is_err());
        assert!(LatticeDomain::new(3, 0, false).is_err());
    }

    #[test]
    fn index_roundtrip_covers_every_cell_once() {
        let d = LatticeDomain::new(5, 3, false).unwrap();
        let mut seen = vec![false; d.len()];
        for y in 0..3 {
            for x in 0..5 {
                let i = d.index(x, y);
                assert!(!seen[i]);
                seen[i] = true;
                assert_eq!(d.coords(i), (x, y));
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn torus_displacement_uses_minimum_image() {
        let d = LatticeDomain::new(10, 10, true).unwrap();
        let disp = d.displacement(Vec2::new(0.5, 0.0), Vec2::new(9.5, 0.0));
        assert!((disp.x + 1.0).abs() < 1e-12);
        let bounded = LatticeDomain::new(10, 10, false).unwrap();
        let disp = bounded.displacement(Vec2::new(0.5, 0.0), Vec2::new(9.5, 0.0));
        assert!((disp.x - 9.0).abs() < 1e-12);
    }

    #[test]
    fn wrap_position_stays_in_range() {
        let d = LatticeDomain::new(4, 4, true).unwrap();
        let p = d.wrap_position(Vec2::new(-1e-18, 4.0));
        assert!(d.contains(p), "{p:?}");
        let b = LatticeDomain::new(4, 4, false).unwrap();
        assert_eq!(b.wrap_position(Vec2::new(-2.0, 7.0)), Vec2::new(0.0, 3.0));
    }

    #[test]
    fn nearest_cell_wraps_on_torus() {
        let d = LatticeDomain::new(4, 4, true).unwrap();
        assert_eq!(d.nearest_cell(Vec2::new(3.6, 0.2)), d.index(0, 0));
    }

    #[test]
    fn rotation_preserves_norm() {
        let v = Vec2::new(3.0, -4.0);
        assert!((v.rotate(1.234).norm() - 5.0).abs() < 1e-12);
    }
}
