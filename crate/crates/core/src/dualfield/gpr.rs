use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{FieldError, Grid, LatticeDomain, Vec2};

/// Exact inference is dense; beyond this the projection is refused.
pub const MAX_SAMPLES: usize = 4096;

/// Hyperparameters broadcast by the projector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GprParams {
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub prior_mean: f64,
}

impl Default for GprParams {
    fn default() -> Self {
        Self {
            lengthscale: 2.0,
            signal_variance: 1.0,
            noise_variance: 0.01,
            prior_mean: 0.0,
        }
    }
}

impl GprParams {
    pub fn validate(&self) -> Result<(), FieldError> {
        let ok = self.lengthscale > 0.0
            && self.signal_variance >= 0.0
            && self.noise_variance >= 0.0
            && self.prior_mean.is_finite();
        if ok {
            Ok(())
        } else {
            Err(FieldError::InvalidParameter(format!("{self:?}")))
        }
    }

    /// Squared-exponential covariance for a squared distance.
    pub fn kernel(&self, dist_sq: f64) -> f64 {
        self.signal_variance * (-0.5 * dist_sq / (self.lengthscale * self.lengthscale)).exp()
    }

    /// Covariance between two positions. On a torus the squared exponential
    /// is summed over periodic images (and rescaled so `k(p, p)` is the
    /// signal variance), which keeps the kernel positive definite.
    pub fn covariance(&self, domain: &LatticeDomain, a: Vec2, b: Vec2) -> f64 {
        if !domain.wraps() {
            return self.kernel(domain.distance_sq(a, b));
        }
        let d = domain.displacement(a, b);
        let l = self.lengthscale;
        let wrapped = |delta: f64, period: f64| -> f64 {
            let reps = (6.0 * l / period).ceil() as i64;
            (-reps..=reps)
                .map(|n| {
                    let z = delta + n as f64 * period;
                    (-0.5 * z * z / (l * l)).exp()
                })
                .sum()
        };
        let (w, h) = (domain.width() as f64, domain.height() as f64);
        self.signal_variance * wrapped(d.x, w) * wrapped(d.y, h) / (wrapped(0.0, w) * wrapped(0.0, h))
    }
}

/// One telemetry observation: lattice cell and observed entropy.
pub type Sample = (usize, f64);

/// Posterior mean of an RBF Gaussian process at every lattice cell.
///
/// The kernel is periodic when the domain wraps. The solve is a dense
/// Cholesky factorization of `K + noise * I`.
pub fn project_field(
    samples: &[Sample],
    params: &GprParams,
    domain: &LatticeDomain,
) -> Result<Grid<f64>, FieldError> {
    params.validate()?;
    if samples.len() > MAX_SAMPLES {
        return Err(FieldError::TooManySamples(samples.len()));
    }
    if let Some(&(cell, _)) = samples.iter().find(|(c, _)| *c >= domain.len()) {
        return Err(FieldError::CellOutOfDomain(cell));
    }
    if samples.is_empty() {
        return Ok(Grid::filled(domain, params.prior_mean));
    }
    if params.noise_variance == 0.0 {
        let mut cells: Vec<usize> = samples.iter().map(|s| s.0).collect();
        cells.sort_unstable();
        if cells.windows(2).any(|w| w[0] == w[1]) {
            return Err(FieldError::SingularKernel);
        }
    }

    let n = samples.len();
    let pos: Vec<_> = samples.iter().map(|s| domain.cell_center(s.0)).collect();
    let k = DMatrix::from_fn(n, n, |i, j| {
        let mut v = params.covariance(domain, pos[i], pos[j]);
        if i == j {
            v += params.noise_variance;
        }
        v
    });
    let resid = DVector::from_iterator(n, samples.iter().map(|s| s.1 - params.prior_mean));
    let chol = k.cholesky().ok_or(FieldError::SingularKernel)?;
    let alpha = chol.solve(&resid);
    if alpha.iter().any(|a| !a.is_finite()) {
        return Err(FieldError::SingularKernel);
    }

    Ok(Grid::from_fn(domain, |x, y| {
        let p = Vec2::new(x as f64, y as f64);
        let mut acc = 0.0;
        for (i, &sp) in pos.iter().enumerate() {
            acc += params.covariance(domain, p, sp) * alpha[i];
        }
        params.prior_mean + acc
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dom(w: usize, h: usize, wrap: bool) -> LatticeDomain {
        LatticeDomain::new(w, h, wrap).unwrap()
    }

    #[test]
    fn no_samples_gives_prior() {
        let d = dom(4, 3, true);
        let p = GprParams {
            prior_mean: 0.37,
            ..GprParams::default()
        };
        let g = project_field(&[], &p, &d).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.37));
    }

    #[test]
    fn single_sample_matches_hand_formula() {
        let d = dom(8, 8, false);
        let p = GprParams {
            lengthscale: 1.5,
            signal_variance: 1.0,
            noise_variance: 0.1,
            prior_mean: 0.0,
        };
        let c = d.index(3, 4);
        let g = project_field(&[(c, 1.0)], &p, &d).unwrap();
        // k (k + s2)^-1 y with k = 1
        assert!((g[c] - 1.0 / 1.1).abs() < 1e-12);
        assert!((g[c] - 0.909).abs() < 1e-3);
        // off-sample: k(d) / 1.1
        let n = d.index(4, 4);
        let expect = (-0.5 / (1.5 * 1.5f64)).exp() / 1.1;
        assert!((g[n] - expect).abs() < 1e-12);
    }

    #[test]
    fn two_sample_posterior_matches_explicit_inverse() {
        let d = dom(10, 1, false);
        let p = GprParams {
            lengthscale: 2.0,
            signal_variance: 0.8,
            noise_variance: 0.05,
            prior_mean: 0.2,
        };
        let (ca, cb) = (d.index(2, 0), d.index(5, 0));
        let (ya, yb) = (1.0, -0.5);
        let g = project_field(&[(ca, ya), (cb, yb)], &p, &d).unwrap();
        // hand 2x2 inverse
        let k = |dx: f64| 0.8 * (-dx * dx / 8.0).exp();
        let (a, b, dd) = (k(0.0) + 0.05, k(3.0), k(0.0) + 0.05);
        let det = a * dd - b * b;
        let (ra, rb) = (ya - 0.2, yb - 0.2);
        let alpha_a = (dd * ra - b * rb) / det;
        let alpha_b = (-b * ra + a * rb) / det;
        for x in 0..10 {
            let xf = x as f64;
            let expect = 0.2 + k(xf - 2.0) * alpha_a + k(xf - 5.0) * alpha_b;
            assert!((g[d.index(x, 0)] - expect).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn far_cells_revert_to_prior() {
        let d = dom(200, 1, false);
        let p = GprParams {
            lengthscale: 1.0,
            prior_mean: -0.3,
            ..GprParams::default()
        };
        let g = project_field(&[(0, 5.0), (3, 2.0)], &p, &d).unwrap();
        assert!((g[199] + 0.3).abs() < 1e-6);
    }

    #[test]
    fn torus_distance_couples_edges() {
        let d = dom(20, 1, true);
        let p = GprParams::default();
        let g = project_field(&[(0, 1.0)], &p, &d).unwrap();
        assert!((g[19] - g[1]).abs() < 1e-12);
    }

    #[test]
    fn duplicate_noiseless_samples_are_rejected() {
        let d = dom(4, 4, false);
        let p = GprParams {
            noise_variance: 0.0,
            ..GprParams::default()
        };
        assert!(matches!(
            project_field(&[(1, 1.0), (1, 2.0)], &p, &d),
            Err(FieldError::SingularKernel)
        ));
        let noisy = GprParams::default();
        assert!(project_field(&[(1, 1.0), (1, 2.0)], &noisy, &d).is_ok());
    }

    #[test]
    fn rejects_out_of_domain_and_oversized_inputs() {
        let d = dom(4, 4, false);
        let p = GprParams::default();
        assert!(matches!(
            project_field(&[(16, 1.0)], &p, &d),
            Err(FieldError::CellOutOfDomain(16))
        ));
        let many = vec![(0usize, 0.0); MAX_SAMPLES + 1];
        assert!(matches!(
            project_field(&many, &p, &d),
            Err(FieldError::TooManySamples(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn posterior_is_order_invariant(
            raw in proptest::collection::btree_map(0usize..64, -2.0f64..2.0, 1..12),
            rot in 0usize..12,
        ) {
            let d = dom(8, 8, true);
            let p = GprParams { noise_variance: 0.05, ..GprParams::default() };
            let samples: Vec<_> = raw.into_iter().collect();
            let mut shuffled = samples.clone();
            let r = rot % shuffled.len();
            shuffled.rotate_left(r);
            shuffled.reverse();
            let a = project_field(&samples, &p, &d).unwrap();
            let b = project_field(&shuffled, &p, &d).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn posterior_interpolates_within_noise(
            raw in proptest::collection::btree_map(0usize..100, -1.0f64..1.0, 1..6),
        ) {
            // widely spaced samples on a long line: near-independent
            let d = dom(1000, 1, false);
            let p = GprParams { lengthscale: 1.0, signal_variance: 1.0, noise_variance: 1e-4, prior_mean: 0.0 };
            let samples: Vec<_> = raw.into_iter().map(|(c, y)| (c * 10, y)).collect();
            let g = project_field(&samples, &p, &d).unwrap();
            for &(c, y) in &samples {
                // shrinkage toward the prior scales with noise / (signal + noise)
                let tol = 2.0 * p.noise_variance / (p.signal_variance + p.noise_variance) * y.abs() + 1e-9;
                prop_assert!((g[c] - y).abs() <= tol, "cell {} got {} want {}", c, g[c], y);
            }
        }
    }
}
