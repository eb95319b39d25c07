use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandauParams {
    pub a: f64,
    pub b: f64,
    pub re_c: f64,
    pub h_field: f64,
    pub gamma_bounds: (f64, f64),
}

impl Default for LandauParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            re_c: 10.0,
            h_field: 0.0,
            gamma_bounds: (-1.0, 10.0),
        }
    }
}

impl LandauParams {
    pub fn is_valid(&self) -> bool {
        self.b > 0.0 && self.gamma_bounds.0 < 0.0 && 0.0 < self.gamma_bounds.1
    }

    pub fn clamp(&self, g: f64) -> f64 {
        g.clamp(self.gamma_bounds.0, self.gamma_bounds.1)
    }
}

/// `(a/2)(Re_c - Re) g^2 + (b/4) g^4 - H g`.
pub fn landau_free_energy(gamma: f64, re: f64, p: &LandauParams) -> f64 {
    let g2 = gamma * gamma;
    0.5 * p.a * (p.re_c - re) * g2 + 0.25 * p.b * g2 * g2 - p.h_field * gamma
}

/// Real roots of `t^3 + p t + q = 0`.
fn depressed_cubic_roots(p: f64, q: f64) -> Vec<f64> {
    if q == 0.0 {
        // t (t^2 + p) = 0, exact
        let mut r = vec![0.0];
        if p < 0.0 {
            let s = (-p).sqrt();
            r.extend([s, -s]);
        }
        return r;
    }
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()]
    } else {
        // three real roots (p < 0 here)
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
            .collect()
    }
}

/// One Newton polish step on `F'`.
fn polish(t: f64, p: f64, q: f64) -> f64 {
    let f = t * t * t + p * t + q;
    let df = 3.0 * t * t + p;
    if df.abs() > 1e-300 {
        t - f / df
    } else {
        t
    }
}

/// Global minimizer of the free energy over the damping bounds. Stationary
/// points come from `F'(g) = b g^3 + a (Re_c - Re) g - H = 0`; they are
/// compared with the endpoints and near-ties go to `g >= 0`.
pub fn landau_gamma(re: f64, p: &LandauParams) -> f64 {
    let (lo, hi) = p.gamma_bounds;
    let pc = p.a * (p.re_c - re) / p.b;
    let qc = -p.h_field / p.b;
    let mut cands: Vec<f64> = depressed_cubic_roots(pc, qc)
        .into_iter()
        .map(|t| if qc == 0.0 { t } else { polish(polish(t, pc, qc), pc, qc) })
        .filter(|t| t.is_finite() && *t >= lo && *t <= hi)
        .collect();
    cands.extend([lo, hi]);
    let mut best = cands[0];
    let mut best_f = landau_free_energy(best, re, p);
    for &g in &cands[1..] {
        let f = landau_free_energy(g, re, p);
        let tol = 1e-12 * best_f.abs().max(f.abs()).max(1.0);
        let better = f < best_f - tol || ((f - best_f).abs() <= tol && g >= 0.0 && best < 0.0);
        if better {
            best = g;
            best_f = f;
        }
    }
    best
}
