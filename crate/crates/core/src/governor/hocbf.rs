use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HocbfParams {
    pub re_max: f64,
    pub gamma_max: f64,
    pub alpha_cbf: f64,
    pub m_eff: f64,
    /// Worst-case upward drive on Reynolds acceleration when damping is off.
    pub drive_bound: f64,
}

impl Default for HocbfParams {
    fn default() -> Self {
        Self {
            re_max: 100.0,
            gamma_max: 10.0,
            alpha_cbf: 1.0,
            m_eff: 1.0,
            drive_bound: 0.0,
        }
    }
}

impl HocbfParams {
    pub fn is_valid(&self) -> bool {
        self.re_max > 0.0 && self.gamma_max > 0.0 && self.alpha_cbf > 0.0 && self.m_eff > 0.0 && self.drive_bound >= 0.0
    }

    /// Macro plant acceleration `(d (1 - g/g_max)+ - g) / m`.
    pub fn acceleration(&self, gamma: f64) -> f64 {
        self.acceleration_with(self.drive_bound, gamma)
    }

    /// Same plant under an actual drive `d <= drive_bound`.
    pub fn acceleration_with(&self, drive: f64, gamma: f64) -> f64 {
        let d = drive * (1.0 - gamma / self.gamma_max).max(0.0);
        (d - gamma) / self.m_eff
    }
}

/// `(Re_max - Re) - m Re_dot^2 / (2 g_max)` while approaching, else headroom.
pub fn barrier(re: f64, re_dot: f64, p: &HocbfParams) -> f64 {
    let v = re_dot.max(0.0);
    (p.re_max - re) - 0.5 * p.m_eff * v * v / p.gamma_max
}

/// Exact constant-acceleration step of the plant: `(re', re_dot', peak re)`.
pub fn plant_step(re: f64, re_dot: f64, gamma: f64, p: &HocbfParams, dt: f64) -> (f64, f64, f64) {
    plant_step_driven(re, re_dot, gamma, p.drive_bound, p, dt)
}

/// [`plant_step`] with the drive actually present instead of its bound.
pub fn plant_step_driven(
    re: f64,
    re_dot: f64,
    gamma: f64,
    drive: f64,
    p: &HocbfParams,
    dt: f64,
) -> (f64, f64, f64) {
    let a = p.acceleration_with(drive, gamma);
    let v1 = re_dot + a * dt;
    let r1 = re + re_dot * dt + 0.5 * a * dt * dt;
    let peak = if re_dot > 0.0 && v1 < 0.0 {
        re + re_dot * re_dot / (2.0 * -a)
    } else {
        r1.max(re)
    };
    (r1, v1, peak)
}

/// Lowest barrier value over the predicted step.
fn predicted_barrier(re: f64, re_dot: f64, gamma: f64, p: &HocbfParams, dt: f64) -> f64 {
    let (r1, v1, peak) = plant_step(re, re_dot, gamma, p, dt);
    barrier(r1, v1, p).min(p.re_max - peak)
}

/// Raises `gamma_desired` just enough that the discrete barrier condition
/// `h' >= (1 - alpha dt)+ h` holds over the next step; at or past the wall
/// it returns maximal braking.
pub fn hocbf_filter(gamma_desired: f64, re: f64, re_dot: f64, p: &HocbfParams, dt: f64) -> f64 {
    let h = barrier(re, re_dot, p);
    if h <= 0.0 {
        return p.gamma_max.max(gamma_desired);
    }
    let floor = (1.0 - p.alpha_cbf * dt).max(0.0) * h;
    let ok = |g: f64| predicted_barrier(re, re_dot, g, p, dt) >= floor;
    if gamma_desired >= p.gamma_max || ok(gamma_desired) {
        return gamma_desired;
    }
    if !ok(p.gamma_max) {
        return p.gamma_max;
    }
    let (mut lo, mut hi) = (gamma_desired, p.gamma_max);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * hi.abs().max(1.0) {
            break;
        }
    }
    hi
}
