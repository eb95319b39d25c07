use serde::{Deserialize, Serialize};

use super::{DualScalar, FieldError, Grid, LatticeDomain};

/// Layer weights and pricing constants of the thermo-economic field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldWeights {
    pub w1: f64,
    pub w2: f64,
    pub price_k: f64,
    pub eps_price: f64,
    pub kappa_b: f64,
}

impl Default for FieldWeights {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 1.0,
            price_k: 1.0,
            eps_price: 0.01,
            kappa_b: 1.0,
        }
    }
}

impl FieldWeights {
    pub fn validate(&self) -> Result<(), FieldError> {
        if self.w1 >= 0.0 && self.w2 >= 0.0 && self.eps_price > 0.0 && self.kappa_b >= 0.0 {
            Ok(())
        } else {
            Err(FieldError::InvalidParameter(format!("{self:?}")))
        }
    }
}

/// `w1 * s_phys + w2 * h_auction`, cell-wise.
pub fn effective_potential(
    s_phys: &Grid<f64>,
    h_auction: &Grid<f64>,
    weights: &FieldWeights,
) -> Result<Grid<f64>, FieldError> {
    s_phys.check_shape(h_auction.shape())?;
    let mut out = s_phys.clone();
    for (o, h) in out.values_mut().iter_mut().zip(h_auction.values()) {
        *o = weights.w1 * *o + weights.w2 * h;
    }
    Ok(out)
}

/// Attaches the backward-difference time derivative over `d_epoch` logical
/// epochs.
pub fn dualize(
    phi_now: &Grid<f64>,
    phi_prev: &Grid<f64>,
    d_epoch: u64,
) -> Result<Grid<DualScalar>, FieldError> {
    if d_epoch == 0 {
        return Err(FieldError::ZeroEpochStep);
    }
    phi_now.check_shape(phi_prev.shape())?;
    let dt = d_epoch as f64;
    let mut out = phi_now.map(|&v| DualScalar::constant(v));
    for (o, p) in out.values_mut().iter_mut().zip(phi_prev.values()) {
        o.dual = (o.real - p) / dt;
    }
    Ok(out)
}

/// Price ceiling `price_k / (s_local + eps)`; idle, ordered cells are worth
/// the most.
pub fn entropic_price_cap(s_local: f64, weights: &FieldWeights) -> f64 {
    weights.price_k / (s_local.max(0.0) + weights.eps_price)
}

/// Out-of-plane field magnitude `kappa_b * h_auction`.
pub fn magnetic_field(h_auction: &Grid<f64>, weights: &FieldWeights) -> Grid<f64> {
    h_auction.map(|&h| weights.kappa_b * h.max(0.0))
}

/// One broadcast snapshot of the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub s_phys: Grid<f64>,
    pub h_auction: Grid<f64>,
    pub phi_eff: Grid<DualScalar>,
    pub b_z: Grid<f64>,
    pub epoch: u64,
}

impl FieldState {
    /// A field whose potential is `phi` with no time variation and no
    /// magnetic component.
    pub fn static_potential(domain: &LatticeDomain, phi: Grid<f64>) -> Self {
        Self {
            s_phys: phi.clone(),
            h_auction: Grid::filled(domain, 0.0),
            phi_eff: phi.map(|&v| DualScalar::constant(v)),
            b_z: Grid::filled(domain, 0.0),
            epoch: 0,
        }
    }

    /// Superimposes the layers. `prev_phi` is the effective potential
    /// `d_epoch` epochs ago; `None` means the field is treated as static.
    pub fn assemble(
        s_phys: Grid<f64>,
        h_auction: Grid<f64>,
        prev_phi: Option<(&Grid<f64>, u64)>,
        weights: &FieldWeights,
        epoch: u64,
    ) -> Result<Self, FieldError> {
        let phi = effective_potential(&s_phys, &h_auction, weights)?;
        let phi_eff = match prev_phi {
            Some((prev, d)) => dualize(&phi, prev, d)?,
            None => phi.map(|&v| DualScalar::constant(v)),
        };
        let b_z = magnetic_field(&h_auction, weights);
        Ok(Self {
            s_phys,
            h_auction,
            phi_eff,
            b_z,
            epoch,
        })
    }

    pub fn phi_real(&self) -> Grid<f64> {
        self.phi_eff.map(|d| d.real)
    }

    /// `real + lookahead * dual`, the potential agents steer by.
    pub fn predicted(&self, lookahead: f64) -> Grid<f64> {
        self.phi_eff.map(|d| d.predict(lookahead))
    }
}
