use serde::{Deserialize, Serialize};

use super::{AgentError, AgentState, Phase};
use crate::dualfield::DualScalar;
use crate::ledger::{Order, OrderKind, Tokens};

/// Virtual probe for `target_cell`: a per-unit limit of
/// `floor(fraction * wallet / quantity)`. Nothing is debited or locked.
pub fn probe_wealth(agent: &AgentState, target_cell: usize, quantity: u64, fraction: f64) -> Order {
    let qty = quantity.max(1);
    let budget = (fraction.clamp(0.0, 1.0) * agent.wallet as f64).floor() as Tokens;
    Order {
        seq: 0,
        agent_id: agent.id,
        kind: OrderKind::Bid,
        cell: Some(target_cell),
        quantity: qty,
        limit_price: budget / qty,
        is_virtual: true,
    }
}

/// Economic-order-quantity stride `sqrt(2 c_txn R / holding_tax)`, floored
/// at one unit.
pub fn jit_bid_stride(consumption_rate: f64, c_txn: Tokens, holding_tax: f64) -> Result<f64, AgentError> {
    if !(holding_tax > 0.0) {
        return Err(AgentError::ZeroHoldingTax);
    }
    if !(consumption_rate >= 0.0) {
        return Err(AgentError::InvalidParameter(format!(
            "consumption rate {consumption_rate}"
        )));
    }
    let q = (2.0 * c_txn as f64 * consumption_rate / holding_tax).sqrt();
    Ok(q.max(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JitPolicy {
    pub c_txn: Tokens,
    pub holding_tax: f64,
    /// Epochs of look-ahead for need and price.
    pub horizon: f64,
    /// Predicted potential above which a pre-emptive stride is bought.
    pub price_trigger: f64,
}

impl Default for JitPolicy {
    fn default() -> Self {
        Self {
            c_txn: 1,
            holding_tax: 0.5,
            horizon: 1.0,
            price_trigger: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldReason {
    Covered,
    Starved,
    Ineligible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JitDecision {
    Hold(HoldReason),
    Bid { quantity: u64, limit: Tokens },
}

/// Decides whether a seated agent buys more lease.
///
/// `need` is the projected footprint at the end of the horizon and `limit`
/// the per-unit price the agent would offer.
pub fn jit_expand_decision(
    agent: &AgentState,
    need: u64,
    consumption_rate: f64,
    phi_at_pos: DualScalar,
    limit: Tokens,
    policy: &JitPolicy,
) -> Result<JitDecision, AgentError> {
    if !matches!(agent.phase, Phase::Seated | Phase::Glassy) {
        return Ok(JitDecision::Hold(HoldReason::Ineligible));
    }
    let stride = jit_bid_stride(consumption_rate, policy.c_txn, policy.holding_tax)?.round() as u64;
    let stride = stride.max(1);
    let quantity = if need > agent.footprint {
        (need - agent.footprint).div_ceil(stride) * stride
    } else if phi_at_pos.dual > 0.0
        && phi_at_pos.predict(policy.horizon) > policy.price_trigger
        && agent.footprint < need + stride
    {
        stride
    } else {
        return Ok(JitDecision::Hold(HoldReason::Covered));
    };
    let cost = quantity.saturating_mul(limit).saturating_add(policy.c_txn);
    if agent.wallet < cost {
        return Ok(JitDecision::Hold(HoldReason::Starved));
    }
    Ok(JitDecision::Bid { quantity, limit })
}
