use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{LedgerError, Tokens};
use crate::agents::AgentId;

/// Aggregate token counters. `injected = circulating + escrowed + burned`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSupply {
    pub injected: Tokens,
    pub circulating: Tokens,
    pub escrowed: Tokens,
    pub burned: Tokens,
}

impl TokenSupply {
    pub fn balanced(&self) -> bool {
        self.circulating
            .checked_add(self.escrowed)
            .and_then(|s| s.checked_add(self.burned))
            == Some(self.injected)
    }
}

/// Burns `amount` already debited from circulating wallets.
pub fn evaporate(supply: TokenSupply, amount: Tokens) -> Result<TokenSupply, LedgerError> {
    let circulating = supply.circulating.checked_sub(amount).ok_or_else(|| {
        LedgerError::Conservation(format!(
            "burn of {amount} exceeds circulating {}",
            supply.circulating
        ))
    })?;
    Ok(TokenSupply {
        circulating,
        burned: supply.burned + amount,
        ..supply
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Account {
    wallet: Tokens,
    escrow: Tokens,
}

/// Wallets and escrow for every agent plus the supply counters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBank {
    accounts: BTreeMap<AgentId, Account>,
    supply: TokenSupply,
}

impl TokenBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn supply(&self) -> TokenSupply {
        self.supply
    }

    pub fn open(&mut self, agent: AgentId, endowment: Tokens) -> Result<(), LedgerError> {
        if self.accounts.contains_key(&agent) {
            return Err(LedgerError::Invalid(format!("account {agent} already open")));
        }
        self.accounts.insert(
            agent,
            Account {
                wallet: endowment,
                escrow: 0,
            },
        );
        self.supply.injected += endowment;
        self.supply.circulating += endowment;
        Ok(())
    }

    fn account(&mut self, agent: AgentId) -> Result<&mut Account, LedgerError> {
        self.accounts
            .get_mut(&agent)
            .ok_or(LedgerError::UnknownAccount(agent))
    }

    pub fn balance(&self, agent: AgentId) -> Tokens {
        self.accounts.get(&agent).map_or(0, |a| a.wallet)
    }

    pub fn escrowed(&self, agent: AgentId) -> Tokens {
        self.accounts.get(&agent).map_or(0, |a| a.escrow)
    }

    pub fn escrow(&mut self, agent: AgentId, amount: Tokens) -> Result<(), LedgerError> {
        let acct = self.account(agent)?;
        if acct.wallet < amount {
            return Err(LedgerError::InsufficientFunds {
                agent,
                need: amount,
                have: acct.wallet,
            });
        }
        acct.wallet -= amount;
        acct.escrow += amount;
        self.supply.circulating -= amount;
        self.supply.escrowed += amount;
        Ok(())
    }

    pub fn refund(&mut self, agent: AgentId, amount: Tokens) -> Result<(), LedgerError> {
        let acct = self.account(agent)?;
        if acct.escrow < amount {
            return Err(LedgerError::Conservation(format!(
                "refund {amount} exceeds escrow {} of {agent}",
                acct.escrow
            )));
        }
        acct.escrow -= amount;
        acct.wallet += amount;
        self.supply.escrowed -= amount;
        self.supply.circulating += amount;
        Ok(())
    }

    /// Burns part of an agent's escrow.
    pub fn burn_escrow(&mut self, agent: AgentId, amount: Tokens) -> Result<(), LedgerError> {
        let acct = self.account(agent)?;
        if acct.escrow < amount {
            return Err(LedgerError::Conservation(format!(
                "burn {amount} exceeds escrow {} of {agent}",
                acct.escrow
            )));
        }
        acct.escrow -= amount;
        self.supply.escrowed -= amount;
        self.supply.burned += amount;
        Ok(())
    }

    /// Debits and burns directly from a wallet.
    pub fn charge(&mut self, agent: AgentId, amount: Tokens) -> Result<(), LedgerError> {
        let acct = self.account(agent)?;
        if acct.wallet < amount {
            return Err(LedgerError::InsufficientFunds {
                agent,
                need: amount,
                have: acct.wallet,
            });
        }
        acct.wallet -= amount;
        self.supply = evaporate(self.supply, amount)?;
        Ok(())
    }

    /// Charges up to `amount`, returning what was actually taken.
    pub fn charge_saturating(&mut self, agent: AgentId, amount: Tokens) -> Result<Tokens, LedgerError> {
        let take = self.balance(agent).min(amount);
        self.charge(agent, take)?;
        Ok(take)
    }

    /// Recounts every account against the counters.
    pub fn audit(&self) -> Result<(), LedgerError> {
        let (w, e) = self
            .accounts
            .values()
            .fold((0u128, 0u128), |(w, e), a| (w + a.wallet as u128, e + a.escrow as u128));
        let s = self.supply;
        if w != s.circulating as u128 || e != s.escrowed as u128 || !s.balanced() {
            return Err(LedgerError::Conservation(format!(
                "wallets {w} escrow {e} vs {s:?}"
            )));
        }
        Ok(())
    }
}
