//! Fleiss's kappa for a fixed number of raters per item.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::jsonl;
use crate::{Error, Result};

/// Category counts for one rated item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementItem {
    pub item_id: String,
    pub category_counts: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementInput {
    pub items: Vec<AgreementItem>,
    pub raters: u32,
}

impl AgreementInput {
    /// Reads an agreement file; the rater count is taken from the first
    /// item's total.
    pub fn load(path: &Path) -> Result<Self> {
        let items: Vec<AgreementItem> = jsonl::read_records(path)?;
        let raters = items
            .first()
            .map(|i| i.category_counts.values().sum())
            .unwrap_or(0);
        Ok(AgreementInput { items, raters })
    }

    pub fn validate(&self) -> Result<()> {
        if self.raters < 2 {
            return Err(Error::InvalidInput(format!(
                "agreement needs at least 2 raters per item, got {}",
                self.raters
            )));
        }
        if self.items.is_empty() {
            return Err(Error::InvalidInput("agreement needs at least one item".into()));
        }
        for item in &self.items {
            let total: u32 = item.category_counts.values().sum();
            if total != self.raters {
                return Err(Error::AgreementItem {
                    item: item.item_id.clone(),
                    message: format!("counts sum to {total}, expected {}", self.raters),
                });
            }
        }
        let categories: BTreeSet<&String> = self
            .items
            .iter()
            .flat_map(|i| i.category_counts.keys())
            .collect();
        if self.items.len() < 2 && categories.len() < 2 {
            return Err(Error::InvalidInput(
                "agreement needs at least two items or two categories".into(),
            ));
        }
        Ok(())
    }
}

/// `κ = (P̄o − P̄e) / (1 − P̄e)`; returns exactly 1.0 when observed
/// agreement is perfect.
pub fn fleiss_kappa(input: &AgreementInput) -> Result<f64> {
    input.validate()?;
    let r = input.raters as f64;
    let n_items = input.items.len() as f64;

    let mut category_totals: BTreeMap<&str, u64> = BTreeMap::new();
    let mut observed_sum = 0.0;
    let mut all_unanimous = true;
    for item in &input.items {
        let mut sq = 0u64;
        for (cat, &c) in &item.category_counts {
            *category_totals.entry(cat.as_str()).or_default() += c as u64;
            sq += (c as u64) * (c as u64);
            if c != 0 && c != input.raters {
                all_unanimous = false;
            }
        }
        observed_sum += (sq as f64 - r) / (r * (r - 1.0));
    }
    if all_unanimous {
        return Ok(1.0);
    }
    let observed = observed_sum / n_items;
    let total = n_items * r;
    let expected: f64 = category_totals
        .values()
        .map(|&c| {
            let p = c as f64 / total;
            p * p
        })
        .sum();
    Ok((observed - expected) / (1.0 - expected))
}
