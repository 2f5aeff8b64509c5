use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Which bound produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Uniform,
    Rosenthal,
    Prop4,
    DksLower,
    DksUpper,
    Spectral,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::Uniform => "uniform",
            BoundKind::Rosenthal => "rosenthal",
            BoundKind::Prop4 => "prop4",
            BoundKind::DksLower => "dks_lower",
            BoundKind::DksUpper => "dks_upper",
            BoundKind::Spectral => "spectral",
        }
    }

    /// Whether the curve bounds the distance from above.
    pub fn is_upper(self) -> bool {
        !matches!(self, BoundKind::DksLower)
    }
}

/// Bound values indexed by step count `ℓ = first_ell ..`.
///
/// `values` are the raw formula values; [`BoundCurve::capped`] clips them
/// to the useful range `[0, 1]` for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub kind: BoundKind,
    pub params: BTreeMap<String, f64>,
    pub first_ell: usize,
    pub values: Vec<f64>,
}

impl BoundCurve {
    pub fn new(kind: BoundKind, params: BTreeMap<String, f64>, first_ell: usize, values: Vec<f64>) -> Self {
        BoundCurve {
            kind,
            params,
            first_ell,
            values,
        }
    }

    pub fn ell_max(&self) -> usize {
        self.first_ell + self.values.len().saturating_sub(1)
    }

    /// Raw value at step `ell`, if the curve covers it.
    pub fn value(&self, ell: usize) -> Option<f64> {
        ell.checked_sub(self.first_ell).and_then(|i| self.values.get(i).copied())
    }

    pub fn capped(&self, ell: usize) -> Option<f64> {
        self.value(ell).map(|v| v.min(1.0))
    }

    pub fn capped_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.min(1.0)).collect()
    }

    pub fn ells(&self) -> impl Iterator<Item = usize> + '_ {
        self.first_ell..self.first_ell + self.values.len()
    }

    pub fn params_hash(&self) -> String {
        params_hash(self.kind.as_str(), &self.params)
    }
}

/// Short stable digest of a parameter record.
pub fn params_hash(label: &str, params: &BTreeMap<String, f64>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(label.as_bytes());
    for (k, v) in params {
        hasher.update(b"\x00");
        hasher.update(k.as_bytes());
        hasher.update(b"=");
        hasher.update(v.to_bits().to_le_bytes());
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn params<const N: usize>(pairs: [(&str, f64); N]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_and_hash() {
        let c = BoundCurve::new(BoundKind::DksUpper, params([("n", 3.0)]), 1, vec![2.0, 0.5]);
        assert_eq!(c.value(0), None);
        assert_eq!(c.value(1), Some(2.0));
        assert_eq!(c.capped(1), Some(1.0));
        assert_eq!(c.ell_max(), 2);
        let h = c.params_hash();
        assert_eq!(h.len(), 16);
        let d = BoundCurve::new(BoundKind::DksUpper, params([("n", 4.0)]), 1, vec![]);
        assert_ne!(h, d.params_hash());
    }
}
