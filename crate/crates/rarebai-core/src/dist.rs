//! Finite discrete distributions on the nonnegative reals.

use alloc::vec::Vec;

use crate::math;

/// Probability mass on finitely many nonnegative points.
///
/// Values are kept sorted and exactly deduplicated; outcomes in this crate
/// are always drawn from a finite menu, never computed, so exact keying is
/// safe.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    atoms: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistError {
    #[error("probabilities sum to {sum}, outside the 1e-9 renormalization band")]
    NotNormalized { sum: f64 },
    #[error("negative or non-finite entry (value {value}, prob {prob})")]
    BadAtom { value: f64, prob: f64 },
    #[error("empty support")]
    Empty,
}

impl FiniteDistribution {
    /// Build from `(value, probability)` pairs. Probabilities must sum to 1
    /// within 1e-9 and are then renormalized exactly; zero-probability atoms
    /// are dropped.
    pub fn new(pairs: &[(f64, f64)]) -> Result<Self, DistError> {
        let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        let mut sum = 0.0;
        for &(v, p) in pairs {
            if !v.is_finite() || !p.is_finite() || v < 0.0 || p < 0.0 {
                return Err(DistError::BadAtom { value: v, prob: p });
            }
            sum += p;
            if p > 0.0 {
                atoms.push((v, p));
            }
        }
        if atoms.is_empty() {
            return Err(DistError::Empty);
        }
        if math::abs(sum - 1.0) > 1e-9 {
            return Err(DistError::NotNormalized { sum });
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
        // Merge exact duplicates.
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        for a in merged.iter_mut() {
            a.1 /= sum;
        }
        Ok(Self { atoms: merged })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(v, p)| v * p).sum()
    }

    pub fn min_value(&self) -> f64 {
        self.atoms[0].0
    }

    pub fn max_value(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].0
    }

    pub fn prob_at(&self, value: f64) -> f64 {
        self.atoms
            .iter()
            .find(|&&(v, _)| v == value)
            .map_or(0.0, |&(_, p)| p)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// All values scaled by `c > 0` (the KL geometry is invariant to this).
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|&(v, p)| (v * c, p)).collect(),
        }
    }
}
