//! Population covariance spectra, optionally with spikes.

use crate::error::{invalid, Result};
use crate::scalar::{count, Real};

/// Eigenvalues of a diagonal population covariance Σ.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationSpec<T = f64> {
    sigmas: Vec<T>,
}

/// Base spectrum with its leading `r` entries replaced by spikes.
#[derive(Clone, Debug, PartialEq)]
pub struct SpikedPopulation<T = f64> {
    pub base: PopulationSpec<T>,
    pub spike_values: Vec<T>,
}

/// Reason a population entry fails validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    BelowBand,
    AboveBand,
    /// Entry exceeds its predecessor.
    Ordering,
}

/// A failed check at a 1-based index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

impl<T: Real> PopulationSpec<T> {
    /// Wraps a vector of positive eigenvalues (order is not enforced; see
    /// [`PopulationSpec::validate`]).
    pub fn new(sigmas: Vec<T>) -> Result<Self> {
        if sigmas.is_empty() {
            return invalid("population must have at least one eigenvalue");
        }
        if let Some(s) = sigmas.iter().find(|s| !(**s > T::zero() && s.is_finite())) {
            return invalid(format!("population eigenvalues must be positive and finite, got {s}"));
        }
        Ok(PopulationSpec { sigmas })
    }

    pub fn identity(p: usize) -> Result<Self> {
        Self::new(vec![T::one(); p])
    }

    pub fn sigmas(&self) -> &[T] {
        &self.sigmas
    }

    pub fn p(&self) -> usize {
        self.sigmas.len()
    }

    /// Arithmetic mean of the eigenvalues.
    pub fn sigma_bar(&self) -> T {
        crate::scalar::mean(&self.sigmas)
    }

    /// Lists every index outside [τ, 1/τ] or out of descending order.
    pub fn validate(&self, tau: T) -> std::result::Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        for (i, &s) in self.sigmas.iter().enumerate() {
            if s < tau {
                out.push(Violation { index: i + 1, kind: ViolationKind::BelowBand });
            } else if s > T::one() / tau {
                out.push(Violation { index: i + 1, kind: ViolationKind::AboveBand });
            }
            if i > 0 && s > self.sigmas[i - 1] {
                out.push(Violation { index: i + 1, kind: ViolationKind::Ordering });
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Distinct eigenvalues with their relative frequencies.
    pub(crate) fn atoms(&self) -> Vec<(T, T)> {
        let mut v = self.sigmas.clone();
        v.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        let mut out: Vec<(T, usize)> = Vec::new();
        for s in v {
            match out.last_mut() {
                Some((t, k)) if *t == s => *k += 1,
                _ => out.push((s, 1)),
            }
        }
        let p = count::<T>(self.sigmas.len());
        out.into_iter().map(|(s, k)| (s, count::<T>(k) / p)).collect()
    }
}

impl<T: Real> SpikedPopulation<T> {
    pub fn r(&self) -> usize {
        self.spike_values.len()
    }

    /// The full spectrum σ̃ = (spikes, base[r..]).
    pub fn spectrum(&self) -> PopulationSpec<T> {
        let r = self.r();
        let mut s = self.spike_values.clone();
        s.extend_from_slice(&self.base.sigmas[r..]);
        PopulationSpec { sigmas: s }
    }

    pub fn sigma_bar(&self) -> T {
        self.spectrum().sigma_bar()
    }
}

/// Identity base of dimension `p` with the given spikes prepended.
pub fn johnstone_spiked<T: Real>(p: usize, spikes: &[T]) -> Result<SpikedPopulation<T>> {
    if p <= spikes.len() {
        return invalid(format!("p = {p} must exceed the number of spikes {}", spikes.len()));
    }
    if let Some(s) = spikes.iter().find(|s| !(**s > T::one() && s.is_finite())) {
        return invalid(format!("spikes must exceed 1, got {s}"));
    }
    if spikes.windows(2).any(|w| w[1] > w[0]) {
        return invalid("spikes must be in non-increasing order");
    }
    Ok(SpikedPopulation { base: PopulationSpec::identity(p)?, spike_values: spikes.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn johnstone_examples() {
        let s = johnstone_spiked(200, &[25.0, 20.0]).unwrap().spectrum();
        assert_eq!(&s.sigmas()[..3], &[25.0, 20.0, 1.0]);
        assert_eq!(s.p(), 200);
        let plain = johnstone_spiked::<f64>(10, &[]).unwrap().spectrum();
        assert_eq!(plain, PopulationSpec::identity(10).unwrap());
        assert_eq!(johnstone_spiked(100, &[25.0, 20.0, 5.0]).unwrap().r(), 3);
        assert!(johnstone_spiked(100, &[5.0, 20.0]).is_err());
        assert!(johnstone_spiked(100, &[0.5]).is_err());
        assert!(johnstone_spiked(2, &[3.0, 2.0]).is_err());
    }

    #[test]
    fn sigma_bar_examples() {
        assert_eq!(PopulationSpec::<f64>::identity(50).unwrap().sigma_bar(), 1.0);
        let p = PopulationSpec::<f64>::new(vec![2.0, 1.0, 1.0]).unwrap();
        assert!((p.sigma_bar() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(PopulationSpec::<f64>::new(vec![0.3; 7]).unwrap().sigma_bar(), 0.3);
    }

    #[test]
    fn spiked_mean_tends_to_base() {
        let gaps: Vec<f64> = [100, 1000, 10000]
            .iter()
            .map(|&p| (johnstone_spiked::<f64>(p, &[25.0, 20.0]).unwrap().sigma_bar() - 1.0).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] < 0.01);
    }

    #[test]
    fn validation() {
        assert!(PopulationSpec::<f64>::identity(4).unwrap().validate(0.5).is_ok());
        let v = PopulationSpec::<f64>::new(vec![3.0, 1.0]).unwrap().validate(0.5).unwrap_err();
        assert_eq!(v, vec![Violation { index: 1, kind: ViolationKind::AboveBand }]);
        let v = PopulationSpec::<f64>::new(vec![1.0, 2.0]).unwrap().validate(0.4).unwrap_err();
        assert_eq!(v, vec![Violation { index: 2, kind: ViolationKind::Ordering }]);
    }

    #[test]
    fn atoms_collapse_duplicates() {
        let p = PopulationSpec::<f64>::new(vec![25.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(p.atoms(), vec![(25.0, 0.25), (1.0, 0.75)]);
    }
}
