use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};

/// A finitely supported probability mass function with sorted atoms.
///
/// `tail_bound` bounds the mass that enumeration left out (0 when exact).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretePmf {
    atoms: Vec<(f64, f64)>,
    tail_bound: f64,
}

impl DiscretePmf {
    /// Takes atoms in any order; they must have distinct finite locations
    /// and positive masses summing to 1 within `1e-9 + tail_bound`.
    pub fn new(mut atoms: Vec<(f64, f64)>, tail_bound: f64) -> Result<Self> {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if atoms.is_empty() {
            return Err(Error::NotNormalizable { sum: 0.0 });
        }
        if atoms
            .iter()
            .any(|a| !a.0.is_finite() || !(a.1 > 0.0) || !a.1.is_finite())
        {
            return Err(Error::InvalidArgument(
                "pmf atoms need finite locations and positive masses".into(),
            ));
        }
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("pmf atoms must be distinct".into()));
        }
        let sum: f64 = atoms.iter().map(|a| a.1).sum();
        if (sum - 1.0).abs() > 1e-9 + tail_bound {
            return Err(Error::NotNormalizable { sum });
        }
        Ok(DiscretePmf { atoms, tail_bound })
    }

    /// Normalizes nonnegative weights; zero weights are dropped.
    pub fn from_weights(atoms: Vec<(f64, f64)>, tail_bound: f64) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::NotNormalizable { sum: total });
        }
        let atoms = atoms
            .into_iter()
            .filter(|a| a.1 > 0.0)
            .map(|(x, w)| (x, w / total))
            .collect();
        DiscretePmf::new(atoms, tail_bound)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mass(&self, x: f64) -> f64 {
        self.atoms
            .binary_search_by(|a| a.0.total_cmp(&x))
            .map_or(0.0, |i| self.atoms[i].1)
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Lower quantile over the atoms.
    pub fn quantile(&self, p: f64) -> f64 {
        let mut acc = 0.0;
        for &(x, m) in &self.atoms {
            acc += m;
            if acc >= p {
                return x;
            }
        }
        self.atoms[self.atoms.len() - 1].0
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|a| a.0 <= x)
            .map(|a| a.1)
            .sum::<f64>()
            .min(1.0)
    }

    pub fn moments(&self) -> (f64, f64) {
        let mean: f64 = self.atoms.iter().map(|(x, p)| x * p).sum();
        let var = self.atoms.iter().map(|(x, p)| (x - mean) * (x - mean) * p).sum();
        (mean, var)
    }

    /// Total variation distance to another pmf.
    pub fn tv(&self, other: &DiscretePmf) -> f64 {
        tv_sorted(&self.atoms, &other.atoms)
    }

    /// The same law as a `pmf` spec.
    pub fn to_spec(&self) -> DistributionSpec {
        DistributionSpec::PmfTable {
            atoms: self.atoms.clone(),
        }
    }
}

/// `0.5 * sum |a - b|` over two mass lists sorted by location.
pub fn tv_sorted<K: PartialOrd + Copy>(a: &[(K, f64)], b: &[(K, f64)]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut s = 0.0;
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            s += a[i].1.abs();
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            s += b[j].1.abs();
            j += 1;
        } else {
            s += (a[i].1 - b[j].1).abs();
            i += 1;
            j += 1;
        }
    }
    0.5 * s
}
