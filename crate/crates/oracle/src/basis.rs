use std::collections::HashMap;

use su3ff::model::SiteRep;

use crate::error::{OracleError, Result};

/// Product basis `|e_1 … e_L⟩`, `e_n ∈ {1,2,3}`, indexed by
/// `Σ (e_n - 1)·3^{n-1}` (site 1 least significant).
pub fn full_dim(len: usize) -> usize {
    3usize.pow(len as u32)
}

/// Symbol (1-based) at site `n` (1-based) of basis index `idx`.
pub fn symbol(idx: usize, n: usize) -> usize {
    (idx / 3usize.pow(n as u32 - 1)) % 3 + 1
}

/// Contribution of one site to `(a, b)`. Fundamental sites start from
/// symbol 1, conjugate sites from symbol 3.
pub fn site_weight(rep: SiteRep, e: usize) -> (usize, usize) {
    match rep {
        SiteRep::Fundamental => ((e >= 2) as usize, (e == 3) as usize),
        SiteRep::Conjugate => ((e == 1) as usize, (e <= 2) as usize),
    }
}

/// The weight sector `(a, b)` of a chain: basis states whose site weights
/// add up to `(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBasis {
    pub len: usize,
    pub a: usize,
    pub b: usize,
    /// Full-space indices, increasing.
    pub states: Vec<usize>,
    position: HashMap<usize, usize>,
}

impl SectorBasis {
    pub fn new(reps: &[SiteRep], a: usize, b: usize) -> Result<Self> {
        let len = reps.len();
        let states: Vec<usize> = (0..full_dim(len))
            .filter(|&idx| {
                let (mut sa, mut sb) = (0, 0);
                for (n, &rep) in reps.iter().enumerate() {
                    let (da, db) = site_weight(rep, symbol(idx, n + 1));
                    sa += da;
                    sb += db;
                }
                (sa, sb) == (a, b)
            })
            .collect();
        if states.is_empty() {
            return Err(OracleError::InvalidSector { a, b, len });
        }
        let position = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(SectorBasis {
            len,
            a,
            b,
            states,
            position,
        })
    }

    /// All-fundamental chain: occupations `(L - a, a - b, b)`.
    pub fn fundamental(len: usize, a: usize, b: usize) -> Result<Self> {
        if a > len || b > a {
            return Err(OracleError::InvalidSector { a, b, len });
        }
        Self::new(&vec![SiteRep::Fundamental; len], a, b)
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Sector position of a full-space index.
    pub fn position(&self, idx: usize) -> Option<usize> {
        self.position.get(&idx).copied()
    }

    /// Occupation numbers `(N₁, N₂, N₃)` of a basis state.
    pub fn occupations(&self, k: usize) -> [usize; 3] {
        let mut occ = [0; 3];
        for n in 1..=self.len {
            occ[symbol(self.states[k], n) - 1] += 1;
        }
        occ
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn multinomial(n: usize, ks: [usize; 3]) -> usize {
        let fact = |m: usize| (1..=m).product::<usize>();
        fact(n) / ks.iter().map(|&k| fact(k)).product::<usize>()
    }

    #[test]
    fn fundamental_dimensions_are_multinomial() {
        for len in 1..=5 {
            for a in 0..=len {
                for b in 0..=a {
                    let s = SectorBasis::fundamental(len, a, b).unwrap();
                    assert_eq!(s.dim(), multinomial(len, [len - a, a - b, b]));
                    for k in 0..s.dim() {
                        assert_eq!(s.occupations(k), [len - a, a - b, b]);
                    }
                }
            }
        }
    }

    #[test]
    fn sectors_partition_the_space() {
        let reps = [
            SiteRep::Fundamental,
            SiteRep::Conjugate,
            SiteRep::Fundamental,
        ];
        let mut total = 0;
        for a in 0..=3 {
            for b in 0..=3 {
                if let Ok(s) = SectorBasis::new(&reps, a, b) {
                    total += s.dim();
                }
            }
        }
        assert_eq!(total, 27);
    }

    #[test]
    fn invalid_sectors() {
        assert!(SectorBasis::fundamental(3, 1, 2).is_err());
        assert!(SectorBasis::fundamental(3, 4, 0).is_err());
        // (0,1) needs a conjugate site
        assert!(SectorBasis::new(&[SiteRep::Conjugate; 2], 0, 1).is_ok());
    }

    #[test]
    fn l3_one_magnon_dim() {
        assert_eq!(SectorBasis::fundamental(3, 1, 0).unwrap().dim(), 3);
        assert_eq!(SectorBasis::fundamental(3, 0, 0).unwrap().dim(), 1);
    }
}
