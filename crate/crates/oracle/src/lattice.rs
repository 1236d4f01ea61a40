use nalgebra::DMatrix;
use su3ff::model::SiteRep;
use su3ff::{Twist, XxxChain, C64};

use crate::basis::{full_dim, SectorBasis};
use crate::error::{OracleError, Result};
use crate::L_MAX;

pub type CMatrix = DMatrix<C64>;

/// Order of the site factors in `T(w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MonodromyOrder {
    /// `T = L_L(w) ⋯ L_1(w)`.
    #[default]
    LastSiteLeft,
    /// `T = L_1(w) ⋯ L_L(w)`.
    FirstSiteLeft,
}

/// A dense operator on the quantum space, optionally restricted to a sector.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeOperator {
    pub matrix: CMatrix,
    pub sector: Option<(usize, usize)>,
}

impl LatticeOperator {
    pub fn full(matrix: CMatrix) -> Self {
        LatticeOperator {
            matrix,
            sector: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Block on `sector`; requires a full-space operator.
    pub fn restrict(&self, sector: &SectorBasis) -> LatticeOperator {
        assert!(self.sector.is_none(), "operator is already restricted");
        let idx = &sector.states;
        let matrix = CMatrix::from_fn(idx.len(), idx.len(), |i, j| self.matrix[(idx[i], idx[j])]);
        LatticeOperator {
            matrix,
            sector: Some((sector.a, sector.b)),
        }
    }

    /// Largest entry mapping `sector` out of itself.
    pub fn leakage(&self, sector: &SectorBasis) -> f64 {
        let mut worst = 0.0f64;
        for &j in &sector.states {
            for i in 0..self.matrix.nrows() {
                if sector.position(i).is_none() {
                    worst = worst.max(self.matrix[(i, j)].norm());
                }
            }
        }
        worst
    }
}

/// The 3×3 site block `L(w)_{ik}` acting on one site.
fn lax_block(rep: SiteRep, w: C64, xi: C64, c: C64, i: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(3, 3);
    if i == k {
        for d in 0..3 {
            m[(d, d)] = w - xi;
        }
    }
    match rep {
        // c P: entry (i,k) is E_{ki}
        SiteRep::Fundamental => m[(k, i)] += c,
        // -c Q: entry (i,k) is -E_{ik}
        SiteRep::Conjugate => m[(i, k)] -= c,
    }
    m
}

/// `T'(w)` as a 3×3 array of operators on the `3^L`-dimensional space.
#[derive(Debug, Clone)]
pub struct Monodromy {
    pub w: C64,
    entries: Vec<CMatrix>,
}

impl Monodromy {
    pub fn new(chain: &XxxChain, w: C64) -> Result<Self> {
        Self::with_order(chain, w, MonodromyOrder::default())
    }

    pub fn with_order(chain: &XxxChain, w: C64, order: MonodromyOrder) -> Result<Self> {
        if chain.len() > L_MAX {
            return Err(OracleError::SizeLimit {
                what: "chain",
                size: chain.len(),
                limit: L_MAX,
            });
        }
        let c = chain.coupling().value();
        let one = CMatrix::identity(1, 1);
        let mut t: Vec<CMatrix> = (0..9)
            .map(|e| {
                if e / 3 == e % 3 {
                    one.clone()
                } else {
                    CMatrix::zeros(1, 1)
                }
            })
            .collect();
        for (n, (&xi, &rep)) in chain.xi().iter().zip(chain.reps()).enumerate() {
            let dim = full_dim(n + 1);
            let lax: Vec<CMatrix> = (0..9)
                .map(|e| lax_block(rep, w, xi, c, e / 3, e % 3))
                .collect();
            let mut next = Vec::with_capacity(9);
            for i in 0..3 {
                for j in 0..3 {
                    let mut acc = CMatrix::zeros(dim, dim);
                    for k in 0..3 {
                        // the new site is the most significant digit
                        acc += match order {
                            MonodromyOrder::LastSiteLeft => lax[3 * i + k].kronecker(&t[3 * k + j]),
                            MonodromyOrder::FirstSiteLeft => {
                                lax[3 * k + j].kronecker(&t[3 * i + k])
                            }
                        };
                    }
                    next.push(acc);
                }
            }
            t = next;
        }
        Ok(Monodromy { w, entries: t })
    }

    /// `T'_{ij}(w)`, 1-based.
    pub fn entry(&self, i: usize, j: usize) -> &CMatrix {
        &self.entries[3 * (i - 1) + (j - 1)]
    }

    /// `Σ_s κ_s T'_ss(w)`.
    pub fn transfer(&self, twist: &Twist) -> CMatrix {
        let mut m = self.entry(1, 1) * twist.kappa(1);
        m += self.entry(2, 2) * twist.kappa(2);
        m += self.entry(3, 3) * twist.kappa(3);
        m
    }

    pub fn dim(&self) -> usize {
        self.entries[0].nrows()
    }
}

/// `λ₂(w)`, refusing points where it vanishes.
pub fn lambda2_checked(chain: &XxxChain, w: C64) -> Result<C64> {
    let l2 = chain.lambda(2, w);
    let eps = chain.coupling().pole_eps();
    if chain.xi().iter().any(|&x| (w - x).norm() < eps) {
        return Err(OracleError::Pole(format!("λ₂ vanishes at w = {w}")));
    }
    Ok(l2)
}

/// Normalized twisted transfer matrix `Σ_s κ_s T'_ss(w)/λ₂(w)` on `sector`.
pub fn sector_transfer(
    chain: &XxxChain,
    w: C64,
    twist: &Twist,
    sector: &SectorBasis,
) -> Result<LatticeOperator> {
    let l2 = lambda2_checked(chain, w)?;
    let mono = Monodromy::new(chain, w)?;
    let mut op = LatticeOperator::full(mono.transfer(twist)).restrict(sector);
    op.matrix /= l2;
    Ok(op)
}

/// Same without dividing by `λ₂`; finite at the inhomogeneities.
pub fn sector_transfer_unnormalized(
    chain: &XxxChain,
    w: C64,
    twist: &Twist,
    sector: &SectorBasis,
) -> Result<LatticeOperator> {
    let mono = Monodromy::new(chain, w)?;
    Ok(LatticeOperator::full(mono.transfer(twist)).restrict(sector))
}

/// `T'_ss(z)/λ₂(z)` on `sector`.
pub fn sector_diag_entry(
    chain: &XxxChain,
    s: usize,
    z: C64,
    sector: &SectorBasis,
) -> Result<LatticeOperator> {
    let l2 = lambda2_checked(chain, z)?;
    let mono = Monodromy::new(chain, z)?;
    let mut op = LatticeOperator::full(mono.entry(s, s).clone()).restrict(sector);
    op.matrix /= l2;
    Ok(op)
}

/// Full-space index of the reference state (symbol 1 on fundamental sites,
/// 3 on conjugate ones).
pub fn vacuum_index(reps: &[SiteRep]) -> usize {
    reps.iter()
        .enumerate()
        .map(|(n, r)| match r {
            SiteRep::Fundamental => 0,
            SiteRep::Conjugate => 2 * 3usize.pow(n as u32),
        })
        .sum()
}

/// Largest entry of `R'₁₂(w₁,w₂)T'₁(w₁)T'₂(w₂) - T'₂(w₂)T'₁(w₁)R'₁₂(w₁,w₂)`,
/// divided by the largest entry of either product.
pub fn rtt_defect(chain: &XxxChain, w1: C64, w2: C64) -> Result<f64> {
    let t1 = Monodromy::new(chain, w1)?;
    let t2 = Monodromy::new(chain, w2)?;
    let c = chain.coupling().value();
    let r = |i1: usize, i2: usize, k1: usize, k2: usize| -> C64 {
        let mut v = C64::new(0.0, 0.0);
        if i1 == k1 && i2 == k2 {
            v += w1 - w2;
        }
        if i1 == k2 && i2 == k1 {
            v += c;
        }
        v
    };
    let dim = t1.dim();
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for i1 in 1..=3 {
        for i2 in 1..=3 {
            for j1 in 1..=3 {
                for j2 in 1..=3 {
                    let mut lhs = CMatrix::zeros(dim, dim);
                    let mut rhs = CMatrix::zeros(dim, dim);
                    for k1 in 1..=3 {
                        for k2 in 1..=3 {
                            let rl = r(i1, i2, k1, k2);
                            if rl.norm() > 0.0 {
                                lhs += (t1.entry(k1, j1) * t2.entry(k2, j2)) * rl;
                            }
                            let rr = r(k1, k2, j1, j2);
                            if rr.norm() > 0.0 {
                                rhs += (t2.entry(i2, k2) * t1.entry(i1, k1)) * rr;
                            }
                        }
                    }
                    let amax = |m: &CMatrix| m.iter().fold(0.0f64, |a, z| a.max(z.norm()));
                    scale = scale.max(amax(&lhs)).max(amax(&rhs));
                    worst = worst.max(amax(&(lhs - rhs)));
                }
            }
        }
    }
    Ok(worst / scale.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use su3ff::Coupling;

    fn cx(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn chain(reps: &[SiteRep]) -> XxxChain {
        let xi = [
            cx(0.1, 0.2),
            cx(-0.3, 0.05),
            cx(0.45, -0.25),
            cx(-0.15, -0.4),
        ];
        XxxChain::with_reps(
            xi[..reps.len()].to_vec(),
            reps.to_vec(),
            Coupling::new(cx(0.9, 0.15)).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_site_fundamental() {
        let ch = chain(&[SiteRep::Fundamental]);
        let w = cx(0.7, -0.2);
        let m = Monodromy::new(&ch, w).unwrap();
        let c = ch.coupling().value();
        let xi = ch.xi()[0];
        // vacuum |1⟩
        assert!((m.entry(1, 1)[(0, 0)] - (w - xi + c)).norm() < 1e-14);
        assert!((m.entry(2, 2)[(0, 0)] - (w - xi)).norm() < 1e-14);
        assert!((m.entry(3, 3)[(0, 0)] - (w - xi)).norm() < 1e-14);
        // T'_12 |1⟩ = c|2⟩
        assert!((m.entry(1, 2)[(1, 0)] - c).norm() < 1e-14);
    }

    #[test]
    fn vacuum_eigenvalues_and_annihilation() {
        use SiteRep::{Conjugate as C, Fundamental as F};
        for reps in [vec![F, F, F], vec![F, C, F], vec![C, C]] {
            let ch = chain(&reps);
            let w = cx(0.33, 0.71);
            let m = Monodromy::new(&ch, w).unwrap();
            let vac = vacuum_index(&reps);
            let scale = (1..=3).map(|j| ch.lambda(j, w).norm()).fold(1.0, f64::max);
            for j in 1..=3 {
                let col = m.entry(j, j).column(vac).clone_owned();
                for i in 0..m.dim() {
                    let want = if i == vac {
                        ch.lambda(j, w)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    assert!((col[i] - want).norm() < 1e-12 * scale);
                }
            }
            for (j, k) in [(2, 1), (3, 1), (3, 2)] {
                assert!(m
                    .entry(j, k)
                    .column(vac)
                    .iter()
                    .all(|z| z.norm() < 1e-12 * scale));
                assert!(m
                    .entry(k, j)
                    .row(vac)
                    .iter()
                    .all(|z| z.norm() < 1e-12 * scale));
            }
        }
    }

    #[test]
    fn rtt_holds_for_both_orders_and_reps() {
        use SiteRep::{Conjugate as C, Fundamental as F};
        for reps in [vec![F, F], vec![F, C], vec![C, F, C]] {
            let ch = chain(&reps);
            assert!(rtt_defect(&ch, cx(0.2, 0.9), cx(-0.6, 0.3)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn transfer_matrices_commute_and_preserve_sectors() {
        use SiteRep::{Conjugate as C, Fundamental as F};
        let reps = vec![F, C, F];
        let ch = chain(&reps);
        let tw = Twist::new(cx(1.0, 0.0), cx(0.8, 0.3), cx(1.2, -0.4)).unwrap();
        let t1 = Monodromy::new(&ch, cx(0.2, 0.9)).unwrap().transfer(&tw);
        let t2 = Monodromy::new(&ch, cx(-0.7, 0.1)).unwrap().transfer(&tw);
        let comm = &t1 * &t2 - &t2 * &t1;
        let scale = (&t1 * &t2).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        assert!(comm.iter().all(|z| z.norm() < 1e-10 * scale));
        for a in 0..=3 {
            for b in 0..=3 {
                if let Ok(sec) = SectorBasis::new(&reps, a, b) {
                    let op = LatticeOperator::full(t1.clone());
                    assert!(op.leakage(&sec) == 0.0);
                }
            }
        }
    }

    #[test]
    fn size_limit() {
        let xi: Vec<C64> = (0..7).map(|n| cx(n as f64 * 0.1, 0.0)).collect();
        let ch = XxxChain::new(xi, Coupling::unit()).unwrap();
        assert!(matches!(
            Monodromy::new(&ch, cx(0.0, 1.0)),
            Err(OracleError::SizeLimit { .. })
        ));
    }

    #[test]
    fn vacuum_sector_transfer() {
        let ch = chain(&[SiteRep::Fundamental; 3]);
        let sec = SectorBasis::fundamental(3, 0, 0).unwrap();
        let w = cx(0.6, 0.4);
        let op = sector_transfer(&ch, w, &Twist::identity(), &sec).unwrap();
        let l2 = ch.lambda(2, w);
        let want = ch.lambda(1, w) / l2 + 1.0 + ch.lambda(3, w) / l2;
        assert_eq!(op.dim(), 1);
        assert!((op.matrix[(0, 0)] - want).norm() < 1e-13);
        assert!(sector_transfer(&ch, ch.xi()[1], &Twist::identity(), &sec).is_err());
    }

    fn inverse_problem_defect(order: MonodromyOrder) -> f64 {
        let ch = chain(&[SiteRep::Fundamental; 3]);
        let id = Twist::identity();
        let t: Vec<CMatrix> = ch
            .xi()
            .iter()
            .map(|&x| Monodromy::with_order(&ch, x, order).unwrap().transfer(&id))
            .collect();
        let mut worst = 0.0f64;
        for m in 1..=3 {
            for s in 1..=3 {
                let mut op = Monodromy::with_order(&ch, ch.xi()[m - 1], order)
                    .unwrap()
                    .entry(s, s)
                    .clone();
                for k in (0..m - 1).rev() {
                    op = &t[k] * op;
                }
                for k in 0..m {
                    op *= t[k].clone().try_inverse().unwrap();
                }
                for i in 0..27 {
                    for j in 0..27 {
                        let want = if i == j && crate::basis::symbol(i, m) == s {
                            1.0
                        } else {
                            0.0
                        };
                        worst = worst.max((op[(i, j)] - want).norm());
                    }
                }
            }
        }
        worst
    }

    #[test]
    fn site_order_reconstructs_local_projectors() {
        assert!(inverse_problem_defect(MonodromyOrder::LastSiteLeft) < 1e-10);
        assert!(inverse_problem_defect(MonodromyOrder::FirstSiteLeft) > 1e-3);
    }
}
