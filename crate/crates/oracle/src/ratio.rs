use su3ff::C64;

use crate::basis::{symbol, SectorBasis};
use crate::error::{OracleError, Result};
use crate::lattice::{sector_diag_entry, CMatrix, LatticeOperator};
use crate::spectrum::{bilinear, MatchedState};

fn element(l: &MatchedState, op: &CMatrix, r: &MatchedState) -> C64 {
    bilinear(&l.left, &(op * &r.right))
}

fn check_s(s: usize) -> Result<()> {
    if (1..=3).contains(&s) {
        Ok(())
    } else {
        Err(su3ff::Error::Construction(format!("operator index s = {s} outside 1..=3")).into())
    }
}

fn same_sector(c: &MatchedState, b: &MatchedState) -> bool {
    (c.sector.a, c.sector.b) == (b.sector.a, b.sector.b) && c.chain == b.chain
}

/// `⟨L|T'_ss(z)/λ₂(z)|R⟩ / ⟨L|R⟩`.
pub fn ratio_diag(s: usize, z: C64, st: &MatchedState) -> Result<C64> {
    check_s(s)?;
    let op = sector_diag_entry(&st.chain, s, z, &st.sector)?;
    Ok(element(st, &op.matrix, st) / st.pairing())
}

/// `⟨L_C|T̂_ss(z)|R_B⟩⟨L_B|T̂_s's'(z')|R_C⟩ / (⟨L_C|R_C⟩⟨L_B|R_B⟩)`, with
/// `T̂ = T'/λ₂`; zero across sectors.
pub fn ratio_offdiag(
    s: usize,
    s2: usize,
    z: C64,
    z2: C64,
    c: &MatchedState,
    b: &MatchedState,
) -> Result<C64> {
    check_s(s)?;
    check_s(s2)?;
    if !same_sector(c, b) {
        return Ok(C64::new(0.0, 0.0));
    }
    distinct(c, b)?;
    let t1 = sector_diag_entry(&c.chain, s, z, &c.sector)?;
    let t2 = sector_diag_entry(&c.chain, s2, z2, &c.sector)?;
    Ok(element(c, &t1.matrix, b) * element(b, &t2.matrix, c) / (c.pairing() * b.pairing()))
}

fn distinct(c: &MatchedState, b: &MatchedState) -> Result<()> {
    let gap = c
        .probes
        .iter()
        .zip(&b.probes)
        .map(|((_, x), (_, y))| (x - y).norm() / (1.0 + x.norm()))
        .fold(0.0f64, f64::max);
    if c.probes
        .iter()
        .map(|p| p.0)
        .ne(b.probes.iter().map(|p| p.0))
        || gap > 1e-6
    {
        Ok(())
    } else {
        Err(OracleError::Degenerate {
            count: 2,
            probes: c.probes.len(),
        })
    }
}

/// Projector `E^{ss}` on site `m` (1-based), identity elsewhere, on `sector`.
pub fn local_op(s: usize, m: usize, sector: &SectorBasis) -> Result<LatticeOperator> {
    check_s(s)?;
    if m == 0 || m > sector.len {
        return Err(OracleError::SiteOutOfRange {
            site: m,
            len: sector.len,
        });
    }
    let n = sector.dim();
    let matrix = CMatrix::from_fn(n, n, |i, j| {
        if i == j && symbol(sector.states[i], m) == s {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(LatticeOperator {
        matrix,
        sector: Some((sector.a, sector.b)),
    })
}

/// `⟨L|E^{ss}_m|R⟩ / ⟨L|R⟩`.
pub fn ratio_local_diag(s: usize, m: usize, st: &MatchedState) -> Result<C64> {
    let op = local_op(s, m, &st.sector)?;
    Ok(element(st, &op.matrix, st) / st.pairing())
}

/// `⟨L_C|E^{ss}_m|R_B⟩⟨L_B|T̂_s's'(z')|R_C⟩ / (⟨L_C|R_C⟩⟨L_B|R_B⟩)`.
pub fn ratio_local(
    s: usize,
    m: usize,
    s2: usize,
    z2: C64,
    c: &MatchedState,
    b: &MatchedState,
) -> Result<C64> {
    check_s(s2)?;
    if !same_sector(c, b) {
        return Ok(C64::new(0.0, 0.0));
    }
    distinct(c, b)?;
    let e = local_op(s, m, &c.sector)?;
    let t2 = sector_diag_entry(&c.chain, s2, z2, &c.sector)?;
    Ok(element(c, &e.matrix, b) * element(b, &t2.matrix, c) / (c.pairing() * b.pairing()))
}
