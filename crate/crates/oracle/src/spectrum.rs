use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use su3ff::formfactor::tau;
use su3ff::{BetheState, XxxChain, C64};

use crate::basis::SectorBasis;
use crate::error::{OracleError, Result};
use crate::lattice::{sector_transfer, CMatrix};

pub type CVector = DVector<C64>;

#[derive(Debug, Clone)]
pub struct MatchOptions {
    /// Probes used first.
    pub probes: usize,
    /// Probes are added one at a time up to this count while two
    /// eigenvalues keep matching.
    pub max_probes: usize,
    /// Match tolerance `tol·(1 + |τ|)`.
    pub tol: f64,
    /// Minimal distance of a probe from poles, in units of `|c|`.
    pub margin: f64,
    pub rng_seed: u64,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            probes: 3,
            max_probes: 8,
            tol: 1e-8,
            margin: 0.1,
            rng_seed: 20240611,
        }
    }
}

/// A Bethe state located in the dense spectrum.
#[derive(Debug, Clone)]
pub struct MatchedState {
    pub chain: XxxChain,
    pub sector: SectorBasis,
    /// Probe points with the matched eigenvalue at each.
    pub probes: Vec<(C64, C64)>,
    pub right: CVector,
    /// Left eigenvector from the transposed matrix (bilinear pairing).
    pub left: CVector,
    /// `max_k ‖T(w_k) R - τ_k R‖ / ‖R‖`.
    pub residual: f64,
}

impl MatchedState {
    /// `⟨L|R⟩` without complex conjugation.
    pub fn pairing(&self) -> C64 {
        bilinear(&self.left, &self.right)
    }
}

pub fn bilinear(x: &CVector, y: &CVector) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}

/// `count` deterministic probe points kept `margin·|c|` away from the
/// inhomogeneities, their `±c` shifts, and the given roots and their shifts.
pub fn probe_points(
    chain: &XxxChain,
    roots: &[C64],
    count: usize,
    margin: f64,
    rng_seed: u64,
) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let c = chain.coupling().value();
    let scale = c.norm();
    let center = chain.xi().iter().sum::<C64>() / chain.len() as f64;
    let mut bad: Vec<C64> = Vec::new();
    for &x in chain.xi().iter().chain(roots) {
        bad.extend([x, x + c, x - c]);
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w = center + C64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)) * scale;
        if bad.iter().all(|&p| (w - p).norm() > margin * scale) {
            out.push(w);
        }
    }
    out
}

/// Eigenvalues from the complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    let (_, t) = m.clone().schur().unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Eigenvector for the eigenvalue nearest `shift` by inverse iteration.
pub fn inverse_iteration(m: &CMatrix, shift: C64) -> Option<CVector> {
    let n = m.nrows();
    let nudge = C64::new(1e-13, 7e-14) * (1.0 + shift.norm());
    let shifted = m - CMatrix::identity(n, n) * (shift + nudge);
    let lu = shifted.lu();
    let mut x = CVector::from_fn(n, |i, _| C64::new(1.0, 0.1 * (i as f64 + 1.0).sqrt()));
    for _ in 0..4 {
        let y = lu.solve(&x)?;
        let norm = y.norm();
        if !norm.is_finite() || norm == 0.0 {
            return None;
        }
        x = y / C64::new(norm, 0.0);
    }
    Some(x)
}

/// Finds the common eigenvector of the sector transfer matrices whose
/// eigenvalues equal `τ(w|ū,v̄)` at every probe.
pub fn match_state(state: &BetheState, opts: &MatchOptions) -> Result<MatchedState> {
    let model = state.model();
    let chain = model
        .chain()
        .ok_or_else(|| OracleError::Unsupported("matching needs an explicit chain".into()))?
        .clone();
    if !state.on_shell() {
        return Err(su3ff::Error::Precondition("matching needs an on-shell state".into()).into());
    }
    let sector = SectorBasis::new(chain.reps(), state.a(), state.b())?;
    let roots: Vec<C64> = state.u().iter().chain(state.v()).copied().collect();
    let twist = *state.twist();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed ^ 0x5eed);
    let mut count = opts.probes.max(1);
    loop {
        let points = probe_points(&chain, &roots, count, opts.margin, opts.rng_seed);
        let mut mats = Vec::with_capacity(count);
        let mut taus = Vec::with_capacity(count);
        for &w in &points {
            let t = sector_transfer(&chain, w, &twist, &sector)?.matrix;
            let tv = tau(model, w, state.u(), state.v(), &twist)?;
            let ev = eigenvalues(&t);
            let tol = opts.tol * (1.0 + tv.norm());
            let distance = ev
                .iter()
                .map(|l| (l - tv).norm())
                .fold(f64::INFINITY, f64::min);
            if distance > tol {
                return Err(OracleError::NoMatch { probe: w, distance });
            }
            mats.push(t);
            taus.push(tv);
        }
        // a generic combination separates every joint eigenvalue
        let alphas: Vec<C64> = (0..count)
            .map(|_| C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        let n = sector.dim();
        let mut comb = CMatrix::zeros(n, n);
        let mut mu = C64::new(0.0, 0.0);
        let mut tol = 0.0;
        for k in 0..count {
            comb += &mats[k] * alphas[k];
            mu += taus[k] * alphas[k];
            tol += opts.tol * (1.0 + taus[k].norm());
        }
        let ev = eigenvalues(&comb);
        let hits: Vec<C64> = ev
            .iter()
            .copied()
            .filter(|l| (l - mu).norm() < tol)
            .collect();
        match hits.len() {
            0 => {
                let distance = ev
                    .iter()
                    .map(|l| (l - mu).norm())
                    .fold(f64::INFINITY, f64::min);
                return Err(OracleError::NoMatch {
                    probe: points[0],
                    distance,
                });
            }
            1 => {
                let right = inverse_iteration(&comb, hits[0]).ok_or(OracleError::NoMatch {
                    probe: points[0],
                    distance: f64::NAN,
                })?;
                let left =
                    inverse_iteration(&comb.transpose(), hits[0]).ok_or(OracleError::NoMatch {
                        probe: points[0],
                        distance: f64::NAN,
                    })?;
                let mut residual = 0.0f64;
                for k in 0..count {
                    let r = (&mats[k] * &right - &right * taus[k]).norm() / right.norm();
                    residual = residual.max(r / (1.0 + taus[k].norm()));
                }
                if residual > opts.tol.sqrt() {
                    return Err(OracleError::NoMatch {
                        probe: points[0],
                        distance: residual,
                    });
                }
                return Ok(MatchedState {
                    chain,
                    sector,
                    probes: points.into_iter().zip(taus).collect(),
                    right,
                    left,
                    residual,
                });
            }
            many if count >= opts.max_probes => {
                return Err(OracleError::Degenerate {
                    count: many,
                    probes: count,
                })
            }
            _ => count += 1,
        }
    }
}
