//! Functional data of the generalized model: `r₁`, `r₃`, `λ₂`.
//!
//! Two realizations are provided. [`XxxChain`] is the inhomogeneous
//! SU(3)-invariant chain with polynomial-normalized Lax operators; each site
//! carries either the fundamental representation or its conjugate.
//! [`GenericRational`] takes arbitrary rational `r₁`, `r₃`, `λ₂` given by
//! their roots.

use crate::error::{Error, Result};
use crate::kernel::{f, Coupling, VarSet, C64, POLE_EPS};

/// Representation carried by one chain site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SiteRep {
    /// Lax operator `(w - ξ) I + c P`.
    Fundamental,
    /// Lax operator `(w - ξ) I - c Q`, with `Q` the partial transpose of `P`.
    Conjugate,
}

/// Spacing used by [`XxxChain::split_homogeneous`].
pub const HOMOGENEOUS_SPLIT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct XxxChain {
    xi: Vec<C64>,
    reps: Vec<SiteRep>,
    c: Coupling,
}

impl XxxChain {
    /// All-fundamental chain with pairwise distinct inhomogeneities.
    pub fn new(xi: Vec<C64>, c: Coupling) -> Result<Self> {
        let reps = vec![SiteRep::Fundamental; xi.len()];
        Self::with_reps(xi, reps, c)
    }

    pub fn with_reps(xi: Vec<C64>, reps: Vec<SiteRep>, c: Coupling) -> Result<Self> {
        if xi.is_empty() {
            return Err(Error::Construction("chain needs at least one site".into()));
        }
        if reps.len() != xi.len() {
            return Err(Error::SizeMismatch {
                what: "site representations vs inhomogeneities",
                left: reps.len(),
                right: xi.len(),
            });
        }
        let xi = VarSet::new(xi, c)?.into_vec();
        Ok(XxxChain { xi, reps, c })
    }

    /// Skips the distinctness check. Coincident inhomogeneities are fine for
    /// the functional data but not for the inverse problem.
    pub fn new_unchecked(xi: Vec<C64>, reps: Vec<SiteRep>, c: Coupling) -> Self {
        assert_eq!(xi.len(), reps.len());
        XxxChain { xi, reps, c }
    }

    /// Homogeneous fundamental chain, split as `ξ_n = n · 10⁻³`.
    pub fn split_homogeneous(len: usize, c: Coupling) -> Result<Self> {
        let xi = (1..=len)
            .map(|n| C64::new(n as f64 * HOMOGENEOUS_SPLIT, 0.0))
            .collect();
        Self::new(xi, c)
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn xi(&self) -> &[C64] {
        &self.xi
    }

    pub fn reps(&self) -> &[SiteRep] {
        &self.reps
    }

    pub fn coupling(&self) -> Coupling {
        self.c
    }

    pub fn is_fundamental(&self) -> bool {
        self.reps.iter().all(|&r| r == SiteRep::Fundamental)
    }

    fn sites(&self, rep: SiteRep) -> impl Iterator<Item = C64> + '_ {
        self.xi
            .iter()
            .zip(&self.reps)
            .filter(move |(_, &r)| r == rep)
            .map(|(&x, _)| x)
    }

    /// Vacuum eigenvalue `λ_j(w)` of `T'_jj`, `j ∈ {1, 2, 3}`.
    pub fn lambda(&self, j: usize, w: C64) -> C64 {
        let cv = self.c.value();
        self.xi
            .iter()
            .zip(&self.reps)
            .map(|(&x, &r)| match (j, r) {
                (1, SiteRep::Fundamental) => w - x + cv,
                (3, SiteRep::Conjugate) => w - x - cv,
                _ => w - x,
            })
            .product()
    }
}

/// `scale · ∏(w - zeros) / ∏(w - poles)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFn {
    scale: C64,
    zeros: Vec<C64>,
    poles: Vec<C64>,
}

impl RationalFn {
    pub fn new(scale: C64, zeros: Vec<C64>, poles: Vec<C64>) -> Result<Self> {
        if scale.norm() == 0.0 {
            return Err(Error::Construction(
                "rational function with zero scale".into(),
            ));
        }
        for z in &zeros {
            if let Some(p) = poles
                .iter()
                .find(|p| (*p - z).norm() < 1e-10 * z.norm().max(1.0))
            {
                return Err(Error::Construction(format!(
                    "common root {z} / {p} in numerator and denominator"
                )));
            }
        }
        Ok(RationalFn {
            scale,
            zeros,
            poles,
        })
    }

    pub fn one() -> Self {
        RationalFn {
            scale: C64::new(1.0, 0.0),
            zeros: Vec::new(),
            poles: Vec::new(),
        }
    }

    pub fn scale(&self) -> C64 {
        self.scale
    }

    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }

    pub fn poles(&self) -> &[C64] {
        &self.poles
    }

    pub fn eval(&self, w: C64) -> Result<C64> {
        let mut den = C64::new(1.0, 0.0);
        for &p in &self.poles {
            if (w - p).norm() < POLE_EPS {
                return Err(Error::pole("rational function", w, p));
            }
            den *= w - p;
        }
        let num: C64 = self.zeros.iter().map(|&z| w - z).product();
        Ok(self.scale * num / den)
    }

    pub fn log_deriv(&self, w: C64) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for &z in &self.zeros {
            if (w - z).norm() < POLE_EPS {
                return Err(Error::pole("log-derivative at a zero", w, z));
            }
            acc += 1.0 / (w - z);
        }
        for &p in &self.poles {
            if (w - p).norm() < POLE_EPS {
                return Err(Error::pole("log-derivative at a pole", w, p));
            }
            acc -= 1.0 / (w - p);
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenericRational {
    pub r1: RationalFn,
    pub r3: RationalFn,
    pub lambda2: RationalFn,
    pub c: Coupling,
}

/// Diagonal twist `diag(κ₁, κ₂, κ₃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist([C64; 3]);

impl Twist {
    pub fn new(k1: C64, k2: C64, k3: C64) -> Result<Self> {
        if [k1, k2, k3]
            .iter()
            .any(|k| k.norm() == 0.0 || !k.is_finite())
        {
            return Err(Error::Construction(
                "twist components must be finite and nonzero".into(),
            ));
        }
        Ok(Twist([k1, k2, k3]))
    }

    pub fn identity() -> Self {
        Twist([C64::new(1.0, 0.0); 3])
    }

    /// `κ_s`, `s ∈ {1, 2, 3}`.
    pub fn kappa(&self, s: usize) -> C64 {
        self.0[s - 1]
    }

    pub fn as_array(&self) -> [C64; 3] {
        self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&k| k == C64::new(1.0, 0.0))
    }

    /// `(1 - t) self + t other`.
    pub fn lerp(&self, other: &Twist, t: f64) -> Twist {
        let mut k = [C64::new(0.0, 0.0); 3];
        for (i, slot) in k.iter_mut().enumerate() {
            *slot = self.0[i] * (1.0 - t) + other.0[i] * t;
        }
        Twist(k)
    }

    /// The twist with `κ_s` replaced by `κ_s + eps`.
    pub fn bumped(&self, s: usize, eps: f64) -> Twist {
        let mut k = self.0;
        k[s - 1] += eps;
        Twist(k)
    }
}

impl Default for Twist {
    fn default() -> Self {
        Twist::identity()
    }
}

/// Which ratio of vacuum eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ratio {
    /// `r₁ = λ₁/λ₂`
    R1,
    /// `r₃ = λ₃/λ₂`
    R3,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    XxxChain(XxxChain),
    GenericRational(GenericRational),
}

impl ModelSpec {
    pub fn coupling(&self) -> Coupling {
        match self {
            ModelSpec::XxxChain(ch) => ch.c,
            ModelSpec::GenericRational(g) => g.c,
        }
    }

    pub fn chain(&self) -> Option<&XxxChain> {
        match self {
            ModelSpec::XxxChain(ch) => Some(ch),
            ModelSpec::GenericRational(_) => None,
        }
    }

    pub fn eval_r(&self, which: Ratio, w: C64) -> Result<C64> {
        match self {
            ModelSpec::XxxChain(ch) => {
                let mut acc = C64::new(1.0, 0.0);
                match which {
                    Ratio::R1 => {
                        for x in ch.sites(SiteRep::Fundamental) {
                            acc *= f(w, x, ch.c)?;
                        }
                    }
                    Ratio::R3 => {
                        for x in ch.sites(SiteRep::Conjugate) {
                            acc *= f(x, w, ch.c)?;
                        }
                    }
                }
                Ok(acc)
            }
            ModelSpec::GenericRational(g) => match which {
                Ratio::R1 => g.r1.eval(w),
                Ratio::R3 => g.r3.eval(w),
            },
        }
    }

    pub fn r1(&self, w: C64) -> Result<C64> {
        self.eval_r(Ratio::R1, w)
    }

    pub fn r3(&self, w: C64) -> Result<C64> {
        self.eval_r(Ratio::R3, w)
    }

    /// `d/dw log r(w)`.
    pub fn eval_logderiv_r(&self, which: Ratio, w: C64) -> Result<C64> {
        match self {
            ModelSpec::XxxChain(ch) => {
                let cv = ch.c.value();
                let (rep, shift) = match which {
                    Ratio::R1 => (SiteRep::Fundamental, cv),
                    Ratio::R3 => (SiteRep::Conjugate, -cv),
                };
                let mut acc = C64::new(0.0, 0.0);
                for x in ch.sites(rep) {
                    let d = w - x;
                    if d.norm() < ch.c.pole_eps() || (d + shift).norm() < ch.c.pole_eps() {
                        return Err(Error::pole("log-derivative of r", w, x));
                    }
                    acc += 1.0 / (d + shift) - 1.0 / d;
                }
                Ok(acc)
            }
            ModelSpec::GenericRational(g) => match which {
                Ratio::R1 => g.r1.log_deriv(w),
                Ratio::R3 => g.r3.log_deriv(w),
            },
        }
    }

    pub fn eval_lambda2(&self, w: C64) -> Result<C64> {
        match self {
            ModelSpec::XxxChain(ch) => Ok(ch.lambda(2, w)),
            ModelSpec::GenericRational(g) => g.lambda2.eval(w),
        }
    }

    /// Un-normalized vacuum eigenvalue `λ_j(w)`; for the generic model
    /// `λ₁ = r₁ λ₂` and `λ₃ = r₃ λ₂`.
    pub fn eval_lambda(&self, j: usize, w: C64) -> Result<C64> {
        match self {
            ModelSpec::XxxChain(ch) => Ok(ch.lambda(j, w)),
            ModelSpec::GenericRational(g) => {
                let l2 = g.lambda2.eval(w)?;
                Ok(match j {
                    1 => g.r1.eval(w)? * l2,
                    3 => g.r3.eval(w)? * l2,
                    _ => l2,
                })
            }
        }
    }
}

impl From<XxxChain> for ModelSpec {
    fn from(ch: XxxChain) -> Self {
        ModelSpec::XxxChain(ch)
    }
}

impl From<GenericRational> for ModelSpec {
    fn from(g: GenericRational) -> Self {
        ModelSpec::GenericRational(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rel_err;
    use proptest::prelude::*;

    fn cx(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn single_site_r1() {
        let ch = XxxChain::new(vec![cx(0.0, 0.0)], Coupling::unit()).unwrap();
        let m = ModelSpec::from(ch);
        assert_eq!(m.r1(cx(1.0, 0.0)).unwrap(), cx(2.0, 0.0));
        assert_eq!(m.r3(cx(0.4, 0.1)).unwrap(), cx(1.0, 0.0));
        assert_eq!(m.eval_lambda2(cx(2.0, 0.0)).unwrap(), cx(2.0, 0.0));
        assert!(matches!(m.r1(cx(0.0, 0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn coincident_sites_rejected() {
        let r = XxxChain::new(vec![cx(0.0, 0.0), cx(0.0, 0.0)], Coupling::unit());
        assert!(matches!(r, Err(Error::Construction(_))));
    }

    #[test]
    fn lambda2_vanishes_at_sites() {
        let ch = XxxChain::new(
            vec![cx(0.1, 0.0), cx(-0.4, 0.2), cx(0.9, -0.3)],
            Coupling::unit(),
        )
        .unwrap();
        for &x in ch.xi() {
            assert_eq!(ch.lambda(2, x).norm(), 0.0);
        }
    }

    #[test]
    fn logderiv_matches_finite_difference() {
        let m = ModelSpec::from(
            XxxChain::new(vec![cx(0.0, 0.0), cx(0.3, 0.0)], Coupling::unit()).unwrap(),
        );
        let w = cx(-0.5, 0.0);
        let h = 1e-6;
        let fd = (m.r1(w + h).unwrap().ln() - m.r1(w - h).unwrap().ln()) / (2.0 * h);
        assert!(rel_err(m.eval_logderiv_r(Ratio::R1, w).unwrap(), fd) < 1e-8);
        assert_eq!(m.eval_logderiv_r(Ratio::R3, w).unwrap(), cx(0.0, 0.0));
    }

    #[test]
    fn conjugate_sites() {
        let c = Coupling::new(cx(0.8, 0.3)).unwrap();
        let ch = XxxChain::with_reps(
            vec![cx(0.1, 0.0), cx(-0.4, 0.2), cx(0.9, -0.3)],
            vec![SiteRep::Fundamental, SiteRep::Conjugate, SiteRep::Conjugate],
            c,
        )
        .unwrap();
        let m = ModelSpec::from(ch.clone());
        let w = cx(0.33, 0.71);
        let r3 = f(ch.xi()[1], w, c).unwrap() * f(ch.xi()[2], w, c).unwrap();
        assert!(rel_err(m.r3(w).unwrap(), r3) < 1e-14);
        assert!(rel_err(m.r3(w).unwrap() * ch.lambda(2, w), ch.lambda(3, w)) < 1e-14);
        assert!(rel_err(m.r1(w).unwrap() * ch.lambda(2, w), ch.lambda(1, w)) < 1e-14);
        let h = 1e-6;
        let fd = (m.r3(w + h).unwrap().ln() - m.r3(w - h).unwrap().ln()) / (2.0 * h);
        assert!(rel_err(m.eval_logderiv_r(Ratio::R3, w).unwrap(), fd) < 1e-8);
    }

    #[test]
    fn generic_rational() {
        let c = Coupling::unit();
        let g = GenericRational {
            r1: RationalFn::one(),
            r3: RationalFn::new(cx(2.0, 0.0), vec![cx(1.0, 0.0)], vec![cx(-1.0, 0.0)]).unwrap(),
            lambda2: RationalFn::one(),
            c,
        };
        let m = ModelSpec::from(g);
        assert_eq!(m.r1(cx(0.3, 0.2)).unwrap(), cx(1.0, 0.0));
        assert_eq!(
            m.eval_logderiv_r(Ratio::R1, cx(0.3, 0.2)).unwrap(),
            cx(0.0, 0.0)
        );
        assert_eq!(m.eval_lambda2(cx(5.0, 0.0)).unwrap(), cx(1.0, 0.0));
        assert_eq!(m.r3(cx(3.0, 0.0)).unwrap(), cx(1.0, 0.0));
        let w = cx(0.2, 0.5);
        let h = 1e-6;
        let fd = (m.r3(w + h).unwrap().ln() - m.r3(w - h).unwrap().ln()) / (2.0 * h);
        assert!(rel_err(m.eval_logderiv_r(Ratio::R3, w).unwrap(), fd) < 1e-8);
        assert!(RationalFn::new(cx(1.0, 0.0), vec![cx(1.0, 0.0)], vec![cx(1.0, 0.0)]).is_err());
        assert!(RationalFn::new(cx(0.0, 0.0), vec![], vec![]).is_err());
    }

    #[test]
    fn homogeneous_limit() {
        let c = Coupling::unit();
        let ch = XxxChain::new_unchecked(vec![cx(0.0, 0.0); 4], vec![SiteRep::Fundamental; 4], c);
        let m = ModelSpec::from(ch);
        let w = cx(0.7, -0.2);
        assert!(rel_err(m.r1(w).unwrap(), f(w, cx(0.0, 0.0), c).unwrap().powi(4)) < 1e-14);
        let split = ModelSpec::from(XxxChain::split_homogeneous(4, c).unwrap());
        assert!(rel_err(split.r1(w).unwrap(), m.r1(w).unwrap()) < 1e-2);
    }

    #[test]
    fn twist_validation() {
        assert!(Twist::new(cx(1.0, 0.0), cx(0.0, 0.0), cx(1.0, 0.0)).is_err());
        assert!(Twist::identity().is_identity());
        assert_eq!(Twist::identity().bumped(2, 0.5).kappa(2), cx(1.5, 0.0));
    }

    proptest! {
        #[test]
        fn r1_lambda2_is_polynomial(
            xs in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..5),
            wr in -3.0f64..3.0, wi in -3.0f64..3.0, m in 0usize..5,
        ) {
            let c = Coupling::unit();
            let xi: Vec<C64> = xs.iter().map(|&(a, b)| cx(a, b)).collect();
            let Ok(ch) = XxxChain::new(xi.clone(), c) else { return Ok(()) };
            let spec = ModelSpec::from(ch.clone());
            let w = cx(wr, wi);
            let poly: C64 = xi.iter().map(|&x| w - x + 1.0).product();
            if let Ok(r) = spec.r1(w) {
                prop_assert!(rel_err(r * spec.eval_lambda2(w).unwrap(), poly) < 1e-10);
            }
            // at a site the product stays finite: use the factored form
            let at = xi[m % xi.len()];
            let poly_at: C64 = xi.iter().map(|&x| at - x + 1.0).product();
            prop_assert!(rel_err(ch.lambda(1, at), poly_at) < 1e-12);
        }
    }
}
