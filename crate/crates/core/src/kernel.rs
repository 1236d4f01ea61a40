//! Rational building blocks of the rational R-matrix.
//!
//! With `g(x,y) = c/(x-y)` the remaining kernels are
//! `f = 1 + g`, `h = f/g = (x-y+c)/c` and `t = g/h = c²/((x-y)(x-y+c))`.
//! A function applied to sets means the product over all elements, e.g.
//! `f(X, Y) = ∏_{x∈X} ∏_{y∈Y} f(x, y)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative scale for denominator underflow.
pub const POLE_EPS: f64 = 1e-12;
/// Relative scale for the distinctness of rapidities.
pub const DIST_EPS: f64 = 1e-10;

/// The R-matrix constant `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling(C64);

impl Coupling {
    pub fn new(c: C64) -> Result<Self> {
        if c.norm() == 0.0 || !c.is_finite() {
            return Err(Error::Construction(format!(
                "coupling must be finite and nonzero, got {c}"
            )));
        }
        Ok(Coupling(c))
    }

    /// `c = 1`.
    pub fn unit() -> Self {
        Coupling(C64::new(1.0, 0.0))
    }

    #[inline]
    pub fn value(self) -> C64 {
        self.0
    }

    /// Denominators below this magnitude are treated as poles.
    #[inline]
    pub fn pole_eps(self) -> f64 {
        POLE_EPS * self.0.norm().max(1.0)
    }

    /// Rapidities closer than this are treated as coincident.
    #[inline]
    pub fn dist_eps(self) -> f64 {
        DIST_EPS * self.0.norm().max(1.0)
    }
}

/// An ordered set of pairwise distinct complex rapidities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VarSet(Vec<C64>);

impl VarSet {
    /// Builds a set, rejecting elements closer than `c.dist_eps()`.
    pub fn new(elems: Vec<C64>, c: Coupling) -> Result<Self> {
        let eps = c.dist_eps();
        for (j, x) in elems.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::Construction(format!("non-finite rapidity {x}")));
            }
            for y in &elems[..j] {
                if (x - y).norm() < eps {
                    return Err(Error::Construction(format!(
                        "coincident rapidities {y} and {x}"
                    )));
                }
            }
        }
        Ok(VarSet(elems))
    }

    /// Builds a set without the distinctness check.
    pub fn new_unchecked(elems: Vec<C64>) -> Self {
        VarSet(elems)
    }

    pub fn empty() -> Self {
        VarSet(Vec::new())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.0
    }

    /// Elementwise shift `X + d`.
    pub fn shifted(&self, d: C64) -> VarSet {
        VarSet(self.0.iter().map(|x| x + d).collect())
    }

    /// The set with element `j` removed.
    pub fn without(&self, j: usize) -> VarSet {
        VarSet(without(&self.0, j))
    }

    pub fn sum(&self) -> C64 {
        self.0.iter().sum()
    }
}

impl std::ops::Index<usize> for VarSet {
    type Output = C64;
    fn index(&self, j: usize) -> &C64 {
        &self.0[j]
    }
}

impl From<VarSet> for Vec<C64> {
    fn from(s: VarSet) -> Self {
        s.0
    }
}

/// Copy of `xs` with element `j` removed.
pub fn without(xs: &[C64], j: usize) -> Vec<C64> {
    xs.iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, x)| *x)
        .collect()
}

/// The four kernel functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    G,
    F,
    H,
    T,
}

impl Kernel {
    fn name(self) -> &'static str {
        match self {
            Kernel::G => "g",
            Kernel::F => "f",
            Kernel::H => "h",
            Kernel::T => "t",
        }
    }
}

/// Evaluates one kernel at `(x, y)`.
pub fn eval_kernel(kernel: Kernel, x: C64, y: C64, c: Coupling) -> Result<C64> {
    let cv = c.value();
    let d = x - y;
    let eps = c.pole_eps();
    let check = |den: C64, which: &str| -> Result<()> {
        if den.norm() < eps {
            Err(Error::pole(format!("{}: {which}", kernel.name()), x, y))
        } else {
            Ok(())
        }
    };
    match kernel {
        Kernel::G => {
            check(d, "x - y")?;
            Ok(cv / d)
        }
        Kernel::F => {
            check(d, "x - y")?;
            Ok((d + cv) / d)
        }
        Kernel::H => Ok((d + cv) / cv),
        Kernel::T => {
            check(d, "x - y")?;
            check(d + cv, "x - y + c")?;
            Ok(cv * cv / (d * (d + cv)))
        }
    }
}

#[inline]
pub fn g(x: C64, y: C64, c: Coupling) -> Result<C64> {
    eval_kernel(Kernel::G, x, y, c)
}

#[inline]
pub fn f(x: C64, y: C64, c: Coupling) -> Result<C64> {
    eval_kernel(Kernel::F, x, y, c)
}

#[inline]
pub fn h(x: C64, y: C64, c: Coupling) -> C64 {
    (x - y + c.value()) / c.value()
}

#[inline]
pub fn t(x: C64, y: C64, c: Coupling) -> Result<C64> {
    eval_kernel(Kernel::T, x, y, c)
}

/// `1/g(x, y) = (x - y)/c`, finite everywhere.
#[inline]
pub fn g_inv(x: C64, y: C64, c: Coupling) -> C64 {
    (x - y) / c.value()
}

/// Double product `∏_{x∈X} ∏_{y∈Y} k(x, y)`; an empty side yields 1.
pub fn prod_kernel(kernel: Kernel, xs: &[C64], ys: &[C64], c: Coupling) -> Result<C64> {
    let mut acc = C64::new(1.0, 0.0);
    for &x in xs {
        for &y in ys {
            acc *= eval_kernel(kernel, x, y, c)?;
        }
    }
    Ok(acc)
}

/// Shorthand for products of `h`, which never fail.
pub fn prod_h(xs: &[C64], ys: &[C64], c: Coupling) -> C64 {
    xs.iter()
        .flat_map(|&x| ys.iter().map(move |&y| h(x, y, c)))
        .product()
}

/// Shorthand for products of `1/g`, which never fail.
pub fn prod_g_inv(xs: &[C64], ys: &[C64], c: Coupling) -> C64 {
    xs.iter()
        .flat_map(|&x| ys.iter().map(move |&y| g_inv(x, y, c)))
        .product()
}

/// Ordering of the Vandermonde-type product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaKind {
    /// `∏_{j<k} g(x_j, x_k)`
    Plain,
    /// `∏_{j>k} g(x_j, x_k)`
    Primed,
}

pub fn delta_prod(kind: DeltaKind, xs: &[C64], c: Coupling) -> Result<C64> {
    let mut acc = C64::new(1.0, 0.0);
    for j in 0..xs.len() {
        for k in (j + 1)..xs.len() {
            acc *= match kind {
                DeltaKind::Plain => g(xs[j], xs[k], c)?,
                DeltaKind::Primed => g(xs[k], xs[j], c)?,
            };
        }
    }
    Ok(acc)
}

/// Product over ordered pairs `j ≠ k` of `f(x_j, x_k)`.
pub fn prod_f_distinct_pairs(xs: &[C64], c: Coupling) -> Result<C64> {
    let mut acc = C64::new(1.0, 0.0);
    for (j, &x) in xs.iter().enumerate() {
        for (k, &y) in xs.iter().enumerate() {
            if j != k {
                acc *= f(x, y, c)?;
            }
        }
    }
    Ok(acc)
}
