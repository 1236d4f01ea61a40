//! Partition sums over splittings of two rapidity sets.
//!
//! `G_n(ζ)` sums, over all splittings `η = η_I ∪ η_II`, `ξ = ξ_I ∪ ξ_II` with
//! `#η_I = #ξ_I`, the terms
//! `ζ^{n_II} f(ξ_I, ξ_II) f(η_II, η_I) K(η_I|ξ_I) K(ξ_II + c|η_II)`.
//! Only its value and first derivative at `ζ = 1` have closed forms; both
//! are provided here alongside the brute-force sums.

use crate::dwpf::dwpf;
use crate::error::{Error, Result};
use crate::kernel::{g_inv, prod_h, prod_kernel, Coupling, Kernel, C64};
use crate::numeric::{cpow, CompensatedSum, ResidueCheck};

/// Default cap on `n`; `C(16, 8) = 12870` partition pairs.
pub const DEFAULT_MAX_N: usize = 8;

/// A splitting of `ξ` and `η`; bit `i` set means element `i` is in part I.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionPair {
    xi_part_one: u32,
    eta_part_one: u32,
}

impl PartitionPair {
    pub fn new(n: usize, xi_part_one: u32, eta_part_one: u32) -> Result<Self> {
        if n > 31 || (xi_part_one >> n) != 0 || (eta_part_one >> n) != 0 {
            return Err(Error::Construction(format!(
                "partition masks exceed {n} elements"
            )));
        }
        if xi_part_one.count_ones() != eta_part_one.count_ones() {
            return Err(Error::Construction(format!(
                "part I cardinalities differ: #ξ_I = {}, #η_I = {}",
                xi_part_one.count_ones(),
                eta_part_one.count_ones()
            )));
        }
        Ok(PartitionPair {
            xi_part_one,
            eta_part_one,
        })
    }

    pub fn n_one(&self) -> usize {
        self.xi_part_one.count_ones() as usize
    }

    /// All pairs with equal part-I cardinalities.
    pub fn enumerate(n: usize) -> impl Iterator<Item = PartitionPair> {
        let full = 1u32 << n;
        (0..full).flat_map(move |xm| {
            (0..full)
                .filter(move |em| em.count_ones() == xm.count_ones())
                .map(move |em| PartitionPair {
                    xi_part_one: xm,
                    eta_part_one: em,
                })
        })
    }
}

fn split(xs: &[C64], mask: u32) -> (Vec<C64>, Vec<C64>) {
    let mut one = Vec::new();
    let mut two = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        if mask & (1 << i) != 0 {
            one.push(x);
        } else {
            two.push(x);
        }
    }
    (one, two)
}

/// How to evaluate `G̃_n(γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumMode {
    Brute,
    Closed,
}

/// Principal branch used for `ζ^{(η-ξ)/c}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchNote {
    pub base: C64,
    pub exponent: C64,
    /// `log ζ` on the principal branch.
    pub log_base: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrder {
    pub value: C64,
    pub branch: BranchNote,
}

/// A brute-force sum and its largest term.
///
/// The sums cancel heavily once the points spread over more than `|c|`;
/// `max_term / |value|` bounds the digits lost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteSum {
    pub value: C64,
    pub max_term: f64,
}

impl BruteSum {
    pub fn cancellation(&self) -> f64 {
        self.max_term / self.value.norm()
    }
}

/// The sets `ξ`, `η` entering the partition sums.
#[derive(Debug, Clone)]
pub struct PartitionSum<'a> {
    xi: &'a [C64],
    eta: &'a [C64],
    c: Coupling,
    max_n: usize,
}

impl<'a> PartitionSum<'a> {
    pub fn new(xi: &'a [C64], eta: &'a [C64], c: Coupling) -> Result<Self> {
        Self::with_cap(xi, eta, c, DEFAULT_MAX_N)
    }

    pub fn with_cap(xi: &'a [C64], eta: &'a [C64], c: Coupling, max_n: usize) -> Result<Self> {
        if xi.len() != eta.len() {
            return Err(Error::SizeMismatch {
                what: "partition-sum sets",
                left: xi.len(),
                right: eta.len(),
            });
        }
        if xi.len() > max_n.min(16) {
            return Err(Error::SizeLimit {
                what: "partition-sum size n",
                size: xi.len(),
                limit: max_n.min(16),
            });
        }
        Ok(PartitionSum { xi, eta, c, max_n })
    }

    pub fn n(&self) -> usize {
        self.xi.len()
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// One summand of `G_n` without the `ζ^{n_II}` weight.
    pub fn summand(&self, p: PartitionPair) -> Result<C64> {
        let c = self.c;
        let (xi1, xi2) = split(self.xi, p.xi_part_one);
        let (eta1, eta2) = split(self.eta, p.eta_part_one);
        let xi2_shift: Vec<C64> = xi2.iter().map(|x| x + c.value()).collect();
        Ok(prod_kernel(Kernel::F, &xi1, &xi2, c)?
            * prod_kernel(Kernel::F, &eta2, &eta1, c)?
            * dwpf(&eta1, &xi1, c)?
            * dwpf(&xi2_shift, &eta2, c)?)
    }

    /// `G_n(ζ)` summed over all `C(2n, n)` partition pairs.
    pub fn brute(&self, zeta: C64) -> Result<C64> {
        Ok(self.brute_detail(zeta)?.value)
    }

    /// As [`PartitionSum::brute`], also reporting the largest summand.
    pub fn brute_detail(&self, zeta: C64) -> Result<BruteSum> {
        let n = self.n();
        let mut acc = CompensatedSum::new();
        let mut max_term: f64 = 0.0;
        for p in PartitionPair::enumerate(n) {
            let n_two = (n - p.n_one()) as i32;
            let term = zeta.powi(n_two) * self.summand(p)?;
            max_term = max_term.max(term.norm());
            acc.add(term);
        }
        Ok(BruteSum {
            value: acc.value(),
            max_term,
        })
    }

    /// `G_n(ζ)` as a sum over splittings of `ξ` only:
    /// `ζ^{n_II} (-1)^{n_I} f(ξ_I, ξ_II) f(η, ξ_I) K_n({ξ_I - c, ξ_II + c}|η)`.
    pub fn single(&self, zeta: C64) -> Result<C64> {
        let n = self.n();
        let c = self.c;
        let mut acc = CompensatedSum::new();
        for mask in 0u32..(1u32 << n) {
            let (xi1, xi2) = split(self.xi, mask);
            let shifted: Vec<C64> = xi1
                .iter()
                .map(|x| x - c.value())
                .chain(xi2.iter().map(|x| x + c.value()))
                .collect();
            let sign = if xi1.len() % 2 == 0 { 1.0 } else { -1.0 };
            let term = zeta.powi(xi2.len() as i32)
                * sign
                * prod_kernel(Kernel::F, &xi1, &xi2, c)?
                * prod_kernel(Kernel::F, self.eta, &xi1, c)?
                * dwpf(&shifted, self.eta, c)?;
            acc.add(term);
        }
        Ok(acc.value())
    }

    /// `(-1)^n t(ξ, η) h(η, η) h(ξ, ξ)`, the exact value of `G_n(1)`.
    pub fn closed_at_one(&self) -> Result<C64> {
        let c = self.c;
        let sign = if self.n() % 2 == 0 { 1.0 } else { -1.0 };
        Ok(sign
            * prod_kernel(Kernel::T, self.xi, self.eta, c)?
            * prod_h(self.eta, self.eta, c)
            * prod_h(self.xi, self.xi, c))
    }

    /// `(-1)^n ζ^{(η-ξ)/c} t(ξ, η) h(η, η) h(ξ, ξ)`, equal to `G_n(ζ)` up to
    /// `O((ζ-1)²)`. The exponent depends only on `Ση - Σξ`.
    pub fn first_order(&self, zeta: C64) -> Result<FirstOrder> {
        let c = self.c;
        let exponent = (self.eta.iter().sum::<C64>() - self.xi.iter().sum::<C64>()) / c.value();
        if zeta.norm() == 0.0 {
            return Err(Error::ZeroArgument("ζ^{(η-ξ)/c}".into()));
        }
        let branch = BranchNote {
            base: zeta,
            exponent,
            log_base: zeta.ln(),
        };
        Ok(FirstOrder {
            value: cpow(zeta, exponent) * self.closed_at_one()?,
            branch,
        })
    }

    /// `G̃_n(γ) = γ G_n(1) + G_n'(1)`.
    pub fn gtilde(&self, gamma: C64, mode: SumMode) -> Result<C64> {
        match mode {
            SumMode::Brute => {
                let n = self.n();
                let mut acc = CompensatedSum::new();
                for p in PartitionPair::enumerate(n) {
                    let n_two = (n - p.n_one()) as f64;
                    acc.add((gamma + n_two) * self.summand(p)?);
                }
                Ok(acc.value())
            }
            SumMode::Closed => {
                let shift: C64 = self
                    .eta
                    .iter()
                    .zip(self.xi)
                    .map(|(&e, &x)| g_inv(e, x, self.c))
                    .sum();
                Ok(self.closed_at_one()? * (gamma + shift))
            }
        }
    }
}

/// Residue of `G̃_n(γ)` (brute force) at `η_n → ξ_n`, compared against
/// `c f(η̄_n, ξ_n) f(ξ_n, ξ̄_n) G̃_{n-1}(γ)`. The last element of `eta` is ignored.
pub fn gtilde_residue_at_xi(
    xi: &[C64],
    eta: &[C64],
    gamma: C64,
    c: Coupling,
    deltas: [f64; 2],
) -> Result<ResidueCheck> {
    let n = check_nonempty(xi, eta)?;
    let xn = xi[n - 1];
    let reduced = PartitionSum::new(&xi[..n - 1], &eta[..n - 1], c)?;
    let expected = c.value()
        * prod_kernel(Kernel::F, &eta[..n - 1], &[xn], c)?
        * prod_kernel(Kernel::F, &[xn], &xi[..n - 1], c)?
        * reduced.gtilde(gamma, SumMode::Brute)?;
    let mut e = eta.to_vec();
    let mut samples = Vec::with_capacity(2);
    for delta in deltas {
        e[n - 1] = xn + delta;
        let v = PartitionSum::new(xi, &e, c)?.gtilde(gamma, SumMode::Brute)?;
        samples.push((delta, v * delta));
    }
    Ok(ResidueCheck::from_samples(samples, expected))
}

/// Residue of `G̃_n(γ)` at `η_n → ξ_n + c`.
///
/// The pole is carried by `h⁻¹(ξ_n, η_n)`; the samples are
/// `h(ξ_n, η_n) G̃_n` at `η_n = ξ_n + c + δ`, compared against
/// `f(ξ̄_n, ξ_n) f(ξ_n + c, η̄_n) G̃_{n-1}(γ + 1)`.
pub fn gtilde_residue_at_xi_plus_c(
    xi: &[C64],
    eta: &[C64],
    gamma: C64,
    c: Coupling,
    deltas: [f64; 2],
) -> Result<ResidueCheck> {
    let n = check_nonempty(xi, eta)?;
    let xn = xi[n - 1];
    let pole = xn + c.value();
    let reduced = PartitionSum::new(&xi[..n - 1], &eta[..n - 1], c)?;
    let expected = prod_kernel(Kernel::F, &xi[..n - 1], &[xn], c)?
        * prod_kernel(Kernel::F, &[pole], &eta[..n - 1], c)?
        * reduced.gtilde(gamma + 1.0, SumMode::Brute)?;
    let mut e = eta.to_vec();
    let mut samples = Vec::with_capacity(2);
    for delta in deltas {
        e[n - 1] = pole + delta;
        let v = PartitionSum::new(xi, &e, c)?.gtilde(gamma, SumMode::Brute)?;
        samples.push((delta, v * crate::kernel::h(xn, e[n - 1], c)));
    }
    Ok(ResidueCheck::from_samples(samples, expected))
}

fn check_nonempty(xi: &[C64], eta: &[C64]) -> Result<usize> {
    if xi.len() != eta.len() || xi.is_empty() {
        return Err(Error::SizeMismatch {
            what: "residue sets",
            left: xi.len(),
            right: eta.len(),
        });
    }
    Ok(xi.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::t;
    use crate::numeric::rel_err;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sets(rng: &mut ChaCha8Rng, n: usize) -> (Vec<C64>, Vec<C64>) {
        random_sets_scaled(rng, n, 1.5)
    }

    fn random_sets_scaled(rng: &mut ChaCha8Rng, n: usize, w: f64) -> (Vec<C64>, Vec<C64>) {
        let mut draw = || C64::new(rng.random_range(-w..w), rng.random_range(-w..w));
        let xi = (0..n).map(|_| draw()).collect();
        let eta = (0..n).map(|_| draw()).collect();
        (xi, eta)
    }

    #[test]
    fn partition_pair_cardinality_enforced() {
        assert!(PartitionPair::new(3, 0b011, 0b101).is_ok());
        assert!(PartitionPair::new(3, 0b011, 0b100).is_err());
        assert!(PartitionPair::new(2, 0b100, 0b100).is_err());
        for n in 0..6 {
            let count = PartitionPair::enumerate(n).count();
            let binom: usize = (1..=n)
                .map(|k| (n + k) as f64 / k as f64)
                .product::<f64>()
                .round() as usize;
            assert_eq!(count, binom, "n = {n}");
        }
    }

    #[test]
    fn empty_sums() {
        let c = Coupling::unit();
        let ps = PartitionSum::new(&[], &[], c).unwrap();
        let one = C64::new(1.0, 0.0);
        assert_eq!(ps.brute(C64::new(0.7, 0.2)).unwrap(), one);
        assert_eq!(ps.single(C64::new(0.7, 0.2)).unwrap(), one);
        let gamma = C64::new(0.3, -1.2);
        assert_eq!(ps.gtilde(gamma, SumMode::Brute).unwrap(), gamma);
        assert_eq!(ps.gtilde(gamma, SumMode::Closed).unwrap(), gamma);
    }

    #[test]
    fn n1_at_zeta_one() {
        // g(η, ξ) + g(ξ + c, η) = -t(ξ, η)
        let c = Coupling::new(C64::new(0.9, 0.2)).unwrap();
        let xi = [C64::new(0.3, 0.4)];
        let eta = [C64::new(-0.6, 0.1)];
        let ps = PartitionSum::new(&xi, &eta, c).unwrap();
        let expect = -t(xi[0], eta[0], c).unwrap();
        assert!(rel_err(ps.brute(C64::new(1.0, 0.0)).unwrap(), expect) < 1e-14);
        let fo = ps.first_order(C64::new(1.0, 0.0)).unwrap();
        assert!(rel_err(fo.value, expect) < 1e-14);
        // n = 1, γ = 0: -t(ξ, η)(η - ξ)/c
        let gt = ps.gtilde(C64::new(0.0, 0.0), SumMode::Closed).unwrap();
        assert!(rel_err(gt, expect * (eta[0] - xi[0]) / c.value()) < 1e-14);
    }

    #[test]
    fn single_sum_matches_brute() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = Coupling::unit();
        for n in [1usize, 1, 2, 3] {
            for _ in 0..10 {
                let (xi, eta) = random_sets(&mut rng, n);
                let ps = PartitionSum::new(&xi, &eta, c).unwrap();
                let zeta = C64::new(
                    1.0 + rng.random_range(-0.1..0.1),
                    rng.random_range(-0.1..0.1),
                );
                let b = ps.brute(zeta).unwrap();
                let s = ps.single(zeta).unwrap();
                assert!(rel_err(s, b) < 1e-10, "n={n} {s} vs {b}");
            }
        }
    }

    #[test]
    fn closed_forms_at_zeta_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = Coupling::new(C64::new(1.0, 0.5)).unwrap();
        for n in 0..=4 {
            let (xi, eta) = random_sets_scaled(&mut rng, n, 0.3);
            let ps = PartitionSum::new(&xi, &eta, c).unwrap();
            let one = C64::new(1.0, 0.0);
            let exact = ps.brute(one).unwrap();
            assert!(rel_err(ps.closed_at_one().unwrap(), exact) < 1e-10);
            assert!(rel_err(ps.first_order(one).unwrap().value, exact) < 1e-10);
        }
        for n in 1..=5 {
            let (xi, eta) = random_sets_scaled(&mut rng, n, 0.3);
            let ps = PartitionSum::new(&xi, &eta, c).unwrap();
            let gamma = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let b = ps.gtilde(gamma, SumMode::Brute).unwrap();
            let cl = ps.gtilde(gamma, SumMode::Closed).unwrap();
            assert!(rel_err(cl, b) < 1e-10, "n={n} {cl} {b}");
        }
    }

    #[test]
    fn spread_points_cancel() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = Coupling::unit();
        let (xi, eta) = random_sets_scaled(&mut rng, 5, 5.0);
        let ps = PartitionSum::new(&xi, &eta, c).unwrap();
        let wide = ps.brute_detail(C64::new(1.0, 0.0)).unwrap();
        let (xi, eta) = random_sets_scaled(&mut rng, 5, 0.2);
        let ps = PartitionSum::new(&xi, &eta, c).unwrap();
        let tight = ps.brute_detail(C64::new(1.0, 0.0)).unwrap();
        assert!(wide.cancellation() > 1e3 * tight.cancellation());
    }

    #[test]
    fn pairing_order_is_immaterial() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = Coupling::unit();
        let (xi, eta) = random_sets(&mut rng, 4);
        let mut eta_rev = eta.clone();
        eta_rev.reverse();
        let a = PartitionSum::new(&xi, &eta, c).unwrap();
        let b = PartitionSum::new(&xi, &eta_rev, c).unwrap();
        let gamma = C64::new(0.4, 0.0);
        let zeta = C64::new(1.05, 0.02);
        assert!(
            rel_err(
                a.gtilde(gamma, SumMode::Closed).unwrap(),
                b.gtilde(gamma, SumMode::Closed).unwrap()
            ) < 1e-12
        );
        assert!(
            rel_err(
                a.first_order(zeta).unwrap().value,
                b.first_order(zeta).unwrap().value
            ) < 1e-12
        );
    }

    #[test]
    fn gtilde_is_derivative_combination() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let c = Coupling::unit();
        let (xi, eta) = random_sets(&mut rng, 3);
        let ps = PartitionSum::new(&xi, &eta, c).unwrap();
        let gamma = C64::new(0.7, -0.3);
        let h = 1e-4;
        let one = C64::new(1.0, 0.0);
        let deriv = (ps.brute(one + h).unwrap() - ps.brute(one - h).unwrap()) / (2.0 * h);
        let lhs = ps.gtilde(gamma, SumMode::Brute).unwrap();
        assert!(rel_err(gamma * ps.brute(one).unwrap() + deriv, lhs) < 1e-7);
    }

    #[test]
    fn first_order_remainder_is_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = Coupling::unit();
        let (xi, eta) = random_sets(&mut rng, 3);
        let ps = PartitionSum::new(&xi, &eta, c).unwrap();
        let rem = |eps: f64| {
            let z = C64::new(1.0 + eps, 0.0);
            (ps.brute(z).unwrap() - ps.first_order(z).unwrap().value).norm()
        };
        let slope = (rem(1e-2) / rem(1e-3)).log10();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn lemma_recursions() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let c = Coupling::unit();
        for n in 1..=4 {
            let (xi, eta) = random_sets(&mut rng, n);
            let gamma = C64::new(0.25, 0.5);
            let r1 = gtilde_residue_at_xi(&xi, &eta, gamma, c, [1e-4, 1e-5]).unwrap();
            assert!(r1.rel_err < 1e-6, "n={n} {r1:?}");
            let r2 = gtilde_residue_at_xi_plus_c(&xi, &eta, gamma, c, [1e-4, 1e-5]).unwrap();
            assert!(r2.rel_err < 1e-6, "n={n} {r2:?}");
        }
    }

    #[test]
    fn size_cap() {
        let c = Coupling::unit();
        let xs = vec![C64::new(0.0, 0.0); 9];
        assert!(matches!(
            PartitionSum::new(&xs, &xs, c),
            Err(Error::SizeLimit { .. })
        ));
        assert!(matches!(
            PartitionSum::new(&xs[..2], &xs[..3], c),
            Err(Error::SizeMismatch { .. })
        ));
    }
}
