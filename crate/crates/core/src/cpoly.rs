//! Dense complex polynomials, root finding with multiplicity recovery and
//! an approximate coprimality test.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hessenberg_eigenvalues, svd, CMatrix};
use crate::num::{cone, czero, Cx, Real};

/// Leading coefficients below this multiple of machine epsilon (relative to
/// the largest coefficient) are treated as rounding noise.
pub const LEAD_EPS_FACTOR: f64 = 1024.0;

/// Polynomial with complex coefficients in ascending powers.
///
/// The zero polynomial has an empty coefficient list and degree `None`,
/// which orders below every `Some(d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial<T> {
    coeffs: Vec<Cx<T>>,
}

impl<T: Real> Polynomial<T> {
    /// Builds a polynomial and strips exactly-zero trailing coefficients.
    pub fn new(coeffs: Vec<Cx<T>>) -> Self {
        let mut p = Self { coeffs };
        p.trim_exact();
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Cx<T>) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(cone())
    }

    /// The monomial `c z^n`.
    pub fn monomial(c: Cx<T>, n: usize) -> Self {
        let mut v = vec![czero(); n + 1];
        v[n] = c;
        Self::new(v)
    }

    /// `z - a`.
    pub fn linear_root(a: Cx<T>) -> Self {
        Self::new(vec![-a, cone()])
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Cx<T>]) -> Self {
        roots
            .iter()
            .fold(Self::one(), |acc, &r| &acc * &Self::linear_root(r))
    }

    /// Real coefficients, ascending.
    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex::new(T::lit(c), T::zero())).collect())
    }

    pub fn coeffs(&self) -> &[Cx<T>] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Cx<T>> {
        self.coeffs
    }

    /// Coefficient of `z^i`, zero beyond the degree.
    pub fn coeff(&self, i: usize) -> Cx<T> {
        self.coeffs.get(i).copied().unwrap_or_else(czero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with the zero polynomial mapped to 0; for contexts where the
    /// distinction does not matter.
    pub fn degree_or_zero(&self) -> usize {
        self.degree().unwrap_or(0)
    }

    pub fn leading(&self) -> Cx<T> {
        self.coeffs.last().copied().unwrap_or_else(czero)
    }

    /// Largest coefficient modulus; the scale every relative tolerance uses.
    pub fn scale(&self) -> T {
        self.coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }

    fn trim_exact(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.re == T::zero() && c.im == T::zero()) {
            self.coeffs.pop();
        }
    }

    /// Drops trailing coefficients whose modulus is at most
    /// `rel * self.scale()`.
    pub fn trimmed(mut self, rel: T) -> Self {
        let cut = rel * self.scale();
        while self.coeffs.last().is_some_and(|c| c.norm() <= cut) {
            self.coeffs.pop();
        }
        self
    }

    /// Drops coefficients above `max_degree`.
    pub fn truncated(mut self, max_degree: usize) -> Self {
        self.coeffs.truncate(max_degree + 1);
        self.trim_exact();
        self
    }

    /// Trims leading rounding noise at the default level.
    pub fn denoised(self) -> Self {
        self.trimmed(T::epsilon() * T::lit(LEAD_EPS_FACTOR))
    }

    pub fn scaled(&self, c: Cx<T>) -> Self {
        Self::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * T::count(i))
                .collect(),
        )
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Cx<T>) -> Cx<T> {
        self.coeffs.iter().rev().fold(czero(), |acc, &c| acc * z + c)
    }

    /// Value and first derivative by a single Horner pass.
    pub fn eval_with_derivative(&self, z: Cx<T>) -> (Cx<T>, Cx<T>) {
        let mut p = czero();
        let mut dp = czero();
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// `sum |c_i| |z|^i`, the rounding-error bound of Horner evaluation.
    pub fn abs_bound(&self, z: Cx<T>) -> T {
        let r = z.norm();
        self.coeffs.iter().rev().fold(T::zero(), |acc, c| acc * r + c.norm())
    }

    /// Coefficients of the reversal `z^d p(1/z)` for a chosen `d >= deg p`.
    pub fn reversed(&self, d: usize) -> Self {
        let mut v = vec![czero(); d + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            v[d - i] = c;
        }
        Self::new(v)
    }

    /// Taylor coefficients of `p(a + t)` in `t`, i.e. the shifted basis.
    pub fn taylor_at(&self, a: Cx<T>) -> Vec<Cx<T>> {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for k in 0..n {
            for j in (k..n.saturating_sub(1)).rev() {
                let next = c[j + 1];
                c[j] = c[j] + a * next;
            }
        }
        c
    }

    /// Composition `self(inner(z))` by Horner's scheme in polynomials.
    pub fn compose(&self, inner: &Self) -> Self {
        self.coeffs
            .iter()
            .rev()
            .fold(Self::zero(), |acc, &c| &(&acc * inner) + &Self::constant(c))
    }

    /// Polynomial long division `self = q * d + r`.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let dd = d.degree_or_zero();
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let lead = d.leading();
        let mut q = vec![czero(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let f = r[k + dd] / lead;
            q[k] = f;
            for (j, &dc) in d.coeffs.iter().enumerate() {
                r[k + j] = r[k + j] - f * dc;
            }
        }
        r.truncate(dd);
        (Self::new(q), Self::new(r))
    }

    /// `(p, q, op)` arithmetic as a single entry point.
    pub fn arith(&self, other: &Self, op: ArithOp) -> Self {
        match op {
            ArithOp::Add => self + other,
            ArithOp::Sub => self - other,
            ArithOp::Mul => self * other,
        }
    }

    pub fn powi(&self, n: usize) -> Self {
        (0..n).fold(Self::one(), |acc, _| &acc * self)
    }
}

/// Binary polynomial operation selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl<T: Real> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl<T: Real> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl<T: Real> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn mul(self, rhs: Self) -> Polynomial<T> {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![czero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j] + a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl<T: Real> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        Polynomial::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

impl<T: Real> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.re == T::zero() && c.im == T::zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})z")?,
                _ => write!(f, "({c})z^{i}")?,
            }
        }
        Ok(())
    }
}

/// Multiplies the power series `a` by the inverse of `b`, truncated to
/// `len` terms. `b[0]` must be nonzero.
pub fn series_divide<T: Real>(a: &[Cx<T>], b: &[Cx<T>], len: usize) -> Vec<Cx<T>> {
    let b0 = b[0];
    let mut c = vec![czero::<T>(); len];
    for k in 0..len {
        let mut s = a.get(k).copied().unwrap_or_else(czero);
        for i in 1..=k {
            if let Some(&bi) = b.get(i) {
                s = s - bi * c[k - i];
            }
        }
        c[k] = s / b0;
    }
    c
}

/// A group of computed roots identified as one root of given multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootCluster<T> {
    pub location: Cx<T>,
    pub multiplicity: usize,
    /// Largest distance from a member root to the cluster mean.
    pub radius: T,
}

/// Tolerances for [`roots`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootConfig {
    /// Relative backward residual required of every refined root.
    pub refine_tol: f64,
    /// Base clustering radius; a cluster of multiplicity `m` merges within
    /// `cluster_tol^(1/m)` times the local root scale.
    pub cluster_tol: f64,
    pub max_iterations: usize,
}

impl RootConfig {
    pub fn for_precision<T: Real>() -> Self {
        Self {
            refine_tol: T::REFINE_TOL,
            cluster_tol: T::CLUSTER_TOL,
            max_iterations: 800,
        }
    }
}

impl Default for RootConfig {
    fn default() -> Self {
        Self::for_precision::<f64>()
    }
}

/// Roots of `p` grouped into clusters whose multiplicities sum to `deg p`.
///
/// Initial approximations are companion-matrix eigenvalues; they are then
/// polished by simultaneous Aberth–Ehrlich iteration and grouped by
/// single-linkage clustering with multiplicity-dependent radius, since an
/// `m`-fold root splits at roughly `precision^(1/m)`.
pub fn roots<T: Real>(p: &Polynomial<T>, cfg: &RootConfig) -> Result<Vec<RootCluster<T>>> {
    let deg = match p.degree() {
        None => return Err(Error::InvalidInput("roots of the zero polynomial".into())),
        Some(d) => d,
    };
    if deg == 0 {
        return Ok(Vec::new());
    }
    // exact zero roots
    let zeros = p
        .coeffs
        .iter()
        .take_while(|c| c.re == T::zero() && c.im == T::zero())
        .count();
    let reduced = Polynomial::new(p.coeffs[zeros..].to_vec());
    let mut approx = refined_roots(&reduced, cfg)?;
    approx.extend(std::iter::repeat_n(czero(), zeros));
    Ok(cluster_roots(&approx, T::lit(cfg.cluster_tol)))
}

/// Refined (unclustered) roots of a polynomial with nonzero constant term.
fn refined_roots<T: Real>(p: &Polynomial<T>, cfg: &RootConfig) -> Result<Vec<Cx<T>>> {
    let n = p.degree_or_zero();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![-p.coeff(0) / p.coeff(1)]);
    }
    // variable scaling z = s y so that the scaled polynomial has balanced
    // extreme coefficients
    let s = (p.coeff(0).norm() / p.leading().norm()).powf(T::one() / T::count(n));
    let s = if s.is_finite() && s > T::zero() { s } else { T::one() };
    let scaled = Polynomial::new(
        p.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * s.powi(i as i32))
            .collect(),
    );
    let lead = scaled.leading();
    let mut h = vec![czero::<T>(); n * n];
    for i in 1..n {
        h[i * n + i - 1] = cone();
    }
    for j in 0..n {
        h[j * n + n - 1] = -scaled.coeff(j) / lead;
    }
    let mut z: Vec<Cx<T>> = match hessenberg_eigenvalues(n, &mut h) {
        Some(ev) => ev.into_iter().map(|y| y * s).collect(),
        None => (0..n)
            .map(|k| {
                let t = T::lit(2.0) * T::PI() * (T::count(k) + T::lit(0.25)) / T::count(n);
                Complex::new(t.cos(), t.sin()) * s
            })
            .collect(),
    };
    aberth(p, &mut z, cfg)?;
    Ok(z)
}

fn aberth<T: Real>(p: &Polynomial<T>, z: &mut [Cx<T>], cfg: &RootConfig) -> Result<()> {
    let n = z.len();
    let eps = T::epsilon();
    let noise = eps * T::lit(8.0);
    let tol = T::lit(cfg.refine_tol);
    let dp = p.derivative();
    let mut done = vec![false; n];
    for _ in 0..cfg.max_iterations {
        let mut active = false;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let zi = z[i];
            let v = p.eval(zi);
            let bound = p.abs_bound(zi);
            if v.norm() <= noise * bound {
                done[i] = true;
                continue;
            }
            active = true;
            let d = dp.eval(zi);
            let ratio = if d.norm() == T::zero() {
                Complex::new(eps.sqrt() * (T::one() + zi.norm()), T::zero())
            } else {
                v / d
            };
            let mut s = czero::<T>();
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    let diff = zi - zj;
                    if diff.norm() > T::zero() {
                        s = s + cone::<T>() / diff;
                    }
                }
            }
            let denom = cone::<T>() - ratio * s;
            let w = if denom.norm() == T::zero() { ratio } else { ratio / denom };
            z[i] = zi - w;
            if w.norm() <= eps * T::lit(2.0) * zi.norm() {
                done[i] = true;
            }
        }
        if !active {
            break;
        }
    }
    let ok = z.iter().all(|&zi| p.eval(zi).norm() <= tol * p.abs_bound(zi));
    if ok {
        Ok(())
    } else {
        Err(Error::NonConvergence {
            iterations: cfg.max_iterations,
        })
    }
}

fn cluster_roots<T: Real>(z: &[Cx<T>], cluster_tol: T) -> Vec<RootCluster<T>> {
    // largest multiplicities first: an m-fold root splits into about m
    // points within tol^(1/m) of each other
    let n = z.len();
    let mut assigned = vec![false; n];
    let mut groups: Vec<Vec<Cx<T>>> = Vec::new();
    for m in (2..=n).rev() {
        let reach = T::lit(2.0) * cluster_tol.powf(T::one() / T::count(m));
        for i in 0..n {
            if assigned[i] {
                continue;
            }
            let radius = reach * T::one().max(z[i].norm());
            let members: Vec<usize> = (0..n)
                .filter(|&j| !assigned[j] && (z[j] - z[i]).norm() <= radius)
                .collect();
            if members.len() >= m {
                for &j in &members {
                    assigned[j] = true;
                }
                groups.push(members.iter().map(|&j| z[j]).collect());
            }
        }
    }
    groups.extend((0..n).filter(|&i| !assigned[i]).map(|i| vec![z[i]]));
    let mut out: Vec<RootCluster<T>> = groups
        .into_iter()
        .map(|g| {
            let m = g.len();
            let mean = g.iter().fold(czero::<T>(), |a, &b| a + b) / T::count(m);
            let radius = g.iter().map(|&x| (x - mean).norm()).fold(T::zero(), T::max);
            RootCluster {
                location: mean,
                multiplicity: m,
                radius,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        (a.location.re, a.location.im)
            .partial_cmp(&(b.location.re, b.location.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

/// Outcome of the approximate coprimality test.
#[derive(Debug, Clone, PartialEq)]
pub enum GcdOutcome<T> {
    Coprime,
    /// A monic approximate common factor of positive degree.
    CommonFactor(Polynomial<T>),
}

impl<T> GcdOutcome<T> {
    pub fn is_coprime(&self) -> bool {
        matches!(self, GcdOutcome::Coprime)
    }
}

/// Decides whether `p` and `q` are coprime via the smallest singular values
/// of their Sylvester matrix relative to its largest.
pub fn gcd_coprime<T: Real>(p: &Polynomial<T>, q: &Polynomial<T>, tol: T) -> Result<GcdOutcome<T>> {
    match (p.degree(), q.degree()) {
        (None, None) => Err(Error::InvalidInput("gcd of two zero polynomials".into())),
        (None, Some(0)) | (Some(0), None) => Ok(GcdOutcome::Coprime),
        (None, Some(_)) => Ok(GcdOutcome::CommonFactor(monic(q))),
        (Some(_), None) => Ok(GcdOutcome::CommonFactor(monic(p))),
        (Some(0), _) | (_, Some(0)) => Ok(GcdOutcome::Coprime),
        (Some(m), Some(n)) => {
            let pn = p.scaled(Complex::new(T::one() / p.scale(), T::zero()));
            let qn = q.scaled(Complex::new(T::one() / q.scale(), T::zero()));
            let size = m + n;
            let mut cols = vec![vec![czero::<T>(); size]; size];
            // column-oriented Sylvester: shifted copies of p (n of them) and q (m of them)
            for (s, col) in cols.iter_mut().take(n).enumerate() {
                for (i, &c) in pn.coeffs.iter().enumerate() {
                    col[s + i] = c;
                }
            }
            for (s, col) in cols.iter_mut().skip(n).enumerate() {
                for (i, &c) in qn.coeffs.iter().enumerate() {
                    col[s + i] = c;
                }
            }
            let sv = svd(&CMatrix::from_columns(&cols)).singular_values;
            let cut = tol * sv[0];
            let g = sv.iter().filter(|&&s| s < cut).count();
            if g == 0 {
                return Ok(GcdOutcome::Coprime);
            }
            let cfg = RootConfig::for_precision::<T>();
            let rp = expand(&roots(p, &cfg)?);
            let rq = expand(&roots(q, &cfg)?);
            let mut pairs: Vec<(T, usize, usize)> = Vec::new();
            for (i, a) in rp.iter().enumerate() {
                for (j, b) in rq.iter().enumerate() {
                    pairs.push(((a - b).norm(), i, j));
                }
            }
            pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
            let mut used_p = vec![false; rp.len()];
            let mut used_q = vec![false; rq.len()];
            let mut common = Vec::new();
            for (_, i, j) in pairs {
                if common.len() == g {
                    break;
                }
                if !used_p[i] && !used_q[j] {
                    used_p[i] = true;
                    used_q[j] = true;
                    common.push((rp[i] + rq[j]) * T::lit(0.5));
                }
            }
            Ok(GcdOutcome::CommonFactor(Polynomial::from_roots(&common)))
        }
    }
}

fn monic<T: Real>(p: &Polynomial<T>) -> Polynomial<T> {
    p.scaled(cone::<T>() / p.leading())
}

/// Expands clusters into a list of roots repeated by multiplicity.
pub fn expand<T: Real>(clusters: &[RootCluster<T>]) -> Vec<Cx<T>> {
    clusters
        .iter()
        .flat_map(|c| std::iter::repeat_n(c.location, c.multiplicity))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::cx;

    fn p64(c: &[f64]) -> Polynomial<f64> {
        Polynomial::from_real(c)
    }

    #[test]
    fn arithmetic_examples() {
        let a = p64(&[1.0, 1.0]);
        let b = p64(&[-1.0, 1.0]);
        assert_eq!(a.arith(&b, ArithOp::Mul), p64(&[-1.0, 0.0, 1.0]));
        let p = p64(&[2.0, 0.0, 0.0, 1.0]);
        assert_eq!(p.arith(&Polynomial::zero(), ArithOp::Add), p);
        let prod = p.arith(&Polynomial::one(), ArithOp::Mul);
        assert!(prod.arith(&p, ArithOp::Sub).is_zero());
        assert_eq!(Polynomial::<f64>::zero().degree(), None);
        assert!(Polynomial::<f64>::zero().degree() < Some(0));
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(p64(&[2.0, 0.0, 0.0, 1.0]).derivative(), p64(&[0.0, 0.0, 3.0]));
        assert!(p64(&[5.0]).derivative().is_zero());
        assert_eq!(p64(&[0.0, 1.0]).derivative(), p64(&[1.0]));
    }

    #[test]
    fn perfect_square_root_is_double() {
        let r = roots(&p64(&[1.0, -2.0, 1.0]), &RootConfig::default()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 2);
        assert!((r[0].location - cx(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cube_roots_of_unity() {
        let r = roots(&p64(&[-2.0, 0.0, 0.0, 2.0]), &RootConfig::default()).unwrap();
        assert_eq!(r.len(), 3);
        let third = 2.0 * std::f64::consts::PI / 3.0;
        let expected = [cx(1.0, 0.0), cx(third.cos(), third.sin()), cx(third.cos(), -third.sin())];
        for e in expected {
            let hit = r.iter().find(|c| (c.location - e).norm() < 1e-12).expect("root present");
            assert_eq!(hit.multiplicity, 1);
        }
    }

    #[test]
    fn triple_root_recovered_from_expanded_product() {
        // (z - 1/2)^3 (z + 2) expanded exactly: z^4 + 0.5 z^3 - 2.25 z^2 + 1.375 z - 0.25
        let p = p64(&[-0.25, 1.375, -2.25, 0.5, 1.0]);
        let check = Polynomial::from_roots(&[cx(0.5, 0.0), cx(0.5, 0.0), cx(0.5, 0.0), cx(-2.0, 0.0)]);
        assert_eq!(p, check);
        let r = roots(&p, &RootConfig::default()).unwrap();
        assert_eq!(r.len(), 2);
        let triple = r.iter().find(|c| c.multiplicity == 3).unwrap();
        assert!((triple.location - cx(0.5, 0.0)).norm() < 1e-10);
        let single = r.iter().find(|c| c.multiplicity == 1).unwrap();
        assert!((single.location - cx(-2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn monomial_roots_are_exact_zeros() {
        let p = Polynomial::<f64>::monomial(cx(6.0, 0.0), 5);
        let r = roots(&p, &RootConfig::default()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 5);
        assert_eq!(r[0].location, cx(0.0, 0.0));
    }

    #[test]
    fn gcd_examples() {
        let tol = 1e-8;
        assert!(gcd_coprime(&p64(&[2.0, 0.0, 0.0, 1.0]), &p64(&[0.0, 1.0]), tol)
            .unwrap()
            .is_coprime());
        match gcd_coprime(&p64(&[-1.0, 0.0, 1.0]), &p64(&[-1.0, 1.0]), tol).unwrap() {
            GcdOutcome::CommonFactor(f) => {
                assert_eq!(f.degree(), Some(1));
                assert!((f.coeff(0) + cx(1.0, 0.0)).norm() < 1e-10);
            }
            GcdOutcome::Coprime => panic!("shared root missed"),
        }
        for k in 1..6 {
            let zk = Polynomial::<f64>::monomial(cx(1.0, 0.0), k);
            assert!(gcd_coprime(&zk, &Polynomial::one(), tol).unwrap().is_coprime());
        }
    }

    #[test]
    fn taylor_shift_and_series_division() {
        let p = p64(&[1.0, 2.0, 3.0]);
        // p(1 + t) = 6 + 8t + 3t^2
        let t = p.taylor_at(cx(1.0, 0.0));
        assert_eq!(t, vec![cx(6.0, 0.0), cx(8.0, 0.0), cx(3.0, 0.0)]);
        // 1/(1 - t) = 1 + t + t^2 + ...
        let s = series_divide(&[cx::<f64>(1.0, 0.0)], &[cx(1.0, 0.0), cx(-1.0, 0.0)], 4);
        assert!(s.iter().all(|c| (c - cx(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn division_and_composition() {
        let p = p64(&[-1.0, 0.0, 1.0]);
        let (q, r) = p.div_rem(&p64(&[-1.0, 1.0]));
        assert_eq!(q, p64(&[1.0, 1.0]));
        assert!(r.is_zero());
        let c = p64(&[0.0, 0.0, 1.0]).compose(&p64(&[1.0, 1.0]));
        assert_eq!(c, p64(&[1.0, 2.0, 1.0]));
    }

    #[test]
    fn single_precision_roots() {
        let p = Polynomial::<f32>::from_real(&[-2.0, 0.0, 0.0, 2.0]);
        let r = roots(&p, &RootConfig::for_precision::<f32>()).unwrap();
        assert_eq!(r.len(), 3);
        for c in r {
            assert!((c.location.powi(3) - Complex::new(1.0f32, 0.0)).norm() < 1e-4);
        }
    }
}
