//! Bubbles `ω = π(P/Q) + b`: validation, branch data, reparametrizations
//! and pointwise geometry.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cpoly::{gcd_coprime, roots, GcdOutcome, Polynomial, RootConfig};
use crate::error::{Error, Result};
use crate::mobius::{chordal_distance, ExtPoint, Mobius};
use crate::num::{cone, cx, Cx, Real};
use crate::quadrature::{disc_integral, Estimate, QuadratureSpec};

/// Real 3-vector.
pub type Vec3<T> = [T; 3];

/// Chordal separation from `∞` required of branch points and poles in a
/// normalized coordinate.
pub const DEFAULT_CHORDAL_MARGIN: f64 = 0.1;

/// Random domain rotations tried by [`normalize_for_test`].
pub const NORMALIZE_ATTEMPTS: usize = 64;

/// A validated bubble. `P`, `Q` are coprime, `k = max(deg P, deg Q) ≥ 1`,
/// and the polynomial of degree `k` (`P` when both have it) is monic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bubble<T> {
    #[serde(rename = "P")]
    p: Polynomial<T>,
    #[serde(rename = "Q")]
    q: Polynomial<T>,
    b: Vec3<T>,
    k: usize,
}

/// A branch point with its local degree `m ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint<T> {
    pub location: Cx<T>,
    pub multiplicity: usize,
}

/// Branch data of a bubble in a given coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSet<T> {
    pub points: Vec<BranchPoint<T>>,
    /// Local degree at `∞`, or 0 when `∞` is not a branch point.
    pub infinity_multiplicity: usize,
    /// Number of branch points, `∞` included.
    pub n: usize,
}

impl<T: Real> BranchSet<T> {
    /// Riemann–Hurwitz total `Σ(m_j − 1) + max(m_∞ − 1, 0)`.
    pub fn ramification(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity - 1).sum::<usize>()
            + self.infinity_multiplicity.saturating_sub(1)
    }

    /// All branch points as points of the sphere.
    pub fn ext_points(&self) -> Vec<ExtPoint<T>> {
        let mut v: Vec<ExtPoint<T>> = self.points.iter().map(|p| ExtPoint::Finite(p.location)).collect();
        if self.infinity_multiplicity > 0 {
            v.push(ExtPoint::Infinity);
        }
        v
    }

    /// Newton-polishes each point against `w`, a polynomial with a root of
    /// order `m − 1` there, using the derivative in which the root is simple.
    /// Moves larger than `max_move · (1 + |p|)` are rejected.
    pub fn polished(&self, w: &Polynomial<T>, max_move: T) -> Self {
        let mut out = self.clone();
        for p in &mut out.points {
            let mut g = w.clone();
            for _ in 1..p.multiplicity.saturating_sub(1) {
                g = g.derivative();
            }
            let dg = g.derivative();
            let start = p.location;
            let mut z = start;
            let mut gz = g.eval(z).norm();
            for _ in 0..4 {
                let step = g.eval(z) / dg.eval(z);
                let next = z - step;
                let gn = g.eval(next).norm();
                if !step.norm().is_finite() || !(gn < gz) {
                    break;
                }
                z = next;
                gz = gn;
            }
            if (z - start).norm() <= max_move * (T::one() + start.norm()) {
                p.location = z;
            }
        }
        out
    }

    /// Smallest pairwise chordal distance, infinite for fewer than 2 points.
    pub fn min_separation(&self) -> T {
        let pts = self.ext_points();
        let mut best = T::infinity();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                best = best.min(chordal_distance(pts[i], pts[j]));
            }
        }
        best
    }
}

/// JSON descriptor accepted by the command line front end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleDescriptor {
    #[serde(rename = "P")]
    pub p: Vec<[f64; 2]>,
    #[serde(rename = "Q")]
    pub q: Vec<[f64; 2]>,
    #[serde(default)]
    pub b: [f64; 3],
    #[serde(default)]
    pub label: Option<String>,
}

impl BubbleDescriptor {
    pub fn to_bubble<T: Real>(&self) -> Result<Bubble<T>> {
        let conv = |c: &[[f64; 2]]| Polynomial::new(c.iter().map(|&[re, im]| cx(re, im)).collect());
        make_bubble(conv(&self.p), conv(&self.q), self.b.map(T::lit))
    }
}

/// Validates `(P, Q, b)` and applies the monic normalization.
pub fn make_bubble<T: Real>(p: Polynomial<T>, q: Polynomial<T>, b: Vec3<T>) -> Result<Bubble<T>> {
    let dp = p.degree();
    let dq = q.degree();
    if q.is_zero() && dp.unwrap_or(0) == 0 {
        return Err(Error::ZeroMap);
    }
    let k = dp.unwrap_or(0).max(dq.unwrap_or(0));
    if k == 0 {
        return Err(Error::ZeroMap);
    }
    let tol = T::lit(T::NULLITY_TOL);
    if let GcdOutcome::CommonFactor(f) = gcd_coprime(&p, &q, tol)? {
        return Err(Error::NotIrreducible {
            degree: f.degree_or_zero(),
        });
    }
    assemble(p, q, b)
}

/// Monic normalization without the coprimality test, for pairs obtained from
/// a valid bubble by a change of coordinates.
fn assemble<T: Real>(p: Polynomial<T>, q: Polynomial<T>, b: Vec3<T>) -> Result<Bubble<T>> {
    let dp = p.degree();
    let k = dp.unwrap_or(0).max(q.degree().unwrap_or(0));
    if k == 0 {
        return Err(Error::ZeroMap);
    }
    let lead = if dp == Some(k) { p.leading() } else { q.leading() };
    let inv = cone::<T>() / lead;
    Ok(Bubble {
        p: p.scaled(inv),
        q: q.scaled(inv),
        b,
        k,
    })
}

/// Removes leading coefficients that are rounding noise relative to the
/// joint scale of the pair.
fn trim_pair<T: Real>(p: Polynomial<T>, q: Polynomial<T>) -> (Polynomial<T>, Polynomial<T>) {
    let s = p.scale().max(q.scale());
    let cut = s * T::epsilon() * T::lit(crate::cpoly::LEAD_EPS_FACTOR);
    let trim = |x: Polynomial<T>| {
        let mut c = x.into_coeffs();
        while c.last().is_some_and(|v| v.norm() <= cut) {
            c.pop();
        }
        Polynomial::new(c)
    };
    (trim(p), trim(q))
}

impl<T: Real> Bubble<T> {
    pub fn p(&self) -> &Polynomial<T> {
        &self.p
    }

    pub fn q(&self) -> &Polynomial<T> {
        &self.q
    }

    pub fn b(&self) -> Vec3<T> {
        self.b
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    /// The same map with translation `b` removed.
    pub fn centered(&self) -> Self {
        Self {
            b: [T::zero(); 3],
            ..self.clone()
        }
    }

    /// `W = P'Q − PQ'`, with coefficients above `2k − 2` discarded.
    pub fn wronskian(&self) -> Polynomial<T> {
        wronskian_of(&self.p, &self.q, self.k)
    }

    /// The bubble in the coordinate `w = 1/z`.
    pub fn inverted(&self) -> (Polynomial<T>, Polynomial<T>) {
        (self.p.reversed(self.k), self.q.reversed(self.k))
    }

    /// Branch points as root clusters of `W` plus the deficiency at `∞`.
    pub fn branch_points(&self, cluster_tol: T) -> Result<BranchSet<T>> {
        let k = self.k;
        let w = self.wronskian();
        let cut = w.scale() * T::epsilon() * T::lit(crate::cpoly::LEAD_EPS_FACTOR);
        let mut c = w.into_coeffs();
        while c.last().is_some_and(|v| v.norm() <= cut) {
            c.pop();
        }
        let w = Polynomial::new(c);
        let deg_w = w.degree().ok_or(Error::DegenerateGeometry("vanishing Wronskian".into()))?;
        let cfg = RootConfig {
            cluster_tol: cluster_tol.to_f64_lossy(),
            ..RootConfig::for_precision::<T>()
        };
        let clusters = roots(&w, &cfg)?;
        let points: Vec<BranchPoint<T>> = clusters
            .iter()
            .map(|c| BranchPoint {
                location: c.location,
                multiplicity: c.multiplicity + 1,
            })
            .collect();
        let deficiency = (2 * k - 2).saturating_sub(deg_w);
        let infinity_multiplicity = if deficiency > 0 { deficiency + 1 } else { 0 };
        let set = BranchSet {
            n: points.len() + usize::from(infinity_multiplicity > 0),
            points,
            infinity_multiplicity,
        };
        let found = set.ramification();
        let local_ok = set.points.iter().all(|p| p.multiplicity <= k) && infinity_multiplicity <= k;
        if found != 2 * k - 2 || !local_ok {
            return Err(Error::RhViolation {
                found,
                expected: 2 * k - 2,
            });
        }
        Ok(set)
    }

    /// Default-tolerance branch points.
    pub fn branch_set(&self) -> Result<BranchSet<T>> {
        self.branch_points(T::lit(T::CLUSTER_TOL))
    }

    /// `φ ∘ T` written over a common denominator of degree `k`.
    pub fn precompose(&self, t: &Mobius<T>) -> Result<Self> {
        let num = Polynomial::new(vec![t.b, t.a]);
        let den = Polynomial::new(vec![t.d, t.c]);
        let homog = |f: &Polynomial<T>| {
            let mut acc = Polynomial::zero();
            for i in 0..=self.k {
                let term = &num.powi(i) * &den.powi(self.k - i);
                acc = &acc + &term.scaled(f.coeff(i));
            }
            acc
        };
        let (p, q) = trim_pair(homog(&self.p), homog(&self.q));
        let out = assemble(p, q, self.b)?;
        if out.k != self.k {
            return Err(Error::DegenerateGeometry(format!(
                "degree changed from {} to {} under reparametrization",
                self.k, out.k
            )));
        }
        Ok(out)
    }

    /// `(aP + bQ) / (cP + dQ)` for a unitary `U`, a rotation of the target.
    pub fn rotate_target(&self, u: &Mobius<T>) -> Result<Self> {
        let defect = u.unitary_defect();
        if defect > T::lit(1e3) * T::epsilon() {
            return Err(Error::NotUnitary {
                defect: defect.to_f64_lossy(),
            });
        }
        self.transform_target(u)
    }

    /// `(aP + bQ) / (cP + dQ)` for any Möbius map.
    pub fn transform_target(&self, u: &Mobius<T>) -> Result<Self> {
        let p = &self.p.scaled(u.a) + &self.q.scaled(u.b);
        let q = &self.p.scaled(u.c) + &self.q.scaled(u.d);
        let (p, q) = trim_pair(p, q);
        assemble(p, q, self.b)
    }

    /// Homogeneous values `(P, Q)` at a point, via the inverted chart for
    /// `|z| > 1`, rescaled to unit max-modulus.
    pub fn homogeneous_at(&self, z: ExtPoint<T>) -> (Cx<T>, Cx<T>) {
        let (pv, qv) = match z {
            ExtPoint::Infinity => (self.p.coeff(self.k), self.q.coeff(self.k)),
            ExtPoint::Finite(z) if z.norm() > T::one() => {
                let w = cone::<T>() / z;
                let (pi, qi) = self.inverted();
                (pi.eval(w), qi.eval(w))
            }
            ExtPoint::Finite(z) => (self.p.eval(z), self.q.eval(z)),
        };
        let s = pv.norm().max(qv.norm());
        (pv / s, qv / s)
    }

    /// `φ(z)` on the sphere.
    pub fn value(&self, z: ExtPoint<T>) -> ExtPoint<T> {
        let (pv, qv) = self.homogeneous_at(z);
        ExtPoint::from_homogeneous(pv, qv)
    }

    /// `ω(z) = π(φ(z)) + b`.
    pub fn evaluate(&self, z: ExtPoint<T>) -> Vec3<T> {
        let (pv, qv) = self.homogeneous_at(z);
        let s = sphere_point(pv, qv);
        [s[0] + self.b[0], s[1] + self.b[1], s[2] + self.b[2]]
    }

    /// `|∇ω|² = 8|W|² / (|P|² + |Q|²)²`.
    pub fn grad_norm_sq(&self, z: Cx<T>) -> T {
        let w = self.wronskian();
        grad_density(&self.p, &self.q, &w, z)
    }

    /// `ω` with its first partial derivatives at a finite point.
    pub fn jets(&self, z: Cx<T>) -> Jet<T> {
        let (pv, dp) = self.p.eval_with_derivative(z);
        let (qv, dq) = self.q.eval_with_derivative(z);
        let s = pv.norm().max(qv.norm());
        let (pv, qv, dp, dq) = (pv / s, qv / s, dp / s, dq / s);
        let i = Cx::new(T::zero(), T::one());
        let mut value = sphere_point(pv, qv);
        for (v, bj) in value.iter_mut().zip(self.b) {
            *v = *v + bj;
        }
        Jet {
            value,
            dx: sphere_differential(pv, qv, dp, dq),
            dy: sphere_differential(pv, qv, dp * i, dq * i),
        }
    }

    /// Dirichlet energy `∫ |∇ω|²` over the plane.
    pub fn energy(&self, quad: &QuadratureSpec) -> Result<Estimate<T>> {
        let w = self.wronskian();
        let (pi, qi) = self.inverted();
        let wi = wronskian_of(&pi, &qi, self.k);
        let density = |p: &Polynomial<T>, q: &Polynomial<T>, w: &Polynomial<T>| {
            let (p, q, w) = (p.clone(), q.clone(), w.clone());
            move |x: T, y: T| grad_density(&p, &q, &w, Cx::new(x, y))
        };
        let charts = [density(&self.p, &self.q, &w), density(&pi, &qi, &wi)];
        two_chart(quad, |r, a| charts.iter().map(|g| disc_integral(r, a, g)).sum())
    }

    /// Signed enclosed volume `(1/3) ∫ ⟨ω − b, ω_x ∧ ω_y⟩`.
    pub fn volume(&self, quad: &QuadratureSpec) -> Result<Estimate<T>> {
        let base = self.centered();
        let (pi, qi) = self.inverted();
        let inv = Bubble {
            p: pi,
            q: qi,
            b: [T::zero(); 3],
            k: self.k,
        };
        let third = T::one() / T::lit(3.0);
        let density = |bub: Bubble<T>| {
            move |x: T, y: T| {
                let j = bub.jets(Cx::new(x, y));
                dot(j.value, cross(j.dx, j.dy)) * third
            }
        };
        let charts = [density(base), density(inv)];
        two_chart(quad, |r, a| charts.iter().map(|g| disc_integral(r, a, g)).sum())
    }
}

fn two_chart<T: Real, F: Fn(usize, usize) -> T>(quad: &QuadratureSpec, integrate: F) -> Result<Estimate<T>> {
    let fine = integrate(quad.radial, quad.angular);
    let coarse = integrate((quad.radial / 2).max(1), (quad.angular / 2).max(1));
    let error = (fine - coarse).abs();
    let tol = T::lit(quad.rel_tol) * fine.abs().max(T::one());
    if !(error <= tol) {
        return Err(Error::QuadratureNotConverged {
            estimate: error.to_f64_lossy(),
            tol: tol.to_f64_lossy(),
        });
    }
    Ok(Estimate { value: fine, error })
}

/// `ω` and its partial derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub value: Vec3<T>,
    pub dx: Vec3<T>,
    pub dy: Vec3<T>,
}

pub(crate) fn wronskian_of<T: Real>(p: &Polynomial<T>, q: &Polynomial<T>, k: usize) -> Polynomial<T> {
    let w = &(&p.derivative() * q) - &(p * &q.derivative());
    w.truncated(2 * k - 2)
}

pub(crate) fn grad_density<T: Real>(p: &Polynomial<T>, q: &Polynomial<T>, w: &Polynomial<T>, z: Cx<T>) -> T {
    let pv = p.eval(z);
    let qv = q.eval(z);
    let s = pv.norm().max(qv.norm());
    if s == T::zero() {
        return T::zero();
    }
    let n = (pv / s).norm_sqr() + (qv / s).norm_sqr();
    let wv = w.eval(z) / (s * s);
    T::lit(8.0) * wv.norm_sqr() / (n * n)
}

/// `π(x / y)` from homogeneous coordinates.
pub fn sphere_point<T: Real>(x: Cx<T>, y: Cx<T>) -> Vec3<T> {
    let n = x.norm_sqr() + y.norm_sqr();
    let c = x * y.conj() * T::lit(2.0);
    [c.re / n, c.im / n, (x.norm_sqr() - y.norm_sqr()) / n]
}

/// Derivative of `(x, y) ↦ π(x / y)` in the direction `(α, β)`.
pub fn sphere_differential<T: Real>(x: Cx<T>, y: Cx<T>, alpha: Cx<T>, beta: Cx<T>) -> Vec3<T> {
    let two = T::lit(2.0);
    let n = x.norm_sqr() + y.norm_sqr();
    let dn = (x.conj() * alpha + y.conj() * beta).re * two;
    let c = x * y.conj() * two;
    let dc = (alpha * y.conj() + x * beta.conj()) * two;
    let h = x.norm_sqr() - y.norm_sqr();
    let dh = (x.conj() * alpha - y.conj() * beta).re * two;
    let n2 = n * n;
    [
        (dc.re * n - c.re * dn) / n2,
        (dc.im * n - c.im * dn) / n2,
        (dh * n - h * dn) / n2,
    ]
}

pub fn dot<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Smallest chordal distance from `∞` to the branch points and poles.
fn infinity_clearance<T: Real>(bubble: &Bubble<T>, branch: &BranchSet<T>) -> Result<T> {
    if branch.infinity_multiplicity > 0 || bubble.p.degree() > bubble.q.degree() {
        return Ok(T::zero());
    }
    let mut best = T::lit(2.0);
    for p in &branch.points {
        best = best.min(chordal_distance(ExtPoint::Finite(p.location), ExtPoint::Infinity));
    }
    if bubble.q.degree_or_zero() > 0 {
        for c in roots(bubble.q(), &RootConfig::for_precision::<T>())? {
            best = best.min(chordal_distance(ExtPoint::Finite(c.location), ExtPoint::Infinity));
        }
    }
    Ok(best)
}

/// Precomposes by a seeded random rotation of the domain until `∞` is
/// neither a branch point nor a pole and keeps a chordal margin of
/// `margin` from both. The identity is tried first.
pub fn normalize_for_test<T: Real>(bubble: &Bubble<T>, seed: u64, margin: T) -> Result<(Bubble<T>, Mobius<T>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidate = Mobius::identity();
    for _ in 0..NORMALIZE_ATTEMPTS {
        let moved = if candidate == Mobius::identity() {
            bubble.clone()
        } else {
            bubble.precompose(&candidate)?
        };
        let branch = moved.branch_set()?;
        if infinity_clearance(&moved, &branch)? >= margin {
            return Ok((moved, candidate));
        }
        candidate = Mobius::random_unitary(&mut rng);
    }
    Err(Error::NormalizationFailed {
        attempts: NORMALIZE_ATTEMPTS,
    })
}

/// Rotates the target by a seeded random rotation (identity first) until
/// every listed domain point has an image at chordal distance at least
/// `margin` from `∞`.
pub fn normalize_target<T: Real>(
    bubble: &Bubble<T>,
    points: &[ExtPoint<T>],
    seed: u64,
    margin: T,
) -> Result<(Bubble<T>, Mobius<T>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut candidate = Mobius::identity();
    for _ in 0..NORMALIZE_ATTEMPTS {
        let rotated = if candidate == Mobius::identity() {
            bubble.clone()
        } else {
            bubble.transform_target(&candidate)?
        };
        let clear = points
            .iter()
            .map(|&z| chordal_distance(rotated.value(z), ExtPoint::Infinity))
            .fold(T::infinity(), T::min);
        if clear >= margin {
            return Ok((rotated, candidate));
        }
        candidate = Mobius::random_unitary(&mut rng);
    }
    Err(Error::NormalizationFailed {
        attempts: NORMALIZE_ATTEMPTS,
    })
}
