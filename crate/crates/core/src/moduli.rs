//! Numerical search of the degenerate locus in the space of degree-`k`
//! rational maps, and clustering of its points up to Möbius maps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubble::{make_bubble, normalize_for_test, normalize_target, BranchSet, Bubble};
use crate::cpoly::Polynomial;
use crate::error::{Error, Result};
use crate::linalg::{solve_real, svd, CMatrix};
use crate::mobius::{chordal_distance, ExtPoint, Mobius};
use crate::num::{Cx, Real};
use crate::residue::{build_system, classify, ClassifyConfig, ResidueSystem};

/// Branch points closer than this (chordal) make a point infeasible.
pub const COLLISION_GUARD: f64 = 1e-3;

/// Objective value below which a search counts as converged.
pub const OBJECTIVE_TOL: f64 = 1e-9;

/// Matching tolerance for `j` and for the normal-form fit.
pub const MATCH_TOL: f64 = 1e-6;

/// A point of the family chart: `P` monic of degree `k`, `Q` of degree at
/// most `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyPoint<T> {
    /// `Re p_0, Im p_0, …, Re p_{k−1}, Im p_{k−1}, Re q_0, Im q_0, …, Re q_k, Im q_k`.
    pub params: Vec<T>,
    pub bubble: Bubble<T>,
    /// Row-equilibrated residues of the constant `R` in the classify
    /// coordinate; empty when the point is infeasible.
    pub residue_vector: Vec<Cx<T>>,
}

impl<T: Real> FamilyPoint<T> {
    /// Number of real parameters, `4k + 2`.
    pub fn dimension(k: usize) -> usize {
        4 * k + 2
    }

    pub fn from_params(k: usize, params: &[T]) -> Result<Self> {
        let bubble = bubble_from_params(k, params)?;
        Ok(Self::with_bubble(params.to_vec(), bubble))
    }

    /// Chart coordinates of a bubble whose numerator has full degree.
    pub fn from_bubble(bubble: &Bubble<T>) -> Result<Self> {
        let k = bubble.degree();
        if bubble.p().degree() != Some(k) {
            return Err(Error::InvalidInput("numerator must have full degree".into()));
        }
        let mut params = Vec::with_capacity(Self::dimension(k));
        for i in 0..k {
            let c = bubble.p().coeff(i);
            params.extend([c.re, c.im]);
        }
        for i in 0..=k {
            let c = bubble.q().coeff(i);
            params.extend([c.re, c.im]);
        }
        Ok(Self::with_bubble(params, bubble.centered()))
    }

    fn with_bubble(params: Vec<T>, bubble: Bubble<T>) -> Self {
        let residue_vector = classify_system(&bubble, &ClassifyConfig::for_precision::<T>())
            .ok()
            .filter(|s| s.cols() == 1)
            .map(|s| scaled_column(&s))
            .unwrap_or_default();
        Self {
            params,
            bubble,
            residue_vector,
        }
    }
}

fn bubble_from_params<T: Real>(k: usize, params: &[T]) -> Result<Bubble<T>> {
    if params.len() != FamilyPoint::<T>::dimension(k) {
        return Err(Error::InvalidInput(format!(
            "expected {} parameters, got {}",
            FamilyPoint::<T>::dimension(k),
            params.len()
        )));
    }
    let c = |i: usize| Cx::new(params[2 * i], params[2 * i + 1]);
    let mut p: Vec<Cx<T>> = (0..k).map(c).collect();
    p.push(Cx::new(T::one(), T::zero()));
    let q: Vec<Cx<T>> = (k..2 * k + 1).map(c).collect();
    let b = make_bubble(Polynomial::new(p), Polynomial::new(q), [T::zero(); 3])?;
    if b.degree() != k {
        return Err(Error::InfeasiblePoint(format!("degree dropped to {}", b.degree())));
    }
    Ok(b)
}

fn scaled_column<T: Real>(s: &ResidueSystem<T>) -> Vec<Cx<T>> {
    s.matrix.iter().zip(&s.row_scales).map(|(row, &r)| row[0] / r).collect()
}

fn check_collision<T: Real>(branch: &BranchSet<T>) -> Result<()> {
    if branch.n < 4 {
        return Err(Error::InfeasiblePoint(format!("{} branch points, need at least 4", branch.n)));
    }
    let sep = branch.min_separation();
    if sep < T::lit(COLLISION_GUARD) {
        return Err(Error::InfeasiblePoint(format!(
            "branch points collide at chordal distance {:e}",
            sep.to_f64_lossy()
        )));
    }
    Ok(())
}

fn classify_system<T: Real>(bubble: &Bubble<T>, cfg: &ClassifyConfig) -> Result<ResidueSystem<T>> {
    let frame = Frame::new(bubble, cfg)?;
    frame.system(bubble, cfg).map(|(s, _)| s)
}

/// Smallest singular value of the equilibrated residue system, zero exactly
/// on the degenerate locus.
pub fn degeneracy_objective<T: Real>(point: &FamilyPoint<T>, cfg: &ClassifyConfig) -> Result<T> {
    let s = classify_system(&point.bubble, cfg)?;
    s.smallest_singular_value()
        .ok_or_else(|| Error::InfeasiblePoint("empty residue system".into()))
}

/// A fixed normalizing coordinate reused along a search path so that the
/// residual is a smooth function of the parameters.
#[derive(Debug, Clone)]
struct Frame<T> {
    domain: Mobius<T>,
    target: Mobius<T>,
}

enum Framed<T> {
    Ok(ResidueSystem<T>, Vec<Cx<T>>),
    Lost,
}

impl<T: Real> Frame<T> {
    fn new(bubble: &Bubble<T>, cfg: &ClassifyConfig) -> Result<Self> {
        let margin = T::lit(cfg.chordal_margin);
        let (moved, domain) = normalize_for_test(bubble, cfg.seed, margin)?;
        let branch = moved.branch_points(T::lit(cfg.cluster_tol))?;
        check_collision(&branch)?;
        let mut pts = branch.ext_points();
        pts.push(ExtPoint::Infinity);
        let (_, target) = normalize_target(&moved, &pts, cfg.seed, margin)?;
        Ok(Self { domain, target })
    }

    fn system(&self, bubble: &Bubble<T>, cfg: &ClassifyConfig) -> Result<(ResidueSystem<T>, Vec<Cx<T>>)> {
        match self.try_system(bubble, cfg)? {
            Framed::Ok(s, p) => Ok((s, p)),
            Framed::Lost => Err(Error::NormalizationFailed { attempts: 1 }),
        }
    }

    fn try_system(&self, bubble: &Bubble<T>, cfg: &ClassifyConfig) -> Result<Framed<T>> {
        let moved = bubble.precompose(&self.domain)?.transform_target(&self.target)?;
        let branch = moved.branch_points(T::lit(cfg.cluster_tol))?;
        check_collision(&branch)?;
        if branch.infinity_multiplicity > 0 {
            return Ok(Framed::Lost);
        }
        let margin = T::lit(cfg.chordal_margin) * T::lit(0.25);
        let inf = ExtPoint::Infinity;
        let mut clear = T::infinity();
        for p in &branch.points {
            let z = ExtPoint::Finite(p.location);
            clear = clear.min(chordal_distance(z, inf));
            clear = clear.min(chordal_distance(moved.value(z), inf));
        }
        clear = clear.min(chordal_distance(moved.value(inf), inf));
        if clear < margin {
            return Ok(Framed::Lost);
        }
        let pts = branch.points.iter().map(|p| p.location).collect();
        Ok(Framed::Ok(build_system(&moved, &branch, cfg)?, pts))
    }
}

/// Reorders `values` so that `pts[i]` is the point nearest `reference[i]`.
fn match_rows<T: Real>(pts: &[Cx<T>], values: Vec<Cx<T>>, reference: &[Cx<T>]) -> Vec<Cx<T>> {
    let mut used = vec![false; pts.len()];
    let mut out = Vec::with_capacity(values.len());
    for r in reference {
        let best = (0..pts.len())
            .filter(|&i| !used[i])
            .min_by(|&a, &b| (pts[a] - *r).norm().partial_cmp(&(pts[b] - *r).norm()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(0);
        used[best] = true;
        out.push(values[best]);
    }
    out
}

/// Search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_iterations: usize,
    pub objective_tol: f64,
    /// Relative central-difference step.
    pub fd_step: f64,
    pub classify: ClassifyConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        let mut classify = ClassifyConfig::default();
        classify.audit = Some(false);
        Self {
            max_iterations: 200,
            objective_tol: OBJECTIVE_TOL,
            fd_step: 1e-7,
            classify,
        }
    }
}

/// Result of a single search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum SearchOutcome<T> {
    Converged {
        point: FamilyPoint<T>,
        objective: T,
        iterations: usize,
    },
    Failed {
        reason: String,
        objective: Option<T>,
        iterations: usize,
    },
}

impl<T> SearchOutcome<T> {
    pub fn is_converged(&self) -> bool {
        matches!(self, Self::Converged { .. })
    }
}

struct Evaluator<'a, T> {
    k: usize,
    cfg: &'a SearchConfig,
    frame: Frame<T>,
    reference: Vec<Cx<T>>,
}

impl<T: Real> Evaluator<'_, T> {
    /// Residual vector, or `None` when the frame no longer applies.
    fn residual(&self, x: &[T]) -> Result<Option<Vec<T>>> {
        let b = bubble_from_params(self.k, x)?;
        match self.frame.try_system(&b, &self.cfg.classify)? {
            Framed::Lost => Ok(None),
            Framed::Ok(s, pts) => {
                if s.cols() != 1 {
                    return Err(Error::InfeasiblePoint(format!("{} branch points", s.rows())));
                }
                let col = match_rows(&pts, scaled_column(&s), &self.reference);
                Ok(Some(col.iter().flat_map(|c| [c.re, c.im]).collect()))
            }
        }
    }

    fn jacobian(&self, x: &[T]) -> Result<Option<Vec<Vec<T>>>> {
        let cols: Vec<Result<Option<Vec<T>>>> = (0..x.len())
            .into_par_iter()
            .map(|i| {
                let h = T::lit(self.cfg.fd_step) * x[i].abs().max(T::one());
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] = xp[i] + h;
                xm[i] = xm[i] - h;
                let (Some(rp), Some(rm)) = (self.residual(&xp)?, self.residual(&xm)?) else {
                    return Ok(None);
                };
                let two_h = T::lit(2.0) * h;
                Ok(Some(rp.iter().zip(&rm).map(|(a, b)| (*a - *b) / two_h).collect()))
            })
            .collect();
        let mut out = Vec::with_capacity(x.len());
        for c in cols {
            match c? {
                Some(v) => out.push(v),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    fn reframe(&mut self, x: &[T]) -> Result<Vec<T>> {
        let b = bubble_from_params(self.k, x)?;
        self.frame = Frame::new(&b, &self.cfg.classify)?;
        let (s, pts) = self.frame.system(&b, &self.cfg.classify)?;
        self.reference = pts;
        if s.cols() != 1 {
            return Err(Error::InfeasiblePoint(format!("{} branch points", s.rows())));
        }
        Ok(scaled_column(&s).iter().flat_map(|c| [c.re, c.im]).collect())
    }
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum::<T>().sqrt()
}

/// Levenberg–Marquardt on the residue vector of the constant `R`, for
/// families whose generic branch count is 4 (`k = 3`).
pub fn solve_degenerate<T: Real>(start: &FamilyPoint<T>, cfg: &SearchConfig) -> SearchOutcome<T> {
    let k = start.bubble.degree();
    let fail = |reason: String, objective: Option<T>, iterations: usize| SearchOutcome::Failed {
        reason,
        objective,
        iterations,
    };
    if 2 * k - 2 != 4 {
        return fail(format!("search needs exactly four branch points; degree {k} has {}", 2 * k - 2), None, 0);
    }
    let frame = match Frame::new(&start.bubble, &cfg.classify) {
        Ok(f) => f,
        Err(e) => return fail(e.to_string(), None, 0),
    };
    let mut ev = Evaluator {
        k,
        cfg,
        frame,
        reference: Vec::new(),
    };
    let mut x = start.params.clone();
    let mut r = match ev.reframe(&x) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string(), None, 0),
    };
    let tol = T::lit(cfg.objective_tol);
    let n = x.len();
    let mut mu = T::zero();
    let mut nu = T::lit(2.0);
    let mut iterations = 0;
    while iterations < cfg.max_iterations && norm(&r) >= tol * T::lit(1e-2) {
        iterations += 1;
        let jac = match ev.jacobian(&x) {
            Ok(Some(j)) => j,
            Ok(None) => match ev.reframe(&x) {
                Ok(nr) => {
                    r = nr;
                    mu = T::zero();
                    continue;
                }
                Err(e) => return fail(e.to_string(), Some(norm(&r)), iterations),
            },
            Err(e) => return fail(e.to_string(), Some(norm(&r)), iterations),
        };
        let mut a = vec![T::zero(); n * n];
        let mut g = vec![T::zero(); n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = jac[i].iter().zip(&jac[j]).map(|(u, v)| *u * *v).sum();
            }
            g[i] = jac[i].iter().zip(&r).map(|(u, v)| *u * *v).sum();
        }
        if mu == T::zero() {
            let dmax = (0..n).map(|i| a[i * n + i]).fold(T::zero(), T::max);
            mu = T::lit(1e-3) * dmax.max(T::min_positive_value());
        }
        let f0 = norm(&r).powi(2) * T::lit(0.5);
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = a.clone();
            for i in 0..n {
                damped[i * n + i] = damped[i * n + i] + mu;
            }
            let neg: Vec<T> = g.iter().map(|v| -*v).collect();
            let Some(step) = solve_real(n, &damped, &neg) else {
                mu = mu * nu;
                nu = nu * T::lit(2.0);
                continue;
            };
            if norm(&step) <= T::epsilon() * (norm(&x) + T::epsilon()) {
                break;
            }
            let trial: Vec<T> = x.iter().zip(&step).map(|(a, b)| *a + *b).collect();
            let rt = match ev.residual(&trial) {
                Ok(Some(v)) => v,
                _ => {
                    mu = mu * nu;
                    nu = nu * T::lit(2.0);
                    continue;
                }
            };
            let f1 = norm(&rt).powi(2) * T::lit(0.5);
            let predicted: T = step.iter().zip(&g).map(|(s, gi)| *s * (mu * *s - *gi)).sum::<T>() * T::lit(0.5);
            let gain = (f0 - f1) / predicted.max(T::min_positive_value());
            if gain > T::zero() && f1 < f0 {
                x = trial;
                r = rt;
                let c = T::lit(2.0) * gain - T::one();
                mu = mu * (T::one() / T::lit(3.0)).max(T::one() - c * c * c);
                nu = T::lit(2.0);
                accepted = true;
                break;
            }
            mu = mu * nu;
            nu = nu * T::lit(2.0);
        }
        if !accepted {
            break;
        }
    }
    let point = match FamilyPoint::from_params(k, &x) {
        Ok(p) => p,
        Err(e) => return fail(e.to_string(), Some(norm(&r)), iterations),
    };
    let objective = match degeneracy_objective(&point, &cfg.classify) {
        Ok(v) => v,
        Err(e) => return fail(e.to_string(), Some(norm(&r)), iterations),
    };
    if !(objective < tol) {
        return fail(
            format!("objective {:e} above tolerance", objective.to_f64_lossy()),
            Some(objective),
            iterations,
        );
    }
    match classify(&point.bubble, &cfg.classify) {
        Ok(rep) if rep.d >= 1 => SearchOutcome::Converged {
            point,
            objective,
            iterations,
        },
        Ok(_) => fail("classify reports nondegenerate".into(), Some(objective), iterations),
        Err(e) => fail(e.to_string(), Some(objective), iterations),
    }
}

/// `j(λ) = 256 (λ² − λ + 1)³ / (λ² (λ − 1)²)`.
pub fn j_of_lambda<T: Real>(lambda: Cx<T>) -> Cx<T> {
    let one = Cx::new(T::one(), T::zero());
    let s = lambda * lambda - lambda + one;
    let d = lambda * (lambda - one);
    s * s * s * T::lit(256.0) / (d * d)
}

/// Cross-ratio `(z1, z3)(z2, z4) / ((z2, z3)(z1, z4))` with homogeneous
/// determinants `(a, b) = x_a y_b − x_b y_a`.
pub fn cross_ratio<T: Real>(z: [ExtPoint<T>; 4]) -> Cx<T> {
    let h = z.map(ExtPoint::homogeneous);
    let det = |a: usize, b: usize| h[a].0 * h[b].1 - h[b].0 * h[a].1;
    det(0, 2) * det(1, 3) / (det(1, 2) * det(0, 3))
}

/// The `j`-invariant of a four-point branch set.
pub fn mobius_invariants<T: Real>(branch: &BranchSet<T>, tol: T) -> Result<Cx<T>> {
    let pts = branch.ext_points();
    let pts: [ExtPoint<T>; 4] = pts
        .try_into()
        .map_err(|v: Vec<ExtPoint<T>>| Error::InvalidInput(format!("need 4 branch points, got {}", v.len())))?;
    j_invariant(pts, tol)
}

/// `j` of four points of the sphere.
pub fn j_invariant<T: Real>(pts: [ExtPoint<T>; 4], tol: T) -> Result<Cx<T>> {
    for i in 0..4 {
        for j in (i + 1)..4 {
            let d = chordal_distance(pts[i], pts[j]);
            if d < tol {
                return Err(Error::CollidedPoints {
                    distance: d.to_f64_lossy(),
                });
            }
        }
    }
    Ok(j_of_lambda(cross_ratio(pts)))
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (0..4).all(|i| p.contains(&i)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Relative residual of the best target Möbius fit `B = M ∘ A`.
fn target_fit<T: Real>(a: &Bubble<T>, b: &Bubble<T>) -> T {
    let unit = |x: &Bubble<T>| {
        let s = (0..=x.degree())
            .map(|i| x.p().coeff(i).norm_sqr() + x.q().coeff(i).norm_sqr())
            .sum::<T>()
            .sqrt();
        let inv = Cx::new(T::one() / s, T::zero());
        (x.p().scaled(inv), x.q().scaled(inv))
    };
    let (pa, qa) = unit(a);
    let (pb, qb) = unit(b);
    let cols = [-&(&qb * &pa), -&(&qb * &qa), &pb * &pa, &pb * &qa];
    let len = 2 * a.degree().max(b.degree()) + 1;
    let cols: Vec<Vec<Cx<T>>> = cols.iter().map(|c| (0..len).map(|i| c.coeff(i)).collect()).collect();
    let sv = svd(&CMatrix::from_columns(&cols)).singular_values;
    let top = sv.first().copied().unwrap_or(T::zero());
    if top == T::zero() {
        return T::infinity();
    }
    sv.last().copied().unwrap_or(T::zero()) / top
}

/// Normal-form comparison of two degree-3 degenerate candidates: three
/// branch points of each are sent to `0, 1, ∞` (all orderings of the second
/// are tried) and the remaining freedom is a target Möbius map, fitted by
/// least squares. Returns the smallest relative fit residual.
pub fn normal_form_distance<T: Real>(a: &Bubble<T>, b: &Bubble<T>) -> Result<T> {
    let ba = a.branch_set()?;
    let bb = b.branch_set()?;
    let pa = ba.ext_points();
    let pb = bb.ext_points();
    if pa.len() != 4 || pb.len() != 4 {
        return Err(Error::InvalidInput("normal form needs four branch points".into()));
    }
    let sa = Mobius::to_zero_one_infinity(pa[0], pa[1], pa[2])?;
    let la = sa.apply(pa[3]);
    let na = a.precompose(&sa.inverse())?;
    let mut best = T::infinity();
    for perm in permutations4() {
        let sb = Mobius::to_zero_one_infinity(pb[perm[0]], pb[perm[1]], pb[perm[2]])?;
        if chordal_distance(sb.apply(pb[perm[3]]), la) > T::lit(1e-4) {
            continue;
        }
        let nb = b.precompose(&sb.inverse())?;
        best = best.min(target_fit(&na, &nb));
    }
    Ok(best)
}

/// `(z³ + 2) / z`.
pub fn reference_bubble<T: Real>() -> Bubble<T> {
    make_bubble(
        Polynomial::from_real(&[2.0, 0.0, 0.0, 1.0]),
        Polynomial::from_real(&[0.0, 1.0]),
        [T::zero(); 3],
    )
    .expect("reference bubble is valid")
}

/// Degenerate points identified up to domain and target Möbius maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceClass<T> {
    pub representative: FamilyPoint<T>,
    pub j_invariant: [T; 2],
    pub member_count: usize,
    /// Start indices of the members.
    pub members: Vec<usize>,
}

/// Sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_starts: usize,
    pub seed: u64,
    pub search: SearchConfig,
}

/// A search that did not reach the locus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure<T> {
    pub start: usize,
    pub reason: String,
    pub objective: Option<T>,
}

/// Outcome of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep<T> {
    pub n_starts: usize,
    pub classes: Vec<EquivalenceClass<T>>,
    pub failures: Vec<SweepFailure<T>>,
    /// `(start, converged point)` in start order.
    pub converged: Vec<(usize, FamilyPoint<T>)>,
}

impl<T: Real> Sweep<T> {
    pub fn n_converged(&self) -> usize {
        self.converged.len()
    }
}

/// Random start number `index` of a sweep: `P` monic with standard complex
/// normal coefficients, `Q` likewise.
pub fn random_start<T: Real>(k: usize, seed: u64, index: usize) -> Result<FamilyPoint<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let params: Vec<T> = (0..FamilyPoint::<T>::dimension(k))
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            T::lit(v * std::f64::consts::FRAC_1_SQRT_2)
        })
        .collect();
    FamilyPoint::from_params(k, &params)
}

/// Runs [`solve_degenerate`] from seeded random starts and clusters the
/// converged points.
pub fn uniqueness_sweep<T: Real>(k: usize, cfg: &SweepConfig) -> Result<Sweep<T>> {
    if k != 3 {
        return Err(Error::InvalidInput(format!("unsupported degree {k}; the sweep covers k = 3")));
    }
    let outcomes: Vec<(usize, std::result::Result<SearchOutcome<T>, String>)> = (0..cfg.n_starts)
        .into_par_iter()
        .map(|i| {
            let out = random_start::<T>(k, cfg.seed, i)
                .map(|s| solve_degenerate(&s, &cfg.search))
                .map_err(|e| e.to_string());
            (i, out)
        })
        .collect();
    let mut failures = Vec::new();
    let mut converged = Vec::new();
    for (i, out) in outcomes {
        match out {
            Ok(SearchOutcome::Converged { point, .. }) => converged.push((i, point)),
            Ok(SearchOutcome::Failed { reason, objective, .. }) => failures.push(SweepFailure {
                start: i,
                reason,
                objective,
            }),
            Err(reason) => failures.push(SweepFailure {
                start: i,
                reason,
                objective: None,
            }),
        }
    }
    let classes = cluster(&converged, &mut failures);
    Ok(Sweep {
        n_starts: cfg.n_starts,
        classes,
        failures,
        converged,
    })
}

fn cluster<T: Real>(points: &[(usize, FamilyPoint<T>)], failures: &mut Vec<SweepFailure<T>>) -> Vec<EquivalenceClass<T>> {
    let tol = T::lit(MATCH_TOL);
    let mut classes: Vec<EquivalenceClass<T>> = Vec::new();
    for (i, p) in points {
        let j = match p.bubble.branch_set().and_then(|b| mobius_invariants(&b, T::lit(COLLISION_GUARD))) {
            Ok(j) => j,
            Err(e) => {
                failures.push(SweepFailure {
                    start: *i,
                    reason: e.to_string(),
                    objective: None,
                });
                continue;
            }
        };
        let home = classes.iter_mut().find(|c| {
            let cj = Cx::new(c.j_invariant[0], c.j_invariant[1]);
            (cj - j).norm() <= tol * cj.norm().max(T::one())
                && normal_form_distance(&c.representative.bubble, &p.bubble).is_ok_and(|d| d < tol)
        });
        match home {
            Some(c) => {
                c.member_count += 1;
                c.members.push(*i);
            }
            None => classes.push(EquivalenceClass {
                representative: p.clone(),
                j_invariant: [j.re, j.im],
                member_count: 1,
                members: vec![*i],
            }),
        }
    }
    failures.sort_by_key(|f| f.start);
    classes
}
