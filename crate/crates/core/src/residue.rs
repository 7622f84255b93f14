//! Residue functionals at branch points and the degeneracy verdict.
//!
//! For a bubble in a normalized coordinate (no branch point at `∞`,
//! `deg P ≤ deg Q`, no branch value at `∞`) the candidate functions are
//! `h = R / Π(z − p_j)` with `deg R ≤ n − 4`, and the bubble is degenerate
//! exactly when some nonzero `R` gives `Res_{p_j}(h / φ') = 0` for every `j`.
//! Since `1/φ' = Q² / W`, entry `(j, ℓ)` of the system is the residue of
//! `z̃^ℓ Q² / (Π(z − p_i) · W)` at `p_j`, where `z̃` is the recentered
//! coordinate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubble::{normalize_for_test, normalize_target, Bubble, BranchSet, DEFAULT_CHORDAL_MARGIN};
use crate::cpoly::{gcd_coprime, roots, series_divide, GcdOutcome, Polynomial, RootCluster, RootConfig};
use crate::error::{Error, Result};
use crate::linalg::{svd, CMatrix};
use crate::mobius::{ExtPoint, Mobius};
use crate::num::{cone, czero, Cx, Real};

/// Trapezoid nodes on each residue contour.
pub const CONTOUR_POINTS: usize = 96;

/// Required ratio between the singular values straddling the cutoff.
pub const GAP_THRESHOLD: f64 = 1e3;

/// Rational function with cached pole clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction<T> {
    pub num: Polynomial<T>,
    pub den: Polynomial<T>,
    pub poles: Vec<RootCluster<T>>,
}

/// How [`RationalFunction::residue_at`] evaluates a residue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidueMethod {
    DerivativeFormula,
    Contour,
    /// Both methods, failing on disagreement.
    Both,
}

impl<T: Real> RationalFunction<T> {
    /// Reduces `num / den` by any approximate common factor and locates the
    /// poles.
    pub fn new(num: Polynomial<T>, den: Polynomial<T>) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        let (num, den) = match gcd_coprime(&num, &den, T::lit(T::NULLITY_TOL))? {
            GcdOutcome::CommonFactor(g) if !num.is_zero() => (num.div_rem(&g).0, den.div_rem(&g).0),
            _ => (num, den),
        };
        let poles = roots(&den, &RootConfig::for_precision::<T>())?;
        Ok(Self { num, den, poles })
    }

    /// Uses a known factorization `den = lc · Π (z − p_i)^{m_i}`.
    pub fn with_poles(num: Polynomial<T>, den: Polynomial<T>, poles: Vec<RootCluster<T>>) -> Self {
        Self { num, den, poles }
    }

    pub fn eval(&self, z: Cx<T>) -> Cx<T> {
        self.num.eval(z) / self.den.eval(z)
    }

    fn pole_index(&self, p: Cx<T>) -> Result<usize> {
        let (idx, dist) = self
            .poles
            .iter()
            .enumerate()
            .map(|(i, c)| (i, (c.location - p).norm()))
            .fold((usize::MAX, T::infinity()), |a, b| if b.1 < a.1 { b } else { a });
        let tol = T::lit(T::CLUSTER_TOL).sqrt() * (T::one() + p.norm());
        if idx == usize::MAX || dist > tol {
            return Err(Error::NotAPole {
                re: p.re.to_f64_lossy(),
                im: p.im.to_f64_lossy(),
            });
        }
        Ok(idx)
    }

    /// Residue at the pole nearest `p`.
    pub fn residue_at(&self, p: Cx<T>, order_hint: usize, method: ResidueMethod, tol: T) -> Result<Cx<T>> {
        let j = self.pole_index(p)?;
        if self.poles[j].multiplicity > order_hint {
            return Err(Error::InvalidInput(format!(
                "pole of order {} exceeds the hint {order_hint}",
                self.poles[j].multiplicity
            )));
        }
        match method {
            ResidueMethod::DerivativeFormula => Ok(self.residue_series(j)),
            ResidueMethod::Contour => Ok(self.residue_contour(j, CONTOUR_POINTS).0),
            ResidueMethod::Both => {
                let a = self.residue_series(j);
                let (b, scale) = self.residue_contour(j, CONTOUR_POINTS);
                check_agreement(a, b, scale, tol)?;
                Ok(a)
            }
        }
    }

    /// `Res = [(z−p)^m f]^{(m−1)} / (m−1)!`, read off as a Taylor coefficient
    /// of the cleared quotient.
    fn residue_series(&self, j: usize) -> Cx<T> {
        self.residue_with_numerator(j, &self.num.taylor_at(self.poles[j].location))
    }

    /// As [`Self::residue_series`] with the numerator given by its Taylor
    /// coefficients at the pole. The cleared denominator is expanded from its
    /// linear factors.
    fn residue_with_numerator(&self, j: usize, num: &[Cx<T>]) -> Cx<T> {
        let pole = self.poles[j];
        let m = pole.multiplicity;
        let mut rest = vec![czero::<T>(); m];
        rest[0] = self.den.leading();
        for (i, other) in self.poles.iter().enumerate() {
            if i != j {
                let factor = [pole.location - other.location, cone()];
                for _ in 0..other.multiplicity {
                    rest = series_mul(&rest, &factor, m);
                }
            }
        }
        series_divide(num, &rest, m)[m - 1]
    }

    /// Trapezoid rule on a circle of half the distance to the nearest other
    /// pole. Also returns the scale `r · rms|f|` of the integrand.
    fn residue_contour(&self, j: usize, n: usize) -> (Cx<T>, T) {
        contour(|z| self.eval(z), self.poles[j].location, contour_radius(&self.poles, j), n)
    }
}

fn series_mul<T: Real>(a: &[Cx<T>], b: &[Cx<T>], len: usize) -> Vec<Cx<T>> {
    let mut c = vec![czero::<T>(); len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        for (k, &bk) in b.iter().enumerate().take(len - i) {
            c[i + k] = c[i + k] + ai * bk;
        }
    }
    c
}

fn contour_radius<T: Real>(poles: &[RootCluster<T>], j: usize) -> T {
    let centre = poles[j].location;
    let nearest = poles
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .map(|(_, c)| (c.location - centre).norm())
        .fold(T::infinity(), T::min);
    if nearest.is_finite() {
        nearest * T::lit(0.5)
    } else {
        T::one()
    }
}

fn contour<T: Real, F: Fn(Cx<T>) -> Cx<T>>(f: F, centre: Cx<T>, r: T, n: usize) -> (Cx<T>, T) {
    let mut acc = czero::<T>();
    let mut sq = T::zero();
    for k in 0..n {
        let t = T::lit(2.0) * T::PI() * T::count(k) / T::count(n);
        let u = Cx::new(t.cos(), t.sin()) * r;
        let v = f(centre + u);
        acc = acc + v * u;
        sq = sq + v.norm_sqr();
    }
    (acc / T::count(n), r * (sq / T::count(n)).sqrt())
}

fn check_agreement<T: Real>(a: Cx<T>, b: Cx<T>, scale: T, tol: T) -> Result<T> {
    let diff = (a - b).norm();
    let rel = diff / a.norm().max(b.norm()).max(scale);
    if !(rel <= tol) {
        return Err(Error::MethodDisagreement {
            difference: rel.to_f64_lossy(),
            tol: tol.to_f64_lossy(),
        });
    }
    Ok(rel)
}

/// Tunable parameters of the residue test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub seed: u64,
    /// Relative singular-value cutoff for the nullity.
    pub tol_nullity: f64,
    pub cluster_tol: f64,
    /// Chordal margin kept between `∞` and branch points, poles and branch
    /// values in the normalized coordinate.
    pub chordal_margin: f64,
    /// Relative tolerance for the derivative/contour cross-check.
    pub crosscheck_tol: f64,
    /// `None` audits when `n ≤ 8`.
    pub audit: Option<bool>,
}

impl ClassifyConfig {
    pub fn for_precision<T: Real>() -> Self {
        Self {
            seed: 0,
            tol_nullity: T::NULLITY_TOL,
            cluster_tol: T::CLUSTER_TOL,
            chordal_margin: DEFAULT_CHORDAL_MARGIN,
            crosscheck_tol: T::NULLITY_TOL,
            audit: None,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self::for_precision::<f64>()
    }
}

/// The `n × (n − 3)` residue system of a normalized bubble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueSystem<T> {
    /// Raw residues, row `j` for branch point `j`.
    pub matrix: Vec<Vec<Cx<T>>>,
    /// Row scales `r_j · rms|f|` on each residue contour.
    pub row_scales: Vec<T>,
    /// Singular values of the row-equilibrated matrix, descending.
    pub singular_values: Vec<T>,
    pub nullity: usize,
    pub tol: T,
    /// Null vectors in the recentered monomial basis.
    pub basis: Vec<Vec<Cx<T>>>,
    /// Recentering `z̃ = (z − center) / scale`.
    pub center: Cx<T>,
    pub scale: T,
    pub gap_ratio: T,
    pub borderline: bool,
    /// `max_ℓ |Σ_j M(j, ℓ)| / ‖row scales‖`.
    pub row_sum_defect: T,
    /// Largest relative difference between the two residue methods, when
    /// audited.
    pub method_difference: Option<T>,
}

impl<T: Real> ResidueSystem<T> {
    fn empty(tol: T) -> Self {
        Self {
            matrix: Vec::new(),
            row_scales: Vec::new(),
            singular_values: Vec::new(),
            nullity: 0,
            tol,
            basis: Vec::new(),
            center: czero(),
            scale: T::one(),
            gap_ratio: T::infinity(),
            borderline: false,
            row_sum_defect: T::zero(),
            method_difference: None,
        }
    }

    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn cols(&self) -> usize {
        self.matrix.first().map_or(0, Vec::len)
    }

    /// `R(z) = Σ v_ℓ z̃^ℓ` in the standard monomial basis.
    pub fn r_polynomial(&self, v: &[Cx<T>]) -> Polynomial<T> {
        let inv = cone::<T>() / Cx::new(self.scale, T::zero());
        let zt = Polynomial::new(vec![-self.center * inv, inv]);
        v.iter()
            .enumerate()
            .fold(Polynomial::zero(), |acc, (l, &c)| &acc + &zt.powi(l).scaled(c))
    }

    /// Smallest singular value of the equilibrated matrix.
    pub fn smallest_singular_value(&self) -> Option<T> {
        self.singular_values.last().copied()
    }
}

/// Number of singular values below `tol · max(σ_max, 1)`.
pub fn nullity_at<T: Real>(sv: &[T], tol: T) -> usize {
    let cut = tol * sv.first().copied().unwrap_or(T::zero()).max(T::one());
    sv.iter().filter(|&&s| s < cut).count()
}

fn gap_ratio<T: Real>(sv: &[T], tol: T) -> T {
    let cut = tol * sv.first().copied().unwrap_or(T::zero()).max(T::one());
    let above = sv.iter().copied().filter(|&s| s >= cut).fold(T::infinity(), T::min);
    let below = sv.iter().copied().filter(|&s| s < cut).fold(T::neg_infinity(), T::max);
    let above = if above.is_finite() { above } else { T::one() };
    let below = if below.is_finite() { below.max(T::min_positive_value()) } else { cut };
    above / below
}

/// Builds the residue system of a bubble in a normalized coordinate.
pub fn build_system<T: Real>(bubble: &Bubble<T>, branch: &BranchSet<T>, cfg: &ClassifyConfig) -> Result<ResidueSystem<T>> {
    let tol = T::lit(cfg.tol_nullity);
    if branch.infinity_multiplicity != 0 {
        return Err(Error::InvalidInput("branch point at infinity; normalize first".into()));
    }
    let n = branch.points.len();
    if n < 4 {
        return Ok(ResidueSystem::empty(tol));
    }
    let pts: Vec<Cx<T>> = branch.points.iter().map(|p| p.location).collect();
    let guard = T::lit(10.0) * T::lit(cfg.cluster_tol).sqrt();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (pts[i] - pts[j]).norm();
            if d < guard * T::one().max(pts[i].norm()) {
                return Err(Error::DegenerateGeometry(format!("branch points {i} and {j} at distance {d}")));
            }
        }
    }
    let center = pts.iter().fold(czero::<T>(), |a, &b| a + b) / T::count(n);
    let scale = (pts.iter().map(|&p| (p - center).norm_sqr()).sum::<T>() / T::count(n)).sqrt();
    let scale = if scale > T::zero() { scale } else { T::one() };

    let w = bubble.wronskian();
    let prod = Polynomial::from_roots(&pts);
    // monic product times W, so `den = lc(W) · Π (z − p_i)^{m_i}`
    let den = &prod * &w;
    let poles: Vec<RootCluster<T>> = branch
        .points
        .iter()
        .map(|p| RootCluster {
            location: p.location,
            multiplicity: p.multiplicity,
            radius: T::zero(),
        })
        .collect();
    let q = bubble.q();
    let inv = cone::<T>() / Cx::new(scale, T::zero());
    let cols = n - 3;
    let audit = cfg.audit.unwrap_or(n <= 8);
    let xtol = T::lit(cfg.crosscheck_tol);
    let f = RationalFunction::with_poles(Polynomial::one(), den, poles.clone());

    let rows: Vec<Result<(Vec<Cx<T>>, T, T)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let m = poles[j].multiplicity;
            let qt = q.taylor_at(pts[j]);
            let zt = [(pts[j] - center) * inv, inv];
            let mut num = series_mul(&qt, &qt, m);
            let mut row = Vec::with_capacity(cols);
            let mut worst = T::zero();
            let mut row_scale = T::zero();
            for l in 0..cols {
                if l > 0 {
                    num = series_mul(&num, &zt, m);
                }
                let a = f.residue_with_numerator(j, &num);
                if l == 0 || audit {
                    let g = |z: Cx<T>| {
                        let qz = q.eval(z);
                        ((z - center) * inv).powu(l as u32) * qz * qz
                            / (pts.iter().fold(cone::<T>(), |a, &p| a * (z - p)) * w.eval(z))
                    };
                    let (b, s) = contour(g, pts[j], contour_radius(&poles, j), CONTOUR_POINTS);
                    if l == 0 {
                        row_scale = s;
                    }
                    if audit {
                        worst = worst.max(check_agreement(a, b, s, xtol)?);
                    }
                }
                row.push(a);
            }
            Ok((row, row_scale, worst))
        })
        .collect();
    let mut matrix = Vec::with_capacity(n);
    let mut row_scales = Vec::with_capacity(n);
    let mut worst = T::zero();
    for r in rows {
        let (row, s, w) = r?;
        matrix.push(row);
        row_scales.push(s);
        worst = worst.max(w);
    }

    let scaled: Vec<Vec<Cx<T>>> = (0..cols)
        .map(|l| (0..n).map(|j| matrix[j][l] / row_scales[j]).collect())
        .collect();
    let dec = svd(&CMatrix::from_columns(&scaled));
    let sv = dec.singular_values;
    let nullity = nullity_at(&sv, tol);
    let hundred = T::lit(100.0);
    let stable = [tol / hundred, tol * hundred].iter().all(|&t| nullity_at(&sv, t) == nullity);
    let gap = gap_ratio(&sv, tol);
    let borderline = !stable || !(gap > T::lit(GAP_THRESHOLD));
    let basis = dec.right_vectors[cols - nullity..].to_vec();

    let ref_norm = row_scales.iter().map(|&s| s * s).sum::<T>().sqrt();
    let row_sum_defect = (0..cols)
        .map(|l| (0..n).fold(czero::<T>(), |a, j| a + matrix[j][l]).norm() / ref_norm)
        .fold(T::zero(), T::max);

    Ok(ResidueSystem {
        matrix,
        row_scales,
        singular_values: sv,
        nullity,
        tol,
        basis,
        center,
        scale,
        gap_ratio: gap,
        borderline,
        row_sum_defect,
        method_difference: audit.then_some(worst),
    })
}

/// Degeneracy verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Degenerate,
    Nondegenerate,
}

/// A branch point in report form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportedBranchPoint<T> {
    pub re: T,
    pub im: T,
    pub m: usize,
}

/// Tolerances in effect for a classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub nullity: f64,
    pub cluster: f64,
    pub chordal_margin: f64,
    pub crosscheck: f64,
    pub gap_threshold: f64,
}

/// Outcome of [`classify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport<T> {
    pub version: String,
    pub seed: u64,
    pub k: usize,
    pub n: usize,
    pub d: usize,
    #[serde(rename = "dim_N")]
    pub dim_n: usize,
    pub dim_kernel: usize,
    pub verdict: Verdict,
    /// Branch points in the normalized coordinate.
    pub branch_points: Vec<ReportedBranchPoint<T>>,
    pub singular_values: Vec<T>,
    /// Domain reparametrization applied before the test.
    pub normalization: Mobius<T>,
    /// Target rotation applied before the test.
    pub target_rotation: Mobius<T>,
    pub tolerances: Tolerances,
    pub borderline: bool,
    pub gap_ratio: Option<T>,
    pub row_sum_defect: T,
    pub method_difference: Option<T>,
    /// Notes attached by the caller, e.g. tolerances outside their
    /// documented range.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Classification together with the normalized data it was computed on.
#[derive(Debug, Clone)]
pub struct Classification<T> {
    pub report: DegeneracyReport<T>,
    pub normalized: Bubble<T>,
    pub branch: BranchSet<T>,
    pub system: ResidueSystem<T>,
}

/// Runs the residue test on a bubble.
pub fn classify<T: Real>(bubble: &Bubble<T>, cfg: &ClassifyConfig) -> Result<DegeneracyReport<T>> {
    classify_detailed(bubble, cfg).map(|c| c.report)
}

/// [`classify`] returning the intermediate normalized bubble and system.
pub fn classify_detailed<T: Real>(bubble: &Bubble<T>, cfg: &ClassifyConfig) -> Result<Classification<T>> {
    let margin = T::lit(cfg.chordal_margin);
    let (domain, t) = normalize_for_test(&bubble.centered(), cfg.seed, margin)?;
    let branch = domain.branch_points(T::lit(cfg.cluster_tol))?;
    let (normalized, u) = if branch.n >= 4 {
        let mut targets = branch.ext_points();
        targets.push(ExtPoint::Infinity);
        normalize_target(&domain, &targets, cfg.seed, margin)?
    } else {
        (domain, Mobius::identity())
    };
    let branch = branch.polished(&normalized.wronskian(), T::lit(cfg.cluster_tol).sqrt());
    let system = build_system(&normalized, &branch, cfg)?;
    let k = bubble.degree();
    let d = system.nullity;
    let report = DegeneracyReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        k,
        n: branch.n,
        d,
        dim_n: 3 + 2 * d,
        dim_kernel: 4 * k + 5 + 2 * d,
        verdict: if d > 0 {
            Verdict::Degenerate
        } else {
            Verdict::Nondegenerate
        },
        branch_points: branch
            .points
            .iter()
            .map(|p| ReportedBranchPoint {
                re: p.location.re,
                im: p.location.im,
                m: p.multiplicity,
            })
            .collect(),
        singular_values: system.singular_values.clone(),
        normalization: t,
        target_rotation: u,
        tolerances: Tolerances {
            nullity: cfg.tol_nullity,
            cluster: cfg.cluster_tol,
            chordal_margin: cfg.chordal_margin,
            crosscheck: cfg.crosscheck_tol,
            gap_threshold: GAP_THRESHOLD,
        },
        borderline: system.borderline,
        gap_ratio: system.gap_ratio.is_finite().then_some(system.gap_ratio),
        row_sum_defect: system.row_sum_defect,
        method_difference: system.method_difference,
        warnings: Vec::new(),
    };
    Ok(Classification {
        report,
        normalized,
        branch,
        system,
    })
}
