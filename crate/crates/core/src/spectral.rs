//! Spectral cross-check of the kernel dimension.
//!
//! The Jacobi equation `Δf + |∇ω|² f = 0` on the plane is conformally
//! transplanted to the round sphere as `Δ_{g₀} f + V f = 0` with
//! `V = |∇ω|² (1 + |z|²)² / 4`. The pullback metric of the bubble has
//! conical singularities at the branch points, but `V` itself is a smooth
//! function on the sphere (it merely vanishes there), so a Galerkin
//! discretization in real spherical harmonics converges spectrally. The
//! number of eigenvalues of `−Δ_{g₀} − V` near zero estimates `dim N(ω)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubble::{grad_density, wronskian_of, Bubble};
use crate::cpoly::Polynomial;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::mobius::{ExtPoint, Mobius};
use crate::num::{Cx, Real};
use crate::quadrature::gauss_legendre;

/// Required separation between excluded and counted eigenvalues.
pub const SPECTRAL_GAP_THRESHOLD: f64 = 1e2;

/// Truncation degrees of the convergence table.
pub const DEFAULT_TABLE: [usize; 4] = [16, 24, 32, 40];

/// Galerkin resolution: harmonics up to `l_max` and a tensor quadrature
/// with Gauss–Legendre nodes in `cos θ` and uniform nodes in longitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralProblem {
    pub l_max: usize,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl SpectralProblem {
    /// Default quadrature, oversampled relative to `l_max` to resolve the
    /// potential as well as the harmonic products.
    pub fn new(l_max: usize) -> Self {
        let n_theta = 2 * l_max + 34;
        Self {
            l_max,
            n_theta,
            n_phi: 2 * n_theta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_theta < self.l_max + 1 || self.n_phi < 2 * self.l_max + 1 {
            return Err(Error::QuadratureUnderResolved(format!(
                "{} × {} nodes cannot resolve degree {}",
                self.n_theta, self.n_phi, self.l_max
            )));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        (self.l_max + 1) * (self.l_max + 1)
    }
}

/// Potential of a bubble as a function on the sphere.
#[derive(Debug, Clone)]
pub struct Potential<T> {
    p: Polynomial<T>,
    q: Polynomial<T>,
    w: Polynomial<T>,
    pi: Polynomial<T>,
    qi: Polynomial<T>,
    wi: Polynomial<T>,
}

impl<T: Real> Potential<T> {
    pub fn new(bubble: &Bubble<T>) -> Self {
        let k = bubble.degree();
        let (pi, qi) = bubble.inverted();
        Self {
            p: bubble.p().clone(),
            q: bubble.q().clone(),
            w: bubble.wronskian(),
            wi: wronskian_of(&pi, &qi, k),
            pi,
            qi,
        }
    }

    /// `V` at a stereographic coordinate; the formula is the same in the
    /// inverted chart, which is used for `|z| > 1`.
    pub fn at_coordinate(&self, z: Cx<T>) -> T {
        let quarter = T::lit(0.25);
        if z.norm() <= T::one() {
            let f = T::one() + z.norm_sqr();
            grad_density(&self.p, &self.q, &self.w, z) * f * f * quarter
        } else {
            let w = z.inv();
            let f = T::one() + w.norm_sqr();
            grad_density(&self.pi, &self.qi, &self.wi, w) * f * f * quarter
        }
    }

    /// `V` at the sphere point with `x₃ = cos θ` and longitude `φ`, where
    /// `π(z)` has stereographic coordinate `z = cot(θ/2) e^{iφ}`.
    pub fn at_sphere(&self, cos_theta: T, phi: T) -> T {
        let x3 = cos_theta;
        let e = Cx::new(phi.cos(), phi.sin());
        let s = (T::one() - x3 * x3).max(T::zero()).sqrt();
        if x3 <= T::zero() {
            // southern hemisphere, |z| ≤ 1
            self.at_coordinate(e * (s / (T::one() - x3)))
        } else {
            let f = T::one() + x3;
            let w = e.conj() * (s / f);
            let g = T::one() + w.norm_sqr();
            grad_density(&self.pi, &self.qi, &self.wi, w) * g * g * T::lit(0.25)
        }
    }
}

/// Orthonormal associated Legendre functions `P̄_ℓ^m(x)`, `0 ≤ m ≤ ℓ ≤ L`,
/// with `∫_{-1}^{1} P̄² dx = 1`, stored at index `ℓ(ℓ+1)/2 + m`.
pub fn normalized_legendre<T: Real>(l_max: usize, x: T) -> Vec<T> {
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut out = vec![T::zero(); idx(l_max, l_max) + 1];
    let s = (T::one() - x * x).max(T::zero()).sqrt();
    out[0] = T::one() / T::lit(2.0).sqrt();
    for m in 1..=l_max {
        let mf = T::count(m);
        let f = ((T::lit(2.0) * mf + T::one()) / (T::lit(2.0) * mf)).sqrt();
        out[idx(m, m)] = f * s * out[idx(m - 1, m - 1)];
    }
    for m in 0..l_max {
        let mf = T::count(m);
        out[idx(m + 1, m)] = (T::lit(2.0) * mf + T::lit(3.0)).sqrt() * x * out[idx(m, m)];
        for l in (m + 2)..=l_max {
            let lf = T::count(l);
            let lm = T::count(l - 1);
            let a = ((T::lit(4.0) * lf * lf - T::one()) / (lf * lf - mf * mf)).sqrt();
            let b = ((lm * lm - mf * mf) / (T::lit(4.0) * lm * lm - T::one())).sqrt();
            out[idx(l, m)] = a * (x * out[idx(l - 1, m)] - b * out[idx(l - 2, m)]);
        }
    }
    out
}

/// Orthonormal longitude functions: `1/√(2π)`, `cos(mφ)/√π` for `m > 0`,
/// `sin(|m|φ)/√π` for `m < 0`.
fn longitude_basis<T: Real>(m: i64, phi: T) -> T {
    let pi = T::PI();
    match m {
        0 => T::one() / (T::lit(2.0) * pi).sqrt(),
        m if m > 0 => (T::count(m as usize) * phi).cos() / pi.sqrt(),
        m => (T::count((-m) as usize) * phi).sin() / pi.sqrt(),
    }
}

/// Real spherical harmonic index `(ℓ, m)`, `−ℓ ≤ m ≤ ℓ`, in the order
/// `ℓ² + ℓ + m`.
pub fn harmonic_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

fn harmonic_list(l_max: usize) -> Vec<(usize, i64)> {
    let mut v = Vec::with_capacity((l_max + 1) * (l_max + 1));
    for l in 0..=l_max {
        for m in -(l as i64)..=(l as i64) {
            v.push((l, m));
        }
    }
    v
}

/// Galerkin matrix `diag(ℓ(ℓ+1)) − ⟨Y, V Y⟩` for an arbitrary potential,
/// row-major.
pub fn assemble_with<T: Real, F>(problem: &SpectralProblem, potential: F) -> Result<Vec<T>>
where
    F: Fn(T, T) -> T + Sync,
{
    problem.validate()?;
    let l_max = problem.l_max;
    let (x, wx) = gauss_legendre::<T>(problem.n_theta);
    let nphi = problem.n_phi;
    let dphi = T::lit(2.0) * T::PI() / T::count(nphi);
    let phis: Vec<T> = (0..nphi).map(|k| dphi * T::count(k)).collect();
    let nm = 2 * l_max + 1;
    let ms: Vec<i64> = (-(l_max as i64)..=(l_max as i64)).collect();
    let phi_table: Vec<Vec<T>> = ms.iter().map(|&m| phis.iter().map(|&p| longitude_basis(m, p)).collect()).collect();

    // per ring: Legendre values and the longitude Gram matrix of V
    let rings: Vec<(Vec<T>, Vec<T>)> = x
        .par_iter()
        .zip(&wx)
        .map(|(&xi, &wi)| {
            let v: Vec<T> = phis.iter().map(|&p| potential(xi, p) * dphi).collect();
            let mut a = vec![T::zero(); nm * nm];
            for i in 0..nm {
                for j in i..nm {
                    let s = (0..nphi).fold(T::zero(), |acc, k| acc + v[k] * phi_table[i][k] * phi_table[j][k]);
                    a[i * nm + j] = s * wi;
                    a[j * nm + i] = s * wi;
                }
            }
            (normalized_legendre(l_max, xi), a)
        })
        .collect();

    let list = harmonic_list(l_max);
    let dim = list.len();
    let lidx = |l: usize, m: i64| l * (l + 1) / 2 + m.unsigned_abs() as usize;
    let rows: Vec<Vec<T>> = (0..dim)
        .into_par_iter()
        .map(|r| {
            let (l1, m1) = list[r];
            let mi = (m1 + l_max as i64) as usize;
            let mut row = vec![T::zero(); dim];
            for (ring_p, a) in &rings {
                let p1 = ring_p[lidx(l1, m1)];
                for (c, &(l2, m2)) in list.iter().enumerate() {
                    let mj = (m2 + l_max as i64) as usize;
                    row[c] = row[c] - p1 * ring_p[lidx(l2, m2)] * a[mi * nm + mj];
                }
            }
            row[r] = row[r] + T::count(l1 * (l1 + 1));
            row
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Galerkin matrix of `−Δ_{g₀} − V` for a bubble.
pub fn assemble<T: Real>(bubble: &Bubble<T>, problem: &SpectralProblem) -> Result<Vec<T>> {
    let v = Potential::new(bubble);
    assemble_with(problem, |x, p| v.at_sphere(x, p))
}

/// Center of mass of the energy measure `V dA` on the domain sphere.
pub fn energy_barycenter<T: Real>(bubble: &Bubble<T>, n_theta: usize) -> [T; 3] {
    let v = Potential::new(bubble);
    let (x, w) = gauss_legendre::<T>(n_theta);
    let n_phi = 2 * n_theta;
    let dphi = T::lit(2.0) * T::PI() / T::count(n_phi);
    let mut acc = [T::zero(); 4];
    for (&xi, &wi) in x.iter().zip(&w) {
        let s = (T::one() - xi * xi).max(T::zero()).sqrt();
        for k in 0..n_phi {
            let p = dphi * T::count(k);
            let m = v.at_sphere(xi, p) * wi;
            acc[0] = acc[0] + m * s * p.cos();
            acc[1] = acc[1] + m * s * p.sin();
            acc[2] = acc[2] + m * xi;
            acc[3] = acc[3] + m;
        }
    }
    [acc[0] / acc[3], acc[1] / acc[3], acc[2] / acc[3]]
}

/// Barycenter modulus below which a coordinate counts as balanced.
pub const BALANCE_TOL: f64 = 1e-2;

/// Reparametrizes the domain by a Möbius map so that the energy measure
/// has its center of mass near the origin of the ball. The Jacobi equation
/// is conformally invariant (`f ∘ T` solves it for `ω ∘ T`), so the kernel
/// dimension is unchanged, while a spread-out potential is resolved by far
/// fewer harmonics than a concentrated one.
pub fn balance<T: Real>(bubble: &Bubble<T>) -> Result<(Bubble<T>, Mobius<T>)> {
    let mut total = Mobius::identity();
    let mut current = bubble.clone();
    for _ in 0..60 {
        let c = energy_barycenter(&current, 48);
        let Some(step) = recentering_step(c, T::lit(BALANCE_TOL))? else {
            break;
        };
        total = total.compose(&step);
        current = bubble.precompose(&total)?;
    }
    Ok((current, total))
}

/// Rotation followed by a dilation that pulls a measure with barycenter `c`
/// towards the origin under pushforward by the inverse map; `None` once
/// `|c|` is below `tol`.
fn recentering_step<T: Real>(c: [T; 3], tol: T) -> Result<Option<Mobius<T>>> {
    let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    if r < tol {
        return Ok(None);
    }
    let u = [c[0] / r, c[1] / r, c[2] / r];
    // homogeneous coordinates of the stereographic preimage of u
    let (hx, hy) = if u[2] <= T::zero() {
        (Cx::new(u[0], u[1]), Cx::new(T::one() - u[2], T::zero()))
    } else {
        (Cx::new(T::one() + u[2], T::zero()), Cx::new(u[0], -u[1]))
    };
    let n = (hx.norm_sqr() + hy.norm_sqr()).sqrt();
    let (hx, hy) = (hx / n, hy / n);
    let rot = Mobius::new(hy.conj(), hx, -hx.conj(), hy)?;
    let lambda = ((T::one() - r) / (T::one() + r)).sqrt();
    let sl = lambda.sqrt();
    let zero = Cx::new(T::zero(), T::zero());
    let dil = Mobius::new(Cx::new(sl, T::zero()), zero, zero, Cx::new(T::one() / sl, T::zero()))?;
    Ok(Some(rot.compose(&dil)))
}

fn ext_to_sphere<T: Real>(p: ExtPoint<T>) -> [T; 3] {
    let (x, y) = p.homogeneous();
    let w = x * y.conj() * T::lit(2.0);
    let n = x.norm_sqr() + y.norm_sqr();
    [w.re / n, w.im / n, (x.norm_sqr() - y.norm_sqr()) / n]
}

/// Target Möbius map `M` putting the conformal barycenter of the branch
/// values (weighted by ramification) at the origin, and `M ∘ φ`. Maps in
/// one orbit of domain and target Möbius maps land on the same balanced
/// map up to rotations on both sides.
pub fn balance_target<T: Real>(bubble: &Bubble<T>) -> Result<(Bubble<T>, Mobius<T>)> {
    let branch = bubble.branch_set()?;
    let mut values: Vec<(ExtPoint<T>, T)> = branch
        .points
        .iter()
        .map(|p| (bubble.value(ExtPoint::Finite(p.location)), T::count(p.multiplicity - 1)))
        .collect();
    if branch.infinity_multiplicity > 1 {
        values.push((bubble.value(ExtPoint::Infinity), T::count(branch.infinity_multiplicity - 1)));
    }
    let mut total = Mobius::identity();
    if values.len() >= 3 {
        for _ in 0..200 {
            let inv = total.inverse();
            let mut c = [T::zero(); 3];
            let mut mass = T::zero();
            for &(v, w) in &values {
                let x = ext_to_sphere(inv.apply(v));
                for i in 0..3 {
                    c[i] = c[i] + w * x[i];
                }
                mass = mass + w;
            }
            let c = c.map(|x| x / mass);
            let Some(step) = recentering_step(c, T::lit(1e-10))? else {
                break;
            };
            total = total.compose(&step);
        }
    }
    let m = total.inverse();
    Ok((bubble.transform_target(&m)?, m))
}

/// Largest relative asymmetry of a row-major square matrix.
pub fn symmetry_defect<T: Real>(n: usize, a: &[T]) -> T {
    let scale = a.iter().map(|x| x.abs()).fold(T::zero(), T::max).max(T::min_positive_value());
    let mut worst = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[i * n + j] - a[j * n + i]).abs());
        }
    }
    worst / scale
}

/// Settings for [`kernel_count`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub l_max: usize,
    /// Relative kernel threshold `ε_kernel`.
    pub tol_kernel: f64,
    /// Truncation degrees for the convergence table; `l_max` is appended
    /// when missing.
    pub table: Vec<usize>,
    /// Discretize `M ∘ φ` with `M` from [`balance_target`] instead of `φ`.
    #[serde(default)]
    pub balance_target: bool,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            l_max: 40,
            tol_kernel: 1e-5,
            table: DEFAULT_TABLE.to_vec(),
            balance_target: false,
        }
    }
}

/// One row of the convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow<T> {
    #[serde(rename = "L_max")]
    pub l_max: usize,
    pub kernel_count: usize,
    pub gap_ratio: T,
    pub eigenvalues_near_zero: Vec<T>,
}

/// Near-zero spectrum of the transplanted Jacobi operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult<T> {
    #[serde(rename = "L_max")]
    pub l_max: usize,
    /// The eigenvalues of smallest modulus, ascending by modulus.
    pub eigenvalues_near_zero: Vec<T>,
    pub kernel_count: usize,
    pub gap_ratio: T,
    /// Counts agree across the last two table rows and the counted
    /// eigenvalues do not grow with the truncation.
    pub converged: bool,
    pub certified: bool,
    pub tol_kernel: f64,
    /// Domain reparametrization applied before discretizing.
    pub balancing: Mobius<T>,
    /// Target map `M` when the spectrum is that of `M ∘ φ`; identity
    /// unless requested.
    pub target_balancing: Mobius<T>,
    pub convergence: Vec<ConvergenceRow<T>>,
    #[serde(skip)]
    pub eigenvalues: Vec<T>,
}

/// Counts eigenvalues with `|λ| < ε · max(V_max, 1)` and measures the gap.
pub fn count_near_zero<T: Real>(eigenvalues: &[T], scale: T, eps: T) -> (usize, T, Vec<T>) {
    let mut by_mod: Vec<T> = eigenvalues.to_vec();
    by_mod.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap_or(std::cmp::Ordering::Equal));
    let cut = eps * scale;
    let count = by_mod.iter().filter(|l| l.abs() < cut).count();
    let excluded = by_mod.get(count).map_or(T::infinity(), |l| l.abs());
    let included = if count > 0 {
        by_mod[count - 1].abs().max(T::lit(1e-14) * scale)
    } else {
        cut
    };
    let near = by_mod.iter().take(count + 4).copied().collect();
    (count, excluded / included, near)
}

fn potential_scale<T: Real>(v: &Potential<T>, problem: &SpectralProblem) -> T {
    let (x, _) = gauss_legendre::<T>(problem.n_theta);
    let dphi = T::lit(2.0) * T::PI() / T::count(problem.n_phi);
    x.iter()
        .flat_map(|&xi| (0..problem.n_phi).map(move |k| (xi, dphi * T::count(k))))
        .map(|(xi, p)| v.at_sphere(xi, p))
        .fold(T::one(), T::max)
}

/// Dense eigensolve at one truncation.
pub fn spectrum_at<T: Real>(bubble: &Bubble<T>, l_max: usize, eps: T) -> Result<(ConvergenceRow<T>, Vec<T>)> {
    let problem = SpectralProblem::new(l_max);
    let m = assemble(bubble, &problem)?;
    let ev = symmetric_eigenvalues(problem.dimension(), &m);
    let scale = potential_scale(&Potential::new(bubble), &problem);
    let (count, gap, near) = count_near_zero(&ev, scale, eps);
    Ok((
        ConvergenceRow {
            l_max,
            kernel_count: count,
            gap_ratio: gap,
            eigenvalues_near_zero: near,
        },
        ev,
    ))
}

/// Kernel dimension estimate with a convergence table. Fails with
/// `NoCertifiedGap` when the largest truncation has no clear gap.
pub fn kernel_count<T: Real>(bubble: &Bubble<T>, cfg: &SpectralConfig) -> Result<SpectrumResult<T>> {
    let result = spectrum(bubble, cfg)?;
    if !result.certified {
        return Err(Error::NoCertifiedGap {
            gap_ratio: result.gap_ratio.to_f64_lossy(),
        });
    }
    Ok(result)
}

/// As [`kernel_count`] but reporting an uncertified gap in the result
/// instead of failing.
pub fn spectrum<T: Real>(bubble: &Bubble<T>, cfg: &SpectralConfig) -> Result<SpectrumResult<T>> {
    let eps = T::lit(cfg.tol_kernel);
    let mut levels: Vec<usize> = cfg.table.iter().copied().filter(|&l| l < cfg.l_max).collect();
    levels.push(cfg.l_max);
    let (bubble, target_balancing) = if cfg.balance_target {
        balance_target(&bubble.centered())?
    } else {
        (bubble.centered(), Mobius::identity())
    };
    let (bubble, balancing) = balance(&bubble)?;
    let mut table = Vec::with_capacity(levels.len());
    let mut last_ev = Vec::new();
    for &l in &levels {
        let (row, ev) = spectrum_at(&bubble, l, eps)?;
        table.push(row);
        last_ev = ev;
    }
    let last = table.last().cloned().expect("at least one level");
    let converged = match table.len() {
        1 => true,
        n => {
            let prev = &table[n - 2];
            // eigenvalues at rounding level carry no convergence information
            let radius = last_ev.iter().map(|l| l.abs()).fold(T::zero(), T::max);
            let floor = T::lit(1e3) * T::epsilon() * radius.max(T::one());
            prev.kernel_count == last.kernel_count
                && last
                    .eigenvalues_near_zero
                    .iter()
                    .zip(&prev.eigenvalues_near_zero)
                    .take(last.kernel_count)
                    .all(|(a, b)| a.abs() <= b.abs().max(floor))
        }
    };
    let certified = last.gap_ratio >= T::lit(SPECTRAL_GAP_THRESHOLD);
    Ok(SpectrumResult {
        l_max: cfg.l_max,
        eigenvalues_near_zero: last.eigenvalues_near_zero.clone(),
        kernel_count: last.kernel_count,
        gap_ratio: last.gap_ratio,
        converged,
        certified,
        tol_kernel: cfg.tol_kernel,
        balancing,
        target_balancing,
        convergence: table,
        eigenvalues: last_ev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::make_bubble;
    use crate::num::cx;

    fn bub(p: &[f64], q: &[f64]) -> Bubble<f64> {
        make_bubble(Polynomial::from_real(p), Polynomial::from_real(q), [0.0; 3]).unwrap()
    }

    #[test]
    fn legendre_is_orthonormal() {
        let l_max = 12;
        let (x, w) = gauss_legendre::<f64>(30);
        let vals: Vec<Vec<f64>> = x.iter().map(|&xi| normalized_legendre(l_max, xi)).collect();
        let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
        for m in 0..=l_max {
            for l1 in m..=l_max {
                for l2 in m..=l_max {
                    let s: f64 = (0..x.len()).map(|i| w[i] * vals[i][idx(l1, m)] * vals[i][idx(l2, m)]).sum();
                    let e = if l1 == l2 { 1.0 } else { 0.0 };
                    assert!((s - e).abs() < 1e-12, "l1={l1} l2={l2} m={m}: {s}");
                }
            }
        }
        // P̄_1^0 = √(3/2) x
        let v = normalized_legendre(1, 0.3_f64);
        assert!((v[1] - (1.5f64).sqrt() * 0.3).abs() < 1e-15);
    }

    #[test]
    fn identity_potential_is_two() {
        let v = Potential::new(&bub(&[0.0, 1.0], &[1.0]));
        for (x, p) in [(-0.9, 0.3), (0.0, 2.0), (0.99, -1.0), (1.0, 0.0), (-1.0, 0.0)] {
            assert!((v.at_sphere(x, p) - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn potential_vanishes_at_branch_point() {
        let v = Potential::new(&bub(&[2.0, 0.0, 0.0, 1.0], &[0.0, 1.0]));
        assert!(v.at_coordinate(cx(1.0, 0.0)).abs() < 1e-28);
        // ∞ is a branch point too: the north pole
        assert!(v.at_sphere(1.0, 0.0).abs() < 1e-28);
    }

    #[test]
    fn zero_potential_gives_laplacian() {
        let problem = SpectralProblem::new(6);
        let m = assemble_with::<f64, _>(&problem, |_, _| 0.0).unwrap();
        let n = problem.dimension();
        let ev = symmetric_eigenvalues(n, &m);
        let (count, _, _) = count_near_zero(&ev, 1.0, 1e-5);
        assert_eq!(count, 1);
        for (i, &(l, _)) in harmonic_list(6).iter().enumerate() {
            for j in 0..n {
                let e = if i == j { (l * (l + 1)) as f64 } else { 0.0 };
                assert!((m[i * n + j] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_matrix_is_shifted_diagonal() {
        let problem = SpectralProblem::new(8);
        let m = assemble(&bub(&[0.0, 1.0], &[1.0]), &problem).unwrap();
        let n = problem.dimension();
        for (i, &(l, _)) in harmonic_list(8).iter().enumerate() {
            for j in 0..n {
                let e = if i == j { (l * (l + 1)) as f64 - 2.0 } else { 0.0 };
                assert!((m[i * n + j] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn undersampled_quadrature_is_rejected() {
        let p = SpectralProblem {
            l_max: 10,
            n_theta: 10,
            n_phi: 40,
        };
        assert!(matches!(p.validate(), Err(Error::QuadratureUnderResolved(_))));
    }

    #[test]
    fn potential_integrates_to_energy() {
        let b = bub(&[2.0, 0.0, 0.0, 1.0], &[0.0, 1.0]);
        let v = Potential::new(&b);
        let (x, w) = gauss_legendre::<f64>(160);
        let n_phi = 320;
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let total: f64 = x
            .iter()
            .zip(&w)
            .map(|(&xi, &wi)| (0..n_phi).map(|k| v.at_sphere(xi, dphi * k as f64)).sum::<f64>() * wi * dphi)
            .sum();
        // the round area element is a quarter of (1+|z|²)² dL², so ∫V dA = ∫|∇ω|² dL²
        assert!((total / (24.0 * std::f64::consts::PI) - 1.0).abs() < 1e-10, "{total}");
    }

    #[test]
    fn target_balancing_centers_branch_values() {
        let b = bub(&[2.0, 0.0, 0.0, 1.0], &[0.0, 1.0]);
        let (bt, m) = balance_target(&b).unwrap();
        assert!(m != Mobius::identity());
        let branch = bt.branch_set().unwrap();
        let mut c = [0.0; 3];
        for p in branch.ext_points() {
            let x = ext_to_sphere(bt.value(p));
            for i in 0..3 {
                c[i] += x[i] / 4.0;
            }
        }
        assert!(c.iter().all(|v| v.abs() < 1e-9), "{c:?}");
        let id = bub(&[0.0, 1.0], &[1.0]);
        assert_eq!(balance_target(&id).unwrap().1, Mobius::identity());
    }
}
