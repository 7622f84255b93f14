//! Explicit kernel elements of the second variation and residual checks
//! of the identities they satisfy.
//!
//! Normal kernel elements are `f ω` with `Δf + |∇ω|² f = 0`. Besides the
//! trivial `f = ⟨ξ, ω⟩`, each admissible polynomial `R` yields one through
//! the support function `f = ⟨X, ω⟩` of the minimal surface
//! `X = Re ∫ (h/φ') ((1 − φ²)/2, i(1 + φ²)/2, φ) dz`, `h = R / Π(z − p_j)`.
//! The integrand has no residues, so `X` is a rational function obtained
//! from partial fractions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubble::{cross, dot, sphere_differential, BranchSet, Bubble, Vec3};
use crate::cpoly::{series_divide, Polynomial};
use crate::error::{Error, Result};
use crate::linalg::{svd, CMatrix};
use crate::num::{cone, czero, Cx, Real};
use crate::residue::{nullity_at, ResidueSystem};

/// Real scalar field on the plane.
pub type ScalarField<'a, T> = Box<dyn Fn(Cx<T>) -> T + Send + Sync + 'a>;

/// `ℝ³`-valued field on the plane.
pub type VectorField<'a, T> = Box<dyn Fn(Cx<T>) -> Vec3<T> + Send + Sync + 'a>;

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Exclusion radius around branch points, relative to their minimal
/// separation.
pub const EXCLUSION_FACTOR: f64 = 0.05;

/// Annulus radii for the boundedness test, relative to
/// `min(1, minimal branch separation)`.
pub const ANNULUS_RADII: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Sample points on a square avoiding the branch points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub points: Vec<Cx<T>>,
    pub exclusion_radius: T,
}

impl<T: Real> Grid<T> {
    /// `n × n` cell-centred points of `[-half, half]²`, minus discs of
    /// radius `0.05 ×` (minimal branch separation) around branch points.
    pub fn square(branch: &BranchSet<T>, half: T, n: usize) -> Self {
        let pts: Vec<Cx<T>> = branch.points.iter().map(|p| p.location).collect();
        let mut sep = T::infinity();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                sep = sep.min((pts[i] - pts[j]).norm());
            }
        }
        let sep = if sep.is_finite() { sep } else { T::one() };
        let radius = T::lit(EXCLUSION_FACTOR) * sep;
        let step = T::lit(2.0) * half / T::count(n);
        let mut points = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = Cx::new(
                    -half + step * (T::count(i) + T::lit(0.5)),
                    -half + step * (T::count(j) + T::lit(0.5)),
                );
                if pts.iter().all(|&p| (z - p).norm() > radius) {
                    points.push(z);
                }
            }
        }
        Self {
            points,
            exclusion_radius: radius,
        }
    }
}

/// Sampled field values for export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample<T> {
    pub label: String,
    /// How the field was built, e.g. `trivial`, `tangent`, `reconstructed`.
    pub tag: String,
    /// Chart of the sample points; `plane` is the normalized coordinate.
    pub chart: String,
    pub points: Vec<Cx<T>>,
    pub values: Vec<Vec<T>>,
}

impl<T: Real> FieldSample<T> {
    pub fn scalar(label: &str, tag: &str, grid: &Grid<T>, f: &(dyn Fn(Cx<T>) -> T + Sync)) -> Self {
        Self {
            label: label.into(),
            tag: tag.into(),
            chart: "plane".into(),
            points: grid.points.clone(),
            values: grid.points.par_iter().map(|&z| vec![f(z)]).collect(),
        }
    }

    pub fn vector(label: &str, tag: &str, grid: &Grid<T>, u: &(dyn Fn(Cx<T>) -> Vec3<T> + Sync)) -> Self {
        Self {
            label: label.into(),
            tag: tag.into(),
            chart: "plane".into(),
            points: grid.points.clone(),
            values: grid.points.par_iter().map(|&z| u(z).to_vec()).collect(),
        }
    }

    /// CSV with columns `z_re, z_im, v0, v1, ...`.
    pub fn to_csv(&self) -> String {
        let width = self.values.first().map_or(0, Vec::len);
        let mut out = String::from("z_re,z_im");
        for i in 0..width {
            out.push_str(&format!(",v{i}"));
        }
        out.push('\n');
        for (z, v) in self.points.iter().zip(&self.values) {
            out.push_str(&format!("{},{}", z.re, z.im));
            for x in v {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        out
    }
}

/// `f_ξ = ⟨ξ, ω⟩`.
pub fn trivial_solution<T: Real>(bubble: &Bubble<T>, xi: Vec3<T>) -> ScalarField<'_, T> {
    let b = bubble.centered();
    Box::new(move |z| dot(xi, b.jets(z).value))
}

/// The three trivial solutions `⟨e_i, ω⟩`.
pub fn trivial_solutions<T: Real>(bubble: &Bubble<T>) -> [ScalarField<'_, T>; 3] {
    let e = |i: usize| {
        let mut v = [T::zero(); 3];
        v[i] = T::one();
        v
    };
    [
        trivial_solution(bubble, e(0)),
        trivial_solution(bubble, e(1)),
        trivial_solution(bubble, e(2)),
    ]
}

fn d2<T: Real, V: Copy, F: Fn(Cx<T>) -> V>(f: &F, z: Cx<T>, dir: Cx<T>, h: T, comb: impl Fn([V; 5]) -> V) -> V {
    let s = |k: f64| f(z + dir * (h * T::lit(k)));
    comb([s(-2.0), s(-1.0), s(0.0), s(1.0), s(2.0)])
}

/// Fourth-order `(∂_x f, ∂_y f, Δf)` of a scalar field.
fn scalar_derivatives<T: Real>(f: &(dyn Fn(Cx<T>) -> T + Sync), z: Cx<T>, h: T) -> (T, T, T) {
    let twelve = T::lit(12.0);
    let first = |v: [T; 5]| (v[0] - T::lit(8.0) * v[1] + T::lit(8.0) * v[3] - v[4]) / (twelve * h);
    let second = |v: [T; 5]| (-v[0] + T::lit(16.0) * v[1] - T::lit(30.0) * v[2] + T::lit(16.0) * v[3] - v[4]) / (twelve * h * h);
    let ex = Cx::new(T::one(), T::zero());
    let ey = Cx::new(T::zero(), T::one());
    let fx = d2(&f, z, ex, h, first);
    let fy = d2(&f, z, ey, h, first);
    let lap = d2(&f, z, ex, h, second) + d2(&f, z, ey, h, second);
    (fx, fy, lap)
}

fn vector_derivatives<T: Real>(u: &(dyn Fn(Cx<T>) -> Vec3<T> + Sync), z: Cx<T>, h: T) -> (Vec3<T>, Vec3<T>, Vec3<T>) {
    let mut dx = [T::zero(); 3];
    let mut dy = [T::zero(); 3];
    let mut lap = [T::zero(); 3];
    for i in 0..3 {
        let c = move |w: Cx<T>| u(w)[i];
        let (a, b, l) = scalar_derivatives(&c, z, h);
        dx[i] = a;
        dy[i] = b;
        lap[i] = l;
    }
    (dx, dy, lap)
}

fn norm3<T: Real>(v: Vec3<T>) -> T {
    dot(v, v).sqrt()
}

/// `max |Δf + |∇ω|² f| / max |∇ω|² |f|` over the grid.
pub fn schrodinger_residual<T: Real>(bubble: &Bubble<T>, f: &(dyn Fn(Cx<T>) -> T + Sync), grid: &Grid<T>, h: T) -> T {
    let w = bubble.wronskian();
    let vals: Vec<(T, T)> = grid
        .points
        .par_iter()
        .map(|&z| {
            let (_, _, lap) = scalar_derivatives(f, z, h);
            let v = crate::bubble::grad_density(bubble.p(), bubble.q(), &w, z);
            let fz = f(z);
            ((lap + v * fz).abs(), (v * fz).abs())
        })
        .collect();
    ratio(&vals)
}

fn ratio<T: Real>(vals: &[(T, T)]) -> T {
    let num = vals.iter().map(|v| v.0).fold(T::zero(), T::max);
    let den = vals.iter().map(|v| v.1).fold(T::zero(), T::max);
    if den == T::zero() {
        if num == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        num / den
    }
}

/// `max |Δu − 2(ω_x ∧ u_y + u_x ∧ ω_y)|` relative to the largest of `|Δu|`
/// and the right-hand side over the grid.
pub fn linearized_residual<T: Real>(bubble: &Bubble<T>, u: &(dyn Fn(Cx<T>) -> Vec3<T> + Sync), grid: &Grid<T>, h: T) -> T {
    let two = T::lit(2.0);
    let vals: Vec<(T, T)> = grid
        .points
        .par_iter()
        .map(|&z| {
            let j = bubble.jets(z);
            let (ux, uy, lap) = vector_derivatives(u, z, h);
            let a = cross(j.dx, uy);
            let b = cross(ux, j.dy);
            let rhs = [two * (a[0] + b[0]), two * (a[1] + b[1]), two * (a[2] + b[2])];
            let res = [lap[0] - rhs[0], lap[1] - rhs[1], lap[2] - rhs[2]];
            (norm3(res), norm3(lap).max(norm3(rhs)))
        })
        .collect();
    ratio(&vals)
}

/// `max |⟨ω_z, u_z⟩|` (complex bilinear) relative to `max |ω_z| |u_z|`.
pub fn conformal_jacobi_check<T: Real>(bubble: &Bubble<T>, u: &(dyn Fn(Cx<T>) -> Vec3<T> + Sync), grid: &Grid<T>, h: T) -> T {
    let half = T::lit(0.5);
    let vals: Vec<(T, T)> = grid
        .points
        .par_iter()
        .map(|&z| {
            let j = bubble.jets(z);
            let (ux, uy, _) = vector_derivatives(u, z, h);
            let wz: [Cx<T>; 3] = std::array::from_fn(|i| Cx::new(j.dx[i], -j.dy[i]) * half);
            let vz: [Cx<T>; 3] = std::array::from_fn(|i| Cx::new(ux[i], -uy[i]) * half);
            let prod = (0..3).fold(czero::<T>(), |a, i| a + wz[i] * vz[i]);
            let nw = wz.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
            let nv = vz.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
            (prod.norm(), nw * nv)
        })
        .collect();
    ratio(&vals)
}

/// Monomial directions `(A, B)` tangent to the moduli space: with `Q` of
/// full degree, `deg A ≤ k` and `deg B < k`; otherwise the roles swap so
/// that the monic coefficient stays fixed. Real and imaginary multiples
/// give `4k + 2` fields.
pub fn tangent_directions<T: Real>(bubble: &Bubble<T>) -> Vec<(Polynomial<T>, Polynomial<T>)> {
    let k = bubble.degree();
    let q_full = bubble.q().degree() == Some(k);
    let (na, nb) = if q_full { (k + 1, k) } else { (k, k + 1) };
    let units = [cone::<T>(), Cx::new(T::zero(), T::one())];
    let mut out = Vec::with_capacity(4 * k + 2);
    for a in 0..na {
        for &u in &units {
            out.push((Polynomial::monomial(u, a), Polynomial::zero()));
        }
    }
    for b in 0..nb {
        for &u in &units {
            out.push((Polynomial::zero(), Polynomial::monomial(u, b)));
        }
    }
    out
}

/// `ũ = d/dt π((P + tA)/(Q + tB))` at `t = 0` for every tangent direction.
pub fn tangent_fields<T: Real>(bubble: &Bubble<T>) -> Vec<VectorField<'_, T>> {
    tangent_directions(bubble)
        .into_iter()
        .map(|(a, b)| -> VectorField<'_, T> {
            Box::new(move |z| {
                let pv = bubble.p().eval(z);
                let qv = bubble.q().eval(z);
                let s = pv.norm().max(qv.norm());
                sphere_differential(pv / s, qv / s, a.eval(z) / s, b.eval(z) / s)
            })
        })
        .collect()
}

/// Principal parts of a proper rational function at known poles:
/// `terms[j][s - 1]` is the coefficient of `(z − p_j)^{-s}`.
fn principal_parts<T: Real>(num: &Polynomial<T>, den_lead: Cx<T>, poles: &[(Cx<T>, usize)]) -> Vec<Vec<Cx<T>>> {
    poles
        .iter()
        .enumerate()
        .map(|(j, &(p, m))| {
            let mut rest = Polynomial::constant(den_lead);
            for (i, &(q, mq)) in poles.iter().enumerate() {
                if i != j {
                    rest = &rest * &Polynomial::linear_root(q).powi(mq);
                }
            }
            let t = series_divide(&num.taylor_at(p), &rest.taylor_at(p), m);
            (1..=m).map(|s| t[m - s]).collect()
        })
        .collect()
}

/// Rational antiderivative of a residue-free proper rational function.
#[derive(Debug, Clone)]
struct Antiderivative<T> {
    poles: Vec<Cx<T>>,
    /// `coeffs[j][s - 2]` multiplies `(z − p_j)^{1 − s} / (1 − s)`.
    coeffs: Vec<Vec<Cx<T>>>,
}

impl<T: Real> Antiderivative<T> {
    fn eval(&self, z: Cx<T>) -> Cx<T> {
        let mut acc = czero::<T>();
        for (p, cs) in self.poles.iter().zip(&self.coeffs) {
            let inv = cone::<T>() / (z - *p);
            for (i, &c) in cs.iter().enumerate() {
                let s = i + 2;
                acc = acc + c * inv.powi(s as i32 - 1) / T::lit(1.0 - s as f64);
            }
        }
        acc
    }
}

/// A nontrivial normal kernel element built from a null vector.
pub struct ReconstructedField<T> {
    bubble: Bubble<T>,
    parts: [Antiderivative<T>; 3],
    /// Largest relative simple-pole coefficient encountered.
    pub leak: T,
}

impl<T: Real> ReconstructedField<T> {
    /// `X = Re ∫ (h/φ') ((1 − φ²)/2, i(1 + φ²)/2, φ) dz`.
    pub fn x(&self, z: Cx<T>) -> Vec3<T> {
        [self.parts[0].eval(z).re, self.parts[1].eval(z).re, self.parts[2].eval(z).re]
    }

    /// The support function `f = ⟨X, ω⟩`.
    pub fn f(&self, z: Cx<T>) -> T {
        dot(self.x(z), self.bubble.jets(z).value)
    }
}

/// Builds `f = ⟨X_h, ω⟩` for `R = Σ v_ℓ z̃^ℓ` on the normalized bubble the
/// system was built for.
pub fn reconstruct_field<T: Real>(
    bubble: &Bubble<T>,
    branch: &BranchSet<T>,
    system: &ResidueSystem<T>,
    rcoeffs: &[Cx<T>],
) -> Result<ReconstructedField<T>> {
    let bubble = bubble.centered();
    let r = system.r_polynomial(rcoeffs);
    let (p, q) = (bubble.p(), bubble.q());
    let half = Cx::new(T::lit(0.5), T::zero());
    let i = Cx::new(T::zero(), T::one());
    let pp = p * p;
    let qq = q * q;
    let nums = [
        &r * &(&qq - &pp).scaled(half),
        &r * &(&qq + &pp).scaled(half * i),
        &r * &(p * q),
    ];
    let den = &Polynomial::from_roots(&branch.points.iter().map(|b| b.location).collect::<Vec<_>>()) * &bubble.wronskian();
    let poles: Vec<(Cx<T>, usize)> = branch.points.iter().map(|b| (b.location, b.multiplicity)).collect();
    let mut sep = T::one();
    for a in 0..poles.len() {
        for b in (a + 1)..poles.len() {
            sep = sep.min((poles[a].0 - poles[b].0).norm());
        }
    }
    let rad = sep * T::lit(0.5);
    let tol = T::lit(1e-6);
    let mut leak = T::zero();
    let mut parts = Vec::with_capacity(3);
    for num in &nums {
        let pp = principal_parts(num, den.leading(), &poles);
        let mut coeffs = Vec::with_capacity(pp.len());
        for terms in &pp {
            let size = terms
                .iter()
                .enumerate()
                .map(|(s, c)| c.norm() * rad.powi(-(s as i32 + 1)))
                .fold(T::zero(), T::max);
            if size > T::zero() {
                let rel = terms[0].norm() / rad / size;
                leak = leak.max(rel);
            }
            coeffs.push(terms[1..].to_vec());
        }
        parts.push(Antiderivative {
            poles: poles.iter().map(|p| p.0).collect(),
            coeffs,
        });
    }
    if leak > tol {
        return Err(Error::ResidueLeak {
            leak: leak.to_f64_lossy(),
            tol: tol.to_f64_lossy(),
        });
    }
    let parts: [Antiderivative<T>; 3] = parts.try_into().map_err(|_| Error::InvalidInput("component count".into()))?;
    Ok(ReconstructedField { bubble, parts, leak })
}

/// Largest spread of `max |f|` over shrinking circles around each branch
/// point, relative to the field scale. Fails with `UnboundedField` above
/// 10%.
pub fn boundedness_check<T: Real>(f: &(dyn Fn(Cx<T>) -> T + Sync), branch: &BranchSet<T>, grid: &Grid<T>) -> Result<T> {
    let pts: Vec<Cx<T>> = branch.points.iter().map(|p| p.location).collect();
    let mut sep = T::one();
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            sep = sep.min((pts[i] - pts[j]).norm());
        }
    }
    let grid_scale = grid.points.iter().map(|&z| f(z).abs()).fold(T::zero(), T::max);
    let samples = 32;
    let mut worst = T::zero();
    for &p in &pts {
        let maxima: Vec<T> = ANNULUS_RADII
            .iter()
            .map(|&rho| {
                let r = T::lit(rho) * sep;
                (0..samples)
                    .map(|k| {
                        let t = T::lit(2.0) * T::PI() * T::count(k) / T::count(samples);
                        f(p + Cx::new(t.cos(), t.sin()) * r).abs()
                    })
                    .fold(T::zero(), T::max)
            })
            .collect();
        let hi = maxima.iter().copied().fold(T::zero(), T::max);
        let lo = maxima.iter().copied().fold(T::infinity(), T::min);
        let scale = hi.max(grid_scale);
        if scale > T::zero() {
            worst = worst.max((hi - lo) / scale);
        }
    }
    if !(worst <= T::lit(0.1)) {
        return Err(Error::UnboundedField {
            variation: worst.to_f64_lossy(),
        });
    }
    Ok(worst)
}

/// Numerical rank of sampled scalar fields: columns are normalized and
/// singular values below `tol · max(σ_max, 1)` are discarded.
pub fn gram_rank<T: Real>(fields: &[&(dyn Fn(Cx<T>) -> T + Sync)], grid: &Grid<T>, tol: T) -> (usize, Vec<T>) {
    let cols: Vec<Vec<Cx<T>>> = fields
        .iter()
        .map(|f| {
            let v: Vec<T> = grid.points.par_iter().map(|&z| f(z)).collect();
            let n = v.iter().map(|x| *x * *x).sum::<T>().sqrt();
            let n = if n > T::zero() { n } else { T::one() };
            v.into_iter().map(|x| Cx::new(x / n, T::zero())).collect()
        })
        .collect();
    let sv = svd(&CMatrix::from_columns(&cols)).singular_values;
    (sv.len() - nullity_at(&sv, tol), sv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::make_bubble;
    use crate::num::cx;
    use crate::residue::{classify_detailed, ClassifyConfig};

    fn bub(p: &[f64], q: &[f64]) -> Bubble<f64> {
        make_bubble(Polynomial::from_real(p), Polynomial::from_real(q), [0.0; 3]).unwrap()
    }

    fn plain_grid(n: usize) -> Grid<f64> {
        let empty = BranchSet {
            points: vec![],
            infinity_multiplicity: 0,
            n: 0,
        };
        Grid::square(&empty, 2.0, n)
    }

    #[test]
    fn trivial_solution_of_identity() {
        let id = bub(&[0.0, 1.0], &[1.0]);
        let f = trivial_solution(&id, [0.0, 0.0, 1.0]);
        for z in [cx(0.3, 0.4), cx(-1.5, 2.0)] {
            let r2: f64 = z.norm_sqr();
            assert!((f(z) - (r2 - 1.0) / (r2 + 1.0)).abs() < 1e-15);
        }
        let zero = trivial_solution(&id, [0.0; 3]);
        assert_eq!(zero(cx(0.1, 0.2)), 0.0);
    }

    #[test]
    fn schrodinger_examples() {
        let id = bub(&[0.0, 1.0], &[1.0]);
        let g = plain_grid(16);
        let h = DEFAULT_STEP;
        assert_eq!(schrodinger_residual(&id, &|_| 0.0, &g, h), 0.0);
        let f = trivial_solution(&id, [0.0, 0.0, 1.0]);
        assert!(schrodinger_residual(&id, &*f, &g, h) < 1e-6);
        let re = |z: Cx<f64>| z.re;
        assert!(schrodinger_residual(&id, &re, &g, h) > 0.5);
    }

    #[test]
    fn tangent_field_counts() {
        assert_eq!(tangent_fields(&bub(&[0.0, 1.0], &[1.0])).len(), 6);
        assert_eq!(tangent_fields(&bub(&[2.0, 0.0, 0.0, 1.0], &[0.0, 1.0])).len(), 14);
    }

    #[test]
    fn constant_and_omega_fields() {
        let b = bub(&[2.0, 0.0, 0.0, 1.0], &[0.0, 1.0]);
        let g = plain_grid(12);
        let c = |_: Cx<f64>| [1.0, -2.0, 0.5];
        assert_eq!(linearized_residual(&b, &c, &g, DEFAULT_STEP), 0.0);
        // ω solves Δω = 2ω_x∧ω_y, so it is off the linearized equation by half
        let w = |z: Cx<f64>| b.jets(z).value;
        assert!((linearized_residual(&b, &w, &g, DEFAULT_STEP) - 0.5).abs() < 1e-6);
        let w = |z: Cx<f64>| b.jets(z).value;
        assert!(conformal_jacobi_check(&b, &w, &g, DEFAULT_STEP) < 1e-8);
    }

    #[test]
    fn reconstruction_on_degenerate_cubic() {
        let c = classify_detailed(&bub(&[2.0, 0.0, 0.0, 1.0], &[0.0, 1.0]), &ClassifyConfig::default()).unwrap();
        let field = reconstruct_field(&c.normalized, &c.branch, &c.system, &c.system.basis[0]).unwrap();
        let grid = Grid::square(&c.branch, 2.0, 32);
        let f = |z: Cx<f64>| field.f(z);
        let res = schrodinger_residual(&c.normalized, &f, &grid, DEFAULT_STEP);
        assert!(res < 1e-6, "{res}");
        let zero = reconstruct_field(&c.normalized, &c.branch, &c.system, &[cx(0.0, 0.0)]).unwrap();
        assert_eq!(zero.f(cx(0.3, 0.1)), 0.0);
    }

    fn degenerate_cubic() -> (crate::residue::Classification<f64>, ReconstructedField<f64>) {
        let c = classify_detailed(&bub(&[2.0, 0.0, 0.0, 1.0], &[0.0, 1.0]), &ClassifyConfig::default()).unwrap();
        let field = reconstruct_field(&c.normalized, &c.branch, &c.system, &c.system.basis[0]).unwrap();
        (c, field)
    }

    #[test]
    fn reconstructed_field_is_bounded_and_independent() {
        let (c, field) = degenerate_cubic();
        let grid = Grid::square(&c.branch, 2.0, 32);
        let f = |z: Cx<f64>| field.f(z);
        let var = boundedness_check(&f, &c.branch, &grid).unwrap();
        assert!(var < 0.1);
        let t = trivial_solutions(&c.normalized);
        let (rank, sv) = gram_rank(&[&*t[0], &*t[1], &*t[2], &f], &grid, 1e-8);
        assert_eq!(rank, 4, "{sv:?}");
        let (rank3, _) = gram_rank(&[&*t[0], &*t[1], &*t[2]], &grid, 1e-8);
        assert_eq!(rank3, 3);
    }

    #[test]
    fn unbounded_field_is_rejected() {
        let (c, _) = degenerate_cubic();
        let grid = Grid::square(&c.branch, 2.0, 8);
        let p = c.branch.points[0].location;
        let f = move |z: Cx<f64>| 1.0 / (z - p).norm();
        assert!(matches!(boundedness_check(&f, &c.branch, &grid), Err(Error::UnboundedField { .. })));
    }

    #[test]
    fn kernel_elements_pass_residual_checks() {
        let (c, field) = degenerate_cubic();
        let b = &c.normalized;
        let grid = Grid::square(&c.branch, 2.0, 24);
        let h = DEFAULT_STEP;
        let u = |z: Cx<f64>| {
            let w = b.jets(z).value;
            let f = field.f(z);
            [f * w[0], f * w[1], f * w[2]]
        };
        assert!(linearized_residual(b, &u, &grid, h) < 1e-6);
        assert!(conformal_jacobi_check(b, &u, &grid, h) < 1e-6);
        for t in trivial_solutions(b) {
            assert!(schrodinger_residual(b, &*t, &grid, h) < 1e-6);
            let v = |z: Cx<f64>| {
                let w = b.jets(z).value;
                let f = t(z);
                [f * w[0], f * w[1], f * w[2]]
            };
            assert!(linearized_residual(b, &v, &grid, h) < 1e-6);
        }
        let fields = tangent_fields(b);
        assert_eq!(fields.len(), 14);
        for u in &fields {
            assert!(linearized_residual(b, &**u, &grid, h) < 1e-6);
            assert!(conformal_jacobi_check(b, &**u, &grid, h) < 1e-6);
        }
    }

    #[test]
    fn decomposition_into_tangential_and_normal_parts() {
        let (c, field) = degenerate_cubic();
        let b = &c.normalized;
        let grid = Grid::square(&c.branch, 2.0, 16);
        let h = DEFAULT_STEP;
        let tangents = tangent_fields(b);
        // a mixed kernel element: translation + tangent field + normal field
        let u = |z: Cx<f64>| {
            let w = b.jets(z).value;
            let t = tangents[3](z);
            let f = field.f(z);
            [0.3 + t[0] + f * w[0], -0.2 + t[1] + f * w[1], 0.7 + t[2] + f * w[2]]
        };
        assert!(linearized_residual(b, &u, &grid, h) < 1e-6);
        let normal = |z: Cx<f64>| dot(u(z), b.jets(z).value);
        let tangential = |z: Cx<f64>| {
            let w = b.jets(z).value;
            let v = u(z);
            let n = dot(v, w);
            [v[0] - n * w[0], v[1] - n * w[1], v[2] - n * w[2]]
        };
        assert!(schrodinger_residual(b, &normal, &grid, h) < 1e-6);
        assert!(conformal_jacobi_check(b, &tangential, &grid, h) < 1e-6);
        let off_plane = grid
            .points
            .iter()
            .map(|&z| dot(tangential(z), b.jets(z).value).abs())
            .fold(0.0, f64::max);
        assert!(off_plane < 1e-12);
    }

    #[test]
    fn fourth_order_step_halving() {
        let id = bub(&[0.0, 1.0], &[1.0]);
        let g = plain_grid(8);
        let f = trivial_solution(&id, [0.0, 0.0, 1.0]);
        let ratio = schrodinger_residual(&id, &*f, &g, 0.2) / schrodinger_residual(&id, &*f, &g, 0.1);
        assert!((12.0..=20.0).contains(&ratio), "{ratio}");
        let u = &tangent_fields(&id)[1];
        let ratio = linearized_residual(&id, &**u, &g, 0.2) / linearized_residual(&id, &**u, &g, 0.1);
        assert!((12.0..=20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn csv_export() {
        let id = bub(&[0.0, 1.0], &[1.0]);
        let g = plain_grid(2);
        let f = trivial_solution(&id, [1.0, 0.0, 0.0]);
        let s = FieldSample::scalar("identity", "trivial", &g, &*f);
        let csv = s.to_csv();
        assert!(csv.starts_with("z_re,z_im,v0\n"));
        assert_eq!(csv.lines().count(), 5);
    }
}
