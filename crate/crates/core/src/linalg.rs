//! Small dense linear algebra: complex SVD, real symmetric eigenvalues and
//! a pivoted real solver. Everything is generic over [`Real`].

use num_complex::Complex;

use crate::num::{czero, Cx, Real};

/// Dense complex matrix stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![czero(); rows * cols],
        }
    }

    /// Builds a matrix from a list of columns of equal length.
    pub fn from_columns(columns: &[Vec<Cx<T>>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for c in columns {
            assert_eq!(c.len(), rows, "ragged columns");
            data.extend_from_slice(c);
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Cx<T> {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Cx<T>) {
        self.data[c * self.rows + r] = v;
    }

    pub fn column(&self, c: usize) -> &[Cx<T>] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn conj_transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }
}

/// Singular values (descending) and right singular vectors of a matrix.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub singular_values: Vec<T>,
    /// Column `i` is the right singular vector paired with `singular_values[i]`.
    pub right_vectors: Vec<Vec<Cx<T>>>,
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
///
/// Returns `min(rows, cols)` singular values when `rows >= cols`; for wide
/// matrices the decomposition runs on the conjugate transpose and right
/// vectors are not meaningful for the original shape, so they are
/// recomputed only for the tall case. Callers needing null vectors must
/// pass tall or square matrices.
pub fn svd<T: Real>(a: &CMatrix<T>) -> Svd<T> {
    if a.rows < a.cols {
        let t = a.conj_transpose();
        let mut s = jacobi_svd(t);
        s.right_vectors.clear();
        return s;
    }
    jacobi_svd(a.clone())
}

fn jacobi_svd<T: Real>(mut a: CMatrix<T>) -> Svd<T> {
    let n = a.cols;
    let mut v = CMatrix::<T>::zeros(n, n);
    for i in 0..n {
        v.set(i, i, Complex::new(T::one(), T::zero()));
    }
    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let cp = a.column(p);
                    let cq = a.column(q);
                    let mut alpha = T::zero();
                    let mut beta = T::zero();
                    let mut gamma = czero::<T>();
                    for (x, y) in cp.iter().zip(cq) {
                        alpha = alpha + x.norm_sqr();
                        beta = beta + y.norm_sqr();
                        gamma = gamma + x.conj() * y;
                    }
                    (alpha, beta, gamma)
                };
                let g = gamma.norm();
                if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let phase = (gamma / g).conj();
                rotate_columns(&mut a, p, q, c, s, phase);
                rotate_columns(&mut v, p, q, c, s, phase);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(T, usize)> = (0..n)
        .map(|j| {
            let norm = a
                .column(j)
                .iter()
                .map(|z| z.norm_sqr())
                .fold(T::zero(), |x, y| x + y)
                .sqrt();
            (norm, j)
        })
        .collect();
    order.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));
    Svd {
        singular_values: order.iter().map(|&(s, _)| s).collect(),
        right_vectors: order.iter().map(|&(_, j)| v.column(j).to_vec()).collect(),
    }
}

fn rotate_columns<T: Real>(m: &mut CMatrix<T>, p: usize, q: usize, c: T, s: T, phase: Cx<T>) {
    let rows = m.rows;
    for r in 0..rows {
        let xp = m.get(r, p);
        let xq = m.get(r, q) * phase;
        m.set(r, p, xp * c - xq * s);
        m.set(r, q, xp * s + xq * c);
    }
}

/// Eigenvalues (ascending) of a dense real symmetric matrix given row-major.
///
/// Householder reduction to tridiagonal form followed by implicit QL.
pub fn symmetric_eigenvalues<T: Real>(n: usize, a: &[T]) -> Vec<T> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    let mut m = a.to_vec();
    let (mut d, mut e) = tridiagonalize(n, &mut m);
    tridiagonal_ql(&mut d, &mut e);
    d.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    d
}

/// Householder tridiagonalization (eigenvalue-only variant). Returns the
/// diagonal and the sub-diagonal (with `e[0] = 0`).
fn tridiagonalize<T: Real>(n: usize, a: &mut [T]) -> (Vec<T>, Vec<T>) {
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        if l > 0 {
            let scale = (0..=l).fold(T::zero(), |s, k| s + a[i * n + k].abs());
            if scale == T::zero() {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] = a[i * n + k] / scale;
                    h = h + a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h = h - f * g;
                a[i * n + l] = f - g;
                let mut f_acc = T::zero();
                for j in 0..=l {
                    let mut g = T::zero();
                    for k in 0..=j {
                        g = g + a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g = g + a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f_acc = f_acc + e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    let row = j * n;
                    for k in 0..=j {
                        a[row + k] = a[row + k] - (f * e[k] + g * a[i * n + k]);
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    for (i, di) in d.iter_mut().enumerate() {
        *di = a[i * n + i];
    }
    (d, e)
}

fn tridiagonal_ql<T: Real>(d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    if n > 0 {
        e[n - 1] = T::zero();
    }
    let eps = T::epsilon();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (T::lit(2.0) * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + T::lit(2.0) * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
}

/// Solves the real system `A x = b` (row-major `A`, `n x n`) by Gaussian
/// elimination with partial pivoting. Returns `None` for a singular matrix.
pub fn solve_real<T: Real>(n: usize, a: &[T], b: &[T]) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let (piv, val) = (col..n)
            .map(|r| (r, m[r * n + col].abs()))
            .fold((col, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if val == T::zero() || !val.is_finite() {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        let inv = T::one() / m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] * inv;
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                m[r * n + k] = m[r * n + k] - f * m[col * n + k];
            }
            x[r] = x[r] - f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in (col + 1)..n {
            s = s - m[col * n + k] * x[k];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}

/// Eigenvalues of a complex upper Hessenberg matrix (row-major, `n x n`)
/// by single-shift QR with Givens rotations and Wilkinson shifts.
pub fn hessenberg_eigenvalues<T: Real>(n: usize, h: &mut [Cx<T>]) -> Option<Vec<Cx<T>>> {
    let mut out = vec![czero::<T>(); n];
    if n == 0 {
        return Some(out);
    }
    let idx = |r: usize, c: usize| r * n + c;
    let eps = T::epsilon();
    let mut hi = n - 1;
    let mut iter = 0usize;
    let budget = 60 * n;
    loop {
        if hi == 0 {
            out[0] = h[idx(0, 0)];
            break;
        }
        let mut lo = hi;
        while lo > 0 {
            let sub = h[idx(lo, lo - 1)].norm();
            let diag = h[idx(lo, lo)].norm() + h[idx(lo - 1, lo - 1)].norm();
            if sub <= eps * diag || sub < T::min_positive_value() {
                h[idx(lo, lo - 1)] = czero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            out[hi] = h[idx(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > budget {
            return None;
        }
        let a = h[idx(hi - 1, hi - 1)];
        let b = h[idx(hi - 1, hi)];
        let c = h[idx(hi, hi - 1)];
        let d = h[idx(hi, hi)];
        let mut mu = if iter % 11 == 10 {
            // exceptional shift
            d + Complex::new(h[idx(hi, hi - 1)].norm() * T::lit(1.5), T::zero())
        } else {
            let tr_half = (a + d) * T::lit(0.5);
            let det = a * d - b * c;
            let disc = (tr_half * tr_half - det).sqrt();
            let l1 = tr_half + disc;
            let l2 = tr_half - disc;
            if (l1 - d).norm() < (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };
        if !mu.re.is_finite() || !mu.im.is_finite() {
            mu = d;
        }
        for k in lo..=hi {
            h[idx(k, k)] = h[idx(k, k)] - mu;
        }
        let mut rots: Vec<(T, Cx<T>)> = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let x = h[idx(k, k)];
            let y = h[idx(k + 1, k)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (cs, sn) = if r == T::zero() {
                (T::one(), czero())
            } else if x.norm() == T::zero() {
                (T::zero(), Complex::new(T::one(), T::zero()))
            } else {
                let xn = x.norm();
                (xn / r, (x / xn) * y.conj() / r)
            };
            for j in k..=hi {
                let u = h[idx(k, j)];
                let w = h[idx(k + 1, j)];
                h[idx(k, j)] = u * cs + sn * w;
                h[idx(k + 1, j)] = -sn.conj() * u + w * cs;
            }
            rots.push((cs, sn));
        }
        for (off, &(cs, sn)) in rots.iter().enumerate() {
            let k = lo + off;
            let top = (k + 2).min(hi);
            for i in lo..=top {
                let u = h[idx(i, k)];
                let w = h[idx(i, k + 1)];
                h[idx(i, k)] = u * cs + w * sn.conj();
                h[idx(i, k + 1)] = -u * sn + w * cs;
            }
        }
        for k in lo..=hi {
            h[idx(k, k)] = h[idx(k, k)] + mu;
        }
    }
    Some(out)
}
