//! Small dense and banded kernels: tridiagonal LU with partial pivoting,
//! bordered solves by block elimination, and the implicit QL eigensolver
//! for symmetric tridiagonal matrices.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Pivots below this fraction of the largest row scale count as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-14;

/// General tridiagonal matrix. `sub[i]` sits at `(i+1, i)`, `sup[i]` at
/// `(i, i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            sub: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            sup: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i == j + 1 {
            self.sub[j]
        } else if j == i + 1 {
            self.sup[i]
        } else {
            0.0
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.sup[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.sup[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.sub[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    fn row_scale(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s = s.max(self.sub[i - 1].abs());
                }
                if i + 1 < n {
                    s = s.max(self.sup[i].abs());
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn factor(&self) -> Result<TridiagonalLu> {
        TridiagonalLu::new(self)
    }
}

/// LU factorization `PA = LU` of a tridiagonal matrix, stored in the
/// LAPACK `gttrf` layout (`du2` holds the second superdiagonal of `U`
/// created by row interchanges).
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
    pivot_ratio: f64,
}

impl TridiagonalLu {
    pub fn new(a: &Tridiagonal) -> Result<Self> {
        let n = a.dim();
        let mut dl = a.sub.clone();
        let mut d = a.diag.clone();
        let mut du = a.sup.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        if d.iter().chain(&dl).chain(&du).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tridiagonal matrix"));
        }
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        let scale = a.row_scale();
        let min_pivot = d.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let pivot_ratio = if scale > 0.0 { min_pivot / scale } else { 0.0 };
        if pivot_ratio < SINGULAR_PIVOT_RATIO {
            return Err(Error::SingularJacobian { pivot_ratio });
        }
        Ok(Self {
            dl,
            d,
            du,
            du2,
            swapped,
            pivot_ratio,
        })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Smallest `|U_ii|` relative to the largest row scale of `A`.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    /// Sign of `det A`.
    pub fn det_sign(&self) -> f64 {
        let mut sign = 1.0;
        for v in &self.d {
            if *v < 0.0 {
                sign = -sign;
            }
        }
        for s in &self.swapped {
            if *s {
                sign = -sign;
            }
        }
        sign
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut b = rhs.to_vec();
        self.solve_in_place(&mut b);
        b
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    /// Solves `Aᵀ x = rhs`.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut b = rhs.to_vec();
        b[0] /= self.d[0];
        if n > 1 {
            b[1] = (b[1] - self.du[0] * b[0]) / self.d[1];
        }
        for i in 2..n {
            b[i] = (b[i] - self.du[i - 1] * b[i - 1] - self.du2[i - 2] * b[i - 2]) / self.d[i];
        }
        for i in (0..n - 1).rev() {
            let temp = b[i] - self.dl[i] * b[i + 1];
            if self.swapped[i] {
                b[i] = b[i + 1];
                b[i + 1] = temp;
            } else {
                b[i] = temp;
            }
        }
        b
    }
}

/// Solution of the bordered system
///
/// ```text
/// [ A   b ] [x]   [f]
/// [ cᵀ  d ] [y] = [g]
/// ```
///
/// by mixed block elimination, which stays stable when `A` itself is
/// nearly singular as long as the bordered matrix is not. One step of
/// iterative refinement follows; if the residual is still large the dense
/// LU of the full matrix is used instead.
pub fn bordered_solve(
    a: &Tridiagonal,
    b: &[f64],
    c: &[f64],
    d: f64,
    f: &[f64],
    g: f64,
) -> Result<(Vec<f64>, f64)> {
    let lu = match a.factor() {
        Ok(lu) => lu,
        Err(Error::SingularJacobian { .. }) => return dense_bordered_solve(a, b, c, d, f, g),
        Err(e) => return Err(e),
    };
    let solver = BorderedLu::new(&lu, b, c, d);
    let (mut x, mut y) = solver.solve(f, g);

    let scale = bordered_scale(a, b, c, d, f, g);
    let (rf, rg) = bordered_residual(a, b, c, d, f, g, &x, y);
    let res = max_norm(&rf).max(rg.abs());
    if res > 1e-12 * scale {
        let (dx, dy) = solver.solve(&rf, rg);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        y += dy;
        let (rf, rg) = bordered_residual(a, b, c, d, f, g, &x, y);
        let res = max_norm(&rf).max(rg.abs());
        if !(res <= 1e-9 * scale) {
            return dense_bordered_solve(a, b, c, d, f, g);
        }
    }
    if x.iter().any(|v| !v.is_finite()) || !y.is_finite() {
        return dense_bordered_solve(a, b, c, d, f, g);
    }
    Ok((x, y))
}

struct BorderedLu<'a> {
    lu: &'a TridiagonalLu,
    b: &'a [f64],
    c: &'a [f64],
    d: f64,
    v: Vec<f64>,
    w: Vec<f64>,
    delta_star: f64,
    delta: f64,
}

impl<'a> BorderedLu<'a> {
    fn new(lu: &'a TridiagonalLu, b: &'a [f64], c: &'a [f64], d: f64) -> Self {
        let v = lu.solve_transpose(c);
        let w = lu.solve(b);
        let delta_star = d - dot(b, &v);
        let delta = d - dot(c, &w);
        Self {
            lu,
            b,
            c,
            d,
            v,
            w,
            delta_star,
            delta,
        }
    }

    fn solve(&self, f: &[f64], g: f64) -> (Vec<f64>, f64) {
        let y1 = (g - dot(&self.v, f)) / self.delta_star;
        let f1: Vec<f64> = f.iter().zip(self.b).map(|(fi, bi)| fi - bi * y1).collect();
        let g1 = g - self.d * y1;
        let mut x = self.lu.solve(&f1);
        let y2 = (g1 - dot(self.c, &x)) / self.delta;
        for (xi, wi) in x.iter_mut().zip(&self.w) {
            *xi -= wi * y2;
        }
        (x, y1 + y2)
    }
}

fn dense_bordered_solve(
    a: &Tridiagonal,
    b: &[f64],
    c: &[f64],
    d: f64,
    f: &[f64],
    g: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = a.dim();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in i.saturating_sub(1)..(i + 2).min(n) {
            m[(i, j)] = a.get(i, j);
        }
        m[(i, n)] = b[i];
        m[(n, i)] = c[i];
    }
    m[(n, n)] = d;
    let mut rhs = DVector::from_column_slice(f).push(g);
    let lu = m.lu();
    if !lu.solve_mut(&mut rhs) {
        return Err(Error::SingularJacobian { pivot_ratio: 0.0 });
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularJacobian { pivot_ratio: 0.0 });
    }
    let y = rhs[n];
    Ok((rhs.as_slice()[..n].to_vec(), y))
}

#[allow(clippy::too_many_arguments)]
fn bordered_residual(
    a: &Tridiagonal,
    b: &[f64],
    c: &[f64],
    d: f64,
    f: &[f64],
    g: f64,
    x: &[f64],
    y: f64,
) -> (Vec<f64>, f64) {
    let ax = a.matvec(x);
    let rf = (0..f.len()).map(|i| f[i] - ax[i] - b[i] * y).collect();
    let rg = g - dot(c, x) - d * y;
    (rf, rg)
}

fn bordered_scale(a: &Tridiagonal, b: &[f64], c: &[f64], d: f64, f: &[f64], g: f64) -> f64 {
    let s = a.row_scale().max(max_norm(b)).max(max_norm(c)).max(d.abs());
    s.max(1.0) * max_norm(f).max(g.abs()).max(f64::MIN_POSITIVE)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Eigen-decomposition of a symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector of `values[k]`, when requested.
    pub vectors: Option<Vec<Vec<f64>>>,
}

/// Implicit QL with Wilkinson shifts (the `tql2` scheme).
///
/// `diag` has length `n`, `off` length `n − 1`.
pub fn symmetric_tridiagonal_eigen(
    diag: &[f64],
    off: &[f64],
    want_vectors: bool,
) -> Result<TridiagonalEigen> {
    const MAX_SWEEPS: usize = 60;
    let n = diag.len();
    if n == 0 {
        return Ok(TridiagonalEigen {
            values: Vec::new(),
            vectors: want_vectors.then(Vec::new),
        });
    }
    let scale = diag.iter().chain(off).fold(0.0f64, |m, v| m.max(v.abs()));
    if !scale.is_finite() {
        return Err(Error::NonFinite("symmetric tridiagonal matrix"));
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    // Row-major: z[k * n + i] is component k of eigenvector i.
    let mut z = if want_vectors {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        z
    } else {
        Vec::new()
    };

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(Error::EigenNonConvergence { dim: n, scale });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        for k in 0..n {
                            let row = k * n;
                            let h = z[row + i + 1];
                            z[row + i + 1] = s * z[row + i] + c * h;
                            z[row + i] = c * z[row + i] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = want_vectors.then(|| {
        order
            .iter()
            .map(|&i| (0..n).map(|k| z[k * n + i]).collect())
            .collect()
    });
    Ok(TridiagonalEigen { values, vectors })
}

/// Number of eigenvalues strictly below `x` (Sturm sequence count).
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let scale = diag
        .iter()
        .chain(off)
        .fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
    let tiny = f64::EPSILON * scale;
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let coupling = if i == 0 {
            0.0
        } else {
            off[i - 1] * off[i - 1] / q
        };
        q = diag[i] - x - coupling;
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}
