//! Dense square matrices for `1 ≤ N ≤ 8`.
//!
//! Every singular/nonsingular decision in the crate goes through
//! [`is_singular_det`], so the classification of the n-cycle solution system
//! is consistent everywhere.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 8;

/// `|det| ≤ tol · max(1, ‖M‖∞^N)`.
pub fn is_singular_det(det: f64, norm_inf: f64, dim: usize, tol: f64) -> bool {
    det.abs() <= tol * norm_inf.powi(dim as i32).max(1.0)
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Matrix {
    fn check_dim(dim: usize) -> Result<()> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Dimension(format!("N = {dim} outside 1..={MAX_DIM}")));
        }
        Ok(())
    }

    pub fn zeros(dim: usize) -> Matrix {
        assert!(
            (1..=MAX_DIM).contains(&dim),
            "N = {dim} outside 1..={MAX_DIM}"
        );
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Matrix {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Matrix> {
        Self::check_dim(dim)?;
        if data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Matrix { dim, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Matrix> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("rows must all have length N".into()));
        }
        Self::from_row_major(dim, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        for i in 0..self.dim {
            self[(i, j)] = v[i];
        }
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.dim;
        let mut t = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.mul_vec_into(v, &mut out);
        out
    }

    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = dot(self.row(i), v);
        }
    }

    /// `vᵀ M`.
    pub fn vec_mul(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| v[i] * self[(i, j)]).sum())
            .collect()
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    fn lu(&self) -> Lu {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x * n + k].abs().total_cmp(&a[y * n + k].abs()))
                .unwrap();
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[k * n + k];
            if pivot == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        Lu { n, a, perm, sign }
    }

    pub fn det(&self) -> f64 {
        self.lu().det()
    }

    pub fn is_singular(&self, tol: f64) -> bool {
        is_singular_det(self.det(), self.norm_inf(), self.dim, tol)
    }

    pub fn solve(&self, v: &[f64], tol: f64) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::Dimension("right-hand side length".into()));
        }
        let lu = self.lu();
        let det = lu.det();
        if is_singular_det(det, self.norm_inf(), self.dim, tol) {
            return Err(Error::SingularMatrix { det });
        }
        Ok(lu.solve(v))
    }

    pub fn inverse(&self, tol: f64) -> Result<Matrix> {
        let lu = self.lu();
        let det = lu.det();
        if is_singular_det(det, self.norm_inf(), self.dim, tol) {
            return Err(Error::SingularMatrix { det });
        }
        let n = self.dim;
        let mut inv = Matrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            inv.set_col(j, &lu.solve(&e));
        }
        Ok(inv)
    }

    fn minor(&self, row: usize, col: usize) -> Option<Matrix> {
        let n = self.dim;
        if n == 1 {
            return None;
        }
        let data = (0..n)
            .filter(|&i| i != row)
            .flat_map(|i| (0..n).filter(move |&j| j != col).map(move |j| (i, j)))
            .map(|(i, j)| self[(i, j)])
            .collect();
        Some(Matrix { dim: n - 1, data })
    }

    fn adjugate_cofactor(&self) -> Matrix {
        let n = self.dim;
        let mut adj = Matrix::zeros(n);
        if n == 1 {
            adj[(0, 0)] = 1.0;
            return adj;
        }
        for i in 0..n {
            for j in 0..n {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                adj[(j, i)] = sign * self.minor(i, j).unwrap().det();
            }
        }
        adj
    }

    /// Transposed cofactor matrix; defined for singular matrices too.
    pub fn adjugate(&self) -> Matrix {
        if self.dim <= 4 {
            return self.adjugate_cofactor();
        }
        let lu = self.lu();
        let det = lu.det();
        // near-singular matrices fall back to cofactors so adj stays accurate
        if is_singular_det(det, self.norm_inf(), self.dim, 1e-6) {
            return self.adjugate_cofactor();
        }
        let n = self.dim;
        let mut adj = Matrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = det;
            adj.set_col(j, &lu.solve(&e));
        }
        adj
    }

    /// `‖M‖∞ ‖M⁻¹‖∞`; infinite when `M` is exactly singular.
    pub fn condition_estimate(&self) -> f64 {
        match self.inverse(0.0) {
            Ok(inv) => self.norm_inf() * inv.norm_inf(),
            Err(_) => f64::INFINITY,
        }
    }

    /// All eigenvalues with multiplicity. Real eigenvalues carry an exact
    /// zero imaginary part; complex ones come in conjugate pairs.
    pub fn eigenvalues(&self) -> Result<Spectrum> {
        let n = self.dim;
        let values = match n {
            1 => vec![Complex64::new(self.data[0], 0.0)],
            2 => eig2(self[(0, 0)], self[(0, 1)], self[(1, 0)], self[(1, 1)]),
            _ => hessenberg_qr(self)?,
        };
        Ok(Spectrum { values })
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
    /// in decreasing order. Only the upper triangle is trusted.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let mut a = self.clone();
        for i in 0..n {
            for j in 0..i {
                a[(i, j)] = a[(j, i)];
            }
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off.sqrt() <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq.abs() <= f64::MIN_POSITIVE {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        ev
    }

    /// Householder QR with column pivoting.
    pub fn qr_pivoted(&self) -> PivotedQr {
        let n = self.dim;
        let mut r = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors = Vec::with_capacity(n);
        for k in 0..n {
            let norms: Vec<f64> = (k..n)
                .map(|j| (k..n).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>())
                .collect();
            let jmax = k
                + (0..norms.len())
                    .max_by(|&a, &b| norms[a].total_cmp(&norms[b]))
                    .unwrap();
            if jmax != k {
                for i in 0..n {
                    let tmp = r[(i, k)];
                    r[(i, k)] = r[(i, jmax)];
                    r[(i, jmax)] = tmp;
                }
                perm.swap(k, jmax);
            }
            let x: Vec<f64> = (k..n).map(|i| r[(i, k)]).collect();
            let xn = norm2(&x);
            if xn == 0.0 {
                reflectors.push(None);
                continue;
            }
            let alpha = if x[0] >= 0.0 { -xn } else { xn };
            let mut v = x;
            v[0] -= alpha;
            let vn = norm2(&v);
            if vn == 0.0 {
                reflectors.push(None);
                continue;
            }
            v.iter_mut().for_each(|e| *e /= vn);
            for j in k..n {
                let s: f64 = (k..n).map(|i| v[i - k] * r[(i, j)]).sum();
                for i in k..n {
                    r[(i, j)] -= 2.0 * v[i - k] * s;
                }
            }
            reflectors.push(Some(v));
        }
        PivotedQr {
            r,
            perm,
            reflectors,
        }
    }

    /// Orthonormal-free basis of the numerical null space.
    pub fn null_space(&self, tol: f64) -> Vec<Vec<f64>> {
        self.qr_pivoted().null_space(tol)
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        Matrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        Matrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

struct Lu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    fn det(&self) -> f64 {
        (0..self.n).fold(self.sign, |d, i| d * self.a[i * self.n + i])
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] -= self.a[i * n + j] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                y[i] -= self.a[i * n + j] * y[j];
            }
            y[i] /= self.a[i * n + i];
        }
        y
    }
}

/// Result of [`Matrix::qr_pivoted`]: `A P = Q R`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    pub r: Matrix,
    pub perm: Vec<usize>,
    reflectors: Vec<Option<Vec<f64>>>,
}

impl PivotedQr {
    /// Number of diagonal entries of `R` above `tol · |R₀₀|`.
    pub fn rank(&self, tol: f64) -> usize {
        let r00 = self.r[(0, 0)].abs();
        if r00 == 0.0 {
            return 0;
        }
        (0..self.r.dim())
            .take_while(|&k| self.r[(k, k)].abs() > tol * r00)
            .count()
    }

    pub fn apply_qt(&self, c: &[f64]) -> Vec<f64> {
        let n = self.r.dim();
        let mut y = c.to_vec();
        for (k, v) in self.reflectors.iter().enumerate() {
            if let Some(v) = v {
                let s: f64 = (k..n).map(|i| v[i - k] * y[i]).sum();
                for i in k..n {
                    y[i] -= 2.0 * v[i - k] * s;
                }
            }
        }
        y
    }

    fn back_substitute(&self, rank: usize, rhs: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; rank];
        for i in (0..rank).rev() {
            let s: f64 = (i + 1..rank).map(|j| self.r[(i, j)] * z[j]).sum();
            z[i] = (rhs[i] - s) / self.r[(i, i)];
        }
        z
    }

    pub fn null_space(&self, tol: f64) -> Vec<Vec<f64>> {
        let n = self.r.dim();
        let rank = self.rank(tol);
        (rank..n)
            .map(|free| {
                let rhs: Vec<f64> = (0..rank).map(|i| -self.r[(i, free)]).collect();
                let z = self.back_substitute(rank, &rhs);
                let mut v = vec![0.0; n];
                for (i, zi) in z.iter().enumerate() {
                    v[self.perm[i]] = *zi;
                }
                v[self.perm[free]] = 1.0;
                let vn = norm2(&v);
                v.iter_mut().for_each(|e| *e /= vn);
                v
            })
            .collect()
    }

    /// Basic least-squares solution and the residual norm `‖A x − c‖`.
    pub fn least_squares(&self, c: &[f64], tol: f64) -> (Vec<f64>, f64) {
        let n = self.r.dim();
        let rank = self.rank(tol);
        let y = self.apply_qt(c);
        let z = self.back_substitute(rank, &y);
        let mut x = vec![0.0; n];
        for (i, zi) in z.iter().enumerate() {
            x[self.perm[i]] = *zi;
        }
        let residual = norm2(&y[rank..]);
        (x, residual)
    }
}

/// Eigenvalues with multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<Complex64>,
}

impl Spectrum {
    pub fn product(&self) -> Complex64 {
        self.values.iter().product()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Number of real multipliers strictly greater than one.
    pub fn count_real_above_one(&self) -> usize {
        self.values
            .iter()
            .filter(|z| z.im == 0.0 && z.re > 1.0)
            .count()
    }

    pub fn min_distance_to(&self, target: Complex64) -> f64 {
        self.values
            .iter()
            .map(|z| (z - target).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_stable(&self) -> bool {
        self.spectral_radius() < 1.0
    }
}

fn eig2(a: f64, b: f64, c: f64, d: f64) -> Vec<Complex64> {
    let half_tr = 0.5 * (a + d);
    let det = a * d - b * c;
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // avoid cancellation in the smaller root
        let big = if half_tr >= 0.0 {
            half_tr + sq
        } else {
            half_tr - sq
        };
        let small = if big != 0.0 { det / big } else { half_tr - sq };
        vec![Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
    } else {
        let sq = (-disc).sqrt();
        vec![Complex64::new(half_tr, sq), Complex64::new(half_tr, -sq)]
    }
}

/// Reduction to upper Hessenberg form by stabilised elimination followed by
/// the Francis double-shift QR iteration.
fn hessenberg_qr(m: &Matrix) -> Result<Vec<Complex64>> {
    let n = m.dim();
    // 1-based working copy
    let mut a = vec![vec![0.0f64; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = m[(i, j)];
        }
    }

    for mm in 2..n {
        let mut x = 0.0f64;
        let mut i = mm;
        for j in mm..=n {
            if a[j][mm - 1].abs() > x.abs() {
                x = a[j][mm - 1];
                i = j;
            }
        }
        if i != mm {
            for j in (mm - 1)..=n {
                let t = a[i][j];
                a[i][j] = a[mm][j];
                a[mm][j] = t;
            }
            for row in a.iter_mut().skip(1) {
                row.swap(i, mm);
            }
        }
        if x != 0.0 {
            for i in (mm + 1)..=n {
                let mut y = a[i][mm - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][mm - 1] = y;
                    for j in mm..=n {
                        a[i][j] -= y * a[mm][j];
                    }
                    for j in 1..=n {
                        a[j][mm] += y * a[j][i];
                    }
                }
            }
        }
    }
    for i in 1..=n {
        for j in 1..i.saturating_sub(1) {
            a[i][j] = 0.0;
        }
    }

    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r, mut s, mut w, mut x, mut y, mut z);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
            } else {
                y = a[nn - 1][nn - 1];
                w = a[nn][nn - 1] * a[nn - 1][nn];
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + z.copysign(p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != 0.0 {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = 0.0;
                        wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn = nn.saturating_sub(2);
                } else {
                    if its == 60 {
                        return Err(Error::EigenNoConvergence);
                    }
                    if its == 10 || its == 20 || its == 40 {
                        t += x;
                        for i in 1..=nn {
                            a[i][i] -= x;
                        }
                        s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut mm = nn - 2;
                    loop {
                        z = a[mm][mm];
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / a[mm + 1][mm] + a[mm][mm + 1];
                        q = a[mm + 1][mm + 1] - z - r - s;
                        r = a[mm + 2][mm + 1];
                        s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if mm == l {
                            break;
                        }
                        let u = a[mm][mm - 1].abs() * (q.abs() + r.abs());
                        let v =
                            p.abs() * (a[mm - 1][mm - 1].abs() + z.abs() + a[mm + 1][mm + 1].abs());
                        if u + v == v {
                            break;
                        }
                        mm -= 1;
                    }
                    for i in (mm + 2)..=nn {
                        a[i][i - 2] = 0.0;
                        if i != mm + 2 {
                            a[i][i - 3] = 0.0;
                        }
                    }
                    let mut k = mm;
                    while k + 1 <= nn {
                        if k != mm {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = 0.0;
                            if k != nn - 1 {
                                r = a[k + 2][k - 1];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = (p * p + q * q + r * r).sqrt().copysign(p);
                        if s != 0.0 {
                            if k == mm {
                                if l != mm {
                                    a[k][k - 1] = -a[k][k - 1];
                                }
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = a[k][j] + q * a[k + 1][j];
                                if k != nn - 1 {
                                    p += r * a[k + 2][j];
                                    a[k + 2][j] -= p * z;
                                }
                                a[k + 1][j] -= p * y;
                                a[k][j] -= p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                p = x * a[i][k] + y * a[i][k + 1];
                                if k != nn - 1 {
                                    p += z * a[i][k + 2];
                                    a[i][k + 2] -= p * r;
                                }
                                a[i][k + 1] -= p * q;
                                a[i][k] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn == 0 || l + 1 >= nn {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}
