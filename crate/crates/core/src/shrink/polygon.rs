//! The invariant n-gon spanned by the p-orbit.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{Certificate, ShrinkKind};
use crate::cycles::{admissibility, orbit_under, Admissibility};
use crate::error::{Error, Result};
use crate::smallmat::{dot, norm2, sub_vec, Matrix};
use crate::symseq::Symbol;

/// One S-cycle `w(τ) = τ p + (1 − τ) p_d` and its check.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCycle {
    pub tau: f64,
    pub points: Vec<Vec<f64>>,
    pub wrap_residual: f64,
    /// largest distance of `w_i(τ)` from `τ p_i + (1 − τ) p_{i+d}`
    pub edge_residual: f64,
    pub admissibility: Admissibility,
}

/// Closed-form vertices on the centre subspace of `A_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminatingConstruction {
    /// real and imaginary parts of the normalised eigenvector
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// `x_i = [y z] Dⁱ [α β]ᵀ + x*`
    pub vertices: Vec<Vec<f64>>,
    /// largest distance between `x_i` and the solved `p_i`
    pub max_vertex_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    /// `p_{jd}` for `j = 0, …, n−1`; consecutive vertices share an edge
    pub vertices: Vec<Vec<f64>>,
    pub sampled_cycles: Vec<SampledCycle>,
    /// square root of the variance of the vertices outside their best-fit
    /// plane, relative to the largest principal spread
    pub planarity_defect: f64,
    /// smallest distance between two non-adjacent edges
    pub min_edge_separation: f64,
    pub construction: Option<TerminatingConstruction>,
}

impl Polygon {
    pub fn self_intersection_free(&self) -> bool {
        let scale = self.vertices.iter().map(|v| norm2(v)).fold(1.0, f64::max);
        self.min_edge_separation > 1e-9 * scale
    }

    pub fn max_wrap_residual(&self) -> f64 {
        self.sampled_cycles
            .iter()
            .map(|c| c.wrap_residual)
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        use crate::format::g17;
        let dim = self.vertices.first().map_or(0, Vec::len);
        let cols: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
        let mut out = format!("vertex,{}\n", cols.join(","));
        for (j, v) in self.vertices.iter().enumerate() {
            let xs: Vec<String> = v.iter().map(|x| g17(*x)).collect();
            out += &format!("{j},{}\n", xs.join(","));
        }
        out
    }
}

fn lerp(tau: f64, a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| tau * x + (1.0 - tau) * y)
        .collect()
}

/// Builds the polygon and samples `grid` cycles with `τ = k/(grid−1)`.
pub fn polygon(cert: &Certificate, grid: usize) -> Result<Polygon> {
    let params = &cert.params;
    let n = params.n as usize;
    let d = params.d as usize;
    let pts = &cert.p_orbit.points;
    let p = &pts[0];
    let p_d = &pts[d % n];
    let scale = norm2(p).max(norm2(p_d)).max(1.0);
    if norm2(&sub_vec(p, p_d)) <= 1e-9 * scale {
        return Err(Error::DegenerateCertificate("p and p_d coincide".into()));
    }
    let s = params.sequence();
    let band = 1e-8;
    let grid = grid.max(2);
    let sampled_cycles = (0..grid)
        .map(|k| {
            let tau = k as f64 / (grid - 1) as f64;
            let w = lerp(tau, p, p_d);
            let mut orbit = orbit_under(&cert.map, cert.mu, &s, &w);
            let wrap_residual = norm2(&sub_vec(&orbit[n], &w)) / norm2(&w).max(1.0);
            orbit.truncate(n);
            let edge_residual = (0..n)
                .map(|i| norm2(&sub_vec(&orbit[i], &lerp(tau, &pts[i], &pts[(i + d) % n]))))
                .fold(0.0, f64::max);
            let admissibility = admissibility(&orbit, &s, band);
            SampledCycle {
                tau,
                points: orbit,
                wrap_residual,
                edge_residual,
                admissibility,
            }
        })
        .collect();
    let vertices: Vec<Vec<f64>> = (0..n).map(|j| pts[(j * d) % n].clone()).collect();
    let construction = match cert.kind {
        ShrinkKind::Terminating => Some(terminating_construction(cert)?),
        ShrinkKind::NonTerminating => None,
    };
    Ok(Polygon {
        planarity_defect: planarity_defect(&vertices),
        min_edge_separation: min_edge_separation(&vertices),
        vertices,
        sampled_cycles,
        construction,
    })
}

fn planarity_defect(vertices: &[Vec<f64>]) -> f64 {
    let dim = vertices[0].len();
    if dim <= 2 {
        return 0.0;
    }
    let k = vertices.len() as f64;
    let mean: Vec<f64> = (0..dim)
        .map(|c| vertices.iter().map(|v| v[c]).sum::<f64>() / k)
        .collect();
    let mut cov = Matrix::zeros(dim);
    for v in vertices {
        let dv = sub_vec(v, &mean);
        for i in 0..dim {
            for j in 0..dim {
                cov[(i, j)] += dv[i] * dv[j] / k;
            }
        }
    }
    let ev = cov.symmetric_eigenvalues();
    let rest: f64 = ev[2..].iter().map(|e| e.max(0.0)).sum();
    if ev[0] <= 0.0 {
        return 0.0;
    }
    (rest / ev[0]).sqrt()
}

/// Distance between segments `[a, b]` and `[c, e]` in any dimension, by
/// minimising over a fine parametrisation refined with projections.
fn segment_distance(a: &[f64], b: &[f64], c: &[f64], e: &[f64]) -> f64 {
    let u = sub_vec(b, a);
    let v = sub_vec(e, c);
    let w = sub_vec(a, c);
    let (uu, uv, vv) = (dot(&u, &u), dot(&u, &v), dot(&v, &v));
    let (uw, vw) = (dot(&u, &w), dot(&v, &w));
    let den = uu * vv - uv * uv;
    let mut cands: Vec<(f64, f64)> = Vec::new();
    if den > 1e-14 * uu * vv {
        let s = ((uv * vw - vv * uw) / den).clamp(0.0, 1.0);
        let t = ((uu * vw - uv * uw) / den).clamp(0.0, 1.0);
        cands.push((s, t));
    }
    // endpoints against the other segment
    let proj = |x: f64, len2: f64| {
        if len2 > 0.0 {
            (x / len2).clamp(0.0, 1.0)
        } else {
            0.0
        }
    };
    cands.push((0.0, proj(vw, vv)));
    cands.push((1.0, proj(vw + uv, vv)));
    cands.push((proj(-uw, uu), 0.0));
    cands.push((proj(uv - uw, uu), 1.0));
    cands
        .into_iter()
        .map(|(s, t)| {
            let gap: Vec<f64> = (0..a.len()).map(|i| w[i] + s * u[i] - t * v[i]).collect();
            norm2(&gap)
        })
        .fold(f64::INFINITY, f64::min)
}

fn min_edge_separation(vertices: &[Vec<f64>]) -> f64 {
    let n = vertices.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let dist = segment_distance(
                &vertices[i],
                &vertices[(i + 1) % n],
                &vertices[j],
                &vertices[(j + 1) % n],
            );
            best = best.min(dist);
        }
    }
    best
}

/// Null vector of `A − λI` for a simple eigenvalue `λ`, by complex Gaussian
/// elimination with full pivoting.
fn complex_eigenvector(a: &Matrix, lambda: Complex64) -> Vec<Complex64> {
    let n = a.dim();
    let mut m: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    Complex64::new(a[(i, j)], 0.0)
                        - if i == j {
                            lambda
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                })
                .collect()
        })
        .collect();
    let mut cols: Vec<usize> = (0..n).collect();
    for k in 0..n - 1 {
        let (mut pi, mut pj, mut best) = (k, k, -1.0);
        for (i, row) in m.iter().enumerate().skip(k) {
            for (j, z) in row.iter().enumerate().skip(k) {
                if z.norm() > best {
                    best = z.norm();
                    pi = i;
                    pj = j;
                }
            }
        }
        m.swap(k, pi);
        for row in m.iter_mut() {
            row.swap(k, pj);
        }
        cols.swap(k, pj);
        let piv = m[k][k];
        for i in k + 1..n {
            let f = m[i][k] / piv;
            for j in k..n {
                let t = m[k][j];
                m[i][j] -= f * t;
            }
        }
    }
    // last pivot is (numerically) zero; set the free variable to one
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    x[n - 1] = Complex64::new(1.0, 0.0);
    for i in (0..n - 1).rev() {
        let s: Complex64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = -s / m[i][i];
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for (k, &c) in cols.iter().enumerate() {
        v[c] = x[k];
    }
    v
}

fn rot(angle: f64, ab: [f64; 2]) -> [f64; 2] {
    // D^j acting on a column vector, D = [[c, s], [-s, c]]
    let (s, c) = angle.sin_cos();
    [c * ab[0] + s * ab[1], -s * ab[0] + c * ab[1]]
}

fn terminating_construction(cert: &Certificate) -> Result<TerminatingConstruction> {
    let params = &cert.params;
    let (m, n) = (params.m as f64, params.n as f64);
    let theta = 2.0 * PI * m / n;
    let a_l = cert.map.a_l();
    let mut v = complex_eigenvector(a_l, Complex64::from_polar(1.0, theta));
    if v[0].norm() == 0.0 {
        return Err(Error::DegenerateCertificate(
            "eigenvector has zero first component".into(),
        ));
    }
    let phase = v[0] / v[0].norm();
    let scale = v[0].norm();
    for c in v.iter_mut() {
        *c /= phase * scale;
    }
    let y: Vec<f64> = v.iter().map(|c| c.re).collect();
    let z: Vec<f64> = v.iter().map(|c| c.im).collect();
    let fp = cert
        .map
        .fixed_point(cert.mu, Symbol::L, &crate::Tolerances::default())?;
    let (c1, s1) = ((2.0 * PI / n).cos(), (2.0 * PI / n).sin());
    let x = Matrix::from_rows(&[
        &[y[0], z[0]],
        &[y[0] * c1 + z[0] * s1, -y[0] * s1 + z[0] * c1],
    ])?;
    let ab = x.solve(&[-fp.s_star, -fp.s_star], 0.0)?;
    let vertices: Vec<Vec<f64>> = (0..params.n)
        .map(|i| {
            let r = rot(theta * i as f64, [ab[0], ab[1]]);
            (0..y.len())
                .map(|k| y[k] * r[0] + z[k] * r[1] + fp.point[k])
                .collect()
        })
        .collect();
    let max_vertex_gap = vertices
        .iter()
        .zip(&cert.p_orbit.points)
        .map(|(a, b)| norm2(&sub_vec(a, b)))
        .fold(0.0, f64::max);
    Ok(TerminatingConstruction {
        y,
        z,
        alpha: ab[0],
        beta: ab[1],
        vertices,
        max_vertex_gap,
    })
}

fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Largest `|g(θ) − θ − 2πm/n|` (mod 2π) over `grid` equally spaced
/// angles, where `g = z⁻¹ ∘ f ∘ z` and `z(θ) = w_{jd}(τ)` with
/// `j = ⌊nθ/2π⌋`, `τ = nθ/2π − j`.
pub fn rigid_rotation_check(cert: &Certificate, grid: usize) -> f64 {
    let params = &cert.params;
    let n = params.n as usize;
    let d = params.d as usize;
    let pts = &cert.p_orbit.points;
    let nf = n as f64;
    let edge = |j: usize| (&pts[(j * d) % n], &pts[((j + 1) * d) % n]);
    let z = |theta: f64| {
        let mut u = nf * theta / (2.0 * PI);
        // sector boundaries are where z jumps; don't let rounding pick the wrong side
        if (u - u.round()).abs() < 1e-12 {
            u = u.round();
        }
        let j = (u.floor() as usize).min(n - 1);
        let tau = u - j as f64;
        let (a, b) = edge(j);
        lerp(tau, a, b)
    };
    let z_inv = |x: &[f64]| {
        let mut best = (f64::INFINITY, 0usize, 0.0);
        for j in 0..n {
            // tau = 1 at p_{jd}, tau = 0 at p_{(j+1)d}
            let (p1, p0) = edge(j);
            let dir = sub_vec(p1, p0);
            let tau = (dot(&sub_vec(x, p0), &dir) / dot(&dir, &dir)).clamp(0.0, 1.0);
            let dist = norm2(&sub_vec(x, &lerp(tau, p1, p0)));
            if dist < best.0 {
                best = (dist, j, tau);
            }
        }
        let (_, mut j, mut tau) = best;
        if tau >= 1.0 - 1e-12 {
            j = (j + n - 1) % n;
            tau = 0.0;
        }
        2.0 * PI * (j as f64 + tau) / nf
    };
    let shift = 2.0 * PI * params.m as f64 / nf;
    (0..grid)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / grid as f64;
            let image = cert.map.evaluate(cert.mu, &z(theta));
            wrap_angle(z_inv(&image) - theta - shift).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::super::tests::{pentagon_map, rotation_map};
    use super::super::{check_nonterminating, check_terminating};
    use super::*;
    use crate::Tolerances;

    #[test]
    fn pentagon_polygon() {
        let cert = check_nonterminating(&pentagon_map(), 1.0, 2, 2, 5, &Tolerances::default())
            .unwrap()
            .unwrap();
        let poly = polygon(&cert, 64).unwrap();
        assert!(poly.planarity_defect > 1e-3);
        assert!(poly.self_intersection_free());
        assert!(poly.max_wrap_residual() < 1e-12);
        let first = &poly.sampled_cycles[0];
        let last = poly.sampled_cycles.last().unwrap();
        assert_eq!(first.points[0], cert.p_orbit.points[cert.params.d as usize]);
        assert_eq!(last.points[0], cert.p_orbit.points[0]);
        assert!(poly
            .sampled_cycles
            .iter()
            .all(|c| c.admissibility.is_admissible()));
        assert!(rigid_rotation_check(&cert, 100) < 1e-9);
    }

    #[test]
    fn terminating_polygon_is_planar() {
        let tol = Tolerances::default();
        let cert = check_terminating(&rotation_map(2, 5), -1.0, 2, 5, &tol)
            .unwrap()
            .unwrap();
        let poly = polygon(&cert, 16).unwrap();
        assert!(poly.planarity_defect <= 1e-12);
        let c = poly.construction.unwrap();
        assert!(c.max_vertex_gap < 1e-12, "{}", c.max_vertex_gap);
        assert!(rigid_rotation_check(&cert, 100) < 1e-9);
    }
}
