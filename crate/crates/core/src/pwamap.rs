//! Continuous piecewise-affine maps with one switching manifold `s = x₁ = 0`.

use std::fmt;

use crate::error::{Error, Result};
use crate::format::{join_shortest, parse_entries, parse_literal, parse_literal_list, shortest};
use crate::smallmat::{dot, is_singular_det, Matrix};
use crate::symseq::Symbol;
use crate::Tolerances;

/// `x ↦ μb + A_L x` for `s ≤ 0`, `x ↦ μb + A_R x` for `s ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PwaMap {
    a_l: Matrix,
    a_r: Matrix,
    b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub side: Symbol,
    pub point: Vec<f64>,
    /// first component of the solved point
    pub s_star: f64,
    /// `μ ρᵀb / det(I − A)`
    pub s_star_formula: f64,
    pub admissible: bool,
    pub det_i_minus_a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorderCollision {
    /// a single fixed point crosses the manifold
    Persistence,
    /// two fixed points collide and annihilate
    NonsmoothFold,
    /// `ρᵀb = 0` or a unit multiplier
    Degenerate,
}

impl fmt::Display for BorderCollision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BorderCollision::Persistence => "persistence",
            BorderCollision::NonsmoothFold => "nonsmooth-fold",
            BorderCollision::Degenerate => "degenerate",
        };
        f.write_str(s)
    }
}

impl PwaMap {
    /// Rejects pairs whose columns `2..N` are not exactly equal.
    pub fn new(a_l: Matrix, a_r: Matrix, b: Vec<f64>) -> Result<PwaMap> {
        let n = a_l.dim();
        if a_r.dim() != n || b.len() != n {
            return Err(Error::Dimension(format!(
                "A_L is {n}x{n}, A_R is {0}x{0}, b has length {1}",
                a_r.dim(),
                b.len()
            )));
        }
        let finite = |m: &Matrix| m.as_slice().iter().all(|x| x.is_finite());
        if !finite(&a_l) || !finite(&a_r) || !b.iter().all(|x| x.is_finite()) {
            return Err(Error::Dimension("non-finite entry".into()));
        }
        for i in 0..n {
            for j in 1..n {
                if a_l[(i, j)] != a_r[(i, j)] {
                    return Err(Error::ContinuityViolated(format!(
                        "A_L[{i}][{j}] = {} but A_R[{i}][{j}] = {}",
                        a_l[(i, j)],
                        a_r[(i, j)]
                    )));
                }
            }
        }
        Ok(PwaMap { a_l, a_r, b })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn a_l(&self) -> &Matrix {
        &self.a_l
    }

    pub fn a_r(&self) -> &Matrix {
        &self.a_r
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn matrix(&self, side: Symbol) -> &Matrix {
        match side {
            Symbol::L => &self.a_l,
            Symbol::R => &self.a_r,
        }
    }

    pub fn evaluate(&self, mu: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.evaluate_into(mu, x, &mut out);
        out
    }

    pub fn evaluate_into(&self, mu: f64, x: &[f64], out: &mut [f64]) {
        let side = if x[0] < 0.0 { Symbol::L } else { Symbol::R };
        self.apply_branch_into(mu, side, x, out);
    }

    pub fn apply_branch(&self, mu: f64, side: Symbol, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_branch_into(mu, side, x, &mut out);
        out
    }

    pub fn apply_branch_into(&self, mu: f64, side: Symbol, x: &[f64], out: &mut [f64]) {
        let a = self.matrix(side);
        for (i, o) in out.iter_mut().enumerate() {
            *o = mu * self.b[i] + dot(a.row(i), x);
        }
    }

    /// `ρᵀ = e₁ᵀ adj(I − A_L)`, checked against the `A_R` computation.
    pub fn rho(&self) -> Result<Vec<f64>> {
        let id = Matrix::identity(self.dim());
        let from_l = (&id - &self.a_l).adjugate().row(0).to_vec();
        let from_r = (&id - &self.a_r).adjugate().row(0).to_vec();
        let scale = from_l
            .iter()
            .chain(&from_r)
            .fold(1.0f64, |a, x| a.max(x.abs()));
        let gap = from_l
            .iter()
            .zip(&from_r)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        if gap > 1e-10 * scale {
            return Err(Error::ContinuityViolated(format!(
                "first rows of adj(I - A_L) and adj(I - A_R) differ by {gap:e}"
            )));
        }
        Ok(from_l)
    }

    pub fn fixed_point(&self, mu: f64, side: Symbol, tol: &Tolerances) -> Result<FixedPointReport> {
        let i_minus_a = &Matrix::identity(self.dim()) - self.matrix(side);
        let det = i_minus_a.det();
        if is_singular_det(det, i_minus_a.norm_inf(), self.dim(), tol.sing) {
            return Err(Error::UnitMultiplier {
                side: side.as_char(),
                det,
            });
        }
        let rhs: Vec<f64> = self.b.iter().map(|v| mu * v).collect();
        let point = i_minus_a.solve(&rhs, tol.sing)?;
        let s_star = point[0];
        let s_star_formula = mu * dot(&self.rho()?, &self.b) / det;
        let admissible = side_admissible(side, s_star, &point, tol.band);
        Ok(FixedPointReport {
            side,
            point,
            s_star,
            s_star_formula,
            admissible,
            det_i_minus_a: det,
        })
    }

    /// Parity of the number of real multipliers greater than one.
    pub fn classify_border_collision(&self, tol: &Tolerances) -> Result<BorderCollision> {
        let n = self.dim();
        let id = Matrix::identity(n);
        for a in [&self.a_l, &self.a_r] {
            let m = &id - a;
            if m.is_singular(tol.sing) {
                return Ok(BorderCollision::Degenerate);
            }
        }
        let rho = self.rho()?;
        let rb = dot(&rho, &self.b);
        let scale = rho
            .iter()
            .chain(&self.b)
            .fold(1.0f64, |a, x| a.max(x.abs()));
        if rb.abs() <= tol.sing * scale {
            return Ok(BorderCollision::Degenerate);
        }
        let a_l = self.a_l.eigenvalues()?.count_real_above_one();
        let a_r = self.a_r.eigenvalues()?.count_real_above_one();
        Ok(if (a_l + a_r) % 2 == 0 {
            BorderCollision::Persistence
        } else {
            BorderCollision::NonsmoothFold
        })
    }

    /// `det(A_L) det(A_R) > 0`.
    pub fn is_homeomorphism(&self) -> bool {
        self.a_l.det() * self.a_r.det() > 0.0
    }

    /// Reads the `key = value` map format; returns the map and the optional
    /// `mu` entry.
    pub fn from_config(text: &str) -> Result<(PwaMap, Option<f64>)> {
        let entries = parse_entries(text)?;
        let find = |k: &str| entries.iter().find(|e| e.key == k);
        let missing = |k: &str| Error::Parse {
            line: 0,
            col: 0,
            msg: format!("missing key `{k}`"),
        };
        for e in &entries {
            if !["N", "A_L", "A_R", "b", "mu"].contains(&e.key.as_str()) {
                return Err(Error::Parse {
                    line: e.line,
                    col: 1,
                    msg: format!("unknown key `{}`", e.key),
                });
            }
        }
        let n_entry = find("N").ok_or_else(|| missing("N"))?;
        let n: usize = n_entry.value.parse().map_err(|_| Error::Parse {
            line: n_entry.line,
            col: n_entry.col,
            msg: "N must be a positive integer".into(),
        })?;
        let read = |key: &str, len: usize| -> Result<Vec<f64>> {
            let e = find(key).ok_or_else(|| missing(key))?;
            let v = parse_literal_list(e)?;
            if v.len() != len {
                return Err(Error::Parse {
                    line: e.line,
                    col: e.col,
                    msg: format!("`{key}` needs {len} entries, found {}", v.len()),
                });
            }
            Ok(v)
        };
        let a_l = Matrix::from_row_major(n, read("A_L", n * n)?)?;
        let a_r = Matrix::from_row_major(n, read("A_R", n * n)?)?;
        let b = read("b", n)?;
        let mu = match find("mu") {
            None => None,
            Some(e) => Some(parse_literal(&e.value).ok_or_else(|| Error::Parse {
                line: e.line,
                col: e.col,
                msg: "mu must be a number".into(),
            })?),
        };
        Ok((PwaMap::new(a_l, a_r, b)?, mu))
    }

    /// Inverse of [`PwaMap::from_config`]; every value round-trips exactly.
    pub fn to_config(&self, mu: Option<f64>) -> String {
        let mut s = format!("N = {}\n", self.dim());
        s += &format!("A_L = {}\n", join_shortest(self.a_l.as_slice()));
        s += &format!("A_R = {}\n", join_shortest(self.a_r.as_slice()));
        s += &format!("b = {}\n", join_shortest(&self.b));
        if let Some(mu) = mu {
            s += &format!("mu = {}\n", shortest(mu));
        }
        s
    }
}

/// Whether a point with first component `s` may follow branch `side`,
/// treating `|s| ≤ band · max(1, ‖x‖)` as on the manifold.
pub fn side_admissible(side: Symbol, s: f64, x: &[f64], band: f64) -> bool {
    if on_manifold(s, x, band) {
        return true;
    }
    match side {
        Symbol::L => s < 0.0,
        Symbol::R => s > 0.0,
    }
}

pub fn on_manifold(s: f64, x: &[f64], band: f64) -> bool {
    let norm = crate::smallmat::norm2(x);
    s.abs() <= band * norm.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(a: [[f64; 2]; 2]) -> Matrix {
        Matrix::from_rows(&[&a[0], &a[1]]).unwrap()
    }

    #[test]
    fn continuity_is_exact() {
        let a_l = m2([[0.5, 1.0], [-0.3, 0.0]]);
        let mut a_r = m2([[-2.0, 1.0], [0.7, 0.0]]);
        assert!(PwaMap::new(a_l.clone(), a_r.clone(), vec![1.0, 0.0]).is_ok());
        a_r[(0, 1)] = 1.0 + f64::EPSILON;
        assert!(matches!(
            PwaMap::new(a_l, a_r, vec![1.0, 0.0]),
            Err(Error::ContinuityViolated(_))
        ));
    }

    #[test]
    fn zero_matrices() {
        let z = Matrix::zeros(2);
        let map = PwaMap::new(z.clone(), z, vec![1.0, 0.0]).unwrap();
        assert_eq!(map.evaluate(2.0, &[-3.0, 4.0]), vec![2.0, 0.0]);
        assert_eq!(map.rho().unwrap(), vec![1.0, 0.0]);
        let tol = Tolerances::default();
        let fp = map.fixed_point(1.0, Symbol::R, &tol).unwrap();
        assert_eq!(fp.point, vec![1.0, 0.0]);
        assert!(fp.admissible);
        assert!(!map.fixed_point(1.0, Symbol::L, &tol).unwrap().admissible);
        let fp0 = map.fixed_point(0.0, Symbol::L, &tol).unwrap();
        assert_eq!(fp0.point, vec![0.0, 0.0]);
        assert!(fp0.admissible);
        assert_eq!(
            map.classify_border_collision(&tol).unwrap(),
            BorderCollision::Persistence
        );
    }

    #[test]
    fn rho_two_dimensional() {
        let (a, b, c, d) = (0.3, -1.2, 0.8, 0.45);
        let map = PwaMap::new(
            m2([[a, b], [c, d]]),
            m2([[-0.9, b], [2.0, d]]),
            vec![1.0, 0.0],
        )
        .unwrap();
        let rho = map.rho().unwrap();
        assert!((rho[0] - (1.0 - d)).abs() < 1e-15);
        assert!((rho[1] - b).abs() < 1e-15);
    }

    #[test]
    fn fold_from_single_unstable_multiplier() {
        let map = PwaMap::new(
            m2([[2.0, 0.0], [0.0, 0.0]]),
            m2([[0.0, 0.0], [0.0, 0.0]]),
            vec![1.0, 0.0],
        )
        .unwrap();
        let tol = Tolerances::default();
        assert_eq!(
            map.classify_border_collision(&tol).unwrap(),
            BorderCollision::NonsmoothFold
        );
        // both fixed points admissible for the same sign of μ
        let l = map.fixed_point(-1.0, Symbol::L, &tol).unwrap();
        let r = map.fixed_point(-1.0, Symbol::R, &tol).unwrap();
        assert!(!l.admissible && !r.admissible);
        let l = map.fixed_point(1.0, Symbol::L, &tol).unwrap();
        let r = map.fixed_point(1.0, Symbol::R, &tol).unwrap();
        assert!(l.admissible && r.admissible);
    }

    #[test]
    fn unit_multiplier_is_reported() {
        let map = PwaMap::new(
            m2([[1.0, 0.0], [0.0, 0.5]]),
            m2([[0.0, 0.0], [0.0, 0.5]]),
            vec![1.0, 0.0],
        )
        .unwrap();
        let tol = Tolerances::default();
        assert!(matches!(
            map.fixed_point(1.0, Symbol::L, &tol),
            Err(Error::UnitMultiplier { side: 'L', .. })
        ));
        assert_eq!(
            map.classify_border_collision(&tol).unwrap(),
            BorderCollision::Degenerate
        );
    }

    #[test]
    fn branches_agree_on_manifold() {
        let map = PwaMap::new(
            m2([[0.5, 1.0], [-0.3, 0.2]]),
            m2([[-2.0, 1.0], [0.7, 0.2]]),
            vec![1.0, -0.5],
        )
        .unwrap();
        let x = [0.0, 1.7];
        assert_eq!(
            map.apply_branch(0.3, Symbol::L, &x),
            map.apply_branch(0.3, Symbol::R, &x)
        );
        let y = [-1.0, 1.0];
        assert_eq!(map.evaluate(1.0, &y), map.apply_branch(1.0, Symbol::L, &y));
        assert_ne!(map.evaluate(1.0, &y), map.apply_branch(1.0, Symbol::R, &y));
    }

    #[test]
    fn config_round_trip() {
        let text = "N = 3\nA_L = 0, 1, 0, 1, 0, 1, 28/87, 0, 0\nA_R = -23/14, 1, 0, 0, 0, 1, 3/2, 0, 0\nb = 1, 0, 0\nmu = 1\n";
        let (map, mu) = PwaMap::from_config(text).unwrap();
        assert_eq!(mu, Some(1.0));
        assert_eq!(map.a_l()[(2, 0)], 28.0 / 87.0);
        assert_eq!(map.a_r()[(0, 0)], -23.0 / 14.0);
        let (again, mu2) = PwaMap::from_config(&map.to_config(mu)).unwrap();
        assert_eq!(again, map);
        assert_eq!(mu2, mu);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            PwaMap::from_config("N = 2\nA_L = 1, 2, 3, 4\nA_R = 1, 3, 3, 4\nb = 1, 0"),
            Err(Error::ContinuityViolated(_))
        ));
        assert!(matches!(
            PwaMap::from_config("N = 2\nA_L = 1, 2, 3\nA_R = 1, 2, 3, 4\nb = 1, 0"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(
            PwaMap::from_config("N = 2\nA_L = 1, 2, 3, 4\nA_R = 1, 2, 3, 4\nb = 1, 0\nzz = 3")
                .is_err()
        );
    }
}
