//! Periodic orbits with a prescribed symbol sequence.
//!
//! For `S = S₀…S_{n−1}` the orbit satisfies `x_{i+1} = μb + A_{S_i} x_i`,
//! which reduces to `(I − M_S) x₀ = μ P_S b` with
//!
//! ```text
//! M_S = A_{S_{n−1}} ⋯ A_{S_0}
//! P_S = I + A_{S_{n−1}} + A_{S_{n−1}} A_{S_{n−2}} + … + A_{S_{n−1}} ⋯ A_{S_1}
//! ```

use std::fmt;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::format::g17;
use crate::pwamap::{on_manifold, PwaMap};
use crate::smallmat::{dot, is_singular_det, norm2, sub_vec, Matrix, Spectrum};
use crate::symseq::{Symbol, SymbolSequence};
use crate::Tolerances;

/// `M_S`, `P_S` and the suffix product `Q = A_{S_{n−1}} ⋯ A_{S_1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleMatrices {
    pub m: Matrix,
    pub p: Matrix,
    pub q: Matrix,
}

/// `P_S` never involves `S₀`, so flipping `S₀` leaves it bit-identical.
pub fn cycle_matrices(map: &PwaMap, s: &SymbolSequence) -> CycleMatrices {
    let n = map.dim();
    let mut q = Matrix::identity(n);
    let mut p = Matrix::identity(n);
    for k in (1..s.len()).rev() {
        q = &q * map.matrix(s.symbols()[k]);
        p = &p + &q;
    }
    let m = &q * map.matrix(s.symbols()[0]);
    CycleMatrices { m, p, q }
}

pub fn stability_matrix(map: &PwaMap, s: &SymbolSequence) -> Matrix {
    cycle_matrices(map, s).m
}

pub fn bc_matrix(map: &PwaMap, s: &SymbolSequence) -> Matrix {
    cycle_matrices(map, s).p
}

pub fn det_i_minus(m: &Matrix) -> f64 {
    (&Matrix::identity(m.dim()) - m).det()
}

/// Whether `det(I − M)` fires the global singularity predicate.
pub fn i_minus_singular(m: &Matrix, tol: f64) -> bool {
    let a = &Matrix::identity(m.dim()) - m;
    is_singular_det(a.det(), a.norm_inf(), a.dim(), tol)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Admissibility {
    Admissible,
    /// admissible, with these points on the switching manifold
    Boundary(Vec<usize>),
    /// every index whose sign contradicts the symbol
    Virtual(Vec<usize>),
}

impl Admissibility {
    /// Admissible or Boundary.
    pub fn is_admissible(&self) -> bool {
        !matches!(self, Admissibility::Virtual(_))
    }
}

impl fmt::Display for Admissibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[usize]| {
            v.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        match self {
            Admissibility::Admissible => f.write_str("admissible"),
            Admissibility::Boundary(v) => write!(f, "boundary({})", list(v)),
            Admissibility::Virtual(v) => write!(f, "virtual({})", list(v)),
        }
    }
}

/// Sign check of each `s_i = e₁ᵀx_i` against `S_i`; points within
/// `band · max(1, ‖x_i‖)` of the manifold may follow either branch.
pub fn admissibility(points: &[Vec<f64>], s: &SymbolSequence, band: f64) -> Admissibility {
    let mut boundary = Vec::new();
    let mut violations = Vec::new();
    for (i, x) in points.iter().take(s.len()).enumerate() {
        if on_manifold(x[0], x, band) {
            boundary.push(i);
            continue;
        }
        let ok = match s.symbols()[i] {
            Symbol::L => x[0] < 0.0,
            Symbol::R => x[0] > 0.0,
        };
        if !ok {
            violations.push(i);
        }
    }
    if !violations.is_empty() {
        Admissibility::Virtual(violations)
    } else if !boundary.is_empty() {
        Admissibility::Boundary(boundary)
    } else {
        Admissibility::Admissible
    }
}

/// Smallest `|s_i|` over points off the manifold; infinite if there are none.
pub fn admissibility_margin(points: &[Vec<f64>], band: f64) -> f64 {
    points
        .iter()
        .filter(|x| !on_manifold(x[0], x, band))
        .map(|x| x[0].abs())
        .fold(f64::INFINITY, f64::min)
}

/// `n + 1` points `x₀, …, x_n` following the branches of `S`.
pub fn orbit_under(map: &PwaMap, mu: f64, s: &SymbolSequence, x0: &[f64]) -> Vec<Vec<f64>> {
    let mut pts = Vec::with_capacity(s.len() + 1);
    pts.push(x0.to_vec());
    for &sym in s.symbols() {
        let next = map.apply_branch(mu, sym, pts.last().unwrap());
        pts.push(next);
    }
    pts
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleSolution {
    pub sequence: SymbolSequence,
    pub mu: f64,
    pub points: Vec<Vec<f64>>,
    pub s_values: Vec<f64>,
    pub admissibility: Admissibility,
    pub multipliers: Spectrum,
    pub det_i_minus_m: f64,
    pub det_p: f64,
    /// `‖x_n − x₀‖ / max(1, ‖x₀‖)` after forward iteration
    pub wrap_residual: f64,
}

impl CycleSolution {
    pub fn margin(&self, band: f64) -> f64 {
        admissibility_margin(&self.points, band)
    }

    pub fn is_stable(&self) -> bool {
        self.multipliers.spectral_radius() < 1.0
    }

    /// CSV with a `#` header block of diagnostics, then `index,s,x1..xN`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# sequence: {}", self.sequence);
        let _ = writeln!(out, "# mu: {}", g17(self.mu));
        let _ = writeln!(out, "# det_i_minus_m: {}", g17(self.det_i_minus_m));
        let _ = writeln!(out, "# det_p: {}", g17(self.det_p));
        let _ = writeln!(out, "# wrap_residual: {}", g17(self.wrap_residual));
        let _ = writeln!(out, "# admissibility: {}", self.admissibility);
        let mults: Vec<String> = self
            .multipliers
            .values
            .iter()
            .map(|z| format!("{}{:+}i", g17(z.re), g17(z.im)))
            .collect();
        let _ = writeln!(out, "# multipliers: {}", mults.join(" "));
        let dim = self.points.first().map_or(0, Vec::len);
        let cols: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
        let _ = writeln!(out, "index,s,{}", cols.join(","));
        for (i, x) in self.points.iter().enumerate() {
            let xs: Vec<String> = x.iter().map(|v| g17(*v)).collect();
            let _ = writeln!(out, "{i},{},{}", g17(x[0]), xs.join(","));
        }
        out
    }
}

/// Parsed form of [`CycleSolution::to_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct CycleCsv {
    pub meta: Vec<(String, String)>,
    pub points: Vec<Vec<f64>>,
}

impl CycleCsv {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn parse(text: &str) -> Result<CycleCsv> {
        let mut meta = Vec::new();
        let mut points = Vec::new();
        let mut header_seen = false;
        for (idx, line) in text.lines().enumerate() {
            let err = |msg: &str| Error::Parse {
                line: idx + 1,
                col: 1,
                msg: msg.into(),
            };
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .split_once(':')
                    .ok_or_else(|| err("expected `# key: value`"))?;
                meta.push((k.trim().to_string(), v.trim().to_string()));
            } else if !header_seen {
                if !line.starts_with("index,s") {
                    return Err(err("expected `index,s,...` header"));
                }
                header_seen = true;
            } else if !line.trim().is_empty() {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() < 3 {
                    return Err(err("too few columns"));
                }
                let x: Vec<f64> = fields[2..]
                    .iter()
                    .map(|f| f.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| err("bad number"))?;
                points.push(x);
            }
        }
        Ok(CycleCsv { meta, points })
    }
}

/// Unique solution of the n-cycle system, rebuilt by forward iteration.
pub fn solve_cycle(
    map: &PwaMap,
    mu: f64,
    s: &SymbolSequence,
    tol: &Tolerances,
) -> Result<CycleSolution> {
    let n = map.dim();
    let mats = cycle_matrices(map, s);
    let i_minus_m = &Matrix::identity(n) - &mats.m;
    let det_i_minus_m = i_minus_m.det();
    let det_p = mats.p.det();
    if is_singular_det(det_i_minus_m, i_minus_m.norm_inf(), n, tol.sing) {
        return Err(Error::SingularSystem {
            det_i_minus_m,
            det_p,
        });
    }
    let rhs: Vec<f64> = mats.p.mul_vec(map.b()).iter().map(|v| mu * v).collect();
    let mut x0 = i_minus_m.solve(&rhs, tol.sing)?;
    let mut orbit = orbit_under(map, mu, s, &x0);
    // one step of refinement against the wrap-around defect
    let defect = sub_vec(&orbit[s.len()], &x0);
    if norm2(&defect) > 0.0 {
        let delta = i_minus_m.solve(&defect, tol.sing)?;
        let x1: Vec<f64> = x0.iter().zip(&delta).map(|(a, d)| a + d).collect();
        let orbit1 = orbit_under(map, mu, s, &x1);
        if norm2(&sub_vec(&orbit1[s.len()], &x1)) < norm2(&defect) {
            x0 = x1;
            orbit = orbit1;
        }
    }
    let wrap_residual = norm2(&sub_vec(&orbit[s.len()], &x0)) / norm2(&x0).max(1.0);
    orbit.truncate(s.len());
    let s_values = orbit.iter().map(|x| x[0]).collect();
    let admissibility = admissibility(&orbit, s, tol.band);
    Ok(CycleSolution {
        sequence: s.clone(),
        mu,
        points: orbit,
        s_values,
        admissibility,
        multipliers: mats.m.eigenvalues()?,
        det_i_minus_m,
        det_p,
        wrap_residual,
    })
}

/// `s₀` of the S-cycle without building the orbit.
pub fn cycle_s0(map: &PwaMap, mu: f64, s: &SymbolSequence) -> Option<f64> {
    let mats = cycle_matrices(map, s);
    let i_minus_m = &Matrix::identity(map.dim()) - &mats.m;
    let rhs: Vec<f64> = mats.p.mul_vec(map.b()).iter().map(|v| mu * v).collect();
    i_minus_m.solve(&rhs, 0.0).ok().map(|x| x[0])
}

/// The `n`-th iterate restricted to itinerary `S` after the first step:
/// `x ↦ Q A_L x + μ P_S b` for `s ≤ 0` and `x ↦ Q A_R x + μ P_S b` for
/// `s ≥ 0`. The returned map has offset vector `P_S b`, so it is evaluated
/// with the same `μ`.
pub fn nth_iterate_map(map: &PwaMap, s: &SymbolSequence) -> Result<PwaMap> {
    let mats = cycle_matrices(map, s);
    let left = &mats.q * map.a_l();
    let right = &mats.q * map.a_r();
    PwaMap::new(left, right, mats.p.mul_vec(map.b()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NatureCell {
    UniqueOffManifold,
    UniqueOnManifold,
    NoSolution,
    AffineFamily,
    /// `μ = 0` or `ρᵀb = 0`
    Degenerate,
}

impl fmt::Display for NatureCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NatureCell::UniqueOffManifold => "unique-off-manifold",
            NatureCell::UniqueOnManifold => "unique-on-manifold",
            NatureCell::NoSolution => "no-solution",
            NatureCell::AffineFamily => "affine-family",
            NatureCell::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionNature {
    pub cell: NatureCell,
    pub det_i_minus_m: f64,
    pub det_p: f64,
}

pub fn solution_nature(
    map: &PwaMap,
    mu: f64,
    s: &SymbolSequence,
    tol: &Tolerances,
) -> Result<SolutionNature> {
    let n = map.dim();
    let mats = cycle_matrices(map, s);
    let i_minus_m = &Matrix::identity(n) - &mats.m;
    let det_i_minus_m = i_minus_m.det();
    let det_p = mats.p.det();
    let rho = map.rho()?;
    let rb = dot(&rho, map.b());
    let scale = rho
        .iter()
        .chain(map.b())
        .fold(1.0f64, |a, x| a.max(x.abs()));
    let cell = if mu == 0.0 || rb.abs() <= tol.sing * scale {
        NatureCell::Degenerate
    } else {
        let m_sing = is_singular_det(det_i_minus_m, i_minus_m.norm_inf(), n, tol.sing);
        let p_sing = is_singular_det(det_p, mats.p.norm_inf(), n, tol.sing);
        match (m_sing, p_sing) {
            (false, false) => NatureCell::UniqueOffManifold,
            (false, true) => NatureCell::UniqueOnManifold,
            (true, false) => NatureCell::NoSolution,
            (true, true) => NatureCell::AffineFamily,
        }
    };
    Ok(SolutionNature {
        cell,
        det_i_minus_m,
        det_p,
    })
}

/// Solutions `x₀ = particular + Σ cₖ basisₖ` of a singular n-cycle system.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleFamily {
    pub particular: Vec<f64>,
    pub null_basis: Vec<Vec<f64>>,
    /// least-squares residual of the particular solution
    pub residual: f64,
    /// for a one-dimensional family, the range of `c` over which the orbit
    /// is admissible (empty when `lo > hi`)
    pub admissible_interval: Option<(f64, f64)>,
}

pub fn cycle_family(map: &PwaMap, mu: f64, s: &SymbolSequence, tol: &Tolerances) -> CycleFamily {
    let n = map.dim();
    let mats = cycle_matrices(map, s);
    let i_minus_m = &Matrix::identity(n) - &mats.m;
    let rhs: Vec<f64> = mats.p.mul_vec(map.b()).iter().map(|v| mu * v).collect();
    let qr = i_minus_m.qr_pivoted();
    let rank_tol = tol.sing.sqrt();
    let (particular, residual) = qr.least_squares(&rhs, rank_tol);
    let null_basis = qr.null_space(rank_tol);
    let admissible_interval = (null_basis.len() == 1).then(|| {
        // orbit points are affine in c: x_i(c) = u_i + c v_i
        let base = orbit_under(map, mu, s, &particular);
        let dir = orbit_under(map, 0.0, s, &null_basis[0]);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..s.len() {
            let (u, v) = (base[i][0], dir[i][0]);
            // want u + c v ≤ 0 for L, ≥ 0 for R
            let sign = if s.symbols()[i] == Symbol::L {
                -1.0
            } else {
                1.0
            };
            let (u, v) = (sign * u, sign * v);
            if v.abs() <= f64::EPSILON * u.abs().max(1.0) {
                if u < -tol.band {
                    lo = f64::INFINITY;
                    hi = f64::NEG_INFINITY;
                }
            } else if v > 0.0 {
                lo = lo.max(-u / v);
            } else {
                hi = hi.min(-u / v);
            }
        }
        (lo, hi)
    });
    CycleFamily {
        particular,
        null_basis,
        residual,
        admissible_interval,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symseq::rotational;

    fn pentagon_map() -> PwaMap {
        let a_l =
            Matrix::from_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0], &[28.0 / 87.0, 0.0, 0.0]])
                .unwrap();
        let a_r = Matrix::from_rows(&[
            &[-23.0 / 14.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
            &[1.5, 0.0, 0.0],
        ])
        .unwrap();
        PwaMap::new(a_l, a_r, vec![1.0, 0.0, 0.0]).unwrap()
    }

    fn seq(s: &str) -> SymbolSequence {
        s.parse().unwrap()
    }

    #[test]
    fn trivial_sequences() {
        let map = pentagon_map();
        assert_eq!(stability_matrix(&map, &seq("L")), *map.a_l());
        assert_eq!(bc_matrix(&map, &seq("L")), Matrix::identity(3));
        let a = Matrix::identity(2).scale(0.3);
        let scalar = PwaMap::new(a.clone(), a, vec![1.0, 0.0]).unwrap();
        assert_eq!(
            bc_matrix(&scalar, &seq("LL")),
            Matrix::identity(2).scale(1.3)
        );
    }

    #[test]
    fn pentagon_p_orbit() {
        let map = pentagon_map();
        let s = rotational(2, 2, 5).unwrap().flip(0);
        assert_eq!(s.to_string(), "RRRLR");
        let sol = solve_cycle(&map, 1.0, &s, &Tolerances::default()).unwrap();
        let want = [0.0, -1.0, 1.5];
        for k in 0..3 {
            assert!(
                (sol.points[0][k] - want[k]).abs() < 1e-12,
                "{:?}",
                sol.points[0]
            );
        }
        assert!(sol.admissibility.is_admissible());
        assert!(sol.wrap_residual < 1e-14);
    }

    #[test]
    fn pentagon_nature_is_affine_family() {
        let nat = solution_nature(
            &pentagon_map(),
            1.0,
            &rotational(2, 2, 5).unwrap(),
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(nat.cell, NatureCell::AffineFamily);
    }

    #[test]
    fn pentagon_family_contains_p_orbit() {
        let map = pentagon_map();
        let s = rotational(2, 2, 5).unwrap();
        let fam = cycle_family(&map, 1.0, &s, &Tolerances::default());
        assert!(fam.residual < 1e-10);
        assert_eq!(fam.null_basis.len(), 1);
        let (lo, hi) = fam.admissible_interval.unwrap();
        assert!(lo < hi);
    }

    #[test]
    fn admissibility_verdicts() {
        let s = seq("LL");
        let pts = vec![vec![-1.0, 0.0], vec![1.0, 0.0]];
        assert_eq!(
            admissibility(&pts, &s, 1e-8),
            Admissibility::Virtual(vec![1])
        );
        let pts = vec![vec![-1.0, 0.0], vec![0.0, 3.0]];
        assert_eq!(
            admissibility(&pts, &s, 1e-8),
            Admissibility::Boundary(vec![1])
        );
        let pts = vec![vec![-1.0, 0.0], vec![-2.0, 3.0]];
        assert_eq!(admissibility(&pts, &s, 1e-8), Admissibility::Admissible);
    }

    #[test]
    fn orbit_with_zero_matrix() {
        let z = Matrix::zeros(2);
        let map = PwaMap::new(z.clone(), z, vec![1.0, 2.0]).unwrap();
        let orbit = orbit_under(&map, 0.5, &seq("LL"), &[3.0, 3.0]);
        assert_eq!(orbit[1], vec![0.5, 1.0]);
        assert_eq!(orbit[2], vec![0.5, 1.0]);
    }

    #[test]
    fn composite_columns_match() {
        let map = pentagon_map();
        let it = nth_iterate_map(&map, &seq("LRRLR")).unwrap();
        assert_eq!(*it.a_l(), stability_matrix(&map, &seq("LRRLR")));
        assert_eq!(*it.a_r(), stability_matrix(&map, &seq("RRRLR")));
        let one = nth_iterate_map(&map, &seq("L")).unwrap();
        assert_eq!(one, map);
    }

    #[test]
    fn singular_system_is_an_error() {
        let map = pentagon_map();
        let err = solve_cycle(
            &map,
            1.0,
            &rotational(2, 2, 5).unwrap(),
            &Tolerances::default(),
        );
        assert!(matches!(err, Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let map = pentagon_map();
        let sol = solve_cycle(&map, 1.0, &seq("RRRLR"), &Tolerances::default()).unwrap();
        let parsed = CycleCsv::parse(&sol.to_csv()).unwrap();
        assert_eq!(parsed.points, sol.points);
        assert_eq!(parsed.get("sequence"), Some("RRRLR"));
    }
}
