//! Shrinking points: certificates, the invariant polygon and the
//! two-parameter unfolding.
//!
//! Notation for `S = S[l,m,n]` with `d = m⁻¹ mod n`:
//! `Š = S` with symbol 0 flipped, `Ŝ = S` with symbol `ld` flipped, and
//! `p₀, …, p_{n−1}` the Š-cycle with first components `t_i`.

mod polygon;
mod unfold;

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

pub use polygon::{polygon, rigid_rotation_check, Polygon, SampledCycle, TerminatingConstruction};
pub use unfold::{
    find_shrinking_point, unfold, virtual_curves, BoundaryCurve, ProbeCycle, RegionVerdict,
    ShrinkSearch, Unfolding, VirtualCurve,
};

use crate::cycles::{cycle_matrices, solve_cycle, CycleSolution};
use crate::error::{Error, Result};
use crate::pwamap::PwaMap;
use crate::smallmat::{dot, is_singular_det, Matrix};
use crate::symseq::{RotationalParams, Symbol, SymbolSequence};
use crate::Tolerances;

/// A two-parameter family of maps at fixed `μ`.
pub trait MapFamily: Sync {
    fn map_at(&self, xi: [f64; 2]) -> Result<PwaMap>;
    fn mu(&self) -> f64;
    /// `[p1_min, p1_max, p2_min, p2_max]`
    fn domain(&self) -> [f64; 4];

    fn contains(&self, xi: [f64; 2]) -> bool {
        let d = self.domain();
        xi[0] >= d[0] && xi[0] <= d[1] && xi[1] >= d[2] && xi[1] <= d[3]
    }
}

/// A [`MapFamily`] backed by a closure.
pub struct FnFamily<F> {
    f: F,
    mu: f64,
    domain: [f64; 4],
}

impl<F> FnFamily<F>
where
    F: Fn([f64; 2]) -> Result<PwaMap> + Sync,
{
    pub fn new(f: F, mu: f64, domain: [f64; 4]) -> Self {
        FnFamily { f, mu, domain }
    }
}

impl<F> MapFamily for FnFamily<F>
where
    F: Fn([f64; 2]) -> Result<PwaMap> + Sync,
{
    fn map_at(&self, xi: [f64; 2]) -> Result<PwaMap> {
        (self.f)(xi)
    }
    fn mu(&self) -> f64 {
        self.mu
    }
    fn domain(&self) -> [f64; 4] {
        self.domain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShrinkKind {
    NonTerminating,
    Terminating,
}

impl fmt::Display for ShrinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShrinkKind::NonTerminating => "non-terminating",
            ShrinkKind::Terminating => "terminating",
        })
    }
}

/// Raw values behind each clause of a certificate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Residuals {
    pub det_p_s: Option<f64>,
    pub det_p_s_l1d: Option<f64>,
    pub det_i_minus_m_check: f64,
    pub det_i_minus_m_hat: Option<f64>,
    pub eigenvalue_gap: Option<f64>,
    /// smallest `|t_i|` over points off the manifold
    pub admissibility_margin: f64,
    /// largest deviation of `t_{id}` from the closed form (terminating only)
    pub s_formula_max_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub kind: ShrinkKind,
    pub params: RotationalParams,
    pub mu: f64,
    pub map: PwaMap,
    pub p_orbit: CycleSolution,
    pub t_values: Vec<f64>,
    pub residuals: Residuals,
}

impl Certificate {
    pub fn sequence(&self) -> SymbolSequence {
        self.params.sequence()
    }

    /// `t_{id}`, with `i` taken mod `n`.
    pub fn t_id(&self, i: i64) -> f64 {
        let p = &self.params;
        self.t_values[(i * p.d).rem_euclid(p.n) as usize]
    }

    /// Sign pattern of the p-orbit: `t₀ = t_{ld} = 0` within `band`, and
    /// the signs of the four neighbours (non-terminating) or of every
    /// other point (terminating).
    pub fn sign_pattern_holds(&self, band: f64) -> bool {
        let p = &self.params;
        let on = |i: i64| {
            self.t_id(i).abs() <= band * crate::smallmat::norm2(&self.point_id(i)).max(1.0)
        };
        if !on(0) || !on(p.l) {
            return false;
        }
        match self.kind {
            ShrinkKind::NonTerminating => {
                self.t_id(1) < 0.0
                    && self.t_id(p.l - 1) < 0.0
                    && self.t_id(p.l + 1) > 0.0
                    && self.t_id(-1) > 0.0
            }
            ShrinkKind::Terminating => (1..p.n - 1).all(|i| self.t_id(i) < 0.0),
        }
    }

    pub fn point_id(&self, i: i64) -> Vec<f64> {
        let p = &self.params;
        self.p_orbit.points[(i * p.d).rem_euclid(p.n) as usize].clone()
    }

    /// Key/value report.
    pub fn report(&self) -> String {
        use crate::format::g17;
        let mut s = String::new();
        let r = &self.residuals;
        s += "verdict: certificate\n";
        s += &format!("kind: {}\n", self.kind);
        s += &format!("sequence: {} {}\n", self.params, self.sequence());
        s += &format!("d: {}\n", self.params.d);
        s += &format!("mu: {}\n", g17(self.mu));
        let p0: Vec<String> = self.p_orbit.points[0].iter().map(|v| g17(*v)).collect();
        s += &format!("p0: ({})\n", p0.join(", "));
        let t: Vec<String> = self.t_values.iter().map(|v| g17(*v)).collect();
        s += &format!("t: {}\n", t.join(" "));
        if let Some(v) = r.det_p_s {
            s += &format!("det_P_S: {}\n", g17(v));
        }
        if let Some(v) = r.det_p_s_l1d {
            s += &format!("det_P_S_l1d: {}\n", g17(v));
        }
        s += &format!("det_IminusM_check: {}\n", g17(r.det_i_minus_m_check));
        if let Some(v) = r.det_i_minus_m_hat {
            s += &format!("det_IminusM_hat: {}\n", g17(v));
        }
        if let Some(v) = r.eigenvalue_gap {
            s += &format!("eigenvalue_gap: {}\n", g17(v));
        }
        if let Some(v) = r.s_formula_max_error {
            s += &format!("s_formula_max_error: {}\n", g17(v));
        }
        s += &format!("admissibility_margin: {}\n", g17(r.admissibility_margin));
        s += &format!("p_orbit: {}\n", self.p_orbit.admissibility);
        s
    }
}

/// The first failing clause of a shrinking-point definition.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureReport {
    pub clause: &'static str,
    pub residual: f64,
    pub detail: String,
}

impl FailureReport {
    fn new(clause: &'static str, residual: f64, detail: impl Into<String>) -> Self {
        FailureReport {
            clause,
            residual,
            detail: detail.into(),
        }
    }

    pub fn report(&self) -> String {
        format!(
            "verdict: failure\nclause: {}\nresidual: {}\ndetail: {}\n",
            self.clause,
            crate::format::g17(self.residual),
            self.detail
        )
    }
}

pub type Verdict = std::result::Result<Certificate, FailureReport>;

fn singular(m: &Matrix, det: f64, tol: f64) -> bool {
    is_singular_det(det, m.norm_inf(), m.dim(), tol)
}

fn i_minus(m: &Matrix) -> Matrix {
    &Matrix::identity(m.dim()) - m
}

fn nondegenerate(map: &PwaMap, mu: f64, tol: &Tolerances) -> Result<Option<FailureReport>> {
    if map.dim() < 2 {
        return Ok(Some(FailureReport::new(
            "nondegeneracy",
            0.0,
            "N must be at least 2",
        )));
    }
    if mu == 0.0 {
        return Ok(Some(FailureReport::new("nondegeneracy", 0.0, "mu = 0")));
    }
    let rho = map.rho()?;
    let rb = dot(&rho, map.b());
    let scale = rho
        .iter()
        .chain(map.b())
        .fold(1.0f64, |a, x| a.max(x.abs()));
    if rb.abs() <= tol.sing * scale {
        return Ok(Some(FailureReport::new("nondegeneracy", rb, "rho^T b = 0")));
    }
    Ok(None)
}

/// Checks the non-terminating definition for `S[l,m,n]`, `1 < l < n−1`.
pub fn check_nonterminating(
    map: &PwaMap,
    mu: f64,
    l: i64,
    m: i64,
    n: i64,
    tol: &Tolerances,
) -> Result<Verdict> {
    let params = RotationalParams::new(l, m, n)?;
    if !(1 < l && l < n - 1) {
        return Err(Error::BadL { l, max: n - 2 });
    }
    if let Some(f) = nondegenerate(map, mu, tol)? {
        return Ok(Err(f));
    }
    let d = params.d;
    let s = params.sequence();
    let check = s.flip(0);
    let hat = s.flip(l * d);

    let p_s = cycle_matrices(map, &s).p;
    let det_p_s = p_s.det();
    if !singular(&p_s, det_p_s, tol.sing) {
        return Ok(Err(FailureReport::new(
            "det_P_S",
            det_p_s,
            "P_S is nonsingular",
        )));
    }
    let p_l1d = cycle_matrices(map, &s.cyclic((l - 1) * d)).p;
    let det_p_s_l1d = p_l1d.det();
    if !singular(&p_l1d, det_p_s_l1d, tol.sing) {
        return Ok(Err(FailureReport::new(
            "det_P_S_l1d",
            det_p_s_l1d,
            "P of the ((l-1)d)-shifted sequence is nonsingular",
        )));
    }
    let m_check = i_minus(&cycle_matrices(map, &check).m);
    let det_check = m_check.det();
    if singular(&m_check, det_check, tol.sing) {
        return Ok(Err(FailureReport::new(
            "det_IminusM_check",
            det_check,
            "I - M is singular for S with symbol 0 flipped",
        )));
    }
    let m_hat = i_minus(&cycle_matrices(map, &hat).m);
    let det_hat = m_hat.det();
    if singular(&m_hat, det_hat, tol.sing) {
        return Ok(Err(FailureReport::new(
            "det_IminusM_hat",
            det_hat,
            "I - M is singular for S with symbol ld flipped",
        )));
    }
    let p_orbit = solve_cycle(map, mu, &check, tol)?;
    let margin = p_orbit.margin(tol.band);
    if !p_orbit.admissibility.is_admissible() {
        return Ok(Err(FailureReport::new(
            "admissibility",
            margin,
            format!("p-orbit is {}", p_orbit.admissibility),
        )));
    }
    Ok(Ok(Certificate {
        kind: ShrinkKind::NonTerminating,
        params,
        mu,
        map: map.clone(),
        t_values: p_orbit.s_values.clone(),
        p_orbit,
        residuals: Residuals {
            det_p_s: Some(det_p_s),
            det_p_s_l1d: Some(det_p_s_l1d),
            det_i_minus_m_check: det_check,
            det_i_minus_m_hat: Some(det_hat),
            eigenvalue_gap: None,
            admissibility_margin: margin,
            s_formula_max_error: None,
        },
    }))
}

/// `s^{*(L)} (1 − cos(2π(i+½)/n) / cos(π/n))`.
pub fn terminating_s_formula(s_star: f64, i: i64, n: i64) -> f64 {
    if i.rem_euclid(n) == 0 || i.rem_euclid(n) == n - 1 {
        return 0.0;
    }
    let nf = n as f64;
    s_star * (1.0 - (2.0 * PI * (i as f64 + 0.5) / nf).cos() / (PI / nf).cos())
}

/// Multipliers are accepted on `e^{±2πim/n}` within `√tol_sing`, the
/// attainable accuracy of a computed eigenvalue.
pub fn eigen_tolerance(tol: &Tolerances) -> f64 {
    tol.sing.sqrt()
}

/// Checks the terminating definition for `S[n−1,m,n]`, `n ≥ 3`.
pub fn check_terminating(
    map: &PwaMap,
    mu: f64,
    m: i64,
    n: i64,
    tol: &Tolerances,
) -> Result<Verdict> {
    if n < 3 {
        return Err(Error::BadL {
            l: n - 1,
            max: n - 1,
        });
    }
    let params = RotationalParams::new(n - 1, m, n)?;
    if let Some(f) = nondegenerate(map, mu, tol)? {
        return Ok(Err(f));
    }
    let fp = match map.fixed_point(mu, Symbol::L, tol) {
        Ok(fp) => fp,
        Err(Error::UnitMultiplier { det, .. }) => {
            return Ok(Err(FailureReport::new(
                "nondegeneracy",
                det,
                "I - A_L is singular",
            )));
        }
        Err(e) => return Err(e),
    };
    if !(fp.s_star_formula < 0.0) {
        return Ok(Err(FailureReport::new(
            "fixed_point_admissible",
            fp.s_star_formula,
            "x*(L) is not admissible",
        )));
    }
    let theta = 2.0 * PI * m as f64 / n as f64;
    let spectrum = map.a_l().eigenvalues()?;
    let gap = spectrum.min_distance_to(Complex64::from_polar(1.0, theta));
    if gap > eigen_tolerance(tol) {
        return Ok(Err(FailureReport::new(
            "eigenvalue_gap",
            gap,
            format!("A_L has no multiplier at exp(2 pi i {m}/{n})"),
        )));
    }
    let s = params.sequence();
    let check = s.flip(0);
    let m_check = i_minus(&cycle_matrices(map, &check).m);
    let det_check = m_check.det();
    if singular(&m_check, det_check, tol.sing) {
        return Ok(Err(FailureReport::new(
            "det_IminusM_check",
            det_check,
            "I - M is singular for S with symbol 0 flipped",
        )));
    }
    let p_orbit = solve_cycle(map, mu, &check, tol)?;
    let margin = p_orbit.margin(tol.band);
    let s_formula_max_error = (0..n)
        .map(|i| {
            let t = p_orbit.s_values[(i * params.d).rem_euclid(n) as usize];
            (t - terminating_s_formula(fp.s_star_formula, i, n)).abs()
        })
        .fold(0.0, f64::max);
    Ok(Ok(Certificate {
        kind: ShrinkKind::Terminating,
        params,
        mu,
        map: map.clone(),
        t_values: p_orbit.s_values.clone(),
        p_orbit,
        residuals: Residuals {
            det_p_s: None,
            det_p_s_l1d: None,
            det_i_minus_m_check: det_check,
            det_i_minus_m_hat: None,
            eigenvalue_gap: Some(gap),
            admissibility_margin: margin,
            s_formula_max_error: Some(s_formula_max_error),
        },
    }))
}

/// `det(I − M_S)` and `det P` of every cyclic shift of `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryReport {
    pub det_i_minus_m: f64,
    pub i_minus_m_singular: bool,
    /// `(det P_{S^{(i)}}, singular)` for `i = 0, …, n−1`
    pub det_p: Vec<(f64, bool)>,
    /// shift left out of [`CorollaryReport::all_singular`]: `−d` when
    /// `l = n−1`, where that determinant vanishes only quadratically
    pub excluded: Option<usize>,
}

impl CorollaryReport {
    pub fn all_singular(&self) -> bool {
        self.i_minus_m_singular
            && self
                .det_p
                .iter()
                .enumerate()
                .all(|(i, (_, sing))| *sing || Some(i) == self.excluded)
    }
}

pub fn corollary_check(
    map: &PwaMap,
    params: &RotationalParams,
    tol: &Tolerances,
) -> CorollaryReport {
    let s = params.sequence();
    let mats = cycle_matrices(map, &s);
    let a = i_minus(&mats.m);
    let det_i_minus_m = a.det();
    let det_p = (0..params.n)
        .map(|i| {
            let p = cycle_matrices(map, &s.cyclic(i)).p;
            let det = p.det();
            (det, singular(&p, det, tol.sing))
        })
        .collect();
    let excluded = (params.l == params.n - 1).then(|| (-params.d).rem_euclid(params.n) as usize);
    CorollaryReport {
        det_i_minus_m,
        i_minus_m_singular: singular(&a, det_i_minus_m, tol.sing),
        det_p,
        excluded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn pentagon_map() -> PwaMap {
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

    pub(crate) fn rotation_map(m: i64, n: i64) -> PwaMap {
        let th = 2.0 * PI * m as f64 / n as f64;
        let a_l = Matrix::from_rows(&[&[th.cos(), th.sin()], &[-th.sin(), th.cos()]]).unwrap();
        let a_r = Matrix::from_rows(&[&[-1.0, th.sin()], &[0.0, th.cos()]]).unwrap();
        PwaMap::new(a_l, a_r, vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn pentagon_certificate() {
        let tol = Tolerances::default();
        let cert = check_nonterminating(&pentagon_map(), 1.0, 2, 2, 5, &tol)
            .unwrap()
            .unwrap();
        let p0 = &cert.p_orbit.points[0];
        assert!(
            (p0[0]).abs() < 1e-12 && (p0[1] + 1.0).abs() < 1e-12 && (p0[2] - 1.5).abs() < 1e-12
        );
        assert!(cert.sign_pattern_holds(tol.band));
        assert!(corollary_check(&pentagon_map(), &cert.params, &tol).all_singular());
    }

    #[test]
    fn wrong_m_fails_first_clause() {
        let tol = Tolerances::default();
        let fail = check_nonterminating(&pentagon_map(), 1.0, 2, 1, 5, &tol)
            .unwrap()
            .unwrap_err();
        assert_eq!(fail.clause, "det_P_S");
        let p = cycle_matrices(&pentagon_map(), &"LLRRR".parse().unwrap()).p;
        assert_eq!(fail.residual, p.det());
    }

    #[test]
    fn bad_l_is_an_error() {
        let tol = Tolerances::default();
        assert!(matches!(
            check_nonterminating(&pentagon_map(), 1.0, 1, 2, 5, &tol),
            Err(Error::BadL { .. })
        ));
        assert!(matches!(
            check_nonterminating(&pentagon_map(), 1.0, 2, 5, 10, &tol),
            Err(Error::NotCoprime { .. })
        ));
    }

    #[test]
    fn closed_form_zeros() {
        for n in 3..12 {
            assert_eq!(terminating_s_formula(-0.5, 0, n), 0.0);
            assert_eq!(terminating_s_formula(-0.5, -1, n), 0.0);
        }
    }

    #[test]
    fn terminating_rotation() {
        let tol = Tolerances::default();
        for (m, n) in [(1, 5), (2, 5), (1, 7)] {
            let cert = check_terminating(&rotation_map(m, n), -1.0, m, n, &tol)
                .unwrap()
                .unwrap();
            assert!(
                cert.residuals.s_formula_max_error.unwrap() < 1e-12,
                "{m}/{n}"
            );
            assert!(cert.sign_pattern_holds(tol.band));
        }
    }

    #[test]
    fn terminating_needs_unit_circle_multipliers() {
        let tol = Tolerances::default();
        let map = rotation_map(1, 5);
        let shrunk =
            PwaMap::new(map.a_l().scale(0.9), map.a_r().scale(0.9), vec![1.0, 0.0]).unwrap();
        let fail = check_terminating(&shrunk, -1.0, 1, 5, &tol)
            .unwrap()
            .unwrap_err();
        assert_eq!(fail.clause, "eigenvalue_gap");
    }
}
