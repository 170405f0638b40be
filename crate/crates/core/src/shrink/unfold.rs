//! Locating shrinking points in two-parameter families and measuring the
//! local bifurcation set around them.

use super::{check_nonterminating, MapFamily, Verdict};
use crate::cycles::{admissibility, cycle_matrices, orbit_under, solve_cycle, Admissibility};
use crate::error::{Error, Result};
use crate::roots::{brent, nearest_root};
use crate::smallmat::Matrix;
use crate::symseq::{RotationalParams, SymbolSequence};
use crate::Tolerances;

const NEWTON_MAX_ITER: usize = 50;
const MAX_HALVINGS: usize = 20;

fn fd_step(xi: [f64; 2]) -> f64 {
    (1e-7 * xi[0].hypot(xi[1])).max(1e-6)
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

type Jac = [[f64; 2]; 2];

fn jacobian<F: FnMut([f64; 2]) -> Result<[f64; 2]>>(mut f: F, xi: [f64; 2]) -> Result<Jac> {
    let h = fd_step(xi);
    let mut j = [[0.0; 2]; 2];
    for c in 0..2 {
        let mut plus = xi;
        let mut minus = xi;
        plus[c] += h;
        minus[c] -= h;
        let (fp, fm) = (f(plus)?, f(minus)?);
        for r in 0..2 {
            j[r][c] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    Ok(j)
}

fn det2(j: &Jac) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

/// `J⁻¹ v`, or `SingularJacobian` when `J` is numerically singular.
fn solve2(j: &Jac, v: [f64; 2]) -> Result<[f64; 2]> {
    let det = det2(j);
    let scale = j.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    if det == 0.0 || det.abs() <= 1e-13 * scale * scale {
        return Err(Error::SingularJacobian { det });
    }
    Ok([
        (j[1][1] * v[0] - j[0][1] * v[1]) / det,
        (-j[1][0] * v[0] + j[0][0] * v[1]) / det,
    ])
}

fn det_p(map: &crate::pwamap::PwaMap, s: &SymbolSequence) -> f64 {
    cycle_matrices(map, s).p.det()
}

fn det_i_minus_m(map: &crate::pwamap::PwaMap, s: &SymbolSequence) -> f64 {
    crate::cycles::det_i_minus(&cycle_matrices(map, s).m)
}

/// First components of the `S`-cycle, without eigenvalues.
fn cycle_s(map: &crate::pwamap::PwaMap, mu: f64, s: &SymbolSequence) -> Result<Vec<f64>> {
    let mats = cycle_matrices(map, s);
    let a = &Matrix::identity(map.dim()) - &mats.m;
    let rhs: Vec<f64> = mats.p.mul_vec(map.b()).iter().map(|v| mu * v).collect();
    let x0 = a.solve(&rhs, 0.0)?;
    Ok(orbit_under(map, mu, s, &x0)[..s.len()]
        .iter()
        .map(|x| x[0])
        .collect())
}

/// Result of [`find_shrinking_point`].
#[derive(Debug, Clone)]
pub struct ShrinkSearch {
    pub xi: [f64; 2],
    pub iterations: usize,
    /// `(det P_S, det P_{S^{((l−1)d)}})` at `xi`
    pub residual: [f64; 2],
    pub verdict: Verdict,
}

/// Damped Newton on `(det P_S, det P_{S^{((l−1)d)}})` followed by the
/// non-terminating certificate check.
pub fn find_shrinking_point<F: MapFamily + ?Sized>(
    family: &F,
    params: &RotationalParams,
    guess: [f64; 2],
    tol: &Tolerances,
) -> Result<ShrinkSearch> {
    let (l, d) = (params.l, params.d);
    if !(1 < l && l < params.n - 1) {
        return Err(Error::BadL {
            l,
            max: params.n - 2,
        });
    }
    let s = params.sequence();
    let s_l1d = s.cyclic((l - 1) * d);
    let resid = |xi: [f64; 2]| -> Result<[f64; 2]> {
        let map = family.map_at(xi)?;
        Ok([det_p(&map, &s), det_p(&map, &s_l1d)])
    };
    if !family.contains(guess) {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: f64::NAN,
        });
    }
    let mut xi = guess;
    let mut f = resid(xi)?;
    let f0 = norm(f);
    let mut iterations = 0;
    let converged = |f: [f64; 2]| norm(f) < 1e-12 || norm(f) <= 1e-10 * f0;
    while !converged(f) {
        if iterations == NEWTON_MAX_ITER {
            return Err(Error::NoConvergence {
                iterations,
                residual: norm(f),
            });
        }
        iterations += 1;
        let j = jacobian(resid, xi)?;
        let step = solve2(&j, f)?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = [xi[0] - lambda * step[0], xi[1] - lambda * step[1]];
            if family.contains(trial) {
                let ft = resid(trial)?;
                if norm(ft) < norm(f) {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((x, fx)) => {
                xi = x;
                f = fx;
            }
            None => {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: norm(f),
                })
            }
        }
    }
    // polish: a relative stop can leave digits on the table
    for _ in 0..2 {
        let Ok(j) = jacobian(resid, xi) else { break };
        let Ok(step) = solve2(&j, f) else { break };
        let trial = [xi[0] - step[0], xi[1] - step[1]];
        if !family.contains(trial) {
            break;
        }
        let ft = resid(trial)?;
        if norm(ft) >= norm(f) {
            break;
        }
        xi = trial;
        f = ft;
    }
    let map = family.map_at(xi)?;
    let verdict = check_nonterminating(&map, family.mu(), params.l, params.m, params.n, tol)?;
    Ok(ShrinkSearch {
        xi,
        iterations,
        residual: f,
        verdict,
    })
}

/// The local chart `(η, ν) = (š₀, š_{ld})` around a shrinking point.
struct Chart<'a, F: MapFamily + ?Sized> {
    family: &'a F,
    mu: f64,
    s: SymbolSequence,
    check: SymbolSequence,
    hat: SymbolSequence,
    ld: usize,
    xi_star: [f64; 2],
    jac: Jac,
}

impl<'a, F: MapFamily + ?Sized> Chart<'a, F> {
    fn new(family: &'a F, params: &RotationalParams, xi_star: [f64; 2]) -> Result<Self> {
        let (l, d, n) = (params.l, params.d, params.n);
        if !(1 < l && l < n - 1) {
            return Err(Error::BadL { l, max: n - 2 });
        }
        let s = params.sequence();
        let mut chart = Chart {
            family,
            mu: family.mu(),
            check: s.flip(0),
            hat: s.flip(l * d),
            s,
            ld: (l * d).rem_euclid(n) as usize,
            xi_star,
            jac: [[0.0; 2]; 2],
        };
        chart.jac = jacobian(|x| chart.eval(x), xi_star)?;
        if solve2(&chart.jac, [1.0, 0.0]).is_err() {
            return Err(Error::DegenerateUnfolding(
                "chart Jacobian is singular".into(),
            ));
        }
        Ok(chart)
    }

    fn eval(&self, xi: [f64; 2]) -> Result<[f64; 2]> {
        let t = cycle_s(&self.family.map_at(xi)?, self.mu, &self.check)?;
        Ok([t[0], t[self.ld]])
    }

    /// `ξ` with chart coordinates `(η, ν)`, by Newton from the linear guess.
    fn inv(&self, eta: f64, nu: f64) -> Result<[f64; 2]> {
        let lin = solve2(&self.jac, [eta, nu])?;
        let mut xi = [self.xi_star[0] + lin[0], self.xi_star[1] + lin[1]];
        let mut best = f64::INFINITY;
        for _ in 0..30 {
            let c = self.eval(xi)?;
            let r = [c[0] - eta, c[1] - nu];
            let rn = norm(r);
            if rn <= 1e-15 || rn >= best {
                break;
            }
            best = rn;
            let j = jacobian(|x| self.eval(x), xi)?;
            let step = solve2(&j, r)?;
            xi = [xi[0] - step[0], xi[1] - step[1]];
        }
        Ok(xi)
    }

    fn s_values(&self, seq: &SymbolSequence, xi: [f64; 2]) -> Result<Vec<f64>> {
        cycle_s(&self.family.map_at(xi)?, self.mu, seq)
    }

    /// `(k₁, k₂)`: gradient of `det(I − M_S)` in chart coordinates.
    fn k12(&self) -> Result<[f64; 2]> {
        let g = jacobian(
            |x| {
                let v = det_i_minus_m(&self.family.map_at(x)?, &self.s);
                Ok([v, 0.0])
            },
            self.xi_star,
        )?;
        // row vector ∇D · J⁻¹ = (J⁻ᵀ ∇D)ᵀ
        let jt = [
            [self.jac[0][0], self.jac[1][0]],
            [self.jac[0][1], self.jac[1][1]],
        ];
        solve2(&jt, [g[0][0], g[0][1]])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample {
    pub eta: f64,
    pub nu: f64,
    pub xi: [f64; 2],
    /// value of the defining first component at the sample
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    /// `s_check_0`, `s_check_ld`, `s_hat_ld` or `s_hat_0`
    pub label: &'static str,
    pub samples: Vec<BoundarySample>,
    /// least-squares `[c₀, c₁, c₂]` of the dependent chart coordinate
    pub fit: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeCycle {
    pub name: &'static str,
    /// `None` when the cycle's system is singular at the probe
    pub admissibility: Option<Admissibility>,
    pub spectral_radius: f64,
    pub real_above_one: usize,
}

impl ProbeCycle {
    pub fn admissible(&self) -> bool {
        self.admissibility
            .as_ref()
            .is_some_and(Admissibility::is_admissible)
    }

    pub fn stable(&self) -> bool {
        self.spectral_radius < 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionVerdict {
    pub region: &'static str,
    pub eta: f64,
    pub nu: f64,
    pub xi: [f64; 2],
    /// S, Š and Ŝ, in that order
    pub cycles: Vec<ProbeCycle>,
}

impl RegionVerdict {
    pub fn cycle(&self, name: &str) -> &ProbeCycle {
        self.cycles
            .iter()
            .find(|c| c.name == name)
            .expect("known cycle name")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Unfolding {
    pub xi_star: [f64; 2],
    pub radius: f64,
    /// `∂(η, ν)/∂ξ` at the shrinking point
    pub chart_jacobian: [[f64; 2]; 2],
    pub k: [f64; 4],
    /// fitted quadratic coefficient of `η = g₁(ν)`
    pub g1_coeff: f64,
    pub g2_coeff: f64,
    /// `−k₂ / (k₁ t_{(l+1)d})`
    pub g1_predicted: f64,
    /// `−k₁ / (k₂ t_{−d})`
    pub g2_predicted: f64,
    pub h_slope: f64,
    /// predicted `q_i'(0) = −k₁ t_{(i+1)d} / (k₂ t_{id})`
    pub q_slopes: Vec<(i64, f64)>,
    pub boundaries: Vec<BoundaryCurve>,
    pub regions: Vec<RegionVerdict>,
}

impl Unfolding {
    /// `sgn k₁ = sgn k₂ = −sgn k₃ = sgn k₄`.
    pub fn k_signs_as_predicted(&self) -> bool {
        let s = self.k.map(f64::signum);
        s[0] == s[1] && s[2] == -s[0] && s[3] == s[0]
    }

    pub fn k_pattern(&self) -> String {
        self.k
            .iter()
            .map(|k| if *k > 0.0 { '+' } else { '-' })
            .collect()
    }

    pub fn boundary(&self, label: &str) -> &BoundaryCurve {
        self.boundaries
            .iter()
            .find(|b| b.label == label)
            .expect("known boundary")
    }

    pub fn region(&self, name: &str) -> &RegionVerdict {
        self.regions
            .iter()
            .find(|r| r.region == name)
            .expect("known region")
    }

    pub fn report(&self) -> String {
        use crate::format::g17;
        let mut s = String::new();
        s += &format!(
            "xi_star: {}, {}\n",
            g17(self.xi_star[0]),
            g17(self.xi_star[1])
        );
        s += &format!("radius: {}\n", g17(self.radius));
        for (i, k) in self.k.iter().enumerate() {
            s += &format!("k{}: {}\n", i + 1, g17(*k));
        }
        s += &format!("k_signs: {}\n", self.k_pattern());
        s += &format!("k_signs_as_predicted: {}\n", self.k_signs_as_predicted());
        s += &format!("g1_coeff: {}\n", g17(self.g1_coeff));
        s += &format!("g1_predicted: {}\n", g17(self.g1_predicted));
        s += &format!("g2_coeff: {}\n", g17(self.g2_coeff));
        s += &format!("g2_predicted: {}\n", g17(self.g2_predicted));
        s += &format!("h_slope: {}\n", g17(self.h_slope));
        for (i, q) in &self.q_slopes {
            s += &format!("q_slope[{i}]: {}\n", g17(*q));
        }
        for r in &self.regions {
            for c in &r.cycles {
                let adm = c
                    .admissibility
                    .as_ref()
                    .map_or("singular".to_string(), |a| a.to_string());
                s += &format!(
                    "{}.{}: {} radius={} real_above_one={}\n",
                    r.region,
                    c.name,
                    adm,
                    g17(c.spectral_radius),
                    c.real_above_one
                );
            }
        }
        s
    }

    /// `curve_id,index,p1,p2,s_residual` rows for the four boundaries.
    pub fn boundaries_csv(&self) -> String {
        use crate::format::g17;
        let mut out = String::from("curve_id,index,p1,p2,s_residual\n");
        for b in &self.boundaries {
            for (i, p) in b.samples.iter().enumerate() {
                out += &format!(
                    "{},{i},{},{},{}\n",
                    b.label,
                    g17(p.xi[0]),
                    g17(p.xi[1]),
                    g17(p.residual)
                );
            }
        }
        out
    }
}

/// Least-squares polynomial of degree `deg` through `(x, y)`.
pub(crate) fn polyfit(xs: &[f64], ys: &[f64], deg: usize) -> Result<Vec<f64>> {
    let k = deg + 1;
    let scale = xs
        .iter()
        .fold(0.0f64, |a, x| a.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let mut ata = Matrix::zeros(k);
    let mut aty = vec![0.0; k];
    for (x, y) in xs.iter().zip(ys) {
        let u = x / scale;
        let pow: Vec<f64> = (0..k).map(|p| u.powi(p as i32)).collect();
        for i in 0..k {
            aty[i] += pow[i] * y;
            for j in 0..k {
                ata[(i, j)] += pow[i] * pow[j];
            }
        }
    }
    let c = ata.solve(&aty, 1e-14)?;
    Ok(c.iter()
        .enumerate()
        .map(|(p, v)| v / scale.powi(p as i32))
        .collect())
}

fn root_in<G: FnMut(f64) -> f64>(mut g: G, radius: f64) -> Result<f64> {
    match brent(&mut g, -radius, radius, 1e-15, 200) {
        Ok(r) => Ok(r),
        Err(_) => nearest_root(g, 0.0, radius / 10.0, 50, 1e-15),
    }
}

fn probe<F: MapFamily + ?Sized>(
    chart: &Chart<'_, F>,
    region: &'static str,
    eta: f64,
    nu: f64,
    tol: &Tolerances,
) -> Result<RegionVerdict> {
    let xi = chart.inv(eta, nu)?;
    let map = chart.family.map_at(xi)?;
    let cycles = [
        ("S", &chart.s),
        ("S_check", &chart.check),
        ("S_hat", &chart.hat),
    ]
    .into_iter()
    .map(|(name, seq)| -> Result<ProbeCycle> {
        Ok(match solve_cycle(&map, chart.mu, seq, tol) {
            Ok(sol) => ProbeCycle {
                name,
                admissibility: Some(sol.admissibility.clone()),
                spectral_radius: sol.multipliers.spectral_radius(),
                real_above_one: sol.multipliers.count_real_above_one(),
            },
            Err(Error::SingularSystem { .. }) => {
                let sp = cycle_matrices(&map, seq).m.eigenvalues()?;
                ProbeCycle {
                    name,
                    admissibility: None,
                    spectral_radius: sp.spectral_radius(),
                    real_above_one: sp.count_real_above_one(),
                }
            }
            Err(e) => return Err(e),
        })
    })
    .collect::<Result<Vec<_>>>()?;
    Ok(RegionVerdict {
        region,
        eta,
        nu,
        xi,
        cycles,
    })
}

/// Measures the unfolding of a non-terminating shrinking point at `xi_star`
/// within chart radius `radius`.
pub fn unfold<F: MapFamily + ?Sized>(
    family: &F,
    xi_star: [f64; 2],
    params: &RotationalParams,
    radius: f64,
    tol: &Tolerances,
) -> Result<Unfolding> {
    let chart = Chart::new(family, params, xi_star)?;
    let (n, d, l) = (params.n, params.d, params.l);
    let t = chart.s_values(&chart.check, xi_star)?;
    let t_id = |i: i64| t[(i * d).rem_euclid(n) as usize];
    let [k1, k2] = chart.k12()?;
    let map = family.map_at(xi_star)?;
    let k3 = det_i_minus_m(&map, &chart.check);
    let k4 = det_i_minus_m(&map, &chart.hat);
    let k = [k1, k2, k3, k4];
    if let Some(i) = k.iter().position(|v| v.abs() <= 1e-8) {
        return Err(Error::DegenerateUnfolding(format!(
            "k{} = {:e}",
            i + 1,
            k[i]
        )));
    }

    const SAMPLES: usize = 11;
    let grid: Vec<f64> = (0..SAMPLES)
        .map(|i| -radius + 2.0 * radius * i as f64 / (SAMPLES - 1) as f64)
        .collect();
    let ld = chart.ld;
    let mut boundaries = Vec::new();

    let axis = |label: &'static str, along_nu: bool, idx: usize| -> Result<BoundaryCurve> {
        let mut samples = Vec::new();
        for &v in &grid {
            let (eta, nu) = if along_nu { (0.0, v) } else { (v, 0.0) };
            let xi = chart.inv(eta, nu)?;
            let residual = chart.s_values(&chart.check, xi)?[idx];
            samples.push(BoundarySample {
                eta,
                nu,
                xi,
                residual,
            });
        }
        Ok(BoundaryCurve {
            label,
            samples,
            fit: [0.0; 3],
        })
    };
    boundaries.push(axis("s_check_0", true, 0)?);
    boundaries.push(axis("s_check_ld", false, ld)?);

    // η = g₁(ν): ŝ_{ld} = 0
    let mut g1 = Vec::new();
    for &nu in &grid {
        let eta = root_in(
            |eta| {
                chart
                    .inv(eta, nu)
                    .and_then(|xi| chart.s_values(&chart.hat, xi))
                    .map_or(f64::NAN, |s| s[ld])
            },
            radius,
        )?;
        let xi = chart.inv(eta, nu)?;
        let residual = chart.s_values(&chart.hat, xi)?[ld];
        g1.push(BoundarySample {
            eta,
            nu,
            xi,
            residual,
        });
    }
    let fit1 = polyfit(&grid, &g1.iter().map(|p| p.eta).collect::<Vec<_>>(), 2)?;
    boundaries.push(BoundaryCurve {
        label: "s_hat_ld",
        samples: g1,
        fit: [fit1[0], fit1[1], fit1[2]],
    });

    // ν = g₂(η): ŝ₀ = 0
    let mut g2 = Vec::new();
    for &eta in &grid {
        let nu = root_in(
            |nu| {
                chart
                    .inv(eta, nu)
                    .and_then(|xi| chart.s_values(&chart.hat, xi))
                    .map_or(f64::NAN, |s| s[0])
            },
            radius,
        )?;
        let xi = chart.inv(eta, nu)?;
        let residual = chart.s_values(&chart.hat, xi)?[0];
        g2.push(BoundarySample {
            eta,
            nu,
            xi,
            residual,
        });
    }
    let fit2 = polyfit(&grid, &g2.iter().map(|p| p.nu).collect::<Vec<_>>(), 2)?;
    boundaries.push(BoundaryCurve {
        label: "s_hat_0",
        samples: g2,
        fit: [fit2[0], fit2[1], fit2[2]],
    });

    let q_slopes = valid_virtual_indices(params)
        .into_iter()
        .map(|i| (i, -k1 * t_id(i + 1) / (k2 * t_id(i))))
        .collect();
    let regions = vec![
        probe(&chart, "psi1", radius / 2.0, radius / 2.0, tol)?,
        probe(&chart, "psi2", -radius / 2.0, -radius / 2.0, tol)?,
    ];
    Ok(Unfolding {
        xi_star,
        radius,
        chart_jacobian: chart.jac,
        k,
        g1_coeff: fit1[2],
        g2_coeff: fit2[2],
        g1_predicted: -k2 / (k1 * t_id(l + 1)),
        g2_predicted: -k1 / (k2 * t_id(-1)),
        h_slope: -k1 / k2,
        q_slopes,
        boundaries,
        regions,
    })
}

/// `i ∉ {0, l−1, l, −1}` (mod n) for interior `l`, `i ∉ {0, −2, −1}` for
/// `l = n−1`.
pub fn valid_virtual_indices(params: &RotationalParams) -> Vec<i64> {
    let (l, n) = (params.l, params.n);
    let excluded: Vec<i64> = if l == n - 1 {
        vec![0, n - 2, n - 1]
    } else {
        vec![0, l - 1, l, n - 1]
    };
    (0..n).filter(|i| !excluded.contains(i)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualCurve {
    pub index: i64,
    /// `(η, ν)` on `det P_{S^{(id)}} = 0`
    pub samples: Vec<(f64, f64)>,
    pub fitted_slope: f64,
    pub predicted_slope: f64,
    /// admissibility of the S-cycle at each sample
    pub verdicts: Vec<Admissibility>,
}

impl VirtualCurve {
    pub fn all_virtual(&self) -> bool {
        self.verdicts
            .iter()
            .all(|a| matches!(a, Admissibility::Virtual(_)))
    }
}

/// Traces `det P_{S^{(id)}} = 0` through the shrinking point.
pub fn virtual_curves<F: MapFamily + ?Sized>(
    family: &F,
    xi_star: [f64; 2],
    params: &RotationalParams,
    i: i64,
    radius: f64,
    tol: &Tolerances,
) -> Result<VirtualCurve> {
    let i = i.rem_euclid(params.n);
    if !valid_virtual_indices(params).contains(&i) {
        return Err(Error::Config(format!(
            "index {i} has no virtual curve for {params}"
        )));
    }
    let chart = Chart::new(family, params, xi_star)?;
    let (n, d) = (params.n, params.d);
    let t = chart.s_values(&chart.check, xi_star)?;
    let t_id = |j: i64| t[(j * d).rem_euclid(n) as usize];
    let [k1, k2] = chart.k12()?;
    let shifted = chart.s.cyclic(i * d);
    let mut samples = Vec::new();
    let mut verdicts = Vec::new();
    for j in 1..=5 {
        for sign in [-1.0, 1.0] {
            let eta = sign * radius * j as f64 / 5.0;
            let nu = nearest_root(
                |nu| {
                    chart
                        .inv(eta, nu)
                        .and_then(|xi| family.map_at(xi))
                        .map_or(f64::NAN, |m| det_p(&m, &shifted))
                },
                0.0,
                eta.abs() / 20.0,
                400,
                1e-16,
            )?;
            let xi = chart.inv(eta, nu)?;
            let map = family.map_at(xi)?;
            let sol = solve_cycle(&map, chart.mu, &chart.s, tol)?;
            samples.push((eta, nu));
            verdicts.push(admissibility(&sol.points, &chart.s, tol.band));
        }
    }
    let etas: Vec<f64> = samples.iter().map(|p| p.0).collect();
    let nus: Vec<f64> = samples.iter().map(|p| p.1).collect();
    let fit = polyfit(&etas, &nus, 2)?;
    Ok(VirtualCurve {
        index: i,
        samples,
        fitted_slope: fit[1],
        predicted_slope: -k1 * t_id(i + 1) / (k2 * t_id(i)),
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::super::FnFamily;
    use super::*;
    use crate::pwamap::PwaMap;
    use std::f64::consts::PI;

    pub(crate) fn fig1() -> impl MapFamily {
        FnFamily::new(
            |[w, sr]: [f64; 2]| {
                let c = (2.0 * PI * w).cos();
                let a_l = Matrix::from_rows(&[&[1.2 * c, 1.0], &[-0.36, 0.0]])?;
                let a_r = Matrix::from_rows(&[&[2.0 / sr * c, 1.0], &[-1.0 / (sr * sr), 0.0]])?;
                PwaMap::new(a_l, a_r, vec![1.0, 0.0])
            },
            1.0,
            [0.2, 0.4, 0.3, 1.5],
        )
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn fig1_two_sevenths_shrinking_point() {
        let fam = fig1();
        let tol = Tolerances::default();
        let p = RotationalParams::new(3, 2, 7).unwrap();
        let found = find_shrinking_point(&fam, &p, [0.28, 0.75], &tol).unwrap();
        // reference values from an independent dense-matrix computation
        assert!((found.xi[0] - 0.28411946).abs() < 1e-7);
        assert!((found.xi[1] - 0.75829458).abs() < 1e-7);
        assert!(found.residual.iter().all(|r| r.abs() <= 1e-10));
        assert!(found.verdict.is_ok());

        let u = unfold(&fam, found.xi, &p, 2e-2, &tol).unwrap();
        for (k, want) in u.k.iter().zip([0.6715, 0.6950, -1.4591, 0.4392]) {
            assert!((k - want).abs() < 1e-3, "{k} vs {want}");
        }
        assert!(u.k_signs_as_predicted());
        assert!(close(u.g1_coeff, u.g1_predicted, 0.05));
        assert!(close(u.g2_coeff, u.g2_predicted, 0.05));
        for b in &u.boundaries {
            assert!(
                b.samples.iter().all(|s| s.residual.abs() < 1e-12),
                "{}",
                b.label
            );
        }

        let psi1 = u.region("psi1");
        assert!(psi1.cycle("S").admissible() && psi1.cycle("S").stable());
        assert!(psi1.cycle("S_check").admissible() && psi1.cycle("S_check").real_above_one == 1);
        assert!(!psi1.cycle("S_hat").admissible());
        let psi2 = u.region("psi2");
        assert!(psi2.cycle("S").admissible() && psi2.cycle("S").real_above_one == 1);
        assert!(!psi2.cycle("S_check").admissible());
        assert!(psi2.cycle("S_hat").admissible());

        for i in valid_virtual_indices(&p) {
            let v = virtual_curves(&fam, found.xi, &p, i, 1e-3, &tol).unwrap();
            assert!(close(v.fitted_slope, v.predicted_slope, 0.05), "i = {i}");
            assert!(v.all_virtual());
        }
    }

    #[test]
    fn neighbouring_l_also_certifies() {
        let p = RotationalParams::new(2, 2, 7).unwrap();
        let found =
            find_shrinking_point(&fig1(), &p, [0.285, 0.94], &Tolerances::default()).unwrap();
        assert!((found.xi[0] - 0.28608648).abs() < 1e-7);
        assert!((found.xi[1] - 0.94341574).abs() < 1e-7);
        assert!(found.verdict.is_ok());
    }

    #[test]
    fn search_errors() {
        let fam = fig1();
        let tol = Tolerances::default();
        let p = RotationalParams::new(3, 2, 7).unwrap();
        assert!(matches!(
            find_shrinking_point(&fam, &p, [0.9, 0.9], &tol),
            Err(Error::NoConvergence { .. })
        ));
        let term = RotationalParams::new(6, 1, 7).unwrap();
        assert!(matches!(
            find_shrinking_point(&fam, &term, [0.28, 0.75], &tol),
            Err(Error::BadL { .. })
        ));
        assert!(matches!(
            virtual_curves(&fam, [0.28411946, 0.75829458], &p, 2, 1e-3, &tol),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn polyfit_recovers_quadratic() {
        let xs: Vec<f64> = (0..11).map(|i| -0.02 + 0.004 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 - 3.0 * x - 0.7 * x * x).collect();
        let c = polyfit(&xs, &ys, 2).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-12);
        assert!((c[1] + 3.0).abs() < 1e-10);
        assert!((c[2] + 0.7).abs() < 1e-7);
    }

    #[test]
    fn virtual_index_sets() {
        let p = RotationalParams::new(3, 2, 7).unwrap();
        assert_eq!(valid_virtual_indices(&p), vec![1, 4, 5]);
        let t = RotationalParams::new(4, 1, 5).unwrap();
        assert_eq!(valid_virtual_indices(&t), vec![1, 2]);
    }
}
