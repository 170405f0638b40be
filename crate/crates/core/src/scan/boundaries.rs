//! Continuation of the curves on which a point of an `S`-cycle meets the
//! switching manifold, and tongue-width profiles between two such curves.

use crate::cycles::{cycle_matrices, det_i_minus, solve_cycle};
use crate::error::{Error, Result};
use crate::format::g17;
use crate::roots::brent;
use crate::scan::{CellLabel, TongueGrid};
use crate::shrink::MapFamily;
use crate::symseq::{RotationalParams, SymbolSequence};
use crate::Tolerances;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    /// step length in box-normalised coordinates
    pub step: f64,
    /// steps per direction
    pub max_steps: usize,
    /// largest admissible `|s_index| / max(1, ‖x_index‖)` on a traced point
    pub s_tol: f64,
    pub threads: usize,
    pub tol: Tolerances,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            step: 5e-3,
            max_steps: 2000,
            s_tol: 1e-9,
            threads: 0,
            tol: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `det(I − M_S)` changed sign or became singular
    HitSingular,
    LeftBox,
    Budget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub p: [f64; 2],
    pub s_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    /// cycle index whose first component vanishes, in `0..n`
    pub index: usize,
    /// `0`, `-d`, `(l-1)d` or `ld`
    pub label: &'static str,
    /// ordered along the curve; empty when no crossing was found near the seed
    pub points: Vec<CurvePoint>,
    /// why each end stopped (backward, forward)
    pub stops: [StopReason; 2],
}

impl BoundaryTrace {
    pub fn polyline(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|c| c.p).collect()
    }
}

pub fn curves_csv(traces: &[BoundaryTrace]) -> String {
    let mut out = String::from("curve_id,index,p1,p2,s_residual\n");
    for t in traces {
        for (i, c) in t.points.iter().enumerate() {
            out += &format!(
                "{},{i},{},{},{}\n",
                t.label,
                g17(c.p[0]),
                g17(c.p[1]),
                g17(c.s_residual)
            );
        }
    }
    out
}

/// Parses [`curves_csv`] output into `(curve_id, points)` in file order.
pub fn parse_curves_csv(text: &str) -> Result<Vec<(String, Vec<[f64; 2]>)>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("curve_id,index,p1,p2,s_residual") {
        return Err(Error::Parse {
            line: 1,
            col: 1,
            msg: "expected header `curve_id,index,p1,p2,s_residual`".into(),
        });
    }
    let mut out: Vec<(String, Vec<[f64; 2]>)> = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::Parse {
            line: i + 2,
            col: 1,
            msg: "expected curve_id,index,p1,p2,s_residual".into(),
        };
        if f.len() != 5 {
            return Err(bad());
        }
        let p = [
            f[2].parse().map_err(|_| bad())?,
            f[3].parse().map_err(|_| bad())?,
        ];
        match out.last_mut() {
            Some((id, pts)) if id == f[0] => pts.push(p),
            _ => out.push((f[0].to_string(), vec![p])),
        }
    }
    Ok(out)
}

/// Box-normalised coordinates `u ∈ [0, 1]²`.
#[derive(Clone, Copy)]
struct Frame {
    lo: [f64; 2],
    span: [f64; 2],
}

impl Frame {
    fn new(d: [f64; 4]) -> Frame {
        Frame {
            lo: [d[0], d[2]],
            span: [
                (d[1] - d[0]).max(f64::MIN_POSITIVE),
                (d[3] - d[2]).max(f64::MIN_POSITIVE),
            ],
        }
    }
    fn to_p(&self, u: [f64; 2]) -> [f64; 2] {
        [
            self.lo[0] + self.span[0] * u[0],
            self.lo[1] + self.span[1] * u[1],
        ]
    }
    fn to_u(&self, p: [f64; 2]) -> [f64; 2] {
        [
            (p[0] - self.lo[0]) / self.span[0],
            (p[1] - self.lo[1]) / self.span[1],
        ]
    }
}

fn inside(u: [f64; 2]) -> bool {
    (0.0..=1.0).contains(&u[0]) && (0.0..=1.0).contains(&u[1])
}

struct Tracer<'a, F: MapFamily + ?Sized> {
    family: &'a F,
    frame: Frame,
    s: SymbolSequence,
    /// `S^{(index)}`, whose `det P` vanishes exactly where `s_index` does
    shifted: SymbolSequence,
    index: usize,
    opts: ContinuationOptions,
}

impl<F: MapFamily + ?Sized> Tracer<'_, F> {
    /// `det P_{S^{(index)}}`: same zero set as `s_index` off `det(I − M_S) = 0`
    /// but smooth across it.
    fn g(&self, u: [f64; 2]) -> f64 {
        self.family
            .map_at(self.frame.to_p(u))
            .map_or(f64::NAN, |m| cycle_matrices(&m, &self.shifted).p.det())
    }

    fn det_i_minus_m(&self, u: [f64; 2]) -> f64 {
        self.family
            .map_at(self.frame.to_p(u))
            .map_or(f64::NAN, |m| det_i_minus(&cycle_matrices(&m, &self.s).m))
    }

    /// `s_index / max(1, ‖x_index‖)` of the solved cycle, or `None` when the
    /// system is singular.
    fn s_residual(&self, u: [f64; 2]) -> Option<f64> {
        let map = self.family.map_at(self.frame.to_p(u)).ok()?;
        let sol = solve_cycle(&map, self.family.mu(), &self.s, &self.opts.tol).ok()?;
        let x = &sol.points[self.index];
        Some(x[0] / crate::smallmat::norm2(x).max(1.0))
    }

    fn gradient(&self, u: [f64; 2]) -> [f64; 2] {
        let h = 1e-7;
        [
            (self.g([u[0] + h, u[1]]) - self.g([u[0] - h, u[1]])) / (2.0 * h),
            (self.g([u[0], u[1] + h]) - self.g([u[0], u[1] - h])) / (2.0 * h),
        ]
    }

    /// Newton along `normal` from `q`, bracketed fallback if Newton wanders.
    fn correct(&self, q: [f64; 2], normal: [f64; 2]) -> Option<[f64; 2]> {
        let at = |t: f64| [q[0] + t * normal[0], q[1] + t * normal[1]];
        let line = |t: f64| self.g(at(t));
        let mut t = 0.0;
        for _ in 0..30 {
            let v = line(t);
            if !v.is_finite() {
                break;
            }
            let h = 1e-7;
            let dv = (line(t + h) - line(t - h)) / (2.0 * h);
            if dv == 0.0 || !dv.is_finite() {
                break;
            }
            let dt = v / dv;
            t -= dt;
            if t.abs() > 10.0 * self.opts.step {
                break;
            }
            if dt.abs() <= 1e-15 {
                return Some(at(t));
            }
        }
        let r = self.opts.step;
        brent(line, -r, r, 1e-15, 200).ok().map(at)
    }

    /// A point on the curve near `seed`, searching along the four axis rays.
    fn start(&self, seed: [f64; 2]) -> Option<[f64; 2]> {
        let g0 = self.g(seed);
        let d0 = self.det_i_minus_m(seed);
        for dir in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            let mut prev = 0.0;
            let mut k = 1;
            loop {
                let t = k as f64 * self.opts.step;
                let u = [seed[0] + t * dir[0], seed[1] + t * dir[1]];
                if !inside(u) || self.det_i_minus_m(u).signum() != d0.signum() {
                    break;
                }
                if self.g(u).signum() != g0.signum() {
                    let root = brent(
                        |t| self.g([seed[0] + t * dir[0], seed[1] + t * dir[1]]),
                        prev,
                        t,
                        1e-15,
                        200,
                    )
                    .ok()?;
                    return Some([seed[0] + root * dir[0], seed[1] + root * dir[1]]);
                }
                prev = t;
                k += 1;
            }
        }
        None
    }

    /// Follows the curve from `start` with initial direction `sign · tangent`.
    fn branch(&self, start: [f64; 2], sign: f64) -> (Vec<CurvePoint>, StopReason) {
        let mut out = Vec::new();
        let grad = self.gradient(start);
        let gn = grad[0].hypot(grad[1]);
        if gn == 0.0 || !gn.is_finite() {
            return (out, StopReason::Budget);
        }
        let mut tangent = [-sign * grad[1] / gn, sign * grad[0] / gn];
        let mut here = start;
        let mut d_here = self.det_i_minus_m(here);
        let mut h = self.opts.step;
        let mut steps = 0;
        while steps < self.opts.max_steps {
            let q = [here[0] + h * tangent[0], here[1] + h * tangent[1]];
            let normal = [-tangent[1], tangent[0]];
            let Some(next) = self.correct(q, normal) else {
                h *= 0.5;
                if h < 1e-6 * self.opts.step {
                    return (out, StopReason::Budget);
                }
                continue;
            };
            if !inside(next) {
                return (out, StopReason::LeftBox);
            }
            let d_next = self.det_i_minus_m(next);
            let singular = d_next.signum() != d_here.signum() || self.s_residual(next).is_none();
            if singular {
                self.approach(here, next, d_here, &mut out);
                return (out, StopReason::HitSingular);
            }
            let Some(res) = self.s_residual(next) else {
                return (out, StopReason::HitSingular);
            };
            if res.abs() > self.opts.s_tol {
                h *= 0.5;
                if h < 1e-6 * self.opts.step {
                    return (out, StopReason::Budget);
                }
                continue;
            }
            let secant = [next[0] - here[0], next[1] - here[1]];
            let len = secant[0].hypot(secant[1]);
            if len > 0.0 {
                tangent = [secant[0] / len, secant[1] / len];
            }
            out.push(CurvePoint {
                p: self.frame.to_p(next),
                s_residual: res,
            });
            here = next;
            d_here = d_next;
            h = (2.0 * h).min(self.opts.step);
            steps += 1;
        }
        (out, StopReason::Budget)
    }

    /// Bisects towards the crossing of `det(I − M_S) = 0` between `a` and
    /// `b`, keeping points that still meet the residual contract.
    fn approach(&self, mut a: [f64; 2], mut b: [f64; 2], d_a: f64, out: &mut Vec<CurvePoint>) {
        for _ in 0..40 {
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let chord = [b[0] - a[0], b[1] - a[1]];
            let len = chord[0].hypot(chord[1]);
            if len < 1e-12 {
                break;
            }
            let normal = [-chord[1] / len, chord[0] / len];
            let Some(m) = self.correct(mid, normal) else {
                break;
            };
            let d_m = self.det_i_minus_m(m);
            if d_m.signum() == d_a.signum() {
                match self.s_residual(m) {
                    Some(r) if r.abs() <= self.opts.s_tol => {
                        out.push(CurvePoint {
                            p: self.frame.to_p(m),
                            s_residual: r,
                        });
                        a = m;
                    }
                    _ => break,
                }
            } else {
                b = m;
            }
        }
    }
}

/// Traces the four curves on which `s_i` of the `S`-cycle vanishes,
/// `i ∈ {0, −d, (l−1)d, ld}`, starting near `seed` (where the `S`-cycle must
/// be admissible).
pub fn tongue_boundaries<F: MapFamily + ?Sized>(
    family: &F,
    params: &RotationalParams,
    seed: [f64; 2],
    opts: &ContinuationOptions,
) -> Result<Vec<BoundaryTrace>> {
    let s = params.sequence();
    let map = family.map_at(seed)?;
    match solve_cycle(&map, family.mu(), &s, &opts.tol) {
        Ok(sol) if sol.admissibility.is_admissible() => {}
        Ok(sol) => {
            return Err(Error::SeedNotAdmissible(format!(
                "{params} is {} at the seed",
                sol.admissibility
            )))
        }
        Err(e) => return Err(Error::SeedNotAdmissible(e.to_string())),
    }
    let (l, d, n) = (params.l, params.d, params.n);
    let wanted: [(&'static str, i64); 4] =
        [("0", 0), ("-d", -d), ("(l-1)d", (l - 1) * d), ("ld", l * d)];
    let frame = Frame::new(family.domain());
    let useed = frame.to_u(seed);
    let trace = |(label, raw): (&'static str, i64)| -> Result<BoundaryTrace> {
        let index = raw.rem_euclid(n) as usize;
        let tracer = Tracer {
            family,
            frame,
            s: s.clone(),
            shifted: s.cyclic(index as i64),
            index,
            opts: *opts,
        };
        let Some(start) = tracer.start(useed) else {
            return Ok(BoundaryTrace {
                index,
                label,
                points: Vec::new(),
                stops: [StopReason::Budget; 2],
            });
        };
        let first = CurvePoint {
            p: tracer.frame.to_p(start),
            s_residual: tracer.s_residual(start).ok_or_else(|| {
                Error::ContinuationStalled(format!("singular system at the start of curve {label}"))
            })?,
        };
        let (mut back, stop_back) = tracer.branch(start, -1.0);
        let (fwd, stop_fwd) = tracer.branch(start, 1.0);
        back.reverse();
        back.push(first);
        back.extend(fwd);
        Ok(BoundaryTrace {
            index,
            label,
            points: back,
            stops: [stop_back, stop_fwd],
        })
    };
    let run = || {
        wanted
            .into_par_iter()
            .map(trace)
            .collect::<Result<Vec<_>>>()
    };
    if opts.threads == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run)
    }
}

/// The labelled cell of `grid` with the largest admissibility margin.
pub fn seed_from_grid(grid: &TongueGrid, params: &RotationalParams) -> Option<[f64; 2]> {
    grid.with_label(CellLabel::Periodic(*params))
        .filter(|c| c.margin.is_finite())
        .fold(None::<&crate::scan::Cell>, |best, c| match best {
            Some(b) if b.margin >= c.margin => Some(b),
            _ => Some(c),
        })
        .map(|c| [c.p1, c.p2])
}

/// Shrinking-point candidates of the `S[l,m,n]` tongue: traces the
/// boundaries from the best grid seed and returns the width minima between
/// the curves of indices `0` and `(l−1)d`, closest first.
pub fn shrink_candidates<F: MapFamily + ?Sized>(
    family: &F,
    grid: &TongueGrid,
    params: &RotationalParams,
    opts: &ContinuationOptions,
) -> Result<(Vec<BoundaryTrace>, WidthProfile)> {
    let seed = seed_from_grid(grid, params)
        .ok_or_else(|| Error::SeedNotAdmissible(format!("no grid cell is labelled {params}")))?;
    let traces = tongue_boundaries(family, params, seed, opts)?;
    let curve = |label: &str| {
        traces
            .iter()
            .find(|t| t.label == label)
            .map(BoundaryTrace::polyline)
            .unwrap_or_default()
    };
    let mut profile = width_profile(&curve("0"), &curve("(l-1)d"), family.domain(), 400, 0.05);
    profile.minima.sort_by(|&a, &b| {
        profile.samples[a]
            .width
            .total_cmp(&profile.samples[b].width)
    });
    Ok((traces, profile))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidthSample {
    pub arclength: f64,
    pub width: f64,
    pub on_a: [f64; 2],
    pub on_b: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidthProfile {
    pub samples: Vec<WidthSample>,
    /// indices into `samples` of strict local minima below the threshold,
    /// in arclength order unless sorted by the caller
    pub minima: Vec<usize>,
}

impl WidthProfile {
    /// Midpoints of the minimal pairs, in parameter coordinates.
    pub fn candidates(&self) -> Vec<[f64; 2]> {
        self.minima
            .iter()
            .map(|&i| {
                let s = &self.samples[i];
                [0.5 * (s.on_a[0] + s.on_b[0]), 0.5 * (s.on_a[1] + s.on_b[1])]
            })
            .collect()
    }
}

fn closest_on_segment(x: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let d = [b[0] - a[0], b[1] - a[1]];
    let dd = d[0] * d[0] + d[1] * d[1];
    let t = if dd == 0.0 {
        0.0
    } else {
        (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / dd).clamp(0.0, 1.0)
    };
    [a[0] + t * d[0], a[1] + t * d[1]]
}

/// Distances from `count` arclength-equispaced points of `a` to the
/// polyline `b`, measured in the box-normalised frame of `domain`.
pub fn width_profile(
    a: &[[f64; 2]],
    b: &[[f64; 2]],
    domain: [f64; 4],
    count: usize,
    threshold: f64,
) -> WidthProfile {
    let frame = Frame::new(domain);
    let ua: Vec<[f64; 2]> = a.iter().map(|p| frame.to_u(*p)).collect();
    let ub: Vec<[f64; 2]> = b.iter().map(|p| frame.to_u(*p)).collect();
    if ua.is_empty() || ub.is_empty() {
        return WidthProfile {
            samples: Vec::new(),
            minima: Vec::new(),
        };
    }
    let mut cum = vec![0.0];
    for w in ua.windows(2) {
        cum.push(cum.last().unwrap() + (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]));
    }
    let total = *cum.last().unwrap();
    let count = count.max(2);
    let mut samples = Vec::with_capacity(count);
    let mut seg = 0;
    for k in 0..count {
        let s = total * k as f64 / (count - 1) as f64;
        while seg + 1 < cum.len() - 1 && cum[seg + 1] < s {
            seg += 1;
        }
        let x = if ua.len() == 1 {
            ua[0]
        } else {
            let len = cum[seg + 1] - cum[seg];
            let t = if len > 0.0 {
                ((s - cum[seg]) / len).clamp(0.0, 1.0)
            } else {
                0.0
            };
            [
                ua[seg][0] + t * (ua[seg + 1][0] - ua[seg][0]),
                ua[seg][1] + t * (ua[seg + 1][1] - ua[seg][1]),
            ]
        };
        let mut best = (f64::INFINITY, ub[0]);
        let pairs: Vec<([f64; 2], [f64; 2])> = if ub.len() == 1 {
            vec![(ub[0], ub[0])]
        } else {
            ub.windows(2).map(|w| (w[0], w[1])).collect()
        };
        for (p, q) in pairs {
            let c = closest_on_segment(x, p, q);
            let dist = (x[0] - c[0]).hypot(x[1] - c[1]);
            if dist < best.0 {
                best = (dist, c);
            }
        }
        samples.push(WidthSample {
            arclength: s,
            width: best.0,
            on_a: frame.to_p(x),
            on_b: frame.to_p(best.1),
        });
    }
    let w: Vec<f64> = samples.iter().map(|s| s.width).collect();
    let minima = (0..w.len())
        .filter(|&i| {
            let left = i == 0 || w[i] < w[i - 1];
            let right = i + 1 == w.len() || w[i] < w[i + 1];
            left && right && w[i] < threshold && w.len() > 1
        })
        .collect();
    WidthProfile { samples, minima }
}
