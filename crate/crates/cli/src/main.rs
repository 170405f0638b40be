use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use lenschain::cycles::{solution_nature, solve_cycle};
use lenschain::format::g17;
use lenschain::pwamap::PwaMap;
use lenschain::scan::{
    curves_csv, parse_family, scan_tongues, seed_from_grid, shrink_candidates, tongue_boundaries,
    ContinuationOptions, FamilySpec, ScanOptions, TongueGrid,
};
use lenschain::shrink::{
    check_nonterminating, check_terminating, find_shrinking_point, polygon, rigid_rotation_check,
    unfold, MapFamily, Verdict,
};
use lenschain::symseq::{
    count_primitive, count_rotational, rotational, rotational_params, RotationalParams,
    SymbolSequence,
};
use lenschain::{Error, Tolerances};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_NEGATIVE: u8 = 3;

/// Periodic solutions, resonance tongues and shrinking points of continuous
/// piecewise-affine maps.
#[derive(Parser)]
#[command(name = "lenschain", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Map file (`N`, `A_L`, `A_R`, `b`, optional `mu`)
    #[arg(long, global = true)]
    map: Option<PathBuf>,
    /// Family file, or the built-in name `fig1`
    #[arg(long, global = true)]
    family: Option<String>,
    /// Overrides the map or family value of mu [default: file value, else 1]
    #[arg(long, global = true, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Singularity threshold for determinant tests
    #[arg(long, global = true, default_value = "1e-9")]
    tol_sing: f64,
    /// Half-width of the switching-manifold band
    #[arg(long, global = true, default_value = "1e-8")]
    band: f64,
    /// Largest period detected by `scan`
    #[arg(long, global = true, default_value_t = 30)]
    nmax: usize,
    /// Scan grid as WIDTHxHEIGHT
    #[arg(long, global = true, default_value = "200x200", value_parser = parse_grid)]
    grid: (usize, usize),
    /// Parameter box p1_min,p1_max,p2_min,p2_max [default: family box]
    #[arg(long = "box", global = true, value_parser = parse_box, allow_hyphen_values = true)]
    domain: Option<[f64; 4]>,
    /// Machine-readable output file
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for scan and boundaries (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Seed for multi-start offsets
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone, Copy)]
struct Lmn {
    #[arg(long)]
    l: i64,
    #[arg(long)]
    m: i64,
    #[arg(long)]
    n: i64,
}

#[derive(Subcommand)]
enum Command {
    /// Number of primitive and of rotational sequences of length n
    Count { n: u64 },
    /// The rotational sequence S[l,m,n]
    Rot { l: i64, m: i64, n: i64 },
    /// (l, m, n) of a rotational sequence such as LLRRLRR
    Params { sequence: String },
    /// Solve for the S-cycle of --map
    Solve {
        #[arg(long)]
        seq: String,
    },
    /// Nature of the n-cycle solution system for a sequence
    Nature {
        #[arg(long)]
        seq: String,
    },
    /// Border-collision classification of the fixed points of --map
    Classify,
    /// Check the shrinking-point conditions for S[l,m,n] (l = n-1: terminating)
    CheckShrink {
        #[command(flatten)]
        lmn: Lmn,
    },
    /// Invariant polygon of a shrinking point
    Polygon {
        #[command(flatten)]
        lmn: Lmn,
        /// Number of sampled cycles along each edge
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Newton search for a shrinking point of --family
    FindShrink {
        #[command(flatten)]
        lmn: Lmn,
        /// Starting parameters p1,p2
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, conflicts_with = "from_grid")]
        guess: Option<[f64; 2]>,
        /// Grid CSV written by `scan`; candidates come from tongue-width minima
        #[arg(long)]
        from_grid: Option<PathBuf>,
    },
    /// Unfolding of a non-terminating shrinking point of --family
    Unfold {
        #[command(flatten)]
        lmn: Lmn,
        /// Parameters of the shrinking point (refined by Newton first)
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        at: [f64; 2],
        /// Chart radius
        #[arg(long, default_value_t = 2e-2)]
        radius: f64,
    },
    /// Label attractors of --family on a parameter grid
    Scan {
        /// Also start from both fixed points with seeded offsets
        #[arg(long)]
        multi_start: bool,
    },
    /// Trace the tongue boundaries of S[l,m,n] in --family
    Boundaries {
        #[command(flatten)]
        lmn: Lmn,
        /// Parameters where the S-cycle is admissible
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, conflicts_with = "from_grid")]
        seed_point: Option<[f64; 2]>,
        /// Grid CSV written by `scan`, used to pick the seed
        #[arg(long)]
        from_grid: Option<PathBuf>,
    },
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT")?;
    let w: usize = w.trim().parse().map_err(|_| "bad width")?;
    let h: usize = h.trim().parse().map_err(|_| "bad height")?;
    if w == 0 || h == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok((w, h))
}

fn parse_floats<const K: usize>(s: &str) -> Result<[f64; K], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{t}` is not a number"))
        })
        .collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|_| format!("expected {K} comma-separated numbers"))
}

fn parse_box(s: &str) -> Result<[f64; 4], String> {
    let b = parse_floats::<4>(s)?;
    if b[0] > b[1] || b[2] > b[3] {
        return Err("box must be p1_min,p1_max,p2_min,p2_max".into());
    }
    Ok(b)
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    parse_floats::<2>(s)
}

struct Ctx {
    g: Global,
}

impl Ctx {
    fn tol(&self) -> Tolerances {
        Tolerances {
            sing: self.g.tol_sing,
            band: self.g.band,
        }
    }

    fn map(&self) -> anyhow::Result<(PwaMap, f64)> {
        let path = self
            .g
            .map
            .as_ref()
            .ok_or_else(|| usage("--map is required"))?;
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let (map, mu) = PwaMap::from_config(&text)?;
        Ok((map, self.g.mu.or(mu).unwrap_or(1.0)))
    }

    fn family(&self) -> anyhow::Result<FamilySpec> {
        let name = self
            .g
            .family
            .as_ref()
            .ok_or_else(|| usage("--family is required"))?;
        let text = if name == "fig1" {
            name.clone()
        } else {
            std::fs::read_to_string(name).with_context(|| format!("reading {name}"))?
        };
        let mut spec = parse_family(&text)?;
        if let Some(mu) = self.g.mu {
            spec = spec.with_mu(mu)?;
        }
        if let Some(b) = self.g.domain {
            spec = spec.with_domain(b)?;
        }
        Ok(spec)
    }

    fn write_out(&self, text: &str) -> anyhow::Result<()> {
        if let Some(path) = &self.g.out {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: &str) -> anyhow::Error {
    anyhow!(Usage(msg.to_string()))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() || err.downcast_ref::<std::io::Error>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(
            Error::NotCoprime { .. }
            | Error::BadL { .. }
            | Error::BadSequence(_)
            | Error::Dimension(_)
            | Error::ContinuityViolated(_)
            | Error::Parse { .. }
            | Error::Eval(_)
            | Error::Config(_)
            | Error::SeedNotAdmissible(_),
        ) => 2,
        Some(_) => 4,
        None => 2,
    }
}

fn params(lmn: Lmn) -> anyhow::Result<RotationalParams> {
    Ok(RotationalParams::new(lmn.l, lmn.m, lmn.n)?)
}

fn sequence(text: &str) -> anyhow::Result<SymbolSequence> {
    Ok(text.parse::<SymbolSequence>()?)
}

fn check(map: &PwaMap, mu: f64, p: &RotationalParams, tol: &Tolerances) -> anyhow::Result<Verdict> {
    Ok(if p.l == p.n - 1 {
        check_terminating(map, mu, p.m, p.n, tol)?
    } else {
        check_nonterminating(map, mu, p.l, p.m, p.n, tol)?
    })
}

fn grid_domain(grid: &TongueGrid) -> [f64; 4] {
    let fold = |f: fn(&lenschain::scan::Cell) -> f64| {
        grid.cells
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    };
    let (a, b) = fold(|c| c.p1);
    let (c, d) = fold(|c| c.p2);
    [a, b, c, d]
}

fn read_grid(path: &PathBuf) -> anyhow::Result<TongueGrid> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(TongueGrid::from_csv(&text)?)
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let ctx = Ctx { g: cli.global };
    let tol = ctx.tol();
    match cli.command {
        Command::Count { n } => {
            if n == 0 || n > 120 {
                return Err(usage("n must be in 1..=120"));
            }
            println!("primitive: {}", count_primitive(n));
            println!("rotational: {}", count_rotational(n));
        }
        Command::Rot { l, m, n } => println!("{}", rotational(l, m, n)?),
        Command::Params { sequence: text } => {
            let s = sequence(&text)?;
            match rotational_params(&s) {
                Some(p) => println!("{p} d={}", p.d),
                None => {
                    println!("not rotational");
                    return Ok(EXIT_NEGATIVE);
                }
            }
        }
        Command::Solve { seq } => {
            let (map, mu) = ctx.map()?;
            let s = sequence(&seq)?;
            let sol = solve_cycle(&map, mu, &s, &tol)?;
            println!("sequence: {s}");
            println!("admissibility: {}", sol.admissibility);
            println!("det_i_minus_m: {}", g17(sol.det_i_minus_m));
            println!("det_p: {}", g17(sol.det_p));
            println!(
                "spectral_radius: {}",
                g17(sol.multipliers.spectral_radius())
            );
            println!("stable: {}", sol.is_stable());
            for (i, x) in sol.points.iter().enumerate() {
                let xs: Vec<String> = x.iter().map(|v| g17(*v)).collect();
                println!("x{i}: ({})", xs.join(", "));
            }
            ctx.write_out(&sol.to_csv())?;
            if !sol.admissibility.is_admissible() {
                return Ok(EXIT_NEGATIVE);
            }
        }
        Command::Nature { seq } => {
            let (map, mu) = ctx.map()?;
            let s = sequence(&seq)?;
            let nat = solution_nature(&map, mu, &s, &tol)?;
            println!("nature: {}", nat.cell);
            println!("det_i_minus_m: {}", g17(nat.det_i_minus_m));
            println!("det_p: {}", g17(nat.det_p));
        }
        Command::Classify => {
            let (map, _) = ctx.map()?;
            println!("{}", map.classify_border_collision(&tol)?);
        }
        Command::CheckShrink { lmn } => {
            let (map, mu) = ctx.map()?;
            let p = params(lmn)?;
            match check(&map, mu, &p, &tol)? {
                Ok(cert) => {
                    print!("{}", cert.report());
                    ctx.write_out(&cert.p_orbit.to_csv())?;
                }
                Err(fail) => {
                    print!("{}", fail.report());
                    return Ok(EXIT_NEGATIVE);
                }
            }
        }
        Command::Polygon { lmn, samples } => {
            let (map, mu) = ctx.map()?;
            let p = params(lmn)?;
            let cert = match check(&map, mu, &p, &tol)? {
                Ok(c) => c,
                Err(fail) => {
                    print!("{}", fail.report());
                    return Ok(EXIT_NEGATIVE);
                }
            };
            let poly = polygon(&cert, samples)?;
            println!("planarity_defect: {}", g17(poly.planarity_defect));
            println!("min_edge_separation: {}", g17(poly.min_edge_separation));
            println!("self_intersection_free: {}", poly.self_intersection_free());
            println!("max_wrap_residual: {}", g17(poly.max_wrap_residual()));
            println!(
                "rigid_rotation_error: {}",
                g17(rigid_rotation_check(&cert, 100))
            );
            if let Some(c) = &poly.construction {
                println!("max_vertex_gap: {}", g17(c.max_vertex_gap));
            }
            ctx.write_out(&poly.to_csv())?;
        }
        Command::FindShrink {
            lmn,
            guess,
            from_grid,
        } => {
            let p = params(lmn)?;
            let mut spec = ctx.family()?;
            let guesses = match (guess, from_grid) {
                (Some(g), None) => vec![g],
                (None, Some(path)) => {
                    let grid = read_grid(&path)?;
                    if ctx.g.domain.is_none() {
                        spec = spec.with_domain(grid_domain(&grid))?;
                    }
                    let opts = ContinuationOptions {
                        threads: ctx.g.threads,
                        tol,
                        ..ContinuationOptions::default()
                    };
                    let (_, profile) = shrink_candidates(&spec, &grid, &p, &opts)?;
                    let c = profile.candidates();
                    let sorted: Vec<[f64; 2]> = {
                        let mut idx: Vec<usize> = (0..c.len()).collect();
                        idx.sort_by(|&a, &b| {
                            profile.samples[profile.minima[a]]
                                .width
                                .total_cmp(&profile.samples[profile.minima[b]].width)
                        });
                        idx.into_iter().map(|i| c[i]).collect()
                    };
                    println!("candidates: {}", sorted.len());
                    sorted
                }
                _ => return Err(usage("give exactly one of --guess or --from-grid")),
            };
            let mut last_err = None;
            for g in guesses {
                match find_shrinking_point(&spec, &p, g, &tol) {
                    Ok(found) => {
                        println!("xi: {}, {}", g17(found.xi[0]), g17(found.xi[1]));
                        println!("iterations: {}", found.iterations);
                        println!(
                            "residual: {}, {}",
                            g17(found.residual[0]),
                            g17(found.residual[1])
                        );
                        match &found.verdict {
                            Ok(cert) => {
                                print!("{}", cert.report());
                                let map = spec.map_at(found.xi)?;
                                ctx.write_out(&map.to_config(Some(spec.mu)))?;
                                return Ok(0);
                            }
                            Err(fail) => print!("{}", fail.report()),
                        }
                    }
                    Err(e) => {
                        println!("search from {}, {} failed: {e}", g17(g[0]), g17(g[1]));
                        last_err = Some(e);
                    }
                }
            }
            return match last_err {
                Some(e) => Err(e.into()),
                None => Ok(EXIT_NEGATIVE),
            };
        }
        Command::Unfold { lmn, at, radius } => {
            let p = params(lmn)?;
            let spec = ctx.family()?;
            let found = find_shrinking_point(&spec, &p, at, &tol)?;
            if let Err(fail) = &found.verdict {
                print!("{}", fail.report());
                return Ok(EXIT_NEGATIVE);
            }
            let u = unfold(&spec, found.xi, &p, radius, &tol)?;
            print!("{}", u.report());
            ctx.write_out(&u.boundaries_csv())?;
        }
        Command::Scan { multi_start } => {
            let spec = ctx.family()?;
            let opts = ScanOptions {
                multi_start,
                seed: ctx.g.seed,
                threads: ctx.g.threads,
                tol,
                ..ScanOptions::default()
            };
            let grid = scan_tongues(&spec, ctx.g.grid, ctx.g.nmax, &opts)?;
            let mut counts: Vec<(String, usize)> = Vec::new();
            for c in &grid.cells {
                let key = c.label.to_string();
                match counts.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, n)) => *n += 1,
                    None => counts.push((key, 1)),
                }
            }
            counts.sort();
            println!("cells: {}", grid.cells.len());
            for (k, n) in counts {
                println!("{k}: {n}");
            }
            ctx.write_out(&grid.to_csv())?;
        }
        Command::Boundaries {
            lmn,
            seed_point,
            from_grid,
        } => {
            let p = params(lmn)?;
            let mut spec = ctx.family()?;
            let seed = match (seed_point, from_grid) {
                (Some(s), None) => s,
                (None, Some(path)) => {
                    let grid = read_grid(&path)?;
                    if ctx.g.domain.is_none() {
                        spec = spec.with_domain(grid_domain(&grid))?;
                    }
                    seed_from_grid(&grid, &p)
                        .ok_or_else(|| usage(&format!("no grid cell is labelled {p}")))?
                }
                _ => return Err(usage("give exactly one of --seed-point or --from-grid")),
            };
            let opts = ContinuationOptions {
                threads: ctx.g.threads,
                tol,
                ..ContinuationOptions::default()
            };
            let traces = tongue_boundaries(&spec, &p, seed, &opts)?;
            for t in &traces {
                println!(
                    "curve {} (index {}): {} points, stops {:?}",
                    t.label,
                    t.index,
                    t.points.len(),
                    t.stops
                );
            }
            ctx.write_out(&curves_csv(&traces))?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
