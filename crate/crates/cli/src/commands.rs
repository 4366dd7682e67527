use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use firemap::graph::{DynamicsMatrix, GridShape, SpreadGraph};
use firemap::intervention::{
    solve_intervention, Budget, ControlMatrix, ControlMode, InterventionOptions,
    InterventionReport, TargetKind,
};
use firemap::routing::{
    solve_tsp, targets_to_waypoints, with_depot, write_tour, Tour, TspMethod, MAX_EXACT_WAYPOINTS,
};
use firemap::simulate::{
    apply_control, ca_replicate, simulate_ca, simulate_linear, simulate_nonlinear, SimConfig,
    Trajectory,
};
use firemap::surveillance::{priority_direct, priority_lp, write_raster, write_values};
use firemap::MicroLp;

use crate::input::{InputArgs, RateArgs};
use crate::manifest::Manifest;
use crate::output::{sibling, Outputs};

fn grid_of(graph: &SpreadGraph) -> Option<GridShape> {
    graph.geometry().and_then(|g| g.grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorityMethod {
    /// Sparse M-matrix solve.
    Direct,
    /// Linear program.
    Lp,
}

#[derive(Debug, Args)]
pub struct SurveilArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    rate: RateArgs,
    #[arg(long, value_enum, default_value_t = PriorityMethod::Direct)]
    method: PriorityMethod,
    /// Number of highest-priority nodes to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Normalized priority raster.
    #[arg(long)]
    out: PathBuf,
}

pub fn surveil(args: SurveilArgs, mut m: Manifest) -> Result<()> {
    let loaded = args.input.load(&mut m)?;
    let r = args.rate.resolve(&loaded.a, &mut m)?;
    let costs = loaded.graph.costs();
    let map = match args.method {
        PriorityMethod::Direct => priority_direct(&loaded.a, &costs, r)?,
        PriorityMethod::Lp => priority_lp(&loaded.a, &costs, r, &MicroLp)?,
    };
    m.set("method", format!("{:?}", args.method).to_lowercase());
    m.set("out", args.out.display());

    let mut out = Outputs::default();
    out.add(&args.out, write_raster(&map.p, grid_of(&loaded.graph)));
    out.commit(&args.out, &m)?;

    println!("r {r}");
    println!("sum_p {:.6}", map.total());
    let max = map.p.iter().copied().fold(0.0, f64::max);
    println!("rank,node,priority,normalized");
    for (rank, i) in map.ranking().into_iter().take(args.top).enumerate() {
        let norm = if max > 0.0 { map.p[i] / max } else { 0.0 };
        println!("{},{i},{:.6},{norm:.6}", rank + 1, map.p[i]);
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct InterveneArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    rate: RateArgs,
    /// Resource budget.
    #[arg(long)]
    gamma: f64,
    /// Which entries of the control may be nonzero: edges, nodes or both.
    #[arg(long, default_value = "edges")]
    mode: ControlMode,
    /// Relative change of the cost-to-go that ends the iteration.
    #[arg(long, default_value_t = InterventionOptions::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = InterventionOptions::default().max_iter)]
    max_iter: usize,
    /// Intervention report.
    #[arg(long)]
    out: PathBuf,
    /// Control listing [default: <out>.k.csv].
    #[arg(long)]
    k_out: Option<PathBuf>,
    /// Normalized cost-to-go raster [default: <out>.raster.csv].
    #[arg(long)]
    raster: Option<PathBuf>,
}

/// Lossless control listing, read back by `simulate --control`.
fn write_control(k: &ControlMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# control {} nodes, mode {}", k.n(), k.mode().as_str());
    out.push_str("row,col,value\n");
    for &(i, j, v) in k.entries() {
        let _ = writeln!(out, "{i},{j},{v}");
    }
    out
}

fn read_control(path: &Path, a: &DynamicsMatrix) -> Result<ControlMatrix> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().context("empty control file")?;
    let fields: Vec<&str> = head.split_ascii_whitespace().collect();
    let mode: ControlMode = match fields.as_slice() {
        ["#", "control", n, "nodes,", "mode", mode] => {
            let n: usize = n.parse().context("control header: bad node count")?;
            ensure!(n == a.n(), "control is for {n} nodes, graph has {}", a.n());
            mode.parse()?
        }
        _ => bail!("{}: not a control listing", path.display()),
    };
    match lines.next() {
        Some((_, "row,col,value")) => {}
        _ => bail!("{}: missing 'row,col,value' header", path.display()),
    }
    let mut entries = Vec::new();
    for (k, line) in lines {
        let parsed = (|| {
            let mut f = line.split(',');
            let i: usize = f.next()?.trim().parse().ok()?;
            let j: usize = f.next()?.trim().parse().ok()?;
            let v: f64 = f.next()?.trim().parse().ok()?;
            f.next().is_none().then_some((i, j, v))
        })();
        let (i, j, v) = parsed.with_context(|| {
            format!("{} line {}: expected row,col,value", path.display(), k + 1)
        })?;
        // listings from other tools may overshoot a cap by rounding
        let cap = if i != j && i < a.n() && j < a.n() {
            a.get(i, j)
        } else {
            f64::INFINITY
        };
        let v = if v > cap && v <= cap + 1e-6 { cap } else { v };
        entries.push((i, j, v));
    }
    Ok(ControlMatrix::new(a, mode, entries)?)
}

pub fn intervene(args: InterveneArgs, mut m: Manifest) -> Result<()> {
    let budget = Budget::new(args.gamma)?;
    let opts = InterventionOptions {
        tol: args.tol,
        max_iter: args.max_iter,
    };
    let k_out = args
        .k_out
        .clone()
        .unwrap_or_else(|| sibling(&args.out, "k.csv"));
    let raster = args
        .raster
        .clone()
        .unwrap_or_else(|| sibling(&args.out, "raster.csv"));
    let loaded = args.input.load(&mut m)?;
    let r = args.rate.resolve(&loaded.a, &mut m)?;
    m.set("gamma", args.gamma);
    m.set("mode", args.mode.as_str());
    m.set("tol", opts.tol);
    m.set("max_iter", opts.max_iter);
    m.set("out", args.out.display());
    m.set("k_out", k_out.display());
    m.set("raster", raster.display());

    let costs = loaded.graph.costs();
    let res = solve_intervention(&loaded.a, &costs, r, budget, args.mode, opts, &MicroLp)?;
    let report = InterventionReport::new(&res, r, args.gamma, loaded.graph.geometry());

    let mut out = Outputs::default();
    out.add(&args.out, report.to_text());
    out.add(&k_out, write_control(&res.k));
    out.add(&raster, write_raster(&res.p, grid_of(&loaded.graph)));
    out.commit(&args.out, &m)?;

    if !res.converged {
        eprintln!(
            "warning: iteration did not converge in {} steps; reporting the best iterate",
            res.iterations
        );
    }
    if res.rescaled {
        eprintln!("warning: control rescaled to meet the budget");
    }
    println!("converged {}", res.converged);
    println!("iterations {}", res.iterations);
    println!("sum_p_surveillance {:.6}", res.surveillance_total);
    println!("sum_p {:.6}", res.total());
    println!("budget_used {:.6}", res.budget_used);
    println!("targets {}", report.targets.len());
    for t in report.targets.iter().take(10) {
        match t.kind {
            TargetKind::Edge { src, dst } => println!("edge {src} {dst} {:.6}", t.amount),
            TargetKind::Node(i) => println!("node {i} {:.6}", t.amount),
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// Stochastic cellular automaton.
    Ca,
    /// Mean-field ODE.
    Nonlinear,
    /// Linear upper bound x' = A x.
    Linear,
}

#[derive(Debug, Args)]
pub struct SimFlags {
    /// Initially burning node ids, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    ignite: Vec<usize>,
    #[arg(long, default_value_t = SimConfig::default().dt)]
    dt: f64,
    #[arg(long, default_value_t = SimConfig::default().horizon)]
    horizon: f64,
    /// Automaton seed.
    #[arg(long, default_value_t = SimConfig::default().seed)]
    seed: u64,
    /// Automaton replicates.
    #[arg(long, default_value_t = SimConfig::default().runs)]
    runs: usize,
    /// Keep every n-th time step in the output.
    #[arg(long, default_value_t = SimConfig::default().record_every)]
    record_every: usize,
}

impl SimFlags {
    fn config(&self, n: usize, m: &mut Manifest) -> Result<(SimConfig, Vec<bool>)> {
        ensure!(!self.ignite.is_empty(), "--ignite needs at least one node");
        let mut x0 = vec![false; n];
        for &i in &self.ignite {
            ensure!(
                i < n,
                "ignition node {i} out of range (graph has {n} nodes)"
            );
            x0[i] = true;
        }
        let cfg = SimConfig {
            dt: self.dt,
            horizon: self.horizon,
            seed: self.seed,
            runs: self.runs,
            record_every: self.record_every,
        };
        let ids: Vec<String> = self.ignite.iter().map(usize::to_string).collect();
        m.set("ignite", ids.join(","));
        m.set("dt", cfg.dt);
        m.set("horizon", cfg.horizon);
        m.set("seed", cfg.seed);
        m.set("runs", cfg.runs);
        m.set("record_every", cfg.record_every);
        Ok((cfg, x0))
    }
}

fn real_state(x0: &[bool]) -> Vec<f64> {
    x0.iter().map(|&b| f64::from(u8::from(b))).collect()
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum)]
    model: Model,
    #[command(flatten)]
    sim: SimFlags,
    /// Output a single automaton replicate instead of the mean.
    #[arg(long, value_name = "K")]
    replicate: Option<u64>,
    /// Control listing written by `intervene`; simulates the closed loop.
    #[arg(long, value_name = "FILE")]
    control: Option<PathBuf>,
    /// Trajectory CSV.
    #[arg(long)]
    out: PathBuf,
    /// Final-state raster [default: <out>.final.csv].
    #[arg(long)]
    final_raster: Option<PathBuf>,
}

pub fn simulate(args: SimulateArgs, mut m: Manifest) -> Result<()> {
    if args.replicate.is_some() && args.model != Model::Ca {
        bail!("--replicate applies only to --model ca");
    }
    let final_raster = args
        .final_raster
        .clone()
        .unwrap_or_else(|| sibling(&args.out, "final.csv"));
    let loaded = args.input.load(&mut m)?;
    let (cfg, x0) = args.sim.config(loaded.graph.n(), &mut m)?;
    m.set("model", format!("{:?}", args.model).to_lowercase());

    let mut graph = loaded.graph;
    let mut a = loaded.a;
    if let Some(path) = &args.control {
        let k = read_control(path, &a)?;
        m.set("control", path.display());
        m.set("control_total", k.total());
        graph = apply_control(&graph, &k)?;
        a = k.closed_loop(&a)?;
    }
    if let Some(k) = args.replicate {
        m.set("replicate", k);
    }
    m.set("out", args.out.display());
    m.set("final_raster", final_raster.display());

    let (traj, burned) = match args.model {
        Model::Ca => match args.replicate {
            Some(k) => {
                let rep = ca_replicate(&graph, &x0, &cfg, k)?;
                let burned = rep.ever_burned.iter().filter(|&&b| b).count() as f64;
                (rep.trajectory, Some(burned))
            }
            None => {
                let res = simulate_ca(&graph, &x0, &cfg)?;
                let burned = res.ever_burned.iter().sum::<f64>();
                (res.mean, Some(burned))
            }
        },
        Model::Nonlinear => (simulate_nonlinear(&a, &real_state(&x0), &cfg)?, None),
        Model::Linear => (simulate_linear(&a, &real_state(&x0), &cfg)?, None),
    };

    let mut out = Outputs::default();
    out.add(&args.out, traj.to_csv());
    out.add(
        &final_raster,
        write_values(traj.last(), grid_of(&graph), "x"),
    );
    out.commit(&args.out, &m)?;

    println!("samples {}", traj.times.len());
    println!("final_total {:.6}", traj.last().iter().sum::<f64>());
    if let Some(b) = burned {
        println!("mean_ever_burned {b:.6}");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteMethod {
    /// Exact up to the size limit of the exact solver, heuristic beyond.
    Auto,
    Exact,
    Heuristic,
}

#[derive(Debug, Args)]
pub struct RouteArgs {
    /// Intervention report.
    #[arg(long)]
    report: PathBuf,
    /// Keep targets of at least this fraction of the largest amount.
    #[arg(long, default_value_t = 0.05)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = RouteMethod::Auto)]
    method: RouteMethod,
    /// Start and end the tour here, as `x,y` in grid units.
    #[arg(long, value_name = "X,Y", value_parser = parse_point)]
    depot: Option<[f64; 2]>,
    /// Tour CSV.
    #[arg(long)]
    out: PathBuf,
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (x, y) = s.split_once(',').ok_or("expected X,Y")?;
    let coord = |v: &str| {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|c| c.is_finite())
            .ok_or(format!("bad coordinate '{v}'"))
    };
    Ok([coord(x)?, coord(y)?])
}

pub fn route(args: RouteArgs, mut m: Manifest) -> Result<()> {
    ensure!(
        args.threshold.is_finite() && (0.0..=1.0).contains(&args.threshold),
        "--threshold must lie in [0, 1]"
    );
    let text = std::fs::read_to_string(&args.report)
        .with_context(|| format!("reading {}", args.report.display()))?;
    let report = InterventionReport::parse(&text)
        .with_context(|| format!("parsing {}", args.report.display()))?;
    m.set("report", args.report.display());
    m.set("threshold", args.threshold);
    m.set("out", args.out.display());

    let max = report.targets.iter().map(|t| t.amount).fold(0.0, f64::max);
    let kept: Vec<_> = report
        .targets
        .iter()
        .copied()
        .filter(|t| max > 0.0 && t.amount >= args.threshold * max)
        .collect();
    let waypoints = targets_to_waypoints(&kept, |i| {
        report
            .positions
            .iter()
            .find(|(j, _)| *j == i)
            .map(|(_, p)| *p)
    })
    .context("report has no node positions for its targets")?;
    let waypoints = match &args.depot {
        Some(d) => {
            m.set("depot", format!("{},{}", d[0], d[1]));
            with_depot(&waypoints, *d)
        }
        None => waypoints,
    };
    let method = match args.method {
        RouteMethod::Exact => TspMethod::Exact,
        RouteMethod::Heuristic => TspMethod::Heuristic,
        RouteMethod::Auto if waypoints.len() <= MAX_EXACT_WAYPOINTS => TspMethod::Exact,
        RouteMethod::Auto => TspMethod::Heuristic,
    };
    m.set("method", format!("{method:?}").to_lowercase());

    let tour = if kept.is_empty() {
        eprintln!(
            "warning: no targets at threshold {}; writing an empty tour",
            args.threshold
        );
        Tour {
            order: Vec::new(),
            length: 0.0,
        }
    } else {
        solve_tsp(&waypoints, method)?
    };
    let mut out = Outputs::default();
    out.add(&args.out, write_tour(&tour, &waypoints));
    out.commit(&args.out, &m)?;

    println!("targets {}", kept.len());
    println!("waypoints {}", tour.order.len());
    println!("length {:.6}", tour.length);
    Ok(())
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    sim: SimFlags,
    /// Standard errors of slack allowed when comparing the automaton mean.
    #[arg(long, default_value_t = 3.0)]
    z: f64,
    /// CSV `t,node,ca_mean,ca_stderr,nonlinear,linear`.
    #[arg(long)]
    out: PathBuf,
}

struct Hierarchy {
    ca_above_nonlinear: usize,
    nonlinear_above_linear: usize,
    checked: usize,
}

fn check_hierarchy(
    ca: &Trajectory,
    se: &[Vec<f64>],
    nl: &Trajectory,
    lin: &Trajectory,
    z: f64,
) -> Hierarchy {
    let mut h = Hierarchy {
        ca_above_nonlinear: 0,
        nonlinear_above_linear: 0,
        checked: 0,
    };
    let rows = ca.states.iter().zip(se).zip(&nl.states).zip(&lin.states);
    for (((c, e), x), l) in rows {
        for i in 0..c.len() {
            h.checked += 1;
            if c[i] > x[i] + z * e[i] + 1e-9 {
                h.ca_above_nonlinear += 1;
            }
            if x[i] > l[i] + 1e-9 {
                h.nonlinear_above_linear += 1;
            }
        }
    }
    h
}

pub fn compare_models(args: CompareArgs, mut m: Manifest) -> Result<()> {
    ensure!(args.z.is_finite() && args.z >= 0.0, "--z must be >= 0");
    let loaded = args.input.load(&mut m)?;
    let (cfg, x0) = args.sim.config(loaded.graph.n(), &mut m)?;
    m.set("z", args.z);
    m.set("out", args.out.display());

    let ca = simulate_ca(&loaded.graph, &x0, &cfg)?;
    let nl = simulate_nonlinear(&loaded.a, &real_state(&x0), &cfg)?;
    let lin = simulate_linear(&loaded.a, &real_state(&x0), &cfg)?;
    ensure!(
        ca.mean.times == nl.times && nl.times == lin.times,
        "simulators sampled different time grids"
    );

    let mut csv = String::from("t,node,ca_mean,ca_stderr,nonlinear,linear\n");
    for (s, &t) in ca.mean.times.iter().enumerate() {
        for i in 0..ca.mean.n() {
            let _ = writeln!(
                csv,
                "{t},{i},{},{},{},{}",
                ca.mean.states[s][i], ca.stderr[s][i], nl.states[s][i], lin.states[s][i]
            );
        }
    }
    let h = check_hierarchy(&ca.mean, &ca.stderr, &nl, &lin, args.z);
    let mut out = Outputs::default();
    out.add(&args.out, csv);
    out.commit(&args.out, &m)?;

    let verdict = |k: usize| if k == 0 { "holds" } else { "violated" };
    println!(
        "ca <= nonlinear (within {} stderr): {} ({} of {} samples above)",
        args.z,
        verdict(h.ca_above_nonlinear),
        h.ca_above_nonlinear,
        h.checked
    );
    println!(
        "nonlinear <= linear: {} ({} of {} samples above)",
        verdict(h.nonlinear_above_linear),
        h.nonlinear_above_linear,
        h.checked
    );
    Ok(())
}
