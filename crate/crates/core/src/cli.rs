//! Command-line front end. Exit codes: 0 success, 1 I/O failure, 2 invalid
//! input or failed validation, 3 a multiplicity check failed.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::{write_samples_csv, Coupling};
use crate::error::{Error, Result};
use crate::interface::{
    complete_j_unitary, coupling_codim, reduce_rank, satisfies_d4, self_adjointness_residual,
    to_normal_form, InterfaceCondition, InterfaceJson,
};
use crate::limits::{scan, EpsSchedule, STABILITY_TOL};
use crate::numeric::{c64, CMatrix, RankTolerance};
use crate::oracle::{assemble, eig_clusters, GridSpec};
use crate::point::{point_multiplicity, write_table, U0_TOL};
use crate::weyl::StarGraph;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_FLAGGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "star-coupling",
    version,
    about = "Spectral multiplicity tools for star graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate an interface condition and print its normal form.
    Check(CheckArgs),
    /// Evaluate M_w on a set of points in the upper half-plane.
    Weyl(WeylArgs),
    /// Boundary-limit multiplicities over a grid of x values.
    Scan(ScanArgs),
    /// Eigenvalue multiplicities at given x values.
    Point(PointArgs),
    /// Finite-difference eigenvalue clusters in a window.
    Oracle(OracleArgs),
    /// Lower rank B while keeping every edge coupled.
    Reduce(ReduceArgs),
}

#[derive(Debug, Args)]
pub struct InterfaceArg {
    /// JSON file or preset name (standard, decoupled, antidecoupled).
    #[arg(long)]
    pub interface: String,
    /// Size for presets; defaults to the number of edges.
    #[arg(long)]
    pub n: Option<usize>,
    /// Relative rank tolerance.
    #[arg(long, default_value_t = RankTolerance::DEFAULT.value())]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub ic: InterfaceArg,
    /// Write the validated condition as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WeylArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub ic: InterfaceArg,
    /// Points `re,im`; may be repeated.
    #[arg(long = "z", allow_hyphen_values = true)]
    pub z: Vec<String>,
    /// Real parts `a:b:count` or `x1,x2,...`, combined with `--eps`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub ic: InterfaceArg,
    /// `a:b:count` or `x1,x2,...`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    /// Decreasing heights `e1,e2,...`.
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub window: usize,
    #[arg(long, default_value_t = STABILITY_TOL)]
    pub stability_tol: f64,
    /// Candidate eigenvalues for the point-spectrum table.
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// Profile CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Point-spectrum table CSV; appended to the profile output when absent.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub ic: InterfaceArg,
    /// `x1,x2,...`.
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    #[arg(long, default_value_t = U0_TOL)]
    pub u0_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub ic: InterfaceArg,
    /// `lo:hi`.
    #[arg(long, allow_hyphen_values = true)]
    pub window: String,
    /// Grid points per edge.
    #[arg(long, default_value_t = 2000)]
    pub grid: usize,
    #[arg(long, default_value_t = 40.0)]
    pub truncation: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub cluster_radius: f64,
    /// JSON list of `{"x": .., "multiplicity": ..}` to compare against.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, default_value_t = 2e-3)]
    pub match_tol: f64,
    /// Dense matrix dump (small grids only).
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub ic: InterfaceArg,
    /// Target rank of B.
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Prediction {
    pub x: f64,
    pub multiplicity: usize,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        Error::TheoremViolation(_) => EXIT_FLAGGED,
        _ => EXIT_INVALID,
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            Error::Io(io::Error::new(e.kind(), format!("{}: {e}", p.display())))
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_graph(path: &Path) -> Result<StarGraph> {
    StarGraph::from_json_str(&read_file(path)?)
}

fn load_interface(arg: &InterfaceArg, graph_n: Option<usize>) -> Result<InterfaceCondition> {
    let tol = RankTolerance::new(arg.tol)?;
    let path = Path::new(&arg.interface);
    let ic = if path.is_file() {
        InterfaceCondition::from_json_str(&read_file(path)?, tol)?
    } else {
        let n = arg.n.or(graph_n).ok_or_else(|| {
            Error::input(format!(
                "'{}' is not a file; give --n for a preset",
                arg.interface
            ))
        })?;
        InterfaceCondition::preset(&arg.interface, n)?
    };
    if let Some(n) = graph_n {
        if ic.n() != n {
            return Err(Error::input(format!(
                "interface condition has size {} but the graph has {n} edges",
                ic.n()
            )));
        }
    }
    Ok(ic)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::input(format!("not a number: '{s}'")))
}

/// `a:b:count` (inclusive) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, count] => {
            let (a, b) = (parse_f64(a)?, parse_f64(b)?);
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| Error::input(format!("bad point count in '{s}'")))?;
            match count {
                0 => Err(Error::input("grid needs at least one point")),
                1 => Ok(vec![a]),
                _ => Ok((0..count)
                    .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
                    .collect()),
            }
        }
        [_] => s.split(',').map(parse_f64).collect(),
        _ => Err(Error::input(format!(
            "expected a:b:count or a list, got '{s}'"
        ))),
    }
}

fn parse_window(s: &str) -> Result<(f64, f64)> {
    match s.split(':').collect::<Vec<_>>().as_slice() {
        [lo, hi] => Ok((parse_f64(lo)?, parse_f64(hi)?)),
        _ => Err(Error::input(format!("expected lo:hi, got '{s}'"))),
    }
}

fn parse_z(s: &str) -> Result<Complex64> {
    match s.split(',').collect::<Vec<_>>().as_slice() {
        [re, im] => Ok(c64(parse_f64(re)?, parse_f64(im)?)),
        _ => Err(Error::input(format!("expected re,im, got '{s}'"))),
    }
}

fn fmt_matrix(m: &CMatrix) -> String {
    let fmt_c = |z: Complex64| {
        if z.im == 0.0 {
            format!("{}", z.re)
        } else {
            format!("{}{:+}i", z.re, z.im)
        }
    };
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            let row: Vec<String> = (0..m.ncols()).map(|j| fmt_c(m[(i, j)])).collect();
            format!("[{}]", row.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Check(a) => cmd_check(&a, stdout),
        Command::Weyl(a) => cmd_weyl(&a),
        Command::Scan(a) => cmd_scan(&a, stdout),
        Command::Point(a) => cmd_point(&a),
        Command::Oracle(a) => cmd_oracle(&a, stdout),
        Command::Reduce(a) => cmd_reduce(&a, stdout),
    }
}

fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let tol = RankTolerance::new(args.ic.tol)?;
    let ic = match load_interface(&args.ic, None) {
        Ok(ic) => ic,
        Err(e @ Error::D3Violation { .. }) => {
            writeln!(out, "D3: fail ({e})")?;
            return Ok(EXIT_INVALID);
        }
        Err(e) => return Err(e),
    };
    writeln!(
        out,
        "D3: ok (residual {:.3e})",
        self_adjointness_residual(ic.a(), ic.b())
    )?;
    let d4 = satisfies_d4(&ic, tol)?;
    writeln!(out, "D4: {}", if d4 { "ok" } else { "fail" })?;
    writeln!(out, "r: {}", ic.rank_b())?;
    if d4 {
        let nf = to_normal_form(&ic, tol)?;
        writeln!(out, "permutation: {:?}", nf.permutation)?;
        writeln!(out, "A1: {}", fmt_matrix(&nf.a1))?;
        writeln!(out, "A2: {}", fmt_matrix(&nf.a2))?;
        writeln!(
            out,
            "normal form residual: {:.3e}",
            nf.reproduction_residual(&ic)
        )?;
    }
    let completion = complete_j_unitary(&ic)?;
    let (w_res, inv_res) = completion.residuals();
    writeln!(
        out,
        "completion residuals: w*Jw-J {w_res:.3e}, wJw*-J {inv_res:.3e}"
    )?;
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&ic.to_json())?;
        std::fs::write(path, json + "\n")?;
    }
    Ok(if d4 { EXIT_OK } else { EXIT_INVALID })
}

fn cmd_weyl(args: &WeylArgs) -> Result<i32> {
    let graph = load_graph(&args.graph)?;
    let ic = load_interface(&args.ic, Some(graph.n()))?;
    let mut zs = args
        .z
        .iter()
        .map(|s| parse_z(s))
        .collect::<Result<Vec<_>>>()?;
    if let Some(grid) = &args.grid {
        zs.extend(parse_grid(grid)?.into_iter().map(|x| c64(x, args.eps)));
    }
    if zs.is_empty() {
        return Err(Error::input("give --z or --grid"));
    }
    let coupling = Coupling::new(graph, ic, RankTolerance::new(args.ic.tol)?)?;
    let samples = zs
        .iter()
        .map(|&z| coupling.eval(z))
        .collect::<Result<Vec<_>>>()?;
    for s in &samples {
        if let Some(w) = &s.warning {
            eprintln!("warning at z = {}: {w}", s.z);
        }
    }
    let mut out = open_out(&args.out)?;
    write_samples_csv(&mut out, &samples)?;
    out.flush()?;
    Ok(EXIT_OK)
}

fn cmd_scan(args: &ScanArgs, stdout: &mut dyn Write) -> Result<i32> {
    let graph = load_graph(&args.graph)?;
    let ic = load_interface(&args.ic, Some(graph.n()))?;
    let tol = RankTolerance::new(args.ic.tol)?;
    let grid = parse_grid(&args.grid)?;
    let sched = match &args.eps {
        Some(e) => EpsSchedule::new(
            e.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?,
            args.window,
        )?,
        None => EpsSchedule::default(),
    };
    let profile = scan(&graph, &ic, &grid, &sched, args.stability_tol)?;
    let mut flagged = false;
    for (x, v) in profile.violations() {
        eprintln!("x = {x}: {v}");
        flagged = true;
    }
    let mut rows = Vec::new();
    if let Some(points) = &args.points {
        for x in parse_grid(points)? {
            match point_multiplicity(&graph, &ic, x, U0_TOL, tol) {
                Ok(g) => rows.push(g),
                Err(Error::TheoremViolation(msg)) => {
                    eprintln!("x = {x}: {msg}");
                    flagged = true;
                }
                Err(e) => return Err(e),
            }
        }
    }
    {
        let mut out: Box<dyn Write> = match &args.out {
            Some(_) => open_out(&args.out)?,
            None => Box::new(&mut *stdout),
        };
        profile.write_csv(&mut out)?;
        if args.points.is_some() && args.table.is_none() {
            writeln!(out)?;
            write_table(&mut out, &rows)?;
        }
        out.flush()?;
    }
    if args.points.is_some() && args.table.is_some() {
        let mut t = open_out(&args.table)?;
        write_table(&mut t, &rows)?;
        t.flush()?;
    }
    Ok(if flagged { EXIT_FLAGGED } else { EXIT_OK })
}

fn cmd_point(args: &PointArgs) -> Result<i32> {
    let graph = load_graph(&args.graph)?;
    let ic = load_interface(&args.ic, Some(graph.n()))?;
    let tol = RankTolerance::new(args.ic.tol)?;
    let rows = parse_grid(&args.x)?
        .into_iter()
        .map(|x| point_multiplicity(&graph, &ic, x, args.u0_tol, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut out = open_out(&args.out)?;
    write_table(&mut out, &rows)?;
    out.flush()?;
    Ok(EXIT_OK)
}

fn cmd_oracle(args: &OracleArgs, stdout: &mut dyn Write) -> Result<i32> {
    let graph = load_graph(&args.graph)?;
    let ic = load_interface(&args.ic, Some(graph.n()))?;
    let window = parse_window(&args.window)?;
    let grid = GridSpec::new(args.grid, args.truncation)?;
    let op = assemble(&graph, &ic, &grid)?;
    if let Some(path) = &args.dump {
        let mut f = open_out(&Some(path.clone()))?;
        op.write_dense_binary(&mut f)?;
        f.flush()?;
    }
    let report = eig_clusters(&op, window, args.cluster_radius)?;
    if report.discarded > 0 {
        eprintln!(
            "discarded {} eigenvalues with large imaginary part",
            report.discarded
        );
    }
    {
        let mut out: Box<dyn Write> = match &args.out {
            Some(_) => open_out(&args.out)?,
            None => Box::new(&mut *stdout),
        };
        report.write_csv(&mut out)?;
        out.flush()?;
    }
    let mut flagged = false;
    if let Some(path) = &args.predictions {
        let preds: Vec<Prediction> = serde_json::from_str(&read_file(path)?)?;
        for p in &preds {
            let found = report
                .cluster_near(p.x, args.match_tol)
                .map_or(0, |c| c.multiplicity);
            if found != p.multiplicity {
                eprintln!(
                    "x = {}: predicted multiplicity {}, oracle found {found}",
                    p.x, p.multiplicity
                );
                flagged = true;
            }
        }
    }
    Ok(if flagged { EXIT_FLAGGED } else { EXIT_OK })
}

fn cmd_reduce(args: &ReduceArgs, out: &mut dyn Write) -> Result<i32> {
    let tol = RankTolerance::new(args.ic.tol)?;
    let ic = load_interface(&args.ic, None)?;
    let reduced = reduce_rank(&ic, args.k, tol, args.seed)?;
    writeln!(out, "rank B: {} -> {}", ic.rank_b(), reduced.rank_b())?;
    writeln!(out, "codim: {}", coupling_codim(&ic, &reduced, tol)?)?;
    writeln!(
        out,
        "D4: {}",
        if satisfies_d4(&reduced, tol)? {
            "ok"
        } else {
            "fail"
        }
    )?;
    let json: InterfaceJson = reduced.to_json();
    let text = serde_json::to_string_pretty(&json)? + "\n";
    match &args.out {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String) {
        let cli = Cli::try_parse_from(std::iter::once("star-coupling").chain(args.iter().copied()))
            .unwrap();
        let mut buf = Vec::new();
        let code = run(cli, &mut buf).unwrap_or_else(|e| exit_code(&e));
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("1,4,9").unwrap(), vec![1.0, 4.0, 9.0]);
        assert_eq!(parse_grid("-2").unwrap(), vec![-2.0]);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a,b").is_err());
        assert_eq!(parse_window("-1:2").unwrap(), (-1.0, 2.0));
        assert_eq!(parse_z("1,-0.5").unwrap(), c64(1.0, -0.5));
    }

    #[test]
    fn check_standard() {
        let (code, out) = run_args(&["check", "--interface", "standard", "--n", "3"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("D4: ok"));
        assert!(out.contains("r: 1"));
        assert!(out.contains("A1: [[-1], [-1]]"));
        assert!(out.contains("A2: [[0]]"));
    }

    #[test]
    fn check_decoupled_and_unknown_preset() {
        let (code, out) = run_args(&["check", "--interface", "decoupled", "--n", "2"]);
        assert_eq!(code, 0);
        assert!(out.contains("r: 0"));
        let (code, _) = run_args(&["check", "--interface", "nonsense", "--n", "2"]);
        assert_eq!(code, EXIT_INVALID);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Io(io::Error::other("x"))), EXIT_IO);
        assert_eq!(
            exit_code(&Error::TheoremViolation("x".into())),
            EXIT_FLAGGED
        );
        assert_eq!(exit_code(&Error::input("x")), EXIT_INVALID);
    }
}
