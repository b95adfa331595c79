//! `caplace` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input or incompatible data, 3 no
//! convergence, 4 unsupported winding number or domain. Errors are printed to
//! stderr as one JSON object.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod selectors;

use caplace::aharmonic::{aharmonic_residual, coefficient_grid, solve_directional_aharmonic, AHarmonicOptions, WeakResidualOptions};
use caplace::beltrami::{class_b_violations, k_of, matrix_of, mu_of, solve_beltrami, write_grid_csv, BeltramiOptions, Grid};
use caplace::conformal::{interior_grid, neumann_probes, riemann_map, solve_directional_with_map, MapOptions};
use caplace::family::{default_sample_grid, generate_family, independence_certificate, FamilyReport};
use caplace::geometry::{normal_field, BoundaryData, DirectionField, JordanCurve};
use caplace::harmonic::{certify, disk_grid, solve_directional_disk, write_solution_csv, BoundarySolution, LimitOptions, Potential};
use caplace::oracle::{fd_solve_neumann, fourier_neumann_disk, max_difference_after_shift, Coefficients, FDGrid, FDOptions};
use caplace::{Error, Result, C64};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "caplace",
    version,
    about = "Neumann and directional-derivative solvers for harmonic and A-harmonic functions"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Boundary samples (power of two).
    #[arg(long, default_value_t = 1024)]
    n: usize,
    /// Grid nodes per side (output grid, Beltrami grid or FD grid).
    #[arg(long)]
    grid: Option<usize>,
    /// Stolz cone aperture for the boundary certification.
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    /// Corrector point `re,im` on the unit circle.
    #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
    zeta0: String,
    /// Output prefix.
    #[arg(long, default_value = "caplace")]
    out: String,
    /// Tolerance of the iterative stages and of the boundary-limit extrapolation.
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap of the Beltrami and conformal stages.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Validate the configuration and stop.
    #[arg(long)]
    dry_run: bool,
    /// JSON file with A-harmonic pipeline settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Neumann problem on the unit disk.
    SolveNeumannDisk {
        /// Boundary data selector: cos[:k], sin[:k], one, zero, const:c, normal-x, csv:path.
        #[arg(long, default_value = "cos")]
        phi: String,
        #[command(flatten)]
        c: Common,
    },
    /// Directional-derivative problem on the unit disk.
    SolveDirectionalDisk {
        #[arg(long, default_value = "normal")]
        nu: String,
        /// Boundary data selector: cos[:k], sin[:k], one, zero, const:c, normal-x, csv:path.
        #[arg(long, default_value = "cos")]
        phi: String,
        #[command(flatten)]
        c: Common,
    },
    /// Neumann problem on a star-like Jordan domain.
    SolveNeumannJordan {
        #[arg(long, default_value = "limacon:0.3")]
        curve: String,
        /// Boundary data selector: cos[:k], sin[:k], one, zero, const:c, normal-x, csv:path.
        #[arg(long, default_value = "cos")]
        phi: String,
        #[command(flatten)]
        c: Common,
    },
    /// Directional-derivative problem on a star-like Jordan domain.
    SolveDirectionalJordan {
        #[arg(long, default_value = "limacon:0.3")]
        curve: String,
        #[arg(long, default_value = "normal")]
        nu: String,
        /// Boundary data selector: cos[:k], sin[:k], one, zero, const:c, normal-x, csv:path.
        #[arg(long, default_value = "cos")]
        phi: String,
        #[command(flatten)]
        c: Common,
    },
    /// Neumann problem for div(A∇u) = 0.
    SolveNeumannAharmonic {
        #[arg(long, default_value = "circle")]
        curve: String,
        #[arg(long, default_value = "diag:2,0.5")]
        a: String,
        #[arg(long, default_value = "normal-x")]
        phi: String,
        #[command(flatten)]
        c: Common,
    },
    /// Directional-derivative problem for div(A∇u) = 0.
    SolveDirectionalAharmonic {
        #[arg(long, default_value = "circle")]
        curve: String,
        #[arg(long, default_value = "diag:2,0.5")]
        a: String,
        #[arg(long, default_value = "normal")]
        nu: String,
        #[arg(long, default_value = "normal-x")]
        phi: String,
        #[command(flatten)]
        c: Common,
    },
    /// Quasiconformal solution of the Beltrami equation on a grid.
    BeltramiSolve {
        /// `zero`, `const:re,im`, `plateau:v` or `random:k,seed`.
        #[arg(long, default_value = "zero")]
        mu: String,
        /// Half-width of the computational square.
        #[arg(long, default_value_t = 2.0)]
        half_width: f64,
        #[command(flatten)]
        c: Common,
    },
    /// Riemann map of a curve onto the unit disk.
    ConformalMap {
        #[arg(long, default_value = "limacon:0.3")]
        curve: String,
        #[command(flatten)]
        c: Common,
    },
    /// Beltrami coefficient of a unit-determinant matrix.
    MuFromA {
        #[arg(long, default_value = "identity")]
        a: String,
        #[command(flatten)]
        c: Common,
    },
    /// Unit-determinant matrix of a Beltrami coefficient.
    AFromMu {
        /// `re,im`
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        mu: String,
        #[command(flatten)]
        c: Common,
    },
    /// Check matrices for symmetry, det = 1 and ellipticity.
    ValidateA {
        #[arg(long)]
        a: Option<String>,
        /// CSV with rows `a11, a12, a21, a22`.
        #[arg(long)]
        a_csv: Option<String>,
        #[command(flatten)]
        c: Common,
    },
    /// Solutions with distinct corrector points and their independence.
    Family {
        /// Corrector angles in degrees.
        #[arg(long, default_value = "0,60,120,180,240,300", allow_hyphen_values = true)]
        angles: String,
        #[arg(long, default_value = "one")]
        phi: String,
        #[command(flatten)]
        c: Common,
    },
    /// Compare a solver against an independent oracle.
    OracleCompare {
        /// `disk-cos`, `disk-zero` or `aniso`.
        #[arg(long, default_value = "disk-cos")]
        case: String,
        #[command(flatten)]
        c: Common,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Convergence { .. } | Error::SeriesTail { .. } | Error::MapQuality(_) => 3,
        Error::UnsupportedIndex(_) | Error::UnsupportedDomain(_) | Error::Domain(_) => 4,
        _ => 2,
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::Geometry(_) => "geometry",
        Error::Domain(_) => "domain",
        Error::UnsupportedIndex(_) => "unsupported_index",
        Error::UnsupportedDomain(_) => "unsupported_domain",
        Error::DataTooWild(_) => "data_too_wild",
        Error::SeriesTail { .. } => "series_tail",
        Error::Convergence { .. } => "convergence",
        Error::Validation { .. } => "validation",
        Error::Compatibility(_) => "compatibility",
        Error::Regularity(_) => "regularity",
        Error::MapQuality(_) => "map_quality",
        Error::Consistency(_) => "consistency",
        Error::Stage { .. } => "stage",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
        Error::Csv(_) => "csv",
    }
}

fn error_json(e: &Error) -> Value {
    let root = e.root();
    let mut v = json!({
        "error": kind(root),
        "message": e.to_string(),
        "exit_code": exit_code(e),
    });
    if let Error::Stage { stage, .. } = e {
        v["stage"] = json!(stage);
    }
    if let Error::Validation { points, .. } = root {
        v["points"] = json!(points);
    }
    v
}

fn main() -> ExitCode {
    if let Ok(t) = std::env::var("CAPLACE_THREADS") {
        match t.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                let e = Error::Config(format!("CAPLACE_THREADS must be a positive integer, got '{t}'"));
                eprintln!("{}", error_json(&e));
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

struct Ctx {
    c: Common,
    zeta0: C64,
}

impl Ctx {
    fn new(c: Common) -> Result<Self> {
        if !c.n.is_power_of_two() || c.n < 8 {
            return Err(Error::Config(format!("--n must be a power of two ≥ 8, got {}", c.n)));
        }
        if !(c.kappa > 0.0) {
            return Err(Error::Config(format!("--kappa must be positive, got {}", c.kappa)));
        }
        if let Some(t) = c.tol {
            if !(t > 0.0) {
                return Err(Error::Config(format!("--tol must be positive, got {t}")));
            }
        }
        if c.max_iters == Some(0) {
            return Err(Error::Config("--max-iters must be positive".into()));
        }
        if let Some(p) = &c.config {
            if !p.exists() {
                return Err(Error::Config(format!("config file {} does not exist", p.display())));
            }
        }
        let zeta0 = selectors::parse_point(&c.zeta0)?;
        if (zeta0.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "--zeta0 must lie on the unit circle, |ζ₀| = {}",
                zeta0.norm()
            )));
        }
        Ok(Ctx {
            zeta0: zeta0 / zeta0.norm(),
            c,
        })
    }

    fn path(&self, suffix: &str) -> PathBuf {
        PathBuf::from(format!("{}_{suffix}", self.c.out))
    }

    fn create(&self, suffix: &str) -> Result<BufWriter<File>> {
        let p = self.path(suffix);
        if let Some(dir) = p.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        Ok(BufWriter::new(File::create(p)?))
    }

    fn write_json(&self, suffix: &str, v: &Value) -> Result<()> {
        let mut w = self.create(suffix)?;
        w.write_all((serde_json::to_string_pretty(v)? + "\n").as_bytes())?;
        w.flush()?;
        Ok(())
    }

    fn limit_options(&self) -> LimitOptions {
        LimitOptions {
            kappa: self.c.kappa,
            tol: self.c.tol.unwrap_or(LimitOptions::default().tol),
            ..Default::default()
        }
    }

    fn map_options(&self) -> MapOptions {
        let d = MapOptions::default();
        MapOptions {
            center: None,
            tol: self.c.tol.unwrap_or(d.tol),
            max_iters: self.c.max_iters.unwrap_or(d.max_iters),
        }
    }

    fn pipeline_options(&self) -> Result<AHarmonicOptions> {
        let mut o: AHarmonicOptions = match &self.c.config {
            Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
            None => AHarmonicOptions::default(),
        };
        if let Some(g) = self.c.grid {
            o.grid_n = g;
        }
        if let Some(m) = self.c.max_iters {
            o.beltrami_max_iters = m;
            o.map_max_iters = m;
        }
        Ok(o)
    }

    fn dry_run(&self, name: &str, extra: Value) -> Result<bool> {
        if self.c.dry_run {
            let v = json!({
                "dry_run": true,
                "subcommand": name,
                "n": self.c.n,
                "grid": self.c.grid,
                "kappa": self.c.kappa,
                "zeta0": [self.zeta0.re, self.zeta0.im],
                "out": self.c.out,
                "inputs": extra,
            });
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        Ok(self.c.dry_run)
    }
}

fn report_json<S: BoundarySolution>(sol: &S, ctx: &Ctx, probes: bool) -> Result<Value> {
    let opts = ctx.limit_options();
    let r = certify(sol, opts, 0.1);
    let mut v = json!({
        "max": r.max,
        "mean": r.mean,
        "checked": r.checked,
        "masked": r.masked,
        "excluded": r.excluded,
        "failed": r.failed,
        "exceptional_points": sol.exceptional_points().iter().map(|p| [p.re, p.im]).collect::<Vec<_>>(),
        "samples": r.samples,
    });
    if probes {
        v["neumann_probes"] = json!(neumann_probes(sol, 64, opts, 0.1)?);
    }
    Ok(v)
}

fn disk_points(ctx: &Ctx) -> Vec<C64> {
    let m = ctx.c.grid.unwrap_or(41).max(3);
    disk_grid(C64::new(0.0, 0.0), 0.95, 2.0 / (m - 1) as f64)
}

fn curve_points(curve: &JordanCurve, ctx: &Ctx) -> Vec<C64> {
    let m = ctx.c.grid.unwrap_or(41).max(3);
    let c = curve.centroid();
    let step = 2.0 * curve.circumradius(c) / (m - 1) as f64;
    interior_grid(curve, step, step)
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::SolveNeumannDisk { phi, c } => {
            let ctx = Ctx::new(c)?;
            let curve = JordanCurve::unit_circle(ctx.c.n)?;
            let nu = normal_field(&curve)?;
            let phi = selectors::data(&phi, &curve)?;
            disk(&ctx, "solve-neumann-disk", &nu, &phi, true)
        }
        Cmd::SolveDirectionalDisk { nu, phi, c } => {
            let ctx = Ctx::new(c)?;
            let curve = JordanCurve::unit_circle(ctx.c.n)?;
            let nu = selectors::direction(&nu, &curve)?;
            let phi = selectors::data(&phi, &curve)?;
            disk(&ctx, "solve-directional-disk", &nu, &phi, false)
        }
        Cmd::SolveNeumannJordan { curve, phi, c } => {
            let ctx = Ctx::new(c)?;
            let curve = selectors::curve(&curve, ctx.c.n)?;
            let nu = normal_field(&curve)?;
            let phi = selectors::data(&phi, &curve)?;
            jordan(&ctx, "solve-neumann-jordan", &curve, &nu, &phi, true)
        }
        Cmd::SolveDirectionalJordan { curve, nu, phi, c } => {
            let ctx = Ctx::new(c)?;
            let curve = selectors::curve(&curve, ctx.c.n)?;
            let nu = selectors::direction(&nu, &curve)?;
            let phi = selectors::data(&phi, &curve)?;
            jordan(&ctx, "solve-directional-jordan", &curve, &nu, &phi, false)
        }
        Cmd::SolveNeumannAharmonic { curve, a, phi, c } => {
            let ctx = Ctx::new(c)?;
            let curve = selectors::curve(&curve, ctx.c.n)?;
            let nu = normal_field(&curve)?;
            let phi = selectors::data(&phi, &curve)?;
            aharmonic(&ctx, "solve-neumann-aharmonic", &curve, &a, &nu, &phi, true)
        }
        Cmd::SolveDirectionalAharmonic { curve, a, nu, phi, c } => {
            let ctx = Ctx::new(c)?;
            let curve = selectors::curve(&curve, ctx.c.n)?;
            let nu = selectors::direction(&nu, &curve)?;
            let phi = selectors::data(&phi, &curve)?;
            aharmonic(&ctx, "solve-directional-aharmonic", &curve, &a, &nu, &phi, false)
        }
        Cmd::BeltramiSolve { mu, half_width, c } => {
            let ctx = Ctx::new(c)?;
            let grid = Grid::new(C64::new(0.0, 0.0), half_width, ctx.c.grid.unwrap_or(512))?;
            let mu = selectors::beltrami(&mu, grid)?;
            if ctx.dry_run("beltrami-solve", json!({"k": mu.k(), "half_width": half_width}))? {
                return Ok(());
            }
            let d = BeltramiOptions::default();
            let h = solve_beltrami(
                &mu,
                BeltramiOptions {
                    tol: ctx.c.tol.unwrap_or(d.tol),
                    max_iters: ctx.c.max_iters.unwrap_or(d.max_iters),
                },
            )?;
            write_grid_csv(&grid, &h.h_samples(), ctx.create("h.csv")?)?;
            let header: Value = serde_json::from_str(&h.header_json()?)?;
            ctx.write_json("h.json", &header)
        }
        Cmd::ConformalMap { curve, c } => {
            let ctx = Ctx::new(c)?;
            let curve = selectors::curve(&curve, ctx.c.n)?;
            if ctx.dry_run("conformal-map", json!({"samples": curve.len()}))? {
                return Ok(());
            }
            let map = riemann_map(&curve, ctx.map_options())?;
            let mut v: Value = serde_json::from_str(&map.to_json()?)?;
            v["iterations"] = json!(map.iterations());
            v["boundary_error"] = json!(map.boundary_error());
            v["analyticity_defect"] = json!(map.analyticity_defect());
            ctx.write_json("map.json", &v)
        }
        Cmd::MuFromA { a, c } => {
            let ctx = Ctx::new(c)?;
            let m = selectors::matrix(&a)?;
            check_class_b(&[m])?;
            if ctx.dry_run("mu-from-a", json!({"a": m}))? {
                return Ok(());
            }
            let mu = mu_of(&m);
            println!("μ = {:.10} {:+.10}i", mu.re + 0.0, mu.im + 0.0);
            println!("{}", json!({"mu": [mu.re + 0.0, mu.im + 0.0], "k": k_of(mu)}));
            Ok(())
        }
        Cmd::AFromMu { mu, c } => {
            let ctx = Ctx::new(c)?;
            let mu = selectors::parse_point(&mu)?;
            let a = matrix_of(mu)?;
            if ctx.dry_run("a-from-mu", json!({"mu": [mu.re, mu.im]}))? {
                return Ok(());
            }
            println!("{}", json!({"a": a, "k": k_of(mu)}));
            Ok(())
        }
        Cmd::ValidateA { a, a_csv, c } => {
            let ctx = Ctx::new(c)?;
            let ms = match (a, a_csv) {
                (Some(s), None) => vec![selectors::matrix(&s)?],
                (None, Some(p)) => selectors::matrices_csv(&p)?,
                _ => return Err(Error::Config("give exactly one of --a and --a-csv".into())),
            };
            if ctx.dry_run("validate-a", json!({"matrices": ms.len()}))? {
                return Ok(());
            }
            check_class_b(&ms)?;
            println!("{}", json!({"valid": true, "matrices": ms.len()}));
            Ok(())
        }
        Cmd::Family { angles, phi, c } => {
            let ctx = Ctx::new(c)?;
            let pts = angles
                .split(',')
                .map(|s| s.trim().parse::<f64>().map(|d| C64::from_polar(1.0, d.to_radians())))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(format!("--angles: {e}")))?;
            let curve = JordanCurve::unit_circle(ctx.c.n)?;
            let nu = normal_field(&curve)?;
            let phi = selectors::data(&phi, &curve)?;
            if ctx.dry_run("family", json!({"k": pts.len()}))? {
                return Ok(());
            }
            let fam = generate_family(&nu, &phi, &pts)?;
            let cert = independence_certificate(&fam.members, &default_sample_grid())?;
            let report = FamilyReport::new(&fam, &cert);
            ctx.write_json("family.json", &serde_json::to_value(report)?)
        }
        Cmd::OracleCompare { case, c } => {
            let ctx = Ctx::new(c)?;
            oracle_compare(&ctx, &case)
        }
    }
}

fn check_class_b(ms: &[[[f64; 2]; 2]]) -> Result<()> {
    let bad = class_b_violations(ms);
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation {
            message: "matrix is not in class B (symmetric, det = 1, positive definite)".into(),
            points: bad,
        })
    }
}

fn disk(ctx: &Ctx, name: &str, nu: &DirectionField, phi: &BoundaryData, probes: bool) -> Result<()> {
    if ctx.dry_run(name, json!({"winding": nu.winding(), "phi_mean": phi.mean()}))? {
        return Ok(());
    }
    let sol = solve_directional_disk(nu, phi, ctx.zeta0)?;
    write_solution_csv(&sol, &disk_points(ctx), ctx.create("solution.csv")?)?;
    let v = report_json(&sol, ctx, probes)?;
    ctx.write_json("residual.json", &v)
}

fn jordan(ctx: &Ctx, name: &str, curve: &JordanCurve, nu: &DirectionField, phi: &BoundaryData, probes: bool) -> Result<()> {
    if ctx.dry_run(name, json!({"samples": curve.len(), "winding": nu.winding()}))? {
        return Ok(());
    }
    let map = riemann_map(curve, ctx.map_options())?;
    let sol = solve_directional_with_map(&map, nu, phi, ctx.zeta0)?;
    write_solution_csv(&sol, &curve_points(curve, ctx), ctx.create("solution.csv")?)?;
    let mut v = report_json(&sol, ctx, probes)?;
    v["map"] = json!({
        "iterations": map.iterations(),
        "boundary_error": map.boundary_error(),
        "analyticity_defect": map.analyticity_defect(),
    });
    ctx.write_json("residual.json", &v)
}

fn aharmonic(ctx: &Ctx, name: &str, curve: &JordanCurve, a: &str, nu: &DirectionField, phi: &BoundaryData, probes: bool) -> Result<()> {
    let m = selectors::matrix(a)?;
    check_class_b(&[m])?;
    let opts = ctx.pipeline_options()?;
    if ctx.dry_run(name, json!({"a": m, "pipeline": opts}))? {
        return Ok(());
    }
    let field = coefficient_grid(curve, &opts, 0.5, |_| m)?;
    let sol = solve_directional_aharmonic(&field, curve, nu, phi, ctx.zeta0, &opts)?;
    let pts = curve_points(curve, ctx);
    write_solution_csv(&sol, &pts, ctx.create("solution.csv")?)?;
    let mut v = report_json(&sol, ctx, probes)?;
    let centers = interior_grid(curve, 0.2 * curve.circumradius(curve.centroid()), 0.1);
    let weak = aharmonic_residual(&sol, &|z| field.eval(z), &centers, WeakResidualOptions::default())?;
    let h = sol.qc_map();
    v["weak_residual"] = json!(weak);
    v["beltrami"] = serde_json::from_str(&h.header_json()?)?;
    ctx.write_json("residual.json", &v)
}

fn oracle_compare(ctx: &Ctx, case: &str) -> Result<()> {
    let n = ctx.c.n;
    let curve = JordanCurve::unit_circle(n)?;
    if !matches!(case, "disk-cos" | "disk-zero" | "aniso") {
        return Err(Error::Config(format!("no oracle for case '{case}'")));
    }
    if ctx.dry_run("oracle-compare", json!({"case": case}))? {
        return Ok(());
    }
    let pts = disk_grid(C64::new(0.0, 0.0), 0.8, 0.05);
    let (a, b): (Vec<f64>, Vec<f64>) = match case {
        "disk-cos" | "disk-zero" => {
            let phi = if case == "disk-cos" {
                BoundaryData::from_fn(n, f64::cos)?
            } else {
                BoundaryData::constant(n, 0.0)?
            };
            let sol = solve_directional_disk(&normal_field(&curve)?, &phi, ctx.zeta0)?;
            let oracle = fourier_neumann_disk(&phi)?;
            let a = pts.iter().map(|&z| sol.value(z)).collect::<Result<Vec<_>>>()?;
            let b = pts.iter().map(|&z| oracle.value(z)).collect::<Result<Vec<_>>>()?;
            (a, b)
        }
        _ => {
            // u₀ = x + x²/2 − 2y² solves div(A∇u) = 0 for A = diag(2, 1/2)
            let m = [[2.0, 0.0], [0.0, 0.5]];
            let grad = |z: C64| C64::new(1.0 + z.re, -4.0 * z.im);
            let nu = normal_field(&curve)?;
            let phi = BoundaryData::unmasked(
                curve
                    .points()
                    .iter()
                    .zip(curve.normals())
                    .map(|(&z, n)| (grad(z) * n.conj()).re)
                    .collect(),
            )?;
            let conormal = BoundaryData::unmasked(
                curve
                    .points()
                    .iter()
                    .zip(curve.normals())
                    .map(|(&z, n)| {
                        let g = grad(z);
                        let f = C64::new(m[0][0] * g.re, m[1][1] * g.im);
                        (f * n.conj()).re
                    })
                    .collect(),
            )?;
            let opts = ctx.pipeline_options()?;
            let field = coefficient_grid(&curve, &opts, 0.5, |_| m)?;
            let sol = solve_directional_aharmonic(&field, &curve, &nu, &phi, ctx.zeta0, &opts)?;
            let fd_grid = FDGrid::new(&curve, ctx.c.grid.unwrap_or(128))?;
            let fd = fd_solve_neumann(Coefficients::Constant(m), &fd_grid, &conormal, FDOptions::default())?;
            let cells: Vec<(C64, f64)> = fd.samples().into_iter().filter(|(z, _)| z.norm() <= 0.8).collect();
            let a = cells.iter().map(|(z, _)| sol.value(*z)).collect::<Result<Vec<_>>>()?;
            (a, cells.into_iter().map(|(_, u)| u).collect())
        }
    };
    let max = max_difference_after_shift(&a, &b);
    let shift = {
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        0.5 * (d.iter().cloned().fold(f64::INFINITY, f64::min) + d.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    };
    let mean = a.iter().zip(&b).map(|(x, y)| (x - y - shift).abs()).sum::<f64>() / a.len().max(1) as f64;
    let v = json!({"case": case, "points": a.len(), "max_discrepancy": max, "mean_discrepancy": mean});
    println!("{}", serde_json::to_string(&v)?);
    ctx.write_json("compare.json", &v)
}
