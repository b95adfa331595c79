//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails.

use caplace::aharmonic::{coefficient_grid, solve_directional_aharmonic, solve_neumann_aharmonic, AHarmonicOptions, AHarmonicSolution};
use caplace::beltrami::{cutoff, k_of, matrix_of, mu_of, solve_beltrami, BeltramiField, BeltramiOptions, Grid, Mat2};
use caplace::conformal::{interior_grid, neumann_probes, riemann_map, solve_neumann_jordan, MapOptions};
use caplace::family::{default_sample_grid, generate_family, independence_certificate};
use caplace::geometry::{normal_field, BoundaryData, JordanCurve};
use caplace::harmonic::{certify, disk_grid, solve_neumann_disk, LimitOptions, Potential};
use caplace::oracle::{fd_solve_neumann, fourier_neumann_disk, max_difference_after_shift, Coefficients, FDGrid, FDOptions};
use caplace::{Error, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

type Outcome = Result<(bool, String), String>;

/// Name, check and runtime budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, Option<f64>);

fn check(pass: bool, detail: String) -> Outcome {
    Ok((pass, detail))
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn sup_after_shift(u: &dyn Potential, exact: impl Fn(C64) -> f64, pts: &[C64]) -> Result<f64, String> {
    let a = pts.iter().map(|&z| u.value(z)).collect::<Result<Vec<_>, _>>().map_err(e)?;
    let b: Vec<f64> = pts.iter().map(|&z| exact(z)).collect();
    Ok(max_difference_after_shift(&a, &b))
}

fn list(v: &[f64], style: &str) -> String {
    let s: Vec<String> = v
        .iter()
        .map(|x| if style == "e" { format!("{x:.1e}") } else { format!("{x:.2}") })
        .collect();
    format!("[{}]", s.join(", "))
}

fn order(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// `R(θ) diag(λ, 1/λ) R(θ)ᵀ`; the `λ` eigenvector points along `θ`.
fn rotated(lambda: f64, theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    let (l1, l2) = (lambda, 1.0 / lambda);
    [
        [l1 * c * c + l2 * s * s, (l1 - l2) * c * s],
        [(l1 - l2) * c * s, l1 * s * s + l2 * c * c],
    ]
}

fn dictionary() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut round, mut oracle, mut det) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let lambda = rng.gen_range(1.0..10.0);
        let theta = rng.gen_range(0.0..PI);
        let a = rotated(lambda, theta);
        let mu = mu_of(&a);
        oracle = oracle.max((mu - C64::from_polar((1.0 - lambda) / (1.0 + lambda), 2.0 * theta)).norm());
        let b = matrix_of(mu).map_err(e)?;
        det = det.max((b[0][0] * b[1][1] - b[0][1] * b[1][0] - 1.0).abs());
        for i in 0..2 {
            for j in 0..2 {
                round = round.max((a[i][j] - b[i][j]).abs());
            }
        }
        round = round.max((mu_of(&b) - mu).norm());
    }
    let m = mu_of(&[[2.0, 0.0], [0.0, 0.5]]);
    let back = matrix_of(C64::new(-1.0 / 3.0, 0.0)).map_err(e)?;
    let pair = (m - C64::new(-1.0 / 3.0, 0.0))
        .norm()
        .max((back[0][0] - 2.0).abs())
        .max((back[1][1] - 0.5).abs())
        .max(back[0][1].abs());
    check(
        round <= 1e-10 && oracle <= 1e-10 && det <= 1e-12 && pair <= 1e-14,
        format!("round trip {round:.1e}, oracle {oracle:.1e}, det {det:.1e}, diag(2,1/2) {pair:.1e}"),
    )
}

fn classical_disk() -> Outcome {
    let n = 1024;
    let phi = BoundaryData::from_fn(n, f64::cos).map_err(e)?;
    let u = solve_neumann_disk(&phi, C64::new(1.0, 0.0)).map_err(e)?;
    let sup = sup_after_shift(&u, |z| -z.re, &disk_grid(C64::new(0.0, 0.0), 0.9, 0.02))?;
    let probes = neumann_probes(&u, 64, LimitOptions::default(), 0.1).map_err(e)?;
    let trace = probes
        .iter()
        .map(|q| (q.nontangential_limit.value - phi.values()[q.index]).abs())
        .fold(0.0, f64::max);
    check(
        sup <= 1e-6 && trace <= 1e-4 && probes.len() >= 60,
        format!("sup |u + x - c| {sup:.1e}, trace {trace:.1e} over {} probes", probes.len()),
    )
}

fn nonclassical_disk() -> Outcome {
    let n = 1024;
    let phi = BoundaryData::constant(n, 1.0).map_err(e)?;
    let u = solve_neumann_disk(&phi, C64::new(1.0, 0.0)).map_err(e)?;
    let r = certify(&u, LimitOptions::default(), 0.1);
    let refused = matches!(fourier_neumann_disk(&phi), Err(Error::Compatibility(_)));
    check(
        r.failed == 0 && r.checked > 0 && r.max <= 1e-3 && refused,
        format!(
            "residual {:.1e} over {} samples ({} excluded), oracle refuses: {refused}",
            r.max, r.checked, r.excluded
        ),
    )
}

/// `w` with `w + a w² = z`, by Newton from `w = z`.
fn limacon_inverse(a: f64, z: C64) -> C64 {
    let mut w = z;
    for _ in 0..60 {
        let dw = (w + a * w * w - z) / (1.0 + 2.0 * a * w);
        w -= dw;
        if dw.norm() < 1e-16 {
            break;
        }
    }
    w
}

fn jordan_limacon() -> Outcome {
    let (a, n) = (0.3, 1024);
    let curve = JordanCurve::limacon(a, n).map_err(e)?;
    let map = riemann_map(
        &curve,
        MapOptions {
            center: Some(C64::new(0.0, 0.0)),
            ..Default::default()
        },
    )
    .map_err(e)?;
    let mut ident = 0.0f64;
    for w in disk_grid(C64::new(0.0, 0.0), 0.95, 0.05) {
        ident = ident.max((map.forward(w + a * w * w).map_err(e)? - w).norm());
    }
    let phi = BoundaryData::unmasked(
        curve
            .params()
            .iter()
            .zip(curve.normals())
            .map(|(&t, nn)| (nn / (1.0 + 2.0 * a * C64::from_polar(1.0, t))).re)
            .collect(),
    )
    .map_err(e)?;
    let (u, _) = solve_neumann_jordan(&curve, &phi, C64::new(1.0, 0.0), 16).map_err(e)?;
    let pts = interior_grid(&curve, 0.1, 0.05);
    let rec = sup_after_shift(&u, |z| limacon_inverse(a, z).re, &pts)?;
    check(
        ident <= 1e-6 && rec <= 1e-3,
        format!("composition {ident:.1e}, recovery {rec:.1e} on {} nodes", pts.len()),
    )
}

fn smooth_random_mu(grid: Grid, k: f64, seed: u64) -> Result<BeltramiField, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, C64)> = (0..8)
        .map(|_| {
            (
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)),
            )
        })
        .collect();
    let raw = |z: C64| -> C64 {
        let s: C64 = modes.iter().map(|&(a, b, c)| c * C64::from_polar(1.0, a * z.re + b * z.im)).sum();
        s * cutoff(z.norm(), 0.2, 0.6)
    };
    let sup = grid.points().into_iter().map(|z| raw(z).norm()).fold(0.0, f64::max);
    BeltramiField::from_fn(grid, |z| raw(z) * (k / sup)).map_err(e)
}

fn beltrami() -> Outcome {
    let grid = Grid::new(C64::new(0.0, 0.0), 2.0, 512).map_err(e)?;
    let opts = BeltramiOptions::default();

    let id = solve_beltrami(&BeltramiField::zero(grid), opts).map_err(e)?;
    let id_err = grid
        .points()
        .iter()
        .zip(id.h_samples())
        .map(|(z, h)| (h - z).norm())
        .fold(0.0, f64::max);

    let plateau = BeltramiField::from_fn(grid, |z| C64::new(0.3 * cutoff(z.norm(), 0.3, 0.6), 0.0)).map_err(e)?;
    let hp = solve_beltrami(&plateau, opts).map_err(e)?;
    let mut ratio = 0.0f64;
    for z in disk_grid(C64::new(0.0, 0.0), 0.25, 0.05) {
        let v = hp.eval(z).map_err(e)?;
        ratio = ratio.max((v.hzb / v.hz - 0.3).norm());
    }

    let field = smooth_random_mu(grid, 0.4, 7)?;
    let hr = solve_beltrami(&field, opts).map_err(e)?;
    let bound = k_of(C64::new(0.4, 0.0)) + 0.05;
    check(
        id.residual() <= 1e-12
            && id_err <= 1e-12
            && ratio <= 1e-3
            && hr.residual() <= 1e-6
            && hr.min_jacobian() > 0.0
            && hr.max_distortion() <= bound,
        format!(
            "identity {:.1e}/{id_err:.1e}, plateau ratio {ratio:.1e}, random residual {:.1e}, min J {:.3}, distortion {:.3} <= {bound:.3}",
            id.residual(),
            hr.residual(),
            hr.min_jacobian(),
            hr.max_distortion()
        ),
    )
}

const DIAG: Mat2 = [[2.0, 0.0], [0.0, 0.5]];

/// Directional data of `∇u` along the interior normal.
fn normal_data(curve: &JordanCurve, grad: impl Fn(C64) -> C64) -> Result<BoundaryData, String> {
    BoundaryData::unmasked(
        curve
            .points()
            .iter()
            .zip(curve.normals())
            .map(|(&z, nn)| (grad(z) * nn.conj()).re)
            .collect(),
    )
    .map_err(e)
}

fn aniso_linear(n: usize, grid_n: usize) -> Result<(AHarmonicSolution, f64), String> {
    let curve = JordanCurve::unit_circle(n).map_err(e)?;
    let opts = AHarmonicOptions {
        grid_n,
        ..Default::default()
    };
    let a = coefficient_grid(&curve, &opts, 0.5, |_| DIAG).map_err(e)?;
    let phi = normal_data(&curve, |_| C64::new(1.0, 0.0))?;
    let nu = normal_field(&curve).map_err(e)?;
    let u = solve_directional_aharmonic(&a, &curve, &nu, &phi, C64::new(1.0, 0.0), &opts).map_err(e)?;
    let err = sup_after_shift(&u, |z| z.re, &disk_grid(C64::new(0.0, 0.0), 0.8, 0.05))?;
    Ok((u, err))
}

fn aharmonic() -> Outcome {
    let n = 1024;
    let curve = JordanCurve::unit_circle(n).map_err(e)?;
    let pts = disk_grid(C64::new(0.0, 0.0), 0.8, 0.05);

    let opts = AHarmonicOptions {
        grid_n: 256,
        ..Default::default()
    };
    let id = coefficient_grid(&curve, &opts, 0.5, |_| [[1.0, 0.0], [0.0, 1.0]]).map_err(e)?;
    let phi = BoundaryData::from_fn(n, |t| (2.0 * t).cos() + 0.5 * t.sin()).map_err(e)?;
    let (ua, _) = solve_neumann_aharmonic(&id, &curve, &phi, C64::new(1.0, 0.0), 16, &opts).map_err(e)?;
    let uh = solve_neumann_disk(&phi, C64::new(1.0, 0.0)).map_err(e)?;
    let a = pts.iter().map(|&z| ua.value(z)).collect::<Result<Vec<_>, _>>().map_err(e)?;
    let b = pts.iter().map(|&z| uh.value(z)).collect::<Result<Vec<_>, _>>().map_err(e)?;
    let identity = max_difference_after_shift(&a, &b);

    let (_, linear) = aniso_linear(n, 256)?;

    // u₀ = x + x²/2 − 2y² solves div(A∇u) = 0 for A = diag(2, 1/2)
    let grad = |z: C64| C64::new(1.0 + z.re, -4.0 * z.im);
    let a_field = coefficient_grid(&curve, &opts, 0.5, |_| DIAG).map_err(e)?;
    let nu = normal_field(&curve).map_err(e)?;
    let u = solve_directional_aharmonic(&a_field, &curve, &nu, &normal_data(&curve, grad)?, C64::new(1.0, 0.0), &opts).map_err(e)?;
    let conormal = normal_data(&curve, |z| {
        let g = grad(z);
        C64::new(DIAG[0][0] * g.re, DIAG[1][1] * g.im)
    })?;
    let fd_grid = FDGrid::new(&curve, 128).map_err(e)?;
    let fd = fd_solve_neumann(Coefficients::Constant(DIAG), &fd_grid, &conormal, FDOptions::default()).map_err(e)?;
    let cells: Vec<(C64, f64)> = fd.samples().into_iter().filter(|(z, _)| z.norm() <= 0.8).collect();
    let a = cells.iter().map(|(z, _)| u.value(*z)).collect::<Result<Vec<_>, _>>().map_err(e)?;
    let b: Vec<f64> = cells.iter().map(|c| c.1).collect();
    let fd_gap = max_difference_after_shift(&a, &b);
    check(
        identity <= 1e-6 && linear <= 1e-2 && fd_gap <= 1e-2,
        format!(
            "A = I vs harmonic {identity:.1e}, u0 = x recovery {linear:.1e}, FD gap {fd_gap:.1e} on {} cells",
            cells.len()
        ),
    )
}

fn family() -> Outcome {
    let n = 1024;
    let curve = JordanCurve::unit_circle(n).map_err(e)?;
    let nu = normal_field(&curve).map_err(e)?;
    let phi = BoundaryData::constant(n, 1.0).map_err(e)?;
    let points: Vec<C64> = (0..6).map(|k| C64::from_polar(1.0, PI * k as f64 / 3.0 + 0.1)).collect();
    let fam = generate_family(&nu, &phi, &points).map_err(e)?;
    let cert = independence_certificate(&fam.members, &default_sample_grid()).map_err(e)?;
    let worst = fam
        .residuals
        .iter()
        .map(|r| if r.failed > 0 { f64::INFINITY } else { r.max })
        .fold(0.0, f64::max);
    check(
        cert.rank == 6 && cert.min_eig > 1e-8 * cert.trace && worst <= 1e-3,
        format!(
            "rank {}, min eig / trace {:.1e}, worst member residual {worst:.1e}",
            cert.rank,
            cert.min_eig / cert.trace
        ),
    )
}

/// `Σ sin(kt)/k³` on `[0, 2π]`.
fn sine_cubic(t: f64) -> f64 {
    PI * PI * t / 6.0 - PI * t * t / 4.0 + t * t * t / 12.0
}

fn convergence() -> Outcome {
    // ∂u/∂n = −∂u/∂r = −Σ sin(kt)/k³ for u = Im Σ z^k/k⁴
    let exact = |z: C64| -> f64 {
        let mut s = C64::new(0.0, 0.0);
        let mut p = z;
        for k in 1..2000 {
            s += p / (k as f64).powi(4);
            p *= z;
        }
        s.im
    };
    let pts = disk_grid(C64::new(0.0, 0.0), 0.9, 0.05);
    let mut disk = Vec::new();
    for n in [64, 128, 256] {
        let phi = BoundaryData::from_fn(n, |t| -sine_cubic(t)).map_err(e)?;
        let u = solve_neumann_disk(&phi, C64::new(1.0, 0.0)).map_err(e)?;
        disk.push(sup_after_shift(&u, exact, &pts)?);
    }
    let mut aniso = Vec::new();
    for g in [64, 128, 256] {
        aniso.push(aniso_linear(1024, g)?.1);
    }
    let (od, oa) = (order(&disk), order(&aniso));
    let min = od.iter().chain(&oa).cloned().fold(f64::INFINITY, f64::min);
    check(
        min >= 1.5,
        format!(
            "disk errors {} orders {}; A-harmonic errors {} orders {}",
            list(&disk, "e"),
            list(&od, "f"),
            list(&aniso, "e"),
            list(&oa, "f")
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 mu-A dictionary", dictionary, Some(1.0)),
        ("2 classical Neumann on the disk", classical_disk, Some(5.0)),
        ("3 Neumann data without compatibility", nonclassical_disk, Some(5.0)),
        ("4 limacon domain", jordan_limacon, Some(30.0)),
        ("5 Beltrami solver at 512^2", beltrami, Some(60.0)),
        ("6 A-harmonic end to end", aharmonic, Some(120.0)),
        ("7 corrector family independence", family, Some(30.0)),
        ("8 convergence orders", convergence, None),
    ];
    let mut failures = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let in_time = budget.is_none_or(|b| secs < b);
        let (pass, detail) = match outcome {
            Ok((ok, d)) => (ok && in_time, d),
            Err(msg) => (false, format!("error: {msg}")),
        };
        if !pass {
            failures += 1;
        }
        let limit = budget.map(|b| format!(" of {b:.0} s")).unwrap_or_default();
        println!("{} {name}: {detail} [{secs:.2} s{limit}]", if pass { "PASS" } else { "FAIL" });
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
