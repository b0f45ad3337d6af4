//! Command-line front end for the `omega` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::averaging::{
    ensemble_correlator_analytic, ensemble_correlator_mc, isotropic_correlator,
    semiclassical_adjoint, torus_generators, v_average_adjoint, v_average_saddles_closed_form,
    v_saddle_correlator, EnsembleKind,
};
use crate::correlator::{omega_character, omega_secular, parse_range, CorrelatorCurve, GammaGrid};
use crate::crossover::{asymptotic_scaled, crossover_exact_scaled, CrossoverPoint, Regime};
use crate::error::{Error, Result};
use crate::fock::{
    build_basis, casimir_table, character_trace, hermitian_spectrum, integer_spectrum, laplacian,
    omega_fock,
};
use crate::geometry::{manifold_census, mc_omega};
use crate::loops::{expected_loop_constant, loop_constant, loop_corrections};
use crate::rng::RngStream;
use crate::unitary::{
    adjoint_operator, eigenphases, haar_sample, kicked_map, poisson_sample, read_matrix_list,
    UnitaryMatrix, FILE_UNITARY_TOL,
};
use crate::verify::{run_suite, Level};
use crate::weyl::{
    averaged_standard_saddles, config_count, gap_diagnostic, standard_saddles, weyl_point,
    weyl_sum, zirn_approximation, MAX_WEYL_N,
};

pub const THREADS_ENV: &str = "OMEGA_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "omega",
    version,
    about = "Spectral-determinant autocorrelation of unitary matrices"
)]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    /// Unitarity tolerance applied to matrix files.
    #[arg(long, global = true, default_value_t = FILE_UNITARY_TOL)]
    pub unitary_tol: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Secular,
    Character,
    Fock,
    Weyl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Basis,
    Isotropic,
    Semiclassical,
    Ensemble,
}

/// Exactly one matrix source.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Matrix JSON file `{"n", "re", "im"}`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Random ensemble (one draw unless --samples averages).
    #[arg(long, value_parser = parse_ensemble)]
    pub ensemble: Option<EnsembleKind>,
    /// Kicked map `kicked:k1,k2,...` (kick Fourier amplitudes).
    #[arg(long)]
    pub map: Option<String>,
    /// Diagonal matrix from comma-separated eigenphases.
    #[arg(long, allow_hyphen_values = true)]
    pub phases: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Output file; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Correlator curve by a chosen exact route, or an ensemble average.
    Omega {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        n: Option<usize>,
        /// x grid `a:b:steps` (gamma = e^{ix/N}) or a single value.
        #[arg(long, conflicts_with = "gamma")]
        x: Option<String>,
        /// Complex gamma values `re,im`; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        gamma: Vec<String>,
        #[arg(long, value_enum, default_value_t = Route::Secular)]
        route: Route,
        /// Ensemble samples to average (with --ensemble).
        #[arg(long)]
        samples: Option<u64>,
        /// Analytic ensemble average instead of sampling.
        #[arg(long)]
        analytic: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: Output,
    },
    /// Weyl saddle sum over all C(2N,N) configurations.
    Weyl {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        x: String,
        /// Dump per-(p,r) class aggregates as CSV.
        #[arg(long)]
        list_terms: bool,
        /// Refuse to run above this number of configurations.
        #[arg(long, default_value_t = 40_116_600)]
        max_terms: u128,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: Output,
    },
    /// Standard saddles and their averaged forms against the exact value.
    Saddle {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        x: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Keep the C_N prefactor in averaged formulas.
        #[arg(long)]
        include_cn: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Averaged correlator under a chosen scheme.
    Average {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long)]
        x: String,
        /// Heat-kernel time for the isotropic scheme.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Perturbation width for the semiclassical scheme.
        #[arg(long, default_value_t = 0.1)]
        width: f64,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Hermitian generators (JSON list of matrices); torus generators otherwise.
        #[arg(long)]
        generators: Option<PathBuf>,
        #[arg(long)]
        include_cn: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Poisson to CUE crossover curve.
    Crossover {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        x_range: String,
        /// Emit exact, asymptotic and ratio columns.
        #[arg(long)]
        compare_asymptotic: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo coherent-state integral against the exact value.
    McIntegral {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        n: Option<usize>,
        /// Complex gamma `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        gamma: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Critical-submanifold census (p, r, volume, points).
    Census {
        #[arg(long)]
        n: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Fock-space oracle: Laplacian spectrum and route deviation.
    FockCheck {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// One- and two-loop constants by Wick contraction.
    Loops {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        order: usize,
        /// Uses T = gamma Ad U for a Haar U drawn with this seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, allow_hyphen_values = true, default_value = "0.6,0.2")]
        gamma: String,
    },
    /// Cross-route invariant suite; nonzero exit lists failures.
    Verify {
        #[arg(long, default_value = "quick", value_parser = parse_level)]
        level: Level,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Writes a gnuplot script for CSV curve files.
    Plot {
        files: Vec<PathBuf>,
        /// `single` (one panel per file) or `overlay` (exact/asymptotic with ratio inset).
        #[arg(long, default_value = "single")]
        style: String,
        #[arg(long, short, default_value = "plot.gp")]
        output: PathBuf,
    },
}

fn parse_ensemble(s: &str) -> std::result::Result<EnsembleKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_level(s: &str) -> std::result::Result<Level, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

pub fn parse_complex(s: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || Error::Parse(format!("expected re,im, got {s:?}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(re.trim().parse().map_err(|_| bad())?, 0.0)),
        [re, im] => Ok(Complex64::new(
            re.trim().parse().map_err(|_| bad())?,
            im.trim().parse().map_err(|_| bad())?,
        )),
        _ => Err(bad()),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {v:?} in {s:?}")))
        })
        .collect()
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| Error::Config("--seed is required for random sources".into()))
}

/// Resolves the matrix source to a single unitary.
pub fn load_unitary(
    source: &Source,
    n: Option<usize>,
    seed: Option<u64>,
    tol: f64,
) -> Result<UnitaryMatrix> {
    let need_n = || n.ok_or_else(|| Error::Config("--n is required for this source".into()));
    let u = if let Some(path) = &source.input {
        UnitaryMatrix::read_json(path, tol)?
    } else if let Some(kind) = source.ensemble {
        let stream = RngStream::new(require_seed(seed)?, 0);
        match kind {
            EnsembleKind::Cue => haar_sample(need_n()?, stream)?,
            EnsembleKind::Poisson => poisson_sample(need_n()?, stream)?,
        }
    } else if let Some(spec) = &source.map {
        let kicks = spec.strip_prefix("kicked:").ok_or_else(|| {
            Error::Parse(format!("map spec must be kicked:k1,k2,..., got {spec:?}"))
        })?;
        kicked_map(need_n()?, &parse_list(kicks)?)?
    } else if let Some(phases) = &source.phases {
        UnitaryMatrix::diagonal(&parse_list(phases)?)?
    } else {
        return Err(Error::Config("no matrix source given".into()));
    };
    if let Some(n) = n {
        if n != u.n() {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: u.n(),
            });
        }
    }
    Ok(u)
}

fn x_grid(n: usize, spec: &str) -> Result<GammaGrid> {
    Ok(GammaGrid::from_x(n, &parse_range(spec)?))
}

fn open_output<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn emit_curve(curve: &CorrelatorCurve, out: &Output, stdout: &mut dyn Write) -> Result<()> {
    let mut w = open_output(out.output.as_deref(), stdout)?;
    match out.format {
        Format::Csv => curve.write_csv(&mut w)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, curve)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn route_curve(route: Route, u: &UnitaryMatrix, grid: &GammaGrid) -> Result<CorrelatorCurve> {
    match route {
        Route::Secular => omega_secular(u, grid),
        Route::Character => omega_character(u, grid),
        Route::Fock => omega_fock(u, grid),
        Route::Weyl => weyl_sum(u, grid),
    }
}

fn resolve_grid(n: usize, x: &Option<String>, gamma: &[String]) -> Result<GammaGrid> {
    match (x, gamma.is_empty()) {
        (Some(spec), _) => x_grid(n, spec),
        (None, false) => {
            let gs = gamma
                .iter()
                .map(|g| parse_complex(g))
                .collect::<Result<Vec<_>>>()?;
            Ok(GammaGrid::from_gamma(n, &gs))
        }
        (None, true) => Err(Error::Config("give --x or --gamma".into())),
    }
}

fn write_rows(w: &mut dyn Write, header: &str, rows: &[String]) -> Result<()> {
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

/// Relative path from `base_dir` to `target`, both made absolute first.
fn relative_path(target: &Path, base_dir: &Path) -> Result<PathBuf> {
    let t = std::fs::canonicalize(target)?;
    let b = std::fs::canonicalize(base_dir)?;
    let tc: Vec<_> = t.components().collect();
    let bc: Vec<_> = b.components().collect();
    let common = tc.iter().zip(&bc).take_while(|(a, b)| a == b).count();
    let mut out = PathBuf::new();
    for _ in common..bc.len() {
        out.push("..");
    }
    for c in &tc[common..] {
        out.push(c);
    }
    Ok(out)
}

/// Gnuplot script for CSV curve files, referencing them relative to the
/// script's directory.
pub fn emit_plotscript(files: &[PathBuf], style: &str, script: &Path) -> Result<String> {
    if files.is_empty() {
        return Err(Error::Config("plot needs at least one CSV file".into()));
    }
    for f in files {
        if !f.is_file() {
            return Err(Error::Io(format!("missing file {}", f.display())));
        }
    }
    let dir = match script.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let rel = files
        .iter()
        .map(|f| relative_path(f, &dir).map(|p| p.display().to_string()))
        .collect::<Result<Vec<_>>>()?;
    let mut s =
        String::from("set datafile separator ','\nset key autotitle columnhead\nset xlabel 'x'\n");
    match style {
        "single" => {
            s.push_str(&format!("set multiplot layout {},1\n", rel.len()));
            for r in &rel {
                s.push_str(&format!(
                    "set ylabel 'Omega'\nplot '{r}' using 1:3 with lines\n"
                ));
            }
            s.push_str("unset multiplot\n");
        }
        "overlay" => {
            s.push_str("set multiplot\nset ylabel 'Omega'\n");
            let r = &rel[0];
            s.push_str(&format!(
                "plot '{r}' using 1:2 with lines title 'exact', '{r}' using 1:3 with lines dt 2 title 'asymptotic'\n"
            ));
            s.push_str("set origin 0.55,0.55\nset size 0.4,0.4\nset ylabel 'ratio'\nunset key\n");
            s.push_str(&format!("plot '{r}' using 1:4 with lines\n"));
            s.push_str("unset multiplot\n");
        }
        other => {
            return Err(Error::Config(format!(
                "unknown plot style {other:?} (single|overlay)"
            )))
        }
    }
    Ok(s)
}

fn run_command(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    let tol = cli.unitary_tol;
    match &cli.command {
        Command::Omega {
            source,
            n,
            x,
            gamma,
            route,
            samples,
            analytic,
            seed,
            out,
        } => {
            if let Some(kind) = source.ensemble {
                if *analytic || samples.is_some() {
                    let n =
                        n.ok_or_else(|| Error::Config("--n is required for ensembles".into()))?;
                    let grid = resolve_grid(n, x, gamma)?;
                    let curve = if *analytic {
                        ensemble_correlator_analytic(kind, n, &grid)
                    } else {
                        let stream = RngStream::new(require_seed(*seed)?, 1);
                        ensemble_correlator_mc(kind, n, &grid, samples.unwrap_or(1), stream)?.curve
                    };
                    emit_curve(&curve, out, stdout)?;
                    return Ok(0);
                }
            }
            let u = load_unitary(source, *n, *seed, tol)?;
            let grid = resolve_grid(u.n(), x, gamma)?;
            emit_curve(&route_curve(*route, &u, &grid)?, out, stdout)?;
        }
        Command::Weyl {
            source,
            n,
            x,
            list_terms,
            max_terms,
            seed,
            out,
        } => {
            let u = load_unitary(source, *n, *seed, tol)?;
            if u.n() > MAX_WEYL_N || config_count(u.n()) > *max_terms {
                return Err(Error::EnumerationCap {
                    n: u.n(),
                    max: MAX_WEYL_N,
                });
            }
            let grid = x_grid(u.n(), x)?;
            if *list_terms {
                let spec = eigenphases(&u)?;
                let mut rows = Vec::new();
                for p in &grid.points {
                    let r = weyl_point(&spec.thetas, p, true)?;
                    for a in &r.aggregates {
                        rows.push(format!(
                            "{},{},{},{},{},{},{}",
                            p.x.unwrap_or(0.0),
                            a.p,
                            a.r,
                            a.count,
                            a.sum.re,
                            a.sum.im,
                            a.max_abs
                        ));
                    }
                }
                let mut w = open_output(out.output.as_deref(), stdout)?;
                write_rows(&mut w, "x,p,r,count,sum_re,sum_im,max_abs", &rows)?;
                w.flush()?;
            } else {
                emit_curve(&weyl_sum(&u, &grid)?, out, stdout)?;
            }
        }
        Command::Saddle {
            source,
            n,
            x,
            seed,
            include_cn,
            out,
        } => {
            let u = load_unitary(source, *n, *seed, tol)?;
            let grid = x_grid(u.n(), x)?;
            let spec = eigenphases(&u)?;
            let exact = omega_secular(&u, &grid)?;
            let adj = adjoint_operator(&u);
            let gap = gap_diagnostic(&adj).ok();
            let mut rows = Vec::new();
            for (p, e) in grid.points.iter().zip(&exact.values) {
                let xv = p.x.unwrap_or(0.0);
                let (plus, minus) = standard_saddles(&spec, p.gamma)?;
                let averaged = averaged_standard_saddles(&adj, xv, *include_cn).unwrap_or(f64::NAN);
                let zirn = zirn_approximation(&adj, xv, *include_cn).unwrap_or(f64::NAN);
                rows.push(format!(
                    "{xv},{},{},{},{},{averaged},{zirn},{},{}",
                    plus.re, plus.im, minus.re, minus.im, e.re, e.im
                ));
            }
            let mut w = open_output(out.output.as_deref(), stdout)?;
            if let Some(g) = gap {
                writeln!(w, "# gap={} relevance_sum={}", g.gap, g.relevance_sum)?;
            }
            write_rows(
                &mut w,
                "x,plus_re,plus_im,minus_re,minus_im,averaged,zirn,exact_re,exact_im",
                &rows,
            )?;
            w.flush()?;
        }
        Command::Average {
            source,
            n,
            scheme,
            x,
            epsilon,
            width,
            samples,
            seed,
            generators,
            include_cn,
            out,
        } => match scheme {
            SchemeArg::Ensemble => {
                let kind = source
                    .ensemble
                    .ok_or_else(|| Error::Config("ensemble scheme needs --ensemble".into()))?;
                let n = n.ok_or_else(|| Error::Config("--n is required for ensembles".into()))?;
                let grid = x_grid(n, x)?;
                let stream = RngStream::new(require_seed(*seed)?, 2);
                let curve = ensemble_correlator_mc(kind, n, &grid, *samples, stream)?.curve;
                emit_curve(&curve, out, stdout)?;
            }
            SchemeArg::Isotropic => {
                let u = load_unitary(source, *n, *seed, tol)?;
                let grid = x_grid(u.n(), x)?;
                emit_curve(&isotropic_correlator(&u, *epsilon, &grid)?, out, stdout)?;
            }
            SchemeArg::Basis | SchemeArg::Semiclassical => {
                let u = load_unitary(source, *n, *seed, tol)?;
                let xs = parse_range(x)?;
                let avg = if *scheme == SchemeArg::Basis {
                    v_average_adjoint(&u)?
                } else {
                    let gens = match generators {
                        Some(p) => read_matrix_list(p)?,
                        None => torus_generators(u.n()),
                    };
                    semiclassical_adjoint(
                        &u,
                        &gens,
                        *width,
                        *samples,
                        RngStream::new(require_seed(*seed)?, 3),
                    )?
                };
                let label = avg.scheme.label();
                let mut rows = Vec::new();
                for &xv in &xs {
                    let averaged = averaged_standard_saddles(&avg.matrix, xv, *include_cn)?;
                    let zirn = zirn_approximation(&avg.matrix, xv, *include_cn).unwrap_or(f64::NAN);
                    let extra = if *scheme == SchemeArg::Basis {
                        format!(
                            ",{},{}",
                            v_average_saddles_closed_form(&u, xv)?,
                            v_saddle_correlator(&u, xv, *include_cn)?
                        )
                    } else {
                        String::new()
                    };
                    rows.push(format!("{xv},{averaged},{zirn}{extra},{label}"));
                }
                let header = if *scheme == SchemeArg::Basis {
                    "x,averaged_saddles,zirn,closed_form,invariant_saddle,scheme"
                } else {
                    "x,averaged_saddles,zirn,scheme"
                };
                let mut w = open_output(out.output.as_deref(), stdout)?;
                write_rows(&mut w, header, &rows)?;
                w.flush()?;
            }
        },
        Command::Crossover {
            n,
            eps,
            x_range,
            compare_asymptotic,
            output,
        } => {
            let xs = parse_range(x_range)?;
            let point = CrossoverPoint::classify(*n, *eps)?;
            let exact = crossover_exact_scaled(*n, *eps, &xs)?;
            let mut w = open_output(output.as_deref(), stdout)?;
            writeln!(
                w,
                "# N={} eps={} regime={:?} y_eps={}",
                n,
                eps,
                point.regime,
                point.y_eps.map_or("none".to_string(), |y| y.to_string())
            )?;
            if *compare_asymptotic && point.regime != Regime::Critical {
                let asym = asymptotic_scaled(*n, *eps, &xs)?;
                let ratio = exact.ratio(&asym);
                // common scale: columns are multiplied by exp(ln_scale)
                let scale = exact.ln_scale;
                let k = (asym.ln_scale - scale).exp();
                writeln!(w, "x,exact,asymptotic,ratio,ln_scale")?;
                for i in 0..xs.len() {
                    writeln!(
                        w,
                        "{},{},{},{},{}",
                        xs[i],
                        exact.values[i],
                        asym.values[i] * k,
                        ratio[i],
                        scale
                    )?;
                }
            } else {
                writeln!(w, "x,exact,ln_scale")?;
                for (xv, v) in xs.iter().zip(&exact.values) {
                    writeln!(w, "{},{},{}", xv, v, exact.ln_scale)?;
                }
            }
            w.flush()?;
        }
        Command::McIntegral {
            source,
            n,
            gamma,
            samples,
            seed,
        } => {
            let u = load_unitary(source, *n, Some(*seed), tol)?;
            let g = parse_complex(gamma)?;
            let est = mc_omega(&u, g, *samples, RngStream::new(*seed, 4))?;
            let exact = omega_secular(&u, &GammaGrid::from_gamma(u.n(), &[g]))?.values[0];
            let z = (est.estimate - exact).norm() / est.stderr;
            writeln!(stdout, "estimate_re,estimate_im,stderr,exact_re,exact_im,z")?;
            writeln!(
                stdout,
                "{},{},{},{},{},{}",
                est.estimate.re, est.estimate.im, est.stderr, exact.re, exact.im, z
            )?;
        }
        Command::Census { n, output } => {
            let c = manifold_census(*n)?;
            let rows: Vec<String> = c
                .manifolds
                .iter()
                .map(|m| format!("{},{},{},{}", m.p, m.r, m.volume, m.points))
                .collect();
            let mut w = open_output(output.as_deref(), stdout)?;
            write_rows(&mut w, "p,r,volume,points", &rows)?;
            w.flush()?;
        }
        Command::FockCheck { n, seed } => {
            let basis = build_basis(*n)?;
            let spec = integer_spectrum(&hermitian_spectrum(&laplacian(&basis))?)?;
            let u = haar_sample(*n, RngStream::new(*seed, 5))?;
            let mut worst: f64 = 0.0;
            for g in [
                Complex64::new(0.5, 0.4),
                Complex64::from_polar(1.0, 1.1),
                Complex64::new(1.3, -0.2),
            ] {
                let f = character_trace(&u, g, &basis)?;
                let s = omega_secular(&u, &GammaGrid::from_gamma(*n, &[g]))?.values[0];
                worst = worst.max((f - s).norm() / s.norm());
            }
            let fmt = |t: &[(i64, usize)]| {
                t.iter()
                    .map(|(e, m)| format!("{e}^{m}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            writeln!(
                stdout,
                "N,dim_F,laplacian_spectrum,expected,max_route_deviation"
            )?;
            writeln!(
                stdout,
                "{},{},{},{},{:.3e}",
                n,
                basis.dim(),
                fmt(&spec),
                fmt(&casimir_table(*n)),
                worst
            )?;
            if spec != casimir_table(*n) {
                return Ok(1);
            }
        }
        Command::Loops {
            n,
            order,
            seed,
            gamma,
        } => {
            let u = haar_sample(*n, RngStream::new(*seed, 6))?;
            let t = adjoint_operator(&u) * parse_complex(gamma)?;
            let c = loop_constant(&t, *order)?;
            let v = loop_corrections(&t, *order)?;
            writeln!(
                stdout,
                "N,order,constant_re,constant_im,expected,value_re,value_im"
            )?;
            writeln!(
                stdout,
                "{},{},{},{},{},{},{}",
                n,
                order,
                c.re,
                c.im,
                expected_loop_constant(*n, *order)?,
                v.re,
                v.im
            )?;
        }
        Command::Verify { level, seed } => {
            let results = run_suite(*level, *seed);
            let mut failed = Vec::new();
            for r in &results {
                writeln!(
                    stdout,
                    "{} {}: {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                )?;
                if !r.passed {
                    failed.push(r.name.clone());
                }
            }
            if !failed.is_empty() {
                writeln!(stdout, "failed: {}", failed.join(", "))?;
                return Ok(1);
            }
        }
        Command::Plot {
            files,
            style,
            output,
        } => {
            let script = emit_plotscript(files, style, output)?;
            std::fs::write(output, script)?;
            writeln!(stdout, "wrote {}", output.display())?;
        }
    }
    Ok(0)
}

/// Runs a parsed command on a dedicated thread pool; returns the exit code.
pub fn run(cli: &Cli, stdout: &mut (dyn Write + Send)) -> Result<i32> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| run_command(cli, stdout))
}
