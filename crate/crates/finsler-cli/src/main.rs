//! Command-line front end for the Finsler geometry engine.
//!
//! Exit codes: 0 when every requested check passes, 1 when any check fails,
//! 2 for configuration, parse, or model errors.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use finsler::concurrent::check_concurrent;
use finsler::geometry::{ChartPoint, GeomEval};
use finsler::verify::{render_text, run_suite, sample_where};
use finsler::{Error, Result};

#[derive(Parser)]
#[command(
    name = "finsler",
    about = "Evaluate Finsler metrics by exact jet differentiation and verify the transformation laws of the concurrent-field Kropina-type change"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the verification suite from a JSON configuration.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Write the machine-readable report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the connection-law sign (+1 or -1).
        #[arg(long, allow_hyphen_values = true)]
        sigma: Option<f64>,
        /// Force single-threaded evaluation.
        #[arg(long)]
        sequential: bool,
        /// Override the sample seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate every fundamental object of the configured metric at a point.
    Tensors {
        #[arg(long)]
        config: PathBuf,
        /// Chart point, e.g. "x=2,0,0;y=1,2,1".
        #[arg(long)]
        at: String,
        #[arg(long, default_value_t = 4)]
        order: usize,
    },
    /// Measure the concurrency residuals of the configured vector field.
    CheckConcurrent {
        #[arg(long)]
        config: PathBuf,
    },
    /// Exercise the structural identities of the canonical bundle objects.
    FnSelftest {
        /// Optional model configuration; defaults to a flat chart.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Print to stdout, exiting with the conventional SIGPIPE code if the
/// consumer has gone away (e.g. `finsler tensors ... | head`).
fn emit(text: std::fmt::Arguments<'_>) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_fmt(text).and_then(|()| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(141);
        }
        eprintln!("error: cannot write to stdout: {e}");
        std::process::exit(2);
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Verify {
            config,
            out,
            sigma,
            sequential,
            seed,
        } => {
            let mut loaded = config::load(&config)?;
            if let Some(s) = sigma {
                loaded.opts.sigma = s;
            }
            if sequential {
                loaded.opts.sequential = true;
            }
            if let Some(s) = seed {
                loaded.spec.seed = s;
            }
            let report = run_suite(&loaded.model, &loaded.spec, &loaded.opts, &loaded.checks)?;
            emit(format_args!("{}", render_text(&report)));
            if let Some(path) = out {
                let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Config {
                    reason: format!("cannot serialize report: {e}"),
                })?;
                std::fs::write(&path, json + "\n").map_err(|e| Error::Config {
                    reason: format!("cannot write {}: {e}", path.display()),
                })?;
            }
            Ok(if report.pass { 0 } else { 1 })
        }
        Cmd::Tensors { config, at, order } => {
            let loaded = config::load(&config)?;
            let point = parse_at(&at, loaded.model.dim)?;
            let geom = GeomEval::new(&loaded.model, &point, order)?;
            let doc = serde_json::json!({
                "x": point.x,
                "y": point.y,
                "order": order,
                "norm": geom.f,
                "fundamental_tensor": geom.g,
                "inverse_tensor": geom.g_inv,
                "unit_covector": geom.ell,
                "angular_metric": geom.hbar,
                "cartan_torsion": geom.cartan,
                "spray": geom.spray,
                "nonlinear_connection": geom.nonlinear,
                "berwald_connection": geom.berwald,
                "curvature": geom.curvature,
            });
            emit(format_args!(
                "{}\n",
                serde_json::to_string_pretty(&doc).expect("plain data")
            ));
            Ok(0)
        }
        Cmd::CheckConcurrent { config } => {
            let loaded = config::load(&config)?;
            let pts = sample_where(
                &loaded.model,
                &loaded.spec,
                loaded.spec.count.min(25).max(3),
                "concurrency",
                &|_| true,
            )?;
            let report = check_concurrent(&loaded.model, &pts, loaded.opts.tol_algebraic)?;
            emit(format_args!(
                "c = {:.12}\nhorizontal residual {:.3e}\nvertical residual {:.3e}\ntorsion residual {:.3e}\nconcurrent: {}\nunit constant: {}\n",
                report.c,
                report.h_residual,
                report.v_residual,
                report.cartan_residual,
                report.concurrent,
                report.unit_constant
            ));
            Ok(if report.concurrent && report.unit_constant {
                0
            } else {
                1
            })
        }
        Cmd::FnSelftest { config } => {
            let (model, spec) = match config {
                Some(path) => {
                    let loaded = config::load(&path)?;
                    (loaded.model, loaded.spec)
                }
                None => default_selftest_setup()?,
            };
            let pts = sample_where(
                &model,
                &spec,
                spec.count.min(5).max(3),
                "fn-selftest",
                &|_| true,
            )?;
            let mut worst = 0.0f64;
            for (i, p) in pts.iter().enumerate() {
                let geom = GeomEval::new(&model, p, 4)?;
                let mut rng = spec.point_rng("fn-selftest", i);
                let r = finsler::fncalc::structure_selftest(&geom, &mut rng)?;
                worst = worst.max(r);
            }
            emit(format_args!(
                "structural identities: worst residual {worst:.3e} over {} points\n",
                pts.len()
            ));
            Ok(if worst <= 1e-9 { 0 } else { 1 })
        }
    }
}

fn default_selftest_setup() -> Result<(finsler::geometry::FinslerModel, finsler::verify::SampleSpec)>
{
    let dim = 3;
    let metric = finsler::expr::parse("sqrt(y1^2 + y2^2 + y3^2)", dim)?;
    let phi = vec![
        finsler::expr::parse("-x1", dim)?,
        finsler::expr::parse("-x2", dim)?,
        finsler::expr::parse("-x3", dim)?,
    ];
    let model = finsler::geometry::FinslerModel::new(dim, metric, phi, Vec::new(), 2.0)?;
    let spec = finsler::verify::SampleSpec {
        ranges: vec![
            [0.5, 1.5],
            [0.5, 1.5],
            [0.5, 1.5],
            [-1.5, -0.5],
            [-1.5, -0.5],
            [-1.5, -0.5],
        ],
        count: 5,
        seed: 7,
        max_attempts: 100_000,
        guard_margin: 1e-3,
    };
    Ok((model, spec))
}

/// Parse "x=a,b,...;y=c,d,..." into a chart point.
fn parse_at(s: &str, dim: usize) -> Result<ChartPoint> {
    let mut x: Option<Vec<f64>> = None;
    let mut y: Option<Vec<f64>> = None;
    for part in s.split(';') {
        let (key, rest) = part.split_once('=').ok_or_else(|| Error::Config {
            reason: format!("point component {part:?} is not of the form name=values"),
        })?;
        let vals = rest
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|_| Error::Config {
                    reason: format!("bad coordinate {t:?} in {part:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != dim {
            return Err(Error::Config {
                reason: format!(
                    "{} has {} coordinates for dimension {dim}",
                    key.trim(),
                    vals.len()
                ),
            });
        }
        match key.trim() {
            "x" => x = Some(vals),
            "y" => y = Some(vals),
            other => {
                return Err(Error::Config {
                    reason: format!("unknown point component {other:?} (expected x or y)"),
                })
            }
        }
    }
    match (x, y) {
        (Some(x), Some(y)) => Ok(ChartPoint::new(x, y)),
        _ => Err(Error::Config {
            reason: "point needs both x=... and y=... components".into(),
        }),
    }
}
