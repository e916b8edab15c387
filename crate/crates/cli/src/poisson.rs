use std::path::PathBuf;

use clap::Subcommand;
use ineqlab::moments::McOptions;
use ineqlab::poisson::{
    mecke_check_functional, poisson_moment_check, sample_process, ustat_tail_compare, LibraryFunctional,
    PoissonMcOptions, Window,
};
use serde_json::json;

use crate::input::{parse_count, read_json};
use crate::output::{CliError, CliResult};
use crate::{Ctx, Outcome};

#[derive(clap::Args)]
pub struct WindowArgs {
    /// Window JSON: {"bounds": [[lo, hi], ...], "intensity": λ}. Overrides --dim/--intensity.
    #[arg(long)]
    window: Option<PathBuf>,
    /// Dimension of the unit-cube window.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Intensity on the unit cube, so λ·vol equals it.
    #[arg(long, default_value_t = 30.0)]
    intensity: f64,
    /// Interaction radius of the geometric functionals.
    #[arg(long, default_value_t = 0.1)]
    radius: f64,
}

impl WindowArgs {
    fn window(&self) -> CliResult<Window> {
        match &self.window {
            Some(p) => read_json(p),
            None => Ok(Window::unit_cube(self.dim, self.intensity)?),
        }
    }
}

#[derive(Subcommand)]
pub enum Command {
    /// Mecke formula with H(η, x) = D_x⁺F(η) for a library functional, or all five.
    Mecke {
        #[command(flatten)]
        window: WindowArgs,
        /// Functional name or `library`.
        #[arg(long = "H", default_value = "library")]
        h: String,
        #[arg(long, value_parser = parse_count, default_value = "100000")]
        samples: usize,
        #[arg(long, default_value_t = 8)]
        quadrature: usize,
    },
    /// Moment bounds through Γ and Γ₊.
    Moments {
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, default_value = "count")]
        functional: String,
        #[arg(long, value_delimiter = ',', default_values_t = [2.0, 4.0])]
        r: Vec<f64>,
        #[arg(long, value_parser = parse_count, default_value = "100000")]
        samples: usize,
        #[arg(long, default_value_t = 32)]
        quadrature: usize,
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
    },
    /// Upper tail of a U-statistic against its tail bound.
    UstatTail {
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, default_value = "gilbert_edges")]
        functional: String,
        /// Self-bounding exponent; defaults to 2 − 1/m.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [2.0, 4.0, 8.0, 16.0])]
        t_grid: Vec<f64>,
        /// Tail constant; fitted on an independent run when absent.
        #[arg(long)]
        c_prime: Option<f64>,
        #[arg(long, value_parser = parse_count, default_value = "100000")]
        samples: usize,
    },
    /// Draw one configuration.
    Sample {
        #[command(flatten)]
        window: WindowArgs,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Mecke { .. } => "mecke",
            Command::Moments { .. } => "moments",
            Command::UstatTail { .. } => "ustat-tail",
            Command::Sample { .. } => "sample",
        }
    }
}

fn functional(name: &str, radius: f64, window: &Window) -> CliResult<LibraryFunctional> {
    let f = match name {
        "count" => LibraryFunctional::Count,
        "gilbert_edges" => LibraryFunctional::GilbertEdges { radius },
        "gilbert_triangles" => LibraryFunctional::GilbertTriangles { radius },
        "ball_covering" => LibraryFunctional::BallCovering { radius, center: window.center() },
        "isolated_points" => LibraryFunctional::IsolatedPoints { radius },
        _ => {
            return Err(CliError::config(format!(
                "unknown functional {name}; expected count, gilbert_edges, gilbert_triangles, ball_covering or isolated_points"
            )))
        }
    };
    f.validate(window)?;
    Ok(f)
}

fn mc(ctx: &Ctx, samples: usize) -> McOptions {
    McOptions { samples, seed: ctx.seed, exec: ctx.exec, ..Default::default() }
}

pub fn run(cmd: &Command, ctx: &mut Ctx) -> CliResult<Outcome> {
    match cmd {
        Command::Mecke { window, h, samples, quadrature } => {
            let w = window.window()?;
            let fs = if h == "library" {
                LibraryFunctional::library(&w, window.radius)
            } else {
                vec![functional(h, window.radius, &w)?]
            };
            let reports = fs
                .iter()
                .map(|f| mecke_check_functional(f, &w, *quadrature, &mc(ctx, *samples)))
                .collect::<ineqlab::Result<Vec<_>>>()?;
            let passed = reports.iter().all(|r| r.passed);
            let mut csv = String::from("functional,lhs,rhs,stderr,z,passed\n");
            for r in &reports {
                csv.push_str(&format!(
                    "{},{:e},{:e},{:e},{:.3},{}\n",
                    r.label, r.lhs, r.rhs, r.stderr, r.z_score, r.passed
                ));
            }
            let worst = reports.iter().map(|r| r.z_score.abs()).fold(0.0f64, f64::max);
            ctx.out.json("mecke", &json!({ "window": w, "reports": reports, "passed": passed }))?;
            ctx.out.csv("mecke", csv)?;
            Ok(Outcome {
                config: json!({ "window": w, "radius": window.radius, "H": h, "samples": samples, "quadrature": quadrature }),
                passed,
                summary: format!("{} functionals, largest |z| = {worst:.3}", fs.len()),
            })
        }
        Command::Moments { window, functional: name, r, samples, quadrature, bootstrap } => {
            let w = window.window()?;
            let f = functional(name, window.radius, &w)?;
            let opts =
                PoissonMcOptions { mc: mc(ctx, *samples), quadrature_points: *quadrature, bootstrap: *bootstrap };
            let rep = poisson_moment_check(&f, &w, r, &opts)?;
            let mut csv = String::from("check,r,lhs,lhs_ci_low,lhs_ci_high,rhs,rhs_ci_low,rhs_ci_high,margin,passed\n");
            for (tag, c) in [("two_sided", &rep.two_sided), ("upper", &rep.upper), ("lower", &rep.lower)] {
                for (j, rv) in r.iter().enumerate() {
                    csv.push_str(&format!(
                        "{tag},{rv},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
                        c.report.lhs[j],
                        c.ci.lhs_low[j],
                        c.ci.lhs_high[j],
                        c.report.rhs[j],
                        c.ci.rhs_low[j],
                        c.ci.rhs_high[j],
                        c.report.margin[j],
                        c.report.passed
                    ));
                }
            }
            let summary = format!(
                "{}: mean {:.4}, variance {:.4} ± {:.4}, min two-sided margin {:e}",
                rep.label,
                rep.mean,
                rep.variance,
                rep.variance_stderr,
                rep.two_sided.report.min_margin()
            );
            let passed = rep.passed;
            ctx.out.json("poisson_moments", &json!({ "window": w, "functional": f, "report": rep }))?;
            ctx.out.csv("poisson_moments", csv)?;
            Ok(Outcome {
                config: json!({
                    "window": w,
                    "functional": f,
                    "r": r,
                    "samples": samples,
                    "quadrature": quadrature,
                    "bootstrap": bootstrap,
                }),
                passed,
                summary,
            })
        }
        Command::UstatTail { window, functional: name, alpha, t_grid, c_prime, samples } => {
            let w = window.window()?;
            let f = functional(name, window.radius, &w)?;
            let m = f.u_stat_order().ok_or_else(|| CliError::config(format!("{name} is not a U-statistic")))?;
            let alpha = alpha.unwrap_or(2.0 - 1.0 / m as f64);
            let rep = ustat_tail_compare(&f, &w, alpha, t_grid, *c_prime, &mc(ctx, *samples))?;
            let summary = format!("{}: C' = {:.6}, a = {:.4}, mean {:.4}", rep.label, rep.c_prime, rep.a, rep.mean);
            let passed = rep.tail.passed;
            ctx.out.csv("ustat_tail", rep.tail.to_csv())?;
            ctx.out.json("ustat_tail", &json!({ "window": w, "functional": f, "report": rep }))?;
            Ok(Outcome {
                config: json!({
                    "window": w,
                    "functional": f,
                    "alpha": alpha,
                    "t_grid": t_grid,
                    "c_prime": c_prime,
                    "samples": samples,
                }),
                passed,
                summary,
            })
        }
        Command::Sample { window } => {
            let w = window.window()?;
            let eta = sample_process(&w, ctx.seed);
            let summary = format!("{} points", eta.len());
            ctx.out.json("configuration", &json!({ "window": w, "points": eta }))?;
            Ok(Outcome { config: json!({ "window": w }), passed: true, summary })
        }
    }
}
