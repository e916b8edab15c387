use std::path::PathBuf;

use clap::{Subcommand, ValueEnum};
use ineqlab::chaos::{
    all_partition_norms, alternating_maximization, calibrate_chaos_constant, chaos_envelope, partition_norm,
    polynomial_eta, polynomial_tail_bound, triangle_count_tail_bound, triangle_eta, AmOptions, IndexedTensor,
    Partition,
};
use ineqlab::moments::McOptions;
use serde::Serialize;
use serde_json::{json, Value};

use crate::input::{parse_count, read_json};
use crate::output::{CliError, CliResult};
use crate::{Ctx, Outcome};

const SVD_TOLERANCE: f64 = 1e-8;

#[derive(Subcommand)]
pub enum Command {
    /// All partition norms of a tensor.
    Norms {
        /// Tensor JSON: {"order": d, "dim": n, "entries": [...]} (row-major).
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        /// For matrices, also run alternating maximization on {1}{2} and
        /// compare with the singular-value result.
        #[arg(long)]
        svd_check: bool,
    },
    /// C · Σ_𝓘 r^{|𝓘|/2} ‖A‖_𝓘 for a tensor.
    Bound {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [2.0, 4.0, 8.0, 16.0])]
        r: Vec<f64>,
        #[arg(long)]
        constant: Option<f64>,
        /// Calibration JSON written by `chaos calibrate`.
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        starts: usize,
    },
    /// Fit the chaos constant on a seeded tensor family.
    Calibrate {
        #[arg(long, value_enum, default_value_t = Family::SeededQuadratics)]
        family: Family,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, value_parser = parse_count, default_value = "100000")]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [2.0, 4.0, 8.0, 16.0])]
        r: Vec<f64>,
        #[arg(long, default_value_t = 64)]
        starts: usize,
    },
    /// Tail bounds for polynomials from expected gradients.
    Tail {
        #[arg(long, value_delimiter = ',', required = true)]
        t_grid: Vec<f64>,
        #[arg(long)]
        rho0: f64,
        /// Triangle count in G(n, ·) with the closed-form η; gives n.
        #[arg(long)]
        triangle: Option<usize>,
        /// Triangle mode: the expected second-gradient entry.
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        /// Triangle mode: the expected first-gradient entry scale.
        #[arg(long, default_value_t = 0.0)]
        b: f64,
        /// JSON list of tensors E∇f, E∇²f, … (orders 1, 2, …).
        #[arg(long)]
        gradients: Option<PathBuf>,
        #[arg(long)]
        constant: Option<f64>,
        #[arg(long, default_value_t = 64)]
        starts: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Gaussian n×n matrices.
    SeededQuadratics,
    /// Gaussian n×n×n arrays.
    SeededCubics,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Norms { .. } => "norms",
            Command::Bound { .. } => "bound",
            Command::Calibrate { .. } => "calibrate",
            Command::Tail { .. } => "tail",
        }
    }
}

fn am_options(ctx: &Ctx, starts: usize) -> AmOptions {
    AmOptions { starts, seed: ctx.seed, exec: ctx.exec, ..Default::default() }
}

fn missing_constant() -> CliError {
    CliError::config(
        "no chaos constant given: pass --constant, or run `ineqlab chaos calibrate` and pass --calibration",
    )
}

fn constant_from(constant: Option<f64>, calibration: &Option<PathBuf>) -> CliResult<(f64, Value)> {
    if let Some(c) = constant {
        return Ok((c, json!({ "constant": c })));
    }
    let path = calibration.as_ref().ok_or_else(missing_constant)?;
    let v: Value = read_json(path)?;
    let c = v
        .pointer("/calibration/constant")
        .or_else(|| v.get("constant"))
        .and_then(Value::as_f64)
        .ok_or_else(|| CliError::config(format!("{} holds no calibration constant", path.display())))?;
    Ok((c, json!({ "constant": c, "calibration": v })))
}

pub fn run(cmd: &Command, ctx: &mut Ctx) -> CliResult<Outcome> {
    match cmd {
        Command::Norms { tensor, starts, svd_check } => {
            let a: IndexedTensor = read_json(tensor)?;
            let am = am_options(ctx, *starts);
            let norms = all_partition_norms(&a, &am)?;
            let mut passed = true;
            let check = if *svd_check {
                if a.order() != 2 {
                    return Err(CliError::config("--svd-check needs a matrix (order 2)"));
                }
                let finest = Partition::finest(2);
                let svd = partition_norm(&a, &finest, &am)?.value;
                let amv = alternating_maximization(&a, &finest, &am)?.value;
                let diff = (amv - svd).abs();
                passed = diff <= SVD_TOLERANCE * svd.max(1.0);
                Some(json!({ "alternating_maximization": amv, "svd": svd, "difference": diff, "passed": passed }))
            } else {
                None
            };
            let mut csv = String::from("partition,blocks,value,upper_bound,lower_bound_only\n");
            for n in &norms {
                csv.push_str(&format!(
                    "{},{},{:e},{:e},{}\n",
                    n.partition, n.blocks, n.value, n.upper_bound, n.lower_bound_only
                ));
            }
            let summary = format!("{} partition norms of a {}-tensor in dimension {}", norms.len(), a.order(), a.dim());
            ctx.out
                .json("norms", &json!({ "order": a.order(), "dim": a.dim(), "norms": norms, "svd_check": check }))?;
            ctx.out.csv("norms", csv)?;
            Ok(Outcome { config: json!({ "tensor": a, "starts": starts, "svd_check": svd_check }), passed, summary })
        }
        Command::Bound { tensor, r, constant, calibration, starts } => {
            let (c, source) = constant_from(*constant, calibration)?;
            if !(c > 0.0) {
                return Err(CliError::config(format!("chaos constant must be positive, got {c}")));
            }
            if let Some(bad) = r.iter().find(|r| !(**r >= 2.0)) {
                return Err(CliError::config(format!("moment orders must satisfy r >= 2, got {bad}")));
            }
            let a: IndexedTensor = read_json(tensor)?;
            let norms = all_partition_norms(&a, &am_options(ctx, *starts))?;
            let rows: Vec<Value> = r
                .iter()
                .map(|&r| {
                    let env = chaos_envelope(r, &norms);
                    json!({ "r": r, "envelope": env, "bound": c * env })
                })
                .collect();
            let mut csv = String::from("r,envelope,bound\n");
            for row in &rows {
                csv.push_str(&format!(
                    "{},{:e},{:e}\n",
                    row["r"],
                    row["envelope"].as_f64().unwrap(),
                    row["bound"].as_f64().unwrap()
                ));
            }
            ctx.out.json("chaos_bound", &json!({ "constant": c, "norms": norms, "bounds": rows }))?;
            ctx.out.csv("chaos_bound", csv)?;
            Ok(Outcome {
                config: json!({ "tensor": a, "r": r, "constant": source, "starts": starts }),
                passed: true,
                summary: format!("moment bounds at {} orders with C = {c}", r.len()),
            })
        }
        Command::Calibrate { family, count, dim, samples, r, starts } => {
            if *count == 0 {
                return Err(CliError::config("--count must be positive"));
            }
            let order = if *family == Family::SeededQuadratics { 2 } else { 3 };
            let tensors = (0..*count)
                .map(|i| IndexedTensor::gaussian(order, *dim, ctx.seed, i as u64))
                .collect::<ineqlab::Result<Vec<_>>>()?;
            let mc = McOptions { samples: *samples, seed: ctx.seed, exec: ctx.exec, ..Default::default() };
            let cal = calibrate_chaos_constant(&tensors, r, &mc, &am_options(ctx, *starts))?;
            let mut csv = String::from("tensor,r,ratio\n");
            for (t, row) in cal.ratios.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    csv.push_str(&format!("{t},{},{:e}\n", cal.r_values[j], v));
                }
            }
            let summary = format!("calibrated constant {:.6} over {count} tensors", cal.constant);
            ctx.out.json(
                "calibration",
                &json!({ "family": family, "count": count, "dim": dim, "order": order, "calibration": cal }),
            )?;
            ctx.out.csv("calibration", csv)?;
            Ok(Outcome {
                config: json!({ "family": family, "count": count, "dim": dim, "samples": samples, "r": r, "starts": starts }),
                passed: true,
                summary,
            })
        }
        Command::Tail { t_grid, rho0, triangle, a, b, gradients, constant, starts } => {
            let c = constant.ok_or_else(missing_constant)?;
            if t_grid.iter().any(|t| !(*t > 0.0)) {
                return Err(CliError::config("tail thresholds must be positive"));
            }
            let am = am_options(ctx, *starts);
            let (rows, input) = match (triangle, gradients) {
                (Some(n), None) => {
                    let rows = t_grid
                        .iter()
                        .map(|&t| {
                            let bound = triangle_count_tail_bound(*n, *rho0, *a, *b, t, c)?;
                            Ok((t, triangle_eta(*n, *rho0, *a, *b, t), bound))
                        })
                        .collect::<ineqlab::Result<Vec<_>>>()?;
                    (rows, json!({ "triangle": n, "a": a, "b": b }))
                }
                (None, Some(path)) => {
                    let grads: Vec<IndexedTensor> = read_json(path)?;
                    let rows = t_grid
                        .iter()
                        .map(|&t| {
                            let eta = polynomial_eta(*rho0, &grads, t, &am)?;
                            Ok((t, eta, polynomial_tail_bound(*rho0, &grads, t, c, &am)?))
                        })
                        .collect::<ineqlab::Result<Vec<_>>>()?;
                    (rows, json!({ "gradients": grads }))
                }
                _ => return Err(CliError::config("pass exactly one of --triangle and --gradients")),
            };
            let mut csv = String::from("t,eta,bound\n");
            for (t, eta, bound) in &rows {
                csv.push_str(&format!("{t},{eta:e},{bound:e}\n"));
            }
            let table: Vec<Value> = rows.iter().map(|(t, e, b)| json!({ "t": t, "eta": e, "bound": b })).collect();
            ctx.out.json("chaos_tail", &json!({ "constant": c, "rho0": rho0, "rows": table }))?;
            ctx.out.csv("chaos_tail", csv)?;
            Ok(Outcome {
                config: json!({ "t_grid": t_grid, "rho0": rho0, "constant": c, "input": input, "starts": starts }),
                passed: true,
                summary: format!("tail bounds at {} thresholds", t_grid.len()),
            })
        }
    }
}
