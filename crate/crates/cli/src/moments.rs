use std::path::PathBuf;

use clap::ValueEnum;
use ineqlab::constants::{optimal_mlsi, optimal_poincare, OptimizerOptions};
use ineqlab::moments::{check_onesided_moments, check_twosided_moments, BecknerRegime};
use ineqlab::zoo::ModelBundle;
use serde::Serialize;
use serde_json::json;

use crate::input::{load_model, read_json};
use crate::output::{CliError, CliResult};
use crate::{Ctx, Outcome};

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeSource {
    /// (a, s) = (λ, 1) from the exact spectral gap.
    Gap,
    /// (a, s) = (ρ₀/6, 0) from the estimated modified log-Sobolev constant.
    Rho0,
}

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    /// `sum` (coordinate sum), `coord:K`, or a JSON file with one value per state.
    #[arg(long, default_value = "sum")]
    function: String,
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 3.0, 4.0, 6.0, 8.0])]
    r: Vec<f64>,
    /// Beckner regime constant a; when absent the regime comes from --regime.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    s: f64,
    /// Lowest exponent p0 of the Beckner family; limits r to p0/(p0-1).
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long, value_enum, default_value_t = RegimeSource::Gap)]
    regime: RegimeSource,
}

fn function_values(spec: &str, bundle: &ModelBundle) -> CliResult<Vec<f64>> {
    if spec == "sum" {
        return Ok(bundle.coordinate_sum());
    }
    if let Some(k) = spec.strip_prefix("coord:") {
        let k: usize = k.parse().map_err(|_| CliError::config(format!("bad coordinate index in {spec}")))?;
        return bundle
            .coordinates
            .iter()
            .map(|c| c.get(k).map(|v| *v as f64))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| CliError::config(format!("coordinate {k} out of range")));
    }
    let values: Vec<f64> = read_json(&PathBuf::from(spec))?;
    if values.len() != bundle.len() {
        return Err(CliError::config(format!(
            "function has {} values, model has {} states",
            values.len(),
            bundle.len()
        )));
    }
    Ok(values)
}

pub fn run(args: &Args, ctx: &mut Ctx) -> CliResult<Outcome> {
    let (spec, bundle) = load_model(&args.model, args.n)?;
    let f = function_values(&args.function, &bundle)?;
    let mut regime = match args.a {
        Some(a) => BecknerRegime::new(a, args.s)?,
        None => match args.regime {
            RegimeSource::Gap => BecknerRegime::from_gap(optimal_poincare(&bundle.kernel)?.value)?,
            RegimeSource::Rho0 => {
                let opts = OptimizerOptions { seed: ctx.seed, exec: ctx.exec, ..Default::default() };
                BecknerRegime::from_mlsi(optimal_mlsi(&bundle.kernel, &opts)?.value)?
            }
        },
    };
    if let Some(p0) = args.p0 {
        regime = regime.with_floor(p0)?;
    }
    let two = check_twosided_moments(&bundle.kernel, &f, &regime, &args.r)?;
    let one = check_onesided_moments(&bundle.kernel, &f, &regime, &args.r)?;
    let passed = two.passed() && one.passed();
    let from_file = args.function != "sum" && !args.function.starts_with("coord:");
    let summary = format!(
        "{}: min margins two-sided {:e}, upper {:e}, lower {:e}",
        bundle.name,
        two.report.min_margin(),
        one.upper.min_margin(),
        one.lower.min_margin()
    );
    ctx.out.json(
        "moments",
        &json!({
            "model": bundle.name,
            "function": args.function,
            "regime": regime,
            "warnings": regime.warnings(),
            "two_sided": two,
            "one_sided": one,
            "passed": passed,
        }),
    )?;
    ctx.out.csv("moments_two_sided", two.report.to_csv())?;
    ctx.out.csv("moments_upper", one.upper.to_csv())?;
    ctx.out.csv("moments_lower", one.lower.to_csv())?;
    Ok(Outcome {
        config: json!({
            "model": spec,
            "function": args.function,
            "function_values": from_file.then_some(&f),
            "r": args.r,
            "a": args.a,
            "s": args.s,
            "p0": args.p0,
            "regime": args.regime,
        }),
        passed,
        summary,
    })
}
