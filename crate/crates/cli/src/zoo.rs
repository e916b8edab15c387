use std::path::PathBuf;

use clap::Subcommand;
use ineqlab::zoo::{Built, ModelSpec, ProductSpec, RateTable};
use serde_json::json;

use crate::input::load_spec;
use crate::output::CliResult;
use crate::{Ctx, Outcome};

#[derive(Subcommand)]
pub enum Command {
    /// Print the model names with an example spec for each.
    List,
    /// Build a model and write the chain with its predicted constants.
    Build {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::List => "list",
            Command::Build { .. } => "build",
        }
    }
}

fn examples() -> Vec<ModelSpec> {
    vec![
        ModelSpec::Flip,
        ModelSpec::RandomReversible { states: 4, seed: 1 },
        ModelSpec::Glauber(ProductSpec::factorized(vec![vec![0.5, 0.5]; 4])),
        ModelSpec::Ising { coupling: vec![vec![0.0, 0.2], vec![0.2, 0.0]], field: vec![0.0, 0.1] },
        ModelSpec::Hardcore { vertices: 3, edges: vec![(0, 1), (1, 2)], eta: 0.2 },
        ModelSpec::HardcoreStar { leaves: 8, eta: 0.0625 },
        ModelSpec::Interchange { n: 4 },
        ModelSpec::Multislice { kappa: vec![2, 1, 1] },
        ModelSpec::ZeroRange {
            particles: 4,
            sites: 3,
            rates: RateTable::independent_walkers(3),
            destination: vec![1.0 / 3.0; 3],
        },
        ModelSpec::Erg { vertices: 4, gammas: vec![0.1], graphs: vec![vec![(0, 1), (1, 2), (0, 2)]] },
        ModelSpec::ErgParams { gammas: vec![0.1], edge_counts: vec![3] },
    ]
}

pub fn run(cmd: &Command, ctx: &mut Ctx) -> CliResult<Outcome> {
    match cmd {
        Command::List => {
            let list = serde_json::to_value(examples())?;
            ctx.out.json("models", &list)?;
            let names: Vec<&str> = list.as_array().into_iter().flatten().filter_map(|e| e["model"].as_str()).collect();
            Ok(Outcome { config: json!({}), passed: true, summary: names.join(", ") })
        }
        Command::Build { model, n } => {
            let spec = load_spec(model, *n)?;
            let built = spec.build()?;
            let summary = match &built {
                Built::Bundle(b) => format!("{} with {} states", b.name, b.len()),
                Built::ErgParams(_) => "exponential random graph parameters".to_string(),
            };
            ctx.out.json("model", &built)?;
            Ok(Outcome { config: json!({ "model": spec }), passed: true, summary })
        }
    }
}
