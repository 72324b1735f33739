use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use shapesize::{save_dataset, simulate_dataset, Frailty, Scenario, ScenarioSpec, Truth};

use super::{parse_frailty, parse_scenario};
use crate::options::{create_dir, resolve, to_json, write, write_manifest, Given};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario: M1, M2 or M3.
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
    /// Number of subjects.
    #[arg(long)]
    n: Option<usize>,
    /// Frailty: `one` (W = 1) or `gamma` [default: one].
    #[arg(long, value_parser = parse_frailty)]
    frailty: Option<Frailty>,
    /// Random seed [default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Censoring rate per unit frailty; 0 disables censoring [default: 0.1].
    #[arg(long)]
    censor_rate_scale: Option<f64>,
    /// Shape direction, comma separated (unit norm) [default: 0.8,0.6].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta0: Option<Vec<f64>>,
    /// Size direction, comma separated; M2 and M3 require it to equal beta0 [default: 0.6,0.8 for M1, beta0 otherwise].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    gamma0: Option<Vec<f64>>,
    /// JSON options or a manifest from an earlier run; overrides flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for subjects.csv, events.csv, truth.json and manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateOptions {
    pub scenario: Scenario,
    pub n: usize,
    pub frailty: Frailty,
    pub seed: u64,
    pub censor_rate_scale: f64,
    pub beta0: Option<Vec<f64>>,
    pub gamma0: Option<Vec<f64>>,
}

impl SimulateOptions {
    pub fn spec(&self) -> ScenarioSpec {
        let mut spec = ScenarioSpec::new(self.scenario, self.n, self.frailty, self.seed);
        spec.censor_rate_scale = self.censor_rate_scale;
        if let Some(b) = &self.beta0 {
            spec.beta0 = b.clone();
            if self.scenario != Scenario::M1 {
                spec.gamma0 = b.clone();
            }
        }
        if let Some(g) = &self.gamma0 {
            spec.gamma0 = g.clone();
        }
        spec
    }
}

#[derive(Serialize)]
struct TruthFile {
    #[serde(flatten)]
    truth: Truth,
    tau: f64,
    n: usize,
    frailty: Frailty,
    censor_rate_scale: f64,
}

pub fn run(args: SimulateArgs) -> Result<()> {
    let mut flags = Given::default();
    flags
        .put("scenario", args.scenario)
        .put("n", args.n)
        .put("frailty", args.frailty)
        .put("seed", args.seed)
        .put("censor_rate_scale", args.censor_rate_scale)
        .put("beta0", args.beta0)
        .put("gamma0", args.gamma0);
    let defaults = json!({
        "frailty": Frailty::DegenerateOne,
        "seed": 1,
        "censor_rate_scale": 0.1,
        "beta0": null,
        "gamma0": null,
    });
    let opts: SimulateOptions = resolve("simulate", defaults, flags, args.config.as_deref())?;
    let spec = opts.spec();
    spec.validate().context("invalid scenario")?;
    let ds = simulate_dataset(&spec)?;

    let dir = &args.out_dir;
    create_dir(dir)?;
    save_dataset(&ds, dir.join("subjects.csv"), dir.join("events.csv"))
        .with_context(|| format!("writing dataset to {}", dir.display()))?;
    let truth = TruthFile {
        truth: spec.truth(),
        tau: spec.tau,
        n: spec.n,
        frailty: spec.frailty,
        censor_rate_scale: spec.censor_rate_scale,
    };
    write(&dir.join("truth.json"), &to_json(&truth)?)?;
    write_manifest(dir, "simulate", &opts)?;
    println!(
        "{}: {} subjects, {} events, tau = {} -> {}",
        spec.scenario,
        ds.n(),
        ds.total_events(),
        spec.tau,
        dir.display()
    );
    Ok(())
}
