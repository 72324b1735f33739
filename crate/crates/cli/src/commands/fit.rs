use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use shapesize::{
    bootstrap_many, load_dataset, run_pipeline, validate, BootstrapOptions, BootstrapResult, Diagnostic, Estimator,
    KernelSpec, ObjectiveKind, OptimizerOptions, PipelineConfig, ProjectedCounts, ShapeFit, SizeFit, SizeRegion,
    TrimSpec, ZRegion,
};

use crate::options::{create_dir, resolve, to_json, write, write_manifest, Given};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Full,
    Simplified,
}

impl From<Objective> for ObjectiveKind {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Full => ObjectiveKind::Full,
            Objective::Simplified => ObjectiveKind::Simplified,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SizeLink {
    Exp,
    Mre,
    Both,
    /// Shape only.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegionFlag {
    All,
    IndexSlab,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Subjects CSV: `id,c,z1,...,zp`.
    #[arg(long)]
    subjects: Option<PathBuf>,
    /// Events CSV: `id,t`.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Study horizon; every censoring time must be at most this.
    #[arg(long)]
    tau: Option<f64>,
    /// Shape objective [default: simplified].
    #[arg(long, value_enum)]
    shape_objective: Option<Objective>,
    /// Size estimator(s) [default: both].
    #[arg(long, value_enum)]
    size_link: Option<SizeLink>,
    /// Event-time window `TAU0,TAU1` for the shape objective [default: 0,tau].
    #[arg(long, value_delimiter = ',', num_args = 2)]
    trim: Option<Vec<f64>>,
    /// Covariate region for the size fits [default: all].
    #[arg(long, value_enum)]
    size_region: Option<RegionFlag>,
    /// Slab half-width for `--size-region index-slab` [default: 90th percentile of |beta'Z|].
    #[arg(long, requires = "size_region")]
    slab_width: Option<f64>,
    /// Bootstrap replicates; 0 skips the bootstrap [default: 0].
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Also report bootstrap percentile intervals.
    #[arg(long)]
    percentile: bool,
    /// Bootstrap seed [default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// JSON options or a manifest from an earlier run; overrides flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for fit.json and manifest.json.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitOptions {
    pub subjects: PathBuf,
    pub events: PathBuf,
    pub tau: f64,
    pub shape_objective: Objective,
    pub size_link: SizeLink,
    /// Shape-objective trimming; `null` is untrimmed.
    pub trim: Option<TrimSpec<f64>>,
    pub size_region: SizeRegion,
    pub bootstrap: usize,
    pub percentile: bool,
    pub seed: u64,
    pub shape_kernel: KernelSpec<f64>,
    pub size_kernel: KernelSpec<f64>,
    pub optimizer: OptimizerOptions,
}

impl FitOptions {
    fn estimators(&self) -> Vec<Estimator> {
        let mut out = vec![match self.shape_objective {
            Objective::Simplified => Estimator::ShapeSimplified,
            Objective::Full => Estimator::ShapeFull,
        }];
        if matches!(self.size_link, SizeLink::Exp | SizeLink::Both) {
            out.push(Estimator::SizeExp);
        }
        if matches!(self.size_link, SizeLink::Mre | SizeLink::Both) {
            out.push(Estimator::SizeMre);
        }
        out
    }

    fn pipeline(&self) -> PipelineConfig<f64> {
        PipelineConfig {
            shape_kernel: self.shape_kernel.clone(),
            size_kernel: self.size_kernel.clone(),
            trim: self.trim.clone(),
            optimizer: self.optimizer,
            size_shape_objective: self.shape_objective.into(),
            size_region: self.size_region,
        }
    }
}

#[derive(Serialize)]
struct DatasetSummary {
    n: usize,
    p: usize,
    tau: f64,
    total_events: usize,
    mean_events: f64,
    diagnostics: Vec<Diagnostic>,
}

#[derive(Serialize)]
struct ProjectedSummary {
    mean: f64,
    min: f64,
    max: f64,
    f_floor_hits: usize,
    skipped_atoms: usize,
    shape_beta: Vec<f64>,
}

impl From<&ProjectedCounts<f64>> for ProjectedSummary {
    fn from(pc: &ProjectedCounts<f64>) -> Self {
        Self {
            mean: pc.mean(),
            min: pc.values.iter().copied().fold(f64::INFINITY, f64::min),
            max: pc.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            f_floor_hits: pc.f_floor_hits,
            skipped_atoms: pc.skipped_atoms,
            shape_beta: pc.shape_beta.clone(),
        }
    }
}

#[derive(Serialize)]
struct FitOutput {
    dataset: DatasetSummary,
    shape: ShapeFit<f64>,
    projected_counts: Option<ProjectedSummary>,
    size_region: Option<ZRegion<f64>>,
    size: Vec<SizeFit<f64>>,
    bootstrap: Option<Vec<BootstrapResult<f64>>>,
    warnings: Vec<String>,
}

pub fn run(args: FitArgs) -> Result<()> {
    let mut flags = Given::default();
    let region = args.size_region.map(|r| match r {
        RegionFlag::All => SizeRegion::All,
        RegionFlag::IndexSlab => SizeRegion::IndexSlab { a: args.slab_width },
    });
    flags
        .put("subjects", args.subjects)
        .put("events", args.events)
        .put("tau", args.tau)
        .put("shape_objective", args.shape_objective)
        .put("size_link", args.size_link)
        .put("trim", args.trim.map(|t| json!({"tau0": t[0], "tau1": t[1]})))
        .put("size_region", region)
        .put("bootstrap", args.bootstrap)
        .put("percentile", args.percentile.then_some(true))
        .put("seed", args.seed);
    let defaults = json!({
        "shape_objective": Objective::Simplified,
        "size_link": SizeLink::Both,
        "trim": null,
        "size_region": SizeRegion::All,
        "bootstrap": 0,
        "percentile": false,
        "seed": 1,
        "shape_kernel": KernelSpec::<f64>::shape_default(),
        "size_kernel": KernelSpec::<f64>::size_default(),
        "optimizer": OptimizerOptions::default(),
    });
    let opts: FitOptions = resolve("fit", defaults, flags, args.config.as_deref())?;
    let output = fit(&opts)?;
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }

    create_dir(&args.out_dir)?;
    write(&args.out_dir.join("fit.json"), &to_json(&output)?)?;
    write_manifest(&args.out_dir, "fit", &opts)?;
    let beta: Vec<String> = output.shape.beta.iter().map(|b| format!("{b:.4}")).collect();
    println!("beta = ({})", beta.join(", "));
    for s in &output.size {
        let (name, g) = match s {
            SizeFit::Exp(f) => ("gamma_exp", &f.gamma),
            SizeFit::Mre(f) => ("gamma_mre", &f.gamma),
        };
        let g: Vec<String> = g.iter().map(|v| format!("{v:.4}")).collect();
        println!("{name} = ({})", g.join(", "));
    }
    println!("wrote {}", args.out_dir.join("fit.json").display());
    Ok(())
}

fn fit(opts: &FitOptions) -> Result<FitOutput> {
    let ds = load_dataset(&opts.subjects, &opts.events, opts.tau)
        .with_context(|| format!("loading {} and {}", opts.subjects.display(), opts.events.display()))?;
    let config = opts.pipeline();
    config.validate()?;
    if let Some(trim) = &config.trim {
        trim.validate(&ds)?;
    }
    let diagnostics = validate(&ds);
    let mut warnings: Vec<String> = diagnostics
        .iter()
        .filter(|d| !matches!(d, Diagnostic::ZeroEventSubjects { .. }))
        .map(|d| d.to_string())
        .collect();

    let estimators = opts.estimators();
    let mut fits = run_pipeline(&ds, &estimators, &config);
    let points = estimators
        .iter()
        .map(|&e| fits.params(e).map(|p| (e, p)).with_context(|| format!("{e} fit failed")))
        .collect::<Result<Vec<_>>>()?;

    let shape = match opts.shape_objective {
        Objective::Simplified => fits.shape_simplified.take(),
        Objective::Full => fits.shape_full.take(),
    };
    let Some(Ok(shape)) = shape else { bail!("shape fit missing") };
    if !shape.converged {
        warnings.push("shape optimizer did not converge from any start".into());
    }
    let d = &shape.diagnostics;
    if d.skipped_atoms + d.clamped_atoms + d.floored_rates > 0 {
        warnings.push(format!(
            "shape objective: {} skipped atom(s), {} clamped jump(s), {} floored rate(s)",
            d.skipped_atoms, d.clamped_atoms, d.floored_rates
        ));
    }

    let projected = fits.projected.take().transpose()?;
    if let Some(pc) = &projected {
        if pc.f_floor_hits > 0 {
            warnings.push(format!("{} projected count(s) hit the cumulative-shape floor", pc.f_floor_hits));
        }
    }
    let mut size = Vec::new();
    if let Some(f) = fits.size_exp.take() {
        size.push(SizeFit::Exp(f?));
    }
    if let Some(f) = fits.size_mre.take() {
        let f = f?;
        if f.diagnostics.non_identifiable {
            warnings.push("all projected counts are equal; the rank estimate is arbitrary".into());
        }
        size.push(SizeFit::Mre(f));
    }

    let bootstrap = if opts.bootstrap > 0 {
        let opts_b = BootstrapOptions { workers: None, percentile: opts.percentile, ..Default::default() };
        let res = bootstrap_many(&ds, &points, opts.bootstrap, opts.seed, &config, &opts_b).context("bootstrap")?;
        for r in &res {
            if r.dropped > 0 {
                warnings.push(format!("{}: {} of {} bootstrap replicates failed", r.estimator, r.dropped, r.b));
            }
        }
        Some(res)
    } else {
        None
    };

    Ok(FitOutput {
        dataset: DatasetSummary {
            n: ds.n(),
            p: ds.p(),
            tau: ds.tau(),
            total_events: ds.total_events(),
            mean_events: ds.mean_events(),
            diagnostics,
        },
        shape,
        projected_counts: projected.as_ref().map(ProjectedSummary::from),
        size_region: fits.size_region.take(),
        size,
        bootstrap,
        warnings,
    })
}
