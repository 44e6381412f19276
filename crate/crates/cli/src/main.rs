//! `autocas` command-line interface.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use autocas::adapter::{Variant, VARIANT_NAMES};
use autocas::cascade::{build_cascade_graph, write_cascade_file, write_global_graph};
use autocas::config::RunConfig;
use autocas::embcache::{write_embeddings, write_embeddings_csv, write_token_cache, EmbeddingMatrix};
use autocas::local::local_embed;
use autocas::metrics::count_from_log;
use autocas::pipeline::{load_corpus, Workspace};
use autocas::train::{
    baseline_report, build_backbone, cross_partition_samples, evaluate, load_model, run_variant, save_model,
    write_reports_csv, FeatKind, RunReport,
};
use autocas::{Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "autocas", version, about = "Cascade popularity prediction with a frozen autoregressive backbone")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, short, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one config value, e.g. `--set train.lr=5e-4`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; defaults to `data.out_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run data-parallel stages on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write the corpus (generated or loaded) as cascade and graph files.
    Generate,
    /// Local wavelet embeddings of every cascade at the observation time.
    EmbedLocal,
    /// Global factorization embeddings of the context graph.
    EmbedGlobal,
    /// Token sequences of the train, validation and test splits.
    Tokenize,
    /// Train one variant; writes its checkpoint and report.
    Train(VariantArg),
    /// Evaluate a trained checkpoint on the validation and test splits.
    Eval(CheckpointArgs),
    /// Predict popularity for cascades, optionally at a new observation time.
    Infer(InferArgs),
    /// Train ablation variants, feature baselines or a backbone depth sweep.
    Ablate(AblateArgs),
    /// Collect run reports into CSV and JSON.
    Report(ReportArgs),
}

#[derive(Args)]
struct VariantArg {
    /// Model variant; defaults to `train.variant`.
    #[arg(long)]
    variant: Option<Variant>,
}

#[derive(Args)]
struct CheckpointArgs {
    #[command(flatten)]
    variant: VariantArg,
    /// Checkpoint file; defaults to `<out>/model-<variant>.bin`.
    #[arg(long, value_name = "PATH")]
    checkpoint: Option<PathBuf>,
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    model: CheckpointArgs,
    /// Cascade ids to predict; defaults to the test split.
    #[arg(long = "cascade", value_name = "ID")]
    cascades: Vec<String>,
    /// Observation time in seconds; tokenized with the training patch width.
    #[arg(long, value_name = "SECONDS")]
    t_obs: Option<f64>,
}

#[derive(Args)]
struct AblateArgs {
    /// Comma-separated variants; defaults to all of them.
    #[arg(long, value_delimiter = ',')]
    variants: Vec<Variant>,
    /// Skip the feature baselines.
    #[arg(long)]
    no_baselines: bool,
    /// Backbone depths for a sweep of the full model instead of variants.
    #[arg(long, value_delimiter = ',', value_name = "N")]
    layers: Vec<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Report JSON files; defaults to every `report-*.json` in the output directory.
    inputs: Vec<PathBuf>,
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
}

impl Ctx {
    fn new(c: &Common) -> Result<Self> {
        let path = c
            .config
            .as_ref()
            .ok_or_else(|| Error::Config("missing required flag --config <PATH>".into()))?;
        let cfg = RunConfig::load(path, &c.overrides)?;
        let out = c.out.clone().unwrap_or_else(|| cfg.data.out_dir.clone());
        fs::create_dir_all(&out)?;
        Ok(Self { cfg, out })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn variant(&self, v: &VariantArg) -> Variant {
        v.variant.unwrap_or(self.cfg.train.variant)
    }

    fn checkpoint(&self, a: &CheckpointArgs) -> PathBuf {
        a.checkpoint
            .clone()
            .unwrap_or_else(|| self.path(&format!("model-{}.bin", self.variant(&a.variant))))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(path: &Path, report: &RunReport) -> Result<()> {
    fs::write(path, report.to_json()?)?;
    Ok(())
}

fn generate(ctx: &Ctx) -> Result<()> {
    let corpus = load_corpus(&ctx.cfg)?;
    write_cascade_file(&corpus.records, create(&ctx.path("cascades.txt"))?)?;
    write_global_graph(&corpus.global, create(&ctx.path("global.txt"))?)?;
    println!(
        "{} cascades, {} users, {} edges -> {}",
        corpus.len(),
        corpus.global.node_count(),
        corpus.global.edge_count(),
        ctx.out.display()
    );
    Ok(())
}

fn embed_local(ctx: &Ctx) -> Result<()> {
    let corpus = load_corpus(&ctx.cfg)?;
    let t_obs = ctx
        .cfg
        .tokenizer
        .observation_time
        .or(ctx.cfg.data.observation_time)
        .unwrap_or(corpus.meta.observation_time);
    let (mut labels, mut data) = (Vec::new(), Vec::new());
    for r in &corpus.records {
        let g = build_cascade_graph(r, t_obs);
        let e = local_embed(&g, &ctx.cfg.local)?;
        for (i, u) in e.users.iter().enumerate() {
            labels.push(format!("{}/{u}", r.id));
            data.extend(e.row(i).iter().map(|&x| x as f32));
        }
    }
    let m = EmbeddingMatrix::new(labels.len(), ctx.cfg.local.dim(), data)?;
    write_embeddings_csv(create(&ctx.path("local_embeddings.csv"))?, labels, &m)?;
    println!("{} user rows of width {} at t_obs = {t_obs} s", m.rows, m.dim);
    Ok(())
}

fn embed_global(ctx: &Ctx) -> Result<()> {
    let ws = Workspace::prepare(&ctx.cfg)?;
    let m = ws.global.matrix();
    write_embeddings(create(&ctx.path("global_embeddings.bin"))?, m)?;
    let ids = ws.global.ids();
    let labels = (0..m.rows).map(|i| ids.original(i).to_string());
    write_embeddings_csv(create(&ctx.path("global_embeddings.csv"))?, labels, m)?;
    println!("{} users of width {}", m.rows, m.dim);
    Ok(())
}

fn tokenize(ctx: &Ctx) -> Result<()> {
    let ws = Workspace::prepare(&ctx.cfg)?;
    let drop = ctx.cfg.train.variant.drops_global();
    let splits = ws.split_samples(drop)?;
    for (name, samples) in ["train", "val", "test"].iter().zip(&splits) {
        let Some(first) = samples.first() else { continue };
        let (n, s) = first.tokens.shape();
        write_token_cache(
            create(&ctx.path(&format!("tokens-{name}.bin")))?,
            n,
            s,
            samples.iter().map(|x| x.tokens.data.as_slice()),
        )?;
        println!("{name}: {} cascades, {n} tokens of size {s}", samples.len());
    }
    Ok(())
}

fn train(ctx: &Ctx, v: &VariantArg) -> Result<()> {
    let ws = Workspace::prepare(&ctx.cfg)?;
    let variant = ctx.variant(v);
    let (bb, pre) = build_backbone(&ctx.cfg.backbone)?;
    if let Some(p) = pre {
        println!("backbone pretraining: loss {:.4} -> {:.4}", p.initial_loss, p.final_loss);
    }
    let run = run_variant(&ws, Arc::new(bb), variant)?;
    save_model(&ctx.path(&format!("model-{variant}.bin")), &run.model)?;
    write_json(&ctx.path(&format!("report-{variant}.json")), &run.report)?;
    fs::write(ctx.path("config.toml"), ctx.cfg.to_toml()?)?;
    let r = &run.report;
    println!(
        "{variant}: test msle {:.4} mape {:.4}, best epoch {} of {}, {}/{} learnable",
        r.test_msle, r.test_mape, r.best_epoch, r.epochs, r.learnable_params, r.total_params
    );
    Ok(())
}

fn eval(ctx: &Ctx, a: &CheckpointArgs) -> Result<()> {
    let ws = Workspace::prepare(&ctx.cfg)?;
    let variant = ctx.variant(&a.variant);
    let [train, val, test] = ws.split_samples(variant.drops_global())?;
    let width = train
        .first()
        .map(|s| s.tokens.cols)
        .ok_or_else(|| Error::Validation("empty training split".into()))?;
    let model = load_model(&ctx.checkpoint(a), &ctx.cfg, variant, width)?;
    let out = serde_json::json!({
        "variant": variant.name(),
        "val": evaluate(&model, &val)?,
        "test": evaluate(&model, &test)?,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn infer(ctx: &Ctx, a: &InferArgs) -> Result<()> {
    let ws = Workspace::prepare(&ctx.cfg)?;
    let variant = ctx.variant(&a.model.variant);
    let indices: Vec<usize> = if a.cascades.is_empty() {
        ws.split.test.clone()
    } else {
        a.cascades
            .iter()
            .map(|id| {
                ws.corpus
                    .records
                    .iter()
                    .position(|r| &r.id == id)
                    .ok_or_else(|| Error::Validation(format!("unknown cascade id {id}")))
            })
            .collect::<Result<_>>()?
    };
    let t_obs = a.t_obs.unwrap_or_else(|| ws.observation_time());
    let samples = cross_partition_samples(&ws, &indices, t_obs, ws.patch_duration(), variant.drops_global())?;
    let width = samples.first().map_or(0, |s| s.tokens.cols);
    let model = load_model(&ctx.checkpoint(&a.model), &ctx.cfg, variant, width)?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.write_record(["cascade", "t_obs", "tokens", "log_popularity", "popularity", "label"])?;
    for s in &samples {
        let y = model.predict(&s.tokens)?;
        w.write_record([
            ws.corpus.records[s.index].id.clone(),
            t_obs.to_string(),
            s.tokens.rows.to_string(),
            format!("{y:.6}"),
            count_from_log(y).to_string(),
            s.label.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn ablate(ctx: &Ctx, a: &AblateArgs) -> Result<()> {
    let ws = Workspace::prepare(&ctx.cfg)?;
    let mut reports = Vec::new();
    if !a.no_baselines && a.layers.is_empty() {
        for kind in [FeatKind::Linear, FeatKind::Mlp] {
            reports.push(baseline_report(&ws, kind)?);
        }
    }
    if a.layers.is_empty() {
        let (bb, _) = build_backbone(&ctx.cfg.backbone)?;
        let bb = Arc::new(bb);
        let variants: Vec<Variant> = if a.variants.is_empty() {
            VARIANT_NAMES.iter().map(|n| n.parse()).collect::<Result<_>>()?
        } else {
            a.variants.clone()
        };
        for v in variants {
            reports.push(run_variant(&ws, bb.clone(), v)?.report);
        }
    } else {
        for &layers in &a.layers {
            let mut cfg = ctx.cfg.clone();
            cfg.backbone.layers = layers;
            let (bb, _) = build_backbone(&cfg.backbone)?;
            let ws = Workspace::from_corpus(&cfg, ws.corpus.clone())?;
            let mut r = run_variant(&ws, Arc::new(bb), ws.cfg.train.variant)?.report;
            r.run_id = format!("{}-layers{layers}", r.run_id);
            r.variant = format!("{}-l{layers}", r.variant);
            reports.push(r);
        }
    }
    for r in &reports {
        write_json(&ctx.path(&format!("report-{}.json", r.variant)), r)?;
        println!(
            "{:<14} test msle {:.4} mape {:.4}  {}/{} learnable",
            r.variant, r.test_msle, r.test_mape, r.learnable_params, r.total_params
        );
    }
    Ok(())
}

fn report(ctx: &Ctx, a: &ReportArgs) -> Result<()> {
    let mut inputs = a.inputs.clone();
    if inputs.is_empty() {
        for entry in fs::read_dir(&ctx.out)? {
            let p = entry?.path();
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if name.starts_with("report-") && name.ends_with(".json") {
                inputs.push(p);
            }
        }
        inputs.sort();
    }
    if inputs.is_empty() {
        return Err(Error::Validation(format!("no report-*.json files in {}", ctx.out.display())));
    }
    let reports: Vec<RunReport> = inputs
        .iter()
        .map(|p| RunReport::from_json(&fs::read_to_string(p)?))
        .collect::<Result<_>>()?;
    write_reports_csv(create(&ctx.path("metrics.csv"))?, &reports)?;
    let mut w = create(&ctx.path("reports.json"))?;
    serde_json::to_writer_pretty(&mut w, &reports)?;
    w.flush()?;
    println!(
        "{} reports -> {} and {}",
        reports.len(),
        ctx.path("metrics.csv").display(),
        ctx.path("reports.json").display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if cli.common.sequential {
        autocas::par::set_sequential(true);
    }
    let ctx = Ctx::new(&cli.common)?;
    match &cli.command {
        Command::Generate => generate(&ctx),
        Command::EmbedLocal => embed_local(&ctx),
        Command::EmbedGlobal => embed_global(&ctx),
        Command::Tokenize => tokenize(&ctx),
        Command::Train(v) => train(&ctx, v),
        Command::Eval(a) => eval(&ctx, a),
        Command::Infer(a) => infer(&ctx, a),
        Command::Ablate(a) => ablate(&ctx, a),
        Command::Report(a) => report(&ctx, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use autocas::metrics::log_pop;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_overrides_and_variant_lists() {
        let cli = Cli::try_parse_from([
            "autocas",
            "ablate",
            "--config",
            "c.toml",
            "--set",
            "train.lr=0.01",
            "--set",
            "data.dataset=weibo",
            "--variants",
            "full,wo-llm",
        ])
        .unwrap();
        assert_eq!(cli.common.overrides.len(), 2);
        let Command::Ablate(a) = cli.command else { panic!() };
        assert_eq!(a.variants, vec![Variant::Full, Variant::WoLlm]);
        assert!(Cli::try_parse_from(["autocas", "train", "--variant", "gpt"]).is_err());
        assert!(Cli::try_parse_from(["autocas", "fly"]).is_err());
    }

    #[test]
    fn log_round_trip_for_reported_counts() {
        assert_eq!(count_from_log(log_pop(17.0)), 17);
    }
}
