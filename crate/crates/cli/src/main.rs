//! `nlq`: build schemas, synthesize and augment datasets, run queries and
//! validate datasets.
//!
//! Exit codes: 0 success, 1 user error (bad arguments, unreadable or invalid
//! input), 2 internal error.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nlq::builder::{build, load_documents, AnnotationOverlay, BuildConfig, SchemaGraph};
use nlq::dataset::{self, paraphrase_id, DatasetRecord};
use nlq::template::dsl::{parse_templates, print_templates};
use nlq::value::parse_date;
use nlq::{
    augment, builtin_templates, execute, expand, parse, synthesis_stats, typecheck, validate_text, ExecContext,
    ExpansionConfig, KnowledgeBase, LibraryOptions, Location, NlSchema, Template,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "nlq",
    version,
    about = "Question/query dataset synthesis over annotated schemas"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an annotated schema and knowledge base from a vocabulary and JSON-LD data.
    BuildSchema(BuildSchemaArgs),
    /// Expand the template library into placeholder-form pairs.
    Synthesize(SynthesizeArgs),
    /// Fill placeholders with knowledge-base values.
    Augment(AugmentArgs),
    /// Run one query against a knowledge base.
    Query(QueryArgs),
    /// Check that every record of a dataset parses, type checks and runs.
    Validate(ValidateArgs),
    /// Print the template library instantiated for a schema.
    DumpTemplates(DumpTemplatesArgs),
    /// Split a dataset by ratio, keeping augmentations of one pair together.
    Split(SplitArgs),
}

#[derive(Args)]
struct BuildSchemaArgs {
    /// Vocabulary JSON (classes and properties).
    #[arg(long)]
    vocab: PathBuf,
    /// Directory of .json / .jsonld documents.
    #[arg(long)]
    data: PathBuf,
    /// Manual annotation overlay.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Builder settings (entity roots, forced entities, stop words).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Schema output file.
    #[arg(long)]
    out: PathBuf,
    /// Knowledge base output directory [default: `kb` next to --out].
    #[arg(long)]
    kb_out: Option<PathBuf>,
}

#[derive(Args)]
struct LibraryArgs {
    /// Schema file written by build-schema.
    #[arg(long)]
    schema: PathBuf,
    /// Template DSL file used instead of the built-in library.
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Add "both X and Y" and "at least N" templates to the built-in library.
    #[arg(long)]
    refinements: bool,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[command(flatten)]
    library: LibraryArgs,
    #[arg(long, default_value_t = 6)]
    depth: u32,
    /// Most derivations kept per (template, depth).
    #[arg(long, default_value_t = 100)]
    target: usize,
    #[arg(long)]
    seed: u64,
    /// Try every combination instead of sampling.
    #[arg(long)]
    exhaustive: bool,
    /// Keep only templates whose nonterminals are all listed (comma separated).
    #[arg(long, value_delimiter = ',')]
    enable: Option<Vec<String>>,
    /// Print the instantiated library and exit.
    #[arg(long)]
    dump_templates: bool,
    /// Dataset output [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Provenance statistics output [default: stdout when --out is given].
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct KbArgs {
    #[arg(long)]
    schema: PathBuf,
    /// Knowledge base directory, one `<Table>.json` per table.
    #[arg(long)]
    kb: PathBuf,
}

#[derive(Args)]
struct AugmentArgs {
    #[command(flatten)]
    kb: KbArgs,
    /// Synthesized pairs from `synthesize`.
    #[arg(long)]
    input: PathBuf,
    /// Paraphrased pairs, same format; placeholders allowed.
    #[arg(long)]
    paraphrases: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    multiplier: u32,
    #[arg(long)]
    seed: u64,
    /// Dataset output [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ContextArgs {
    /// The user's position, `lat,lon`.
    #[arg(long, allow_hyphen_values = true)]
    here: Option<String>,
    /// The current time, `YYYY-MM-DD` or `YYYY-MM-DDTHH:MM[:SS]`.
    #[arg(long)]
    now: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    kb: KbArgs,
    #[command(flatten)]
    context: ContextArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Query in surface syntax.
    query: String,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    kb: KbArgs,
    #[command(flatten)]
    context: ContextArgs,
    /// Dataset to check.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct DumpTemplatesArgs {
    #[command(flatten)]
    library: LibraryArgs,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    /// Part sizes, comma separated; they need not sum to one.
    #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.1, 0.1])]
    ratios: Vec<f64>,
    /// Part names, one per ratio.
    #[arg(long, value_delimiter = ',', default_values_t = ["train".to_string(), "dev".to_string(), "test".to_string()])]
    names: Vec<String>,
    #[arg(long)]
    seed: u64,
    /// Directory receiving `<name>.tsv` per part.
    #[arg(long)]
    out_dir: PathBuf,
}

/// A failure that is a bug rather than bad input.
#[derive(Debug)]
struct Internal(String);

impl fmt::Display for Internal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "internal error: {}", self.0)
    }
}

impl std::error::Error for Internal {}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Internal(e.to_string()).into())
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("failed to write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn warn(messages: &[String]) {
    for m in messages {
        eprintln!("warning: {m}");
    }
}

fn load_schema(path: &Path) -> Result<NlSchema> {
    let schema = NlSchema::load(path)?;
    schema.validate()?;
    Ok(schema)
}

fn load_kb(args: &KbArgs) -> Result<(NlSchema, KnowledgeBase)> {
    let schema = load_schema(&args.schema)?;
    let kb = KnowledgeBase::load_dir(&schema, &args.kb)?;
    Ok((schema, kb))
}

fn load_library(args: &LibraryArgs) -> Result<(NlSchema, Vec<Template>)> {
    let schema = load_schema(&args.schema)?;
    let templates = match &args.templates {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("failed to read {}", path.display()))?;
            parse_templates(&text)?
        }
        None => {
            let lib = builtin_templates(
                &schema,
                &LibraryOptions {
                    refinements: args.refinements,
                },
            );
            warn(&lib.warnings);
            lib.templates
        }
    };
    Ok((schema, templates))
}

fn context(args: &ContextArgs) -> Result<ExecContext> {
    let mut ctx = ExecContext::new();
    if let Some(here) = &args.here {
        let (lat, lon) = here
            .split_once(',')
            .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
            .ok_or_else(|| anyhow!("--here expects `lat,lon`, got `{here}`"))?;
        let loc = Location::new(lat, lon);
        if !loc.is_valid() {
            bail!("--here is out of range: {here}");
        }
        ctx = ctx.with_here(loc);
    }
    if let Some(now) = &args.now {
        ctx = ctx.with_now(parse_date(now).ok_or_else(|| anyhow!("--now expects a date or date-time, got `{now}`"))?);
    }
    Ok(ctx)
}

fn build_schema(args: BuildSchemaArgs) -> Result<()> {
    let graph = SchemaGraph::load(&args.vocab)?;
    let docs = load_documents(&args.data)?;
    let overlay = args.annotations.as_deref().map(AnnotationOverlay::load).transpose()?;
    let config: BuildConfig = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("failed to read {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("invalid builder config {}", p.display()))?
        }
        None => BuildConfig::default(),
    };
    let out = build(&graph, &docs, &config, overlay.as_ref())?;
    warn(&out.warnings);
    out.schema.save(&args.out)?;
    let kb_dir = args
        .kb_out
        .unwrap_or_else(|| args.out.parent().unwrap_or(Path::new(".")).join("kb"));
    fs::create_dir_all(&kb_dir).with_context(|| format!("failed to create {}", kb_dir.display()))?;
    out.kb.save_dir(&out.schema, &kb_dir)?;
    let tables: serde_json::Map<String, serde_json::Value> = out
        .schema
        .tables
        .iter()
        .map(|(name, t)| {
            let rows = out.kb.rows(name).len();
            (name.clone(), json!({"fields": t.fields.len(), "rows": rows}))
        })
        .collect();
    let report = json!({"tables": tables, "warnings": out.warnings});
    println!("{}", to_json(&report)?);
    Ok(())
}

fn synthesize(args: SynthesizeArgs) -> Result<()> {
    let (schema, templates) = load_library(&args.library)?;
    if args.dump_templates {
        return write_output(None, &print_templates(&templates));
    }
    let cfg = ExpansionConfig {
        max_depth: args.depth,
        target_size: args.target,
        seed: args.seed,
        enabled: args.enable.map(|e| e.into_iter().collect()),
        exhaustive: args.exhaustive,
    };
    let derivations = expand(&templates, &schema, &cfg)?;
    let records = nlq::augment::synthesized_records(&derivations);
    write_output(args.out.as_deref(), &dataset::to_tsv(&records))?;
    let stats = to_json(&synthesis_stats(&templates, &derivations))?;
    match (&args.stats, &args.out) {
        (Some(p), _) => write_output(Some(p), &(stats + "\n"))?,
        (None, Some(_)) => println!("{stats}"),
        (None, None) => {}
    }
    Ok(())
}

fn augment_cmd(args: AugmentArgs) -> Result<()> {
    let (schema, kb) = load_kb(&args.kb)?;
    let mut pairs = dataset::load(&args.input)?;
    if let Some(p) = &args.paraphrases {
        let paraphrases = dataset::load(p)?;
        pairs.extend(paraphrases.into_iter().enumerate().map(|(i, r)| DatasetRecord {
            id: paraphrase_id(i),
            ..r
        }));
    }
    let out = augment(&pairs, &kb, &schema, args.multiplier, args.seed);
    warn(&out.warnings);
    write_output(args.out.as_deref(), &dataset::to_tsv(&out.records))?;
    if args.out.is_some() {
        let summary = json!({"input": pairs.len(), "records": out.records.len(), "dropped": out.dropped});
        println!("{}", to_json(&summary)?);
    }
    Ok(())
}

fn query(args: QueryArgs) -> Result<()> {
    let (schema, kb) = load_kb(&args.kb)?;
    let ctx = context(&args.context)?;
    let q = parse(&args.query)?;
    typecheck(&q, &schema)?;
    let result = execute(&q, &kb, &schema, &ctx)?;
    let text = match args.format {
        Format::Json => to_json(&result.to_json())? + "\n",
        Format::Tsv => result.to_tsv(),
    };
    write_output(None, &text)
}

fn validate(args: ValidateArgs) -> Result<()> {
    let (schema, kb) = load_kb(&args.kb)?;
    let ctx = context(&args.context)?;
    let text = fs::read_to_string(&args.input).with_context(|| format!("failed to read {}", args.input.display()))?;
    let report = validate_text(&text, &kb, &schema, &ctx);
    warn(&report.warnings);
    let out = match args.format {
        Format::Json => to_json(&report)? + "\n",
        Format::Tsv => {
            let mut s = String::from("metric\tvalue\n");
            for (k, v) in [
                ("total", report.total as f64),
                ("parse_pct", report.parse_pct),
                ("typecheck_pct", report.typecheck_pct),
                ("execute_pct", report.execute_pct),
                ("copyable_pct", report.copyable_pct),
            ] {
                s.push_str(&format!("{k}\t{v}\n"));
            }
            for f in &report.failures {
                let stage = format!("{:?}", f.stage).to_lowercase();
                s.push_str(&format!("line {}\t{stage}: {}\n", f.line, f.message));
            }
            s
        }
    };
    write_output(None, &out)
}

fn dump_templates(args: DumpTemplatesArgs) -> Result<()> {
    let (_, templates) = load_library(&args.library)?;
    write_output(None, &print_templates(&templates))
}

fn split(args: SplitArgs) -> Result<()> {
    if args.ratios.len() != args.names.len() {
        bail!("{} ratios but {} names", args.ratios.len(), args.names.len());
    }
    if args.ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || args.ratios.iter().sum::<f64>() <= 0.0 {
        bail!("ratios must be non-negative with a positive sum");
    }
    let records = dataset::load(&args.input)?;
    let parts = dataset::split(&records, &args.ratios, args.seed);
    fs::create_dir_all(&args.out_dir).with_context(|| format!("failed to create {}", args.out_dir.display()))?;
    let mut sizes = serde_json::Map::new();
    for (name, part) in args.names.iter().zip(&parts) {
        dataset::emit(part, &args.out_dir.join(format!("{name}.tsv")))?;
        sizes.insert(name.clone(), part.len().into());
    }
    println!("{}", to_json(&sizes)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildSchema(a) => build_schema(a),
        Command::Synthesize(a) => synthesize(a),
        Command::Augment(a) => augment_cmd(a),
        Command::Query(a) => query(a),
        Command::Validate(a) => validate(a),
        Command::DumpTemplates(a) => dump_templates(a),
        Command::Split(a) => split(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Internal>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
        Err(_) => ExitCode::from(2),
    }
}
