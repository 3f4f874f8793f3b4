//! Argument parsing and subcommand dispatch.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use mediabias_core::corpus::{article_groups, write_articles_jsonl};
use mediabias_core::interpret::{KwicQuery, TextMode};
use mediabias_core::{Gender, Representation, Scheme, Window};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::output::{fmt_f64, OutputDir};
use crate::pipeline::{self, Resources};
use crate::synth::{self, PlantedTerm, SynthParams};

/// Prints a line to stdout, ignoring a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Debug, Parser)]
#[command(name = "mediabias", version, about = "Gendered coverage analysis for news corpora")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every pipeline command. Each overrides a config key.
#[derive(Debug, Args)]
pub struct Common {
    /// Pipeline config (JSON) or a run manifest.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<PipelineConfig, CliError> {
        let mut config = PipelineConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        Ok(config)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and normalise the article file and registry.
    Ingest(Common),
    /// Match politicians, mask gender signals and write labelled instances.
    Label(Common),
    /// Cross-validate every configured experiment combination.
    Sweep(Common),
    /// Rank the features of a linear SVM trained on all instances.
    Rank {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Defaults to the first configured scheme.
        #[arg(long)]
        scheme: Option<Scheme>,
        /// Defaults to the first configured window.
        #[arg(long)]
        window: Option<Window>,
        /// Defaults to the first configured representation.
        #[arg(long)]
        representation: Option<Representation>,
    },
    /// Keyword-in-context lines for one term.
    Kwic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        term: String,
        /// Tokens of context on each side.
        #[arg(long, default_value_t = 8)]
        context: usize,
        #[arg(long)]
        group: Option<Gender>,
        /// Only sentences that mention a politician.
        #[arg(long)]
        cooccur: bool,
        /// Search the masked stream instead of the raw text.
        #[arg(long)]
        masked: bool,
        /// Value for the tag column, for manual coding.
        #[arg(long, default_value = "")]
        tag: String,
    },
    /// Mentions per year in office for terms and groups.
    Stats {
        #[command(flatten)]
        common: Common,
        /// Comma-separated terms.
        #[arg(long, value_delimiter = ',', required = true)]
        terms: Vec<String>,
        /// Comma-separated groups.
        #[arg(long, value_delimiter = ',', default_values = ["female", "male"])]
        groups: Vec<Gender>,
        /// Count only years spent in this portfolio.
        #[arg(long)]
        portfolio: Option<String>,
        #[arg(long)]
        masked: bool,
    },
    /// Generate a synthetic corpus, registry and config.
    GenSynth {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        female_share: f64,
        /// TERM:P_FEMALE:P_MALE, per-sentence probabilities; repeatable.
        #[arg(long = "plant", value_name = "TERM:PF:PM")]
        planted: Vec<PlantedTerm>,
        #[arg(long, default_value_t = 10)]
        sentences: usize,
        #[arg(long, default_value_t = 8)]
        politicians: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

/// Parses arguments and runs, mapping failures to exit codes.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.into()
        }
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest(common) => ingest(&common.load()?),
        Command::Label(common) => label(&common.load()?),
        Command::Sweep(common) => sweep(&common.load()?),
        Command::Rank {
            common,
            k,
            scheme,
            window,
            representation,
        } => {
            let config = common.load()?;
            let scheme = scheme.unwrap_or(config.schemes[0]);
            let window = window.unwrap_or(config.windows[0]);
            let representation = representation.unwrap_or(config.representations[0]);
            rank(&config, k, scheme, window, representation)
        }
        Command::Kwic {
            common,
            term,
            context,
            group,
            cooccur,
            masked,
            tag,
        } => {
            let query = KwicQuery {
                term,
                window: context,
                group,
                require_cooccurrence: cooccur,
            };
            kwic(&common.load()?, &query, mode(masked), &tag)
        }
        Command::Stats {
            common,
            terms,
            groups,
            portfolio,
            masked,
        } => stats(&common.load()?, &terms, &groups, portfolio.as_deref(), mode(masked)),
        Command::GenSynth {
            n,
            female_share,
            planted,
            sentences,
            politicians,
            seed,
            out,
        } => gen_synth(
            &SynthParams {
                n_articles: n,
                female_share,
                planted,
                sentences_per_article: sentences,
                politicians_per_gender: politicians,
                seed,
            },
            &out,
        ),
    }
}

fn mode(masked: bool) -> TextMode {
    if masked {
        TextMode::Masked
    } else {
        TextMode::Raw
    }
}

#[derive(Serialize)]
struct IngestSummary {
    n_articles: usize,
    n_politicians: usize,
    first_date: Option<String>,
    last_date: Option<String>,
    articles_per_source: BTreeMap<String, usize>,
    female_years: f64,
    male_years: f64,
}

pub fn ingest(config: &PipelineConfig) -> Result<(), CliError> {
    let res = Resources::load(config)?;
    let window = config.date_window()?;
    let mut per_source = BTreeMap::new();
    for a in &res.articles {
        *per_source.entry(a.source.clone()).or_insert(0) += 1;
    }
    let summary = IngestSummary {
        n_articles: res.articles.len(),
        n_politicians: res.registry.len(),
        first_date: res.articles.iter().map(|a| a.date).min().map(|d| d.to_string()),
        last_date: res.articles.iter().map(|a| a.date).max().map(|d| d.to_string()),
        articles_per_source: per_source,
        female_years: res.registry.group_years(Gender::Female, window, None),
        male_years: res.registry.group_years(Gender::Male, window, None),
    };
    let mut out = OutputDir::create(&config.output_dir)?;
    let mut buf = Vec::new();
    write_articles_jsonl(&mut buf, &res.articles)
        .map_err(|e| CliError::Internal(format!("serializing articles: {e}")))?;
    out.write_bytes("articles.jsonl", &buf)?;
    out.write_json("ingest.json", &summary)?;
    out.write_manifest("ingest", config, json!({}))?;
    say!(
        "{} articles, {} politicians -> {}",
        summary.n_articles,
        summary.n_politicians,
        config.output_dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct LabelSummary {
    n_articles: usize,
    n_labeled_articles: usize,
    n_instances: usize,
    n_female: usize,
    n_male: usize,
    /// Articles that produced an instance for each gender.
    n_both: usize,
}

pub fn label(config: &PipelineConfig) -> Result<(), CliError> {
    let res = Resources::load(config)?;
    let instances = res.label()?;
    let groups = article_groups(&instances);
    let count = |g: Gender| instances.iter().filter(|i| i.label == g).count();
    let summary = LabelSummary {
        n_articles: res.articles.len(),
        n_labeled_articles: groups.len(),
        n_instances: instances.len(),
        n_female: count(Gender::Female),
        n_male: count(Gender::Male),
        n_both: groups.values().filter(|g| g.len() == 2).count(),
    };
    let mut buf = Vec::new();
    for inst in &instances {
        serde_json::to_writer(&mut buf, inst)
            .map_err(|e| CliError::Internal(format!("serializing instance: {e}")))?;
        buf.push(b'\n');
    }
    let mut out = OutputDir::create(&config.output_dir)?;
    out.write_bytes("instances.jsonl", &buf)?;
    out.write_json("labels.json", &summary)?;
    out.write_manifest("label", config, json!({}))?;
    say!(
        "{} instances ({} female, {} male) from {} articles",
        summary.n_instances, summary.n_female, summary.n_male, summary.n_articles
    );
    Ok(())
}

pub const SWEEP_HEADER: &[&str] = &[
    "descriptor",
    "scheme",
    "window",
    "representation",
    "classifier",
    "n_instances",
    "n_female",
    "n_male",
    "n_features",
    "mean_accuracy",
    "baseline",
];

pub fn sweep(config: &PipelineConfig) -> Result<(), CliError> {
    let res = Resources::load(config)?;
    let instances = res.label()?;
    let result = pipeline::sweep(&res, &instances)?;
    let rows: Vec<Vec<String>> = result
        .rows
        .iter()
        .map(|r| {
            vec![
                r.descriptor.clone(),
                r.scheme.to_string(),
                r.window.to_string(),
                r.representation.to_string(),
                r.classifier.as_str().to_string(),
                r.n_instances.to_string(),
                r.n_female.to_string(),
                r.n_male.to_string(),
                r.n_features.to_string(),
                fmt_f64(r.mean_accuracy),
                fmt_f64(r.baseline),
            ]
        })
        .collect();
    let mut out = OutputDir::create(&config.output_dir)?;
    out.write_csv("sweep.csv", SWEEP_HEADER, &rows)?;
    out.write_json("sweep.json", &result)?;
    out.write_manifest("sweep", config, json!({}))?;
    for r in &result.rows {
        say!("{:<40} {:.4} (baseline {:.4})", r.descriptor, r.mean_accuracy, r.baseline);
    }
    Ok(())
}

pub fn rank(
    config: &PipelineConfig,
    k: usize,
    scheme: Scheme,
    window: Window,
    representation: Representation,
) -> Result<(), CliError> {
    let res = Resources::load(config)?;
    let instances = res.label()?;
    let report = pipeline::rank(&res, &instances, scheme, window, representation, k)?;
    let mut rows = Vec::new();
    for (class, list) in [("female", &report.features.female), ("male", &report.features.male)] {
        for (i, f) in list.iter().enumerate() {
            rows.push(vec![
                class.to_string(),
                (i + 1).to_string(),
                f.kind.to_string(),
                f.surface.clone(),
                fmt_f64(f.weight),
            ]);
        }
    }
    let mut out = OutputDir::create(&config.output_dir)?;
    out.write_csv("rank.csv", &["class", "rank", "kind", "surface", "weight"], &rows)?;
    out.write_json("rank.json", &report)?;
    out.write_manifest(
        "rank",
        config,
        json!({ "k": k, "scheme": scheme, "window": window, "representation": representation }),
    )?;
    for row in &rows {
        say!("{:<6} {:>3} {:<16} {}", row[0], row[1], row[3], row[4]);
    }
    Ok(())
}

pub const KWIC_HEADER: &[&str] = &["article_id", "position", "left", "keyword", "right", "tag"];

/// File-name-safe form of a query term.
fn slug(term: &str) -> String {
    let s: String = term
        .trim()
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect();
    if s.is_empty() {
        "term".into()
    } else {
        s
    }
}

pub fn kwic(config: &PipelineConfig, query: &KwicQuery, mode: TextMode, tag: &str) -> Result<(), CliError> {
    let res = Resources::load(config)?;
    let instances = res.label()?;
    let corpus = pipeline::concordance(&res, &instances, mode);
    let lines = pipeline::concordance_lines(&corpus, query)?;
    let rows: Vec<Vec<String>> = lines
        .iter()
        .map(|l| {
            vec![
                l.article_id.clone(),
                l.position.to_string(),
                l.left.join(" "),
                l.keyword.clone(),
                l.right.join(" "),
                tag.to_string(),
            ]
        })
        .collect();
    let mut out = OutputDir::create(&config.output_dir)?;
    let path = out.write_csv(&format!("kwic_{}.csv", slug(&query.term)), KWIC_HEADER, &rows)?;
    out.write_manifest("kwic", config, json!({ "query": query, "mode": mode, "tag": tag }))?;
    say!("{} lines -> {}", lines.len(), path.display());
    Ok(())
}

pub const STATS_HEADER: &[&str] = &["term", "group", "count", "years", "rate"];

pub fn stats(
    config: &PipelineConfig,
    terms: &[String],
    groups: &[Gender],
    portfolio: Option<&str>,
    mode: TextMode,
) -> Result<(), CliError> {
    let mut uniq_terms: Vec<String> = Vec::new();
    for t in terms {
        if !uniq_terms.contains(t) {
            uniq_terms.push(t.clone());
        }
    }
    let mut uniq_groups = groups.to_vec();
    uniq_groups.sort();
    uniq_groups.dedup();

    let res = Resources::load(config)?;
    let instances = res.label()?;
    let corpus = pipeline::concordance(&res, &instances, mode);
    let report = pipeline::stats(&res, &corpus, &uniq_terms, &uniq_groups, portfolio)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|s| {
            vec![
                s.term.clone(),
                s.group.to_string(),
                s.count.to_string(),
                fmt_f64(s.years),
                fmt_f64(s.rate),
            ]
        })
        .collect();
    let mut out = OutputDir::create(&config.output_dir)?;
    out.write_csv("stats.csv", STATS_HEADER, &rows)?;
    out.write_json("stats.json", &report)?;
    out.write_manifest(
        "stats",
        config,
        json!({ "terms": uniq_terms, "groups": uniq_groups, "portfolio": portfolio, "mode": mode }),
    )?;
    for row in &rows {
        say!("{}", row.join("\t"));
    }
    for r in &report.ratios {
        say!("{} female/male rate ratio: {}", r.term, r.ratio.value);
    }
    Ok(())
}

pub fn gen_synth(params: &SynthParams, dir: &std::path::Path) -> Result<(), CliError> {
    let corpus = synth::generate(params)?;
    let mut out = OutputDir::create(dir)?;
    let mut buf = Vec::new();
    write_articles_jsonl(&mut buf, &corpus.articles)
        .map_err(|e| CliError::Internal(format!("serializing articles: {e}")))?;
    out.write_bytes("articles.jsonl", &buf)?;
    let mut registry = corpus.registry.to_json();
    registry.push('\n');
    out.write_bytes("registry.json", registry.as_bytes())?;
    let mut config = PipelineConfig::new("articles.jsonl", "registry.json");
    config.seed = params.seed;
    out.write_bytes("config.json", format!("{}\n", config.to_json()).as_bytes())?;
    out.write_json("synth.json", params)?;
    say!("{} articles -> {}", corpus.articles.len(), dir.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(slug("Husband"), "husband");
        assert_eq!(slug("co-op"), "co_op");
        assert_eq!(slug(" "), "term");
    }

    #[test]
    fn parses_overrides() {
        let cli = Cli::try_parse_from([
            "mediabias", "rank", "--config", "c.json", "--seed", "7", "--k", "5", "--scheme", "nameform",
        ])
        .unwrap();
        match cli.command {
            Command::Rank { common, k, scheme, .. } => {
                assert_eq!(common.seed, Some(7));
                assert_eq!(k, 5);
                assert_eq!(scheme, Some(Scheme::Nameform));
            }
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["mediabias", "sweep", "--seed", "-1", "--config", "c"]).is_err());
    }
}
