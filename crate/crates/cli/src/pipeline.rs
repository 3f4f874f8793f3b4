//! Loading inputs and running the experiment stages.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use mediabias_core::corpus::{filter_by_date, load_articles, load_registry, ArticleFormat, Registry};
use mediabias_core::features::{
    build_space, extract_terms, vectorize, ExtractOptions, FeatureSpace, LexiconSet, PosLexicon,
    PosTagger, TermBag,
};
use mediabias_core::interpret::{
    kwic, rank_features, rate_ratio, term_count, ConcordanceCorpus, ConcordanceLine, KwicQuery,
    RankedFeatures, RateRatio, RateStat, TextMode,
};
use mediabias_core::learn::{
    cross_validate, majority_baseline, train_svm, undersample, CvConfig, CvReport, Dataset, SvmParams,
};
use mediabias_core::preprocess::{Normalization, WordList};
use mediabias_core::rng::derive_seed;
use mediabias_core::{
    Article, FeatureVector, Gender, LabeledInstance, Labeler, Representation, Scheme, Window,
};

use crate::config::{ClassifierName, PipelineConfig};
use crate::error::CliError;

/// Everything read from disk for one run.
pub struct Resources {
    pub config: PipelineConfig,
    pub articles: Vec<Article>,
    pub registry: Registry,
    pub labeler: Labeler,
    pub lexicon: Option<LexiconSet>,
    pub pos: Option<PosLexicon>,
}

impl Resources {
    /// Validates the config and loads its inputs. Articles outside the
    /// configured date range are dropped.
    pub fn load(config: &PipelineConfig) -> Result<Self, CliError> {
        config.validate()?;
        let window = config.date_window()?;
        let articles = load_articles(&config.articles, ArticleFormat::JsonLines)
            .map_err(|e| CliError::from(e).context(config.articles.display()))?;
        let articles = filter_by_date(&articles, window);
        let registry = load_registry(&config.registry)
            .map_err(|e| CliError::from(e).context(config.registry.display()))?;

        let read_list = |path: &std::path::Path| {
            WordList::load(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
        };
        let mut labeler = Labeler::new(&registry);
        if let Some(path) = &config.gendered_signals {
            labeler = labeler.with_signals(read_list(path)?);
        }
        let stoplist = match (&config.stoplist, config.remove_stopwords) {
            (Some(path), true) => Some(read_list(path)?),
            _ => None,
        };
        labeler = labeler.with_normalization(Normalization {
            stoplist,
            stem: config.stem,
        });

        let lexicon = if config.lexicons.is_empty() {
            None
        } else {
            let sets = config
                .lexicons
                .iter()
                .map(LexiconSet::load)
                .collect::<Result<Vec<_>, _>>()?;
            Some(LexiconSet::merge("lexicon", &sets))
        };
        let pos = config.pos_lexicon.as_ref().map(PosLexicon::load).transpose()?;
        Ok(Resources {
            config: config.clone(),
            articles,
            registry,
            labeler,
            lexicon,
            pos,
        })
    }

    pub fn label(&self) -> Result<Vec<LabeledInstance>, CliError> {
        Ok(self.labeler.label_all(&self.articles)?)
    }

    pub fn extract(
        &self,
        instances: &[LabeledInstance],
        scheme: Scheme,
        window: Window,
    ) -> Result<Featurized, CliError> {
        let options = ExtractOptions {
            window,
            tagger: self.pos.as_ref().map(|p| p as &dyn PosTagger),
            lexicon: self.lexicon.as_ref(),
        };
        let bags = instances
            .par_iter()
            .map(|inst| extract_terms(inst, scheme, &options))
            .collect::<Result<Vec<_>, _>>()?;
        let space = build_space(&bags, self.config.min_df)?;
        Ok(Featurized {
            scheme,
            window,
            space,
            bags,
            labels: instances.iter().map(|i| i.label).collect(),
        })
    }
}

/// Term bags of every instance and the space built from them.
pub struct Featurized {
    pub scheme: Scheme,
    pub window: Window,
    pub space: FeatureSpace,
    pub bags: Vec<TermBag>,
    pub labels: Vec<Gender>,
}

impl Featurized {
    pub fn dataset(&self, representation: Representation) -> Result<Dataset, CliError> {
        let vectors = self
            .bags
            .iter()
            .map(|b| vectorize(b, &self.space, representation))
            .collect();
        Ok(Dataset::new(vectors, self.labels.clone(), self.space.len(), representation)?)
    }
}

/// Presence pattern of a dataset, for classifiers that split on presence.
fn presence(ds: &Dataset) -> Result<Dataset, CliError> {
    let vectors = ds
        .vectors()
        .iter()
        .map(|v| {
            FeatureVector::from_pairs(
                v.pairs.iter().map(|&(i, _)| (i, 1.0)).collect(),
                Representation::Boolean,
            )
        })
        .collect();
    Ok(Dataset::new(vectors, ds.labels().to_vec(), ds.n_features(), Representation::Boolean)?)
}

pub fn descriptor(
    scheme: Scheme,
    window: Window,
    representation: Representation,
    classifier: ClassifierName,
) -> String {
    format!("{scheme}/{window}/{representation}/{}", classifier.as_str())
}

/// One line of the sweep summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub descriptor: String,
    pub scheme: Scheme,
    pub window: Window,
    pub representation: Representation,
    pub classifier: ClassifierName,
    pub n_instances: usize,
    pub n_female: usize,
    pub n_male: usize,
    pub n_features: usize,
    pub mean_accuracy: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub reports: Vec<CvReport>,
}

/// Cross-validates every scheme × window × representation × classifier
/// combination. Rows come back sorted by descriptor.
pub fn sweep(res: &Resources, instances: &[LabeledInstance]) -> Result<SweepResult, CliError> {
    let cfg = &res.config;
    let labels: Vec<Gender> = instances.iter().map(|i| i.label).collect();
    let baseline = majority_baseline(&labels)?;
    let counts = [Gender::Female, Gender::Male].map(|g| labels.iter().filter(|&&l| l == g).count());
    let cv = CvConfig {
        k: cfg.k,
        seed: cfg.seed,
        undersample: cfg.undersample,
    };

    let mut groups = Vec::new();
    for &scheme in &cfg.schemes {
        for &window in &cfg.windows {
            groups.push((scheme, window));
        }
    }
    let mut results: Vec<(SweepRow, CvReport)> = groups
        .par_iter()
        .map(|&(scheme, window)| -> Result<Vec<(SweepRow, CvReport)>, CliError> {
            let feat = res
                .extract(instances, scheme, window)
                .map_err(|e| e.context(format!("sweep {scheme}/{window}")))?;
            let mut combos = Vec::new();
            for &rep in &cfg.representations {
                for &name in &cfg.classifiers {
                    combos.push((rep, name));
                }
            }
            combos
                .par_iter()
                .map(|&(rep, name)| {
                    let desc = descriptor(scheme, window, rep, name);
                    let run = || -> Result<CvReport, CliError> {
                        let mut ds = feat.dataset(rep)?;
                        if name == ClassifierName::Tree && rep != Representation::Boolean {
                            ds = presence(&ds)?;
                        }
                        let report = cross_validate(&ds, &cfg.classifier_spec(name), &cv)?;
                        Ok(CvReport {
                            representation: rep,
                            ..report.with_descriptor(desc.clone())
                        })
                    };
                    let report = run().map_err(|e| e.context(format!("sweep {desc}")))?;
                    let row = SweepRow {
                        descriptor: desc,
                        scheme,
                        window,
                        representation: rep,
                        classifier: name,
                        n_instances: labels.len(),
                        n_female: counts[0],
                        n_male: counts[1],
                        n_features: feat.space.len(),
                        mean_accuracy: report.mean_accuracy,
                        baseline,
                    };
                    Ok((row, report))
                })
                .collect()
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    results.sort_by(|a, b| a.0.descriptor.cmp(&b.0.descriptor));
    let (rows, reports) = results.into_iter().unzip();
    Ok(SweepResult { rows, reports })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub descriptor: String,
    pub n_instances: usize,
    pub n_features: usize,
    pub undersampled: bool,
    pub features: RankedFeatures,
}

/// Trains a linear SVM on all instances and ranks its features.
pub fn rank(
    res: &Resources,
    instances: &[LabeledInstance],
    scheme: Scheme,
    window: Window,
    representation: Representation,
    k: usize,
) -> Result<RankReport, CliError> {
    let cfg = &res.config;
    let feat = res.extract(instances, scheme, window)?;
    let mut ds = feat.dataset(representation)?;
    if cfg.undersample {
        ds = undersample(&ds, derive_seed(cfg.seed, 1000))?;
    }
    let fit = train_svm(
        &ds,
        &SvmParams {
            lambda: cfg.svm.lambda,
            epochs: cfg.svm.epochs,
            seed: cfg.seed,
        },
    )?;
    Ok(RankReport {
        descriptor: descriptor(scheme, window, representation, ClassifierName::Svm),
        n_instances: ds.len(),
        n_features: feat.space.len(),
        undersampled: cfg.undersample,
        features: rank_features(&fit.model, &feat.space, k)?,
    })
}

/// Builds the corpus a concordance or count query runs over.
pub fn concordance(
    res: &Resources,
    instances: &[LabeledInstance],
    mode: TextMode,
) -> ConcordanceCorpus {
    match mode {
        TextMode::Raw => ConcordanceCorpus::raw(&res.articles, &res.labeler, instances),
        TextMode::Masked => ConcordanceCorpus::masked(instances, res.config.stem),
    }
}

pub fn concordance_lines(
    corpus: &ConcordanceCorpus,
    query: &KwicQuery,
) -> Result<Vec<ConcordanceLine>, CliError> {
    Ok(kwic(corpus, query)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermRatio {
    pub term: String,
    /// Female rate over male rate.
    pub ratio: RateRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub portfolio: Option<String>,
    pub rows: Vec<RateStat>,
    pub ratios: Vec<TermRatio>,
}

/// Mentions per year in office of each term for each group.
pub fn stats(
    res: &Resources,
    corpus: &ConcordanceCorpus,
    terms: &[String],
    groups: &[Gender],
    portfolio: Option<&str>,
) -> Result<StatsReport, CliError> {
    let window = res.config.date_window()?;
    let mut rows = Vec::new();
    let mut by_term: BTreeMap<&str, BTreeMap<Gender, RateStat>> = BTreeMap::new();
    for term in terms {
        for &g in groups {
            let years = res.registry.group_years(g, window, portfolio);
            let count = term_count(corpus, term, g)?;
            let stat = RateStat::new(term.clone(), g, count, years)
                .map_err(|e| CliError::from(e).context(format!("{term}/{g}")))?;
            by_term.entry(term).or_default().insert(g, stat.clone());
            rows.push(stat);
        }
    }
    let mut ratios = Vec::new();
    for term in terms {
        let per = &by_term[term.as_str()];
        if let (Some(f), Some(m)) = (per.get(&Gender::Female), per.get(&Gender::Male)) {
            ratios.push(TermRatio {
                term: term.clone(),
                ratio: rate_ratio(f, m)?,
            });
        }
    }
    Ok(StatsReport {
        portfolio: portfolio.map(str::to_string),
        rows,
        ratios,
    })
}
