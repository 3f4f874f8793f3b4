//! Feature ranking, keyword-in-context extraction and time-normalised
//! frequency statistics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{article_groups, Article, Gender, LabeledInstance, Labeler};
use crate::features::{FeatureKind, FeatureSpace};
use crate::learn::LinearModel;
use crate::preprocess::{self, porter_stem, TokenKind, TokenStream};

#[derive(Debug, Error, PartialEq)]
pub enum InterpretError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("model has {weights} weights but the feature space has {features} features")]
    SpaceMismatch { weights: usize, features: usize },
    #[error("query {0:?} is empty after tokenization")]
    EmptyTerm(String),
    #[error("query {0:?} spans several tokens; phrase search is not supported")]
    MultiTokenTerm(String),
    #[error("context window must be at least 1")]
    InvalidWindow,
    #[error("years in office must be positive, got {0}")]
    NonPositiveYears(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub surface: String,
    pub kind: FeatureKind,
    pub weight: f64,
}

/// Top-weighted features for each class of a linear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeatures {
    pub k: usize,
    /// Largest positive weights first.
    pub female: Vec<RankedFeature>,
    /// Most negative weights first.
    pub male: Vec<RankedFeature>,
}

/// Ranks features by signed weight. Positive weights point to the
/// model's positive class (female), negative ones to male; zero weights
/// are skipped and equal weights keep feature-space order.
pub fn rank_features(
    model: &LinearModel,
    space: &FeatureSpace,
    k: usize,
) -> Result<RankedFeatures, InterpretError> {
    if k == 0 {
        return Err(InterpretError::InvalidK);
    }
    if model.weights.len() != space.len() {
        return Err(InterpretError::SpaceMismatch {
            weights: model.weights.len(),
            features: space.len(),
        });
    }
    let pick = |positive: bool| -> Vec<RankedFeature> {
        let mut ids: Vec<usize> = (0..space.len())
            .filter(|&i| {
                let w = model.weights[i];
                if positive {
                    w > 0.0
                } else {
                    w < 0.0
                }
            })
            .collect();
        // stable sort keeps (kind, surface) order among equal weights
        ids.sort_by(|&a, &b| {
            model.weights[b]
                .abs()
                .partial_cmp(&model.weights[a].abs())
                .expect("finite weights")
        });
        ids.into_iter()
            .take(k)
            .map(|i| {
                let term = space.term(i);
                RankedFeature {
                    surface: term.surface.clone(),
                    kind: term.kind,
                    weight: model.weights[i],
                }
            })
            .collect()
    };
    let (pos, neg) = (pick(true), pick(false));
    let (female, male) = match model.positive_class {
        Gender::Female => (pos, neg),
        Gender::Male => (neg, pos),
    };
    Ok(RankedFeatures { k, female, male })
}

/// One article's tokens prepared for concordance queries.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcordanceDoc {
    pub article_id: String,
    pub tokens: Vec<String>,
    /// Per token: whether its sentence mentions a politician.
    pub in_mention_sentence: Vec<bool>,
    /// Genders of the instances built from this article.
    pub groups: BTreeSet<Gender>,
}

impl ConcordanceDoc {
    fn from_stream(
        article_id: &str,
        stream: &TokenStream,
        mention_sentence: impl Fn(usize, usize) -> bool,
        groups: BTreeSet<Gender>,
    ) -> Self {
        let mut flags = vec![false; stream.len()];
        for s in &stream.sentences {
            if mention_sentence(s.start, s.end) {
                flags[s.start..s.end].iter_mut().for_each(|f| *f = true);
            }
        }
        ConcordanceDoc {
            article_id: article_id.to_string(),
            tokens: stream.tokens.iter().map(|t| t.text.clone()).collect(),
            in_mention_sentence: flags,
            groups,
        }
    }
}

/// Which token stream concordance queries run over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TextMode {
    /// Tokenized original text, names and pronouns intact.
    #[default]
    Raw,
    /// The masked stream the classifiers see.
    Masked,
}

/// Documents ordered by article id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConcordanceCorpus {
    docs: Vec<ConcordanceDoc>,
    stem_queries: bool,
}

impl ConcordanceCorpus {
    pub fn from_docs(mut docs: Vec<ConcordanceDoc>) -> Self {
        docs.sort_by(|a, b| a.article_id.cmp(&b.article_id));
        ConcordanceCorpus {
            docs,
            stem_queries: false,
        }
    }

    /// Raw tokenized articles. Group membership comes from `instances`;
    /// mention sentences from the labeler's name matcher.
    pub fn raw(articles: &[Article], labeler: &Labeler, instances: &[LabeledInstance]) -> Self {
        let groups = article_groups(instances);
        let docs = articles
            .iter()
            .map(|a| {
                let doc = labeler.document(a);
                let spans = labeler.matcher().mention_spans(&doc);
                ConcordanceDoc::from_stream(
                    &a.id,
                    &doc.stream,
                    |s, e| spans.iter().any(|m| m.span.start < e && m.span.end > s),
                    groups.get(&a.id).cloned().unwrap_or_default(),
                )
            })
            .collect();
        ConcordanceCorpus::from_docs(docs)
    }

    /// Masked streams, one document per article. Set `stemmed` when the
    /// instances were stemmed so queries are stemmed too.
    pub fn masked(instances: &[LabeledInstance], stemmed: bool) -> Self {
        let groups = article_groups(instances);
        let mut seen = BTreeMap::new();
        for inst in instances {
            seen.entry(inst.article_id.clone()).or_insert(inst);
        }
        let docs = seen
            .into_iter()
            .map(|(id, inst)| {
                let stream = &inst.masked;
                ConcordanceDoc::from_stream(
                    &id,
                    stream,
                    |s, e| stream.tokens[s..e].iter().any(|t| t.kind == TokenKind::Marker),
                    groups[&id].clone(),
                )
            })
            .collect();
        ConcordanceCorpus {
            stem_queries: stemmed,
            ..ConcordanceCorpus::from_docs(docs)
        }
    }

    pub fn docs(&self) -> &[ConcordanceDoc] {
        &self.docs
    }

    /// Normalises a query to the single token it must match.
    pub fn normalize_term(&self, term: &str) -> Result<String, InterpretError> {
        let stream = preprocess::tokenize(term);
        match stream.tokens.as_slice() {
            [] => Err(InterpretError::EmptyTerm(term.to_string())),
            [tok] if self.stem_queries && tok.is_word() => Ok(porter_stem(&tok.text)),
            [tok] => Ok(tok.text.clone()),
            _ => Err(InterpretError::MultiTokenTerm(term.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KwicQuery {
    pub term: String,
    pub window: usize,
    pub group: Option<Gender>,
    /// Only occurrences in sentences that mention a politician.
    pub require_cooccurrence: bool,
}

impl KwicQuery {
    pub fn new(term: impl Into<String>) -> Self {
        KwicQuery {
            term: term.into(),
            window: 8,
            group: None,
            require_cooccurrence: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcordanceLine {
    pub article_id: String,
    /// Token index of the keyword within the article.
    pub position: usize,
    pub left: Vec<String>,
    pub keyword: String,
    pub right: Vec<String>,
}

/// Every occurrence of the query term with up to `window` tokens of
/// context on each side, ordered by (article id, position).
pub fn kwic(
    corpus: &ConcordanceCorpus,
    query: &KwicQuery,
) -> Result<Vec<ConcordanceLine>, InterpretError> {
    if query.window == 0 {
        return Err(InterpretError::InvalidWindow);
    }
    let term = corpus.normalize_term(&query.term)?;
    let mut lines = Vec::new();
    for doc in corpus.docs() {
        if query.group.is_some_and(|g| !doc.groups.contains(&g)) {
            continue;
        }
        for (i, tok) in doc.tokens.iter().enumerate() {
            if *tok != term || (query.require_cooccurrence && !doc.in_mention_sentence[i]) {
                continue;
            }
            let lo = i.saturating_sub(query.window);
            let hi = (i + 1 + query.window).min(doc.tokens.len());
            lines.push(ConcordanceLine {
                article_id: doc.article_id.clone(),
                position: i,
                left: doc.tokens[lo..i].to_vec(),
                keyword: tok.clone(),
                right: doc.tokens[i + 1..hi].to_vec(),
            });
        }
    }
    Ok(lines)
}

/// Occurrences of `term` in articles belonging to `group`. An article
/// labelled with both genders counts towards both.
pub fn term_count(
    corpus: &ConcordanceCorpus,
    term: &str,
    group: Gender,
) -> Result<usize, InterpretError> {
    let term = corpus.normalize_term(term)?;
    Ok(corpus
        .docs()
        .iter()
        .filter(|d| d.groups.contains(&group))
        .map(|d| d.tokens.iter().filter(|t| **t == term).count())
        .sum())
}

pub fn rate(count: usize, years: f64) -> Result<f64, InterpretError> {
    if !(years > 0.0) {
        return Err(InterpretError::NonPositiveYears(years));
    }
    Ok(count as f64 / years)
}

/// Mentions of a term per year in office for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStat {
    pub term: String,
    pub group: Gender,
    pub count: usize,
    pub years: f64,
    pub rate: f64,
}

impl RateStat {
    pub fn new(
        term: impl Into<String>,
        group: Gender,
        count: usize,
        years: f64,
    ) -> Result<Self, InterpretError> {
        Ok(RateStat {
            term: term.into(),
            group,
            count,
            years,
            rate: rate(count, years)?,
        })
    }
}

/// Ratio of two rates. When the second count is zero the ratio is
/// flagged and set to +∞ (or NaN if the first count is zero too).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRatio {
    pub value: f64,
    pub denominator_zero: bool,
}

pub fn rate_ratio(a: &RateStat, b: &RateStat) -> Result<RateRatio, InterpretError> {
    let ra = rate(a.count, a.years)?;
    let rb = rate(b.count, b.years)?;
    if b.count == 0 {
        return Ok(RateRatio {
            value: if a.count == 0 { f64::NAN } else { f64::INFINITY },
            denominator_zero: true,
        });
    }
    Ok(RateRatio {
        value: ra / rb,
        denominator_zero: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{build_space, Term, TermBag};

    fn space(surfaces: &[&str]) -> FeatureSpace {
        let bag: TermBag = surfaces
            .iter()
            .map(|s| (Term::new(FeatureKind::Unigram, *s), 1))
            .collect();
        build_space(&[bag], 1).unwrap()
    }

    fn model(weights: &[f64]) -> LinearModel {
        LinearModel {
            weights: weights.to_vec(),
            bias: 0.0,
            positive_class: Gender::Female,
        }
    }

    fn surfaces(list: &[RankedFeature]) -> Vec<&str> {
        list.iter().map(|f| f.surface.as_str()).collect()
    }

    #[test]
    fn ranking_by_sign_and_magnitude() {
        let sp = space(&["a", "b", "c"]);
        let r = rank_features(&model(&[2.0, 1.0, -3.0]), &sp, 2).unwrap();
        assert_eq!(surfaces(&r.female), ["a", "b"]);
        assert_eq!(surfaces(&r.male), ["c"]);
    }

    #[test]
    fn ranking_edge_cases() {
        let sp = space(&["a", "b", "c"]);
        let r = rank_features(&model(&[0.0; 3]), &sp, 5).unwrap();
        assert!(r.female.is_empty() && r.male.is_empty());
        assert_eq!(
            rank_features(&model(&[0.0; 3]), &sp, 0),
            Err(InterpretError::InvalidK)
        );
        assert!(rank_features(&model(&[0.0; 2]), &sp, 1).is_err());
        // equal weights keep space order
        let r = rank_features(&model(&[1.0, 1.0, 1.0]), &sp, 2).unwrap();
        assert_eq!(surfaces(&r.female), ["a", "b"]);
    }

    fn corpus(texts: &[(&str, &str, &[Gender])]) -> ConcordanceCorpus {
        ConcordanceCorpus::from_docs(
            texts
                .iter()
                .map(|(id, text, groups)| {
                    let stream = preprocess::split_sentences(&preprocess::tokenize(text));
                    ConcordanceDoc::from_stream(
                        id,
                        &stream,
                        |_, _| false,
                        groups.iter().copied().collect(),
                    )
                })
                .collect(),
        )
    }

    #[test]
    fn kwic_boundaries() {
        let c = corpus(&[("a", "husband of the minister", &[Gender::Female])]);
        let mut q = KwicQuery::new("husband");
        q.window = 2;
        let lines = kwic(&c, &q).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(lines[0].left.is_empty());
        assert_eq!(lines[0].right, ["of", "the"]);
        assert!(kwic(&c, &KwicQuery::new("wife")).unwrap().is_empty());
    }

    #[test]
    fn kwic_rejects_phrases() {
        let c = corpus(&[]);
        assert!(matches!(
            kwic(&c, &KwicQuery::new("her husband")),
            Err(InterpretError::MultiTokenTerm(_))
        ));
        assert!(matches!(
            kwic(&c, &KwicQuery::new("  ")),
            Err(InterpretError::EmptyTerm(_))
        ));
    }

    #[test]
    fn counts_respect_groups() {
        let c = corpus(&[
            ("a", "husband husband", &[Gender::Female]),
            ("b", "husband", &[Gender::Female, Gender::Male]),
            ("c", "Husband", &[Gender::Male]),
        ]);
        assert_eq!(term_count(&c, "husband", Gender::Female).unwrap(), 3);
        assert_eq!(term_count(&c, "husband", Gender::Male).unwrap(), 2);
        assert_eq!(term_count(&c, "wife", Gender::Male).unwrap(), 0);
        let mut q = KwicQuery::new("husband");
        q.group = Some(Gender::Male);
        assert_eq!(kwic(&c, &q).unwrap().len(), 2);
    }

    #[test]
    fn rates_and_ratios() {
        let a = RateStat::new("husband", Gender::Female, 48, 38.6).unwrap();
        let b = RateStat::new("wife", Gender::Male, 27, 84.1).unwrap();
        let r = rate_ratio(&a, &b).unwrap();
        assert!((r.value - 3.873).abs() < 0.01, "{}", r.value);
        let same = RateStat::new("x", Gender::Male, 10, 5.0).unwrap();
        let same2 = RateStat::new("x", Gender::Female, 4, 2.0).unwrap();
        assert!((rate_ratio(&same, &same2).unwrap().value - 1.0).abs() < 1e-12);
        let zero = RateStat::new("x", Gender::Female, 0, 10.0).unwrap();
        let five = RateStat::new("x", Gender::Male, 5, 10.0).unwrap();
        assert_eq!(rate_ratio(&zero, &five).unwrap().value, 0.0);
        let flagged = rate_ratio(&five, &zero).unwrap();
        assert!(flagged.denominator_zero && flagged.value.is_infinite());
        assert!(RateStat::new("x", Gender::Male, 1, 0.0).is_err());
    }
}
