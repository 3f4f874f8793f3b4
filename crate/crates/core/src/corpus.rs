//! Articles, the politician registry, name matching and gender labelling.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::preprocess::{
    self, MentionSpan, NameForm, Normalization, PreprocessError, SentenceSplitter, Span, Token,
    TokenStream, WordList,
};

/// Days per year used for all time-in-office arithmetic.
pub const DAYS_PER_YEAR: f64 = 365.25;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing field {field} at record {record}")]
    MissingField { field: &'static str, record: usize },
    #[error("malformed record {record}: {message}")]
    Malformed { record: usize, message: String },
    #[error("duplicate article id {0:?}")]
    DuplicateArticle(String),
    #[error("malformed registry: {0}")]
    MalformedRegistry(String),
    #[error("politician {0:?} listed twice")]
    DuplicatePolitician(String),
    #[error("politician {id:?}: {message}")]
    InvalidPolitician { id: String, message: String },
    #[error("politician {id:?}: term {start}..{end} does not start before it ends")]
    InvalidTerm {
        id: String,
        start: NaiveDate,
        end: NaiveDate,
    },
    #[error("politician {id:?}: terms {first_start}..{first_end} and {second_start}..{second_end} overlap")]
    OverlappingTerms {
        id: String,
        first_start: NaiveDate,
        first_end: NaiveDate,
        second_start: NaiveDate,
        second_end: NaiveDate,
    },
    #[error("window start {0} is not before end {1}")]
    InvalidWindow(NaiveDate, NaiveDate),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Female, Gender::Male];

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }

    pub fn other(self) -> Gender {
        match self {
            Gender::Female => Gender::Male,
            Gender::Male => Gender::Female,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "female" | "f" => Ok(Gender::Female),
            "male" | "m" => Ok(Gender::Male),
            other => Err(format!("unknown gender {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub source: String,
    pub date: NaiveDate,
    pub section: String,
    pub headline: String,
    pub body: String,
}

/// On-disk article formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArticleFormat {
    #[default]
    JsonLines,
}

pub fn load_articles(
    path: impl AsRef<Path>,
    format: ArticleFormat,
) -> Result<Vec<Article>, CorpusError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        ArticleFormat::JsonLines => read_articles_jsonl(BufReader::new(file)),
    }
}

/// Reads JSON Lines articles. Records are numbered by line, starting at 1;
/// blank lines are skipped.
pub fn read_articles_jsonl(reader: impl BufRead) -> Result<Vec<Article>, CorpusError> {
    let mut articles = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let record = i + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            record,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let article = parse_article(&line, record)?;
        if !seen.insert(article.id.clone()) {
            return Err(CorpusError::DuplicateArticle(article.id));
        }
        articles.push(article);
    }
    Ok(articles)
}

fn parse_article(line: &str, record: usize) -> Result<Article, CorpusError> {
    let malformed = |message: String| CorpusError::Malformed { record, message };
    let value: Value = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("expected a JSON object".into()))?;
    let field = |name: &'static str, required: bool| -> Result<String, CorpusError> {
        match obj.get(name) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(Value::Null) | None if !required => Ok(String::new()),
            None => Err(CorpusError::MissingField {
                field: name,
                record,
            }),
            Some(other) => Err(malformed(format!("field {name} must be a string, got {other}"))),
        }
    };
    let id = field("id", true)?;
    let source = field("source", true)?;
    let date_text = field("date", true)?;
    let section = field("section", false)?;
    let headline = field("headline", true)?;
    let body = field("body", true)?;
    if id.is_empty() {
        return Err(malformed("empty id".into()));
    }
    if body.trim().is_empty() {
        return Err(malformed(format!("article {id:?} has an empty body")));
    }
    let date = NaiveDate::parse_from_str(&date_text, "%Y-%m-%d")
        .map_err(|e| malformed(format!("bad date {date_text:?}: {e}")))?;
    Ok(Article {
        id,
        source,
        date,
        section,
        headline,
        body,
    })
}

pub fn write_articles_jsonl(mut writer: impl Write, articles: &[Article]) -> std::io::Result<()> {
    for a in articles {
        serde_json::to_writer(&mut writer, a)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Articles dated inside `[window.start, window.end)`.
pub fn filter_by_date(articles: &[Article], window: DateWindow) -> Vec<Article> {
    articles
        .iter()
        .filter(|a| window.contains(a.date))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OfficeTerm {
    pub portfolio: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoliticianRecord {
    pub id: String,
    pub gender: Gender,
    pub given_name: String,
    pub surname: String,
    #[serde(default)]
    pub extra_variants: Vec<String>,
    #[serde(default)]
    pub terms: Vec<OfficeTerm>,
}

impl PoliticianRecord {
    fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |message: &str| CorpusError::InvalidPolitician {
            id: self.id.clone(),
            message: message.to_string(),
        };
        if self.id.is_empty() {
            return Err(invalid("empty id"));
        }
        if self.given_name.trim().is_empty() || self.surname.trim().is_empty() {
            return Err(invalid("given_name and surname must be non-empty"));
        }
        for t in &self.terms {
            if t.start >= t.end {
                return Err(CorpusError::InvalidTerm {
                    id: self.id.clone(),
                    start: t.start,
                    end: t.end,
                });
            }
        }
        let mut terms: Vec<&OfficeTerm> = self.terms.iter().collect();
        terms.sort_by_key(|t| (t.start, t.end));
        for pair in terms.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(CorpusError::OverlappingTerms {
                    id: self.id.clone(),
                    first_start: pair[0].start,
                    first_end: pair[0].end,
                    second_start: pair[1].start,
                    second_end: pair[1].end,
                });
            }
        }
        Ok(())
    }

    /// Name variants with the form each one records: "Given Surname",
    /// "Surname", "Given", then extra variants (several tokens count as a
    /// full name, a single token as a given-name form).
    pub fn name_variants(&self) -> Vec<(String, NameForm)> {
        let mut out = vec![
            (format!("{} {}", self.given_name, self.surname), NameForm::Full),
            (self.surname.clone(), NameForm::Surname),
            (self.given_name.clone(), NameForm::Given),
        ];
        for extra in &self.extra_variants {
            let form = if preprocess::tokenize(extra).len() > 1 {
                NameForm::Full
            } else {
                NameForm::Given
            };
            out.push((extra.clone(), form));
        }
        out
    }

    pub fn years_in_office(&self, window: DateWindow) -> f64 {
        self.years_in_portfolio(window, None)
    }

    /// Years in office within `window`, optionally restricted to terms
    /// whose portfolio equals `portfolio` (case-insensitive).
    pub fn years_in_portfolio(&self, window: DateWindow, portfolio: Option<&str>) -> f64 {
        self.terms
            .iter()
            .filter(|t| portfolio.is_none_or(|p| t.portfolio.eq_ignore_ascii_case(p)))
            .map(|t| window.overlap_days(t.start, t.end) as f64 / DAYS_PER_YEAR)
            .sum()
    }
}

/// Half-open date range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, CorpusError> {
        if start >= end {
            return Err(CorpusError::InvalidWindow(start, end));
        }
        Ok(DateWindow { start, end })
    }

    /// The widest window chrono can represent.
    pub fn all_time() -> Self {
        DateWindow {
            start: NaiveDate::MIN,
            end: NaiveDate::MAX,
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date < self.end
    }

    fn overlap_days(&self, start: NaiveDate, end: NaiveDate) -> i64 {
        let lo = start.max(self.start);
        let hi = end.min(self.end);
        (hi - lo).num_days().max(0)
    }
}

/// Decimal years in office of one politician within a window.
pub fn years_in_office(record: &PoliticianRecord, window: DateWindow) -> f64 {
    record.years_in_office(window)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    pub politicians: Vec<PoliticianRecord>,
}

impl Registry {
    pub fn new(politicians: Vec<PoliticianRecord>) -> Result<Self, CorpusError> {
        let mut ids = HashSet::new();
        for p in &politicians {
            p.validate()?;
            if !ids.insert(p.id.as_str()) {
                return Err(CorpusError::DuplicatePolitician(p.id.clone()));
            }
        }
        Ok(Registry { politicians })
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        #[derive(Deserialize)]
        struct Doc {
            politicians: Vec<PoliticianRecord>,
        }
        let doc: Doc =
            serde_json::from_str(text).map_err(|e| CorpusError::MalformedRegistry(e.to_string()))?;
        Registry::new(doc.politicians)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("registry serializes")
    }

    pub fn get(&self, id: &str) -> Option<&PoliticianRecord> {
        self.politicians.iter().find(|p| p.id == id)
    }

    pub fn len(&self) -> usize {
        self.politicians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.politicians.is_empty()
    }

    /// Total years in office of every politician of `gender`.
    pub fn group_years(&self, gender: Gender, window: DateWindow, portfolio: Option<&str>) -> f64 {
        self.politicians
            .iter()
            .filter(|p| p.gender == gender)
            .map(|p| p.years_in_portfolio(window, portfolio))
            .sum()
    }

    /// Earliest term start to latest term end, if any terms exist.
    pub fn span_of_terms(&self) -> Option<DateWindow> {
        let terms = self.politicians.iter().flat_map(|p| &p.terms);
        let start = terms.clone().map(|t| t.start).min()?;
        let end = terms.map(|t| t.end).max()?;
        Some(DateWindow { start, end })
    }
}

pub fn load_registry(path: impl AsRef<Path>) -> Result<Registry, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Registry::from_json(&text)
}

/// Headline followed by body, tokenized and split into sentences. The
/// headline always ends a sentence of its own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub article_id: String,
    pub stream: TokenStream,
    pub headline_len: usize,
}

impl Document {
    pub fn new(article: &Article, splitter: &SentenceSplitter) -> Self {
        let headline = splitter.split(&preprocess::tokenize(&article.headline));
        let headline_len = headline.len();
        let body = splitter.split(&preprocess::tokenize(&article.body));
        Document {
            article_id: article.id.clone(),
            stream: headline.concat(body),
            headline_len,
        }
    }

    pub fn in_headline(&self, span: Span) -> bool {
        span.start < self.headline_len
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoliticianMatch {
    pub politician_id: String,
    pub gender: Gender,
    /// Mentions in text order, indices into the document stream.
    pub mentions: Vec<MentionSpan>,
    pub headline_mention: bool,
}

/// Token-level name matcher over every variant in a registry.
#[derive(Debug, Clone)]
pub struct NameMatcher {
    /// politician (id, gender), sorted by id
    politicians: Vec<(String, Gender)>,
    /// token sequence → (politician index, form), politician index ascending
    variants: HashMap<Vec<String>, Vec<(usize, NameForm)>>,
    max_len: usize,
}

impl NameMatcher {
    pub fn new(registry: &Registry) -> Self {
        let mut records: Vec<&PoliticianRecord> = registry.politicians.iter().collect();
        records.sort_by(|a, b| a.id.cmp(&b.id));
        let mut variants: HashMap<Vec<String>, Vec<(usize, NameForm)>> = HashMap::new();
        let mut max_len = 0;
        for (idx, rec) in records.iter().enumerate() {
            for (text, form) in rec.name_variants() {
                let key: Vec<String> = preprocess::tokenize(&text)
                    .tokens
                    .into_iter()
                    .map(|t| t.text)
                    .collect();
                if key.is_empty() {
                    continue;
                }
                max_len = max_len.max(key.len());
                let entry = variants.entry(key).or_default();
                if !entry.iter().any(|(i, _)| *i == idx) {
                    entry.push((idx, form));
                }
            }
        }
        NameMatcher {
            politicians: records.iter().map(|r| (r.id.clone(), r.gender)).collect(),
            variants,
            max_len,
        }
    }

    /// Leftmost-longest scan of `tokens[range]`. Each hit lists every
    /// politician owning the matched variant.
    fn scan<'a>(&'a self, tokens: &[Token], range: Span, out: &mut Vec<(Span, &'a [(usize, NameForm)])>) {
        let mut i = range.start;
        while i < range.end {
            let longest = (1..=self.max_len.min(range.end - i)).rev().find_map(|len| {
                let window = &tokens[i..i + len];
                if !window.iter().all(Token::is_word) {
                    return None;
                }
                let key: Vec<String> = window.iter().map(|t| t.text.clone()).collect();
                self.variants.get(&key).map(|owners| (len, owners.as_slice()))
            });
            match longest {
                Some((len, owners)) => {
                    out.push((Span::new(i, i + len), owners));
                    i += len;
                }
                None => i += 1,
            }
        }
    }

    fn hits(&self, doc: &Document) -> Vec<(Span, &[(usize, NameForm)])> {
        let mut hits = Vec::new();
        let n = doc.stream.len();
        self.scan(&doc.stream.tokens, Span::new(0, doc.headline_len), &mut hits);
        self.scan(&doc.stream.tokens, Span::new(doc.headline_len, n), &mut hits);
        hits
    }

    /// Politicians mentioned in the document, ordered by politician id.
    pub fn match_document(&self, doc: &Document) -> Vec<PoliticianMatch> {
        let mut by_politician: BTreeMap<usize, Vec<MentionSpan>> = BTreeMap::new();
        for (span, owners) in self.hits(doc) {
            for &(idx, form) in owners {
                by_politician
                    .entry(idx)
                    .or_default()
                    .push(MentionSpan { span, form });
            }
        }
        by_politician
            .into_iter()
            .map(|(idx, mentions)| {
                let (id, gender) = &self.politicians[idx];
                PoliticianMatch {
                    politician_id: id.clone(),
                    gender: *gender,
                    headline_mention: mentions.iter().any(|m| doc.in_headline(m.span)),
                    mentions,
                }
            })
            .collect()
    }

    /// One mention per matched span, for masking. When several
    /// politicians share a variant the form of the lowest id is used.
    pub fn mention_spans(&self, doc: &Document) -> Vec<MentionSpan> {
        self.hits(doc)
            .into_iter()
            .map(|(span, owners)| MentionSpan {
                span,
                form: owners[0].1,
            })
            .collect()
    }
}

pub fn match_politicians(article: &Article, registry: &Registry) -> Vec<PoliticianMatch> {
    let doc = Document::new(article, &SentenceSplitter::default());
    NameMatcher::new(registry).match_document(&doc)
}

/// One (article, gender) classification instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub article_id: String,
    pub label: Gender,
    pub politician_ids: Vec<String>,
    pub headline_mention: bool,
    pub section: String,
    /// Headline and body after masking and normalisation.
    pub masked: TokenStream,
}

/// Matches, masks and labels articles.
#[derive(Debug, Clone)]
pub struct Labeler {
    matcher: NameMatcher,
    splitter: SentenceSplitter,
    signals: WordList,
    normalization: Normalization,
}

impl Labeler {
    pub fn new(registry: &Registry) -> Self {
        Labeler {
            matcher: NameMatcher::new(registry),
            splitter: SentenceSplitter::default(),
            signals: WordList::gendered_default(),
            normalization: Normalization::default(),
        }
    }

    pub fn with_signals(mut self, signals: WordList) -> Self {
        self.signals = signals;
        self
    }

    pub fn with_splitter(mut self, splitter: SentenceSplitter) -> Self {
        self.splitter = splitter;
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn matcher(&self) -> &NameMatcher {
        &self.matcher
    }

    pub fn document(&self, article: &Article) -> Document {
        Document::new(article, &self.splitter)
    }

    /// Zero, one or two instances: one per gender with a matched politician.
    pub fn label(&self, article: &Article) -> Result<Vec<LabeledInstance>, CorpusError> {
        let doc = self.document(article);
        let matches = self.matcher.match_document(&doc);
        if matches.is_empty() {
            return Ok(Vec::new());
        }
        let spans = self.matcher.mention_spans(&doc);
        let masked = preprocess::mask_gender_signals(&doc.stream, &spans, &self.signals)?;
        let masked = self.normalization.apply(masked);

        let mut instances = Vec::new();
        for gender in Gender::ALL {
            let group: Vec<&PoliticianMatch> =
                matches.iter().filter(|m| m.gender == gender).collect();
            if group.is_empty() {
                continue;
            }
            instances.push(LabeledInstance {
                article_id: article.id.clone(),
                label: gender,
                politician_ids: group.iter().map(|m| m.politician_id.clone()).collect(),
                headline_mention: group.iter().any(|m| m.headline_mention),
                section: article.section.clone(),
                masked: masked.clone(),
            });
        }
        Ok(instances)
    }

    /// Labels a collection in parallel; output follows article order.
    pub fn label_all(&self, articles: &[Article]) -> Result<Vec<LabeledInstance>, CorpusError> {
        let per_article: Vec<Vec<LabeledInstance>> = articles
            .par_iter()
            .map(|a| self.label(a))
            .collect::<Result<_, _>>()?;
        Ok(per_article.into_iter().flatten().collect())
    }
}

/// Labels articles with the default masking configuration.
pub fn label_instances(
    articles: &[Article],
    registry: &Registry,
) -> Result<Vec<LabeledInstance>, CorpusError> {
    Labeler::new(registry).label_all(articles)
}

/// Article id → genders of the instances built from it.
pub fn article_groups(instances: &[LabeledInstance]) -> HashMap<String, BTreeSet<Gender>> {
    let mut groups: HashMap<String, BTreeSet<Gender>> = HashMap::new();
    for inst in instances {
        groups
            .entry(inst.article_id.clone())
            .or_default()
            .insert(inst.label);
    }
    groups
}
