//! Typed feature extraction, vocabulary building and vectorization.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LabeledInstance;
use crate::preprocess::{Token, TokenKind};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file} line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("scheme {0} requires a {1}")]
    MissingResource(Scheme, &'static str),
    #[error("no features survive min_df = {0}")]
    EmptySpace(usize),
    #[error("min_df must be at least 1")]
    InvalidMinDf,
}

/// Feature type. Variants are declared in alphabetical order so the
/// derived ordering matches the lexicographic order of their names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Adjective,
    LexiconCategory,
    Nameform,
    Section,
    Unigram,
    Verb,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Adjective => "adjective",
            FeatureKind::LexiconCategory => "lexicon_category",
            FeatureKind::Nameform => "nameform",
            FeatureKind::Section => "section",
            FeatureKind::Unigram => "unigram",
            FeatureKind::Verb => "verb",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which feature set to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Unigram,
    Adjective,
    Verb,
    LexiconCategory,
    Section,
    Nameform,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Unigram => "unigram",
            Scheme::Adjective => "adjective",
            Scheme::Verb => "verb",
            Scheme::LexiconCategory => "lexicon_category",
            Scheme::Section => "section",
            Scheme::Nameform => "nameform",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "unigram" => Scheme::Unigram,
            "adjective" => Scheme::Adjective,
            "verb" => Scheme::Verb,
            "lexicon_category" | "lexicon" => Scheme::LexiconCategory,
            "section" => Scheme::Section,
            "nameform" => Scheme::Nameform,
            other => return Err(format!("unknown feature scheme {other:?}")),
        })
    }
}

/// Text region terms are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Article,
    /// Only sentences that mention a politician (contain a marker).
    Sentence,
}

impl Window {
    pub fn as_str(self) -> &'static str {
        match self {
            Window::Article => "article",
            Window::Sentence => "sentence",
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "article" => Ok(Window::Article),
            "sentence" => Ok(Window::Sentence),
            other => Err(format!("unknown window {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Boolean,
    Count,
    Tfidf,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Boolean => "boolean",
            Representation::Count => "count",
            Representation::Tfidf => "tfidf",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Representation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "boolean" | "bool" => Ok(Representation::Boolean),
            "count" | "bow" | "bag-of-words" => Ok(Representation::Count),
            "tfidf" | "tf-idf" => Ok(Representation::Tfidf),
            other => Err(format!("unknown representation {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Term {
    pub kind: FeatureKind,
    pub surface: String,
}

impl Term {
    pub fn new(kind: FeatureKind, surface: impl Into<String>) -> Self {
        Term {
            kind,
            surface: surface.into(),
        }
    }
}

/// Term multiset.
pub type TermBag = BTreeMap<Term, u32>;

/// Named word categories, e.g. a semantic lexicon of power words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LexiconSet {
    pub name: String,
    pub categories: BTreeMap<String, BTreeSet<String>>,
    by_word: HashMap<String, Vec<String>>,
}

impl LexiconSet {
    /// Parses `WORD<TAB>CAT1,CAT2,...` lines. Words are lowercased,
    /// categories uppercased; `#` starts a comment.
    pub fn parse(name: &str, text: &str) -> Result<Self, FeatureError> {
        let err = |line: usize, message: String| FeatureError::Parse {
            file: name.to_string(),
            line,
            message,
        };
        let mut categories: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim_end();
            if line.trim().is_empty() {
                continue;
            }
            let (word, cats) = line
                .split_once('\t')
                .ok_or_else(|| err(i + 1, "expected WORD<TAB>CATEGORIES".into()))?;
            let word = word.trim().to_lowercase();
            if word.is_empty() {
                return Err(err(i + 1, "empty word".into()));
            }
            for cat in cats.split(',') {
                let cat = cat.trim().to_uppercase();
                if cat.is_empty() {
                    return Err(err(i + 1, format!("empty category for {word:?}")));
                }
                categories.entry(cat).or_default().insert(word.clone());
            }
        }
        Ok(LexiconSet::from_categories(name, categories))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FeatureError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        LexiconSet::parse(&name, &text)
    }

    pub fn from_categories(name: &str, categories: BTreeMap<String, BTreeSet<String>>) -> Self {
        let mut by_word: HashMap<String, Vec<String>> = HashMap::new();
        for (cat, words) in &categories {
            for w in words {
                by_word.entry(w.clone()).or_default().push(cat.clone());
            }
        }
        LexiconSet {
            name: name.to_string(),
            categories,
            by_word,
        }
    }

    /// Union of several lexicons; categories with the same name merge.
    pub fn merge<'a>(name: &str, sets: impl IntoIterator<Item = &'a LexiconSet>) -> Self {
        let mut categories: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for set in sets {
            for (cat, words) in &set.categories {
                categories
                    .entry(cat.clone())
                    .or_default()
                    .extend(words.iter().cloned());
            }
        }
        LexiconSet::from_categories(name, categories)
    }

    /// Categories containing `word`, in name order.
    pub fn categories_of(&self, word: &str) -> &[String] {
        self.by_word.get(word).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PosTag {
    #[serde(rename = "ADJ")]
    Adj,
    #[serde(rename = "VERB")]
    Verb,
    #[serde(rename = "NOUN")]
    Noun,
    #[serde(rename = "OTHER")]
    Other,
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "ADJ" => Ok(PosTag::Adj),
            "VERB" => Ok(PosTag::Verb),
            "NOUN" => Ok(PosTag::Noun),
            "OTHER" => Ok(PosTag::Other),
            other => Err(format!("unknown tag {other:?}")),
        }
    }
}

/// Assigns part-of-speech tags to a token sequence. `None` means unknown.
pub trait PosTagger: Send + Sync {
    fn tag(&self, tokens: &[Token]) -> Vec<Option<PosTag>>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosEntry {
    pub primary: PosTag,
    pub allowed: BTreeSet<PosTag>,
}

/// Context-free tagger: every word gets its primary tag.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PosLexicon {
    entries: HashMap<String, PosEntry>,
}

impl PosLexicon {
    /// Parses `word<TAB>PRIMARYTAG[<TAB>alt1,alt2]` lines.
    pub fn parse(name: &str, text: &str) -> Result<Self, FeatureError> {
        let mut entries = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim_end();
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| FeatureError::Parse {
                file: name.to_string(),
                line: i + 1,
                message,
            };
            let mut fields = line.split('\t');
            let word = fields.next().unwrap_or("").trim().to_lowercase();
            if word.is_empty() {
                return Err(err("empty word".into()));
            }
            let primary: PosTag = fields
                .next()
                .ok_or_else(|| err("missing primary tag".into()))?
                .parse()
                .map_err(err)?;
            let mut allowed = BTreeSet::from([primary]);
            if let Some(alts) = fields.next() {
                for alt in alts.split(',').filter(|a| !a.trim().is_empty()) {
                    allowed.insert(alt.parse().map_err(err)?);
                }
            }
            entries.insert(word, PosEntry { primary, allowed });
        }
        Ok(PosLexicon { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FeatureError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        PosLexicon::parse(&path.display().to_string(), &text)
    }

    pub fn insert(&mut self, word: &str, primary: PosTag) {
        self.entries.insert(
            word.to_lowercase(),
            PosEntry {
                primary,
                allowed: BTreeSet::from([primary]),
            },
        );
    }

    pub fn get(&self, word: &str) -> Option<&PosEntry> {
        self.entries.get(word)
    }
}

impl PosTagger for PosLexicon {
    fn tag(&self, tokens: &[Token]) -> Vec<Option<PosTag>> {
        tokens
            .iter()
            .map(|t| {
                if t.is_word() {
                    self.entries.get(&t.text).map(|e| e.primary)
                } else {
                    None
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Default)]
pub struct ExtractOptions<'a> {
    pub window: Window,
    pub tagger: Option<&'a dyn PosTagger>,
    pub lexicon: Option<&'a LexiconSet>,
}

/// Extracts the term multiset of one instance under a scheme.
pub fn extract_terms(
    instance: &LabeledInstance,
    scheme: Scheme,
    options: &ExtractOptions<'_>,
) -> Result<TermBag, FeatureError> {
    let mut bag = TermBag::new();
    if scheme == Scheme::Section {
        let section = instance.section.trim();
        if !section.is_empty() {
            bag.insert(Term::new(FeatureKind::Section, section.to_lowercase()), 1);
        }
        return Ok(bag);
    }

    let stream = &instance.masked;
    let regions: Vec<&[Token]> = match options.window {
        Window::Article => vec![&stream.tokens[..]],
        Window::Sentence => stream
            .marker_sentences()
            .map(|s| &stream.tokens[s.start..s.end])
            .collect(),
    };
    let mut add = |term: Term| *bag.entry(term).or_insert(0) += 1;

    match scheme {
        Scheme::Unigram | Scheme::Nameform => {
            for tok in regions.iter().flat_map(|r| r.iter()) {
                match tok.kind {
                    TokenKind::Marker => add(Term::new(FeatureKind::Nameform, tok.text.clone())),
                    TokenKind::Word if scheme == Scheme::Unigram => {
                        add(Term::new(FeatureKind::Unigram, tok.text.clone()))
                    }
                    _ => {}
                }
            }
        }
        Scheme::Adjective | Scheme::Verb => {
            let tagger = options
                .tagger
                .ok_or(FeatureError::MissingResource(scheme, "part-of-speech lexicon"))?;
            let (want, kind) = if scheme == Scheme::Adjective {
                (PosTag::Adj, FeatureKind::Adjective)
            } else {
                (PosTag::Verb, FeatureKind::Verb)
            };
            for region in &regions {
                for (tok, tag) in region.iter().zip(tagger.tag(region)) {
                    if tok.is_word() && tag == Some(want) {
                        add(Term::new(kind, tok.text.clone()));
                    }
                }
            }
        }
        Scheme::LexiconCategory => {
            let lexicon = options
                .lexicon
                .ok_or(FeatureError::MissingResource(scheme, "lexicon"))?;
            for tok in regions.iter().flat_map(|r| r.iter()).filter(|t| t.is_word()) {
                for cat in lexicon.categories_of(&tok.text) {
                    add(Term::new(FeatureKind::LexiconCategory, cat.clone()));
                }
            }
        }
        Scheme::Section => unreachable!(),
    }
    Ok(bag)
}

/// Indexed vocabulary with document frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeatureSpace {
    entries: Vec<Term>,
    doc_freq: Vec<u32>,
    n_docs: usize,
    #[serde(skip)]
    index: HashMap<Term, usize>,
}

impl FeatureSpace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn term(&self, id: usize) -> &Term {
        &self.entries[id]
    }

    pub fn terms(&self) -> &[Term] {
        &self.entries
    }

    pub fn doc_freq(&self, id: usize) -> u32 {
        self.doc_freq[id]
    }

    pub fn id(&self, term: &Term) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn id_of(&self, kind: FeatureKind, surface: &str) -> Option<usize> {
        self.id(&Term::new(kind, surface))
    }

    pub fn idf(&self, id: usize) -> f64 {
        (self.n_docs as f64 / self.doc_freq[id] as f64).ln()
    }
}

/// Builds the vocabulary of terms with document frequency ≥ `min_df`,
/// sorted by (kind, surface).
pub fn build_space(bags: &[TermBag], min_df: usize) -> Result<FeatureSpace, FeatureError> {
    if min_df == 0 {
        return Err(FeatureError::InvalidMinDf);
    }
    let mut df: BTreeMap<&Term, u32> = BTreeMap::new();
    for bag in bags {
        for term in bag.keys() {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let (entries, doc_freq): (Vec<Term>, Vec<u32>) = df
        .into_iter()
        .filter(|(_, n)| *n as usize >= min_df)
        .map(|(t, n)| (t.clone(), n))
        .unzip();
    if entries.is_empty() {
        return Err(FeatureError::EmptySpace(min_df));
    }
    let index = entries
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Ok(FeatureSpace {
        entries,
        doc_freq,
        n_docs: bags.len(),
        index,
    })
}

/// Sparse vector: strictly increasing ids, positive values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub pairs: Vec<(usize, f64)>,
    pub representation: Representation,
}

impl FeatureVector {
    pub fn empty(representation: Representation) -> Self {
        FeatureVector {
            pairs: Vec::new(),
            representation,
        }
    }

    pub fn from_pairs(mut pairs: Vec<(usize, f64)>, representation: Representation) -> Self {
        pairs.sort_by_key(|p| p.0);
        pairs.dedup_by_key(|p| p.0);
        pairs.retain(|p| p.1 > 0.0);
        FeatureVector {
            pairs,
            representation,
        }
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.pairs.iter().map(|&(i, v)| dense[i] * v).sum()
    }

    pub fn get(&self, id: usize) -> f64 {
        self.pairs
            .binary_search_by_key(&id, |p| p.0)
            .map(|i| self.pairs[i].1)
            .unwrap_or(0.0)
    }

    pub fn max_id(&self) -> Option<usize> {
        self.pairs.last().map(|p| p.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        FeatureVector {
            pairs: self.pairs.iter().map(|&(i, v)| (i, v * factor)).collect(),
            representation: self.representation,
        }
    }
}

/// Maps a term multiset into `space`. Unknown terms are ignored;
/// tf-idf uses the raw count times `ln(n_docs / df)` and drops zeros.
pub fn vectorize(bag: &TermBag, space: &FeatureSpace, representation: Representation) -> FeatureVector {
    let mut pairs: Vec<(usize, f64)> = bag
        .iter()
        .filter_map(|(term, &count)| {
            let id = space.id(term)?;
            let value = match representation {
                Representation::Boolean => 1.0,
                Representation::Count => count as f64,
                Representation::Tfidf => count as f64 * space.idf(id),
            };
            (value > 0.0).then_some((id, value))
        })
        .collect();
    pairs.sort_by_key(|p| p.0);
    FeatureVector {
        pairs,
        representation,
    }
}
