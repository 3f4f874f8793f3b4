//! Tokenization, sentence splitting and gender masking.
//!
//! The pipeline for one article is `tokenize` → `split_sentences` →
//! `mask_gender_signals`, optionally followed by `remove_stopwords` and
//! `stem`. Every step returns a fresh [`TokenStream`]; sentence spans are
//! re-indexed whenever tokens are dropped.

mod porter;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use porter::stem as porter_stem;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("mention spans overlap: [{0}, {1}) and [{2}, {3})")]
    OverlappingMentions(usize, usize, usize, usize),
    #[error("mention span [{start}, {end}) outside stream of {len} tokens")]
    MentionOutOfBounds { start: usize, end: usize, len: usize },
    #[error("cannot read word list {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Number,
    Punct,
    Marker,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn new(text: impl Into<String>, kind: TokenKind) -> Self {
        Token {
            text: text.into(),
            kind,
        }
    }

    pub fn word(text: impl Into<String>) -> Self {
        Token::new(text, TokenKind::Word)
    }

    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }

    pub fn is_marker(&self) -> bool {
        self.kind == TokenKind::Marker
    }
}

/// Half-open token index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i < self.end
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    /// Sentence spans. After `split_sentences` they partition `tokens`.
    pub sentences: Vec<Span>,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    /// Concatenates two streams, shifting the second one's sentence spans.
    pub fn concat(mut self, other: TokenStream) -> TokenStream {
        let offset = self.tokens.len();
        self.tokens.extend(other.tokens);
        self.sentences.extend(
            other
                .sentences
                .into_iter()
                .map(|s| Span::new(s.start + offset, s.end + offset)),
        );
        self
    }

    /// Keeps the tokens for which `keep` holds, re-indexing sentences and
    /// dropping any that become empty.
    pub fn retain(&self, mut keep: impl FnMut(&Token) -> bool) -> TokenStream {
        let mut before = Vec::with_capacity(self.tokens.len() + 1);
        let mut tokens = Vec::with_capacity(self.tokens.len());
        for tok in &self.tokens {
            before.push(tokens.len());
            if keep(tok) {
                tokens.push(tok.clone());
            }
        }
        before.push(tokens.len());
        TokenStream {
            tokens,
            sentences: remap_sentences(&self.sentences, &before),
        }
    }

    /// Sentences that contain at least one marker token.
    pub fn marker_sentences(&self) -> impl Iterator<Item = Span> + '_ {
        self.sentences
            .iter()
            .copied()
            .filter(|s| self.tokens[s.start..s.end].iter().any(Token::is_marker))
    }
}

fn remap_sentences(sentences: &[Span], before: &[usize]) -> Vec<Span> {
    sentences
        .iter()
        .map(|s| Span::new(before[s.start], before[s.end]))
        .filter(|s| !s.is_empty())
        .collect()
}

/// How a politician was named at one mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NameForm {
    Full,
    Surname,
    Given,
}

impl NameForm {
    pub const ALL: [NameForm; 3] = [NameForm::Full, NameForm::Surname, NameForm::Given];

    pub fn marker(self) -> &'static str {
        match self {
            NameForm::Full => "NAMEFORM_FULL",
            NameForm::Surname => "NAMEFORM_SURNAME",
            NameForm::Given => "NAMEFORM_GIVEN",
        }
    }
}

impl fmt::Display for NameForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NameForm::Full => "full",
            NameForm::Surname => "surname",
            NameForm::Given => "given",
        })
    }
}

/// A politician mention inside a token stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MentionSpan {
    pub span: Span,
    pub form: NameForm,
}

/// Splits text into lowercased tokens.
///
/// Words are runs of letters, keeping apostrophes and hyphens that sit
/// between two letters. A number is a run of digits with dots allowed
/// between digits, plus any letters that directly follow (`3.4bn`). Every
/// other non-space character becomes a one-character punctuation token.
/// The typographic apostrophe is normalised to `'`.
pub fn tokenize(text: &str) -> TokenStream {
    let chars: Vec<char> = text
        .chars()
        .map(|c| if c == '\u{2019}' { '\'' } else { c })
        .collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphabetic() {
            let start = i;
            i += 1;
            while i < chars.len() {
                if chars[i].is_alphabetic() {
                    i += 1;
                } else if matches!(chars[i], '\'' | '-')
                    && chars.get(i + 1).is_some_and(|n| n.is_alphabetic())
                {
                    i += 2;
                } else {
                    break;
                }
            }
            tokens.push(Token::word(lower(&chars[start..i])));
        } else if c.is_ascii_digit() {
            let start = i;
            i += 1;
            while i < chars.len() {
                if chars[i].is_ascii_digit() {
                    i += 1;
                } else if chars[i] == '.' && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit()) {
                    i += 2;
                } else {
                    break;
                }
            }
            while i < chars.len() && chars[i].is_alphabetic() {
                i += 1;
            }
            tokens.push(Token::new(lower(&chars[start..i]), TokenKind::Number));
        } else {
            tokens.push(Token::new(c.to_string(), TokenKind::Punct));
            i += 1;
        }
    }
    TokenStream {
        tokens,
        sentences: Vec::new(),
    }
}

fn lower(chars: &[char]) -> String {
    chars.iter().collect::<String>().to_lowercase()
}

/// A set of lowercase tokens read from a plain-text file, one per line,
/// `#` starting a comment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordList {
    words: BTreeSet<String>,
}

/// Grammatical gender signals and gendered titles removed before training.
pub const DEFAULT_GENDERED_SIGNALS: &[&str] = &[
    "he",
    "him",
    "his",
    "himself",
    "she",
    "her",
    "hers",
    "herself",
    "mr",
    "mrs",
    "ms",
    "miss",
    "madam",
    "sir",
    "spokesman",
    "spokeswoman",
    "chairman",
    "chairwoman",
];

impl WordList {
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(|line| line.split('#').next().unwrap_or("").trim())
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase)
            .collect();
        WordList { words }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PreprocessError> {
        let path = path.as_ref();
        std::fs::read_to_string(path)
            .map(|text| WordList::parse(&text))
            .map_err(|source| PreprocessError::Io {
                path: path.display().to_string(),
                source,
            })
    }

    pub fn gendered_default() -> Self {
        DEFAULT_GENDERED_SIGNALS.iter().copied().collect()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

impl<'a> FromIterator<&'a str> for WordList {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        WordList {
            words: iter.into_iter().map(str::to_lowercase).collect(),
        }
    }
}

/// Heuristic sentence splitter.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: WordList,
}

pub const DEFAULT_ABBREVIATIONS: &[&str] = &["mr", "mrs", "ms", "dr", "st"];

impl Default for SentenceSplitter {
    fn default() -> Self {
        SentenceSplitter::new(DEFAULT_ABBREVIATIONS.iter().copied().collect())
    }
}

impl SentenceSplitter {
    pub fn new(abbreviations: WordList) -> Self {
        SentenceSplitter { abbreviations }
    }

    /// Closes a sentence after `.`, `!` or `?` (plus any directly following
    /// terminal punctuation and closing quotes or brackets). A full stop
    /// right after a registered abbreviation does not end a sentence. The
    /// trailing partial sentence is closed at the end of the stream.
    pub fn split(&self, stream: &TokenStream) -> TokenStream {
        let toks = &stream.tokens;
        let n = toks.len();
        let mut sentences = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < n {
            if is_terminal(&toks[i]) && !self.is_abbreviation_stop(toks, i) {
                let mut end = i + 1;
                while end < n && (is_terminal(&toks[end]) || is_closer(&toks[end])) {
                    end += 1;
                }
                sentences.push(Span::new(start, end));
                start = end;
                i = end;
            } else {
                i += 1;
            }
        }
        if start < n {
            sentences.push(Span::new(start, n));
        }
        TokenStream {
            tokens: stream.tokens.clone(),
            sentences,
        }
    }

    fn is_abbreviation_stop(&self, toks: &[Token], i: usize) -> bool {
        toks[i].text == "."
            && i > 0
            && toks[i - 1].is_word()
            && self.abbreviations.contains(&toks[i - 1].text)
    }
}

fn is_terminal(tok: &Token) -> bool {
    tok.kind == TokenKind::Punct && matches!(tok.text.as_str(), "." | "!" | "?")
}

fn is_closer(tok: &Token) -> bool {
    tok.kind == TokenKind::Punct
        && matches!(
            tok.text.as_str(),
            "\u{201D}" | ")" | "]" | "\u{00BB}"
        )
}

/// Sentence splitting with the default abbreviation list.
pub fn split_sentences(stream: &TokenStream) -> TokenStream {
    SentenceSplitter::default().split(stream)
}

/// Deletes gendered signal words and replaces each mention span with one
/// name-form marker token. Other tokens, quotations included, pass through.
pub fn mask_gender_signals(
    stream: &TokenStream,
    mentions: &[MentionSpan],
    signals: &WordList,
) -> Result<TokenStream, PreprocessError> {
    let n = stream.tokens.len();
    let mut sorted = mentions.to_vec();
    sorted.sort();
    for m in &sorted {
        if m.span.is_empty() || m.span.end > n {
            return Err(PreprocessError::MentionOutOfBounds {
                start: m.span.start,
                end: m.span.end,
                len: n,
            });
        }
    }
    for pair in sorted.windows(2) {
        let (a, b) = (pair[0].span, pair[1].span);
        if b.start < a.end {
            return Err(PreprocessError::OverlappingMentions(
                a.start, a.end, b.start, b.end,
            ));
        }
    }

    let mut before = Vec::with_capacity(n + 1);
    let mut tokens = Vec::with_capacity(n);
    let mut mentions = sorted.iter().peekable();
    let mut i = 0;
    while i < n {
        if let Some(m) = mentions.next_if(|m| m.span.start == i) {
            before.push(tokens.len());
            tokens.push(Token::new(m.form.marker(), TokenKind::Marker));
            for _ in m.span.start + 1..m.span.end {
                before.push(tokens.len());
            }
            i = m.span.end;
            continue;
        }
        before.push(tokens.len());
        let tok = &stream.tokens[i];
        if !(tok.is_word() && signals.contains(&tok.text)) {
            tokens.push(tok.clone());
        }
        i += 1;
    }
    before.push(tokens.len());
    Ok(TokenStream {
        tokens,
        sentences: remap_sentences(&stream.sentences, &before),
    })
}

/// Drops word tokens found in the stoplist. Markers, numbers and
/// punctuation are never removed.
pub fn remove_stopwords(stream: &TokenStream, stoplist: &WordList) -> TokenStream {
    stream.retain(|t| !(t.is_word() && stoplist.contains(&t.text)))
}

/// Replaces every word token by its Porter stem.
pub fn stem(stream: &TokenStream) -> TokenStream {
    TokenStream {
        tokens: stream
            .tokens
            .iter()
            .map(|t| match t.kind {
                TokenKind::Word => Token::word(porter_stem(&t.text)),
                _ => t.clone(),
            })
            .collect(),
        sentences: stream.sentences.clone(),
    }
}

/// Optional post-masking normalisation steps.
#[derive(Debug, Clone, Default)]
pub struct Normalization {
    pub stoplist: Option<WordList>,
    pub stem: bool,
}

impl Normalization {
    pub fn apply(&self, stream: TokenStream) -> TokenStream {
        let stream = match &self.stoplist {
            Some(stop) => remove_stopwords(&stream, stop),
            None => stream,
        };
        if self.stem {
            stem(&stream)
        } else {
            stream
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(ws: &[&str]) -> TokenStream {
        let tokens: Vec<Token> = ws
            .iter()
            .map(|w| {
                if w.starts_with("NAMEFORM_") {
                    Token::new(*w, TokenKind::Marker)
                } else {
                    Token::word(*w)
                }
            })
            .collect();
        let n = tokens.len();
        TokenStream {
            tokens,
            sentences: if n > 0 { vec![Span::new(0, n)] } else { vec![] },
        }
    }

    #[test]
    fn tokenize_apostrophes_and_hyphens() {
        assert_eq!(
            tokenize("Kessane's co-op plan.").texts(),
            ["kessane's", "co-op", "plan", "."]
        );
        assert_eq!(tokenize("Minister\u{2019}s").texts(), ["minister's"]);
        assert_eq!(tokenize("O'Brien-Smith").texts(), ["o'brien-smith"]);
        // a joiner must sit between letters
        assert_eq!(tokenize("a--b").texts(), ["a", "-", "-", "b"]);
        assert_eq!(tokenize("end- of 'quote'").texts(), ["end", "-", "of", "'", "quote", "'"]);
    }

    #[test]
    fn tokenize_numbers() {
        let s = tokenize("€3.4bn in 2007");
        assert_eq!(s.texts(), ["€", "3.4bn", "in", "2007"]);
        let kinds: Vec<_> = s.tokens.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            [TokenKind::Punct, TokenKind::Number, TokenKind::Word, TokenKind::Number]
        );
        assert_eq!(tokenize("10. Then").texts(), ["10", ".", "then"]);
        assert_eq!(tokenize("1990s").texts(), ["1990s"]);
    }

    #[test]
    fn tokenize_empty_and_unicode() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \n\t").is_empty());
        assert_eq!(tokenize("Ó Cuív Éamon").texts(), ["ó", "cuív", "éamon"]);
    }

    #[test]
    fn sentences_basic() {
        let s = split_sentences(&tokenize("She won. He lost."));
        assert_eq!(s.sentences, [Span::new(0, 3), Span::new(3, 6)]);
        let s = split_sentences(&tokenize("no terminal punctuation here"));
        assert_eq!(s.sentences, [Span::new(0, 4)]);
        assert!(split_sentences(&tokenize("")).sentences.is_empty());
    }

    #[test]
    fn sentences_abbreviation_guard() {
        let s = split_sentences(&tokenize("Dr. Smith spoke. All left."));
        assert_eq!(s.sentences, [Span::new(0, 5), Span::new(5, 8)]);
        let s = split_sentences(&tokenize("Mr. and Mrs. Walbrook left! \"Why?\" she asked."));
        assert_eq!(s.len(), 15);
        assert_eq!(
            s.sentences,
            [Span::new(0, 8), Span::new(8, 11), Span::new(11, 15)]
        );
        let s = split_sentences(&tokenize("(It ended.) Then\u{201D} more"));
        assert_eq!(s.sentences, [Span::new(0, 5), Span::new(5, 8)]);
    }

    #[test]
    fn mask_full_name_and_pronoun() {
        let stream = words(&["mary", "kessane", "said", "she", "would"]);
        let m = MentionSpan {
            span: Span::new(0, 2),
            form: NameForm::Full,
        };
        let out = mask_gender_signals(&stream, &[m], &WordList::gendered_default()).unwrap();
        assert_eq!(out.texts(), ["NAMEFORM_FULL", "said", "would"]);
        assert_eq!(out.sentences, [Span::new(0, 3)]);
    }

    #[test]
    fn mask_title_dropped() {
        let stream = words(&["ms", "kessane", "smiled"]);
        let m = MentionSpan {
            span: Span::new(1, 2),
            form: NameForm::Surname,
        };
        let out = mask_gender_signals(&stream, &[m], &WordList::gendered_default()).unwrap();
        assert_eq!(out.texts(), ["NAMEFORM_SURNAME", "smiled"]);
    }

    #[test]
    fn mask_identity_without_signals() {
        let stream = split_sentences(&tokenize("The budget passed. Farmers protested."));
        let out = mask_gender_signals(&stream, &[], &WordList::gendered_default()).unwrap();
        assert_eq!(out, stream);
    }

    #[test]
    fn mask_rejects_overlap() {
        let stream = words(&["a", "b", "c"]);
        let spans = [
            MentionSpan {
                span: Span::new(0, 2),
                form: NameForm::Full,
            },
            MentionSpan {
                span: Span::new(1, 2),
                form: NameForm::Surname,
            },
        ];
        assert!(matches!(
            mask_gender_signals(&stream, &spans, &WordList::gendered_default()),
            Err(PreprocessError::OverlappingMentions(..))
        ));
        let bad = [MentionSpan {
            span: Span::new(2, 5),
            form: NameForm::Full,
        }];
        assert!(mask_gender_signals(&stream, &bad, &WordList::default()).is_err());
    }

    #[test]
    fn mask_drops_emptied_sentences() {
        let stream = split_sentences(&tokenize("He. Budget passed."));
        let out = mask_gender_signals(&stream, &[], &WordList::gendered_default()).unwrap();
        assert_eq!(out.texts(), [".", "budget", "passed", "."]);
        assert_eq!(out.sentences, [Span::new(0, 1), Span::new(1, 4)]);
    }

    #[test]
    fn stopwords_spare_markers() {
        let stop: WordList = ["the", "nameform_full"].into_iter().collect();
        let out = remove_stopwords(&words(&["the", "minister", "spoke"]), &stop);
        assert_eq!(out.texts(), ["minister", "spoke"]);
        let out = remove_stopwords(&words(&["NAMEFORM_FULL", "the"]), &stop);
        assert_eq!(out.texts(), ["NAMEFORM_FULL"]);
        let s = words(&["the", "minister"]);
        assert_eq!(remove_stopwords(&s, &WordList::default()), s);
    }

    #[test]
    fn stem_words_only() {
        let mut s = tokenize("embraces 2007 cats");
        s.tokens.push(Token::new("NAMEFORM_GIVEN", TokenKind::Marker));
        assert_eq!(stem(&s).texts(), ["embrac", "2007", "cat", "NAMEFORM_GIVEN"]);
    }

    #[test]
    fn word_list_parsing() {
        let wl = WordList::parse("# comment\nThe\n  of  # trailing\n\nand\n");
        assert_eq!(wl.iter().collect::<Vec<_>>(), ["and", "of", "the"]);
    }
}
