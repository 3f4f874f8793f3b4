//! Synthetic labelled corpora with controllable planted terms.
//!
//! Every article features one politician. Sentences are drawn from a
//! shared filler vocabulary, so apart from planted terms the two classes
//! differ only in gendered words and names, which masking removes.

use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use mediabias_core::corpus::{OfficeTerm, PoliticianRecord, Registry};
use mediabias_core::rng::Rng;
use mediabias_core::{Article, Gender};

use crate::error::CliError;

/// A word inserted into each sentence with a per-class probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTerm {
    pub term: String,
    pub p_female: f64,
    pub p_male: f64,
}

impl FromStr for PlantedTerm {
    type Err = String;

    /// `term:p_female:p_male`
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [term, pf, pm] = parts.as_slice() else {
            return Err(format!("expected TERM:P_FEMALE:P_MALE, got {s:?}"));
        };
        let prob = |p: &str| -> Result<f64, String> {
            let v: f64 = p.parse().map_err(|_| format!("bad probability {p:?}"))?;
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(format!("probability {v} outside [0, 1]"))
            }
        };
        let term = term.trim().to_lowercase();
        if term.is_empty() || !term.chars().all(char::is_alphabetic) {
            return Err(format!("planted term must be a single word, got {term:?}"));
        }
        Ok(PlantedTerm {
            term,
            p_female: prob(pf)?,
            p_male: prob(pm)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_articles: usize,
    /// Fraction of articles featuring a female politician.
    pub female_share: f64,
    /// Planting probabilities apply to each body sentence independently.
    pub planted: Vec<PlantedTerm>,
    pub sentences_per_article: usize,
    pub politicians_per_gender: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_articles: 2000,
            female_share: 0.5,
            planted: Vec::new(),
            sentences_per_article: 10,
            politicians_per_gender: 8,
            seed: 0,
        }
    }
}

pub struct SynthCorpus {
    pub articles: Vec<Article>,
    pub registry: Registry,
}

const FEMALE_GIVEN: &[&str] = &[
    "Anna", "Clara", "Helen", "Julia", "Laura", "Margaret", "Nora", "Ruth", "Sarah", "Teresa",
    "Vera", "Alice",
];
const MALE_GIVEN: &[&str] = &[
    "Adam", "Colin", "David", "Edward", "Frank", "George", "Henry", "James", "Martin", "Owen",
    "Peter", "Simon",
];
const SURNAMES: &[&str] = &[
    "Ashford", "Barrow", "Calloway", "Dunmore", "Ellery", "Fenwick", "Garside", "Hollis",
    "Ingram", "Jessop", "Kettering", "Lowther", "Marlow", "Norcott", "Oakley", "Pembury",
    "Quarrie", "Radley", "Sandifer", "Thorley", "Upton", "Varley", "Whitcombe", "Yardley",
];
const PORTFOLIOS: &[&str] = &["Health", "Finance", "Education", "Justice", "Transport", "Enterprise"];
const SOURCES: &[&str] = &["Daily Ledger", "Evening Courier", "Sunday Chronicle"];
const SECTIONS: &[&str] = &["News", "Politics", "Business", "Opinion"];

const FILLER: &[&str] = &[
    "government", "budget", "plan", "department", "report", "week", "year", "policy", "cabinet",
    "party", "vote", "public", "service", "support", "proposal", "funding", "scheme", "review",
    "committee", "statement", "announced", "said", "told", "agreed", "rejected", "defended",
    "criticised", "welcomed", "confirmed", "insisted", "warned", "argued", "expected", "decision",
    "meeting", "council", "minister", "office", "country", "people", "families", "workers",
    "schools", "hospitals", "roads", "taxes", "cuts", "jobs", "growth", "crisis", "reform",
    "strategy", "programme", "issue", "question", "debate", "opposition", "coalition", "leader",
    "election", "campaign", "spending", "investment", "economy", "recovery", "sector", "market",
    "banks", "pensions", "housing", "health", "education", "justice", "transport", "energy",
    "water", "rural", "urban", "local", "national", "european", "new", "major", "significant",
    "recent", "current", "future", "difficult", "important", "clear", "strong", "serious",
    "further", "early", "late", "last", "next", "first", "final", "open", "private", "the",
    "the", "the", "a", "a", "of", "of", "to", "to", "in", "in", "and", "and", "for", "on",
    "with", "at", "by", "from", "that", "this", "was", "is", "would", "will", "has", "had",
    "been", "not", "but", "also", "after", "before", "over", "under", "about", "more", "most",
    "some", "many", "all", "other", "there", "which", "when", "while", "today", "yesterday",
    "dublin", "cork", "galway", "limerick", "dail", "seanad", "unions", "talks", "figures",
];

fn pick<'a>(rng: &mut Rng, list: &[&'a str]) -> &'a str {
    list[rng.below(list.len() as u64) as usize]
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn validate(params: &SynthParams) -> Result<(), CliError> {
    let bad = |m: String| Err(CliError::Config(m));
    if params.n_articles < 2 {
        return bad(format!("need at least 2 articles, got {}", params.n_articles));
    }
    if !(0.0..=1.0).contains(&params.female_share) {
        return bad(format!("female_share {} outside [0, 1]", params.female_share));
    }
    if params.sentences_per_article == 0 {
        return bad("sentences_per_article must be at least 1".into());
    }
    let max = FEMALE_GIVEN.len().min(SURNAMES.len() / 2);
    if params.politicians_per_gender == 0 || params.politicians_per_gender > max {
        return bad(format!("politicians_per_gender must be in 1..={max}"));
    }
    Ok(())
}

fn registry(params: &SynthParams, rng: &mut Rng) -> Result<Registry, CliError> {
    let base = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
    let n = params.politicians_per_gender;
    let mut politicians = Vec::with_capacity(2 * n);
    for (g, given) in [(Gender::Female, FEMALE_GIVEN), (Gender::Male, MALE_GIVEN)] {
        for i in 0..n {
            let surname = SURNAMES[g.index() * n + i];
            let start = base + Duration::days(rng.below(1500) as i64);
            let end = start + Duration::days(365 + rng.below(2500) as i64);
            politicians.push(PoliticianRecord {
                id: format!("{}{:02}", &g.as_str()[..1], i + 1),
                gender: g,
                given_name: given[i].to_string(),
                surname: surname.to_string(),
                extra_variants: Vec::new(),
                terms: vec![OfficeTerm {
                    portfolio: pick(rng, PORTFOLIOS).to_string(),
                    start,
                    end,
                }],
            });
        }
    }
    Ok(Registry::new(politicians)?)
}

/// Generates a corpus and registry. Exactly `round(n · female_share)`
/// articles feature a female politician.
pub fn generate(params: &SynthParams) -> Result<SynthCorpus, CliError> {
    validate(params)?;
    let mut rng = Rng::seed_from_u64(params.seed);
    let registry = registry(params, &mut rng)?;
    let people: Vec<&PoliticianRecord> = registry.politicians.iter().collect();
    let by_gender = |g: Gender| -> Vec<&PoliticianRecord> {
        people.iter().copied().filter(|p| p.gender == g).collect()
    };
    let groups = [by_gender(Gender::Female), by_gender(Gender::Male)];

    let n_female = (params.n_articles as f64 * params.female_share).round() as usize;
    let mut labels: Vec<Gender> = (0..params.n_articles)
        .map(|i| if i < n_female { Gender::Female } else { Gender::Male })
        .collect();
    rng.shuffle(&mut labels);

    let day0 = NaiveDate::from_ymd_opt(2002, 1, 1).expect("valid date");
    let mut articles = Vec::with_capacity(params.n_articles);
    for (i, &label) in labels.iter().enumerate() {
        let group = &groups[label.index()];
        let who = group[rng.below(group.len() as u64) as usize];
        let (title, pronoun) = match label {
            Gender::Female => ("Ms", "she"),
            Gender::Male => ("Mr", "he"),
        };
        let headline = format!(
            "{} {} {}",
            who.surname,
            pick(&mut rng, &["defends", "announces", "questions", "backs"]),
            pick(&mut rng, &["budget", "plan", "reform", "cuts", "scheme"])
        );
        let mut sentences = Vec::with_capacity(params.sentences_per_article);
        for s in 0..params.sentences_per_article {
            let len = 6 + rng.below(9) as usize;
            let mut words: Vec<String> = (0..len).map(|_| pick(&mut rng, FILLER).to_string()).collect();
            let reference = if s == 0 {
                Some(format!("{} {}", who.given_name, who.surname))
            } else {
                match rng.below(5) {
                    0 => Some(format!("{title} {}", who.surname)),
                    1 => Some(who.surname.clone()),
                    2 => Some(pronoun.to_string()),
                    _ => None,
                }
            };
            if let Some(r) = reference {
                let at = rng.below(words.len() as u64 + 1) as usize;
                words.insert(at, r);
            }
            for planted in &params.planted {
                let p = match label {
                    Gender::Female => planted.p_female,
                    Gender::Male => planted.p_male,
                };
                if rng.bernoulli(p) {
                    let at = rng.below(words.len() as u64 + 1) as usize;
                    words.insert(at, planted.term.clone());
                }
            }
            words[0] = capitalize(&words[0]);
            sentences.push(format!("{}.", words.join(" ")));
        }
        articles.push(Article {
            id: format!("synth-{:05}", i + 1),
            source: pick(&mut rng, SOURCES).to_string(),
            date: day0 + Duration::days(rng.below(2900) as i64),
            section: pick(&mut rng, SECTIONS).to_string(),
            headline,
            body: sentences.join(" "),
        });
    }
    Ok(SynthCorpus { articles, registry })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_term_parsing() {
        let p: PlantedTerm = "Husband:0.10:0.01".parse().unwrap();
        assert_eq!(p.term, "husband");
        assert_eq!((p.p_female, p.p_male), (0.10, 0.01));
        assert!("husband:0.1".parse::<PlantedTerm>().is_err());
        assert!("husband:1.5:0".parse::<PlantedTerm>().is_err());
        assert!("two words:0.1:0.1".parse::<PlantedTerm>().is_err());
    }

    #[test]
    fn exact_class_balance_and_determinism() {
        let params = SynthParams {
            n_articles: 101,
            female_share: 0.3,
            seed: 5,
            ..Default::default()
        };
        let a = generate(&params).unwrap();
        let b = generate(&params).unwrap();
        assert_eq!(a.articles, b.articles);
        let labels = mediabias_core::corpus::label_instances(&a.articles, &a.registry).unwrap();
        assert_eq!(labels.len(), 101);
        let female = labels.iter().filter(|l| l.label == Gender::Female).count();
        assert_eq!(female, 30);
    }

    #[test]
    fn planting_rate_follows_probability() {
        let params = SynthParams {
            n_articles: 400,
            planted: vec!["husband:1.0:0.0".parse().unwrap()],
            seed: 2,
            ..Default::default()
        };
        let corpus = generate(&params).unwrap();
        let labels = mediabias_core::corpus::label_instances(&corpus.articles, &corpus.registry).unwrap();
        for inst in labels {
            let n = inst.masked.texts().iter().filter(|t| **t == "husband").count();
            let expected = match inst.label {
                Gender::Female => params.sentences_per_article,
                Gender::Male => 0,
            };
            assert_eq!(n, expected);
        }
    }
}
