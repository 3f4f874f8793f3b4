use chrono::{Duration, NaiveDate};
use proptest::prelude::*;

use mediabias_core::corpus::{DateWindow, OfficeTerm, PoliticianRecord};
use mediabias_core::features::{
    build_space, extract_terms, vectorize, ExtractOptions, FeatureKind, Term, TermBag,
};
use mediabias_core::interpret::{
    kwic, rank_features, rate_ratio, ConcordanceCorpus, ConcordanceDoc, KwicQuery, RateStat,
};
use mediabias_core::learn::{stratified_folds, undersample_indices, LinearModel};
use mediabias_core::preprocess::{
    mask_gender_signals, split_sentences, tokenize, MentionSpan, NameForm, Span, TokenKind,
    WordList,
};
use mediabias_core::{Gender, LabeledInstance, Representation, Scheme, Window};

const VOCAB: &[&str] = &[
    "the", "minister", "she", "he", "said", "her", "his", "plan", "husband", "wife", "budget",
    "mother", "cuts", "health", "and", ".", "!", ",",
];

fn text_strategy() -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(prop::sample::select(VOCAB), 0..60)
}

/// Non-overlapping spans over `n` tokens derived from a list of cut points.
fn spans_from(n: usize, cuts: &[(usize, usize)]) -> Vec<MentionSpan> {
    let mut spans = Vec::new();
    let mut next_free = 0;
    let mut starts: Vec<(usize, usize)> = cuts.iter().map(|&(s, l)| (s % n.max(1), l)).collect();
    starts.sort();
    for (s, len) in starts {
        if n == 0 || s < next_free {
            continue;
        }
        let end = (s + 1 + len % 3).min(n);
        spans.push(MentionSpan {
            span: Span::new(s, end),
            form: NameForm::Surname,
        });
        next_free = end;
    }
    spans
}

fn labels(f: usize, m: usize) -> Vec<Gender> {
    let mut v = vec![Gender::Female; f];
    v.extend(vec![Gender::Male; m]);
    v
}

fn instance(words: &[&str]) -> LabeledInstance {
    LabeledInstance {
        article_id: "a".into(),
        label: Gender::Female,
        politician_ids: vec!["p".into()],
        headline_mention: false,
        section: "news".into(),
        masked: split_sentences(&tokenize(&words.join(" "))),
    }
}

proptest! {
    #[test]
    fn masking_token_count_and_idempotence(
        words in text_strategy(),
        cuts in prop::collection::vec((0usize..100, 0usize..3), 0..6),
    ) {
        let signals = WordList::gendered_default();
        let stream = split_sentences(&tokenize(&words.join(" ")));
        let spans = spans_from(stream.len(), &cuts);
        let masked = mask_gender_signals(&stream, &spans, &signals).unwrap();

        let covered: usize = spans.iter().map(|m| m.span.len()).sum();
        let signal_outside = (0..stream.len())
            .filter(|&i| !spans.iter().any(|m| m.span.contains(i)))
            .filter(|&i| stream.tokens[i].kind == TokenKind::Word && signals.contains(&stream.tokens[i].text))
            .count();
        prop_assert_eq!(masked.len(), stream.len() - covered + spans.len() - signal_outside);
        prop_assert!(masked.tokens.iter().all(|t| !(t.is_word() && signals.contains(&t.text))));

        let again = mask_gender_signals(&masked, &[], &signals).unwrap();
        prop_assert_eq!(again, masked.clone());
        // sentences still partition the stream
        let mut pos = 0;
        for s in &masked.sentences {
            prop_assert_eq!(s.start, pos);
            prop_assert!(s.end > s.start);
            pos = s.end;
        }
        prop_assert_eq!(pos, masked.len());
    }

    #[test]
    fn folds_partition_and_stratify(f in 10usize..60, m in 10usize..60, k in 2usize..11, seed in any::<u64>()) {
        let labels = labels(f, m);
        let folds = stratified_folds(&labels, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..f + m).collect::<Vec<_>>());
        for fold in &folds {
            let females = fold.iter().filter(|&&i| labels[i] == Gender::Female).count();
            prop_assert!(females >= f / k && females <= f.div_ceil(k));
        }
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn undersampling_balances_a_subset(f in 1usize..80, m in 1usize..80, seed in any::<u64>()) {
        let labels = labels(f, m);
        let kept = undersample_indices(&labels, seed).unwrap();
        prop_assert!(kept.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(kept.iter().all(|&i| i < labels.len()));
        let females = kept.iter().filter(|&&i| labels[i] == Gender::Female).count();
        prop_assert_eq!(females, f.min(m));
        prop_assert_eq!(kept.len() - females, f.min(m));
        prop_assert_eq!(kept, undersample_indices(&labels, seed).unwrap());
    }

    #[test]
    fn years_are_additive_over_adjacent_windows(
        start in 0i64..3000, len in 1i64..2000, a in 0i64..6000, split in 1i64..6000, b in 1i64..6000,
    ) {
        let day0 = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        let record = PoliticianRecord {
            id: "p".into(),
            gender: Gender::Female,
            given_name: "Mary".into(),
            surname: "Kessane".into(),
            extra_variants: vec![],
            terms: vec![OfficeTerm {
                portfolio: "Health".into(),
                start: day0 + Duration::days(start),
                end: day0 + Duration::days(start + len),
            }],
        };
        let w0 = day0 + Duration::days(a);
        let w1 = w0 + Duration::days(split);
        let w2 = w1 + Duration::days(b);
        let whole = record.years_in_office(DateWindow::new(w0, w2).unwrap());
        let parts = record.years_in_office(DateWindow::new(w0, w1).unwrap())
            + record.years_in_office(DateWindow::new(w1, w2).unwrap());
        prop_assert!((whole - parts).abs() < 1e-9);
        prop_assert!(whole <= len as f64 / 365.25 + 1e-9);
    }

    #[test]
    fn boolean_is_indicator_of_count(docs in prop::collection::vec(text_strategy(), 1..8)) {
        let bags: Vec<TermBag> = docs
            .iter()
            .map(|d| extract_terms(&instance(d), Scheme::Unigram, &ExtractOptions::default()).unwrap())
            .collect();
        let Ok(space) = build_space(&bags, 1) else { return Ok(()); };
        for bag in &bags {
            let b = vectorize(bag, &space, Representation::Boolean);
            let c = vectorize(bag, &space, Representation::Count);
            let t = vectorize(bag, &space, Representation::Tfidf);
            for id in 0..space.len() {
                prop_assert_eq!(b.get(id), if c.get(id) > 0.0 { 1.0 } else { 0.0 });
                let expected = c.get(id) * space.idf(id);
                prop_assert!((t.get(id) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sentence_window_is_within_article_window(
        words in text_strategy(),
        cuts in prop::collection::vec((0usize..100, 0usize..3), 0..4),
    ) {
        let mut inst = instance(&words);
        let spans = spans_from(inst.masked.len(), &cuts);
        inst.masked = mask_gender_signals(&inst.masked, &spans, &WordList::gendered_default()).unwrap();
        let article = extract_terms(&inst, Scheme::Unigram, &ExtractOptions::default()).unwrap();
        let sentence = extract_terms(
            &inst,
            Scheme::Unigram,
            &ExtractOptions { window: Window::Sentence, ..Default::default() },
        ).unwrap();
        for (term, count) in &sentence {
            prop_assert!(article.get(term).copied().unwrap_or(0) >= *count);
        }
    }

    #[test]
    fn ranking_ignores_positive_scaling(
        weights in prop::collection::vec(-5i32..5, 1..20),
        factor in 0.01f64..100.0,
        k in 1usize..8,
    ) {
        let bag: TermBag = (0..weights.len())
            .map(|i| (Term::new(FeatureKind::Unigram, format!("w{i:02}")), 1))
            .collect();
        let space = build_space(&[bag], 1).unwrap();
        let model = |scale: f64| LinearModel {
            weights: weights.iter().map(|&w| w as f64 * scale).collect(),
            bias: 0.3,
            positive_class: Gender::Female,
        };
        let a = rank_features(&model(1.0), &space, k).unwrap();
        let b = rank_features(&model(factor), &space, k).unwrap();
        let names = |l: &[mediabias_core::interpret::RankedFeature]| {
            l.iter().map(|f| f.surface.clone()).collect::<Vec<_>>()
        };
        prop_assert_eq!(names(&a.female), names(&b.female));
        prop_assert_eq!(names(&a.male), names(&b.male));
        prop_assert!(a.female.len() <= k && a.male.len() <= k);
    }

    #[test]
    fn kwic_lines_reconstruct_the_text(
        docs in prop::collection::vec(text_strategy(), 1..5),
        window in 1usize..6,
        query in prop::sample::select(VOCAB),
    ) {
        let docs: Vec<ConcordanceDoc> = docs
            .iter()
            .enumerate()
            .map(|(i, words)| {
                let tokens: Vec<String> = tokenize(&words.join(" ")).texts().iter().map(|s| s.to_string()).collect();
                ConcordanceDoc {
                    article_id: format!("a{i}"),
                    in_mention_sentence: vec![false; tokens.len()],
                    tokens,
                    groups: [Gender::Female].into(),
                }
            })
            .collect();
        let corpus = ConcordanceCorpus::from_docs(docs);
        let mut q = KwicQuery::new(query);
        q.window = window;
        let lines = kwic(&corpus, &q).unwrap();
        let expected: usize = corpus.docs().iter().map(|d| d.tokens.iter().filter(|t| *t == query).count()).sum();
        prop_assert_eq!(lines.len(), expected);
        for line in &lines {
            let doc = corpus.docs().iter().find(|d| d.article_id == line.article_id).unwrap();
            let lo = line.position - line.left.len();
            let mut joined = line.left.clone();
            joined.push(line.keyword.clone());
            joined.extend(line.right.iter().cloned());
            prop_assert_eq!(&joined[..], &doc.tokens[lo..lo + joined.len()]);
            prop_assert!(line.left.len() == window || lo == 0);
            prop_assert!(line.right.len() == window || line.position + window >= doc.tokens.len());
        }
        prop_assert!(lines.windows(2).all(|w| (&w[0].article_id, w[0].position) < (&w[1].article_id, w[1].position)));
    }

    #[test]
    fn rate_ratio_reciprocity(c1 in 1usize..500, y1 in 0.1f64..100.0, c2 in 1usize..500, y2 in 0.1f64..100.0) {
        let a = RateStat::new("t", Gender::Female, c1, y1).unwrap();
        let b = RateStat::new("t", Gender::Male, c2, y2).unwrap();
        prop_assert!((a.rate * a.years - c1 as f64).abs() < 1e-9);
        let ab = rate_ratio(&a, &b).unwrap().value;
        let ba = rate_ratio(&b, &a).unwrap().value;
        prop_assert!((ab * ba - 1.0).abs() < 1e-9);
    }
}
