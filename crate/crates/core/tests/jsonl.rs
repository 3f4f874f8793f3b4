use chrono::NaiveDate;
use mediabias_core::corpus::{read_articles_jsonl, write_articles_jsonl, CorpusError};
use mediabias_core::Article;

fn article(id: &str, body: &str) -> Article {
    Article {
        id: id.into(),
        source: "Daily Ledger".into(),
        date: NaiveDate::from_ymd_opt(2009, 3, 14).unwrap(),
        section: "News".into(),
        headline: "Budget \"talks\" resume".into(),
        body: body.into(),
    }
}

#[test]
fn round_trip() {
    let articles = vec![
        article("a1", "Ms Kessane said the plan\nwas sound."),
        article("a2", "Unicode: Ó Cuív, €3.4bn"),
    ];
    let mut buf = Vec::new();
    write_articles_jsonl(&mut buf, &articles).unwrap();
    assert_eq!(String::from_utf8_lossy(&buf).lines().count(), 2);
    assert_eq!(read_articles_jsonl(buf.as_slice()).unwrap(), articles);
}

#[test]
fn missing_field_names_record() {
    let text = concat!(
        r#"{"id":"a1","source":"s","date":"2009-01-01","headline":"h","body":"b"}"#,
        "\n\n",
        r#"{"id":"a2","source":"s","date":"2009-01-01","headline":"h"}"#,
        "\n"
    );
    match read_articles_jsonl(text.as_bytes()) {
        Err(e @ CorpusError::MissingField { .. }) => {
            assert_eq!(e.to_string(), "missing field body at record 3")
        }
        other => panic!("unexpected {other:?}"),
    }
}
