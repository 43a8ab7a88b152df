//! Random sampling of pairs for manual review, and scoring of the reviewed
//! sample.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::StatsError;
use crate::pairing::ErrorFixPair;

/// Uniform sample without replacement, returned in population order.
pub fn sample_for_audit(pairs: &[ErrorFixPair], count: usize, seed: u64) -> Result<Vec<&ErrorFixPair>, StatsError> {
    if count > pairs.len() {
        return Err(StatsError::Input(format!(
            "cannot sample {count} from a population of {}",
            pairs.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, pairs.len(), count).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| &pairs[i]).collect())
}

fn side_by_side(left: &str, right: &str) -> String {
    let left_lines: Vec<&str> = left.split('\n').collect();
    let right_lines: Vec<&str> = right.split('\n').collect();
    let width = left_lines
        .iter()
        .map(|l| l.chars().count())
        .max()
        .unwrap_or(0)
        .max("failing".len());
    let mut out = format!("{:<width$} | fixed\n{}-+-{}\n", "failing", "-".repeat(width), "-".repeat(width));
    for i in 0..left_lines.len().max(right_lines.len()) {
        let l = left_lines.get(i).copied().unwrap_or("");
        let r = right_lines.get(i).copied().unwrap_or("");
        let pad = width - l.chars().count();
        let _ = writeln!(out, "{l}{} | {r}", " ".repeat(pad));
    }
    out
}

/// Markdown review sheet: one section per pair, failing and fixed versions
/// side by side.
pub fn render_audit_markdown(sample: &[&ErrorFixPair], seed: u64) -> String {
    let mut out = format!("# Audit sample\n\n{} pairs, seed {seed}\n", sample.len());
    for (i, pair) in sample.iter().enumerate() {
        let _ = write!(
            out,
            "\n## {}. {}\n\npost {} block {}: version {} -> {}; {}\n\n```text\n{}```\n",
            i + 1,
            pair.pair_id,
            pair.post_id,
            pair.local_id,
            pair.failing_version_ordinal,
            pair.fixed_version_ordinal,
            pair.parse_error.label(),
            side_by_side(&pair.failing_content, &pair.fixed_content),
        );
    }
    out
}

/// Verdict sheet with an empty `verdict` column for reviewers to fill in
/// with `ok` or `erroneous`.
pub fn write_verdict_sheet<W: std::io::Write>(sample: &[&ErrorFixPair], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pair_id", "parse_error", "verdict"])?;
    for pair in sample {
        w.write_record([pair.pair_id.as_str(), &pair.parse_error.label(), ""])?;
    }
    w.flush()?;
    Ok(())
}

/// Counts (erroneous, reviewed) in a filled-in verdict sheet.
pub fn score_verdicts<R: std::io::Read>(input: R) -> Result<(u64, u64), StatsError> {
    #[derive(serde::Deserialize)]
    struct Row {
        pair_id: String,
        verdict: String,
    }
    let mut erroneous = 0;
    let mut reviewed = 0;
    for (i, row) in csv::Reader::from_reader(input).deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| StatsError::Input(format!("row {}: {e}", i + 1)))?;
        match row.verdict.trim().to_ascii_lowercase().as_str() {
            "ok" => reviewed += 1,
            "erroneous" => {
                reviewed += 1;
                erroneous += 1;
            }
            other => {
                return Err(StatsError::Input(format!(
                    "pair {}: verdict {other:?} is neither ok nor erroneous",
                    row.pair_id
                )))
            }
        }
    }
    Ok((erroneous, reviewed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{ParseError, ParseErrorKind};

    fn population(n: usize) -> Vec<ErrorFixPair> {
        (0..n as i64)
            .map(|i| ErrorFixPair {
                pair_id: format!("{i}-1-1-2"),
                post_id: i,
                local_id: 1,
                tags: vec!["python".into()],
                failing_version_ordinal: 1,
                fixed_version_ordinal: 2,
                failing_content: "print 'hi'".into(),
                fixed_content: "print('hi')\nx = 1".into(),
                parse_error: ParseError::new(ParseErrorKind::SyntaxError, "invalid syntax", 1, 10),
                runtime_outcome: None,
            })
            .collect()
    }

    #[test]
    fn full_sample_is_the_population() {
        let pop = population(100);
        let sample = sample_for_audit(&pop, 100, 3).unwrap();
        assert_eq!(sample.len(), 100);
        assert!(sample.iter().zip(&pop).all(|(a, b)| a.pair_id == b.pair_id));
    }

    #[test]
    fn sampling_is_seeded() {
        let pop = population(1000);
        let a: Vec<_> = sample_for_audit(&pop, 100, 7).unwrap().iter().map(|p| p.post_id).collect();
        let b: Vec<_> = sample_for_audit(&pop, 100, 7).unwrap().iter().map(|p| p.post_id).collect();
        let c: Vec<_> = sample_for_audit(&pop, 100, 8).unwrap().iter().map(|p| p.post_id).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let mut dedup = a.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 100);
    }

    #[test]
    fn oversampling_is_an_error() {
        assert!(matches!(
            sample_for_audit(&population(50), 100, 1),
            Err(StatsError::Input(_))
        ));
    }

    #[test]
    fn review_sheet_shows_both_versions() {
        let pop = population(1);
        let md = render_audit_markdown(&sample_for_audit(&pop, 1, 0).unwrap(), 0);
        assert!(md.contains("print 'hi' | print('hi')\n"), "{md}");
        assert!(md.contains("           | x = 1\n"), "{md}");
    }

    #[test]
    fn verdicts_are_scored() {
        let sheet = "pair_id,parse_error,verdict\na,x,ok\nb,x,erroneous\nc,x,OK\n";
        assert_eq!(score_verdicts(sheet.as_bytes()).unwrap(), (1, 3));
        let blank = "pair_id,parse_error,verdict\na,x,\n";
        assert!(score_verdicts(blank.as_bytes()).is_err());
    }
}
