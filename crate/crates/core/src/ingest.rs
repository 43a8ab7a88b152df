//! Reading the two-file dump (posts + block versions) and selecting the code
//! blocks whose post tags match the target language.
//!
//! Both inputs are JSON Lines. Unknown fields are ignored so that slices
//! exported from richer schemas load unchanged.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::io::BufRead;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate post_id {post_id}")]
    DuplicatePost { line: usize, post_id: i64 },
    #[error("line {line}: {message}")]
    Invariant { line: usize, message: String },
    #[error("answer {post_id} references missing question {parent_id}")]
    UnresolvedParent { post_id: i64, parent_id: i64 },
    #[error("line {line}: read failed: {source}")]
    Read {
        line: usize,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostType {
    Question,
    Answer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostRecord {
    pub post_id: i64,
    pub post_type: PostType,
    #[serde(default)]
    pub parent_question_id: Option<i64>,
    #[serde(default)]
    pub tags: Vec<String>,
}

impl PostRecord {
    fn check(&self) -> Result<(), String> {
        match (self.post_type, self.parent_question_id) {
            (PostType::Answer, None) => Err(format!(
                "answer {} has no parent_question_id",
                self.post_id
            )),
            (PostType::Question, Some(_)) => Err(format!(
                "question {} must not carry parent_question_id",
                self.post_id
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockType {
    Text,
    Code,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockVersionRecord {
    pub block_id: i64,
    pub post_id: i64,
    pub local_id: i64,
    pub version_ordinal: i64,
    pub block_type: BlockType,
    pub content: String,
    pub created_at: DateTime<Utc>,
}

/// Entity counts after each filtering stage, in pipeline order. Each stage
/// only ever narrows the previous one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub total_code_blocks: u64,
    pub tag_matched: u64,
    pub ast_parseable: u64,
    pub prior_version_exists: u64,
    pub prior_version_parse_error: u64,
}

impl FilterCounts {
    pub fn is_monotone(&self) -> bool {
        self.total_code_blocks >= self.tag_matched
            && self.tag_matched >= self.ast_parseable
            && self.ast_parseable >= self.prior_version_exists
            && self.prior_version_exists >= self.prior_version_parse_error
    }

    /// Table rendering in the layout of the filtering summary.
    pub fn to_table(&self, pattern: &str) -> String {
        let rows = [
            ("All code snippets".to_string(), self.total_code_blocks),
            (format!("Block matched {pattern} tag"), self.tag_matched),
            ("Content AST parseable".to_string(), self.ast_parseable),
            ("Prior version exists".to_string(), self.prior_version_exists),
            (
                "Prior version AST error".to_string(),
                self.prior_version_parse_error,
            ),
        ];
        let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(13);
        let mut out = format!("| {:<width$} | Entity Block Count |\n", "Filter Metric");
        out.push_str(&format!("|{}|{}|\n", "-".repeat(width + 2), "-".repeat(20)));
        for (label, count) in rows {
            out.push_str(&format!("| {label:<width$} | {count:>18} |\n"));
        }
        out
    }
}

impl std::ops::AddAssign for FilterCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.total_code_blocks += rhs.total_code_blocks;
        self.tag_matched += rhs.tag_matched;
        self.ast_parseable += rhs.ast_parseable;
        self.prior_version_exists += rhs.prior_version_exists;
        self.prior_version_parse_error += rhs.prior_version_parse_error;
    }
}

pub type PostMap = BTreeMap<i64, PostRecord>;

/// Iterates the non-empty lines of a JSONL stream, yielding 1-based line
/// numbers alongside each line.
fn jsonl_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String), IngestError>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(idx, line)| match line {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(Ok((idx + 1, l))),
            Err(source) => Some(Err(IngestError::Read {
                line: idx + 1,
                source,
            })),
        })
}

pub fn load_posts<R: BufRead>(reader: R) -> Result<PostMap, IngestError> {
    let mut posts = PostMap::new();
    for item in jsonl_lines(reader) {
        let (line, text) = item?;
        let mut post: PostRecord = serde_json::from_str(&text).map_err(|e| IngestError::Malformed {
            line,
            message: e.to_string(),
        })?;
        post.check()
            .map_err(|message| IngestError::Invariant { line, message })?;
        for tag in &mut post.tags {
            *tag = tag.to_lowercase();
        }
        match posts.entry(post.post_id) {
            Entry::Occupied(_) => {
                return Err(IngestError::DuplicatePost {
                    line,
                    post_id: post.post_id,
                })
            }
            Entry::Vacant(slot) => {
                slot.insert(post);
            }
        }
    }
    Ok(posts)
}

/// Writes posts back out in the input schema, ordered by post_id.
pub fn write_posts<W: std::io::Write>(posts: &PostMap, mut out: W) -> std::io::Result<()> {
    for post in posts.values() {
        serde_json::to_writer(&mut out, post)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Streams block version records, failing on the first malformed line.
pub fn read_blocks<R: BufRead>(
    reader: R,
) -> impl Iterator<Item = Result<BlockVersionRecord, IngestError>> {
    jsonl_lines(reader).map(|item| {
        let (line, text) = item?;
        let block: BlockVersionRecord =
            serde_json::from_str(&text).map_err(|e| IngestError::Malformed {
                line,
                message: e.to_string(),
            })?;
        if block.version_ordinal < 1 {
            return Err(IngestError::Invariant {
                line,
                message: format!("version_ordinal {} < 1", block.version_ordinal),
            });
        }
        Ok(block)
    })
}

/// Questions carry their own tags; answers inherit the referenced question's.
pub fn resolve_tags<'a>(post: &'a PostRecord, posts: &'a PostMap) -> Result<&'a [String], IngestError> {
    match (post.post_type, post.parent_question_id) {
        (PostType::Answer, Some(parent_id)) => posts
            .get(&parent_id)
            .map(|parent| parent.tags.as_slice())
            .ok_or(IngestError::UnresolvedParent {
                post_id: post.post_id,
                parent_id,
            }),
        _ => Ok(&post.tags),
    }
}

/// True iff any tag contains `pattern` as a case-insensitive substring.
pub fn tag_matches<S: AsRef<str>>(tags: &[S], pattern: &str) -> bool {
    let pattern = pattern.to_lowercase();
    tags.iter()
        .any(|t| t.as_ref().to_lowercase().contains(&pattern))
}

/// Counters kept while selecting candidates that are not part of
/// [`FilterCounts`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionDiagnostics {
    /// Code blocks whose post, or whose answer's parent question, is absent.
    pub unresolved_parent: u64,
}

/// Filters a block stream down to code blocks whose resolved tags match
/// `pattern`, updating the first two stages of `counts` as it goes.
pub struct CandidateBlocks<'a, I> {
    posts: &'a PostMap,
    blocks: I,
    pattern: String,
    pub counts: FilterCounts,
    pub diagnostics: SelectionDiagnostics,
}

pub fn select_candidate_blocks<'a, I>(posts: &'a PostMap, blocks: I, pattern: &str) -> CandidateBlocks<'a, I>
where
    I: Iterator<Item = Result<BlockVersionRecord, IngestError>>,
{
    CandidateBlocks {
        posts,
        blocks,
        pattern: pattern.to_lowercase(),
        counts: FilterCounts::default(),
        diagnostics: SelectionDiagnostics::default(),
    }
}

impl<I> Iterator for CandidateBlocks<'_, I>
where
    I: Iterator<Item = Result<BlockVersionRecord, IngestError>>,
{
    type Item = Result<(BlockVersionRecord, Vec<String>), IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let block = match self.blocks.next()? {
                Ok(b) => b,
                Err(e) => return Some(Err(e)),
            };
            if block.block_type != BlockType::Code {
                continue;
            }
            self.counts.total_code_blocks += 1;
            let tags = match self
                .posts
                .get(&block.post_id)
                .map(|post| resolve_tags(post, self.posts))
            {
                Some(Ok(tags)) => tags,
                Some(Err(_)) | None => {
                    self.diagnostics.unresolved_parent += 1;
                    continue;
                }
            };
            if tag_matches(tags, &self.pattern) {
                self.counts.tag_matched += 1;
                return Some(Ok((block, tags.to_vec())));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn question(id: i64, tags: &[&str]) -> String {
        serde_json::json!({
            "post_id": id, "post_type": "question", "parent_question_id": null,
            "tags": tags,
        })
        .to_string()
    }

    fn answer(id: i64, parent: i64) -> String {
        serde_json::json!({
            "post_id": id, "post_type": "answer", "parent_question_id": parent, "tags": [],
        })
        .to_string()
    }

    fn block(post_id: i64, local_id: i64, ordinal: i64, kind: &str) -> String {
        serde_json::json!({
            "block_id": post_id * 1000 + local_id * 10 + ordinal,
            "post_id": post_id, "local_id": local_id, "version_ordinal": ordinal,
            "block_type": kind, "content": "x = 1", "created_at": "2019-01-01T00:00:00Z",
            "extra": "ignored",
        })
        .to_string()
    }

    #[test]
    fn empty_stream_loads_empty_map() {
        assert!(load_posts("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn single_question_loads() {
        let posts = load_posts(question(1, &["python"]).as_bytes()).unwrap();
        assert_eq!(posts.len(), 1);
        assert_eq!(posts[&1].tags, vec!["python"]);
    }

    #[test]
    fn answer_without_parent_is_rejected() {
        let line = r#"{"post_id": 2, "post_type": "answer", "parent_question_id": null, "tags": []}"#;
        let err = load_posts(line.as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::Invariant { line: 1, .. }), "{err}");
    }

    #[test]
    fn duplicate_post_and_malformed_lines_name_the_line() {
        let input = format!("{}\n\n{}\n", question(1, &[]), question(1, &[]));
        match load_posts(input.as_bytes()).unwrap_err() {
            IngestError::DuplicatePost { line, post_id } => assert_eq!((line, post_id), (3, 1)),
            other => panic!("{other}"),
        }
        let input = format!("{}\n{{not json\n", question(1, &[]));
        assert!(matches!(
            load_posts(input.as_bytes()).unwrap_err(),
            IngestError::Malformed { line: 2, .. }
        ));
    }

    #[test]
    fn tags_resolve_through_parent_question() {
        let input = format!(
            "{}\n{}\n{}\n",
            question(1, &["python", "pandas"]),
            question(2, &["python-3.x"]),
            answer(3, 2)
        );
        let posts = load_posts(input.as_bytes()).unwrap();
        assert_eq!(resolve_tags(&posts[&1], &posts).unwrap(), ["python", "pandas"]);
        assert_eq!(resolve_tags(&posts[&3], &posts).unwrap(), ["python-3.x"]);

        let orphan = PostRecord {
            post_id: 9,
            post_type: PostType::Answer,
            parent_question_id: Some(77),
            tags: vec![],
        };
        assert!(matches!(
            resolve_tags(&orphan, &posts),
            Err(IngestError::UnresolvedParent { parent_id: 77, .. })
        ));
    }

    #[test]
    fn tag_matching_is_substring() {
        assert!(tag_matches(&["python"], "python"));
        assert!(!tag_matches(&["java"], "python"));
        assert!(tag_matches(&["python-3.x"], "python"));
        assert!(tag_matches(&["ipython"], "Python"));
        assert!(!tag_matches::<&str>(&[], "python"));
    }

    #[test]
    fn selection_counts_code_blocks_only() {
        let posts = load_posts(question(1, &["python"]).as_bytes()).unwrap();
        let blocks = [
            block(1, 1, 1, "code"),
            block(1, 2, 1, "code"),
            block(1, 3, 1, "code"),
            block(1, 4, 1, "text"),
        ]
        .join("\n");
        let mut sel = select_candidate_blocks(&posts, read_blocks(blocks.as_bytes()), "python");
        let yielded: Vec<_> = sel.by_ref().collect::<Result<_, _>>().unwrap();
        assert_eq!(yielded.len(), 3);
        assert_eq!(sel.counts.total_code_blocks, 3);
        assert_eq!(sel.counts.tag_matched, 3);
    }

    #[test]
    fn selection_skips_unmatched_and_orphans() {
        let input = format!(
            "{}\n{}\n{}\n",
            question(1, &["json"]),
            question(2, &["python"]),
            answer(3, 99)
        );
        let posts = load_posts(input.as_bytes()).unwrap();
        let blocks = [
            block(1, 1, 1, "code"),
            block(2, 1, 1, "text"),
            block(3, 1, 1, "code"),
            block(4, 1, 1, "code"),
        ]
        .join("\n");
        let mut sel = select_candidate_blocks(&posts, read_blocks(blocks.as_bytes()), "python");
        assert_eq!(sel.by_ref().count(), 0);
        assert_eq!(sel.counts.total_code_blocks, 3);
        assert_eq!(sel.counts.tag_matched, 0);
        assert_eq!(sel.diagnostics.unresolved_parent, 2);
    }

    #[test]
    fn bad_block_line_propagates() {
        let posts = PostMap::new();
        let blocks = format!("{}\n{{\"block_id\": 1}}\n", block(1, 1, 1, "code"));
        let results: Vec<_> =
            select_candidate_blocks(&posts, read_blocks(blocks.as_bytes()), "python").collect();
        assert!(matches!(
            results.last(),
            Some(Err(IngestError::Malformed { line: 2, .. }))
        ));
    }
}
