//! Stream-parsing of Pushshift-style newline-delimited dump files, comment
//! tree reconstruction, and corpus filtering.
//!
//! Identifier prefixes ("t3_", "t1_", ...) are stripped on ingest so post ids
//! and link ids compare directly; dump files are inconsistent about them
//! across eras. Missing scores default to 0 with a warning counter because
//! redacted scores leave the record analytically useful. Orphaned comments
//! (parent not in the dump) are kept and flagged rather than dropped.

use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("stream read failed at byte offset {offset}: {source}")]
    Read {
        offset: u64,
        source: std::io::Error,
    },
}

/// An ingested submission record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPost {
    pub id: String,
    pub subreddit: String,
    pub title: String,
    #[serde(default)]
    pub selftext: String,
    pub score: i64,
    pub created_utc: i64,
    pub author: String,
}

/// An ingested comment record. A comment is top-level iff `parent_id` names
/// the post, i.e. equals `link_id` after prefix stripping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawComment {
    pub id: String,
    pub link_id: String,
    pub parent_id: String,
    pub body: String,
    pub score: i64,
    pub created_utc: i64,
    pub author: String,
}

impl RawComment {
    pub fn is_top_level(&self) -> bool {
        self.parent_id == self.link_id
    }
}

pub const DELETED_AUTHOR: &str = "[deleted]";

/// Strip a Reddit kind prefix ("t1_".."t6_") from an identifier.
pub fn strip_id_prefix(id: &str) -> &str {
    let bytes = id.as_bytes();
    if bytes.len() > 3 && bytes[0] == b't' && bytes[1].is_ascii_digit() && bytes[2] == b'_' {
        &id[3..]
    } else {
        id
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseStats {
    pub parsed: u64,
    pub malformed: u64,
    /// Records accepted with a defaulted score.
    pub missing_score: u64,
}

#[derive(Debug)]
pub struct ParsedPosts {
    pub posts: Vec<RawPost>,
    pub stats: ParseStats,
}

#[derive(Debug)]
pub struct ParsedComments {
    pub comments: Vec<RawComment>,
    pub stats: ParseStats,
}

fn get_str(value: &Value, key: &str) -> Option<String> {
    value.get(key).and_then(Value::as_str).map(String::from)
}

/// Epoch fields appear as integers in most dump eras and as strings in some.
fn get_epoch(value: &Value, key: &str) -> Option<i64> {
    match value.get(key)? {
        Value::Number(n) => n.as_i64().or_else(|| n.as_f64().map(|f| f as i64)),
        Value::String(s) => s.parse::<i64>().ok().or_else(|| {
            s.parse::<f64>().ok().map(|f| f as i64)
        }),
        _ => None,
    }
}

fn get_score(value: &Value, stats: &mut ParseStats) -> i64 {
    match value.get("score").and_then(Value::as_i64) {
        Some(s) => s,
        None => {
            stats.missing_score += 1;
            0
        }
    }
}

fn parse_post_line(line: &str, stats: &mut ParseStats) -> Option<RawPost> {
    let value: Value = serde_json::from_str(line).ok()?;
    let id = get_str(&value, "id")?;
    let id = strip_id_prefix(&id).to_string();
    let subreddit = get_str(&value, "subreddit")?;
    if id.is_empty() || subreddit.is_empty() {
        return None;
    }
    let created_utc = get_epoch(&value, "created_utc").filter(|&t| t > 0)?;
    Some(RawPost {
        id,
        subreddit,
        title: get_str(&value, "title").unwrap_or_default(),
        selftext: get_str(&value, "selftext").unwrap_or_default(),
        score: get_score(&value, stats),
        created_utc,
        author: get_str(&value, "author").unwrap_or_else(|| DELETED_AUTHOR.to_string()),
    })
}

fn parse_comment_line(line: &str, stats: &mut ParseStats) -> Option<RawComment> {
    let value: Value = serde_json::from_str(line).ok()?;
    let id = get_str(&value, "id")?;
    let id = strip_id_prefix(&id).to_string();
    let link_id = get_str(&value, "link_id")?;
    let parent_id = get_str(&value, "parent_id")?;
    let body = get_str(&value, "body")?;
    if id.is_empty() || link_id.is_empty() || parent_id.is_empty() {
        return None;
    }
    let created_utc = get_epoch(&value, "created_utc").filter(|&t| t > 0)?;
    Some(RawComment {
        id,
        link_id: strip_id_prefix(&link_id).to_string(),
        parent_id: strip_id_prefix(&parent_id).to_string(),
        body,
        score: get_score(&value, stats),
        created_utc,
        author: get_str(&value, "author").unwrap_or_else(|| DELETED_AUTHOR.to_string()),
    })
}

fn parse_lines<R, T, F>(reader: R, mut parse: F) -> Result<(Vec<T>, ParseStats), IngestError>
where
    R: BufRead,
    F: FnMut(&str, &mut ParseStats) -> Option<T>,
{
    let mut stats = ParseStats::default();
    let mut records = Vec::new();
    let mut offset: u64 = 0;
    for line in reader.lines() {
        let line = line.map_err(|source| IngestError::Read { offset, source })?;
        offset += line.len() as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse(&line, &mut stats) {
            Some(record) => {
                stats.parsed += 1;
                records.push(record);
            }
            None => stats.malformed += 1,
        }
    }
    Ok((records, stats))
}

/// Parse a newline-delimited post dump. Malformed lines are counted and
/// skipped; only stream-read failures abort.
pub fn parse_posts<R: BufRead>(reader: R) -> Result<ParsedPosts, IngestError> {
    let (posts, stats) = parse_lines(reader, parse_post_line)?;
    Ok(ParsedPosts { posts, stats })
}

/// Parse a newline-delimited comment dump; mirror of [`parse_posts`] with
/// `link_id`, `parent_id`, and `body` required.
pub fn parse_comments<R: BufRead>(reader: R) -> Result<ParsedComments, IngestError> {
    let (comments, stats) = parse_lines(reader, parse_comment_line)?;
    Ok(ParsedComments { comments, stats })
}

/// Serialize records back to the dump schema, one object per line.
pub fn write_posts<W: std::io::Write>(mut w: W, posts: &[RawPost]) -> std::io::Result<()> {
    for post in posts {
        serde_json::to_writer(&mut w, post)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_comments<W: std::io::Write>(mut w: W, comments: &[RawComment]) -> std::io::Result<()> {
    for comment in comments {
        serde_json::to_writer(&mut w, comment)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// One comment in a reconstructed thread forest.
#[derive(Debug, Clone)]
pub struct ThreadNode {
    pub comment: RawComment,
    pub children: Vec<usize>,
    /// Parent comment was absent from the dump (or part of a parent cycle);
    /// the node is attached at the top of the forest but is not a top-level
    /// reply to the post.
    pub orphan: bool,
}

/// A post with its reconstructed comment forest.
#[derive(Debug, Clone)]
pub struct Thread {
    pub post: RawPost,
    nodes: Vec<ThreadNode>,
    roots: Vec<usize>,
}

impl Thread {
    pub fn comment_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[ThreadNode] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &ThreadNode {
        &self.nodes[index]
    }

    pub fn root_indices(&self) -> &[usize] {
        &self.roots
    }

    /// Comments whose parent is the post itself.
    pub fn top_level(&self) -> impl Iterator<Item = &ThreadNode> {
        self.roots
            .iter()
            .map(|&i| &self.nodes[i])
            .filter(|n| !n.orphan)
    }
}

#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize)]
pub struct ThreadBuildStats {
    /// Comments whose link_id matched no post.
    pub excluded: u64,
    /// Comment ids seen more than once (first occurrence kept).
    pub duplicates: u64,
    /// Comments attached at top level because their parent was absent.
    pub orphans: u64,
    /// Parent-pointer cycles broken (each cycle counted once).
    pub cycles: u64,
}

#[derive(Debug)]
pub struct ThreadBuild {
    pub threads: Vec<Thread>,
    pub stats: ThreadBuildStats,
}

/// Join comments onto posts and resolve parent links into a forest. Comments
/// with an unmatched link_id are excluded; duplicates keep the first
/// occurrence; orphans and cycle members become flagged top-of-forest roots.
pub fn build_threads(posts: Vec<RawPost>, comments: Vec<RawComment>) -> ThreadBuild {
    let mut stats = ThreadBuildStats::default();
    let post_index: HashMap<String, usize> = posts
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id.clone(), i))
        .collect();

    let mut per_post: Vec<Vec<RawComment>> = vec![Vec::new(); posts.len()];
    let mut seen_ids: std::collections::HashSet<String> = std::collections::HashSet::new();
    for comment in comments {
        if !seen_ids.insert(comment.id.clone()) {
            stats.duplicates += 1;
            continue;
        }
        match post_index.get(&comment.link_id) {
            Some(&i) => per_post[i].push(comment),
            None => stats.excluded += 1,
        }
    }

    let threads = posts
        .into_iter()
        .zip(per_post)
        .map(|(post, comments)| build_forest(post, comments, &mut stats))
        .collect();
    ThreadBuild { threads, stats }
}

fn build_forest(post: RawPost, comments: Vec<RawComment>, stats: &mut ThreadBuildStats) -> Thread {
    let id_to_idx: HashMap<String, usize> = comments
        .iter()
        .enumerate()
        .map(|(i, c)| (c.id.clone(), i))
        .collect();

    let mut nodes: Vec<ThreadNode> = comments
        .into_iter()
        .map(|comment| ThreadNode {
            comment,
            children: Vec::new(),
            orphan: false,
        })
        .collect();

    let mut roots = Vec::new();
    // Link children; roots are comments replying to the post directly.
    for i in 0..nodes.len() {
        let parent_id = nodes[i].comment.parent_id.clone();
        if parent_id == post.id {
            roots.push(i);
        } else if let Some(&p) = id_to_idx.get(&parent_id) {
            nodes[p].children.push(i);
        } else {
            nodes[i].orphan = true;
            roots.push(i);
        }
    }

    // Nodes not reachable from any root sit on (or hang off) parent cycles.
    // Break each cycle once by turning its members into orphan roots;
    // descendants of the cycle stay ordinary children.
    let mut reachable = vec![false; nodes.len()];
    let mut stack: Vec<usize> = roots.clone();
    while let Some(i) = stack.pop() {
        if std::mem::replace(&mut reachable[i], true) {
            continue;
        }
        stack.extend(nodes[i].children.iter().copied());
    }
    for start in 0..nodes.len() {
        if reachable[start] {
            continue;
        }
        // An unreachable node's parent chain stays unreachable, so it must
        // revisit itself: walk until the first repeat to find the cycle.
        let mut path = Vec::new();
        let mut on_path = vec![false; nodes.len()];
        let mut cur = start;
        while !on_path[cur] {
            on_path[cur] = true;
            path.push(cur);
            cur = id_to_idx[&nodes[cur].comment.parent_id];
        }
        let entry = path.iter().position(|&i| i == cur).expect("repeat is on path");
        let cycle: Vec<usize> = path[entry..].to_vec();
        stats.cycles += 1;
        for &member in &cycle {
            nodes[member].orphan = true;
            roots.push(member);
            let parent = id_to_idx[&nodes[member].comment.parent_id];
            nodes[parent].children.retain(|&c| c != member);
        }
        let mut stack = cycle;
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut reachable[i], true) {
                continue;
            }
            stack.extend(nodes[i].children.iter().copied());
        }
    }

    stats.orphans += nodes.iter().filter(|n| n.orphan).count() as u64;
    Thread { post, nodes, roots }
}

/// Corpus filter: inclusive date bounds on post creation, a minimum comment
/// count per thread, and an optional subreddit allow-list.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CorpusFilter {
    pub date_from: Option<i64>,
    pub date_to: Option<i64>,
    pub min_comments: usize,
    pub subreddits: Option<std::collections::BTreeSet<String>>,
}

impl CorpusFilter {
    pub fn matches(&self, thread: &Thread) -> bool {
        let t = thread.post.created_utc;
        if self.date_from.is_some_and(|from| t < from) {
            return false;
        }
        if self.date_to.is_some_and(|to| t > to) {
            return false;
        }
        if thread.comment_count() < self.min_comments {
            return false;
        }
        if let Some(allowed) = &self.subreddits {
            if !allowed.contains(&thread.post.subreddit) {
                return false;
            }
        }
        true
    }
}

/// Retain threads matching the filter, preserving order.
pub fn filter_corpus(threads: Vec<Thread>, filter: &CorpusFilter) -> Vec<Thread> {
    threads.into_iter().filter(|t| filter.matches(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn post(id: &str, created: i64) -> RawPost {
        RawPost {
            id: id.into(),
            subreddit: "AmItheAsshole".into(),
            title: "t".into(),
            selftext: String::new(),
            score: 1,
            created_utc: created,
            author: "u".into(),
        }
    }

    fn comment(id: &str, link: &str, parent: &str) -> RawComment {
        RawComment {
            id: id.into(),
            link_id: link.into(),
            parent_id: parent.into(),
            body: "b".into(),
            score: 1,
            created_utc: 10,
            author: "u".into(),
        }
    }

    #[test]
    fn parse_posts_field_copy() {
        let line = r#"{"id":"p1","subreddit":"AmItheAsshole","title":"AITA...","score":12,"created_utc":1514764800,"author":"u1","selftext":"..."}"#;
        let parsed = parse_posts(Cursor::new(line)).unwrap();
        assert_eq!(parsed.stats.parsed, 1);
        assert_eq!(parsed.stats.malformed, 0);
        let p = &parsed.posts[0];
        assert_eq!(p.id, "p1");
        assert_eq!(p.subreddit, "AmItheAsshole");
        assert_eq!(p.score, 12);
        assert_eq!(p.created_utc, 1514764800);
    }

    #[test]
    fn parse_posts_three_line_fixture() {
        // Well-formed line, empty line, line with score absent.
        let data = concat!(
            r#"{"id":"p1","subreddit":"s","title":"a","score":3,"created_utc":5,"author":"u"}"#,
            "\n\n",
            r#"{"id":"p2","subreddit":"s","title":"b","created_utc":6,"author":"u"}"#,
            "\n",
        );
        let parsed = parse_posts(Cursor::new(data)).unwrap();
        assert_eq!(parsed.stats.parsed, 2);
        assert_eq!(parsed.stats.malformed, 0);
        assert_eq!(parsed.stats.missing_score, 1);
        assert_eq!(parsed.posts[1].score, 0);
    }

    #[test]
    fn parse_posts_missing_id_is_malformed() {
        let data = r#"{"subreddit":"s","title":"a","score":3,"created_utc":5,"author":"u"}"#;
        let parsed = parse_posts(Cursor::new(data)).unwrap();
        assert_eq!(parsed.stats.parsed, 0);
        assert_eq!(parsed.stats.malformed, 1);
    }

    #[test]
    fn parse_comments_prefix_and_top_level() {
        let data = concat!(
            r#"{"id":"c1","link_id":"t3_p1","parent_id":"t3_p1","body":"NTA ...","score":5,"created_utc":1514764900,"author":"u2"}"#,
            "\n",
            r#"{"id":"c2","link_id":"t3_p1","parent_id":"t1_c1","body":"reply","score":1,"created_utc":1514765000,"author":"u3"}"#,
            "\n",
            r#"{"id":"c3","link_id":"t3_p1","parent_id":"t3_p1","score":1,"created_utc":1,"author":"u"}"#,
            "\n",
        );
        let parsed = parse_comments(Cursor::new(data)).unwrap();
        assert_eq!(parsed.stats.parsed, 2);
        assert_eq!(parsed.stats.malformed, 1); // missing body
        assert_eq!(parsed.comments[0].link_id, "p1");
        assert!(parsed.comments[0].is_top_level());
        assert!(!parsed.comments[1].is_top_level());
    }

    #[test]
    fn roundtrip_parse_serialize_parse() {
        let data = concat!(
            r#"{"id":"c1","link_id":"t3_p1","parent_id":"t3_p1","body":"NTA","score":5,"created_utc":9,"author":"a"}"#,
            "\n",
        );
        let first = parse_comments(Cursor::new(data)).unwrap().comments;
        let mut buf = Vec::new();
        write_comments(&mut buf, &first).unwrap();
        let second = parse_comments(Cursor::new(buf)).unwrap().comments;
        assert_eq!(first, second);

        let data = concat!(
            r#"{"id":"t3_p1","subreddit":"s","title":"T \"q\" —","selftext":"body","score":-4,"created_utc":7,"author":"a"}"#,
            "\n",
        );
        let first = parse_posts(Cursor::new(data)).unwrap().posts;
        let mut buf = Vec::new();
        write_posts(&mut buf, &first).unwrap();
        let second = parse_posts(Cursor::new(buf)).unwrap().posts;
        assert_eq!(first, second);
    }

    #[test]
    fn build_threads_direct_linkage() {
        let posts = vec![post("p1", 1)];
        let comments = vec![
            comment("c1", "p1", "p1"),
            comment("c2", "p1", "c1"),
            comment("c3", "p1", "p1"),
        ];
        let built = build_threads(posts, comments);
        let thread = &built.threads[0];
        assert_eq!(thread.comment_count(), 3);
        assert_eq!(thread.top_level().count(), 2);
        let c1 = thread
            .nodes()
            .iter()
            .find(|n| n.comment.id == "c1")
            .unwrap();
        assert_eq!(c1.children.len(), 1);
        assert_eq!(thread.node(c1.children[0]).comment.id, "c2");
        assert_eq!(built.stats, ThreadBuildStats::default());
    }

    #[test]
    fn build_threads_excludes_unmatched_link() {
        let built = build_threads(vec![post("p1", 1)], vec![comment("c1", "pX", "pX")]);
        assert_eq!(built.stats.excluded, 1);
        assert_eq!(built.threads[0].comment_count(), 0);
    }

    #[test]
    fn build_threads_duplicates_keep_first() {
        let mut dup = comment("c1", "p1", "p1");
        dup.body = "second".into();
        let built = build_threads(vec![post("p1", 1)], vec![comment("c1", "p1", "p1"), dup]);
        assert_eq!(built.stats.duplicates, 1);
        assert_eq!(built.threads[0].node(0).comment.body, "b");
    }

    #[test]
    fn build_threads_breaks_cycles() {
        let posts = vec![post("p1", 1)];
        let comments = vec![comment("c2", "p1", "c3"), comment("c3", "p1", "c2")];
        let built = build_threads(posts, comments);
        assert_eq!(built.stats.cycles, 1);
        let thread = &built.threads[0];
        assert_eq!(thread.root_indices().len(), 2);
        assert!(thread.nodes().iter().all(|n| n.orphan));
        assert_eq!(thread.top_level().count(), 0);
    }

    #[test]
    fn build_threads_cycle_with_tail() {
        // c4 replies to c2, which sits on a c2<->c3 cycle. Breaking the cycle
        // keeps c4 an ordinary child of c2.
        let posts = vec![post("p1", 1)];
        let comments = vec![
            comment("c2", "p1", "c3"),
            comment("c3", "p1", "c2"),
            comment("c4", "p1", "c2"),
        ];
        let built = build_threads(posts, comments);
        assert_eq!(built.stats.cycles, 1);
        assert_eq!(built.stats.orphans, 2);
        let thread = &built.threads[0];
        assert_eq!(thread.comment_count(), 3);
        let c2 = thread.nodes().iter().find(|n| n.comment.id == "c2").unwrap();
        assert!(c2.orphan);
        assert_eq!(c2.children.len(), 1);
        assert_eq!(thread.node(c2.children[0]).comment.id, "c4");
        let c4 = thread.nodes().iter().find(|n| n.comment.id == "c4").unwrap();
        assert!(!c4.orphan);
    }

    #[test]
    fn build_threads_orphan_attached_flagged() {
        let built = build_threads(vec![post("p1", 1)], vec![comment("c9", "p1", "missing")]);
        assert_eq!(built.stats.orphans, 1);
        let thread = &built.threads[0];
        assert_eq!(thread.comment_count(), 1);
        assert!(thread.node(0).orphan);
    }

    #[test]
    fn build_threads_partitions_comments() {
        let posts = vec![post("p1", 1), post("p2", 2)];
        let comments = vec![
            comment("c1", "p1", "p1"),
            comment("c2", "p2", "p2"),
            comment("c2", "p2", "p2"), // duplicate
            comment("c4", "pX", "pX"), // excluded
        ];
        let n_input = comments.len() as u64;
        let built = build_threads(posts, comments);
        let in_threads: u64 = built
            .threads
            .iter()
            .map(|t| t.comment_count() as u64)
            .sum();
        assert_eq!(
            in_threads + built.stats.excluded + built.stats.duplicates,
            n_input
        );
    }

    #[test]
    fn filter_min_comments_boundary() {
        let filter = CorpusFilter {
            min_comments: 50,
            ..Default::default()
        };
        let comments_49: Vec<RawComment> = (0..49)
            .map(|i| comment(&format!("c{i}"), "p1", "p1"))
            .collect();
        let comments_50: Vec<RawComment> = (0..50)
            .map(|i| comment(&format!("d{i}"), "p2", "p2"))
            .collect();
        let built = build_threads(
            vec![post("p1", 1), post("p2", 1)],
            comments_49.into_iter().chain(comments_50).collect(),
        );
        let kept = filter_corpus(built.threads, &filter);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].post.id, "p2");
    }

    #[test]
    fn filter_vacuous_is_identity() {
        let built = build_threads(vec![post("p1", 1)], vec![comment("c1", "p1", "p1")]);
        let n = built.threads.len();
        let kept = filter_corpus(built.threads, &CorpusFilter::default());
        assert_eq!(kept.len(), n);
    }

    #[test]
    fn filter_dates_inclusive() {
        let built = build_threads(vec![post("p1", 100), post("p2", 200)], vec![]);
        let filter = CorpusFilter {
            date_from: Some(100),
            date_to: Some(150),
            ..Default::default()
        };
        let kept = filter_corpus(built.threads, &filter);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].post.id, "p1");
    }

    #[test]
    fn filter_output_is_subsequence() {
        let built = build_threads(
            vec![post("a", 1), post("b", 2), post("c", 3)],
            vec![comment("c1", "b", "b")],
        );
        let filter = CorpusFilter {
            min_comments: 1,
            ..Default::default()
        };
        let kept = filter_corpus(built.threads, &filter);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].post.id, "b");
    }
}
