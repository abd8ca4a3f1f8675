//! File formats and report plumbing shared by the subcommands: corpus
//! persistence, the labeled-corpus NDJSON, atomic writes, and the run
//! manifest embedded in every output directory.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ingest::{
    build_threads, parse_comments, parse_posts, RawComment, Thread,
};
use crate::labels::{JudgementLabel, LabeledComment, Valence};

use super::CliError;

pub const FORMAT_VERSION: u32 = 1;

/// Write via a temp file in the same directory and rename into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Every analysis directory carries a manifest echoing the configuration,
/// the seed, and the decision metadata other modules flag.
pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    config: serde_json::Value,
    extras: serde_json::Value,
) -> Result<(), CliError> {
    let manifest = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "command": command,
        "config": config,
        "metadata": extras,
    });
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    atomic_write(&out_dir.join("run_manifest.json"), &bytes)
}

pub fn corpus_posts_path(dir: &Path) -> PathBuf {
    dir.join("posts.ndjson")
}

pub fn corpus_comments_path(dir: &Path) -> PathBuf {
    dir.join("comments.ndjson")
}

/// Load a persisted corpus directory back into threads.
pub fn load_corpus_threads(dir: &Path) -> Result<Vec<Thread>, CliError> {
    let posts_file = fs::File::open(corpus_posts_path(dir))?;
    let comments_file = fs::File::open(corpus_comments_path(dir))?;
    let posts = parse_posts(BufReader::new(posts_file))?;
    let comments = parse_comments(BufReader::new(comments_file))?;
    Ok(build_threads(posts.posts, comments.comments).threads)
}

/// One line of the labeled-corpus NDJSON.
#[derive(Debug, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub post_id: String,
    pub comment_id: String,
    pub label: JudgementLabel,
    pub valence: Valence,
    pub body: String,
}

pub fn save_labeled(path: &Path, labeled: &[LabeledComment]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    for lc in labeled {
        let record = LabeledRecord {
            post_id: lc.post_id.clone(),
            comment_id: lc.comment.id.clone(),
            label: lc.label,
            valence: lc.valence,
            body: lc.comment.body.clone(),
        };
        serde_json::to_writer(&mut buf, &record)?;
        buf.push(b'\n');
    }
    atomic_write(path, &buf)
}

/// Load the labeled corpus; the embedded comment is reconstructed as a
/// top-level stub carrying the body.
pub fn load_labeled(path: &Path) -> Result<Vec<LabeledComment>, CliError> {
    let text = fs::read_to_string(path)?;
    let mut labeled = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: LabeledRecord = serde_json::from_str(line).map_err(|e| {
            CliError::Data(format!("{} line {}: {e}", path.display(), i + 1))
        })?;
        // The stored valence must be the label's own; INFO never enters.
        if record.label.valence() != Some(record.valence) {
            return Err(CliError::Data(format!(
                "{} line {}: label {} does not carry valence {}",
                path.display(),
                i + 1,
                record.label.as_str(),
                record.valence.as_str()
            )));
        }
        labeled.push(LabeledComment {
            comment: RawComment {
                id: record.comment_id,
                link_id: record.post_id.clone(),
                parent_id: record.post_id.clone(),
                body: record.body,
                score: 0,
                created_utc: 1,
                author: String::new(),
            },
            label: record.label,
            valence: record.valence,
            post_id: record.post_id,
        });
    }
    Ok(labeled)
}

/// Serialize rows through the csv writer into a deterministic byte buffer.
pub fn csv_bytes<F>(write_rows: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<(), csv::Error>,
{
    let mut buf = Vec::new();
    {
        let mut writer = csv::Writer::from_writer(&mut buf);
        write_rows(&mut writer).map_err(|e| CliError::Data(e.to_string()))?;
        writer.flush()?;
    }
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RawComment;

    #[test]
    fn labeled_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labeled.ndjson");
        let labeled = vec![LabeledComment {
            comment: RawComment {
                id: "c1".into(),
                link_id: "p1".into(),
                parent_id: "p1".into(),
                body: "NTA, obviously".into(),
                score: 0,
                created_utc: 1,
                author: String::new(),
            },
            label: JudgementLabel::Nta,
            valence: Valence::Positive,
            post_id: "p1".into(),
        }];
        save_labeled(&path, &labeled).unwrap();
        let loaded = load_labeled(&path).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].comment.body, "NTA, obviously");
        assert_eq!(loaded[0].valence, Valence::Positive);
    }

    #[test]
    fn labeled_load_rejects_inconsistent_valence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labeled.ndjson");
        fs::write(
            &path,
            r#"{"post_id":"p","comment_id":"c","label":"Nta","valence":"negative","body":"x"}"#,
        )
        .unwrap();
        assert!(load_labeled(&path).is_err());
        fs::write(
            &path,
            r#"{"post_id":"p","comment_id":"c","label":"Info","valence":"positive","body":"x"}"#,
        )
        .unwrap();
        assert!(load_labeled(&path).is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert!(!path.with_extension("tmp").exists());
    }
}
