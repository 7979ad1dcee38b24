use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Edge, Post, UserId, DEFAULT_CATEGORIES};
use crate::error::{Error, Result};

/// One line of the posts file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_id: Option<u64>,
    pub user_id: u64,
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_probs: Option<Vec<(u16, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location_id: Option<u64>,
}

/// Lowercases, splits on runs of non-alphanumeric characters and drops
/// tokens shorter than two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .collect()
}

pub fn load_dataset(posts_path: &Path, edges_path: &Path) -> Result<Dataset> {
    load_dataset_with(posts_path, edges_path, DEFAULT_CATEGORIES)
}

/// Loads a dataset whose images use `n_categories` scene categories.
pub fn load_dataset_with(posts_path: &Path, edges_path: &Path, n_categories: usize) -> Result<Dataset> {
    let posts = read_posts(posts_path)?;
    let users: BTreeSet<UserId> = posts.iter().map(|p| p.author).collect();
    let edges = read_edges(edges_path)?;
    Dataset::new(users, posts, edges, n_categories)
}

fn read_posts(path: &Path) -> Result<Vec<Post>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut posts = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let rec: PostRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let image = rec.image_probs.map(|mut probs| {
            probs.sort_by_key(|&(c, _)| c);
            probs
        });
        posts.push(Post {
            id: rec.post_id.unwrap_or(line_no as u64),
            author: UserId(rec.user_id),
            hashtags: rec.hashtags,
            tokens: tokenize(&rec.text),
            image,
            location: rec.location_id,
        });
    }
    Ok(posts)
}

fn read_edges(path: &Path) -> Result<Vec<Edge>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.eq_ignore_ascii_case("u,v")) {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let mut fields = line.split(',').map(str::trim);
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(format!("expected two columns, got {line:?}")));
        };
        let a: u64 = a.parse().map_err(|e| parse_err(format!("bad user id {a:?}: {e}")))?;
        let b: u64 = b.parse().map_err(|e| parse_err(format!("bad user id {b:?}: {e}")))?;
        edges.push((UserId(a), UserId(b)));
    }
    Ok(edges)
}

/// Writes the dataset in the format [`load_dataset`] reads. Post ids are
/// written explicitly so a reload reproduces the snapshot exactly.
pub fn write_dataset(d: &Dataset, posts_path: &Path, edges_path: &Path) -> Result<()> {
    let file = File::create(posts_path).map_err(|e| Error::io(posts_path, e))?;
    let mut w = BufWriter::new(file);
    for p in d.posts() {
        let rec = PostRecord {
            post_id: Some(p.id),
            user_id: p.author.0,
            hashtags: p.hashtags.clone(),
            text: p.tokens.join(" "),
            image_probs: p.image.clone(),
            location_id: p.location,
        };
        let line = serde_json::to_string(&rec).map_err(|e| Error::Data(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(posts_path, e))?;
    }
    w.flush().map_err(|e| Error::io(posts_path, e))?;

    let file = File::create(edges_path).map_err(|e| Error::io(edges_path, e))?;
    let mut w = BufWriter::new(file);
    for (a, b) in d.edges() {
        writeln!(w, "{a},{b}").map_err(|e| Error::io(edges_path, e))?;
    }
    w.flush().map_err(|e| Error::io(edges_path, e))
}
