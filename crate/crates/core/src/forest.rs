//! Bagged CART ensemble with Gini splits, grown to purity.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features examined per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    /// Disabling bootstrap trains every tree on the full sample.
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_features: None,
            bootstrap: true,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("forest needs at least one tree".into()));
        }
        if self.max_features == Some(0) {
            return Err(Error::Config("max_features must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        neg: u32,
        pos: u32,
    },
}

#[derive(Clone, Debug, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn leaf(&self, x: &[f64]) -> (u32, u32) {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature as usize] <= threshold { left } else { right } as usize,
                Node::Leaf { neg, pos } => return (neg, pos),
            }
        }
    }

    fn leaf_fraction(&self, x: &[f64]) -> f64 {
        let (neg, pos) = self.leaf(x);
        pos as f64 / (neg + pos) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Forest {
    n_features: usize,
    trees: Vec<Tree>,
}

/// Weighted Gini impurity of a two-child split, scaled by the node size.
fn split_impurity(l: [u32; 2], r: [u32; 2]) -> f64 {
    let side = |c: [u32; 2]| {
        let n = (c[0] + c[1]) as f64;
        let (a, b) = (c[0] as f64, c[1] as f64);
        n - (a * a + b * b) / n
    };
    side(l) + side(r)
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m < b {
        m
    } else {
        a
    }
}

struct Builder<'a> {
    x: &'a [&'a [f64]],
    y: &'a [bool],
    n_features: usize,
    max_features: usize,
    nodes: Vec<Node>,
    scratch: Vec<(f64, bool)>,
}

struct Best {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

impl Builder<'_> {
    /// Best split on one feature, or None when it is constant on `idx`.
    fn best_on(&mut self, f: usize, idx: &[usize], counts: [u32; 2]) -> Option<Best> {
        self.scratch.clear();
        self.scratch.extend(idx.iter().map(|&i| (self.x[i][f], self.y[i])));
        self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best: Option<Best> = None;
        let mut left = [0u32; 2];
        for k in 0..self.scratch.len() - 1 {
            let (v, label) = self.scratch[k];
            left[label as usize] += 1;
            let next = self.scratch[k + 1].0;
            if v.total_cmp(&next) == Ordering::Equal {
                continue;
            }
            let right = [counts[0] - left[0], counts[1] - left[1]];
            let impurity = split_impurity(left, right);
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                best = Some(Best {
                    impurity,
                    feature: f,
                    threshold: midpoint(v, next),
                });
            }
        }
        best
    }

    fn choose(&mut self, idx: &[usize], counts: [u32; 2], rng: &mut rng::Rng) -> Option<Best> {
        let mut order: Vec<usize> = (0..self.n_features).collect();
        order.shuffle(rng);
        let (head, tail) = order.split_at(self.max_features.min(self.n_features));
        let mut sampled = head.to_vec();
        sampled.sort_unstable();
        let mut best: Option<Best> = None;
        for f in sampled {
            if let Some(b) = self.best_on(f, idx, counts) {
                if best.as_ref().is_none_or(|cur| b.impurity < cur.impurity) {
                    best = Some(b);
                }
            }
        }
        if best.is_some() {
            return best;
        }
        // every sampled feature was constant here: fall back to the others
        tail.iter().find_map(|&f| self.best_on(f, idx, counts))
    }

    fn grow(&mut self, idx: Vec<usize>, rng: &mut rng::Rng) {
        let mut stack = vec![(0usize, idx)];
        self.nodes.push(Node::Leaf { neg: 0, pos: 0 });
        while let Some((at, idx)) = stack.pop() {
            let mut counts = [0u32; 2];
            for &i in &idx {
                counts[self.y[i] as usize] += 1;
            }
            let leaf = Node::Leaf {
                neg: counts[0],
                pos: counts[1],
            };
            if idx.len() < 2 || counts[0] == 0 || counts[1] == 0 {
                self.nodes[at] = leaf;
                continue;
            }
            let Some(best) = self.choose(&idx, counts, rng) else {
                self.nodes[at] = leaf;
                continue;
            };
            let (l, r): (Vec<usize>, Vec<usize>) = idx
                .into_iter()
                .partition(|&i| self.x[i][best.feature] <= best.threshold);
            let left = self.nodes.len();
            self.nodes.push(Node::Leaf { neg: 0, pos: 0 });
            self.nodes.push(Node::Leaf { neg: 0, pos: 0 });
            self.nodes[at] = Node::Split {
                feature: best.feature as u32,
                threshold: best.threshold,
                left: left as u32,
                right: left as u32 + 1,
            };
            stack.push((left + 1, r));
            stack.push((left, l));
        }
    }
}

fn cmp_rows(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

impl Forest {
    /// Fits the ensemble. Samples are put in a canonical order first, so
    /// the model does not depend on the order they are given in.
    pub fn fit(x: &[&[f64]], y: &[bool], cfg: &ForestConfig, seed: u64) -> Result<Forest> {
        cfg.validate()?;
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        let Some(first) = x.first() else {
            return Err(Error::Data("cannot fit a forest on zero samples".into()));
        };
        let d = first.len();
        if let Some(bad) = x.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        if d == 0 {
            return Err(Error::Data("cannot fit a forest on zero features".into()));
        }
        if x.iter().flat_map(|r| r.iter()).any(|v| v.is_nan()) {
            return Err(Error::Data("NaN in forest training features".into()));
        }
        if let Some(&only) = y.first().filter(|&&c| y.iter().all(|&l| l == c)) {
            return Err(Error::SingleClass(only as u8));
        }

        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| cmp_rows(x[a], x[b]).then(y[a].cmp(&y[b])));
        let xs: Vec<&[f64]> = order.iter().map(|&i| x[i]).collect();
        let ys: Vec<bool> = order.iter().map(|&i| y[i]).collect();
        let max_features = cfg
            .max_features
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize);

        let trees = (0..cfg.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng::stream(seed, &[rng::tag::FOREST, t as u64]);
                let n = xs.len();
                let idx: Vec<usize> = if cfg.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut b = Builder {
                    x: &xs,
                    y: &ys,
                    n_features: d,
                    max_features,
                    nodes: Vec::new(),
                    scratch: Vec::with_capacity(n),
                };
                b.grow(idx, &mut rng);
                Tree { nodes: b.nodes }
            })
            .collect();
        Ok(Forest { n_features: d, trees })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Mean over trees of the positive fraction in the leaf reached by `x`.
    pub fn posterior(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let sum: f64 = self.trees.iter().map(|t| t.leaf_fraction(x)).sum();
        Ok(sum / self.trees.len() as f64)
    }

    /// Per-tree leaf (negative, positive) counts for `x`.
    pub fn leaf_counts(&self, x: &[f64]) -> Result<Vec<(u32, u32)>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.trees.iter().map(|t| t.leaf(x)).collect())
    }

    pub fn posteriors(&self, rows: &[&[f64]]) -> Result<Vec<f64>> {
        rows.par_iter().map(|x| self.posterior(x)).collect()
    }

    /// Flat text format: a `forest <features> <trees>` header, then per tree
    /// a `tree <nodes>` line followed by `S feature threshold left right` or
    /// `L neg pos` node records.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "forest {} {}", self.n_features, self.trees.len()).map_err(io)?;
        for t in &self.trees {
            writeln!(w, "tree {}", t.nodes.len()).map_err(io)?;
            for n in &t.nodes {
                match *n {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => writeln!(w, "S {feature} {threshold:?} {left} {right}"),
                    Node::Leaf { neg, pos } => writeln!(w, "L {neg} {pos}"),
                }
                .map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Forest> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let mut next = || -> Result<(usize, Vec<String>)> {
            match lines.next() {
                Some((i, l)) => {
                    let l = l.map_err(|e| Error::io(path, e))?;
                    Ok((i + 1, l.split_whitespace().map(str::to_string).collect()))
                }
                None => Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 0,
                    message: "unexpected end of file".into(),
                }),
            }
        };
        let bad = |line: usize, what: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("malformed {what} record"),
        };
        fn num<T: std::str::FromStr>(s: Option<&String>) -> Option<T> {
            s?.parse().ok()
        }

        let (line, head) = next()?;
        let (n_features, n_trees): (usize, usize) = match head.first().map(String::as_str) {
            Some("forest") if head.len() == 3 => (
                num(head.get(1)).ok_or_else(|| bad(line, "forest"))?,
                num(head.get(2)).ok_or_else(|| bad(line, "forest"))?,
            ),
            _ => return Err(bad(line, "forest")),
        };
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let (line, head) = next()?;
            let n_nodes: usize = match head.first().map(String::as_str) {
                Some("tree") if head.len() == 2 => num(head.get(1)).ok_or_else(|| bad(line, "tree"))?,
                _ => return Err(bad(line, "tree")),
            };
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let (line, rec) = next()?;
                let node = match rec.first().map(String::as_str) {
                    Some("S") if rec.len() == 5 => {
                        let parsed = (|| {
                            Some(Node::Split {
                                feature: num(rec.get(1)).filter(|&f: &u32| (f as usize) < n_features)?,
                                threshold: num(rec.get(2))?,
                                left: num(rec.get(3)).filter(|&c: &u32| (c as usize) < n_nodes)?,
                                right: num(rec.get(4)).filter(|&c: &u32| (c as usize) < n_nodes)?,
                            })
                        })();
                        parsed.ok_or_else(|| bad(line, "split"))?
                    }
                    Some("L") if rec.len() == 3 => {
                        let (neg, pos): (u32, u32) = (
                            num(rec.get(1)).ok_or_else(|| bad(line, "leaf"))?,
                            num(rec.get(2)).ok_or_else(|| bad(line, "leaf"))?,
                        );
                        if neg + pos == 0 {
                            return Err(bad(line, "empty leaf"));
                        }
                        Node::Leaf { neg, pos }
                    }
                    _ => return Err(bad(line, "node")),
                };
                nodes.push(node);
            }
            // children must point forward, which also rules out cycles
            for (i, n) in nodes.iter().enumerate() {
                if let Node::Split { left, right, .. } = *n {
                    if left as usize <= i || right as usize <= i {
                        return Err(Error::Data(format!("{}: tree node {i} points backwards", path.display())));
                    }
                }
            }
            trees.push(Tree { nodes });
        }
        Ok(Forest { n_features, trees })
    }
}
