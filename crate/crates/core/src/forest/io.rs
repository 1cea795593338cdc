//! Line-oriented text format for trained forests.
//!
//! ```text
//! svcfail-forest v1
//! schema <hash>
//! config <json>
//! n_features <n>
//! oob <accuracy or ->
//! importances <v_0> ... <v_n-1>
//! trees <count>
//! tree <node count>
//! S <feature> <threshold> <n_samples> <decrease> <left> <right>
//! L <negatives> <positives>
//! ```
//!
//! Nodes are written in preorder. Floats use the shortest representation
//! that round-trips exactly. Bootstrap masks are not stored.

use std::io::{BufRead, Write};
use std::str::FromStr;

use super::tree::{Node, Tree};
use super::{ForestConfig, RandomForest};
use crate::error::{Error, Result};

const MAGIC: &str = "svcfail-forest v1";

fn io_err(e: std::io::Error) -> Error {
    Error::ModelFormat(e.to_string())
}

pub fn write_forest<W: Write>(mut w: W, forest: &RandomForest, schema_hash: &str) -> Result<()> {
    let config = serde_json::to_string(&forest.config).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("schema {schema_hash}\nconfig {config}\nn_features {}\n", forest.n_features));
    match forest.oob_score {
        Some(v) => out.push_str(&format!("oob {v}\n")),
        None => out.push_str("oob -\n"),
    }
    out.push_str("importances");
    for v in &forest.importances {
        out.push_str(&format!(" {v}"));
    }
    out.push_str(&format!("\ntrees {}\n", forest.trees.len()));
    for t in &forest.trees {
        out.push_str(&format!("tree {}\n", t.nodes.len()));
        for n in &t.nodes {
            match n {
                Node::Split { feature, threshold, left, right, n_samples, decrease } => {
                    out.push_str(&format!("S {feature} {threshold} {n_samples} {decrease} {left} {right}\n"))
                }
                Node::Leaf { counts } => out.push_str(&format!("L {} {}\n", counts[0], counts[1])),
            }
        }
    }
    w.write_all(out.as_bytes()).map_err(io_err)
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => l.map_err(io_err),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::ModelFormat(format!("line {}: {msg}", self.line))
    }

    fn keyed(&mut self, key: &str) -> Result<String> {
        let l = self.next()?;
        match l.strip_prefix(key) {
            Some(rest) if rest.is_empty() || rest.starts_with(' ') => Ok(rest.trim_start().to_string()),
            _ => Err(self.err(&format!("expected `{key}`"))),
        }
    }

    fn parse<T: FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(&format!("bad value {s:?}")))
    }
}

/// Reads a forest and the schema hash it was trained against.
pub fn read_forest<R: BufRead>(r: R) -> Result<(RandomForest, String)> {
    let mut lines = Lines { inner: r.lines(), line: 0 };
    if lines.next()?.trim_end() != MAGIC {
        return Err(lines.err("not a svcfail forest file"));
    }
    let schema = lines.keyed("schema")?;
    let config: ForestConfig =
        serde_json::from_str(&lines.keyed("config")?).map_err(|e| lines.err(&e.to_string()))?;
    let v = lines.keyed("n_features")?;
    let n_features: usize = lines.parse(&v)?;
    let oob = lines.keyed("oob")?;
    let oob_score = if oob == "-" { None } else { Some(lines.parse(&oob)?) };
    let imp = lines.keyed("importances")?;
    let importances = imp.split_whitespace().map(|s| lines.parse(s)).collect::<Result<Vec<f64>>>()?;
    if importances.len() != n_features {
        return Err(lines.err("importance count does not match n_features"));
    }
    let v = lines.keyed("trees")?;
    let n_trees: usize = lines.parse(&v)?;
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let v = lines.keyed("tree")?;
        let n_nodes: usize = lines.parse(&v)?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for i in 0..n_nodes {
            let l = lines.next()?;
            let f: Vec<&str> = l.split_whitespace().collect();
            let node = match f.as_slice() {
                ["S", feature, threshold, n_samples, decrease, left, right] => {
                    let node = Node::Split {
                        feature: lines.parse(feature)?,
                        threshold: lines.parse(threshold)?,
                        n_samples: lines.parse(n_samples)?,
                        decrease: lines.parse(decrease)?,
                        left: lines.parse(left)?,
                        right: lines.parse(right)?,
                    };
                    if let Node::Split { feature, left, right, .. } = node {
                        if feature >= n_features || left <= i || right <= i || left >= n_nodes || right >= n_nodes {
                            return Err(lines.err("split references an invalid feature or node"));
                        }
                    }
                    node
                }
                ["L", neg, pos] => Node::Leaf { counts: [lines.parse(neg)?, lines.parse(pos)?] },
                _ => return Err(lines.err("expected a node")),
            };
            nodes.push(node);
        }
        if nodes.is_empty() {
            return Err(lines.err("empty tree"));
        }
        trees.push(Tree { nodes });
    }
    if trees.is_empty() {
        return Err(lines.err("forest has no trees"));
    }
    Ok((
        RandomForest { config, n_features, trees, in_bag: Vec::new(), oob_score, importances },
        schema,
    ))
}
