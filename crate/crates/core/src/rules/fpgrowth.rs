use std::collections::HashMap;
use std::hash::Hash;

const ROOT: usize = usize::MAX;

struct Node {
    rank: usize,
    count: usize,
    parent: usize,
    children: Vec<usize>,
}

struct FpTree {
    nodes: Vec<Node>,
    roots: Vec<usize>,
    /// Nodes carrying each rank.
    heads: Vec<Vec<usize>>,
    counts: Vec<usize>,
}

impl FpTree {
    /// Paths list ranks in ascending order with a weight.
    fn build(paths: &[(Vec<usize>, usize)], n_ranks: usize) -> FpTree {
        let mut t = FpTree { nodes: Vec::new(), roots: Vec::new(), heads: vec![Vec::new(); n_ranks], counts: vec![0; n_ranks] };
        for (path, w) in paths {
            let mut parent = ROOT;
            for &r in path {
                t.counts[r] += w;
                let siblings = if parent == ROOT { &t.roots } else { &t.nodes[parent].children };
                let found = siblings.iter().copied().find(|&c| t.nodes[c].rank == r);
                let node = match found {
                    Some(c) => {
                        t.nodes[c].count += w;
                        c
                    }
                    None => {
                        let id = t.nodes.len();
                        t.nodes.push(Node { rank: r, count: *w, parent, children: Vec::new() });
                        if parent == ROOT {
                            t.roots.push(id);
                        } else {
                            t.nodes[parent].children.push(id);
                        }
                        t.heads[r].push(id);
                        id
                    }
                };
                parent = node;
            }
        }
        t
    }

    fn mine(&self, suffix: &mut Vec<usize>, min_count: usize, max_size: usize, out: &mut Vec<(Vec<usize>, usize)>) {
        for r in (0..self.counts.len()).rev() {
            if self.counts[r] < min_count {
                continue;
            }
            suffix.push(r);
            out.push((suffix.clone(), self.counts[r]));
            if suffix.len() < max_size {
                let mut paths = Vec::with_capacity(self.heads[r].len());
                let mut cond_counts = vec![0usize; r];
                for &n in &self.heads[r] {
                    let w = self.nodes[n].count;
                    let mut path = Vec::new();
                    let mut p = self.nodes[n].parent;
                    while p != ROOT {
                        path.push(self.nodes[p].rank);
                        cond_counts[self.nodes[p].rank] += w;
                        p = self.nodes[p].parent;
                    }
                    path.reverse();
                    paths.push((path, w));
                }
                for (path, _) in &mut paths {
                    path.retain(|&q| cond_counts[q] >= min_count);
                }
                paths.retain(|(p, _)| !p.is_empty());
                if !paths.is_empty() {
                    FpTree::build(&paths, r).mine(suffix, min_count, max_size, out);
                }
            }
            suffix.pop();
        }
    }
}

/// All itemsets of at most `max_size` items contained in at least
/// `min_count` transactions, with their exact counts. Items within a
/// transaction are deduplicated. The header table orders items by
/// descending frequency, ties by item order. Each itemset is returned
/// sorted; the list is sorted by size, then items.
pub fn frequent_itemsets<T: Ord + Clone + Hash>(
    transactions: &[Vec<T>],
    min_count: usize,
    max_size: usize,
) -> Vec<(Vec<T>, usize)> {
    let min_count = min_count.max(1);
    if max_size == 0 {
        return Vec::new();
    }
    let mut freq: HashMap<&T, usize> = HashMap::new();
    for tx in transactions {
        let mut seen: Vec<&T> = tx.iter().collect();
        seen.sort();
        seen.dedup();
        for it in seen {
            *freq.entry(it).or_default() += 1;
        }
    }
    let mut header: Vec<(&T, usize)> = freq.into_iter().filter(|&(_, c)| c >= min_count).collect();
    header.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let rank: HashMap<&T, usize> = header.iter().enumerate().map(|(r, (it, _))| (*it, r)).collect();

    let paths: Vec<(Vec<usize>, usize)> = transactions
        .iter()
        .map(|tx| {
            let mut p: Vec<usize> = tx.iter().filter_map(|it| rank.get(it).copied()).collect();
            p.sort_unstable();
            p.dedup();
            (p, 1)
        })
        .filter(|(p, _)| !p.is_empty())
        .collect();
    let tree = FpTree::build(&paths, header.len());
    let mut raw = Vec::new();
    tree.mine(&mut Vec::new(), min_count, max_size, &mut raw);

    let mut out: Vec<(Vec<T>, usize)> = raw
        .into_iter()
        .map(|(ranks, c)| {
            let mut items: Vec<T> = ranks.into_iter().map(|r| header[r].0.clone()).collect();
            items.sort();
            (items, c)
        })
        .collect();
    out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    out
}
