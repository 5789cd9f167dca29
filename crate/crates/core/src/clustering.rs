//! Connected components of quasi-identical simplifications under a
//! Levenshtein-distance edge rule.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error("key {0:?} is not part of the clustering")]
    UnknownKey(String),
}

/// Unit-cost edit distance over characters.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let next = (row[j] + 1).min(row[j + 1] + 1).min(diag + usize::from(ca != cb));
            diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[b.len()]
}

/// `Some(d)` when the edit distance is `d <= max`, `None` otherwise. Only the
/// diagonal band of width `2 * max + 1` is evaluated.
pub fn levenshtein_within(a: &[char], b: &[char], max: usize) -> Option<usize> {
    let (n, m) = (a.len(), b.len());
    if n.abs_diff(m) > max {
        return None;
    }
    let inf = max + 1;
    let mut prev = vec![inf; m + 1];
    let mut cur = vec![inf; m + 1];
    for (j, p) in prev.iter_mut().enumerate().take(max.min(m) + 1) {
        *p = j;
    }
    for i in 1..=n {
        let lo = i.saturating_sub(max).max(1);
        let hi = (i + max).min(m);
        cur.fill(inf);
        if i <= max {
            cur[0] = i;
        }
        let mut row_min = cur[0];
        for j in lo..=hi {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            let del = prev[j] + 1;
            let ins = cur[j - 1] + 1;
            let v = sub.min(del).min(ins).min(inf);
            cur[j] = v;
            row_min = row_min.min(v);
        }
        if row_min > max {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (prev[m] <= max).then_some(prev[m])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub members: BTreeSet<String>,
    /// Member with the highest pair count; ties go to the lexicographically
    /// smallest key.
    pub representative: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Clustering {
    pub clusters: Vec<Cluster>,
    membership: HashMap<String, usize>,
}

impl Clustering {
    pub fn cluster_of(&self, key: &str) -> Option<&Cluster> {
        self.membership.get(key).map(|&i| &self.clusters[i])
    }

    pub fn cluster_id(&self, key: &str) -> Option<usize> {
        self.membership.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Tab-separated `cluster_id  representative  member`, one row per member.
    pub fn write_tsv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
        w.write_record(["cluster_id", "representative", "member"])?;
        for c in &self.clusters {
            for m in &c.members {
                w.write_record([c.id.to_string().as_str(), c.representative.as_str(), m.as_str()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Connected components of the graph whose edges join keys at distance
/// `<= radius`. `keys` maps each key to its pair count. Cluster ids follow
/// the lexicographic order of each cluster's smallest member.
pub fn cluster_simplifications(keys: &BTreeMap<String, usize>, radius: usize) -> Clustering {
    let names: Vec<&String> = keys.keys().collect();
    let chars: Vec<Vec<char>> = names.iter().map(|k| k.chars().collect()).collect();
    // Sort by length so each key only needs to look at a window of
    // candidates whose length differs by at most `radius`.
    let mut by_len: Vec<usize> = (0..names.len()).collect();
    by_len.sort_by_key(|&i| (chars[i].len(), i));

    let (chars, by_len) = (&chars, &by_len);
    let edges: Vec<(usize, usize)> = (0..by_len.len())
        .into_par_iter()
        .flat_map_iter(|p| {
            let i = by_len[p];
            let li = chars[i].len();
            by_len[p + 1..]
                .iter()
                .take_while(move |&&j| chars[j].len() - li <= radius)
                .filter(move |&&j| levenshtein_within(&chars[i], &chars[j], radius).is_some())
                .map(move |&j| (i, j))
                .collect::<Vec<_>>()
        })
        .collect();

    let mut uf = UnionFind::<usize>::new(names.len());
    for (i, j) in edges {
        uf.union(i, j);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..names.len() {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    // Members are pushed in key order, so the first one is the smallest.
    let mut ordered: Vec<Vec<usize>> = groups.into_values().collect();
    ordered.sort_by_key(|g| g[0]);

    let mut clustering = Clustering::default();
    for (id, group) in ordered.into_iter().enumerate() {
        let representative = group
            .iter()
            .map(|&i| names[i])
            .max_by(|a, b| keys[*a].cmp(&keys[*b]).then_with(|| b.cmp(a)))
            .expect("non-empty component")
            .clone();
        for &i in &group {
            clustering.membership.insert(names[i].clone(), id);
        }
        clustering.clusters.push(Cluster { id, members: group.iter().map(|&i| names[i].clone()).collect(), representative });
    }
    clustering
}

/// Union of the full clusters of every selected key.
pub fn expand_selection(selected: &BTreeSet<String>, clustering: &Clustering) -> Result<BTreeSet<String>, ClusterError> {
    let mut out = BTreeSet::new();
    for key in selected {
        let cluster = clustering.cluster_of(key).ok_or_else(|| ClusterError::UnknownKey(key.clone()))?;
        out.extend(cluster.members.iter().cloned());
    }
    Ok(out)
}
