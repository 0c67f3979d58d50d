use serde::Serialize;

use crate::error::{Error, Result};
use crate::scheme::split::SplitLayout;
use crate::scheme::PartySplit;

/// Disjoint groups of parties covering `0..n`. Each group measures jointly;
/// different groups only apply product measurements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupPartition {
    n: usize,
    groups: Vec<Vec<usize>>,
}

impl GroupPartition {
    /// Groups are sorted internally and ordered by their smallest party.
    pub fn new(n: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut groups: Vec<Vec<usize>> = groups
            .into_iter()
            .map(|mut g| {
                g.sort_unstable();
                g
            })
            .collect();
        for g in &groups {
            if g.is_empty() {
                return Err(Error::Parameter("empty group".into()));
            }
            for &p in g {
                if p >= n || seen[p] {
                    return Err(Error::Parameter(format!("party {p} repeated or outside 0..{n}")));
                }
                seen[p] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Parameter("groups do not cover every party".into()));
        }
        groups.sort_by_key(|g| g[0]);
        Ok(Self { n, groups })
    }

    /// All parties in one group: the unrestricted measurement class.
    pub fn joint(n: usize) -> Result<Self> {
        Self::new(n, vec![(0..n).collect()])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn max_group_size(&self) -> usize {
        self.groups.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn label(&self) -> String {
        self.groups
            .iter()
            .map(|g| format!("{{{}}}", g.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")))
            .collect()
    }

    pub(crate) fn layouts(&self, d: usize) -> Result<Vec<SplitLayout>> {
        self.groups.iter().map(|g| Ok(SplitLayout::new(&PartySplit::new(self.n, g)?, d))).collect()
    }
}

/// Every partition of `0..n` whose groups all have fewer than `k` parties,
/// in restricted-growth-string order. Empty when `k = 1`.
pub fn enumerate_partitions(n: usize, k: usize) -> Result<Vec<GroupPartition>> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::Parameter(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    loop {
        let blocks = labels.iter().max().map_or(0, |m| m + 1);
        let mut groups = vec![Vec::new(); blocks];
        for (p, &b) in labels.iter().enumerate() {
            groups[b].push(p);
        }
        if groups.iter().all(|g| g.len() < k) {
            out.push(GroupPartition::new(n, groups)?);
        }
        // next restricted growth string: labels[i] <= 1 + max(labels[..i])
        let mut i = n;
        loop {
            if i <= 1 {
                return Ok(out);
            }
            i -= 1;
            let prefix_max = labels[..i].iter().copied().max().unwrap_or(0);
            if labels[i] <= prefix_max {
                labels[i] += 1;
                for l in labels.iter_mut().skip(i + 1) {
                    *l = 0;
                }
                break;
            }
        }
    }
}
