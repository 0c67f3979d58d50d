use serde::Serialize;

use crate::error::{Error, Result};

/// An authorized set `X` of `k` parties and its complement `W`.
///
/// Parties are numbered `0..n`. The computational basis index of the full
/// space is the mixed-radix number whose digit for party `p` has weight
/// `d^{n-1-p}` (party 0 most significant). Outcomes `l` of the complement
/// measurement and positions inside the `X` factor use the same convention
/// restricted to `W` and `X` respectively.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartySplit {
    n: usize,
    authorized: Vec<usize>,
    complement: Vec<usize>,
}

impl PartySplit {
    pub fn new(n: usize, authorized: &[usize]) -> Result<Self> {
        let mut x: Vec<usize> = authorized.to_vec();
        x.sort_unstable();
        x.dedup();
        if x.len() != authorized.len() || x.is_empty() || x.iter().any(|&p| p >= n) {
            return Err(Error::Parameter(format!("authorized set {authorized:?} must be distinct parties in 0..{n}")));
        }
        let w = (0..n).filter(|p| !x.contains(p)).collect();
        Ok(Self { n, authorized: x, complement: w })
    }

    /// The first `k` parties.
    pub fn leading(n: usize, k: usize) -> Result<Self> {
        Self::new(n, &(0..k).collect::<Vec<_>>())
    }

    /// Every `k`-subset of `0..n`, in lexicographic order.
    pub fn all(n: usize, k: usize) -> Result<Vec<Self>> {
        if k == 0 || k > n {
            return Err(Error::Parameter(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
        }
        let mut out = Vec::new();
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            out.push(Self::new(n, &combo)?);
            let Some(pos) = (0..k).rev().find(|&i| combo[i] < n - k + i) else {
                break;
            };
            combo[pos] += 1;
            for i in pos + 1..k {
                combo[i] = combo[i - 1] + 1;
            }
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.authorized.len()
    }

    pub fn authorized(&self) -> &[usize] {
        &self.authorized
    }

    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    pub fn label(&self) -> String {
        let names: Vec<String> = self.authorized.iter().map(|p| p.to_string()).collect();
        format!("X={{{}}}", names.join(","))
    }
}

/// Index bookkeeping between the full space and `(l, x)` pairs.
#[derive(Debug, Clone)]
pub(crate) struct SplitLayout {
    pub d_w: usize,
    pub d_x: usize,
    /// `full[l * d_x + x]` is the full-space index of `(l, x)`.
    full: Vec<usize>,
}

impl SplitLayout {
    pub fn new(split: &PartySplit, d: usize) -> Self {
        let n = split.n;
        let d_w = d.pow(split.complement.len() as u32);
        let d_x = d.pow(split.authorized.len() as u32);
        let weight = |p: usize| d.pow((n - 1 - p) as u32);
        let mut full = vec![0; d_w * d_x];
        for l in 0..d_w {
            let base_w = spread(l, &split.complement, d, weight);
            for x in 0..d_x {
                full[l * d_x + x] = base_w + spread(x, &split.authorized, d, weight);
            }
        }
        Self { d_w, d_x, full }
    }

    pub fn index(&self, l: usize, x: usize) -> usize {
        self.full[l * self.d_x + x]
    }
}

/// Places the mixed-radix digits of `value` (most significant first) on the
/// given parties.
fn spread(mut value: usize, parties: &[usize], d: usize, weight: impl Fn(usize) -> usize) -> usize {
    let mut out = 0;
    for &p in parties.iter().rev() {
        out += (value % d) * weight(p);
        value /= d;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_enumerated() {
        let all = PartySplit::all(4, 2).unwrap();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0].authorized(), &[0, 1]);
        assert_eq!(all[5].authorized(), &[2, 3]);
        assert_eq!(all[1].complement(), &[1, 3]);
        assert_eq!(PartySplit::all(3, 3).unwrap().len(), 1);
    }

    #[test]
    fn invalid_splits() {
        assert!(PartySplit::new(3, &[0, 0]).is_err());
        assert!(PartySplit::new(3, &[3]).is_err());
        assert!(PartySplit::new(3, &[]).is_err());
    }

    #[test]
    fn layout_is_a_bijection() {
        let split = PartySplit::new(3, &[0, 2]).unwrap();
        let layout = SplitLayout::new(&split, 3);
        let mut seen = [false; 27];
        for l in 0..3 {
            for x in 0..9 {
                let i = layout.index(l, x);
                assert!(!seen[i]);
                seen[i] = true;
                // party 1 carries the W digit
                assert_eq!((i / 3) % 3, l);
            }
        }
    }
}
