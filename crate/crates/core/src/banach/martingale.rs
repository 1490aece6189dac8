//! Vector-valued martingales on the dyadic filtration of `{−1, 1}^k`.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::TargetNorm;
use crate::{rng, Error, Result};

/// Largest depth accepted anywhere in this module.
pub const MAX_DEPTH: usize = 20;

/// A martingale `M_0, …, M_k` with `M_j` constant on the atoms of the first
/// `j` coordinates.
///
/// Node `(j, i)` is the atom whose first `j` coordinates spell the binary
/// digits of `i`, most significant first; its children are `(j+1, 2i)` and
/// `(j+1, 2i+1)`. In JSON the nodes are keyed by those binary strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MartingaleRepr", into = "MartingaleRepr")]
pub struct DyadicMartingale {
    depth: usize,
    target: TargetNorm,
    /// Heap order: level `j` starts at node `2^j − 1`.
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MartingaleRepr {
    depth: usize,
    target: TargetNorm,
    nodes: BTreeMap<String, Vec<f64>>,
}

impl TryFrom<MartingaleRepr> for DyadicMartingale {
    type Error = Error;

    fn try_from(r: MartingaleRepr) -> Result<Self> {
        check_depth(r.depth)?;
        let m = r.target.m();
        let count = (2usize << r.depth) - 1;
        if r.nodes.len() != count {
            return Err(Error::Format(format!("expected {count} nodes, found {}", r.nodes.len())));
        }
        let mut values = vec![0.0; count * m];
        for (key, v) in r.nodes {
            if key.len() > r.depth || !key.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(Error::Format(format!("bad node key `{key}`")));
            }
            if v.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: v.len() });
            }
            let i = if key.is_empty() { 0 } else { usize::from_str_radix(&key, 2).expect("binary digits") };
            let node = (1usize << key.len()) - 1 + i;
            values[node * m..(node + 1) * m].copy_from_slice(&v);
        }
        DyadicMartingale::from_nodes(r.target, r.depth, values)
    }
}

impl From<DyadicMartingale> for MartingaleRepr {
    fn from(d: DyadicMartingale) -> Self {
        let mut nodes = BTreeMap::new();
        for j in 0..=d.depth {
            for i in 0..1usize << j {
                let key = if j == 0 { String::new() } else { format!("{i:0j$b}") };
                nodes.insert(key, d.node(j, i).to_vec());
            }
        }
        MartingaleRepr { depth: d.depth, target: d.target, nodes }
    }
}

fn check_depth(depth: usize) -> Result<()> {
    if depth > MAX_DEPTH {
        return Err(Error::param(format!("depth {depth} exceeds {MAX_DEPTH}")));
    }
    Ok(())
}

impl DyadicMartingale {
    /// Takes all node values in heap order. The martingale property is not
    /// enforced; see [`martingale_defect`](Self::martingale_defect).
    pub fn from_nodes(target: TargetNorm, depth: usize, values: Vec<f64>) -> Result<Self> {
        check_depth(depth)?;
        target.validate()?;
        let expected = ((2usize << depth) - 1) * target.m();
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("node values must be finite"));
        }
        Ok(DyadicMartingale { depth, target, values })
    }

    /// Builds the martingale of conditional expectations of the given leaf
    /// values (`2^depth` vectors, flattened).
    pub fn from_leaves(target: TargetNorm, depth: usize, leaves: Vec<f64>) -> Result<Self> {
        check_depth(depth)?;
        target.validate()?;
        let m = target.m();
        let expected = (1usize << depth) * m;
        if leaves.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: leaves.len() });
        }
        let nodes = (2usize << depth) - 1;
        let mut values = vec![0.0; nodes * m];
        let first_leaf = (1usize << depth) - 1;
        values[first_leaf * m..].copy_from_slice(&leaves);
        for node in (0..first_leaf).rev() {
            let (l, r) = (2 * node + 1, 2 * node + 2);
            for c in 0..m {
                values[node * m + c] = 0.5 * (values[l * m + c] + values[r * m + c]);
            }
        }
        DyadicMartingale::from_nodes(target, depth, values)
    }

    /// Martingale with independent standard Gaussian leaf vectors.
    pub fn random(target: TargetNorm, depth: usize, seed: u64) -> Result<Self> {
        check_depth(depth)?;
        let mut g = rng::rng(seed);
        let leaves = (0..(target.m() << depth)).map(|_| StandardNormal.sample(&mut g)).collect();
        DyadicMartingale::from_leaves(target, depth, leaves)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn target(&self) -> &TargetNorm {
        &self.target
    }

    pub fn m(&self) -> usize {
        self.target.m()
    }

    /// Value of `M_level` on atom `index`.
    pub fn node(&self, level: usize, index: usize) -> &[f64] {
        assert!(level <= self.depth && index < 1 << level, "node ({level}, {index}) out of range");
        let m = self.m();
        let k = (1usize << level) - 1 + index;
        &self.values[k * m..(k + 1) * m]
    }

    /// `max |M(node) − (M(left) + M(right))/2|` over internal nodes and
    /// coordinates.
    pub fn martingale_defect(&self) -> f64 {
        let m = self.m();
        let internal = (1usize << self.depth) - 1;
        let mut worst = 0.0_f64;
        for node in 0..internal {
            let (l, r) = (2 * node + 1, 2 * node + 2);
            for c in 0..m {
                let avg = 0.5 * (self.values[l * m + c] + self.values[r * m + c]);
                worst = worst.max((self.values[node * m + c] - avg).abs());
            }
        }
        worst
    }

    pub fn is_martingale(&self) -> bool {
        self.martingale_defect() == 0.0
    }

    /// `E‖M_k‖^p` over the uniform measure on leaves.
    pub fn terminal_moment(&self, p: f64) -> f64 {
        let m = self.m();
        let first = (1usize << self.depth) - 1;
        let sum: f64 = self.values[first * m..].chunks(m).map(|v| self.target.norm(v).powf(p)).sum();
        sum / (1u64 << self.depth) as f64
    }

    /// `E‖M_0 + Σ ε_j dM_j‖^p` for the signs `ε_j = −1` exactly where bit
    /// `j − 1` of `negative` is set.
    ///
    /// The transform is written as `M_k − 2 Σ_{ε_j = −1} dM_j`, so the
    /// all-plus pattern reproduces `M_k` bit for bit.
    pub fn transform_moment(&self, negative: u64, p: f64) -> f64 {
        let m = self.m();
        let mut acc = vec![0.0; (self.depth + 1) * m];
        let mut buf = vec![0.0; m];
        let sum = self.walk(0, 0, negative, p, &mut acc, &mut buf);
        sum / (1u64 << self.depth) as f64
    }

    fn walk(&self, level: usize, index: usize, negative: u64, p: f64, acc: &mut [f64], buf: &mut [f64]) -> f64 {
        let m = self.m();
        let node = (1usize << level) - 1 + index;
        if level == self.depth {
            let leaf = &self.values[node * m..(node + 1) * m];
            for c in 0..m {
                buf[c] = leaf[c] + acc[level * m + c];
            }
            return self.target.norm(buf).powf(p);
        }
        let flip = negative >> level & 1 == 1;
        let mut total = 0.0;
        for child in [2 * index, 2 * index + 1] {
            let cn = (2usize << level) - 1 + child;
            let (head, tail) = acc.split_at_mut((level + 1) * m);
            let (prev, next) = (&head[level * m..], &mut tail[..m]);
            for c in 0..m {
                let d = self.values[cn * m + c] - self.values[node * m + c];
                next[c] = if flip { prev[c] - 2.0 * d } else { prev[c] };
            }
            total += self.walk(level + 1, child, negative, p, acc, buf);
        }
        total
    }
}

/// The `L_p(μ)`-valued martingale `M_j(ε)(δ) = Π_{ℓ ≤ j}(1 + ε_ℓ δ_ℓ)`, i.e.
/// `2^j` when the first `j` coordinates of `ε` and `δ` agree and `0`
/// otherwise. Coordinates of the target are indexed by `δ ∈ {−1, 1}^k`
/// with `μ` uniform, so the target norm is the averaged `ℓ_p^{2^k}` norm.
pub fn pisier_lp_martingale(k: usize, p: f64) -> Result<DyadicMartingale> {
    if k > 10 {
        return Err(Error::param(format!("k = {k} exceeds 10")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p must lie in [1, ∞), got {p}")));
    }
    let m = 1usize << k;
    let target = TargetNorm::Averaged { m, q: p };
    let mut values = vec![0.0; ((2usize << k) - 1) * m];
    for j in 0..=k {
        let height = (1u64 << j) as f64;
        for i in 0..1usize << j {
            let node = (1usize << j) - 1 + i;
            // δ whose first j coordinates spell i: indices i·2^{k−j} .. (i+1)·2^{k−j}.
            let span = 1usize << (k - j);
            values[node * m + i * span..node * m + (i + 1) * span].fill(height);
        }
    }
    DyadicMartingale::from_nodes(target, k, values)
}
