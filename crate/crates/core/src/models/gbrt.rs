//! Squared-error gradient boosting over axis-aligned regression trees.
//!
//! Trees are grown level by level. Each feature is cut into at most
//! [`MAX_BINS`] quantile bins (one bin per distinct value when there are that
//! few, which makes the search exact) and split candidates are scanned from
//! per-node histograms; a child's histogram is its parent's minus its
//! sibling's. A split is kept only if it strictly reduces
//! the squared error and leaves at least [`MIN_LEAF`] instances on each side.
//! Candidates are visited by ascending feature index and ascending threshold
//! and only a strictly better gain replaces the incumbent, so ties go to the
//! lowest feature and then the lowest threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MIN_LEAF: usize = 2;

/// Most bins per feature.
pub const MAX_BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub max_depth: usize,
    pub learning_rate: f64,
    pub n_rounds: usize,
}

impl Hyperparams {
    pub fn new(max_depth: usize, learning_rate: f64, n_rounds: usize) -> Result<Self> {
        let hp = Hyperparams {
            max_depth,
            learning_rate,
            n_rounds,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidArgument("max_depth must be ≥ 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate {} must lie in (0, 1]",
                self.learning_rate
            )));
        }
        if self.n_rounds == 0 {
            return Err(Error::InvalidArgument("n_rounds must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// max_depth ∈ {3, 5, 7} × learning_rate ∈ {0.05, 0.1, 0.3}, 200 rounds each.
pub fn default_grid() -> Vec<Hyperparams> {
    let mut grid = Vec::with_capacity(9);
    for max_depth in [3, 5, 7] {
        for learning_rate in [0.05, 0.1, 0.3] {
            grid.push(Hyperparams {
                max_depth,
                learning_rate,
                n_rounds: 200,
            });
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    /// Instances with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbrtModel {
    pub n_features: usize,
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<TreeNode>,
}

impl GbrtModel {
    /// A model with no trees that always predicts `value`.
    pub fn constant(n_features: usize, value: f64) -> Self {
        GbrtModel {
            n_features,
            base_score: value,
            learning_rate: 1.0,
            trees: Vec::new(),
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_features);
        let boost: f64 = self.trees.iter().map(|t| t.evaluate(x)).sum();
        self.base_score + self.learning_rate * boost
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(Error::Dimension(format!(
                "regressor expects {} features, got {}",
                self.n_features,
                x.cols()
            )));
        }
        Ok((0..x.rows()).map(|r| self.predict_row(x.row(r))).collect())
    }
}

/// Fits `hp.n_rounds` trees to squared-error residuals.
pub fn fit_gbrt(x: &Matrix, y: &[f64], hp: &Hyperparams) -> Result<GbrtModel> {
    fit_gbrt_traced(x, y, hp).map(|(m, _)| m)
}

/// Like [`fit_gbrt`], also returning the training RMSE after each round.
pub fn fit_gbrt_traced(x: &Matrix, y: &[f64], hp: &Hyperparams) -> Result<(GbrtModel, Vec<f64>)> {
    hp.validate()?;
    if x.rows() == 0 {
        return Err(Error::Empty(
            "gradient boosting needs at least one instance".into(),
        ));
    }
    if x.rows() != y.len() {
        return Err(Error::Dimension(format!(
            "{} rows but {} targets",
            x.rows(),
            y.len()
        )));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("boosting features".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("boosting targets".into()));
    }
    let n = y.len();
    let base_score = if y.iter().all(|&v| v == y[0]) {
        y[0]
    } else {
        y.iter().sum::<f64>() / n as f64
    };

    let binned = Binned::new(x);
    let mut pred = vec![base_score; n];
    let mut residual = vec![0.0; n];
    let mut rows: Vec<u32> = Vec::with_capacity(n);
    let mut scratch: Vec<u32> = Vec::with_capacity(n);
    let mut trees = Vec::with_capacity(hp.n_rounds);
    let mut trace = Vec::with_capacity(hp.n_rounds);

    for _ in 0..hp.n_rounds {
        for i in 0..n {
            residual[i] = y[i] - pred[i];
        }
        rows.clear();
        rows.extend(0..n as u32);
        let nodes = grow_tree(&binned, &residual, hp.max_depth, &mut rows, &mut scratch);
        for node in nodes.iter().filter(|node| node.split.is_none()) {
            let step = hp.learning_rate * node.leaf_value();
            for &r in &rows[node.start..node.end] {
                pred[r as usize] += step;
            }
        }
        trace.push(rmse(&pred, y));
        trees.push(assemble(&nodes, 0));
    }

    Ok((
        GbrtModel {
            n_features: x.cols(),
            base_score,
            learning_rate: hp.learning_rate,
            trees,
        },
        trace,
    ))
}

pub fn rmse(pred: &[f64], actual: &[f64]) -> f64 {
    let sse: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    (sse / actual.len() as f64).sqrt()
}

/// Feature values mapped to ordered bins, row-major.
struct Binned {
    n_features: usize,
    bins: Vec<u8>,
    /// Per feature, the smallest and largest training value in each bin.
    lo: Vec<Vec<f64>>,
    hi: Vec<Vec<f64>>,
}

impl Binned {
    fn new(x: &Matrix) -> Self {
        let (n, d) = x.shape();
        let mut bins = vec![0u8; n * d];
        let mut lo = Vec::with_capacity(d);
        let mut hi = Vec::with_capacity(d);
        for f in 0..d {
            let raw = x.column(f);
            let mut sorted = raw.clone();
            sorted.sort_by(f64::total_cmp);
            let mut runs: Vec<(f64, usize)> = Vec::new();
            for &v in &sorted {
                match runs.last_mut() {
                    Some((last, count)) if *last == v => *count += 1,
                    _ => runs.push((v, 1)),
                }
            }
            let target = if runs.len() <= MAX_BINS {
                1
            } else {
                n.div_ceil(MAX_BINS)
            };
            let (mut l, mut h) = (Vec::new(), Vec::<f64>::new());
            let mut filled = 0;
            for (v, count) in runs {
                if filled == 0 {
                    l.push(v);
                    h.push(v);
                } else {
                    *h.last_mut().unwrap() = v;
                }
                filled += count;
                // the last allowed bin absorbs the remainder
                if filled >= target && l.len() < MAX_BINS {
                    filled = 0;
                }
            }
            for (i, &v) in raw.iter().enumerate() {
                bins[i * d + f] = h.partition_point(|&e| e < v) as u8;
            }
            lo.push(l);
            hi.push(h);
        }
        Binned {
            n_features: d,
            bins,
            lo,
            hi,
        }
    }

    fn row(&self, r: u32) -> &[u8] {
        let start = r as usize * self.n_features;
        &self.bins[start..start + self.n_features]
    }
}

/// Residual sums and counts per (feature, bin).
struct Hist {
    sum: Vec<f64>,
    count: Vec<u32>,
}

impl Hist {
    fn build(binned: &Binned, residual: &[f64], rows: &[u32]) -> Hist {
        let len = binned.n_features * MAX_BINS;
        let mut h = Hist {
            sum: vec![0.0; len],
            count: vec![0; len],
        };
        for &r in rows {
            let g = residual[r as usize];
            for (f, &b) in binned.row(r).iter().enumerate() {
                let k = f * MAX_BINS + b as usize;
                h.sum[k] += g;
                h.count[k] += 1;
            }
        }
        h
    }

    fn subtract(&mut self, other: &Hist) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a -= b;
        }
        for (a, b) in self.count.iter_mut().zip(&other.count) {
            *a -= b;
        }
    }
}

struct BuildNode {
    /// The node's rows are `rows[start..end]`.
    start: usize,
    end: usize,
    sum: f64,
    depth: usize,
    /// (feature, threshold, left, right)
    split: Option<(usize, f64, u32, u32)>,
    hist: Option<Hist>,
}

impl BuildNode {
    fn count(&self) -> usize {
        self.end - self.start
    }

    fn leaf_value(&self) -> f64 {
        if self.count() == 0 {
            0.0
        } else {
            self.sum / self.count() as f64
        }
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    /// Rows with bin <= this go left.
    bin: usize,
    threshold: f64,
}

fn best_split(binned: &Binned, node: &BuildNode) -> Option<Candidate> {
    let hist = node.hist.as_ref()?;
    let (total, count) = (node.sum, node.count());
    let parent_score = total * total / count as f64;
    let mut best: Option<Candidate> = None;
    for f in 0..binned.n_features {
        let (lo, hi) = (&binned.lo[f], &binned.hi[f]);
        if lo.len() < 2 {
            continue;
        }
        let base = f * MAX_BINS;
        let mut ls = 0.0;
        let mut lc = 0usize;
        let mut prev: Option<usize> = None;
        for b in 0..lo.len() {
            let c = hist.count[base + b] as usize;
            if c == 0 {
                continue;
            }
            if let Some(p) = prev {
                if lc >= MIN_LEAF && count - lc >= MIN_LEAF {
                    let rs = total - ls;
                    let gain = ls * ls / lc as f64 + rs * rs / (count - lc) as f64 - parent_score;
                    if gain > 0.0 && best.is_none_or(|c| gain > c.gain) {
                        let mut threshold = 0.5 * (hi[p] + lo[b]);
                        if threshold >= lo[b] {
                            threshold = hi[p];
                        }
                        best = Some(Candidate {
                            gain,
                            feature: f,
                            bin: p,
                            threshold,
                        });
                    }
                }
            }
            ls += hist.sum[base + b];
            lc += c;
            prev = Some(b);
        }
    }
    best
}

/// Grows one tree level by level. On return `rows` is partitioned so that
/// every leaf's rows are contiguous, in ascending row order.
fn grow_tree(
    binned: &Binned,
    residual: &[f64],
    max_depth: usize,
    rows: &mut [u32],
    scratch: &mut Vec<u32>,
) -> Vec<BuildNode> {
    let n = rows.len();
    let can_split = |count: usize, depth: usize| depth < max_depth && count >= 2 * MIN_LEAF;
    let mut nodes = vec![BuildNode {
        start: 0,
        end: n,
        sum: residual.iter().sum(),
        depth: 0,
        split: None,
        hist: can_split(n, 0).then(|| Hist::build(binned, residual, rows)),
    }];
    let mut frontier: Vec<usize> = vec![0];

    while !frontier.is_empty() {
        let mut next = Vec::new();
        for id in frontier {
            let Some(c) = best_split(binned, &nodes[id]) else {
                nodes[id].hist = None;
                continue;
            };
            let (start, end, depth) = (nodes[id].start, nodes[id].end, nodes[id].depth);

            // stable partition of the node's rows
            scratch.clear();
            let mut write = start;
            let (mut lsum, mut rsum) = (0.0, 0.0);
            for i in start..end {
                let r = rows[i];
                if binned.row(r)[c.feature] as usize <= c.bin {
                    rows[write] = r;
                    write += 1;
                    lsum += residual[r as usize];
                } else {
                    scratch.push(r);
                    rsum += residual[r as usize];
                }
            }
            rows[write..end].copy_from_slice(scratch);

            let mut parent_hist = nodes[id].hist.take();
            let (left_n, right_n) = (write - start, end - write);
            let child_depth = depth + 1;
            let (mut left_hist, mut right_hist) = (None, None);
            if can_split(left_n, child_depth) || can_split(right_n, child_depth) {
                if let Some(mut parent) = parent_hist.take() {
                    // build the smaller side, derive the other by subtraction
                    if left_n <= right_n {
                        let small = Hist::build(binned, residual, &rows[start..write]);
                        parent.subtract(&small);
                        left_hist = Some(small);
                        right_hist = Some(parent);
                    } else {
                        let small = Hist::build(binned, residual, &rows[write..end]);
                        parent.subtract(&small);
                        right_hist = Some(small);
                        left_hist = Some(parent);
                    }
                }
            }

            let left = nodes.len() as u32;
            nodes[id].split = Some((c.feature, c.threshold, left, left + 1));
            for (s, e, sum, hist, fits) in [
                (
                    start,
                    write,
                    lsum,
                    left_hist,
                    can_split(left_n, child_depth),
                ),
                (
                    write,
                    end,
                    rsum,
                    right_hist,
                    can_split(right_n, child_depth),
                ),
            ] {
                if fits {
                    next.push(nodes.len());
                }
                nodes.push(BuildNode {
                    start: s,
                    end: e,
                    sum,
                    depth: child_depth,
                    split: None,
                    hist: if fits { hist } else { None },
                });
            }
        }
        frontier = next;
    }
    debug_assert!(nodes.iter().all(|node| node.depth <= max_depth));
    nodes
}

fn assemble(nodes: &[BuildNode], id: usize) -> TreeNode {
    match nodes[id].split {
        None => TreeNode::Leaf {
            value: nodes[id].leaf_value(),
        },
        Some((feature, threshold, left, right)) => TreeNode::Split {
            feature,
            threshold,
            left: Box::new(assemble(nodes, left as usize)),
            right: Box::new(assemble(nodes, right as usize)),
        },
    }
}
