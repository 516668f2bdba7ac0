//! Sampled Galton-Watson environments, per-tree partition functions with
//! certified truncation bounds, and a Monte Carlo estimate of `Z̄_N(β)`.
//!
//! Child counts are a pure function of `(seed, path)`: every node carries a
//! 64-bit state derived from its parent's state and its own child index, so a
//! seed fixes the whole infinite tree and truncating at a different depth
//! never changes the part that is kept.

use gwz_exact::{BigInt, BigRational};
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::law::BranchingLaw;
use crate::report::{Report, Residual};

/// A rooted tree known down to a truncation depth. Nodes at `depth()` form
/// the frontier; their subtrees are unknown.
pub trait BranchingTree: Sync {
    type Node: Clone + Send;

    fn depth(&self) -> usize;
    fn root(&self) -> Self::Node;
    fn child_count(&self, node: &Self::Node) -> u32;
    fn child(&self, node: &Self::Node, index: u32) -> Self::Node;

    /// The child count of every level when all nodes of a level agree, which
    /// lets the partition function be computed once per level.
    fn uniform_levels(&self) -> Option<Vec<u32>> {
        None
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const CHILD_SALT: u64 = 0xD6E8_FEB8_6659_FD93;
const DRAW_SALT: u64 = 0xA076_1D64_78BD_642F;

/// Exact inverse-CDF sampling of a law from a uniform 64-bit word.
#[derive(Debug, Clone)]
struct Categorical {
    /// `(floor(P(Q <= q) · 2^64), q)`; the last threshold is `2^64`.
    thresholds: Vec<(u128, u32)>,
}

impl Categorical {
    fn new(law: &BranchingLaw) -> Self {
        let scale = BigInt::from(1u128 << 64);
        let mut cum = BigRational::zero();
        let mut thresholds = Vec::with_capacity(law.entries().len());
        for (q, p) in law.entries() {
            cum += p;
            let t = (&cum * BigRational::from_integer(scale.clone()))
                .floor()
                .to_integer();
            thresholds.push((t.to_u128().expect("threshold fits in 65 bits"), *q));
        }
        Categorical { thresholds }
    }

    fn draw(&self, word: u64) -> u32 {
        let w = word as u128;
        self.thresholds
            .iter()
            .find(|(t, _)| w < *t)
            .map(|(_, q)| *q)
            .unwrap_or_else(|| self.thresholds.last().expect("law is nonempty").1)
    }
}

/// A Galton-Watson tree generated on demand from a seed.
#[derive(Debug, Clone)]
pub struct SampledTree {
    law: BranchingLaw,
    depth: usize,
    seed: u64,
    sampler: Categorical,
}

impl SampledTree {
    pub fn law(&self) -> &BranchingLaw {
        &self.law
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same tree, truncated at another depth.
    pub fn with_depth(&self, depth: usize) -> SampledTree {
        SampledTree {
            depth,
            ..self.clone()
        }
    }

    /// Child count of the node reached by following `path` from the root.
    pub fn child_count_at(&self, path: &[u32]) -> Result<u32> {
        Ok(self.child_count(&node_at(self, path)?))
    }

    /// Copies the first `depth` levels into an explicit arena.
    pub fn materialize(&self) -> ExplicitTree {
        ExplicitTree::from_tree(self)
    }
}

/// Draws the child counts of a tree with the given law, truncated at depth `D`.
pub fn sample_tree(law: &BranchingLaw, depth: usize, seed: u64) -> Result<SampledTree> {
    if depth < 1 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    Ok(SampledTree {
        law: law.clone(),
        depth,
        seed,
        sampler: Categorical::new(law),
    })
}

impl BranchingTree for SampledTree {
    type Node = u64;

    fn depth(&self) -> usize {
        self.depth
    }

    fn root(&self) -> u64 {
        splitmix(self.seed)
    }

    fn child_count(&self, node: &u64) -> u32 {
        self.sampler.draw(splitmix(node ^ DRAW_SALT))
    }

    fn child(&self, node: &u64, index: u32) -> u64 {
        splitmix(node ^ (index as u64 + 1).wrapping_mul(CHILD_SALT))
    }

    fn uniform_levels(&self) -> Option<Vec<u32>> {
        self.law.deterministic().map(|q| vec![q; self.depth])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ArenaNode {
    child_count: u32,
    children: Vec<usize>,
}

/// A tree stored node by node. Frontier nodes keep their child count but no
/// children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitTree {
    depth: usize,
    nodes: Vec<ArenaNode>,
}

impl ExplicitTree {
    /// Builds the tree whose node at `path` has `count(path)` children.
    pub fn from_fn(depth: usize, count: impl Fn(&[u32]) -> u32) -> Result<ExplicitTree> {
        let mut nodes = Vec::new();
        let mut path = Vec::with_capacity(depth);
        build_arena(depth, &count, &mut path, &mut nodes)?;
        Ok(ExplicitTree { depth, nodes })
    }

    pub fn from_tree<T: BranchingTree>(tree: &T) -> ExplicitTree {
        fn go<T: BranchingTree>(
            tree: &T,
            node: T::Node,
            level: usize,
            out: &mut Vec<ArenaNode>,
        ) -> usize {
            let q = tree.child_count(&node);
            let id = out.len();
            out.push(ArenaNode {
                child_count: q,
                children: Vec::new(),
            });
            if level < tree.depth() {
                let children = (0..q)
                    .map(|i| go(tree, tree.child(&node, i), level + 1, out))
                    .collect();
                out[id].children = children;
            }
            id
        }
        let mut nodes = Vec::new();
        go(tree, tree.root(), 0, &mut nodes);
        ExplicitTree {
            depth: tree.depth(),
            nodes,
        }
    }

    /// Number of stored nodes, frontier included.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A hand-built depth-5 fixture for distance checks: the root has 3 children, the
    /// first child `a_1` and its first child `a_2` have 2 each, the node
    /// `v = [0, 0, 0]` has 2, and `u, u' = [1, 0, 0], [1, 0, 1]` sit below a
    /// 3-child and then a 2-child node. Everything below `u'` is an only
    /// child. Other nodes have 2 children.
    pub fn figure() -> ExplicitTree {
        ExplicitTree::from_fn(5, |path| match path {
            [] => 3,
            [1] => 3,
            [1, 0, 1, ..] => 1,
            _ => 2,
        })
        .expect("figure tree is valid")
    }
}

fn build_arena(
    depth: usize,
    count: &impl Fn(&[u32]) -> u32,
    path: &mut Vec<u32>,
    nodes: &mut Vec<ArenaNode>,
) -> Result<usize> {
    let q = count(path);
    if q == 0 {
        return Err(Error::ZeroChildrenForbidden);
    }
    let id = nodes.len();
    nodes.push(ArenaNode {
        child_count: q,
        children: Vec::new(),
    });
    if path.len() < depth {
        let mut children = Vec::with_capacity(q as usize);
        for i in 0..q {
            path.push(i);
            children.push(build_arena(depth, count, path, nodes)?);
            path.pop();
        }
        nodes[id].children = children;
    }
    Ok(id)
}

impl BranchingTree for ExplicitTree {
    type Node = usize;

    fn depth(&self) -> usize {
        self.depth
    }

    fn root(&self) -> usize {
        0
    }

    fn child_count(&self, node: &usize) -> u32 {
        self.nodes[*node].child_count
    }

    fn child(&self, node: &usize, index: u32) -> usize {
        self.nodes[*node].children[index as usize]
    }
}

/// Follows `path` from the root, checking every index.
pub fn node_at<T: BranchingTree>(tree: &T, path: &[u32]) -> Result<T::Node> {
    if path.len() > tree.depth() {
        return Err(Error::InvalidPath(format!(
            "path of length {} exceeds depth {}",
            path.len(),
            tree.depth()
        )));
    }
    let mut node = tree.root();
    for (level, &i) in path.iter().enumerate() {
        let q = tree.child_count(&node);
        if i >= q {
            return Err(Error::InvalidPath(format!(
                "index {i} at level {level}, node has {q} children"
            )));
        }
        node = tree.child(&node, i);
    }
    Ok(node)
}

/// Number of frontier nodes.
pub fn frontier_size<T: BranchingTree>(tree: &T) -> u64 {
    fn go<T: BranchingTree>(tree: &T, node: &T::Node, level: usize) -> u64 {
        if level == tree.depth() {
            return 1;
        }
        (0..tree.child_count(node))
            .map(|i| go(tree, &tree.child(node, i), level + 1))
            .sum()
    }
    if let Some(levels) = tree.uniform_levels() {
        return levels.iter().map(|&q| q as u64).product();
    }
    go(tree, &tree.root(), 0)
}

/// `μ(T(v*))` for the least common ancestor `v*` of two frontier paths:
/// the product of `1/Q(a)` over the strict ancestors of `v*`, which is `1`
/// when the paths split at the root.
pub fn tree_distance<T: BranchingTree>(tree: &T, a: &[u32], b: &[u32]) -> Result<f64> {
    for p in [a, b] {
        if p.len() != tree.depth() {
            return Err(Error::InvalidPath(format!(
                "leaf paths have length {}, got {}",
                tree.depth(),
                p.len()
            )));
        }
    }
    node_at(tree, a)?;
    node_at(tree, b)?;
    let mut node = tree.root();
    // Integers below 2^53 are exact in f64, so 1/den is correctly rounded
    // for any realistic depth.
    let mut den = 1.0f64;
    for (&i, &j) in a.iter().zip(b) {
        if i != j {
            break;
        }
        den *= tree.child_count(&node) as f64;
        node = tree.child(&node, i);
    }
    Ok(1.0 / den)
}

/// A certified interval for a per-tree value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
}

impl Enclosure {
    pub fn exact(x: f64) -> Enclosure {
        Enclosure { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Interval coefficient vectors `z(0..=N)` with nonnegative entries.
#[derive(Debug, Clone)]
struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    fn frontier(n: usize, beta: f64) -> Bounds {
        let mut lo = vec![0.0; n + 1];
        let mut hi = vec![0.0; n + 1];
        let mut inv_fact = 1.0;
        for m in 0..=n {
            if m > 0 {
                inv_fact /= m as f64;
            }
            hi[m] = inv_fact;
            // 0 ≤ δ^β ≤ 1, with equality at β = 0
            lo[m] = if m <= 1 || beta == 0.0 { inv_fact } else { 0.0 };
        }
        Bounds { lo, hi }
    }

    fn unit(n: usize) -> Bounds {
        let mut lo = vec![0.0; n + 1];
        lo[0] = 1.0;
        Bounds { hi: lo.clone(), lo }
    }

    fn weighted(&self, weights: &[f64]) -> Bounds {
        Bounds {
            lo: self.lo.iter().zip(weights).map(|(z, w)| z * w).collect(),
            hi: self.hi.iter().zip(weights).map(|(z, w)| z * w).collect(),
        }
    }

    fn convolve(&self, other: &Bounds) -> Bounds {
        Bounds {
            lo: convolve(&self.lo, &other.lo),
            hi: convolve(&self.hi, &other.hi),
        }
    }

    /// `z(0) = z(1) = 1` holds exactly; pin it against rounding.
    fn pin_low_orders(mut self) -> Bounds {
        for m in 0..self.lo.len().min(2) {
            self.lo[m] = 1.0;
            self.hi[m] = 1.0;
        }
        self
    }
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    for (i, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b[..n - i].iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `q^{-m - β binom(m,2)}` for `m = 0..=N`.
fn child_weights(q: u32, n: usize, beta: f64) -> Vec<f64> {
    let qf = q as f64;
    (0..=n)
        .map(|m| {
            let pairs = (m * m.saturating_sub(1) / 2) as f64;
            qf.powf(-(m as f64) - beta * pairs)
        })
        .collect()
}

struct Evaluator {
    n: usize,
    beta: f64,
    weights: Vec<Option<Vec<f64>>>,
    frontier: Bounds,
    budget: u64,
    visited: u64,
}

impl Evaluator {
    fn new(n: usize, beta: f64, budget: u64) -> Evaluator {
        Evaluator {
            n,
            beta,
            weights: Vec::new(),
            frontier: Bounds::frontier(n, beta),
            budget,
            visited: 0,
        }
    }

    fn weights(&mut self, q: u32) -> Vec<f64> {
        let idx = q as usize;
        if self.weights.len() <= idx {
            self.weights.resize(idx + 1, None);
        }
        let (n, beta) = (self.n, self.beta);
        self.weights[idx]
            .get_or_insert_with(|| child_weights(q, n, beta))
            .clone()
    }

    /// One step up: a node with `q` children whose bounds are `children`.
    fn combine<'a>(&mut self, q: u32, children: impl Iterator<Item = &'a Bounds>) -> Bounds {
        let w = self.weights(q);
        let mut acc = Bounds::unit(self.n);
        for c in children {
            acc = acc.convolve(&c.weighted(&w));
        }
        acc.pin_low_orders()
    }

    fn node<T: BranchingTree>(&mut self, tree: &T, node: &T::Node, level: usize) -> Option<Bounds> {
        self.visited += 1;
        if self.visited > self.budget {
            return None;
        }
        if level == tree.depth() {
            return Some(self.frontier.clone());
        }
        let q = tree.child_count(node);
        let mut children = Vec::with_capacity(q as usize);
        for i in 0..q {
            children.push(self.node(tree, &tree.child(node, i), level + 1)?);
        }
        Some(self.combine(q, children.iter()))
    }

    fn levels(&mut self, levels: &[u32]) -> Option<Bounds> {
        let mut z = self.frontier.clone();
        for &q in levels.iter().rev() {
            self.visited += 1;
            if self.visited > self.budget {
                return None;
            }
            z = self.combine(q, std::iter::repeat_n(&z, q as usize));
        }
        Some(z)
    }

    fn run<T: BranchingTree>(&mut self, tree: &T) -> Option<Bounds> {
        match tree.uniform_levels() {
            Some(levels) => self.levels(&levels),
            None => self.node(tree, &tree.root(), 0),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta < 0.0 || beta.is_nan() {
        return Err(Error::NegativeBetaUnsupported { beta });
    }
    Ok(())
}

/// Enclosures of `Z_T(n, β)` for `n = 0..=N` on the infinite tree whose first
/// `D` levels are `tree`.
pub fn tree_partition_all<T: BranchingTree>(
    tree: &T,
    n: usize,
    beta: f64,
) -> Result<Vec<Enclosure>> {
    check_beta(beta)?;
    let b = Evaluator::new(n, beta, u64::MAX)
        .run(tree)
        .expect("unbounded budget");
    Ok(b.lo
        .iter()
        .zip(&b.hi)
        .map(|(&lo, &hi)| Enclosure { lo, hi })
        .collect())
}

/// Enclosure of `Z_T(N, β)`.
pub fn tree_partition<T: BranchingTree>(tree: &T, n: usize, beta: f64) -> Result<Enclosure> {
    Ok(*tree_partition_all(tree, n, beta)?
        .last()
        .expect("N + 1 entries"))
}

/// Monte Carlo estimate of `Z̄_N(β)` from enclosure midpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    /// Largest truncation width over the sampled trees, reported apart from
    /// the statistical error.
    pub enclosure_width_max: f64,
    /// Truncation depth; the largest one used under adaptive depth.
    pub depth: usize,
    pub seed: u64,
}

/// Seed of the `i`-th tree of a run.
pub fn sample_seed(seed: u64, i: u64) -> u64 {
    splitmix(seed ^ splitmix(i))
}

/// Truncation control for [`mc_mean_z_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveDepth {
    pub start: usize,
    /// Target enclosure width.
    pub tol: f64,
    /// Maximum nodes visited for one tree at one depth.
    pub node_budget: u64,
}

impl Default for AdaptiveDepth {
    fn default() -> Self {
        AdaptiveDepth {
            start: 4,
            tol: 1e-6,
            node_budget: 10_000_000,
        }
    }
}

struct TreeResult {
    enclosure: Enclosure,
    depth: usize,
}

fn estimate(results: &[TreeResult], seed: u64) -> McEstimate {
    // Welford, in sample order so the result does not depend on scheduling.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, r) in results.iter().enumerate() {
        let x = r.enclosure.midpoint();
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = results.len();
    let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    McEstimate {
        mean,
        std_error: (var.max(0.0) / n as f64).sqrt(),
        samples: n,
        enclosure_width_max: results
            .iter()
            .map(|r| r.enclosure.width())
            .fold(0.0, f64::max),
        depth: results.iter().map(|r| r.depth).max().unwrap_or(0),
        seed,
    }
}

fn check_mc_args(n_samples: usize, beta: f64) -> Result<()> {
    check_beta(beta)?;
    if n_samples < 2 {
        return Err(Error::InvalidArgument(
            "at least 2 samples are needed".into(),
        ));
    }
    Ok(())
}

/// Averages enclosure midpoints of `Z_T(N, β)` over independent trees
/// truncated at depth `D`.
pub fn mc_mean_z(
    law: &BranchingLaw,
    n: usize,
    beta: f64,
    n_samples: usize,
    depth: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_mc_args(n_samples, beta)?;
    let base = sample_tree(law, depth, seed)?;
    let results: Vec<TreeResult> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let tree = SampledTree {
                seed: sample_seed(seed, i),
                ..base.clone()
            };
            let enclosure = tree_partition(&tree, n, beta)?;
            Ok(TreeResult { enclosure, depth })
        })
        .collect::<Result<_>>()?;
    Ok(estimate(&results, seed))
}

/// Enclosure of one tree, doubling the depth until the width drops below
/// `tol` or the next depth would exceed the node budget.
fn adaptive_enclosure(
    tree: &SampledTree,
    n: usize,
    beta: f64,
    ctl: &AdaptiveDepth,
) -> Result<TreeResult> {
    let mut depth = ctl.start.max(1);
    let mut best: Option<TreeResult> = None;
    loop {
        let t = tree.with_depth(depth);
        match Evaluator::new(n, beta, ctl.node_budget).run(&t) {
            Some(b) => {
                let enclosure = Enclosure {
                    lo: b.lo[n],
                    hi: b.hi[n],
                };
                let done = enclosure.width() < ctl.tol;
                best = Some(TreeResult { enclosure, depth });
                if done {
                    break;
                }
            }
            None => break,
        }
        depth *= 2;
    }
    best.ok_or_else(|| {
        Error::InvalidArgument(format!(
            "node budget {} too small for starting depth {}",
            ctl.node_budget, ctl.start
        ))
    })
}

/// As [`mc_mean_z`], choosing the depth per tree under [`AdaptiveDepth`].
pub fn mc_mean_z_adaptive(
    law: &BranchingLaw,
    n: usize,
    beta: f64,
    n_samples: usize,
    seed: u64,
    ctl: &AdaptiveDepth,
) -> Result<McEstimate> {
    check_mc_args(n_samples, beta)?;
    let base = sample_tree(law, ctl.start.max(1), seed)?;
    let results: Vec<TreeResult> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let tree = SampledTree {
                seed: sample_seed(seed, i),
                ..base.clone()
            };
            adaptive_enclosure(&tree, n, beta, ctl)
        })
        .collect::<Result<_>>()?;
    Ok(estimate(&results, seed))
}

/// A uniformly random frontier path: each step picks a child uniformly, so
/// paths are distributed according to `μ`.
pub fn random_leaf_path<T: BranchingTree, R: Rng>(tree: &T, rng: &mut R) -> Vec<u32> {
    let mut node = tree.root();
    let mut path = Vec::with_capacity(tree.depth());
    for _ in 0..tree.depth() {
        let i = rng.gen_range(0..tree.child_count(&node));
        path.push(i);
        node = tree.child(&node, i);
    }
    path
}

fn triple_problems<T: BranchingTree>(tree: &T, p: [&[u32]; 3]) -> Result<Vec<&'static str>> {
    let d = |i: usize, j: usize| tree_distance(tree, p[i], p[j]);
    let (xy, yz, xz) = (d(0, 1)?, d(1, 2)?, d(0, 2)?);
    let mut problems = Vec::new();
    if xy != d(1, 0)? {
        problems.push("asymmetric");
    }
    if d(0, 0)? > xy {
        problems.push("self-distance exceeds distance");
    }
    if xz > xy.max(yz) || xy > xz.max(yz) || yz > xy.max(xz) {
        problems.push("strong triangle inequality");
    }
    Ok(problems)
}

fn violation(k: usize, problems: &[&str], p: [&[u32]; 3]) -> Residual {
    Residual {
        order: k,
        zero: false,
        value: format!("{}: {:?}", problems.join(", "), p),
    }
}

/// Checks symmetry, `δ(x,x) <= δ(x,y)` and the strong triangle inequality on
/// random triples of frontier paths. Only violations are listed.
pub fn verify_ultrametric<T: BranchingTree>(
    tree: &T,
    n_triples: usize,
    seed: u64,
) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut residuals = Vec::new();
    for k in 0..n_triples {
        let p: Vec<Vec<u32>> = (0..3).map(|_| random_leaf_path(tree, &mut rng)).collect();
        let triple = [p[0].as_slice(), p[1].as_slice(), p[2].as_slice()];
        let problems = triple_problems(tree, triple)?;
        if !problems.is_empty() {
            residuals.push(violation(k, &problems, triple));
        }
    }
    Ok(Report::from_residuals("ultrametric", residuals))
}

/// Every frontier path, in lexicographic order.
pub fn leaf_paths<T: BranchingTree>(tree: &T) -> Vec<Vec<u32>> {
    fn go<T: BranchingTree>(
        tree: &T,
        node: &T::Node,
        path: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if path.len() == tree.depth() {
            out.push(path.clone());
            return;
        }
        for i in 0..tree.child_count(node) {
            path.push(i);
            go(tree, &tree.child(node, i), path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    go(tree, &tree.root(), &mut Vec::new(), &mut out);
    out
}

/// As [`verify_ultrametric`], over all ordered triples of frontier paths.
/// Cubic in the number of leaves; meant for small trees.
pub fn verify_ultrametric_exhaustive<T: BranchingTree>(tree: &T) -> Result<Report> {
    let paths = leaf_paths(tree);
    let mut residuals = Vec::new();
    let mut k = 0;
    for a in &paths {
        for b in &paths {
            for c in &paths {
                let triple = [a.as_slice(), b.as_slice(), c.as_slice()];
                let problems = triple_problems(tree, triple)?;
                if !problems.is_empty() {
                    residuals.push(violation(k, &problems, triple));
                }
                k += 1;
            }
        }
    }
    Ok(Report::from_residuals("ultrametric_exhaustive", residuals))
}

/// `μ(T(v))` for the node at `path`, as an exact fraction `1/den`.
pub fn subtree_mass<T: BranchingTree>(tree: &T, path: &[u32]) -> Result<BigRational> {
    node_at(tree, path)?;
    let mut node = tree.root();
    let mut den = BigInt::from(1u32);
    for &i in path {
        den *= tree.child_count(&node);
        node = tree.child(&node, i);
    }
    Ok(BigRational::new(BigInt::from(1u32), den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanrec::mean_z_table;
    use gwz_exact::rat;

    fn mixed() -> BranchingLaw {
        BranchingLaw::from_fractions(&[(2, 1, 2), (3, 1, 2)]).unwrap()
    }

    #[test]
    fn regular_tree_has_q_pow_d_leaves() {
        for q in [2, 3, 4] {
            let tree = sample_tree(&BranchingLaw::regular(q).unwrap(), 4, 7).unwrap();
            assert_eq!(frontier_size(&tree), (q as u64).pow(4));
            assert_eq!(leaf_paths(&tree).len() as u64, (q as u64).pow(4));
            let arena = tree.materialize();
            assert_eq!(frontier_size(&arena), (q as u64).pow(4));
        }
    }

    #[test]
    fn sampling_is_deterministic_and_depth_consistent() {
        let a = sample_tree(&mixed(), 6, 99).unwrap();
        let b = sample_tree(&mixed(), 6, 99).unwrap();
        assert_eq!(a.materialize(), b.materialize());
        let deep = a.with_depth(9);
        for path in leaf_paths(&a.with_depth(4)) {
            assert_eq!(
                a.child_count_at(&path).unwrap(),
                deep.child_count_at(&path).unwrap()
            );
        }
        let other = sample_tree(&mixed(), 6, 100).unwrap();
        assert_ne!(a.materialize(), other.materialize());
    }

    #[test]
    fn root_child_count_frequency() {
        let law = mixed();
        let n = 100_000u64;
        let twos = (0..n)
            .filter(|&s| {
                sample_tree(&law, 1, s)
                    .unwrap()
                    .child_count_at(&[])
                    .unwrap()
                    == 2
            })
            .count();
        let frac = twos as f64 / n as f64;
        assert!((frac - 0.5).abs() <= 0.005, "{frac}");
    }

    #[test]
    fn categorical_thresholds_are_exact() {
        let law = BranchingLaw::from_fractions(&[(2, 1, 4), (3, 3, 4)]).unwrap();
        let c = Categorical::new(&law);
        assert_eq!(c.thresholds, vec![(1u128 << 62, 2), (1u128 << 64, 3)]);
        assert_eq!(c.draw((1u64 << 62) - 1), 2);
        assert_eq!(c.draw(1u64 << 62), 3);
        assert_eq!(c.draw(u64::MAX), 3);
    }

    #[test]
    fn figure_distances() {
        let tree = ExplicitTree::figure();
        let v = tree_distance(&tree, &[0, 0, 0, 0, 1], &[0, 0, 0, 1, 0]).unwrap();
        assert_eq!(v, 1.0 / 12.0);
        assert_eq!(subtree_mass(&tree, &[0, 0, 0]).unwrap(), rat(1, 12));
        assert_eq!(subtree_mass(&tree, &[1, 0, 0]).unwrap(), rat(1, 18));
        assert_eq!(subtree_mass(&tree, &[1, 0, 1]).unwrap(), rat(1, 18));
        assert_eq!(
            tree_distance(&tree, &[0, 1, 1, 0, 0], &[2, 0, 0, 0, 0]).unwrap(),
            1.0
        );
        // below u' every node is an only child: δ(u', u') = μ(T(u')) > 0
        let atom = [1, 0, 1, 0, 0];
        assert_eq!(tree_distance(&tree, &atom, &atom).unwrap(), 1.0 / 18.0);
        // an ordinary point: the product over all levels
        let p = [0, 0, 0, 0, 0];
        assert_eq!(tree_distance(&tree, &p, &p).unwrap(), 1.0 / 48.0);
    }

    #[test]
    fn invalid_paths_rejected() {
        let tree = ExplicitTree::figure();
        assert!(matches!(
            tree_distance(&tree, &[0, 0], &[0, 0]),
            Err(Error::InvalidPath(_))
        ));
        assert!(matches!(
            tree_distance(&tree, &[0, 0, 0, 0, 2], &[0, 0, 0, 0, 0]),
            Err(Error::InvalidPath(_))
        ));
        assert!(matches!(
            tree_distance(&tree, &[1, 0, 1, 1, 0], &[0, 0, 0, 0, 0]),
            Err(Error::InvalidPath(_))
        ));
    }

    #[test]
    fn ultrametric_on_samples_and_exhaustively() {
        let regular = sample_tree(&BranchingLaw::regular(2).unwrap(), 6, 1).unwrap();
        assert!(verify_ultrametric(&regular, 10_000, 5).unwrap().pass);
        for tree in [
            sample_tree(&BranchingLaw::regular(2).unwrap(), 4, 3)
                .unwrap()
                .materialize(),
            sample_tree(&mixed(), 3, 11).unwrap().materialize(),
            ExplicitTree::figure(),
        ] {
            assert!(verify_ultrametric_exhaustive(&tree).unwrap().pass);
        }
    }

    #[test]
    fn regular_distances_are_powers() {
        let tree = sample_tree(&BranchingLaw::regular(3).unwrap(), 3, 0).unwrap();
        let paths = leaf_paths(&tree);
        for a in &paths {
            for b in &paths {
                let d = tree_distance(&tree, a, b).unwrap();
                let j = (-d.log(3.0)).round();
                assert!((d - 3f64.powf(-j)).abs() < 1e-15 && j <= 3.0);
            }
        }
    }

    #[test]
    fn enclosure_examples() {
        let tree = sample_tree(&mixed(), 5, 4).unwrap();
        for beta in [0.0, 1.0, 3.0] {
            for n in 0..2 {
                assert_eq!(
                    tree_partition(&tree, n, beta).unwrap(),
                    Enclosure::exact(1.0)
                );
            }
        }
        let at_zero = tree_partition(&tree, 2, 0.0).unwrap();
        assert!(at_zero.contains(0.5) && at_zero.width() < 1e-15);

        let regular = sample_tree(&BranchingLaw::regular(2).unwrap(), 1, 0).unwrap();
        for depth in [1, 4, 8, 12] {
            let e = tree_partition(&regular.with_depth(depth), 2, 1.0).unwrap();
            assert!(e.contains(1.0 / 3.0), "D = {depth}: {e:?}");
            assert!(
                e.width() <= 4f64.powi(-(depth as i32)),
                "D = {depth}: {e:?}"
            );
        }
        assert!(matches!(
            tree_partition(&tree, 2, -0.5),
            Err(Error::NegativeBetaUnsupported { .. })
        ));
    }

    #[test]
    fn collapsed_levels_match_full_walk() {
        let tree = sample_tree(&BranchingLaw::regular(3).unwrap(), 5, 0).unwrap();
        let full = tree_partition_all(&tree.materialize(), 5, 0.7).unwrap();
        let collapsed = tree_partition_all(&tree, 5, 0.7).unwrap();
        for (a, b) in full.iter().zip(&collapsed) {
            assert!((a.lo - b.lo).abs() < 1e-15 && (a.hi - b.hi).abs() < 1e-15);
        }
    }

    #[test]
    fn regular_enclosures_contain_exact_value() {
        for q in [2, 3, 5] {
            let law = BranchingLaw::regular(q).unwrap();
            let table = mean_z_table(&law, 6).unwrap();
            let tree = sample_tree(&law, 1, 0).unwrap();
            for beta in [0.5, 1.0, 2.0] {
                for depth in [4, 8, 12] {
                    let encl = tree_partition_all(&tree.with_depth(depth), 6, beta).unwrap();
                    for (n, e) in encl.iter().enumerate() {
                        let exact = table.values()[n].eval_beta(beta, 1e-12).unwrap();
                        let slack = 1e-14 * exact.abs();
                        assert!(
                            e.lo - slack <= exact && exact <= e.hi + slack,
                            "q = {q}, β = {beta}, D = {depth}, N = {n}: {exact} not in {e:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn width_shrinks_with_depth() {
        for seed in 0..5 {
            let tree = sample_tree(&mixed(), 1, seed).unwrap();
            for beta in [1.0, 2.0] {
                let mut prev = f64::INFINITY;
                for depth in 1..=8 {
                    let w = tree_partition(&tree.with_depth(depth), 2, beta)
                        .unwrap()
                        .width();
                    assert!(
                        w <= prev / 2.0,
                        "seed {seed}, β = {beta}, D = {depth}: {w} vs {prev}"
                    );
                    prev = w;
                }
            }
        }
    }

    #[test]
    fn deterministic_environment_has_no_variance() {
        let law = BranchingLaw::regular(2).unwrap();
        let est = mc_mean_z(&law, 3, 1.0, 50, 10, 42).unwrap();
        let single = tree_partition(&sample_tree(&law, 10, 0).unwrap(), 3, 1.0).unwrap();
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.mean, single.midpoint());
        assert_eq!(est.enclosure_width_max, single.width());
    }

    #[test]
    fn beta_zero_estimate_is_inverse_factorial() {
        let est = mc_mean_z(&mixed(), 4, 0.0, 200, 5, 3).unwrap();
        assert!((est.mean - 1.0 / 24.0).abs() < 1e-14);
        assert!(est.std_error < 1e-14);
    }

    #[test]
    fn estimator_matches_symbolic_value() {
        let est = mc_mean_z(&mixed(), 2, 1.0, 4000, 8, 42).unwrap();
        let exact = 21.0 / 59.0;
        assert!(
            (est.mean - exact).abs() <= 3.0 * est.std_error + est.enclosure_width_max,
            "{est:?}"
        );
        assert_eq!(est, mc_mean_z(&mixed(), 2, 1.0, 4000, 8, 42).unwrap());
    }

    #[test]
    fn adaptive_depth_meets_tolerance() {
        let ctl = AdaptiveDepth {
            start: 2,
            tol: 1e-5,
            node_budget: 1_000_000,
        };
        let est = mc_mean_z_adaptive(&mixed(), 3, 1.0, 200, 9, &ctl).unwrap();
        assert!(est.enclosure_width_max < 1e-5, "{est:?}");
        assert!(est.depth >= 4);
        let tight = AdaptiveDepth {
            // a depth-2 tree has at most 1 + 3 + 9 nodes; depth 4 does not fit
            node_budget: 13,
            ..ctl
        };
        let capped = mc_mean_z_adaptive(&mixed(), 3, 1.0, 20, 9, &tight).unwrap();
        assert_eq!(capped.depth, 2);
        assert!(capped.enclosure_width_max > 1e-5);
        let hopeless = AdaptiveDepth {
            node_budget: 2,
            ..ctl
        };
        assert!(mc_mean_z_adaptive(&mixed(), 3, 1.0, 20, 9, &hopeless).is_err());
    }

    #[test]
    fn mc_argument_checks() {
        assert!(matches!(
            mc_mean_z(&mixed(), 2, -1.0, 10, 3, 0),
            Err(Error::NegativeBetaUnsupported { .. })
        ));
        assert!(matches!(
            mc_mean_z(&mixed(), 2, 1.0, 1, 3, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            sample_tree(&mixed(), 0, 0),
            Err(Error::InvalidArgument(_))
        ));
    }
}
