//! Components of `G(n, p)` with `p = 1/n + lambda n^(-4/3)`.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::points::PointSample;
use crate::records::{Sampler, SimulationRecord};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub n: u64,
    pub lambda: f64,
    pub seed: u64,
    pub replications: u64,
}

impl WindowConfig {
    pub fn p(&self) -> f64 {
        let n = self.n as f64;
        1.0 / n + self.lambda * n.powf(-4.0 / 3.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1000 || self.n > u32::MAX as u64 {
            return Err(invalid(format!("n must be in [1000, 2^32), got {}", self.n)));
        }
        let p = self.p();
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid(format!("edge probability {p} outside (0, 1)")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub size: u64,
    pub edges: u64,
    /// `edges - size + 1`
    pub complexity: u64,
    /// `n^(-2/3) size`
    pub scaled_size: f64,
}

/// `n^(2/3)`, exact when `n` is a perfect cube.
pub fn n_two_thirds(n: u64) -> f64 {
    let c = (n as f64).cbrt();
    c * c
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    edges: Vec<u64>,
}

impl UnionFind {
    fn new(n: u32) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n as usize],
            edges: vec![0; n as usize],
        }
    }

    fn find(&mut self, v: u32) -> u32 {
        let mut root = v;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut v = v;
        while self.parent[v as usize] != root {
            let next = self.parent[v as usize];
            self.parent[v as usize] = root;
            v = next;
        }
        root
    }

    fn add_edge(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            self.edges[ra as usize] += 1;
            return;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        self.edges[big as usize] += self.edges[small as usize] + 1;
    }
}

/// Components of the graph on `0..n` with the given edges, largest first.
pub fn components_from_edges<I: IntoIterator<Item = (u32, u32)>>(n: u32, edges: I) -> Vec<ComponentSummary> {
    let mut uf = UnionFind::new(n);
    for (a, b) in edges {
        uf.add_edge(a, b);
    }
    let scale = n_two_thirds(n as u64);
    let mut out: Vec<ComponentSummary> = (0..n)
        .filter(|&v| uf.parent[v as usize] == v)
        .map(|v| {
            let size = uf.size[v as usize] as u64;
            let edges = uf.edges[v as usize];
            ComponentSummary {
                size,
                edges,
                complexity: edges + 1 - size,
                scaled_size: size as f64 / scale,
            }
        })
        .collect();
    out.sort_by(|a, b| b.size.cmp(&a.size).then(b.edges.cmp(&a.edges)));
    out
}

/// Edges of `G(n, p)`: the pairs `(v, w)`, `w < v`, in lexicographic order,
/// visited by geometric jumps so the work is proportional to the edge count.
fn random_edges<R: Rng>(n: u32, p: f64, rng: &mut R) -> impl Iterator<Item = (u32, u32)> + '_ {
    // inverse transform for the number of failures before a success
    let ln_q = (-p).ln_1p();
    let (mut v, mut w) = (1u64, -1i64);
    let n = n as u64;
    std::iter::from_fn(move || {
        let u = 1.0 - rng.random::<f64>();
        w += 1 + (u.ln() / ln_q).floor() as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        (v < n).then_some((v as u32, w as u32))
    })
}

/// One draw of the component structure, for replication `replication`.
pub fn sample_replication(cfg: &WindowConfig, replication: u64) -> Result<Vec<ComponentSummary>> {
    cfg.validate()?;
    let mut rng = substream(cfg.seed, replication);
    let n = cfg.n as u32;
    Ok(components_from_edges(n, random_edges(n, cfg.p(), &mut rng)))
}

/// The first draw of `cfg`.
pub fn sample_components(cfg: &WindowConfig) -> Result<Vec<ComponentSummary>> {
    sample_replication(cfg, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalStats {
    pub eps: f64,
    /// Total scaled size of the components with `xi >= eps`.
    pub z_eps: f64,
    /// Their number.
    pub chi_eps: u64,
    /// The same with `xi > eps`.
    pub z_eps_open: f64,
    pub chi_eps_open: u64,
    /// Scaled sizes `>= eps` labelled by complexity.
    pub labeled_points: PointSample,
    pub per_label_counts: BTreeMap<u64, u64>,
}

pub fn empirical_stats(components: &[ComponentSummary], eps: f64, n: u64) -> EmpiricalStats {
    let threshold = eps * n_two_thirds(n);
    let mut stats = EmpiricalStats {
        eps,
        z_eps: 0.0,
        chi_eps: 0,
        z_eps_open: 0.0,
        chi_eps_open: 0,
        labeled_points: PointSample::default(),
        per_label_counts: BTreeMap::new(),
    };
    let mut pairs = Vec::new();
    for c in components {
        let size = c.size as f64;
        if size >= threshold {
            stats.z_eps += c.scaled_size;
            stats.chi_eps += 1;
            pairs.push((c.scaled_size, c.complexity));
            *stats.per_label_counts.entry(c.complexity).or_insert(0) += 1;
        }
        if size > threshold {
            stats.z_eps_open += c.scaled_size;
            stats.chi_eps_open += 1;
        }
    }
    stats.labeled_points = PointSample::labelled(pairs);
    stats
}

/// All replications of `cfg`, summarized at `eps`, in replication order.
pub fn simulate(cfg: &WindowConfig, eps: f64) -> Result<Vec<SimulationRecord>> {
    cfg.validate()?;
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let comps = sample_replication(cfg, rep)?;
            let s = empirical_stats(&comps, eps, cfg.n);
            Ok(SimulationRecord {
                sampler: Sampler::Graph,
                seed: cfg.seed,
                replication: rep,
                n: Some(cfg.n),
                lambda: cfg.lambda,
                eps,
                z_eps: s.z_eps,
                chi_eps: s.chi_eps,
                points: s.labeled_points,
            })
        })
        .collect()
}

/// Expected numbers of tree and unicyclic components of each order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeUnicyclicExpectation {
    pub k: u64,
    pub trees: f64,
    pub unicyclic: f64,
}

/// `ln` of the number of connected unicyclic graphs on `k` labelled vertices,
/// `1/2 sum_{r=3}^{k} (k)_r k^(k-r-1)`; `-inf` for `k < 3`.
pub fn ln_unicyclic_count(k: u64) -> f64 {
    if k < 3 {
        return f64::NEG_INFINITY;
    }
    let kf = k as f64;
    let ln_k = kf.ln();
    let mut falling = kf.ln() + (kf - 1.0).ln();
    let mut terms = Vec::with_capacity(k as usize);
    for r in 3..=k {
        falling += (kf - (r - 1) as f64).ln();
        terms.push(falling + (kf - r as f64 - 1.0) * ln_k);
    }
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln() - std::f64::consts::LN_2
}

pub fn tree_unicyclic_expectations(n: u64, lambda: f64, k_max: u64) -> Result<Vec<TreeUnicyclicExpectation>> {
    let cfg = WindowConfig {
        n,
        lambda,
        seed: 0,
        replications: 1,
    };
    cfg.validate()?;
    if k_max < 1 || k_max as f64 > n_two_thirds(n) {
        return Err(invalid(format!("k_max must be in [1, n^(2/3)], got {k_max}")));
    }
    let p = cfg.p();
    let (ln_p, ln_q) = (p.ln(), (-p).ln_1p());
    let nf = n as f64;
    let mut ln_binom = 0.0;
    let mut out = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        let kf = k as f64;
        ln_binom += (nf - kf + 1.0).ln() - kf.ln();
        // absent pairs: between the k vertices and the rest, and inside apart from the k-1 tree edges
        let absent = (nf - kf) * kf + kf * (kf - 1.0) / 2.0 - kf + 1.0;
        let ln_t = ln_binom + (kf - 2.0) * kf.ln() + (kf - 1.0) * ln_p + absent * ln_q;
        let ln_u = ln_binom + ln_unicyclic_count(k) + kf * ln_p + (absent - 1.0) * ln_q;
        out.push(TreeUnicyclicExpectation {
            k,
            trees: ln_t.exp(),
            unicyclic: ln_u.exp(),
        });
    }
    Ok(out)
}

/// Complexity labels of the components with scaled size in `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelFrequencies {
    pub a: f64,
    pub b: f64,
    pub counts: BTreeMap<u64, u64>,
    pub total: u64,
}

impl LabelFrequencies {
    pub const MIN_SAMPLES: u64 = 100;

    pub fn from_records(records: &[SimulationRecord], a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > a) {
            return Err(invalid("window must satisfy 0 < a < b"));
        }
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for r in records {
            if r.eps > a {
                return Err(invalid("records were cut above the window"));
            }
            for (_, label) in r.points.in_window(a, b) {
                let label = label.ok_or_else(|| invalid("records carry no labels"))?;
                *counts.entry(label).or_insert(0) += 1;
                total += 1;
            }
        }
        if total < Self::MIN_SAMPLES {
            return Err(Error::InsufficientSamples {
                observed: total as usize,
                required: Self::MIN_SAMPLES as usize,
            });
        }
        Ok(LabelFrequencies { a, b, counts, total })
    }

    pub fn frequency(&self, label: u64) -> f64 {
        *self.counts.get(&label).unwrap_or(&0) as f64 / self.total as f64
    }

    /// Binomial standard error of [`Self::frequency`].
    pub fn frequency_se(&self, label: u64) -> f64 {
        let f = self.frequency(label);
        (f * (1.0 - f) / self.total as f64).sqrt()
    }
}

/// Label frequencies among graph components with scaled size in `[a, b]`.
pub fn label_frequency_check(cfg: &WindowConfig, a: f64, b: f64) -> Result<LabelFrequencies> {
    if !(a > 0.0 && b > a) {
        return Err(invalid("window must satisfy 0 < a < b"));
    }
    LabelFrequencies::from_records(&simulate(cfg, a)?, a, b)
}
