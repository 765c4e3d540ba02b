//! Merging the data graph with must-link / cannot-link constraints.
//!
//! Unweighted constraints get the degree-aware weight
//! `d_u d_v / (d_min d_max)`. The must-link graph is added to the data graph
//! to form `G`; the cannot-link graph plus a small multiple of the demand
//! graph `K` forms `H`. The `K` term keeps `H` well-defined when there are
//! few or no cannot-link constraints, and with no constraints at all the
//! pencil `(L_G, L_H)` reduces to ordinary normalized spectral clustering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DegreeVector, WeightedGraph};
use crate::operators::LaplacianOperator;

/// One pairwise constraint; `weight = None` requests automatic weighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub u: usize,
    pub v: usize,
    pub weight: Option<f64>,
}

impl Constraint {
    pub fn new(u: usize, v: usize) -> Self {
        Constraint { u, v, weight: None }
    }

    pub fn weighted(u: usize, v: usize, weight: f64) -> Self {
        Constraint {
            u,
            v,
            weight: Some(weight),
        }
    }

    fn key(&self) -> (usize, usize) {
        (self.u.min(self.v), self.u.max(self.v))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub must_link: Vec<Constraint>,
    pub cannot_link: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.must_link.len() + self.cannot_link.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks ids, self-pairs, explicit weights and ML/CL conflicts.
    pub fn validate(&self, n: usize) -> Result<()> {
        for c in self.must_link.iter().chain(&self.cannot_link) {
            for vertex in [c.u, c.v] {
                if vertex >= n {
                    return Err(Error::VertexOutOfRange { vertex, n });
                }
            }
            if c.u == c.v {
                return Err(Error::SelfLoop(c.u));
            }
            if let Some(w) = c.weight {
                if !w.is_finite() || w <= 0.0 {
                    return Err(Error::InvalidWeight {
                        u: c.u,
                        v: c.v,
                        weight: w,
                    });
                }
            }
        }
        let mut ml: Vec<_> = self.must_link.iter().map(Constraint::key).collect();
        ml.sort_unstable();
        for c in &self.cannot_link {
            let (u, v) = c.key();
            if ml.binary_search(&(u, v)).is_ok() {
                return Err(Error::ConflictingConstraint { u, v });
            }
        }
        Ok(())
    }
}

/// How the demand graph is scaled inside `H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemandNormalization {
    /// Scale `K` so its smallest edge weight is 1, then divide by `n`.
    #[default]
    MinEdgeUnit,
    /// Use `K / n` as is.
    Unnormalized,
}

impl DemandNormalization {
    /// Coefficient of `L_K` inside `L_H` for degrees `d`.
    pub fn scale(self, d: &DegreeVector) -> f64 {
        let n = d.len() as f64;
        match self {
            DemandNormalization::Unnormalized => 1.0 / n,
            DemandNormalization::MinEdgeUnit => {
                // smallest K_ij with i ≠ j comes from the two smallest degrees
                let (mut a, mut b) = (f64::INFINITY, f64::INFINITY);
                for &x in d.as_slice() {
                    if x < a {
                        b = a;
                        a = x;
                    } else if x < b {
                        b = x;
                    }
                }
                let min_k = a * b / d.vol();
                1.0 / (n * min_k)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MergeOptions {
    pub demand_normalization: DemandNormalization,
}

/// The pair `(G, H)` with `G = G_D + Ĝ_ML` and `H = Ĝ_CL + scale · K`.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedProblem {
    pub g: WeightedGraph,
    pub h_sparse: WeightedGraph,
    pub h_rank_one_scale: f64,
    /// Degrees of the data graph `G_D`; these define `K`.
    pub data_degrees: DegreeVector,
}

impl MergedProblem {
    pub fn n(&self) -> usize {
        self.g.n()
    }

    pub fn lg(&self) -> LaplacianOperator<'_> {
        LaplacianOperator::from_graph(&self.g)
    }

    pub fn lh(&self) -> LaplacianOperator<'_> {
        LaplacianOperator::new(
            self.n(),
            Some(&self.h_sparse),
            Some((self.h_rank_one_scale, &self.data_degrees)),
        )
        .expect("merged problem dimensions are consistent")
    }

    /// Degrees of the merged must-link graph `G`.
    pub fn merged_degrees(&self) -> DegreeVector {
        self.g.degrees()
    }
}

/// Degree-aware weight `d_u d_v / (d_min d_max)` for an unweighted constraint.
pub fn auto_weight(d: &DegreeVector, u: usize, v: usize) -> Result<f64> {
    let n = d.len();
    for vertex in [u, v] {
        if vertex >= n {
            return Err(Error::VertexOutOfRange { vertex, n });
        }
    }
    let slice = d.as_slice();
    if let Some(isolated) = [u, v].into_iter().find(|&i| slice[i] <= 0.0) {
        return Err(Error::IsolatedVertex(isolated));
    }
    let (d_min, d_max) = (d.min(), d.max());
    if d_min <= 0.0 {
        let isolated = slice.iter().position(|&x| x <= 0.0).unwrap_or(0);
        return Err(Error::IsolatedVertex(isolated));
    }
    Ok(slice[u] * slice[v] / (d_min * d_max))
}

pub fn merge(g_d: &WeightedGraph, constraints: &ConstraintSet) -> Result<MergedProblem> {
    merge_with(g_d, constraints, MergeOptions::default())
}

pub fn merge_with(
    g_d: &WeightedGraph,
    constraints: &ConstraintSet,
    options: MergeOptions,
) -> Result<MergedProblem> {
    let n = g_d.n();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "data graph needs at least 2 vertices, got {n}"
        )));
    }
    let (_, components) = g_d.components();
    if components != 1 {
        return Err(Error::Disconnected { components });
    }
    constraints.validate(n)?;
    let d = g_d.degrees();

    let weigh = |list: &[Constraint]| -> Result<WeightedGraph> {
        let edges = list
            .iter()
            .map(|c| {
                let w = match c.weight {
                    Some(w) => w,
                    None => auto_weight(&d, c.u, c.v)?,
                };
                Ok((c.u, c.v, w))
            })
            .collect::<Result<Vec<_>>>()?;
        WeightedGraph::from_edges(n, edges)
    };
    let ml = weigh(&constraints.must_link)?;
    let h_sparse = weigh(&constraints.cannot_link)?;
    let g = g_d.add(&ml)?;
    let h_rank_one_scale = options.demand_normalization.scale(&d);

    Ok(MergedProblem {
        g,
        h_sparse,
        h_rank_one_scale,
        data_degrees: d,
    })
}
