//! Partition quality and brute-force oracles for small instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_len, VertexSet, WeightedGraph};
use crate::operators::LaplacianOperator;
use crate::partition::{h_zero_tol, ratio, Partition};

/// Largest graph accepted by [`brute_force_phi`].
pub const BRUTE_FORCE_MAX_N: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    /// Agreement with a reference labeling, when one is available.
    pub rand_index: Option<f64>,
    /// `cut_G(C_i) / cut_H(C_i)` per cluster; `+∞` when `cut_H(C_i)` vanishes.
    #[serde(with = "extended_reals")]
    pub per_cluster_badness: Vec<f64>,
    #[serde(with = "extended_real")]
    pub max_badness: f64,
    /// Clusters whose badness is unbounded.
    pub unbounded_clusters: Vec<usize>,
    pub sweep_certificate: Option<f64>,
}

/// Serializes `+∞` as the string `"inf"`; JSON has no infinity.
mod extended_real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    pub(super) enum Repr {
        Finite(f64),
        Tag(String),
    }

    pub(super) fn to_repr(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Finite(v)
        } else if v > 0.0 {
            Repr::Tag("inf".into())
        } else if v < 0.0 {
            Repr::Tag("-inf".into())
        } else {
            Repr::Tag("nan".into())
        }
    }

    pub(super) fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Finite(v) => Ok(v),
            Repr::Tag(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("not a number: {other}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }
}

mod extended_reals {
    use super::extended_real::{from_repr, to_repr, Repr};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| to_repr(*x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(from_repr)
            .collect()
    }
}

/// Fraction of vertex pairs on which `a` and `b` agree.
///
/// Computed from the contingency table in `O(n + k_a k_b)`. A single vertex
/// has no pairs and scores 1.
pub fn rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    let n = a.len() as u128;
    if n < 2 {
        return Ok(1.0);
    }
    let pa = Partition::new(a);
    let pb = Partition::new(b);
    let mut table = vec![0u128; pa.k() * pb.k()];
    let mut row = vec![0u128; pa.k()];
    let mut col = vec![0u128; pb.k()];
    for (&i, &j) in pa.labels().iter().zip(pb.labels()) {
        table[i * pb.k() + j] += 1;
        row[i] += 1;
        col[j] += 1;
    }
    let pairs = |c: &u128| c * c.saturating_sub(1) / 2;
    let both: u128 = table.iter().map(pairs).sum();
    let same_a: u128 = row.iter().map(pairs).sum();
    let same_b: u128 = col.iter().map(pairs).sum();
    let total = n * (n - 1) / 2;
    // pairs together in exactly one of the partitions disagree
    let disagree = same_a + same_b - 2 * both;
    Ok((total - disagree) as f64 / total as f64)
}

/// Per-cluster badness `cut_G(C_i) / cut_H(C_i)` and its maximum.
pub fn badness(g: &WeightedGraph, h: &LaplacianOperator, p: &Partition) -> Result<QualityReport> {
    check_len(g.n(), p.n())?;
    check_len(g.n(), h.dim())?;
    let zero_tol = h_zero_tol(h);
    let per_cluster_badness: Vec<f64> = (0..p.k())
        .map(|c| {
            let s = p.cluster(c);
            Ok(ratio(g.cut(&s)?, h.cut(&s)?, zero_tol))
        })
        .collect::<Result<_>>()?;
    let max_badness = per_cluster_badness
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let unbounded_clusters = (0..p.k())
        .filter(|&c| per_cluster_badness[c].is_infinite())
        .collect();
    Ok(QualityReport {
        rand_index: None,
        per_cluster_badness,
        max_badness,
        unbounded_clusters,
        sweep_certificate: None,
    })
}

/// Exact `min cut_G / cut_H` over all proper bipartitions, by enumeration.
///
/// Bipartitions with zero `cut_H` are skipped. The returned set never
/// contains the last vertex; ties go to the smallest bitmask.
pub fn brute_force_phi(g: &WeightedGraph, h: &LaplacianOperator) -> Result<(f64, VertexSet)> {
    let n = g.n();
    check_len(n, h.dim())?;
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::InvalidArgument(format!(
            "brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two vertices".into()));
    }
    let g_edges: Vec<(usize, usize, f64)> = g.edges().collect();
    let h_edges: Vec<(usize, usize, f64)> = h.sparse_part().map_or(Vec::new(), |s| s.edges().collect());
    let rank_one = h.rank_one_part();
    let zero_tol = h_zero_tol(h);

    let crossing = |edges: &[(usize, usize, f64)], mask: u32| -> f64 {
        edges
            .iter()
            .filter(|(u, v, _)| ((mask >> u) ^ (mask >> v)) & 1 == 1)
            .map(|e| e.2)
            .sum()
    };
    let best = (1u32..(1u32 << (n - 1)))
        .into_par_iter()
        .filter_map(|mask| {
            let mut cut_h = crossing(&h_edges, mask);
            if let Some((c, d)) = rank_one {
                let vol_s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| d.as_slice()[i]).sum();
                cut_h += c * vol_s * (d.vol() - vol_s) / d.vol();
            }
            let r = ratio(crossing(&g_edges, mask), cut_h, zero_tol);
            r.is_finite().then_some((r, mask))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .ok_or_else(|| Error::IllPosed("every bipartition has zero cut in H".into()))?;
    let set = VertexSet::from_indices(n, (0..n).filter(|i| best.1 >> i & 1 == 1))?;
    Ok((best.0, set))
}
