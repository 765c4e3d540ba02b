mod common;

use common::*;
use fastge::generators::{four_moons, noisy_knn, sample_constraints};
use fastge::graph::WeightedGraph;
use fastge::merge::{Constraint, ConstraintSet};
use fastge::pipeline::{run_pipeline, PipelineConfig};
use fastge::Error;

#[test]
fn unconstrained_bisection_cuts_the_bridge() {
    let g = two_triangles();
    let report = run_pipeline(&g, &ConstraintSet::new(), &PipelineConfig::default()).unwrap();
    assert_eq!(report.labels, vec![0, 0, 0, 1, 1, 1]);
    assert!(report.quality.sweep_certificate.is_some());
    assert!(report.eigen_converged);
}

#[test]
fn k_minus_one_embedding_recovers_triangles() {
    use fastge::eigen::dense_generalized_eigs;
    use fastge::embedding::compute_embedding;
    use fastge::merge::merge;
    use fastge::partition::kmeans;

    let g = two_triangles();
    let c = ConstraintSet {
        must_link: vec![],
        cannot_link: vec![Constraint::new(0, 5)],
    };
    let p = merge(&g, &c).unwrap();
    let sol = dense_generalized_eigs(&p.lg(), &p.lh(), 2).unwrap();
    // k = 2 embeds with the single nontrivial vector.
    let x = sol.vectors.columns(0, 1).into_owned();
    let e = compute_embedding(&x, &p.lh(), &p.merged_degrees()).unwrap();
    let directions: Vec<f64> = (0..6).map(|j| e.u[(j, 0)]).collect();
    for d in &directions {
        assert!((d.abs() - 1.0).abs() < 1e-12);
    }
    for seed in 0..5 {
        let labels = kmeans(&e.u, 2, 3, 100, seed).unwrap();
        assert_eq!(labels.labels(), &[0, 0, 0, 1, 1, 1]);
    }
}

#[test]
fn sparse_and_dense_paths_agree() {
    let mut r = rng(31);
    let g = random_connected(&mut r, 150, 300);
    let c = random_cannot_links(&mut r, 150, 10);
    let dense = run_pipeline(&g, &c, &PipelineConfig { k: 3, ..Default::default() }).unwrap();
    let sparse = run_pipeline(&g, &c, &PipelineConfig { k: 3, dense_threshold: 0, eig_tol: 1e-9, ..Default::default() }).unwrap();
    for (a, b) in dense.eigenvalues.iter().zip(&sparse.eigenvalues) {
        assert!((a - b).abs() <= 1e-7 * a, "{a} vs {b}");
    }
}

#[test]
fn repeated_runs_are_identical() {
    let cloud = four_moons(400, 0.1, 8).unwrap();
    let g = noisy_knn(&cloud, 10, 3.0, 8).unwrap();
    let c = sample_constraints(&cloud.labels, 20, 8).unwrap();
    for k in [2, 4] {
        let cfg = PipelineConfig { k, dense_threshold: 0, ..Default::default() };
        let a = run_pipeline(&g, &c, &cfg).unwrap();
        let b = run_pipeline(&g, &c, &cfg).unwrap();
        assert_eq!(a.without_timings(), b.without_timings());
        let json_a = serde_json::to_string(&a.without_timings()).unwrap();
        let json_b = serde_json::to_string(&b.without_timings()).unwrap();
        assert_eq!(json_a, json_b);
    }
}

#[test]
fn disconnected_input_uses_largest_component() {
    let mut edges: Vec<(usize, usize, f64)> = two_triangles().edges().collect();
    edges.push((6, 7, 1.0));
    let g = WeightedGraph::from_edges(8, edges).unwrap();
    let c = ConstraintSet {
        must_link: vec![Constraint::new(6, 7)],
        cannot_link: vec![Constraint::new(0, 5)],
    };
    let mut report = run_pipeline(&g, &c, &PipelineConfig::default()).unwrap();
    assert_eq!(report.vertex_ids, vec![0, 1, 2, 3, 4, 5]);
    assert_eq!(report.labels, vec![0, 0, 0, 1, 1, 1]);
    assert_eq!(report.warnings.len(), 1);
    let full = report.full_labels();
    assert_eq!(full[6], None);
    let ri = report.score_against(&[0, 0, 0, 1, 1, 1, 2, 2]).unwrap();
    assert_eq!(ri, 1.0);
}

#[test]
fn errors_name_their_stage() {
    let g = two_triangles();
    let c = ConstraintSet {
        must_link: vec![Constraint::new(0, 1)],
        cannot_link: vec![Constraint::new(1, 0)],
    };
    match run_pipeline(&g, &c, &PipelineConfig::default()) {
        Err(Error::Stage { stage, source }) => {
            assert_eq!(stage, "merge");
            assert!(matches!(*source, Error::ConflictingConstraint { .. }));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        run_pipeline(&g, &ConstraintSet::new(), &PipelineConfig { k: 1, ..Default::default() }),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn refinement_never_raises_cluster_badness() {
    let cloud = four_moons(300, 0.1, 2).unwrap();
    let g = noisy_knn(&cloud, 10, 2.0, 2).unwrap();
    let c = sample_constraints(&cloud.labels, 15, 2).unwrap();
    let base = run_pipeline(&g, &c, &PipelineConfig { k: 4, ..Default::default() }).unwrap();
    let refined = run_pipeline(&g, &c, &PipelineConfig { k: 4, refine: true, ..Default::default() }).unwrap();
    assert!(refined.quality.per_cluster_badness.len() >= base.quality.per_cluster_badness.len());
    // every refined cluster is either an original cluster or a piece whose
    // badness is below that of the cluster it came from
    for (c, &phi) in refined.quality.per_cluster_badness.iter().enumerate() {
        let members: Vec<usize> = (0..g.n()).filter(|&v| refined.labels[v] == c).collect();
        let parent = base.labels[members[0]];
        assert!(members.iter().all(|&v| base.labels[v] == parent));
        assert!(phi <= base.quality.per_cluster_badness[parent] + 1e-12);
    }
}
