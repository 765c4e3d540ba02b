use fastge::generators::LabeledPointCloud;
use fastge::graph::WeightedGraph;
use fastge::io::*;
use fastge::merge::{Constraint, ConstraintSet};
use proptest::prelude::*;

fn graph_strategy() -> impl Strategy<Value = WeightedGraph> {
    (2usize..30).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 1e-6f64..1e6), 0..60).prop_map(move |raw| {
            let edges = raw.into_iter().filter(|&(u, v, _)| u != v);
            WeightedGraph::from_edges(n, edges).unwrap()
        })
    })
}

fn constraint_strategy() -> impl Strategy<Value = Constraint> {
    (0usize..50, 1usize..50, prop::option::of(1e-3f64..1e3)).prop_map(|(u, d, weight)| Constraint {
        u,
        v: u + d,
        weight,
    })
}

fn image_strategy() -> impl Strategy<Value = GrayImage> {
    (1usize..9, 1usize..9, prop_oneof![Just(1u16), Just(255), Just(256), Just(65535)]).prop_flat_map(
        |(w, h, maxval)| {
            prop::collection::vec(0..=maxval, w * h)
                .prop_map(move |pixels| GrayImage::new(w, h, maxval, pixels).unwrap())
        },
    )
}

proptest! {
    #[test]
    fn edge_list_round_trip(g in graph_strategy()) {
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let back = read_edge_list(buf.as_slice()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn constraints_round_trip(
        ml in prop::collection::vec(constraint_strategy(), 0..10),
        cl in prop::collection::vec(constraint_strategy(), 0..10),
    ) {
        let c = ConstraintSet { must_link: ml, cannot_link: cl };
        let mut buf = Vec::new();
        write_constraints(&c, &mut buf).unwrap();
        prop_assert_eq!(read_constraints(buf.as_slice()).unwrap(), c);
    }

    #[test]
    fn labels_round_trip(labels in prop::collection::vec(0usize..1000, 0..50)) {
        let mut buf = Vec::new();
        write_labels(&labels, &mut buf).unwrap();
        prop_assert_eq!(read_labels(buf.as_slice()).unwrap(), labels);
    }

    #[test]
    fn point_cloud_round_trip(rows in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3, 0usize..4), 1..40)) {
        let points = rows.iter().map(|r| [r.0, r.1]).collect();
        let labels = rows.iter().map(|r| r.2).collect();
        let cloud = LabeledPointCloud::new(points, labels).unwrap();
        let mut buf = Vec::new();
        write_point_cloud(&cloud, &mut buf).unwrap();
        prop_assert_eq!(read_point_cloud(buf.as_slice()).unwrap(), cloud);
    }

    #[test]
    fn pgm_round_trip(img in image_strategy(), plain in any::<bool>()) {
        let mut buf = Vec::new();
        write_pgm(&img, &mut buf, plain).unwrap();
        prop_assert_eq!(read_pgm(buf.as_slice()).unwrap(), img);
    }

    #[test]
    fn scribbles_round_trip(rows in prop::collection::vec((0usize..100, 0usize..100, 0usize..5), 0..20)) {
        let s: Vec<Scribble> = rows.into_iter().map(|(row, col, label)| Scribble { row, col, label }).collect();
        let mut buf = Vec::new();
        write_scribbles(&s, &mut buf).unwrap();
        prop_assert_eq!(read_scribbles(buf.as_slice()).unwrap(), s);
    }
}

#[test]
fn image_graph_weights() {
    let img = GrayImage::new(3, 2, 255, vec![0, 0, 255, 0, 0, 255]).unwrap();
    let g = image_to_graph(&img, 0.5, Connectivity::Four).unwrap();
    assert_eq!(g.num_edges(), 7);
    // equal neighbors get weight 1; a full-contrast step gets exp(-1 / (2 * 0.25))
    let w01 = g.neighbors(0).find(|&(v, _)| v == 1).unwrap().1;
    let w12 = g.neighbors(1).find(|&(v, _)| v == 2).unwrap().1;
    assert_eq!(w01, 1.0);
    assert!((w12 - (-2.0f64).exp()).abs() < 1e-15);
    let eight = image_to_graph(&img, 0.5, Connectivity::Eight).unwrap();
    assert_eq!(eight.num_edges(), 11);
}

#[test]
fn malformed_inputs_name_the_line() {
    let err = read_edge_list("0 1\n2 x\n".as_bytes()).unwrap_err().to_string();
    assert!(err.contains('2'), "{err}");
    assert!(read_constraints("XL 0 1\n".as_bytes()).is_err());
    assert!(read_pgm("P3\n1 1\n255\n0\n".as_bytes()).is_err());
    assert!(read_pgm("P5\n2 2\n255\n\x01".as_bytes()).is_err());
}
