mod common;

use dimprobe::neighbors::{geodesics_all_pairs, knn, knn_brute_force, knn_graph, KnnGraph};
use dimprobe::PointCloud;
use ndarray::Array2;
use proptest::prelude::*;

fn cloud_strategy() -> impl Strategy<Value = (PointCloud, usize)> {
    (3usize..60, 1usize..6, any::<bool>()).prop_flat_map(|(n, dim, lattice)| {
        let coord = if lattice {
            // small integer lattice: many exact ties and duplicates
            (0i32..4).prop_map(f64::from).boxed()
        } else {
            (-10.0f64..10.0).boxed()
        };
        (proptest::collection::vec(coord, n * dim), 1..n).prop_map(move |(v, k)| {
            let p = Array2::from_shape_vec((n, dim), v).unwrap();
            (PointCloud::unlabeled(p).unwrap(), k)
        })
    })
}

fn graph_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (1usize..40).prop_flat_map(|n| {
        let edge = (0..n, 0..n, 0.01f64..5.0);
        (Just(n), proptest::collection::vec(edge, 0..(3 * n)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn indexed_knn_equals_naive((cloud, k) in cloud_strategy()) {
        let expected = common::naive_knn(&cloud, k);
        for table in [knn(&cloud, k).unwrap(), knn_brute_force(&cloud, k).unwrap()] {
            for (i, exp) in expected.iter().enumerate() {
                let got: Vec<(f64, usize)> = table
                    .distances(i)
                    .iter()
                    .copied()
                    .zip(table.indices(i).iter().copied())
                    .collect();
                prop_assert_eq!(&got, exp);
            }
        }
    }

    #[test]
    fn dijkstra_equals_floyd_warshall((n, edges) in graph_strategy()) {
        let graph = KnnGraph::from_edges(n, &edges);
        // from_edges keeps the first weight of a repeated edge
        let mut seen = std::collections::HashSet::new();
        let kept: Vec<_> = edges
            .iter()
            .copied()
            .filter(|&(a, b, _)| a != b && seen.insert((a.min(b), a.max(b))))
            .collect();
        let fw = common::floyd_warshall(n, &kept);
        let geo = geodesics_all_pairs(&graph);
        for i in 0..n {
            for j in 0..n {
                match geo.get(i, j) {
                    Some(d) => prop_assert!((d - fw[i][j]).abs() <= 1e-12 * fw[i][j].max(1.0)),
                    None => prop_assert!(fw[i][j].is_infinite()),
                }
            }
        }
    }

    #[test]
    fn knn_graph_geodesics_equal_floyd_warshall((cloud, k) in cloud_strategy()) {
        let table = knn(&cloud, k).unwrap();
        let graph = knn_graph(&table);
        let mut edges = Vec::new();
        for i in 0..cloud.len() {
            for (&j, &d) in table.indices(i).iter().zip(table.distances(i)) {
                edges.push((i, j, d));
            }
        }
        let fw = common::floyd_warshall(cloud.len(), &edges);
        let geo = geodesics_all_pairs(&graph);
        for i in 0..cloud.len() {
            for j in 0..cloud.len() {
                match geo.get(i, j) {
                    Some(d) => prop_assert!((d - fw[i][j]).abs() <= 1e-12 * fw[i][j].max(1.0)),
                    None => prop_assert!(fw[i][j].is_infinite()),
                }
            }
        }
    }
}

#[test]
fn geodesics_on_dense_random_graph_of_200_nodes() {
    use rand::Rng;
    let mut rng = dimprobe::rng::seeded(3);
    let n = 200;
    let edges: Vec<_> = (0..1200)
        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0.001..2.0)))
        .collect();
    let graph = KnnGraph::from_edges(n, &edges);
    let mut seen = std::collections::HashSet::new();
    let kept: Vec<_> = edges
        .iter()
        .copied()
        .filter(|&(a, b, _)| a != b && seen.insert((a.min(b), a.max(b))))
        .collect();
    let fw = common::floyd_warshall(n, &kept);
    let geo = geodesics_all_pairs(&graph);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            match geo.get(i, j) {
                Some(d) => worst = worst.max((d - fw[i][j]).abs()),
                None => assert!(fw[i][j].is_infinite()),
            }
        }
    }
    assert!(worst <= 1e-12, "max deviation {worst}");
}

#[test]
fn analytic_gradients_match_central_differences() {
    for case in 0..25 {
        let (model, x, y) = common::random_model_and_batch(case);
        let err = common::max_relative_error(&model, &x, &y);
        assert!(err < 1e-4, "case {case}: relative error {err}");
    }
}
