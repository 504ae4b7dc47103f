use splatsched::partition::{
    build_bipartite_graph, hierarchical_partition, image_ownership, partition_graph, PartitionAssignment,
    PartitionConfig, QualityReport,
};
use splatsched::scene::{generate_aerial_scene, generate_temporal_scene, AerialParams, TemporalParams};
use splatsched::visibility::{cull_point, frustum_from_view, zorder_group};

#[test]
fn graph_edges_match_per_point_culling() {
    let ds = generate_aerial_scene(&AerialParams::new(5, 3000, (4, 4), 16, 30.0)).unwrap();
    let grouped = zorder_group(&ds.cloud, 100).unwrap();
    let graph = build_bipartite_graph(&grouped, &ds).unwrap();
    let mut expected = vec![vec![0u64; ds.views.len()]; grouped.groups().len()];
    for (vi, view) in ds.views.iter().enumerate() {
        let f = frustum_from_view(view, None).unwrap();
        for (i, p) in grouped.points().iter().enumerate() {
            if cull_point(&f, *p, None, None).unwrap() {
                expected[grouped.group_of(i)][vi] += 1;
            }
        }
    }
    let mut got = vec![vec![0u64; ds.views.len()]; grouped.groups().len()];
    for &(g, i, w) in graph.edges() {
        got[g as usize][i as usize] = w;
    }
    assert_eq!(got, expected);
    assert_eq!(graph.group_weights().iter().sum::<u64>(), 3000);
}

#[test]
fn temporal_graph_only_counts_present_points() {
    let aerial = AerialParams::new(2, 2000, (3, 3), 9, 30.0);
    let ds = generate_temporal_scene(&TemporalParams { aerial, duration: 10.0 }).unwrap();
    let grouped = zorder_group(&ds.cloud, 64).unwrap();
    let graph = build_bipartite_graph(&grouped, &ds).unwrap();
    let pres = grouped.presence().unwrap();
    for (vi, view) in ds.views.iter().enumerate() {
        let f = frustum_from_view(view, None).unwrap();
        let t = view.timestamp.unwrap();
        let expected = (0..grouped.len())
            .filter(|&i| cull_point(&f, grouped.points()[i], Some(t), Some(pres[i])).unwrap())
            .count() as u64;
        let got: u64 = graph.edges().iter().filter(|e| e.1 as usize == vi).map(|e| e.2).sum();
        assert_eq!(got, expected);
    }
}

#[test]
fn hierarchical_partition_on_scene() {
    let ds = generate_aerial_scene(&AerialParams::new(8, 20_000, AerialParams::default_grid(64), 64, 60.0)).unwrap();
    let grouped = zorder_group(&ds.cloud, 256).unwrap();
    let graph = build_bipartite_graph(&grouped, &ds).unwrap();
    let cfg = PartitionConfig {
        seed: 3,
        ..PartitionConfig::default()
    };
    let part = hierarchical_partition(&graph, 2, 2, &cfg).unwrap();
    let q = QualityReport::new(&part, &graph, cfg.epsilon);
    assert!(q.balance <= 1.05f64.powi(2) + 1e-9, "{}", q.balance);
    assert_eq!(q.part_weights.iter().sum::<u64>(), 20_000);
    assert!(q.machine_edge_cut <= q.edge_cut);

    let own = part.point_ownership(&grouped).unwrap();
    assert_eq!(own.load(), q.part_weights);

    // most images live on the machine holding most of what they see
    let gm: Vec<usize> = part.group_machine.iter().map(|&m| m as usize).collect();
    let affinity = graph.image_affinity(&gm, 2);
    let owners = image_ownership(&part, &graph);
    let agree = owners
        .iter()
        .zip(&affinity)
        .filter(|(&o, a)| a[o as usize] == *a.iter().max().unwrap())
        .count();
    assert!(agree * 10 >= owners.len() * 8, "{agree}/{}", owners.len());

    let again = hierarchical_partition(&graph, 2, 2, &cfg).unwrap();
    assert_eq!(part, again);
}

#[test]
fn partition_csv_round_trip_on_scene() {
    let ds = generate_aerial_scene(&AerialParams::new(1, 4000, (3, 4), 12, 40.0)).unwrap();
    let grouped = zorder_group(&ds.cloud, 200).unwrap();
    let graph = build_bipartite_graph(&grouped, &ds).unwrap();
    let part = hierarchical_partition(&graph, 2, 2, &PartitionConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("partition.csv");
    part.save_csv(&path).unwrap();
    let back = PartitionAssignment::load_csv(&path, &graph, 2, 2).unwrap();
    assert_eq!(back.group_machine, part.group_machine);
    assert_eq!(back.group_gpu, part.group_gpu);
}

#[test]
fn flat_two_way_partition_of_scene_is_balanced() {
    let ds = generate_aerial_scene(&AerialParams::new(4, 10_000, (4, 8), 32, 50.0)).unwrap();
    let grouped = zorder_group(&ds.cloud, 250).unwrap();
    let graph = build_bipartite_graph(&grouped, &ds).unwrap();
    let p = partition_graph(&graph, 2, &PartitionConfig::default()).unwrap();
    assert!(p.quality.balance <= 1.05 + 1e-9, "{}", p.quality.balance);
}
