use proptest::prelude::*;

use untangle_core::diagram::{build_graph, knot_template, read_gauss, KnotSpec, TemplateName, VertexId, WORKSPACE};
use untangle_core::executor::moves::rotate_about;
use untangle_core::geom::Point;

fn knot() -> impl Strategy<Value = KnotSpec> {
    (0..TemplateName::ALL.len(), any::<bool>()).prop_map(|(i, dense)| KnotSpec { name: TemplateName::ALL[i], dense })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn embedded_code_reads_back(spec in knot(), seed in any::<u64>()) {
        let d = knot_template(spec, seed, 6.0).unwrap();
        prop_assert_eq!(read_gauss(d.polyline(), d.crossings()).unwrap(), spec.name.code());
        d.validate(WORKSPACE).unwrap();
    }

    #[test]
    fn graph_annotations_are_total(spec in knot(), seed in 0u64..1000) {
        let d = knot_template(spec, seed, 6.0).unwrap();
        let g = build_graph(&d);
        prop_assert_eq!(g.vertex_count(), d.crossing_count() + 2);
        let mut degree = std::collections::HashMap::new();
        for e in &g.edges {
            for inc in [e.start, e.end] {
                prop_assert!([1, -1, -2].contains(&inc.layer));
                if matches!(inc.vertex, VertexId::Left | VertexId::Right) {
                    prop_assert_eq!(inc.layer, 1);
                }
                *degree.entry(inc.vertex).or_insert(0) += 1;
            }
        }
        prop_assert_eq!(degree.len(), g.vertex_count());
        prop_assert!(degree.values().all(|&k| k <= 6));
    }

    #[test]
    fn rigid_motions_keep_the_crossings(spec in knot(), seed in 0u64..1000, dx in -50.0..50.0f64, dy in -50.0..50.0f64, deg in -180.0..180.0f64) {
        let d = knot_template(spec, seed, 6.0).unwrap();
        let moved = d.translated(Point::new(dx, dy));
        prop_assert_eq!(moved.code(), d.code());
        let turned = rotate_about(&d, d.bounds().center(), deg);
        prop_assert_eq!(turned.crossing_count(), d.crossing_count());
        prop_assert_eq!(&read_gauss(turned.polyline(), turned.crossings()).unwrap(), turned.code());
    }
}
