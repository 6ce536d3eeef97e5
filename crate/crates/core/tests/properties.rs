use approx::assert_relative_eq;
use bridgebench::benchmark::compare_subdivisions;
use bridgebench::flux::{boundary_heat_flow, recover_nodal_flux};
use bridgebench::{
    assemble, build_graded_grid, build_uniform_grid, element_stiffness, solve, BoundarySpec, Corner, EdgeTag,
    ElementOrder, Material, Mesh, TemperatureField,
};
use proptest::prelude::*;

fn order() -> impl Strategy<Value = ElementOrder> {
    prop_oneof![Just(ElementOrder::Linear), Just(ElementOrder::Serendipity)]
}

fn corner() -> impl Strategy<Value = Corner> {
    prop_oneof![
        Just(Corner::BottomLeft),
        Just(Corner::BottomRight),
        Just(Corner::TopRight),
        Just(Corner::TopLeft)
    ]
}

fn solve_on(mesh: &Mesh, k: f64, bc: &BoundarySpec) -> TemperatureField {
    let material = Material::new(k).unwrap();
    solve(&assemble(mesh, &material, bc).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mesh_counts(nx in 1usize..20, ny in 1usize..20, order in order()) {
        let m = build_uniform_grid(0.2, 0.4, nx, ny, order).unwrap();
        let corners = (nx + 1) * (ny + 1);
        let expected = match order {
            ElementOrder::Linear => corners,
            ElementOrder::Serendipity => corners + nx * (ny + 1) + (nx + 1) * ny,
        };
        prop_assert_eq!(m.node_count(), expected);
        prop_assert_eq!(m.cell_count(), nx * ny);
        let per_edge = |n: usize| match order {
            ElementOrder::Linear => n + 1,
            ElementOrder::Serendipity => 2 * n + 1,
        };
        prop_assert_eq!(m.boundary_nodes(EdgeTag::Top).len(), per_edge(nx));
        prop_assert_eq!(m.boundary_nodes(EdgeTag::Left).len(), per_edge(ny));
        prop_assert!(m.check_jacobians().is_ok());
    }

    #[test]
    fn grading_ratio_between_neighbours(n in 2usize..12, ratio in 1.0f64..3.0, focus in corner()) {
        let m = build_graded_grid(0.2, 0.4, n, n, ratio, focus, ElementOrder::Linear).unwrap();
        for (ticks, length) in [(m.x_ticks(), 0.2), (m.y_ticks(), 0.4)] {
            let d: Vec<f64> = ticks.windows(2).map(|w| w[1] - w[0]).collect();
            prop_assert!(d.iter().all(|s| *s > 0.0));
            assert_relative_eq!(d.iter().sum::<f64>(), length, max_relative = 1e-12);
            for w in d.windows(2) {
                let r = if w[0] > w[1] { w[0] / w[1] } else { w[1] / w[0] };
                assert_relative_eq!(r, ratio, max_relative = 1e-9);
            }
        }
        prop_assert!(m.check_jacobians().is_ok());
    }

    #[test]
    fn stiffness_is_symmetric_with_zero_row_sums(
        jitter in proptest::collection::vec(-0.2f64..0.2, 8),
        k in 0.1f64..10.0,
    ) {
        let coords = [
            [0.0 + jitter[0], 0.0 + jitter[1]],
            [1.0 + jitter[2], 0.0 + jitter[3]],
            [1.0 + jitter[4], 1.0 + jitter[5]],
            [0.0 + jitter[6], 1.0 + jitter[7]],
        ];
        let ke = element_stiffness(&coords, k, ElementOrder::Linear).unwrap();
        for i in 0..4 {
            prop_assert!(ke[(i, i)] > 0.0);
            prop_assert!(ke.row(i).sum().abs() < 1e-12 * k);
            for j in 0..4 {
                prop_assert!((ke[(i, j)] - ke[(j, i)]).abs() < 1e-12 * k);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn offset_shifts_temperature_and_keeps_heat_flow(
        offset in -50.0f64..50.0,
        n in 1usize..5,
        order in order(),
    ) {
        let mesh = build_uniform_grid(0.2, 0.4, 2 * n, 4 * n, order).unwrap();
        let material = Material::default();
        let bc = BoundarySpec::case1();
        let shifted = bc.shifted(offset);
        let t0 = solve_on(&mesh, 1.0, &bc);
        let t1 = solve_on(&mesh, 1.0, &shifted);
        for (a, b) in t0.values.iter().zip(&t1.values) {
            prop_assert!((b - a - offset).abs() < 1e-9);
        }
        let q = |t: &TemperatureField, bc: &BoundarySpec| {
            let flux = recover_nodal_flux(&mesh, t, &material).unwrap();
            boundary_heat_flow(&mesh, &flux, bc, EdgeTag::Top, 1).unwrap().masked_total
        };
        assert_relative_eq!(q(&t0, &bc), q(&t1, &shifted), max_relative = 1e-9);
    }

    #[test]
    fn heat_flow_scales_with_conductivity(k in 0.05f64..20.0, n in 1usize..4) {
        let mesh = build_uniform_grid(0.2, 0.4, 5 * n, 10 * n, ElementOrder::Linear).unwrap();
        let bc = BoundarySpec::case1();
        let q = |k: f64| {
            let t = solve_on(&mesh, k, &bc);
            let flux = recover_nodal_flux(&mesh, &t, &Material::new(k).unwrap()).unwrap();
            boundary_heat_flow(&mesh, &flux, &bc, EdgeTag::Top, 0).unwrap().total
        };
        assert_relative_eq!(q(k), k * q(1.0), max_relative = 1e-9);
    }

    #[test]
    fn masking_removes_only_positive_corner_terms(n in 1usize..6, order in order()) {
        let mesh = build_uniform_grid(0.2, 0.4, 2 * n, 4 * n, order).unwrap();
        let bc = BoundarySpec::case1();
        let t = solve_on(&mesh, 1.0, &bc);
        let flux = recover_nodal_flux(&mesh, &t, &Material::default()).unwrap();
        let edge_nodes = mesh.boundary_nodes(EdgeTag::Top).len();
        let mut previous = f64::INFINITY;
        for mask in 0..=edge_nodes / 2 {
            let flow = boundary_heat_flow(&mesh, &flux, &bc, EdgeTag::Top, mask).unwrap();
            let dropped: f64 = flow.per_node.iter().filter(|s| s.masked).map(|s| s.weight * s.inward_flux).sum();
            prop_assert_eq!(flow.per_node.iter().filter(|s| s.masked).count(), mask);
            prop_assert!((flow.total - flow.masked_total - dropped).abs() < 1e-9 * flow.total.abs().max(1.0));
            prop_assert!(flow.masked_total <= previous + 1e-12);
            previous = flow.masked_total;
        }
        prop_assert!(boundary_heat_flow(&mesh, &flux, &bc, EdgeTag::Top, edge_nodes / 2 + 1).is_err());
    }

    #[test]
    fn maximum_principle_on_square_q4(n in 1usize..8, hot in -30.0f64..60.0, cold in -30.0f64..60.0) {
        let mesh = build_uniform_grid(0.2, 0.4, n, 2 * n, ElementOrder::Linear).unwrap();
        let mut bc = BoundarySpec::case1();
        bc.dirichlet.insert(EdgeTag::Top, hot);
        bc.dirichlet.insert(EdgeTag::Right, cold);
        bc.dirichlet.insert(EdgeTag::Bottom, cold);
        let t = solve_on(&mesh, 1.0, &bc);
        let (lo, hi) = (hot.min(cold), hot.max(cold));
        prop_assert!(t.min() >= lo - 1e-9 && t.max() <= hi + 1e-9);
    }

    #[test]
    fn relative_difference_properties(a in 0.1f64..1e4, b in 0.1f64..1e4) {
        let d = compare_subdivisions(a, b).unwrap();
        prop_assert!(d >= 0.0);
        assert_relative_eq!(d * b, (b - a).abs(), max_relative = 1e-12);
        prop_assert_eq!(compare_subdivisions(a, a).unwrap(), 0.0);
    }
}
