use firemap::graph::{build_dynamics, grid16_fixture};
use firemap::intervention::{
    extract_targets, solve_intervention, Budget, ControlMode, InterventionOptions,
    InterventionReport, TargetKind,
};
use firemap::lp::MicroLp;
use firemap::routing::{solve_tsp, targets_to_waypoints, write_tour, TspMethod};
use firemap::surveillance::priority_direct;

fn grid16_run(gamma: f64, mode: ControlMode) -> firemap::intervention::InterventionResult {
    let g = grid16_fixture();
    let a = build_dynamics(&g).unwrap();
    solve_intervention(
        &a,
        &g.costs(),
        2.0,
        Budget::new(gamma).unwrap(),
        mode,
        InterventionOptions::default(),
        &MicroLp,
    )
    .unwrap()
}

#[test]
fn half_budget_is_sparse() {
    let g = grid16_fixture();
    let a = build_dynamics(&g).unwrap();
    let res = grid16_run(0.5, ControlMode::Edges);
    let pattern = a.off_diagonal().filter(|e| e.2 > 0.0).count();
    let used = res.k.entries().iter().filter(|e| e.2 > 1e-4 * 0.5).count();
    assert!(4 * used <= pattern, "{used} of {pattern}");
}

#[test]
fn city_link_heads_the_targets() {
    let res = grid16_run(0.5, ControlMode::Edges);
    let targets = extract_targets(&res.k, 0.05);
    assert_eq!(targets[0].kind, TargetKind::Edge { src: 10, dst: 15 });
}

#[test]
fn more_budget_more_targets() {
    let small = extract_targets(&grid16_run(0.5, ControlMode::Edges).k, 0.05).len();
    let large = extract_targets(&grid16_run(2.0, ControlMode::Edges).k, 0.05).len();
    assert!(large > small);
}

#[test]
fn node_mode_spreads_a_large_budget() {
    let small = grid16_run(0.5, ControlMode::Nodes);
    let large = grid16_run(4.0, ControlMode::Nodes);
    assert!(large.total() < small.total());
    assert!(large.k.entries().iter().all(|e| e.0 == e.1));
    assert!(extract_targets(&large.k, 0.05).len() > 1);
}

#[test]
fn closed_loop_certificate_on_grid16() {
    let g = grid16_fixture();
    let a = build_dynamics(&g).unwrap();
    for gamma in [0.5, 1.0, 2.0] {
        let res = grid16_run(gamma, ControlMode::Edges);
        let exact = priority_direct(&res.k.closed_loop(&a).unwrap(), &g.costs(), 2.0).unwrap();
        for (x, y) in exact.p.iter().zip(&res.p) {
            assert!(*x <= y + 1e-6);
        }
    }
}

#[test]
fn report_feeds_routing() {
    let g = grid16_fixture();
    let res = grid16_run(2.0, ControlMode::Edges);
    let text = InterventionReport::new(&res, 2.0, 2.0, g.geometry()).to_text();
    let report = InterventionReport::parse(&text).unwrap();
    let max = report.targets.iter().map(|t| t.amount).fold(0.0, f64::max);
    let kept: Vec<_> = report
        .targets
        .iter()
        .copied()
        .filter(|t| t.amount >= 0.05 * max)
        .collect();
    let waypoints = targets_to_waypoints(&kept, |i| {
        report.positions.iter().find(|p| p.0 == i).map(|p| p.1)
    })
    .unwrap();
    assert!(!waypoints.is_empty());
    let exact = solve_tsp(&waypoints, TspMethod::Exact).unwrap();
    let heuristic = solve_tsp(&waypoints, TspMethod::Heuristic).unwrap();
    assert!(heuristic.length >= exact.length - 1e-9);
    let csv = write_tour(&exact, &waypoints);
    assert_eq!(csv.lines().count(), waypoints.len() + 2);
}
