//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if
//! any criterion fails.

use bridgebench::benchmark::{
    patch_test_error, run_case1, serendipity_study, solve_case1, ConvergenceReport, StudyConfig, DEFAULT_H_SEQUENCE,
    HEIGHT, WIDTH,
};
use bridgebench::flux::{boundary_heat_flow, recover_nodal_flux};
use bridgebench::{assemble, build_uniform_grid, solve, BoundarySpec, Case1Exact, EdgeTag, ElementOrder, Material};
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed_study(config: &StudyConfig) -> (ConvergenceReport, f64) {
    let start = Instant::now();
    let report = run_case1(config).expect("study failed");
    (report, start.elapsed().as_secs_f64())
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn marginal_flux(report: &ConvergenceReport, secs: f64) -> Outcome {
    let rows = &report.rows;
    let first = rows.first().unwrap().q_marginal;
    let last = rows.last().unwrap().q_marginal;
    let ratios: Vec<f64> = rows
        .windows(2)
        .filter(|w| w[1].h <= 0.005 + 1e-12 && w[0].h <= 0.005 + 1e-12)
        .map(|w| w[1].q_marginal / w[0].q_marginal)
        .collect();
    let ok = within(first, 1000.0, 0.10)
        && within(last, 16000.0, 0.10)
        && !ratios.is_empty()
        && ratios.iter().all(|r| (1.9..=2.1).contains(r))
        && secs < 60.0;
    outcome(
        ok,
        format!("q_y(2 cm) = {first:.1}, q_y(0.125 cm) = {last:.1} W/m2, ratios {ratios:.3?}, default run {secs:.1} s"),
    )
}

fn temperature_accuracy(report: &ConvergenceReport) -> Outcome {
    let devs: Vec<f64> = report.rows.iter().rev().take(3).map(|r| r.max_temp_dev).collect();
    let ok = devs.len() == 3 && devs.iter().all(|d| *d <= 0.05);
    outcome(ok, format!("max |dT| over last three levels (finest first) {devs:.5?} C, bound 0.05"))
}

fn masked_convergence(report: &ConvergenceReport) -> Outcome {
    let diffs: Vec<f64> = report.rows.iter().rev().take(3).filter_map(|r| r.d_q_masked_rel).collect();
    let decreasing = diffs.windows(2).all(|w| w[0] < w[1]);
    let ok = diffs.len() == 3 && diffs.iter().all(|d| *d < 0.01) && decreasing;
    outcome(
        ok,
        format!(
            "masked dQ (finest first) {:.2?} %, bound < 1 %, decreasing: {decreasing}",
            diffs.iter().map(|d| d * 100.0).collect::<Vec<_>>()
        ),
    )
}

fn unmasked_divergence(report: &ConvergenceReport, extended: &ConvergenceReport, secs: f64) -> Outcome {
    let diffs: Vec<f64> = report.rows.iter().filter_map(|r| r.d_q_rel).collect();
    let last_ext = extended.rows.last().and_then(|r| r.d_q_rel).unwrap_or(f64::NAN);
    let ok = diffs.len() == report.rows.len() - 1
        && diffs.iter().all(|d| *d > 0.01)
        && (0.07..=0.13).contains(&last_ext)
        && secs <= 600.0;
    outcome(
        ok,
        format!(
            "dQ per level {:.2?} %, extended finest {:.2} % (target 10 +- 3), extended run {secs:.1} s",
            diffs.iter().map(|d| d * 100.0).collect::<Vec<_>>(),
            last_ext * 100.0
        ),
    )
}

fn serendipity(report: &ConvergenceReport) -> Outcome {
    let diffs: Vec<f64> = report.rows.iter().filter_map(|r| r.d_q_rel).collect();
    let ok = diffs.len() == report.rows.len() - 1 && diffs.iter().all(|d| *d > 0.01) && !report.verdicts.flux_converged;
    outcome(
        ok,
        format!("Q8 dQ per level {:.2?} %, all above 1 %", diffs.iter().map(|d| d * 100.0).collect::<Vec<_>>()),
    )
}

fn oracle_integrity(report: &ConvergenceReport) -> Outcome {
    let exact = Case1Exact::default();
    let centre = exact.exact_temperature(0.0, 0.2).unwrap();
    let step = 1e-6;
    let bound = 1e-6 * exact.t_hot / exact.side;
    let mut worst_slope: f64 = 0.0;
    let mut y = 0.05;
    while y <= 0.35 + 1e-12 {
        let mid = 0.5 * exact.side;
        let plus = exact.exact_temperature_full(mid + step, y).unwrap();
        let minus = exact.exact_temperature_full(mid - step, y).unwrap();
        worst_slope = worst_slope.max(((plus - minus) / (2.0 * step)).abs());
        y += 0.005;
    }
    let finest = report.rows.iter().find(|r| (r.h - 0.00125).abs() < 1e-12).expect("0.125 cm level");
    let reference = exact.exact_masked_heat_flow(0.00125).unwrap();
    let gap = (finest.q_masked - reference).abs() / reference;
    let ok = (centre - 5.0).abs() <= 1e-6 && worst_slope < bound && gap <= 0.02;
    outcome(
        ok,
        format!(
            "T(0, 0.2) = {centre:.9}, max |dT/dx| at x = 0 {worst_slope:.2e} (bound {bound:.0e}), \
             masked Q {:.4} vs exact {reference:.4} W/m ({:.2} %, bound 2 %)",
            finest.q_masked,
            gap * 100.0
        ),
    )
}

fn soundness() -> Outcome {
    let mut patch: f64 = 0.0;
    for order in [ElementOrder::Linear, ElementOrder::Serendipity] {
        for graded in [false, true] {
            patch = patch.max(patch_test_error(order, graded).unwrap());
        }
    }

    let material = Material::default();
    let flat = BoundarySpec::one_dimensional(20.0, 0.0);
    let mut flat_error: f64 = 0.0;
    for order in [ElementOrder::Linear, ElementOrder::Serendipity] {
        for &h in &DEFAULT_H_SEQUENCE {
            let nx = (WIDTH / h).round() as usize;
            let ny = (HEIGHT / h).round() as usize;
            let mesh = build_uniform_grid(WIDTH, HEIGHT, nx, ny, order).unwrap();
            let field = solve(&assemble(&mesh, &material, &flat).unwrap()).unwrap();
            let flux = recover_nodal_flux(&mesh, &field, &material).unwrap();
            let q = boundary_heat_flow(&mesh, &flux, &flat, EdgeTag::Top, 0).unwrap().total;
            flat_error = flat_error.max((q - 10.0).abs());
        }
    }

    let config = StudyConfig::default();
    let mut dmp_violation: f64 = 0.0;
    for &h in &config.h_sequence {
        let sol = solve_case1(h, &config).unwrap();
        let (lo, hi) = (sol.field.min(), sol.field.max());
        dmp_violation = dmp_violation.max((0.0 - lo).max(hi - 20.0)).max(0.0);
    }

    let ok = patch <= 1e-9 && flat_error <= 1e-9 && dmp_violation == 0.0;
    outcome(
        ok,
        format!(
            "patch max error {patch:.1e}, 1D |Q - 10| max {flat_error:.1e} W/m, \
             maximum-principle overshoot {dmp_violation:.1e} C"
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.csv"), dir.path().join("b.csv")];
    for p in &paths {
        let code = bridgebench::cli::run(["bridgebench", "converge", "--format", "csv", "-o", p.to_str().unwrap()]);
        assert_eq!(code, 0, "converge exited with {code}");
    }
    let a = std::fs::read(&paths[0]).unwrap();
    let b = std::fs::read(&paths[1]).unwrap();
    outcome(!a.is_empty() && a == b, format!("two converge runs, {} CSV bytes, identical: {}", a.len(), a == b))
}

fn main() {
    let default = StudyConfig::default();
    let (q4, q4_secs) = timed_study(&default);
    let (ext, ext_secs) = timed_study(&StudyConfig::extended());
    let q8 = serendipity_study(&default).expect("serendipity study failed");

    let results = [
        ("1 marginal-flux blow-up", marginal_flux(&q4, q4_secs)),
        ("2 temperature accuracy", temperature_accuracy(&q4)),
        ("3 masked convergence", masked_convergence(&q4)),
        ("4 unmasked non-convergence", unmasked_divergence(&q4, &ext, ext_secs)),
        ("5 serendipity negative result", serendipity(&q8)),
        ("6 oracle integrity", oracle_integrity(&q4)),
        ("7 method soundness", soundness()),
        ("8 determinism", determinism()),
    ];

    let mut failed = 0;
    for (name, o) in &results {
        println!("criterion {name}: {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
