use qmimo::experiments::{region_scan, region_scan_with, GridSpec};
use qmimo::Execution;

fn interior(points: usize) -> GridSpec {
    // Drops the ε = 1 plane, where both strategies score 0 and tie.
    let step = 1.0 / (points - 1) as f64;
    GridSpec {
        eps_range: (0.0, 1.0 - step),
        ..GridSpec::standard(points)
    }
}

#[test]
fn standard_grid_fraction() {
    let s = region_scan(&GridSpec::standard(200)).unwrap();
    assert_eq!(s.grid_points, 8_000_000);
    assert!((0.94..=0.96).contains(&s.fraction), "{}", s.fraction);
}

#[test]
#[ignore = "ties on the eps = 1 plane shift the fraction by ~1/n; see interior_grid_converges"]
fn standard_grid_converges() {
    let coarse = region_scan(&GridSpec::standard(100)).unwrap().fraction;
    let fine = region_scan(&GridSpec::standard(200)).unwrap().fraction;
    assert!((coarse - fine).abs() <= 0.005, "{coarse} vs {fine}");
}

#[test]
fn interior_grid_converges() {
    let coarse = region_scan(&interior(100)).unwrap().fraction;
    let fine = region_scan(&interior(200)).unwrap().fraction;
    assert!((coarse - fine).abs() <= 0.005, "{coarse} vs {fine}");
}

#[test]
fn sequential_and_parallel_agree() {
    let grid = GridSpec::standard(60);
    let a = region_scan_with(&grid, Execution::Sequential).unwrap();
    let b = region_scan_with(&grid, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}
