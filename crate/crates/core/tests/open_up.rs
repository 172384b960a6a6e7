use logcap::bie::SolveOptions;
use logcap::Error;
use logcap::reference;
use logcap::slitmap::{capacity_of_intervals, map_to_slits, open_up, OpenUpOptions, SlitDomain};

const ROWS: [(f64, f64); 5] = [(-0.5, -0.1), (0.5, 0.6), (-0.5, 0.3), (-0.5, 0.5), (-0.01, 0.01)];

#[test]
fn interval_order_does_not_matter() {
    let sorted = [[-2.0, -1.2], [-0.7, 0.1], [0.4, 0.5], [1.0, 3.0]];
    let opts = OpenUpOptions::default();
    let reference = capacity_of_intervals(&sorted, &opts, None).unwrap().capacity.mu;
    for perm in [[3, 1, 0, 2], [2, 3, 1, 0], [1, 0, 3, 2]] {
        let shuffled: Vec<[f64; 2]> = perm.iter().map(|&i| sorted[i]).collect();
        let mu = capacity_of_intervals(&shuffled, &opts, None).unwrap().capacity.mu;
        assert!((mu - reference).abs() <= 1e-14 * reference, "{mu} vs {reference}");
    }
}

#[test]
fn converged_preimage_is_flat_and_keeps_the_axis_ratio() {
    let opts = OpenUpOptions { r: 0.3, ..Default::default() };
    for (a, b) in ROWS {
        let target = SlitDomain::from_intervals(&[[-1.0, a], [b, 1.0]]).unwrap();
        let res = open_up(&target, &opts).unwrap();
        let pre = &res.preimage;
        for (major, minor) in pre.major.iter().zip(&pre.minor) {
            assert!((minor / major - opts.r).abs() <= 1e-15, "{minor} / {major}");
        }
        let map = map_to_slits(&pre.discretize(opts.n).unwrap(), &SolveOptions::default()).unwrap();
        assert!(map.max_relative_flatness() <= 1e-9, "({a}, {b}): {}", map.max_relative_flatness());

        // defects settle into a decreasing tail
        let defects: Vec<f64> = res.history.iter().map(|s| s.defect).collect();
        let tail = &defects[defects.len() / 2..];
        let decreasing = tail.windows(2).filter(|w| w[1] < w[0]).count();
        assert!(decreasing * 4 >= (tail.len() - 1) * 3, "({a}, {b}): {defects:?}");
        assert!(*defects.last().unwrap() < opts.eps);
    }
}

#[test]
fn adding_an_interval_increases_capacity() {
    let opts = OpenUpOptions::default();
    let two = capacity_of_intervals(&[[-1.0, -0.5], [0.3, 1.0]], &opts, None).unwrap().capacity.mu;
    let three = capacity_of_intervals(&[[-1.0, -0.5], [0.3, 1.0], [3.0, 3.2]], &opts, None)
        .unwrap()
        .capacity
        .mu;
    let exact = reference::cap_two_intervals(-0.5, 0.3).unwrap();
    assert!((two - exact).abs() < 1e-13);
    assert!(three > two, "{two} {three}");
}

#[test]
fn nearly_touching_intervals_report_non_convergence_at_half_ratio() {
    let target = SlitDomain::from_intervals(&[[-1.0, -0.01], [0.01, 1.0]]).unwrap();
    match open_up(&target, &OpenUpOptions::default()) {
        Err(Error::OpenUpNotConverged { iterations, defect }) => {
            assert_eq!(iterations, 50);
            assert!(defect < 1e-12, "{defect}");
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}
