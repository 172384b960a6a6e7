//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Runs without the libtest harness so the lines
//! are visible in `cargo test` output.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use logcap::bie::SolveOptions;
use logcap::cantor::{capacity_sequence, extrapolate, CantorOptions, CantorSequence};
use logcap::capacity::{logcapacity, CapacityOptions, CapacityResult};
use logcap::geometry::{discretize, BoundaryComponent, Mesh};
use logcap::reference::{self, Table1Shape};
use logcap::slitmap::{capacity_of_intervals, OpenUpOptions};
use logcap::spec::DomainSpec;
use logcap::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances, as pinned by the criteria.
const DISK_TOL: f64 = 1e-13;
const DISK_SECONDS: f64 = 5.0;
const ELLIPSE_TOL: f64 = 1e-12;
const HALF_DISK_TOL: f64 = 1e-9;
const MONOTONE_BAND: f64 = 2.0;
const SQUARE_TOL: f64 = 1e-8;
const TWO_DISK_TOL: f64 = 1e-13;
const TWO_DISK_SECONDS: f64 = 2.0;
const INTERVAL_TOL: f64 = 1e-12;
const OPEN_UP_MAX_ITER: usize = 50;
const OPEN_UP_EPS: f64 = 1e-14;
// Axis ratio for the two-interval rows. The r = 0.5 used for Cantor sets needs
// 59 iterations on the nearly touching row; smaller r contracts faster.
const INTERVAL_RATIO: f64 = 0.3;
const CANTOR_FIRST_TOL: f64 = 1e-11;
const CANTOR_LEVEL_TOL: f64 = 1e-8;
const CANTOR_ESTIMATE_TOL: f64 = 1e-5;
const CANTOR_BRACKET: (f64, f64) = (0.22094810685, 0.22095089228);
const CANTOR_KMAX: usize = 8;
const GENERALIZED_TOL: f64 = 2e-4;
const SUM_M_TOL: f64 = 1e-12;
const AFFINE_TOL: f64 = 1e-10;
const CONSTANCY_TOL: f64 = 1e-8;
const KRYLOV_MAX: usize = 50;

const CANTOR_LEVELS: [f64; 6] = [
    0.235702260395518,
    0.228430704425426,
    0.224752818755436,
    0.222887290751916,
    0.221938129124324,
    0.221454205006181,
];
const CANTOR_ESTIMATE: f64 = 0.220949194629475;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

type Check = Result<Outcome, logcap::Error>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(x: f64, exact: f64) -> f64 {
    (x - exact).abs() / exact.abs()
}

fn capacity(components: &[BoundaryComponent], mesh: &Mesh) -> Result<CapacityResult, logcap::Error> {
    logcapacity(&discretize(components, mesh)?, &CapacityOptions::default())
}

fn max_iterations(res: &CapacityResult) -> usize {
    res.per_solve.iter().map(|d| d.iterations).max().unwrap_or(0)
}

fn disk() -> Check {
    let start = Instant::now();
    let res = capacity(&[BoundaryComponent::circle(c(0.0, 0.0), 2.0)], &Mesh::uniform(256)?)?;
    let seconds = start.elapsed().as_secs_f64();
    let exact = reference::table1_capacity(Table1Shape::Disk { r: 2.0 })?;
    let err = rel(res.mu, exact);
    Ok(Outcome::new(
        err <= DISK_TOL && seconds <= DISK_SECONDS,
        format!("r=2 n=256 rel err {err:.2e}, {seconds:.3} s"),
    ))
}

fn ellipse() -> Check {
    let exact = reference::table1_capacity(Table1Shape::Ellipse { a: 1.0, b: 0.1 })?;
    let mut worst: f64 = 0.0;
    for n in [256, 512, 1024] {
        let comp = BoundaryComponent::ellipse(c(0.0, 0.0), 1.0, 0.1, 0.0);
        worst = worst.max(rel(capacity(&[comp], &Mesh::uniform(n)?)?.mu, exact));
    }
    Ok(Outcome::new(worst <= ELLIPSE_TOL, format!("a=1 b=0.1 n=2^8..2^10 max rel err {worst:.2e}")))
}

fn half_disk() -> Check {
    let exact = reference::table1_capacity(Table1Shape::HalfDisk { r: 1.0 })?;
    let mut errors = Vec::new();
    for e in 10..=14 {
        let comp = BoundaryComponent::half_disk(c(0.0, 0.0), 1.0, 0.0);
        errors.push(rel(capacity(&[comp], &Mesh::new(1 << e, Some(3))?)?.mu, exact));
    }
    let at_4096 = errors[2];
    let monotone = errors.windows(2).all(|w| w[1] <= MONOTONE_BAND * w[0]) && errors[4] < errors[0];
    let listed: Vec<String> = errors.iter().map(|e| format!("{e:.2e}")).collect();
    Ok(Outcome::new(
        at_4096 <= HALF_DISK_TOL && monotone,
        format!("p=3 rel err n=2^10..2^14: {}", listed.join(", ")),
    ))
}

fn square() -> Check {
    let exact = 1.180340599016096;
    let oracle = reference::table1_capacity(Table1Shape::Square { h: 2.0 })?;
    let comp = BoundaryComponent::polygon(vec![c(1.0, 1.0), c(1.0, -1.0), c(-1.0, -1.0), c(-1.0, 1.0)])?;
    let err = rel(capacity(&[comp], &Mesh::new(4096, Some(3))?)?.mu, exact);
    let oracle_err = rel(oracle, exact);
    Ok(Outcome::new(
        err <= SQUARE_TOL && oracle_err <= 1e-15,
        format!("side 2 n=2^12 rel err {err:.2e} (closed form vs table value {oracle_err:.1e})"),
    ))
}

fn two_equal_disks() -> Check {
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    for r in [0.5, 0.7, 0.9] {
        let start = Instant::now();
        let comps = [
            BoundaryComponent::circle(c(1.0, 0.0), r),
            BoundaryComponent::circle(c(-1.0, 0.0), r),
        ];
        let mu = capacity(&comps, &Mesh::uniform(256)?)?.mu;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        worst = worst.max(rel(mu, reference::cap_two_equal_disks(1.0, r)?));
    }
    Ok(Outcome::new(
        worst <= TWO_DISK_TOL && slowest <= TWO_DISK_SECONDS,
        format!("z0=1 r=0.5,0.7,0.9 max rel err {worst:.2e}, slowest {slowest:.3} s"),
    ))
}

fn two_unequal_disks() -> Check {
    let mut worst: f64 = 0.0;
    for (u, v) in [(0.5, 0.7), (0.5, 1.0), (0.5, 1.5)] {
        let oracle = reference::cap_two_unequal_disks(u, v)?;
        let comps = [
            BoundaryComponent::circle(c(0.0, 0.0), 1.0),
            BoundaryComponent::circle(c(oracle.a, 0.0), oracle.r),
        ];
        worst = worst.max(rel(capacity(&comps, &Mesh::uniform(256)?)?.mu, oracle.capacity));
    }
    Ok(Outcome::new(worst <= TWO_DISK_TOL, format!("three (u,v) rows max rel err {worst:.2e}")))
}

fn two_intervals() -> Check {
    let opts = OpenUpOptions {
        n: 64,
        r: INTERVAL_RATIO,
        eps: OPEN_UP_EPS,
        max_iter: OPEN_UP_MAX_ITER,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    let mut most_iter = 0;
    for (a, b) in [(-0.5, -0.1), (0.5, 0.6), (-0.5, 0.3), (-0.5, 0.5), (-0.01, 0.01)] {
        let res = capacity_of_intervals(&[[-1.0, a], [b, 1.0]], &opts, Some(256))?;
        most_iter = most_iter.max(res.open_up.history.len());
        worst = worst.max(rel(res.capacity.mu, reference::cap_two_intervals(a, b)?));
    }
    Ok(Outcome::new(
        worst <= INTERVAL_TOL && most_iter <= OPEN_UP_MAX_ITER,
        format!("r={INTERVAL_RATIO}: five (a,b) rows max rel err {worst:.2e}, at most {most_iter} open-up iterations"),
    ))
}

fn cantor(seq: &CantorSequence) -> Check {
    if let Some((k, e)) = &seq.failure {
        return Ok(Outcome::new(false, format!("level {k} failed: {e}")));
    }
    let values = seq.capacities();
    let oracle = reference::table1_capacity(Table1Shape::SymmetricIntervals { a: 1.0 / 6.0, b: 0.5 })?;
    let first = rel(values[0], oracle);
    let oracle_check = (oracle - 2f64.sqrt() / 6.0).abs();
    let level_err = values
        .iter()
        .zip(CANTOR_LEVELS)
        .map(|(v, p)| (v - p).abs())
        .fold(0.0, f64::max);
    let fit = extrapolate(&values, 1, 1e-16, 0)?;
    let est_err = (fit.estimate - CANTOR_ESTIMATE).abs();
    let inside = (CANTOR_BRACKET.0..=CANTOR_BRACKET.1).contains(&fit.estimate);
    Ok(Outcome::new(
        first <= CANTOR_FIRST_TOL && oracle_check <= 1e-16 && level_err <= CANTOR_LEVEL_TOL && est_err <= CANTOR_ESTIMATE_TOL && inside,
        format!(
            "c(E_1) rel err {first:.1e}; k=1..6 max abs err {level_err:.1e}; kmax={CANTOR_KMAX} estimate {:.15} (off {est_err:.1e}, bracketed: {inside})",
            fit.estimate
        ),
    ))
}

fn generalized_cantor(sequences: &[(f64, CantorSequence)]) -> Check {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (r, seq) in sequences {
        if let Some((k, e)) = &seq.failure {
            return Ok(Outcome::new(false, format!("r={r}: level {k} failed: {e}")));
        }
        let est = extrapolate(&seq.capacities(), 1, 1e-16, 0)?.estimate;
        let dev = (est - reference::cantor_f(*r)?).abs();
        worst = worst.max(dev);
        parts.push(format!("r={r:.4} {est:.9}"));
    }
    Ok(Outcome::new(
        worst <= GENERALIZED_TOL,
        format!("{}; max |estimate - f(r)| {worst:.2e}", parts.join(", ")),
    ))
}

/// Disjoint disks with gaps of at least a quarter of the smaller radius.
fn random_disks(rng: &mut ChaCha8Rng) -> Vec<(Complex64, f64)> {
    let count = rng.gen_range(2..=4);
    let mut disks: Vec<(Complex64, f64)> = Vec::with_capacity(count);
    while disks.len() < count {
        let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let r = rng.gen_range(0.2..1.0);
        if disks.iter().all(|&(w, s)| (z - w).norm() > r + s + 0.25 * r.min(s)) {
            disks.push((z, r));
        }
    }
    disks
}

fn property_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mesh = Mesh::uniform(256)?;
    let (mut sum_m, mut affine, mut constancy, mut krylov): (f64, f64, f64, usize) = (0.0, 0.0, 0.0, 0);
    for _ in 0..20 {
        let disks = random_disks(&mut rng);
        let scale = Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..2.0 * PI));
        let shift = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let base: Vec<_> = disks.iter().map(|&(z, r)| BoundaryComponent::circle(z, r)).collect();
        let moved: Vec<_> = disks
            .iter()
            .map(|&(z, r)| BoundaryComponent::circle(scale * z + shift, scale.norm() * r))
            .collect();
        let a = capacity(&base, &mesh)?;
        let b = capacity(&moved, &mesh)?;
        for res in [&a, &b] {
            sum_m = sum_m.max((res.m.iter().sum::<f64>() - 1.0).abs());
            constancy = res.per_solve.iter().map(|d| d.constancy_deviation).fold(constancy, f64::max);
            krylov = krylov.max(max_iterations(res));
        }
        affine = affine.max(rel(b.mu, scale.norm() * a.mu));
    }
    Ok(Outcome::new(
        sum_m <= SUM_M_TOL && affine <= AFFINE_TOL && constancy <= CONSTANCY_TOL && krylov <= KRYLOV_MAX,
        format!(
            "20 configurations: |sum m - 1| {sum_m:.1e}, affine {affine:.1e}, h spread {constancy:.1e}, max {krylov} Krylov iterations"
        ),
    ))
}

fn arbitrary_specs() -> Check {
    // Mixed shapes in one spec stand in for the geometries that are not reproducible
    // (external boundary map, unpublished parameters, image data).
    let json = r#"{
        "n": 1024, "grading_p": 3,
        "components": [
            {"shape": "half_disk", "center": [-3, 0], "radius": 1, "angle": 0.5},
            {"shape": "circle", "center": [0, 2], "radius": 0.5},
            {"shape": "ellipse", "center": [2.5, 0], "a": 1, "b": 0.4, "rotation": 0.3},
            {"shape": "polygon", "vertices": [[0, -1], [1, -2], [-1, -2]]}
        ]
    }"#;
    let spec: DomainSpec = serde_json::from_str(json).map_err(|e| logcap::Error::Domain(e.to_string()))?;
    let disc = discretize(&spec.build_components()?, &spec.mesh(None, None)?)?;
    let res = logcapacity(&disc, &CapacityOptions { solve: SolveOptions::default() })?;
    let sum_m = (res.m.iter().sum::<f64>() - 1.0).abs();
    Ok(Outcome::new(
        res.mu.is_finite() && res.mu > 0.0 && sum_m <= SUM_M_TOL,
        format!(
            "4-component mixed spec: capacity {:.12}, |sum m - 1| {sum_m:.1e}; unreproducible geometries are documented, not tested",
            res.mu
        ),
    ))
}

fn report(index: usize, name: &str, outcome: Check) -> bool {
    let outcome = outcome.unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
    println!(
        "criterion {index:>2} {name}: {} ({})",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.detail
    );
    outcome.pass
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= report(1, "disk", disk());
    ok &= report(2, "ellipse", ellipse());
    ok &= report(3, "half-disk", half_disk());
    ok &= report(4, "square", square());
    ok &= report(5, "two equal disks", two_equal_disks());
    ok &= report(6, "two unequal disks", two_unequal_disks());
    ok &= report(7, "two intervals", two_intervals());

    let opts = CantorOptions::default();
    let mut sequences = Vec::new();
    let mut failed = None;
    for r in [1.0 / 8.0, 1.0 / 4.0, 1.0 / 3.0, 3.0 / 8.0] {
        match capacity_sequence(CANTOR_KMAX, r, &opts) {
            Ok(seq) => sequences.push((r, seq)),
            Err(e) => failed = Some(e),
        }
    }
    match failed {
        Some(e) => {
            ok &= report(8, "Cantor middle third", Err(e.clone()));
            ok &= report(9, "generalized Cantor", Err(e));
        }
        None => {
            ok &= report(8, "Cantor middle third", cantor(&sequences[2].1));
            ok &= report(9, "generalized Cantor", generalized_cantor(&sequences));
        }
    }
    ok &= report(10, "property suite", property_suite());
    ok &= report(11, "arbitrary specs", arbitrary_specs());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
