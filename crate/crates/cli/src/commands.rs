use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use logcap::bie::SolveOptions;
use logcap::cantor::{capacity_sequence, extrapolate, CantorOptions};
use logcap::capacity::{logcapacity, CapacityOptions, CapacityResult};
use logcap::geometry::discretize;
use logcap::reference::{self, Table1Shape};
use logcap::slitmap::{capacity_of_intervals, OpenUpOptions};
use logcap::spec::DomainSpec;

use crate::args::{CantorArgs, CapacityArgs, ConvergenceArgs, IntervalsArgs, OpenUpArgs, OracleArgs, SolverArgs};
use crate::error::{CliError, CliResult};
use crate::output::{csv, emit, emit_json, num, read_json};

fn solve_options(s: &SolverArgs) -> CliResult<SolveOptions> {
    let opts = SolveOptions { tol: s.tol, maxit: s.maxit };
    opts.validate()?;
    Ok(opts)
}

fn open_up_options(o: &OpenUpArgs, s: &SolverArgs) -> CliResult<OpenUpOptions> {
    let opts = OpenUpOptions {
        r: o.ratio,
        n: o.n_open,
        eps: o.eps,
        max_iter: o.max_iter,
        solve: solve_options(s)?,
    };
    opts.validate()?;
    Ok(opts)
}

#[derive(Debug, Serialize)]
struct CapacityJson {
    mu: f64,
    log_mu: f64,
    m: Vec<f64>,
    h_matrix: Vec<Vec<f64>>,
    iterations: Vec<usize>,
    residuals: Vec<f64>,
    constancy_deviation: Vec<f64>,
    n: usize,
    elapsed_s: f64,
}

impl CapacityJson {
    fn new(res: &CapacityResult, n: usize) -> Self {
        Self {
            mu: res.mu,
            log_mu: res.log_mu,
            m: res.m.clone(),
            h_matrix: res.h_matrix.clone(),
            iterations: res.per_solve.iter().map(|d| d.iterations).collect(),
            residuals: res.per_solve.iter().map(|d| d.residual).collect(),
            constancy_deviation: res.per_solve.iter().map(|d| d.constancy_deviation).collect(),
            n,
            elapsed_s: res.elapsed,
        }
    }
}

pub fn capacity(args: &CapacityArgs) -> CliResult<()> {
    let spec: DomainSpec = read_json(&args.spec)?;
    let opts = CapacityOptions {
        solve: solve_options(&args.solver)?,
    };
    let mesh = spec.mesh(args.n, args.grading_p)?;
    let disc = discretize(&spec.build_components()?, &mesh)?;
    let res = logcapacity(&disc, &opts)?;
    emit_json(args.out.as_ref(), &CapacityJson::new(&res, mesh.n()))
}

#[derive(Debug, Serialize)]
struct IntervalsJson {
    #[serde(flatten)]
    capacity: CapacityJson,
    intervals: Vec<[f64; 2]>,
    open_up_iterations: usize,
    final_defect: f64,
}

pub fn intervals(args: &IntervalsArgs) -> CliResult<()> {
    let list: Vec<[f64; 2]> = read_json(&args.spec)?;
    let opts = open_up_options(&args.open_up, &args.solver)?;
    let res = capacity_of_intervals(&list, &opts, args.open_up.n_cap)?;
    let history = &res.open_up.history;
    if let Some(path) = &args.history {
        let rows = history
            .iter()
            .map(|s| vec![s.iteration.to_string(), num(s.defect), s.gmres_iterations.to_string()]);
        emit(Some(path), &csv(&["iteration", "defect", "gmres_iterations"], rows))?;
    }
    emit_json(
        args.out.as_ref(),
        &IntervalsJson {
            capacity: CapacityJson::new(&res.capacity, res.cap_n),
            intervals: res.intervals.clone(),
            open_up_iterations: history.len(),
            final_defect: history.last().map_or(f64::NAN, |s| s.defect),
        },
    )
}

#[derive(Debug, Serialize)]
struct LevelJson {
    k: usize,
    capacity: f64,
    open_up_iterations: usize,
    cap_n: usize,
    elapsed_s: f64,
}

#[derive(Debug, Serialize)]
struct FitJson {
    p1: f64,
    p2: f64,
    estimate: f64,
    residual: f64,
    d: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct FailureJson {
    k: usize,
    message: String,
}

#[derive(Debug, Serialize)]
struct CantorJson {
    r: f64,
    kmax: usize,
    levels: Vec<LevelJson>,
    fit: Option<FitJson>,
    failure: Option<FailureJson>,
}

pub fn cantor(args: &CantorArgs) -> CliResult<()> {
    let opts = CantorOptions {
        open_up: open_up_options(&args.open_up, &args.solver)?,
        cap_n: args.open_up.n_cap,
    };
    let seq = capacity_sequence(args.kmax, args.r, &opts)?;
    let values = seq.capacities();
    let fit = if values.len() >= 3 {
        Some(extrapolate(&values, 1, 1e-16, args.burn_in)?)
    } else {
        None
    };
    if let (Some(path), Some(fit)) = (&args.csv, &fit) {
        let rows = fit.d.iter().enumerate().map(|(i, d)| {
            let k = (fit.first_k + i) as f64;
            vec![format!("{k}"), num(*d), num(fit.p(k)), num(fit.p(k).exp())]
        });
        emit(Some(path), &csv(&["k", "d_k", "p_k", "exp_p_k"], rows))?;
    }
    let json = CantorJson {
        r: args.r,
        kmax: args.kmax,
        levels: seq
            .levels
            .iter()
            .map(|l| LevelJson {
                k: l.k,
                capacity: l.capacity,
                open_up_iterations: l.open_up_iterations,
                cap_n: l.cap_n,
                elapsed_s: l.elapsed,
            })
            .collect(),
        fit: fit.map(|f| FitJson {
            p1: f.p1,
            p2: f.p2,
            estimate: f.estimate,
            residual: f.residual,
            d: f.d,
        }),
        failure: seq.failure.as_ref().map(|(k, e)| FailureJson {
            k: *k,
            message: e.to_string(),
        }),
    };
    emit_json(args.out.as_ref(), &json)?;
    match seq.failure {
        Some((_, e)) => Err(e.into()),
        None => Ok(()),
    }
}

#[derive(Debug, Serialize)]
struct OracleJson {
    formula: String,
    params: Vec<f64>,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
}

pub fn oracle(args: &OracleArgs) -> CliResult<()> {
    let p = &args.params;
    let want = |count: usize| -> CliResult<()> {
        if p.len() == count {
            Ok(())
        } else {
            Err(CliError::Input(format!(
                "formula `{}` takes {count} parameter(s), got {}",
                args.formula,
                p.len()
            )))
        }
    };
    let mut extra = (None, None);
    let value = match args.formula.as_str() {
        "disk" | "half_disk" | "segment" | "square" => {
            want(1)?;
            let shape = match args.formula.as_str() {
                "disk" => Table1Shape::Disk { r: p[0] },
                "half_disk" => Table1Shape::HalfDisk { r: p[0] },
                "segment" => Table1Shape::Segment { h: p[0] },
                _ => Table1Shape::Square { h: p[0] },
            };
            reference::table1_capacity(shape)?
        }
        "ellipse" => {
            want(2)?;
            reference::table1_capacity(Table1Shape::Ellipse { a: p[0], b: p[1] })?
        }
        "symmetric_intervals" => {
            want(2)?;
            reference::table1_capacity(Table1Shape::SymmetricIntervals { a: p[0], b: p[1] })?
        }
        "two_equal_disks" => {
            want(2)?;
            reference::cap_two_equal_disks(p[0], p[1])?
        }
        "two_unequal_disks" => {
            want(2)?;
            let res = reference::cap_two_unequal_disks(p[0], p[1])?;
            extra = (Some(res.a), Some(res.r));
            res.capacity
        }
        "two_intervals" => {
            want(2)?;
            reference::cap_two_intervals(p[0], p[1])?
        }
        "interval_pair" => {
            want(4)?;
            reference::cap_interval_pair([p[0], p[1]], [p[2], p[3]])?
        }
        "cantor_f" => {
            want(1)?;
            reference::cantor_f(p[0])?
        }
        "elliptic_k" => {
            want(1)?;
            reference::elliptic_k(p[0])?
        }
        "inverse_sn" => {
            want(2)?;
            reference::inverse_sn(p[0], p[1])?
        }
        "theta" => {
            // index, Re z, Im z, q; the modulus of the value is reported for complex z
            want(4)?;
            if !(1.0..=4.0).contains(&p[0]) || p[0].fract() != 0.0 {
                return Err(CliError::Input(format!("theta index must be 1..4, got {}", p[0])));
            }
            let v = reference::theta(p[0] as u8, Complex64::new(p[1], p[2]), Complex64::new(p[3], 0.0))?;
            if v.im == 0.0 {
                v.re
            } else {
                v.norm()
            }
        }
        other => return Err(CliError::Input(format!("unknown formula `{other}`"))),
    };
    emit_json(
        args.out.as_ref(),
        &OracleJson {
            formula: args.formula.clone(),
            params: p.clone(),
            value,
            a: extra.0,
            r: extra.1,
        },
    )
}

pub fn convergence(args: &ConvergenceArgs) -> CliResult<()> {
    let spec: DomainSpec = read_json(&args.spec)?;
    let exact = spec.known_capacity().ok_or_else(|| {
        CliError::Input("no known capacity for this spec; add an `exact` field".into())
    })?;
    let comps = spec.build_components()?;
    let opts = CapacityOptions {
        solve: solve_options(&args.solver)?,
    };
    // Validate every n up front so bad input fails before any solve.
    let meshes = args
        .n_list
        .iter()
        .map(|&n| spec.mesh(Some(n), args.grading_p))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = meshes.iter().map(|mesh| {
        let start = Instant::now();
        let run = discretize(&comps, mesh).and_then(|disc| logcapacity(&disc, &opts));
        let seconds = start.elapsed().as_secs_f64();
        match run {
            Ok(res) => vec![
                mesh.n().to_string(),
                format!("{:.17e}", res.mu),
                num((res.mu - exact).abs() / exact.abs()),
                res.per_solve.iter().map(|d| d.iterations).max().unwrap_or(0).to_string(),
                format!("{seconds:.3}"),
                "ok".into(),
            ],
            Err(e) => vec![
                mesh.n().to_string(),
                String::new(),
                String::new(),
                String::new(),
                format!("{seconds:.3}"),
                format!("\"{}\"", e.to_string().replace('"', "'")),
            ],
        }
    });
    let text = csv(&["n", "mu", "rel_error", "iterations", "seconds", "status"], rows.collect::<Vec<_>>());
    emit(args.out.as_ref(), &text)
}
