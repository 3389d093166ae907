use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use hjb_core::lattice::write_dump;
use hjb_core::problem::{list_problems as catalogue, BellmanProblem, ProblemConfig};
use hjb_core::solver::{solve as run_solve, SolveError};
use hjb_core::stencil::{decompose_matrix, reconstruct, DirectionSet, SymMatrix};
use hjb_core::study::suites::{run_suite, SuiteOptions};
use hjb_core::study::{render_svg, run_convergence_study, Reference, StudyError, StudyOptions, StudyReport};
use serde_json::json;

use crate::config::{ReferenceKind, RunConfig};
use crate::CliError;

/// Rate floor printed with every study.
pub const RATE_FLOOR: f64 = 0.61;

fn build_problem(c: &ProblemConfig) -> Result<BellmanProblem<f64>, CliError> {
    c.build::<f64>().map_err(|e| CliError::Config(e.to_string()))
}

fn prepare_output(c: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&c.output_dir)?;
    fs::write(c.output_dir.join("config.json"), c.to_json() + "\n")?;
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn solve(c: &RunConfig) -> Result<(), CliError> {
    let p = build_problem(&c.problem)?;
    let grid = Arc::new(p.grid(c.h).map_err(|e| CliError::Config(e.to_string()))?);
    prepare_output(c)?;
    let (v, report, failure) = match run_solve(&p, grid, &c.solve_options()) {
        Ok((v, r)) => (v, r, None),
        Err(SolveError::NotConverged { best, report }) => {
            let msg =
                format!("no convergence after {} iterations, residual {:.11e}", report.iterations, report.residual);
            (*best, *report, Some(msg))
        }
        Err(e) => return Err(CliError::Solve(e.to_string())),
    };
    let out = &c.output_dir;
    let file = fs::File::create(out.join("solution.hjbgrid"))?;
    write_dump(v.grid(), Some(v.values()), BufWriter::new(file))?;
    write_json(&out.join("solve_report.json"), &report)?;
    write_json(&out.join("timing.json"), &json!({ "solve_seconds": report.wall_time.as_secs_f64() }))?;
    println!(
        "{} on {} at h = {}: {} iterations, residual {:.11e}, {} interior nodes",
        report.method,
        p.name(),
        c.h,
        report.iterations,
        report.residual,
        report.n_interior
    );
    match failure {
        Some(msg) => Err(CliError::Solve(msg)),
        None => Ok(()),
    }
}

fn write_study(c: &RunConfig, report: &StudyReport) -> Result<(), CliError> {
    let out = &c.output_dir;
    write_json(&out.join("study_report.json"), report)?;
    fs::write(out.join("errors.csv"), report.to_csv())?;
    if c.plot {
        fs::write(out.join("rate.svg"), render_svg(report))?;
    }
    Ok(())
}

pub fn study(c: &RunConfig) -> Result<(), CliError> {
    let p = build_problem(&c.problem)?;
    let exact = matches!(c.reference, ReferenceKind::Exact)
        || (matches!(c.reference, ReferenceKind::Auto) && c.problem.use_exact && p.exact().is_some());
    let h_min = c.h_list.iter().copied().fold(f64::INFINITY, f64::min);
    let opts = StudyOptions {
        h_list: c.h_list.clone(),
        reference: if exact { Reference::Exact } else { Reference::FineGrid { h_ref: c.h_ref.unwrap_or(h_min / 2.0) } },
        solve: c.solve_options(),
        monitor_pairs: c.monitor_pairs,
        seed: c.seed,
    };
    prepare_output(c)?;
    let clock = Instant::now();
    let report = match run_convergence_study(&p, &opts) {
        Ok(r) => r,
        Err(StudyError::Solve { h, source, partial }) => {
            write_study(c, &partial)?;
            return Err(CliError::Solve(format!("at h = {h}: {source}")));
        }
        Err(e) => return Err(CliError::Config(e.to_string())),
    };
    write_study(c, &report)?;
    write_json(&c.output_dir.join("timing.json"), &json!({ "study_seconds": clock.elapsed().as_secs_f64() }))?;
    println!("{} ({} reference)", report.problem, report.reference);
    println!("{:>12}  {:>18}", "h", "error");
    for (h, e) in report.pairs() {
        println!("{h:>12}  {e:>18.11e}");
    }
    match &report.rate {
        Some(fit) => {
            let verdict = if fit.rate >= RATE_FLOOR { "PASS" } else { "FAIL" };
            println!("rate p = {:.11e}; floor {RATE_FLOOR}: {verdict}", fit.rate);
        }
        None => println!("rate undefined: {}", report.rate_note.as_deref().unwrap_or("no data")),
    }
    Ok(())
}

pub fn check(c: &RunConfig) -> Result<(), CliError> {
    let opts = SuiteOptions { seed: c.seed, h: c.check_h, tol: c.tol, ..SuiteOptions::default() };
    let mut results = Vec::new();
    for name in &c.suites {
        let r = run_suite(name, &opts).map_err(CliError::Config)?;
        println!("{:<14} {}/{} passed, {} skipped", r.suite, r.passed, r.cases, r.skipped);
        results.push(r);
    }
    prepare_output(c)?;
    write_json(&c.output_dir.join("check_report.json"), &results)?;
    match results.iter().find(|r| !r.ok()) {
        Some(r) => {
            let witness = serde_json::to_string_pretty(&r.first_counterexample).expect("counterexample serializes");
            println!("first counterexample in {}:\n{witness}", r.suite);
            Err(CliError::CheckFailed(format!("suite `{}` failed {} of {} cases", r.suite, r.failed, r.cases)))
        }
        None => Ok(()),
    }
}

pub fn decompose(c: &RunConfig) -> Result<(), CliError> {
    let rows = c.matrix.as_ref().expect("validated");
    let a = SymMatrix::from_rows(rows).map_err(|e| CliError::Config(e.to_string()))?;
    let dirs = match &c.directions {
        Some(d) => DirectionSet::new(a.dim(), d.clone(), None),
        None => DirectionSet::canonical(a.dim()),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    let dec = decompose_matrix(&a, &dirs, c.floor).map_err(|e| CliError::Solve(e.to_string()))?;
    let error = reconstruct(&dec.lambda, &dirs).max_abs_diff(&a);
    let out = json!({
        "directions": dirs.offsets(),
        "lambda": dec.lambda,
        "path": dec.path,
        "reconstruction_error": error,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
    Ok(())
}

pub fn list_problems(as_json: bool) {
    let entries = catalogue();
    if as_json {
        println!("{}", serde_json::to_string_pretty(&entries).expect("catalogue serializes"));
        return;
    }
    for e in entries {
        let exact = if e.has_exact_solution { "closed-form solution" } else { "fine-grid reference" };
        println!("{}  ({exact})\n    {}", e.name, e.description);
        for p in e.params {
            println!("    {:<22} {:<12} default {}  {}", p.name, p.kind, p.default, p.description);
        }
    }
}
