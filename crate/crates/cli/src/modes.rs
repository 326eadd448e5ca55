//! One function per run mode. Each returns `Ok(false)` only for failed verification.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use starwalk::scattering::{sticky_time_delay_fd, SMatrix};
use starwalk::simulate::{simulate_batch_range, simulate_terminal_batch, write_csv_rows, SimConfig};
use starwalk::verify::{flatten_reports, render_table, run_criterion, SuiteConfig, CRITERIA};
use starwalk::{
    classify_boundary, process_smatrix, resolvent, sticky_spectral, transition, GraphPoint, KernelMeasure,
    ProcessParams, Regime,
};

use crate::config::{ExperimentConfig, Format, Mode};
use crate::error::CliError;

/// Paths simulated per ordered chunk when streaming CSV.
const CHUNK: usize = 256;

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|source| CliError::Output { path: p.to_path_buf(), source })?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn dispatch(cfg: &ExperimentConfig) -> Result<bool, CliError> {
    let bc = cfg.validate()?;
    let params = classify_boundary(&bc);
    let start = cfg.run.start.to_point(cfg.graph.n_edges)?;
    let mut out = open_output(cfg.run.output.as_deref())?;
    let ok = match cfg.run.mode {
        Mode::Kernel => kernel_table(cfg, &params, start, false, &mut out).map(|_| true),
        Mode::Resolvent => kernel_table(cfg, &params, start, true, &mut out).map(|_| true),
        Mode::Scatter => scatter(cfg, &params, &mut out).map(|_| true),
        Mode::Simulate => simulate(cfg, &params, start, &mut out).map(|_| true),
        Mode::Verify => verify(cfg, &mut out),
    }?;
    out.flush()?;
    Ok(ok)
}

#[derive(Serialize)]
struct EdgeTable {
    edge: usize,
    y: Vec<f64>,
    density: Vec<f64>,
}

#[derive(Serialize)]
struct KernelTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    regime: String,
    atom: f64,
    total_mass: f64,
    edges: Vec<EdgeTable>,
}

fn kernel_table(
    cfg: &ExperimentConfig,
    params: &ProcessParams,
    start: GraphPoint,
    resolvent_mode: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let r = &cfg.run;
    let ys: Vec<f64> = (0..r.n_y).map(|i| r.y_max * i as f64 / (r.n_y - 1) as f64).collect();
    let (label, params_list) = if resolvent_mode { ("lambda", &r.lambda) } else { ("t", &r.t) };
    let mut tables = Vec::new();
    if r.format == Format::Csv {
        writeln!(out, "{label},edge,y,density,atom")?;
    }
    for &p in params_list {
        let k: KernelMeasure = if resolvent_mode { resolvent(params, p, start)? } else { transition(params, p, start)? };
        let mut edges = Vec::new();
        for m in 0..params.n_edges() {
            let density = ys.iter().map(|&y| k.density(m, y)).collect::<Result<Vec<_>, _>>()?;
            if r.format == Format::Csv {
                for (y, d) in ys.iter().zip(&density) {
                    writeln!(out, "{p:?},{},{y:?},{d:?},{:?}", m + 1, k.atom())?;
                }
            }
            edges.push(EdgeTable { edge: m + 1, y: ys.clone(), density });
        }
        if r.format == Format::Json {
            tables.push(KernelTable {
                t: (!resolvent_mode).then_some(p),
                lambda: resolvent_mode.then_some(p),
                regime: params.regime().to_string(),
                atom: k.atom(),
                total_mass: k.total_mass()?,
                edges,
            });
        }
    }
    if r.format == Format::Json {
        serde_json::to_writer_pretty(&mut *out, &tables).map_err(io::Error::from)?;
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct StickyInfo {
    k: f64,
    bound_state_energy: f64,
    kappa: f64,
    time_delay: f64,
    time_delay_fd: f64,
}

#[derive(Serialize)]
struct ScatterReport {
    lambda: f64,
    regime: String,
    s_matrix: Vec<Vec<f64>>,
    determinant: f64,
    involution_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sticky: Option<StickyInfo>,
}

/// Prints `-0` as `0`.
fn clean(v: f64) -> f64 {
    v + 0.0
}

fn fmt_matrix(s: &SMatrix) -> String {
    let rows: Vec<String> = s
        .rows()
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|v| clean(*v).to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    format!("[{}]", rows.join(","))
}

fn scatter(cfg: &ExperimentConfig, params: &ProcessParams, out: &mut dyn Write) -> Result<(), CliError> {
    let sticky = if params.regime() == Regime::Sticky {
        let k = cfg.run.k;
        let sp = sticky_spectral(params.gamma(), params.n_edges(), k)?;
        let t = sticky_time_delay_fd(params.gamma(), params.weights(), k, 1e-4 * k)?;
        // the time-delay matrix has rank one, so the trace is its eigenvalue
        let fd = (0..params.n_edges()).map(|i| t[(i, i)].re).sum();
        Some(StickyInfo { k, bound_state_energy: sp.energy, kappa: sp.kappa(), time_delay: sp.time_delay, time_delay_fd: fd })
    } else {
        None
    };
    let mut reports = Vec::new();
    for &lambda in &cfg.run.lambda {
        let s = process_smatrix(params, lambda)?;
        if cfg.run.format == Format::Json {
            reports.push(ScatterReport {
                lambda,
                regime: params.regime().to_string(),
                s_matrix: s.rows().into_iter().map(|r| r.into_iter().map(clean).collect()).collect(),
                determinant: clean(s.determinant()),
                involution_residual: s.involution_residual(),
                sticky: None,
            });
        } else {
            writeln!(out, "lambda = {lambda}")?;
            writeln!(out, "regime = {}", params.regime())?;
            writeln!(out, "S = {}", fmt_matrix(&s))?;
            writeln!(out, "det = {}", clean(s.determinant()))?;
            writeln!(out, "involution_residual = {:e}", s.involution_residual())?;
        }
    }
    match cfg.run.format {
        Format::Json => {
            if let (Some(first), Some(info)) = (reports.first_mut(), sticky) {
                first.sticky = Some(info);
            }
            serde_json::to_writer_pretty(&mut *out, &reports).map_err(io::Error::from)?;
            writeln!(out)?;
        }
        Format::Csv => {
            if let Some(info) = sticky {
                writeln!(out, "bound_state_energy = {}", info.bound_state_energy)?;
                writeln!(out, "time_delay(k = {}) = {} (finite difference {})", info.k, info.time_delay, info.time_delay_fd)?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct TerminalRecord {
    path_id: usize,
    /// 1-based edge, 0 for the vertex, absent once killed.
    edge: Option<usize>,
    x: Option<f64>,
    lifetime: Option<f64>,
    local_time: f64,
    alive: bool,
}

fn simulate(cfg: &ExperimentConfig, params: &ProcessParams, start: GraphPoint, out: &mut dyn Write) -> Result<(), CliError> {
    let r = &cfg.run;
    let sim = SimConfig {
        dt: r.dt,
        horizon: r.horizon,
        n_paths: r.n_paths,
        record_every: r.record_every,
        ..SimConfig::default()
    };
    sim.validate()?;
    match r.format {
        Format::Csv => {
            writeln!(out, "path_id,time,edge,x,local_time,alive")?;
            let mut first = 0;
            while first < r.n_paths {
                let last = (first + CHUNK).min(r.n_paths);
                let paths = simulate_batch_range(params, start, &sim, r.seed, first..last)?;
                for (i, p) in paths.iter().enumerate() {
                    write_csv_rows(out, first + i, p)?;
                }
                first = last;
            }
        }
        Format::Json => {
            let terms = simulate_terminal_batch(params, start, &sim, r.seed)?;
            let recs: Vec<TerminalRecord> = terms
                .iter()
                .enumerate()
                .map(|(path_id, t)| {
                    let (edge, x) = match t.state {
                        None => (None, None),
                        Some(GraphPoint::Vertex) => (Some(0), Some(0.0)),
                        Some(GraphPoint::Interior { edge, x }) => (Some(edge + 1), Some(x)),
                    };
                    TerminalRecord {
                        path_id,
                        edge,
                        x,
                        lifetime: t.lifetime.is_finite().then_some(t.lifetime),
                        local_time: t.local_time,
                        alive: t.state.is_some(),
                    }
                })
                .collect();
            serde_json::to_writer_pretty(&mut *out, &recs).map_err(io::Error::from)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn verify(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<bool, CliError> {
    let suite = SuiteConfig { suite: cfg.run.suite.into(), seed: cfg.run.seed };
    // the JSON report owns stdout unless it goes to a file
    let to_file = cfg.run.output.is_some();
    let mut reports = Vec::new();
    for (id, _, _) in CRITERIA {
        let r = run_criterion(id, &suite)?;
        let table = render_table(std::slice::from_ref(&r));
        if to_file {
            print!("{table}");
        } else {
            eprint!("{table}");
        }
        reports.push(r);
    }
    let pass = reports.iter().all(|r| r.pass);
    serde_json::to_writer_pretty(&mut *out, &flatten_reports(&reports, suite.suite)).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(pass)
}
