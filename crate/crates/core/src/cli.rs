//! Configuration files, run and sweep drivers, CSV output.
//!
//! A run configuration is a TOML file of scalars:
//!
//! ```toml
//! problem = "advect1d_sine"
//! P = 6
//! H = 4
//! scheme = "mf"
//! time_order = 3
//! ```
//!
//! A sweep adds list-valued keys `P_values`, `H_values` and `schemes`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::diagnostics::{NormEvaluator, NormReport};
use crate::error::{Error, Result};
use crate::mesh::{init_field, BoundaryCondition, Field, Mesh};
use crate::problems::{make_problem, ProblemId, ProblemSpec};
use crate::remap1d::{step_1d, StepContext};
use crate::remap2d::step_2d;
use crate::scheme::{BoundaryMethod, Constraints, SchemeSpec};
use crate::spectral::{NodeBasis, NodeRule};
use crate::transport::{DtMode, DtRule, StepControl, TimeOrder, VelocityModel};

/// Raw file contents; every key is optional so defaults live in one place.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: Option<String>,
    #[serde(rename = "P", alias = "p")]
    degree: Option<usize>,
    #[serde(rename = "H", alias = "h")]
    count: Option<usize>,
    #[serde(rename = "Hx", alias = "hx")]
    count_x: Option<usize>,
    #[serde(rename = "Hy", alias = "hy")]
    count_y: Option<usize>,
    scheme: Option<String>,
    time_order: Option<u32>,
    boundary_method: Option<String>,
    bc: Option<String>,
    #[serde(rename = "T", alias = "t_end")]
    t_end: Option<f64>,
    dt_mode: Option<String>,
    dt: Option<f64>,
    cfl_safety: Option<f64>,
    node_rule: Option<String>,
    dt_rule: Option<String>,
    output_every: Option<usize>,
    out_dir: Option<PathBuf>,
    velocity_scale: Option<f64>,
    threads: Option<usize>,
    #[serde(rename = "P_values", alias = "p_values")]
    degrees: Option<Vec<usize>>,
    #[serde(rename = "H_values", alias = "h_values")]
    counts: Option<Vec<usize>>,
    schemes: Option<Vec<String>>,
}

/// A validated single-run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemId,
    /// Polynomial degree `P`; each subdomain carries `P + 1` nodes.
    pub degree: usize,
    /// Subdomains per direction (`counts[1]` is ignored in 1D).
    pub counts: [usize; 2],
    pub scheme: SchemeSpec,
    pub bc: BoundaryCondition,
    pub t_end: f64,
    pub dt_mode: DtMode,
    pub dt: Option<f64>,
    pub cfl_safety: f64,
    pub node_rule: NodeRule,
    /// Record norms every this many steps (and always at `t = 0` and `T`).
    pub output_every: usize,
    pub out_dir: Option<PathBuf>,
    /// Multiplies the problem velocity; zero freezes the solution.
    pub velocity_scale: f64,
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Defaults of `problem` with `P = 4`, `H = 4` and the Basecase scheme.
    pub fn new(problem: ProblemId) -> Self {
        let spec = make_problem::<f64>(problem);
        Self {
            problem,
            degree: 4,
            counts: [4, 4],
            scheme: SchemeSpec::new(Constraints::BoundaryOnly, TimeOrder::First),
            bc: spec.default_bc,
            t_end: spec.t_end,
            dt_mode: DtMode::Auto,
            dt: None,
            cfl_safety: 1.0,
            node_rule: NodeRule::Standard,
            output_every: 10,
            out_dir: None,
            velocity_scale: 1.0,
            threads: None,
        }
    }

    pub fn with_grid(mut self, degree: usize, count: usize) -> Self {
        self.degree = degree;
        self.counts = [count, count];
        self
    }

    pub fn with_scheme(mut self, scheme: SchemeSpec) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn dim(&self) -> usize {
        make_problem::<f64>(self.problem).dim
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.degree < 1 {
            return cfg("P must be at least 1".into());
        }
        if self.counts[0] < 1 || (self.dim() == 2 && self.counts[1] < 1) {
            return cfg("H must be at least 1".into());
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return cfg(format!("T = {} must be positive", self.t_end));
        }
        if self.scheme.constraints.has_energy() && self.dim() != 1 {
            return cfg("the mef scheme is only available in 1D".into());
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety.is_finite()) {
            return cfg("cfl_safety must be positive".into());
        }
        if self.dt_mode == DtMode::Fixed && !self.dt.is_some_and(|d| d > 0.0 && d.is_finite()) {
            return cfg("dt_mode = \"fixed\" needs a positive dt".into());
        }
        if !self.velocity_scale.is_finite() {
            return cfg("velocity_scale must be finite".into());
        }
        if self.threads == Some(0) {
            return cfg("threads must be positive".into());
        }
        Ok(())
    }

    fn from_raw(raw: &RawConfig) -> Result<Self> {
        let problem: ProblemId =
            raw.problem.as_deref().ok_or_else(|| Error::Config("missing key `problem`".into()))?.parse()?;
        let mut c = Self::new(problem);
        if let Some(p) = raw.degree {
            c.degree = p;
        }
        if let Some(h) = raw.count {
            c.counts = [h, h];
        }
        if let Some(h) = raw.count_x {
            c.counts[0] = h;
        }
        if let Some(h) = raw.count_y {
            c.counts[1] = h;
        }
        let order = TimeOrder::from_int(raw.time_order.unwrap_or(1)).map_err(|e| Error::Config(e.to_string()))?;
        c.scheme = match raw.scheme.as_deref() {
            // a case name carries its own order
            Some(s) if s.chars().any(|ch| ch.is_ascii_digit()) => {
                let named = SchemeSpec::parse_name(s)?;
                if raw.time_order.is_some_and(|o| o != named.time_order.as_int()) {
                    return Err(Error::Config(format!("scheme `{s}` conflicts with time_order")));
                }
                named
            }
            Some(s) => SchemeSpec::new(s.parse()?, order),
            None => SchemeSpec::new(Constraints::BoundaryOnly, order),
        };
        if let Some(b) = &raw.boundary_method {
            c.scheme.boundary = b.parse::<BoundaryMethod>()?;
        }
        if let Some(r) = &raw.dt_rule {
            c.scheme.dt_rule = r.parse::<DtRule>().map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(bc) = &raw.bc {
            c.bc = bc.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        }
        if let Some(t) = raw.t_end {
            c.t_end = t;
        }
        if let Some(m) = &raw.dt_mode {
            c.dt_mode = m.parse()?;
        }
        c.dt = raw.dt;
        if let Some(s) = raw.cfl_safety {
            c.cfl_safety = s;
        }
        if let Some(r) = &raw.node_rule {
            c.node_rule = r.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        }
        if let Some(o) = raw.output_every {
            c.output_every = o;
        }
        c.out_dir = raw.out_dir.clone();
        if let Some(v) = raw.velocity_scale {
            c.velocity_scale = v;
        }
        c.threads = raw.threads;
        c.validate()?;
        Ok(c)
    }

    /// Parses a run configuration; list-valued sweep keys are rejected.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw = parse_raw(text)?;
        if raw.degrees.is_some() || raw.counts.is_some() || raw.schemes.is_some() {
            return Err(Error::Config("sweep keys in a run configuration".into()));
        }
        Self::from_raw(&raw)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&read_config(path)?)
    }
}

fn parse_raw(text: &str) -> Result<RawConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

fn read_config(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// A convergence sweep over `P`, `H` and schemes on top of a base run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub degrees: Vec<usize>,
    pub counts: Vec<usize>,
    pub schemes: Vec<SchemeSpec>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.degrees.is_empty() || self.counts.is_empty() || self.schemes.is_empty() {
            return Err(Error::Config("sweep lists must be nonempty".into()));
        }
        for case in self.cases() {
            case.validate()?;
        }
        Ok(())
    }

    /// Every run of the sweep, grouped by scheme then `P`, with `H` innermost.
    pub fn cases(&self) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for &scheme in &self.schemes {
            for &p in &self.degrees {
                for &h in &self.counts {
                    out.push(self.base.clone().with_scheme(scheme).with_grid(p, h));
                }
            }
        }
        out
    }

    /// Sweep entries are case names (`MF2`) or bare schemes that take the base time order.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut raw = parse_raw(text)?;
        let degrees = raw.degrees.take().unwrap_or_else(|| raw.degree.into_iter().collect());
        let counts = raw.counts.take().unwrap_or_else(|| raw.count.into_iter().collect());
        let names = raw.schemes.take();
        let base = RunConfig::from_raw(&raw)?;
        let schemes = match names {
            None => vec![base.scheme],
            Some(list) => list
                .iter()
                .map(|name| {
                    let s = if name.chars().any(|c| c.is_ascii_digit()) {
                        SchemeSpec::parse_name(name)?
                    } else {
                        SchemeSpec::new(name.parse()?, base.scheme.time_order)
                    };
                    Ok(SchemeSpec { boundary: base.scheme.boundary, dt_rule: base.scheme.dt_rule, ..s })
                })
                .collect::<Result<_>>()?,
        };
        let sweep = Self { base, degrees, counts, schemes };
        sweep.validate()?;
        Ok(sweep)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&read_config(path)?)
    }
}

/// One recorded line of the time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub report: NormReport<f64>,
    /// Step size that ended at `report.t` (the nominal step at `t = 0`).
    pub dt: f64,
    pub energy_iters_max: usize,
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub mesh: Mesh<f64>,
    pub basis: NodeBasis<f64>,
    /// Resolved nominal time step.
    pub dt: f64,
    pub steps: usize,
    pub series: Vec<SeriesRow>,
    pub field: Field<f64>,
    pub exact: Field<f64>,
    /// Steps in which some energy iteration hit its cap.
    pub energy_diverged_steps: usize,
}

impl RunOutput {
    pub fn final_report(&self) -> NormReport<f64> {
        self.series.last().expect("series always holds the initial row").report
    }
}

/// Problem, mesh, basis and velocity of a configuration.
pub struct Setup {
    pub problem: ProblemSpec<f64>,
    pub mesh: Mesh<f64>,
    pub basis: NodeBasis<f64>,
    pub velocity: VelocityModel<f64>,
}

impl Setup {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let problem = make_problem::<f64>(config.problem).with_velocity_scale(config.velocity_scale);
        let mesh = problem.mesh(config.counts, config.bc)?;
        let basis = NodeBasis::for_degree(config.degree, config.node_rule)?;
        let velocity = problem.velocity_model(&mesh)?;
        Ok(Self { problem, mesh, basis, velocity })
    }

    pub fn step_control(&self, config: &RunConfig) -> Result<StepControl<f64>> {
        StepControl::resolve(
            &self.mesh,
            &self.basis,
            &self.velocity,
            config.dt_mode,
            config.dt,
            config.scheme.dt_rule,
            config.cfl_safety,
        )
    }
}

/// Runs one configuration from `t = 0` to `T`, on a dedicated pool when `threads` is set.
pub fn run_case(config: &RunConfig) -> Result<RunOutput> {
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| drive(config)),
        None => drive(config),
    }
}

fn drive(config: &RunConfig) -> Result<RunOutput> {
    let setup = Setup::new(config)?;
    let control = setup.step_control(config)?;
    let Setup { problem, mesh, basis, velocity } = &setup;
    let exact_fn = problem.exact.clone();
    let exact = move |p: [f64; 2], t: f64| exact_fn(p, t);
    let ctx = StepContext { mesh, basis, velocity, scheme: config.scheme, ghost: Some(&exact) };
    let evaluator = NormEvaluator::new(basis)?;
    let initial = problem.initial.clone();
    let mut field = init_field(mesh, basis, move |p| initial(p))?;
    let schedule = control.schedule(config.t_end);
    let mut series =
        vec![SeriesRow { report: evaluator.report(mesh, &field, &exact, 0.0), dt: control.dt, energy_iters_max: 0 }];
    let mut t = 0.0;
    let mut iters_since = 0usize;
    let mut energy_diverged_steps = 0usize;
    for (n, &(dt, t_after)) in schedule.iter().enumerate() {
        let out = match mesh.dim() {
            1 => step_1d(&ctx, &field, t, dt)?,
            _ => step_2d(&ctx, &field, t, dt)?,
        };
        field = out.field;
        t = t_after;
        iters_since = iters_since.max(out.energy_iterations_max);
        if out.energy_unconverged > 0 {
            energy_diverged_steps += 1;
        }
        let last = n + 1 == schedule.len();
        if last || (config.output_every > 0 && (n + 1) % config.output_every == 0) {
            series.push(SeriesRow {
                report: evaluator.report(mesh, &field, &exact, t),
                dt,
                energy_iters_max: iters_since,
            });
            iters_since = 0;
        }
    }
    let exact_field = init_field(mesh, basis, |p| exact(p, t))?;
    Ok(RunOutput {
        config: config.clone(),
        mesh: setup.mesh.clone(),
        basis: setup.basis.clone(),
        dt: control.dt,
        steps: schedule.len(),
        series,
        field,
        exact: exact_field,
        energy_diverged_steps,
    })
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `t,l2_error,mass_norm,energy_norm,mass_raw,dt,energy_iters_max`
pub fn write_timeseries(path: &Path, series: &[SeriesRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["t", "l2_error", "mass_norm", "energy_norm", "mass_raw", "dt", "energy_iters_max"])
        .map_err(csv_err)?;
    for row in series {
        let r = &row.report;
        w.write_record([
            real(r.t),
            real(r.l2_error),
            opt_real(r.mass_norm),
            opt_real(r.energy_norm),
            real(r.mass_raw),
            real(row.dt),
            row.energy_iters_max.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `subdomain,i[,j],x[,y],phi,phi_exact`
pub fn write_solution(path: &Path, output: &RunOutput) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let two_d = output.mesh.dim() == 2;
    let header: &[&str] = if two_d {
        &["subdomain", "i", "j", "x", "y", "phi", "phi_exact"]
    } else {
        &["subdomain", "i", "x", "phi", "phi_exact"]
    };
    w.write_record(header).map_err(csv_err)?;
    let n = output.basis.len();
    for k in 0..output.mesh.subdomain_count() {
        let points = output.mesh.physical_nodes(&output.basis, k);
        for (idx, p) in points.iter().enumerate() {
            let phi = real(output.field.subdomain(k)[idx]);
            let ex = real(output.exact.subdomain(k)[idx]);
            let rec = if two_d {
                vec![k.to_string(), (idx / n).to_string(), (idx % n).to_string(), real(p[0]), real(p[1]), phi, ex]
            } else {
                vec![k.to_string(), idx.to_string(), real(p[0]), phi, ex]
            };
            w.write_record(rec).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs a case and writes `timeseries.csv` and `solution.csv` into `out_dir`.
pub fn run_to_dir(config: &RunConfig, out_dir: &Path) -> Result<RunOutput> {
    let output = run_case(config)?;
    fs::create_dir_all(out_dir)?;
    write_timeseries(&out_dir.join("timeseries.csv"), &output.series)?;
    write_solution(&out_dir.join("solution.csv"), &output)?;
    Ok(output)
}

/// One line of `convergence.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub scheme: Constraints,
    pub time_order: TimeOrder,
    pub degree: usize,
    pub count: usize,
    pub dt: f64,
    pub l2_error: f64,
    /// `None` for the first `H` of each group.
    pub slope: Option<f64>,
}

/// Observed order between two refinements: `log(e_prev / e) / log(H / H_prev)`.
pub fn convergence_slope(e_prev: f64, e: f64, h_prev: usize, h: usize) -> f64 {
    (e_prev / e).ln() / (h as f64 / h_prev as f64).ln()
}

/// Final L2 errors of every sweep case with slopes against the previous `H`.
pub fn run_sweep(sweep: &SweepConfig) -> Result<Vec<ConvergenceRow>> {
    sweep.validate()?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for case in sweep.cases() {
        let mut quiet = case.clone();
        quiet.output_every = 0;
        let out = run_case(&quiet)?;
        let e = out.final_report().l2_error;
        let slope = rows
            .last()
            .filter(|r| {
                r.scheme == case.scheme.constraints && r.time_order == case.scheme.time_order && r.degree == case.degree
            })
            .map(|r| convergence_slope(r.l2_error, e, r.count, case.counts[0]));
        rows.push(ConvergenceRow {
            scheme: case.scheme.constraints,
            time_order: case.scheme.time_order,
            degree: case.degree,
            count: case.counts[0],
            dt: out.dt,
            l2_error: e,
            slope,
        });
    }
    Ok(rows)
}

/// `scheme,time_order,P,H,dt,l2_error,slope`
pub fn write_convergence(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["scheme", "time_order", "P", "H", "dt", "l2_error", "slope"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.scheme.label().to_string(),
            r.time_order.as_int().to_string(),
            r.degree.to_string(),
            r.count.to_string(),
            real(r.dt),
            real(r.l2_error),
            opt_real(r.slope),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs a sweep and writes `convergence.csv` into `out_dir`.
pub fn sweep_to_dir(sweep: &SweepConfig, out_dir: &Path) -> Result<Vec<ConvergenceRow>> {
    let rows = match sweep.base.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| run_sweep(sweep))?,
        None => run_sweep(sweep)?,
    };
    fs::create_dir_all(out_dir)?;
    write_convergence(&out_dir.join("convergence.csv"), &rows)?;
    Ok(rows)
}
