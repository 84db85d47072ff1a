//! Batch driver: `run` executes the tasks of a state-spec document and
//! writes a report; `compare` tabulates every available velocity estimate.
//!
//! Exit status is 0 on success, 2 when the document or flags are invalid
//! (nothing is written), 3 when a numeric contract fails (coverage,
//! degeneracy, …) and 1 on I/O failure.

pub mod report;
pub mod spec;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::{json, Value};

use crate::detection::{
    estimate_velocity_centroid, estimate_velocity_toa, intensity_record, plan_transit, IntensityRecord,
    TransitPlan, VelocityEstimate, WINDOW_TOL,
};
use crate::error::Error;
use crate::kspace::{CartesianKGrid, KGrid, KVec3, SphericalKGrid};
use crate::observables::{
    biphoton_mass_estimate, closed_form_gaussian_beta, closed_form_gaussian_energy, closed_form_gaussian_mass,
    closed_form_mixed_mass, closed_form_two_mode_mass, leading_order_beta, observables_discrete,
    observables_packet, pairwise_angles, Observables, CLAMP_TOL, COVERAGE_TOL,
};
use crate::restframe::{boost_to_rest_frame, decompose, energy_in_modes, BOOST_NORM_TOL, MASS_FLOOR};
use crate::states::{
    make_biphoton, make_gaussian_packet, superpose, DiscreteModeState, GaussianPacketSpec, WavePacket, NORM_TOL, TAIL_TOL,
};
use crate::units::UnitSystem;
use report::{count, dimensionless, Labeller};
pub use spec::{PacketRecipe, ResolvedState, StateSpec, StateSpecDocument, TaskOp, TaskParams, TaskSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

const DEFAULT_L_MAX: usize = 16;
const DEFAULT_CARTESIAN_N: usize = 128;
const DEFAULT_RECORD_SAMPLES: usize = 128;
/// Betas below this are reported as "at rest" and skip the plane estimator.
const REST_BETA: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "phlim", version, about = "LI mass and mean propagation velocity of multiphoton light states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute the tasks of a state-spec document.
    Run(RunArgs),
    /// Tabulate quadrature, closed-form, centroid and ToA velocities.
    Compare(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Units {
    Si,
    Natural,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Report units; defaults to the units of the document.
    #[arg(long, value_enum)]
    pub units: Option<Units>,
    /// Spherical grid shape `nk,ntheta,nphi`.
    #[arg(long, value_parser = parse_shape)]
    pub grid: Option<(usize, usize, usize)>,
    #[arg(long)]
    pub lmax: Option<usize>,
    /// Reserved; no computation is stochastic.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub verbose: bool,
}

fn parse_shape(s: &str) -> std::result::Result<(usize, usize, usize), String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(format!("expected nk,ntheta,nphi, got {s:?}")),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Schema(String),
    #[error(transparent)]
    Numeric(Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => EXIT_SCHEMA,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(m) | Error::Argument(m) | Error::Capability(m) => CliError::Schema(m),
            other => CliError::Numeric(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Report plus sidecar files, all written only after every task succeeded.
#[derive(Debug, Clone)]
pub struct Output {
    pub report: Value,
    pub sidecars: Vec<(String, Vec<u8>)>,
}

/// Parse `args` (including the program name), execute, and return the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_SCHEMA } else { EXIT_OK };
        }
    };
    let (args, compare) = match cli.command {
        Command::Run(a) => (a, false),
        Command::Compare(a) => (a, true),
    };
    let started = Instant::now();
    let status = match execute(&args, compare) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    if args.verbose {
        eprintln!("wall-clock: {:.3} s", started.elapsed().as_secs_f64());
    }
    status
}

fn execute(args: &RunArgs, compare: bool) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", args.spec.display())))?;
    let doc = StateSpecDocument::parse(&text)?;
    let out = if compare { compare_document(&doc, args)? } else { run_document(&doc, args)? };
    let body = match args.format {
        Format::Json => report::to_json(&out.report),
        Format::Csv => report::to_csv(&out.report),
    };
    match &args.out {
        Some(path) => {
            for (suffix, bytes) in &out.sidecars {
                write_atomic(&sidecar_path(path, suffix), bytes)?;
            }
            write_atomic(path, body.as_bytes())?;
        }
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(format!(".{suffix}"));
    out.with_file_name(name)
}

/// Write through a temporary sibling, then rename into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_os_string();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}

/// Settings resolved from flags, the document and defaults.
#[derive(Debug, Clone)]
struct Context {
    state: ResolvedState,
    labels: Labeller,
    shape: (usize, usize, usize),
    k_max: Option<f64>,
    l_max: usize,
    cartesian_n: usize,
    seed: Option<u64>,
}

impl Context {
    fn new(doc: &StateSpecDocument, args: &RunArgs) -> CliResult<Self> {
        let state = doc.resolve()?;
        let scale = doc.scale()?;
        let out_units = match args.units {
            Some(Units::Si) => UnitSystem::Si,
            Some(Units::Natural) => UnitSystem::Natural,
            None => doc.units,
        };
        let labels = match (out_units, scale) {
            (UnitSystem::Natural, _) => Labeller::new(None),
            (UnitSystem::Si, Some(s)) => Labeller::new(Some(s)),
            (UnitSystem::Si, None) => {
                return Err(CliError::Schema("SI output needs a document with \"k_ref\"".into()))
            }
        };
        let grid = doc.grid.clone().unwrap_or_default();
        let default = SphericalKGrid::DEFAULT_SHAPE;
        let shape = args.grid.unwrap_or((
            grid.n_k.unwrap_or(default.0),
            grid.n_theta.unwrap_or(default.1),
            grid.n_phi.unwrap_or(default.2),
        ));
        Ok(Self {
            state,
            labels,
            shape,
            k_max: doc.k_max_override()?,
            l_max: args.lmax.or(grid.l_max).unwrap_or(DEFAULT_L_MAX),
            cartesian_n: grid.cartesian_n.unwrap_or(DEFAULT_CARTESIAN_N),
            seed: args.seed,
        })
    }

    fn packet_recipe(&self, what: &str) -> CliResult<&PacketRecipe> {
        match &self.state {
            ResolvedState::Packet(r) => Ok(r),
            ResolvedState::Discrete(_) => Err(CliError::Schema(format!("{what} needs a wave-packet state"))),
        }
    }

    fn resolved(&self, extra: Value) -> Value {
        let l = &self.labels;
        let mut v = json!({
            "grid": {
                "n_k": count(self.shape.0),
                "n_theta": count(self.shape.1),
                "n_phi": count(self.shape.2),
                "k_max": self.k_max.map_or(Value::Null, |k| l.wavenumber(k)),
                "cartesian_n": count(self.cartesian_n),
            },
            "l_max": count(self.l_max),
            "seed": self.seed.map_or(Value::Null, |s| json!(s)),
            "tolerances": {
                "normalization": dimensionless(NORM_TOL),
                "tail": dimensionless(TAIL_TOL),
                "boundary_fraction": dimensionless(COVERAGE_TOL),
                "mass_clamp": dimensionless(CLAMP_TOL),
                "mass_floor": l.mass(MASS_FLOOR),
                "boost_norm": dimensionless(BOOST_NORM_TOL),
                "record_window": dimensionless(WINDOW_TOL),
            },
        });
        if let (Value::Object(m), Value::Object(x)) = (&mut v, extra) {
            m.extend(x);
        }
        v
    }
}

fn header(doc: &StateSpecDocument, ctx: &Context, command: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("tool".into(), json!({ "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") }));
    m.insert("command".into(), json!(command));
    m.insert("units".into(), serde_json::to_value(ctx.labels.system()).expect("unit system serializes"));
    m.insert("spec".into(), serde_json::to_value(doc).expect("spec serializes"));
    m
}

/// Execute `run` on a parsed document.
pub fn run_document(doc: &StateSpecDocument, args: &RunArgs) -> CliResult<Output> {
    let ctx = Context::new(doc, args)?;
    let tasks = doc.tasks.clone().unwrap_or_else(|| vec![TaskSpec { op: TaskOp::Observables, params: None }]);
    let mut sidecars = Vec::new();
    let mut results = Vec::new();
    let mut lab: Option<(WavePacket, Observables)> = None;
    for (i, task) in tasks.iter().enumerate() {
        let params = task.params.clone().unwrap_or_default();
        check_params(task.op, &params)?;
        info!("task {i}: {:?}", task.op);
        let result = match (task.op, &ctx.state) {
            (TaskOp::Observables, ResolvedState::Discrete(s)) => discrete_block(s, &ctx.labels)?,
            (TaskOp::Oracle, ResolvedState::Discrete(s)) => discrete_oracle(s, doc, &ctx.labels)?,
            (op, _) => {
                let recipe = ctx.packet_recipe(&format!("task {op:?}"))?;
                if lab.is_none() {
                    let p = build_lab(recipe, &ctx)?;
                    let obs = observables_packet(&p)?;
                    lab = Some((p, obs));
                }
                let (p, obs) = lab.as_ref().expect("lab packet built above");
                match op {
                    TaskOp::Observables => packet_block(p, obs, &ctx.labels),
                    TaskOp::Oracle => packet_oracle(recipe, &ctx.labels)?,
                    TaskOp::Detect => {
                        let (block, records) = detect(recipe, obs, &ctx, &params)?;
                        if params.export_records.unwrap_or(false) {
                            for (j, r) in records.iter().enumerate() {
                                let mut csv = Vec::new();
                                r.write_csv(&mut csv)?;
                                sidecars.push((format!("task{i}.plane{j}.csv"), csv));
                            }
                        }
                        block
                    }
                    TaskOp::Decompose => {
                        let l_max = params.l_max.unwrap_or(ctx.l_max);
                        let (block, table) = decompose_block(p, l_max, &ctx.labels)?;
                        sidecars.push((format!("task{i}.modes.csv"), table.into_bytes()));
                        block
                    }
                }
            }
        };
        results.push(json!({ "op": task.op, "result": result }));
    }
    let mut m = header(doc, &ctx, "run");
    let lab_grid = lab.as_ref().map_or(Value::Null, |(p, _)| json!(p.grid().describe()));
    m.insert("resolved".into(), ctx.resolved(json!({ "lab_grid": lab_grid })));
    m.insert("tasks".into(), Value::Array(results));
    Ok(Output { report: Value::Object(m), sidecars })
}

fn check_params(op: TaskOp, p: &TaskParams) -> CliResult<()> {
    let unused = match op {
        TaskOp::Observables | TaskOp::Oracle => {
            p.l_max.is_some() || p.cartesian_n.is_some() || p.samples.is_some() || p.toa.is_some() || p.export_records.is_some()
        }
        TaskOp::Detect => p.l_max.is_some(),
        TaskOp::Decompose => p.cartesian_n.is_some() || p.samples.is_some() || p.toa.is_some() || p.export_records.is_some(),
    };
    if unused {
        return Err(CliError::Schema(format!("parameters {p:?} do not apply to task {op:?}")));
    }
    Ok(())
}

impl PacketRecipe {
    /// Default radial cutoff of a spherical lab grid.
    pub fn default_k_max(&self) -> f64 {
        match self {
            PacketRecipe::Gaussian { spec, .. } => spec.default_k_max(),
            PacketRecipe::Biphoton(s) => s.k_deg() + 2.0 * s.resolved_bound(),
            PacketRecipe::Superposition { a, b, .. } => a.default_k_max().max(b.default_k_max()),
        }
    }

    /// Half-extent of a Cartesian grid covering every carrier by `8σ`.
    pub fn cartesian_extent(&self) -> Option<f64> {
        match self {
            PacketRecipe::Gaussian { spec, .. } => {
                Some(spec.k0.to_array().iter().map(|c| c.abs()).fold(0.0, f64::max) + 8.0 * spec.sigma)
            }
            PacketRecipe::Biphoton(_) => None,
            PacketRecipe::Superposition { a, b, .. } => Some(a.cartesian_extent()?.max(b.cartesian_extent()?)),
        }
    }

    /// Largest coordinate-space width `1/σ` among the constituents.
    pub fn spatial_width(&self) -> Option<f64> {
        match self {
            PacketRecipe::Gaussian { spec, .. } => Some(1.0 / spec.sigma),
            PacketRecipe::Biphoton(_) => None,
            PacketRecipe::Superposition { a, b, .. } => Some(a.spatial_width()?.max(b.spatial_width()?)),
        }
    }

    /// Same state with every constituent centred at `r0`.
    pub fn centred_at(&self, r0: [f64; 3]) -> Self {
        match self {
            PacketRecipe::Gaussian { spec, photons } => {
                PacketRecipe::Gaussian { spec: GaussianPacketSpec { r0, ..spec.clone() }, photons: *photons }
            }
            PacketRecipe::Biphoton(s) => PacketRecipe::Biphoton(*s),
            PacketRecipe::Superposition { a, b, relative_phase } => PacketRecipe::Superposition {
                a: Box::new(a.centred_at(r0)),
                b: Box::new(b.centred_at(r0)),
                relative_phase: *relative_phase,
            },
        }
    }

    /// Build the packet on `grid`; biphotons ignore it and use their own
    /// transverse shell grid.
    pub fn build(&self, grid: Arc<KGrid>) -> crate::Result<WavePacket> {
        match self {
            PacketRecipe::Gaussian { spec, photons } => make_gaussian_packet(spec, grid)?.with_photons(*photons),
            PacketRecipe::Biphoton(s) => make_biphoton(s, &s.default_grid()?),
            PacketRecipe::Superposition { a, b, relative_phase } => {
                superpose(&a.build(grid.clone())?, &b.build(grid)?, *relative_phase)
            }
        }
    }

    /// Exact mean velocity when it is known in closed form.
    pub fn closed_form_beta(&self) -> Option<f64> {
        match self {
            PacketRecipe::Gaussian { spec, .. } => Some(closed_form_gaussian_beta(spec.k0.magnitude(), spec.sigma)),
            _ => None,
        }
    }
}

fn build_lab(recipe: &PacketRecipe, ctx: &Context) -> CliResult<WavePacket> {
    let grid = match recipe {
        PacketRecipe::Biphoton(_) => None,
        _ => {
            let (nk, nt, np) = ctx.shape;
            let k_max = ctx.k_max.unwrap_or_else(|| recipe.default_k_max());
            Some(Arc::new(KGrid::Spherical(SphericalKGrid::new(nk, nt, np, k_max)?)))
        }
    };
    let p = match grid {
        Some(g) => recipe.build(g)?,
        None => recipe.build(Arc::new(KGrid::Cartesian(CartesianKGrid::new(4, 1.0)?)))?,
    };
    Ok(p)
}

fn observables_value(o: &Observables, l: &Labeller) -> Value {
    json!({
        "energy": l.energy(o.energy),
        "momentum": l.momentum(o.momentum),
        "mass": l.mass(o.mass),
        "beta": dimensionless(o.beta),
        "direction": dimensionless(o.direction.to_array().to_vec()),
        "clamped": o.clamped,
    })
}

fn discrete_block(s: &DiscreteModeState, l: &Labeller) -> CliResult<Value> {
    let obs = observables_discrete(s)?;
    Ok(json!({
        "observables": observables_value(&obs, l),
        "diagnostics": {
            "terms": count(s.terms().len()),
            "kind": s.kind(),
        },
    }))
}

fn packet_block(p: &WavePacket, obs: &Observables, l: &Labeller) -> Value {
    let rho = p.weighted_density();
    json!({
        "observables": observables_value(obs, l),
        "diagnostics": {
            "grid": p.grid().describe(),
            "nodes": count(p.grid().len()),
            "norm": dimensionless(p.norm()),
            "mean_photons": dimensionless(p.mean_photons()),
            "boundary_fraction": dimensionless(p.grid().boundary_fraction(&rho)),
        },
    })
}

/// Closed forms for a discrete state: the two-mode result for a single
/// configuration of two equally occupied, equal-frequency modes, and the
/// mixed-state result for single-mode terms of common occupation and
/// frequency.
fn discrete_oracle(s: &DiscreteModeState, doc: &StateSpecDocument, l: &Labeller) -> CliResult<Value> {
    let quadrature = observables_discrete(s)?;
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    let mut value = json!({ "mass": l.mass(quadrature.mass) });
    let terms = s.terms();
    let two_mode = match (&doc.state, terms) {
        (StateSpec::Discrete { two_mode: Some(t), .. }, _) => {
            Some(closed_form_two_mode_mass(t.n, s.energy_momentum().0 / t.n as f64, t.theta)?)
        }
        (_, [cfg]) if cfg.modes().len() == 2 => {
            let (a, b) = (cfg.modes()[0], cfg.modes()[1]);
            (a.n == b.n && same(a.k.magnitude(), b.k.magnitude()))
                .then(|| closed_form_two_mode_mass(a.n + b.n, a.k.magnitude(), a.k.angle_to(b.k)))
                .transpose()?
        }
        _ => None,
    };
    let single: Option<Vec<_>> = terms.iter().map(|c| (c.modes().len() == 1).then(|| c.modes()[0])).collect();
    let mixed = match single {
        Some(m) if m.len() > 1 && m.iter().all(|x| x.n == m[0].n && same(x.k.magnitude(), m[0].k.magnitude())) => {
            let ks: Vec<KVec3> = m.iter().map(|x| x.k).collect();
            Some(closed_form_mixed_mass(m[0].n, m[0].k.magnitude(), s.weights(), &pairwise_angles(&ks))?)
        }
        _ => None,
    };
    let closed = |x: Option<f64>| x.map_or(json!("not_applicable"), |m| l.mass(m));
    value["two_mode_mass"] = closed(two_mode);
    value["mixed_mass"] = closed(mixed);
    Ok(value)
}

fn packet_oracle(recipe: &PacketRecipe, l: &Labeller) -> CliResult<Value> {
    Ok(match recipe {
        PacketRecipe::Gaussian { spec, photons } => {
            let (k0, sigma, n) = (spec.k0.magnitude(), spec.sigma, *photons as f64);
            let m = closed_form_gaussian_mass(k0, sigma);
            json!({
                "kind": "gaussian",
                "energy": l.energy(n * closed_form_gaussian_energy(k0, sigma)),
                "mass": l.mass(n * m.mass),
                "mass_asymptote": l.mass(n * m.asymptote),
                "asymptote_valid": m.asymptote_valid,
                "beta": dimensionless(closed_form_gaussian_beta(k0, sigma)),
                "beta_leading_order": dimensionless(leading_order_beta(k0, sigma)),
            })
        }
        PacketRecipe::Biphoton(s) => {
            let e = biphoton_mass_estimate(s)?;
            json!({
                "kind": "biphoton",
                "mass_estimate": l.mass(e.mass),
                "mass_floor": l.mass(e.floor),
                "schmidt_number": dimensionless(e.schmidt_number),
                "in_regime": e.in_regime,
            })
        }
        PacketRecipe::Superposition { .. } => json!({ "kind": "not_applicable" }),
    })
}

fn estimate_value(e: &VelocityEstimate, residual: Value, l: &Labeller) -> Value {
    json!({
        "kind": e.kind,
        "beta": dimensionless(e.value),
        "velocity": dimensionless(e.velocity.to_array().to_vec()),
        "residual": residual,
        "window": l.times(&e.window),
        "samples": count(e.samples),
    })
}

struct Detection {
    plan: TransitPlan,
    centroid: VelocityEstimate,
    toa: std::result::Result<(VelocityEstimate, Vec<IntensityRecord>), String>,
}

/// Centroid and plane estimators on a Cartesian copy of the packet, started
/// `L/8` behind the box centre along its mean motion.
fn run_detection(recipe: &PacketRecipe, obs: &Observables, n: usize, samples: usize, toa: bool) -> CliResult<Detection> {
    let (Some(k_ext), Some(width)) = (recipe.cartesian_extent(), recipe.spatial_width()) else {
        return Err(CliError::Schema("detection needs a Gaussian-based packet".into()));
    };
    let plan = plan_transit(obs.direction, obs.beta, width, n, k_ext, samples)?;
    let grid = Arc::new(KGrid::Cartesian(CartesianKGrid::new(n, k_ext)?));
    let p = recipe.centred_at(plan.start).build(grid)?;
    let centroid = estimate_velocity_centroid(&p, &plan.centroid_times)?;
    let toa = if !toa {
        Err("disabled".to_string())
    } else if obs.beta < REST_BETA {
        Err(format!("mean velocity below {REST_BETA}"))
    } else if plan.planes.is_empty() {
        Err("mean motion not along +z".to_string())
    } else {
        let records = plan
            .planes
            .iter()
            .map(|w| intensity_record(&p, w.z, &w.times))
            .collect::<crate::Result<Vec<_>>>();
        match records.and_then(|r| Ok((estimate_velocity_toa(&r[0], &r[1])?, r))) {
            Ok(x) => Ok(x),
            Err(e @ (Error::Window(_) | Error::Ordering(_))) => Err(e.to_string()),
            Err(e) => return Err(e.into()),
        }
    };
    Ok(Detection { plan, centroid, toa })
}

fn detect(
    recipe: &PacketRecipe,
    obs: &Observables,
    ctx: &Context,
    params: &TaskParams,
) -> CliResult<(Value, Vec<IntensityRecord>)> {
    let n = params.cartesian_n.unwrap_or(ctx.cartesian_n);
    let samples = params.samples.unwrap_or(DEFAULT_RECORD_SAMPLES);
    let d = run_detection(recipe, obs, n, samples, params.toa.unwrap_or(true))?;
    let l = &ctx.labels;
    let (toa, records) = match d.toa {
        Ok((e, r)) => (estimate_value(&e, dimensionless(e.residual), l), r),
        Err(reason) => (json!({ "not_applicable": reason }), Vec::new()),
    };
    let planes: Vec<Value> = d
        .plan
        .planes
        .iter()
        .map(|w| json!({ "z": l.length(w.z), "window": l.times(&[w.times[0], w.times[w.times.len() - 1]]), "samples": count(w.times.len()) }))
        .collect();
    let block = json!({
        "geometry": {
            "n": count(d.plan.n),
            "k_ext": l.wavenumber(d.plan.k_ext),
            "box_length": l.length(d.plan.box_length),
            "start": l.lengths(d.plan.start),
            "planes": planes,
        },
        "quadrature_beta": dimensionless(obs.beta),
        "centroid": estimate_value(&d.centroid, l.length(d.centroid.residual), l),
        "toa": toa,
    });
    Ok((block, records))
}

fn decompose_block(p: &WavePacket, l_max: usize, l: &Labeller) -> CliResult<(Value, String)> {
    let (rest, params) = boost_to_rest_frame(p, None)?;
    let rest_obs = observables_packet(&rest)?;
    let d = decompose(&rest, l_max)?;
    let nk = d.grid().n_k();
    let mut power = vec![0.0; l_max + 1];
    let mut table = String::from("s,l,j,k_r,re_beta,im_beta\n");
    for s in 0..d.components() {
        for ll in 0..=l_max {
            for j in -(ll as i32)..=(ll as i32) {
                let prof = d.profile(s, ll, j)?;
                for ik in 0..nk {
                    let b = prof[ik];
                    power[ll] += b.norm_sqr() * d.grid().radial_weight(ik);
                    table.push_str(&format!("{s},{ll},{j},{:e},{:e},{:e}\n", d.radial_nodes()[ik], b.re, b.im));
                }
            }
        }
    }
    let block = json!({
        "boost": {
            "gamma": dimensionless(params.gamma),
            "rapidity": dimensionless(params.rapidity),
            "speed": dimensionless(params.speed),
            "direction": dimensionless(params.direction.to_array().to_vec()),
            "lab_energy": l.energy(params.lab_energy),
            "mass": l.mass(params.mass),
            "norm_after_boost": dimensionless(params.norm_after_boost),
        },
        "rest_grid": rest.grid().describe(),
        "rest_observables": observables_value(&rest_obs, l),
        "l_max": count(l_max),
        "parseval_sum": dimensionless(d.parseval_sum()),
        "residual": dimensionless(d.residual()),
        "energy_in_modes": l.energy(energy_in_modes(&d)),
        "power_by_l": dimensionless(power),
    });
    Ok((block, table))
}

/// Execute `compare` on a parsed document.
pub fn compare_document(doc: &StateSpecDocument, args: &RunArgs) -> CliResult<Output> {
    let ctx = Context::new(doc, args)?;
    let recipe = ctx.packet_recipe("compare")?;
    let lab = build_lab(recipe, &ctx)?;
    let obs = observables_packet(&lab)?;
    let d = run_detection(recipe, &obs, ctx.cartesian_n, DEFAULT_RECORD_SAMPLES, true)?;
    let l = &ctx.labels;
    let mut columns: Vec<(&str, Option<f64>, String)> = vec![
        ("quadrature", Some(obs.beta), String::new()),
        ("closed_form", recipe.closed_form_beta(), "no closed form for this state".into()),
        ("centroid", Some(d.centroid.value), String::new()),
    ];
    match &d.toa {
        Ok((e, _)) => columns.push(("toa", Some(e.value), String::new())),
        Err(reason) => columns.push(("toa", None, reason.clone())),
    }
    let mut table = serde_json::Map::new();
    for (name, v, why) in &columns {
        let entry = match v {
            Some(x) => dimensionless(*x),
            None => json!({ "not_applicable": why }),
        };
        table.insert((*name).to_string(), entry);
    }
    let mut deviations = Vec::new();
    for (i, (a, va, _)) in columns.iter().enumerate() {
        for (b, vb, _) in &columns[i + 1..] {
            if let (Some(x), Some(y)) = (va, vb) {
                let scale = x.abs().max(y.abs());
                deviations.push(json!({
                    "pair": format!("{a}-{b}"),
                    "absolute": dimensionless((x - y).abs()),
                    "relative": dimensionless(if scale > 0.0 { (x - y).abs() / scale } else { 0.0 }),
                }));
            }
        }
    }
    let mut m = header(doc, &ctx, "compare");
    m.insert(
        "resolved".into(),
        ctx.resolved(json!({
            "lab_grid": lab.grid().describe(),
            "box_length": l.length(d.plan.box_length),
            "k_ext": l.wavenumber(d.plan.k_ext),
        })),
    );
    m.insert("observables".into(), observables_value(&obs, l));
    m.insert("betas".into(), Value::Object(table));
    m.insert("deviations".into(), Value::Array(deviations));
    Ok(Output { report: Value::Object(m), sidecars: Vec::new() })
}

/// Convenience for callers that hold a document and no flags.
pub fn default_args(spec: impl Into<PathBuf>) -> RunArgs {
    RunArgs {
        spec: spec.into(),
        out: None,
        format: Format::Json,
        units: None,
        grid: None,
        lmax: None,
        seed: None,
        verbose: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> StateSpecDocument {
        StateSpecDocument::parse(text).unwrap()
    }

    #[test]
    fn shape_flag_parses() {
        assert_eq!(parse_shape("64,32,16").unwrap(), (64, 32, 16));
        assert!(parse_shape("64,32").is_err());
        assert!(parse_shape("a,b,c").is_err());
    }

    #[test]
    fn two_mode_report() {
        let d = doc(r#"{"units":"natural","state":{"type":"discrete","two_mode":{"n":2,"omega0":1.5,"theta":3.141592653589793}},
            "tasks":[{"op":"observables"},{"op":"oracle"}]}"#);
        let out = run_document(&d, &default_args("x")).unwrap();
        let mass = out.report["tasks"][0]["result"]["observables"]["mass"]["value"].as_f64().unwrap();
        assert!((mass - 3.0).abs() < 1e-12);
        assert_eq!(out.report["tasks"][0]["result"]["observables"]["mass"]["unit"], "hbar*k_ref/c");
        let cf = out.report["tasks"][1]["result"]["two_mode_mass"]["value"].as_f64().unwrap();
        assert!((cf - 3.0).abs() < 1e-12);
    }

    #[test]
    fn packet_tasks_reject_discrete_states() {
        let d = doc(r#"{"units":"natural","state":{"type":"discrete","two_mode":{"n":2,"omega0":1,"theta":1}},
            "tasks":[{"op":"detect"}]}"#);
        assert_eq!(run_document(&d, &default_args("x")).unwrap_err().exit_code(), EXIT_SCHEMA);
    }

    #[test]
    fn si_output_needs_k_ref() {
        let d = doc(r#"{"units":"natural","state":{"type":"discrete","two_mode":{"n":2,"omega0":1,"theta":1}}}"#);
        let mut a = default_args("x");
        a.units = Some(Units::Si);
        assert_eq!(run_document(&d, &a).unwrap_err().exit_code(), EXIT_SCHEMA);
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::Domain("x".into())).exit_code(), EXIT_SCHEMA);
        assert_eq!(CliError::from(Error::Coverage("x".into())).exit_code(), EXIT_NUMERIC);
        assert_eq!(CliError::from(Error::Degenerate("x".into())).exit_code(), EXIT_NUMERIC);
    }
}
