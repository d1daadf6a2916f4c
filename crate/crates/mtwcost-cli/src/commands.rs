use clap::{Args, Parser, Subcommand, ValueEnum};
use mtwcost::divergence::{
    c_divergence, c_divergence_general, divergence_metric, hyperbolic_divergence_sinh_form, partition_product,
    primal_geodesic, DivergenceContext, FiniteMeasurePair, LocalDivergences,
};
use mtwcost::euclid::Vector;
use mtwcost::io::{named_family, parse_config, parse_csv_matrix, parse_family_json, parse_grid};
use mtwcost::manifold::{ManifoldCost, ManifoldSpec};
use mtwcost::sampler::{box_probability, MirrorConfig, MvtSpec};
use mtwcost::transport::{
    conjugate_homogeneous, double_conjugate, optimal_map, Potential, PowerSum, Quadratic, SinhCost,
};
use mtwcost::{Error, ScalarCost, Tolerance};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA: &str = "1";

/// Failure of a command, with its exit code class.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Input(e)
    }
}

impl CliError {
    /// 1 for usage, 2 for parse and validation failures, 3 for numeric and domain failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Input(e) => match e {
                Error::Parse(_) | Error::Validation(_) | Error::Capability(_) => 2,
                Error::Domain(_) | Error::Range(_) | Error::Numeric { .. } | Error::Conditioning(_) | Error::Branch(_) => 3,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Input(e) => match e {
                Error::Parse(_) => "parse",
                Error::Validation(_) => "validation",
                Error::Capability(_) => "capability",
                Error::Domain(_) => "domain",
                Error::Range(_) => "range",
                Error::Numeric { .. } => "numeric",
                Error::Conditioning(_) => "conditioning",
                Error::Branch(_) => "branch",
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Io(m) => m.clone(),
            CliError::Input(e) => e.to_string(),
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        json!({
            "schema": SCHEMA,
            "error": { "kind": self.kind(), "message": self.message() },
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

type Res<T> = std::result::Result<T, CliError>;

/// Replaces `--config FILE` with the flags the file describes.
pub fn expand_config(argv: Vec<String>) -> Res<Vec<String>> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let path = match argv[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => argv.get(pos + 1).cloned().ok_or_else(|| CliError::Usage("--config needs a file".into()))?,
    };
    let used = if argv[pos].starts_with("--config=") { 1 } else { 2 };
    if argv.len() != pos + used || pos != 1 {
        return Err(CliError::Usage("--config replaces all other arguments".into()));
    }
    let text = read(Path::new(&path))?;
    let cfg = parse_config(&text)?;
    let mut out = vec![argv[0].clone()];
    out.extend(cfg.to_args()?);
    Ok(out)
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Parser, Debug)]
#[command(name = "mtwcost", version, about = "Regularity, transport maps, divergences and mirror sampling for u(x^t xbar) costs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output file for the main artifact (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Absolute tolerance of scalar inversions.
    #[arg(long)]
    pub atol: Option<f64>,
    /// Relative tolerance of scalar inversions.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Iteration cap of scalar inversions.
    #[arg(long)]
    pub max_iter: Option<usize>,
}

impl Common {
    fn tolerance(&self) -> Res<Tolerance> {
        let d = Tolerance::default();
        let t = Tolerance {
            atol: self.atol.unwrap_or(d.atol),
            rtol: self.rtol.unwrap_or(d.rtol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
        };
        if !(t.atol >= 0.0 && t.rtol >= 0.0 && t.max_iter > 0) {
            return Err(Error::Validation("tolerances must be nonnegative and max-iter positive".into()).into());
        }
        Ok(t)
    }
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Sign report of the curvature coefficients over a grid of s values.
    MtwCheck(MtwCheck),
    /// Homogeneous c-conjugate, double conjugate and optimal map on a one-dimensional grid.
    Conjugate(ConjugateCmd),
    /// Divergences between two points, or local divergences between two weight vectors.
    Divergence(DivergenceCmd),
    /// Primal geodesic of a hyperbolic divergence.
    Geodesic(GeodesicCmd),
    /// Mirror Monte Carlo box probability of a multivariate t law.
    SampleMvt(SampleMvt),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ManifoldArg {
    Euclidean,
    Sphere,
    Hyperboloid,
}

#[derive(Args, Debug)]
pub struct FamilyArgs {
    /// Named cost: sinh (s = sinh u), sinh-transport (s = -sinh u), log, lambert, exp-trig, square-distance, euclidean.
    #[arg(long, conflicts_with = "family_json")]
    pub family: Option<String>,
    /// Cost as JSON, or @FILE.
    #[arg(long)]
    pub family_json: Option<String>,
}

impl FamilyArgs {
    fn load(&self) -> Res<ScalarCost> {
        match (&self.family, &self.family_json) {
            (Some(name), None) => Ok(named_family(name)?),
            (None, Some(text)) => {
                let body = match text.strip_prefix('@') {
                    Some(p) => read(Path::new(p))?,
                    None => text.clone(),
                };
                Ok(parse_family_json(&body)?)
            }
            _ => Err(CliError::Usage("give --family or --family-json".into())),
        }
    }
}

#[derive(Args, Debug)]
pub struct MtwCheck {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_enum, default_value = "hyperboloid")]
    pub manifold: ManifoldArg,
    /// Ambient dimension of the manifold.
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    /// Grid `a:b:n` of s values.
    #[arg(long, allow_hyphen_values = true)]
    pub s_grid: Option<String>,
    /// Random null tangents checked per grid point.
    #[arg(long, default_value_t = 4)]
    pub samples: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ConjugateCmd {
    /// Homogeneity order of `phi = |x|^alpha`, above 1.
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub r: f64,
    /// Coefficients of `s = p0 e^{-r u} + p2 e^{r u}`; canonical when absent.
    #[arg(long, requires = "p2", allow_hyphen_values = true)]
    pub p0: Option<f64>,
    #[arg(long, requires = "p0", allow_hyphen_values = true)]
    pub p2: Option<f64>,
    /// Grid `a:b:n`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PotentialArg {
    Quadratic,
    Power,
}

#[derive(Args, Debug)]
pub struct PotentialArgs {
    #[arg(long, value_enum, default_value = "quadratic")]
    pub potential: PotentialArg,
    /// Matrix of the quadratic potential as a CSV file (identity when absent).
    #[arg(long)]
    pub c_file: Option<PathBuf>,
    /// Order of the power potential.
    #[arg(long, default_value_t = 2.0)]
    pub power: f64,
}

impl PotentialArgs {
    fn build(&self, n: usize) -> Res<Box<dyn Potential>> {
        match self.potential {
            PotentialArg::Quadratic => {
                let c = match &self.c_file {
                    Some(p) => parse_csv_matrix(&read(p)?)?,
                    None => DMatrix::identity(n, n),
                };
                if c.nrows() != n {
                    return Err(Error::Validation(format!("C is {}x{} but points have {n} entries", c.nrows(), c.ncols())).into());
                }
                Ok(Box::new(Quadratic::new(c)?))
            }
            PotentialArg::Power => Ok(Box::new(PowerSum::new(self.power, n)?)),
        }
    }
}

#[derive(Args, Debug)]
pub struct DivergenceCmd {
    /// Hyperbolic parameter.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub xp: Vec<f64>,
    #[command(flatten)]
    pub potential: PotentialArgs,
    /// First weight vector; switches to local divergences.
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    /// Second weight vector.
    #[arg(long, value_delimiter = ',')]
    pub pp: Vec<f64>,
    /// Subset indicator, 0 or 1 per point.
    #[arg(long, value_delimiter = ',')]
    pub mask: Vec<u8>,
    /// Block label per point for the partition product.
    #[arg(long, value_delimiter = ',')]
    pub partition: Vec<usize>,
    /// Order of the local divergences, in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct GeodesicCmd {
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x0: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub v0: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    /// RK4 steps; defaults to 1000 per unit time.
    #[arg(long)]
    pub steps: Option<usize>,
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SampleMvt {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 10.0)]
    pub nu: f64,
    /// Scale matrix as CSV (identity when absent).
    #[arg(long)]
    pub sigma_file: Option<PathBuf>,
    /// Lower box corner: one value or one per coordinate; `-inf` allowed.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub box_lo: Vec<f64>,
    /// Upper box corner: one value or one per coordinate; `inf` allowed.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub box_hi: Vec<f64>,
    /// Samples per repetition.
    #[arg(long = "N", alias = "samples", default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    /// Matrix of the quadratic potential as CSV (identity when absent).
    #[arg(long)]
    pub c_file: Option<PathBuf>,
    /// Where to write the summary JSON (stdout when absent).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

pub fn run(cli: Cli) -> Res<()> {
    match cli.command {
        Cmd::MtwCheck(c) => mtw_check(c),
        Cmd::Conjugate(c) => conjugate(c),
        Cmd::Divergence(c) => divergence(c),
        Cmd::Geodesic(c) => geodesic(c),
        Cmd::SampleMvt(c) => sample_mvt(c),
    }
}

/// Writes to the file or to stdout.
fn emit(path: Option<&Path>, body: &str) -> Res<()> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn emit_json(path: Option<&Path>, mut v: Value) -> Res<()> {
    v["schema"] = json!(SCHEMA);
    let mut text = serde_json::to_string_pretty(&v).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    emit(path, &text)
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> Res<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

/// Shortest round-trip text, in exponent form for very small or large magnitudes.
fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn mtw_check(c: MtwCheck) -> Res<()> {
    let scalar = c.family.load()?;
    let tol = c.common.tolerance()?;
    let spec = match c.manifold {
        ManifoldArg::Euclidean => {
            let ode = scalar.classify_ode();
            let summary = json!({
                "manifold": "euclidean",
                "family": scalar,
                "ode": ode,
                "null_cross_curvature_vanishes": ode.is_some_and(|o| o.constant),
            });
            return emit_json(c.common.out.as_deref(), summary);
        }
        ManifoldArg::Sphere => ManifoldSpec::sphere(c.dim),
        ManifoldArg::Hyperboloid => ManifoldSpec::hyperboloid(c.dim),
    };
    let grid_text = c.s_grid.as_deref().ok_or_else(|| CliError::Usage("--s-grid is required on a manifold".into()))?;
    let grid = parse_grid(grid_text)?;
    for &s in &grid {
        scalar.eval_u_tol(s, &tol)?;
    }
    let mc = ManifoldCost::new(spec, scalar);
    let mut rng = ChaCha20Rng::seed_from_u64(c.common.seed);
    let report = mc.classify_regularity(&grid, c.samples, &mut rng)?;
    let header: Vec<String> = ["s", "R1", "R23", "R4", "D", "verdict"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![num(r.s), num(r.r1), num(r.r23), num(r.r4), num(r.d), format!("{:?}", r.verdict)])
        .collect();
    emit(c.common.out.as_deref(), &csv_text(&header, &rows)?)?;
    if c.common.out.is_some() {
        emit_json(
            None,
            json!({
                "verdict": report.verdict,
                "points": report.rows.len(),
                "witness": report.witness,
                "min_null_cross": report.min_null_cross,
            }),
        )?;
    }
    Ok(())
}

fn sinh_cost(r: f64, p0: Option<f64>, p2: Option<f64>) -> Res<SinhCost> {
    Ok(match (p0, p2) {
        (Some(a), Some(b)) => SinhCost::new(r, a, b)?,
        _ => SinhCost::canonical(r)?,
    })
}

fn conjugate(c: ConjugateCmd) -> Res<()> {
    let sc = sinh_cost(c.r, c.p0, c.p2)?;
    let phi = PowerSum::new(c.alpha, 1)?;
    let cost = sc.ucost(1);
    let grid = parse_grid(&c.grid)?;
    let header: Vec<String> = ["x", "conjugate", "double_conjugate", "map"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::with_capacity(grid.len());
    for &t in &grid {
        let v = Vector::from_element(1, t);
        let conj = conjugate_homogeneous(&phi, &sc, &v)?.value;
        let dbl = double_conjugate(&phi, &sc, &v)?;
        let map = match optimal_map(&phi, &cost, &v) {
            Ok(y) => num(y[0]),
            Err(Error::Domain(_)) => String::new(),
            Err(e) => return Err(e.into()),
        };
        rows.push(vec![num(t), num(conj), num(dbl), map]);
    }
    emit(c.common.out.as_deref(), &csv_text(&header, &rows)?)
}

fn divergence(c: DivergenceCmd) -> Res<()> {
    if !c.p.is_empty() {
        return local_divergence(&c);
    }
    if c.x.is_empty() || c.x.len() != c.xp.len() {
        return Err(CliError::Usage("give --x and --xp of equal length, or --p and --pp".into()));
    }
    let n = c.x.len();
    let phi = c.potential.build(n)?;
    let cost = SinhCost::canonical(c.r)?.ucost(n);
    let ctx = DivergenceContext::new(&cost, phi.as_ref())?;
    let (x, xp) = (Vector::from_vec(c.x.clone()), Vector::from_vec(c.xp.clone()));
    let d = c_divergence(&ctx, &x, &xp)?;
    let general = c_divergence_general(&ctx, &x, &xp)?;
    let sinh_form = hyperbolic_divergence_sinh_form(phi.as_ref(), c.r, &x, &xp)?;
    let bregman = phi.value(&x) - phi.value(&xp) - phi.gradient(&xp).dot(&(&x - &xp));
    let metric = divergence_metric(&ctx, &x)?;
    emit_json(
        c.common.out.as_deref(),
        json!({
            "mode": "points",
            "r": c.r,
            "divergence": d,
            "divergence_general": general,
            "sinh_form": sinh_form,
            "bregman": bregman,
            "metric_min_eigenvalue": metric.min_eigenvalue(),
        }),
    )
}

fn local_divergence(c: &DivergenceCmd) -> Res<()> {
    let n = c.p.len();
    let mask: Vec<bool> = if c.mask.is_empty() { vec![true; n] } else { c.mask.iter().map(|m| *m != 0).collect() };
    if c.mask.iter().any(|m| *m > 1) {
        return Err(Error::Validation("mask entries must be 0 or 1".into()).into());
    }
    let pair = FiniteMeasurePair::new(c.p.clone(), c.pp.clone(), mask, c.alpha)?;
    let d = LocalDivergences::of(&pair);
    let partition = if c.partition.is_empty() {
        None
    } else {
        Some(partition_product(&c.p, &c.pp, &c.partition, c.alpha)?)
    };
    emit_json(
        c.common.out.as_deref(),
        json!({
            "mode": "local",
            "alpha": c.alpha,
            "hyperbolic": d.hyperbolic,
            "blank": d.blank,
            "jensen": d.jensen,
            "partition_product": partition,
        }),
    )
}

fn geodesic(c: GeodesicCmd) -> Res<()> {
    let n = c.x0.len();
    if n == 0 || c.v0.len() != n {
        return Err(CliError::Usage("--x0 and --v0 need the same positive length".into()));
    }
    let phi = c.potential.build(n)?;
    let cost = SinhCost::canonical(c.r)?.ucost(n);
    let ctx = DivergenceContext::new(&cost, phi.as_ref())?;
    let steps = c.steps.unwrap_or_else(|| ((1000.0 * c.t_end.abs()).ceil() as usize).max(1));
    let tr = primal_geodesic(&ctx, &Vector::from_vec(c.x0.clone()), &Vector::from_vec(c.v0.clone()), c.t_end, steps)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    let rows: Vec<Vec<String>> = tr
        .t
        .iter()
        .zip(&tr.x)
        .map(|(t, x)| std::iter::once(num(*t)).chain(x.iter().map(|v| num(*v))).collect())
        .collect();
    emit(c.common.out.as_deref(), &csv_text(&header, &rows)?)?;
    if c.common.out.is_some() {
        emit_json(None, json!({ "steps": tr.t.len() - 1, "exited": tr.exited, "t_last": tr.t.last() }))?;
    }
    Ok(())
}

fn broadcast(v: &[f64], n: usize, name: &str) -> Res<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        k if k == n => Ok(v.to_vec()),
        k => Err(Error::Validation(format!("{name} has {k} entries, expected 1 or {n}")).into()),
    }
}

fn sample_mvt(c: SampleMvt) -> Res<()> {
    let n = c.n;
    if n == 0 {
        return Err(Error::Validation("n must be positive".into()).into());
    }
    let sigma = match &c.sigma_file {
        Some(p) => parse_csv_matrix(&read(p)?)?,
        None => DMatrix::identity(n, n),
    };
    if sigma.nrows() != n || sigma.ncols() != n {
        return Err(Error::Validation(format!("scale matrix is {}x{}, expected {n}x{n}", sigma.nrows(), sigma.ncols())).into());
    }
    let cmat = match &c.c_file {
        Some(p) => parse_csv_matrix(&read(p)?)?,
        None => DMatrix::identity(n, n),
    };
    let spec = MvtSpec::new(c.nu, Vector::zeros(n), sigma)?;
    let cfg = MirrorConfig::new(c.r, cmat, c.samples, c.reps, c.common.seed)?;
    let lo = broadcast(&c.box_lo, n, "box-lo")?;
    let hi = broadcast(&c.box_hi, n, "box-hi")?;
    let est = box_probability(&spec, &cfg, &lo, &hi)?;
    let header = vec!["rep".to_string(), "estimate".to_string()];
    let rows: Vec<Vec<String>> = est.per_rep.iter().enumerate().map(|(i, v)| vec![i.to_string(), num(*v)]).collect();
    emit(c.common.out.as_deref(), &csv_text(&header, &rows)?)?;
    if c.clipped_warning(est.clipped) {
        eprintln!("warning: {} importance weights were clipped", est.clipped);
    }
    emit_json(
        c.summary.as_deref(),
        json!({
            "n": n,
            "nu": c.nu,
            "r": c.r,
            "samples": c.samples,
            "reps": c.reps,
            "seed": c.common.seed,
            "mean": est.mean,
            "std": est.std,
            "clipped": est.clipped,
            "runtime_secs": est.runtime_secs,
        }),
    )
}

impl SampleMvt {
    fn clipped_warning(&self, clipped: usize) -> bool {
        clipped > 0
    }
}
