//! Command-line front end for the certground bounds.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use certground::caps;
use certground::eigen::LanczosOptions;
use certground::hamiltonian::{builtin_model_dim, build_chain, parse_model, ModelSpec, BUILTIN_MODELS};
use certground::marginal::{build_marginal_sdp, full_program_oracle, Field, MarginalMode, MarginalProblemSpec, Placement};
use certground::method::{BoundMethod, MethodParams, Registry};
use certground::moment::{build_basis, build_moment_sdp, build_structure};
use certground::report::{self, BoundRow, Columns, SandwichReport, SUMMARY_COLUMNS};
use certground::sdp::{write_sdpa, SdpOptions};
use certground::{eigen, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "certground",
    version,
    about = "Certified lower bounds on ground-state energy densities of translation-invariant lattice Hamiltonians",
    after_help = format!(
        "Exit codes: 0 success, 1 I/O error, 2 invalid input, 3 solver failure.\n\
         {} overrides the qubit-equivalent caps.",
        caps::MAX_QUBITS_ENV
    )
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Patch bound λ_min(h_m)/(m−1)^D with its guarantee width
    Anderson {
        #[command(flatten)]
        model: ModelArgs,
        /// Patch linear size
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Marginal-constrained patch SDP
    Marginal {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        s: usize,
        #[command(flatten)]
        marginal: MarginalArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Also write the SDP in SDPA sparse format
        #[arg(long, value_name = "PATH")]
        dump_sdp: Option<PathBuf>,
    },
    /// Translation-invariant moment-matrix SDP on an l-site window
    Moment {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "l", visible_alias = "ell")]
        ell: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, value_name = "PATH")]
        dump_sdp: Option<PathBuf>,
    },
    /// Evaluate one method over parameter ranges (a..b inclusive, or a,b,c)
    Sweep {
        /// anderson, marginal, moment, product_upper or ring_reference
        #[arg(long)]
        method: String,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        m: Option<String>,
        /// Marginal points with 2s > m are skipped
        #[arg(long)]
        s: Option<String>,
        #[arg(long = "l", visible_alias = "ell")]
        ell: Option<String>,
        #[arg(long)]
        n: Option<String>,
        #[command(flatten)]
        marginal: MarginalArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Write the method's CSV table here (in addition to --out)
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        /// Worker threads; defaults to the number of processors
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Best certified lower and product-state upper bound side by side
    Sandwich {
        #[command(flatten)]
        model: ModelArgs,
        /// Patch sizes for the patch bound, comma separated or a..b
        #[arg(long)]
        anderson_m: Option<String>,
        /// Window sizes for the moment SDP
        #[arg(long = "moment-l")]
        moment_l: Option<String>,
        /// Marginal SDP points, e.g. m=5,s=2 (repeatable)
        #[arg(long)]
        marginal: Vec<String>,
        /// Ring size of the finite-ring reference density
        #[arg(long)]
        ring_n: Option<usize>,
        #[command(flatten)]
        marginal_opts: MarginalArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// List builtin models
    Models {
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact ring and open-chain ground energies for tiny N
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        /// Site counts, e.g. 2..10
        #[arg(long)]
        n: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Builtin model name (see `certground models`)
    #[arg(long, default_value = "heisenberg", conflicts_with = "model_file")]
    pub model: String,
    /// Builtin model parameters, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub params: Vec<f64>,
    /// JSON model document instead of a builtin
    #[arg(long, value_name = "PATH")]
    pub model_file: Option<PathBuf>,
    /// Lattice dimension [default: 1, or the model file's]
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Lanczos residual tolerance
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// SDP relative duality gap tolerance
    #[arg(long, default_value_t = 1e-9)]
    pub gap_tol: f64,
    /// SDP feasibility tolerance
    #[arg(long, default_value_t = 1e-9)]
    pub feas_tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Seed for Lanczos start vectors and product-state restarts
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Product-state restarts
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
}

#[derive(Args, Debug, Clone)]
pub struct MarginalArgs {
    #[arg(long, default_value = "consecutive")]
    pub mode: MarginalMode,
    #[arg(long, default_value = "middle")]
    pub placement: Placement,
    #[arg(long, default_value = "auto")]
    pub field: Field,
    /// Drop the equality of σ's shifted marginals (on by default in consecutive mode)
    #[arg(long)]
    pub no_shift_invariance: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Output file; standard output when absent
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Zero all timing fields so reruns are byte-identical
    #[arg(long)]
    pub no_timing: bool,
}

impl ModelArgs {
    pub fn load(&self) -> certground::Result<ModelSpec> {
        if self.dim == Some(0) {
            return Err(Error::invalid("--dim must be at least 1"));
        }
        match &self.model_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let model = parse_model(&text)?;
                match self.dim {
                    Some(dim) if dim != model.dim => model.with_dim(dim),
                    _ => Ok(model),
                }
            }
            None => builtin_model_dim(&self.model, &self.params, self.dim.unwrap_or(1)),
        }
    }
}

impl SolverArgs {
    fn sdp(&self) -> certground::Result<SdpOptions> {
        for (name, v) in [("--gap-tol", self.gap_tol), ("--feas-tol", self.feas_tol), ("--tol", self.tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        Ok(SdpOptions { gap_tol: self.gap_tol, feas_tol: self.feas_tol, max_iter: self.max_iter })
    }

    fn params(&self) -> certground::Result<MethodParams> {
        Ok(MethodParams {
            lanczos: LanczosOptions { tol: self.tol, seed: self.seed, ..Default::default() },
            sdp: self.sdp()?,
            restarts: self.restarts,
            seed: self.seed,
            ..Default::default()
        })
    }
}

impl MarginalArgs {
    fn apply(&self, p: &mut MethodParams) {
        p.mode = self.mode;
        p.placement = self.placement;
        p.field = self.field;
        p.shift_invariance = if self.no_shift_invariance { Some(false) } else { None };
    }
}

/// Parses `a..b` (inclusive), `a,b,c`, or a single value.
pub fn parse_range(text: &str) -> certground::Result<Vec<usize>> {
    let bad = || Error::invalid(format!("bad range {text:?}; expected a..b, a,b,c or a single value"));
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

/// Parses `m=5,s=2`.
fn parse_marginal_point(text: &str) -> certground::Result<(usize, usize)> {
    let (mut m, mut s) = (None, None);
    for part in text.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("bad marginal point {text:?}; expected m=<int>,s=<int>")))?;
        let v: usize = v.trim().parse().map_err(|_| Error::invalid(format!("bad value in {text:?}")))?;
        match k.trim() {
            "m" => m = Some(v),
            "s" => s = Some(v),
            other => return Err(Error::invalid(format!("unknown key {other:?} in {text:?}"))),
        }
    }
    match (m, s) {
        (Some(m), Some(s)) => Ok((m, s)),
        _ => Err(Error::invalid(format!("marginal point {text:?} needs both m and s"))),
    }
}

/// Failure from the command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) => EXIT_IO,
            e if e.is_solver_failure() => EXIT_SOLVER,
            _ => EXIT_INVALID,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn open_out<'a>(path: &Option<PathBuf>, stdout: &'a mut dyn Write) -> io::Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn emit_rows(rows: &[BoundRow], columns: Columns, json: Value, o: &OutputArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let mut w = open_out(&o.out, stdout)?;
    match o.format {
        Format::Json => report::write_json(&json, !o.no_timing, &mut w)?,
        Format::Csv => report::write_csv(rows, columns, !o.no_timing, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn emit_single(row: BoundRow, method: &dyn BoundMethod, o: &OutputArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let json = serde_json::to_value(&row).map_err(Error::from)?;
    emit_rows(std::slice::from_ref(&row), method.columns(), json, o, stdout)
}

fn dump(path: &Path, problem: &certground::sdp::SdpProblem) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path)?);
    write_sdpa(problem, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Exit code for a set of per-point errors: the first solver failure wins,
/// then any validation error.
fn worst(errors: &[Error]) -> i32 {
    if errors.iter().any(|e| e.is_solver_failure()) {
        EXIT_SOLVER
    } else if errors.is_empty() {
        EXIT_OK
    } else {
        EXIT_INVALID
    }
}

fn evaluate_all(
    method: &dyn BoundMethod,
    model: &ModelSpec,
    points: &[MethodParams],
    jobs: Option<usize>,
) -> Result<Vec<(BoundRow, Option<Error>)>, Failure> {
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::invalid("--jobs must be at least 1").into());
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| Error::invalid(e.to_string()))?;
    // collect() keeps input order, so rows come out sorted by parameter
    Ok(pool.install(|| {
        points
            .par_iter()
            .map(|p| match method.evaluate(model, p) {
                Ok(row) => (row, None),
                Err(e) => (method.skeleton(model, p).failed(&e), Some(e)),
            })
            .collect()
    }))
}

fn sweep_points(
    method: &dyn BoundMethod,
    base: &MethodParams,
    m: &Option<String>,
    s: &Option<String>,
    ell: &Option<String>,
    n: &Option<String>,
) -> certground::Result<Vec<MethodParams>> {
    let axis = |name: &str, v: &Option<String>| -> certground::Result<Vec<Option<usize>>> {
        let used = method.sweep_axes().contains(&name);
        match (v, used) {
            (Some(t), true) => Ok(parse_range(t)?.into_iter().map(Some).collect()),
            (None, true) => Err(Error::invalid(format!("method {} needs --{name}", method.name()))),
            (Some(_), false) => Err(Error::invalid(format!("method {} takes no --{name}", method.name()))),
            (None, false) => Ok(vec![None]),
        }
    };
    let ms = axis("m", m)?;
    let ss = axis("s", s)?;
    let ls = axis("l", ell)?;
    let ns = axis("n", n)?;
    let mut out = Vec::new();
    for &m in &ms {
        for &s in &ss {
            if let (Some(m), Some(s)) = (m, s) {
                if 2 * s > m {
                    continue;
                }
            }
            for &ell in &ls {
                for &n in &ns {
                    out.push(MethodParams { m, s, ell, n, ..base.clone() });
                }
            }
        }
    }
    Ok(out)
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let registry = Registry::default();
    match cli.command {
        Command::Anderson { model, m, solver, output } => {
            let model = model.load()?;
            let method = registry.get("anderson")?;
            let params = MethodParams { m: Some(m), ..solver.params()? };
            let row = method.evaluate(&model, &params)?;
            emit_single(row, method, &output, stdout)?;
        }
        Command::Marginal { model, m, s, marginal, solver, output, dump_sdp } => {
            let model = model.load()?;
            let method = registry.get("marginal")?;
            let mut params = MethodParams { m: Some(m), s: Some(s), ..solver.params()? };
            marginal.apply(&mut params);
            if let Some(path) = &dump_sdp {
                let mut spec = MarginalProblemSpec::new(model.clone(), m, s, params.mode)
                    .with_placement(params.placement)
                    .with_field(params.field);
                if let Some(on) = params.shift_invariance {
                    spec = spec.with_shift_invariance(on);
                }
                dump(path, &build_marginal_sdp(&spec)?)?;
            }
            let row = method.evaluate(&model, &params)?;
            emit_single(row, method, &output, stdout)?;
        }
        Command::Moment { model, ell, solver, output, dump_sdp } => {
            let model = model.load()?;
            let method = registry.get("moment")?;
            let params = MethodParams { ell: Some(ell), ..solver.params()? };
            if let Some(path) = &dump_sdp {
                let structure = build_structure(&build_basis(ell)?);
                dump(path, &build_moment_sdp(&structure, &model)?.0)?;
            }
            let row = method.evaluate(&model, &params)?;
            emit_single(row, method, &output, stdout)?;
        }
        Command::Sweep { method, model, m, s, ell, n, marginal, solver, output, csv, jobs } => {
            let model = model.load()?;
            let method = registry.get(&method)?;
            let mut base = solver.params()?;
            marginal.apply(&mut base);
            let points = sweep_points(method, &base, &m, &s, &ell, &n)?;
            let results = evaluate_all(method, &model, &points, jobs)?;
            let errors: Vec<Error> = results.iter().filter_map(|r| r.1.as_ref()).map(clone_error).collect();
            let rows: Vec<BoundRow> = results.into_iter().map(|r| r.0).collect();
            if let Some(path) = &csv {
                let mut w = BufWriter::new(File::create(path)?);
                report::write_csv(&rows, method.columns(), !output.no_timing, &mut w)?;
                w.flush()?;
            }
            let json = json!({
                "method": method.name(),
                "model": model.name,
                "D": model.dim,
                "rows": rows,
            });
            emit_rows(&rows, method.columns(), json, &output, stdout)?;
            return Ok(worst(&errors));
        }
        Command::Sandwich { model, anderson_m, moment_l, marginal, ring_n, marginal_opts, solver, output } => {
            let model = model.load()?;
            let mut base = solver.params()?;
            marginal_opts.apply(&mut base);
            let mut jobs: Vec<(&dyn BoundMethod, MethodParams)> = Vec::new();
            if let Some(t) = &anderson_m {
                for m in parse_range(t)? {
                    jobs.push((registry.get("anderson")?, MethodParams { m: Some(m), ..base.clone() }));
                }
            }
            if let Some(t) = &moment_l {
                for l in parse_range(t)? {
                    jobs.push((registry.get("moment")?, MethodParams { ell: Some(l), ..base.clone() }));
                }
            }
            for point in &marginal {
                let (m, s) = parse_marginal_point(point)?;
                jobs.push((registry.get("marginal")?, MethodParams { m: Some(m), s: Some(s), ..base.clone() }));
            }
            jobs.push((registry.get("product_upper")?, base.clone()));
            if let Some(n) = ring_n {
                jobs.push((registry.get("ring_reference")?, MethodParams { n: Some(n), ..base.clone() }));
            }
            let mut rows = Vec::new();
            let mut errors = Vec::new();
            for (method, p) in jobs {
                match method.evaluate(&model, &p) {
                    Ok(row) => rows.push(row),
                    Err(e) => {
                        rows.push(method.skeleton(&model, &p).failed(&e));
                        errors.push(e);
                    }
                }
            }
            let report = SandwichReport::from_rows(&model.name, model.dim, rows);
            let json = serde_json::to_value(&report).map_err(Error::from)?;
            emit_rows(&report.rows, SUMMARY_COLUMNS, json, &output, stdout)?;
            return Ok(worst(&errors));
        }
        Command::Models { output } => {
            let models: Vec<Value> = BUILTIN_MODELS
                .iter()
                .map(|(name, desc)| json!({"name": name, "description": desc}))
                .collect();
            let mut w = open_out(&output.out, stdout)?;
            match output.format {
                Format::Json => report::write_json(&json!({ "models": models }), true, &mut w)?,
                Format::Csv => {
                    writeln!(w, "name,description")?;
                    for (name, desc) in BUILTIN_MODELS {
                        writeln!(w, "{name},\"{desc}\"")?;
                    }
                }
            }
            w.flush()?;
        }
        Command::Oracle { model, n, solver, output } => {
            let model = model.load()?;
            if model.dim != 1 {
                return Err(Error::Unsupported("the oracle covers D = 1 only".into()).into());
            }
            let lanczos = LanczosOptions { tol: solver.tol, seed: solver.seed, ..Default::default() };
            let mut rows = Vec::new();
            for n in parse_range(&n)? {
                let ring = full_program_oracle(&model, n)?;
                caps::check_against(
                    &format!("open chain N = {n}"),
                    caps::qubit_equivalents(model.d, n),
                    caps::DENSE_MAX_QUBITS,
                )?;
                let chain = eigen::min_eig(&build_chain(&model, n)?, eigen::EigenMethod::Auto, &lanczos)?;
                if !chain.converged {
                    return Err(Error::NotConverged { iterations: chain.iterations, residual: chain.residual }.into());
                }
                rows.push(json!({
                    "n": n,
                    "ring_density": ring,
                    "chain_lambda_min": chain.value,
                    "chain_density": chain.value / n as f64,
                }));
            }
            let mut w = open_out(&output.out, stdout)?;
            match output.format {
                Format::Json => report::write_json(&json!({"model": model.name, "rows": rows}), true, &mut w)?,
                Format::Csv => {
                    writeln!(w, "model,n,ring_density,chain_lambda_min,chain_density")?;
                    for r in &rows {
                        writeln!(
                            w,
                            "{},{},{},{},{}",
                            model.name,
                            r["n"],
                            report::format_float(r["ring_density"].as_f64().unwrap_or(f64::NAN)),
                            report::format_float(r["chain_lambda_min"].as_f64().unwrap_or(f64::NAN)),
                            report::format_float(r["chain_density"].as_f64().unwrap_or(f64::NAN)),
                        )?;
                    }
                }
            }
            w.flush()?;
        }
    }
    Ok(EXIT_OK)
}

// Error holds an io::Error and so is not Clone; only the kind matters here.
fn clone_error(e: &Error) -> Error {
    if e.is_solver_failure() {
        Error::Solver(e.to_string())
    } else {
        Error::invalid(e.to_string())
    }
}

/// Runs the CLI on `argv` (program name first), writing the report to
/// `stdout` and messages to `stderr`. Returns the exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    return EXIT_OK;
                }
                _ => EXIT_INVALID,
            };
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
