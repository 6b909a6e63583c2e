//! The `kdil` command line: instance files in, reports and dumps out.
//!
//! Exit status is 0 when every hard check passes, 1 when a verification fails
//! and 2 when the input is malformed.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{verify_automorphism, FiniteCStarAlgebra, StarAlgebra};
use crate::check::{Check, CheckList, Status, Tier};
use crate::covariant::{covariant_construct, covariance_checks, verify_covariant_dilation};
use crate::crossed::induce_crossed_maps;
use crate::error::{Error, Result};
use crate::instance::{preset, AlgebraSpec, AlphaSpec, Instance, InstanceFile, ModuleSpec, SpaceSpec, TableSpec};
use crate::krein::{verify_fundamental_symmetry, KreinSpace};
use crate::ksgns::{construct_ksgns, random_conjugate, unitary_equivalence, verify_ksgns, DilationDump};
use crate::maps::{alpha_cp_report, generate_instances, phi_map_for};
use crate::numkit::json::{to_rows, vector_to_pairs, Rows};
use crate::numkit::{real_diag, TolerancePolicy};

pub const ENV_TOL_REL: &str = "KDIL_TOL_REL";

#[derive(Debug, Parser)]
#[command(name = "kdil", version, about = "Verify alpha-CP maps and build their KSGNS dilations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the result here instead of standard output
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,

    /// Absolute part of every residual bound
    #[arg(long, global = true)]
    pub tol_abs: Option<f64>,

    /// Relative part, scaled by the size of the compared quantity; overrides KDIL_TOL_REL
    #[arg(long, global = true)]
    pub tol_rel: Option<f64>,

    /// Relative eigenvalue cutoff for numerical rank
    #[arg(long, global = true)]
    pub rank_cutoff: Option<f64>,

    /// Seed for sampling and random generation (defaults to the instance seed)
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Include wall-clock time in reports (makes output non-reproducible)
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check conditions (i)-(iii), the φ-map identity and covariance; accepts a directory
    Verify { path: PathBuf },
    /// Build and verify the minimal KSGNS dilation
    Dilate { path: PathBuf },
    /// Unitary equivalence with a dumped dilation, or with a random copy when none is given
    Equiv {
        path: PathBuf,
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Covariant construction with the induced group representations
    Covariant { path: PathBuf },
    /// Induced maps on the crossed products
    Crossed { path: PathBuf },
    /// Emit a fixture (fix-a .. fix-e, s3-flip, m2-swap, m3-cyclic) or `random`
    Gen {
        /// Fixture name or `random`
        #[arg(long)]
        preset: String,
    },
}

/// Checks plus overall status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
    pub overall: Status,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl Report {
    pub fn new(checks: CheckList) -> Self {
        let overall = if checks.all_hard_pass() { Status::Pass } else { Status::Fail };
        let warnings = checks
            .iter()
            .filter(|c| c.tier == Tier::Warning && c.status != Status::Pass)
            .map(|c| c.name.clone())
            .collect();
        Report { checks: checks.checks, overall, warnings, timing_ms: None }
    }

    pub fn passed(&self) -> bool {
        self.overall == Status::Pass
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Record a failed construction step as a hard check.
fn failure(step: &str, err: &Error) -> Check {
    Check::hard(step, err.to_string(), f64::INFINITY, 0.0)
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Warn => "WARN",
    }
}

pub fn emit_report(report: &Report, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Text => {
            let mut out = String::new();
            for c in &report.checks {
                let _ = write!(out, "{} {:<32} {:>10.3e} <= {:<10.3e} {}", status_word(c.status), c.name, c.residual, c.threshold, c.anchor);
                if let Some(v) = c.value {
                    let _ = write!(out, "  [value {v}]");
                }
                out.push('\n');
            }
            let _ = writeln!(out, "overall: {}", status_word(report.overall));
            if !report.warnings.is_empty() {
                let _ = writeln!(out, "warnings: {}", report.warnings.join(", "));
            }
            if let Some(t) = report.timing_ms {
                let _ = writeln!(out, "time: {t:.3} ms");
            }
            out
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialises");
    s.push('\n');
    s
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn malformed(err: impl std::fmt::Display) -> Self {
        Outcome { code: 2, stdout: String::new(), stderr: format!("error: {err}\n") }
    }
}

/// Tolerances: defaults, then the instance file, then `KDIL_TOL_REL`, then flags.
pub fn resolve_tolerance(cli: &Cli, file: Option<&InstanceFile>, env_rel: Option<&str>) -> Result<TolerancePolicy> {
    let mut tol = TolerancePolicy::default();
    if let Some(f) = file {
        tol = f.tolerance(tol);
    }
    if let Some(v) = env_rel {
        tol.rel_tol = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidTolerance(format!("{ENV_TOL_REL}={v:?} is not a number")))?;
    }
    if let Some(v) = cli.tol_abs {
        tol.abs_tol = v;
    }
    if let Some(v) = cli.tol_rel {
        tol.rel_tol = v;
    }
    if let Some(v) = cli.rank_cutoff {
        tol.rank_cutoff = v;
    }
    tol.validate()?;
    Ok(tol)
}

pub fn parse_instance(path: &Path) -> Result<InstanceFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let file = InstanceFile::from_json(&text)?;
    let errs = file.dimension_errors();
    if !errs.is_empty() {
        return Err(Error::Dimension(errs.join("; ")));
    }
    Ok(file)
}

struct Context {
    file: InstanceFile,
    tol: TolerancePolicy,
    seed: u64,
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let env_rel = std::env::var(ENV_TOL_REL).ok();
    let outcome = execute(&cli, env_rel.as_deref());
    match (&cli.output, outcome.code) {
        (Some(path), 0 | 1) => match fs::write(path, &outcome.stdout) {
            Ok(()) => Outcome { stdout: String::new(), ..outcome },
            Err(e) => Outcome::malformed(format!("{}: {e}", path.display())),
        },
        _ => outcome,
    }
}

pub fn execute(cli: &Cli, env_rel: Option<&str>) -> Outcome {
    let start = Instant::now();
    let path = match &cli.command {
        Command::Gen { preset } => {
            return match generate(preset, cli.seed.unwrap_or(0)) {
                Ok(file) => Outcome { code: 0, stdout: file.to_json(), stderr: String::new() },
                Err(e) => Outcome::malformed(e),
            };
        }
        Command::Verify { path } if path.is_dir() => return verify_dir(cli, path, env_rel),
        Command::Verify { path }
        | Command::Dilate { path }
        | Command::Equiv { path, .. }
        | Command::Covariant { path }
        | Command::Crossed { path } => path,
    };
    let ctx = match load(cli, path, env_rel) {
        Ok(ctx) => ctx,
        Err(e) => return Outcome::malformed(e),
    };
    let result = match &cli.command {
        Command::Verify { .. } => verify(&ctx).map(|r| (r, None)),
        Command::Dilate { .. } => dilate(&ctx),
        Command::Equiv { against, .. } => equiv(&ctx, against.as_deref()),
        Command::Covariant { .. } => covariant(&ctx),
        Command::Crossed { .. } => crossed(&ctx),
        Command::Gen { .. } => unreachable!(),
    };
    let (mut report, artifact) = match result {
        Ok(r) => r,
        Err(e) => return Outcome::malformed(e),
    };
    if cli.timing {
        report.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    let code = report.exit_code();
    let stdout = match (cli.format, artifact) {
        (Format::Text, _) | (Format::Json, None) => emit_report(&report, cli.format),
        (Format::Json, Some(mut obj)) => {
            obj.insert("report".into(), serde_json::to_value(&report).expect("report serialises"));
            to_json(&obj)
        }
    };
    Outcome { code, stdout, stderr: String::new() }
}

fn load(cli: &Cli, path: &Path, env_rel: Option<&str>) -> Result<Context> {
    let file = parse_instance(path)?;
    let tol = resolve_tolerance(cli, Some(&file), env_rel)?;
    let seed = cli.seed.unwrap_or(file.seed);
    Ok(Context { file, tol, seed })
}

type Artifact = Option<serde_json::Map<String, Value>>;

/// Build the instance; structural failures become a failed check.
fn build(ctx: &Context, list: &mut CheckList) -> Result<Option<Instance>> {
    match ctx.file.build(&ctx.tol) {
        Ok(inst) => Ok(Some(inst)),
        Err(e) if e.is_input_error() => Err(e),
        Err(e) => {
            list.push(failure("instance", &e));
            Ok(None)
        }
    }
}

/// Verification checks for an instance, independent of any construction.
fn instance_checks(ctx: &Context, inst: &Instance) -> Result<CheckList> {
    let report = alpha_cp_report(inst.phi(), &inst.samples, &ctx.tol, ctx.seed)?;
    let mut list = report.checks;
    let (phi_map, _) = inst.big_phi.identity_residual(&ctx.tol);
    list.push(phi_map);
    if let Some(cov) = &inst.covariant {
        list.extend(covariance_checks(&inst.big_phi, &cov.action, &cov.u, &cov.u_prime, &ctx.tol)?);
    }
    Ok(list)
}

fn verify(ctx: &Context) -> Result<Report> {
    let mut list = CheckList::new();
    if let Some(inst) = build(ctx, &mut list)? {
        list.extend(instance_checks(ctx, &inst)?);
    }
    Ok(Report::new(list))
}

fn verify_dir(cli: &Cli, dir: &Path, env_rel: Option<&str>) -> Outcome {
    let mut paths: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect(),
        Err(e) => return Outcome::malformed(format!("{}: {e}", dir.display())),
    };
    paths.sort();
    let mut code = 0;
    let mut entries = Vec::new();
    let mut text = String::new();
    for p in &paths {
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        match load(cli, p, env_rel).and_then(|ctx| verify(&ctx)) {
            Ok(report) => {
                code = code.max(report.exit_code());
                let _ = writeln!(text, "== {name}\n{}", emit_report(&report, Format::Text));
                entries.push(json!({ "file": name, "report": report }));
            }
            Err(e) => {
                code = 2;
                let _ = writeln!(text, "== {name}\nerror: {e}\n");
                entries.push(json!({ "file": name, "error": e.to_string() }));
            }
        }
    }
    let stdout = match cli.format {
        Format::Json => to_json(&json!({ "files": entries })),
        Format::Text => text,
    };
    Outcome { code, stdout, stderr: String::new() }
}

/// Shared front half of the construction commands: verify, then hand over the instance.
fn prepare(ctx: &Context) -> Result<(CheckList, Option<Instance>)> {
    let mut list = CheckList::new();
    let Some(inst) = build(ctx, &mut list)? else {
        return Ok((list, None));
    };
    list.extend(instance_checks(ctx, &inst)?);
    let ok = list.all_hard_pass();
    Ok((list, ok.then_some(inst)))
}

fn dump_object(dump: &DilationDump) -> serde_json::Map<String, Value> {
    match serde_json::to_value(dump).expect("dump serialises") {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

fn dilate(ctx: &Context) -> Result<(Report, Artifact)> {
    let (mut list, inst) = prepare(ctx)?;
    let Some(inst) = inst else {
        return Ok((Report::new(list), None));
    };
    match construct_ksgns(&inst.big_phi, &ctx.tol) {
        Ok(d) => {
            let checks = verify_ksgns(&d, &inst.big_phi, &ctx.tol)?;
            let dump = DilationDump::new(&d, &checks);
            list.extend(checks);
            let mut obj = serde_json::Map::new();
            obj.insert("dilation".into(), Value::Object(dump_object(&dump)));
            Ok((Report::new(list), Some(obj)))
        }
        Err(e) => {
            list.push(failure("construction", &e));
            Ok((Report::new(list), None))
        }
    }
}

fn read_dump(path: &Path) -> Result<DilationDump> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| Error::Schema(e.to_string()))?;
    if let Some(inner) = value.get_mut("dilation") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))
}

fn equiv(ctx: &Context, against: Option<&Path>) -> Result<(Report, Artifact)> {
    let other = against.map(read_dump).transpose()?;
    let (mut list, inst) = prepare(ctx)?;
    let Some(inst) = inst else {
        return Ok((Report::new(list), None));
    };
    let tol = &ctx.tol;
    let result = construct_ksgns(&inst.big_phi, tol).and_then(|d| {
        let d2 = match other {
            Some(dump) => dump.into_dilation(&inst.big_phi, tol)?,
            None => random_conjugate(&d, &mut ChaCha8Rng::seed_from_u64(ctx.seed), tol)?,
        };
        unitary_equivalence(&d, &d2, &inst.big_phi, tol)
    });
    match result {
        Ok(eq) => {
            let residuals: BTreeMap<String, f64> = eq.checks.iter().map(|c| (c.name.clone(), c.residual)).collect();
            list.extend(eq.checks);
            let mut obj = serde_json::Map::new();
            obj.insert("U1".into(), json!(to_rows(&eq.u1)));
            obj.insert("U2".into(), json!(to_rows(&eq.u2)));
            obj.insert("residuals".into(), json!(residuals));
            Ok((Report::new(list), Some(obj)))
        }
        Err(e) if e.is_input_error() => Err(e),
        Err(e) => {
            list.push(failure("equivalence", &e));
            Ok((Report::new(list), None))
        }
    }
}

fn no_group() -> Error {
    Error::Schema("this command needs a group table".into())
}

fn covariant(ctx: &Context) -> Result<(Report, Artifact)> {
    if ctx.file.group.is_none() {
        return Err(no_group());
    }
    let (mut list, inst) = prepare(ctx)?;
    let Some(inst) = inst else {
        return Ok((Report::new(list), None));
    };
    let cov = inst.covariant.as_ref().expect("group present");
    match covariant_construct(&inst.big_phi, &cov.action, &cov.u, &cov.u_prime, &ctx.tol) {
        Ok(c) => {
            let checks = verify_covariant_dilation(&c, &inst.big_phi, &cov.action, &cov.u, &cov.u_prime, &ctx.tol)?;
            let dump = DilationDump::new(&c.base, &checks);
            list.extend(checks);
            let mut obj = serde_json::Map::new();
            obj.insert("dilation".into(), Value::Object(dump_object(&dump)));
            obj.insert("v".into(), json!(c.v.u.iter().map(to_rows).collect::<Vec<_>>()));
            obj.insert("vprime".into(), json!(c.v_prime.u.iter().map(to_rows).collect::<Vec<_>>()));
            Ok((Report::new(list), Some(obj)))
        }
        Err(e) => {
            list.push(failure("covariant construction", &e));
            Ok((Report::new(list), None))
        }
    }
}

fn crossed(ctx: &Context) -> Result<(Report, Artifact)> {
    if ctx.file.group.is_none() {
        return Err(no_group());
    }
    let (mut list, inst) = prepare(ctx)?;
    let Some(inst) = inst else {
        return Ok((Report::new(list), None));
    };
    let cov = inst.covariant.as_ref().expect("group present");
    let tol = &ctx.tol;
    let result = covariant_construct(&inst.big_phi, &cov.action, &cov.u, &cov.u_prime, tol)
        .and_then(|c| induce_crossed_maps(&c, &inst.big_phi, &cov.action, &cov.u, &cov.u_prime, tol));
    match result {
        Ok(maps) => {
            let rows = |ms: &[crate::numkit::CMatrix]| ms.iter().map(to_rows).collect::<Vec<Rows>>();
            let mut obj = serde_json::Map::new();
            obj.insert("phi_tilde".into(), json!(rows(&maps.phi_tilde.values)));
            obj.insert("Phi_tilde".into(), json!(rows(&maps.big_phi_tilde)));
            obj.insert("pi_hat_phi".into(), json!(rows(&maps.pi_hat_phi)));
            obj.insert("pi_hat_X".into(), json!(rows(&maps.pi_hat_x)));
            obj.insert(
                "unit".into(),
                json!({ "f": maps.algebra().group().elements().map(|t| vector_to_pairs(&maps.algebra().part(&maps.algebra().unit(), t))).collect::<Vec<_>>() }),
            );
            list.extend(maps.checks);
            Ok((Report::new(list), Some(obj)))
        }
        Err(e) => {
            list.push(failure("crossed maps", &e));
            Ok((Report::new(list), None))
        }
    }
}

/// A fixture by name, or a seeded random instance for `random`.
pub fn generate(name: &str, seed: u64) -> Result<InstanceFile> {
    if name == "random" {
        random_instance(seed)
    } else {
        preset(name)
    }
}

/// Random passing instance over `ℂ^m`, `M₂` or `ℂ ⊕ M₂`.
pub fn random_instance(seed: u64) -> Result<InstanceFile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = TolerancePolicy::default();
    let (blocks, alpha_spec, signs): (Vec<usize>, AlphaSpec, Vec<f64>) = match rng.random_range(0..3) {
        0 => {
            let m = rng.random_range(2..=4usize);
            let mut perm: Vec<usize> = (0..m).collect();
            if rng.random_bool(0.5) {
                perm.swap(0, m - 1);
            }
            (vec![1; m], AlphaSpec::Permutation { perm }, vec![1.0])
        }
        1 => {
            let z = to_rows(&real_diag(&[1.0, -1.0]));
            if rng.random_bool(0.5) {
                (vec![2], AlphaSpec::Inner { unitaries: vec![z] }, vec![1.0, -1.0])
            } else {
                (vec![2], AlphaSpec::Identity, vec![1.0, 1.0])
            }
        }
        _ => {
            let z = to_rows(&real_diag(&[1.0, -1.0]));
            let one = to_rows(&real_diag(&[1.0]));
            (vec![1, 2], AlphaSpec::Inner { unitaries: vec![one, z] }, vec![1.0, -1.0])
        }
    };
    let algebra = FiniteCStarAlgebra::new(blocks.clone())?;
    let alpha = verify_automorphism(&alpha_spec.matrix(&algebra, &tol)?, &algebra, &tol)?;
    let j = real_diag(&signs);
    let h1: KreinSpace = verify_fundamental_symmetry(&j, &tol)?;
    let out = generate_instances(&algebra, &alpha, &h1, seed, 1, &tol)?;
    let phi = out.maps.into_iter().next().ok_or_else(|| Error::NoInstanceFound("generator returned nothing".into()))?;
    let big = phi_map_for(&phi, 1, 0, &mut rng, &tol);
    let d1 = h1.dim();
    Ok(InstanceFile {
        algebra: AlgebraSpec { blocks, alpha: alpha_spec },
        h1: SpaceSpec { dim: d1, j: (!h1.is_hilbert()).then(|| to_rows(&j)) },
        h2: big.as_ref().map(|b| SpaceSpec { dim: b.h2_dim, j: None }),
        module: big.as_ref().map(|_| ModuleSpec { rank: 1 }),
        phi: TableSpec { values: phi.values.iter().map(to_rows).collect() },
        big_phi: big.as_ref().map(|b| TableSpec { values: b.values.iter().map(to_rows).collect() }),
        samples: None,
        group: None,
        eta: None,
        beta: None,
        u: None,
        uprime: None,
        tolerance: None,
        seed,
    })
}
