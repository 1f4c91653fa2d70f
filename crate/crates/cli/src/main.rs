//! Command-line front end. Each subcommand reads an optional plain-text
//! `key = value` configuration, runs one engine operation, and writes a
//! machine-readable report to `--out` (default stdout). Human summaries go to
//! stderr so the report stream stays diffable.
//!
//! Exit codes: 0 ok, 1 check failed, 2 usage, 3 resource guard, 4 numeric
//! failure.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cpqft_core::causal::{
    check_axiom, eg_inductive_step, retarded_pairing, Axiom, AxiomOptions, CausalError,
    ModelKernel, SplitOptions, TaylorWindow, TestFunction,
};
use cpqft_core::config::{
    self, parse_f64_list, testfn_from_str, testfns_from_config, Config, ConfigError,
};
use cpqft_core::fields::FieldError;
use cpqft_core::fock::{FockError, FockSpace};
use cpqft_core::quad::{limit_contraction, KernelPairSpec, QuadError};
use cpqft_core::report::{write_jsonl, EpsRecord, SplitRecord};
use cpqft_core::suites::{run_suites, SuiteError, SuiteOptions, SUITE_NAMES};
use cpqft_core::wick::{multi_product, qed_interaction, NormalMonomial, NormalPolynomial, Part, WickError};
use cpqft_core::{
    C64, FieldFactor, FieldKind, FieldRoster, FieldSpec, QuadRule, QuadratureSpec, SchwartzTestFn,
};

// ---------------------------------------------------------------------------
// argument surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "cpqft",
    version,
    about = "Desk-scale causal perturbation engine on a truncated Fock space",
    after_help = "exit codes: 0 ok, 1 check failed, 2 usage, 3 resource guard, 4 numeric failure"
)]
struct Cli {
    /// Plain-text `key = value` configuration; repeated keys form lists.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Write the report to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Seed for the randomized property suites.
    #[arg(long, global = true, value_name = "N", default_value_t = 7)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a product of normal-ordered blocks into its contraction terms.
    ///
    /// Blocks come from repeated `block =` config lines; each is `1`, the
    /// shortcut `qed[@SLOT]`, or whitespace-separated factors
    /// `NAME[+][:c|:a][[COMP]][@SLOT]`. Without a config the demo product
    /// `A@0` × `A@1` over one scalar field is expanded.
    WickExpand {
        /// structural: one line per contraction pattern; refined: every
        /// part-definite term; sectors: one summary line per (l,m).
        #[arg(long, value_enum, default_value = "structural")]
        form: Form,
    },

    /// Run the verification suites and report one JSON line per check.
    Verify {
        /// Suites to run: oracle, ccr, spinor, pairing, combinatorics,
        /// axioms, or all.
        #[arg(long, value_delimiter = ',', default_value = "all")]
        suites: Vec<String>,

        /// Random product cases in the oracle suite.
        #[arg(long, value_name = "N", default_value_t = 25)]
        cases: usize,

        /// Negative control: flip the Fermi reordering signs in one oracle
        /// case; the run must then fail.
        #[arg(long)]
        inject_sign_error: bool,
    },

    /// Scan a kernel contraction along a decreasing mass-deformation list
    /// and fit the convergence slope.
    EpsScan,

    /// Pair model kernels with a Taylor-subtracted test function on the
    /// retarded half-line.
    Split {
        /// Perturbative order; numeric evaluation stops at 2.
        #[arg(long, value_name = "N", default_value_t = 2)]
        order: usize,

        /// Print the partition sums of the inductive step instead of values.
        #[arg(long)]
        symbolic: bool,
    },

    /// Check the construction axioms and report one JSON line per record.
    Axioms {
        /// Axiom labels I..V (also digits or names); default all.
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        which: Vec<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Form {
    Structural,
    Refined,
    Sectors,
}

// ---------------------------------------------------------------------------
// error → exit code mapping
// ---------------------------------------------------------------------------

struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError { code: 2, msg: msg.into() }
    }

    fn check(msg: impl Into<String>) -> Self {
        CliError { code: 1, msg: msg.into() }
    }

    fn resource(msg: impl Into<String>) -> Self {
        CliError { code: 3, msg: msg.into() }
    }

    fn numeric(msg: impl Into<String>) -> Self {
        CliError { code: 4, msg: msg.into() }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<WickError> for CliError {
    fn from(e: WickError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        match e {
            FockError::DimensionCap { .. } => CliError::resource(e.to_string()),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<QuadError> for CliError {
    fn from(e: QuadError) -> Self {
        match e {
            QuadError::NonConvergent { .. } => CliError::numeric(e.to_string()),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<CausalError> for CliError {
    fn from(e: CausalError) -> Self {
        match e {
            CausalError::Fock(f) => f.into(),
            CausalError::Quad(q) => q.into(),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<SuiteError> for CliError {
    fn from(e: SuiteError) -> Self {
        match e {
            SuiteError::Fock(f) => f.into(),
            SuiteError::Quad(q) => q.into(),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::usage(format!("report output: {e}"))
    }
}

// ---------------------------------------------------------------------------
// entry
// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => config::Config::from_path(path)?,
        None => Config::parse("")?,
    };
    let mut sink = open_sink(&cli.out)?;
    let result = match &cli.command {
        Command::WickExpand { form } => cmd_wick_expand(&cfg, *form, &mut sink),
        Command::Verify { suites, cases, inject_sign_error } => {
            let opts = SuiteOptions {
                seed: cli.seed,
                cases: *cases,
                inject_sign_error: *inject_sign_error,
            };
            cmd_verify(&cfg, suites, &opts, &mut sink)
        }
        Command::EpsScan => cmd_eps_scan(&cfg, &mut sink),
        Command::Split { order, symbolic } => cmd_split(&cfg, *order, *symbolic, &mut sink),
        Command::Axioms { which } => cmd_axioms(&cfg, which, &mut sink),
    };
    sink.flush()?;
    result
}

fn open_sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            CliError::usage(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

// ---------------------------------------------------------------------------
// shared config plumbing
// ---------------------------------------------------------------------------

/// Roster from `field =` lines, or the given fallback when the config has
/// none.
fn roster_or(cfg: &Config, fallback: impl FnOnce() -> FieldRoster) -> Result<FieldRoster, CliError> {
    if cfg.get("field").is_some() {
        Ok(config::roster_from_config(cfg)?)
    } else {
        Ok(fallback())
    }
}

fn scalar_roster() -> FieldRoster {
    let mut roster = FieldRoster::new();
    roster
        .register(FieldSpec::scalar("A", 1.0))
        .expect("fresh roster accepts one field");
    roster
}

fn photon_roster() -> FieldRoster {
    let mut roster = FieldRoster::new();
    roster
        .register(FieldSpec::photon())
        .expect("fresh roster accepts one field");
    roster
}

fn quadrature_from_config(cfg: &Config) -> Result<QuadratureSpec, CliError> {
    let rule = match cfg.get("quad.rule").unwrap_or("radial") {
        "radial" => QuadRule::RadialIsotropic,
        "tensor" => QuadRule::TensorMidpoint,
        other => {
            return Err(CliError::usage(format!(
                "quad.rule must be `radial` or `tensor`, got `{other}`"
            )))
        }
    };
    Ok(QuadratureSpec {
        half_width: cfg.get_f64("quad.half_width", 8.0)?,
        points_per_axis: cfg.get_usize("quad.points", 48)?,
        rule,
        tolerance: cfg.get_f64("quad.tolerance", 5e-3)?,
    })
}

// ---------------------------------------------------------------------------
// wick-expand
// ---------------------------------------------------------------------------

fn cmd_wick_expand(cfg: &Config, form: Form, sink: &mut dyn Write) -> Result<(), CliError> {
    let roster = roster_or(cfg, scalar_roster)?;
    let block_lines = cfg.get_all("block");
    let blocks: Vec<NormalPolynomial> = if block_lines.is_empty() && cfg.get("field").is_none() {
        // Demo product :A(x₀): :A(x₁): over the fallback scalar.
        vec![parse_block("A@0", 0, &roster)?, parse_block("A@1", 1, &roster)?]
    } else if block_lines.is_empty() {
        // Empty product: the multiplicative unit.
        vec![NormalPolynomial::from_monomial(NormalMonomial::one())]
    } else {
        block_lines
            .iter()
            .enumerate()
            .map(|(i, line)| parse_block(line, i, &roster))
            .collect::<Result<_, _>>()?
    };
    for block in &blocks {
        block.validate(&roster)?;
    }
    let product = multi_product(&blocks, &roster)?;
    let lines = match form {
        Form::Structural => product.render_structural(&roster),
        Form::Refined => product.render_refined(&roster),
        Form::Sectors => product.render_sectors(&roster),
    };
    for line in &lines {
        writeln!(sink, "{line}")?;
    }
    eprintln!(
        "{} blocks, {} contraction patterns, {} refined terms",
        blocks.len(),
        product.structural.len(),
        product.refined.terms().count()
    );
    Ok(())
}

/// One `block =` line: `1`, `qed[@SLOT]`, or a whitespace-separated factor
/// list. `idx` is the block position; it supplies the default slot.
fn parse_block(line: &str, idx: usize, roster: &FieldRoster) -> Result<NormalPolynomial, CliError> {
    let line = line.trim();
    if line == "1" {
        return Ok(NormalPolynomial::from_monomial(NormalMonomial::one()));
    }
    if let Some(rest) = line.strip_prefix("qed") {
        let slot = match rest {
            "" => idx,
            _ => rest
                .strip_prefix('@')
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CliError::usage(format!("bad block `{line}`: expected `qed[@SLOT]`")))?,
        };
        let psi = find_kind(roster, FieldKind::Dirac)
            .ok_or_else(|| CliError::usage("block `qed` needs a dirac field in the roster"))?;
        let photon = find_kind(roster, FieldKind::Photon)
            .ok_or_else(|| CliError::usage("block `qed` needs a photon field in the roster"))?;
        return Ok(qed_interaction(psi, photon, slot));
    }
    let factors = line
        .split_whitespace()
        .map(|atom| parse_factor(atom, idx, roster))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(NormalPolynomial::from_monomial(NormalMonomial::new(
        C64::new(1.0, 0.0),
        factors,
    )))
}

fn find_kind(roster: &FieldRoster, kind: FieldKind) -> Option<cpqft_core::FieldId> {
    roster.iter().find(|(_, s)| s.kind == kind).map(|(id, _)| id)
}

/// Factor atom `NAME[+][:c|:a][[COMP]][@SLOT]`, mirroring the rendered form.
fn parse_factor(atom: &str, default_slot: usize, roster: &FieldRoster) -> Result<FieldFactor, CliError> {
    let bad = |why: &str| CliError::usage(format!("bad factor `{atom}`: {why}"));
    let (head, slot) = match atom.rsplit_once('@') {
        Some((h, s)) => (h, s.parse().map_err(|_| bad("slot must be an integer"))?),
        None => (atom, default_slot),
    };
    let (head, component) = match head.strip_suffix(']') {
        Some(open) => {
            let (h, c) = open
                .rsplit_once('[')
                .ok_or_else(|| bad("unmatched `]`"))?;
            (h, c.parse().map_err(|_| bad("component must be an integer"))?)
        }
        None => (head, 0),
    };
    let (head, part) = if let Some(h) = head.strip_suffix(":c") {
        (h, Part::Creation)
    } else if let Some(h) = head.strip_suffix(":a") {
        (h, Part::Annihilation)
    } else {
        (head, Part::Full)
    };
    let (name, dagger) = match head.strip_suffix('+') {
        Some(h) => (h, true),
        None => (head, false),
    };
    if name.is_empty() {
        return Err(bad("missing field name"));
    }
    let field = roster.by_name(name)?;
    Ok(FieldFactor { field, dagger, component, slot, part })
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn cmd_verify(
    cfg: &Config,
    suites: &[String],
    opts: &SuiteOptions,
    sink: &mut dyn Write,
) -> Result<(), CliError> {
    // The declared workspace must fit before anything heavy runs.
    if cfg.get("field").is_some() || cfg.get("grid.point").is_some() || cfg.get("grid.cubic").is_some() {
        let roster = config::roster_from_config(cfg)?;
        let grid = config::grid_from_config(cfg)?;
        let space = FockSpace::new(roster, grid)?;
        eprintln!("workspace dimension {}", space.dim);
    }

    let mut lib_names: Vec<String> = Vec::new();
    let mut want_axioms = false;
    let mut want_all = false;
    for name in suites {
        match name.as_str() {
            "all" => want_all = true,
            "axioms" => want_axioms = true,
            other if SUITE_NAMES.contains(&other) => lib_names.push(other.to_owned()),
            other => return Err(CliError::usage(format!("unknown suite `{other}`"))),
        }
    }
    if want_all {
        lib_names = Vec::new(); // empty list = all library suites
        want_axioms = true;
    }
    let run_library = want_all || !lib_names.is_empty();

    let mut failures = 0usize;
    if run_library {
        let records = run_suites(&lib_names, opts)?;
        failures += records.iter().filter(|r| !r.passed).count();
        write_jsonl(&mut *sink, &records)?;
    }
    if want_axioms {
        let axiom_opts = AxiomOptions::default();
        for axiom in Axiom::all() {
            let reports = check_axiom(axiom, &axiom_opts)?;
            failures += reports.iter().filter(|r| !r.pass).count();
            write_jsonl(&mut *sink, &reports)?;
        }
    }
    sink.flush()?;
    if failures > 0 {
        return Err(CliError::check(format!("{failures} check(s) failed")));
    }
    eprintln!("all checks passed");
    Ok(())
}

// ---------------------------------------------------------------------------
// eps-scan
// ---------------------------------------------------------------------------

fn cmd_eps_scan(cfg: &Config, sink: &mut dyn Write) -> Result<(), CliError> {
    let roster = roster_or(cfg, photon_roster)?;
    let field = match cfg.get("pair.field") {
        Some(name) => roster.by_name(name)?,
        None => {
            let mut it = roster.iter();
            let (id, _) = it.next().ok_or_else(|| CliError::usage("empty field roster"))?;
            if it.next().is_some() {
                return Err(CliError::usage(
                    "several fields registered; set pair.field = NAME",
                ));
            }
            id
        }
    };
    let default_component = if roster.get(field).components > 1 { 1 } else { 0 };
    let pair = KernelPairSpec {
        field,
        left_dagger: cfg.get_bool("pair.left_dagger", false)?,
        right_dagger: cfg.get_bool("pair.right_dagger", false)?,
        left_component: cfg.get_usize("pair.left_component", default_component)?,
        right_component: cfg.get_usize("pair.right_component", default_component)?,
    };
    let pairs = [pair, pair];

    let eps_list = match cfg.get("eps") {
        Some(v) => parse_f64_list("eps", v)?,
        None => vec![0.4, 0.2, 0.1, 0.05],
    };
    if eps_list.len() < 3 {
        return Err(CliError::usage(format!(
            "insufficient scan: need at least 3 eps values, got {}",
            eps_list.len()
        )));
    }

    let fns = testfns_from_config(cfg)?;
    let (phi, chi) = match fns.len() {
        0 => (
            SchwartzTestFn::gaussian(&[0.0; 4], &[1.0; 4])?,
            SchwartzTestFn::gaussian(&[0.7, 0.0, 0.0, 0.0], &[1.0; 4])?,
        ),
        2 => (fns[0].clone(), fns[1].clone()),
        n => {
            return Err(CliError::usage(format!(
                "eps-scan smears two slots: give 0 or 2 testfn lines, got {n}"
            )))
        }
    };
    let spec = quadrature_from_config(cfg)?;

    let scan = limit_contraction(&roster, &pairs, &phi, &chi, &eps_list, &spec)?;

    let name = &roster.get(field).name;
    let dag = |d: bool| if d { "+" } else { "" };
    let case = format!(
        "{name}{}[{}]~{name}{}[{}]",
        dag(pair.left_dagger),
        pair.left_component,
        dag(pair.right_dagger),
        pair.right_component
    );
    let mut records = vec![EpsRecord {
        case: case.clone(),
        eps: 0.0,
        value_re: scan.i0.value.re,
        value_im: scan.i0.value.im,
        err: scan.i0.err,
    }];
    for row in &scan.table {
        records.push(EpsRecord {
            case: case.clone(),
            eps: row.eps,
            value_re: row.value_re,
            value_im: row.value_im,
            err: row.abs_diff,
        });
    }
    write_jsonl(&mut *sink, &records)?;
    sink.flush()?;

    if scan.massive_inert {
        eprintln!("eps inert: all kernels massive, deformation leaves the energies unchanged");
        return Ok(());
    }
    match scan.slope {
        Some(slope) => {
            eprintln!(
                "fitted slope {slope:.3} over {} eps values (baseline err {:.2e})",
                scan.table.len(),
                scan.i0.err
            );
            if slope < 0.8 {
                return Err(CliError::check(format!(
                    "slope {slope:.3} below the 0.8 convergence floor"
                )));
            }
        }
        None => {
            return Err(CliError::numeric(
                "differences vanished; no slope could be fitted",
            ))
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

fn cmd_split(cfg: &Config, order: usize, symbolic: bool, sink: &mut dyn Write) -> Result<(), CliError> {
    if order < 2 {
        return Err(CliError::usage("the inductive step starts at order 2"));
    }
    if symbolic {
        return cmd_split_symbolic(cfg, order, sink);
    }
    if order > 2 {
        return Err(CliError::usage(format!(
            "order {order} is symbolic only; rerun with --symbolic"
        )));
    }

    let kernels: Vec<ModelKernel> = {
        let names = cfg.get_all("kernel");
        if names.is_empty() {
            vec![
                ModelKernel::PowerSign { power: 3 },
                ModelKernel::InversePower { power: 1 },
                ModelKernel::GaussCos,
            ]
        } else {
            names
                .iter()
                .map(|n| {
                    ModelKernel::parse(n)
                        .ok_or_else(|| CliError::usage(format!("unknown kernel `{n}`")))
                })
                .collect::<Result<_, _>>()?
        }
    };
    let windows: Vec<f64> = {
        let vals = cfg.get_all("window");
        if vals.is_empty() {
            vec![1.0]
        } else {
            vals.iter()
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|r| *r > 0.0)
                        .ok_or_else(|| CliError::usage(format!("bad window radius `{v}`")))
                })
                .collect::<Result<_, _>>()?
        }
    };
    let phi = match cfg.get("testfn") {
        Some(v) => TestFunction::Hermite(testfn_from_str("testfn", v)?),
        None => TestFunction::Hermite(SchwartzTestFn::gaussian(&[0.0], &[1.0])?),
    };
    let opts = SplitOptions {
        depth: cfg.get_u32("split.depth", 50)?,
        panel_points: cfg.get_usize("split.panel_points", 16)?,
        t_max: match cfg.get("split.t_max") {
            Some(_) => Some(cfg.get_f64("split.t_max", 0.0)?),
            None => None,
        },
    };
    let omega_override = match cfg.get("omega") {
        Some(_) => Some(cfg.get_i32("omega", 0)?),
        None => None,
    };

    let mut records = Vec::new();
    let mut summary = String::new();
    for kernel in &kernels {
        let omega = omega_override.unwrap_or_else(|| kernel.singular_order());
        let ambiguity = (omega + 1).max(0);
        writeln!(
            summary,
            "kernel {}: omega {omega}, ambiguity dim {ambiguity}",
            kernel.name()
        )
        .expect("string write");
        for &radius in &windows {
            let window = TaylorWindow::new(radius);
            let value = retarded_pairing(*kernel, &phi, omega, &window, &opts)?;
            records.push(SplitRecord {
                kernel: kernel.name(),
                omega,
                window: radius,
                value_re: value.re,
                value_im: value.im,
            });
        }
    }
    write_jsonl(&mut *sink, &records)?;
    sink.flush()?;
    eprint!("{summary}");
    Ok(())
}

fn cmd_split_symbolic(cfg: &Config, order: usize, sink: &mut dyn Write) -> Result<(), CliError> {
    if order > 10 {
        return Err(CliError::usage("symbolic step supported up to order 10"));
    }
    let fermi = match cfg.get("fermi") {
        Some(v) => parse_f64_list("fermi", v)?
            .into_iter()
            .map(|x| x != 0.0)
            .collect(),
        None => vec![false; order],
    };
    if fermi.len() != order {
        return Err(CliError::usage(format!(
            "fermi flag list has {} entries for order {order}",
            fermi.len()
        )));
    }
    let step = eg_inductive_step(order, &fermi);
    writeln!(sink, "{}", step.render())?;
    sink.flush()?;
    eprintln!(
        "order {order}: {} partitions per side",
        step.retarded.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// axioms
// ---------------------------------------------------------------------------

fn cmd_axioms(cfg: &Config, which: &[String], sink: &mut dyn Write) -> Result<(), CliError> {
    let mut names: Vec<String> = which.to_vec();
    if names.is_empty() {
        names = cfg.get_all("axiom").iter().map(|s| (*s).to_owned()).collect();
    }
    let axioms: Vec<Axiom> = if names.is_empty() {
        Axiom::all().to_vec()
    } else {
        let mut picked = Vec::new();
        for name in &names {
            let axiom = Axiom::parse(name)
                .ok_or_else(|| CliError::usage(format!("unknown axiom `{name}`")))?;
            if !picked.contains(&axiom) {
                picked.push(axiom);
            }
        }
        picked
    };
    let opts = AxiomOptions {
        eps: cfg.get_f64("axiom.eps", 0.05)?,
        time_points: cfg.get_usize("axiom.time_points", 256)?,
    };

    let mut failures = 0usize;
    for axiom in &axioms {
        let reports = check_axiom(*axiom, &opts)?;
        failures += reports.iter().filter(|r| !r.pass).count();
        write_jsonl(&mut *sink, &reports)?;
    }
    sink.flush()?;
    if failures > 0 {
        return Err(CliError::check(format!("{failures} axiom record(s) failed")));
    }
    eprintln!("all axiom records passed");
    Ok(())
}
