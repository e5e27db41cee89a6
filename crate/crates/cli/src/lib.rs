//! Command-line front end: argument parsing, command dispatch and file output.
//!
//! Every command returns an exit code: 0 when all checks pass, 1 when a
//! mathematical invariant fails, 2 for argument errors and 3 when a resource
//! cap is hit. Output files are written to a temporary name and renamed into
//! place, so a reader never sees a partial file.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hurwitz::asym::{asym_point, Extended};
use hurwitz::exact::{format_float, CSV_DIGITS};
use hurwitz::harness::{self, AssumptionReport, HarnessConfig};
use hurwitz::omega::{log_omega, write_omega_csv};
use hurwitz::oracle::{self, Normalization, MAX_FACTORS, MAX_SYMBOLS};
use hurwitz::{build_table_with, BoundaryNormalization, Error, ExactTable, FillStrategy, OmegaConfig, PrecisionConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVARIANT: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CAP: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum BoundaryConstant {
    /// The stated `4^n n^{-3/2} / sqrt(2 pi)` boundary row.
    #[default]
    #[value(name = "paper")]
    Stated,
    /// Boundary row rescaled by the measured `lim Q(n, 0)`.
    Calibrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum NormalizationArg {
    #[default]
    FactorialDMinusOne,
    /// Divides by `d!`; a negative control that must fail.
    FactorialD,
}

impl From<NormalizationArg> for Normalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::FactorialDMinusOne => Normalization::FactorialDMinusOne,
            NormalizationArg::FactorialD => Normalization::FactorialD,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hurwitz",
    version,
    about = "Exact tables and asymptotic checks for one-part monotone Hurwitz numbers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Largest n in the exact table.
    #[arg(long, global = true, default_value_t = 1000)]
    n_max: usize,
    /// Largest g in the exact table.
    #[arg(long, global = true, default_value_t = 1000)]
    g_max: usize,
    /// Diagonal slope g/n; repeat to give several.
    #[arg(long = "theta", global = true)]
    theta: Vec<f64>,
    #[arg(long, global = true, default_value_t = 128)]
    precision_bits: u32,
    #[arg(long, global = true, value_enum, default_value_t = BoundaryConstant::Stated)]
    boundary_constant: BoundaryConstant,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Largest number of table cells any single build may allocate.
    #[arg(long, global = true, default_value_t = 4_000_000)]
    cell_cap: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the exact table and write table.csv.
    Table,
    /// Compare the enumeration oracle with the recurrence.
    OracleCheck {
        /// Largest symbol count d = n + 1.
        #[arg(long, default_value_t = 6)]
        max_d: usize,
        /// Largest factor count k = n + 2g.
        #[arg(long, default_value_t = 11)]
        max_k: usize,
        #[arg(long, value_enum, default_value_t = NormalizationArg::FactorialDMinusOne)]
        normalization: NormalizationArg,
    },
    /// Diagonal scans and the assumption report.
    Converge,
    /// Residuals of the analytic identities.
    OdeCheck,
    /// Run every check and write one consolidated report.
    Report,
    /// Tabulate lambda, f, j and their derivatives.
    DumpFunctions,
    /// Tabulate ln Omega(n, g) over the table grid.
    Omega,
}

/// Validated run configuration shared by all commands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_max: usize,
    pub g_max: usize,
    pub theta_list: Vec<f64>,
    pub mantissa_bits: u32,
    pub boundary_constant: BoundaryConstant,
    pub out_dir: PathBuf,
    pub cell_cap: u64,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_max: 1000,
            g_max: 1000,
            theta_list: Vec::new(),
            mantissa_bits: 128,
            boundary_constant: BoundaryConstant::Stated,
            out_dir: PathBuf::from("out"),
            cell_cap: 4_000_000,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.precision().validate().map_err(|e| e.to_string())?;
        if let Some(t) = self.theta_list.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(format!("--theta must be finite and >= 0, got {t}"));
        }
        if self.threads == Some(0) {
            return Err("--threads must be positive".into());
        }
        if self.cell_cap == 0 {
            return Err("--cell-cap must be positive".into());
        }
        Ok(())
    }

    pub fn precision(&self) -> PrecisionConfig {
        PrecisionConfig::with_bits(self.mantissa_bits)
    }

    pub fn omega(&self) -> OmegaConfig {
        OmegaConfig::new(self.precision())
    }

    /// Default measurement plan, with `--theta` replacing the residual diagonals.
    pub fn harness(&self) -> HarnessConfig {
        let mut plan = HarnessConfig {
            omega: self.omega(),
            cell_cap: self.cell_cap,
            ..HarnessConfig::default()
        };
        if !self.theta_list.is_empty() {
            plan.residual_thetas = self.theta_list.clone();
        }
        plan
    }
}

impl From<CommonArgs> for RunConfig {
    fn from(a: CommonArgs) -> Self {
        RunConfig {
            n_max: a.n_max,
            g_max: a.g_max,
            theta_list: a.theta,
            mantissa_bits: a.precision_bits,
            boundary_constant: a.boundary_constant,
            out_dir: a.out,
            cell_cap: a.cell_cap,
            threads: a.threads,
        }
    }
}

/// Outcome of a command before it is turned into an exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Cap(String),
    Invariant(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Cap(_) => EXIT_CAP,
            Failure::Invariant(_) | Failure::Io(_) => EXIT_INVARIANT,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "argument error: {m}"),
            Failure::Cap(m) => write!(f, "resource cap: {m}"),
            Failure::Invariant(m) => write!(f, "check failed: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::CapExceeded { .. } => Failure::Cap(e.to_string()),
            Error::GuardExceeded { .. } | Error::Config(_) => Failure::Usage(e.to_string()),
            Error::Io(_) | Error::Csv(_) => Failure::Io(e.to_string()),
            _ => Failure::Invariant(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

/// Writes `path` through a temporary sibling and a rename.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> Result<(), Failure>,
{
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        fill(&mut w)?;
        w.into_inner().map_err(|e| Failure::Io(e.to_string()))?.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Diagnostics go to stderr, summaries to stdout.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = RunConfig::from(cli.common);
    if let Err(m) = cfg.validate() {
        eprintln!("argument error: {m}");
        return EXIT_USAGE;
    }
    let outcome = match cfg.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, &cfg)),
            Err(e) => Err(Failure::Usage(e.to_string())),
        },
        None => dispatch(&cli.command, &cfg),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> CmdResult {
    match cmd {
        Command::Table => cmd_table(cfg).map(|_| ()),
        Command::OracleCheck {
            max_d,
            max_k,
            normalization,
        } => cmd_oracle_check(cfg, *max_d, *max_k, (*normalization).into()).and_then(into_verdict),
        Command::Converge => cmd_converge(cfg).and_then(into_verdict),
        Command::OdeCheck => cmd_ode_check(cfg).and_then(into_verdict),
        Command::Report => cmd_report(cfg),
        Command::DumpFunctions => cmd_dump_functions(cfg),
        Command::Omega => cmd_omega(cfg),
    }
}

type SectionRun<'a> = Box<dyn Fn() -> Result<Section, Failure> + 'a>;

/// Lines of a section plus whether every check in it passed.
#[derive(Debug, Clone, Default)]
pub struct Section {
    pub title: String,
    pub lines: Vec<String>,
    pub pass: bool,
}

impl Section {
    fn render(&self) -> String {
        let mut s = format!("== {} [{}] ==\n", self.title, if self.pass { "PASS" } else { "FAIL" });
        for l in &self.lines {
            s.push_str(l);
            s.push('\n');
        }
        s
    }
}

fn into_verdict(section: Section) -> CmdResult {
    print!("{}", section.render());
    if section.pass {
        Ok(())
    } else {
        Err(Failure::Invariant(format!("{} reported failures", section.title)))
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Builds the table over `[0, n_max] x [0, g_max]` and writes `table.csv`.
pub fn cmd_table(cfg: &RunConfig) -> Result<ExactTable, Failure> {
    let table = build_table_with(cfg.n_max, cfg.g_max, cfg.cell_cap, FillStrategy::AntiDiagonal)?;
    let path = cfg.out_dir.join("table.csv");
    write_atomic(&path, |w| Ok(table.write_csv(w)?))?;
    println!("wrote {} ({} cells)", path.display(), (cfg.n_max + 1) * (cfg.g_max + 1));
    Ok(table)
}

/// Compares `oracle_e` with the recurrence for `d <= max_d`, `k <= max_k`
/// and writes `oracle.csv`.
pub fn cmd_oracle_check(cfg: &RunConfig, max_d: usize, max_k: usize, norm: Normalization) -> Result<Section, Failure> {
    if max_d > MAX_SYMBOLS || max_k > MAX_FACTORS || max_d < 2 {
        return Err(Failure::Usage(format!(
            "oracle range d in [2, {MAX_SYMBOLS}], k <= {MAX_FACTORS}; got max_d={max_d}, max_k={max_k}"
        )));
    }
    let n_max = max_d - 1;
    let g_max = max_k.saturating_sub(1) / 2;
    let table = build_table_with(n_max, g_max, cfg.cell_cap, FillStrategy::Sequential)?;
    let mut counts = Vec::new();
    let mut mismatches = Vec::new();
    for d in 2..=max_d {
        let n = d - 1;
        let mut g = 0;
        while n + 2 * g <= max_k {
            let c = oracle::count_monotone_long_cycle(d, n + 2 * g)?;
            let exact = table.get(n, g).expect("inside the oracle table");
            if &c.normalized(norm) != exact {
                mismatches.push(format!(
                    "(n={n}, g={g}): oracle {} vs table {exact}",
                    c.normalized(norm)
                ));
            }
            counts.push(c);
            g += 1;
        }
    }
    let path = cfg.out_dir.join("oracle.csv");
    write_atomic(&path, |w| Ok(oracle::write_counts_csv(&counts, norm, w)?))?;
    let mut lines = vec![format!("compared {} cells, d <= {max_d}, k <= {max_k}", counts.len())];
    lines.extend(mismatches.iter().take(20).cloned());
    Ok(Section {
        title: "oracle-check".into(),
        pass: mismatches.is_empty(),
        lines,
    })
}

fn boundary_of(cfg: &RunConfig) -> BoundaryConstant {
    cfg.boundary_constant
}

/// Runs the assumption report (and its calibrated rerun when requested),
/// writing one scan CSV per residual diagonal and `converge.txt`.
pub fn cmd_converge(cfg: &RunConfig) -> Result<Section, Failure> {
    let plan = cfg.harness();
    let reports: Vec<AssumptionReport> = match boundary_of(cfg) {
        BoundaryConstant::Stated => vec![harness::assumption_report(&plan)?],
        BoundaryConstant::Calibrated => {
            let (p, c) = harness::calibrated_report(&plan)?;
            vec![p, c]
        }
    };
    let primary = reports.last().expect("at least one report");
    for (theta, records, _) in &primary.residual_scans {
        let path = cfg.out_dir.join(format!("scan_theta_{theta}.csv"));
        write_atomic(&path, |w| Ok(harness::write_records_csv(records, w)?))?;
    }
    let text: String = reports.iter().map(|r| r.to_text() + "\n").collect();
    write_text(&cfg.out_dir.join("converge.txt"), &text)?;
    let mut lines = Vec::new();
    for r in &reports {
        for c in r.checks() {
            lines.push(format!(
                "[{}] ({}) {}: {}",
                verdict(c.pass),
                r.boundary_label,
                c.name,
                c.detail
            ));
        }
    }
    for (k, v) in primary.key_values() {
        lines.push(format!("{k}={v}"));
    }
    lines.push(format!(
        "measured kappa0 = {:.3}; candidates 1 and sqrt(2); data selects {}",
        reports[0].boundary.kappa0,
        reports[0].boundary.selected_label()
    ));
    Ok(Section {
        title: "converge".into(),
        pass: reports.iter().all(|r| r.all_pass()),
        lines,
    })
}

/// `theta` grid for the identity residuals.
pub fn ode_theta_grid() -> Vec<f64> {
    harness::log_grid(1e-4, 50.0, 200)
}

/// `lambda` grid for the `theta`-ODE check.
pub fn ode_lambda_grid() -> Vec<f64> {
    (0..50).map(|i| 0.01 + 0.23 * i as f64 / 49.0).collect()
}

/// `lambda` grid for the round trip.
pub fn round_trip_grid() -> Vec<f64> {
    harness::log_grid(1e-6, 0.25 - 1e-6, 200)
}

pub const IDENTITY_TOL: f64 = 1e-25;
pub const J_EQUATION_TOL: f64 = 1e-20;
pub const FD_TOL: f64 = 1e-10;

/// Identity residuals, round trip, monotonicity, derivative decay and the
/// constants at the origin. Writes `ode_theta.csv` and `ode_lambda.csv`.
pub fn cmd_ode_check(cfg: &RunConfig) -> Result<Section, Failure> {
    let pc = cfg.precision();
    let scan = harness::ode_residual_scan(&ode_theta_grid(), &ode_lambda_grid(), &pc)?;
    write_atomic(&cfg.out_dir.join("ode_theta.csv"), |w| Ok(scan.write_theta_csv(w)?))?;
    write_atomic(&cfg.out_dir.join("ode_lambda.csv"), |w| Ok(scan.write_lambda_csv(w)?))?;

    let rt = harness::round_trip_error(&round_trip_grid(), &pc)?;
    let rt_ok = rt <= pc.tolerance();
    let mono = harness::theta_strictly_decreasing(&round_trip_grid(), &pc)?;
    let decay = harness::decay_check(5.0, 40.0, 1.5, 36, &pc)?;
    let constants = harness::origin_constants(&pc)?;

    let mut lines = Vec::new();
    let mut pass = true;
    let mut push = |ok: bool, line: String| {
        pass &= ok;
        lines.push(format!("[{}] {line}", verdict(ok)));
    };
    push(
        scan.max_identity <= IDENTITY_TOL,
        format!("core identity max {:.3e} <= {IDENTITY_TOL:e}", scan.max_identity),
    );
    push(
        scan.max_j <= J_EQUATION_TOL,
        format!("j equation max {:.3e} <= {J_EQUATION_TOL:e}", scan.max_j),
    );
    push(
        scan.max_f_identity <= J_EQUATION_TOL,
        format!("theta f'' - 2 - lambda'/lambda max {:.3e}", scan.max_f_identity),
    );
    push(
        scan.max_lambda_fd <= FD_TOL,
        format!("lambda' finite difference max {:.3e} <= {FD_TOL:e}", scan.max_lambda_fd),
    );
    push(
        scan.max_theta_fd <= FD_TOL,
        format!(
            "dtheta/dlambda finite difference max {:.3e} <= {FD_TOL:e}",
            scan.max_theta_fd
        ),
    );
    push(
        rt_ok,
        format!("round trip max {:.3e} <= {:.3e}", rt.to_f64(), pc.tolerance().to_f64()),
    );
    push(mono, "theta(lambda) strictly decreasing".into());
    push(
        decay.pass(),
        format!("|f''|, |j'| <= C exp(-{} theta) on [5, 40]", decay.rate),
    );
    for c in &constants {
        push(
            c.pass(),
            format!(
                "{} = {:.20e} (target {:.20e}, error {:.3e})",
                c.name, c.value, c.target, c.error
            ),
        );
    }
    Ok(Section {
        title: "ode-check".into(),
        pass,
        lines,
    })
}

/// Runs table, oracle-check, ode-check and converge, writing `report.txt`.
pub fn cmd_report(cfg: &RunConfig) -> CmdResult {
    let mut sections = Vec::new();
    let mut worst: Option<Failure> = None;
    let mut note = |f: Failure| {
        let replace = match &worst {
            None => true,
            Some(w) => f.exit_code() > w.exit_code(),
        };
        if replace {
            worst = Some(f);
        }
    };

    match cmd_table(cfg) {
        Ok(t) => {
            let odd = t.non_integral_cells();
            sections.push(Section {
                title: "table".into(),
                pass: true,
                lines: vec![
                    format!("n_max={} g_max={}", cfg.n_max, cfg.g_max),
                    format!("non-integral cells: {}", odd.len()),
                ],
            });
        }
        Err(f) => {
            sections.push(Section {
                title: "table".into(),
                pass: false,
                lines: vec![f.to_string()],
            });
            note(f);
        }
    }
    let runs: [(&str, SectionRun); 3] = [
        (
            "oracle-check",
            Box::new(|| cmd_oracle_check(cfg, 6, 11, Normalization::FactorialDMinusOne)),
        ),
        ("ode-check", Box::new(|| cmd_ode_check(cfg))),
        ("converge", Box::new(|| cmd_converge(cfg))),
    ];
    for (title, run) in runs {
        match run() {
            Ok(s) => {
                if !s.pass {
                    note(Failure::Invariant(format!("{title} reported failures")));
                }
                sections.push(s);
            }
            Err(f) => {
                sections.push(Section {
                    title: title.into(),
                    pass: false,
                    lines: vec![f.to_string()],
                });
                note(f);
            }
        }
    }

    let mut text = String::new();
    for s in &sections {
        let _ = writeln!(text, "{}", s.render());
    }
    write_text(&cfg.out_dir.join("report.txt"), &text)?;
    print!("{text}");
    match worst {
        None => Ok(()),
        Some(f) => Err(f),
    }
}

fn opt_csv(v: Option<&hurwitz::rug::Float>) -> String {
    v.map(|x| format_float(x, CSV_DIGITS)).unwrap_or_default()
}

/// Writes `functions.csv` over `--theta` values, or a default grid.
pub fn cmd_dump_functions(cfg: &RunConfig) -> CmdResult {
    let pc = cfg.precision();
    let thetas = if cfg.theta_list.is_empty() {
        std::iter::once(0.0).chain(ode_theta_grid()).collect()
    } else {
        cfg.theta_list.clone()
    };
    use rayon::prelude::*;
    let rows: Vec<[String; 8]> = thetas
        .par_iter()
        .map(|&t| -> Result<[String; 8], Failure> {
            let p = asym_point(&pc.float(t), &pc)?;
            let f_prime = match &p.f_prime {
                Extended::Finite(x) => format_float(x, CSV_DIGITS),
                Extended::PosInfinity => "inf".into(),
            };
            Ok([
                format_float(&p.theta, CSV_DIGITS),
                format_float(&p.lambda, CSV_DIGITS),
                format_float(&p.f, CSV_DIGITS),
                opt_csv(p.j.as_ref()),
                f_prime,
                opt_csv(p.f_double_prime.as_ref()),
                opt_csv(p.j_prime.as_ref()),
                format_float(&p.lambda_prime, CSV_DIGITS),
            ])
        })
        .collect::<Result<_, _>>()?;
    let path = cfg.out_dir.join("functions.csv");
    write_atomic(&path, |w| {
        writeln!(w, "theta,lambda,f,j,f_prime,f_double_prime,j_prime,lambda_prime")?;
        for r in &rows {
            writeln!(w, "{}", r.join(","))?;
        }
        Ok(())
    })?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}

/// Writes `omega.csv` for `1 <= n <= n_max`, `0 <= g <= g_max`.
pub fn cmd_omega(cfg: &RunConfig) -> CmdResult {
    let cells = cfg.n_max as u128 * (cfg.g_max as u128 + 1);
    if cells > cfg.cell_cap as u128 {
        return Err(Error::CapExceeded {
            cells,
            cap: cfg.cell_cap,
        }
        .into());
    }
    let oc = match cfg.boundary_constant {
        BoundaryConstant::Stated => cfg.omega(),
        BoundaryConstant::Calibrated => {
            let plan = cfg.harness();
            let n_b = *plan.boundary_sizes.iter().max().unwrap_or(&0);
            let table = build_table_with(n_b, 0, cfg.cell_cap, FillStrategy::Sequential)?;
            let k = harness::boundary_study(&plan.boundary_sizes, &table, &plan.omega)?.kappa0;
            let wp = cfg.precision().working_bits();
            cfg.omega()
                .with_boundary(BoundaryNormalization::Scaled(hurwitz::rug::Float::with_val(wp, k)))
        }
    };
    use rayon::prelude::*;
    let rows = (1..=cfg.n_max)
        .into_par_iter()
        .flat_map_iter(|n| (0..=cfg.g_max).map(move |g| (n, g)))
        .map(|(n, g)| log_omega(n, g, &oc))
        .collect::<Result<Vec<_>, _>>()?;
    let path = cfg.out_dir.join("omega.csv");
    write_atomic(&path, |w| Ok(write_omega_csv(&rows, w)?))?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}
