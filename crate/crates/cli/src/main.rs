//! `housingforge`: board in, housing STL, bolt plan, rule report out.
//!
//! Exit status: 0 clean, 2 rule errors (artifacts still written),
//! 1 hard failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use housingforge::bolts::{
    parse_calibration, parse_plan, plan_bolts, serialize_plan, verify_plan, BoltPlan, PlanConfig, SpanCalibration,
};
use housingforge::cavity::MaterialProfile;
use housingforge::drc::{assembly_report, error_count, render_text, render_tsv, run_drc, RuleViolation};
use housingforge::housing::{build_housing, HousingConfig};
use housingforge::ingest::{
    default_library, parse_board, parse_library, serialize_library, BoardFormat, IngestError, LibraryError, LibraryFile,
    SyntaxError,
};
use housingforge::mesh::{emit_stl, mesh_diagnostics};
use housingforge::model::BoardDesign;
use housingforge::reuse::{diff_reuse, load_ledger, record_cycle_in_file};

const EXIT_RULE_ERRORS: u8 = 2;

#[derive(Parser)]
#[command(name = "housingforge", version, about = "Solderless PCB housing generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Tsv,
}

#[derive(Args)]
struct LibraryArgs {
    /// Extra package library, overlaid on the built-in set.
    #[arg(long, env = "HOUSINGFORGE_LIBRARY")]
    library: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    /// Board file (`.board` native or `.kicad_pcb`).
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    lib: LibraryArgs,
    /// Span calibration table (`spancal v1`); the default linear model otherwise.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Housing thickness, mm.
    #[arg(long, default_value_t = 3.0, value_parser = parse_thickness)]
    thickness: f64,
    #[arg(long, default_value = "resin", value_parser = parse_profile)]
    profile: MaterialProfile,
    /// Bolt diameter, mm.
    #[arg(long, default_value_t = 1.0)]
    bolt_diameter: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Plan bolts, check rules and write housing, plan, rule and assembly files.
    Generate {
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        ascii_stl: bool,
        /// Rule file format.
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Plan bolt holes and print the plan.
    PlanBolts {
        #[command(flatten)]
        build: BuildArgs,
        /// Write `<name>-plan.txt` here instead of printing.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the rule checks.
    Check {
        #[command(flatten)]
        build: BuildArgs,
        /// Check this plan instead of planning afresh.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Count parts of the old board that the new board can reuse.
    DiffReuse {
        #[arg(long)]
        old: PathBuf,
        #[arg(long)]
        new: PathBuf,
        #[command(flatten)]
        lib: LibraryArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print the effective package library.
    Library {
        #[command(flatten)]
        lib: LibraryArgs,
        /// One line per package instead of the full file.
        #[arg(long)]
        list: bool,
        /// Print a single package.
        #[arg(long, conflicts_with = "list")]
        show: Option<String>,
    },
    /// Housing assembly cycle ledger.
    Cycles {
        #[arg(long)]
        ledger: PathBuf,
        #[command(subcommand)]
        action: CycleAction,
    },
}

#[derive(Subcommand)]
enum CycleAction {
    /// Count one more assembly of a housing.
    Record { housing: String },
    /// List every housing and its count.
    Show,
}

fn parse_thickness(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (1.0..=5.0).contains(&t) {
        Ok(t)
    } else {
        Err(format!("thickness must lie in [1, 5] mm, got {t}"))
    }
}

fn parse_profile(s: &str) -> Result<MaterialProfile, String> {
    s.parse().map_err(|_| format!("unknown profile `{s}` (resin, fdm-pla, cnc-mdf)"))
}

fn located(path: &Path, e: &SyntaxError) -> String {
    format!("{}:{}:{}: {}", path.display(), e.line, e.column, e.message)
}

fn load_library(args: &LibraryArgs) -> Result<LibraryFile> {
    let mut lib = default_library();
    if let Some(path) = &args.library {
        let bytes = fs::read(path).with_context(|| format!("cannot read library {}", path.display()))?;
        let extra = parse_library(&bytes).map_err(|e| match e {
            LibraryError::Syntax(s) => anyhow!(located(path, &s)),
            other => anyhow!("{}: {other}", path.display()),
        })?;
        lib.merge(extra);
    }
    Ok(lib)
}

fn load_board(path: &Path, lib: &LibraryFile) -> Result<BoardDesign> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let format = BoardFormat::from_path(path);
    let mut parsed = parse_board(&bytes, format, lib).map_err(|e| match e {
        IngestError::Syntax(s) => anyhow!(located(path, &s)),
        other => anyhow!("{}: {other}", path.display()),
    })?;
    for w in &parsed.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    // KiCad files carry no board name; artifacts are named after the file.
    if format == BoardFormat::KiCad {
        if let Some(stem) = path.file_stem() {
            parsed.board.name = stem.to_string_lossy().into_owned();
        }
    }
    Ok(parsed.board)
}

struct Job {
    board: BoardDesign,
    cal: SpanCalibration,
    housing: HousingConfig,
    plan_cfg: PlanConfig,
}

impl Job {
    fn load(args: &BuildArgs) -> Result<Job> {
        let lib = load_library(&args.lib)?;
        let board = load_board(&args.input, &lib)?;
        let cal = match &args.calibration {
            Some(path) => {
                let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
                parse_calibration(&bytes).map_err(|e| anyhow!("{}: {e}", path.display()))?
            }
            None => SpanCalibration::default_model(),
        };
        let housing = HousingConfig {
            thickness: args.thickness,
            bolt_diameter: args.bolt_diameter,
            profile: args.profile,
            ..HousingConfig::default()
        };
        housing.validate()?;
        let plan_cfg = PlanConfig { hole_diameter: args.bolt_diameter, ..PlanConfig::default() };
        Ok(Job { board, cal, housing, plan_cfg })
    }

    fn plan(&self) -> Result<BoltPlan> {
        plan_bolts(&self.board, self.housing.thickness, &self.cal, &self.plan_cfg)
            .with_context(|| format!("bolt planning failed for {}", self.board.name))
    }

    fn drc(&self, plan: &BoltPlan) -> Vec<RuleViolation> {
        run_drc(&self.board, plan, &self.housing, &self.cal, &self.plan_cfg)
    }
}

fn render(violations: &[RuleViolation], format: Format) -> String {
    match format {
        Format::Text => render_text(violations),
        Format::Tsv => render_tsv(violations),
    }
}

/// Board name made safe for a file name.
fn stem(board: &BoardDesign) -> String {
    let s: String = board
        .name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect();
    if s.is_empty() { "board".to_string() } else { s }
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn exit_for(violations: &[RuleViolation]) -> ExitCode {
    if error_count(violations) > 0 {
        ExitCode::from(EXIT_RULE_ERRORS)
    } else {
        ExitCode::SUCCESS
    }
}

fn generate(build: &BuildArgs, out_dir: &Path, ascii: bool, format: Format) -> Result<ExitCode> {
    let job = Job::load(build)?;
    let plan = job.plan()?;
    let violations = job.drc(&plan);
    let errors = error_count(&violations);
    let mut report = assembly_report(&job.board, &plan, &job.housing, &job.cal, &violations).render();
    let mesh = match build_housing(&job.board, &plan, &job.housing) {
        Ok(mesh) => {
            report.push_str(&format!("housing mesh: {}\n", mesh_diagnostics(&mesh).summary()));
            Some(mesh)
        }
        Err(e) if errors > 0 => {
            report.push_str(&format!("housing mesh: not generated ({e})\n"));
            None
        }
        Err(e) => bail!("{}: {e}", job.board.name),
    };
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let name = stem(&job.board);
    if let Some(mesh) = &mesh {
        write(out_dir, &format!("{name}-housing.stl"), &emit_stl(mesh, ascii))?;
    }
    write(out_dir, &format!("{name}-plan.txt"), serialize_plan(&plan).as_bytes())?;
    write(out_dir, &format!("{name}-drc.txt"), render(&violations, format).as_bytes())?;
    write(out_dir, &format!("{name}-report.txt"), report.as_bytes())?;
    if errors > 0 {
        eprintln!("{name}: {errors} rule error(s); see {name}-drc.txt");
    }
    Ok(exit_for(&violations))
}

fn plan_bolts_cmd(build: &BuildArgs, out_dir: Option<&Path>) -> Result<ExitCode> {
    let job = Job::load(build)?;
    let plan = job.plan()?;
    let text = serialize_plan(&plan);
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            write(dir, &format!("{}-plan.txt", stem(&job.board)), text.as_bytes())?;
        }
        None => print!("{text}"),
    }
    eprintln!(
        "{} holes ({} shared, {} IC), {} stations, longest span {:.3} mm of {:.3} mm ({})",
        plan.holes.len(),
        plan.shared_hole_count(),
        plan.ic_hole_count(),
        plan.station_count(),
        plan.max_span_used(),
        plan.span_limit,
        job.cal.status()
    );
    let problems = verify_plan(&job.board, &plan, job.housing.thickness, &job.cal, &job.plan_cfg);
    for p in &problems {
        eprintln!("warning: {p}");
    }
    Ok(ExitCode::SUCCESS)
}

fn check(build: &BuildArgs, plan_path: Option<&Path>, format: Format) -> Result<ExitCode> {
    let job = Job::load(build)?;
    let plan = match plan_path {
        Some(path) => {
            let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
            parse_plan(&bytes).map_err(|e| anyhow!(located(path, &e)))?
        }
        None => job.plan()?,
    };
    let violations = job.drc(&plan);
    print!("{}", render(&violations, format));
    Ok(exit_for(&violations))
}

fn diff_reuse_cmd(old: &Path, new: &Path, lib: &LibraryArgs, format: Format) -> Result<ExitCode> {
    let lib = load_library(lib)?;
    let a = load_board(old, &lib)?;
    let b = load_board(new, &lib)?;
    let report = diff_reuse(&a, &b)?;
    match format {
        Format::Text => print!("{}", report.render()),
        Format::Tsv => print!("{}", report.render_tsv()),
    }
    Ok(ExitCode::SUCCESS)
}

fn library_cmd(args: &LibraryArgs, list: bool, show: Option<&str>) -> Result<ExitCode> {
    let lib = load_library(args)?;
    if list {
        for p in lib.packages() {
            println!("{}\t{}\t{} x {} x {}", p.name, p.class.label(), p.body.l, p.body.w, p.body.t);
        }
    } else if let Some(name) = show {
        let pkg = lib.resolve(name).ok_or_else(|| anyhow!("no package or alias named {name}"))?;
        let mut one = LibraryFile::new();
        one.insert(pkg.clone())?;
        print!("{}", serialize_library(&one));
    } else {
        print!("{}", serialize_library(&lib));
    }
    Ok(ExitCode::SUCCESS)
}

fn cycles_cmd(ledger: &Path, action: &CycleAction) -> Result<ExitCode> {
    match action {
        CycleAction::Record { housing } => {
            let (count, warning) = record_cycle_in_file(ledger, housing)?;
            println!("{housing}: {count} cycle(s)");
            if let Some(w) = warning {
                eprintln!("warning: {w}");
            }
        }
        CycleAction::Show => {
            let l = load_ledger(ledger)?;
            for (h, n) in l.entries() {
                let flag = if l.needs_replacement(h) { "  replace" } else { "" };
                println!("{h}\t{n}{flag}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Generate { build, out_dir, ascii_stl, format } => generate(build, out_dir, *ascii_stl, *format),
        Command::PlanBolts { build, out_dir } => plan_bolts_cmd(build, out_dir.as_deref()),
        Command::Check { build, plan, format } => check(build, plan.as_deref(), *format),
        Command::DiffReuse { old, new, lib, format } => diff_reuse_cmd(old, new, lib, *format),
        Command::Library { lib, list, show } => library_cmd(lib, *list, show.as_deref()),
        Command::Cycles { ledger, action } => cycles_cmd(ledger, action),
    }
}

fn main() -> ExitCode {
    // Usage errors are hard failures; clap's own status 2 means rule errors here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
