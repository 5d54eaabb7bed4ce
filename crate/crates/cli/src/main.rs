mod config;

use std::fmt::{self, Write as _};
use std::io::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{Construction, ConstructionArgs, RunArgs, RunConfig};
use haar_core::groups::{Carrier, GroupSpec};
use haar_core::haarize::{haarize_probability, haarize_sigma_finite, HotelShift, Partition};
use haar_core::measure::{IntervalSet, MassClass, MeasureSpec};
use haar_core::registry::{self, parse_carrier, parse_params, CustomTransport, Selector};
use haar_core::transport::TransportResult;
use haar_core::verify::{self, Report, Target};
use haar_core::Error;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, file or selector: exit 2.
    Config(String),
    /// The library rejected the input: exit 2 for parse-level errors, 3
    /// otherwise.
    Core(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Io(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                Error::Syntax { .. }
                | Error::UnknownFunction { .. }
                | Error::UnknownIdentifier { .. }
                | Error::UnboundParameter(_)
                | Error::InvalidDimension(_)
                | Error::InvalidIntervalSet(_)
                | Error::InvalidArgument(_)
                | Error::UnknownSelector(_) => 2,
                _ => 3,
            },
        }
    }
}

#[derive(Parser)]
#[command(name = "haar", version, about = "Transported groups, Haar measures and invariance checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List built-in groups, distributions and checks.
    Catalog {
        #[arg(long)]
        json: bool,
    },
    /// Transport a group along a bijection and check the result.
    Transport {
        #[command(flatten)]
        construction: ConstructionArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Build the group whose Haar measure is a given distribution or σ-finite measure.
    Haarize {
        #[command(flatten)]
        construction: ConstructionArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Mass of an interval set such as `[0,0.5)u[1,2)`.
    Integrate {
        /// Measure selector: `lebesgue`, a group (`velocity:1`) or `dist:<selector>`.
        #[arg(long, conflicts_with = "density")]
        measure: Option<String>,
        /// Density expression in `x`.
        #[arg(long, allow_hyphen_values = true)]
        density: Option<String>,
        #[arg(long)]
        params: Option<String>,
        /// Carrier of `--density` (default: the line).
        #[arg(long)]
        carrier: Option<String>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        json: bool,
        set: String,
    },
    /// Run checks against any construction without the summary.
    Verify {
        #[command(flatten)]
        construction: ConstructionArgs,
        #[command(flatten)]
        run: RunArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Returns whether every check passed.
fn run(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Catalog { json } => {
            emit(&catalog(json));
            Ok(true)
        }
        Command::Transport { construction, run } => {
            let cfg = RunConfig::resolve(&run, construction)?;
            let t = build_transport(&cfg.construction)?;
            if !cfg.json {
                print_fields(&transport_summary(&t));
            }
            execute(&Target::from_transport(&t), &cfg)
        }
        Command::Haarize { construction, run } => {
            let cfg = RunConfig::resolve(&run, construction)?;
            let (target, summary) = build_haarized(&cfg.construction)?;
            if !cfg.json {
                print_fields(&summary);
            }
            execute(&target, &cfg)
        }
        Command::Verify { construction, run } => {
            let cfg = RunConfig::resolve(&run, construction)?;
            let c = &cfg.construction;
            let target = if c.dist.is_some() || c.sigma_finite.is_some() {
                build_haarized(c)?.0
            } else {
                Target::from_transport(&build_transport(c)?)
            };
            execute(&target, &cfg)
        }
        Command::Integrate { measure, density, params, carrier, tol, json, set } => {
            let m = match (measure, density) {
                (Some(sel), None) => registry::build_measure(&sel)?,
                (None, Some(expr)) => {
                    let carrier = carrier.as_deref().map(parse_carrier).transpose()?.unwrap_or(Carrier::FullLine);
                    let params = params.as_deref().map(parse_params).transpose()?.unwrap_or_default();
                    MeasureSpec::from_expr(&expr, params, carrier, MassClass::SigmaFiniteNonfinite)?
                }
                _ => return Err(CliError::Config("integrate needs --measure or --density".into())),
            };
            if !(tol > 0.0) {
                return Err(CliError::Config("tol must be positive".into()));
            }
            let s: IntervalSet = set.parse()?;
            let mass = m.integrate(&s, tol)?;
            if json {
                #[derive(Serialize)]
                struct Mass<'a> {
                    measure: &'a str,
                    set: &'a IntervalSet,
                    mass: f64,
                }
                emit(&(serde_json::to_string(&Mass { measure: &m.label, set: &s, mass }).expect("serializable") + "\n"));
            } else {
                emit(&format!("{mass}\n"));
            }
            Ok(true)
        }
    }
}

fn catalog(json: bool) -> String {
    let mut out = String::new();
    #[derive(Serialize)]
    struct Row<'a> {
        name: &'a str,
        #[serde(flatten)]
        info: registry::EntryInfo,
    }
    let mut rows: Vec<(&str, registry::EntryInfo)> = Vec::new();
    let groups = registry::groups();
    let dists = registry::distributions();
    rows.extend(groups.iter().map(|g| (g.name(), g.info())));
    rows.extend(dists.iter().map(|d| (d.name(), d.info())));
    if json {
        for (name, info) in rows {
            let _ = writeln!(out, "{}", serde_json::to_string(&Row { name, info }).expect("serializable"));
        }
        return out;
    }
    let mut kind = "";
    for (_, info) in rows {
        if info.kind != kind {
            kind = info.kind;
            let _ = writeln!(out, "{}s:", kind);
        }
        let _ = writeln!(out, "  {:<22} {}", info.signature, info.summary);
        for (k, v) in &info.formulas {
            let _ = writeln!(out, "  {:<22}   {k}: {v}", "");
        }
    }
    let _ = writeln!(out, "custom transports:");
    let _ = writeln!(out, "  {:<22} {}", "custom", "--forward <expr> --inverse <expr> [--base real-line|circle] --codomain <carrier>");
    let _ = writeln!(out, "checks:");
    for c in verify::registry() {
        let _ = writeln!(out, "  {:<22} {}", c.name(), c.summary());
    }
    out
}

fn build_transport(c: &Construction) -> Result<TransportResult, CliError> {
    match (&c.builtin, &c.forward, &c.inverse) {
        (Some(sel), None, None) => Ok(registry::build_group(sel)?),
        (None, Some(forward), Some(inverse)) => {
            let codomain = c
                .codomain
                .as_deref()
                .map(parse_carrier)
                .transpose()?
                .ok_or_else(|| CliError::Config("a custom transport needs --codomain".into()))?;
            let custom = CustomTransport {
                base: c.base.clone(),
                forward: forward.clone(),
                inverse: inverse.clone(),
                params: c.params.clone(),
                domain: c.domain.as_deref().map(parse_carrier).transpose()?,
                codomain,
                decreasing: c.decreasing,
            };
            Ok(custom.build()?)
        }
        (Some(_), _, _) => Err(CliError::Config("--builtin cannot be combined with --forward/--inverse".into())),
        _ => Err(CliError::Config("give --builtin <selector>, or both --forward and --inverse".into())),
    }
}

fn parse_escape(text: &str) -> Result<HotelShift, CliError> {
    let sel: Selector = text.parse()?;
    match (sel.name.as_str(), sel.args.as_slice()) {
        ("arithmetic", &[origin, step]) => Ok(HotelShift::Arithmetic { origin, step }),
        ("geometric", &[lo, hi]) => Ok(HotelShift::Geometric { lo, hi }),
        _ => Err(CliError::Config(format!("cannot read escape sequence `{text}`"))),
    }
}

fn build_haarized(c: &Construction) -> Result<(Target, Vec<(String, String)>), CliError> {
    match (&c.dist, &c.sigma_finite) {
        (Some(sel), None) => {
            let d = registry::build_distribution(sel)?;
            let shift = c.escape.as_deref().map(parse_escape).transpose()?;
            let h = haarize_probability(d, shift)?;
            let escape = match h.shift() {
                Some(s) => serde_json::to_string(&s).expect("serializable"),
                None => "none (the cdf reaches 0 on the support)".into(),
            };
            let g = GroupSpec::Scalar(Arc::new(h.clone())).as_group();
            let mut fields = group_fields(&g);
            fields.push(("distribution".into(), h.distribution().name()));
            fields.push(("escape".into(), escape));
            fields.push(("haar measure".into(), h.measure().label));
            Ok((Target::haarized(&h), fields))
        }
        (None, Some(kind)) => {
            let m = match kind.as_str() {
                "density" => {
                    let expr = c
                        .density
                        .as_deref()
                        .ok_or_else(|| CliError::Config("--sigma-finite density needs --density".into()))?;
                    let carrier = c.carrier.as_deref().map(parse_carrier).transpose()?.unwrap_or(Carrier::FullLine);
                    MeasureSpec::from_expr(expr, c.params.clone(), carrier, MassClass::SigmaFiniteNonfinite)?
                }
                sel => registry::build_measure(sel)?,
            };
            let h = haarize_sigma_finite(&m, Partition::Unit, Partition::Unit)?;
            let g = GroupSpec::Scalar(h.group.clone()).as_group();
            let mut fields = group_fields(&g);
            fields.push(("input measure".into(), m.label.clone()));
            fields.push(("truncation".into(), format!("K = {} (tail ≤ {:e})", h.truncation, h.tail_bound)));
            fields.push((
                "equivalence".into(),
                format!("{}/{} null-set agreements", h.equivalence.agreements, h.equivalence.samples),
            ));
            let unit = IntervalSet::interval(0.0, 1.0)?;
            fields.push(("μ*([0,1))".into(), format!("{}", h.group.mu_star(&unit)?)));
            Ok((Target::sigma_finite(&h), fields))
        }
        (Some(_), Some(_)) => Err(CliError::Config("--dist and --sigma-finite are exclusive".into())),
        (None, None) => Err(CliError::Config("give --dist <selector> or --sigma-finite <measure>".into())),
    }
}

fn group_fields(g: &Arc<dyn haar_core::groups::Group>) -> Vec<(String, String)> {
    let t = g.tags();
    vec![
        ("group".into(), g.name()),
        ("carrier".into(), g.carrier().to_string()),
        ("identity".into(), format!("{:?}", g.identity())),
        (
            "tags".into(),
            format!(
                "abelian={} compactness={:?} dense-in-itself={} invariant-metric={}",
                t.abelian, t.compactness, t.dense_in_itself, t.invariant_metric
            ),
        ),
    ]
}

fn transport_summary(t: &TransportResult) -> Vec<(String, String)> {
    let mut fields = group_fields(&t.group.as_group());
    fields.push(("provenance".into(), t.provenance.clone()));
    fields.push(("witness".into(), serde_json::to_string(&t.witness).expect("serializable")));
    fields.push(("haar measure".into(), t.measure.label.clone()));
    fields
}

fn print_fields(fields: &[(String, String)]) {
    let width = fields.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in fields {
        let _ = writeln!(out, "{k}{}  {v}", " ".repeat(width - k.chars().count()));
    }
    out.push('\n');
    emit(&out);
}

/// Write to stdout, treating a closed pipe as success.
fn emit(text: &str) {
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: {e}");
        }
    }
}

fn json_lines(reports: &[Report]) -> String {
    reports.iter().map(|r| serde_json::to_string(r).expect("serializable") + "\n").collect()
}

fn write_report(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn execute(target: &Target, cfg: &RunConfig) -> Result<bool, CliError> {
    let names = cfg.checks.clone().unwrap_or_else(|| verify::applicable(target));
    for n in &names {
        let check = verify::lookup(n)?;
        if !check.applies(target) {
            return Err(CliError::Config(format!("check {n} does not apply to {}", target.label)));
        }
    }
    let reports = verify::run_checks(target, &names, &cfg.check, cfg.seed)?;
    let lines = json_lines(&reports);
    if cfg.json {
        emit(&lines);
    } else {
        let mut out = verify::table(&reports);
        for r in reports.iter().filter(|r| !r.witnesses.is_empty()) {
            let _ = writeln!(out, "\n{} witnesses:", r.check);
            for w in &r.witnesses {
                let _ = writeln!(out, "  #{} residual {:.3e}: {}", w.index, w.residual, w.detail);
            }
        }
        emit(&out);
    }
    if let Some(path) = &cfg.report {
        write_report(path, &lines)?;
    }
    Ok(reports.iter().all(Report::passed))
}
