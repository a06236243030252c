use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use endowlab::endowment::{
    collect_antichains, verify_full_endowment_clause3, verify_weak_endowment, AntichainSource, DowFamily,
    EndowmentFamily, SingletonFamily, WholeAntichainFamily,
};
use endowlab::generate::generate_scenario;
use endowlab::instance::{family_labels, name_payload, ExplicitPoset, InstanceKind, PosetPayload};
use endowlab::names::{approximate, check_lemma_approx, derive_point_names, refine_name, validate_cover_name};
use endowlab::selftest::run_selftest;
use endowlab::{
    dow_construct, run_preservation, verify_certificate, Antichain, Bounds, CohenPoset, Error, Forcing, InstanceFile,
    PosetSpec, Scenario, ScenarioPayload, SelectionMode, Verdict,
};

const EXIT_OK: u8 = 0;
const EXIT_SCENARIO: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_RESOURCE: u8 = 70;

#[derive(Parser)]
#[command(name = "endowlab", version, about = "Finite laboratory for weakly endowed forcing and selection principles")]
struct Cli {
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for parallel verification (output order does not depend on it).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check weak-endowment clauses (1), (2), (3') on maximal antichains.
    EndowVerify(EndowVerifyArgs),
    /// Trace the Cohen endowment construction on one maximal antichain.
    Dow(DowArgs),
    /// Build the level-n approximation of one cover name and check it.
    Approx(ApproxArgs),
    /// Refine one cover name along a ground family and certify the result.
    Refine(RefineArgs),
    /// Run a preservation scenario and write its certificate.
    Preserve(PreserveArgs),
    /// Replay a stored certificate.
    Verify(VerifyArgs),
    /// Generate a seeded scenario file.
    Gen(GenArgs),
    /// Run the built-in sweeps.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyChoice {
    /// Dow for Cohen posets, measure extraction for measure algebras, whole antichains otherwise.
    Default,
    /// The whole antichain.
    Whole,
    /// A single member of the antichain (fails clause (3') on purpose).
    Adversarial,
}

#[derive(Args)]
struct EndowVerifyArgs {
    /// `cohen:D=n`, `measure:k=n`, or a poset instance file.
    poset: String,
    #[arg(long)]
    n: usize,
    /// Enumerate every maximal antichain.
    #[arg(long, conflicts_with = "seeded")]
    exhaustive: bool,
    /// Draw this many seeded random maximal antichains.
    #[arg(long)]
    seeded: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FamilyChoice::Default)]
    family: FamilyChoice,
    /// Also check the full clause (3) within the configured budget.
    #[arg(long)]
    clause3: bool,
}

#[derive(Args)]
struct DowArgs {
    /// `cohen:D=n`.
    poset: String,
    #[arg(long)]
    n: usize,
    /// Members of the maximal antichain, e.g. `0:0 0:1`.
    #[arg(required = true)]
    members: Vec<String>,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    level: usize,
    /// Which cover name to approximate (defaults to the one at `level`).
    #[arg(long)]
    name: Option<usize>,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    level: usize,
    #[arg(long)]
    name: Option<usize>,
    /// Ground family as JSON, e.g. `[["x"],["x","y"]]`.
    #[arg(long)]
    family: String,
}

#[derive(Args)]
struct PreserveArgs {
    #[arg(long, value_parser = parse_property)]
    property: Option<SelectionMode>,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    cert: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    cert: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = parse_property, default_value = "rothberger")]
    property: SelectionMode,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundsPreset {
    Default,
    Large,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, value_enum, default_value_t = BoundsPreset::Default)]
    bounds: BoundsPreset,
}

fn parse_property(s: &str) -> Result<SelectionMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// What a command produced: a JSON document, its text rendering, and an exit code.
struct Outcome {
    json: Value,
    text: String,
    code: u8,
}

enum Failure {
    Usage(String),
    Lab(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lab(e)
    }
}

type CmdResult = Result<Outcome, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        // Only fails if a global pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    let result = Bounds::from_env().map_err(Failure::from).and_then(|bounds| run(&cli.command, &bounds));
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = if cli.json {
                writeln!(stdout, "{}", serde_json::to_string_pretty(&out.json).expect("values serialize"))
            } else {
                write!(stdout, "{}", out.text)
            };
            ExitCode::from(out.code)
        }
        Err(failure) => {
            let (code, kind, message) = match failure {
                Failure::Usage(m) => (EXIT_USAGE, "usage", m),
                Failure::Lab(e) => {
                    let (code, kind) = classify(&e);
                    (code, kind, e.to_string())
                }
            };
            if cli.json {
                let _ = writeln!(std::io::stdout(), "{}", json!({ "error": kind, "message": message, "exit_code": code }));
            } else {
                eprintln!("endowlab: {message}");
            }
            ExitCode::from(code)
        }
    }
}

fn classify(e: &Error) -> (u8, &'static str) {
    match e {
        Error::Scenario(_) => (EXIT_SCENARIO, "scenario"),
        Error::Resource(_) | Error::Budget { .. } => (EXIT_RESOURCE, "resource"),
        Error::Input(_) | Error::Precondition(_) | Error::Json(_) | Error::Io(_) => (EXIT_DATA, "data"),
    }
}

fn run(command: &Command, bounds: &Bounds) -> CmdResult {
    match command {
        Command::EndowVerify(a) => endow_verify(a, bounds),
        Command::Dow(a) => dow(a, bounds),
        Command::Approx(a) => approx(a, bounds),
        Command::Refine(a) => refine(a, bounds),
        Command::Preserve(a) => preserve(a, bounds),
        Command::Verify(a) => verify(a, bounds),
        Command::Gen(a) => gen(a, bounds),
        Command::Selftest(a) => selftest(a, bounds),
    }
}

/// A poset argument is a spec string, or else a path to an instance file.
fn load_forcing(arg: &str, bounds: &Bounds) -> Result<Forcing, Failure> {
    if arg.starts_with("cohen:") || arg.starts_with("measure:") {
        let spec: PosetSpec = arg.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
        return Ok(Forcing::from_spec(spec, bounds)?);
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(Failure::Usage(format!("`{arg}` is neither a poset spec nor a file")));
    }
    let file = InstanceFile::read(path)?;
    let explicit: ExplicitPoset = file.payload(InstanceKind::Poset)?;
    Ok(Forcing::load(&PosetPayload::Explicit(explicit), bounds)?)
}

fn endow_verify(a: &EndowVerifyArgs, bounds: &Bounds) -> CmdResult {
    let forcing = load_forcing(&a.poset, bounds)?;
    let poset = forcing.poset();
    let source = match (a.exhaustive, a.seeded) {
        (true, _) => AntichainSource::Exhaustive { max_elements: bounds.poset },
        (false, Some(count)) => AntichainSource::Seeded { seed: a.seed, count },
        (false, None) => return Err(Failure::Usage("pass --exhaustive or --seeded <count>".into())),
    };
    let antichains = collect_antichains(poset, source)?;
    let family: Box<dyn EndowmentFamily + '_> = match a.family {
        FamilyChoice::Default => forcing.family(),
        FamilyChoice::Whole => Box::new(WholeAntichainFamily(poset)),
        FamilyChoice::Adversarial => Box::new(SingletonFamily(poset)),
    };
    let strat = forcing.stratification();
    let weak = verify_weak_endowment(poset, strat, family.as_ref(), a.n, &antichains);
    let full = if a.clause3 {
        Some(verify_full_endowment_clause3(poset, strat, family.as_ref(), a.n, &antichains, bounds.clause3_budget)?)
    } else {
        None
    };
    let clean = weak.is_clean() && full.as_ref().is_none_or(|r| r.is_clean());
    let mut text = format!(
        "family {} at level {}: {} antichains, {} checks, {} violations\n",
        weak.family,
        weak.level,
        weak.antichains_checked,
        weak.checks,
        weak.violations.len()
    );
    for v in weak.violations.iter().chain(full.iter().flat_map(|r| &r.violations)).take(20) {
        text += &format!(
            "  clause {} on antichain {}{}\n",
            serde_json::to_value(v.clause).expect("clause serializes").as_str().unwrap_or("?"),
            v.antichain_id,
            v.witness_p.as_ref().map(|p| format!(" (witness {p})")).unwrap_or_default()
        );
    }
    if let Some(r) = &full {
        text += &format!("clause (3): {} checks, {} violations\n", r.checks, r.violations.len());
    }
    Ok(Outcome {
        json: json!({ "weak": weak, "clause3": full, "clean": clean }),
        text,
        code: if clean { EXIT_OK } else { EXIT_VERIFICATION },
    })
}

fn dow(a: &DowArgs, bounds: &Bounds) -> CmdResult {
    let spec: PosetSpec = a.poset.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let PosetSpec::Cohen(d) = spec else {
        return Err(Failure::Usage("the construction runs on Cohen posets only".into()));
    };
    let c = CohenPoset::new(d, bounds)?;
    let antichain = Antichain::from_labels(c.poset(), &a.members)?;
    let trace = dow_construct(&c, &antichain, a.n)?;
    let report = verify_weak_endowment(c.poset(), c.stratification(), &DowFamily(&c), a.n, &[antichain]);
    let indices = |mask: u32| (0..d).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>();
    let stages: Vec<Value> = trace
        .stages
        .iter()
        .enumerate()
        .map(|(i, s)| json!({ "stage": i, "added": s.added.labels(c.poset()), "support": indices(s.support) }))
        .collect();
    let result = trace.result.labels(c.poset());
    let mut text = String::new();
    for (i, s) in trace.stages.iter().enumerate() {
        text += &format!("E_{i} = {{{}}}  D_{i} = {:?}\n", s.added.labels(c.poset()).join(", "), indices(s.support));
    }
    text += &format!("L = {{{}}} ({} members)\n", result.join(", "), result.len());
    text += &format!("guarantee: {}\n", if report.is_clean() { "holds" } else { "violated" });
    Ok(Outcome {
        json: json!({ "stages": stages, "result": result, "guarantee": report.is_clean(), "violations": report.violations }),
        text,
        code: if report.is_clean() { EXIT_OK } else { EXIT_VERIFICATION },
    })
}

fn load_scenario(path: &Path, bounds: &Bounds) -> Result<Scenario, Failure> {
    let file = InstanceFile::read(path)?;
    let payload: ScenarioPayload = file.payload(InstanceKind::Scenario)?;
    Ok(Scenario::load(&payload, bounds)?)
}

fn pick_name(s: &Scenario, level: usize, name: Option<usize>) -> Result<usize, Failure> {
    let index = name.unwrap_or(level);
    if index >= s.names.len() {
        return Err(Failure::Lab(Error::Input(format!("the scenario has {} names", s.names.len()))));
    }
    Ok(index)
}

fn approx(a: &ApproxArgs, bounds: &Bounds) -> CmdResult {
    let s = load_scenario(&a.scenario, bounds)?;
    let index = pick_name(&s, a.level, a.name)?;
    let (poset, space) = (s.forcing.poset(), &s.space);
    let name = &s.names[index];
    let point_names = derive_point_names(poset, space, name)?;
    let family = s.forcing.family();
    let approx = approximate(space, &point_names, a.level, family.as_ref())?;
    let cert = check_lemma_approx(poset, s.forcing.stratification(), &approx, name)?;
    let points: Vec<Value> = approx
        .points
        .iter()
        .map(|p| json!({ "point": space.label(p.point), "endowment": p.endowment.labels(poset), "value": space.set_labels(p.value) }))
        .collect();
    let triples: Vec<Value> = cert
        .triples
        .iter()
        .map(|&(v, p, r)| json!([space.set_labels(v), poset.label(p), poset.label(r)]))
        .collect();
    let counterexamples: Vec<Value> = cert
        .counterexamples
        .iter()
        .map(|&(v, p)| json!([space.set_labels(v), poset.label(p)]))
        .collect();
    let mut text = format!("level {} approximation of name {index}\n", a.level);
    for p in &approx.points {
        text += &format!(
            "  V_{} = {{{}}}  via {{{}}}\n",
            space.label(p.point),
            space.set_labels(p.value).join(","),
            p.endowment.labels(poset).join(", ")
        );
    }
    text += &format!("cover: {:?}\n", family_labels(space, &approx.cover));
    text += &format!(
        "certificate: {} ({} triples, {} counterexamples)\n",
        if cert.is_positive() { "positive" } else { "negative" },
        cert.triples.len(),
        cert.counterexamples.len()
    );
    Ok(Outcome {
        json: json!({
            "level": a.level,
            "name": index,
            "points": points,
            "cover": family_labels(space, &approx.cover),
            "certificate": { "positive": cert.is_positive(), "triples": triples, "counterexamples": counterexamples },
        }),
        text,
        code: if cert.is_positive() { EXIT_OK } else { EXIT_VERIFICATION },
    })
}

fn refine(a: &RefineArgs, bounds: &Bounds) -> CmdResult {
    let s = load_scenario(&a.scenario, bounds)?;
    let index = pick_name(&s, a.level, a.name)?;
    let (poset, space) = (s.forcing.poset(), &s.space);
    let name = &s.names[index];
    let raw: Vec<Vec<String>> =
        serde_json::from_str(&a.family).map_err(|e| Failure::Usage(format!("--family is not a JSON list of lists: {e}")))?;
    let family = raw.iter().map(|h| space.set_from_labels(h)).collect::<endowlab::Result<Vec<_>>>()?;
    if !validate_cover_name(poset, space, name)? {
        return Err(Failure::Lab(Error::Input(format!("name {index} is not forced to be an open cover"))));
    }
    let point_names = derive_point_names(poset, space, name)?;
    let endowment = s.forcing.family();
    let approx = approximate(space, &point_names, a.level, endowment.as_ref())?;
    let (refined, cert) = refine_name(poset, s.forcing.stratification(), space, &approx, &family, name)?;
    let pairs = name_payload(poset, space, &refined.name);
    let witnesses: Vec<Value> = cert
        .witnesses
        .iter()
        .map(|&(p, h, r)| json!([poset.label(p), space.set_labels(h), poset.label(r)]))
        .collect();
    let failures: Vec<Value> =
        cert.failures.iter().map(|&(p, h)| json!([poset.label(p), space.set_labels(h)])).collect();
    let text = format!(
        "refined name with {} pairs over {} sets\nforced to refine the cover name: {}\nclause (2): {} witnesses, {} failures\ncertificate: {}\n",
        pairs.len(),
        refined.family.len(),
        cert.refines_cover,
        cert.witnesses.len(),
        cert.failures.len(),
        if cert.is_positive() { "positive" } else { "negative" }
    );
    Ok(Outcome {
        json: json!({
            "level": a.level,
            "name": index,
            "pairs": pairs,
            "certificate": {
                "positive": cert.is_positive(),
                "refines_cover": cert.refines_cover,
                "witnesses": witnesses,
                "failures": failures,
            },
        }),
        text,
        code: if cert.is_positive() { EXIT_OK } else { EXIT_VERIFICATION },
    })
}

fn preserve(a: &PreserveArgs, bounds: &Bounds) -> CmdResult {
    let s = load_scenario(&a.scenario, bounds)?;
    let Some(property) = a.property.or(s.property()) else {
        return Err(Failure::Usage("pass --property or name one in the scenario".into()));
    };
    let cert = run_preservation(&s, property)?;
    let body = cert.to_json();
    if let Some(path) = &a.cert {
        std::fs::write(path, &body).map_err(Error::from)?;
    }
    let t = &cert.transcript;
    let failed_atoms = t.atoms.iter().filter(|r| !r.holds()).count();
    let certified = cert.verdict == Verdict::Certified;
    let text = format!(
        "{} over {} levels (floor {}), {} atoms checked, {} failing\nverdict: {}\n",
        property.as_str(),
        t.selection.len(),
        t.horizon_floor,
        t.atoms.len(),
        failed_atoms,
        if certified { "certified" } else { "failed" }
    );
    Ok(Outcome {
        json: serde_json::to_value(&cert).map_err(Error::from)?,
        text,
        code: if certified { EXIT_OK } else { EXIT_VERIFICATION },
    })
}

fn verify(a: &VerifyArgs, bounds: &Bounds) -> CmdResult {
    let text = std::fs::read_to_string(&a.cert).map_err(Error::from)?;
    let v = verify_certificate(&text, bounds)?;
    let ok = v.is_certified();
    Ok(Outcome {
        json: serde_json::to_value(&v).map_err(Error::from)?,
        text: format!(
            "replay matches: {}\nper-atom table matches: {}\nverdict: {}\n",
            v.replay_matches,
            v.atoms_match,
            if ok { "certified" } else { "not certified" }
        ),
        code: if ok { EXIT_OK } else { EXIT_VERIFICATION },
    })
}

fn gen(a: &GenArgs, bounds: &Bounds) -> CmdResult {
    let payload = generate_scenario(a.seed, bounds, a.property)?;
    let file = InstanceFile::new(InstanceKind::Scenario, &payload)?;
    let body = serde_json::to_string_pretty(&file).map_err(Error::from)?;
    let text = match &a.out {
        Some(path) => {
            std::fs::write(path, &body).map_err(Error::from)?;
            format!("wrote {}\n", path.display())
        }
        None => format!("{body}\n"),
    };
    Ok(Outcome { json: serde_json::to_value(&file).map_err(Error::from)?, text, code: EXIT_OK })
}

fn selftest(a: &SelftestArgs, bounds: &Bounds) -> CmdResult {
    let effective = match a.bounds {
        BoundsPreset::Default => *bounds,
        BoundsPreset::Large => {
            let large = Bounds { cohen_index: 6, measure_dim: 4, points: 12, base: 64, poset: 512, levels: 32, ..*bounds };
            bounds.admit(&large)?;
            large
        }
    };
    let report = run_selftest(a.seed, a.count, &effective)?;
    let mut text = String::new();
    for c in &report.checks {
        text += &format!("{} {} ({} cases) {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.cases, c.detail);
    }
    Ok(Outcome {
        json: serde_json::to_value(&report).map_err(Error::from)?,
        text,
        code: if report.passed() { EXIT_OK } else { EXIT_VERIFICATION },
    })
}
