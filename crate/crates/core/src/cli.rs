//! Command-line front end: argument parsing, configuration, rendering and the
//! per-discriminant cache.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::blocks::{self, ClassSequence, Limits, DEFAULT_DAVENPORT_CAP, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::factorizer::{self, FactorizationReport};
use crate::group::{AbelianGroup, GroupElement, DEFAULT_ELEMENT_CAP};
use crate::quadratic::{Discriminant, FormClassGroup, QuadForm};

pub const CACHE_ENV: &str = "FACTORLAT_CACHE";
pub const SURVEY_MAX_N: u64 = 1_000_000;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_INVALID_DISC: i32 = 2;
pub const EXIT_EXPLICIT_UNAVAILABLE: i32 = 3;
pub const EXIT_TOO_LARGE: i32 = 4;
pub const EXIT_IO: i32 = 5;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotFundamental(_) | Error::Unsupported(_) => EXIT_INVALID_DISC,
        Error::ExplicitUnavailable(_) => EXIT_EXPLICIT_UNAVAILABLE,
        Error::TooLarge(_) => EXIT_TOO_LARGE,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_OTHER,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub enumeration_cap: usize,
    pub davenport_cap: u64,
    pub cache_dir: Option<PathBuf>,
    pub output: Output,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            davenport_cap: DEFAULT_DAVENPORT_CAP,
            cache_dir: None,
            output: Output::Text,
        }
    }
}

impl Config {
    pub fn limits(&self) -> Limits {
        Limits { enumeration_cap: self.enumeration_cap, davenport_cap: self.davenport_cap, element_cap: DEFAULT_ELEMENT_CAP }
    }
}

#[derive(Debug, Parser)]
#[command(name = "factorlat", version, about = "Irreducible factorizations in imaginary quadratic fields")]
pub struct Cli {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Directory for per-discriminant class group caches. FACTORLAT_CACHE takes precedence.
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Maximum total sequence length for enumeration and counting.
    #[arg(long, global = true, default_value_t = DEFAULT_ENUMERATION_CAP as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub cap: u64,
    /// Maximum group order for the Davenport search.
    #[arg(long, global = true, default_value_t = DEFAULT_DAVENPORT_CAP, value_parser = clap::value_parser!(u64).range(1..))]
    pub davenport_cap: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Class group structure, reduced forms and ambiguous representatives.
    Classgroup {
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
    },
    /// Reduced forms with their classes.
    Forms {
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
    },
    /// Number of non-associate irreducible factorizations of n.
    Eta {
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
        #[arg(long)]
        n: u64,
    },
    /// All irreducible factorizations of n.
    Factorize {
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
        #[arg(long)]
        n: u64,
        /// Also compute explicit elements (classes of order at most 2 only).
        #[arg(long)]
        explicit: bool,
    },
    /// Minimal zero-sum partitions of a sequence over an abstract group.
    Partitions {
        /// Invariant factors, e.g. "2,2".
        #[arg(long)]
        group: String,
        /// Sequence as "id:c1.c2:mult,...".
        #[arg(long, default_value = "")]
        seq: String,
    },
    /// Davenport constant of a finite abelian group.
    Davenport {
        #[arg(long)]
        group: String,
    },
    /// Elasticity D(G)/2 with a witness sequence.
    Elasticity {
        #[arg(long, conflicts_with = "disc", required_unless_present = "disc")]
        group: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        disc: Option<i64>,
    },
    /// Histogram of eta(n) for 2 <= n <= max_n, written to a JSON file.
    Survey {
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
        #[arg(long)]
        max_n: u64,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

/// Parses, runs and renders; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_OTHER } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    let env_cache = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let config = Config {
        enumeration_cap: cli.cap as usize,
        davenport_cap: cli.davenport_cap,
        cache_dir: env_cache.or(cli.cache_dir),
        output: if cli.json { Output::Json } else { Output::Text },
    };
    let Rendered { text, code } = match execute(&cli.command, &config) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
        return EXIT_IO;
    }
    code
}

/// Output of a command plus its exit code (nonzero for partial results).
pub struct Rendered {
    pub text: String,
    pub code: i32,
}

impl Rendered {
    fn ok(text: String) -> Self {
        Rendered { text, code: EXIT_OK }
    }
}

fn json_line<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string(v)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_disc(d: i64) -> Result<Discriminant> {
    Discriminant::of_field(d)
}

pub fn parse_group(spec: &str) -> Result<AbelianGroup> {
    spec.parse()
}

pub fn execute(cmd: &Command, config: &Config) -> Result<Rendered> {
    let limits = config.limits();
    match cmd {
        Command::Classgroup { disc } => {
            let cg = load_class_group(parse_disc(*disc)?, config.cache_dir.as_deref())?;
            render_classgroup(&cg, config.output).map(Rendered::ok)
        }
        Command::Forms { disc } => {
            let cg = load_class_group(parse_disc(*disc)?, config.cache_dir.as_deref())?;
            render_forms(&cg, config.output).map(Rendered::ok)
        }
        Command::Eta { disc, n } => {
            let cg = load_class_group(parse_disc(*disc)?, config.cache_dir.as_deref())?;
            let eta = factorizer::eta(*n, &cg, &limits)?;
            match config.output {
                Output::Json => json_line(&EtaView { n: *n, disc: cg.disc().value(), eta }).map(Rendered::ok),
                Output::Text => Ok(Rendered::ok(format!("eta({n}) = {eta}\n"))),
            }
        }
        Command::Factorize { disc, n, explicit } => {
            let cg = load_class_group(parse_disc(*disc)?, config.cache_dir.as_deref())?;
            match factorizer::enumerate(*n, &cg, *explicit, &limits) {
                Ok(r) => render_report(&r, config.output).map(Rendered::ok),
                Err(Error::ExplicitUnavailable(why)) => {
                    let r = factorizer::enumerate(*n, &cg, false, &limits)?;
                    let mut text = render_report(&r, config.output)?;
                    if config.output == Output::Text {
                        writeln!(text, "explicit elements unavailable: {why}").expect("string write");
                    }
                    Ok(Rendered { text, code: EXIT_EXPLICIT_UNAVAILABLE })
                }
                Err(e) => Err(e),
            }
        }
        Command::Partitions { group, seq } => {
            let g = parse_group(group)?;
            let s = ClassSequence::from_spec(&g, seq)?;
            let parts = blocks::enumerate_partitions(&s, &limits)?;
            let view = PartitionsView {
                group: g.invariant_factors().to_vec(),
                count: parts.len(),
                lengths: parts.iter().map(|p| p.len()).collect(),
                partitions: parts.iter().map(|p| p.ids(&s)).collect(),
            };
            match config.output {
                Output::Json => json_line(&view).map(Rendered::ok),
                Output::Text => {
                    let mut t = format!("{} partition(s)\n", view.count);
                    for p in &view.partitions {
                        writeln!(t, "  {}", render_blocks(p)).expect("string write");
                    }
                    Ok(Rendered::ok(t))
                }
            }
        }
        Command::Davenport { group } => {
            let g = parse_group(group)?;
            if g.order() == 1 {
                return Err(Error::InvalidGroup("the trivial group has no nonempty zero-sum free sequences".into()));
            }
            let (d, witness) = blocks::davenport_with_witness(&g, &limits)?;
            match config.output {
                Output::Json => json_line(&DavenportView { group: g.invariant_factors().to_vec(), davenport: d, witness })
                    .map(Rendered::ok),
                Output::Text => Ok(Rendered::ok(format!("D({g}) = {d}\n"))),
            }
        }
        Command::Elasticity { group, disc } => {
            let g = match (group, disc) {
                (Some(spec), _) => parse_group(spec)?,
                (None, Some(d)) => load_class_group(parse_disc(*d)?, config.cache_dir.as_deref())?.group().clone(),
                (None, None) => return Err(Error::InvalidInput("either --group or --disc is required".into())),
            };
            let e = blocks::elasticity(&g, &limits)?;
            match config.output {
                Output::Json => json_line(&e).map(Rendered::ok),
                Output::Text => Ok(Rendered::ok(format!(
                    "D({g}) = {}\nelasticity = {}\nwitness lengths = {:?}\n",
                    e.davenport, e.ratio, e.witness_lengths
                ))),
            }
        }
        Command::Survey { disc, max_n, out } => {
            let cg = load_class_group(parse_disc(*disc)?, config.cache_dir.as_deref())?;
            let report = survey(&cg, *max_n, &limits)?;
            let mut bytes = serde_json::to_vec_pretty(&report)?;
            bytes.push(b'\n');
            write_atomic(out, &bytes)?;
            match config.output {
                Output::Json => json_line(&report).map(Rendered::ok),
                Output::Text => Ok(Rendered::ok(format!(
                    "wrote {}: {} values of n, eta = 1 for {}\n",
                    out.display(),
                    report.count,
                    report.eta_one
                ))),
            }
        }
    }
}

#[derive(Serialize)]
struct EtaView {
    n: u64,
    disc: i64,
    eta: u128,
}

#[derive(Serialize)]
struct PartitionsView {
    group: Vec<u64>,
    count: usize,
    lengths: Vec<usize>,
    partitions: Vec<Vec<Vec<String>>>,
}

#[derive(Serialize)]
struct DavenportView {
    group: Vec<u64>,
    davenport: u64,
    witness: Vec<GroupElement>,
}

#[derive(Serialize)]
struct FormView {
    form: QuadForm,
    class: GroupElement,
    order: u64,
}

#[derive(Serialize)]
struct ClassGroupView<'a> {
    disc: i64,
    class_number: u64,
    group: &'a [u64],
    forms: Vec<QuadForm>,
    generators: &'a [QuadForm],
    ambiguous: Vec<FormView>,
}

fn render_classgroup(cg: &FormClassGroup, output: Output) -> Result<String> {
    let g = cg.group();
    let ambiguous: Vec<FormView> = cg
        .ambiguous_representatives()
        .iter()
        .map(|r| FormView { form: r.form, class: r.class.clone(), order: g.element_order(&r.class) })
        .collect();
    match output {
        Output::Json => json_line(&ClassGroupView {
            disc: cg.disc().value(),
            class_number: cg.class_number(),
            group: g.invariant_factors(),
            forms: cg.reduced().to_vec(),
            generators: cg.generators(),
            ambiguous,
        }),
        Output::Text => {
            let mut t = String::new();
            writeln!(t, "discriminant {}", cg.disc()).expect("string write");
            writeln!(t, "class number {}, group {} {:?}", cg.class_number(), g, g.invariant_factors()).expect("string write");
            let forms: Vec<String> = cg.reduced().iter().map(ToString::to_string).collect();
            writeln!(t, "reduced forms: {}", forms.join(" ")).expect("string write");
            writeln!(t, "ambiguous representatives:").expect("string write");
            for a in &ambiguous {
                writeln!(t, "  {} class {} order {}", a.form, render_class(&a.class), a.order).expect("string write");
            }
            Ok(t)
        }
    }
}

fn render_forms(cg: &FormClassGroup, output: Output) -> Result<String> {
    let g = cg.group();
    let views: Vec<FormView> = cg
        .reduced()
        .iter()
        .map(|f| {
            let class = cg.class_of(f)?;
            Ok(FormView { form: *f, order: g.element_order(&class), class })
        })
        .collect::<Result<_>>()?;
    match output {
        Output::Json => json_line(&views),
        Output::Text => {
            let mut t = String::new();
            for v in &views {
                writeln!(t, "{} class {} order {}", v.form, render_class(&v.class), v.order).expect("string write");
            }
            Ok(t)
        }
    }
}

fn render_class(c: &GroupElement) -> String {
    let coords: Vec<String> = c.coords().iter().map(ToString::to_string).collect();
    format!("({})", coords.join(","))
}

fn render_blocks(partition: &[Vec<String>]) -> String {
    partition.iter().map(|b| format!("{{{}}}", b.join(" "))).collect::<Vec<_>>().join(" ")
}

pub fn render_report(r: &FactorizationReport, output: Output) -> Result<String> {
    if output == Output::Json {
        return json_line(r);
    }
    let mut t = String::new();
    writeln!(t, "n = {}, discriminant {}", r.n, r.disc).expect("string write");
    writeln!(t, "eta = {}", r.eta).expect("string write");
    writeln!(t, "lengths = {:?}", r.lengths).expect("string write");
    for (i, p) in r.partitions.iter().enumerate() {
        writeln!(t, "{}: {}", i + 1, render_blocks(p)).expect("string write");
        if let Some(explicit) = &r.explicit {
            let elems: Vec<String> = explicit[i].iter().map(|x| format!("({x})")).collect();
            writeln!(t, "   = {}", elems.join(" * ")).expect("string write");
        }
    }
    Ok(t)
}

/// File name of the cache entry for `disc`.
pub fn cache_file(dir: &Path, disc: Discriminant) -> PathBuf {
    dir.join(format!("disc_{}.json", disc.value().unsigned_abs()))
}

pub fn class_group_bytes(cg: &FormClassGroup) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(cg)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Class group for `disc`, read from the cache when present and valid; a
/// missing or stale entry is recomputed and rewritten.
pub fn load_class_group(disc: Discriminant, cache_dir: Option<&Path>) -> Result<FormClassGroup> {
    let Some(dir) = cache_dir else {
        return FormClassGroup::new(disc);
    };
    let path = cache_file(dir, disc);
    if let Ok(bytes) = std::fs::read(&path) {
        let cached = serde_json::from_slice::<FormClassGroup>(&bytes)
            .map_err(Error::from)
            .and_then(FormClassGroup::from_parts_checked);
        if let Ok(cg) = cached {
            if cg.disc() == disc {
                return Ok(cg);
            }
        }
    }
    let cg = FormClassGroup::new(disc)?;
    std::fs::create_dir_all(dir)?;
    write_atomic(&path, &class_group_bytes(&cg)?)?;
    Ok(cg)
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Io(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::Io(format!("{}: {e}", path.display())));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionCheck {
    /// Only evaluated when the class number is 2.
    pub applicable: bool,
    pub checked: u64,
    pub mismatches: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyReport {
    pub disc: i64,
    pub class_number: u64,
    pub max_n: u64,
    /// Number of n in `2..=max_n` with a computed eta.
    pub count: u64,
    /// Values of n whose prime ideal sequence exceeds the enumeration cap.
    pub skipped: Vec<u64>,
    pub histogram: BTreeMap<u128, u64>,
    pub eta_one: u64,
    pub eta_one_fraction: Option<f64>,
    pub criterion: CriterionCheck,
}

/// Unique-factorization test for class number 2: at most one nonprincipal
/// prime ideal divides `(n)`, or `(n) = (principal) * q1^e * q2` with `q1 != q2`
/// nonprincipal and `e` odd.
pub fn class_number_two_criterion(fact: &factorizer::IdealFactorization) -> bool {
    let nonprincipal: Vec<u32> = fact.entries.iter().filter(|e| !e.class.is_identity()).map(|e| e.exponent).collect();
    match nonprincipal[..] {
        [] | [_] => true,
        [a, b] => (a == 1 && b % 2 == 1) || (b == 1 && a % 2 == 1),
        _ => false,
    }
}

pub fn survey(cg: &FormClassGroup, max_n: u64, limits: &Limits) -> Result<SurveyReport> {
    if max_n > SURVEY_MAX_N {
        return Err(Error::InvalidInput(format!("max_n must be at most {SURVEY_MAX_N}")));
    }
    let applicable = cg.class_number() == 2;
    let values: Vec<u64> = (2..=max_n).collect();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(values.len().max(1));
    let chunk = values.len().div_ceil(threads).max(1);

    type Row = (u64, Result<u128>, bool);
    let rows: Vec<Row> = std::thread::scope(|scope| {
        let handles: Vec<_> = values
            .chunks(chunk)
            .map(|ns| {
                scope.spawn(move || -> Result<Vec<Row>> {
                    ns.iter()
                        .map(|&n| {
                            let fact = factorizer::ideal_factorization(n, cg)?;
                            let crit = applicable && class_number_two_criterion(&fact);
                            Ok((n, factorizer::eta_of(&fact, cg, limits), crit))
                        })
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Internal("survey worker panicked".into()))))
            .collect::<Result<Vec<Vec<Row>>>>()
            .map(|v| v.into_iter().flatten().collect())
    })?;

    let mut report = SurveyReport {
        disc: cg.disc().value(),
        class_number: cg.class_number(),
        max_n,
        count: 0,
        skipped: Vec::new(),
        histogram: BTreeMap::new(),
        eta_one: 0,
        eta_one_fraction: None,
        criterion: CriterionCheck { applicable, checked: 0, mismatches: Vec::new() },
    };
    for (n, eta, crit) in rows {
        let eta = match eta {
            Ok(v) => v,
            Err(Error::TooLarge(_)) => {
                report.skipped.push(n);
                continue;
            }
            Err(e) => return Err(e),
        };
        report.count += 1;
        *report.histogram.entry(eta).or_default() += 1;
        if eta == 1 {
            report.eta_one += 1;
        }
        if applicable {
            report.criterion.checked += 1;
            if crit != (eta == 1) {
                report.criterion.mismatches.push(n);
            }
        }
    }
    if report.count > 0 {
        report.eta_one_fraction = Some(report.eta_one as f64 / report.count as f64);
    }
    Ok(report)
}
