//! Batch command surface.
//!
//! Every command builds a [`Report`]: a table of rows plus metadata. Reports
//! render as JSON `{meta: {version, seed, params}, rows}`, CSV or aligned
//! text. Exit status is 0 when every check passes, 1 when a check fails,
//! 2 on a usage error and 3 when a computation did not converge.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::coding::SetFamily;
use crate::error::Error;
use crate::exactnum::{DyadicRational, RealInterval};
use crate::language::{LanguageTable, Side, Word};
use crate::measure::{
    event_measure, monte_carlo_cylinder, mu_cylinder, nu_a_series, Constraint, MeasureResult, Polarity, WindowEvent,
    DEFAULT_DEPTH_CAP,
};
use crate::odometer::sample_point;
use crate::thermo::{
    decomposition_bound, gibbs_ratio_at_o, lemma_report, mu_beta, orbit_profile, pressure_exact, qn_trend,
    very_weak_scan, LemmaLimits, LemmaRow, PotentialParams, DEFAULT_N_MAX, MU_BETA_TERMS, OVERRIDE_N_MAX,
};

/// Default top of the `gibbs-o` range.
pub const GIBBS_N_MAX: usize = 20;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNCONVERGED: i32 = 3;

#[derive(Parser, Debug, Clone)]
#[command(name = "odogibbs", version, about = "Odometer-coded subshift: languages, measures, pressure and Gibbs checks")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Word counts of the certified and upper languages
    Language(LanguageArgs),
    /// Measure of a cylinder or window event
    Measure(MeasureArgs),
    /// Pressure enclosure and the partition-sum trend
    Pressure(PressureArgs),
    /// Gibbs ratio at the fixed point β^∞
    #[command(name = "gibbs-o")]
    GibbsO(GibbsArgs),
    /// Sampled very weak Gibbs scan
    #[command(name = "vw-scan")]
    VwScan(ScanArgs),
    /// Block structure of sampled orbits against the error sets
    Orbit(OrbitArgs),
    /// One row per quantitative lemma
    Lemmas(LemmaArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    Json,
    Csv,
    #[default]
    Text,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Refinement depth
    #[arg(long)]
    pub depth: Option<u32>,
    /// Longest word length
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Largest n for partition sums and Gibbs ratios
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Width target, e.g. 2^-24
    #[arg(long, value_parser = parse_dyadic)]
    pub tolerance: Option<DyadicRational>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value file; command-line flags win
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Allow n up to 20 for partition sums
    #[arg(long)]
    pub override_guard: bool,
}

#[derive(Args, Debug, Clone)]
pub struct LanguageArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dump the words of one side instead of the counts
    #[arg(long, value_enum)]
    pub list: Option<SideArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Under,
    Over,
}

#[derive(Args, Debug, Clone)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub common: Common,
    /// Cylinder word over a/b
    #[arg(long)]
    pub word: Option<String>,
    /// Window event, e.g. 0:A:in,1:E6:out
    #[arg(long, conflicts_with = "word")]
    pub event: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct PressureArgs {
    #[command(flatten)]
    pub common: Common,
    /// Terms of the ν(A) series
    #[arg(long, default_value_t = MU_BETA_TERMS)]
    pub terms: u32,
}

#[derive(Args, Debug, Clone)]
pub struct GibbsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Multiply the (e/2)^n threshold
    #[arg(long, default_value_t = 1.0)]
    pub threshold_scale: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: Common,
    /// Window lengths
    #[arg(long, value_delimiter = ',', default_values_t = vec![16usize, 32])]
    pub ns: Vec<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct OrbitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 5)]
    pub k_min: u32,
    #[arg(long, default_value_t = 10)]
    pub k_max: u32,
    /// Orbit length, as an integer or 2^e
    #[arg(long, default_value = "2^18", value_parser = parse_count)]
    pub horizon: u64,
}

#[derive(Args, Debug, Clone)]
pub struct LemmaArgs {
    #[command(flatten)]
    pub common: Common,
}

fn parse_dyadic(s: &str) -> Result<DyadicRational, String> {
    let x: DyadicRational = s.parse().map_err(|e: Error| e.to_string())?;
    if x.is_negative() || x.is_zero() {
        return Err("must be positive".into());
    }
    Ok(x)
}

fn parse_count(s: &str) -> Result<u64, String> {
    if let Some(e) = s.strip_prefix("2^") {
        let e: u32 = e.parse().map_err(|_| format!("bad exponent in {s}"))?;
        return 1u64.checked_shl(e).filter(|_| e < 64).ok_or_else(|| format!("{s} is too large"));
    }
    s.parse().map_err(|_| format!("not a count: {s}"))
}

/// Parsed command line, with config-file values already merged in.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub cli: Cli,
}

impl RunPlan {
    pub fn common(&self) -> &Common {
        match &self.cli.command {
            Command::Language(a) => &a.common,
            Command::Measure(a) => &a.common,
            Command::Pressure(a) => &a.common,
            Command::GibbsO(a) => &a.common,
            Command::VwScan(a) => &a.common,
            Command::Orbit(a) => &a.common,
            Command::Lemmas(a) => &a.common,
        }
    }

    pub fn name(&self) -> &'static str {
        match &self.cli.command {
            Command::Language(_) => "language",
            Command::Measure(_) => "measure",
            Command::Pressure(_) => "pressure",
            Command::GibbsO(_) => "gibbs-o",
            Command::VwScan(_) => "vw-scan",
            Command::Orbit(_) => "orbit",
            Command::Lemmas(_) => "lemmas",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Help or version output; not an error.
    Info(String),
    Usage(String),
    Run(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Refused(m) => CliError::Usage(m),
            e => CliError::Run(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn config_args(argv: &[String]) -> Result<Vec<String>, CliError> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = argv.get(i + 1).cloned();
        }
    }
    let Some(path) = path else { return Ok(Vec::new()) };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("config {path}: {e}")))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("{path}:{}: expected key=value", n + 1)));
        };
        let k = k.trim().replace('_', "-");
        if k == "config" {
            continue;
        }
        match v.trim() {
            "true" => out.push(format!("--{k}")),
            "false" => {}
            v => out.extend([format!("--{k}"), v.to_string()]),
        }
    }
    Ok(out)
}

/// Validated plan from `argv` (program name first).
pub fn parse_args(argv: &[String]) -> Result<RunPlan, CliError> {
    let extra = config_args(argv)?;
    let mut merged: Vec<String> = argv.iter().take(2).cloned().collect();
    merged.extend(extra);
    merged.extend(argv.iter().skip(2).cloned());
    let cli = Cli::try_parse_from(&merged).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                CliError::Info(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    })?;
    let plan = RunPlan { cli };
    validate(&plan)?;
    Ok(plan)
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn n_cap(c: &Common) -> usize {
    if c.override_guard {
        OVERRIDE_N_MAX
    } else {
        DEFAULT_N_MAX
    }
}

fn validate(plan: &RunPlan) -> Result<(), CliError> {
    let c = plan.common();
    if let Some(m) = c.max_len {
        if !(1..=64).contains(&m) {
            return Err(usage("--max-len must lie in 1..=64"));
        }
    }
    let guarded = matches!(plan.cli.command, Command::Pressure(_) | Command::Lemmas(_));
    if let Some(n) = c.n_max.filter(|_| guarded) {
        if n > n_cap(c) {
            return Err(usage(format!("--n-max {n} exceeds {} (use --override-guard for up to 20)", n_cap(c))));
        }
    }
    if c.samples == Some(0) {
        return Err(usage("--samples must be positive"));
    }
    match &plan.cli.command {
        Command::GibbsO(_) => {
            if c.n_max.is_some_and(|n| !(5..=64).contains(&n)) {
                return Err(usage("gibbs-o needs --n-max in 5..=64"));
            }
        }
        Command::Pressure(a) if a.terms < 6 => return Err(usage("--terms must be at least 6")),
        Command::VwScan(a) if a.ns.iter().any(|&n| n == 0 || n > 64) => {
            return Err(usage("--ns values must lie in 1..=64"));
        }
        Command::Orbit(a) if a.k_min < 5 || a.k_min > a.k_max || a.k_max > 60 => {
            return Err(usage("need 5 <= --k-min <= --k-max <= 60"));
        }
        Command::Measure(a) => {
            if let Some(w) = &a.word {
                w.parse::<Word>().map_err(|e| usage(e.to_string()))?;
            }
            if let Some(e) = &a.event {
                parse_event(e).map_err(|e| usage(e.to_string()))?;
            }
        }
        _ => {}
    }
    Ok(())
}

/// `offset:SET:in|out` items separated by commas; SET is `A`, `A<k>`, `E<k>`
/// or `B<m>`.
pub fn parse_event(s: &str) -> Result<WindowEvent, Error> {
    let mut cs = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        let [off, set, pol] = parts[..] else {
            return Err(Error::Parse(format!("event item {item}")));
        };
        let offset: i64 = off.parse().map_err(|_| Error::Parse(format!("offset {off}")))?;
        let param = |p: &str| p.parse::<u32>().map_err(|_| Error::Parse(format!("set {set}")));
        let set = match set.split_at(1) {
            ("A", "") => SetFamily::A,
            ("A", k) => SetFamily::Ak(param(k)?),
            ("E", k) => SetFamily::Ek(param(k)?),
            ("B", m) => SetFamily::Bm(param(m)?),
            _ => return Err(Error::Parse(format!("set {set}"))),
        };
        let polarity = match pol {
            "in" => Polarity::In,
            "out" => Polarity::Out,
            _ => return Err(Error::Parse(format!("polarity {pol}"))),
        };
        cs.push(Constraint { offset, set, polarity });
    }
    WindowEvent::new(cs)
}

/// A finished table.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub params: BTreeMap<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub extra: BTreeMap<String, Value>,
    pub failed: bool,
    pub unconverged: bool,
}

impl Report {
    fn new(plan: &RunPlan, columns: &[&str]) -> Self {
        Self {
            command: plan.name().into(),
            seed: plan.common().seed,
            params: BTreeMap::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            extra: BTreeMap::new(),
            failed: false,
            unconverged: false,
        }
    }

    fn param(&mut self, k: &str, v: impl Into<Value>) {
        self.params.insert(k.into(), v.into());
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn exit_code(&self) -> i32 {
        if self.failed {
            EXIT_FAIL
        } else if self.unconverged {
            EXIT_UNCONVERGED
        } else {
            EXIT_PASS
        }
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect::<Map<_, _>>()))
            .collect();
        let mut meta = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "seed": self.seed,
            "params": self.params,
        });
        for (k, v) in &self.extra {
            meta[k] = v.clone();
        }
        json!({ "meta": meta, "rows": rows })
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        v => v.to_string(),
    }
}

/// Bytes of a report in one format.
pub fn render(report: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.to_json()).expect("report is valid JSON");
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(&report.columns).expect("in-memory write");
            for r in &report.rows {
                w.write_record(r.iter().map(cell)).expect("in-memory write");
            }
            w.into_inner().expect("in-memory flush")
        }
        Format::Text => {
            let cells: Vec<Vec<String>> = report.rows.iter().map(|r| r.iter().map(cell).collect()).collect();
            let widths: Vec<usize> = (0..report.columns.len())
                .map(|j| cells.iter().map(|r| r[j].len()).chain([report.columns[j].len()]).max().unwrap_or(0))
                .collect();
            let line = |r: &[String]| {
                let s: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
                s.join("  ").trim_end().to_string() + "\n"
            };
            let mut out = format!("# {} seed={}\n", report.command, report.seed);
            for (k, v) in &report.extra {
                out.push_str(&format!("# {k}: {}\n", cell(v)));
            }
            out.push_str(&line(&report.columns));
            for r in &cells {
                out.push_str(&line(r));
            }
            out.into_bytes()
        }
    }
}

fn real(x: &RealInterval) -> Value {
    Value::String(x.to_string())
}

fn dy(x: &DyadicRational) -> Value {
    Value::String(x.to_string())
}

fn build_table(c: &Common, default_len: usize) -> Result<LanguageTable, CliError> {
    let len = c.max_len.unwrap_or(default_len);
    let depth = c.depth.unwrap_or_else(|| LanguageTable::default_depth(len));
    Ok(LanguageTable::build(len, depth)?)
}

fn measure_row(r: &mut Report, name: String, m: &MeasureResult) {
    r.unconverged |= !m.converged;
    r.push(vec![
        name.into(),
        dy(m.interval.lo()),
        dy(m.interval.hi()),
        m.depth_used.into(),
        m.converged.into(),
    ]);
}

fn run_language(plan: &RunPlan, a: &LanguageArgs) -> Result<Report, CliError> {
    let c = &a.common;
    let t = build_table(c, 16)?;
    if let Some(side) = a.list {
        let side = if side == SideArg::Under { Side::Under } else { Side::Over };
        let mut r = Report::new(plan, &["len", "word"]);
        r.param("side", side.to_string());
        for len in 1..=t.max_len() {
            for w in t.words(side, len)? {
                r.push(vec![len.into(), w.to_string().into()]);
            }
        }
        r.param("max_len", t.max_len());
        r.param("depth", t.build_depth());
        return Ok(r);
    }
    let mut r = Report::new(plan, &["len", "under", "over", "bound"]);
    r.param("max_len", t.max_len());
    r.param("depth", t.build_depth());
    for d in 1..=t.max_len() {
        r.push(vec![d.into(), t.count(Side::Under, d)?.into(), t.count(Side::Over, d)?.into(), (2 * (d + 1).pow(3)).into()]);
    }
    Ok(r)
}

fn run_measure(plan: &RunPlan, a: &MeasureArgs) -> Result<Report, CliError> {
    let c = &a.common;
    let tol = c.tolerance.clone().unwrap_or_else(|| DyadicRational::pow2(-24));
    let cap = c.depth.unwrap_or(DEFAULT_DEPTH_CAP);
    let mut r = Report::new(plan, &["event", "lo", "hi", "depth_used", "converged"]);
    r.param("tolerance", tol.to_string());
    r.param("depth_cap", cap);
    if let Some(w) = &a.word {
        let w: Word = w.parse()?;
        let m = mu_cylinder(&w, &tol, cap)?;
        measure_row(&mut r, format!("[{w}]"), &m);
        if let Some(n) = c.samples {
            let mc = monte_carlo_cylinder(&w, n as u64, c.seed)?;
            r.extra.insert(
                "monte_carlo".into(),
                json!({"estimate": mc.estimate, "standard_error": mc.standard_error, "used": mc.used, "discarded": mc.discarded}),
            );
        }
        r.param("word", w.to_string());
    } else if let Some(e) = &a.event {
        let ev = parse_event(e)?;
        let m = event_measure(&ev, &tol, cap)?;
        measure_row(&mut r, ev.to_string(), &m);
        r.param("event", e.clone());
    } else {
        let ev = WindowEvent::single(0, SetFamily::A, Polarity::In);
        let m = event_measure(&ev, &tol, cap)?;
        measure_row(&mut r, "nu(A) refinement".into(), &m);
        let s = nu_a_series(MU_BETA_TERMS)?;
        r.push(vec!["nu(A) series".into(), dy(s.lo()), dy(s.hi()), Value::Null, true.into()]);
        r.failed |= !m.interval.overlaps(&s);
    }
    Ok(r)
}

fn run_pressure(plan: &RunPlan, a: &PressureArgs) -> Result<Report, CliError> {
    let c = &a.common;
    let params = PotentialParams::default();
    let n_max = c.n_max.unwrap_or(DEFAULT_N_MAX);
    let t = build_table(c, 64)?;
    let p = pressure_exact(&params, a.terms)?;
    let mb = mu_beta().lo().to_f64_down();
    let mut r = Report::new(plan, &["n", "qn", "rate", "theorem_bound", "decomposition_bound", "within"]);
    r.param("terms", a.terms);
    r.param("n_max", n_max);
    r.extra.insert("pressure".into(), json!([p.lo().to_string(), p.hi().to_string()]));
    r.extra.insert("pressure_real".into(), real(&p.to_real()));
    for row in qn_trend(1, n_max, n_cap(c).max(n_max), &t, &params)? {
        let bound = RealInterval::point(36.0 - 2.0 * mb * row.n as f64).exp()?.scale(2.0);
        let dec = decomposition_bound(row.n, &t, &params)?;
        let within = row.qn.hi() <= bound.lo() && row.qn.hi() <= dec.hi();
        r.failed |= !within;
        r.push(vec![row.n.into(), real(&row.qn), real(&row.rate), real(&bound), real(&dec), within.into()]);
    }
    Ok(r)
}

fn run_gibbs(plan: &RunPlan, a: &GibbsArgs) -> Result<Report, CliError> {
    let c = &a.common;
    let params = PotentialParams::default();
    let n_max = c.n_max.unwrap_or(GIBBS_N_MAX);
    let t = build_table(c, 16)?;
    let mut r = Report::new(plan, &["n", "ratio", "threshold", "satisfied", "mu_lo", "beats_uniform"]);
    r.param("n_max", n_max);
    r.param("threshold_scale", a.threshold_scale);
    for n in 5..=n_max {
        let g = gibbs_ratio_at_o(n, &t, &params)?;
        let threshold = g.threshold.scale(a.threshold_scale);
        let satisfied = g.ratio.lo() > threshold.hi();
        r.failed |= !(satisfied && g.beats_uniform);
        r.unconverged |= !g.cylinder.converged;
        r.push(vec![
            n.into(),
            real(&g.ratio),
            real(&threshold),
            satisfied.into(),
            dy(g.cylinder.interval.lo()),
            g.beats_uniform.into(),
        ]);
    }
    Ok(r)
}

fn run_scan(plan: &RunPlan, a: &ScanArgs) -> Result<Report, CliError> {
    let c = &a.common;
    let samples = c.samples.unwrap_or(100);
    let scan = very_weak_scan(samples, &a.ns, c.seed, &PotentialParams::default())?;
    let mut r = Report::new(plan, &["sample", "n", "word", "log_ratio", "rate", "converged"]);
    r.param("samples", samples);
    r.param("ns", a.ns.clone());
    for row in &scan.rows {
        r.unconverged |= !row.converged;
        r.push(vec![
            row.sample.into(),
            row.n.into(),
            row.word.to_string().into(),
            real(&row.log_ratio),
            real(&row.rate),
            row.converged.into(),
        ]);
    }
    let medians: BTreeMap<String, Value> =
        a.ns.iter().map(|&n| (n.to_string(), scan.median_abs_rate(n).map_or(Value::Null, Value::from))).collect();
    r.extra.insert("median_abs_rate".into(), Value::Object(medians.into_iter().collect()));
    r.extra.insert("discard_rate".into(), scan.discard_rate().into());
    Ok(r)
}

fn run_orbit(plan: &RunPlan, a: &OrbitArgs) -> Result<Report, CliError> {
    let c = &a.common;
    let samples = c.samples.unwrap_or(100);
    let ks: Vec<u32> = (a.k_min..=a.k_max).collect();
    let mut r = Report::new(
        plan,
        &["sample", "k", "offset", "blocks", "max_frequency", "h_k", "frequency_violations", "claim_violations", "pass"],
    );
    r.param("samples", samples);
    r.param("horizon", a.horizon);
    for (i, s) in crate::measure::sample_seeds(c.seed, samples).into_iter().enumerate() {
        for rep in orbit_profile(&sample_point(s), &ks, a.horizon)? {
            let pass = rep.offset.is_some() && rep.frequency_violations() == 0 && rep.claim_violations() == 0;
            r.failed |= !pass;
            r.unconverged |= rep.unresolved > 0;
            r.push(vec![
                i.into(),
                rep.k.into(),
                rep.offset.map_or(Value::Null, Value::from),
                rep.blocks.len().into(),
                rep.max_frequency().into(),
                rep.h_k().into(),
                rep.frequency_violations().into(),
                rep.claim_violations().into(),
                pass.into(),
            ]);
        }
    }
    Ok(r)
}

fn lemma_value(row: &LemmaRow) -> Vec<Value> {
    vec![
        row.id.clone().into(),
        row.instances.into(),
        row.worst_margin.into(),
        row.violations.into(),
        row.pass.into(),
    ]
}

fn run_lemmas(plan: &RunPlan, a: &LemmaArgs) -> Result<Report, CliError> {
    let c = &a.common;
    let t = build_table(c, 64)?;
    let limits = LemmaLimits {
        max_len: t.max_len(),
        n_max: c.n_max.unwrap_or(DEFAULT_N_MAX).min(t.max_len()),
        beta_levels: (3, 6.min(t.max_len().ilog2())),
    };
    let rep = lemma_report(&t, &PotentialParams::default(), &limits)?;
    let mut r = Report::new(plan, &["id", "instances", "worst_margin", "violations", "pass"]);
    r.param("max_len", limits.max_len);
    r.param("depth", t.build_depth());
    r.param("n_max", limits.n_max);
    for row in &rep.rows {
        r.push(lemma_value(row));
    }
    r.failed = !rep.pass();
    let diag: Vec<Value> = rep
        .diagnostics
        .iter()
        .map(|d| Value::Object(r.columns.iter().cloned().zip(lemma_value(d)).collect()))
        .collect();
    r.extra.insert("diagnostics".into(), Value::Array(diag));
    Ok(r)
}

/// Runs a plan to a report.
pub fn execute(plan: &RunPlan) -> Result<Report, CliError> {
    match &plan.cli.command {
        Command::Language(a) => run_language(plan, a),
        Command::Measure(a) => run_measure(plan, a),
        Command::Pressure(a) => run_pressure(plan, a),
        Command::GibbsO(a) => run_gibbs(plan, a),
        Command::VwScan(a) => run_scan(plan, a),
        Command::Orbit(a) => run_orbit(plan, a),
        Command::Lemmas(a) => run_lemmas(plan, a),
    }
}

/// Full run: parse, execute, render, write. Returns the exit status.
pub fn run(argv: &[String]) -> i32 {
    let plan = match parse_args(argv) {
        Ok(p) => p,
        Err(CliError::Info(s)) => {
            print!("{s}");
            return EXIT_PASS;
        }
        Err(CliError::Usage(s)) => {
            eprintln!("{}", s.trim_end());
            return EXIT_USAGE;
        }
        Err(e) => {
            eprintln!("error: {e:?}");
            return EXIT_USAGE;
        }
    };
    let report = match execute(&plan) {
        Ok(r) => r,
        Err(CliError::Usage(s)) => {
            eprintln!("{s}");
            return EXIT_USAGE;
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            return EXIT_UNCONVERGED;
        }
        Err(e) => {
            eprintln!("error: {e:?}");
            return EXIT_UNCONVERGED;
        }
    };
    let bytes = render(&report, plan.common().format);
    let written = match &plan.common().out {
        Some(path) => std::fs::write(path, &bytes),
        None => std::io::stdout().write_all(&bytes),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    report.exit_code()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        std::iter::once("odogibbs").chain(s.split_whitespace()).map(String::from).collect()
    }

    fn usage_err(s: &str) -> bool {
        matches!(parse_args(&argv(s)), Err(CliError::Usage(_)))
    }

    #[test]
    fn plans_from_examples() {
        let p = parse_args(&argv("gibbs-o --n-max 20")).unwrap();
        assert_eq!(p.name(), "gibbs-o");
        assert_eq!(p.common().n_max, Some(20));
        let p = parse_args(&argv("lemmas --max-len 64 --depth 80")).unwrap();
        assert_eq!((p.common().max_len, p.common().depth), (Some(64), Some(80)));
        let p = parse_args(&argv("measure --word bbbbb --tolerance 2^-24")).unwrap();
        assert_eq!(p.common().tolerance, Some(DyadicRational::pow2(-24)));
    }

    #[test]
    fn usage_errors() {
        assert!(usage_err("gibbs-o --n-max 4"));
        assert!(usage_err("vw-scan --samples 0"));
        assert!(usage_err("pressure --n-max 20"));
        assert!(parse_args(&argv("pressure --n-max 20 --override-guard")).is_ok());
        assert!(usage_err("measure --word abc"));
        assert!(usage_err("measure --bogus"));
        assert!(usage_err("frobnicate"));
        assert!(usage_err("measure --tolerance -3"));
        assert!(matches!(parse_args(&argv("--help")), Err(CliError::Info(_))));
    }

    #[test]
    fn config_file_merges_and_flags_win() {
        let dir = std::env::temp_dir().join(format!("odogibbs-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "# defaults\nseed=9\nmax_len=8\nformat=csv\n").unwrap();
        let p = parse_args(&argv(&format!("language --config {} --seed 3", path.display()))).unwrap();
        assert_eq!(p.common().seed, 3);
        assert_eq!(p.common().max_len, Some(8));
        assert_eq!(p.common().format, Format::Csv);
        std::fs::write(&path, "nonsense\n").unwrap();
        assert!(usage_err(&format!("language --config {}", path.display())));
    }

    #[test]
    fn events_parse() {
        let e = parse_event("0:A:in,1:E6:out,3:B7:in,2:A9:out").unwrap();
        assert_eq!(e.constraints().len(), 4);
        assert!(parse_event("0:A:in,0:A:out").is_err());
        assert!(parse_event("0:Q:in").is_err());
    }

    #[test]
    fn render_formats() {
        let plan = parse_args(&argv("measure --word bbbbb --tolerance 2^-16")).unwrap();
        let mut r = Report::new(&plan, &["event", "lo", "hi", "depth_used", "converged"]);
        let csv = String::from_utf8(render(&r, Format::Csv)).unwrap();
        assert_eq!(csv, "event,lo,hi,depth_used,converged\n");
        r.push(vec!["x".into(), dy(&DyadicRational::ratio(5, 5)), real(&RealInterval::point(0.5)), 3.into(), true.into()]);
        let csv = String::from_utf8(render(&r, Format::Csv)).unwrap();
        assert!(csv.contains("x,5*2^-5,\"[5.0000000000000000e-1,5.0000000000000000e-1]\",3,true\n"), "{csv}");
        let json = r.to_json();
        assert_eq!(json["meta"]["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(json["rows"][0]["lo"], "5*2^-5");
        let text = String::from_utf8(render(&r, Format::Text)).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("event"));
    }

    #[test]
    fn measure_is_deterministic() {
        let plan = parse_args(&argv("measure --word bb --tolerance 2^-20 --samples 2000 --seed 4 --format json")).unwrap();
        let a = render(&execute(&plan).unwrap(), Format::Json);
        let b = render(&execute(&plan).unwrap(), Format::Json);
        assert_eq!(a, b);
    }

    #[test]
    fn forced_failure_exits_one() {
        let plan = parse_args(&argv("gibbs-o --n-max 6 --threshold-scale 1e12")).unwrap();
        assert_eq!(execute(&plan).unwrap().exit_code(), EXIT_FAIL);
        let plan = parse_args(&argv("gibbs-o --n-max 6")).unwrap();
        assert_eq!(execute(&plan).unwrap().exit_code(), EXIT_PASS);
    }

    #[test]
    fn unconverged_exits_three() {
        let plan = parse_args(&argv("measure --word bbbbbbbb --tolerance 2^-60 --depth 14")).unwrap();
        assert_eq!(execute(&plan).unwrap().exit_code(), EXIT_UNCONVERGED);
    }
}
