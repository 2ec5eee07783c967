//! Command-line front end. Every option can come from a flag, from a
//! `key=value` config file, or from the built-in defaults, in that order of
//! precedence; the merged configuration is echoed as the first line of every
//! CSV output.

use crate::error::Error;
use crate::free_particle::{action_invert, energy_expectation, stability_deviation, FreeFamily};
use crate::hilbert::{moment_p, moment_q, norm, PhaseLabel, PhysicalParams, StateEvaluator};
use crate::iho::{
    action_system_solve, iho_coherent, iho_moment_q, stability_overlap_deviation, stability_remainder,
    C0Formula, C0Placement, IhoBasis, IhoFiducialParams, IhoOptions,
};
use crate::verify::{axiom_suite, default_action, Axiom, Family, SuiteOptions};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "regcoh", version, about = "Coherent states from regularized fiducials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Fiducial vector on a grid.
    Fiducial,
    /// Coherent state |q,p> on a grid.
    Coherent,
    /// e^{-i tau H/hbar}|q,p> on a grid.
    Evolve,
    /// Norm, position and momentum moments of |q,p>.
    Moments,
    /// Run the coherent-state axiom suite.
    Verify,
    /// Temporal-stability scaling table over A, delta or tau.
    Sweep,
    /// Action-angle round trip J -> (q, p) -> <H>.
    Action,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Fiducial => "fiducial",
            Command::Coherent => "coherent",
            Command::Evolve => "evolve",
            Command::Moments => "moments",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::Action => "action",
        }
    }
}

#[derive(Args, Debug, Default, Clone)]
pub struct CommonArgs {
    #[arg(long, global = true, value_name = "free|iho")]
    pub system: Option<String>,
    #[arg(long, global = true, value_name = "window|gaussian|bump")]
    pub scheme: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub hbar: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mass: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub omega: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k0: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k1: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kbar: Option<String>,
    /// Inverse variance of the Gaussian regularization.
    #[arg(long = "A", global = true, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub ebar: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub q: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub p: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tau: Option<String>,
    /// xmin:xmax:n
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, global = true)]
    pub out: Option<String>,
    #[arg(long, global = true, value_name = "csv|json")]
    pub format: Option<String>,
    #[arg(long, global = true)]
    pub tol: Option<String>,
    /// key=value file; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// all, or a comma list of axiom names.
    #[arg(long, global = true)]
    pub axiom: Option<String>,
    /// A, delta or tau.
    #[arg(long, global = true)]
    pub sweep: Option<String>,
    /// Comma list of sweep values.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub values: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub j: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub ktilde: Option<String>,
    /// Significant digits in CSV output.
    #[arg(long, global = true)]
    pub precision: Option<String>,
    /// Where C0(E) sits: inside or outside the E-integral.
    #[arg(long = "c0-placement", global = true)]
    pub c0_placement: Option<String>,
    /// normalized or displayed.
    #[arg(long = "c0-formula", global = true)]
    pub c0_formula: Option<String>,
}

impl CommonArgs {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("system", &self.system),
            ("scheme", &self.scheme),
            ("hbar", &self.hbar),
            ("mass", &self.mass),
            ("omega", &self.omega),
            ("k0", &self.k0),
            ("k1", &self.k1),
            ("kbar", &self.kbar),
            ("A", &self.a),
            ("ebar", &self.ebar),
            ("q", &self.q),
            ("p", &self.p),
            ("tau", &self.tau),
            ("grid", &self.grid),
            ("out", &self.out),
            ("format", &self.format),
            ("tol", &self.tol),
            ("seed", &self.seed),
            ("axiom", &self.axiom),
            ("sweep", &self.sweep),
            ("values", &self.values),
            ("j", &self.j),
            ("ktilde", &self.ktilde),
            ("precision", &self.precision),
            ("c0_placement", &self.c0_placement),
            ("c0_formula", &self.c0_formula),
        ]
    }
}

const DEFAULTS: &[(&str, &str)] = &[
    ("system", "free"),
    ("scheme", "gaussian"),
    ("hbar", "1"),
    ("mass", "1"),
    ("k0", "0"),
    ("k1", "2"),
    ("kbar", "1"),
    ("A", "10"),
    ("ebar", "1"),
    ("q", "0"),
    ("p", "0"),
    ("tau", "1"),
    ("grid", "-10:10:201"),
    ("format", "csv"),
    ("seed", "0"),
    ("axiom", "all"),
    ("precision", "12"),
    ("c0_placement", "inside"),
    ("c0_formula", "normalized"),
];

/// Keys that never appear in the provenance line.
const NOT_ECHOED: &[&str] = &["out", "config"];

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: if e.is_numeric() { EXIT_NUMERIC } else { EXIT_CONFIG },
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Reads a `key=value` file. `#` starts a comment; blank lines are skipped.
pub fn parse_config_file(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("config line {}: expected key=value", i + 1)))?;
        let key = canonical_key(k.trim()).ok_or_else(|| CliError::config(format!("config line {}: unknown key '{}'", i + 1, k.trim())))?;
        out.insert(key.to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn canonical_key(k: &str) -> Option<&'static str> {
    let k = k.trim_start_matches("--").replace('-', "_");
    let k = if k == "a" { "A".to_string() } else { k };
    CommonArgs::default().pairs().into_iter().map(|(n, _)| n).find(|n| *n == k)
}

/// Effective configuration: flags over file keys over defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> CliResult<Self> {
        let mut values: BTreeMap<String, String> = DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        if let Some(path) = &cli.common.config {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read config {path}: {e}")))?;
            values.extend(parse_config_file(&text)?);
        }
        for (k, v) in cli.common.pairs() {
            if let Some(v) = v {
                values.insert(k.to_string(), v.clone());
            }
        }
        Ok(RunConfig {
            command: cli.command,
            values,
        })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    fn f64(&self, key: &str) -> CliResult<f64> {
        let s = self.get(key).ok_or_else(|| CliError::config(format!("missing {key}")))?;
        let v: f64 = s.parse().map_err(|_| CliError::config(format!("{key}: '{s}' is not a number")))?;
        if !v.is_finite() {
            return Err(CliError::config(format!("{key} must be finite")));
        }
        Ok(v)
    }

    fn opt_f64(&self, key: &str) -> CliResult<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(_) => self.f64(key).map(Some),
        }
    }

    fn usize(&self, key: &str) -> CliResult<usize> {
        let s = self.get(key).unwrap_or("");
        s.parse().map_err(|_| CliError::config(format!("{key}: '{s}' is not a non-negative integer")))
    }

    pub fn system(&self) -> CliResult<&'static str> {
        match self.get("system").unwrap_or("") {
            "free" => Ok("free"),
            "iho" | "inverted_oscillator" => Ok("iho"),
            s => Err(CliError::config(format!("unknown system '{s}' (free, iho)"))),
        }
    }

    pub fn physical(&self) -> CliResult<PhysicalParams> {
        let omega = self.opt_f64("omega")?.unwrap_or(0.0);
        Ok(PhysicalParams::new(self.f64("hbar")?, self.f64("mass")?, omega)?)
    }

    pub fn free_family(&self) -> CliResult<FreeFamily> {
        let fam = match self.get("scheme").unwrap_or("") {
            "window" => FreeFamily::Window {
                k0: self.f64("k0")?,
                k1: self.f64("k1")?,
            },
            "gaussian" => FreeFamily::Gaussian {
                kbar: self.f64("kbar")?,
                a: self.f64("A")?,
            },
            "bump" => FreeFamily::Bump {
                k0: self.f64("k0")?,
                k1: self.f64("k1")?,
            },
            s => return Err(CliError::config(format!("unknown scheme '{s}' (window, gaussian, bump)"))),
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn iho_params(&self) -> CliResult<IhoFiducialParams> {
        if self.get("scheme") != Some("gaussian") {
            return Err(CliError::config("the inverted oscillator only has the gaussian scheme"));
        }
        let placement = match self.get("c0_placement").unwrap_or("") {
            "inside" => C0Placement::Inside,
            "outside" => C0Placement::Outside,
            s => return Err(CliError::config(format!("unknown c0_placement '{s}'"))),
        };
        let formula = match self.get("c0_formula").unwrap_or("") {
            "normalized" => C0Formula::Normalized,
            "displayed" => C0Formula::AsDisplayed,
            s => return Err(CliError::config(format!("unknown c0_formula '{s}'"))),
        };
        Ok(IhoFiducialParams::new(self.f64("ebar")?, self.f64("A")?)?.with_c0(placement, formula))
    }

    pub fn label(&self) -> CliResult<PhaseLabel> {
        Ok(PhaseLabel::new(self.f64("q")?, self.f64("p")?, self.f64("tau")?))
    }

    pub fn grid(&self) -> CliResult<Vec<f64>> {
        let s = self.get("grid").unwrap_or("");
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::config(format!("grid '{s}': expected xmin:xmax:n with n >= 2 and xmin < xmax"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if n < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(bad());
        }
        Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
    }

    pub fn json_output(&self) -> CliResult<bool> {
        match self.get("format").unwrap_or("") {
            "csv" => Ok(false),
            "json" => Ok(true),
            s => Err(CliError::config(format!("unknown format '{s}' (csv, json)"))),
        }
    }

    pub fn precision(&self) -> CliResult<usize> {
        let d = self.usize("precision")?;
        if !(1..=17).contains(&d) {
            return Err(CliError::config("precision must be between 1 and 17"));
        }
        Ok(d)
    }

    pub fn axioms(&self) -> CliResult<Vec<Axiom>> {
        let s = self.get("axiom").unwrap_or("all");
        if s == "all" {
            return Ok(Axiom::ALL.to_vec());
        }
        s.split(',')
            .map(|a| a.trim().parse::<Axiom>().map_err(|_| CliError::config(format!("unknown axiom '{a}'"))))
            .collect()
    }

    fn list(&self, key: &str) -> CliResult<Option<Vec<f64>>> {
        let Some(s) = self.get(key) else { return Ok(None) };
        let v: std::result::Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
        match v {
            Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(Some(v)),
            _ => Err(CliError::config(format!("{key}: '{s}' is not a comma list of numbers"))),
        }
    }

    /// `# regcoh <command> key=value ...` in key order.
    pub fn header(&self) -> String {
        let mut s = format!("# regcoh {}", self.command.name());
        for (k, v) in &self.values {
            if !NOT_ECHOED.contains(&k.as_str()) {
                s.push_str(&format!(" {k}={v}"));
            }
        }
        s
    }
}

/// `digits` significant digits, plain notation for moderate exponents.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let e = format!("{:.*e}", digits - 1, v);
    let (mant, exp) = e.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -4 || exp >= digits as i32 {
        let mant = strip_zeros(mant);
        return format!("{mant}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    strip_zeros(&format!("{v:.decimals$}")).to_string()
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Parses `args` and runs; returns the exit code. Diagnostics go to `err`.
pub fn run_from<I, T>(args: I, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<i32> {
    let cfg = RunConfig::resolve(cli)?;
    let (body, code) = render(&cfg)?;
    match cfg.get("out") {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::config(format!("cannot write {path}: {e}")))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes()).map_err(|e| CliError::config(e.to_string()))?;
        }
    }
    Ok(code)
}

/// The output text and the exit code for one configuration.
pub fn render(cfg: &RunConfig) -> CliResult<(String, i32)> {
    match cfg.command {
        Command::Fiducial | Command::Coherent | Command::Evolve => Ok((grid_output(cfg)?, EXIT_OK)),
        Command::Moments => Ok((moments_output(cfg)?, EXIT_OK)),
        Command::Verify => verify_output(cfg),
        Command::Sweep => Ok((sweep_output(cfg)?, EXIT_OK)),
        Command::Action => Ok((action_output(cfg)?, EXIT_OK)),
    }
}

fn iho_basis(cfg: &RunConfig, options: IhoOptions) -> CliResult<Arc<IhoBasis>> {
    Ok(IhoBasis::new(cfg.iho_params()?, options)?)
}

fn grid_state(cfg: &RunConfig) -> CliResult<StateEvaluator> {
    let label = cfg.label()?;
    if cfg.system()? == "free" {
        let fam = cfg.free_family()?;
        let params = cfg.physical()?;
        return Ok(match cfg.command {
            Command::Fiducial => fam.fiducial()?,
            Command::Coherent => fam.coherent(PhaseLabel::qp(label.q, label.p), params)?,
            _ => fam.evolved(label, params)?,
        });
    }
    match cfg.command {
        Command::Fiducial => Ok(iho_basis(cfg, IhoOptions::default())?.state(0.0, false)),
        Command::Coherent => Ok(iho_coherent(&iho_basis(cfg, IhoOptions::default())?, PhaseLabel::qp(label.q, label.p))),
        _ => {
            // spectral evolution needs the state's E-decomposition, which the
            // basis only has for the undisplaced fiducial
            if label.q != 0.0 || label.p != 0.0 {
                return Err(CliError::config("iho evolve supports only the label q = p = 0"));
            }
            let b = iho_basis(
                cfg,
                IhoOptions {
                    max_moment: 0,
                    t_max: label.tau.abs(),
                },
            )?;
            Ok(b.state(label.tau, false))
        }
    }
}

fn grid_output(cfg: &RunConfig) -> CliResult<String> {
    let xs = cfg.grid()?;
    let json_out = cfg.json_output()?;
    let digits = cfg.precision()?;
    let psi = grid_state(cfg)?;
    let rows: Vec<(f64, f64, f64, f64)> = xs
        .par_iter()
        .map(|&x| {
            let v = psi.amplitude(x);
            (x, v.re, v.im, v.norm_sqr())
        })
        .collect();
    if let Some(r) = rows.iter().find(|r| !(r.1.is_finite() && r.2.is_finite())) {
        return Err(Error::NonFinite { at: r.0 }.into());
    }
    if json_out {
        let v: Vec<Value> = rows.iter().map(|r| json!({ "x": r.0, "re": r.1, "im": r.2, "abs2": r.3 })).collect();
        return Ok(json_text(&Value::Array(v)));
    }
    let mut s = cfg.header();
    s.push_str("\nx,re,im,abs2\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig(r.0, digits),
            fmt_sig(r.1, digits),
            fmt_sig(r.2, digits),
            fmt_sig(r.3, digits)
        ));
    }
    Ok(s)
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

/// (name, value or error) pairs as CSV `quantity,value,status` or JSON.
fn table_output(cfg: &RunConfig, rows: &[(String, std::result::Result<f64, String>)]) -> CliResult<String> {
    let digits = cfg.precision()?;
    if cfg.json_output()? {
        let mut m = serde_json::Map::new();
        for (k, v) in rows {
            m.insert(
                k.clone(),
                match v {
                    Ok(x) => json!(x),
                    Err(e) => json!({ "error": e }),
                },
            );
        }
        return Ok(json_text(&Value::Object(m)));
    }
    let mut s = cfg.header();
    s.push_str("\nquantity,value,status\n");
    for (k, v) in rows {
        match v {
            Ok(x) => s.push_str(&format!("{k},{},ok\n", fmt_sig(*x, digits))),
            Err(e) => s.push_str(&format!("{k},nan,\"{}\"\n", e.replace('"', "'"))),
        }
    }
    Ok(s)
}

fn moments_output(cfg: &RunConfig) -> CliResult<String> {
    let label = cfg.label()?;
    let tol = cfg.opt_f64("tol")?.unwrap_or(1e-10);
    let keep = |r: crate::Result<f64>| -> CliResult<std::result::Result<f64, String>> {
        match r {
            Ok(v) => Ok(Ok(v)),
            Err(e) if e.is_numeric() => Err(e.into()),
            Err(e) => Ok(Err(e.to_string())),
        }
    };
    let mut rows: Vec<(String, std::result::Result<f64, String>)> = Vec::new();
    if cfg.system()? == "free" {
        let fam = cfg.free_family()?;
        let params = cfg.physical()?;
        let psi = fam.coherent(PhaseLabel::qp(label.q, label.p), params)?;
        let h = params.hbar;
        let n = norm(&psi, tol)?;
        let q1 = keep(moment_q(&psi, 1, tol))?;
        let q2 = keep(moment_q(&psi, 2, tol))?;
        let p1 = moment_p(&psi, 1, h, tol)?;
        let p2 = moment_p(&psi, 2, h, tol)?;
        let dp = (p2 - p1 * p1).max(0.0).sqrt();
        let dq = match (&q1, &q2) {
            (Ok(q1), Ok(q2)) => Ok((q2 - q1 * q1).max(0.0).sqrt()),
            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
        };
        rows.push(("norm".into(), Ok(n)));
        rows.push(("Q".into(), q1));
        rows.push(("Q2".into(), q2));
        rows.push(("P".into(), Ok(p1)));
        rows.push(("P2".into(), Ok(p2)));
        rows.push(("dQ".into(), dq.clone()));
        rows.push(("dP".into(), Ok(dp)));
        rows.push(("dQdP".into(), dq.map(|dq| dq * dp)));
        rows.push(("H".into(), Ok(energy_expectation(fam, label, params)?)));
    } else {
        let b = iho_basis(cfg, IhoOptions { max_moment: 1, t_max: 0.0 })?;
        let psi = iho_coherent(&b, PhaseLabel::qp(label.q, label.p));
        rows.push(("norm".into(), Ok(norm(&psi, tol)?)));
        rows.push(("Q".into(), Ok(iho_moment_q(&b, &psi, 1, tol)?)));
        rows.push(("Q2".into(), keep(iho_moment_q(&b, &psi, 2, tol))?));
        rows.push(("P".into(), Ok(moment_p(&psi, 1, 1.0, tol)?)));
        rows.push(("H".into(), Ok(crate::iho::energy_quadrature(&b, label, tol)?)));
    }
    table_output(cfg, &rows)
}

fn family(cfg: &RunConfig, options: IhoOptions) -> CliResult<Family> {
    if cfg.system()? == "free" {
        Ok(Family::free(cfg.free_family()?, cfg.physical()?)?)
    } else {
        Ok(Family::Iho {
            basis: iho_basis(cfg, options)?,
        })
    }
}

fn verify_output(cfg: &RunConfig) -> CliResult<(String, i32)> {
    let label = cfg.label()?;
    let axioms = cfg.axioms()?;
    let seed = cfg.get("seed").unwrap_or("0");
    let seed: u64 = seed.parse().map_err(|_| CliError::config(format!("seed: '{seed}' is not an integer")))?;
    let fam = family(
        cfg,
        IhoOptions {
            max_moment: 0,
            t_max: label.tau.abs(),
        },
    )?;
    let action = match cfg.opt_f64("j")? {
        Some(j) => Some((j, cfg.opt_f64("omega")?.map_or_else(|| default_action(&fam).map(|a| a.1), Ok)?)),
        None => None,
    };
    let opts = SuiteOptions {
        axioms,
        seed,
        label: PhaseLabel::qp(label.q, label.p),
        tau: label.tau,
        ktilde: cfg.opt_f64("ktilde")?,
        action,
        labels: None,
    };
    let mut reports = axiom_suite(&fam, &opts)?;
    // --tol replaces every pass tolerance (relative for temporal stability)
    if let Some(tol) = cfg.opt_f64("tol")? {
        for r in &mut reports {
            r.tolerance = if r.axiom == Axiom::TemporalStability { tol * r.predicted.abs() } else { tol };
            r.pass = (r.measured - r.predicted).abs() <= r.tolerance;
        }
    }
    let all = reports.iter().all(|r| r.pass);
    let v = serde_json::to_value(&reports).map_err(|e| CliError::config(e.to_string()))?;
    Ok((json_text(&v), if all { EXIT_OK } else { EXIT_FAILED }))
}

/// One row of a sweep table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub measured: f64,
    pub predicted: f64,
}

impl SweepRow {
    pub fn ratio(&self) -> f64 {
        if self.predicted == 0.0 {
            f64::NAN
        } else {
            self.measured / self.predicted
        }
    }
}

/// Phase-minimized stability deviation against its leading-order
/// prediction, one row per sweep value.
pub fn sweep_rows(cfg: &RunConfig) -> CliResult<Vec<SweepRow>> {
    let kind = cfg.get("sweep").ok_or_else(|| CliError::config("sweep needs --sweep A|delta|tau"))?;
    let label = cfg.label()?;
    let defaults: &[f64] = match kind {
        "A" | "a" => &[100.0, 1000.0, 10000.0],
        "delta" => &[0.4, 0.2, 0.1],
        "tau" => &[0.5, 1.0, 2.0],
        s => return Err(CliError::config(format!("unknown sweep '{s}' (A, delta, tau)"))),
    };
    let values = cfg.list("values")?.unwrap_or_else(|| defaults.to_vec());
    let tol = cfg.opt_f64("tol")?.unwrap_or(1e-12);
    let ktilde = cfg.opt_f64("ktilde")?;
    let l0 = PhaseLabel::qp(label.q, label.p);
    if cfg.system()? == "iho" {
        let base = cfg.iho_params()?;
        let row = |a: f64, t: f64, param: f64| -> CliResult<SweepRow> {
            let p = IhoFiducialParams::new(base.ebar, a)?.with_c0(base.placement, base.formula);
            let b = IhoBasis::new(p, IhoOptions { max_moment: 0, t_max: t.abs() })?;
            let (measured, _) = stability_overlap_deviation(&b, t, tol)?;
            let (closed, _) = stability_remainder(base.ebar, a, t, 1.0)?;
            Ok(SweepRow { param, measured, predicted: closed })
        };
        return values
            .iter()
            .map(|&v| match kind {
                "A" | "a" => row(v, label.tau, v),
                "tau" => row(base.a, v, v),
                _ => Err(CliError::config("the inverted oscillator has no delta sweep")),
            })
            .collect();
    }
    let fam = cfg.free_family()?;
    let params = cfg.physical()?;
    let row = |f: FreeFamily, tau: f64, param: f64| -> CliResult<SweepRow> {
        let (measured, pred) = stability_deviation(f, l0, tau, ktilde, params, tol)?;
        Ok(SweepRow {
            param,
            measured,
            predicted: pred.remainder_norm_sq,
        })
    };
    values
        .iter()
        .map(|&v| match (kind, fam) {
            ("A" | "a", FreeFamily::Gaussian { kbar, .. }) => row(FreeFamily::Gaussian { kbar, a: v }, label.tau, v),
            ("delta", FreeFamily::Window { k0, k1 }) => {
                let c = 0.5 * (k0 + k1);
                row(FreeFamily::Window { k0: c - v, k1: c + v }, label.tau, v)
            }
            ("delta", FreeFamily::Bump { k0, k1 }) => {
                let c = 0.5 * (k0 + k1);
                row(FreeFamily::Bump { k0: c - v, k1: c + v }, label.tau, v)
            }
            ("tau", f) => row(f, v, v),
            _ => Err(CliError::config(format!("sweep {kind} does not apply to the {} scheme", fam.name()))),
        })
        .collect()
}

fn sweep_output(cfg: &RunConfig) -> CliResult<String> {
    let rows = sweep_rows(cfg)?;
    if cfg.json_output()? {
        let v: Vec<Value> = rows
            .iter()
            .map(|r| json!({ "param": r.param, "measured": r.measured, "predicted": r.predicted, "ratio": r.ratio() }))
            .collect();
        return Ok(json_text(&Value::Array(v)));
    }
    let digits = cfg.precision()?;
    let mut s = cfg.header();
    s.push_str("\nparam,measured,predicted,ratio\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig(r.param, digits),
            fmt_sig(r.measured, digits),
            fmt_sig(r.predicted, digits),
            fmt_sig(r.ratio(), digits)
        ));
    }
    Ok(s)
}

fn action_output(cfg: &RunConfig) -> CliResult<String> {
    let tol = cfg.opt_f64("tol")?.unwrap_or(1e-12);
    let mut rows: Vec<(String, std::result::Result<f64, String>)> = Vec::new();
    if cfg.system()? == "free" {
        let fam = cfg.free_family()?;
        let params = cfg.physical()?;
        let fam_v = Family::free(fam, params)?;
        let (dj, domega) = default_action(&fam_v)?;
        let j = cfg.opt_f64("j")?.unwrap_or(dj);
        let omega = cfg.opt_f64("omega")?.unwrap_or(domega);
        let label = action_invert(fam, j, omega, params)?;
        let e = energy_expectation(fam, label, params)?;
        rows.extend([
            ("J".into(), Ok(j)),
            ("omega".into(), Ok(omega)),
            ("q".into(), Ok(label.q)),
            ("p".into(), Ok(label.p)),
            ("H".into(), Ok(e)),
            ("omegaJ".into(), Ok(omega * j)),
            ("residual".into(), Ok((e - omega * j).abs())),
        ]);
    } else {
        let b = iho_basis(cfg, IhoOptions { max_moment: 1, t_max: 0.0 })?;
        let fam_v = Family::Iho { basis: b.clone() };
        let (dj, domega) = default_action(&fam_v)?;
        let j = cfg.opt_f64("j")?.unwrap_or(dj);
        let omega = cfg.opt_f64("omega")?.unwrap_or(domega);
        let sys = action_system_solve(&b, j, omega, true, tol)?;
        rows.extend([
            ("J".into(), Ok(j)),
            ("omega".into(), Ok(omega)),
            ("q".into(), Ok(sys.solution.q)),
            ("p".into(), Ok(sys.solution.p)),
            ("K1".into(), Ok(sys.k1)),
            ("K2".into(), Ok(sys.k2)),
            ("H".into(), Ok(sys.energy_quadrature)),
            ("omegaJ".into(), Ok(omega * j)),
            ("residual".into(), Ok((sys.energy_quadrature - omega * j).abs())),
            ("system_residual".into(), Ok(sys.residuals[0].max(sys.residuals[1]))),
        ]);
    }
    table_output(cfg, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> RunConfig {
        let mut v = vec!["regcoh"];
        v.extend_from_slice(args);
        RunConfig::resolve(&Cli::try_parse_from(v).unwrap()).unwrap()
    }

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.0, 12), "0");
        assert_eq!(fmt_sig(1.0, 12), "1");
        assert_eq!(fmt_sig(-10.0, 12), "-10");
        assert_eq!(fmt_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(fmt_sig(2.0 / 3.0 * 1e-9, 12), "6.66666666667e-10");
        assert_eq!(fmt_sig(1.5e20, 12), "1.5e20");
        assert_eq!(fmt_sig(123456.789, 4), "1.235e5");
        assert_eq!(fmt_sig(f64::NAN, 12), "nan");
    }

    #[test]
    fn config_file_keys() {
        let m = parse_config_file("# c\nsystem = iho\nA=5 # width\n\n--kbar=2\n").unwrap();
        assert_eq!(m["system"], "iho");
        assert_eq!(m["A"], "5");
        assert_eq!(m["kbar"], "2");
        assert_eq!(parse_config_file("bogus=1").unwrap_err().code, EXIT_CONFIG);
        assert_eq!(parse_config_file("novalue").unwrap_err().code, EXIT_CONFIG);
    }

    #[test]
    fn flags_are_global_and_negative_values_parse() {
        let c = cfg(&["coherent", "--q", "-1.5", "--grid", "-3:3:7"]);
        assert_eq!(c.label().unwrap().q, -1.5);
        assert_eq!(c.grid().unwrap().len(), 7);
        assert!(cfg(&["fiducial", "--grid", "3:3:7"]).grid().is_err());
        assert!(cfg(&["fiducial", "--grid", "0:1:1"]).grid().is_err());
    }

    #[test]
    fn header_is_sorted_and_skips_out() {
        let c = cfg(&["fiducial", "--out", "/tmp/x.csv", "--scheme", "window"]);
        let h = c.header();
        assert!(h.starts_with("# regcoh fiducial A=10 axiom=all"));
        assert!(h.contains(" scheme=window"));
        assert!(!h.contains("out="));
    }

    #[test]
    fn error_codes() {
        let e: CliError = Error::NonConvergence {
            estimate: 0.0,
            error: 1.0,
            evaluations: 3,
        }
        .into();
        assert_eq!(e.code, EXIT_NUMERIC);
        let e: CliError = Error::InvalidWindow { k0: 1.0, k1: 0.0 }.into();
        assert_eq!(e.code, EXIT_CONFIG);
        let mut sink = Vec::new();
        assert_eq!(run_from(["regcoh", "fiducial", "--scheme", "nope"], &mut sink), EXIT_CONFIG);
        assert_eq!(run_from(["regcoh", "frobnicate"], &mut sink), EXIT_CONFIG);
    }

    #[test]
    fn window_grid_through_zero() {
        let (s, code) = render(&cfg(&["fiducial", "--scheme", "window", "--grid", "-1:1:3"])).unwrap();
        assert_eq!(code, 0);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[1], "x,re,im,abs2");
        assert_eq!(lines.len(), 5);
        // ψ(0) = √(Δk/2π) = 1/√π for k ∈ [0, 2]
        let row: Vec<f64> = lines[3].split(',').map(|v| v.parse().unwrap()).collect();
        assert!((row[3] - 1.0 / std::f64::consts::PI).abs() < 1e-11);
    }
}
