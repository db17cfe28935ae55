//! Batch experiment runner.
//!
//! An [`ExperimentConfig`] comes from command-line flags, an optional
//! `key = value` file mirroring the flags, or both (flags win). [`run`] solves
//! the requested refinement grid and writes one table per `(m, component)`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::analysis::{
    perturbation_study_with_rule, refinement_solutions_with_rule, report_from_solutions,
    ConvergenceReport, ErrorKind,
};
use crate::assembly::default_rule;
use crate::basis::{gauss_rule, QuadRule, MAX_ORDER};
use crate::error::{Error, Result};
use crate::problems::{builtin, first_kind_part};
use crate::spectral::{build, verify_identities, DEFAULT_IDENTITY_TOL};

/// Environment variable overriding the output directory of the config file
/// and the default (an explicit `--out` still wins).
pub const OUT_DIR_ENV: &str = "DG_IAE_OUT_DIR";

pub const DEFAULT_OUT_DIR: &str = "results";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Global,
    Superconv,
    Perturbed,
    Identities,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ComponentSel {
    #[value(name = "1")]
    First,
    #[value(name = "2")]
    Second,
    Both,
}

impl ComponentSel {
    /// 0-based component indices.
    pub fn indices(self) -> &'static [usize] {
        match self {
            ComponentSel::First => &[0],
            ComponentSel::Second => &[1],
            ComponentSel::Both => &[0, 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Md,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Md => "md",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// `ex1`, `ex2` or `ex3`.
    pub problem: String,
    pub m_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub mode: Mode,
    pub component: ComponentSel,
    /// Perturbation exponent, required iff `mode` is `Perturbed`.
    pub m1: Option<i32>,
    /// Gauss nodes per direction for the moments; `m + 6` when unset.
    pub quad_points: Option<usize>,
    pub out_dir: PathBuf,
    pub format: Format,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: "ex1".into(),
            m_list: vec![3, 4, 5, 6],
            n_list: vec![4, 8, 16, 32],
            mode: Mode::Global,
            component: ComponentSel::First,
            m1: None,
            quad_points: None,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
            format: Format::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_list.is_empty() {
            return Err(Error::invalid("empty --m list"));
        }
        if let Some(&m) = self.m_list.iter().find(|&&m| !(1..=MAX_ORDER).contains(&m)) {
            return Err(Error::invalid(format!("basis order {m} outside 1..={MAX_ORDER}")));
        }
        if self.mode == Mode::Perturbed && self.m1.is_none() {
            return Err(Error::invalid("--m1 is required with --mode perturbed"));
        }
        if self.mode != Mode::Perturbed && self.m1.is_some() {
            return Err(Error::invalid("--m1 is only meaningful with --mode perturbed"));
        }
        if self.mode == Mode::Identities {
            return Ok(());
        }
        builtin(&self.problem)?;
        if self.n_list.len() < 2 {
            return Err(Error::invalid("--N needs at least two interval counts"));
        }
        if self.n_list[0] < 2 {
            return Err(Error::invalid("--N entries must be at least 2"));
        }
        if let Some(w) = self.n_list.windows(2).find(|w| w[1] != 2 * w[0]) {
            return Err(Error::invalid(format!(
                "--N must double: {} -> {}",
                w[0], w[1]
            )));
        }
        if let Some(q) = self.quad_points {
            if q == 0 {
                return Err(Error::invalid("--quad-points must be positive"));
            }
        }
        Ok(())
    }

    fn rule(&self, m: usize) -> Result<QuadRule> {
        match self.quad_points {
            Some(q) => gauss_rule(q),
            None => default_rule(m),
        }
    }

    /// Applies one `key = value` setting. Keys mirror the long flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "problem" => self.problem = value.to_string(),
            "m" => self.m_list = parse_m_list(value)?,
            "N" => self.n_list = parse_n_list(value)?,
            "mode" => self.mode = parse_enum(value)?,
            "component" => self.component = parse_enum(value)?,
            "m1" => self.m1 = Some(parse_num(value, "m1")?),
            "quad-points" | "quad_points" => self.quad_points = Some(parse_num(value, "quad-points")?),
            "out" => self.out_dir = PathBuf::from(value),
            "format" => self.format = parse_enum(value)?,
            other => return Err(Error::invalid(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies every line of a config file. Blank lines and `#` comments are
    /// skipped.
    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!("config line {}: expected key = value", lineno + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }
}

fn parse_enum<T: ValueEnum>(s: &str) -> Result<T> {
    T::from_str(s, true).map_err(Error::invalid)
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("{what}: cannot parse `{s}`")))
}

/// Parses `3,4,5`, an inclusive range `1..8`, or a mix such as `1..3,6`.
pub fn parse_m_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (parse_num(a, "m")?, parse_num(b, "m")?);
                if a > b {
                    return Err(Error::invalid(format!("empty range `{part}`")));
                }
                out.extend(a..=b);
            }
            None => out.push(parse_num(part, "m")?),
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("empty --m list"));
    }
    Ok(out)
}

pub fn parse_n_list(s: &str) -> Result<Vec<usize>> {
    let out = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| parse_num(p, "N"))
        .collect::<Result<Vec<usize>>>()?;
    if out.is_empty() {
        return Err(Error::invalid("empty --N list"));
    }
    Ok(out)
}

/// Command-line flags. Unset flags fall back to the config file, then to
/// [`ExperimentConfig::default`].
#[derive(Debug, Parser)]
#[command(name = "dg-iae", version, about = "DG convergence experiments for index-2 integral-algebraic equations")]
pub struct Cli {
    /// Plain-text `key = value` file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in problem: ex1, ex2 or ex3.
    #[arg(long)]
    pub problem: Option<String>,
    /// Basis orders: comma list or inclusive range such as 1..8.
    #[arg(long = "m")]
    pub m: Option<String>,
    /// Doubling interval counts, comma separated.
    #[arg(long = "N")]
    pub n: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_enum)]
    pub component: Option<ComponentSel>,
    /// Perturbation exponent for --mode perturbed.
    #[arg(long)]
    pub m1: Option<i32>,
    /// Gauss nodes per direction for the moment integrals.
    #[arg(long)]
    pub quad_points: Option<usize>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Cli {
    pub fn into_config(self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file_text(&fs::read_to_string(path)?)?;
        }
        if let Some(p) = self.problem {
            cfg.problem = p;
        }
        if let Some(m) = self.m {
            cfg.m_list = parse_m_list(&m)?;
        }
        if let Some(n) = self.n {
            cfg.n_list = parse_n_list(&n)?;
        }
        if let Some(mode) = self.mode {
            cfg.mode = mode;
        }
        if let Some(c) = self.component {
            cfg.component = c;
        }
        if self.m1.is_some() {
            cfg.m1 = self.m1;
        }
        if self.quad_points.is_some() {
            cfg.quad_points = self.quad_points;
        }
        if let Some(out) = self.out {
            cfg.out_dir = out;
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Written files in creation order.
    pub files: Vec<PathBuf>,
    pub reports: Vec<ConvergenceReport>,
    /// False when a spectral identity exceeded its tolerance.
    pub passed: bool,
}

/// `%.2E` with a two-digit exponent, e.g. `1.70E-06`.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.2E}");
    let (mant, exp) = s.split_once('E').expect("E format has an exponent");
    let exp: i32 = exp.parse().expect("E format exponent is an integer");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}E{sign}{:02}", exp.abs())
}

fn format_order(x: f64) -> String {
    format!("{x:.3}")
}

/// Renders a report as `N,error,order` CSV or as a markdown table with a
/// final `Order` row.
pub fn emit_table(report: &ConvergenceReport, format: Format) -> String {
    let mut out = String::new();
    let order_cell = |i: usize| {
        if i == 0 {
            String::new()
        } else {
            format_order(report.orders[i - 1].value)
        }
    };
    match format {
        Format::Csv => {
            out.push_str("N,error,order\n");
            for (i, (n, e)) in report.rows.iter().enumerate() {
                let _ = writeln!(out, "{n},{},{}", format_sci(*e), order_cell(i));
            }
        }
        Format::Md => {
            let _ = writeln!(
                out,
                "{} m = {}, x{} ({})\n",
                report.problem_id,
                report.m,
                report.component + 1,
                report.kind
            );
            out.push_str("| N | error | order |\n|---|---|---|\n");
            for (i, (n, e)) in report.rows.iter().enumerate() {
                let _ = writeln!(out, "| {n} | {} | {} |", format_sci(*e), order_cell(i));
            }
            let fin = report
                .final_order()
                .map(|o| format_order(o.value))
                .unwrap_or_default();
            let _ = writeln!(out, "| Order |  | {fin} |");
        }
    }
    out
}

/// One parsed CSV row: `N`, error and the order (absent on the first row).
pub type CsvRow = (usize, f64, Option<f64>);

/// Parses CSV produced by [`emit_table`].
pub fn parse_csv_table(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    if lines.next() != Some("N,error,order") {
        return Err(Error::invalid("missing `N,error,order` header"));
    }
    lines
        .map(|line| {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 3 {
                return Err(Error::invalid(format!("bad CSV row `{line}`")));
            }
            let order = if cells[2].is_empty() {
                None
            } else {
                Some(parse_num(cells[2], "order")?)
            };
            Ok((parse_num(cells[0], "N")?, parse_num(cells[1], "error")?, order))
        })
        .collect()
}

fn write_file(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text)?;
    files.push(path);
    Ok(())
}

fn identities_table(cfg: &ExperimentConfig) -> Result<(String, bool)> {
    let mut out = String::new();
    let mut passed = true;
    match cfg.format {
        Format::Csv => out.push_str("m,identity,residual\n"),
        Format::Md => out.push_str("| m | identity | residual |\n|---|---|---|\n"),
    }
    for &m in &cfg.m_list {
        let rep = verify_identities(&build(m)?, DEFAULT_IDENTITY_TOL);
        passed &= rep.passed();
        for r in &rep.residuals {
            let res = format_sci(r.residual);
            match cfg.format {
                Format::Csv => {
                    let _ = writeln!(out, "{m},\"{}\",{res}", r.name);
                }
                Format::Md => {
                    let _ = writeln!(out, "| {m} | `{}` | {res} |", r.name);
                }
            }
        }
    }
    Ok((out, passed))
}

/// Runs the experiment and writes its tables into `cfg.out_dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    let ext = cfg.format.extension();
    let mut files = Vec::new();
    let mut reports = Vec::new();

    if cfg.mode == Mode::Identities {
        let (text, passed) = identities_table(cfg)?;
        write_file(&cfg.out_dir, &format!("identities.{ext}"), &text, &mut files)?;
        return Ok(RunOutcome {
            files,
            reports,
            passed,
        });
    }

    let problem = builtin(&cfg.problem)?;
    let context = |m: usize| {
        let name = cfg.problem.clone();
        move |e: Error| Error::Experiment {
            problem: name,
            m,
            source: Box::new(e),
        }
    };
    for &m in &cfg.m_list {
        let rule = cfg.rule(m)?;
        match cfg.mode {
            Mode::Perturbed => {
                let m1 = cfg.m1.expect("validated");
                let base = first_kind_part(&problem)?;
                let rep = perturbation_study_with_rule(&base, m, m1, &cfg.n_list, &rule)
                    .map_err(context(m))?;
                let name = format!("{}_perturbed_m{m}_m1-{m1}.{ext}", cfg.problem);
                write_file(&cfg.out_dir, &name, &emit_table(&rep, cfg.format), &mut files)?;
                reports.push(rep);
            }
            Mode::Global | Mode::Superconv => {
                let kind = if cfg.mode == Mode::Global {
                    ErrorKind::Global
                } else {
                    ErrorKind::Superconv
                };
                let sols = refinement_solutions_with_rule(&problem, m, &cfg.n_list, &rule)
                    .map_err(context(m))?;
                for &c in cfg.component.indices() {
                    let rep = report_from_solutions(&problem, &sols, kind, c).map_err(context(m))?;
                    let name = format!("{}_{kind}_m{m}_x{}.{ext}", cfg.problem, c + 1);
                    write_file(&cfg.out_dir, &name, &emit_table(&rep, cfg.format), &mut files)?;
                    reports.push(rep);
                }
            }
            Mode::Identities => unreachable!(),
        }
    }
    Ok(RunOutcome {
        files,
        reports,
        passed: true,
    })
}

/// Entry point behind the binary: usage errors exit with 2, solver failures
/// and failed identity checks with 1.
pub fn execute(cli: Cli) -> ExitCode {
    let cfg = match cli.into_config() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("dg-iae: {e}\nrun with --help for usage");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("dg-iae: spectral identity residual above {DEFAULT_IDENTITY_TOL:e}");
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("dg-iae: {e}");
            ExitCode::FAILURE
        }
    }
}
