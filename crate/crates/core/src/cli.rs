//! Command-line front end: `curvflow run <experiment> [flags]`.
//!
//! Settings are resolved in three layers: built-in defaults, then an
//! optional key-value config file (top-level keys apply to every experiment,
//! a `[name]` section overrides them for that experiment), then flags.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crate::cones::{region_check, ConeParams, LambdaGrid};
use crate::error::{Error, Result};
use crate::flow::IntegratorConfig;
use crate::kv::{fmt_exact, parse_list, KvDocument};
use crate::liealg::{fiber_dim, MAX_DIM, MIN_DIM};
use crate::verify::{
    invariance_experiment, set_identity_experiment, tangent_cone_experiment,
    trace_identity_experiment, ExperimentReport, InvarianceConfig, SetIdentityConfig,
    TangentConfig, TraceConfig,
};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

pub const OUT_ENV: &str = "CURVFLOW_OUT";
pub const MANIFEST_NAME: &str = "manifest.sha256";

#[derive(Debug, Parser)]
#[command(name = "curvflow", version, about = "Curvature-operator ODE and cone invariance checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment, or all of them.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Invariance,
    TangentCone,
    SetIdentity,
    Trace,
    All,
}

impl Experiment {
    pub const EACH: [Experiment; 4] = [
        Self::Invariance,
        Self::TangentCone,
        Self::SetIdentity,
        Self::Trace,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Invariance => "invariance",
            Self::TangentCone => "tangent-cone",
            Self::SetIdentity => "set-identity",
            Self::Trace => "trace",
            Self::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Report,
    Trajectories,
    Both,
}

impl OutputFormat {
    fn parse(s: &str) -> Result<Self> {
        <Self as ValueEnum>::from_str(s, true)
            .map_err(|_| Error::InvalidConfig(format!("unknown format '{s}'")))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    pub experiment: Option<Experiment>,
    /// Manifold dimensions, comma separated (default depends on experiment).
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda2: Option<f64>,
    /// Parameter grid: `lattice:SIZE:NEAR` or `coarse:N1xN2:LO`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Invariance trajectories.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Samples per cell (tangent-cone), spectra (set-identity), or draws per
    /// grid point (trace).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dt0: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub norm_cap: Option<f64>,
    /// Relative tolerance of the main check.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory.
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Key-value config file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all available).
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Fully resolved settings for one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub ns: Vec<usize>,
    pub params: Option<ConeParams>,
    pub grid: Option<String>,
    pub trials: usize,
    pub samples: usize,
    pub seed: u64,
    pub integrator: IntegratorConfig,
    pub tol: Option<f64>,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub jobs: usize,
}

/// Values from the config file and flags, before defaults.
#[derive(Debug, Clone, Default)]
struct Layer {
    n: Option<Vec<usize>>,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    grid: Option<String>,
    trials: Option<usize>,
    samples: Option<usize>,
    seed: Option<u64>,
    dt0: Option<f64>,
    t_max: Option<f64>,
    norm_cap: Option<f64>,
    tol: Option<f64>,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
    jobs: Option<usize>,
}

const KNOWN_KEYS: [&str; 15] = [
    "experiment", "n", "lambda1", "lambda2", "grid", "trials", "samples", "seed", "dt0", "t_max",
    "norm_cap", "tol", "out", "format", "jobs",
];

impl Layer {
    fn from_args(a: &RunArgs) -> Self {
        Self {
            n: a.n.clone(),
            lambda1: a.lambda1,
            lambda2: a.lambda2,
            grid: a.grid.clone(),
            trials: a.trials,
            samples: a.samples,
            seed: a.seed,
            dt0: a.dt0,
            t_max: a.t_max,
            norm_cap: a.norm_cap,
            tol: a.tol,
            out: a.out.clone(),
            format: a.format,
            jobs: a.jobs,
        }
    }

    fn from_section(doc: &KvDocument, section: &str) -> Result<Self> {
        fn get<T: std::str::FromStr>(doc: &KvDocument, s: &str, k: &str) -> Result<Option<T>> {
            doc.get_parsed(s, k)
                .map_err(|e| Error::InvalidConfig(format!("config key '{k}': {e}")))
        }
        let n = match doc.get(section, "n") {
            Some(v) => Some(
                parse_list::<usize>(v)
                    .map_err(|e| Error::InvalidConfig(format!("config key 'n': {e}")))?,
            ),
            None => None,
        };
        Ok(Self {
            n,
            lambda1: get(doc, section, "lambda1")?,
            lambda2: get(doc, section, "lambda2")?,
            grid: doc.get(section, "grid").map(str::to_string),
            trials: get(doc, section, "trials")?,
            samples: get(doc, section, "samples")?,
            seed: get(doc, section, "seed")?,
            dt0: get(doc, section, "dt0")?,
            t_max: get(doc, section, "t_max")?,
            norm_cap: get(doc, section, "norm_cap")?,
            tol: get(doc, section, "tol")?,
            out: doc.get(section, "out").map(PathBuf::from),
            format: doc.get(section, "format").map(OutputFormat::parse).transpose()?,
            jobs: get(doc, section, "jobs")?,
        })
    }

    /// `self` wins wherever it is set.
    fn over(self, base: Layer) -> Layer {
        Layer {
            n: self.n.or(base.n),
            lambda1: self.lambda1.or(base.lambda1),
            lambda2: self.lambda2.or(base.lambda2),
            grid: self.grid.or(base.grid),
            trials: self.trials.or(base.trials),
            samples: self.samples.or(base.samples),
            seed: self.seed.or(base.seed),
            dt0: self.dt0.or(base.dt0),
            t_max: self.t_max.or(base.t_max),
            norm_cap: self.norm_cap.or(base.norm_cap),
            tol: self.tol.or(base.tol),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            jobs: self.jobs.or(base.jobs),
        }
    }
}

fn default_ns(e: Experiment) -> Vec<usize> {
    match e {
        Experiment::Invariance => vec![3, 4],
        _ => vec![3, 4, 5],
    }
}

fn default_samples(e: Experiment) -> usize {
    match e {
        Experiment::TangentCone | Experiment::SetIdentity | Experiment::Trace => 1000,
        _ => 0,
    }
}

fn validate_params(l1: Option<f64>, l2: Option<f64>) -> Result<Option<ConeParams>> {
    match (l1, l2) {
        (None, None) => Ok(None),
        (Some(a), Some(b)) => region_check(a, b)
            .map(|_| Some(ConeParams::new(a, b).expect("checked")))
            .map_err(|violation| Error::OutsideRegion {
                lambda1: a,
                lambda2: b,
                violation,
            }),
        _ => Err(Error::InvalidConfig(
            "lambda1 and lambda2 must be given together".into(),
        )),
    }
}

/// Parses `lattice:SIZE:NEAR` or `coarse:N1xN2:LO`.
pub fn parse_grid(spec: &str) -> Result<LambdaGrid> {
    let bad = || Error::InvalidConfig(format!("bad grid spec '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        ["lattice", size, near] => {
            let size: usize = size.parse().map_err(|_| bad())?;
            if size < 2 {
                return Err(bad());
            }
            LambdaGrid::lattice(size, near.parse().map_err(|_| bad())?)
        }
        ["coarse", shape, lo] => {
            let (a, b) = shape.split_once('x').ok_or_else(bad)?;
            let lo: f64 = lo.parse().map_err(|_| bad())?;
            if !(0.5..=1.0).contains(&lo) {
                return Err(bad());
            }
            LambdaGrid::coarse(
                a.parse().map_err(|_| bad())?,
                b.parse().map_err(|_| bad())?,
                lo,
            )
        }
        _ => return Err(bad()),
    };
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(grid)
}

/// Resolves the settings for each experiment selected by `args`.
pub fn resolve(args: &RunArgs) -> Result<Vec<RunConfig>> {
    let doc = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::InvalidConfig(format!("cannot read config {}: {e}", path.display()))
            })?;
            Some(KvDocument::parse(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?)
        }
        None => None,
    };
    if let Some(doc) = &doc {
        for section in doc.section_names() {
            let known = section.is_empty() || Experiment::EACH.iter().any(|e| e.name() == section);
            if !known {
                return Err(Error::InvalidConfig(format!("unknown config section [{section}]")));
            }
        }
        for section in std::iter::once("").chain(Experiment::EACH.iter().map(|e| e.name())) {
            if let Some(k) = doc.keys(section).find(|k| !KNOWN_KEYS.contains(k)) {
                return Err(Error::InvalidConfig(format!("unknown config key '{k}'")));
            }
        }
    }
    let experiment = match (args.experiment, doc.as_ref().and_then(|d| d.get("", "experiment"))) {
        (Some(e), _) => e,
        (None, Some(name)) => <Experiment as ValueEnum>::from_str(name, true)
            .map_err(|_| Error::InvalidConfig(format!("unknown experiment '{name}'")))?,
        (None, None) => return Err(Error::InvalidConfig("no experiment selected".into())),
    };
    let selected: Vec<Experiment> = match experiment {
        Experiment::All => Experiment::EACH.to_vec(),
        e => vec![e],
    };
    let flags = Layer::from_args(args);
    selected
        .into_iter()
        .map(|e| {
            let layer = match &doc {
                Some(d) => {
                    let top = Layer::from_section(d, "")?;
                    let sec = Layer::from_section(d, e.name())?;
                    flags.clone().over(sec.over(top))
                }
                None => flags.clone(),
            };
            finish(e, layer)
        })
        .collect()
}

fn finish(e: Experiment, l: Layer) -> Result<RunConfig> {
    let params = validate_params(l.lambda1, l.lambda2)?;
    let ns = l.n.unwrap_or_else(|| default_ns(e));
    if ns.is_empty() {
        return Err(Error::InvalidConfig("empty dimension list".into()));
    }
    for &n in &ns {
        if !(MIN_DIM..=MAX_DIM).contains(&n) {
            return Err(Error::DimensionOutOfRange(n));
        }
    }
    if let Some(g) = &l.grid {
        parse_grid(g)?;
    }
    let d = IntegratorConfig::default();
    let integrator = IntegratorConfig {
        dt0: l.dt0.unwrap_or(d.dt0),
        t_max: l.t_max.unwrap_or(d.t_max),
        norm_cap: l.norm_cap.unwrap_or(d.norm_cap),
        ..d
    };
    integrator.validate()?;
    if let Some(t) = l.tol {
        if !(t > 0.0) {
            return Err(Error::InvalidConfig("tol must be positive".into()));
        }
    }
    Ok(RunConfig {
        experiment: e,
        ns,
        params,
        grid: l.grid,
        trials: l.trials.unwrap_or(1000),
        samples: l.samples.unwrap_or_else(|| default_samples(e)),
        seed: l.seed.unwrap_or(0),
        integrator,
        tol: l.tol,
        out: l.out.unwrap_or_else(|| PathBuf::from("curvflow-out")),
        format: l.format.unwrap_or(OutputFormat::Report),
        jobs: l.jobs.unwrap_or(0),
    })
}

impl RunConfig {
    fn grid_or(&self, default: LambdaGrid) -> Result<LambdaGrid> {
        match (&self.grid, self.params) {
            (Some(g), _) => parse_grid(g),
            (None, Some(p)) if self.experiment != Experiment::SetIdentity => {
                Ok(LambdaGrid::from_points(vec![p]))
            }
            _ => Ok(default),
        }
    }

    /// Canonical text of every setting that influences results.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment = {}", self.experiment.name());
        let _ = writeln!(s, "n = {}", join(&self.ns, ","));
        match self.params {
            Some(p) => {
                let _ = writeln!(s, "lambda1 = {}", fmt_exact(p.lambda1()));
                let _ = writeln!(s, "lambda2 = {}", fmt_exact(p.lambda2()));
            }
            None => {
                let _ = writeln!(s, "params = default");
            }
        }
        let _ = writeln!(s, "grid = {}", self.grid.as_deref().unwrap_or("default"));
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "samples = {}", self.samples);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "dt0 = {}", fmt_exact(self.integrator.dt0));
        let _ = writeln!(s, "t_max = {}", fmt_exact(self.integrator.t_max));
        let _ = writeln!(s, "norm_cap = {}", fmt_exact(self.integrator.norm_cap));
        let _ = writeln!(s, "tol = {}", self.tol.map_or("default".into(), fmt_exact));
        s
    }

    /// `experiment_nA-B_params_sSEED_HASH`, where `HASH` abbreviates the
    /// canonical settings so that runs differing elsewhere do not collide.
    pub fn stem(&self) -> String {
        let params = match (self.params, &self.grid) {
            (_, Some(g)) => format!("grid-{}", g.replace(':', "-")),
            (Some(p), None) => format!("l{}-{}", p.lambda1(), p.lambda2()),
            (None, None) => "default".to_string(),
        };
        let hash = sha256_hex(self.canonical().as_bytes());
        format!(
            "{}_n{}_{}_s{}_{}",
            self.experiment.name(),
            join(&self.ns, "-"),
            params,
            self.seed,
            &hash[..12]
        )
    }

    pub fn execute(&self) -> Result<ExperimentReport> {
        match self.experiment {
            Experiment::Invariance => {
                let mut cfg = InvarianceConfig {
                    ns: self.ns.clone(),
                    params: self.params,
                    trials: self.trials,
                    seed: self.seed,
                    integrator: self.integrator.clone(),
                    jobs: self.jobs,
                    keep_trajectories: self.format != OutputFormat::Report,
                    ..Default::default()
                };
                if let Some(t) = self.tol {
                    cfg.tol_rel = t;
                }
                invariance_experiment(&cfg)
            }
            Experiment::TangentCone => {
                let mut cfg = TangentConfig {
                    ns: self.ns.clone(),
                    samples: self.samples,
                    seed: self.seed,
                    jobs: self.jobs,
                    ..Default::default()
                };
                cfg.grid = self.grid_or(cfg.grid.clone())?;
                if let Some(t) = self.tol {
                    cfg.tol_rel = t;
                }
                tangent_cone_experiment(&cfg)
            }
            Experiment::SetIdentity => {
                let mut cfg = SetIdentityConfig {
                    dims: self.ns.iter().map(|&n| fiber_dim(n)).collect(),
                    spectra: self.samples,
                    seed: self.seed,
                    jobs: self.jobs,
                    ..Default::default()
                };
                cfg.grid = self.grid_or(cfg.grid.clone())?;
                if let Some(t) = self.tol {
                    cfg.tol = t;
                }
                set_identity_experiment(&cfg)
            }
            Experiment::Trace => {
                let mut cfg = TraceConfig {
                    ns: self.ns.clone(),
                    random_samples: self.samples,
                    cone_samples: self.samples,
                    seed: self.seed,
                    jobs: self.jobs,
                    ..Default::default()
                };
                cfg.grid = self.grid_or(cfg.grid.clone())?;
                if let Some(t) = self.tol {
                    cfg.sign_tol = t;
                }
                trace_identity_experiment(&cfg)
            }
            Experiment::All => Err(Error::InvalidConfig("'all' is not a single experiment".into())),
        }
    }
}

fn join<T: ToString>(v: &[T], sep: &str) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Files written by one run, relative to the output directory.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub reports: Vec<ExperimentReport>,
    pub files: Vec<PathBuf>,
}

impl RunOutput {
    pub fn exit_code(&self) -> u8 {
        if self.reports.iter().all(ExperimentReport::passed) {
            EXIT_PASS
        } else {
            EXIT_VIOLATION
        }
    }
}

fn write_file(out: &Path, rel: &Path, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = out.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
    files.push(rel.to_path_buf());
    Ok(())
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidConfig(format!("cannot write {}: {e}", path.display()))
}

/// Runs every configuration, writing reports, trajectories and the manifest.
pub fn execute_all(configs: &[RunConfig]) -> Result<RunOutput> {
    let mut output = RunOutput::default();
    let Some(first) = configs.first() else {
        return Ok(output);
    };
    let out = &first.out;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    for cfg in configs {
        let mut report = cfg.execute()?;
        let stem = cfg.stem();
        if cfg.format != OutputFormat::Trajectories {
            let mut doc = report.to_kv();
            let settings = KvDocument::parse(&cfg.canonical()).expect("canonical text parses");
            for k in settings.keys("") {
                doc.set("config", k, settings.get("", k).unwrap_or_default());
            }
            write_file(out, Path::new(&format!("{stem}.report")), &doc.render(), &mut output.files)?;
            write_file(out, Path::new(&format!("{stem}.summary")), &report.summary(), &mut output.files)?;
        }
        for (name, contents) in std::mem::take(&mut report.artifacts) {
            let rel = PathBuf::from(format!("{stem}.trajectories")).join(name);
            write_file(out, &rel, &contents, &mut output.files)?;
        }
        output.reports.push(report);
    }
    let mut manifest = String::new();
    for rel in &output.files {
        let bytes = fs::read(out.join(rel)).map_err(|e| io_err(rel, e))?;
        let _ = writeln!(manifest, "{}  {}", sha256_hex(&bytes), rel.display());
    }
    fs::write(out.join(MANIFEST_NAME), manifest).map_err(|e| io_err(out, e))?;
    output.files.push(PathBuf::from(MANIFEST_NAME));
    Ok(output)
}

/// Entry point shared by the binary and tests. Returns the exit status.
pub fn run(cli: Cli) -> u8 {
    let Command::Run(args) = cli.command;
    let configs = match resolve(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return EXIT_CONFIG;
        }
    };
    match execute_all(&configs) {
        Ok(output) => {
            for r in &output.reports {
                print!("{}", r.summary());
            }
            println!("wrote {} files to {}", output.files.len(), configs[0].out.display());
            output.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> RunArgs {
        let mut full = vec!["curvflow", "run"];
        full.extend_from_slice(list);
        let Command::Run(a) = Cli::try_parse_from(full).unwrap().command;
        a
    }

    #[test]
    fn flags_resolve() {
        let c = resolve(&args(&["invariance", "--n", "3,4", "--lambda1", "1", "--lambda2", "0"])).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].ns, vec![3, 4]);
        assert_eq!(c[0].params, Some(ConeParams::two_nonneg()));
        assert_eq!(resolve(&args(&["all"])).unwrap().len(), 4);
    }

    #[test]
    fn region_violation_is_named() {
        let err = resolve(&args(&["invariance", "--lambda1", "0.5", "--lambda2", "0.9"])).unwrap_err();
        assert!(err.to_string().contains("lambda2 <= lambda1"), "{err}");
        assert!(resolve(&args(&["invariance", "--lambda1", "0.9"])).is_err());
    }

    #[test]
    fn grid_specs() {
        assert_eq!(parse_grid("coarse:5x5:0.55").unwrap().len(), 25);
        assert!(parse_grid("lattice:50:20").unwrap().contains_corner());
        for bad in ["coarse:5:0.55", "lattice:x:3", "box:3:3", "coarse:3x3:0.1"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn file_then_flags() {
        let dir = std::env::temp_dir().join(format!("curvflow-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        fs::write(
            &path,
            "experiment = trace\nseed = 5\nsamples = 7\n[trace]\nseed = 6\nn = 3,5\n",
        )
        .unwrap();
        let mut a = args(&["--seed", "9"]);
        a.config = Some(path.clone());
        let c = resolve(&a).unwrap();
        assert_eq!(c[0].experiment, Experiment::Trace);
        assert_eq!(c[0].seed, 9);
        assert_eq!(c[0].samples, 7);
        assert_eq!(c[0].ns, vec![3, 5]);

        fs::write(&path, "bogus = 1\n").unwrap();
        assert!(resolve(&a).is_err());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn stems_differ_with_settings() {
        let a = resolve(&args(&["trace", "--samples", "5"])).unwrap();
        let b = resolve(&args(&["trace", "--samples", "6"])).unwrap();
        assert_ne!(a[0].stem(), b[0].stem());
        assert!(a[0].stem().starts_with("trace_n3-4-5_default_s0_"));
    }
}
