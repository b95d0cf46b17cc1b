//! Subcommand bodies: resolve parameters, run, write CSV.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anderson_core::config::{parse_grid, parse_int_list, read_config, ConfigFile};
use anderson_core::dynamics::{InitialState, PropagatorConfig};
use anderson_core::ensemble::{critical_points, decay_fit, run_critical_lambda, run_sweep};
use anderson_core::fitting::fit_exp_double;
use anderson_core::output::{
    fit_table, read_table_file, sweep_table, write_table, write_table_file, RunManifest, Table,
    Value,
};
use anderson_core::{selfcheck, Boundary, DisorderConfig, Error, Observable, State, SweepConfig};
use log::{info, warn};
use num_complex::Complex64;

use crate::Common;

pub const WORKERS_ENV: &str = "ANDERSON_ENT_WORKERS";

/// Values below this are treated as numerically zero when fitting decay profiles.
const DECAY_FLOOR: f64 = 1e-8;

const KNOWN_KEYS: &[&str] = &[
    "size",
    "lambdas",
    "realizations",
    "seed",
    "bc",
    "hopping",
    "v0",
    "workers",
    "offset",
    "offsets",
    "init",
    "site",
    "state-file",
    "total-time",
    "dt",
    "stride",
];

// written into manifests; accepted so a manifest block can be reused as a recipe
const MANIFEST_ONLY_KEYS: &[&str] = &["command", "version", "output", "started_unix", "wall_time_s"];

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Display) -> Self {
        Self {
            code: 2,
            kind: "usage",
            message: message.to_string(),
        }
    }

    fn config(message: impl Display) -> Self {
        Self {
            code: 3,
            kind: "config",
            message: message.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Io { .. } | Error::Csv { .. } => (5, "io"),
            e if e.is_numeric() => (4, "numeric"),
            _ => (3, "config"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

struct Ctx<'a> {
    common: &'a Common,
    file: ConfigFile,
    started: Instant,
    started_unix: u64,
}

impl<'a> Ctx<'a> {
    fn new(common: &'a Common) -> Result<Self, Failure> {
        let file = match &common.config {
            Some(path) => read_config(path)?,
            None => ConfigFile::default(),
        };
        if let Some(key) = file
            .keys()
            .find(|k| !KNOWN_KEYS.contains(k) && !MANIFEST_ONLY_KEYS.contains(k))
        {
            return Err(Failure::config(format!("unknown config key '{key}'")));
        }
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Ok(Self {
            common,
            file,
            started: Instant::now(),
            started_unix,
        })
    }

    /// Flag, else config file, else `default`.
    fn pick<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, Failure>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        Ok(self.file.parse_value(key)?.unwrap_or(default))
    }

    fn pick_text(&self, flag: Option<String>, key: &str, default: &str) -> String {
        flag.or_else(|| self.file.get(key).map(str::to_string))
            .unwrap_or_else(|| default.to_string())
    }

    fn workers(&self) -> Result<Option<usize>, Failure> {
        if let Some(w) = self.common.workers {
            return Ok(Some(w));
        }
        if let Some(w) = self.file.parse_value::<usize>("workers")? {
            return Ok(Some(w));
        }
        match std::env::var(WORKERS_ENV) {
            Ok(v) if !v.trim().is_empty() => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| Failure::config(format!("{WORKERS_ENV}='{v}' is not a count"))),
            _ => Ok(None),
        }
    }

    fn lambdas(&self, default: &str) -> Result<(String, Vec<f64>), Failure> {
        let raw = self.pick_text(self.common.lambdas.clone(), "lambdas", default);
        let grid = parse_grid(&raw)?;
        Ok((raw, grid))
    }

    /// Lattice recipe with the master seed, plus a manifest carrying it.
    fn base(
        &self,
        command: &str,
        default_realizations: usize,
        default_lambdas: &str,
    ) -> Result<(DisorderConfig, Vec<f64>, usize, RunManifest), Failure> {
        let c = self.common;
        let size = self.pick(c.size, "size", 1600)?;
        let seed = self.pick(c.seed, "seed", 1)?;
        let bc = self.pick(c.bc, "bc", Boundary::Periodic)?;
        let hopping = self.pick(c.hopping, "hopping", 1.0)?;
        let v0 = self.pick(c.v0, "v0", 0.0)?;
        let realizations = self.pick(c.realizations, "realizations", default_realizations)?;
        let (raw, lambdas) = self.lambdas(default_lambdas)?;
        let base = DisorderConfig::new(size)
            .with_seed(seed)
            .with_boundary(bc)
            .with_hopping(hopping)
            .with_offset(v0);
        base.validate()?;

        let mut manifest = RunManifest::new(command, seed);
        manifest
            .param("size", size)
            .param("bc", bc)
            .param("hopping", hopping)
            .param("v0", v0)
            .param("lambdas", raw)
            .param("realizations", realizations);
        Ok((base, lambdas, realizations, manifest))
    }

    /// Write `main` to `--output` (or stdout) and `extra` next to it as
    /// `<stem>.<suffix>.csv` (or to stderr).
    fn emit(&self, mut manifest: RunManifest, main: &Table, extra: Option<(&str, Table)>) -> Outcome {
        let extra_path = match (&self.common.output, &extra) {
            (Some(path), Some((suffix, _))) => Some(sibling(path, suffix)),
            _ => None,
        };
        if let Some(path) = &self.common.output {
            manifest.outputs.push(path.display().to_string());
        }
        if let Some(path) = &extra_path {
            manifest.outputs.push(path.display().to_string());
        }
        if !self.common.no_timestamp {
            manifest.timing = Some((self.started_unix, self.started.elapsed().as_secs_f64()));
        }

        match &self.common.output {
            Some(path) => write_table_file(path, Some(&manifest), main)?,
            None => write_table(std::io::stdout().lock(), Some(&manifest), main).map_err(|source| {
                Error::Io {
                    path: "<stdout>".into(),
                    source,
                }
            })?,
        }
        if let Some((_, table)) = extra {
            match &extra_path {
                Some(path) => write_table_file(path, Some(&manifest), &table)?,
                None => write_table(std::io::stderr().lock(), None, &table).map_err(|source| {
                    Error::Io {
                        path: "<stderr>".into(),
                        source,
                    }
                })?,
            }
        }
        Ok(())
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

pub fn ground_scan(common: &Common) -> Outcome {
    let ctx = Ctx::new(common)?;
    let (base, lambdas, realizations, manifest) = ctx.base("ground-scan", 50, "0:2:0.05")?;
    let cfg = SweepConfig::new(base, lambdas.clone(), realizations, Observable::AvgConcurrence);
    let res = run_sweep(&cfg, ctx.workers()?)?;
    let table = sweep_table(&res, "mean_avg_concurrence");

    let curve = res.scalar_curve();
    let fit = if lambdas.len() >= 6 {
        match fit_exp_double(&lambdas, &curve) {
            Ok(fit) => {
                info!("double-exponential fit: {:?}, r2 = {}", fit.params, fit.r2);
                Some(("fit", fit_table(&fit)))
            }
            Err(e) => {
                warn!("double-exponential fit skipped: {e}");
                None
            }
        }
    } else {
        None
    };
    ctx.emit(manifest, &table, fit)
}

pub fn nn_dist(common: &Common) -> Outcome {
    let ctx = Ctx::new(common)?;
    let (base, lambdas, realizations, manifest) =
        ctx.base("nn-dist", 1, "0,0.01,0.05,0.1,0.5,1")?;
    let cfg = SweepConfig::new(base, lambdas, realizations, Observable::NnProfile);
    let res = run_sweep(&cfg, ctx.workers()?)?;
    ctx.emit(manifest, &sweep_table(&res, "mean_concurrence"), None)
}

pub fn center_pair(common: &Common, offset: Option<isize>) -> Outcome {
    let ctx = Ctx::new(common)?;
    let offset = ctx.pick(offset, "offset", 1)?;
    let (base, lambdas, realizations, mut manifest) = ctx.base("center-pair", 50, "0:2:0.1")?;
    manifest.param("offset", offset);
    let cfg = SweepConfig::new(
        base,
        lambdas.clone(),
        realizations,
        Observable::CenterPair(vec![offset]),
    );
    let res = run_sweep(&cfg, ctx.workers()?)?;
    let peak = &critical_points(&[offset], &lambdas, &res.mean)?[0];
    let mut peak_table = Table::new(["param", "value"]);
    peak_table.rows.push(vec![Value::Text("lambda_star".into()), peak.lambda_c.into()]);
    peak_table.rows.push(vec![Value::Text("peak_value".into()), peak.peak_value.into()]);
    peak_table.rows.push(vec![Value::Text("is_interior".into()), peak.is_interior.into()]);
    ctx.emit(manifest, &sweep_table(&res, "mean_concurrence"), Some(("peak", peak_table)))
}

pub fn critical_lambda(common: &Common, offsets: Option<String>) -> Outcome {
    let ctx = Ctx::new(common)?;
    let raw = ctx.pick_text(offsets, "offsets", "1:6");
    let offsets = parse_int_list(&raw)?;
    let (base, lambdas, realizations, mut manifest) =
        ctx.base("critical-lambda", 50, "0:2:0.05")?;
    manifest.param("offsets", &raw);
    let res = run_critical_lambda(&base, &offsets, &lambdas, realizations, ctx.workers()?)?;

    let mut table = Table::new(["offset", "lambda_c", "peak_value", "is_interior"]);
    for p in &res.points {
        table.rows.push(vec![
            p.offset.into(),
            p.lambda_c.into(),
            p.peak_value.into(),
            p.is_interior.into(),
        ]);
    }
    if res.fit.is_none() {
        warn!("no exponential fit of lambda_c (needs four offsets and a nondegenerate curve)");
    }
    ctx.emit(manifest, &table, res.fit.as_ref().map(|f| ("fit", fit_table(f))))
}

pub fn decay_profile(common: &Common) -> Outcome {
    let ctx = Ctx::new(common)?;
    let (base, lambdas, realizations, manifest) = ctx.base("decay-profile", 50, "0.5,1")?;
    let cfg = SweepConfig::new(base, lambdas.clone(), realizations, Observable::CenterProfile);
    let res = run_sweep(&cfg, ctx.workers()?)?;

    let offsets: Vec<isize> = res.columns.iter().map(|&j| j as isize).collect();
    let mut fits = Table::new(["lambda", "param", "value"]);
    for (k, &lambda) in lambdas.iter().enumerate() {
        match decay_fit(&offsets, &res.mean[k], DECAY_FLOOR) {
            Ok(fit) => {
                for row in fit_table(&fit).rows {
                    let mut full = vec![Value::Float(lambda)];
                    full.extend(row);
                    fits.rows.push(full);
                }
            }
            Err(e) => warn!("no decay fit at lambda = {lambda}: {e}"),
        }
    }
    ctx.emit(manifest, &sweep_table(&res, "mean_concurrence"), Some(("fit", fits)))
}

pub struct EvolveArgs {
    pub init: Option<String>,
    pub site: Option<usize>,
    pub state_file: Option<PathBuf>,
    pub total_time: Option<f64>,
    pub dt: Option<f64>,
    pub stride: Option<usize>,
}

pub fn evolve(common: &Common, args: EvolveArgs) -> Outcome {
    let ctx = Ctx::new(common)?;
    let (base, lambdas, realizations, mut manifest) =
        ctx.base("evolve", 10, "0,0.05,0.1,0.5,1")?;
    let defaults = PropagatorConfig::default();
    let propagator = PropagatorConfig {
        dt: ctx.pick(args.dt, "dt", defaults.dt)?,
        total_time: ctx.pick(args.total_time, "total-time", defaults.total_time)?,
        record_stride: ctx.pick(args.stride, "stride", defaults.record_stride)?,
        snapshot_stride: None,
    };
    let kind = ctx.pick_text(args.init, "init", "delta");
    let init = match kind.as_str() {
        "delta" => InitialState::Delta(ctx.pick(args.site, "site", base.size / 2)?),
        "w" => InitialState::WState,
        "custom" => {
            let path = args
                .state_file
                .or_else(|| ctx.file.get("state-file").map(PathBuf::from))
                .ok_or_else(|| Failure::config("--init custom needs --state-file"))?;
            manifest.param("state-file", path.display());
            InitialState::Custom(read_state(&path)?)
        }
        other => {
            return Err(Failure::config(format!(
                "unknown initial state '{other}' (expected delta, w or custom)"
            )))
        }
    };
    manifest
        .param("init", &kind)
        .param("dt", propagator.dt)
        .param("total-time", propagator.total_time)
        .param("stride", propagator.record_stride);
    if let InitialState::Delta(site) = init {
        manifest.param("site", site);
    }

    let cfg = SweepConfig::new(
        base,
        lambdas,
        realizations,
        Observable::Dynamics { propagator, init },
    );
    let res = run_sweep(&cfg, ctx.workers()?)?;
    ctx.emit(manifest, &sweep_table(&res, "mean_avg_concurrence"), None)
}

fn read_state(path: &Path) -> Result<State, Failure> {
    let table = read_table_file(path)?;
    let re = table.column_f64("re")?;
    let im = if table.header.iter().any(|h| h == "im") {
        table.column_f64("im")?
    } else {
        vec![0.0; re.len()]
    };
    let amps = re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect();
    Ok(State::normalize(amps)?)
}

pub fn selfcheck(output: Option<PathBuf>) -> Outcome {
    let checks = selfcheck::run_all();
    let mut table = Table::new(["check", "passed", "detail"]);
    for c in &checks {
        table.rows.push(vec![
            Value::Text(c.name.into()),
            c.passed.into(),
            Value::Text(c.detail.clone()),
        ]);
    }
    match &output {
        Some(path) => write_table_file(path, None, &table)?,
        None => write_table(std::io::stdout().lock(), None, &table).map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        })?,
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: 4,
            kind: "numeric",
            message: format!("selfcheck failed: {}", failed.join(" ")),
        })
    }
}
