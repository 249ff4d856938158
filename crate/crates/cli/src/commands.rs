use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use izone_core::pipeline::{analyze, h_grid, sweep_inertia};
use izone_core::sensitivity::{analyze as joint_analysis, Targets};
use izone_core::swing::{coherence_score, simulate as run_sim};
use izone_core::{
    apply_scenario, load_case, load_scenario, one_at_a_time_with, report, DisturbanceSpec, NetworkCase,
    PerturbationMode, PerturbationSpec, SimConfig, ZoningConfig, SCHEMA_VERSION,
};

use crate::{Common, Format, SensitivityArgs, SimulateArgs, Study, SweepArgs};

#[derive(Debug)]
pub enum CmdError {
    Core(izone_core::Error),
    Io { path: PathBuf, source: std::io::Error },
}

impl CmdError {
    pub fn code(&self) -> &'static str {
        match self {
            CmdError::Core(e) => e.code(),
            CmdError::Io { .. } => "io",
        }
    }

    pub fn exit_code(&self) -> u8 {
        1
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Core(e) => write!(f, "{e}"),
            CmdError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl From<izone_core::Error> for CmdError {
    fn from(e: izone_core::Error) -> Self {
        CmdError::Core(e)
    }
}

type CmdResult<T> = Result<T, CmdError>;

pub fn fixtures_dir() -> PathBuf {
    std::env::var_os("IZONE_FIXTURES")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"))
}

/// A path as given, else a fixture by name (with or without `.json`).
fn resolve(arg: &str) -> PathBuf {
    let direct = PathBuf::from(arg);
    if direct.exists() {
        return direct;
    }
    let dir = fixtures_dir();
    [dir.join(arg), dir.join(format!("{arg}.json"))].into_iter().find(|p| p.exists()).unwrap_or(direct)
}

fn load(c: &Common) -> CmdResult<NetworkCase> {
    let base = load_case(resolve(&c.case))?;
    Ok(match &c.scenario {
        Some(s) => apply_scenario(&base, &load_scenario(resolve(s))?)?,
        None => base,
    })
}

fn zoning_config(c: &Common) -> ZoningConfig {
    ZoningConfig { r: c.r, tau: c.tau, seed: c.seed, ..ZoningConfig::default() }
}

fn formats(c: &Common) -> Vec<Format> {
    let mut f = c.formats.clone();
    f.sort();
    f.dedup();
    f
}

/// The effective configuration, without the output directory so that runs
/// into different directories agree byte for byte.
fn base_config(command: &str, c: &Common) -> Map<String, Value> {
    let z = zoning_config(c);
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("case".into(), json!(c.case));
    m.insert("scenario".into(), json!(c.scenario));
    m.insert("r".into(), json!(z.r));
    m.insert("tau".into(), json!(z.tau));
    m.insert("seed".into(), json!(z.seed));
    m.insert("max_iter".into(), json!(z.max_iter));
    m.insert("include_rigid".into(), json!(z.include_rigid));
    m.insert("formats".into(), json!(formats(c).iter().map(|f| f.as_str()).collect::<Vec<_>>()));
    m
}

struct Writer {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> CmdResult<Self> {
        fs::create_dir_all(dir).map_err(|source| CmdError::Io { path: dir.to_owned(), source })?;
        Ok(Writer { dir: dir.to_owned(), written: Vec::new() })
    }

    fn put(&mut self, name: &str, content: &str) -> CmdResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|source| CmdError::Io { path: path.clone(), source })?;
        self.written.push(path);
        Ok(())
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

pub fn zones(c: &Common) -> CmdResult<Vec<PathBuf>> {
    let case = load(c)?;
    let a = analyze(&case, &zoning_config(c))?;
    let meta = report::meta(Value::Object(base_config("zones", c)));
    let mut w = Writer::new(&c.out)?;
    for f in formats(c) {
        match f {
            Format::Json => w.put("zones.json", &report::zones_json(&a, &meta))?,
            Format::Csv => w.put("zones.csv", &report::zones_csv(&a, &meta))?,
            Format::Svg => w.put("zones.svg", &report::zones_svg(&a, &meta))?,
        }
    }
    Ok(w.written)
}

pub fn sweep(args: &SweepArgs) -> CmdResult<Vec<PathBuf>> {
    let c = &args.common;
    let case = load(c)?;
    let values = h_grid(args.h_from, args.h_to, args.h_step)?;
    let points = sweep_inertia(&case, args.bus, &values, &zoning_config(c))?;
    let mut config = base_config("sweep", c);
    config.insert("bus".into(), json!(args.bus));
    config.insert("h_from".into(), json!(args.h_from));
    config.insert("h_to".into(), json!(args.h_to));
    config.insert("h_step".into(), json!(args.h_step));
    let meta = report::meta(Value::Object(config));
    let mut w = Writer::new(&c.out)?;
    for f in formats(c) {
        match f {
            Format::Json => {
                let steps: Vec<Value> = points
                    .iter()
                    .map(|p| {
                        json!({
                            "h": p.h,
                            "k": p.analysis.zones.k,
                            "zones": report::zones_value(&p.analysis, &Value::Null),
                        })
                    })
                    .collect();
                let doc = json!({"schema_version": SCHEMA_VERSION, "meta": meta, "steps": steps});
                w.put("sweep.json", &pretty(&doc))?
            }
            Format::Csv => w.put("sweep.csv", &report::sweep_csv(&points, &meta))?,
            Format::Svg => w.put(
                "sweep.svg",
                &report::sweep_svg(&points, &meta, &format!("DNW while sweeping H at bus {}", args.bus)),
            )?,
        }
    }
    Ok(w.written)
}

pub fn sensitivity(args: &SensitivityArgs) -> CmdResult<Vec<PathBuf>> {
    let c = &args.common;
    let case = load(c)?;
    let mode = if args.absolute { PerturbationMode::Absolute } else { PerturbationMode::Relative };
    let reports = args
        .parameter
        .parameters()
        .into_iter()
        .map(|p| match args.study {
            Study::OneAtATime => one_at_a_time_with(&case, p, args.epsilon, mode),
            Study::Joint => joint_analysis(
                &case,
                &PerturbationSpec::relative(p, args.epsilon, Targets::All).with_mode(mode),
            ),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut config = base_config("sensitivity", c);
    config.insert("parameter".into(), json!(args.parameter.to_possible_value_name()));
    config.insert("epsilon".into(), json!(args.epsilon));
    config.insert("absolute".into(), json!(args.absolute));
    config.insert("study".into(), json!(args.study.to_possible_value_name()));
    let meta = report::meta(Value::Object(config));
    let mut w = Writer::new(&c.out)?;
    for f in formats(c) {
        match f {
            Format::Json => {
                let doc = json!({"schema_version": SCHEMA_VERSION, "meta": meta, "reports": reports});
                w.put("sensitivity.json", &pretty(&doc))?
            }
            Format::Csv => w.put("sensitivity.csv", &report::sensitivity_csv(&reports, &meta))?,
            Format::Svg => {}
        }
    }
    Ok(w.written)
}

pub fn simulate(args: &SimulateArgs) -> CmdResult<Vec<PathBuf>> {
    let c = &args.common;
    let case = load(c)?;
    let a = analyze(&case, &zoning_config(c))?;
    let sim = SimConfig { dt: args.dt, horizon: args.horizon, damping: args.damping, ..SimConfig::default() };
    let mut config = base_config("simulate", c);
    config.insert("buses".into(), json!(args.buses));
    config.insert("kind".into(), json!(izone_core::DisturbanceKind::from(args.kind)));
    config.insert("size".into(), json!(args.size));
    config.insert("t_start".into(), json!(args.t_start));
    config.insert("t_end".into(), json!(args.t_end));
    config.insert("dt".into(), json!(args.dt));
    config.insert("horizon".into(), json!(args.horizon));
    config.insert("damping".into(), json!(args.damping));
    let meta = report::meta(Value::Object(config));
    let fmts = formats(c);
    let mut w = Writer::new(&c.out)?;
    let mut scores = Vec::new();
    for &bus in &args.buses {
        let d = DisturbanceSpec {
            bus_id: bus,
            kind: args.kind.into(),
            size: args.size,
            t_start: args.t_start,
            t_end: args.t_end,
        };
        let tr = run_sim(&a.reduced, &d, &sim)?;
        let score = coherence_score(&tr, &a.zones, Some(bus), d.t_end)?;
        if fmts.contains(&Format::Csv) {
            w.put(&format!("trajectory_bus{bus}.csv"), &report::trajectory_csv(&tr, &meta))?;
        }
        let ordered = matches!((score.intra, score.inter), (Some(i), Some(o)) if i > o);
        scores.push(json!({
            "disturbance": d,
            "coherence": score,
            "intra_exceeds_inter": ordered,
        }));
    }
    if fmts.contains(&Format::Json) {
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "meta": meta,
            "k": a.zones.k,
            "zones": (0..a.zones.k).map(|z| a.zones.members(z)).collect::<Vec<_>>(),
            "disturbances": scores,
        });
        w.put("coherence.json", &pretty(&doc))?;
    }
    Ok(w.written)
}

trait ValueName {
    fn to_possible_value_name(&self) -> String;
}

impl<T: clap::ValueEnum> ValueName for T {
    fn to_possible_value_name(&self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_owned()).unwrap_or_default()
    }
}
