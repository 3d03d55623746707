//! Config-file driven runs: the library face of the command line.
//!
//! Configs are `key = value` lines with `#` comments. Unknown and duplicate
//! keys are rejected with their line numbers. The four run modes mirror the
//! constructions: `exponent` (a full scaling experiment with a verdict),
//! `cone` (one cone filling with its report), `lpfill` (one minimal-filling
//! solve from complex/cycle files), and `jacobi` (the decay table of a root
//! system).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::chain::slice_sphere;
use crate::cone::{cone_fill, ConeParams, ConeReport};
use crate::error::{Error, Result};
use crate::fit::{
    compare_theory, csv_string, fit_exponent, run_family, ExperimentSpec, Family, Filler, Verdict,
    DEFAULT_SLOPE_TOL,
};
use crate::lp::{cycle_from_text, cycle_to_text, min_fill, min_fill_rational, CellComplex};
use crate::plot::svg_scatter;
use crate::roots::{chamber_barycenter, curvature_eigenvalues, RootSystem};
use crate::space::ProductSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Exponent,
    Cone,
    LpFill,
    Jacobi,
}

impl std::str::FromStr for Subcommand {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponent" => Ok(Subcommand::Exponent),
            "cone" => Ok(Subcommand::Cone),
            "lpfill" => Ok(Subcommand::LpFill),
            "jacobi" => Ok(Subcommand::Jacobi),
            other => Err(Error::Parse(format!("unknown subcommand {other:?}"))),
        }
    }
}

/// Parsed config; fields are optional until a subcommand demands them.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub space: Option<String>,
    pub experiment: Option<String>,
    pub k: Option<usize>,
    pub schedule: Option<Vec<f64>>,
    pub filler: Option<Filler>,
    pub mesh: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub radius: Option<f64>,
    pub t_max: Option<f64>,
    pub cap_level: Option<f64>,
    pub time_steps: Option<usize>,
    pub level: Option<f64>,
    pub tube_delta: Option<f64>,
    pub root_system: Option<String>,
    pub complex: Option<PathBuf>,
    pub cycle: Option<PathBuf>,
    pub rational: Option<bool>,
}

const KNOWN_KEYS: &[&str] = &[
    "space",
    "experiment",
    "k",
    "schedule",
    "filler",
    "mesh",
    "out",
    "seed",
    "radius",
    "t_max",
    "cap_level",
    "time_steps",
    "level",
    "tube_delta",
    "root_system",
    "complex",
    "cycle",
    "rational",
];

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut cfg = RunConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(Error::Config {
                line: line_no,
                msg: format!("expected 'key = value', found {line:?}"),
            });
        };
        let key = line[..eq].trim().to_string();
        let value = line[eq + 1..].trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config {
                line: line_no,
                msg: format!("unknown key {key:?}"),
            });
        }
        if let Some(first) = seen.insert(key.clone(), line_no) {
            return Err(Error::Config {
                line: line_no,
                msg: format!("duplicate key {key:?}, first set at line {first}"),
            });
        }
        let bad = |what: &str| Error::Config {
            line: line_no,
            msg: format!("bad {what}: {value:?}"),
        };
        match key.as_str() {
            "space" => {
                ProductSpace::parse(&value)?;
                cfg.space = Some(value);
            }
            "experiment" => {
                value.parse::<Family>()?;
                cfg.experiment = Some(value);
            }
            "k" => cfg.k = Some(value.parse().map_err(|_| bad("k"))?),
            "schedule" => {
                let parsed: std::result::Result<Vec<f64>, _> =
                    value.split(',').map(|t| t.trim().parse()).collect();
                cfg.schedule = Some(parsed.map_err(|_| bad("schedule"))?);
            }
            "filler" => cfg.filler = Some(value.parse()?),
            "mesh" => cfg.mesh = Some(value.parse().map_err(|_| bad("mesh"))?),
            "out" => cfg.out_dir = Some(PathBuf::from(value)),
            "seed" => cfg.seed = Some(value.parse().map_err(|_| bad("seed"))?),
            "radius" => cfg.radius = Some(value.parse().map_err(|_| bad("radius"))?),
            "t_max" => cfg.t_max = Some(value.parse().map_err(|_| bad("t_max"))?),
            "cap_level" => cfg.cap_level = Some(value.parse().map_err(|_| bad("cap_level"))?),
            "time_steps" => cfg.time_steps = Some(value.parse().map_err(|_| bad("time_steps"))?),
            "level" => cfg.level = Some(value.parse().map_err(|_| bad("level"))?),
            "tube_delta" => cfg.tube_delta = Some(value.parse().map_err(|_| bad("tube_delta"))?),
            "root_system" => cfg.root_system = Some(value),
            "complex" => cfg.complex = Some(PathBuf::from(value)),
            "cycle" => cfg.cycle = Some(PathBuf::from(value)),
            "rational" => {
                cfg.rational = Some(match value.as_str() {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(bad("rational")),
                })
            }
            _ => unreachable!(),
        }
    }
    Ok(cfg)
}

fn require<T: Clone>(field: &Option<T>, name: &str) -> Result<T> {
    field
        .clone()
        .ok_or_else(|| Error::Parse(format!("config is missing required key {name:?}")))
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn write_artifact(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn default_filler(family: Family) -> Filler {
    match family {
        Family::FlatRoundSpheres => Filler::FlatBall,
        Family::SliceSpheres => Filler::Cone,
        Family::TubeBoundaries => Filler::FlatBall,
        Family::HorosphereSpheresNeutered => Filler::Lp,
    }
}

fn default_mesh(family: Family) -> f64 {
    match family {
        Family::FlatRoundSpheres => 0.05,
        Family::SliceSpheres => 0.3,
        Family::TubeBoundaries => 0.05,
        Family::HorosphereSpheresNeutered => 0.5,
    }
}

/// Outcome of a run: the process exit status plus the printed lines.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub stdout: String,
}

/// Executes a subcommand, writing artifacts under the config's out dir.
pub fn run(cmd: Subcommand, cfg: &RunConfig) -> Result<RunOutcome> {
    match cmd {
        Subcommand::Exponent => run_exponent(cfg),
        Subcommand::Cone => run_cone(cfg),
        Subcommand::LpFill => run_lpfill(cfg),
        Subcommand::Jacobi => run_jacobi(cfg),
    }
}

fn run_exponent(cfg: &RunConfig) -> Result<RunOutcome> {
    let space = require(&cfg.space, "space")?;
    let family: Family = require(&cfg.experiment, "experiment")?.parse()?;
    let k = require(&cfg.k, "k")?;
    let schedule = require(&cfg.schedule, "schedule")?;
    let mut spec = ExperimentSpec::new(&space, family, k, schedule.clone());
    spec.filler = cfg.filler.unwrap_or_else(|| default_filler(family));
    spec.mesh = cfg.mesh.unwrap_or_else(|| default_mesh(family));
    spec.seed = cfg.seed.unwrap_or(0);
    if let Some(level) = cfg.level {
        spec.horosphere_level = level;
    }
    if let Some(delta) = cfg.tube_delta {
        spec.tube_delta = delta;
    }

    let samples = run_family(&spec)?;
    let est = fit_exponent(&samples)?;
    let (sp, horoballs) = ProductSpace::parse(&space)?;
    // horospheres of a neutered rank-one space are maximal flats
    let rank = if horoballs.is_some() {
        sp.dim() - 1
    } else {
        sp.rank()
    };
    let (verdict, expected) = compare_theory(&est, k, rank, sp.dim(), DEFAULT_SLOPE_TOL)?;

    let dir = out_dir(cfg);
    write_artifact(
        &dir.join(format!("{family}.csv")),
        &csv_string(&schedule, &samples),
    )?;
    write_artifact(
        &dir.join(format!("{family}.svg")),
        &svg_scatter(
            &format!("{space} {family} k={k}"),
            &samples,
            Some(&est),
        ),
    )?;

    let mut stdout = String::new();
    writeln!(
        stdout,
        "expected {expected}, measured {:.4}, verdict {verdict}",
        est.slope
    )
    .unwrap();
    let exit_code = if verdict == Verdict::Mismatch { 2 } else { 0 };
    Ok(RunOutcome { exit_code, stdout })
}

fn run_cone(cfg: &RunConfig) -> Result<RunOutcome> {
    let space = require(&cfg.space, "space")?;
    let k = cfg.k.unwrap_or(1);
    let radius = require(&cfg.radius, "radius")?;
    let mesh = cfg.mesh.unwrap_or(0.2);
    let (sp, _) = ProductSpace::parse(&space)?;
    let cycle = slice_sphere(&sp, radius, k, mesh)?;
    let w = sp.default_direction()?;
    let t_max = cfg.t_max.unwrap_or(2.0 * radius + 4.0);
    let cap_level = cfg.cap_level.unwrap_or(-(radius + 1.0));
    let steps = cfg
        .time_steps
        .unwrap_or(((t_max / 0.2).ceil() as usize).clamp(16, 96));
    let params = ConeParams::new(w, t_max, cap_level, steps)?;
    let (_, report) = cone_fill(&sp, &cycle, &params)?;

    let dir = out_dir(cfg);
    let csv = format!("{}\n{}\n", ConeReport::csv_header(), report.csv_row(radius));
    write_artifact(&dir.join("cone.csv"), &csv)?;

    let mut stdout = String::new();
    writeln!(
        stdout,
        "cycle {:.6} cone {:.6} cap {:.6} total {:.6} decay {:.4} c1 {:.4}",
        report.cycle_volume,
        report.cone_volume,
        report.cap_volume,
        report.total_volume,
        report.measured_decay,
        report.measured_c1
    )
    .unwrap();
    Ok(RunOutcome {
        exit_code: 0,
        stdout,
    })
}

fn run_lpfill(cfg: &RunConfig) -> Result<RunOutcome> {
    let complex_path = require(&cfg.complex, "complex")?;
    let cycle_path = require(&cfg.cycle, "cycle")?;
    let complex_text =
        std::fs::read_to_string(&complex_path).map_err(|e| Error::io(&complex_path, e))?;
    let cycle_text =
        std::fs::read_to_string(&cycle_path).map_err(|e| Error::io(&cycle_path, e))?;
    let cx = CellComplex::from_text(&complex_text)?;
    let (k, z) = cycle_from_text(&cycle_text, &cx)?;

    let dir = out_dir(cfg);
    let mut stdout = String::new();
    if cfg.rational.unwrap_or(false) {
        let (chain, value) = min_fill_rational(&cx, k, &z)?;
        writeln!(stdout, "value {value} residual 0 (exact)").unwrap();
        let mut text = String::new();
        for (i, c) in chain.iter().enumerate() {
            if !num_traits::Zero::is_zero(c) {
                writeln!(text, "{} {i} {c}", k + 1).unwrap();
            }
        }
        write_artifact(&dir.join("fill.txt"), &text)?;
    } else {
        let fill = min_fill(&cx, k, &z)?;
        writeln!(stdout, "value {:.9} residual {:.3e}", fill.value, fill.residual).unwrap();
        let rounded: Vec<i64> = fill
            .chain
            .iter()
            .map(|&x| if x.abs() < 1e-9 { 0 } else { (x * 1e9).round() as i64 })
            .collect();
        // written at 1e-9 resolution as integers scaled by 1e9
        let mut text = String::from("# coefficients scaled by 1e9\n");
        for (i, c) in rounded.iter().enumerate() {
            if *c != 0 {
                writeln!(text, "{} {i} {c}", k + 1).unwrap();
            }
        }
        write_artifact(&dir.join("fill.txt"), &text)?;
        let _ = cycle_to_text(k, &z);
    }
    Ok(RunOutcome {
        exit_code: 0,
        stdout,
    })
}

fn run_jacobi(cfg: &RunConfig) -> Result<RunOutcome> {
    let label = require(&cfg.root_system, "root_system")?;
    let rs = RootSystem::from_label(&label)?;
    rs.validate()?;
    let bc = chamber_barycenter(&rs);
    let eigen = curvature_eigenvalues(&rs, &bc.h0)?;
    let mut stdout = String::new();
    writeln!(stdout, "root system {label}, rank {}", rs.rank()).unwrap();
    writeln!(stdout, "barycenter H0 = {:?}", bc.h0).unwrap();
    writeln!(stdout, "rho_star = {:.12}", bc.rho_star).unwrap();
    writeln!(stdout, "root_value,lambda,multiplicity").unwrap();
    for (i, root) in rs.positive_roots().iter().enumerate() {
        let v = RootSystem::pairing(&root.covector, &bc.h0);
        writeln!(stdout, "{v:.12},{:.12},{}", eigen[i].0, root.multiplicity).unwrap();
    }
    if rs.rank() > 1 {
        writeln!(stdout, "0,0,{} (flat directions)", rs.rank() - 1).unwrap();
    }
    Ok(RunOutcome {
        exit_code: 0,
        stdout,
    })
}
