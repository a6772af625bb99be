//! `dipole`: command-line front end and acceptance-suite driver.
//!
//! Every subcommand writes one JSON document with the inputs echoed, the
//! computed values with their error estimates, and pass/fail verdicts.
//! Exit status: 0 when every verdict passes, 1 on a failed verdict or a
//! numerical failure, 2 on bad arguments, configuration or input files.

mod config;
mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use dipole_core::asymlim::{limit_and_compare, DecayAnalysis, LimitTarget, LimitThresholds, TGrid};
use dipole_core::checks::{finite_part_suite, identity_suite, Identity, SuiteOptions};
use dipole_core::criteria::{self, Level};
use dipole_core::dist::{smear_regularized, smear_with, DistExpr, Regularization, SmearConfig};
use dipole_core::model::{schwinger_truncated, wightman_truncated, MomentModel};
use dipole_core::perturb::{first_order_dual_path, first_order_schwinger, CouplingMeasure};
use dipole_core::rng::LCG_NAME;
use dipole_core::scatter::{divergence_demo, form_factor_convergence, smatrix_dual_path, AsymptoticKind};
use dipole_core::waveop::Channel;
use dipole_core::{Error, QuadSpec, WavePacket};

use config::{ConfigError, FileConfig, CONFIG_ENV};
use table::{sci, Table};

#[derive(Parser, Debug)]
#[command(name = "dipole", version, about = "Mass-shell smearing, dipole wave operators and scattering amplitudes")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Flat key = value configuration file
    #[arg(long, global = true, env = CONFIG_ENV, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Seed for randomized packet suites
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Model file (JSON)
    #[arg(long, global = true, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Absolute quadrature tolerance
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Relative quadrature tolerance
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    /// Maximum adaptive bisection depth
    #[arg(long, global = true)]
    max_depth: Option<u32>,
    /// Integration half-width in packet widths
    #[arg(long, global = true)]
    truncation_radius: Option<f64>,
    /// Minimum shell distance of pointwise singular factors, in m^2
    #[arg(long, global = true)]
    pole_margin: Option<f64>,
    /// Largest mollifier width, in m^2
    #[arg(long, global = true)]
    eps0: Option<f64>,
    /// Mollifier halvings used for extrapolation
    #[arg(long, global = true)]
    eps_levels: Option<usize>,
    /// Print plain-text tables of grids and deviations to stderr
    #[arg(long, global = true)]
    emit_table: bool,
    /// Add wall-clock timings to the report (makes it non-reproducible)
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smear a distribution expression against packets
    Smear {
        /// Expression file (JSON)
        #[arg(long, value_name = "FILE")]
        expr: PathBuf,
        /// Packet list file (JSON array)
        #[arg(long, value_name = "FILE")]
        packets: PathBuf,
        /// Mollify over-determined shell products and extrapolate
        #[arg(long)]
        regularized: bool,
    },
    /// Shell identity suites on seeded packets
    Lemmas {
        /// A1, A2, A3, A4, FP or all
        #[arg(long, default_value = "all")]
        which: String,
        #[arg(long, default_value_t = 20)]
        cases: usize,
        /// Dimensions used in turn
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        dims: Vec<usize>,
    },
    /// Large-time limit of a dipole multiplier over a pole
    Limit {
        #[arg(long, default_value_t = 2)]
        power: u32,
        #[arg(long, default_value = "in")]
        channel: Channel,
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
        t_grid: Vec<f64>,
        /// Packet file (JSON object)
        #[arg(long, value_name = "FILE")]
        packet: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-2)]
        tol_final: f64,
        #[arg(long, default_value_t = 4.0)]
        min_ratio: f64,
    },
    /// Truncated Wightman function, or its form-factor limit when channels are given
    Wightman {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, value_delimiter = ',')]
        channels: Vec<Channel>,
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
        t_grid: Vec<f64>,
        #[arg(long, value_name = "FILE")]
        packets: Option<PathBuf>,
        #[arg(long, default_value_t = 2e-2)]
        tol_final: f64,
    },
    /// Truncated Schwinger function at Euclidean points
    Schwinger {
        /// Points as "x,y;x,y;..."
        #[arg(long, default_value = "0,0;1,0;0,1")]
        points: String,
    },
    /// Truncated S-matrix element by the closed form and the limit path
    Smatrix {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        r: usize,
        /// Also follow the form factor for these channels along the time grid
        #[arg(long, value_delimiter = ',')]
        channels: Vec<Channel>,
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
        t_grid: Vec<f64>,
        #[arg(long, value_name = "FILE")]
        packets: Option<PathBuf>,
        #[arg(long, default_value_t = 5e-2)]
        tol: f64,
    },
    /// Growth of the amplitude with uncorrected multipliers
    Divergence {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "in,loc,out")]
        channels: Vec<Channel>,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40,80")]
        t_grid: Vec<f64>,
        #[arg(long, value_name = "FILE")]
        packets: Option<PathBuf>,
        /// chi_t (alias haag_ruelle) or chi_d_t
        #[arg(long, default_value = "chi_t")]
        multiplier: AsymptoticKind,
        #[arg(long, default_value_t = 0.8)]
        min_slope: f64,
        #[arg(long, default_value_t = 1.2)]
        max_spread: f64,
    },
    /// First-order perturbation theory in the coupling
    Perturb {
        /// "sinh-gordon" or a coupling-measure file (JSON)
        #[arg(long, default_value = "sinh-gordon")]
        rho: String,
        /// Use the trigonometric variant of the measure
        #[arg(long)]
        trigonometric: bool,
        /// Order of the scattering term; omitted for the Schwinger expansion
        #[arg(long)]
        q: Option<usize>,
        #[arg(long, default_value_t = 1)]
        r: usize,
        /// Points as "x,y;x,y;..."
        #[arg(long, default_value = "0,0;1,0;0,1")]
        points: String,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, value_name = "FILE")]
        packets: Option<PathBuf>,
        #[arg(long, default_value_t = 5e-2)]
        tol: f64,
    },
    /// Acceptance suite
    Suite {
        #[arg(default_value = "quick")]
        level: Level,
    },
}

/// Resolved settings: flags over file entries over defaults.
#[derive(Debug, Serialize)]
struct Settings {
    seed: u64,
    generator: &'static str,
    quad: QuadSpec,
    smear: SmearConfig,
    #[serde(skip)]
    model: Option<PathBuf>,
    #[serde(skip)]
    out: Option<PathBuf>,
    #[serde(skip)]
    emit_table: bool,
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid(_) | Error::Packet(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

fn resolve(g: &Global) -> Result<Settings, Failure> {
    let file = match &g.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let d = QuadSpec::default();
    let quad = QuadSpec {
        abs_tol: g.abs_tol.or(file.get("abs_tol")?).unwrap_or(d.abs_tol),
        rel_tol: g.rel_tol.or(file.get("rel_tol")?).unwrap_or(d.rel_tol),
        max_depth: g.max_depth.or(file.get("max_depth")?).unwrap_or(d.max_depth),
        truncation_radius: g.truncation_radius.or(file.get("truncation_radius")?).unwrap_or(d.truncation_radius),
    };
    quad.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let s = SmearConfig::default();
    let smear = SmearConfig {
        pole_margin: g.pole_margin.or(file.get("pole_margin")?).unwrap_or(s.pole_margin),
        regularization: Regularization {
            eps0: g.eps0.or(file.get("eps0")?).unwrap_or(s.regularization.eps0),
            levels: g.eps_levels.or(file.get("eps_levels")?).unwrap_or(s.regularization.levels),
        },
    };
    if !(smear.pole_margin >= 0.0) || !(smear.regularization.eps0 > 0.0) || smear.regularization.levels == 0 {
        return Err(Failure::Usage("pole_margin must be >= 0, eps0 > 0 and eps_levels >= 1".into()));
    }
    Ok(Settings {
        seed: g.seed.or(file.get("seed")?).unwrap_or(7),
        generator: LCG_NAME,
        quad,
        smear,
        model: g.model.clone().or(file.path_value("model")),
        out: g.out.clone().or(file.path_value("out")),
        emit_table: g.emit_table || file.get("emit_table")?.unwrap_or(false),
    })
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: cannot read: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = read(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())))
}

fn load_model(s: &Settings, default: MomentModel) -> Result<MomentModel, Failure> {
    match &s.model {
        None => Ok(default),
        Some(p) => MomentModel::from_json(&read(p)?).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
    }
}

fn load_packets(path: &Option<PathBuf>, default: impl FnOnce() -> Option<Vec<WavePacket>>) -> Result<Vec<WavePacket>, Failure> {
    match path {
        Some(p) => parse_json(p),
        None => default().ok_or_else(|| Failure::Usage("no built-in packets for these arguments; pass --packets".into())),
    }
}

fn parse_points(s: &str) -> Result<Vec<[f64; 2]>, Failure> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .enumerate()
        .map(|(i, p)| {
            let v: Vec<f64> = p
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| Failure::Usage(format!("point {}: {e}", i + 1)))?;
            match v[..] {
                [x, y] => Ok([x, y]),
                _ => Err(Failure::Usage(format!("point {} needs two coordinates, got {}", i + 1, v.len()))),
            }
        })
        .collect()
}

fn channel_names(chs: &[Channel]) -> Vec<String> {
    chs.iter().map(|c| c.to_string()).collect()
}

fn decay_table(d: &DecayAnalysis) -> String {
    let mut t = Table::new(&["t", "re", "im", "deviation", "err", "rel", "ratio"]);
    for i in 0..d.t_grid.len() {
        let v = d.values[i].value;
        t.row(vec![
            d.t_grid[i].to_string(),
            sci(v.re),
            sci(v.im),
            sci(d.deviations[i]),
            sci(d.deviation_errs[i]),
            sci(d.rel_deviations[i]),
            if i == 0 { "-".into() } else { sci(d.decay_ratios[i - 1]) },
        ]);
    }
    format!("target re {} im {}\n{}", sci(d.target.value.re), sci(d.target.value.im), t.render())
}

/// Outcome of a subcommand.
struct Outcome {
    inputs: Value,
    result: Value,
    pass: bool,
    tables: Vec<String>,
}

fn run(cmd: &Command, s: &Settings) -> Result<Outcome, Failure> {
    let spec = &s.quad;
    let cfg = &s.smear;
    let out = match cmd {
        Command::Smear {
            expr,
            packets,
            regularized,
        } => {
            let e: DistExpr = parse_json(expr)?;
            e.validate().map_err(|e| Failure::Usage(format!("{}: {e}", expr.display())))?;
            let ps: Vec<WavePacket> = parse_json(packets)?;
            let inputs = json!({ "expr": e, "packets": ps, "regularized": regularized });
            if *regularized {
                let v = smear_regularized(&e, &ps, spec, cfg).map_err(Error::from)?;
                let pass = v.value.converged;
                Outcome {
                    inputs,
                    result: json!(v),
                    pass,
                    tables: vec![],
                }
            } else {
                let v = smear_with(&e, &ps, spec, cfg).map_err(Error::from)?;
                Outcome {
                    inputs,
                    result: json!(v),
                    pass: v.converged,
                    tables: vec![],
                }
            }
        }
        Command::Lemmas { which, cases, dims } => {
            let opts = SuiteOptions {
                cases: *cases,
                dims: dims.clone(),
                ..Default::default()
            };
            let w = which.to_ascii_uppercase();
            let ids: Vec<Identity> = match w.as_str() {
                "ALL" => Identity::all().to_vec(),
                "FP" => vec![],
                _ => vec![Identity::from_tag(&w).ok_or_else(|| Failure::Usage(format!("unknown identity '{which}' (A1..A4, FP, all)")))?],
            };
            let mut suites = Vec::new();
            let mut pass = true;
            let mut t = Table::new(&["suite", "case", "dim", "max deviation", "pass"]);
            for id in ids {
                let r = identity_suite(id, s.seed, &opts, spec)?;
                pass &= r.pass;
                for c in &r.cases {
                    let dev = c.checks.iter().map(|k| k.deviation).fold(0.0, f64::max);
                    t.row(vec![r.tag.into(), c.index.to_string(), c.dim.to_string(), sci(dev), c.pass.to_string()]);
                }
                suites.push(json!(r));
            }
            if w == "FP" || w == "ALL" {
                let r = finite_part_suite(s.seed, *cases, spec)?;
                pass &= r.pass;
                for c in &r.cases {
                    t.row(vec!["FP".into(), c.index.to_string(), "1".into(), sci(c.restore_deviation), c.pass.to_string()]);
                }
                suites.push(json!(r));
            }
            Outcome {
                inputs: json!({ "which": w, "cases": cases, "dims": dims }),
                result: Value::Array(suites),
                pass,
                tables: vec![t.render()],
            }
        }
        Command::Limit {
            power,
            channel,
            t_grid,
            packet,
            tol_final,
            min_ratio,
        } => {
            let grid = TGrid::new(t_grid.clone())?;
            let p: WavePacket = match packet {
                Some(f) => parse_json(f)?,
                None => WavePacket::gaussian(&[1.2, 0.4], 1.0),
            };
            let mass = load_model(s, criteria::probe_model())?.mass;
            let target = LimitTarget::new(*power, *channel, mass)?;
            let th = LimitThresholds {
                tol_final: *tol_final,
                min_ratio: *min_ratio,
            };
            let r = limit_and_compare(&target, &grid, &p, spec, th)?;
            Outcome {
                inputs: json!({ "power": power, "channel": channel, "t_grid": t_grid, "packet": p, "mass": mass }),
                tables: vec![decay_table(&r.decay)],
                pass: r.pass(),
                result: json!({ "target": target, "report": r }),
            }
        }
        Command::Wightman {
            n,
            channels,
            t_grid,
            packets,
            tol_final,
        } => {
            let model = load_model(s, criteria::probe_model())?;
            let ps = load_packets(packets, || (*n == 3).then(criteria::form_factor_packets))?;
            if ps.len() != *n {
                return Err(Failure::Usage(format!("need {n} packets, got {}", ps.len())));
            }
            let inputs = json!({ "n": n, "channels": channel_names(channels), "t_grid": t_grid, "packets": ps, "model": model });
            if channels.is_empty() {
                let e = wightman_truncated(*n, &model).map_err(Error::from)?;
                let v = smear_with(&e, &ps, spec, cfg).map_err(Error::from)?;
                Outcome {
                    inputs,
                    pass: v.converged,
                    result: json!({ "expr": e, "value": v }),
                    tables: vec![],
                }
            } else {
                let grid = TGrid::new(t_grid.clone())?;
                let th = LimitThresholds {
                    tol_final: *tol_final,
                    min_ratio: 4.0,
                };
                let r = form_factor_convergence(channels, &grid, &model, &ps, spec, cfg, th)?;
                Outcome {
                    inputs,
                    tables: vec![decay_table(&r.decay)],
                    pass: r.decay.pass,
                    result: json!(r),
                }
            }
        }
        Command::Schwinger { points } => {
            let pts = parse_points(points)?;
            let model = load_model(s, MomentModel::new(1.0, 2, vec![1.0, 1.0, 1.0]).expect("valid model"))?;
            let v = schwinger_truncated(&pts.iter().map(|p| p.to_vec()).collect::<Vec<_>>(), &model, spec).map_err(Error::from)?;
            Outcome {
                inputs: json!({ "points": pts, "model": model }),
                pass: v.converged,
                result: json!(v),
                tables: vec![],
            }
        }
        Command::Smatrix {
            n,
            r,
            channels,
            t_grid,
            packets,
            tol,
        } => {
            let model = load_model(s, criteria::probe_model())?;
            let ps = load_packets(packets, || (*n == 3).then(criteria::scattering_packets))?;
            let dual = smatrix_dual_path(*n, *r, &model, &ps, spec, cfg, *tol)?;
            let mut t = Table::new(&["eps", "closed re", "closed im", "limit re", "limit im"]);
            for i in 0..dual.closed_form.eps_levels.len() {
                let (a, b) = (dual.closed_form.raw[i], dual.limit_path.raw.get(i).copied().unwrap_or(Complex64::new(f64::NAN, f64::NAN)));
                t.row(vec![sci(dual.closed_form.eps_levels[i]), sci(a.re), sci(a.im), sci(b.re), sci(b.im)]);
            }
            let mut tables = vec![t.render()];
            let mut pass = dual.pass;
            let convergence = if channels.is_empty() {
                Value::Null
            } else {
                let grid = TGrid::new(t_grid.clone())?;
                let c = form_factor_convergence(channels, &grid, &model, &ps, spec, cfg, LimitThresholds::default())?;
                tables.push(decay_table(&c.decay));
                pass &= c.decay.pass;
                json!(c)
            };
            Outcome {
                inputs: json!({ "n": n, "r": r, "channels": channel_names(channels), "t_grid": t_grid, "packets": ps, "model": model, "tol": tol }),
                result: json!({ "dual_path": dual, "form_factor": convergence }),
                pass,
                tables,
            }
        }
        Command::Divergence {
            n,
            channels,
            t_grid,
            packets,
            multiplier,
            min_slope,
            max_spread,
        } => {
            if channels.len() != *n {
                return Err(Failure::Usage(format!("need {n} channels, got {}", channels.len())));
            }
            let model = load_model(s, criteria::probe_model())?;
            let ps = load_packets(packets, || (*n == 3).then(criteria::form_factor_packets))?;
            let grid = TGrid::new(t_grid.clone())?;
            let r = divergence_demo(channels, *multiplier, &grid, &model, &ps, spec, *min_slope, *max_spread)?;
            let mut t = Table::new(&["t", "|value|", "|control|"]);
            for i in 0..r.t_grid.len() {
                t.row(vec![r.t_grid[i].to_string(), sci(r.values[i].value.norm()), sci(r.control[i].value.norm())]);
            }
            Outcome {
                inputs: json!({ "n": n, "channels": channel_names(channels), "t_grid": t_grid, "packets": ps, "model": model, "multiplier": multiplier }),
                tables: vec![format!("slope {:.4}, control spread {:.4}\n{}", r.slope, r.control_spread, t.render())],
                pass: r.pass,
                result: json!(r),
            }
        }
        Command::Perturb {
            rho,
            trigonometric,
            q,
            r,
            points,
            lambda,
            packets,
            tol,
        } => {
            let mut measure = if rho == "sinh-gordon" {
                CouplingMeasure::sinh_gordon()
            } else {
                let p = PathBuf::from(rho);
                CouplingMeasure::from_json(&read(&p)?).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
            };
            if *trigonometric {
                measure = measure.trigonometric();
            }
            let model = load_model(s, MomentModel::new(1.0, 2, vec![1.0]).expect("valid model"))?;
            match q {
                None => {
                    let pts = parse_points(points)?;
                    let v = first_order_schwinger(&pts, *lambda, &measure, &model, spec)?;
                    Outcome {
                        inputs: json!({ "rho": measure, "points": pts, "lambda": lambda, "model": model }),
                        pass: v.value.converged,
                        result: json!(v),
                        tables: vec![],
                    }
                }
                Some(q) => {
                    let ps = load_packets(packets, || (*q == 3).then(criteria::scattering_packets))?;
                    let v = first_order_dual_path(*q, *r, &model, &measure, &ps, spec, cfg, *tol)?;
                    Outcome {
                        inputs: json!({ "rho": measure, "q": q, "r": r, "packets": ps, "model": model, "tol": tol }),
                        pass: v.pass,
                        result: json!(v),
                        tables: vec![],
                    }
                }
            }
        }
        Command::Suite { level } => {
            let (report, _) = criteria::run_suite(*level, s.seed, spec)?;
            let mut t = Table::new(&["id", "criterion", "pass", "summary"]);
            for c in &report.criteria {
                t.row(vec![c.id.to_string(), c.name.into(), c.pass.to_string(), c.summary.clone()]);
            }
            Outcome {
                inputs: json!({ "level": level }),
                pass: report.pass,
                result: json!(report),
                tables: vec![t.render()],
            }
        }
    };
    Ok(out)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Smear { .. } => "smear",
        Command::Lemmas { .. } => "lemmas",
        Command::Limit { .. } => "limit",
        Command::Wightman { .. } => "wightman",
        Command::Schwinger { .. } => "schwinger",
        Command::Smatrix { .. } => "smatrix",
        Command::Divergence { .. } => "divergence",
        Command::Perturb { .. } => "perturb",
        Command::Suite { .. } => "suite",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let settings = match resolve(&cli.global) {
        Ok(s) => s,
        Err(Failure::Usage(m)) | Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
    };
    let start = Instant::now();
    let outcome = match run(&cli.command, &settings) {
        Ok(o) => o,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(1);
        }
    };
    let mut doc = json!({
        "command": command_name(&cli.command),
        "inputs": outcome.inputs,
        "settings": settings,
        "result": outcome.result,
        "pass": outcome.pass,
    });
    if cli.global.timings {
        doc["timings"] = json!({ "wall_s": start.elapsed().as_secs_f64() });
    }
    let text = serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n";
    match &settings.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &text) {
                eprintln!("error: {}: cannot write: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    if settings.emit_table {
        for t in &outcome.tables {
            eprint!("{t}");
        }
    }
    ExitCode::from(if outcome.pass { 0 } else { 1 })
}
