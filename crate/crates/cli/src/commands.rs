use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nicholson_core::integrator::{default_step, integrate, InitialHistory};
use nicholson_core::lyapunov::{block_exponents_for, characteristic_root, BlockExponent, ExponentOptions};
use nicholson_core::model::{DelayRhs, DelaySystem, HypothesisStatus, SystemFile, ValidationReport};
use nicholson_core::persistence::{
    default_histories, empirical_check, verdict_from, Decision, EmpiricalReport, PersistenceVerdict, Verdict,
    DEFAULT_MARGIN_TOL, DEFAULT_RECURRENCE_TOL,
};
use nicholson_core::robustness::{hull_demo, recurrence_scan, TranslateResult};
use nicholson_core::signals::conley_miller;
use nicholson_core::structure::{condense, zero_pattern, BlockStructure};
use serde::Serialize;

use crate::config::{Command, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_UNCERTAIN: u8 = 3;

const DEFAULT_GRID_STEP: f64 = 0.01;
const DEFAULT_VALIDATION_HORIZON: f64 = 1e3;
const DEFAULT_SIM_HORIZON: f64 = 100.0;
const DEFAULT_EMPIRICAL_HORIZON: f64 = 200.0;
const DEFAULT_DEMO_TERMS: usize = 6;
const DEFAULT_DEMO_HORIZON: f64 = 1e4;
const DEFAULT_SCAN: usize = 200;

struct Output<'a> {
    dir: Option<PathBuf>,
    cfg: &'a RunConfig,
}

impl<'a> Output<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self> {
        if let Some(dir) = &cfg.out {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            fs::write(dir.join("run.toml"), cfg.to_toml()?)?;
        }
        Ok(Output { dir: cfg.out.clone(), cfg })
    }

    fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    fn report<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        if let (Some(path), true) = (self.path(name), self.cfg.emit.report) {
            let mut text = serde_json::to_string_pretty(value)?;
            text.push('\n');
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }

    fn table(&self, name: &str, plot: bool, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        let wanted = if plot { self.cfg.emit.plotdata } else { self.cfg.emit.csv };
        if let (Some(path), true) = (self.path(name), wanted) {
            let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
            w.write_record(header)?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

enum Loaded {
    System(DelaySystem),
    Invalid(String),
}

fn load_system(path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: SystemFile = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    } else {
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    };
    Ok(match DelaySystem::try_from(file) {
        Ok(sys) => Loaded::System(sys),
        Err(e) => Loaded::Invalid(e.to_string()),
    })
}

fn one_based(v: &[usize]) -> String {
    let items: Vec<String> = v.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

fn exponent_options(cfg: &RunConfig) -> ExponentOptions {
    let mut opts = ExponentOptions { horizon: cfg.horizon, step: cfg.step, norm: cfg.norm, ..Default::default() };
    if let Some(v) = cfg.max_horizon {
        opts.max_horizon = v;
    }
    if let Some(v) = cfg.renorm_period {
        opts.renorm_period = v;
    }
    if let Some(v) = cfg.slope_tol {
        opts.slope_tol = v;
    }
    if cfg.fixed_horizon {
        opts = opts.fixed();
    }
    opts
}

pub fn execute(cfg: &RunConfig) -> Result<u8> {
    cfg.check()?;
    let out = Output::new(cfg)?;
    if cfg.command == Command::CharRoot {
        return char_root(cfg, &out);
    }
    if cfg.command == Command::HullDemo {
        return hull(cfg, &out);
    }
    let path = cfg.system.as_deref().expect("checked");
    let sys = match load_system(path)? {
        Loaded::System(sys) => sys,
        Loaded::Invalid(msg) => {
            eprintln!("invalid system {}: {msg}", path.display());
            return Ok(EXIT_INVALID);
        }
    };
    match cfg.command {
        Command::Validate => validate(cfg, &out, &sys).map(|ok| if ok { EXIT_OK } else { EXIT_INVALID }),
        Command::Structure => {
            let s = condense(&zero_pattern(&sys));
            print_structure(&s);
            out.report("structure.json", &s)?;
            Ok(EXIT_OK)
        }
        Command::Exponents => {
            let s = condense(&zero_pattern(&sys));
            let blocks = block_exponents_for(&sys.linearized(), &s, &exponent_options(cfg))?;
            print_exponents(&blocks);
            write_exponents(&out, &blocks)?;
            Ok(EXIT_OK)
        }
        Command::Classify => classify(cfg, &out, &sys),
        Command::Simulate => simulate(cfg, &out, &sys),
        Command::HullDemo | Command::CharRoot => unreachable!(),
    }
}

fn run_validation(cfg: &RunConfig, sys: &DelaySystem) -> Result<ValidationReport> {
    Ok(sys.validate(
        cfg.grid_step.unwrap_or(DEFAULT_GRID_STEP),
        cfg.validation_horizon.unwrap_or(DEFAULT_VALIDATION_HORIZON),
    )?)
}

fn print_validation(sys: &DelaySystem, rep: &ValidationReport) {
    println!("system: {} patches, nonlinearity {:?}", sys.n(), sys.nonlinearity());
    for check in &rep.checks {
        let label = check.hypothesis.label();
        match &check.status {
            HypothesisStatus::Pass { method } => {
                println!("({label}) pass [{method:?}]  {}", check.hypothesis.description())
            }
            HypothesisStatus::Fail { patch, other, witness_t, value } => {
                let at = match other {
                    Some(j) => format!("entry ({}, {})", patch + 1, j + 1),
                    None => format!("patch {}", patch + 1),
                };
                println!(
                    "({label}) FAIL at {at}: witness t = {witness_t:.6}, value = {value:.6e}  {}",
                    check.hypothesis.description()
                );
            }
        }
    }
    println!("d0 = {:.6e}, c0 = {:.6e} (grid step {}, horizon {})", rep.d0, rep.c0, rep.grid_step, rep.horizon);
}

fn validate(cfg: &RunConfig, out: &Output, sys: &DelaySystem) -> Result<bool> {
    let rep = run_validation(cfg, sys)?;
    print_validation(sys, &rep);
    out.report("validation.json", &rep)?;
    Ok(rep.passed())
}

fn print_structure(s: &BlockStructure) {
    println!("blocks: {}", s.k());
    for (j, b) in s.blocks.iter().enumerate() {
        println!("  block {}: patches {}", j + 1, one_based(b));
    }
    println!("permutation: {}", one_based(&s.permutation));
    println!("I = {}", one_based(&s.i_set));
    println!("J = {}", one_based(&s.j_set));
}

fn print_exponents(blocks: &[BlockExponent]) {
    for b in blocks {
        let e = &b.estimate;
        println!(
            "block {} {}: exponent {:+.6} [{:?}] dispersion {:.2e} T = {} renorms {}",
            b.block + 1,
            one_based(&b.indices),
            e.value,
            e.status,
            e.dispersion,
            e.horizon,
            e.renorm_count
        );
    }
}

fn write_exponents(out: &Output, blocks: &[BlockExponent]) -> Result<()> {
    out.report("exponents.json", &blocks)?;
    let rows = blocks
        .iter()
        .map(|b| {
            let e = &b.estimate;
            vec![
                (b.block + 1).to_string(),
                e.value.to_string(),
                format!("{:?}", e.status).to_lowercase(),
                e.dispersion.to_string(),
                e.horizon.to_string(),
                e.renorm_count.to_string(),
            ]
        })
        .collect();
    out.table("exponents.csv", false, &["block", "value", "status", "dispersion", "T", "renorm_count"], rows)?;
    let slopes = blocks
        .iter()
        .flat_map(|b| {
            b.estimate.window_slopes.iter().map(move |w| {
                vec![(b.block + 1).to_string(), w.start.to_string(), w.end.to_string(), w.slope.to_string()]
            })
        })
        .collect();
    out.table("window_slopes.csv", true, &["block", "start", "end", "slope"], slopes)
}

fn print_decision(name: &str, d: &Decision) {
    println!(
        "{name} = {}  (margin {:.3e}, decisive block {})",
        d.verdict.as_str(),
        d.margin,
        d.decisive_block + 1
    );
}

#[derive(Serialize)]
struct ClassifyRecord<'a> {
    verdict: &'a PersistenceVerdict,
    empirical: Option<&'a EmpiricalReport>,
}

fn classify(cfg: &RunConfig, out: &Output, sys: &DelaySystem) -> Result<u8> {
    let rep = run_validation(cfg, sys)?;
    if !rep.passed() {
        print_validation(sys, &rep);
        out.report("validation.json", &rep)?;
        eprintln!("hypotheses fail; no verdict");
        return Ok(EXIT_INVALID);
    }
    let structure = condense(&zero_pattern(sys));
    let blocks = block_exponents_for(&sys.linearized(), &structure, &exponent_options(cfg))?;
    let estimates: Vec<_> = blocks.iter().map(|b| b.estimate.clone()).collect();
    let verdict = verdict_from(structure, &estimates, cfg.margin_tol.unwrap_or(DEFAULT_MARGIN_TOL));

    print_structure(&verdict.structure);
    print_exponents(&blocks);
    print_decision("u0", &verdict.u0);
    print_decision("s0", &verdict.s0);
    write_exponents(out, &blocks)?;

    let empirical = if cfg.empirical {
        let horizon = cfg.empirical_horizon.unwrap_or(DEFAULT_EMPIRICAL_HORIZON);
        let window = cfg.window.unwrap_or(horizon / 10.0);
        let rep = empirical_check(sys, &default_histories(sys), horizon, window, cfg.step)?;
        let cons = rep.consistency(&verdict);
        for r in &rep.runs {
            println!(
                "history {}: tail min {:.6e}, tail max {:.6e}, clamps {}",
                r.history + 1,
                r.u0_witness,
                r.tail_max.iter().copied().fold(0.0, f64::max),
                r.clamp.events
            );
        }
        for c in &cons.checked {
            println!("check: {c}");
        }
        for v in &cons.violations {
            println!("INCONSISTENT: {v}");
        }
        let rows = rep
            .runs
            .iter()
            .flat_map(|r| {
                (0..r.tail_min.len()).map(move |i| {
                    vec![
                        (r.history + 1).to_string(),
                        (i + 1).to_string(),
                        r.tail_min[i].to_string(),
                        r.tail_max[i].to_string(),
                    ]
                })
            })
            .collect();
        out.table("tails.csv", false, &["history", "component", "tail_min", "tail_max"], rows)?;
        Some(rep)
    } else {
        None
    };
    out.report("classify.json", &ClassifyRecord { verdict: &verdict, empirical: empirical.as_ref() })?;

    let uncertain = verdict.u0.verdict == Verdict::Uncertain || verdict.s0.verdict == Verdict::Uncertain;
    Ok(if cfg.strict && uncertain { EXIT_UNCERTAIN } else { EXIT_OK })
}

#[derive(Serialize)]
struct SimulateRecord {
    horizon: f64,
    step: f64,
    initial: Vec<f64>,
    final_state: Vec<f64>,
    clamp_events: usize,
    clamp_max_magnitude: f64,
}

fn simulate(cfg: &RunConfig, out: &Output, sys: &DelaySystem) -> Result<u8> {
    let n = sys.n();
    let initial = match cfg.history.as_deref() {
        None => vec![1.0; n],
        Some([v]) => vec![*v; n],
        Some(v) if v.len() == n => v.to_vec(),
        Some(v) => bail!("history has {} values, system has {n} patches", v.len()),
    };
    let horizon = cfg.horizon.unwrap_or(DEFAULT_SIM_HORIZON);
    let h = cfg.step.unwrap_or_else(|| default_step(sys.delays()));
    let traj = integrate(sys, &InitialHistory::from_values(&initial), horizon, h)?;
    let last = traj.knot(traj.num_knots() - 1).to_vec();
    println!("integrated to t = {} with step {}", traj.t_end(), traj.step());
    for (i, v) in last.iter().enumerate() {
        println!("  y_{} = {v:.10}", i + 1);
    }
    let stats = traj.clamp_stats();
    if stats.events > 0 {
        println!("clamped {} negative values (max magnitude {:.3e})", stats.events, stats.max_magnitude);
    }
    if let (Some(path), true) = (out.path("trajectory.csv"), cfg.emit.plotdata) {
        let file = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        traj.write_csv(BufWriter::new(file))?;
    }
    out.report(
        "simulate.json",
        &SimulateRecord {
            horizon: traj.t_end(),
            step: traj.step(),
            initial,
            final_state: last,
            clamp_events: stats.events,
            clamp_max_magnitude: stats.max_magnitude,
        },
    )?;
    Ok(EXIT_OK)
}

fn translate_rows(translates: &[TranslateResult]) -> Vec<Vec<String>> {
    translates
        .iter()
        .map(|t| vec![t.shift.to_string(), t.min_second_half.to_string(), t.recurrent.to_string()])
        .collect()
}

fn hull(cfg: &RunConfig, out: &Output) -> Result<u8> {
    let terms = cfg.terms.unwrap_or(DEFAULT_DEMO_TERMS);
    let horizon = cfg.horizon.unwrap_or(DEFAULT_DEMO_HORIZON);
    let tol = cfg.recurrence_tol.unwrap_or(DEFAULT_RECURRENCE_TOL);
    let header = ["shift", "minF_secondhalf", "recurrent"];
    match &cfg.shifts {
        Some(shifts) => {
            let rep = hull_demo(terms, horizon, shifts, tol)?;
            println!(
                "f = conley_miller({terms}), period {:.6}, T = {horizon}, tol = {tol}",
                rep.period
            );
            println!(
                "base: min F on [1, T] = {:.6e} at t = {:.6}",
                rep.base_min_after_one, rep.base_argmin_after_one
            );
            for t in &rep.translates {
                println!("shift {:.6}: min F over [T/2, T] = {:.6e} recurrent = {}", t.shift, t.min_second_half, t.recurrent);
            }
            println!("recurrent fraction = {}", rep.recurrent_fraction);
            out.table("hull_demo.csv", false, &header, translate_rows(&rep.translates))?;
            let base = rep
                .base
                .iter()
                .map(|p| vec![p.t.to_string(), p.integral.to_string(), p.min_after.to_string()])
                .collect();
            out.table("base_F.csv", true, &["t", "F", "min_after"], base)?;
            out.report("hull_demo.json", &rep)?;
        }
        None => {
            let f = conley_miller(terms)?;
            let rep = recurrence_scan(&f, horizon, cfg.scan.unwrap_or(DEFAULT_SCAN), cfg.seed, tol)?;
            println!(
                "f = conley_miller({terms}), T = {horizon}, tol = {tol}, {} shifts in [0, {:.6}) seed {}",
                rep.translates.len(),
                rep.shift_range,
                rep.seed
            );
            let min = rep.translates.iter().map(|t| t.min_second_half).fold(f64::INFINITY, f64::min);
            println!("smallest translate minimum = {min:.6e}");
            println!("recurrent fraction = {}", rep.recurrent_fraction);
            out.table("hull_demo.csv", false, &header, translate_rows(&rep.translates))?;
            out.report("hull_scan.json", &rep)?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CharRootRecord {
    d: f64,
    beta: f64,
    tau: f64,
    root: f64,
}

fn char_root(cfg: &RunConfig, out: &Output) -> Result<u8> {
    let [d, beta, tau] = cfg.char_root.expect("checked");
    let root = characteristic_root(d, beta, tau);
    println!("{root:.12}");
    out.report("char_root.json", &CharRootRecord { d, beta, tau, root })?;
    Ok(EXIT_OK)
}
