//! Command-line front end: experiment configuration, batch execution,
//! CSV/JSON result emission, and gnuplot script generation.
//!
//! Exit codes: 0 success, 2 unparseable config, 3 invariant violation,
//! 4 missing artifact, 10 blowup (artifacts still written).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use expheat::config::{ExperimentConfig, QVal};
use expheat::decay::{exponent_selector, mass_asymptotics};
use expheat::error::Error;
use expheat::grid::Field;
use expheat::orlicz::{luxemburg_norm, OrliczParams};
use expheat::snapshot::{read_snapshot, write_snapshot};
use expheat::solver::{integrate, picard_solve, SolverMode, Trajectory};

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 2;
const EXIT_INVARIANT: u8 = 3;
const EXIT_MISSING: u8 = 4;
const EXIT_BLOWUP: u8 = 10;

#[derive(Parser)]
#[command(name = "expheat", about = "Pseudospectral solver for semilinear heat equations with exponential nonlinearity", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one experiment and write the trajectory artifact.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides analysis.out_dir in the config).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Fit decay exponents of a stored trajectory against the theory.
    Decay {
        /// Trajectory artifact directory written by `solve`.
        #[arg(long)]
        trajectory: PathBuf,
        /// Comma-separated q values (numbers or `inf`); defaults to the
        /// values stored in the artifact.
        #[arg(long)]
        q_list: Option<String>,
        /// Fit window `t_min,t_max`; defaults to the configured window.
        #[arg(long)]
        window: Option<String>,
    },
    /// Mass convergence and heat-kernel profile diagnostics (needs
    /// snapshots; enable `analysis.snapshots` in the config).
    Profile {
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// Run many configs concurrently and aggregate their decay reports.
    Sweep {
        /// Config path or glob with a single `*` wildcard.
        #[arg(long)]
        configs: String,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// One-shot Luxemburg norm of the configured initial datum.
    OrliczNorm {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Everything `decay`/`profile` need that the CSV alone cannot carry.
#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    n: usize,
    theta: f64,
    r: f64,
    p: f64,
    p_star: f64,
    window: (f64, f64),
    q_list: Vec<QVal>,
    blowup_time: Option<f64>,
    final_boundary_fraction: f64,
    max_aliasing_fraction: f64,
    snapshots: bool,
    data_kind: String,
    data_amplitude: f64,
}

fn fmt_q(q: f64) -> String {
    if q.is_infinite() {
        "inf".into()
    } else if q.fract() == 0.0 {
        format!("{}", q as i64)
    } else {
        format!("{q}")
    }
}

fn parse_q(s: &str) -> Result<f64, Error> {
    if s.trim() == "inf" {
        Ok(f64::INFINITY)
    } else {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("bad q value {s:?}")))
    }
}

/// Full round-trip precision for CSV cells.
fn csv_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn data_summary(recipe: &expheat::data::DataRecipe) -> (String, f64) {
    use expheat::data::DataRecipe::*;
    match recipe {
        GaussianBump { amplitude, .. } => ("gaussian_bump".into(), *amplitude),
        LogSpike { amplitude, .. } => ("log_spike".into(), *amplitude),
        Indicator { amplitude, .. } => ("indicator".into(), *amplitude),
        Dilated { base, .. } => {
            let (kind, amp) = data_summary(base);
            (format!("dilated({kind})"), amp)
        }
        Scaled { base, factor } => {
            let (kind, amp) = data_summary(base);
            (format!("scaled({kind})"), amp * factor)
        }
    }
}

fn write_norms_csv(path: &Path, traj: &Trajectory) -> Result<(), Error> {
    let mut out = String::new();
    out.push_str("t,mass,orlicz_norm");
    for &q in &traj.norm_qs {
        out.push_str(&format!(",norm_q_{}", fmt_q(q)));
    }
    out.push('\n');
    for j in 0..traj.times.len() {
        out.push_str(&csv_num(traj.times[j]));
        out.push(',');
        out.push_str(&csv_num(traj.mass_series[j]));
        out.push(',');
        out.push_str(&csv_num(traj.orlicz_norms[j]));
        for &v in &traj.norms[j] {
            out.push(',');
            out.push_str(&csv_num(v));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn read_norms_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<Vec<f64>>), Error> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{}: empty norms file", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[0] != "t" {
        return Err(Error::Config(format!("{}: unexpected header {header:?}", path.display())));
    }
    let qs: Vec<f64> = cols[3..]
        .iter()
        .map(|c| parse_q(c.trim_start_matches("norm_q_")))
        .collect::<Result<_, _>>()?;
    let mut times = Vec::new();
    let mut mass = Vec::new();
    let mut orlicz = Vec::new();
    let mut norms = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.parse::<f64>().map_err(|_| Error::Config(format!("bad CSV cell {v:?}"))))
            .collect::<Result<_, _>>()?;
        if vals.len() != cols.len() {
            return Err(Error::Config(format!("{}: ragged CSV row", path.display())));
        }
        times.push(vals[0]);
        mass.push(vals[1]);
        orlicz.push(vals[2]);
        norms.push(vals[3..].to_vec());
    }
    Ok((times, mass, orlicz, qs, norms))
}

fn emit_gnuplot(dir: &Path, name: &str, data_file: &str, title: &str, ylabel: &str) -> Result<(), Error> {
    let script = format!(
        "set logscale xy\n\
         set xlabel 't'\n\
         set ylabel '{ylabel}'\n\
         set title '{title}'\n\
         set key outside\n\
         plot for [i=2:*] '{data_file}' using 1:i with linespoints title columnheader(i)\n"
    );
    std::fs::write(dir.join(name), script)?;
    Ok(())
}

fn cmd_solve(config_path: &Path, out_dir_flag: Option<PathBuf>) -> Result<u8, Error> {
    let cfg = ExperimentConfig::from_path(config_path)?;
    let out_dir = out_dir_flag
        .or_else(|| cfg.analysis.out_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out-dir or set analysis.out_dir".into()))?;
    std::fs::create_dir_all(&out_dir)?;

    let (spec, tg, solver) = cfg.build()?;
    let traj = match solver.mode {
        SolverMode::TimeMarch => integrate(&spec, &tg, &solver)?,
        SolverMode::GlobalPicard => picard_solve(&spec, &tg, &solver)?.trajectory,
    };

    let sel = exponent_selector(cfg.analysis.p, cfg.problem.n, cfg.problem.theta, cfg.problem.r)?;
    let (data_kind, data_amplitude) = data_summary(&cfg.data);
    let meta = Meta {
        n: cfg.problem.n,
        theta: cfg.problem.theta,
        r: cfg.problem.r,
        p: cfg.analysis.p,
        p_star: sel.p_star,
        window: cfg.window(),
        q_list: traj.norm_qs.iter().map(|&q| QVal(q)).collect(),
        blowup_time: traj.blowup_time,
        final_boundary_fraction: traj.final_boundary_fraction,
        max_aliasing_fraction: traj.max_aliasing_fraction,
        snapshots: cfg.analysis.snapshots,
        data_kind,
        data_amplitude,
    };
    std::fs::write(out_dir.join("config.json"), cfg.to_json()?)?;
    std::fs::write(
        out_dir.join("meta.json"),
        serde_json::to_string_pretty(&meta).map_err(|e| Error::Config(e.to_string()))?,
    )?;
    write_norms_csv(&out_dir.join("norms.csv"), &traj)?;
    if cfg.analysis.snapshots {
        let states_dir = out_dir.join("states");
        std::fs::create_dir_all(&states_dir)?;
        for (j, state) in traj.states.iter().enumerate() {
            write_snapshot(&states_dir.join(format!("{j:05}.bin")), state, traj.times[j])?;
        }
    }
    emit_gnuplot(&out_dir, "norms.gp", "norms.csv", "norm decay", "norm")?;
    if traj.max_aliasing_fraction > 1e-8 {
        eprintln!(
            "warning: top-band spectral energy fraction {:.3e} exceeds 1e-8; consider raising N",
            traj.max_aliasing_fraction
        );
    }
    if let Some(tb) = traj.blowup_time {
        eprintln!("blowup detected at t = {tb:.6e}; artifacts written to {}", out_dir.display());
        return Ok(EXIT_BLOWUP);
    }
    println!("trajectory written to {}", out_dir.display());
    Ok(EXIT_OK)
}

fn load_meta(dir: &Path) -> Result<Meta, Error> {
    let path = dir.join("meta.json");
    let text = std::fs::read_to_string(&path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn cmd_decay(dir: &Path, q_list: Option<String>, window: Option<String>) -> Result<u8, Error> {
    let meta = load_meta(dir)?;
    let (times, mass, orlicz, qs, norms) = read_norms_csv(&dir.join("norms.csv"))?;
    let _ = (&mass, &orlicz);
    let window = match window {
        Some(w) => {
            let parts: Vec<&str> = w.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Config(format!("bad --window {w:?}; use t_min,t_max")));
            }
            (
                parts[0].parse().map_err(|_| Error::Config("bad window start".into()))?,
                parts[1].parse().map_err(|_| Error::Config("bad window end".into()))?,
            )
        }
        None => meta.window,
    };
    let want_qs: Vec<f64> = match q_list {
        Some(list) => list.split(',').map(parse_q).collect::<Result<_, _>>()?,
        // the theoretical rate is only defined for q >= p*, so drop smaller
        // cached columns (q = 1 is always cached for the profile command)
        None => qs.iter().copied().filter(|&q| q >= meta.p_star).collect(),
    };

    let mut csv = String::from("q,fitted,theoretical,gap,r_squared,points,pass\n");
    let mut rows = Vec::new();
    for &q in &want_qs {
        let col = qs
            .iter()
            .position(|&c| c == q || (c.is_infinite() && q.is_infinite()))
            .ok_or_else(|| Error::Config(format!("q = {} not present in the artifact", fmt_q(q))))?;
        let ys: Vec<f64> = norms.iter().map(|row| row[col]).collect();
        let (slope, _, r2, m) = expheat::decay::fit_loglog(&times, &ys, window)?;
        let fitted = -slope;
        let theo = expheat::decay::theoretical_exponent(meta.n, meta.theta, meta.p_star, q)?;
        let gap = (fitted - theo).abs();
        let pass = gap <= 0.05;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_q(q),
            csv_num(fitted),
            csv_num(theo),
            csv_num(gap),
            csv_num(r2),
            m,
            if pass { "PASS" } else { "FAIL" }
        ));
        rows.push(serde_json::json!({
            "q": if q.is_infinite() { serde_json::json!("inf") } else { serde_json::json!(q) },
            "fitted": fitted,
            "theoretical": theo,
            "gap": gap,
            "r_squared": r2,
            "points": m,
            "pass": pass,
        }));
        println!(
            "q={:<4} fitted={:+.4} theoretical={:+.4} gap={:.4} R2={:.6} [{}]",
            fmt_q(q),
            fitted,
            theo,
            gap,
            r2,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    std::fs::write(dir.join("decay.csv"), csv)?;
    std::fs::write(
        dir.join("decay.json"),
        serde_json::to_string_pretty(&rows).map_err(|e| Error::Config(e.to_string()))?,
    )?;
    Ok(EXIT_OK)
}

fn cmd_profile(dir: &Path) -> Result<u8, Error> {
    let meta = load_meta(dir)?;
    if meta.blowup_time.is_some() {
        eprintln!("profile analysis rejects blowup trajectories");
        return Ok(EXIT_BLOWUP);
    }
    if !meta.snapshots {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{}: no state snapshots; rerun solve with analysis.snapshots=true", dir.display()),
        )));
    }
    let cfg = ExperimentConfig::from_path(&dir.join("config.json"))?;
    let (spec, _tg, solver) = cfg.build()?;

    // rebuild the trajectory from the stored snapshots
    let states_dir = dir.join("states");
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&states_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "bin"))
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{}: no snapshots found", states_dir.display()),
        )));
    }
    let mut times = Vec::new();
    let mut states: Vec<Field> = Vec::new();
    for p in &entries {
        let (f, t) = read_snapshot(p)?;
        times.push(t);
        states.push(f);
    }
    let (csv_times, mass, orlicz, qs, norms) = read_norms_csv(&dir.join("norms.csv"))?;
    if csv_times.len() != times.len() {
        return Err(Error::Config("snapshot count does not match the norms CSV".into()));
    }
    let traj = Trajectory {
        times,
        states,
        norm_qs: qs,
        norms,
        orlicz_norms: orlicz,
        mass_series: mass,
        blowup_time: None,
        final_boundary_fraction: meta.final_boundary_fraction,
        max_aliasing_fraction: meta.max_aliasing_fraction,
    };

    let report = mass_asymptotics(&traj, &spec, &[1.0, f64::INFINITY])?;
    let _ = solver;
    // monotone decrease of the rescaled profile error over the final decade
    let t_final = *report.times.last().unwrap();
    let mut decreasing = true;
    for col in &report.profile_errors {
        let tail: Vec<f64> = report
            .times
            .iter()
            .zip(col)
            .filter(|(t, _)| **t >= t_final / 10.0)
            .map(|(_, e)| *e)
            .collect();
        if tail.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-9)) {
            decreasing = false;
        }
    }

    let mut dat = String::from("t mass_tail");
    for &q in &report.profile_qs {
        dat.push_str(&format!(" profile_err_q_{}", fmt_q(q)));
    }
    dat.push('\n');
    for j in 0..report.times.len() {
        dat.push_str(&csv_num(report.times[j]));
        dat.push(' ');
        dat.push_str(&csv_num(report.mass_tail[j]));
        for col in &report.profile_errors {
            dat.push(' ');
            dat.push_str(&csv_num(col[j]));
        }
        dat.push('\n');
    }
    std::fs::write(dir.join("profile.dat"), dat)?;
    let json = serde_json::json!({
        "m_star_estimate": report.m_star_estimate,
        "m_final_raw": report.m_final_raw,
        "profile_error_decreasing_final_decade": decreasing,
    });
    std::fs::write(
        dir.join("profile.json"),
        serde_json::to_string_pretty(&json).map_err(|e| Error::Config(e.to_string()))?,
    )?;
    emit_gnuplot(dir, "profile.gp", "profile.dat", "rescaled profile error", "error")?;
    println!(
        "m* = {:.8e} (raw m(T) = {:.8e}); profile error decreasing over final decade: {}",
        report.m_star_estimate,
        report.m_final_raw,
        if decreasing { "PASS" } else { "FAIL" }
    );
    Ok(EXIT_OK)
}

/// Minimal glob: at most one `*` in the file-name component.
fn expand_glob(pattern: &str) -> Result<Vec<PathBuf>, Error> {
    if !pattern.contains('*') {
        let p = PathBuf::from(pattern);
        return if p.exists() { Ok(vec![p]) } else { Ok(vec![]) };
    }
    let path = Path::new(pattern);
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Config(format!("bad glob {pattern:?}")))?;
    let parts: Vec<&str> = name.split('*').collect();
    if parts.len() != 2 {
        return Err(Error::Config("glob supports a single '*' in the file name".into()));
    }
    let (prefix, suffix) = (parts[0], parts[1]);
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        if let Some(f) = p.file_name().and_then(|n| n.to_str()) {
            if f.starts_with(prefix) && f.ends_with(suffix) && f.len() >= prefix.len() + suffix.len()
            {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn cmd_sweep(pattern: &str, parallelism: usize, out_dir: Option<PathBuf>) -> Result<u8, Error> {
    let configs = expand_glob(pattern)?;
    if configs.is_empty() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no configs match {pattern:?}"),
        )));
    }
    let out_dir = out_dir.unwrap_or_else(|| PathBuf::from("sweep_out"));
    std::fs::create_dir_all(&out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    struct Row {
        config: String,
        summary: String,
        ok: bool,
    }
    let rows: Vec<Row> = pool.install(|| {
        use rayon::prelude::*;
        configs
            .par_iter()
            .map(|cfg_path| {
                let run = || -> Result<String, Error> {
                    let cfg = ExperimentConfig::from_path(cfg_path)?;
                    let (spec, tg, solver) = cfg.build()?;
                    let traj = match solver.mode {
                        SolverMode::TimeMarch => integrate(&spec, &tg, &solver)?,
                        SolverMode::GlobalPicard => picard_solve(&spec, &tg, &solver)?.trajectory,
                    };
                    let sel = exponent_selector(
                        cfg.analysis.p,
                        cfg.problem.n,
                        cfg.problem.theta,
                        cfg.problem.r,
                    )?;
                    let (kind, amp) = data_summary(&cfg.data);
                    let op = OrliczParams::new(cfg.problem.r)?;
                    let orlicz0 = luxemburg_norm(&spec.initial, &op)?;
                    let blowup = traj
                        .blowup_time
                        .map(|t| csv_num(t))
                        .unwrap_or_else(|| "".into());
                    // fitted sup-norm exponent where a fit is possible
                    let fitted = if traj.blowup_time.is_none() {
                        let ys = traj.norm_column(f64::INFINITY).unwrap_or_default();
                        expheat::decay::fit_loglog(&traj.times, &ys, cfg.window())
                            .map(|(s, _, _, _)| csv_num(-s))
                            .unwrap_or_default()
                    } else {
                        String::new()
                    };
                    Ok(format!(
                        "{},{},{},{},{},{},{},{},{},{}",
                        cfg.problem.n,
                        cfg.problem.theta,
                        cfg.problem.r,
                        cfg.analysis.p,
                        kind,
                        csv_num(amp),
                        csv_num(orlicz0),
                        csv_num(sel.p_star),
                        fitted,
                        blowup
                    ))
                };
                match run() {
                    Ok(summary) => Row {
                        config: cfg_path.display().to_string(),
                        summary,
                        ok: true,
                    },
                    Err(e) => Row {
                        config: cfg_path.display().to_string(),
                        summary: format!(",,,,,,,,,ERROR: {e}"),
                        ok: false,
                    },
                }
            })
            .collect()
    });

    let mut csv =
        String::from("config,n,theta,r,p,data_kind,amplitude,orlicz_norm,p_star,fitted_inf_exponent,blowup_time\n");
    let mut successes = 0;
    for row in &rows {
        csv.push_str(&format!("{},{}\n", row.config, row.summary));
        if row.ok {
            successes += 1;
        }
    }
    let agg = out_dir.join("sweep.csv");
    std::fs::write(&agg, csv)?;
    println!("{successes}/{} runs succeeded; aggregate at {}", rows.len(), agg.display());
    if successes == 0 {
        return Ok(EXIT_INVARIANT);
    }
    Ok(EXIT_OK)
}

fn cmd_orlicz_norm(config_path: &Path) -> Result<u8, Error> {
    let cfg = ExperimentConfig::from_path(config_path)?;
    let (spec, _, _) = cfg.build()?;
    let op = OrliczParams::new(cfg.problem.r)?;
    let norm = luxemburg_norm(&spec.initial, &op)?;
    println!("{norm:.16e}");
    Ok(EXIT_OK)
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::Blowup { .. } => EXIT_BLOWUP,
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING,
        _ => EXIT_INVARIANT,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { config, out_dir } => cmd_solve(&config, out_dir),
        Command::Decay { trajectory, q_list, window } => cmd_decay(&trajectory, q_list, window),
        Command::Profile { trajectory } => cmd_profile(&trajectory),
        Command::Sweep { configs, parallelism, out_dir } => {
            cmd_sweep(&configs, parallelism, out_dir)
        }
        Command::OrliczNorm { config } => cmd_orlicz_norm(&config),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
