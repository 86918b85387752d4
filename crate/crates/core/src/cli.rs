//! Command-line front end.
//!
//! Exit status: 0 on success, 2 on invalid input, 1 on runtime failure.
//! A `--config FILE` of `key = value` lines supplies defaults for any long
//! flag of the chosen subcommand; flags given on the command line win.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{
    classify_two_period_series, detect_period, max_fidelity_before, predict_dtc_class,
    regular_points, Regime, SeriesFit, DEFAULT_EPSILON, DEFAULT_N_MAX,
};
use crate::error::{DtcError, Result};
use crate::floquet::{evolve, precompute, DriveParams};
use crate::hilbert::{x_polarized_state, SystemShape};
use crate::metrology::{fit_power_law, qfi_matrix, weighted_uncertainty, DEFAULT_DELTA};
use crate::milestones::{milestone_state, milestone_terms, MilestoneSpec, ParityCase};
use crate::observables::{magnetization, record, trajectory, Target};
use crate::spin::Axis;
use crate::sweep::{run_grid_with, to_csv_string, AxisRange, GridSpec, RunOptions};

/// Parses a spin string ("1/2", "2", "5/2") into 2s.
pub fn parse_spin(text: &str) -> Result<usize> {
    let t = text.trim();
    let bad = || DtcError::Validation(format!("invalid spin '{text}': use forms like 1/2, 2, 5/2"));
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let num: usize = num.parse().map_err(|_| bad())?;
    let two_s = match den {
        "1" => num.checked_mul(2).ok_or_else(bad)?,
        "2" => num,
        _ => return Err(bad()),
    };
    if two_s == 0 {
        return Err(DtcError::Validation(format!(
            "spin '{text}' must be positive"
        )));
    }
    Ok(two_s)
}

/// Formats 2s back into a spin string.
pub fn format_spin(two_s: usize) -> String {
    if two_s.is_multiple_of(2) {
        format!("{}", two_s / 2)
    } else {
        format!("{two_s}/2")
    }
}

/// Parses an angle in radians, accepting a `pi` factor: `2pi`, `pi/2`,
/// `-3pi/4`, `0.5pi`, or a plain number.
pub fn parse_angle(text: &str) -> Result<f64> {
    let t = text.trim().to_ascii_lowercase();
    let bad = || DtcError::Validation(format!("invalid angle '{text}'"));
    let value = match t.split_once("pi") {
        Some((coef, rest)) => {
            let c = match coef.trim() {
                "" | "+" => 1.0,
                "-" => -1.0,
                s => s.trim_end_matches('*').parse::<f64>().map_err(|_| bad())?,
            };
            let den = match rest.trim() {
                "" => 1.0,
                r => r
                    .strip_prefix('/')
                    .ok_or_else(bad)?
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| bad())?,
            };
            if den == 0.0 {
                return Err(bad());
            }
            c * std::f64::consts::PI / den
        }
        None => t.parse::<f64>().map_err(|_| bad())?,
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

fn angle(s: &str) -> std::result::Result<f64, String> {
    parse_angle(s).map_err(|e| e.to_string())
}

fn spin(s: &str) -> std::result::Result<usize, String> {
    parse_spin(s).map_err(|e| e.to_string())
}

fn axis(s: &str) -> std::result::Result<Axis, String> {
    s.parse::<Axis>().map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "dtc",
    version,
    about = "Exact stroboscopic dynamics of a kicked spin-s central spin model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the x-polarized state and write the per-period trajectory as CSV.
    Evolve(EvolveArgs),
    /// Compare tabulated time-crystal predictions with measured behaviour.
    Classify(ClassifyArgs),
    /// Scan a (lambda, g) grid and write the phase-map CSV.
    Sweep(SweepArgs),
    /// Quantum Fisher information versus time and/or number of satellites.
    Qfi(QfiArgs),
    /// Print the amplitudes of a milestone state.
    States(StatesArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ShapeArgs {
    /// Number of spin-1/2 satellites.
    #[arg(long)]
    pub n_sat: usize,
    /// Central spin as a rational string, e.g. 1/2, 2, 5/2.
    #[arg(long, value_parser = spin)]
    pub spin: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DriveArgs {
    /// Interaction strength in radians; accepts a pi factor such as 2pi or pi/2.
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    pub lambda: f64,
    /// Kick angle shared by satellites and central spin.
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    pub g: Option<f64>,
    /// Satellite kick angle (overrides --g for satellites).
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    pub g_s: Option<f64>,
    /// Central kick angle (overrides --g for the central spin).
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    pub g_c: Option<f64>,
}

impl DriveArgs {
    fn params(&self) -> Result<DriveParams> {
        let g_s = self.g_s.or(self.g);
        let g_c = self.g_c.or(self.g);
        match (g_s, g_c) {
            (Some(g_s), Some(g_c)) => Ok(DriveParams::with_kicks(self.lambda, g_s, g_c)),
            _ => Err(DtcError::Validation(
                "give --g or both --g-s and --g-c".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[command(flatten)]
    pub drive: DriveArgs,
    /// Number of Floquet periods.
    #[arg(long)]
    pub periods: usize,
    /// Magnetization axis reported in the CSV.
    #[arg(long, value_parser = axis, default_value = "x")]
    pub axis: Axis,
    /// Output file (standard output if omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// key=value file with defaults for these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// One of lambda-2pi, special, regular-1, regular-2.
    #[arg(long)]
    pub regime: String,
    /// Kick angle used in the lambda-2pi regime.
    #[arg(long, value_parser = angle, default_value = "3.0", allow_hyphen_values = true)]
    pub g: f64,
    /// Periods scanned for revivals.
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    pub n_max: usize,
    /// Revival tolerance on the fidelity.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// key=value file with defaults for these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Lower end of the lambda range.
    #[arg(long, value_parser = angle, default_value = "0", allow_hyphen_values = true)]
    pub lambda_min: f64,
    /// Upper end of the lambda range.
    #[arg(long, value_parser = angle, default_value = "4pi", allow_hyphen_values = true)]
    pub lambda_max: f64,
    /// Number of lambda samples.
    #[arg(long, default_value_t = 65)]
    pub lambda_steps: usize,
    /// Lower end of the g range.
    #[arg(long, value_parser = angle, default_value = "0", allow_hyphen_values = true)]
    pub g_min: f64,
    /// Upper end of the g range.
    #[arg(long, value_parser = angle, default_value = "2pi", allow_hyphen_values = true)]
    pub g_max: f64,
    /// Number of g samples.
    #[arg(long, default_value_t = 33)]
    pub g_steps: usize,
    /// Periods per grid point.
    #[arg(long, default_value_t = 200)]
    pub periods: usize,
    /// Stroboscopic stride for the magnetization averages.
    #[arg(long, default_value_t = 2)]
    pub stride: usize,
    /// Worker threads (default: all cores, capped by DTC_WORKERS).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Checkpoint file for resumable runs.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Output file (standard output if omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// key=value file with defaults for these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct QfiArgs {
    /// Number of satellites for the time scan.
    #[arg(long)]
    pub n_sat: Option<usize>,
    /// Central spin as a rational string.
    #[arg(long, value_parser = spin)]
    pub spin: usize,
    /// Interaction strength.
    #[arg(long, value_parser = angle, default_value = "pi", allow_hyphen_values = true)]
    pub lambda: f64,
    /// Kick angle (a single parameter for satellites and central spin).
    #[arg(long, value_parser = angle, default_value = "pi/2", allow_hyphen_values = true)]
    pub g: f64,
    /// Comma-separated period counts for the time scan (needs --n-sat).
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<usize>>,
    /// Comma-separated satellite counts for the size scan (uses --n).
    #[arg(long, value_delimiter = ',')]
    pub n_sat_list: Option<Vec<usize>>,
    /// Period count for the size scan.
    #[arg(long, default_value_t = 48)]
    pub n: usize,
    /// Finite-difference step.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    /// Output file (standard output if omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// key=value file with defaults for these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StatesArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Period index of the milestone.
    #[arg(long)]
    pub time: usize,
    /// Amplitudes with modulus at or below this are omitted.
    #[arg(long, default_value_t = 1e-12)]
    pub threshold: f64,
    /// Output file (standard output if omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// key=value file with defaults for these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| DtcError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| DtcError::Parse {
            row: i + 1,
            message: format!("expected key = value, got '{line}'"),
        })?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(DtcError::Parse {
                row: i + 1,
                message: "empty key".into(),
            });
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Splices config-file entries into argv after the subcommand, skipping
/// keys already given as flags.
fn merge_config(argv: Vec<String>) -> Result<Vec<String>> {
    let pos = argv
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else { return Ok(argv) };
    let path = match argv[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => argv
            .get(pos + 1)
            .cloned()
            .ok_or_else(|| DtcError::Validation("--config needs a file".into()))?,
    };
    let given: Vec<&str> = argv
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a))
        .collect();
    let extra: Vec<String> = read_config(Path::new(&path))?
        .into_iter()
        .filter(|(k, _)| k != "config" && !given.contains(&k.as_str()))
        .flat_map(|(k, v)| [format!("--{k}"), v])
        .collect();
    // argv[0] is the program, argv[1] the subcommand.
    let at = argv.len().min(2);
    let mut merged = argv[..at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&argv[at..]);
    Ok(merged)
}

fn exit_code(e: &DtcError) -> i32 {
    match e {
        DtcError::Io(_)
        | DtcError::StepSize(_)
        | DtcError::DegenerateInformation(_)
        | DtcError::InsufficientData(_)
        | DtcError::EmptyTrajectory => 1,
        _ => 2,
    }
}

fn emit(output: &Option<PathBuf>, text: &str, out: &mut dyn Write) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| DtcError::Io(format!("cannot write {}: {e}", path.display()))),
        None => out.write_all(text.as_bytes()).map_err(DtcError::from),
    }
}

fn shape_of(a: &ShapeArgs) -> Result<SystemShape> {
    SystemShape::new(a.n_sat, a.spin)
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn run_evolve(a: &EvolveArgs, out: &mut dyn Write) -> Result<()> {
    let shape = shape_of(&a.shape)?;
    let params = a.drive.params()?;
    let tables = precompute(shape, params)?;
    let initial = x_polarized_state(shape);
    let mut state = initial.clone();
    let ax = a.axis;
    let rows = evolve(&mut state, &tables, a.periods, |n, st| -> Result<String> {
        let r = record(st, n, &initial)?;
        let (ms, mc) = if ax == Axis::X {
            (r.m_sat_x, r.m_c_x)
        } else {
            (
                magnetization(st, Target::Satellites, ax),
                magnetization(st, Target::Central, ax),
            )
        };
        Ok(format!(
            "{n},{},{},{},{}\n",
            fmt(ms),
            fmt(mc),
            fmt(r.entropy),
            fmt(r.fidelity_initial)
        ))
    })?;
    let mut text = format!("n,m_sat_{ax},m_c_{ax},entropy,fidelity\n");
    for r in rows {
        text.push_str(&r?);
    }
    emit(&a.output, &text, out)
}

fn run_classify(a: &ClassifyArgs, out: &mut dyn Write) -> Result<()> {
    let shape = shape_of(&a.shape)?;
    let regime: Regime = a.regime.parse()?;
    let prediction = predict_dtc_class(shape.n_sat(), shape.two_s(), regime)?;
    let measure = |lambda: f64, g: f64| -> Result<(Option<usize>, f64)> {
        let traj = trajectory(shape, DriveParams::new(lambda, g), a.n_max)?;
        let report = detect_period(&traj, a.epsilon)?;
        let earlier = report
            .detected_period
            .map_or(0.0, |p| max_fidelity_before(&traj, p));
        Ok((report.detected_period, earlier))
    };
    let show = |p: Option<usize>| p.map_or("none".to_string(), |p| p.to_string());
    match regime {
        Regime::Lambda2Pi => {
            let periods = a.n_max.max(6);
            let traj = trajectory(
                shape,
                DriveParams::new(2.0 * std::f64::consts::PI, a.g),
                periods,
            )?;
            let even = |f: fn(&crate::observables::TrajectoryRecord) -> f64| -> Vec<f64> {
                traj.iter().step_by(2).map(f).collect()
            };
            let sat = classify_two_period_series(&even(|r| r.m_sat_x), a.g, 1e-8)?;
            let cen = classify_two_period_series(&even(|r| r.m_c_x), a.g, 1e-8)?;
            let describe = |fit: &SeriesFit| match fit {
                SeriesFit::PeriodDoubling => "period doubling".to_string(),
                SeriesFit::Sinusoidal { amplitude, .. } => {
                    format!("sinusoidal (amplitude {amplitude:.6})")
                }
                SeriesFit::Irregular { residual } => {
                    format!("irregular (cosine residual {residual:.3e})")
                }
            };
            let pred = |b: Option<crate::diagnostics::Behaviour>| {
                b.map_or("none".into(), |b| b.to_string())
            };
            writeln!(out, "shape {shape}, regime {regime}, g = {}", a.g)?;
            writeln!(
                out,
                "satellites: predicted {}, measured {}",
                pred(prediction.satellites),
                describe(&sat)
            )?;
            writeln!(
                out,
                "central: predicted {}, measured {}",
                pred(prediction.central),
                describe(&cen)
            )?;
        }
        Regime::SpecialHo => {
            let (p, earlier) = measure(std::f64::consts::PI, std::f64::consts::FRAC_PI_2)?;
            writeln!(
                out,
                "predicted {}, measured {}",
                show(prediction.period),
                show(p)
            )?;
            writeln!(out, "largest earlier fidelity {earlier:.6}")?;
        }
        Regime::RegularClass1 | Regime::RegularClass2 => {
            writeln!(out, "predicted {}", show(prediction.period))?;
            for (lambda, g) in regular_points(regime)? {
                let (p, _) = measure(lambda, g)?;
                writeln!(
                    out,
                    "(lambda, g) = ({:.6}pi, {:.6}pi): measured {}",
                    lambda / std::f64::consts::PI,
                    g / std::f64::consts::PI,
                    show(p)
                )?;
            }
        }
    }
    Ok(())
}

fn run_sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let spec = GridSpec {
        lambda_range: AxisRange::new(a.lambda_min, a.lambda_max, a.lambda_steps),
        g_range: AxisRange::new(a.g_min, a.g_max, a.g_steps),
        shape: shape_of(&a.shape)?,
        periods: a.periods,
        stride: a.stride,
    };
    if a.workers == Some(0) {
        return Err(DtcError::Validation("--workers must be at least 1".into()));
    }
    let options = RunOptions {
        workers: a.workers,
        checkpoint: a.checkpoint.clone(),
        max_new_points: None,
    };
    let run = run_grid_with(&spec, &options)?;
    for (i, failure) in run.failures() {
        if let crate::sweep::PointOutcome::Failed { lambda, g, error } = failure {
            writeln!(err, "point {i} (lambda={lambda}, g={g}) failed: {error}")?;
        }
    }
    emit(&a.output, &to_csv_string(&run.rows()?), out)
}

fn run_qfi(a: &QfiArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let params = DriveParams::new(a.lambda, a.g);
    let mut jobs: Vec<(usize, usize)> = Vec::new();
    if let Some(times) = &a.times {
        let n_sat = a
            .n_sat
            .ok_or_else(|| DtcError::Validation("--times needs --n-sat".into()))?;
        jobs.extend(times.iter().map(|&t| (n_sat, t)));
    }
    if let Some(sizes) = &a.n_sat_list {
        jobs.extend(sizes.iter().map(|&n| (n, a.n)));
    }
    if jobs.is_empty() {
        let n_sat = a
            .n_sat
            .ok_or_else(|| DtcError::Validation("give --n-sat or --n-sat-list".into()))?;
        jobs.push((n_sat, a.n));
    }
    let mut text = String::from(
        "n_sat,two_s,n,f_ll,f_gg,f_lg,g_scalar,f_ll_std,f_gg_std,f_lg_std,disagreement\n",
    );
    let mut time_points = Vec::new();
    let mut size_points = Vec::new();
    for (idx, &(n_sat, n)) in jobs.iter().enumerate() {
        let shape = SystemShape::new(n_sat, a.spin)?;
        let q = qfi_matrix(shape, params, n, a.delta)?;
        let g = weighted_uncertainty(&q).ok();
        if let Some(g) = g.filter(|g| *g > 0.0) {
            let from_times = a.times.as_ref().is_some_and(|t| idx < t.len());
            if from_times {
                time_points.push((n as f64, g));
            } else {
                size_points.push((n_sat as f64, g));
            }
        }
        text.push_str(&format!(
            "{n_sat},{},{n},{},{},{},{},{},{},{},{}\n",
            a.spin,
            fmt(q.f_ll),
            fmt(q.f_gg),
            fmt(q.f_lg),
            g.map_or("nan".to_string(), fmt),
            fmt(q.cross_check.f_ll),
            fmt(q.cross_check.f_gg),
            fmt(q.cross_check.f_lg),
            q.disagreement
        ));
    }
    for (label, pts) in [
        ("time exponent alpha", &time_points),
        ("size exponent beta", &size_points),
    ] {
        if pts.len() >= 3 {
            let (e, r2) = fit_power_law(pts)?;
            writeln!(err, "{label}: {e:.4} (r^2 = {r2:.4})")?;
        }
    }
    emit(&a.output, &text, out)
}

fn run_states(a: &StatesArgs, out: &mut dyn Write) -> Result<()> {
    let shape = shape_of(&a.shape)?;
    let spec = MilestoneSpec::new(ParityCase::of(shape), a.time);
    let terms = milestone_terms(shape, spec)?;
    let state = milestone_state(shape, spec)?;
    let mut text = format!(
        "# {} milestone at t={}T for {shape}\n",
        spec.parity_case.label(),
        a.time
    );
    for t in &terms {
        text.push_str(&format!(
            "# term ({:+.1}{:+.1}i) |{}{}>^{} (x) |{}s>^{}\n",
            t.coefficient.re,
            t.coefficient.im,
            if t.sat_sign == crate::spin::Sign::Plus {
                "+"
            } else {
                "-"
            },
            t.sat_axis,
            shape.n_sat(),
            if t.central_sign == crate::spin::Sign::Plus {
                "+"
            } else {
                "-"
            },
            t.central_axis
        ));
    }
    text.push_str("index,k_sat,l_c,re,im\n");
    for (i, amp) in state.amplitudes().iter().enumerate() {
        if amp.norm() > a.threshold {
            let (k, l) = shape.decode(i);
            text.push_str(&format!("{i},{k},{l},{},{}\n", fmt(amp.re), fmt(amp.im)));
        }
    }
    emit(&a.output, &text, out)
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit status.
pub fn parse_and_dispatch<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Evolve(a) => run_evolve(a, out),
        Command::Classify(a) => run_classify(a, out),
        Command::Sweep(a) => run_sweep(a, out, err),
        Command::Qfi(a) => run_qfi(a, out, err),
        Command::States(a) => run_states(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
