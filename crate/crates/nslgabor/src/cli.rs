//! The `nslg` command-line tool: transforms, dual/tight windows, lattice
//! diagnostics and the crossover benchmark.
//!
//! Data goes to stdout/files, diagnostics to stderr. Exit codes: 0 success,
//! 2 usage error, 3 numerical/frame failure, 4 infeasible parameters.

use crate::dgt::{pgauss, rel_err, Window};
use crate::error::{GaborError, Result};
use crate::flops::{
    flops_shear_auto, crossover_scan, ScanOptions, CROSSOVER_CSV_HEADER, FIG2_PAIRS,
};
use crate::io;
use crate::lattice::{
    min_length, noshear_factor, upper_form, GaborLattice,
};
use crate::nonsep::{dgtns, frame_op_apply, gabdualns, gabtightns, idgtns, Algorithm, DgtOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "nslg",
    version,
    about = "Discrete Gabor transforms on arbitrary (nonseparable) time-frequency lattices"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analyze a signal file into Gabor coefficients.
    Dgt(DgtArgs),
    /// Synthesize a signal from Gabor coefficients.
    Idgt(IdgtArgs),
    /// Compute the canonical dual window.
    Gabdual(WindowCmdArgs),
    /// Compute the canonical tight window.
    Gabtight(WindowCmdArgs),
    /// Inspect lattice parameters, feasible lengths and shear structure.
    Latinfo(LatinfoArgs),
    /// Run the lattice-complexity crossover benchmark (CSV on stdout).
    Bench(BenchArgs),
}

#[derive(Args)]
struct LatticeFlags {
    /// Time shift a.
    #[arg(long)]
    a: usize,
    /// Number of frequency channels M.
    #[arg(long = "M")]
    m: usize,
    /// Shear numerator lambda1 (0 for separable lattices).
    #[arg(long)]
    lp: usize,
    /// Shear denominator lambda2 (1 for separable lattices).
    #[arg(long)]
    lq: usize,
}

impl LatticeFlags {
    fn lattice(&self, l: usize) -> Result<GaborLattice> {
        GaborLattice::from_params(l, self.a, self.m, self.lp, self.lq)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Auto,
    Shear,
    Multiwin,
    Snf,
    Naive,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Algorithm {
        match a {
            AlgoArg::Auto => Algorithm::Auto,
            AlgoArg::Shear => Algorithm::Shear,
            AlgoArg::Multiwin => Algorithm::Multiwin,
            AlgoArg::Snf => Algorithm::Snf,
            AlgoArg::Naive => Algorithm::Naive,
        }
    }
}

#[derive(Args)]
struct DgtArgs {
    #[command(flatten)]
    lat: LatticeFlags,
    /// Input signal file (CSV or NSLG binary); L is inferred from it.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output coefficient file (.csv for text, NSLC binary otherwise).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    algorithm: AlgoArg,
    /// Analysis window: "gauss" or a window file.
    #[arg(long, default_value = "gauss")]
    window: String,
}

#[derive(Args)]
struct IdgtArgs {
    #[command(flatten)]
    lat: LatticeFlags,
    /// Input coefficient file; L is inferred from the grid and a.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output signal file.
    #[arg(long)]
    out: PathBuf,
    /// Synthesis window: "gauss" or a window file (pass a canonical dual,
    /// e.g. from `nslg gabdual`, for perfect reconstruction).
    #[arg(long, default_value = "gauss")]
    window: String,
}

#[derive(Args)]
struct WindowCmdArgs {
    #[command(flatten)]
    lat: LatticeFlags,
    /// Signal length (required with --window gauss; otherwise inferred).
    #[arg(long = "L")]
    l: Option<usize>,
    /// Input window: "gauss" or a window file.
    #[arg(long, default_value = "gauss")]
    window: String,
    /// Output window file.
    #[arg(long)]
    out: PathBuf,
    /// Verify the result (reconstruction for duals, frame-operator identity
    /// for tight windows) and fail with exit code 3 if it does not hold.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct LatinfoArgs {
    #[command(flatten)]
    lat: LatticeFlags,
    /// Signal length to analyze (optional).
    #[arg(long = "L")]
    l: Option<usize>,
    /// Emit machine-readable JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Time shift a (ignored with --preset).
    #[arg(long, required_unless_present = "preset")]
    a: Option<usize>,
    /// Channels M (ignored with --preset).
    #[arg(long = "M", required_unless_present = "preset")]
    m: Option<usize>,
    /// Largest lambda2 to sweep.
    #[arg(long = "lq-max", default_value_t = 10)]
    lq_max: usize,
    /// L = lcm(a, M) * L-factor.
    #[arg(long = "L-factor", default_value_t = 2520)]
    l_factor: usize,
    /// Timing repetitions per configuration (median reported).
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Preset sweeps: "fig2" runs (32,64), (40,60), (60,80).
    #[arg(long)]
    preset: Option<String>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_window(spec: &str, l: usize, lat: &GaborLattice) -> Result<Window> {
    if spec == "gauss" {
        return Ok(pgauss(l, lat.a() as f64 / lat.b() as f64));
    }
    let data = io::read_signal_file(std::path::Path::new(spec))?;
    if data.len() == l {
        Ok(Window::full(data))
    } else if data.len() < l {
        // Short windows are FIR, centered at sample 0.
        let half = data.len() / 2;
        Ok(Window::fir(data, (l - half) % l))
    } else {
        Err(GaborError::DimensionMismatch(format!(
            "window file has {} samples but L = {l}",
            data.len()
        )))
    }
}

fn cmd_dgt(args: &DgtArgs) -> Result<()> {
    let f = io::read_signal_file(&args.input)?;
    let lat = args.lat.lattice(f.len())?;
    let g = load_window(&args.window, lat.l(), &lat)?;
    let opts = DgtOptions { algorithm: args.algorithm.into(), ..DgtOptions::default() };
    let (c, choice) = dgtns(&f, &g, &lat, &opts)?;
    io::write_coef_file(&args.out, &c)?;
    let sd = lat.shear()?;
    let model = flops_shear_auto(&lat)?;
    eprintln!(
        "algorithm: {}; shear: s0={} s1={} b_r={}; model flops (shear row): {:.0}",
        choice.label, sd.s0, sd.s1, sd.b_r, model.flops
    );
    Ok(())
}

fn cmd_idgt(args: &IdgtArgs) -> Result<()> {
    let c = io::read_coef_file(&args.input)?;
    let l = c.n * args.lat.a;
    let lat = args.lat.lattice(l)?;
    if c.m != lat.m() {
        return Err(GaborError::DimensionMismatch(format!(
            "grid has {} rows but M = {}",
            c.m,
            lat.m()
        )));
    }
    let gd = load_window(&args.window, l, &lat)?;
    let f = idgtns(&c, &gd, &lat)?;
    io::write_signal_file(&args.out, &f)?;
    eprintln!("synthesized {} samples on lattice (a={}, M={})", l, lat.a(), lat.m());
    Ok(())
}

fn verify_window(kind: &str, lat: &GaborLattice, g: &Window, result: &Window) -> Result<()> {
    let l = lat.l();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let f: Vec<Complex64> = (0..l)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let err = match kind {
        "dual" => {
            let (c, _) = dgtns(&f, g, lat, &DgtOptions::default())?;
            let rec = idgtns(&c, result, lat)?;
            rel_err(&rec, &f)
        }
        _ => {
            let sf = frame_op_apply(&f, result, lat)?;
            rel_err(&sf, &f)
        }
    };
    eprintln!("verify ({kind}): relative error {err:.3e}");
    if err > 1e-8 {
        return Err(GaborError::NotAFrame(format!(
            "{kind} window failed verification: relative error {err:.3e}"
        )));
    }
    Ok(())
}

fn cmd_window(args: &WindowCmdArgs, tight: bool) -> Result<()> {
    let l = match (&args.l, args.window.as_str()) {
        (Some(l), _) => *l,
        (None, "gauss") => {
            return Err(GaborError::InvalidParameters(
                "--L is required with --window gauss".into(),
            ))
        }
        (None, path) => io::read_signal_file(std::path::Path::new(path))?.len(),
    };
    let lat = args.lat.lattice(l)?;
    let g = load_window(&args.window, l, &lat)?;
    let g = Window::full(g.to_full(l)?);
    let result = if tight { gabtightns(&g, &lat)? } else { gabdualns(&g, &lat)? };
    io::write_signal_file(&args.out, &result.to_full(l)?)?;
    if args.verify {
        verify_window(if tight { "tight" } else { "dual" }, &lat, &g, &result)?;
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct LatinfoReport {
    a: usize,
    m: usize,
    lambda1: usize,
    lambda2: usize,
    l_min: usize,
    noshear_c1: usize,
    noshear_factor: usize,
    noshear_stride: usize,
    l: Option<usize>,
    feasible: Option<bool>,
    nearest_feasible: Option<[usize; 2]>,
    normal_form: Option<NormalFormReport>,
}

#[derive(serde::Serialize)]
struct NormalFormReport {
    b: usize,
    s: usize,
    n: usize,
    upper: [[usize; 2]; 2],
    c: usize,
    d: usize,
    p: usize,
    q: usize,
    redundancy: String,
    s0: i64,
    s1: i64,
    b_r: usize,
    a_r: usize,
    freq_shear_needed: bool,
    multiwin_windows: usize,
    multiwin_base: [usize; 2],
}

fn cmd_latinfo(args: &LatinfoArgs) -> Result<()> {
    let (a, m, lp, lq) = (args.lat.a, args.lat.m, args.lat.lp, args.lat.lq);
    let l_min = min_length(a, m, lp, lq)?;
    let (c1, factor) = noshear_factor(a, m, lp, lq)?;
    let mut report = LatinfoReport {
        a,
        m,
        lambda1: lp,
        lambda2: lq,
        l_min,
        noshear_c1: c1,
        noshear_factor: factor,
        noshear_stride: l_min * factor,
        l: args.l,
        feasible: None,
        nearest_feasible: None,
        normal_form: None,
    };
    if let Some(l) = args.l {
        match args.lat.lattice(l) {
            Ok(lat) => {
                report.feasible = Some(true);
                let (c, d, p, q) = lat.constants();
                let up = upper_form(&lat);
                let sd = lat.shear()?;
                let mw = lat.multiwin();
                report.normal_form = Some(NormalFormReport {
                    b: lat.b(),
                    s: lat.s(),
                    n: lat.n(),
                    upper: [
                        [up.e[0][0] as usize, up.e[0][1] as usize],
                        [up.e[1][0] as usize, up.e[1][1] as usize],
                    ],
                    c,
                    d,
                    p,
                    q,
                    redundancy: format!("{q}/{p}"),
                    s0: sd.s0,
                    s1: sd.s1,
                    b_r: sd.b_r,
                    a_r: sd.a_r,
                    freq_shear_needed: sd.freq_shear_needed,
                    multiwin_windows: mw.lambda2,
                    multiwin_base: [mw.base_a, mw.base_b],
                });
            }
            Err(GaborError::IllegalLength { .. }) => {
                report.feasible = Some(false);
                let below = l / l_min * l_min;
                let above = (l / l_min + 1) * l_min;
                report.nearest_feasible = Some([below.max(l_min), above]);
            }
            Err(e) => return Err(e),
        }
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        return Ok(());
    }
    println!("lattice parameters: a={a}, M={m}, lambda={lp}/{lq}");
    println!("minimal feasible length L_min = {l_min} (all feasible L are multiples)");
    println!(
        "no-frequency-shear lengths: multiples of L_min*c/c1 = {} (c1 = {c1}, factor = {factor})",
        report.noshear_stride
    );
    match (&report.feasible, &report.normal_form) {
        (Some(true), Some(nf)) => {
            let l = args.l.unwrap();
            println!("L = {l}: feasible");
            println!(
                "  normal form [[a, 0], [s, b]] = [[{a}, 0], [{}, {}]], M={m}, N={}",
                nf.s, nf.b, nf.n
            );
            println!(
                "  upper form [[{}, {}], [0, {}]]",
                nf.upper[0][0], nf.upper[0][1], nf.upper[1][1]
            );
            println!(
                "  constants c={}, d={}, p={}, q={} (redundancy {})",
                nf.c, nf.d, nf.p, nf.q, nf.redundancy
            );
            if lq == 1 {
                println!("  separable; no shear required");
            } else {
                println!(
                    "  shearfind: s0={}, s1={}, rectangular lattice (a_r={}, b_r={}), \
                     frequency shear {}",
                    nf.s0,
                    nf.s1,
                    nf.a_r,
                    nf.b_r,
                    if nf.freq_shear_needed { "required" } else { "not required" }
                );
            }
            println!(
                "  multiwindow: {} windows over separable base ({}, {})",
                nf.multiwin_windows, nf.multiwin_base[0], nf.multiwin_base[1]
            );
        }
        (Some(false), _) => {
            let l = args.l.unwrap();
            let nearest = report.nearest_feasible.unwrap();
            println!(
                "L = {l}: infeasible; nearest feasible lengths are {} and {}",
                nearest[0], nearest[1]
            );
        }
        _ => {}
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let pairs: Vec<(usize, usize)> = match args.preset.as_deref() {
        Some("fig2") => FIG2_PAIRS.to_vec(),
        Some(other) => {
            return Err(GaborError::InvalidParameters(format!(
                "unknown preset {other:?} (expected \"fig2\")"
            )))
        }
        None => vec![(args.a.unwrap(), args.m.unwrap())],
    };
    let opts = ScanOptions { l_factor: args.l_factor, repeats: args.repeats, seed: args.seed };
    let mut csv = String::from(CROSSOVER_CSV_HEADER);
    csv.push('\n');
    for (a, m) in pairs {
        let mut skipped = Vec::new();
        let rows = crossover_scan(a, m, args.lq_max, &opts, &mut skipped)?;
        for note in skipped {
            eprintln!("skipped: {note}");
        }
        for row in rows {
            csv.push_str(&row.to_csv());
            csv.push('\n');
        }
    }
    match &args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn exit_code(e: &GaborError) -> i32 {
    match e {
        GaborError::IllegalLength { .. } | GaborError::InvalidParameters(_) => 4,
        GaborError::NotAFrame(_) => 3,
        _ => 1,
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Dgt(a) => cmd_dgt(a),
        Cmd::Idgt(a) => cmd_idgt(a),
        Cmd::Gabdual(a) => cmd_window(a, false),
        Cmd::Gabtight(a) => cmd_window(a, true),
        Cmd::Latinfo(a) => cmd_latinfo(a),
        Cmd::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
