//! Flop-count model of the DGT algorithms and the lattice-complexity
//! crossover scan.
//!
//! Costs count a complex FFT of length `M` as `4 M log2 M` flops, with
//! complex-valued signal and window. The structural constants are
//! `c = gcd(a, M)`, `d = gcd(b, N)`, `p = a/c = b/d`, `q = M/c = N/d`;
//! subscripted variants (`d_mw`, `d_sm`, `c_sh`, ...) are the same constants
//! evaluated on the rectangular lattice the given algorithm actually runs on
//! (the multiwindow sublattice, the Smith-diagonal lattice, the sheared
//! lattice). `k_time` is 1 when a time-side shear is applied and 0 otherwise;
//! the model treats it as a pure indicator.
//!
//! The model is advisory: measured crossovers depend on the machine, so the
//! dispatcher combines it with a configurable `lambda2` threshold instead of
//! autotuning.

use crate::dgt::{pgauss, Window};
use crate::error::{GaborError, Result};
use crate::lattice::{gcd, lcm, shear_decomp, GaborLattice};
use crate::nonsep::{dgtns_multiwin, dgtns_shear, dgtns_snf};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// Table rows of the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlopAlgorithm {
    MwFir,
    MwFull,
    Snf,
    ShearNoFreq,
    ShearFreq,
    ShearOlaNoFreq,
    ShearOlaFreq,
    RectFull,
    RectFir,
}

impl FlopAlgorithm {
    pub fn name(&self) -> &'static str {
        match self {
            FlopAlgorithm::MwFir => "mw_fir",
            FlopAlgorithm::MwFull => "mw_full",
            FlopAlgorithm::Snf => "snf",
            FlopAlgorithm::ShearNoFreq => "shear_no_freq",
            FlopAlgorithm::ShearFreq => "shear_freq",
            FlopAlgorithm::ShearOlaNoFreq => "shear_ola_no_freq",
            FlopAlgorithm::ShearOlaFreq => "shear_ola_freq",
            FlopAlgorithm::RectFull => "rect_full",
            FlopAlgorithm::RectFir => "rect_fir",
        }
    }
}

/// Constants that entered a model evaluation, echoed for inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlopDetails {
    pub c: usize,
    pub d: usize,
    pub p: usize,
    pub q: usize,
    /// Constant of the transformed rectangular lattice used by the row
    /// (`d_mw`, `d_sm`, `d` or `c_sh`/`c_shola` depending on the row).
    pub sub_constant: usize,
    pub q_mw: usize,
    pub rho: f64,
    pub k_time: usize,
}

/// One evaluated cost. `flops` is deterministic in the echoed inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct FlopEstimate {
    pub algorithm: FlopAlgorithm,
    pub flops: f64,
    pub l: usize,
    pub a: usize,
    pub m: usize,
    pub lambda1: usize,
    pub lambda2: usize,
    pub l_g: Option<usize>,
    pub l_b: Option<usize>,
    pub details: FlopDetails,
}

fn log2(x: f64) -> f64 {
    x.log2()
}

/// Full-window separable DGT on a rectangular lattice:
/// `L (8q + 4 log2 d) + 4 M N log2(L/p)`.
pub fn flops_rect_full(l: usize, a: usize, m: usize) -> f64 {
    let b = l / m;
    let n = l / a;
    let d = gcd(b as i64, n as i64) as f64;
    let c = gcd(a as i64, m as i64) as f64;
    let q = m as f64 / c;
    let p = a as f64 / c;
    l as f64 * (8.0 * q + 4.0 * log2(d)) + 4.0 * (m * n) as f64 * log2(l as f64 / p)
}

/// Uncollected form `8Lq + 4L log2 d + 4MN log2 d + 4MN log2 M`; equal to
/// [`flops_rect_full`] since `L/p = d M`.
pub fn flops_rect_full_expanded(l: usize, a: usize, m: usize) -> f64 {
    let b = l / m;
    let n = l / a;
    let d = gcd(b as i64, n as i64) as f64;
    let c = gcd(a as i64, m as i64) as f64;
    let q = m as f64 / c;
    8.0 * l as f64 * q
        + 4.0 * l as f64 * log2(d)
        + 4.0 * (m * n) as f64 * log2(d)
        + 4.0 * (m * n) as f64 * log2(m as f64)
}

/// FIR-window (weighted overlap-add) separable DGT:
/// `8 L L_g / a + 4 N M log2 M`.
pub fn flops_rect_fir(l: usize, a: usize, m: usize, l_g: usize) -> f64 {
    let n = l / a;
    8.0 * l as f64 * l_g as f64 / a as f64 + 4.0 * (n * m) as f64 * log2(m as f64)
}

/// Rectangular-lattice constants `(c, d, p, q)` for time shift `a` and `m`
/// channels at length `l`.
fn rect_constants(l: usize, a: usize, m: usize) -> (usize, usize, usize, usize) {
    let b = l / m;
    let n = l / a;
    let c = gcd(a as i64, m as i64) as usize;
    let d = gcd(b as i64, n as i64) as usize;
    (c, d, a / c, m / c)
}

/// Evaluate one row of the cost table for a lattice. OLA rows need `l_b`,
/// FIR rows need `l_g`.
pub fn flops_table(
    lat: &GaborLattice,
    algorithm: FlopAlgorithm,
    l_g: Option<usize>,
    l_b: Option<usize>,
) -> Result<FlopEstimate> {
    let l = lat.l();
    let (a, m) = (lat.a(), lat.m());
    let n = lat.n();
    let (lambda1, lambda2) = lat.lambda();
    let (c, d, p, q) = lat.constants();
    let mn = (m * n) as f64;
    let lf = l as f64;
    let need_lg = || {
        l_g.ok_or_else(|| {
            GaborError::InvalidParameters(format!(
                "{} requires the window length L_g",
                algorithm.name()
            ))
        })
    };
    let need_lb = || {
        l_b.ok_or_else(|| {
            GaborError::InvalidParameters(format!(
                "{} requires the block length L_b",
                algorithm.name()
            ))
        })
    };

    let mut details = FlopDetails {
        c,
        d,
        p,
        q,
        sub_constant: d,
        q_mw: q,
        rho: 1.0,
        k_time: 0,
    };

    let flops = match algorithm {
        FlopAlgorithm::RectFull => flops_rect_full(l, a, m),
        FlopAlgorithm::RectFir => flops_rect_fir(l, a, m, need_lg()?),
        FlopAlgorithm::MwFir => {
            let l_g = need_lg()?;
            8.0 * lf * l_g as f64 / a as f64 + 4.0 * mn * log2(m as f64)
        }
        FlopAlgorithm::MwFull => {
            // Constants of the sparse lattice (lambda2 a, b) with M channels.
            let a_t = a * lambda2;
            let (c_mw, d_mw, p_mw, q_mw) = rect_constants(l, a_t, m);
            let _ = c_mw;
            details.sub_constant = d_mw;
            details.q_mw = q_mw;
            lf * lambda2 as f64 * (8.0 * q_mw as f64 + 4.0 * log2(d_mw as f64))
                + mn * (4.0 * log2(lf / p_mw as f64) + 6.0)
        }
        FlopAlgorithm::Snf => {
            // d of the Smith-diagonal rectangular lattice (X, ab/X) with
            // X = gcd(a, s, b): time shift X, frequency shift ab/X.
            let x = gcd(gcd(a as i64, lat.s() as i64), lat.b() as i64) as usize;
            let b_sm = a * lat.b() / x;
            let m_sm = l / b_sm;
            let (_, d_sm, _, _) = rect_constants(l, x, m_sm);
            details.sub_constant = d_sm;
            lf * (8.0 * q as f64 + 4.0 * log2(d_sm as f64) + 8.0 * log2(lf) + 18.0)
                + mn * (4.0 * log2(lf / p as f64) + 6.0)
        }
        FlopAlgorithm::ShearNoFreq | FlopAlgorithm::ShearFreq => {
            let sd = shear_decomp(lat)?;
            let k_time = usize::from(sd.s1 != 0);
            details.k_time = k_time;
            if algorithm == FlopAlgorithm::ShearNoFreq {
                lf * (8.0 * q as f64 + 4.0 * log2(d as f64) + 6.0 * k_time as f64)
                    + mn * (4.0 * log2(lf / p as f64) + 6.0 * k_time as f64)
            } else {
                let c_sh = gcd(sd.a_r as i64, sd.m_r as i64) as usize;
                details.sub_constant = c_sh;
                lf * (8.0 * q as f64 + 4.0 * log2(lf * c_sh as f64) + 6.0 + 6.0 * k_time as f64)
                    + mn * (4.0 * log2(lf / p as f64) + 6.0)
            }
        }
        FlopAlgorithm::ShearOlaNoFreq | FlopAlgorithm::ShearOlaFreq => {
            let l_g = need_lg()?;
            let l_b = need_lb()?;
            let l_x = l_b + l_g;
            let rho = l_x as f64 / l_b as f64;
            details.rho = rho;
            // Shear data of the block-length problem.
            let lat_x = GaborLattice::from_params(l_x, a, m, lambda1, lambda2)?;
            let sd = shear_decomp(&lat_x)?;
            let k_time = usize::from(sd.s1 != 0);
            details.k_time = k_time;
            if algorithm == FlopAlgorithm::ShearOlaNoFreq {
                let b_x = l_x / m;
                let d_shola = gcd(b_x as i64, (l_x / a) as i64) as usize;
                details.sub_constant = d_shola;
                rho * lf * (8.0 * q as f64 + 4.0 * log2(rho * d_shola as f64) + 6.0 * k_time as f64)
                    + rho * mn * (4.0 * log2(rho * l_b as f64 / p as f64) + 6.0 * k_time as f64)
            } else {
                let c_shola = gcd(sd.a_r as i64, sd.m_r as i64) as usize;
                details.sub_constant = c_shola;
                rho * lf
                    * (8.0 * q as f64
                        + 4.0 * log2(rho * lf * c_shola as f64)
                        + 6.0 * k_time as f64
                        + 6.0)
                    + rho * mn * (4.0 * log2(rho * l_b as f64 / p as f64) + 6.0)
            }
        }
    };
    debug_assert!(flops > 0.0);
    Ok(FlopEstimate {
        algorithm,
        flops,
        l,
        a,
        m,
        lambda1,
        lambda2,
        l_g,
        l_b,
        details,
    })
}

/// The applicable shear row (frequency variant picked by `shearfind`).
pub fn flops_shear_auto(lat: &GaborLattice) -> Result<FlopEstimate> {
    let sd = shear_decomp(lat)?;
    let row = if sd.freq_shear_needed {
        FlopAlgorithm::ShearFreq
    } else {
        FlopAlgorithm::ShearNoFreq
    };
    flops_table(lat, row, None, None)
}

/// One measured row of the crossover scan.
#[derive(Debug, Clone)]
pub struct CrossoverRow {
    pub lambda1: usize,
    pub lambda2: usize,
    pub l: usize,
    pub a: usize,
    pub m: usize,
    pub algorithm: &'static str,
    pub flops_model: f64,
    pub time_ns_median: u128,
    pub freq_shear: bool,
    pub time_shear: bool,
}

/// CSV header of the crossover table (fixed column order).
pub const CROSSOVER_CSV_HEADER: &str =
    "lambda1,lambda2,L,a,M,algorithm,flops_model,time_ns_median,freq_shear,time_shear";

impl CrossoverRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.lambda1,
            self.lambda2,
            self.l,
            self.a,
            self.m,
            self.algorithm,
            self.flops_model,
            self.time_ns_median,
            self.freq_shear,
            self.time_shear
        )
    }
}

/// Scan options for [`crossover_scan`].
#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    /// `L = lcm(a, M) * l_factor` (2520 reproduces the reference setup).
    pub l_factor: usize,
    /// Timing repetitions per algorithm (median reported).
    pub repeats: usize,
    pub seed: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { l_factor: 2520, repeats: 5, seed: 0 }
    }
}

fn median_ns(mut samples: Vec<u128>) -> u128 {
    samples.sort_unstable();
    samples[samples.len() / 2]
}

/// Sweep `lambda2 = 1..=lambda2_max` at fixed `L = lcm(a, M) * l_factor`,
/// timing the three nonseparable algorithms against the model prediction.
/// Infeasible `lambda2` values are skipped (a note goes to `skipped`).
pub fn crossover_scan(
    a: usize,
    m: usize,
    lambda2_max: usize,
    opts: &ScanOptions,
    skipped: &mut Vec<String>,
) -> Result<Vec<CrossoverRow>> {
    let l = lcm(a as i64, m as i64) as usize * opts.l_factor;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let f: Vec<Complex64> = (0..l)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut rows = Vec::new();
    for lambda2 in 1..=lambda2_max {
        let lambda1 = usize::from(lambda2 > 1);
        if !crate::lattice::is_feasible(l, a, m, lambda1, lambda2) {
            skipped.push(format!(
                "lambda2 = {lambda2}: L = {l} infeasible for (a, M) = ({a}, {m})"
            ));
            continue;
        }
        let lat = GaborLattice::from_params(l, a, m, lambda1, lambda2)?;
        let sd = shear_decomp(&lat)?;
        let g = pgauss(l, lat.a() as f64 / lat.b() as f64);
        let mw_est = flops_table(&lat, FlopAlgorithm::MwFull, None, None)?;
        let sh_est = flops_shear_auto(&lat)?;
        let snf_est = flops_table(&lat, FlopAlgorithm::Snf, None, None)?;
        type Runner = Box<dyn Fn(&[Complex64], &Window, &GaborLattice) -> Result<crate::dgt::CoefGrid>>;
        let runners: Vec<(&'static str, f64, Runner)> = vec![
            ("multiwin", mw_est.flops, Box::new(|f, g, lat| dgtns_multiwin(f, g, lat))),
            ("shear", sh_est.flops, Box::new(|f, g, lat| dgtns_shear(f, g, lat))),
            ("snf", snf_est.flops, Box::new(|f, g, lat| dgtns_snf(f, g, lat))),
        ];
        for (name, model, run) in &runners {
            run(&f, &g, &lat)?; // warm-up (plans FFTs)
            let mut times = Vec::with_capacity(opts.repeats.max(1));
            for _ in 0..opts.repeats.max(1) {
                let t0 = Instant::now();
                let c = run(&f, &g, &lat)?;
                let dt = t0.elapsed().as_nanos();
                std::hint::black_box(c.data[0]);
                times.push(dt);
            }
            rows.push(CrossoverRow {
                lambda1,
                lambda2,
                l,
                a,
                m,
                algorithm: name,
                flops_model: *model,
                time_ns_median: median_ns(times),
                freq_shear: sd.freq_shear_needed,
                time_shear: sd.s1 != 0,
            });
        }
    }
    Ok(rows)
}

/// The three `(a, M)` pairs of the reference crossover experiment.
pub const FIG2_PAIRS: [(usize, usize); 3] = [(32, 64), (40, 60), (60, 80)];
