//! Separable-lattice transforms and frame machinery.
//!
//! The coefficient convention throughout is
//!
//! ```text
//! c(m, n) = sum_l f(l) conj(g(l - a n)) exp(-2 pi i l (m + w(n)) / M)
//! ```
//!
//! with `w(n) = mod(n lambda1, lambda2) / lambda2` (zero on separable
//! lattices). Indexing is 0-based, so the window argument is `g(l - a n)`.
//! Golden data from 1-based toolboxes may differ by a one-sample window
//! shift.
//!
//! [`dgt_naive`] is the direct-summation ground truth every fast path is
//! tested against. [`dgt_sep`] folds `f . conj(T_{an} g)` to length `M` and
//! applies one FFT per time step; [`dgt_fir`] touches only the window
//! support. Synthesis [`idgt_sep`] is the exact adjoint of [`dgt_sep`].
//!
//! Dual windows solve `S gd = g` with the frame operator `S` applied as
//! synthesis-after-analysis (conjugate gradient, the operator is Hermitian
//! PSD). Tight windows use `S^{-1/2} g` computed from the exact
//! block-diagonalization of the separable frame operator: `S` preserves the
//! cosets `l = j (mod M)`, so it splits into `M` Hermitian blocks of size
//! `b x b` which are small enough to eigendecompose directly.

use crate::error::{GaborError, Result};
use crate::fft;
use crate::lattice::{lattice_points, lcm, GaborLattice};
use crate::metaplectic::tf_shift_apply;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Size bound for the dense frame-matrix oracle.
pub const FRAME_MATRIX_BOUND: usize = 256;

/// Ratio `lambda_min/lambda_max` of the frame operator below which the
/// system is declared "not a frame".
pub const FRAME_EIG_TOL: f64 = 1e-10;

/// Relative residual target of the conjugate-gradient dual solver.
pub const CG_TOL: f64 = 1e-12;

/// Domain tag for signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Time,
    Frequency,
}

/// A length-L complex signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<Complex64>,
    pub domain: Domain,
}

impl Signal {
    pub fn time(samples: Vec<Complex64>) -> Self {
        Signal { samples, domain: Domain::Time }
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Analysis/synthesis window: full length or finitely supported.
#[derive(Debug, Clone, PartialEq)]
pub enum Window {
    /// Dense length-L window.
    Full(Vec<Complex64>),
    /// Finitely supported window: `g(start + t) = values[t]` for
    /// `t < values.len()`, zero elsewhere (indices mod L).
    Fir { values: Vec<Complex64>, start: usize },
}

impl Window {
    pub fn full(values: Vec<Complex64>) -> Self {
        Window::Full(values)
    }

    pub fn fir(values: Vec<Complex64>, start: usize) -> Self {
        Window::Fir { values, start }
    }

    /// Support length (`L_g` for FIR, the full length otherwise).
    pub fn support_len(&self) -> usize {
        match self {
            Window::Full(v) => v.len(),
            Window::Fir { values, .. } => values.len(),
        }
    }

    /// Zero-extended dense version of length `l`.
    pub fn to_full(&self, l: usize) -> Result<Vec<Complex64>> {
        match self {
            Window::Full(v) => {
                if v.len() != l {
                    return Err(GaborError::DimensionMismatch(format!(
                        "window length {} != L = {l}",
                        v.len()
                    )));
                }
                Ok(v.clone())
            }
            Window::Fir { values, start } => {
                if values.len() > l {
                    return Err(GaborError::DimensionMismatch(format!(
                        "FIR support {} exceeds L = {l}",
                        values.len()
                    )));
                }
                let mut out = vec![Complex64::new(0.0, 0.0); l];
                for (t, v) in values.iter().enumerate() {
                    out[(start + t) % l] = *v;
                }
                Ok(out)
            }
        }
    }
}

/// M x N coefficient grid, `c(m, n)` with frequency index `m` and time index
/// `n`. Stored column-major (one time step contiguous).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefGrid {
    pub m: usize,
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl CoefGrid {
    pub fn zeros(m: usize, n: usize) -> Self {
        CoefGrid { m, n, data: vec![Complex64::new(0.0, 0.0); m * n] }
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[n * self.m + m]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, v: Complex64) {
        self.data[n * self.m + m] = v;
    }

    pub fn col(&self, n: usize) -> &[Complex64] {
        &self.data[n * self.m..(n + 1) * self.m]
    }

    pub fn col_mut(&mut self, n: usize) -> &mut [Complex64] {
        &mut self.data[n * self.m..(n + 1) * self.m]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Relative l2 distance to another grid of the same shape.
    pub fn rel_err(&self, reference: &CoefGrid) -> f64 {
        assert_eq!((self.m, self.n), (reference.m, reference.n));
        let diff: f64 = self
            .data
            .iter()
            .zip(&reference.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den = reference.norm();
        if den == 0.0 {
            diff
        } else {
            diff / den
        }
    }
}

/// Relative l2 distance between two signals.
pub fn rel_err(x: &[Complex64], reference: &[Complex64]) -> f64 {
    let diff: f64 = x
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den = reference.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if den == 0.0 {
        diff
    } else {
        diff / den
    }
}

fn check_divisors(l: usize, a: usize, m: usize) -> Result<()> {
    if a == 0 || m == 0 || l == 0 || l % a != 0 || l % m != 0 {
        return Err(GaborError::IllegalLength {
            l,
            l_min: lcm(a.max(1) as i64, m.max(1) as i64) as usize,
        });
    }
    Ok(())
}

/// Size bound for the O(L M N) direct oracle.
pub const NAIVE_BOUND: usize = 8192;

/// Ground-truth DGT by direct summation, valid on any lattice.
pub fn dgt_naive(f: &[Complex64], g: &Window, lat: &GaborLattice) -> Result<CoefGrid> {
    let l = lat.l();
    if f.len() != l {
        return Err(GaborError::DimensionMismatch(format!(
            "signal length {} != L = {l}",
            f.len()
        )));
    }
    if l > NAIVE_BOUND {
        return Err(GaborError::OracleSizeLimit { l, bound: NAIVE_BOUND });
    }
    let gf = g.to_full(l)?;
    let (m_ch, n_st, a) = (lat.m(), lat.n(), lat.a());
    let (lambda1, lambda2) = lat.lambda();
    // Roots exp(-2 pi i t / (M lambda2)).
    let denom = m_ch * lambda2;
    let roots: Vec<Complex64> = (0..denom)
        .map(|t| Complex64::from_polar(1.0, -2.0 * PI * t as f64 / denom as f64))
        .collect();
    let mut out = CoefGrid::zeros(m_ch, n_st);
    for n in 0..n_st {
        let shift = a * n;
        let r = (n * lambda1) % lambda2;
        for m in 0..m_ch {
            // t(l) = l (m lambda2 + r) mod (M lambda2)
            let step = (m * lambda2 + r) % denom;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut t = 0usize;
            for li in 0..l {
                let gi = (li + l - shift % l) % l;
                acc += f[li] * gf[gi].conj() * roots[t];
                t += step;
                if t >= denom {
                    t -= denom;
                }
            }
            out.set(m, n, acc);
        }
    }
    Ok(out)
}

/// Separable DGT: fold `f . conj(T_{an} g)` to length `M`, then one
/// length-`M` FFT per time step.
pub fn dgt_sep(f: &[Complex64], g: &[Complex64], a: usize, m: usize) -> Result<CoefGrid> {
    let l = f.len();
    check_divisors(l, a, m)?;
    if g.len() != l {
        return Err(GaborError::DimensionMismatch(format!(
            "window length {} != L = {l}",
            g.len()
        )));
    }
    let n_st = l / a;
    let mut out = CoefGrid::zeros(m, n_st);
    for n in 0..n_st {
        let shift = a * n;
        let col = out.col_mut(n);
        for li in 0..l {
            let gi = (li + l - shift) % l;
            col[li % m] += f[li] * g[gi].conj();
        }
        fft::fft(col);
    }
    Ok(out)
}

/// Separable DGT for a finitely supported window; only the support is
/// touched, costing `O(L L_g / a + N M log M)`.
pub fn dgt_fir(
    f: &[Complex64],
    values: &[Complex64],
    start: usize,
    a: usize,
    m: usize,
) -> Result<CoefGrid> {
    let l = f.len();
    check_divisors(l, a, m)?;
    if values.len() > l {
        return Err(GaborError::DimensionMismatch(format!(
            "FIR support {} exceeds L = {l}",
            values.len()
        )));
    }
    let n_st = l / a;
    let mut out = CoefGrid::zeros(m, n_st);
    for n in 0..n_st {
        let base = a * n + start;
        let col = out.col_mut(n);
        for (t, v) in values.iter().enumerate() {
            let li = (base + t) % l;
            col[li % m] += f[li] * v.conj();
        }
        fft::fft(col);
    }
    Ok(out)
}

/// Separable synthesis, the adjoint of [`dgt_sep`]:
/// `f = sum_{m,n} c(m, n) M_{mb} T_{an} gd`.
pub fn idgt_sep(c: &CoefGrid, gd: &[Complex64], a: usize, m: usize) -> Result<Vec<Complex64>> {
    let l = gd.len();
    check_divisors(l, a, m)?;
    if c.m != m || c.n != l / a {
        return Err(GaborError::DimensionMismatch(format!(
            "grid {}x{} does not match (M, N) = ({m}, {})",
            c.m,
            c.n,
            l / a
        )));
    }
    let mut f = vec![Complex64::new(0.0, 0.0); l];
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for n in 0..c.n {
        col.copy_from_slice(c.col(n));
        fft::ifft(&mut col); // unnormalized: sum_m c e^{+2 pi i j m / M}
        let shift = a * n;
        for li in 0..l {
            let gi = (li + l - shift) % l;
            f[li] += col[li % m] * gd[gi];
        }
    }
    Ok(f)
}

/// Frame operator of a separable system applied to a signal
/// (synthesis after analysis with the same window).
pub fn frame_op_apply_sep(
    f: &[Complex64],
    g: &[Complex64],
    a: usize,
    m: usize,
) -> Result<Vec<Complex64>> {
    let c = dgt_sep(f, g, a, m)?;
    idgt_sep(&c, g, a, m)
}

/// Dense matrix of the frame operator `S = sum_z (pi(z) g)(pi(z) g)^H`.
/// Enumeration-based oracle, bounded to [`FRAME_MATRIX_BOUND`].
pub fn frame_matrix(g: &Window, lat: &GaborLattice) -> Result<DMatrix<Complex64>> {
    let l = lat.l();
    if l > FRAME_MATRIX_BOUND {
        return Err(GaborError::OracleSizeLimit { l, bound: FRAME_MATRIX_BOUND });
    }
    let gf = g.to_full(l)?;
    let mut s = DMatrix::<Complex64>::zeros(l, l);
    for (x, w) in lattice_points(lat)? {
        let atom = tf_shift_apply((x as i64, w as i64), &gf);
        for j in 0..l {
            let cj = atom[j].conj();
            for i in 0..l {
                s[(i, j)] += atom[i] * cj;
            }
        }
    }
    Ok(s)
}

// ---------------------------------------------------------------------------
// Walnut block structure of the separable frame operator
// ---------------------------------------------------------------------------

/// The separable frame operator maps the coset `{l : l = j (mod M)}` to
/// itself; this returns the `M` Hermitian `b x b` blocks
/// `B_j[r, r'] = M sum_n g(j + rM - na) conj(g(j + r'M - na))`.
fn walnut_blocks(g: &[Complex64], a: usize, m: usize) -> Vec<DMatrix<Complex64>> {
    let l = g.len();
    let b = l / m;
    let n_st = l / a;
    let mf = m as f64;
    (0..m)
        .map(|j| {
            // W[n, r] = conj(g(j + rM - na)), so that
            // (W^H W)[r, r'] = sum_n g(j + rM - na) conj(g(j + r'M - na)).
            let mut w = DMatrix::<Complex64>::zeros(n_st, b);
            for n in 0..n_st {
                let base = j + l * a - n * a; // keep positive before mod
                for r in 0..b {
                    w[(n, r)] = g[(base + r * m) % l].conj();
                }
            }
            let mut blk = w.adjoint() * w;
            blk.scale_mut(mf);
            blk
        })
        .collect()
}

/// Frame bounds (smallest and largest eigenvalue of the frame operator) via
/// the block diagonalization. Exact up to the dense eigensolver.
pub fn frame_bounds_sep(g: &[Complex64], a: usize, m: usize) -> Result<(f64, f64)> {
    check_divisors(g.len(), a, m)?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for blk in walnut_blocks(g, a, m) {
        let eig = blk.symmetric_eigenvalues();
        for ev in eig.iter() {
            lo = lo.min(*ev);
            hi = hi.max(*ev);
        }
    }
    Ok((lo.max(0.0), hi))
}

fn ensure_frame_sep(g: &[Complex64], a: usize, m: usize) -> Result<(f64, f64)> {
    if m < a {
        return Err(GaborError::NotAFrame(format!(
            "redundancy M/a = {m}/{a} < 1, the system cannot span C^L"
        )));
    }
    let (lo, hi) = frame_bounds_sep(g, a, m)?;
    if !(lo > FRAME_EIG_TOL * hi) {
        return Err(GaborError::NotAFrame(format!(
            "frame bound ratio {:.3e} below {FRAME_EIG_TOL:.0e}",
            if hi > 0.0 { lo / hi } else { 0.0 }
        )));
    }
    Ok((lo, hi))
}

/// Conjugate gradient for a Hermitian positive definite operator.
pub(crate) fn cg_solve<F>(apply: F, rhs: &[Complex64], tol: f64, max_iter: usize) -> Result<Vec<Complex64>>
where
    F: Fn(&[Complex64]) -> Result<Vec<Complex64>>,
{
    let n = rhs.len();
    let b_norm = rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); n]);
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rs: f64 = r.iter().map(|v| v.norm_sqr()).sum();
    for _ in 0..max_iter {
        if rs.sqrt() <= tol * b_norm {
            return Ok(x);
        }
        let ap = apply(&p)?;
        let pap: f64 = p.iter().zip(&ap).map(|(pi, api)| (pi.conj() * api).re).sum();
        if pap <= 0.0 || !pap.is_finite() {
            return Err(GaborError::NotAFrame(
                "frame operator not positive definite in CG".into(),
            ));
        }
        let alpha = rs / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v.norm_sqr()).sum();
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rs.sqrt() <= tol * b_norm {
        Ok(x)
    } else {
        Err(GaborError::NotAFrame(format!(
            "conjugate gradient stagnated at relative residual {:.3e}",
            rs.sqrt() / b_norm
        )))
    }
}

/// Canonical dual window `gd = S^-1 g` of a separable system, by conjugate
/// gradient on the Hermitian PSD frame operator (relative residual
/// [`CG_TOL`], iteration cap `10 L`).
pub fn gabdual_sep(g: &Window, a: usize, m: usize) -> Result<Window> {
    let gf = match g {
        Window::Full(v) => v.clone(),
        Window::Fir { .. } => {
            return Err(GaborError::DimensionMismatch(
                "gabdual_sep needs a full-length window; zero-extend FIR windows first".into(),
            ))
        }
    };
    let l = gf.len();
    check_divisors(l, a, m)?;
    ensure_frame_sep(&gf, a, m)?;
    let gd = cg_solve(
        |v| frame_op_apply_sep(v, &gf, a, m),
        &gf,
        CG_TOL,
        10 * l,
    )?;
    Ok(Window::Full(gd))
}

/// Canonical tight window `gt = S^(-1/2) g` of a separable system, via the
/// exact block eigendecomposition of the frame operator.
pub fn gabtight_sep(g: &Window, a: usize, m: usize) -> Result<Window> {
    let l_hint = match g {
        Window::Full(v) => v.len(),
        Window::Fir { .. } => {
            return Err(GaborError::DimensionMismatch(
                "gabtight_sep needs a full-length window; zero-extend FIR windows first".into(),
            ))
        }
    };
    let gf = g.to_full(l_hint)?;
    let l = gf.len();
    check_divisors(l, a, m)?;
    if m < a {
        return Err(GaborError::NotAFrame(format!(
            "redundancy M/a = {m}/{a} < 1, the system cannot span C^L"
        )));
    }
    let b = l / m;
    let blocks = walnut_blocks(&gf, a, m);
    let mut hi = 0.0f64;
    let mut lo = f64::INFINITY;
    let eigs: Vec<_> = blocks
        .into_iter()
        .map(|blk| {
            let se = blk.symmetric_eigen();
            for ev in se.eigenvalues.iter() {
                hi = hi.max(*ev);
                lo = lo.min(*ev);
            }
            se
        })
        .collect();
    if !(lo > FRAME_EIG_TOL * hi) {
        return Err(GaborError::NotAFrame(format!(
            "frame bound ratio {:.3e} below {FRAME_EIG_TOL:.0e}",
            if hi > 0.0 { lo.max(0.0) / hi } else { 0.0 }
        )));
    }
    let mut gt = vec![Complex64::new(0.0, 0.0); l];
    for (j, se) in eigs.iter().enumerate() {
        let gj = DVector::from_iterator(b, (0..b).map(|r| gf[j + r * m]));
        let mut coord = se.eigenvectors.adjoint() * gj;
        for (i, c) in coord.iter_mut().enumerate() {
            *c /= se.eigenvalues[i].sqrt();
        }
        let gtj = &se.eigenvectors * coord;
        for r in 0..b {
            gt[j + r * m] = gtj[r];
        }
    }
    Ok(Window::Full(gt))
}

/// Unit-norm periodized Gaussian `g(l) ~ sum_k exp(-pi (l + kL)^2 / (tfr L))`.
///
/// `tfr = a/b` matches the window to the lattice cell. At `tfr = 1` the
/// window is invariant under the unitary DFT.
pub fn pgauss(l: usize, tfr: f64) -> Window {
    assert!(l >= 1 && tfr > 0.0);
    let lf = l as f64;
    let mut g = vec![0.0f64; l];
    for (j, gj) in g.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in -3i64..=3 {
            let t = j as f64 + k as f64 * lf;
            acc += (-PI * t * t / (tfr * lf)).exp();
        }
        *gj = acc;
    }
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    Window::Full(g.into_iter().map(|v| Complex64::new(v / norm, 0.0)).collect())
}
