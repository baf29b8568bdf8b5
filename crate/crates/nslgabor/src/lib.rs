//! Discrete Gabor transforms on arbitrary lattices of the finite
//! time-frequency plane `Z_L x Z_L`.
//!
//! Most Gabor/STFT tooling samples the time-frequency plane on a separable
//! (rectangular) grid `a Z x b Z`. This crate implements analysis, synthesis
//! and canonical dual/tight windows for *arbitrary* subgroup lattices,
//! including nonseparable ones such as the quincunx, via three interchangeable
//! reductions to the separable case:
//!
//! * the **shear algorithm** (chirp multiplications plus an FFT pair when a
//!   frequency-side shear is needed),
//! * the **multiwindow algorithm** (`lambda2` separable transforms against
//!   shifted/modulated windows),
//! * the **Smith-normal-form algorithm** (metaplectic operator transport).
//!
//! All three produce coefficients in the convention
//!
//! ```text
//! c(m, n) = sum_l f(l) conj(g(l - a n)) exp(-2 pi i l (m + w(n)) / M),
//! w(n) = mod(n lambda1, lambda2) / lambda2,
//! ```
//!
//! and are cross-validated against a direct-summation oracle. A flop-count
//! model of the algorithms and a timing benchmark (`flops` module, `nslg
//! bench`) support choosing between them.
//!
//! Entry points: [`GaborLattice`] for parameters, [`dgt`]/[`idgt`] for
//! transforms, [`gabdualns`]/[`gabtightns`] for windows, and the runnable
//! examples under `examples/`.

pub mod cli;
pub mod dgt;
pub mod error;
pub mod fft;
pub mod flops;
pub mod io;
pub mod lattice;
pub mod metaplectic;
pub mod nonsep;

pub use dgt::{
    dgt_fir, dgt_naive, dgt_sep, frame_bounds_sep, frame_matrix, frame_op_apply_sep, gabdual_sep,
    gabtight_sep, idgt_sep, pgauss, rel_err, CoefGrid, Domain, Signal, Window,
};
pub use error::{GaborError, Result};
pub use flops::{
    crossover_scan, flops_rect_fir, flops_rect_full, flops_shear_auto, flops_table, CrossoverRow,
    FlopAlgorithm, FlopDetails, FlopEstimate, ScanOptions,
};
pub use lattice::{
    ext_gcd, is_feasible, lattice_points, min_length, multiwin_decomp, normal_form,
    noshear_factor, shear_decomp, shearfind, smith2x2, upper_form, weil_decompose, ElFactor,
    GaborLattice, Mat2L, MultiwinDecomp, ShearDecomp, SmithDecomp, WeilFactors,
};
pub use metaplectic::{
    apply_elementary, metaplectic_apply, metaplectic_apply_inv, metaplectic_phase, pchirp,
    phase_shear, tf_shift_apply, ElementaryOp,
};
pub use nonsep::{
    dgtns, dgtns_multiwin, dgtns_ola, dgtns_shear, dgtns_snf, frame_bounds_ns, frame_op_apply,
    gabdualns, gabdualns_cg, gabtightns, idgtns, Algorithm, AlgorithmChoice, DgtOptions, OlaConfig,
};
