//! Signal-domain (metaplectic) operators for elementary symplectic matrices.
//!
//! Each elementary matrix acts on signals so that time-frequency shifts are
//! intertwined up to an explicit unit phase:
//!
//! ```text
//!     U pi(z) = phi(z) pi(M z) U
//! ```
//!
//! with `pi(x, omega) = M_omega T_x`. The assignments used here (and verified
//! by the commutation tests below) are, for `F = [[0,-1],[1,0]]`,
//! `S_c = [[1,0],[c,1]]`, `D_a = diag(a, a^-1)`:
//!
//! * unitary DFT          -> matrix `F^-1 = [[0,1],[-1,0]]`, `phi = exp(2 pi i x w / L)`
//! * unitary inverse DFT  -> matrix `F`,                     `phi = exp(2 pi i x w / L)`
//! * chirp product with `pchirp(L, c)` -> `S_c`,             `phi = exp(-pi i c x^2 (L+1)/L)`
//! * dilation `f(a^-1 .)` -> `D_a`,                          `phi = 1`
//!
//! Note the DFT with the `exp(-2 pi i k l / L)` kernel sends `(x, w)` to
//! `(w, -x)`, which is the action of `F^-1`, not `F`; the pairing above keeps
//! matrix products and operator compositions aligned. All phase exponents are
//! computed in integer arithmetic modulo `2L`, so phases are bit-reproducible.

use crate::error::{GaborError, Result};
use crate::fft;
use crate::lattice::{gcd, mod_inv, ElFactor, Mat2L, WeilFactors};
use num_complex::Complex64;
use std::f64::consts::PI;

/// `exp(pi i t / L)` for integer `t` (reduced mod `2L` by the callers).
#[inline]
fn unit_phase(t: i128, l: usize) -> Complex64 {
    Complex64::from_polar(1.0, PI * t as f64 / l as f64)
}

/// The periodic chirp `p(j) = exp(pi i s j^2 (L+1)/L)`.
///
/// `p` is L-periodic in `j` and 2L-periodic in `s`; the exponent is reduced
/// modulo `2L` in integer arithmetic before any floating-point evaluation.
pub fn pchirp(l: usize, s: i64) -> Vec<Complex64> {
    assert!(l >= 1);
    let two_l = 2 * l as i128;
    let s_red = (s as i128).rem_euclid(two_l);
    let lp1 = (l as i128 + 1).rem_euclid(two_l);
    (0..l)
        .map(|j| {
            let j = j as i128;
            let t = ((j * j).rem_euclid(two_l) * s_red).rem_euclid(two_l) * lp1 % two_l;
            unit_phase(t.rem_euclid(two_l), l)
        })
        .collect()
}

/// Chirp value at a single (possibly large) index.
pub fn pchirp_at(l: usize, s: i64, j: i64) -> Complex64 {
    let two_l = 2 * l as i128;
    let s_red = (s as i128).rem_euclid(two_l);
    let j = (j as i128).rem_euclid(two_l);
    let lp1 = (l as i128 + 1).rem_euclid(two_l);
    let t = ((j * j).rem_euclid(two_l) * s_red).rem_euclid(two_l) * lp1 % two_l;
    unit_phase(t.rem_euclid(two_l), l)
}

/// An elementary metaplectic operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementaryOp {
    /// Unitary DFT (`1/sqrt(L)` normalization).
    Fourier,
    /// Unitary inverse DFT.
    InvFourier,
    /// Pointwise multiplication by `pchirp(L, c)`.
    Chirp(i64),
    /// `g(j) = f(a^-1 j mod L)`; `a` must be invertible mod L.
    Dilation(i64),
}

impl ElementaryOp {
    /// The lattice transform this operator realizes on time-frequency labels.
    pub fn matrix(&self, l: i64) -> Mat2L {
        match *self {
            ElementaryOp::Fourier => Mat2L::new(l, [[0, 1], [-1, 0]]),
            ElementaryOp::InvFourier => Mat2L::new(l, [[0, -1], [1, 0]]),
            ElementaryOp::Chirp(c) => Mat2L::new(l, [[1, 0], [c, 1]]),
            ElementaryOp::Dilation(a) => {
                let ainv = mod_inv(a, l).expect("dilation parameter invertible");
                Mat2L::new(l, [[a, 0], [0, ainv]])
            }
        }
    }

    /// Phase factor `phi(z)` in `U pi(z) = phi(z) pi(M z) U`.
    pub fn phase(&self, z: (i64, i64), l: usize) -> Complex64 {
        let two_l = 2 * l as i128;
        let (x, w) = (z.0 as i128, z.1 as i128);
        match *self {
            ElementaryOp::Fourier | ElementaryOp::InvFourier => {
                // exp(2 pi i x w / L) = exp(pi i (2 x w) / L)
                unit_phase((2 * x % two_l * (w % two_l)).rem_euclid(two_l), l)
            }
            ElementaryOp::Chirp(c) => {
                let c = (c as i128).rem_euclid(two_l);
                let lp1 = (l as i128 + 1) % two_l;
                let t = ((x * x).rem_euclid(two_l) * c).rem_euclid(two_l) * lp1 % two_l;
                unit_phase((-t).rem_euclid(two_l), l)
            }
            ElementaryOp::Dilation(_) => Complex64::new(1.0, 0.0),
        }
    }

    /// Inverse operator.
    pub fn inverse(&self, l: i64) -> Result<ElementaryOp> {
        Ok(match *self {
            ElementaryOp::Fourier => ElementaryOp::InvFourier,
            ElementaryOp::InvFourier => ElementaryOp::Fourier,
            ElementaryOp::Chirp(c) => ElementaryOp::Chirp((-c).rem_euclid(2 * l)),
            ElementaryOp::Dilation(a) => ElementaryOp::Dilation(mod_inv(a, l)?),
        })
    }
}

/// Operator realizing one matrix-level Weil factor. The DFT with negative
/// kernel acts as `F^-1` on labels, so the `F` factor maps to the inverse DFT.
pub fn factor_op(f: &ElFactor) -> ElementaryOp {
    match *f {
        ElFactor::F => ElementaryOp::InvFourier,
        ElFactor::FInv => ElementaryOp::Fourier,
        ElFactor::S(c) => ElementaryOp::Chirp(c),
        ElFactor::D(a) => ElementaryOp::Dilation(a),
    }
}

/// Apply one elementary operator.
pub fn apply_elementary(op: &ElementaryOp, f: &[Complex64]) -> Result<Vec<Complex64>> {
    let l = f.len();
    match *op {
        ElementaryOp::Fourier => {
            let mut buf = f.to_vec();
            fft::fft_unitary(&mut buf);
            Ok(buf)
        }
        ElementaryOp::InvFourier => {
            let mut buf = f.to_vec();
            fft::ifft_unitary(&mut buf);
            Ok(buf)
        }
        ElementaryOp::Chirp(c) => {
            let p = pchirp(l, c);
            Ok(f.iter().zip(&p).map(|(v, w)| v * w).collect())
        }
        ElementaryOp::Dilation(a) => {
            let li = l as i64;
            if gcd(a, li) != 1 {
                return Err(GaborError::NonInvertibleDilation { a, l: li });
            }
            let ainv = mod_inv(a, li)?;
            Ok((0..li)
                .map(|j| f[((ainv as i128 * j as i128).rem_euclid(li as i128)) as usize])
                .collect())
        }
    }
}

/// Apply the metaplectic operator of a Weil factor chain.
///
/// Factor lists are matrix products read left to right, so the rightmost
/// factor acts on the signal first.
pub fn metaplectic_apply(wf: &WeilFactors, f: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut cur = f.to_vec();
    for fac in wf.factors.iter().rev() {
        cur = apply_elementary(&factor_op(fac), &cur)?;
    }
    Ok(cur)
}

/// Apply the inverse of [`metaplectic_apply`].
pub fn metaplectic_apply_inv(wf: &WeilFactors, f: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut cur = f.to_vec();
    for fac in wf.factors.iter() {
        let op = factor_op(fac).inverse(wf.l)?;
        cur = apply_elementary(&op, &cur)?;
    }
    Ok(cur)
}

/// Accumulated phase `phi_M(z)` of the chain: with `M = M_1 ... M_k` and
/// `U_M = U_{M_1} ... U_{M_k}`,
/// `phi_M(z) = phi_{M_k}(z) phi_{M_{k-1}}(M_k z) ... phi_{M_1}(M_2 ... M_k z)`.
pub fn metaplectic_phase(wf: &WeilFactors, z: (i64, i64)) -> Complex64 {
    let l = wf.l as usize;
    let mut phase = Complex64::new(1.0, 0.0);
    let mut cur = (z.0.rem_euclid(wf.l), z.1.rem_euclid(wf.l));
    for fac in wf.factors.iter().rev() {
        let op = factor_op(fac);
        phase *= op.phase(cur, l);
        cur = op.matrix(wf.l).apply(cur);
    }
    phase
}

/// Time-frequency shift `(pi(x, w) f)(l) = exp(2 pi i l w / L) f(l - x)`.
pub fn tf_shift_apply(z: (i64, i64), f: &[Complex64]) -> Vec<Complex64> {
    let l = f.len();
    let li = l as i64;
    let x = z.0.rem_euclid(li);
    let w = z.1.rem_euclid(li);
    (0..l)
        .map(|j| {
            let src = ((j as i64 - x).rem_euclid(li)) as usize;
            let t = (2 * (j as i128) * (w as i128)).rem_euclid(2 * l as i128);
            f[src] * unit_phase(t, l)
        })
        .collect()
}

/// Phase factor of the two-shear reduction,
/// `exp(pi i (s0 w^2 - s1 (x - s0 w)^2)(L+1)/L)`, exponent in exact integer
/// arithmetic mod `2L`.
///
/// With `V = S_{s1} F^-1 S_{s0} F` and `U_V` its metaplectic operator, this
/// is the factor in
/// `< U_V f, pi(V z) U_V g > = phase_shear(z) < f, pi(z) g >`.
pub fn phase_shear(z: (i64, i64), s0: i64, s1: i64, l: usize) -> Complex64 {
    let two_l = 2 * l as i128;
    let (x, w) = (z.0 as i128, z.1 as i128);
    let (s0, s1) = (s0 as i128, s1 as i128);
    let y = (x - s0 * w).rem_euclid(two_l);
    let lp1 = (l as i128 + 1) % two_l;
    let t = ((s0.rem_euclid(two_l) * ((w * w).rem_euclid(two_l))).rem_euclid(two_l)
        + two_l
        - (s1.rem_euclid(two_l) * ((y * y) % two_l)).rem_euclid(two_l))
        .rem_euclid(two_l)
        * lp1
        % two_l;
    unit_phase(t.rem_euclid(two_l), l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{shear_matrix, weil_decompose};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn rand_signal(rng: &mut ChaCha8Rng, l: usize) -> Vec<Complex64> {
        (0..l)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn pchirp_examples() {
        let p = pchirp(7, 0);
        assert!(p.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-15));

        // pchirp(4, 1): exponents mod(5 j^2, 8) = 0, 5, 4, 5 over pi/4.
        let p = pchirp(4, 1);
        let expect = [0, 5, 4, 5].map(|t| Complex64::from_polar(1.0, PI * t as f64 / 4.0));
        for (a, b) in p.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-15);
        }

        // Unit modulus and periodicity in j and in s (period 2L).
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let l = rng.gen_range(1usize..=96);
            let s = rng.gen_range(-300i64..300);
            let p = pchirp(l, s);
            for v in &p {
                assert!((v.norm() - 1.0).abs() < 1e-14);
            }
            let j = rng.gen_range(0..3 * l as i64);
            assert!((pchirp_at(l, s, j) - pchirp_at(l, s, j + l as i64)).norm() < 1e-15);
            assert_eq!(
                format!("{:?}", pchirp(l, s)),
                format!("{:?}", pchirp(l, s + 2 * l as i64)),
                "s-period 2L is exact in the integer exponent"
            );
        }
    }

    #[test]
    fn elementary_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = rand_signal(&mut rng, 60);
        let id = apply_elementary(&ElementaryOp::Chirp(0), &f).unwrap();
        assert!(max_err(&id, &f) < 1e-15);
        let id = apply_elementary(&ElementaryOp::Dilation(1), &f).unwrap();
        assert!(max_err(&id, &f) < 1e-15);
        let rt = apply_elementary(
            &ElementaryOp::InvFourier,
            &apply_elementary(&ElementaryOp::Fourier, &f).unwrap(),
        )
        .unwrap();
        assert!(max_err(&rt, &f) < 1e-12);
        assert!(matches!(
            apply_elementary(&ElementaryOp::Dilation(2), &f),
            Err(GaborError::NonInvertibleDilation { .. })
        ));
    }

    #[test]
    fn elementary_commutation() {
        // U pi(z) f = phi(z) pi(Mz) U f for each elementary operator.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let l = rng.gen_range(2usize..=72);
            let li = l as i64;
            let f = rand_signal(&mut rng, l);
            let z = (rng.gen_range(0..li), rng.gen_range(0..li));
            let mut ops = vec![
                ElementaryOp::Fourier,
                ElementaryOp::InvFourier,
                ElementaryOp::Chirp(rng.gen_range(0..li)),
            ];
            let a = (1..li).find(|a| gcd(*a, li) == 1).unwrap_or(1);
            ops.push(ElementaryOp::Dilation(a));
            for op in ops {
                let lhs = apply_elementary(&op, &tf_shift_apply(z, &f)).unwrap();
                let uz = op.matrix(li).apply(z);
                let rhs: Vec<Complex64> = tf_shift_apply(uz, &apply_elementary(&op, &f).unwrap())
                    .iter()
                    .map(|v| v * op.phase(z, l))
                    .collect();
                assert!(
                    max_err(&lhs, &rhs) < 1e-12,
                    "op={op:?} L={l} z={z:?} err={}",
                    max_err(&lhs, &rhs)
                );
            }
        }
    }

    #[test]
    fn metaplectic_unitary_and_commutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..60 {
            let l = rng.gen_range(2usize..=64);
            let li = l as i64;
            // Random unimodular matrix as a product of elementary factors.
            let mut m = Mat2L::identity(li);
            for _ in 0..rng.gen_range(1..=6) {
                let f = match rng.gen_range(0..3) {
                    0 => ElFactor::F,
                    1 => ElFactor::S(rng.gen_range(0..li)),
                    _ => {
                        let a = loop {
                            let a = rng.gen_range(1..li.max(2));
                            if gcd(a, li) == 1 {
                                break a;
                            }
                        };
                        ElFactor::D(a)
                    }
                };
                m = m.mul(&f.matrix(li));
            }
            let wf = weil_decompose(&m).unwrap();
            let f = rand_signal(&mut rng, l);
            let uf = metaplectic_apply(&wf, &f).unwrap();
            // Unitarity.
            let nf: f64 = f.iter().map(|v| v.norm_sqr()).sum();
            let nuf: f64 = uf.iter().map(|v| v.norm_sqr()).sum();
            assert!((nf - nuf).abs() < 1e-10 * nf.max(1.0));
            // Inverse round trip.
            let back = metaplectic_apply_inv(&wf, &uf).unwrap();
            assert!(max_err(&back, &f) < 1e-11);
            // Commutation with accumulated phase.
            let z = (rng.gen_range(0..li), rng.gen_range(0..li));
            let lhs = metaplectic_apply(&wf, &tf_shift_apply(z, &f)).unwrap();
            let phase = metaplectic_phase(&wf, z);
            let rhs: Vec<Complex64> = tf_shift_apply(m.apply(z), &uf)
                .iter()
                .map(|v| v * phase)
                .collect();
            assert!(
                max_err(&lhs, &rhs) < 1e-11,
                "L={l} m={m:?} z={z:?} err={}",
                max_err(&lhs, &rhs)
            );
        }
    }

    #[test]
    fn identity_factors_give_global_phase() {
        // Weil factors of the identity compose to the identity operator up to
        // a global unit phase.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for l in [4usize, 12, 30] {
            let wf = weil_decompose(&Mat2L::identity(l as i64)).unwrap();
            let f = rand_signal(&mut rng, l);
            let uf = metaplectic_apply(&wf, &f).unwrap();
            let ratio = uf[0] / f[0];
            assert!((ratio.norm() - 1.0).abs() < 1e-10);
            let scaled: Vec<Complex64> = f.iter().map(|v| v * ratio).collect();
            assert!(max_err(&uf, &scaled) < 1e-11);
        }
    }

    #[test]
    fn tf_shift_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = rand_signal(&mut rng, 16);
        assert!(max_err(&tf_shift_apply((0, 0), &f), &f) < 1e-15);

        let mut delta = vec![Complex64::new(0.0, 0.0); 4];
        delta[0] = Complex64::new(1.0, 0.0);
        let shifted = tf_shift_apply((1, 0), &delta);
        assert!((shifted[1] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(shifted.iter().enumerate().all(|(i, v)| i == 1 || v.norm() < 1e-15));

        // pi(z1) pi(z2) = exp(-2 pi i x1 w2 / L) pi(z1 + z2), by direct
        // operator expansion.
        for _ in 0..50 {
            let l = rng.gen_range(2usize..=48);
            let li = l as i64;
            let f = rand_signal(&mut rng, l);
            let z1 = (rng.gen_range(0..li), rng.gen_range(0..li));
            let z2 = (rng.gen_range(0..li), rng.gen_range(0..li));
            let lhs = tf_shift_apply(z1, &tf_shift_apply(z2, &f));
            let phase = unit_phase((-2 * z1.0 as i128 * z2.1 as i128).rem_euclid(2 * l as i128), l);
            let rhs: Vec<Complex64> = tf_shift_apply((z1.0 + z2.0, z1.1 + z2.1), &f)
                .iter()
                .map(|v| v * phase)
                .collect();
            assert!(max_err(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn phase_shear_examples() {
        let l = 48;
        // Zero shears give phase 1.
        for z in [(0i64, 0i64), (5, 7), (13, 40)] {
            assert!((phase_shear(z, 0, 0, l) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        // w = 0 specialization: exp(-pi i s1 x^2 (L+1)/L).
        for (x, s1) in [(3i64, 5i64), (7, 1), (10, 11)] {
            let got = phase_shear((x, 0), 9, s1, l);
            let t = (-(s1 as i128) * (x as i128) * (x as i128) * (l as i128 + 1))
                .rem_euclid(2 * l as i128);
            assert!((got - unit_phase(t, l)).norm() < 1e-13);
        }
    }

    #[test]
    fn phase_shear_transport_relation() {
        // < U_V f, pi(Vz) U_V g > = phase_shear(z) < f, pi(z) g > with
        // V = S_{s1} F^-1 S_{s0} F (metaplectic: chirp(s1) o DFT o chirp(s0) o IDFT).
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let l = 48usize;
        let li = l as i64;
        for _ in 0..40 {
            let f = rand_signal(&mut rng, l);
            let g = rand_signal(&mut rng, l);
            let s0 = rng.gen_range(0..li);
            let s1 = rng.gen_range(0..li);
            let z = (rng.gen_range(0..li), rng.gen_range(0..li));

            let apply_v = |v: &[Complex64]| -> Vec<Complex64> {
                let v = apply_elementary(&ElementaryOp::InvFourier, v).unwrap();
                let v = apply_elementary(&ElementaryOp::Chirp(s0), &v).unwrap();
                let v = apply_elementary(&ElementaryOp::Fourier, &v).unwrap();
                apply_elementary(&ElementaryOp::Chirp(s1), &v).unwrap()
            };
            // V = U_{s0,-s1} as a matrix.
            let v_mat = shear_matrix(li, s0, -s1);
            let inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
                a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
            };
            let lhs = inner(&apply_v(&f), &tf_shift_apply(v_mat.apply(z), &apply_v(&g)));
            let rhs = phase_shear(z, s0, s1, l) * inner(&f, &tf_shift_apply(z, &g));
            assert!(
                (lhs - rhs).norm() < 1e-12 * rhs.norm().max(1.0),
                "s0={s0} s1={s1} z={z:?} |lhs-rhs|={}",
                (lhs - rhs).norm()
            );
        }
    }
}
