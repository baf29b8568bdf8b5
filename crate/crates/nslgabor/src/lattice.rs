//! Integer layer: lattice normal forms and the decompositions driving the
//! transform algorithms.
//!
//! A lattice here is a subgroup of the finite time-frequency plane
//! `Z_L x Z_L`. Every such subgroup has a unique lower-triangular generator
//!
//! ```text
//!     [ a  0 ]
//!     [ s  b ]        a | L,  b | L,  0 <= s < b,  (b/d) | s
//! ```
//!
//! with `d = gcd(b, L/a)`. `s = 0` is the separable (rectangular) case. The
//! shear is often written relative to `b` as the irreducible fraction
//! `lambda = s/b = lambda1/lambda2`.
//!
//! Three routes reduce a nonseparable lattice to separable ones:
//!
//! * [`multiwin_decomp`]: the lattice is a union of `lambda2` cosets of the
//!   sparser separable lattice `(lambda2 * a) Z x b Z`.
//! * [`smith2x2`] + [`weil_decompose`]: Smith normal form `A = P D V` with
//!   unimodular `P`, `V`; `P` factors into elementary symplectic matrices
//!   that have signal-domain (metaplectic) counterparts.
//! * [`shearfind`]: two shears `U_{s0,s1} = S_{-s1} F^{-1} S_{s0} F` suffice,
//!   i.e. `A = U_{s0,s1} D V`. The frequency shear `s0` can be avoided for
//!   favorable signal lengths (see [`noshear_factor`]), which is cheaper.

use crate::error::{GaborError, Result};

/// Size bound for the enumeration oracle [`lattice_points`].
pub const ORACLE_BOUND: usize = 4096;

// ---------------------------------------------------------------------------
// Elementary number theory
// ---------------------------------------------------------------------------

/// Extended Euclid: returns `(g, k1, k2)` with `k1*x + k2*y = g = gcd(x, y) > 0`.
///
/// Errors when both inputs are zero.
pub fn ext_gcd(x: i64, y: i64) -> Result<(i64, i64, i64)> {
    if x == 0 && y == 0 {
        return Err(GaborError::UndefinedGcd);
    }
    fn rec(x: i64, y: i64) -> (i64, i64, i64) {
        if y == 0 {
            (x.abs(), x.signum(), 0)
        } else {
            let (g, u, v) = rec(y, x.rem_euclid(y));
            (g, v, u - (x.div_euclid(y)) * v)
        }
    }
    Ok(rec(x, y))
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm(a: i64, b: i64) -> i64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

/// Inverse of `a` modulo `l`, if `gcd(a, l) = 1`.
pub fn mod_inv(a: i64, l: i64) -> Result<i64> {
    let (g, k1, _) = ext_gcd(a.rem_euclid(l), l)?;
    if g != 1 {
        return Err(GaborError::NonInvertibleDilation { a, l });
    }
    Ok(k1.rem_euclid(l))
}

/// Prime factorization by trial division; fine for desk-scale `n`.
pub fn factorize(mut n: i64) -> Vec<(i64, u32)> {
    assert!(n > 0, "factorize expects a positive integer");
    let mut out = Vec::new();
    let mut p = 2i64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// p-adic valuation of `n != 0`.
fn valuation(mut n: i64, p: i64) -> u32 {
    n = n.abs();
    debug_assert!(n != 0);
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

// ---------------------------------------------------------------------------
// 2x2 matrices over Z_L
// ---------------------------------------------------------------------------

/// A 2x2 integer matrix with entries reduced modulo `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mat2L {
    pub l: i64,
    /// Row-major entries `[[a11, a12], [a21, a22]]`, each in `[0, L)`.
    pub e: [[i64; 2]; 2],
}

impl Mat2L {
    pub fn new(l: i64, e: [[i64; 2]; 2]) -> Self {
        assert!(l > 0);
        let r = |x: i64| x.rem_euclid(l);
        Mat2L { l, e: [[r(e[0][0]), r(e[0][1])], [r(e[1][0]), r(e[1][1])]] }
    }

    pub fn identity(l: i64) -> Self {
        Mat2L::new(l, [[1, 0], [0, 1]])
    }

    pub fn det(&self) -> i64 {
        let m = &self.e;
        ((m[0][0] as i128 * m[1][1] as i128 - m[0][1] as i128 * m[1][0] as i128)
            .rem_euclid(self.l as i128)) as i64
    }

    pub fn mul(&self, rhs: &Mat2L) -> Mat2L {
        assert_eq!(self.l, rhs.l);
        let l = self.l as i128;
        let a = &self.e;
        let b = &rhs.e;
        let mut e = [[0i64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let v = a[i][0] as i128 * b[0][j] as i128 + a[i][1] as i128 * b[1][j] as i128;
                e[i][j] = v.rem_euclid(l) as i64;
            }
        }
        Mat2L { l: self.l, e }
    }

    /// Matrix-vector product modulo `L`.
    pub fn apply(&self, z: (i64, i64)) -> (i64, i64) {
        let l = self.l as i128;
        let x = (self.e[0][0] as i128 * z.0 as i128 + self.e[0][1] as i128 * z.1 as i128)
            .rem_euclid(l) as i64;
        let w = (self.e[1][0] as i128 * z.0 as i128 + self.e[1][1] as i128 * z.1 as i128)
            .rem_euclid(l) as i64;
        (x, w)
    }

    /// Inverse for matrices with `det = +-1 (mod L)` (adjugate divided by det).
    pub fn inverse(&self) -> Result<Mat2L> {
        let d = self.det();
        let dinv = mod_inv(d, self.l).map_err(|_| GaborError::NotUnimodular {
            det: d,
            l: self.l,
        })?;
        let m = &self.e;
        Ok(Mat2L::new(
            self.l,
            [
                [
                    ((m[1][1] as i128 * dinv as i128).rem_euclid(self.l as i128)) as i64,
                    ((-(m[0][1] as i128) * dinv as i128).rem_euclid(self.l as i128)) as i64,
                ],
                [
                    ((-(m[1][0] as i128) * dinv as i128).rem_euclid(self.l as i128)) as i64,
                    ((m[0][0] as i128 * dinv as i128).rem_euclid(self.l as i128)) as i64,
                ],
            ],
        ))
    }
}

// ---------------------------------------------------------------------------
// The lattice parameter object
// ---------------------------------------------------------------------------

/// A time-frequency lattice in normal form.
///
/// Stores `(L, a, b, s)`; everything else (`M`, `N`, `lambda`, `c`, `d`, `p`,
/// `q`) is derived. Construct with [`GaborLattice::from_normal_form`],
/// [`GaborLattice::from_params`] (the `(a, M, lambda1/lambda2)`
/// parameterization) or [`normal_form`] for an arbitrary generator matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaborLattice {
    l: i64,
    a: i64,
    b: i64,
    s: i64,
}

impl GaborLattice {
    /// Build from normal-form parameters, validating all invariants.
    pub fn from_normal_form(l: usize, a: usize, b: usize, s: usize) -> Result<Self> {
        let (l, a, b, s) = (l as i64, a as i64, b as i64, s as i64);
        if l <= 0 || a <= 0 || b <= 0 {
            return Err(GaborError::InvalidParameters("L, a, b must be positive".into()));
        }
        if l % a != 0 || l % b != 0 {
            return Err(GaborError::InvalidParameters(format!(
                "a = {a} and b = {b} must divide L = {l}"
            )));
        }
        if !(0..b).contains(&s) {
            return Err(GaborError::InvalidParameters(format!(
                "shear s = {s} out of range [0, b = {b})"
            )));
        }
        // s must be a multiple of p = b/gcd(b, N); otherwise (a, b, s) is not
        // the normal form of the subgroup it generates.
        let n = l / a;
        let p = b / gcd(b, n);
        if s % p != 0 {
            return Err(GaborError::InvalidParameters(format!(
                "shear s = {s} is not a multiple of p = {p}; (a, b, s) is not a normal form \
                 (renormalize via normal_form)"
            )));
        }
        Ok(GaborLattice { l, a, b, s })
    }

    /// Build from `(L, a, M, lambda1/lambda2)`, the parameterization used by
    /// the transform front ends. Fails with the minimal feasible length when
    /// `L` is not a multiple of it.
    pub fn from_params(l: usize, a: usize, m: usize, lambda1: usize, lambda2: usize) -> Result<Self> {
        check_lambda(lambda1 as i64, lambda2 as i64)?;
        let l_min = min_length(a, m, lambda1, lambda2)?;
        if l == 0 || l % l_min != 0 {
            return Err(GaborError::IllegalLength { l, l_min });
        }
        let b = l / m;
        let s = b / lambda2 * lambda1;
        GaborLattice::from_normal_form(l, a, b, s)
    }

    pub fn l(&self) -> usize {
        self.l as usize
    }
    /// Time shift.
    pub fn a(&self) -> usize {
        self.a as usize
    }
    /// Frequency shift `b = L/M`.
    pub fn b(&self) -> usize {
        self.b as usize
    }
    /// Shear parameter of the normal form, `0 <= s < b`.
    pub fn s(&self) -> usize {
        self.s as usize
    }
    /// Number of frequency channels `M = L/b`.
    pub fn m(&self) -> usize {
        (self.l / self.b) as usize
    }
    /// Number of time steps `N = L/a`.
    pub fn n(&self) -> usize {
        (self.l / self.a) as usize
    }
    pub fn is_separable(&self) -> bool {
        self.s == 0
    }

    /// Irreducible shear fraction `(lambda1, lambda2)` with `s/b = lambda1/lambda2`.
    pub fn lambda(&self) -> (usize, usize) {
        if self.s == 0 {
            (0, 1)
        } else {
            let g = gcd(self.b, self.s);
            ((self.s / g) as usize, (self.b / g) as usize)
        }
    }

    /// The structural constants `(c, d, p, q)`:
    /// `c = gcd(a, M)`, `d = gcd(b, N)`, `p = a/c = b/d`, `q = M/c = N/d`,
    /// with `L = c d p q` and redundancy `L/(ab) = q/p` irreducible.
    pub fn constants(&self) -> (usize, usize, usize, usize) {
        let m = self.l / self.b;
        let n = self.l / self.a;
        let c = gcd(self.a, m);
        let d = gcd(self.b, n);
        (c as usize, d as usize, (self.a / c) as usize, (m / c) as usize)
    }

    /// Redundancy `L/(ab)` as the irreducible fraction `(q, p)`.
    pub fn redundancy(&self) -> (usize, usize) {
        let (_, _, p, q) = self.constants();
        (q, p)
    }

    /// The normal-form generator matrix `[[a, 0], [s, b]]` over `Z_L`.
    pub fn generator(&self) -> Mat2L {
        Mat2L::new(self.l, [[self.a, 0], [self.s, self.b]])
    }

    /// Number of lattice points, `L^2/(ab)`.
    pub fn cardinality(&self) -> usize {
        ((self.l as i128 * self.l as i128) / (self.a as i128 * self.b as i128)) as usize
    }

    /// Frequency offset `s*n mod b` of time column `n` (the `b*w(n)` of the
    /// coefficient convention).
    pub fn column_offset(&self, n: usize) -> usize {
        ((self.s as i128 * n as i128).rem_euclid(self.b as i128)) as usize
    }
}

fn check_lambda(lambda1: i64, lambda2: i64) -> Result<()> {
    if lambda2 <= 0 {
        return Err(GaborError::InvalidParameters("lambda2 must be positive".into()));
    }
    if !(0..lambda2).contains(&lambda1) {
        return Err(GaborError::InvalidParameters(format!(
            "lambda1 = {lambda1} out of range [0, lambda2 = {lambda2})"
        )));
    }
    if lambda1 == 0 && lambda2 != 1 {
        return Err(GaborError::InvalidParameters(
            "lambda = 0 must be written as 0/1".into(),
        ));
    }
    if lambda1 > 0 && gcd(lambda1, lambda2) != 1 {
        return Err(GaborError::InvalidParameters(format!(
            "lambda1/lambda2 = {lambda1}/{lambda2} is not irreducible"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Normal form and equivalent upper form
// ---------------------------------------------------------------------------

/// Normal form of the subgroup generated by the columns of `a` over `Z_L`.
///
/// Works by column-reducing the generators together with `L*e1`, `L*e2`
/// (Hermite-style, using extended gcds), never by enumeration.
pub fn normal_form(a: &Mat2L) -> GaborLattice {
    let l = a.l;
    // Columns spanning the subgroup of Z^2 whose image mod L is the lattice.
    let mut cols: Vec<(i64, i64)> = vec![
        (a.e[0][0], a.e[1][0]),
        (a.e[0][1], a.e[1][1]),
        (l, 0),
        (0, l),
    ];
    // Reduce x-components to a single pivot with x = gcd of all x's.
    let mut pivot = cols.pop().unwrap(); // (0, L): x already zero
    std::mem::swap(&mut pivot, &mut cols[0]);
    cols.push(pivot);
    let mut pivot = cols[0];
    for idx in 1..cols.len() {
        let c = cols[idx];
        if c.0 == 0 {
            continue;
        }
        if pivot.0 == 0 {
            cols[idx] = pivot;
            pivot = c;
            continue;
        }
        let (g, u, v) = ext_gcd(pivot.0, c.0).expect("not both zero");
        let new_pivot = (g, u * pivot.1 + v * c.1);
        // The discarded combination keeps the span: (-c.0/g, pivot.0/g).
        let rest = (0, -(c.0 / g) * pivot.1 + (pivot.0 / g) * c.1);
        pivot = new_pivot;
        cols[idx] = rest;
    }
    let a_val = gcd(pivot.0, l);
    debug_assert!(a_val > 0 && l % a_val == 0);
    let mut b_val = l;
    for c in &cols[1..] {
        debug_assert_eq!(c.0, 0);
        b_val = gcd(b_val, c.1);
    }
    if b_val == 0 {
        b_val = l;
    }
    let s_val = pivot.1.rem_euclid(b_val);
    GaborLattice { l, a: a_val, b: b_val, s: s_val }
}

/// Equivalent upper-triangular generator `[[a~, s~], [0, b~]]` of the same
/// lattice: `b~ = gcd(b, s)`, `a~ = a b / gcd(b, s)`, `s~ = k1 * a` where
/// `k1 s + k2 b = gcd(b, s)`.
pub fn upper_form(lat: &GaborLattice) -> Mat2L {
    let (l, a, b, s) = (lat.l, lat.a, lat.b, lat.s);
    if s == 0 {
        return Mat2L::new(l, [[a, 0], [0, b]]);
    }
    let (g, k1, _) = ext_gcd(s, b).expect("b > 0");
    Mat2L::new(l, [[a * (b / g), k1 * a], [0, g]])
}

/// Enumeration oracle: the full point set of the lattice.
///
/// Returns exactly `L^2/(ab)` distinct `(x, omega)` pairs. Bounded to
/// [`ORACLE_BOUND`] because it is quadratic in `L`.
pub fn lattice_points(lat: &GaborLattice) -> Result<Vec<(usize, usize)>> {
    if lat.l() > ORACLE_BOUND {
        return Err(GaborError::OracleSizeLimit { l: lat.l(), bound: ORACLE_BOUND });
    }
    let (l, a, b, s) = (lat.l, lat.a, lat.b, lat.s);
    let mut pts = Vec::with_capacity(lat.cardinality());
    for n in 0..(l / a) {
        let x = (a * n).rem_euclid(l);
        let base = (s as i128 * n as i128).rem_euclid(l as i128) as i64;
        for k in 0..(l / b) {
            let w = (base + b * k).rem_euclid(l);
            pts.push((x as usize, w as usize));
        }
    }
    pts.sort_unstable();
    pts.dedup();
    debug_assert_eq!(pts.len(), lat.cardinality());
    Ok(pts)
}

// ---------------------------------------------------------------------------
// Feasible signal lengths
// ---------------------------------------------------------------------------

/// Minimal feasible signal length `L_min = lambda2 * lcm(a, M)` for the
/// parameters `(a, M, lambda1/lambda2)`. Every feasible length is a multiple.
pub fn min_length(a: usize, m: usize, lambda1: usize, lambda2: usize) -> Result<usize> {
    if a == 0 || m == 0 {
        return Err(GaborError::InvalidParameters("a, M must be positive".into()));
    }
    check_lambda(lambda1 as i64, lambda2 as i64)?;
    Ok((lambda2 as i64 * lcm(a as i64, m as i64)) as usize)
}

/// Whether `(a, M, lambda)` fits signal length `l`: all four divisibility
/// conditions (`a | L`, `M | L`, `lambda2 | L/a`, `lambda2 | L/M`) hold.
pub fn is_feasible(l: usize, a: usize, m: usize, lambda1: usize, lambda2: usize) -> bool {
    if a == 0 || m == 0 || lambda2 == 0 || l == 0 {
        return false;
    }
    if check_lambda(lambda1 as i64, lambda2 as i64).is_err() {
        return false;
    }
    let (l, a, m, l2) = (l as i64, a as i64, m as i64, lambda2 as i64);
    l % a == 0 && l % m == 0 && (l / a) % l2 == 0 && (l / m) % l2 == 0
}

/// No-frequency-shear lengths: returns `(c1, factor)` where `c1` is the part
/// of `c = gcd(a, M)` coprime to `lambda2` and `factor = c/c1`. For lengths
/// `L = n * L_min * factor` the shear finder needs no frequency-side shear.
pub fn noshear_factor(a: usize, m: usize, lambda1: usize, lambda2: usize) -> Result<(usize, usize)> {
    check_lambda(lambda1 as i64, lambda2 as i64)?;
    if a == 0 || m == 0 {
        return Err(GaborError::InvalidParameters("a, M must be positive".into()));
    }
    let c = gcd(a as i64, m as i64);
    let mut c1 = 1i64;
    for (p, e) in factorize(c) {
        if lambda2 as i64 % p != 0 {
            c1 *= p.pow(e);
        }
    }
    Ok((c1 as usize, (c / c1) as usize))
}

// ---------------------------------------------------------------------------
// Multiwindow coset decomposition
// ---------------------------------------------------------------------------

/// Decomposition of a lattice into `lambda2` cosets of the separable lattice
/// generated by `(lambda2 * a, 0)` and `(0, b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiwinDecomp {
    /// Number of cosets (= number of windows after the rewrite).
    pub lambda2: usize,
    /// Time shift of the sparse separable base lattice.
    pub base_a: usize,
    /// Frequency shift of the base lattice.
    pub base_b: usize,
    /// Coset offsets `(a*m mod L, s*m mod b)` for `m = 0..lambda2`.
    pub offsets: Vec<(usize, usize)>,
}

/// Coset decomposition over the sparse separable lattice `(lambda2 a) Z x b Z`.
pub fn multiwin_decomp(lat: &GaborLattice) -> MultiwinDecomp {
    let (_, lambda2) = lat.lambda();
    let offsets = (0..lambda2)
        .map(|m| {
            (
                ((lat.a as i128 * m as i128).rem_euclid(lat.l as i128)) as usize,
                ((lat.s as i128 * m as i128).rem_euclid(lat.b as i128)) as usize,
            )
        })
        .collect();
    MultiwinDecomp {
        lambda2,
        base_a: (lat.a as usize) * lambda2,
        base_b: lat.b as usize,
        offsets,
    }
}

// ---------------------------------------------------------------------------
// Smith normal form (2x2)
// ---------------------------------------------------------------------------

/// Result of [`smith2x2`]: `A = P D V (mod L)` with `det P = det V = 1` over
/// the integers and `D = diag(d1, d2)`, `d1 | d2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithDecomp {
    pub p: Mat2L,
    pub d: Mat2L,
    pub v: Mat2L,
    /// Integer diagonal before reduction mod L (`d1 >= 0`, `d1 | d2`).
    pub d1: i64,
    pub d2: i64,
}

/// Smith decomposition of an integer 2x2 matrix, reduced modulo `l`.
///
/// Over the integers `A = P~ D~ V~` with `det(P~) = det(V~) = 1` and
/// `D~ = diag(d1, d2)`, `d1 | d2`; the closed 2x2 form is
/// `d1 = gcd` of the entries and `|d1 d2| = |det A|`. The transformation
/// matrices come from extended-gcd row/column operations.
pub fn smith2x2(a: [[i64; 2]; 2], l: usize) -> SmithDecomp {
    let l = l as i64;
    // Invariant: original = p * cur * v over Z (entries kept in i128 range by
    // construction at desk scale).
    let mut cur = a;
    let mut p = [[1i64, 0], [0, 1]];
    let mut v = [[1i64, 0], [0, 1]];

    fn mul2(x: [[i64; 2]; 2], y: [[i64; 2]; 2]) -> [[i64; 2]; 2] {
        let mut r = [[0i64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
            }
        }
        r
    }

    loop {
        // Clear (2,1) with a determinant-1 row operation.
        if cur[1][0] != 0 {
            if cur[0][0] == 0 {
                // Swap rows via [[0, 1], [-1, 0]].
                let r = [[0, 1], [-1, 0]];
                let rinv = [[0, -1], [1, 0]];
                cur = mul2(r, cur);
                p = mul2(p, rinv);
            } else {
                let (g, u, w) = ext_gcd(cur[0][0], cur[1][0]).expect("not both zero");
                let r = [[u, w], [-(cur[1][0] / g), cur[0][0] / g]];
                let rinv = [[cur[0][0] / g, -w], [cur[1][0] / g, u]];
                cur = mul2(r, cur);
                p = mul2(p, rinv);
            }
        }
        // Clear (1,2) with a determinant-1 column operation.
        if cur[0][1] != 0 {
            if cur[0][0] == 0 {
                let c = [[0, -1], [1, 0]];
                let cinv = [[0, 1], [-1, 0]];
                cur = mul2(cur, c);
                v = mul2(cinv, v);
            } else {
                let (g, u, w) = ext_gcd(cur[0][0], cur[0][1]).expect("not both zero");
                let c = [[u, -(cur[0][1] / g)], [w, cur[0][0] / g]];
                let cinv = [[cur[0][0] / g, cur[0][1] / g], [-w, u]];
                cur = mul2(cur, c);
                v = mul2(cinv, v);
            }
        }
        if cur[1][0] == 0 && cur[0][1] == 0 {
            // Enforce the divisibility d1 | d2; if violated, merge and retry.
            let (d1, d2) = (cur[0][0], cur[1][1]);
            if d1 != 0 && d2 % d1 != 0 {
                let c = [[1, 0], [1, 1]];
                let cinv = [[1, 0], [-1, 1]];
                cur = mul2(cur, c);
                v = mul2(cinv, v);
                continue;
            }
            if d1 == 0 && d2 != 0 {
                // Move the nonzero entry first (swap both rows and columns).
                let r = [[0, 1], [-1, 0]];
                let rinv = [[0, -1], [1, 0]];
                cur = mul2(mul2(r, cur), rinv);
                p = mul2(p, rinv);
                v = mul2(r, v);
                continue;
            }
            break;
        }
    }
    // Sign normalization: d1 >= 0, flipping both signs with -I if needed.
    if cur[0][0] < 0 {
        cur[0][0] = -cur[0][0];
        cur[1][1] = -cur[1][1];
        v = mul2([[-1, 0], [0, -1]], v);
    }
    debug_assert_eq!(mul2(mul2(p, cur), v), a);
    debug_assert!(cur[0][0] >= 0);
    debug_assert!(cur[0][0] == 0 || cur[1][1] % cur[0][0] == 0);
    SmithDecomp {
        p: Mat2L::new(l, p),
        d: Mat2L::new(l, [[cur[0][0], 0], [0, cur[1][1]]]),
        v: Mat2L::new(l, v),
        d1: cur[0][0],
        d2: cur[1][1],
    }
}

// ---------------------------------------------------------------------------
// Weil decomposition into elementary symplectic factors
// ---------------------------------------------------------------------------

/// One elementary symplectic matrix over `Z_L`.
///
/// `F = [[0, -1], [1, 0]]`, `S_c = [[1, 0], [c, 1]]`, `D_a = diag(a, a^-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElFactor {
    F,
    FInv,
    /// Shear `S_c` with `c` reduced mod L.
    S(i64),
    /// Dilation `D_a` with `a` invertible mod L.
    D(i64),
}

impl ElFactor {
    /// Matrix of the factor over `Z_L`.
    pub fn matrix(&self, l: i64) -> Mat2L {
        match *self {
            ElFactor::F => Mat2L::new(l, [[0, -1], [1, 0]]),
            ElFactor::FInv => Mat2L::new(l, [[0, 1], [-1, 0]]),
            ElFactor::S(c) => Mat2L::new(l, [[1, 0], [c, 1]]),
            ElFactor::D(a) => {
                let ainv = mod_inv(a, l).expect("dilation parameter invertible");
                Mat2L::new(l, [[a, 0], [0, ainv]])
            }
        }
    }
}

/// Ordered elementary factors whose product (left to right) is the
/// decomposed matrix modulo `L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeilFactors {
    pub l: i64,
    pub factors: Vec<ElFactor>,
}

impl WeilFactors {
    /// Product of the factor matrices, for verification.
    pub fn product(&self) -> Mat2L {
        let mut acc = Mat2L::identity(self.l);
        for f in &self.factors {
            acc = acc.mul(&f.matrix(self.l));
        }
        acc
    }
}

/// Weil decomposition of a matrix with `det = 1 (mod L)`:
///
/// `M = S_{c0 a0^-1} D_{a0} F^-1 S_{-a0^-1 b} F S_{-m}`
///
/// where `m >= 0` is minimal with `a0 = a + m b` invertible mod `L` and
/// `c0 = c + m d`.
pub fn weil_decompose(mat: &Mat2L) -> Result<WeilFactors> {
    let l = mat.l;
    let det = mat.det();
    if det != 1 % l {
        return Err(GaborError::NotUnimodular { det, l });
    }
    let [[a, b], [c, d]] = mat.e;
    let mut m = 0i64;
    while gcd((a + m * b).rem_euclid(l), l) != 1 {
        m += 1;
        debug_assert!(m <= l, "no shift makes the top-left entry invertible");
    }
    let a0 = (a + m * b).rem_euclid(l);
    let c0 = (c as i128 + m as i128 * d as i128).rem_euclid(l as i128) as i64;
    let a0inv = mod_inv(a0, l)?;
    let factors = vec![
        ElFactor::S((c0 as i128 * a0inv as i128).rem_euclid(l as i128) as i64),
        ElFactor::D(a0),
        ElFactor::FInv,
        ElFactor::S((-(a0inv as i128) * b as i128).rem_euclid(l as i128) as i64),
        ElFactor::F,
        ElFactor::S((-m).rem_euclid(l)),
    ];
    Ok(WeilFactors { l, factors })
}

// ---------------------------------------------------------------------------
// Shear decomposition
// ---------------------------------------------------------------------------

/// Result of [`shearfind`]: shears `(s0, s1)` and the rectangular lattice
/// the transform algorithms run on after shearing.
///
/// `U_{s0,s1}^-1 A = D V (mod L)` with `D = diag(ab/X, X)`,
/// `X = gcd(s1 a + s, b)` and `det V = +-1`; `b_r = X` is the frequency
/// shift of the sheared rectangular lattice, `a_r = ab/b_r` its time shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShearDecomp {
    pub s0: i64,
    pub s1: i64,
    /// Frequency shift of the sheared rectangular lattice.
    pub b_r: usize,
    /// Time shift `a_r = a*b/b_r`.
    pub a_r: usize,
    /// Channels of the rectangular problem, `M_r = L/b_r`.
    pub m_r: usize,
    /// Time steps of the rectangular problem, `N_r = L/a_r`.
    pub n_r: usize,
    pub freq_shear_needed: bool,
}

/// Find shear parameters turning the lattice rectangular.
///
/// Canonical choice, cheapest first: `(0, 0)` for separable lattices; a pure
/// time shear `s1 a = -s (mod b)` with the smallest nonnegative `s1` whenever
/// `gcd(a, b) | s`; otherwise the prime-factorization construction, which
/// generally needs a frequency-side shear as well.
pub fn shearfind(l: usize, a: usize, m: usize, lambda1: usize, lambda2: usize) -> Result<ShearDecomp> {
    let lat = GaborLattice::from_params(l, a, m, lambda1, lambda2)?;
    shear_decomp(&lat)
}

/// [`shearfind`] for an already-validated lattice.
pub fn shear_decomp(lat: &GaborLattice) -> Result<ShearDecomp> {
    let (l, a, b, s) = (lat.l, lat.a, lat.b, lat.s);
    let mk = |s0: i64, s1: i64, x: i64| -> ShearDecomp {
        let b_r = x;
        let a_r = a * b / x;
        ShearDecomp {
            s0: s0.rem_euclid(l),
            s1: s1.rem_euclid(l),
            b_r: b_r as usize,
            a_r: a_r as usize,
            m_r: (l / b_r) as usize,
            n_r: (l / a_r) as usize,
            freq_shear_needed: s0.rem_euclid(l) != 0,
        }
    };

    if s == 0 {
        return Ok(mk(0, 0, b));
    }

    // Pure time shear: s1*a = -s (mod b), solvable iff gcd(a, b) | s. Then
    // X = gcd(s1 a + s, b) = b and the rectangular lattice is (a, b) itself.
    let g = gcd(a, b);
    if s % g == 0 {
        let (bg, ag, sg) = (b / g, a / g, s / g);
        let s1 = ((-(sg as i128) * mod_inv(ag, bg)? as i128).rem_euclid(bg as i128)) as i64;
        debug_assert_eq!((s1 * a + s).rem_euclid(b), 0);
        return Ok(mk(0, s1, b));
    }

    // General construction from the prime factorization of L.
    let primes: Vec<i64> = factorize(l).into_iter().map(|(p, _)| p).collect();
    let mut s1: i64 = 1;
    for &p in &primes {
        let alpha = valuation(a, p);
        let sigma = valuation(s, p);
        if alpha == sigma {
            s1 *= p;
        }
    }
    let t = s1 * a + s; // > 0
    let x = gcd(t, b);
    let (xg, k1, _k2) = ext_gcd(t, b).expect("t, b > 0");
    debug_assert_eq!(xg, x);
    debug_assert!(k1 != 0, "k1 = 0 implies X = b, handled by the pure time shear");

    // s0 = (prod p^(beta - gamma - kappa)_+  -  l') * prod p^(alpha + kappa - gamma)
    // where k1 = l' * prod p^kappa with l' coprime to L.
    let mut lp = k1;
    let mut pow_plus: i128 = 1; // prod p^(beta - gamma - kappa)_+
    let mut pow_mul: i128 = 1; // prod p^(alpha + kappa - gamma)
    let l128 = l as i128;
    for &p in &primes {
        let kappa = valuation(k1, p) as i64;
        for _ in 0..kappa {
            lp /= p;
        }
        let alpha = valuation(a, p) as i64;
        let beta = valuation(b, p) as i64;
        let gamma = valuation(x, p) as i64;
        let e_plus = (beta - gamma - kappa).max(0);
        for _ in 0..e_plus {
            pow_plus = (pow_plus * p as i128).rem_euclid(2 * l128);
        }
        let e_mul = alpha + kappa - gamma;
        debug_assert!(e_mul >= 0);
        for _ in 0..e_mul {
            pow_mul = (pow_mul * p as i128).rem_euclid(2 * l128);
        }
    }
    let s0 = (((pow_plus - lp as i128).rem_euclid(l128)) * pow_mul).rem_euclid(l128) as i64;
    debug_assert_eq!(
        ((s0 as i128 * x as i128 + a as i128 * k1 as i128).rem_euclid((a * b / x) as i128)),
        0,
        "shear construction must satisfy the diagonality condition"
    );
    Ok(mk(s0, s1, x))
}

impl GaborLattice {
    /// Shear decomposition of this lattice (see [`shearfind`]).
    pub fn shear(&self) -> Result<ShearDecomp> {
        shear_decomp(self)
    }

    /// Multiwindow coset decomposition (see [`multiwin_decomp`]).
    pub fn multiwin(&self) -> MultiwinDecomp {
        multiwin_decomp(self)
    }
}

/// The two-shear matrix `U_{s0,s1} = S_{-s1} F^-1 S_{s0} F = [[1, -s0], [-s1, s0 s1 + 1]]`.
pub fn shear_matrix(l: i64, s0: i64, s1: i64) -> Mat2L {
    Mat2L::new(
        l,
        [
            [1, -s0],
            [-s1, (s0 as i128 * s1 as i128 + 1).rem_euclid(l as i128) as i64],
        ],
    )
}
