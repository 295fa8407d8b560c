//! Small-matrix kernel for su(N) and SU(N), N ∈ {2, 3}.
//!
//! Algebra elements are anti-hermitian traceless N×N complex matrices with the
//! Ad-invariant inner product ⟨A, B⟩ = −Re tr(AB), under which the standard
//! su(2) basis 𝐢, 𝐣, 𝐤 has |𝐢|² = 2 and the commutator obeys
//! |[A,B]| ≤ √2·|A|·|B| with equality on embedded quaternionic pairs.
//!
//! Besides the matrix-level API, this module fixes an orthogonal basis per
//! group (𝐢,𝐣,𝐤 for su(2), i·λ_a for su(3)) and exposes real *coefficient*
//! vectors in that basis. Grid-sized fields store coefficients — three or
//! eight reals per element instead of 2N² — and all heavy lattice kernels
//! (brackets, inner products, Ad rotations) run on them.

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Tolerance for the algebra/group membership invariants.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

type C = Complex64;

const ZERO_C: C = C::new(0.0, 0.0);
const ONE_C: C = C::new(1.0, 0.0);
const I_C: C = C::new(0.0, 1.0);

// ---------------------------------------------------------------------------
// CMat: inline-storage complex matrix, n ∈ {2, 3}
// ---------------------------------------------------------------------------

/// Dense complex matrix with inline storage for n ≤ 3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMat {
    pub n: usize,
    m: [[C; 3]; 3],
}

impl CMat {
    pub fn zero(n: usize) -> Self {
        CMat { n, m: [[ZERO_C; 3]; 3] }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Self::zero(n);
        for i in 0..n {
            r.m[i][i] = ONE_C;
        }
        r
    }

    pub fn from_rows(n: usize, rows: &[[C; 3]]) -> Self {
        let mut r = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                r.m[i][j] = rows[i][j];
            }
        }
        r
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C {
        self.m[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C) {
        self.m[i][j] = v;
    }

    pub fn add(&self, o: &CMat) -> CMat {
        let mut r = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                r.m[i][j] += o.m[i][j];
            }
        }
        r
    }

    pub fn sub(&self, o: &CMat) -> CMat {
        let mut r = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                r.m[i][j] -= o.m[i][j];
            }
        }
        r
    }

    pub fn neg(&self) -> CMat {
        self.scale(C::new(-1.0, 0.0))
    }

    pub fn scale(&self, s: C) -> CMat {
        let mut r = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                r.m[i][j] *= s;
            }
        }
        r
    }

    pub fn scale_re(&self, s: f64) -> CMat {
        self.scale(C::new(s, 0.0))
    }

    pub fn mul(&self, o: &CMat) -> CMat {
        let n = self.n;
        let mut r = Self::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.m[i][k];
                if a == ZERO_C {
                    continue;
                }
                for j in 0..n {
                    r.m[i][j] += a * o.m[k][j];
                }
            }
        }
        r
    }

    pub fn adjoint(&self) -> CMat {
        let n = self.n;
        let mut r = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                r.m[i][j] = self.m[j][i].conj();
            }
        }
        r
    }

    pub fn trace(&self) -> C {
        let mut t = ZERO_C;
        for i in 0..self.n {
            t += self.m[i][i];
        }
        t
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.m[i][j].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Maximum absolute row sum (induced 1-norm of the transpose; used for
    /// exponential scaling only, any consistent norm works).
    pub fn norm_inf(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.n {
            let mut s = 0.0;
            for j in 0..self.n {
                s += self.m[i][j].norm();
            }
            best = best.max(s);
        }
        best
    }

    pub fn det(&self) -> C {
        match self.n {
            2 => self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0],
            3 => {
                let m = &self.m;
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
            _ => unreachable!("unsupported matrix size"),
        }
    }

    /// Inverse via adjugate; errors on (numerically) singular input.
    pub fn inverse(&self) -> Result<CMat> {
        let d = self.det();
        if d.norm() < 1e-300 {
            return Err(Error::numerical("singular matrix"));
        }
        let inv_d = ONE_C / d;
        let m = &self.m;
        let mut r = Self::zero(self.n);
        match self.n {
            2 => {
                r.m[0][0] = m[1][1] * inv_d;
                r.m[0][1] = -m[0][1] * inv_d;
                r.m[1][0] = -m[1][0] * inv_d;
                r.m[1][1] = m[0][0] * inv_d;
            }
            3 => {
                let cof = |a: usize, b: usize, c: usize, d_: usize| {
                    m[a][b] * m[c][d_] - m[a][d_] * m[c][b]
                };
                r.m[0][0] = cof(1, 1, 2, 2) * inv_d;
                r.m[0][1] = -cof(0, 1, 2, 2) * inv_d;
                r.m[0][2] = cof(0, 1, 1, 2) * inv_d;
                r.m[1][0] = -cof(1, 0, 2, 2) * inv_d;
                r.m[1][1] = cof(0, 0, 2, 2) * inv_d;
                r.m[1][2] = -cof(0, 0, 1, 2) * inv_d;
                r.m[2][0] = cof(1, 0, 2, 1) * inv_d;
                r.m[2][1] = -cof(0, 0, 2, 1) * inv_d;
                r.m[2][2] = cof(0, 0, 1, 1) * inv_d;
            }
            _ => unreachable!(),
        }
        Ok(r)
    }

    /// Anti-hermitian traceless part: (M − M†)/2 − tr/n.
    pub fn project_algebra(&self) -> CMat {
        let mut r = self.sub(&self.adjoint()).scale_re(0.5);
        let t = r.trace() / (self.n as f64);
        for i in 0..self.n {
            r.m[i][i] -= t;
        }
        r
    }

    fn herm_defect(&self) -> f64 {
        // max entry of M + M†
        let a = self.add(&self.adjoint());
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max(a.m[i][j].norm());
            }
        }
        worst
    }

    fn unitary_defect(&self) -> f64 {
        let p = self.mul(&self.adjoint());
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                let target = if i == j { ONE_C } else { ZERO_C };
                worst = worst.max((p.m[i][j] - target).norm());
            }
        }
        worst
    }
}

impl std::ops::Add for CMat {
    type Output = CMat;
    fn add(self, o: CMat) -> CMat {
        CMat::add(&self, &o)
    }
}
impl std::ops::Sub for CMat {
    type Output = CMat;
    fn sub(self, o: CMat) -> CMat {
        CMat::sub(&self, &o)
    }
}
impl std::ops::Mul for CMat {
    type Output = CMat;
    fn mul(self, o: CMat) -> CMat {
        CMat::mul(&self, &o)
    }
}

// ---------------------------------------------------------------------------
// Groups and bases
// ---------------------------------------------------------------------------

/// Supported structure groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    Su2,
    Su3,
}

impl GroupKind {
    pub fn n(self) -> usize {
        match self {
            GroupKind::Su2 => 2,
            GroupKind::Su3 => 3,
        }
    }

    /// Real dimension of the algebra (= coefficient count per element).
    pub fn dim_g(self) -> usize {
        match self {
            GroupKind::Su2 => 3,
            GroupKind::Su3 => 8,
        }
    }

    pub fn from_n(n: usize) -> Result<Self> {
        match n {
            2 => Ok(GroupKind::Su2),
            3 => Ok(GroupKind::Su3),
            _ => Err(Error::validation(format!("unsupported group size N={n}"))),
        }
    }

    /// Orthogonal basis of the algebra, |B_a|² = 2 for every a.
    pub fn basis(self) -> &'static [CMat] {
        match self {
            GroupKind::Su2 => su2_basis(),
            GroupKind::Su3 => su3_basis(),
        }
    }

    /// Sparse structure constants: [B_a, B_b] = Σ_c coeff·B_c, listed as
    /// (a, b, c, coeff) with a < b (extend antisymmetrically).
    pub fn bracket_table(self) -> &'static [(u8, u8, u8, f64)] {
        match self {
            GroupKind::Su2 => SU2_TABLE,
            GroupKind::Su3 => su3_table(),
        }
    }
}

fn su2_basis() -> &'static [CMat] {
    static BASIS: OnceLock<Vec<CMat>> = OnceLock::new();
    BASIS.get_or_init(|| {
        let i_m = CMat::from_rows(2, &[[ZERO_C, ONE_C, ZERO_C], [-ONE_C, ZERO_C, ZERO_C]]);
        let j_m = CMat::from_rows(2, &[[ZERO_C, I_C, ZERO_C], [I_C, ZERO_C, ZERO_C]]);
        let k_m = CMat::from_rows(2, &[[I_C, ZERO_C, ZERO_C], [ZERO_C, -I_C, ZERO_C]]);
        vec![i_m, j_m, k_m]
    })
}

// [𝐢,𝐣] = 2𝐤 and cyclic: coefficients are 2·(cross product structure).
const SU2_TABLE: &[(u8, u8, u8, f64)] = &[(0, 1, 2, 2.0), (1, 2, 0, 2.0), (0, 2, 1, -2.0)];

fn su3_basis() -> &'static [CMat] {
    static BASIS: OnceLock<Vec<CMat>> = OnceLock::new();
    BASIS.get_or_init(|| {
        let s3 = 1.0 / 3.0f64.sqrt();
        let l = |rows: [[(f64, f64); 3]; 3]| {
            let mut m = CMat::zero(3);
            for i in 0..3 {
                for j in 0..3 {
                    m.set(i, j, C::new(rows[i][j].0, rows[i][j].1));
                }
            }
            m
        };
        let z = (0.0, 0.0);
        // Gell-Mann matrices λ_1..λ_8; the algebra basis is i·λ_a.
        let lambdas = vec![
            l([[z, (1.0, 0.0), z], [(1.0, 0.0), z, z], [z, z, z]]),
            l([[z, (0.0, -1.0), z], [(0.0, 1.0), z, z], [z, z, z]]),
            l([[(1.0, 0.0), z, z], [z, (-1.0, 0.0), z], [z, z, z]]),
            l([[z, z, (1.0, 0.0)], [z, z, z], [(1.0, 0.0), z, z]]),
            l([[z, z, (0.0, -1.0)], [z, z, z], [(0.0, 1.0), z, z]]),
            l([[z, z, z], [z, z, (1.0, 0.0)], [z, (1.0, 0.0), z]]),
            l([[z, z, z], [z, z, (0.0, -1.0)], [z, (0.0, 1.0), z]]),
            l([[(s3, 0.0), z, z], [z, (s3, 0.0), z], [z, z, (-2.0 * s3, 0.0)]]),
        ];
        lambdas.into_iter().map(|lam| lam.scale(I_C)).collect()
    })
}

fn su3_table() -> &'static [(u8, u8, u8, f64)] {
    static TABLE: OnceLock<Vec<(u8, u8, u8, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Computed from the matrices once, snapped to the exact closed forms
        // {±1, ±2, ±√3} so that downstream float identities are clean.
        let basis = su3_basis();
        let candidates = [0.0, 1.0, -1.0, 2.0, -2.0, 3f64.sqrt(), -(3f64.sqrt())];
        let mut table = Vec::new();
        for a in 0..8 {
            for b in (a + 1)..8 {
                let br = basis[a].mul(&basis[b]).sub(&basis[b].mul(&basis[a]));
                for c in 0..8 {
                    // coefficient = ⟨[B_a,B_b], B_c⟩ / |B_c|²
                    let raw = -0.5 * (br.mul(&basis[c])).trace().re;
                    let snapped = candidates
                        .iter()
                        .copied()
                        .min_by(|x, y| {
                            (x - raw).abs().partial_cmp(&(y - raw).abs()).unwrap()
                        })
                        .unwrap();
                    assert!(
                        (snapped - raw).abs() < 1e-12,
                        "su(3) structure constant off the expected lattice"
                    );
                    if snapped != 0.0 {
                        table.push((a as u8, b as u8, c as u8, snapped));
                    }
                }
            }
        }
        table
    })
}

// ---------------------------------------------------------------------------
// Coefficient-vector kernels
// ---------------------------------------------------------------------------

/// out = [u, v] in basis coefficients. `out` may not alias `u` or `v`.
#[inline]
pub fn bracket_coeffs(kind: GroupKind, u: &[f64], v: &[f64], out: &mut [f64]) {
    match kind {
        GroupKind::Su2 => {
            // [u,v] = 2·(u × v) in the (𝐢,𝐣,𝐤) basis.
            out[0] = 2.0 * (u[1] * v[2] - u[2] * v[1]);
            out[1] = 2.0 * (u[2] * v[0] - u[0] * v[2]);
            out[2] = 2.0 * (u[0] * v[1] - u[1] * v[0]);
        }
        GroupKind::Su3 => {
            for o in out.iter_mut() {
                *o = 0.0;
            }
            for &(a, b, c, w) in su3_table() {
                let (a, b, c) = (a as usize, b as usize, c as usize);
                out[c] += w * (u[a] * v[b] - u[b] * v[a]);
            }
        }
    }
}

/// ⟨u, v⟩ = 2·(u·v): the basis is orthogonal with |B_a|² = 2.
#[inline]
pub fn inner_coeffs(u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for (a, b) in u.iter().zip(v) {
        s += a * b;
    }
    2.0 * s
}

#[inline]
pub fn norm_sq_coeffs(u: &[f64]) -> f64 {
    inner_coeffs(u, u)
}

/// tr(AB) for coefficient vectors: tr = −⟨·,·⟩ on the algebra.
#[inline]
pub fn trace_prod_coeffs(u: &[f64], v: &[f64]) -> f64 {
    -inner_coeffs(u, v)
}

/// Matrix from coefficients: Σ c_a B_a.
pub fn matrix_from_coeffs(kind: GroupKind, c: &[f64]) -> CMat {
    let basis = kind.basis();
    let mut m = CMat::zero(kind.n());
    for (a, &ca) in c.iter().enumerate() {
        if ca != 0.0 {
            m = m.add(&basis[a].scale_re(ca));
        }
    }
    m
}

/// Coefficients of an algebra matrix: c_a = ⟨M, B_a⟩ / 2.
pub fn coeffs_from_matrix(kind: GroupKind, m: &CMat, out: &mut [f64]) {
    for (a, b) in kind.basis().iter().enumerate() {
        out[a] = -0.5 * m.mul(b).trace().re;
    }
}

/// The dim_g × dim_g real rotation of coefficient vectors induced by
/// Ad(O): M ↦ O M O⁻¹. Row-major, orthogonal for unitary O.
pub fn ad_matrix(kind: GroupKind, o: &CMat) -> Vec<f64> {
    let dg = kind.dim_g();
    let basis = kind.basis();
    let o_inv = o.adjoint(); // unitary
    let mut r = vec![0.0; dg * dg];
    for b in 0..dg {
        let conj = o.mul(&basis[b]).mul(&o_inv);
        for (a, ba) in basis.iter().enumerate() {
            r[a * dg + b] = -0.5 * conj.mul(ba).trace().re;
        }
    }
    r
}

/// out = R·u for a dim_g×dim_g row-major matrix.
#[inline]
pub fn apply_ad(r: &[f64], u: &[f64], out: &mut [f64]) {
    let dg = u.len();
    for a in 0..dg {
        let mut s = 0.0;
        let row = &r[a * dg..(a + 1) * dg];
        for b in 0..dg {
            s += row[b] * u[b];
        }
        out[a] = s;
    }
}

// ---------------------------------------------------------------------------
// Validated element types
// ---------------------------------------------------------------------------

/// Anti-hermitian traceless matrix, an element of su(N).
#[derive(Clone, Copy, Debug)]
pub struct AlgebraElement(CMat);

impl AlgebraElement {
    /// Validates the membership invariants (anti-hermitian and traceless
    /// within 1e-12).
    pub fn new(m: CMat) -> Result<Self> {
        if m.herm_defect() > MEMBERSHIP_TOL {
            return Err(Error::validation("matrix is not anti-hermitian"));
        }
        if m.trace().norm() > MEMBERSHIP_TOL {
            return Err(Error::validation("matrix is not traceless"));
        }
        Ok(AlgebraElement(m))
    }

    pub fn zero(kind: GroupKind) -> Self {
        AlgebraElement(CMat::zero(kind.n()))
    }

    pub fn from_coeffs(kind: GroupKind, c: &[f64]) -> Self {
        AlgebraElement(matrix_from_coeffs(kind, c))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn kind(&self) -> GroupKind {
        GroupKind::from_n(self.0.n).expect("validated size")
    }

    pub fn coeffs(&self) -> Vec<f64> {
        let kind = self.kind();
        let mut c = vec![0.0; kind.dim_g()];
        coeffs_from_matrix(kind, &self.0, &mut c);
        c
    }

    pub fn add(&self, o: &Self) -> Self {
        AlgebraElement(self.0.add(&o.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        AlgebraElement(self.0.scale_re(s))
    }
}

/// Special unitary matrix, an element of SU(N).
#[derive(Clone, Copy, Debug)]
pub struct GroupElement(CMat);

impl GroupElement {
    pub fn new(m: CMat) -> Result<Self> {
        if m.unitary_defect() > MEMBERSHIP_TOL {
            return Err(Error::validation("matrix is not unitary"));
        }
        if (m.det() - ONE_C).norm() > MEMBERSHIP_TOL {
            return Err(Error::validation("matrix determinant is not 1"));
        }
        Ok(GroupElement(m))
    }

    pub fn identity(kind: GroupKind) -> Self {
        GroupElement(CMat::identity(kind.n()))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        GroupElement(self.0.adjoint())
    }

    pub fn mul(&self, o: &Self) -> Self {
        GroupElement(self.0.mul(&o.0))
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// ad(A)B = [A, B] = AB − BA.
pub fn bracket(a: &AlgebraElement, b: &AlgebraElement) -> Result<AlgebraElement> {
    if a.n() != b.n() {
        return Err(Error::validation("bracket: dimension mismatch"));
    }
    let m = a.0.mul(&b.0).sub(&b.0.mul(&a.0));
    Ok(AlgebraElement(m))
}

/// ⟨A, B⟩ = −Re tr(AB); Ad-invariant, positive definite on su(N).
pub fn inner(a: &AlgebraElement, b: &AlgebraElement) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::validation("inner: dimension mismatch"));
    }
    Ok(-(a.0.mul(&b.0)).trace().re)
}

pub fn norm(a: &AlgebraElement) -> f64 {
    inner(a, a).expect("same dimension").max(0.0).sqrt()
}

// Padé-13 scaling-and-squaring threshold (Higham 2005).
const PADE13_THETA: f64 = 5.371920351148152;
const PADE13_B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn expm(a: &CMat) -> CMat {
    let norm = a.norm_inf();
    let s = if norm > PADE13_THETA {
        (norm / PADE13_THETA).log2().ceil() as i32
    } else {
        0
    };
    let a_scaled = a.scale_re(0.5f64.powi(s));

    let a2 = a_scaled.mul(&a_scaled);
    let a4 = a2.mul(&a2);
    let a6 = a4.mul(&a2);
    let b = &PADE13_B;
    let id = CMat::identity(a.n);

    // u = A·(A6·(b13·A6 + b11·A4 + b9·A2) + b7·A6 + b5·A4 + b3·A2 + b1·I)
    let w1 = a6.scale_re(b[13]).add(&a4.scale_re(b[11])).add(&a2.scale_re(b[9]));
    let w2 = a6
        .scale_re(b[7])
        .add(&a4.scale_re(b[5]))
        .add(&a2.scale_re(b[3]))
        .add(&id.scale_re(b[1]));
    let u = a_scaled.mul(&a6.mul(&w1).add(&w2));
    // v = A6·(b12·A6 + b10·A4 + b8·A2) + b6·A6 + b4·A4 + b2·A2 + b0·I
    let z1 = a6.scale_re(b[12]).add(&a4.scale_re(b[10])).add(&a2.scale_re(b[8]));
    let z2 = a6
        .scale_re(b[6])
        .add(&a4.scale_re(b[4]))
        .add(&a2.scale_re(b[2]))
        .add(&id.scale_re(b[0]));
    let v = a6.mul(&z1).add(&z2);

    let num = v.add(&u);
    let den = v.sub(&u);
    let mut r = den.inverse().expect("Padé denominator invertible").mul(&num);
    for _ in 0..s {
        r = r.mul(&r);
    }
    r
}

/// Matrix exponential su(N) → SU(N), scaling-and-squaring with Padé-13.
pub fn exp_map(a: &AlgebraElement) -> GroupElement {
    GroupElement(expm(&a.0))
}

/// Exponential of a raw coefficient vector (avoids intermediate validation).
pub fn exp_coeffs(kind: GroupKind, c: &[f64]) -> CMat {
    expm(&matrix_from_coeffs(kind, c))
}

/// Largest singular value via Jacobi iteration on M†M (n ≤ 3).
fn op_norm(m: &CMat) -> f64 {
    let h = m.adjoint().mul(m); // hermitian PSD
    let n = m.n;
    // Jacobi eigenvalue sweeps.
    let mut a = h;
    for _ in 0..24 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a.get(i, j).norm_sqr();
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.norm() < 1e-300 {
                    continue;
                }
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                // Unitary 2×2 rotation diagonalizing the (p,q) block.
                let phi = apq / C::new(apq.norm(), 0.0);
                let theta = 0.5 * (2.0 * apq.norm()).atan2(aqq - app);
                let (c_t, s_t) = (theta.cos(), theta.sin());
                let mut g = CMat::identity(n);
                g.set(p, p, C::new(c_t, 0.0));
                g.set(p, q, phi.conj() * C::new(s_t, 0.0));
                g.set(q, p, -phi * C::new(s_t, 0.0));
                g.set(q, q, C::new(c_t, 0.0));
                a = g.mul(&a).mul(&g.adjoint());
            }
        }
    }
    let mut best = 0.0f64;
    for i in 0..n {
        best = best.max(a.get(i, i).re.max(0.0));
    }
    best.sqrt()
}

/// Nearest-point projection onto SU(N): unitary polar factor, rescaled to
/// determinant one. Errors when the input is singular or farther than the
/// tubular-neighborhood radius 0.3 (operator norm) from the result.
pub fn project_to_group(m: &CMat) -> Result<GroupElement> {
    if m.det().norm() < 1e-8 {
        return Err(Error::numerical("outside tubular neighborhood"));
    }
    // Newton iteration for the unitary polar factor: X ← (X + X^{-†})/2.
    let mut x = *m;
    for _ in 0..40 {
        let next = x.add(&x.adjoint().inverse()?).scale_re(0.5);
        let delta = next.sub(&x).norm();
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    // Rescale to det 1 by the principal N-th root of the residual phase.
    let phase = x.det().arg();
    let n = m.n as f64;
    let x = x.scale(C::new(0.0, -phase / n).exp());
    if op_norm(&m.sub(&x)) > 0.3 + 1e-9 {
        return Err(Error::numerical("outside tubular neighborhood"));
    }
    GroupElement::new(x)
}

// ---------------------------------------------------------------------------
// Highest-root embedding
// ---------------------------------------------------------------------------

/// Quaternionic su(2) triple embedded along a highest root.
#[derive(Clone, Copy, Debug)]
pub struct Su2Embedding {
    pub kind: GroupKind,
    pub i_alpha: AlgebraElement,
    pub j_alpha: AlgebraElement,
    pub k_alpha: AlgebraElement,
}

/// Builds (i_α, j_α, k_α) from a highest root of su(N), normalized so that
/// ⟨α,α⟩ = 2 and hence |i_α|² = |j_α|² = |k_α|² = 2.
pub fn highest_root_embedding(n: usize) -> Result<Su2Embedding> {
    let kind = GroupKind::from_n(n)?;
    match kind {
        GroupKind::Su2 => {
            let b = su2_basis();
            Ok(Su2Embedding {
                kind,
                i_alpha: AlgebraElement(b[0]),
                j_alpha: AlgebraElement(b[1]),
                k_alpha: AlgebraElement(b[2]),
            })
        }
        GroupKind::Su3 => {
            // Highest root α = e₁ − e₃ of su(3): root vector E = e₁₃,
            // conjugate Ē = −e₃₁, coroot H = i·diag(1, 0, −1).
            let mut i_m = CMat::zero(3);
            i_m.set(0, 2, ONE_C);
            i_m.set(2, 0, -ONE_C);
            let mut j_m = CMat::zero(3);
            j_m.set(0, 2, I_C);
            j_m.set(2, 0, I_C);
            let mut k_m = CMat::zero(3);
            k_m.set(0, 0, I_C);
            k_m.set(2, 2, -I_C);
            Ok(Su2Embedding {
                kind,
                i_alpha: AlgebraElement(i_m),
                j_alpha: AlgebraElement(j_m),
                k_alpha: AlgebraElement(k_m),
            })
        }
    }
}

impl Su2Embedding {
    /// Image of an su(2) element under the algebra homomorphism
    /// (𝐢,𝐣,𝐤) ↦ (i_α, j_α, k_α), given su(2) basis coefficients.
    pub fn map_coeffs(&self, c: &[f64]) -> AlgebraElement {
        let m = self
            .i_alpha
            .0
            .scale_re(c[0])
            .add(&self.j_alpha.0.scale_re(c[1]))
            .add(&self.k_alpha.0.scale_re(c[2]));
        AlgebraElement(m)
    }

    /// dim_g(target) × 3 matrix of target-basis coefficients of the triple,
    /// column a = coefficients of the image of the a-th su(2) basis vector.
    pub fn coeff_matrix(&self) -> Vec<f64> {
        let dg = self.kind.dim_g();
        let mut r = vec![0.0; dg * 3];
        for (col, e) in [&self.i_alpha, &self.j_alpha, &self.k_alpha].iter().enumerate() {
            let c = e.coeffs();
            for a in 0..dg {
                r[a * 3 + col] = c[a];
            }
        }
        r
    }
}

// ---------------------------------------------------------------------------
// Sampled commutator bound
// ---------------------------------------------------------------------------

/// Samples random pairs in su(2) and su(3) and returns the maximum of
/// |[A,B]| / (|A||B|). The bound √2 holds exactly; the return value is
/// asserted against √2 + 1e-10.
pub fn bracket_bound_check(samples: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut br = [0.0f64; 8];
    for kind in [GroupKind::Su2, GroupKind::Su3] {
        let dg = kind.dim_g();
        let mut u = vec![0.0; dg];
        let mut v = vec![0.0; dg];
        for _ in 0..samples {
            for x in u.iter_mut() {
                *x = rng.gen_range(-1.0..1.0);
            }
            for x in v.iter_mut() {
                *x = rng.gen_range(-1.0..1.0);
            }
            bracket_coeffs(kind, &u, &v, &mut br[..dg]);
            let denom = (norm_sq_coeffs(&u) * norm_sq_coeffs(&v)).sqrt();
            if denom > 1e-12 {
                let ratio = (norm_sq_coeffs(&br[..dg]).sqrt()) / denom;
                worst = worst.max(ratio);
            }
        }
    }
    assert!(
        worst <= SQRT_2 + 1e-10,
        "commutator bound violated: {worst} > √2"
    );
    worst
}

/// Ratio for one explicit pair, e.g. the embedded (i_α, j_α) attains √2.
pub fn bracket_ratio(a: &AlgebraElement, b: &AlgebraElement) -> Result<f64> {
    let br = bracket(a, b)?;
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(norm(&br) / denom)
}

#[allow(dead_code)]
const _: f64 = FRAC_1_SQRT_2; // keep the consts import honest

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rand_alg(kind: GroupKind, seed: u64) -> AlgebraElement {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..kind.dim_g()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        AlgebraElement::from_coeffs(kind, &c)
    }

    #[test]
    fn su2_basis_brackets() {
        let b = su2_basis();
        // [𝐢,𝐣] = 2𝐤 and cyclic
        let ij = b[0].mul(&b[1]).sub(&b[1].mul(&b[0]));
        assert!(ij.sub(&b[2].scale_re(2.0)).norm() < 1e-15);
        let jk = b[1].mul(&b[2]).sub(&b[2].mul(&b[1]));
        assert!(jk.sub(&b[0].scale_re(2.0)).norm() < 1e-15);
        let ki = b[2].mul(&b[0]).sub(&b[0].mul(&b[2]));
        assert!(ki.sub(&b[1].scale_re(2.0)).norm() < 1e-15);
    }

    #[test]
    fn inner_of_i_with_itself_is_two() {
        let b = su2_basis();
        let i_e = AlgebraElement(b[0]);
        assert!((inner(&i_e, &i_e).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn bracket_of_element_with_itself_vanishes() {
        let a = rand_alg(GroupKind::Su3, 7);
        let z = bracket(&a, &a).unwrap();
        assert!(norm(&z) < 1e-14);
    }

    #[test]
    fn bracket_matches_dense_commutator_su3() {
        let a = rand_alg(GroupKind::Su3, 1);
        let b = rand_alg(GroupKind::Su3, 2);
        let via_op = bracket(&a, &b).unwrap();
        // independent dense evaluation
        let direct = a.0.mul(&b.0).sub(&b.0.mul(&a.0));
        assert!(via_op.0.sub(&direct).norm() < 1e-14);
        // and the coefficient kernel agrees with the matrix route
        let mut c = [0.0; 8];
        bracket_coeffs(GroupKind::Su3, &a.coeffs(), &b.coeffs(), &mut c);
        let rebuilt = AlgebraElement::from_coeffs(GroupKind::Su3, &c);
        assert!(rebuilt.0.sub(&direct).norm() < 1e-12);
    }

    #[test]
    fn bracket_dimension_mismatch_errors() {
        let a = rand_alg(GroupKind::Su2, 3);
        let b = rand_alg(GroupKind::Su3, 4);
        assert!(bracket(&a, &b).is_err());
        assert!(inner(&a, &b).is_err());
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = AlgebraElement::zero(GroupKind::Su2);
        let g = exp_map(&z);
        assert!(g.0.sub(&CMat::identity(2)).norm() < 1e-15);
    }

    #[test]
    fn exp_of_k_has_expected_eigenvalues() {
        // exp(t𝐤) = diag(e^{it}, e^{−it}); exp(π𝐤) = −I
        let k = AlgebraElement(su2_basis()[2]);
        let g = exp_map(&k.scale(std::f64::consts::PI));
        assert!(g.0.add(&CMat::identity(2)).norm() < 1e-12);
        let g2 = exp_map(&k.scale(0.37));
        assert!((g2.0.get(0, 0) - C::new(0.0, 0.37).exp()).norm() < 1e-13);
    }

    #[test]
    fn exp_inverse_roundtrip() {
        for seed in 0..16u64 {
            let a = rand_alg(GroupKind::Su3, seed);
            let g = exp_map(&a);
            let gi = exp_map(&a.scale(-1.0));
            let p = g.0.mul(&gi.0);
            assert!(p.sub(&CMat::identity(3)).norm() < 1e-12);
            // membership invariants hold
            GroupElement::new(g.0).unwrap();
        }
    }

    #[test]
    fn exp_large_norm_still_unitary() {
        let a = rand_alg(GroupKind::Su3, 99).scale(9.7); // ‖A‖ near 10
        let g = exp_map(&a);
        GroupElement::new(g.0).unwrap();
    }

    #[test]
    fn project_fixes_group_elements() {
        let g = exp_map(&rand_alg(GroupKind::Su2, 11));
        let p = project_to_group(&g.0).unwrap();
        assert!(p.0.sub(&g.0).norm() < 1e-12);
    }

    #[test]
    fn project_strips_radial_scaling() {
        let g = exp_map(&rand_alg(GroupKind::Su2, 12));
        let m = g.0.scale_re(1.1);
        let p = project_to_group(&m).unwrap();
        assert!(p.0.sub(&g.0).norm() < 1e-10);
    }

    #[test]
    fn project_rejects_zero_and_far_inputs() {
        assert!(project_to_group(&CMat::zero(2)).is_err());
        let far = CMat::identity(2).scale_re(2.0);
        let e = project_to_group(&far).unwrap_err();
        assert!(e.to_string().contains("outside tubular neighborhood"));
    }

    #[test]
    fn embedding_su2_is_standard_basis() {
        let e = highest_root_embedding(2).unwrap();
        assert!((inner(&e.i_alpha, &e.i_alpha).unwrap() - 2.0).abs() < 1e-14);
        let br = bracket(&e.i_alpha, &e.j_alpha).unwrap();
        assert!(br.0.sub(&e.k_alpha.0.scale_re(2.0)).norm() < 1e-13);
    }

    #[test]
    fn embedding_su3_brackets_and_norms() {
        let e = highest_root_embedding(3).unwrap();
        for (x, lbl) in [(&e.i_alpha, "i"), (&e.j_alpha, "j"), (&e.k_alpha, "k")] {
            let n2 = inner(x, x).unwrap();
            assert!((n2 - 2.0).abs() < 1e-13, "|{lbl}_α|² = {n2}");
            AlgebraElement::new(x.0).unwrap();
        }
        let ij = bracket(&e.i_alpha, &e.j_alpha).unwrap();
        assert!(ij.0.sub(&e.k_alpha.0.scale_re(2.0)).norm() < 1e-13);
        let jk = bracket(&e.j_alpha, &e.k_alpha).unwrap();
        assert!(jk.0.sub(&e.i_alpha.0.scale_re(2.0)).norm() < 1e-13);
        let ki = bracket(&e.k_alpha, &e.i_alpha).unwrap();
        assert!(ki.0.sub(&e.j_alpha.0.scale_re(2.0)).norm() < 1e-13);
    }

    #[test]
    fn embedded_pair_attains_sqrt2() {
        for n in [2usize, 3] {
            let e = highest_root_embedding(n).unwrap();
            let r = bracket_ratio(&e.i_alpha, &e.j_alpha).unwrap();
            assert!((r - SQRT_2).abs() < 1e-12, "ratio {r} at N={n}");
        }
    }

    #[test]
    fn bound_check_small_run() {
        let worst = bracket_bound_check(2000, 42);
        assert!(worst <= SQRT_2 + 1e-10);
        assert!(worst > 1.0); // sampling does approach the bound
    }

    #[test]
    fn unsupported_group_size_errors() {
        assert!(highest_root_embedding(4).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn jacobi_identity(seed in 0u64..1u64 << 40) {
            let a = rand_alg(GroupKind::Su3, seed);
            let b = rand_alg(GroupKind::Su3, seed ^ 0xabcd);
            let c = rand_alg(GroupKind::Su3, seed ^ 0x1234);
            let t1 = bracket(&a, &bracket(&b, &c).unwrap()).unwrap();
            let t2 = bracket(&b, &bracket(&c, &a).unwrap()).unwrap();
            let t3 = bracket(&c, &bracket(&a, &b).unwrap()).unwrap();
            let s = t1.0.add(&t2.0).add(&t3.0);
            prop_assert!(s.norm() < 1e-11);
        }

        #[test]
        fn ad_invariance_infinitesimal(seed in 0u64..1u64 << 40) {
            let a = rand_alg(GroupKind::Su3, seed);
            let b = rand_alg(GroupKind::Su3, seed ^ 0xf00d);
            let c = rand_alg(GroupKind::Su3, seed ^ 0xbeef);
            let lhs = inner(&bracket(&c, &a).unwrap(), &b).unwrap();
            let rhs = -inner(&a, &bracket(&c, &b).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-11);
        }

        #[test]
        fn inner_symmetric_and_ad_invariant(seed in 0u64..1u64 << 40) {
            let a = rand_alg(GroupKind::Su2, seed);
            let b = rand_alg(GroupKind::Su2, seed ^ 0x77);
            prop_assert!((inner(&a, &b).unwrap() - inner(&b, &a).unwrap()).abs() < 1e-13);
            let o = exp_map(&rand_alg(GroupKind::Su2, seed ^ 0x99));
            let ra = o.0.mul(&a.0).mul(&o.0.adjoint());
            let rb = o.0.mul(&b.0).mul(&o.0.adjoint());
            let lhs = -(ra.mul(&rb)).trace().re;
            prop_assert!((lhs - inner(&a, &b).unwrap()).abs() < 1e-12);
        }
    }
}
