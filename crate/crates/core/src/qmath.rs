//! Dense complex linear algebra for one- and two-qubit objects.
//!
//! Two-qubit matrices always use the product basis ordered `HH, HV, VH, VV`
//! (index `2*i + k` for Alice's index `i` and Bob's index `k`). Every other
//! module relies on this layout.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{QkdError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Hermiticity tolerance for density matrices (max-entry norm).
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted as positive semidefinite.
pub const PSD_TOL: f64 = -1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CVec<const N: usize>(pub [C64; N]);

pub type CVec2 = CVec<2>;
pub type CVec4 = CVec<4>;

#[derive(Clone, Copy, PartialEq)]
pub struct CMat<const N: usize>(pub [[C64; N]; N]);

pub type CMat2 = CMat<2>;
pub type CMat4 = CMat<4>;

impl<const N: usize> CVec<N> {
    pub fn zeros() -> Self {
        CVec([ZERO; N])
    }

    pub fn basis(k: usize) -> Self {
        let mut v = Self::zeros();
        v.0[k] = ONE;
        v
    }

    /// `<self|other>`, conjugating `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        CVec(self.0.map(|a| a * s))
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        self.scale(C64::new(1.0 / n, 0.0))
    }

    pub fn conj(&self) -> Self {
        CVec(self.0.map(|a| a.conj()))
    }

    /// `|self><self|`.
    pub fn outer(&self) -> CMat<N> {
        CMat::from_fn(|i, j| self.0[i] * self.0[j].conj())
    }

    /// `|<self|other>|^2`: overlap probability, blind to global phase.
    pub fn overlap(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }
}

impl CVec2 {
    pub fn new(a: C64, b: C64) -> Self {
        CVec([a, b])
    }

    pub fn kron(&self, other: &CVec2) -> CVec4 {
        CVec([
            self.0[0] * other.0[0],
            self.0[0] * other.0[1],
            self.0[1] * other.0[0],
            self.0[1] * other.0[1],
        ])
    }
}

impl<const N: usize> CMat<N> {
    pub fn zeros() -> Self {
        CMat([[ZERO; N]; N])
    }

    pub fn identity() -> Self {
        Self::from_fn(|i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn from_real(rows: [[f64; N]; N]) -> Self {
        Self::from_fn(|i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: [f64; N]) -> Self {
        Self::from_fn(|i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[i][j]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i].conj())
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(|i, j| self.0[i][j].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    pub fn trace(&self) -> C64 {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * s)
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * s)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn frobenius(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() < tol
    }

    /// Averages `M` and `M^†`, removing rounding asymmetry.
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale(0.5)
    }

    pub fn apply(&self, v: &CVec<N>) -> CVec<N> {
        let mut out = CVec::zeros();
        for i in 0..N {
            out.0[i] = (0..N).map(|j| self.0[i][j] * v.0[j]).sum();
        }
        out
    }

    /// `<v|M|v>`.
    pub fn expectation(&self, v: &CVec<N>) -> C64 {
        v.inner(&self.apply(v))
    }

    /// `Tr[self * other]` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let mut acc = ZERO;
        for i in 0..N {
            for j in 0..N {
                acc += self.0[i][j] * other.0[j][i];
            }
        }
        acc
    }

    /// `U M U^†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        *u * *self * u.adjoint()
    }
}

impl<const N: usize> Add for CMat<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl<const N: usize> Sub for CMat<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl<const N: usize> Mul for CMat<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..N {
                    out.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        out
    }
}

impl<const N: usize> fmt::Debug for CMat<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat<{N}>[")?;
        for row in &self.0 {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:>9.5}{:+.5}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// Row-major array of rows, each entry a `[re, im]` pair.
impl<const N: usize> Serialize for CMat<N> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .0
            .iter()
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de, const N: usize> Deserialize<'de> for CMat<N> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        if rows.len() != N || rows.iter().any(|r| r.len() != N) {
            return Err(D::Error::custom(format!("expected a {N}x{N} matrix")));
        }
        Ok(Self::from_fn(|i, j| C64::new(rows[i][j][0], rows[i][j][1])))
    }
}

pub fn pauli_x() -> CMat2 {
    CMat([[ZERO, ONE], [ONE, ZERO]])
}

pub fn pauli_y() -> CMat2 {
    CMat([[ZERO, -I], [I, ZERO]])
}

pub fn pauli_z() -> CMat2 {
    CMat([[ONE, ZERO], [ZERO, -ONE]])
}

/// `[I, X, Y, Z]`.
pub fn paulis() -> [CMat2; 4] {
    [CMat2::identity(), pauli_x(), pauli_y(), pauli_z()]
}

/// Kronecker product `a ⊗ b` in the `HH, HV, VH, VV` layout:
/// `(a⊗b)[2i+k][2j+l] = a[i][j] * b[k][l]`.
pub fn tensor(a: &CMat2, b: &CMat2) -> CMat4 {
    CMat4::from_fn(|r, c| a.0[r / 2][c / 2] * b.0[r % 2][c % 2])
}

/// Which qubit a partial trace removes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    /// Alice's photon.
    First,
    /// Bob's photon.
    Second,
}

/// Validates the density-matrix contract: hermitian, unit trace, PSD.
pub fn check_density(rho: &CMat4) -> Result<()> {
    let herm = rho.hermiticity_error();
    if herm >= HERMITIAN_TOL {
        return Err(QkdError::NotDensity(format!(
            "hermiticity error {herm:.3e}"
        )));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(QkdError::NotDensity(format!("trace {tr}")));
    }
    let eig = herm_eig(rho)?;
    let min = eig.values[3];
    if min < PSD_TOL {
        return Err(QkdError::NotDensity(format!(
            "negative eigenvalue {min:.3e}"
        )));
    }
    Ok(())
}

/// Traces out `subsystem`, returning the reduced state of the other qubit.
pub fn partial_trace(rho: &CMat4, subsystem: Subsystem) -> Result<CMat2> {
    check_density(rho)?;
    Ok(partial_trace_unchecked(rho, subsystem))
}

/// Partial trace of an arbitrary operator; linear, no validation.
pub fn partial_trace_unchecked(m: &CMat4, subsystem: Subsystem) -> CMat2 {
    match subsystem {
        Subsystem::Second => CMat2::from_fn(|i, j| m.0[2 * i][2 * j] + m.0[2 * i + 1][2 * j + 1]),
        Subsystem::First => CMat2::from_fn(|k, l| m.0[k][l] + m.0[2 + k][2 + l]),
    }
}

/// Eigen-decomposition of a hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEigen<const N: usize> {
    /// Sorted descending.
    pub values: [f64; N],
    /// `vectors[k]` belongs to `values[k]`.
    pub vectors: [CVec<N>; N],
}

impl<const N: usize> HermEigen<N> {
    /// `V f(Λ) V^†`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> CMat<N> {
        let mut out = CMat::zeros();
        for (lam, v) in self.values.iter().zip(self.vectors.iter()) {
            out = out + v.outer().scale(f(*lam));
        }
        out
    }

    pub fn reconstruct(&self) -> CMat<N> {
        self.map_values(|x| x)
    }
}

const JACOBI_OFF_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic complex Jacobi eigensolver for hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `m[p][q]` with a
/// diagonal unitary, then zeroes it with a real Givens rotation.
pub fn herm_eig<const N: usize>(m: &CMat<N>) -> Result<HermEigen<N>> {
    let herm = m.hermiticity_error();
    if herm >= HERMITIAN_TOL {
        return Err(QkdError::NotHermitian(herm));
    }
    let mut a = m.hermitian_part();
    let mut v = CMat::<N>::identity();
    let scale = a.frobenius().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..N)
            .flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.0[i][j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_OFF_TOL * scale {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a.0[p][q];
                let r = apq.norm();
                if r <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / r;
                let app = a.0[p][p].re;
                let aqq = a.0[q][q].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U = D G with D = diag(.., e^{-i phi} at q, ..) and the
                // real rotation G[p][p]=G[q][q]=c, G[p][q]=s, G[q][p]=-s.
                let mut u = CMat::<N>::identity();
                u.0[p][p] = C64::new(c, 0.0);
                u.0[p][q] = C64::new(s, 0.0);
                u.0[q][p] = phase.conj() * (-s);
                u.0[q][q] = phase.conj() * c;
                a = u.adjoint() * a * u;
                a.0[p][q] = ZERO;
                a.0[q][p] = ZERO;
                v = v * u;
            }
        }
    }

    let mut order: Vec<usize> = (0..N).collect();
    order.sort_by(|&i, &j| a.0[j][j].re.total_cmp(&a.0[i][i].re));
    let mut values = [0.0; N];
    let mut vectors = [CVec::zeros(); N];
    for (slot, &k) in order.iter().enumerate() {
        values[slot] = a.0[k][k].re;
        vectors[slot] = CVec(std::array::from_fn(|i| v.0[i][k]));
    }
    Ok(HermEigen { values, vectors })
}

/// Closest physical state by spectral clipping: negative eigenvalues are set
/// to zero and the trace renormalized to one.
pub fn nearest_physical(m: &CMat4) -> Result<CMat4> {
    let eig = herm_eig(m)?;
    if eig.values[3] >= 0.0 {
        let tr = m.trace().re;
        if tr > 0.0 && (tr - 1.0).abs() <= TRACE_TOL {
            return Ok(m.hermitian_part());
        }
    }
    let clipped: f64 = eig.values.iter().map(|&x| x.max(0.0)).sum();
    if clipped <= 1e-14 {
        return Err(QkdError::Unphysical(
            "no positive spectral weight after clipping".into(),
        ));
    }
    Ok(eig.map_values(|x| x.max(0.0) / clipped).hermitian_part())
}

/// Principal square root of a PSD matrix (negative rounding clipped).
pub fn sqrt_psd<const N: usize>(m: &CMat<N>) -> Result<CMat<N>> {
    Ok(herm_eig(m)?.map_values(|x| x.max(0.0).sqrt()))
}

/// Inverts a small dense real matrix by Gauss-Jordan elimination with partial
/// pivoting. Returns `None` when a pivot falls below `1e-12`.
pub fn invert_real<const N: usize>(a: &[[f64; N]; N]) -> Option<[[f64; N]; N]> {
    let mut m = *a;
    let mut inv = [[0.0; N]; N];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let d = m[col][col];
        for j in 0..N {
            m[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..N {
            if i == col {
                continue;
            }
            let f = m[i][col];
            if f == 0.0 {
                continue;
            }
            for j in 0..N {
                m[i][j] -= f * m[col][j];
                inv[i][j] -= f * inv[col][j];
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ket_h() -> CVec2 {
        CVec::basis(0)
    }

    fn bell() -> CVec4 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CVec([C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)])
    }

    fn eq10() -> CMat4 {
        CMat4::diag([0.5, 0.0, 0.0, 0.5])
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let t = tensor(&CMat2::identity(), &CMat2::identity());
        assert!((t - CMat4::identity()).max_abs() < 1e-15);
    }

    #[test]
    fn tensor_hh_sits_in_top_left_corner() {
        let p = ket_h().outer();
        let t = tensor(&p, &p);
        assert_eq!(t.get(0, 0), ONE);
        let others: f64 = (0..16)
            .filter(|&k| k != 0)
            .map(|k| t.get(k / 4, k % 4).norm())
            .sum();
        assert_eq!(others, 0.0);
    }

    #[test]
    fn zz_stabilizes_bell_state() {
        // By hand: ZZ = diag(1,-1,-1,1), psi has support on indices 0 and 3.
        let zz = tensor(&pauli_z(), &pauli_z());
        assert_eq!(zz, CMat4::diag([1.0, -1.0, -1.0, 1.0]));
        let out = zz.apply(&bell());
        for k in 0..4 {
            assert!((out.0[k] - bell().0[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn partial_traces() {
        // Diagonal blocks of rho_psi are diag(1/2, 0) and diag(0, 1/2).
        let rho = bell().outer();
        let half = CMat2::diag([0.5, 0.5]);
        assert!((partial_trace(&rho, Subsystem::Second).unwrap() - half).max_abs() < 1e-15);
        assert!((partial_trace(&eq10(), Subsystem::Second).unwrap() - half).max_abs() < 1e-15);

        let hh = ket_h().kron(&ket_h()).outer();
        let r = partial_trace(&hh, Subsystem::First).unwrap();
        assert!((r - ket_h().outer()).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_non_density() {
        let m = CMat4::diag([2.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            partial_trace(&m, Subsystem::First),
            Err(QkdError::NotDensity(_))
        ));
    }

    #[test]
    fn eigenvalues_of_reference_states() {
        let e = herm_eig(&bell().outer()).unwrap();
        let expect = [1.0, 0.0, 0.0, 0.0];
        for k in 0..4 {
            assert!((e.values[k] - expect[k]).abs() < 1e-12);
        }
        let e = herm_eig(&eq10()).unwrap();
        let expect = [0.5, 0.5, 0.0, 0.0];
        for k in 0..4 {
            assert!((e.values[k] - expect[k]).abs() < 1e-12);
        }
        let e = herm_eig(&CMat4::identity().scale(0.25)).unwrap();
        assert!(e.values.iter().all(|x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let mut m = CMat4::identity();
        m.0[0][1] = ONE;
        assert!(matches!(herm_eig(&m), Err(QkdError::NotHermitian(_))));
    }

    #[test]
    fn herm_eig_complex_reconstruction() {
        let m = CMat4::from_fn(|i, j| {
            let re = ((i * 7 + j * 3) % 5) as f64 * 0.1 + ((j * 7 + i * 3) % 5) as f64 * 0.1;
            let im = if i == j {
                0.0
            } else {
                (i as f64 - j as f64) * 0.17
            };
            C64::new(re, im)
        });
        assert!(m.is_hermitian(1e-14));
        let e = herm_eig(&m).unwrap();
        assert!((e.reconstruct() - m).max_abs() < 1e-8);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        for a in 0..4 {
            for b in 0..4 {
                let ip = e.vectors[a].inner(&e.vectors[b]).norm();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn nearest_physical_keeps_physical_input() {
        let rho = bell().outer();
        assert!((nearest_physical(&rho).unwrap() - rho).max_abs() < 1e-10);
    }

    #[test]
    fn nearest_physical_clips_and_renormalizes() {
        let m = CMat4::diag([0.6, 0.5, 0.0, -0.1]);
        let want = CMat4::diag([0.6 / 1.1, 0.5 / 1.1, 0.0, 0.0]);
        assert!((nearest_physical(&m).unwrap() - want).max_abs() < 1e-12);
    }

    #[test]
    fn nearest_physical_rejects_negative_spectrum() {
        let m = CMat4::diag([-1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(nearest_physical(&m), Err(QkdError::Unphysical(_))));
    }

    #[test]
    fn matrix_json_layout() {
        let mut m = CMat2::identity();
        m.0[0][1] = C64::new(0.5, -0.25);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "[[[1.0,0.0],[0.5,-0.25]],[[0.0,0.0],[1.0,0.0]]]");
        let back: CMat2 = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<CMat4>(&json).is_err());
    }

    #[test]
    fn invert_real_roundtrip() {
        let a = [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        let inv = invert_real(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let p: f64 = (0..3).map(|k| a[i][k] * inv[k][j]).sum();
                assert!((p - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert!(invert_real(&[[1.0, 2.0], [2.0, 4.0]]).is_none());
    }
}
