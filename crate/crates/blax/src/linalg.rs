//! Dense complex matrices and the factorizations the rest of the toolkit
//! needs: Hermitian eigendecomposition, rank-revealing PSD factors, linear
//! solves, and spectral radii.
//!
//! Everything is double precision; matrices are small (the constructions in
//! this crate live at state dimension d <= 16).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

pub type CScalar = Complex64;
pub type CVector = DVector<Complex64>;

/// Dense complex matrix, the carrier for every operator symbol in the crate.
///
/// JSON encoding is `{"rows": r, "cols": c, "entries": [[re, im], ...]}`
/// with entries row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix(DMatrix<Complex64>);

impl CMatrix {
    /// Builds a matrix from a row-major entry list; rejects NaN/Inf entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::MalformedInput(format!(
                "entries length {} does not match rows*cols = {}",
                entries.len(),
                rows * cols
            )));
        }
        let m = DMatrix::from_row_iterator(rows, cols, entries);
        Self::from_dmatrix(m)
    }

    pub fn from_dmatrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::MalformedInput(
                "matrix contains non-finite entries".into(),
            ));
        }
        Ok(CMatrix(m))
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        CMatrix(DMatrix::identity(n, n))
    }

    pub fn scalar(z: Complex64) -> Self {
        CMatrix(DMatrix::from_element(1, 1, z))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix(self.0.adjoint())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix(self.0.transpose())
    }

    pub fn conjugate(&self) -> CMatrix {
        CMatrix(self.0.conjugate())
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.0[(i, j)] = v;
    }

    /// Max entrywise deviation from Hermitian symmetry.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.asymmetry() <= tol
    }

    /// Replaces the matrix by its Hermitian part (M + M*)/2.
    pub fn hermitize(&self) -> CMatrix {
        CMatrix((&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0))
    }

    /// Horizontal stack [self, other].
    pub fn hstack(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.rows() != other.rows() {
            return Err(Error::dim("hstack", "row counts differ"));
        }
        let mut m = DMatrix::zeros(self.rows(), self.cols() + other.cols());
        m.view_mut((0, 0), (self.rows(), self.cols())).copy_from(&self.0);
        m.view_mut((0, self.cols()), (other.rows(), other.cols()))
            .copy_from(&other.0);
        Ok(CMatrix(m))
    }

    /// Vertical stack [self; other].
    pub fn vstack(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols() != other.cols() {
            return Err(Error::dim("vstack", "column counts differ"));
        }
        let mut m = DMatrix::zeros(self.rows() + other.rows(), self.cols());
        m.view_mut((0, 0), (self.rows(), self.cols())).copy_from(&self.0);
        m.view_mut((self.rows(), 0), (other.rows(), other.cols()))
            .copy_from(&other.0);
        Ok(CMatrix(m))
    }

    /// 2x2 block matrix [[a, b], [c, d]].
    pub fn block2(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> Result<CMatrix> {
        a.hstack(b)?.vstack(&c.hstack(d)?)
    }

    pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
        let z_tr = CMatrix::zeros(a.rows(), b.cols());
        let z_bl = CMatrix::zeros(b.rows(), a.cols());
        CMatrix::block2(a, &z_tr, &z_bl, b).expect("blocks are consistent by construction")
    }

    pub fn submatrix(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> CMatrix {
        CMatrix(self.0.view((row0, col0), (rows, cols)).into_owned())
    }

    pub fn column(&self, j: usize) -> CVector {
        self.0.column(j).into_owned()
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        CMatrix(&self.0 * Complex64::new(s, 0.0))
    }

    pub fn scale_c(&self, s: Complex64) -> CMatrix {
        CMatrix(&self.0 * s)
    }

    /// Kronecker product.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        CMatrix(self.0.kronecker(&other.0))
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        &self.0 * v
    }
}

impl std::ops::Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 - &rhs.0)
    }
}

impl std::ops::Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 * &rhs.0)
    }
}

impl std::ops::Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix(-&self.0)
    }
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        struct Entries<'a>(&'a DMatrix<Complex64>);
        impl Serialize for Entries<'_> {
            fn serialize<S: Serializer>(
                &self,
                serializer: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
                for i in 0..self.0.nrows() {
                    for j in 0..self.0.ncols() {
                        let z = self.0[(i, j)];
                        seq.serialize_element(&[z.re, z.im])?;
                    }
                }
                seq.end()
            }
        }
        let mut s = serializer.serialize_struct("CMatrix", 3)?;
        s.serialize_field("rows", &self.rows())?;
        s.serialize_field("cols", &self.cols())?;
        s.serialize_field("entries", &Entries(&self.0))?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            rows: usize,
            cols: usize,
            entries: Vec<[f64; 2]>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let entries: Vec<Complex64> = raw
            .entries
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        CMatrix::new(raw.rows, raw.cols, entries).map_err(de::Error::custom)
    }
}

/// Serde helper for a bare complex scalar encoded as [re, im].
pub fn serialize_cscalar<S: Serializer>(
    z: &Complex64,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

pub fn deserialize_cscalar<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Complex64, D::Error> {
    struct V;
    impl<'de> Visitor<'de> for V {
        type Value = Complex64;
        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            write!(f, "a [re, im] pair")
        }
        fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Complex64, A::Error> {
            let re: f64 = seq.next_element()?.ok_or_else(|| de::Error::custom("missing re"))?;
            let im: f64 = seq.next_element()?.ok_or_else(|| de::Error::custom("missing im"))?;
            Ok(Complex64::new(re, im))
        }
    }
    d.deserialize_seq(V)
}

/// Hermitian eigendecomposition M = U diag(lambda) U*, eigenvalues ascending.
///
/// The input is hermitized first; callers that care about asymmetry check it
/// themselves.
pub fn eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !m.is_square() {
        return Err(Error::dim("eigh", "matrix not square"));
    }
    if m.rows() == 0 {
        return Ok((vec![], CMatrix::zeros(0, 0)));
    }
    let h = m.hermitize();
    let se = nalgebra::SymmetricEigen::new(h.0);
    let mut idx: Vec<usize> = (0..se.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| {
        se.eigenvalues[a]
            .partial_cmp(&se.eigenvalues[b])
            .expect("eigenvalues are finite")
    });
    let vals: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let n = m.rows();
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &i) in idx.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(i));
    }
    Ok((vals, CMatrix(vecs)))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig_hermitian(m: &CMatrix) -> Result<f64> {
    let (vals, _) = eigh(m)?;
    Ok(vals.first().copied().unwrap_or(0.0))
}

/// Largest singular value (operator 2-norm), via the Hermitian square M*M.
pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(0.0);
    }
    let (vals, _) = eigh(&(&m.adjoint() * m))?;
    Ok(vals.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Spectral radius of a square complex matrix by a dense eigenvalue method
/// (real Schur on the 2d x 2d real embedding [[Re, -Im], [Im, Re]]).
pub fn spectral_radius(m: &CMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::dim("spectral_radius", "matrix not square"));
    }
    let d = m.rows();
    if d == 0 {
        return Ok(0.0);
    }
    let mut emb = DMatrix::<f64>::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let z = m.0[(i, j)];
            emb[(i, j)] = z.re;
            emb[(i, j + d)] = -z.im;
            emb[(i + d, j)] = z.im;
            emb[(i + d, j + d)] = z.re;
        }
    }
    let eigs = emb.complex_eigenvalues();
    Ok(eigs.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Rank-revealing factorization of a Hermitian PSD matrix: returns V with
/// columns spanning the range, V V* = M up to the rank tolerance.
///
/// Eigenvalues above `rank_tol` are kept. The factor is canonicalized by
/// rotating each column so its largest-magnitude entry is real positive;
/// columns are ordered by descending eigenvalue.
pub fn psd_factor(m: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::dim("psd_factor", "matrix not square"));
    }
    let scale = m.frobenius();
    let herm_tol = (1e-12 * scale).max(1e-14);
    if !m.is_hermitian(herm_tol) {
        return Err(Error::NotHermitian { asym: m.asymmetry() });
    }
    let (vals, vecs) = eigh(m)?;
    if let Some(&min) = vals.first() {
        if min < -rank_tol {
            return Err(Error::NotPsd {
                min_eig: min,
                tol: rank_tol,
            });
        }
    }
    let kept: Vec<usize> = (0..vals.len()).rev().filter(|&i| vals[i] > rank_tol).collect();
    let n = m.rows();
    let mut v = DMatrix::zeros(n, kept.len());
    for (col, &i) in kept.iter().enumerate() {
        let mut u = vecs.0.column(i).into_owned() * Complex64::new(vals[i].sqrt(), 0.0);
        // canonical phase: largest-magnitude entry real positive
        let mut best = 0usize;
        let mut best_abs = 0.0;
        for (r, z) in u.iter().enumerate() {
            if z.norm() > best_abs {
                best_abs = z.norm();
                best = r;
            }
        }
        if best_abs > 0.0 {
            let phase = u[best] / Complex64::new(best_abs, 0.0);
            u *= phase.conj();
        }
        v.set_column(col, &u);
    }
    Ok(CMatrix(v))
}

/// Default rank tolerance for psd_factor: 1e-10 times the Frobenius norm.
pub fn psd_factor_default(m: &CMatrix) -> Result<CMatrix> {
    psd_factor(m, (tol::PSD_REL * m.frobenius()).max(1e-300))
}

/// Solves A X = B for square nonsingular A (LU with one refinement step).
pub fn solve_linear(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::dim("solve_linear", "A not square"));
    }
    if a.rows() != b.rows() {
        return Err(Error::dim("solve_linear", "A and B row counts differ"));
    }
    let lu = a.0.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::Singular { cond: f64::INFINITY })?;
    let cond = one_norm(&a.0) * one_norm(&inv);
    if !cond.is_finite() || cond >= tol::COND_SOLVE {
        return Err(Error::Singular { cond });
    }
    let mut x = &inv * &b.0;
    // one step of iterative refinement
    let r = &b.0 - &a.0 * &x;
    x += &inv * r;
    Ok(CMatrix(x))
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of a square matrix through `solve_linear`.
pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    solve_linear(a, &CMatrix::identity(a.rows()))
}

/// Hermitian PSD square root via eigendecomposition. Small negative
/// eigenvalues within `clip_tol` are clamped to zero.
pub fn sqrtm_psd(m: &CMatrix, clip_tol: f64) -> Result<CMatrix> {
    let (vals, vecs) = eigh(m)?;
    if let Some(&min) = vals.first() {
        if min < -clip_tol {
            return Err(Error::NotPsd {
                min_eig: min,
                tol: clip_tol,
            });
        }
    }
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    ));
    Ok(CMatrix(&vecs.0 * d * vecs.0.adjoint()))
}

/// Inverse of a Hermitian positive-definite matrix, with a condition guard.
pub fn inv_pd(m: &CMatrix, cond_cap: f64) -> Result<CMatrix> {
    let (vals, vecs) = eigh(m)?;
    let min = vals.first().copied().unwrap_or(0.0);
    let max = vals.last().copied().unwrap_or(0.0);
    if min <= 0.0 || max / min >= cond_cap {
        return Err(Error::NotExactlyObservable(format!(
            "matrix not strictly positive definite (min eig {min:.3e}, cond {:.3e})",
            if min > 0.0 { max / min } else { f64::INFINITY }
        )));
    }
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| Complex64::new(1.0 / l, 0.0)),
    ));
    Ok(CMatrix(&vecs.0 * d * vecs.0.adjoint()))
}

/// Inverse Hermitian PD square root, with the same condition guard as `inv_pd`.
pub fn inv_sqrtm_pd(m: &CMatrix, cond_cap: f64) -> Result<CMatrix> {
    let (vals, vecs) = eigh(m)?;
    let min = vals.first().copied().unwrap_or(0.0);
    let max = vals.last().copied().unwrap_or(0.0);
    if min <= 0.0 || max / min >= cond_cap {
        return Err(Error::NotExactlyObservable(format!(
            "matrix not strictly positive definite (min eig {min:.3e})"
        )));
    }
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| Complex64::new(1.0 / l.sqrt(), 0.0)),
    ));
    Ok(CMatrix(&vecs.0 * d * vecs.0.adjoint()))
}

/// Condition number of a Hermitian PD matrix (eigenvalue ratio).
pub fn cond_hermitian(m: &CMatrix) -> Result<f64> {
    let (vals, _) = eigh(m)?;
    let min = vals.first().copied().unwrap_or(0.0);
    let max = vals.last().copied().unwrap_or(0.0);
    if min <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

/// Three-valued outcome of a PSD test: ties at the threshold are reported
/// as indeterminate rather than as a pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Tri {
    Pass,
    Fail,
    Indeterminate,
}

impl Tri {
    pub fn is_pass(self) -> bool {
        self == Tri::Pass
    }
}

/// PSD test with threshold -PSD_REL * ||M||_F.
pub fn psd_test(m: &CMatrix) -> Result<Tri> {
    let scale = m.frobenius().max(1.0);
    let threshold = -tol::PSD_REL * scale;
    let min = min_eig_hermitian(m)?;
    let tie_band = 1e-15 * scale;
    if (min - threshold).abs() <= tie_band {
        Ok(Tri::Indeterminate)
    } else if min > threshold {
        Ok(Tri::Pass)
    } else {
        Ok(Tri::Fail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spectral_radius_zero_scalar_nilpotent() {
        let z = CMatrix::from_real(1, 1, &[0.0]).unwrap();
        assert_eq!(spectral_radius(&z).unwrap(), 0.0);
        let s = CMatrix::from_real(1, 1, &[0.5]).unwrap();
        assert!((spectral_radius(&s).unwrap() - 0.5).abs() < 1e-14);
        let nil = CMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(spectral_radius(&nil).unwrap() < 1e-10);
    }

    #[test]
    fn spectral_radius_complex() {
        // diag(0.3 + 0.4i, 0.1): radius 0.5
        let m = CMatrix::new(2, 2, vec![c(0.3, 0.4), c(0.0, 0.0), c(0.0, 0.0), c(0.1, 0.0)]).unwrap();
        assert!((spectral_radius(&m).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_rejects_nonsquare() {
        let m = CMatrix::zeros(2, 3);
        assert!(matches!(spectral_radius(&m), Err(Error::Dimension { .. })));
    }

    #[test]
    fn psd_factor_diag_and_rank_one() {
        let m = CMatrix::from_real(2, 2, &[4.0, 0.0, 0.0, 1.0]).unwrap();
        let v = psd_factor_default(&m).unwrap();
        assert_eq!(v.cols(), 2);
        let rec = &v * &v.adjoint();
        assert!((&rec - &m).frobenius() < 1e-12);
        // canonical: columns sorted by eigenvalue, phases positive
        assert!((v.get(0, 0) - c(2.0, 0.0)).norm() < 1e-12);
        assert!((v.get(1, 1) - c(1.0, 0.0)).norm() < 1e-12);

        let ones = CMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        let v1 = psd_factor_default(&ones).unwrap();
        assert_eq!(v1.cols(), 1);
        assert!((v1.get(0, 0) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((v1.get(1, 0) - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn psd_factor_zero_matrix_has_no_columns() {
        let z = CMatrix::zeros(2, 2);
        let v = psd_factor(&z, 1e-12).unwrap();
        assert_eq!((v.rows(), v.cols()), (2, 0));
    }

    #[test]
    fn psd_factor_rejects_indefinite() {
        let m = CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(matches!(psd_factor(&m, 1e-10), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn solve_identity_and_scalar() {
        let i = CMatrix::identity(3);
        let b = CMatrix::from_real(3, 1, &[1.0, 2.0, 3.0]).unwrap();
        let x = solve_linear(&i, &b).unwrap();
        assert!((&x - &b).frobenius() < 1e-14);

        let a = CMatrix::from_real(1, 1, &[2.0]).unwrap();
        let b = CMatrix::from_real(1, 1, &[6.0]).unwrap();
        assert!((solve_linear(&a, &b).unwrap().get(0, 0) - c(3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn solve_back_substitution_example() {
        let a = CMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        let b = CMatrix::from_real(2, 1, &[3.0, 1.0]).unwrap();
        let x = solve_linear(&a, &b).unwrap();
        assert!((x.get(0, 0) - c(2.0, 0.0)).norm() < 1e-14);
        assert!((x.get(1, 0) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = CMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        let b = CMatrix::identity(2);
        assert!(matches!(solve_linear(&a, &b), Err(Error::Singular { .. })));
    }

    #[test]
    fn eigh_hermitian_complex() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3
        let m = CMatrix::new(2, 2, vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]).unwrap();
        let (vals, vecs) = eigh(&m).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            2,
            vals.iter().map(|&l| Complex64::new(l, 0.0)),
        ));
        let rec = CMatrix(&vecs.0 * d * vecs.0.adjoint());
        assert!((&rec - &m).frobenius() < 1e-12);
    }

    #[test]
    fn json_roundtrip_and_malformed() {
        let m = CMatrix::new(1, 2, vec![c(1.0, -2.0), c(0.5, 0.0)]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"rows":1,"cols":2,"entries":[[1.0,-2.0],[0.5,0.0]]}"#);
        let back: CMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);

        let bad = r#"{"rows":2,"cols":2,"entries":[[1.0,0.0]]}"#;
        assert!(serde_json::from_str::<CMatrix>(bad).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(CMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
    }
}
