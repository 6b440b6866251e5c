//! The truncated weighted Bergman space: elements and norms, the shift and
//! its adjoint, model operators, observability elements, and every kernel
//! formula evaluated on grids in the bidisk.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CScalar, CVector};
use crate::series::{binom_f64, mu, mu_f64};
use crate::statespace::{gramians, obs_symbol, GramianSet, OutputPair};
use crate::tol;

/// Truncated element of the weighted Bergman space: Taylor coefficients
/// f_0..f_N with values in the p-dimensional output space.
#[derive(Clone, Debug)]
pub struct BergmanElement {
    pub n: usize,
    pub coeffs: Vec<CVector>,
}

impl BergmanElement {
    pub fn new(n: usize, coeffs: Vec<CVector>) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("weight index n must be >= 1".into()));
        }
        if coeffs.is_empty() {
            return Err(Error::Domain("element needs at least one coefficient".into()));
        }
        let p = coeffs[0].len();
        if coeffs.iter().any(|v| v.len() != p) {
            return Err(Error::dim("BergmanElement", "coefficient dimensions differ"));
        }
        Ok(BergmanElement { n, coeffs })
    }

    pub fn zero(n: usize, p: usize, order: usize) -> Self {
        BergmanElement {
            n,
            coeffs: vec![CVector::zeros(p); order + 1],
        }
    }

    pub fn value_dim(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn truncation_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Weighted norm squared: sum_j mu_{n,j} ||f_j||^2.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, v)| mu_f64(self.n as u32, j as u64) * v.norm_squared())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

/// Weighted inner product <f, g> = sum_j mu_{n,j} <f_j, g_j> over the common
/// truncation range.
pub fn inner_product(f: &BergmanElement, g: &BergmanElement) -> Result<Complex64> {
    if f.n != g.n || f.value_dim() != g.value_dim() {
        return Err(Error::dim("inner_product", "elements live in different spaces"));
    }
    let len = f.coeffs.len().min(g.coeffs.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..len {
        acc += g.coeffs[j].dotc(&f.coeffs[j]) * mu_f64(f.n as u32, j as u64);
    }
    Ok(acc)
}

/// Forward shift: multiplication by z. The index shifts up and the last
/// coefficient falls off the truncation.
pub fn shift_apply(f: &BergmanElement) -> BergmanElement {
    let p = f.value_dim();
    let mut coeffs = Vec::with_capacity(f.coeffs.len());
    coeffs.push(CVector::zeros(p));
    coeffs.extend(f.coeffs[..f.coeffs.len() - 1].iter().cloned());
    BergmanElement { n: f.n, coeffs }
}

/// Adjoint shift: f_{j+1} scaled by (j+1)/(n+j) lands at index j.
pub fn shift_adjoint_apply(f: &BergmanElement) -> BergmanElement {
    let p = f.value_dim();
    let n = f.n as f64;
    let mut coeffs = Vec::with_capacity(f.coeffs.len());
    for j in 0..f.coeffs.len() - 1 {
        let ratio = (j as f64 + 1.0) / (n + j as f64);
        coeffs.push(&f.coeffs[j + 1] * Complex64::new(ratio, 0.0));
    }
    coeffs.push(CVector::zeros(p));
    BergmanElement { n: f.n, coeffs }
}

/// Cauchy dual of the shift, S (S*S)^{-1}: f_j lands at index j+1 scaled by
/// (j+n)/(j+1).
pub fn cauchy_dual_apply(f: &BergmanElement) -> BergmanElement {
    let p = f.value_dim();
    let n = f.n as f64;
    let mut coeffs = Vec::with_capacity(f.coeffs.len());
    coeffs.push(CVector::zeros(p));
    for j in 0..f.coeffs.len() - 1 {
        let ratio = (j as f64 + n) / (j as f64 + 1.0);
        coeffs.push(&f.coeffs[j] * Complex64::new(ratio, 0.0));
    }
    BergmanElement { n: f.n, coeffs }
}

/// Taylor coefficients of the k-shifted observability element applied to x:
/// coefficient j is binom(n+j+k-1, j+k) C A^j x, through the given order.
pub fn observability_apply(
    pair: &OutputPair,
    k: usize,
    x: &CVector,
    order: usize,
) -> Result<BergmanElement> {
    let rho = pair.spectral_radius()?;
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    if x.len() != pair.state_dim() {
        return Err(Error::dim("observability_apply", "state vector dimension"));
    }
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut xj = x.clone();
    for j in 0..=order {
        let coef = binom_f64(pair.n as i64 + j as i64 + k as i64 - 1, j as i64 + k as i64);
        coeffs.push(pair.c.mul_vec(&xj) * Complex64::new(coef, 0.0));
        xj = pair.a.mul_vec(&xj);
    }
    BergmanElement::new(pair.n, coeffs)
}

/// Diagonal entry mu_{n,j} / mu_{n,j+k} of the model shifted gramian,
/// as an exact rational (always >= 1).
pub fn model_shifted_gramian_diag(n: u32, k: u64, j: u64) -> BigRational {
    mu(n, j) / mu(n, j + k)
}

/// Diagonal entry (n-1)/(n+j-1) of the lower model gramian, whose infimum
/// over j is zero (the exact-observability asymmetry).
pub fn model_lower_gramian_diag(n: u32, j: u64) -> BigRational {
    BigRational::new(
        BigInt::from(n as i64 - 1),
        BigInt::from(n as i64 + j as i64 - 1),
    )
}

/// The model pair on the truncated space, written in the orthonormal basis
/// e_j = z^j / sqrt(mu_{n,j}): A is the weighted backward shift with
/// superdiagonal sqrt(j/(n+j-1)) and C reads off the constant term.
pub fn model_pair(n: usize, order: usize) -> Result<OutputPair> {
    let d = order + 1;
    let mut a = CMatrix::zeros(d, d);
    for j in 1..d {
        let w = (j as f64 / (n as f64 + j as f64 - 1.0)).sqrt();
        a.set(j - 1, j, Complex64::new(w, 0.0));
    }
    let mut c = CMatrix::zeros(1, d);
    c.set(0, 0, Complex64::new(1.0, 0.0));
    OutputPair::new(n, a, c)
}

#[derive(Clone, Debug, Serialize)]
pub struct CauchyDualReport {
    pub n: usize,
    pub k_max: usize,
    pub residuals: Vec<(String, f64)>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Verifies on truncated coefficient space, for the supplied stable pairs:
/// S* S^k O_k = S^{k-1} O_{k-1}, the m-fold variant (which becomes
/// O A^{m-k} for m >= k), and the Cauchy-dual raising relation.
/// Comparisons use the first (order - k_max) coefficients.
pub fn cauchy_dual_checks(
    n: usize,
    k_max: usize,
    order: usize,
    pairs: &[OutputPair],
) -> Result<CauchyDualReport> {
    let mut worst_lower = 0.0f64;
    let mut worst_mfold = 0.0f64;
    let mut worst_dual = 0.0f64;
    let safe = order.saturating_sub(k_max + 1);
    for pair in pairs {
        if pair.n != n {
            return Err(Error::Precondition("pair weight index mismatch".into()));
        }
        let d = pair.state_dim();
        for col in 0..d {
            let mut x = CVector::zeros(d);
            x[col] = Complex64::new(1.0, 0.0);

            for k in 1..=k_max {
                let ok = observability_apply(pair, k, &x, order)?;
                let mut lhs = ok;
                for _ in 0..k {
                    lhs = shift_apply(&lhs);
                }
                lhs = shift_adjoint_apply(&lhs);
                let ok1 = observability_apply(pair, k - 1, &x, order)?;
                let mut rhs = ok1;
                for _ in 0..k - 1 {
                    rhs = shift_apply(&rhs);
                }
                worst_lower = worst_lower.max(diff_norm(&lhs, &rhs, safe));

                let dual = cauchy_dual_apply(&rhs);
                let mut skok = observability_apply(pair, k, &x, order)?;
                for _ in 0..k {
                    skok = shift_apply(&skok);
                }
                worst_dual = worst_dual.max(diff_norm(&dual, &skok, safe));
            }

            for k in 0..=k_max {
                for m in 0..=k_max {
                    let ok = observability_apply(pair, k, &x, order)?;
                    let mut lhs = ok;
                    for _ in 0..k {
                        lhs = shift_apply(&lhs);
                    }
                    for _ in 0..m {
                        lhs = shift_adjoint_apply(&lhs);
                    }
                    let rhs = if m < k {
                        let mut r = observability_apply(pair, k - m, &x, order)?;
                        for _ in 0..k - m {
                            r = shift_apply(&r);
                        }
                        r
                    } else {
                        let mut xa = x.clone();
                        for _ in 0..m - k {
                            xa = pair.a.mul_vec(&xa);
                        }
                        observability_apply(pair, 0, &xa, order)?
                    };
                    worst_mfold = worst_mfold.max(diff_norm(&lhs, &rhs, safe));
                }
            }
        }
    }
    let tolerance = tol::METRIC;
    let residuals = vec![
        ("shift_lowering".to_string(), worst_lower),
        ("m_fold_lowering".to_string(), worst_mfold),
        ("cauchy_dual_raising".to_string(), worst_dual),
    ];
    let pass = residuals.iter().all(|(_, r)| *r <= tolerance);
    Ok(CauchyDualReport {
        n,
        k_max,
        residuals,
        tolerance,
        pass,
    })
}

fn diff_norm(f: &BergmanElement, g: &BergmanElement, upto: usize) -> f64 {
    let len = f.coeffs.len().min(g.coeffs.len()).min(upto + 1);
    let mut acc = 0.0;
    for j in 0..len {
        acc += (&f.coeffs[j] - &g.coeffs[j]).norm_squared();
    }
    acc.sqrt()
}

/// Kernel formulas evaluated on grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    /// C (I-zA)^{-n} H (I-conj(zeta)A*)^{-n} C*
    ObsRange,
    /// ambient kernel minus C (I-zA)^{-n} G_n^{-1} (I-conj(zeta)A*)^{-n} C*
    Subspace,
    /// z^k conj(zeta)^k C R_{n,k}(zA) G_{n,k}^{-1} R_{n,k}(zeta A)* C*
    ShiftedObsRange { k: usize },
    /// reproducing kernel of S^k M in the ambient metric
    ShiftedSubspace { k: usize },
    /// reproducing kernel of S^k M minus S^{k+1} M
    ShiftedDifference { k: usize },
    /// reproducing kernel of the wandering subspace M minus S M
    Wandering,
}

/// Kernel values sampled on a finite grid in the bidisk.
#[derive(Clone, Debug)]
pub struct KernelGrid {
    pub points: Vec<(CScalar, CScalar)>,
    pub values: Vec<CMatrix>,
}

impl KernelGrid {
    /// Max Hermitian-symmetry defect over paired sample points:
    /// K(z, zeta) vs K(zeta, z)*.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, &(z, w)) in self.points.iter().enumerate() {
            for (j, &(z2, w2)) in self.points.iter().enumerate() {
                if z2 == w && w2 == z {
                    let d = (&self.values[i] - &self.values[j].adjoint()).max_abs();
                    worst = worst.max(d);
                }
            }
        }
        worst
    }

    /// CSV export: re(z), im(z), re(zeta), im(zeta), then the p*p entries
    /// row-major as re/im pairs.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for (i, &(z, zeta)) in self.points.iter().enumerate() {
            let mut row = vec![
                z.re.to_string(),
                z.im.to_string(),
                zeta.re.to_string(),
                zeta.im.to_string(),
            ];
            let v = &self.values[i];
            for r in 0..v.rows() {
                for c in 0..v.cols() {
                    let e = v.get(r, c);
                    row.push(e.re.to_string());
                    row.push(e.im.to_string());
                }
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Default verification grid: tensor product of moduli {0, 0.3, 0.5, 0.7, 0.9}
/// and four phases, used for both z and zeta.
pub fn default_grid() -> Vec<(CScalar, CScalar)> {
    let pts = default_points();
    let mut grid = Vec::with_capacity(pts.len() * pts.len());
    for &z in &pts {
        for &w in &pts {
            grid.push((z, w));
        }
    }
    grid
}

pub fn default_points() -> Vec<CScalar> {
    let radii = [0.3, 0.5, 0.7, 0.9];
    let phases = [
        0.0,
        std::f64::consts::FRAC_PI_2,
        std::f64::consts::PI,
        -std::f64::consts::FRAC_PI_2,
    ];
    let mut pts = vec![Complex64::new(0.0, 0.0)];
    for &r in &radii {
        for &p in &phases {
            pts.push(Complex64::from_polar(r, p));
        }
    }
    pts
}

/// The ambient reproducing kernel I_p / (1 - z conj(zeta))^n.
pub fn ambient_kernel(n: usize, z: CScalar, zeta: CScalar, p: usize) -> CMatrix {
    let v = (Complex64::new(1.0, 0.0) - z * zeta.conj()).powi(-(n as i32));
    CMatrix::identity(p).scale_c(v)
}

/// Memoizes a matrix-valued function of the point; grids repeat a small set
/// of distinct z values many times.
pub struct PointCache {
    entries: Vec<(CScalar, CMatrix)>,
}

impl PointCache {
    pub fn new() -> Self {
        PointCache { entries: Vec::new() }
    }

    pub fn get_or_insert(
        &mut self,
        z: CScalar,
        f: impl FnOnce(CScalar) -> Result<CMatrix>,
    ) -> Result<CMatrix> {
        if let Some((_, m)) = self.entries.iter().find(|(p, _)| *p == z) {
            return Ok(m.clone());
        }
        let m = f(z)?;
        self.entries.push((z, m.clone()));
        Ok(m)
    }
}

impl Default for PointCache {
    fn default() -> Self {
        Self::new()
    }
}

/// Evaluates the requested closed-form kernel at each grid point.
///
/// Gramian inverses are guarded by a strict positive-definiteness and
/// condition check; pairs failing exact observability are rejected.
pub fn kernel_eval(
    kind: KernelKind,
    pair: &OutputPair,
    grams: &GramianSet,
    h: Option<&CMatrix>,
    grid: &[(CScalar, CScalar)],
) -> Result<KernelGrid> {
    let n = pair.n;
    let p = pair.output_dim();
    let mut values = Vec::with_capacity(grid.len());
    let inv = |k: usize| -> Result<CMatrix> { linalg::inv_pd(grams.shifted(k)?, tol::COND_GRAMIAN) };
    let mut cache0 = PointCache::new();
    let mut cache1 = PointCache::new();
    let mut sym0 = |z: CScalar| cache0.get_or_insert(z, |z| obs_symbol(pair, 0, z));
    match kind {
        KernelKind::ObsRange => {
            let h = h.ok_or_else(|| Error::Precondition("H required for the range kernel".into()))?;
            for &(z, w) in grid {
                let left = sym0(z)?;
                let right = sym0(w)?;
                values.push(&(&left * h) * &right.adjoint());
            }
        }
        KernelKind::Subspace => {
            let g_inv = inv(0)?;
            for &(z, w) in grid {
                let amb = ambient_kernel(n, z, w, p);
                let left = sym0(z)?;
                let right = sym0(w)?;
                values.push(&amb - &(&(&left * &g_inv) * &right.adjoint()));
            }
        }
        KernelKind::ShiftedObsRange { k } => {
            let g_inv = inv(k)?;
            for &(z, w) in grid {
                let left = cache1.get_or_insert(z, |z| obs_symbol(pair, k, z))?;
                let right = cache1.get_or_insert(w, |w| obs_symbol(pair, k, w))?;
                let zf = z.powu(k as u32) * w.conj().powu(k as u32);
                values.push((&(&left * &g_inv) * &right.adjoint()).scale_c(zf));
            }
        }
        KernelKind::ShiftedSubspace { k } => {
            let g_inv = inv(k)?;
            for &(z, w) in grid {
                let mut head = CMatrix::zeros(p, p);
                for l in 1..=n {
                    let coef = binom_f64(l as i64 + k as i64 - 2, l as i64 - 1);
                    let pw = Complex64::new(1.0, 0.0) - z * w.conj();
                    let kernel_pow = pw.powi(-((n - l + 1) as i32));
                    head = &head + &CMatrix::identity(p).scale_c(kernel_pow * coef);
                }
                let left = cache1.get_or_insert(z, |z| obs_symbol(pair, k, z))?;
                let right = cache1.get_or_insert(w, |w| obs_symbol(pair, k, w))?;
                let zf = z.powu(k as u32) * w.conj().powu(k as u32);
                values.push((&head - &(&(&left * &g_inv) * &right.adjoint())).scale_c(zf));
            }
        }
        KernelKind::ShiftedDifference { k } => {
            let gk_inv = inv(k)?;
            let gk1_inv = inv(k + 1)?;
            let mut cache_k = PointCache::new();
            let mut cache_k1 = PointCache::new();
            for &(z, w) in grid {
                let head = CMatrix::identity(p).scale(binom_f64(n as i64 + k as i64 - 1, k as i64));
                let lk = cache_k.get_or_insert(z, |z| obs_symbol(pair, k, z))?;
                let rk = cache_k.get_or_insert(w, |w| obs_symbol(pair, k, w))?;
                let lk1 = cache_k1.get_or_insert(z, |z| obs_symbol(pair, k + 1, z))?;
                let rk1 = cache_k1.get_or_insert(w, |w| obs_symbol(pair, k + 1, w))?;
                let mid = &head - &(&(&lk * &gk_inv) * &rk.adjoint());
                let tail = (&(&lk1 * &gk1_inv) * &rk1.adjoint()).scale_c(z * w.conj());
                let zf = z.powu(k as u32) * w.conj().powu(k as u32);
                values.push((&mid + &tail).scale_c(zf));
            }
        }
        KernelKind::Wandering => {
            let g_inv = inv(0)?;
            let g1_inv = inv(1)?;
            for &(z, w) in grid {
                let amb_left = sym0(z)?;
                let amb_right = sym0(w)?;
                let head = &CMatrix::identity(p) - &(&(&amb_left * &g_inv) * &amb_right.adjoint());
                let l1 = cache1.get_or_insert(z, |z| obs_symbol(pair, 1, z))?;
                let r1 = cache1.get_or_insert(w, |w| obs_symbol(pair, 1, w))?;
                let tail = (&(&l1 * &g1_inv) * &r1.adjoint()).scale_c(z * w.conj());
                values.push(&head + &tail);
            }
        }
    }
    let kg = KernelGrid {
        points: grid.to_vec(),
        values,
    };
    let defect = kg.hermitian_defect();
    if defect > tol::TIGHT {
        return Err(Error::InternalConsistency(format!(
            "kernel failed Hermitian symmetry (defect {defect:.3e})"
        )));
    }
    Ok(kg)
}

#[derive(Clone, Debug, Serialize)]
pub struct SubspaceGapReport {
    pub k: usize,
    /// Largest principal angle (radians) between the two sides.
    pub gap: f64,
    pub dim: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Verifies on the truncated space that the orthogonal complement of S^k M
/// decomposes as polynomials of degree < k plus S^k Ran O_{n,k}: both sides
/// are built as coefficient-space subspaces and compared by the largest
/// principal angle.
pub fn smperp_decomposition_check(
    pair: &OutputPair,
    k: usize,
    order: usize,
) -> Result<SubspaceGapReport> {
    let grams = gramians(pair, 0)?;
    let me = linalg::min_eig_hermitian(grams.gramian())?;
    if me <= 1e-10 {
        return Err(Error::NotExactlyObservable(format!(
            "gramian min eigenvalue {me:.3e}"
        )));
    }
    if order <= k + 1 {
        return Err(Error::Domain("truncation order too small for this k".into()));
    }
    let p = pair.output_dim();
    let d = pair.state_dim();
    let dim_total = (order + 1) * p;

    // Orthonormal coordinates f -> (sqrt(mu_{n,j}) f_j)_j.
    let weight = |j: usize| mu_f64(pair.n as u32, j as u64).sqrt();

    // Side one: polynomials of degree < k, plus S^k Ran O_{n,k}.
    let mut side1 = CMatrix::zeros(dim_total, k * p + d);
    for j in 0..k {
        for q in 0..p {
            side1.set(j * p + q, j * p + q, Complex64::new(weight(j), 0.0));
        }
    }
    for col in 0..d {
        let mut x = CVector::zeros(d);
        x[col] = Complex64::new(1.0, 0.0);
        let el = observability_apply(pair, k, &x, order - k)?;
        for (j, v) in el.coeffs.iter().enumerate() {
            let row0 = (j + k) * p;
            for q in 0..p {
                side1.set(row0 + q, k * p + col, v[q] * weight(j + k));
            }
        }
    }

    // Side two: orthogonal complement of S^k (M truncated), with M the
    // complement of the truncated observability range in poly_{order-k}.
    let sub_dim = (order - k + 1) * p;
    let mut obs_range = CMatrix::zeros(sub_dim, d);
    for col in 0..d {
        let mut x = CVector::zeros(d);
        x[col] = Complex64::new(1.0, 0.0);
        let el = observability_apply(pair, 0, &x, order - k)?;
        for (j, v) in el.coeffs.iter().enumerate() {
            for q in 0..p {
                obs_range.set(j * p + q, col, v[q] * weight(j));
            }
        }
    }
    let m_basis = orth_complement(&obs_range)?;
    // S^k in orthonormal coordinates scales slot j by sqrt(mu_{n,j+k}/mu_{n,j})
    // while moving it to slot j+k.
    let mut skm = CMatrix::zeros(dim_total, m_basis.cols());
    for col in 0..m_basis.cols() {
        for j in 0..=order - k {
            let scale =
                (mu_f64(pair.n as u32, (j + k) as u64) / mu_f64(pair.n as u32, j as u64)).sqrt();
            for q in 0..p {
                skm.set(
                    (j + k) * p + q,
                    col,
                    m_basis.get(j * p + q, col) * Complex64::new(scale, 0.0),
                );
            }
        }
    }
    let side2 = orth_complement(&orthonormalize(&skm)?)?;

    let q1 = orthonormalize(&side1)?;
    let gap = principal_gap(&q1, &side2)?;
    Ok(SubspaceGapReport {
        k,
        gap,
        dim: q1.cols(),
        tolerance: tol::SUBSPACE_GAP,
        pass: gap <= tol::SUBSPACE_GAP,
    })
}

/// Orthonormal basis of the column span (modified Gram-Schmidt, two passes).
pub fn orthonormalize(m: &CMatrix) -> Result<CMatrix> {
    let mut cols: Vec<CVector> = Vec::new();
    for j in 0..m.cols() {
        let mut v = m.column(j);
        for _ in 0..2 {
            for u in &cols {
                let proj = u.dotc(&v);
                v -= u * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-12 * m.frobenius().max(1.0) {
            cols.push(v / Complex64::new(norm, 0.0));
        }
    }
    let mut out = CMatrix::zeros(m.rows(), cols.len());
    for (j, v) in cols.iter().enumerate() {
        for i in 0..m.rows() {
            out.set(i, j, v[i]);
        }
    }
    Ok(out)
}

/// Orthonormal basis of the orthogonal complement of the column span.
pub fn orth_complement(m: &CMatrix) -> Result<CMatrix> {
    let q = orthonormalize(m)?;
    let dim = m.rows();
    let base: Vec<CVector> = (0..q.cols()).map(|j| q.column(j)).collect();
    let mut comp: Vec<CVector> = Vec::new();
    for i in 0..dim {
        let mut v = CVector::zeros(dim);
        v[i] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for u in base.iter().chain(comp.iter()) {
                let proj = u.dotc(&v);
                v -= u * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            comp.push(v / Complex64::new(norm, 0.0));
        }
    }
    let mut out = CMatrix::zeros(dim, comp.len());
    for (j, v) in comp.iter().enumerate() {
        for i in 0..dim {
            out.set(i, j, v[i]);
        }
    }
    Ok(out)
}

/// Largest principal angle between the spans of two orthonormal bases,
/// computed through its sine (stable near zero): the largest singular value
/// of (I - Q2 Q2*) Q1.
pub fn principal_gap(q1: &CMatrix, q2: &CMatrix) -> Result<f64> {
    if q1.cols() != q2.cols() {
        return Err(Error::dim(
            "principal_gap",
            format!("subspace dimensions differ: {} vs {}", q1.cols(), q2.cols()),
        ));
    }
    if q1.cols() == 0 {
        return Ok(0.0);
    }
    let residual = q1 - &(q2 * &(&q2.adjoint() * q1));
    let sin = linalg::operator_norm(&residual)?;
    Ok(sin.min(1.0).asin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, ToPrimitive};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one_zero_pair(n: usize, alpha: Complex64) -> OutputPair {
        let a = CMatrix::scalar(alpha.conj());
        let cm = CMatrix::scalar(c((1.0 - alpha.norm_sqr()).powf(n as f64 / 2.0), 0.0));
        OutputPair::new(n, a, cm).unwrap()
    }

    fn random_element(n: usize, p: usize, order: usize, seed: u64) -> BergmanElement {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let coeffs = (0..=order)
            .map(|_| {
                CVector::from_iterator(
                    p,
                    (0..p).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
                )
            })
            .collect();
        BergmanElement::new(n, coeffs).unwrap()
    }

    #[test]
    fn adjoint_shift_scales_first_coefficient() {
        // n=2: (S* f)_0 = f_1 / 2
        let f = random_element(2, 1, 4, 7);
        let sf = shift_adjoint_apply(&f);
        assert!((sf.coeffs[0][0] - f.coeffs[1][0] * 0.5).norm() < 1e-15);

        // n=1: plain backward shift
        let f1 = random_element(1, 2, 4, 8);
        let sf1 = shift_adjoint_apply(&f1);
        for j in 0..4 {
            assert!((&sf1.coeffs[j] - &f1.coeffs[j + 1]).norm() < 1e-15);
        }
    }

    #[test]
    fn shift_and_adjoint_are_adjoint_in_weighted_product() {
        let f = random_element(3, 2, 10, 1);
        let g = random_element(3, 2, 10, 2);
        let lhs = inner_product(&shift_apply(&f), &g).unwrap();
        let rhs = inner_product(&f, &shift_adjoint_apply(&g)).unwrap();
        assert!((lhs - rhs).norm() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn observability_norm_is_gramian_quadratic_form() {
        let pair = one_zero_pair(2, c(0.5, 0.0));
        let x = CVector::from_element(1, c(1.0, 0.0));
        let el = observability_apply(&pair, 0, &x, 400).unwrap();
        // coefficient j is binom(j+1, j) * 0.75 * 0.5^j
        assert!((el.coeffs[0][0] - c(0.75, 0.0)).norm() < 1e-15);
        assert!((el.coeffs[1][0] - c(2.0 * 0.75 * 0.5, 0.0)).norm() < 1e-15);
        let g = gramians(&pair, 0).unwrap();
        assert!((el.norm_sq() - g.gramian().get(0, 0).re).abs() < 1e-10);
    }

    #[test]
    fn shifted_observability_norm_identity() {
        // || S^k O_{n,k} x ||^2 = <G_{n,k} x, x>
        let pair = one_zero_pair(3, c(0.6, 0.2));
        let grams = gramians(&pair, 3).unwrap();
        let x = CVector::from_element(1, c(1.0, 0.0));
        for k in 0..=3usize {
            let mut el = observability_apply(&pair, k, &x, 500).unwrap();
            for _ in 0..k {
                el = shift_apply(&el);
            }
            let expect = grams.shifted(k).unwrap().get(0, 0).re;
            assert!(
                (el.norm_sq() - expect).abs() < 1e-9 * expect.max(1.0),
                "k={k}: {} vs {expect}",
                el.norm_sq()
            );
        }
    }

    #[test]
    fn zero_state_gives_zero_element() {
        let pair = one_zero_pair(2, c(0.5, 0.0));
        let x = CVector::zeros(1);
        let el = observability_apply(&pair, 0, &x, 10).unwrap();
        assert!(el.norm() < 1e-300);
    }

    #[test]
    fn model_observability_is_identity_on_truncations() {
        // In orthonormal coordinates, coefficient j of O_{n,E,S*} applied to
        // the j-th basis vector reproduces that basis vector's function.
        for n in [1usize, 2, 4] {
            let order = 30;
            let pair = model_pair(n, order).unwrap();
            let d = order + 1;
            for col in [0usize, 3, 17] {
                let mut x = CVector::zeros(d);
                x[col] = c(1.0, 0.0);
                let el = observability_apply(&pair, 0, &x, order).unwrap();
                for (j, v) in el.coeffs.iter().enumerate() {
                    let expect = if j == col {
                        1.0 / mu_f64(n as u32, j as u64).sqrt()
                    } else {
                        0.0
                    };
                    assert!((v[0] - c(expect, 0.0)).norm() < 1e-10, "n={n} col={col} j={j}");
                }
            }
        }
    }

    #[test]
    fn model_gramian_diag_values() {
        assert_eq!(
            model_shifted_gramian_diag(2, 1, 0),
            BigRational::from(BigInt::from(2))
        );
        assert!(model_shifted_gramian_diag(1, 5, 3).is_one());
        assert!(model_shifted_gramian_diag(2, 0, 5).is_one());
        for n in 1..=5u32 {
            for k in 0..=6u64 {
                for j in 0..=20u64 {
                    assert!(model_shifted_gramian_diag(n, k, j) >= BigRational::one());
                }
            }
        }
    }

    #[test]
    fn isometry_ladder() {
        // sum_j (-1)^j binom(n,j) ||S*^j f||^2 = ||f_0||^2
        for n in 1..=4usize {
            let f = random_element(n, 2, 60, 100 + n as u64);
            let mut acc = 0.0;
            let mut sf = f.clone();
            for j in 0..=n {
                let coef = binom_f64(n as i64, j as i64) * if j % 2 == 0 { 1.0 } else { -1.0 };
                acc += coef * sf.norm_sq();
                sf = shift_adjoint_apply(&sf);
            }
            let expect = f.coeffs[0].norm_squared();
            assert!((acc - expect).abs() < 1e-10 * expect.max(1.0), "n={n}");
        }
    }

    #[test]
    fn cauchy_dual_suite_passes() {
        let pairs = vec![one_zero_pair(2, c(0.5, 0.0)), one_zero_pair(2, c(0.3, 0.4))];
        let rep = cauchy_dual_checks(2, 3, 120, &pairs).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn kernel_grid_values_one_zero() {
        let pair = one_zero_pair(2, c(0.5, 0.0));
        let grams = gramians(&pair, 2).unwrap();
        let grid = vec![(c(0.0, 0.0), c(0.0, 0.0))];
        let km = kernel_eval(KernelKind::Subspace, &pair, &grams, None, &grid).unwrap();
        assert!((km.values[0].get(0, 0) - c(0.4375, 0.0)).norm() < 1e-12);

        let zero_pair =
            OutputPair::new(2, CMatrix::scalar(c(0.5, 0.0)), CMatrix::scalar(c(0.0, 0.0))).unwrap();
        let h = CMatrix::identity(1);
        let kz = kernel_eval(KernelKind::ObsRange, &zero_pair, &grams, Some(&h), &default_grid())
            .unwrap();
        assert!(kz.values.iter().all(|v| v.max_abs() < 1e-15));
    }

    #[test]
    fn wandering_kernel_equals_difference_kernel_at_k0() {
        let pair = one_zero_pair(2, c(0.5, 0.0));
        let grams = gramians(&pair, 2).unwrap();
        let grid = default_grid();
        let ke = kernel_eval(KernelKind::Wandering, &pair, &grams, None, &grid).unwrap();
        let kd =
            kernel_eval(KernelKind::ShiftedDifference { k: 0 }, &pair, &grams, None, &grid).unwrap();
        for i in 0..grid.len() {
            assert!((&ke.values[i] - &kd.values[i]).max_abs() < 1e-10, "point {i}");
        }
    }

    #[test]
    fn smperp_decomposition() {
        let pair = one_zero_pair(2, c(0.5, 0.0));
        for k in [0usize, 1, 3] {
            let rep = smperp_decomposition_check(&pair, k, 80).unwrap();
            assert!(rep.pass, "k={k}: {rep:?}");
        }
        let zero_pair =
            OutputPair::new(2, CMatrix::scalar(c(0.5, 0.0)), CMatrix::scalar(c(0.0, 0.0))).unwrap();
        assert!(matches!(
            smperp_decomposition_check(&zero_pair, 1, 40),
            Err(Error::NotExactlyObservable(_))
        ));
    }

    #[test]
    fn model_lower_gramian_entry_decays() {
        // entry at j = N sits below 2(n-1)/N
        for n in 2..=5u32 {
            let big_n = 120u64;
            let v = model_lower_gramian_diag(n, big_n).to_f64().unwrap();
            assert!(v < 2.0 * (n as f64 - 1.0) / big_n as f64);
        }
    }

    #[test]
    fn csv_export_shape() {
        let pair = one_zero_pair(2, c(0.5, 0.0));
        let grams = gramians(&pair, 1).unwrap();
        let grid = vec![(c(0.3, 0.0), c(0.0, 0.5))];
        let kg = kernel_eval(KernelKind::Subspace, &pair, &grams, None, &grid).unwrap();
        let mut buf = Vec::new();
        kg.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let fields: Vec<&str> = text.trim().split(',').collect();
        assert_eq!(fields.len(), 4 + 2); // coordinates + one complex entry
    }
}
