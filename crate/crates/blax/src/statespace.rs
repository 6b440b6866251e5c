//! Output pairs (C, A), their observability gramians (plain and shifted),
//! Stein equations and inequalities, stability and contractivity predicates,
//! and the stage metric constraints.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, min_eig_hermitian, operator_norm, psd_test, solve_linear, spectral_radius, CMatrix,
    CScalar, Tri,
};
use crate::series::{binom_f64, mu_f64, rnk_poly_coeffs};
use crate::tol;

/// An output pair: state operator A (d x d), output operator C (p x d),
/// and the weight index n of the ambient Bergman space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputPair {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: CMatrix,
    #[serde(rename = "C")]
    pub c: CMatrix,
}

impl OutputPair {
    pub fn new(n: usize, a: CMatrix, c: CMatrix) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("weight index n must be >= 1".into()));
        }
        if !a.is_square() {
            return Err(Error::dim("OutputPair", "A must be square"));
        }
        if c.cols() != a.rows() {
            return Err(Error::dim(
                "OutputPair",
                format!("C has {} columns but A is {}x{}", c.cols(), a.rows(), a.rows()),
            ));
        }
        if a.rows() < 1 || c.rows() < 1 {
            return Err(Error::dim(
                "OutputPair",
                "state and output dimensions must be >= 1",
            ));
        }
        Ok(OutputPair { n, a, c })
    }

    /// State dimension d.
    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    /// Output dimension p.
    pub fn output_dim(&self) -> usize {
        self.c.rows()
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        spectral_radius(&self.a)
    }

    pub fn validate(&self) -> Result<()> {
        OutputPair::new(self.n, self.a.clone(), self.c.clone()).map(|_| ())
    }
}

/// One stage of a colligation family: B_k (d x u_k), D_k (p x u_k).
/// The stage input dimension u_k is emergent (the defect rank).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageColligation {
    pub k: usize,
    #[serde(rename = "B")]
    pub b: CMatrix,
    #[serde(rename = "D")]
    pub d: CMatrix,
}

impl StageColligation {
    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }
}

/// Plain gramians G_{1..n} and shifted gramians keyed by shift index k.
/// The k = 0 entry coincides with G_n.
#[derive(Clone, Debug, Serialize)]
pub struct GramianSet {
    pub n: usize,
    /// G_{m,C,A} for m = 1..=n (index 0 holds G_1).
    pub plain: Vec<CMatrix>,
    /// Shifted gramians, key = shift index k.
    pub shifted: BTreeMap<usize, CMatrix>,
}

impl GramianSet {
    /// G_{m,C,A}, 1 <= m <= n.
    pub fn plain(&self, m: usize) -> &CMatrix {
        &self.plain[m - 1]
    }

    pub fn shifted(&self, k: usize) -> Result<&CMatrix> {
        self.shifted
            .get(&k)
            .ok_or_else(|| Error::Precondition(format!("shifted gramian k={k} not computed")))
    }

    /// G_{n,C,A}.
    pub fn gramian(&self) -> &CMatrix {
        self.plain(self.n)
    }
}

/// Gamma_{n,A}[H] = sum_{k=0}^{n} (-1)^k binom(n,k) A*^k H A^k.
pub fn gamma_map(a: &CMatrix, h: &CMatrix, n: usize) -> Result<CMatrix> {
    if !a.is_square() || !h.is_square() || a.rows() != h.rows() {
        return Err(Error::dim("gamma_map", "A and H must be square of equal size"));
    }
    let mut acc = CMatrix::zeros(h.rows(), h.cols());
    let mut apow = CMatrix::identity(a.rows());
    for k in 0..=n {
        let term = &(&apow.adjoint() * h) * &apow;
        let coef = binom_f64(n as i64, k as i64) * if k % 2 == 0 { 1.0 } else { -1.0 };
        acc = &acc + &term.scale(coef);
        if k < n {
            apow = &apow * a;
        }
    }
    Ok(acc.hermitize())
}

/// Solves the Stein equation P - A* P A = Q for Hermitian Q with
/// spectral_radius(A) < 1, by vectorizing X -> X - A* X A.
pub fn stein_solve(a: &CMatrix, q: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || !q.is_square() || a.rows() != q.rows() {
        return Err(Error::dim("stein_solve", "A and Q must be square of equal size"));
    }
    let rho = spectral_radius(a)?;
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    let d = a.rows();
    // column-stacking: vec(A* X A) = (A^T kron A*) vec(X)
    let op = &CMatrix::identity(d * d) - &a.transpose().kron(&a.adjoint());
    let mut qv = CMatrix::zeros(d * d, 1);
    for j in 0..d {
        for i in 0..d {
            qv.set(j * d + i, 0, q.get(i, j));
        }
    }
    let pv = solve_linear(&op, &qv)?;
    let mut p = CMatrix::zeros(d, d);
    for j in 0..d {
        for i in 0..d {
            p.set(i, j, pv.get(j * d + i, 0));
        }
    }
    let p = p.hermitize();
    let residual = (&(&p - &(&(&a.adjoint() * &p) * a)) - q).frobenius();
    if residual > tol::TIGHT * q.frobenius().max(1.0) {
        return Err(Error::InternalConsistency(format!(
            "Stein solve residual {residual:.3e}"
        )));
    }
    Ok(p)
}

/// Truncated series sum_{j=0}^{terms-1} binom(n+j+k-1, j+k) A*^j C*C A^j.
pub fn gramian_series(pair: &OutputPair, k: usize, terms: usize) -> CMatrix {
    let d = pair.state_dim();
    let ctc = &pair.c.adjoint() * &pair.c;
    let mut acc = CMatrix::zeros(d, d);
    let mut apow = CMatrix::identity(d);
    for j in 0..terms {
        let coef = binom_f64(pair.n as i64 + j as i64 + k as i64 - 1, j as i64 + k as i64);
        acc = &acc + &(&(&apow.adjoint() * &ctc) * &apow).scale(coef);
        apow = &apow * &pair.a;
    }
    acc.hermitize()
}

/// Computes G_{1..n} by the Stein recursion G_m - A* G_m A = G_{m-1}
/// (with G_0 = C*C) and the shifted gramians for k = 0..=k_max through the
/// closed-form combination of A*^kappa G_n A^kappa.
///
/// Every member is cross-checked against the truncated defining series
/// (200 terms, relative 1e-8) and consecutive members against the weighted
/// Stein identity; a failed cross-check is an internal-consistency error.
pub fn gramians(pair: &OutputPair, k_max: usize) -> Result<GramianSet> {
    let rho = pair.spectral_radius()?;
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    let n = pair.n;
    let mut plain = Vec::with_capacity(n);
    let mut prev = &pair.c.adjoint() * &pair.c; // G_0
    for _ in 1..=n {
        let g = stein_solve(&pair.a, &prev)?;
        plain.push(g.clone());
        prev = g;
    }
    let g_n = plain[n - 1].clone();

    let mut shifted = BTreeMap::new();
    shifted.insert(0, g_n.clone());
    let d = pair.state_dim();
    for k in 1..=k_max {
        let coeffs = rnk_poly_coeffs(n as u32, k as u32);
        let mut acc = CMatrix::zeros(d, d);
        let mut apow = CMatrix::identity(d);
        for c in coeffs.iter() {
            use num_traits::ToPrimitive;
            let term = &(&apow.adjoint() * &g_n) * &apow;
            acc = &acc + &term.scale(c.to_f64().expect("coefficient fits f64"));
            apow = &apow * &pair.a;
        }
        shifted.insert(k, acc.hermitize());
    }

    for m in 1..=n {
        let sub = OutputPair::new(m, pair.a.clone(), pair.c.clone())?;
        let series = gramian_series(&sub, 0, 200);
        let rel = (&series - &plain[m - 1]).frobenius() / plain[m - 1].frobenius().max(1e-300);
        if rel > tol::GRAMIAN_SERIES_REL {
            return Err(Error::InternalConsistency(format!(
                "plain gramian m={m} disagrees with series (rel {rel:.3e})"
            )));
        }
    }
    for (&k, g) in &shifted {
        let series = gramian_series(pair, k, 200);
        let rel = (&series - g).frobenius() / g.frobenius().max(1e-300);
        if rel > tol::GRAMIAN_SERIES_REL {
            return Err(Error::InternalConsistency(format!(
                "shifted gramian k={k} disagrees with series (rel {rel:.3e})"
            )));
        }
    }
    let ctc = &pair.c.adjoint() * &pair.c;
    for k in 0..k_max {
        let gk = &shifted[&k];
        let gk1 = &shifted[&(k + 1)];
        let lhs = &(&(&pair.a.adjoint() * gk1) * &pair.a)
            + &ctc.scale(binom_f64(n as i64 + k as i64 - 1, k as i64));
        let res = (&lhs - gk).frobenius() / gk.frobenius().max(1e-300);
        if res > tol::TIGHT {
            return Err(Error::InternalConsistency(format!(
                "weighted Stein identity fails at k={k} (rel {res:.3e})"
            )));
        }
    }

    Ok(GramianSet { n, plain, shifted })
}

/// Classification of an output pair against a candidate solution H of the
/// Stein system.
#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    /// H >= A* H A
    pub h_dominates_compression: Tri,
    /// A* H A >= 0
    pub compressed_psd: Tri,
    /// Gamma_{n,A}[H] >= C*C
    pub stein_inequality: Tri,
    /// Gamma_{n,A}[H] = C*C up to 1e-10 (residual recorded)
    pub stein_equality: bool,
    pub stein_equality_residual: f64,
    /// Gamma_{k,A}[H] >= 0 for k = 0..=n
    pub hypercontractive: Tri,
    /// spectral_radius(A) < 1 - margin
    pub strongly_stable: bool,
    pub spectral_radius: f64,
    /// min eigenvalue of G_{n,C,A} > 1e-10 (false when A is not stable)
    pub exactly_n_observable: bool,
    pub gramian_min_eig: Option<f64>,
}

impl Classification {
    /// Stein equality with H plus hypercontractivity; H = I gives the
    /// usual n-isometric notion.
    pub fn is_n_isometric(&self) -> bool {
        self.stein_equality && self.hypercontractive.is_pass()
    }

    pub fn is_n_contractive(&self) -> bool {
        self.stein_inequality.is_pass() && self.hypercontractive.is_pass()
    }
}

fn tri_ge(lhs: &CMatrix, rhs: &CMatrix) -> Result<Tri> {
    psd_test(&(lhs - rhs))
}

/// Evaluates the Stein-system predicates for (C, A) against H.
pub fn classify_pair(pair: &OutputPair, h: &CMatrix) -> Result<Classification> {
    if !h.is_square() || h.rows() != pair.state_dim() {
        return Err(Error::dim("classify_pair", "H must match the state dimension"));
    }
    let a = &pair.a;
    let ctc = &pair.c.adjoint() * &pair.c;
    let aha = &(&a.adjoint() * h) * a;
    let h_dominates_compression = tri_ge(h, &aha)?;
    let compressed_psd = psd_test(&aha)?;
    let gamma_n = gamma_map(a, h, pair.n)?;
    let stein_inequality = tri_ge(&gamma_n, &ctc)?;
    let stein_equality_residual = (&gamma_n - &ctc).frobenius();
    let stein_equality = stein_equality_residual <= tol::TIGHT * ctc.frobenius().max(1.0);
    let mut hyper = Tri::Pass;
    for k in 0..=pair.n {
        match psd_test(&gamma_map(a, h, k)?)? {
            Tri::Fail => {
                hyper = Tri::Fail;
                break;
            }
            Tri::Indeterminate => hyper = Tri::Indeterminate,
            Tri::Pass => {}
        }
    }
    let rho = pair.spectral_radius()?;
    let strongly_stable = rho < 1.0 - tol::STRONG_STABLE_MARGIN;
    let (exactly, min_eig) = if rho < 1.0 {
        let g = gramians(pair, 0)?;
        let me = min_eig_hermitian(g.gramian())?;
        (me > 1e-10, Some(me))
    } else {
        (false, None)
    };
    Ok(Classification {
        h_dominates_compression,
        compressed_psd,
        stein_inequality,
        stein_equality,
        stein_equality_residual,
        hypercontractive: hyper,
        strongly_stable,
        spectral_radius: rho,
        exactly_n_observable: exactly,
        gramian_min_eig: min_eig,
    })
}

/// Outcome of the Stein-uniqueness probe.
#[derive(Clone, Debug, Serialize)]
pub struct UniquenessReport {
    /// Strong limit of A*^N A^N.
    pub delta: CMatrix,
    pub delta_norm: f64,
    pub unique: bool,
    /// The gramian, summed directly from the series.
    pub gramian: CMatrix,
    pub gramian_residual: f64,
    /// Residual of gramian + delta as a second Stein-system solution.
    pub second_solution_residual: Option<f64>,
    pub power_iterations: usize,
}

/// Computes Delta = lim A*^N A^N for a contraction A. If Delta = 0 the
/// positive-semidefinite Stein-system solution is unique (the gramian);
/// otherwise gramian + Delta is exhibited and verified as a second solution.
pub fn stein_uniqueness_probe(pair: &OutputPair) -> Result<UniquenessReport> {
    let a = &pair.a;
    let norm = operator_norm(a)?;
    if norm > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!(
            "A must be a contraction (||A|| = {norm})"
        )));
    }
    let mut m = CMatrix::identity(a.rows());
    let mut iterations = 0;
    loop {
        let next = (&(&a.adjoint() * &m) * a).hermitize();
        let diff = (&next - &m).frobenius();
        m = next;
        iterations += 1;
        if diff < tol::POWER_LIMIT {
            break;
        }
        if iterations >= 100_000 {
            return Err(Error::NonConvergence(
                "power iteration for lim A*^N A^N did not settle in 1e5 steps".into(),
            ));
        }
    }
    let delta = m;
    let delta_norm = delta.frobenius();

    // Gramian via the defining series; converges exactly when the pair is
    // n-output stable, which covers contractions with C vanishing on the
    // non-stable part.
    let ctc = &pair.c.adjoint() * &pair.c;
    let d = pair.state_dim();
    let mut g = CMatrix::zeros(d, d);
    let mut apow = CMatrix::identity(d);
    let mut converged = false;
    for j in 0..100_000usize {
        let coef = binom_f64(pair.n as i64 + j as i64 - 1, j as i64);
        let term = (&(&apow.adjoint() * &ctc) * &apow).scale(coef);
        g = &g + &term;
        apow = &apow * a;
        if j > 8 && term.frobenius() < 1e-14 * g.frobenius().max(1e-30) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(
            "gramian series does not converge; pair is not n-output stable".into(),
        ));
    }
    let g = g.hermitize();

    let stein_residual = |h: &CMatrix| -> Result<f64> {
        let gamma = gamma_map(a, h, pair.n)?;
        Ok((&gamma - &ctc).frobenius())
    };
    let gramian_residual = stein_residual(&g)?;
    let unique = delta_norm <= 1e-10;
    let second = if unique {
        None
    } else {
        Some(stein_residual(&(&g + &delta))?)
    };
    Ok(UniquenessReport {
        delta,
        delta_norm,
        unique,
        gramian: g,
        gramian_residual,
        second_solution_residual: second,
        power_iterations: iterations,
    })
}

/// Squeeze verification report: min eigenvalue of Gamma_{k,A}[H] for the
/// intermediate k.
#[derive(Clone, Debug, Serialize)]
pub struct SqueezeReport {
    pub n: usize,
    pub min_eigs: Vec<(usize, f64)>,
    pub slack: f64,
    pub pass: bool,
}

/// Checks that H >= A*HA >= 0 and Gamma_{n,A}[H] >= 0 force
/// Gamma_{k,A}[H] >= 0 for 1 <= k <= n-1 up to slack 1e-9 ||H||.
/// Precondition violations are reported distinctly from conclusion
/// violations (the latter would falsify the lemma).
pub fn squeeze_check(a: &CMatrix, h: &CMatrix, n: usize) -> Result<SqueezeReport> {
    if n < 3 {
        return Err(Error::Domain("squeeze check needs n >= 3".into()));
    }
    if !a.is_square() || !h.is_square() || a.rows() != h.rows() {
        return Err(Error::dim("squeeze_check", "A, H must be square of equal size"));
    }
    let scale = h.frobenius().max(1.0);
    let aha = &(&a.adjoint() * h) * a;
    let pre1 = min_eig_hermitian(&(h - &aha))?;
    let pre2 = min_eig_hermitian(&aha)?;
    let pre3 = min_eig_hermitian(&gamma_map(a, h, n)?)?;
    let pre_tol = -1e-10 * scale;
    if pre1 < pre_tol || pre2 < pre_tol || pre3 < pre_tol {
        return Err(Error::Precondition(format!(
            "hypotheses H >= A*HA >= 0, Gamma_n[H] >= 0 violated \
             (min eigs {pre1:.3e}, {pre2:.3e}, {pre3:.3e})"
        )));
    }
    let slack = -tol::SQUEEZE_REL * scale;
    let mut min_eigs = Vec::new();
    let mut pass = true;
    for k in 1..n {
        let me = min_eig_hermitian(&gamma_map(a, h, k)?)?;
        if me < slack {
            pass = false;
        }
        min_eigs.push((k, me));
    }
    Ok(SqueezeReport {
        n,
        min_eigs,
        slack,
        pass,
    })
}

/// Residuals of the three stage metric constraints.
#[derive(Clone, Debug, Serialize)]
pub struct MetricReport {
    pub k: usize,
    /// || A* G_{n,k+1} B_k + binom(n+k-1,k) C* D_k ||_F
    pub cross_residual: f64,
    /// || I - B_k* G_{n,k+1} B_k - binom(n+k-1,k) D_k* D_k ||_F
    pub input_residual: f64,
    /// Frobenius defect of the weighted coisometry identity
    pub coisometry_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Evaluates the metric constraints tying a stage (B_k, D_k) to the shifted
/// gramians: the cross and input equalities of the weighted isometry, and
/// the weighted-coisometry identity.
pub fn metric_constraint_check(
    pair: &OutputPair,
    stage: &StageColligation,
    grams: &GramianSet,
) -> Result<MetricReport> {
    let k = stage.k;
    let gk = grams.shifted(k)?;
    let gk1 = grams.shifted(k + 1)?;
    let bweight = binom_f64(pair.n as i64 + k as i64 - 1, k as i64);

    let cross = &(&(&pair.a.adjoint() * gk1) * &stage.b)
        + &(&pair.c.adjoint() * &stage.d).scale(bweight);
    let cross_residual = cross.frobenius();

    let u = stage.input_dim();
    let input = &(&CMatrix::identity(u) - &(&(&stage.b.adjoint() * gk1) * &stage.b))
        - &(&stage.d.adjoint() * &stage.d).scale(bweight);
    let input_residual = input.frobenius();

    // weighted coisometry:
    // [A B; C D] diag(G_k^{-1}, I) [A B; C D]* = diag(G_{k+1}^{-1}, mu_k I)
    let gk_inv = linalg::inv_pd(gk, tol::COND_GRAMIAN)?;
    let gk1_inv = linalg::inv_pd(gk1, tol::COND_GRAMIAN)?;
    let u_mat = CMatrix::block2(&pair.a, &stage.b, &pair.c, &stage.d)?;
    let middle = CMatrix::block_diag(&gk_inv, &CMatrix::identity(u));
    let lhs = &(&u_mat * &middle) * &u_mat.adjoint();
    let mu_k = mu_f64(pair.n as u32, k as u64);
    let rhs = CMatrix::block_diag(&gk1_inv, &CMatrix::identity(pair.output_dim()).scale(mu_k));
    let coisometry_residual = (&lhs - &rhs).frobenius();

    let tolerance = tol::METRIC;
    let pass = cross_residual <= tolerance
        && input_residual <= tolerance
        && coisometry_residual <= tolerance;
    Ok(MetricReport {
        k,
        cross_residual,
        input_residual,
        coisometry_residual,
        tolerance,
        pass,
    })
}

/// R_{n,k}(zA) as a matrix: (I - zA)^{-n} for k = 0, and the lowering
/// combination sum_l binom(l+k-2, l-1) (I - zA)^{-(n-l+1)} for k >= 1.
pub fn r_nk_matrix(n: usize, k: usize, a: &CMatrix, z: CScalar) -> Result<CMatrix> {
    let d = a.rows();
    let m = &CMatrix::identity(d) - &a.scale_c(z);
    let m_inv = solve_linear(&m, &CMatrix::identity(d))?;
    if k == 0 {
        let mut acc = CMatrix::identity(d);
        for _ in 0..n {
            acc = &acc * &m_inv;
        }
        return Ok(acc);
    }
    // term with resolvent power j carries coefficient binom((n-j)+k-1, n-j)
    let mut pow = CMatrix::identity(d);
    let mut acc = CMatrix::zeros(d, d);
    for j in 1..=n {
        pow = &pow * &m_inv;
        let coef = binom_f64((n - j) as i64 + k as i64 - 1, (n - j) as i64);
        acc = &acc + &pow.scale(coef);
    }
    Ok(acc)
}

/// C R_{n,k}(zA): the symbol of the k-shifted observability operator.
pub fn obs_symbol(pair: &OutputPair, k: usize, z: CScalar) -> Result<CMatrix> {
    Ok(&pair.c * &r_nk_matrix(pair.n, k, &pair.a, z)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one_zero_pair(n: usize, alpha: Complex64) -> OutputPair {
        let a = CMatrix::scalar(alpha.conj());
        let cm = CMatrix::scalar(c((1.0 - alpha.norm_sqr()).powf(n as f64 / 2.0), 0.0));
        OutputPair::new(n, a, cm).unwrap()
    }

    #[test]
    fn gamma_map_basics() {
        let h = CMatrix::from_real(1, 1, &[1.0]).unwrap();
        let a = CMatrix::from_real(1, 1, &[0.5]).unwrap();
        let g0 = gamma_map(&a, &h, 0).unwrap();
        assert!((&g0 - &h).frobenius() < 1e-15);
        let g2 = gamma_map(&a, &h, 2).unwrap();
        assert!((g2.get(0, 0) - c(0.5625, 0.0)).norm() < 1e-14);
        let z = CMatrix::zeros(2, 2);
        let h2 = CMatrix::from_real(2, 2, &[2.0, 0.0, 0.0, 3.0]).unwrap();
        let g = gamma_map(&z, &h2, 3).unwrap();
        assert!((&g - &h2).frobenius() < 1e-15);
    }

    #[test]
    fn stein_scalar_and_trivial() {
        let a = CMatrix::from_real(1, 1, &[0.5]).unwrap();
        let q = CMatrix::from_real(1, 1, &[1.0]).unwrap();
        let p = stein_solve(&a, &q).unwrap();
        assert!((p.get(0, 0) - c(4.0 / 3.0, 0.0)).norm() < 1e-12);

        let z = CMatrix::zeros(2, 2);
        let q2 = CMatrix::from_real(2, 2, &[1.0, 0.5, 0.5, 2.0]).unwrap();
        let p2 = stein_solve(&z, &q2).unwrap();
        assert!((&p2 - &q2).frobenius() < 1e-14);

        let q0 = CMatrix::zeros(1, 1);
        let p0 = stein_solve(&a, &q0).unwrap();
        assert!(p0.frobenius() < 1e-14);
    }

    #[test]
    fn stein_rejects_unstable() {
        let a = CMatrix::from_real(1, 1, &[1.0]).unwrap();
        let q = CMatrix::from_real(1, 1, &[1.0]).unwrap();
        assert!(matches!(stein_solve(&a, &q), Err(Error::Unstable { .. })));
    }

    #[test]
    fn one_zero_gramians() {
        let pair = one_zero_pair(2, c(0.5, 0.0));
        let g = gramians(&pair, 2).unwrap();
        assert!((g.plain(1).get(0, 0) - c(0.75, 0.0)).norm() < 1e-12);
        assert!((g.plain(2).get(0, 0) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((g.shifted(1).unwrap().get(0, 0) - c(1.75, 0.0)).norm() < 1e-12);
        assert!((g.shifted(0).unwrap().get(0, 0) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn classify_one_zero_is_isometric() {
        let pair = one_zero_pair(2, c(0.5, 0.0));
        let cls = classify_pair(&pair, &CMatrix::identity(1)).unwrap();
        assert!(cls.stein_equality);
        assert!(cls.is_n_isometric());
        assert!(cls.strongly_stable);
        assert!(cls.exactly_n_observable);
    }

    #[test]
    fn classify_unit_pole_not_strongly_stable() {
        let a = CMatrix::from_real(1, 1, &[1.0]).unwrap();
        let cm = CMatrix::from_real(1, 1, &[0.0]).unwrap();
        let pair = OutputPair::new(1, a, cm).unwrap();
        let cls = classify_pair(&pair, &CMatrix::identity(1)).unwrap();
        assert!(!cls.strongly_stable);
        assert!(!cls.exactly_n_observable);
    }

    #[test]
    fn classify_zero_state_isometric_iff_ctc_identity() {
        let a = CMatrix::zeros(2, 2);
        let cm = CMatrix::identity(2);
        let pair = OutputPair::new(1, a, cm).unwrap();
        let cls = classify_pair(&pair, &CMatrix::identity(2)).unwrap();
        assert!(cls.is_n_isometric());
    }

    #[test]
    fn uniqueness_probe_dichotomy() {
        let pair = one_zero_pair(1, c(0.5, 0.0));
        let rep = stein_uniqueness_probe(&pair).unwrap();
        assert!(rep.unique);
        assert!(rep.delta_norm < 1e-12);

        // A = [[1]], C = [[0]]: both 0 and 1 solve the system
        let pair = OutputPair::new(
            1,
            CMatrix::from_real(1, 1, &[1.0]).unwrap(),
            CMatrix::from_real(1, 1, &[0.0]).unwrap(),
        )
        .unwrap();
        let rep = stein_uniqueness_probe(&pair).unwrap();
        assert!(!rep.unique);
        assert!((rep.delta.get(0, 0) - c(1.0, 0.0)).norm() < 1e-10);
        assert!(rep.gramian_residual < 1e-10);
        assert!(rep.second_solution_residual.unwrap() < 1e-10);

        // A = diag(1, 0.5), C = [0, 1]: Delta = diag(1, 0), nonunique
        let a = CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.5]).unwrap();
        let cm = CMatrix::from_real(1, 2, &[0.0, 1.0]).unwrap();
        let pair = OutputPair::new(1, a, cm).unwrap();
        let rep = stein_uniqueness_probe(&pair).unwrap();
        assert!(!rep.unique);
        assert!((rep.delta.get(0, 0) - c(1.0, 0.0)).norm() < 1e-10);
        assert!(rep.delta.get(1, 1).norm() < 1e-10);
        assert!(rep.second_solution_residual.unwrap() < 1e-10);
    }

    #[test]
    fn squeeze_scalar_and_zero() {
        let a = CMatrix::from_real(1, 1, &[0.5]).unwrap();
        let h = CMatrix::from_real(1, 1, &[1.0]).unwrap();
        let rep = squeeze_check(&a, &h, 3).unwrap();
        assert!(rep.pass);
        for (_, me) in &rep.min_eigs {
            assert!(*me > 0.0);
        }

        let z = CMatrix::zeros(2, 2);
        let h2 = CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 2.0]).unwrap();
        let rep = squeeze_check(&z, &h2, 4).unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn squeeze_rejects_bad_hypotheses() {
        let a = CMatrix::from_real(1, 1, &[2.0]).unwrap();
        let h = CMatrix::from_real(1, 1, &[1.0]).unwrap();
        assert!(matches!(squeeze_check(&a, &h, 3), Err(Error::Precondition(_))));
    }

    #[test]
    fn r_nk_matrix_matches_scalar_closed_form() {
        use crate::series::{r_eval, SeriesSpec};
        let a = CMatrix::from_real(1, 1, &[0.7]).unwrap();
        for n in 1..=4u32 {
            for k in 0..=5u32 {
                for zr in [0.0, 0.3, -0.6] {
                    let z = c(zr, 0.2);
                    let m = r_nk_matrix(n as usize, k as usize, &a, z).unwrap();
                    let expect = r_eval(SeriesSpec { n, k }, z * 0.7).unwrap();
                    assert!(
                        (m.get(0, 0) - expect).norm() < 1e-10 * expect.norm().max(1.0),
                        "n={n} k={k} z={z}: {} vs {expect}",
                        m.get(0, 0)
                    );
                }
            }
        }
    }

    #[test]
    fn gamma_of_gramian_lowers_the_index() {
        // Gamma_{k,A}[G_n] = G_{n-k}
        let pair = one_zero_pair(3, c(0.4, 0.3));
        let g = gramians(&pair, 0).unwrap();
        for k in 0..=3usize {
            let lhs = gamma_map(&pair.a, g.gramian(), k).unwrap();
            let rhs = if k == 3 {
                &pair.c.adjoint() * &pair.c
            } else {
                g.plain(3 - k).clone()
            };
            assert!((&lhs - &rhs).frobenius() < 1e-9, "k={k}");
        }
    }
}
