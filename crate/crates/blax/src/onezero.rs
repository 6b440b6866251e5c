//! Independent closed forms for the subspace of functions with a single
//! prescribed zero at alpha, used as ground truth against the generic
//! pipelines. Nothing here shares a code path with the gramian or family
//! construction; the only shared ingredient is exact binomial arithmetic.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::bergman::{default_grid, kernel_eval, KernelKind};
use crate::beurlinglax::{approach1_build, approach4_build, build_inner_family, theta_eval};
use crate::error::{Error, Result};
use crate::linalg::{serialize_cscalar, CMatrix, CScalar};
use crate::series::{binom_big, binom_f64};
use crate::statespace::{gramians, OutputPair};
use crate::tol;

/// The zero location and the weight index.
#[derive(Clone, Copy, Debug)]
pub struct OneZeroSpec {
    pub alpha: CScalar,
    pub n: usize,
}

impl OneZeroSpec {
    pub fn new(alpha: CScalar, n: usize) -> Result<Self> {
        let r = alpha.norm();
        if !(1e-6..=1.0 - 1e-6).contains(&r) {
            return Err(Error::Domain(format!(
                "|alpha| = {r} must lie in (1e-6, 1 - 1e-6); alpha = 0 reduces to the classical case"
            )));
        }
        if n < 1 {
            return Err(Error::Domain("weight index n must be >= 1".into()));
        }
        Ok(OneZeroSpec { alpha, n })
    }

    /// The realizing pair: A = conj(alpha), C = (1 - |alpha|^2)^{n/2},
    /// normalized so the top gramian is one.
    pub fn pair(&self) -> OutputPair {
        let a = CMatrix::scalar(self.alpha.conj());
        let c = CMatrix::scalar(Complex64::new(
            (1.0 - self.alpha.norm_sqr()).powf(self.n as f64 / 2.0),
            0.0,
        ));
        OutputPair::new(self.n, a, c).expect("spec invariants imply a valid pair")
    }
}

/// Scalar R_{n,k}(z), computed locally from the shifted-difference
/// definition (with a series fallback near the origin) so the oracle does
/// not lean on the series module's closed forms.
fn r_nk(n: usize, k: usize, z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    if k == 0 {
        return (one - z).powi(-(n as i32));
    }
    if z.norm() < 0.1 {
        // series with ~1e-80 tail at |z| < 0.1
        let mut acc = Complex64::new(0.0, 0.0);
        let mut zp = one;
        for j in 0..80i64 {
            acc += zp * binom_f64(n as i64 + j + k as i64 - 1, j + k as i64);
            zp *= z;
        }
        return acc;
    }
    let mut head = Complex64::new(0.0, 0.0);
    let mut zp = one;
    for j in 0..k as i64 {
        head += zp * binom_f64(n as i64 + j - 1, j);
        zp *= z;
    }
    ((one - z).powi(-(n as i32)) - head) / z.powu(k as u32)
}

/// All closed-form quantities for one spec: gramians, shifted gramians by
/// two independent routes, stage operators, and multiplier values.
#[derive(Clone, Debug, Serialize)]
pub struct OracleRecord {
    #[serde(serialize_with = "serialize_cscalar")]
    pub alpha: CScalar,
    pub n: usize,
    #[serde(serialize_with = "serialize_cscalar")]
    pub a: CScalar,
    pub c: f64,
    /// G_j for j = 0..=n.
    pub plain_gramians: Vec<f64>,
    /// Shifted gramians for k = 0..=K+1, via the resolvent form.
    pub shifted_gramians: Vec<f64>,
    /// The same values via the head-sum form (cross-check, agrees to 1e-12).
    pub shifted_gramians_headsum: Vec<f64>,
    /// Stage entries B_k, D_k for k = 0..=K.
    pub b: Vec<[f64; 2]>,
    pub d: Vec<f64>,
}

impl OracleRecord {
    pub fn b_scalar(&self, k: usize) -> Complex64 {
        Complex64::new(self.b[k][0], self.b[k][1])
    }
}

/// Blaschke factor (z - alpha) / (1 - z conj(alpha)).
pub fn blaschke(alpha: CScalar, z: CScalar) -> CScalar {
    (z - alpha) / (Complex64::new(1.0, 0.0) - z * alpha.conj())
}

/// Computes the full oracle record for stages 0..=k_max.
///
/// The two shifted-gramian routes are required to agree to 1e-12; a
/// discrepancy is flagged as an internal-consistency error rather than
/// silently resolved.
pub fn oracle_all(spec: &OneZeroSpec, k_max: usize) -> Result<OracleRecord> {
    let n = spec.n;
    let alpha = spec.alpha;
    let aa = alpha.norm_sqr();
    let one_m = 1.0 - aa;

    let plain_gramians: Vec<f64> = (0..=n).map(|j| one_m.powi((n - j) as i32)).collect();

    // Both shifted-gramian routes are evaluated in exact rational arithmetic
    // over |alpha|^2 (the head-sum form divides by |alpha|^{2k} and would
    // lose all precision in f64 for small |alpha| and large k).
    let aa_rat = BigRational::from_float(aa)
        .ok_or_else(|| Error::Domain("alpha produced a non-finite modulus".into()))?;
    let one_m_rat = BigRational::one() - &aa_rat;
    let one_m_pow_n: BigRational = num_traits::pow::pow(one_m_rat.clone(), n);
    // route one: (1-|alpha|^2)^n R_{n,k}(|alpha|^2) via the lowering formula
    let mut shifted_gramians = Vec::with_capacity(k_max + 2);
    // route two: |alpha|^{-2k} (1 - (1-|alpha|^2)^n sum_{j<k} binom |alpha|^{2j})
    let mut shifted_gramians_headsum = Vec::with_capacity(k_max + 2);
    for k in 0..=k_max + 1 {
        let via_r = if k == 0 {
            BigRational::one()
        } else {
            // R_{n,k} = sum_l binom(l+k-2, l-1) (1-aa)^{-(n-l+1)}
            let mut acc = BigRational::from(BigInt::from(0));
            for l in 1..=n {
                let coef = binom_big(l as i64 + k as i64 - 2, l as i64 - 1);
                let inv_pow: BigRational =
                    num_traits::pow::pow(one_m_rat.clone(), n - l + 1).recip();
                acc += BigRational::from(coef) * inv_pow;
            }
            &one_m_pow_n * acc
        };
        let via_head = if k == 0 {
            BigRational::one()
        } else {
            let mut head = BigRational::from(BigInt::from(0));
            let mut aa_pow = BigRational::one();
            for j in 0..k as i64 {
                head += BigRational::from(binom_big(n as i64 + j - 1, j)) * &aa_pow;
                aa_pow *= &aa_rat;
            }
            (BigRational::one() - &one_m_pow_n * head)
                / num_traits::pow::pow(aa_rat.clone(), k)
        };
        let via_r_f = via_r.to_f64().expect("gramian fits in f64");
        let via_head_f = via_head.to_f64().expect("gramian fits in f64");
        if (via_r_f - via_head_f).abs() > tol::EXACT * via_r_f.abs().max(1.0) {
            return Err(Error::InternalConsistency(format!(
                "shifted gramian routes disagree at k={k}: {via_r_f} vs {via_head_f}"
            )));
        }
        shifted_gramians.push(via_r_f);
        shifted_gramians_headsum.push(via_head_f);
    }

    // stages: B_k = -(conj(alpha)/|alpha|) (1-|alpha|^2)^{n/2} / sqrt(mu_k G_k G_{k+1}),
    //         D_k = |alpha| sqrt(mu_k G_{k+1} / G_k)
    let mut b = Vec::with_capacity(k_max + 1);
    let mut d = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mu_k = 1.0 / binom_f64(n as i64 + k as i64 - 1, k as i64);
        let gk = shifted_gramians[k];
        let gk1 = shifted_gramians[k + 1];
        let phase = -alpha.conj() / alpha.norm();
        let bk = phase * (one_m.powf(n as f64 / 2.0) / (mu_k * gk * gk1).sqrt());
        let dk = alpha.norm() * (mu_k * gk1 / gk).sqrt();
        b.push([bk.re, bk.im]);
        d.push(dk);
    }

    Ok(OracleRecord {
        alpha,
        n,
        a: alpha.conj(),
        c: one_m.powf(n as f64 / 2.0),
        plain_gramians,
        shifted_gramians,
        shifted_gramians_headsum,
        b,
        d,
    })
}

/// Theta_{n,k}(z) by the closed resolvent-difference formula.
pub fn oracle_theta(spec: &OneZeroSpec, record: &OracleRecord, k: usize, z: CScalar) -> CScalar {
    let n = spec.n;
    let alpha = spec.alpha;
    let aa = alpha.norm_sqr();
    let one_m = 1.0 - aa;
    let mu_k = 1.0 / binom_f64(n as i64 + k as i64 - 1, k as i64);
    let gk = record.shifted_gramians[k];
    let gk1 = record.shifted_gramians[k + 1];
    let scale = one_m.powi(n as i32) / (alpha.norm() * (mu_k * gk * gk1).sqrt());
    let diff = r_nk(n, k, Complex64::new(aa, 0.0)) - r_nk(n, k, z * alpha.conj());
    diff * scale
}

/// Theta_{n,0}(z) by the separate head formula (cross-check for k = 0):
/// (1 - ((1-|alpha|^2)/(1-z conj(alpha)))^n) / (|alpha| sqrt(G_{n,1})).
pub fn oracle_theta0(spec: &OneZeroSpec, record: &OracleRecord, z: CScalar) -> CScalar {
    let n = spec.n;
    let alpha = spec.alpha;
    let one = Complex64::new(1.0, 0.0);
    let ratio = Complex64::new(1.0 - alpha.norm_sqr(), 0.0) / (one - z * alpha.conj());
    (one - ratio.powu(n as u32)) / (alpha.norm() * record.shifted_gramians[1].sqrt())
}

/// F_l(z) = b_alpha(z) (sqrt(1-|alpha|^2)/(1-z conj(alpha)))^{n-l}; F_n is
/// the plain Blaschke factor.
pub fn oracle_f(spec: &OneZeroSpec, l: usize, z: CScalar) -> CScalar {
    let alpha = spec.alpha;
    let base = blaschke(alpha, z);
    let factor = Complex64::new((1.0 - alpha.norm_sqr()).sqrt(), 0.0)
        / (Complex64::new(1.0, 0.0) - z * alpha.conj());
    base * factor.powu((spec.n - l) as u32)
}

/// Subspace kernel for the one-zero subspace:
/// (1 - z conj(zeta))^{-n} - (1-|alpha|^2)^n ((1-z conj(alpha))(1-alpha conj(zeta)))^{-n}.
pub fn oracle_km(spec: &OneZeroSpec, z: CScalar, zeta: CScalar) -> CScalar {
    let one = Complex64::new(1.0, 0.0);
    let n = spec.n as i32;
    let alpha = spec.alpha;
    (one - z * zeta.conj()).powi(-n)
        - Complex64::new((1.0 - alpha.norm_sqr()).powi(n), 0.0)
            * ((one - z * alpha.conj()) * (one - alpha * zeta.conj())).powi(-n)
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineComparison {
    pub quantity: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub witness: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleVsPipelineReport {
    pub n: usize,
    #[serde(serialize_with = "serialize_cscalar")]
    pub alpha: CScalar,
    pub comparisons: Vec<PipelineComparison>,
    pub pass: bool,
}

/// Runs the generic pipelines on the realizing pair and compares every
/// quantity against the closed forms: gramians to 1e-12, stage magnitudes to
/// 1e-10, and the phase-invariant kernel products on the grid to 1e-10.
pub fn oracle_vs_pipeline(
    spec: &OneZeroSpec,
    k_max: usize,
    grid: &[(CScalar, CScalar)],
) -> Result<OracleVsPipelineReport> {
    let record = oracle_all(spec, k_max)?;
    let pair = spec.pair();
    let mut comparisons = Vec::new();
    let mut push = |quantity: &str, residual: f64, tolerance: f64, witness: String| {
        comparisons.push(PipelineComparison {
            quantity: quantity.to_string(),
            max_residual: residual,
            tolerance,
            pass: residual <= tolerance,
            witness,
        });
    };

    // gramians
    let grams = gramians(&pair, k_max + 1)?;
    let mut worst = 0.0f64;
    let mut witness = String::new();
    for j in 1..=spec.n {
        let res = (grams.plain(j).get(0, 0).re - record.plain_gramians[j]).abs();
        if res > worst {
            worst = res;
            witness = format!("G_{j}");
        }
    }
    push("plain_gramians", worst, tol::EXACT, witness);
    let mut worst = 0.0f64;
    let mut witness = String::new();
    for k in 0..=k_max + 1 {
        let res = (grams.shifted(k)?.get(0, 0).re - record.shifted_gramians[k]).abs();
        if res > worst {
            worst = res;
            witness = format!("k={k}");
        }
    }
    push("shifted_gramians", worst, tol::EXACT, witness);

    // inner family stages: magnitudes of B_k, D_k
    let fam = build_inner_family(&pair, k_max, 64)?;
    let mut worst_b = 0.0f64;
    let mut worst_d = 0.0f64;
    let mut witness = String::new();
    for k in 0..=k_max {
        let bres = (fam.stages[k].b.get(0, 0).norm() - record.b_scalar(k).norm()).abs();
        let dres = (fam.stages[k].d.get(0, 0).norm() - record.d[k]).abs();
        if bres > worst_b {
            worst_b = bres;
            witness = format!("k={k}");
        }
        worst_d = worst_d.max(dres);
    }
    push("stage_b_magnitude", worst_b, tol::TIGHT, witness.clone());
    push("stage_d_magnitude", worst_d, tol::TIGHT, witness);

    // theta products on the grid (phase-invariant)
    let mut worst = 0.0f64;
    let mut witness = String::new();
    for k in 0..=k_max {
        for &(z, w) in grid {
            let pipe = theta_eval(&pair, &fam.stages[k], z)?.get(0, 0)
                * theta_eval(&pair, &fam.stages[k], w)?.get(0, 0).conj();
            let orc = oracle_theta(spec, &record, k, z) * oracle_theta(spec, &record, k, w).conj();
            let res = (pipe - orc).norm();
            if res > worst {
                worst = res;
                witness = format!("k={k}, z={z}, zeta={w}");
            }
        }
    }
    push("theta_products", worst, tol::TIGHT, witness);

    // approach one multipliers: per-entry products and the kernel sum
    let (mfam, _) = approach1_build(&pair, grid, 320)?;
    let mut worst = 0.0f64;
    let mut witness = String::new();
    for l in 1..=spec.n {
        let table = &mfam.entries[l - 1];
        for &(z, w) in grid {
            let pipe = table.eval(z).get(0, 0) * table.eval(w).get(0, 0).conj();
            let orc = oracle_f(spec, l, z) * oracle_f(spec, l, w).conj();
            let res = (pipe - orc).norm();
            if res > worst {
                worst = res;
                witness = format!("l={l}, z={z}, zeta={w}");
            }
        }
    }
    push("multiplier_products", worst, tol::TIGHT, witness);

    // kernel summation against the closed-form subspace kernel
    let mut worst = 0.0f64;
    let mut witness = String::new();
    for &(z, w) in grid {
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 1..=spec.n {
            let table = &mfam.entries[l - 1];
            let denom = (Complex64::new(1.0, 0.0) - z * w.conj()).powi(-(l as i32));
            acc += table.eval(z).get(0, 0) * table.eval(w).get(0, 0).conj() * denom;
        }
        let res = (acc - oracle_km(spec, z, w)).norm();
        if res > worst {
            worst = res;
            witness = format!("z={z}, zeta={w}");
        }
    }
    push("kernel_sum", worst, tol::TIGHT, witness);

    // wandering representer agrees with stage zero
    let (_, theta4, rep4) = approach4_build(&pair, grid, 320)?;
    let mut worst = rep4.wandering_kernel_residual;
    let mut witness = String::from("kernel residual");
    for &(z, w) in grid.iter().take(32) {
        let pipe = theta4.eval(z).get(0, 0) * theta4.eval(w).get(0, 0).conj();
        let orc = oracle_theta(spec, &record, 0, z) * oracle_theta(spec, &record, 0, w).conj();
        let res = (pipe - orc).norm();
        if res > worst {
            worst = res;
            witness = format!("z={z}, zeta={w}");
        }
    }
    push("wandering_representer", worst, tol::TIGHT, witness);

    let pass = comparisons.iter().all(|c| c.pass);
    Ok(OracleVsPipelineReport {
        n: spec.n,
        alpha: spec.alpha,
        comparisons,
        pass,
    })
}

/// Subspace-kernel grid from the generic pipeline, exposed for CSV export of
/// the one-zero case.
pub fn pipeline_km_grid(spec: &OneZeroSpec) -> Result<crate::bergman::KernelGrid> {
    let pair = spec.pair();
    let grams = gramians(&pair, 1)?;
    kernel_eval(KernelKind::Subspace, &pair, &grams, None, &default_grid())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn record_values_at_half() {
        let spec = OneZeroSpec::new(c(0.5, 0.0), 2).unwrap();
        let rec = oracle_all(&spec, 4).unwrap();
        assert!((rec.plain_gramians[1] - 0.75).abs() < 1e-15);
        assert!((rec.plain_gramians[2] - 1.0).abs() < 1e-15);
        assert!((rec.shifted_gramians[1] - 1.75).abs() < 1e-12);
        assert!((rec.shifted_gramians_headsum[1] - 1.75).abs() < 1e-12);
        assert!((rec.b_scalar(0).norm() - 0.5669467095138409).abs() < 1e-12);
        assert!((rec.d[0] - 0.6614378277661477).abs() < 1e-12);
    }

    #[test]
    fn theta_values_and_zero() {
        let spec = OneZeroSpec::new(c(0.5, 0.0), 2).unwrap();
        let rec = oracle_all(&spec, 4).unwrap();
        let th0 = oracle_theta(&spec, &rec, 0, c(0.0, 0.0));
        assert!((th0.norm() - 0.6614378277661477).abs() < 1e-12);
        // the k = 0 closed form agrees with the resolvent-difference form
        for z in [c(0.0, 0.0), c(0.3, 0.2), c(-0.6, 0.1)] {
            let a = oracle_theta(&spec, &rec, 0, z);
            let b = oracle_theta0(&spec, &rec, z);
            assert!((a - b).norm() < 1e-12);
        }
        // every theta vanishes at alpha
        for n in 1..=3usize {
            for alpha in [c(0.5, 0.0), c(0.3, 0.0), c(0.0, 0.7)] {
                let spec = OneZeroSpec::new(alpha, n).unwrap();
                let rec = oracle_all(&spec, 6).unwrap();
                for k in 0..=6 {
                    let v = oracle_theta(&spec, &rec, k, alpha);
                    assert!(v.norm() < 1e-12, "n={n} k={k} alpha={alpha}: {v}");
                }
            }
        }
    }

    #[test]
    fn f_values_at_half() {
        let spec = OneZeroSpec::new(c(0.5, 0.0), 2).unwrap();
        let f1 = oracle_f(&spec, 1, c(0.0, 0.0));
        let f2 = oracle_f(&spec, 2, c(0.0, 0.0));
        assert!((f1 - c(-0.4330127018922193, 0.0)).norm() < 1e-15);
        assert!((f2 - c(-0.5, 0.0)).norm() < 1e-15);
        let km = oracle_km(&spec, c(0.0, 0.0), c(0.0, 0.0));
        assert!((km - c(0.4375, 0.0)).norm() < 1e-15);
        assert!((f1.norm_sqr() + f2.norm_sqr() - km.re).abs() < 1e-15);
    }

    #[test]
    fn sumker_closed_forms_tight() {
        // rational functions: the closed-form sum reproduces the kernel to 1e-12
        for n in 1..=4usize {
            let spec = OneZeroSpec::new(c(0.35, -0.45), n).unwrap();
            for &(z, w) in default_grid().iter() {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 1..=n {
                    let denom = (c(1.0, 0.0) - z * w.conj()).powi(-(l as i32));
                    acc += oracle_f(&spec, l, z) * oracle_f(&spec, l, w).conj() * denom;
                }
                let km = oracle_km(&spec, z, w);
                assert!((acc - km).norm() < 1e-12, "n={n} z={z} w={w}");
            }
        }
    }

    #[test]
    fn gramian_routes_agree_broadly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(42);
        for _ in 0..20 {
            let r = rng.random_range(0.05..0.93);
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            let alpha = Complex64::from_polar(r, phi);
            for n in 1..=5 {
                let spec = OneZeroSpec::new(alpha, n).unwrap();
                // oracle_all validates the two routes against each other to 1e-12
                oracle_all(&spec, 12).unwrap();
            }
        }
    }

    #[test]
    fn pipeline_matches_oracle() {
        let grid = default_grid();
        for (alpha, n) in [(c(0.5, 0.0), 2usize), (c(0.3, 0.0), 1), (c(0.0, 0.7), 3)] {
            let spec = OneZeroSpec::new(alpha, n).unwrap();
            let rep = oracle_vs_pipeline(&spec, 4, &grid).unwrap();
            assert!(rep.pass, "alpha={alpha}, n={n}: {rep:#?}");
        }
    }

    #[test]
    fn rejects_zero_and_boundary_alpha() {
        assert!(OneZeroSpec::new(c(0.0, 0.0), 2).is_err());
        assert!(OneZeroSpec::new(c(1.0, 0.0), 2).is_err());
        assert!(OneZeroSpec::new(c(0.9999999, 0.0), 2).is_err());
    }
}
