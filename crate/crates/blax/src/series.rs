//! Exact and floating-point calculus for the shifted n-th-power geometric
//! series R_{n,k}(z) = (S_1^*)^k (1-z)^{-n} and the weights
//! mu_{n,j} = 1/binom(j+n-1, j).
//!
//! Binomials are computed in exact big-integer arithmetic; identities that
//! the rest of the crate relies on are verified here both exactly (integer
//! identities) and in floating point on sample grids.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CScalar;
use crate::tol;

/// Index pair (n, k) of a shifted series R_{n,k}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeriesSpec {
    pub n: u32,
    pub k: u32,
}

impl SeriesSpec {
    pub fn new(n: u32, k: u32) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("weight index n must be >= 1".into()));
        }
        Ok(SeriesSpec { n, k })
    }
}

/// The weights mu_{n,0..N} as exact rationals.
#[derive(Clone, Debug)]
pub struct WeightSequence {
    pub n: u32,
    pub values: Vec<BigRational>,
}

impl WeightSequence {
    pub fn new(n: u32, len: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("weight index n must be >= 1".into()));
        }
        Ok(WeightSequence {
            n,
            values: (0..len as u64).map(|j| mu(n, j)).collect(),
        })
    }
}

/// Exact binomial coefficient with the standard conventions:
/// binom(n, 0) = 1 for every integer n, zero for k < 0 or 0 <= n < k,
/// and the falling-factorial extension for negative n.
pub fn binom_big(n: i64, k: i64) -> BigInt {
    if k < 0 {
        return BigInt::zero();
    }
    if k == 0 {
        return BigInt::one();
    }
    if n < 0 {
        let v = binom_big(k - n - 1, k);
        return if k % 2 == 0 { v } else { -v };
    }
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Binomial coefficient converted to f64 (exact for values below 2^53).
pub fn binom_f64(n: i64, k: i64) -> f64 {
    binom_big(n, k).to_f64().expect("binomial fits in f64 range")
}

/// mu_{n,j} = 1/binom(j+n-1, j) as an exact rational.
pub fn mu(n: u32, j: u64) -> BigRational {
    BigRational::new(BigInt::one(), binom_big(j as i64 + n as i64 - 1, j as i64))
}

pub fn mu_f64(n: u32, j: u64) -> f64 {
    1.0 / binom_f64(j as i64 + n as i64 - 1, j as i64)
}

/// j-th Taylor coefficient of R_{n,k}: binom(n+j+k-1, j+k).
pub fn r_coeff(spec: SeriesSpec, j: u64) -> BigInt {
    let (n, k) = (spec.n as i64, spec.k as i64);
    binom_big(n + j as i64 + k - 1, j as i64 + k)
}

pub fn r_coeff_f64(spec: SeriesSpec, j: u64) -> f64 {
    r_coeff(spec, j).to_f64().expect("coefficient fits in f64 range")
}

/// Coefficients c_0..c_{n-1} of the polynomial p with
/// R_{n,k}(z) = R_n(z) * p(z), where
/// c_kappa = sum_{j=0}^{kappa} (-1)^j binom(k+n-1, k+kappa-j) binom(n-1-kappa+j, j).
pub fn rnk_poly_coeffs(n: u32, k: u32) -> Vec<BigInt> {
    let (n, k) = (n as i64, k as i64);
    (0..n)
        .map(|kappa| {
            let mut acc = BigInt::zero();
            for j in 0..=kappa {
                let term = binom_big(k + n - 1, k + kappa - j) * binom_big(n - 1 - kappa + j, j);
                if j % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            acc
        })
        .collect()
}

fn check_disk(z: CScalar) -> Result<()> {
    if z.norm() > 1.0 - 1e-9 {
        return Err(Error::Domain(format!(
            "|z| = {} too close to the unit circle",
            z.norm()
        )));
    }
    Ok(())
}

/// Closed-form value of R_{n,k}(z) for |z| <= 1 - 1e-9.
///
/// k = 0 evaluates (1-z)^{-n} directly; k >= 1 goes through the
/// polynomial-times-R_n representation.
pub fn r_eval(spec: SeriesSpec, z: CScalar) -> Result<CScalar> {
    check_disk(z)?;
    let rn = (Complex64::new(1.0, 0.0) - z).powi(-(spec.n as i32));
    if spec.k == 0 {
        return Ok(rn);
    }
    if z.norm() == 0.0 {
        // constant term of the series, avoids 0/0 in the shifted-difference form
        return Ok(Complex64::new(r_coeff_f64(spec, 0), 0.0));
    }
    let coeffs = rnk_poly_coeffs(spec.n, spec.k);
    let mut poly = Complex64::new(0.0, 0.0);
    let mut zp = Complex64::new(1.0, 0.0);
    for c in &coeffs {
        poly += zp * c.to_f64().expect("polynomial coefficient fits in f64");
        zp *= z;
    }
    Ok(rn * poly)
}

/// Shifted-difference form z^{-k} (R_n(z) - sum_{j<k} binom(n+j-1,j) z^j),
/// used as an independent route for cross-checks (requires z != 0 for k >= 1).
pub fn r_eval_shifted_difference(spec: SeriesSpec, z: CScalar) -> Result<CScalar> {
    check_disk(z)?;
    let rn = (Complex64::new(1.0, 0.0) - z).powi(-(spec.n as i32));
    if spec.k == 0 {
        return Ok(rn);
    }
    if z.norm() < 1e-8 {
        // fall back to the truncated series near the origin
        return Ok(r_eval_series(spec, z, 60));
    }
    let mut head = Complex64::new(0.0, 0.0);
    let mut zp = Complex64::new(1.0, 0.0);
    for j in 0..spec.k as u64 {
        head += zp * binom_f64(spec.n as i64 + j as i64 - 1, j as i64);
        zp *= z;
    }
    Ok((rn - head) / z.powu(spec.k))
}

/// Truncated power series sum_{j=0}^{N} binom(n+j+k-1, j+k) z^j.
pub fn r_eval_series(spec: SeriesSpec, z: CScalar, terms: usize) -> CScalar {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut zp = Complex64::new(1.0, 0.0);
    for j in 0..terms as u64 {
        acc += zp * r_coeff_f64(spec, j);
        zp *= z;
    }
    acc
}

/// One line of a verification report.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub witness: String,
}

impl IdentityCheck {
    fn new(name: &str, max_residual: f64, tolerance: f64, witness: String) -> Self {
        IdentityCheck {
            name: name.to_string(),
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
            witness,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesReport {
    pub n: u32,
    pub checks: Vec<IdentityCheck>,
    pub pass: bool,
}

/// Verifies the binomial/series identities for weight index n:
/// Chu-Vandermonde (exact integers), the truncated-sum formula, the
/// backward-shift recursion, the lowering formula to unshifted series,
/// and the polynomial-times-R_n representation.
pub fn verify_series_identities(
    n: u32,
    k_max: u32,
    coeff_max: u64,
    sample_z: &[CScalar],
) -> Result<SeriesReport> {
    if n < 1 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    for &z in sample_z {
        if z.norm() > 0.9 + 1e-12 {
            return Err(Error::Domain("sample points must satisfy |z| <= 0.9".into()));
        }
    }
    let mut checks = Vec::new();

    // (a) Chu-Vandermonde, exact
    let mut cv_ok = true;
    let mut cv_witness = String::from("all exact");
    'cv: for k in 0..=k_max as i64 {
        for j in 0..=coeff_max as i64 {
            let n = n as i64;
            let lhs = binom_big(n + j + k - 1, j + k);
            let rhs: BigInt = (1..=n)
                .map(|l| binom_big(l + k - 2, l - 1) * binom_big(n + j - l, j))
                .sum();
            if lhs != rhs {
                cv_ok = false;
                cv_witness = format!("k={k}, j={j}: {lhs} != {rhs}");
                break 'cv;
            }
        }
    }
    checks.push(IdentityCheck::new(
        "chu_vandermonde",
        if cv_ok { 0.0 } else { 1.0 },
        0.5,
        cv_witness,
    ));

    // (b) truncated-sum identity
    let mut worst = 0.0f64;
    let mut witness = String::new();
    for &z in sample_z {
        for big_n in [1usize, 2, 5, 10, 25] {
            let lhs: Complex64 = (0..=big_n as u64)
                .map(|j| {
                    Complex64::new(binom_f64(n as i64 + j as i64 - 1, j as i64), 0.0) * z.powu(j as u32)
                })
                .sum();
            let one = Complex64::new(1.0, 0.0);
            let mut rhs = (one - z).powi(-(n as i32));
            for j in 1..=n as i64 {
                rhs -= Complex64::new(binom_f64(big_n as i64 + n as i64, big_n as i64 + j), 0.0)
                    * z.powu(big_n as u32 + j as u32)
                    * (one - z).powi(-(j as i32));
            }
            let scale = lhs.norm().max(1.0);
            let res = (lhs - rhs).norm() / scale;
            if res > worst {
                worst = res;
                witness = format!("N={big_n}, z={z}");
            }
        }
    }
    checks.push(IdentityCheck::new("truncated_sum", worst, tol::TIGHT, witness));

    // (c) recursion R_{n,k}(z) = binom(n+k-1,k) + z R_{n,k+1}(z)
    let mut worst = 0.0f64;
    let mut witness = String::new();
    for k in 0..=k_max {
        for &z in sample_z {
            let lhs = r_eval(SeriesSpec { n, k }, z)?;
            let rhs = Complex64::new(binom_f64(n as i64 + k as i64 - 1, k as i64), 0.0)
                + z * r_eval(SeriesSpec { n, k: k + 1 }, z)?;
            let res = (lhs - rhs).norm() / lhs.norm().max(1.0);
            if res > worst {
                worst = res;
                witness = format!("k={k}, z={z}");
            }
        }
    }
    checks.push(IdentityCheck::new("shift_recursion", worst, tol::TIGHT, witness));

    // (d) R_{n,k} = sum_l binom(l+k-2, l-1) R_{n-l+1} for k >= 1
    let mut worst = 0.0f64;
    let mut witness = String::new();
    for k in 1..=k_max.max(1) {
        for &z in sample_z {
            let lhs = r_eval(SeriesSpec { n, k }, z)?;
            let rhs: Complex64 = (1..=n as i64)
                .map(|l| {
                    Complex64::new(binom_f64(l + k as i64 - 2, l - 1), 0.0)
                        * r_eval(
                            SeriesSpec {
                                n: (n as i64 - l + 1) as u32,
                                k: 0,
                            },
                            z,
                        )
                        .expect("|z| already validated")
                })
                .sum();
            let res = (lhs - rhs).norm() / lhs.norm().max(1.0);
            if res > worst {
                worst = res;
                witness = format!("k={k}, z={z}");
            }
        }
    }
    checks.push(IdentityCheck::new("lowering_formula", worst, tol::TIGHT, witness));

    // (e) closed form vs. truncated series; 800 terms keep the tail below
    // 1e-12 relative even at |z| = 0.9 off the real axis
    let mut worst = 0.0f64;
    let mut witness = String::new();
    for k in 0..=k_max {
        for &z in sample_z {
            let spec = SeriesSpec { n, k };
            let lhs = r_eval(spec, z)?;
            let rhs = r_eval_series(spec, z, 800);
            let res = (lhs - rhs).norm() / lhs.norm().max(1.0);
            if res > worst {
                worst = res;
                witness = format!("k={k}, z={z}");
            }
        }
    }
    checks.push(IdentityCheck::new("closed_form_vs_series", worst, tol::TIGHT, witness));

    // (f) polynomial-times-R_n form vs. the shifted-difference definition
    let mut worst = 0.0f64;
    let mut witness = String::new();
    for k in 1..=k_max.max(1) {
        for &z in sample_z {
            let spec = SeriesSpec { n, k };
            let lhs = r_eval(spec, z)?;
            let rhs = r_eval_shifted_difference(spec, z)?;
            let res = (lhs - rhs).norm() / lhs.norm().max(1.0);
            if res > worst {
                worst = res;
                witness = format!("k={k}, z={z}");
            }
        }
    }
    checks.push(IdentityCheck::new(
        "poly_form_vs_shifted_difference",
        worst,
        tol::TIGHT,
        witness,
    ));

    let pass = checks.iter().all(|c| c.pass);
    Ok(SeriesReport { n, checks, pass })
}

/// Default sample points for series verification: radii up to 0.9 in a few
/// directions.
pub fn default_sample_points() -> Vec<CScalar> {
    let radii = [0.0, 0.3, 0.5, 0.7, 0.9];
    let phases = [0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI, -2.2];
    let mut pts = vec![];
    for &r in &radii {
        if r == 0.0 {
            pts.push(Complex64::new(0.0, 0.0));
            continue;
        }
        for &p in &phases {
            pts.push(Complex64::from_polar(r, p));
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_values() {
        assert_eq!(mu(1, 7), BigRational::one());
        assert_eq!(mu(2, 3), BigRational::new(1.into(), 4.into()));
        assert_eq!(mu(3, 2), BigRational::new(1.into(), 6.into()));
    }

    #[test]
    fn mu_times_binom_is_one() {
        for n in 1..=6u32 {
            for j in 0..40u64 {
                let prod = mu(n, j) * BigRational::from(binom_big(j as i64 + n as i64 - 1, j as i64));
                assert!(prod.is_one(), "n={n}, j={j}");
            }
        }
    }

    #[test]
    fn weights_decreasing_for_n_ge_2_constant_for_n_1() {
        let w1 = WeightSequence::new(1, 20).unwrap();
        assert!(w1.values.iter().all(|v| v.is_one()));
        for n in 2..=5 {
            let w = WeightSequence::new(n, 20).unwrap();
            assert!(w.values[0].is_one());
            for j in 1..w.values.len() {
                assert!(w.values[j] < w.values[j - 1]);
            }
        }
    }

    #[test]
    fn r_coeff_values() {
        assert_eq!(r_coeff(SeriesSpec { n: 1, k: 5 }, 9), BigInt::one());
        assert_eq!(r_coeff(SeriesSpec { n: 2, k: 0 }, 3), BigInt::from(4));
        assert_eq!(r_coeff(SeriesSpec { n: 2, k: 1 }, 2), BigInt::from(4));
    }

    #[test]
    fn r_eval_examples() {
        let z = Complex64::new(0.5, 0.0);
        let v = r_eval(SeriesSpec { n: 2, k: 1 }, z).unwrap();
        assert!((v - Complex64::new(6.0, 0.0)).norm() < 1e-12);
        let v2 = r_eval(SeriesSpec { n: 2, k: 2 }, z).unwrap();
        assert!((v2 - Complex64::new(8.0, 0.0)).norm() < 1e-12);
        // recursion ties them together: 6 = 2 + 0.5 * 8
        assert!((v - (Complex64::new(2.0, 0.0) + z * v2)).norm() < 1e-12);
        let v3 = r_eval(SeriesSpec { n: 3, k: 0 }, Complex64::new(0.0, 0.0)).unwrap();
        assert!((v3 - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn r_eval_rejects_boundary() {
        let z = Complex64::new(0.9999999999, 0.0);
        assert!(r_eval(SeriesSpec { n: 2, k: 0 }, z).is_err());
    }

    #[test]
    fn n1_collapse() {
        for k in 0..8 {
            for j in 0..20 {
                assert_eq!(r_coeff(SeriesSpec { n: 1, k }, j), BigInt::one());
            }
            let z = Complex64::new(0.4, 0.3);
            let v = r_eval(SeriesSpec { n: 1, k }, z).unwrap();
            let expect = (Complex64::new(1.0, 0.0) - z).powi(-1);
            assert!((v - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_shifted_difference() {
        for n in 1..=5 {
            for k in 1..=6 {
                for &z in &default_sample_points() {
                    let spec = SeriesSpec { n, k };
                    let a = r_eval(spec, z).unwrap();
                    let b = r_eval_shifted_difference(spec, z).unwrap();
                    assert!(
                        (a - b).norm() / a.norm().max(1.0) < 1e-10,
                        "n={n} k={k} z={z}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn truncated_sum_worked_example() {
        // n=2, N=1, z=0.5: 1 + 2z = 2 and 4 - 3 z^2/(1-z) - z^3/(1-z)^2 = 2
        let z = Complex64::new(0.5, 0.0);
        let lhs = Complex64::new(1.0, 0.0) + z * 2.0;
        let one = Complex64::new(1.0, 0.0);
        let rhs = (one - z).powi(-2)
            - Complex64::new(3.0, 0.0) * z.powu(2) / (one - z)
            - z.powu(3) / (one - z).powi(2);
        assert!((lhs - rhs).norm() < 1e-14);
        assert!((lhs - Complex64::new(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn chu_vandermonde_worked_example() {
        // (n=2, k=1, j=1): binom(3,2) = 3 = 1*binom(2,1) + 1*binom(1,1)
        assert_eq!(binom_big(3, 2), BigInt::from(3));
        assert_eq!(
            binom_big(0, 0) * binom_big(2, 1) + binom_big(1, 1) * binom_big(1, 0),
            BigInt::from(3)
        );
    }

    #[test]
    fn full_report_passes() {
        let report = verify_series_identities(3, 6, 30, &default_sample_points()).unwrap();
        assert!(report.pass, "{:?}", report);
    }
}
