//! Simulator for the discrete-time time-varying system whose input-output
//! behavior realizes the subspace representations:
//!
//!   x(j+1) = ((j+n)/(j+1)) A x(j) + binom(j+n, j+1) B_j u(j)
//!   y(j)   = C x(j) + binom(j+n-1, j) D_j u(j)
//!
//! with a closed-form trajectory oracle, Taylor-domain reconciliation,
//! energy audits, and the weighted colligation unitarity checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beurlinglax::{theta_taylor, InnerFamily};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::series::{binom_f64, mu_f64};
use crate::statespace::{gramians, GramianSet, OutputPair, StageColligation};
use crate::tol;

/// A pair together with the colligation stages k = 0..K driving the inputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemSpec {
    pub pair: OutputPair,
    pub stages: Vec<StageColligation>,
}

impl SystemSpec {
    pub fn new(pair: OutputPair, stages: Vec<StageColligation>) -> Result<Self> {
        for (i, st) in stages.iter().enumerate() {
            if st.k != i {
                return Err(Error::MalformedInput(format!(
                    "stage indices must be contiguous from 0 (found k={} at position {i})",
                    st.k
                )));
            }
            if st.b.rows() != pair.state_dim() || st.d.rows() != pair.output_dim() {
                return Err(Error::dim("SystemSpec", format!("stage {i} dimensions")));
            }
            if st.b.cols() != st.d.cols() {
                return Err(Error::dim("SystemSpec", format!("stage {i} input dimension")));
            }
        }
        Ok(SystemSpec { pair, stages })
    }

    pub fn from_family(fam: &InnerFamily) -> Result<Self> {
        SystemSpec::new(fam.pair.clone(), fam.stages.clone())
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }
}

/// A simulated trajectory: inputs u(0..T), states x(0..T+1), outputs y(0..T).
#[derive(Clone, Debug)]
pub struct SignalTrace {
    pub inputs: Vec<CVector>,
    pub states: Vec<CVector>,
    pub outputs: Vec<CVector>,
}

impl SignalTrace {
    /// CSV rows: time index, then input, state, output entries as re/im pairs.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().flexible(true).from_writer(w);
        for j in 0..self.outputs.len() {
            let mut row = vec![j.to_string()];
            for v in self.inputs[j].iter() {
                row.push(v.re.to_string());
                row.push(v.im.to_string());
            }
            for v in self.states[j].iter() {
                row.push(v.re.to_string());
                row.push(v.im.to_string());
            }
            for v in self.outputs[j].iter() {
                row.push(v.re.to_string());
                row.push(v.im.to_string());
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Reads an input signal from CSV: each row is a time index followed by the
/// input entries as re/im pairs. Rows may have different widths because the
/// stage input dimensions vary.
pub fn read_inputs_csv<R: std::io::Read>(r: R) -> Result<Vec<CVector>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(r);
    let mut rows: Vec<(usize, CVector)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.is_empty() {
            continue;
        }
        let t: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::MalformedInput(format!("bad time index '{}'", &rec[0])))?;
        let vals: Vec<f64> = rec
            .iter()
            .skip(1)
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::MalformedInput(format!("bad input entry '{s}'")))
            })
            .collect::<Result<_>>()?;
        if vals.len() % 2 != 0 {
            return Err(Error::MalformedInput(
                "input entries must come as re/im pairs".into(),
            ));
        }
        let v = CVector::from_iterator(
            vals.len() / 2,
            vals.chunks(2).map(|c| Complex64::new(c[0], c[1])),
        );
        rows.push((t, v));
    }
    rows.sort_by_key(|(t, _)| *t);
    for (expect, (t, _)) in rows.iter().enumerate() {
        if *t != expect {
            return Err(Error::MalformedInput(format!(
                "time indices must be contiguous from 0 (missing {expect})"
            )));
        }
    }
    Ok(rows.into_iter().map(|(_, v)| v).collect())
}

/// Runs the recursion for j = 0..=horizon. Inputs may stop early (zero input
/// afterwards); they must not outrun the defined stages, and the simulator
/// refuses to extrapolate stage data.
pub fn simulate(
    spec: &SystemSpec,
    x0: &CVector,
    inputs: &[CVector],
    horizon: usize,
) -> Result<SignalTrace> {
    let pair = &spec.pair;
    let n = pair.n as i64;
    if x0.len() != pair.state_dim() {
        return Err(Error::dim("simulate", "initial state dimension"));
    }
    if inputs.len() > spec.stages.len() {
        return Err(Error::MalformedInput(format!(
            "inputs run to time {} but only {} stages are defined; \
             no continuation rule exists for later stages",
            inputs.len() as i64 - 1,
            spec.stages.len()
        )));
    }
    for (j, u) in inputs.iter().enumerate() {
        if u.len() != spec.stages[j].input_dim() {
            return Err(Error::dim(
                "simulate",
                format!(
                    "input at step {j} has dimension {} but stage wants {}",
                    u.len(),
                    spec.stages[j].input_dim()
                ),
            ));
        }
    }
    let zero_u = |j: usize| -> CVector {
        let dim = spec.stages.get(j).map(|s| s.input_dim()).unwrap_or(0);
        CVector::zeros(dim)
    };

    let mut states = Vec::with_capacity(horizon + 2);
    let mut outputs = Vec::with_capacity(horizon + 1);
    let mut full_inputs = Vec::with_capacity(horizon + 1);
    states.push(x0.clone());
    for j in 0..=horizon {
        let u = inputs.get(j).cloned().unwrap_or_else(|| zero_u(j));
        let x = &states[j];
        let mut y = pair.c.mul_vec(x);
        if u.len() > 0 {
            let dw = binom_f64(j as i64 + n - 1, j as i64);
            y += spec.stages[j].d.mul_vec(&u) * Complex64::new(dw, 0.0);
        }
        let ratio = (j as f64 + n as f64) / (j as f64 + 1.0);
        let mut x_next = pair.a.mul_vec(x) * Complex64::new(ratio, 0.0);
        if u.len() > 0 {
            let bw = binom_f64(j as i64 + n, j as i64 + 1);
            x_next += spec.stages[j].b.mul_vec(&u) * Complex64::new(bw, 0.0);
        }
        outputs.push(y);
        full_inputs.push(u);
        states.push(x_next);
    }
    Ok(SignalTrace {
        inputs: full_inputs,
        states,
        outputs,
    })
}

/// Closed-form trajectory oracle:
/// x(j) = binom(n+j-1, j) (A^j x0 + sum_{l<j} A^{j-l-1} B_l u(l)) and the
/// matching output with the direct-feedthrough term.
pub fn closed_form_trajectory(
    spec: &SystemSpec,
    x0: &CVector,
    inputs: &[CVector],
    horizon: usize,
) -> Result<SignalTrace> {
    let pair = &spec.pair;
    let n = pair.n as i64;
    let d = pair.state_dim();
    let mut apow = Vec::with_capacity(horizon + 2);
    apow.push(CMatrix::identity(d));
    for j in 0..=horizon {
        apow.push(&apow[j] * &pair.a);
    }
    let mut states = Vec::with_capacity(horizon + 2);
    let mut outputs = Vec::with_capacity(horizon + 1);
    let mut full_inputs = Vec::with_capacity(horizon + 1);
    for j in 0..=horizon + 1 {
        let mut core = apow[j].mul_vec(x0);
        for (l, u) in inputs.iter().enumerate().take(j) {
            if u.len() == 0 {
                continue;
            }
            core += apow[j - l - 1].mul_vec(&spec.stages[l].b.mul_vec(u));
        }
        let x = core * Complex64::new(binom_f64(n + j as i64 - 1, j as i64), 0.0);
        if j <= horizon {
            let mut y = pair.c.mul_vec(&x);
            if let Some(u) = inputs.get(j) {
                if u.len() > 0 {
                    let dw = binom_f64(j as i64 + n - 1, j as i64);
                    y += spec.stages[j].d.mul_vec(u) * Complex64::new(dw, 0.0);
                }
            }
            outputs.push(y);
            full_inputs.push(inputs.get(j).cloned().unwrap_or_else(|| {
                CVector::zeros(spec.stages.get(j).map(|s| s.input_dim()).unwrap_or(0))
            }));
        }
        states.push(x);
    }
    Ok(SignalTrace {
        inputs: full_inputs,
        states,
        outputs,
    })
}

/// Output Taylor string y(0..order); the horizon may run past the last
/// supplied input because zero input needs no stage data.
pub fn output_taylor(
    spec: &SystemSpec,
    x0: &CVector,
    inputs: &[CVector],
    order: usize,
) -> Result<Vec<CVector>> {
    if inputs.len() > spec.stages.len() {
        return Err(Error::MalformedInput("inputs outrun the defined stages".into()));
    }
    let pair = &spec.pair;
    let n = pair.n as i64;
    let mut outputs = Vec::with_capacity(order + 1);
    let mut x = x0.clone();
    for j in 0..=order {
        let mut y = pair.c.mul_vec(&x);
        let mut bu: Option<CVector> = None;
        if let Some(u) = inputs.get(j) {
            if u.len() > 0 {
                let dw = binom_f64(j as i64 + n - 1, j as i64);
                y += spec.stages[j].d.mul_vec(u) * Complex64::new(dw, 0.0);
                bu = Some(spec.stages[j].b.mul_vec(u));
            }
        }
        outputs.push(y);
        let ratio = (j as f64 + n as f64) / (j as f64 + 1.0);
        x = pair.a.mul_vec(&x) * Complex64::new(ratio, 0.0);
        if let Some(bu) = bu {
            let bw = binom_f64(j as i64 + n, j as i64 + 1);
            x += bu * Complex64::new(bw, 0.0);
        }
    }
    Ok(outputs)
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconcileReport {
    pub order: usize,
    pub max_residual: f64,
    pub first_mismatch: Option<usize>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares the simulated output Taylor string against the frequency-domain
/// assembly O x0 + sum_k z^k Theta_k(z) u_k, coefficient by coefficient.
pub fn ztransform_reconcile(
    spec: &SystemSpec,
    x0: &CVector,
    inputs: &[CVector],
    order: usize,
) -> Result<ReconcileReport> {
    let pair = &spec.pair;
    let simulated = output_taylor(spec, x0, inputs, order)?;

    let mut expect: Vec<CVector> = Vec::with_capacity(order + 1);
    let mut xj = x0.clone();
    for j in 0..=order {
        let coef = binom_f64(pair.n as i64 + j as i64 - 1, j as i64);
        expect.push(pair.c.mul_vec(&xj) * Complex64::new(coef, 0.0));
        xj = pair.a.mul_vec(&xj);
    }
    for (k, u) in inputs.iter().enumerate() {
        if u.len() == 0 {
            continue;
        }
        let tt = theta_taylor(pair, &spec.stages[k], order.saturating_sub(k))?;
        for (m, coeff) in tt.coeffs.iter().enumerate() {
            if k + m <= order {
                expect[k + m] += coeff.mul_vec(u);
            }
        }
    }

    let mut max_residual = 0.0f64;
    let mut first = None;
    let tolerance = tol::TIGHT;
    for j in 0..=order {
        let scale = expect[j].norm().max(1.0);
        let res = (&simulated[j] - &expect[j]).norm() / scale;
        if res > max_residual {
            max_residual = res;
        }
        if res > tolerance && first.is_none() {
            first = Some(j);
        }
    }
    Ok(ReconcileReport {
        order,
        max_residual,
        first_mismatch: first,
        tolerance,
        pass: first.is_none(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    /// ||y||^2 in the weighted norm at truncation.
    pub output_energy: f64,
    /// <G_n x0, x0> + sum ||u_k||^2.
    pub input_energy: f64,
    pub relative_gap: f64,
    /// Worst pairwise inner product among the decomposition terms.
    pub cross_term: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Verifies the energy balance ||y||^2 = <G_n x0, x0> + sum_k ||u_k||^2 for
/// systems built from an inner family, along with pairwise orthogonality of
/// the observability part and the per-stage contributions.
pub fn energy_audit(
    spec: &SystemSpec,
    x0: &CVector,
    inputs: &[CVector],
    order: usize,
) -> Result<EnergyReport> {
    let pair = &spec.pair;
    let grams = gramians(pair, 0)?;
    let y = output_taylor(spec, x0, inputs, order)?;
    let output_energy: f64 = y
        .iter()
        .enumerate()
        .map(|(j, v)| mu_f64(pair.n as u32, j as u64) * v.norm_squared())
        .sum();
    let gx = grams.gramian().mul_vec(x0);
    let mut input_energy = x0.dotc(&gx).re;
    for u in inputs {
        input_energy += u.norm_squared();
    }
    let relative_gap = (output_energy - input_energy).abs() / input_energy.max(1.0);

    let mut terms: Vec<Vec<CVector>> = Vec::new();
    {
        let mut xj = x0.clone();
        let mut obs = Vec::with_capacity(order + 1);
        for j in 0..=order {
            let coef = binom_f64(pair.n as i64 + j as i64 - 1, j as i64);
            obs.push(pair.c.mul_vec(&xj) * Complex64::new(coef, 0.0));
            xj = pair.a.mul_vec(&xj);
        }
        terms.push(obs);
    }
    for (k, u) in inputs.iter().enumerate() {
        if u.len() == 0 {
            continue;
        }
        let tt = theta_taylor(pair, &spec.stages[k], order.saturating_sub(k))?;
        let mut contrib = vec![CVector::zeros(pair.output_dim()); order + 1];
        for (m, coeff) in tt.coeffs.iter().enumerate() {
            if k + m <= order {
                contrib[k + m] = coeff.mul_vec(u);
            }
        }
        terms.push(contrib);
    }
    let mut cross_term = 0.0f64;
    for i in 0..terms.len() {
        for j in 0..i {
            let mut ip = Complex64::new(0.0, 0.0);
            for m in 0..=order {
                ip += terms[j][m].dotc(&terms[i][m]) * mu_f64(pair.n as u32, m as u64);
            }
            cross_term = cross_term.max(ip.norm());
        }
    }

    let tolerance = tol::KERNEL;
    let pass = relative_gap <= tolerance && cross_term <= tolerance;
    Ok(EnergyReport {
        output_energy,
        input_energy,
        relative_gap,
        cross_term,
        tolerance,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ColligationReport {
    pub k: usize,
    /// Defect of U* (weighted) U = I.
    pub isometry_defect: f64,
    /// Defect of U (weighted) U* = I.
    pub coisometry_defect: f64,
    /// Residual of the rescaled system-matrix identity.
    pub rescaling_defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Audits each stage colligation U_k = [A B_k; C D_k] as an operator from
/// the G_{n,k}-weighted state space plus inputs to the G_{n,k+1}-weighted
/// state space plus binomially weighted outputs: unitarity in those metrics
/// is conservativity of the realization. Also confirms that the
/// time-varying system matrix is the stated diagonal rescaling of U_k.
pub fn weighted_colligation_audit(
    spec: &SystemSpec,
    grams: &GramianSet,
) -> Result<Vec<ColligationReport>> {
    let pair = &spec.pair;
    let p = pair.output_dim();
    let mut reports = Vec::with_capacity(spec.stages.len());
    for stage in &spec.stages {
        let k = stage.k;
        let u_dim = stage.input_dim();
        let gk = grams.shifted(k)?;
        let gk1 = grams.shifted(k + 1)?;
        let bweight = binom_f64(pair.n as i64 + k as i64 - 1, k as i64);
        let u_mat = CMatrix::block2(&pair.a, &stage.b, &pair.c, &stage.d)?;

        // isometry: U* diag(G_{k+1}, binom I_p) U = diag(G_k, I_u)
        let w_out = CMatrix::block_diag(gk1, &CMatrix::identity(p).scale(bweight));
        let lhs = &(&u_mat.adjoint() * &w_out) * &u_mat;
        let rhs = CMatrix::block_diag(gk, &CMatrix::identity(u_dim));
        let isometry_defect = (&lhs - &rhs).frobenius();

        // coisometry: U diag(G_k^{-1}, I_u) U* = diag(G_{k+1}^{-1}, mu_k I_p)
        let gk_inv = linalg::inv_pd(gk, tol::COND_GRAMIAN)?;
        let gk1_inv = linalg::inv_pd(gk1, tol::COND_GRAMIAN)?;
        let lhs2 =
            &(&u_mat * &CMatrix::block_diag(&gk_inv, &CMatrix::identity(u_dim))) * &u_mat.adjoint();
        let rhs2 = CMatrix::block_diag(&gk1_inv, &CMatrix::identity(p).scale(1.0 / bweight));
        let coisometry_defect = (&lhs2 - &rhs2).frobenius();

        // rescaled system matrix:
        // [ (k+n)/(k+1) A, binom(k+n,k+1) B_k; C, binom(k+n-1,k) D_k ]
        // = diag((k+n)/(k+1) I, I) U_k diag(I, binom(k+n-1,k) I)
        let ratio = (k as f64 + pair.n as f64) / (k as f64 + 1.0);
        let direct = CMatrix::block2(
            &pair.a.scale(ratio),
            &stage.b.scale(binom_f64(k as i64 + pair.n as i64, k as i64 + 1)),
            &pair.c,
            &stage.d.scale(bweight),
        )?;
        let left = CMatrix::block_diag(
            &CMatrix::identity(pair.state_dim()).scale(ratio),
            &CMatrix::identity(p),
        );
        let right = CMatrix::block_diag(
            &CMatrix::identity(pair.state_dim()),
            &CMatrix::identity(u_dim).scale(bweight),
        );
        let rescaling_defect = (&direct - &(&(&left * &u_mat) * &right)).frobenius();

        let tolerance = tol::METRIC;
        let pass = isometry_defect <= tolerance
            && coisometry_defect <= tolerance
            && rescaling_defect <= tolerance;
        reports.push(ColligationReport {
            k,
            isometry_defect,
            coisometry_defect,
            rescaling_defect,
            tolerance,
            pass,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beurlinglax::build_inner_family;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one_zero_pair(n: usize, alpha: Complex64) -> OutputPair {
        let a = CMatrix::scalar(alpha.conj());
        let cm = CMatrix::scalar(c((1.0 - alpha.norm_sqr()).powf(n as f64 / 2.0), 0.0));
        OutputPair::new(n, a, cm).unwrap()
    }

    fn one_zero_system(n: usize, alpha: Complex64, k_max: usize) -> SystemSpec {
        let pair = one_zero_pair(n, alpha);
        let fam = build_inner_family(&pair, k_max, 8).unwrap();
        SystemSpec::from_family(&fam).unwrap()
    }

    #[test]
    fn zero_input_outputs_are_observability_coefficients() {
        let spec = one_zero_system(2, c(0.5, 0.0), 3);
        let x0 = CVector::from_element(1, c(1.0, 0.0));
        let trace = simulate(&spec, &x0, &[], 10).unwrap();
        for (j, y) in trace.outputs.iter().enumerate() {
            let expect = binom_f64(j as i64 + 1, j as i64) * 0.75 * 0.5f64.powi(j as i32);
            assert!((y[0] - c(expect, 0.0)).norm() < 1e-12, "j={j}");
        }
    }

    #[test]
    fn pulse_response_reproduces_theta_coefficients() {
        let spec = one_zero_system(2, c(0.5, 0.0), 3);
        let x0 = CVector::zeros(1);
        let u = CVector::from_element(1, c(1.0, 0.0));
        let trace = simulate(&spec, &x0, &[u], 10).unwrap();
        assert!((trace.outputs[0][0].norm() - 0.661437827766148).abs() < 1e-10);
        assert!((trace.outputs[1][0] - c(-0.850420, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn all_zero_trace() {
        let spec = one_zero_system(2, c(0.5, 0.0), 2);
        let x0 = CVector::zeros(1);
        let trace = simulate(&spec, &x0, &[], 8).unwrap();
        assert!(trace.outputs.iter().all(|y| y.norm() < 1e-300));
        assert!(trace.states.iter().all(|x| x.norm() < 1e-300));
    }

    #[test]
    fn simulate_matches_closed_form() {
        let spec = one_zero_system(3, c(0.4, 0.3), 5);
        let x0 = CVector::from_element(1, c(0.7, -0.2));
        let inputs: Vec<CVector> = (0..4)
            .map(|i| CVector::from_element(1, c(0.3 * i as f64 - 0.5, 0.1)))
            .collect();
        let sim = simulate(&spec, &x0, &inputs, 20).unwrap();
        let oracle = closed_form_trajectory(&spec, &x0, &inputs, 20).unwrap();
        for j in 0..=20 {
            let scale = oracle.states[j].norm().max(1.0);
            assert!(
                (&sim.states[j] - &oracle.states[j]).norm() / scale < 1e-10,
                "state {j}"
            );
            if j < 20 {
                let scale = oracle.outputs[j].norm().max(1.0);
                assert!(
                    (&sim.outputs[j] - &oracle.outputs[j]).norm() / scale < 1e-10,
                    "output {j}"
                );
            }
        }
    }

    #[test]
    fn simulate_refuses_inputs_beyond_stages() {
        let spec = one_zero_system(2, c(0.5, 0.0), 1);
        let x0 = CVector::zeros(1);
        let inputs: Vec<CVector> =
            (0..3).map(|_| CVector::from_element(1, c(1.0, 0.0))).collect();
        assert!(matches!(
            simulate(&spec, &x0, &inputs, 10),
            Err(Error::MalformedInput(_))
        ));
    }

    #[test]
    fn simulate_superposition() {
        let spec = one_zero_system(2, c(0.5, 0.0), 4);
        let x0 = CVector::zeros(1);
        let u1: Vec<CVector> =
            (0..3).map(|i| CVector::from_element(1, c(i as f64, 0.3))).collect();
        let u2: Vec<CVector> = (0..3)
            .map(|i| CVector::from_element(1, c(-0.4, 0.2 * i as f64)))
            .collect();
        let sum: Vec<CVector> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
        let t1 = simulate(&spec, &x0, &u1, 12).unwrap();
        let t2 = simulate(&spec, &x0, &u2, 12).unwrap();
        let ts = simulate(&spec, &x0, &sum, 12).unwrap();
        for j in 0..12 {
            let expect = &t1.outputs[j] + &t2.outputs[j];
            assert!((&ts.outputs[j] - &expect).norm() < 1e-12);
        }
    }

    #[test]
    fn ztransform_reconciles() {
        let spec = one_zero_system(2, c(0.5, 0.0), 6);
        let x0 = CVector::from_element(1, c(0.4, 0.1));
        let inputs: Vec<CVector> = (0..5)
            .map(|i| CVector::from_element(1, c(0.2 * i as f64 - 0.3, -0.1)))
            .collect();
        let rep = ztransform_reconcile(&spec, &x0, &inputs, 60).unwrap();
        assert!(rep.pass, "{rep:?}");

        // pulse at k: y-hat = z^k Theta_k(z) u exactly
        let pulse_at = 3usize;
        let mut pulse_inputs = vec![CVector::zeros(1); pulse_at + 1];
        pulse_inputs[pulse_at] = CVector::from_element(1, c(1.0, 0.0));
        let rep = ztransform_reconcile(&spec, &CVector::zeros(1), &pulse_inputs, 60).unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn n1_constant_stage_matches_classical_recursion() {
        let a = CMatrix::from_real(2, 2, &[0.3, 0.2, 0.0, -0.4]).unwrap();
        let cm = CMatrix::from_real(1, 2, &[1.0, 0.5]).unwrap();
        let pair = OutputPair::new(1, a.clone(), cm.clone()).unwrap();
        let fam = build_inner_family(&pair, 6, 8).unwrap();
        let spec = SystemSpec::from_family(&fam).unwrap();
        let b0 = fam.stages[0].b.clone();
        let d0 = fam.stages[0].d.clone();
        let x0 = CVector::from_iterator(2, [c(0.2, 0.0), c(-0.1, 0.3)]);
        let inputs: Vec<CVector> = (0..5)
            .map(|i| CVector::from_element(b0.cols(), c(0.1 * i as f64, -0.2)))
            .collect();
        let trace = simulate(&spec, &x0, &inputs, 6).unwrap();
        let mut x = x0.clone();
        for j in 0..6 {
            let u = inputs
                .get(j)
                .cloned()
                .unwrap_or_else(|| CVector::zeros(b0.cols()));
            let y = cm.mul_vec(&x) + d0.mul_vec(&u);
            assert!((&trace.outputs[j] - &y).norm() < 1e-12, "j={j}");
            x = a.mul_vec(&x) + b0.mul_vec(&u);
        }
    }

    #[test]
    fn energy_balance_for_inner_family_system() {
        let spec = one_zero_system(2, c(0.5, 0.0), 6);
        let x0 = CVector::from_element(1, c(0.5, -0.3));
        let inputs: Vec<CVector> = vec![
            CVector::from_element(1, c(0.8, 0.1)),
            CVector::from_element(1, c(-0.2, 0.4)),
        ];
        let rep = energy_audit(&spec, &x0, &inputs, 400).unwrap();
        assert!(rep.pass, "{rep:?}");

        // single pulse with zero state: ||y||^2 = ||u||^2
        let pulse = vec![CVector::from_element(1, c(1.0, 0.0))];
        let rep = energy_audit(&spec, &CVector::zeros(1), &pulse, 400).unwrap();
        assert!((rep.output_energy - 1.0).abs() < 1e-8, "{rep:?}");

        // no input: ||y||^2 = <G x0, x0>
        let rep = energy_audit(&spec, &x0, &[], 400).unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn weighted_colligations_are_unitary() {
        let pair = one_zero_pair(2, c(0.5, 0.0));
        let fam = build_inner_family(&pair, 4, 8).unwrap();
        let spec = SystemSpec::from_family(&fam).unwrap();
        let grams = gramians(&pair, 6).unwrap();
        let reports = weighted_colligation_audit(&spec, &grams).unwrap();
        assert!(reports.iter().all(|r| r.pass), "{reports:?}");

        // zeroing D breaks the isometry; the input-block residual equals
        // binom(n+k-1,k) D*D
        let mut broken = spec.clone();
        broken.stages[1].d = CMatrix::zeros(1, 1);
        let reports = weighted_colligation_audit(&broken, &grams).unwrap();
        assert!(!reports[1].pass);
        let metric =
            crate::statespace::metric_constraint_check(&pair, &broken.stages[1], &grams).unwrap();
        let dstar_d = fam.stages[1].d.get(0, 0).norm_sqr() * binom_f64(2, 1);
        assert!((metric.input_residual - dstar_d).abs() < 1e-9);
    }

    #[test]
    fn csv_roundtrip_for_inputs() {
        let csv = "0,1.0,0.0\n1,0.5,-0.25,0.1,0.2\n";
        let inputs = read_inputs_csv(csv.as_bytes()).unwrap();
        assert_eq!(inputs.len(), 2);
        assert_eq!(inputs[0].len(), 1);
        assert_eq!(inputs[1].len(), 2);
        assert!((inputs[1][1] - c(0.1, 0.2)).norm() < 1e-15);

        let bad = "0,1.0\n"; // odd number of entries
        assert!(read_inputs_csv(bad.as_bytes()).is_err());
    }
}
