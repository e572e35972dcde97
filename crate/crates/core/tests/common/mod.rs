#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pipecg_core::linalg::haar_orthogonal;
use pipecg_core::{
    build_model_problem, run, ConvergenceHistory, ModelProblemSpec, Preconditioner, Probe, SparseMatrix, StopRule,
    VariantConfig,
};

pub fn q(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

pub fn f(v: &BigRational) -> f64 {
    v.to_f64().expect("representable")
}

pub fn rdot(x: &[BigRational], y: &[BigRational]) -> BigRational {
    x.iter().zip(y).fold(BigRational::zero(), |acc, (a, b)| acc + a * b)
}

pub fn rmatvec(a: &[Vec<BigRational>], x: &[BigRational]) -> Vec<BigRational> {
    a.iter().map(|row| rdot(row, x)).collect()
}

/// Unpreconditioned CG in exact rational arithmetic. Returns `x_0..=x_steps`
/// together with `α_0..` and `β_1..`.
pub struct ExactCg {
    pub xs: Vec<Vec<BigRational>>,
    pub rs: Vec<Vec<BigRational>>,
    pub alphas: Vec<BigRational>,
    pub betas: Vec<BigRational>,
}

pub fn exact_cg(a: &[Vec<BigRational>], b: &[BigRational], steps: usize) -> ExactCg {
    let n = b.len();
    let mut x = vec![BigRational::zero(); n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut nu = rdot(&r, &r);
    let mut out = ExactCg { xs: vec![x.clone()], rs: vec![r.clone()], alphas: vec![], betas: vec![] };
    for _ in 0..steps {
        if nu.is_zero() {
            break;
        }
        let s = rmatvec(a, &p);
        let alpha = &nu / rdot(&p, &s);
        for i in 0..n {
            x[i] = &x[i] + &alpha * &p[i];
            r[i] = &r[i] - &alpha * &s[i];
        }
        let nu_new = rdot(&r, &r);
        let beta = &nu_new / &nu;
        for i in 0..n {
            p[i] = &r[i] + &beta * &p[i];
        }
        nu = nu_new;
        out.alphas.push(alpha);
        out.betas.push(beta);
        out.xs.push(x.clone());
        out.rs.push(r.clone());
    }
    out
}

pub fn hilbert(n: usize) -> Vec<Vec<BigRational>> {
    (0..n)
        .map(|i| (0..n).map(|j| BigRational::new(BigInt::from(1), BigInt::from((i + j + 1) as i64))).collect())
        .collect()
}

pub fn to_f64_vec(v: &[BigRational]) -> Vec<f64> {
    v.iter().map(f).collect()
}

pub fn rel_diff(x: &[f64], y: &[f64]) -> f64 {
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let den: f64 = y.iter().map(|b| b * b).sum::<f64>().sqrt();
    num / den
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Dense SPD matrix `Q diag(λ) Qᵀ` with log-uniform eigenvalues in `[1/cond, 1]`.
pub fn random_spd(n: usize, cond: f64, seed: u64) -> SparseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lambda: Vec<f64> = (0..n).map(|_| 10f64.powf(-rng.random::<f64>() * cond.log10())).collect();
    lambda[0] = 1.0 / cond;
    lambda[n - 1] = 1.0;
    let qm = haar_orthogonal(n, seed.wrapping_add(1));
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..n).map(|k| qm[i * n + k] * lambda[k] * qm[j * n + k]).sum();
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    SparseMatrix::from_dense(n, &a).unwrap()
}

/// Like [`random_spd`] but with eigenvalues evenly spaced on `[1/cond, 1]`.
///
/// Log-spread spectra can lose orthogonality within a few steps, to the point
/// where a one-ulp change to `b` moves HS's own α by 1e-3. Pairwise variant
/// comparisons need systems where that self-sensitivity is small.
pub fn random_spd_even(n: usize, cond: f64, seed: u64) -> SparseMatrix {
    let lambda: Vec<f64> = (0..n).map(|i| 1.0 / cond + (1.0 - 1.0 / cond) * i as f64 / (n - 1) as f64).collect();
    let qm = haar_orthogonal(n, seed.wrapping_add(1));
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..n).map(|k| qm[i * n + k] * lambda[k] * qm[j * n + k]).sum();
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    SparseMatrix::from_dense(n, &a).unwrap()
}

/// Model problem with the standard protocol: `x*` entries `1/√n`, `b = A x*`.
pub fn model(seed: u64) -> (SparseMatrix, Vec<f64>, Vec<f64>) {
    let spec = ModelProblemSpec { n: 48, rho: 0.8, kappa: 1e3, seed };
    let (a, _) = build_model_problem(&spec).unwrap();
    let xs = vec![1.0 / 48f64.sqrt(); 48];
    let b = a.spmv(&xs).unwrap();
    (a, b, xs)
}

pub fn solve(
    cfg: VariantConfig,
    a: &SparseMatrix,
    m: &Preconditioner,
    b: &[f64],
    xs: &[f64],
    iters: usize,
) -> ConvergenceHistory {
    let mut probe = Probe::new(a, m, b, Some(xs));
    let x0 = vec![0.0; a.n()];
    run(cfg, a, m, b, &x0, iters, StopRule::FixedIterations(iters), &mut probe).unwrap()
}
