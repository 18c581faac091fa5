//! Membership tests for the exact parameter domains: the classical Gindikin
//! set, the non-central Gindikin set, the process-existence domain, and the
//! rank-cone semigroup domain, together with the parameter transformation
//! maps (congruence and exponential tilt).
//!
//! Integrality tests on shape parameters use an absolute tolerance
//! (`Tolerances::int_tol`, default 1e-12); the underlying sets are exact, so
//! callers that need exact decisions should go through the rational-input
//! paths instead.

use num_rational::BigRational;
use num_traits::FromPrimitive;
use serde_json::json;

use crate::dense::SquareMatrix;
use crate::error::{Error, Result};
use crate::moments::{canonical_rank_e0, nonexistence_certificate, Certificate};
use crate::scalar::Real;
use crate::symmat::{numerical_rank, psd_sqrt, PsdMatrix, SymmetricMatrix, Tolerances};

/// Shape, non-centrality, scale triple of the Wishart law.
#[derive(Debug, Clone, PartialEq)]
pub struct WishartParams<T> {
    pub beta: T,
    pub omega: PsdMatrix<T>,
    pub sigma: PsdMatrix<T>,
}

impl<T: Real> WishartParams<T> {
    pub fn new(beta: T, omega: PsdMatrix<T>, sigma: PsdMatrix<T>) -> Result<Self> {
        if !(beta >= T::zero()) || !beta.is_finite() {
            return Err(Error::InvalidShape(format!("beta must be a finite nonnegative real, got {beta}")));
        }
        if omega.p() != sigma.p() {
            return Err(Error::Dimension(format!(
                "omega is {}x{} but sigma is {}x{}",
                omega.p(),
                omega.p(),
                sigma.p(),
                sigma.p()
            )));
        }
        Ok(Self { beta, omega, sigma })
    }

    /// Central law with the given scale.
    pub fn central(beta: T, p: usize, sigma: PsdMatrix<T>) -> Result<Self> {
        Self::new(beta, PsdMatrix::zeros(p), sigma)
    }

    pub fn p(&self) -> usize {
        self.omega.p()
    }

    pub fn rank_omega(&self, tols: &Tolerances) -> usize {
        numerical_rank(&self.omega, T::from_f64_c(tols.rank_tol))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// 2*beta (resp. alpha) at or above p-1: any non-centrality admitted.
    ContinuousRange,
    /// Discrete shape with the rank bound satisfied.
    DiscreteRank,
    Inadmissible,
}

impl Rule {
    pub fn as_str(&self) -> &'static str {
        match self {
            Rule::ContinuousRange => "ContinuousRange",
            Rule::DiscreteRank => "DiscreteRank",
            Rule::Inadmissible => "Inadmissible",
        }
    }
}

/// Admissibility decision with a machine-checkable witness for the refusals.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub admissible: bool,
    pub rule: Rule,
    pub detail: String,
    pub certificate: Option<Certificate>,
}

impl Verdict {
    fn admitted(rule: Rule, detail: String) -> Self {
        Self { admissible: true, rule, detail, certificate: None }
    }

    fn refused(detail: String, certificate: Option<Certificate>) -> Self {
        Self { admissible: false, rule: Rule::Inadmissible, detail, certificate }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({
            "admissible": self.admissible,
            "rule": self.rule.as_str(),
            "detail": self.detail,
        });
        if let Some(cert) = &self.certificate {
            v["certificate"] = cert.to_json();
        }
        v
    }
}

/// Nearest integer within `int_tol`, if any.
fn snap_integer<T: Real>(x: T, tols: &Tolerances) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() <= T::from_f64_c(tols.int_tol) {
        r.to_i64()
    } else {
        None
    }
}

fn check_shape<T: Real>(beta: T) -> Result<()> {
    if !(beta >= T::zero()) || !beta.is_finite() {
        return Err(Error::InvalidShape(format!("shape must be a finite nonnegative real, got {beta}")));
    }
    Ok(())
}

fn check_p(p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::Dimension("dimension must be at least 1".into()));
    }
    Ok(())
}

/// Classical set: 2*beta in {0, 1, ..., p-2} or beta >= (p-1)/2.
pub fn classical_gindikin_contains<T: Real>(beta: T, p: usize, tols: &Tolerances) -> Result<bool> {
    check_shape(beta)?;
    check_p(p)?;
    let two_beta = beta + beta;
    if let Some(m) = snap_integer(two_beta, tols) {
        if m >= 0 && (m as usize) + 2 <= p {
            return Ok(true);
        }
    }
    Ok(beta >= T::from_f64_c((p as f64 - 1.0) / 2.0))
}

/// Certificate backing an inadmissible discrete/continuous decision: the
/// process drift is alpha = 2*beta (taken at its exact float value) started
/// from the canonical rank-r initial point.
fn refusal_certificate(p: usize, alpha_f: f64, rank: usize) -> Option<Certificate> {
    let alpha = BigRational::from_f64(alpha_f)?;
    let e0 = canonical_rank_e0(p, rank);
    nonexistence_certificate(p, &alpha, &e0).ok().flatten()
}

/// Non-central Gindikin set: admissible iff 2*beta >= p-1, or 2*beta is an
/// integer in {0,...,p-2} with rank(omega) <= 2*beta.
pub fn ncgs_contains<T: Real>(
    beta: T,
    rank_omega: usize,
    p: usize,
    tols: &Tolerances,
) -> Result<Verdict> {
    check_shape(beta)?;
    check_p(p)?;
    if rank_omega > p {
        return Err(Error::OutOfRange(format!("rank {rank_omega} exceeds dimension {p}")));
    }
    let two_beta = beta + beta;
    let snapped = snap_integer(two_beta, tols);
    if let Some(m) = snapped {
        if m >= p as i64 - 1 {
            return Ok(Verdict::admitted(
                Rule::ContinuousRange,
                format!("2*beta = {m} >= p-1 = {}", p - 1),
            ));
        }
        // m in B = {0,...,p-2}
        if rank_omega as i64 <= m {
            return Ok(Verdict::admitted(
                Rule::DiscreteRank,
                format!("2*beta = {m} in {{0,...,{}}} and rank(omega) = {rank_omega} <= 2*beta", p - 2),
            ));
        }
        return Ok(Verdict::refused(
            format!("discrete shape 2*beta = {m} but rank(omega) = {rank_omega} > 2*beta"),
            refusal_certificate(p, m as f64, rank_omega),
        ));
    }
    if two_beta >= T::from_f64_c(p as f64 - 1.0) {
        return Ok(Verdict::admitted(
            Rule::ContinuousRange,
            format!("2*beta = {two_beta} >= p-1 = {}", p - 1),
        ));
    }
    Ok(Verdict::refused(
        format!("2*beta = {two_beta} is below p-1 = {} and not an integer", p - 1),
        refusal_certificate(p, two_beta.to_f64().unwrap_or(f64::NAN), rank_omega),
    ))
}

/// Process-existence domain: alpha >= p-1, or alpha in {0,...,p-2} with
/// rank(x0) <= alpha.
pub fn sde_admissible<T: Real>(
    alpha: T,
    rank_x0: usize,
    p: usize,
    tols: &Tolerances,
) -> Result<Verdict> {
    check_shape(alpha)?;
    check_p(p)?;
    if rank_x0 > p {
        return Err(Error::OutOfRange(format!("rank {rank_x0} exceeds dimension {p}")));
    }
    let snapped = snap_integer(alpha, tols);
    if let Some(m) = snapped {
        if m >= p as i64 - 1 {
            return Ok(Verdict::admitted(
                Rule::ContinuousRange,
                format!("alpha = {m} >= p-1 = {}", p - 1),
            ));
        }
        if rank_x0 as i64 <= m {
            return Ok(Verdict::admitted(
                Rule::DiscreteRank,
                format!("alpha = {m} in {{0,...,{}}} and rank(x0) = {rank_x0} <= alpha", p - 2),
            ));
        }
        return Ok(Verdict::refused(
            format!("integer drift alpha = {m} but rank(x0) = {rank_x0} > alpha"),
            refusal_certificate(p, m as f64, rank_x0),
        ));
    }
    if alpha >= T::from_f64_c(p as f64 - 1.0) {
        return Ok(Verdict::admitted(
            Rule::ContinuousRange,
            format!("alpha = {alpha} >= p-1 = {}", p - 1),
        ));
    }
    Ok(Verdict::refused(
        format!("alpha = {alpha} is below p-1 = {} and not an integer", p - 1),
        refusal_certificate(p, alpha.to_f64().unwrap_or(f64::NAN), rank_x0),
    ))
}

/// Semigroup domain on the rank-k cone: alpha = k exactly when k < p, and
/// alpha >= p-1 when k = p.
pub fn semigroup_admissible<T: Real>(alpha: T, k: usize, p: usize, tols: &Tolerances) -> Result<bool> {
    check_shape(alpha)?;
    check_p(p)?;
    if k < 1 || k > p {
        return Err(Error::OutOfRange(format!("rank cone index k={k} outside 1..={p}")));
    }
    if k == p {
        return Ok(alpha >= T::from_f64_c(p as f64 - 1.0));
    }
    Ok((alpha - T::from_f64_c(k as f64)).abs() <= T::from_f64_c(tols.int_tol))
}

fn is_identity<T: Real>(m: &PsdMatrix<T>, tols: &Tolerances) -> bool {
    let p = m.p();
    let tol = tols.sym::<T>();
    for i in 0..p {
        for j in 0..p {
            let want = if i == j { T::one() } else { T::zero() };
            if (m.at(i, j) - want).abs() > tol {
                return false;
            }
        }
    }
    true
}

fn require_invertible<T: Real>(q: &SquareMatrix<T>) -> Result<()> {
    let scale = q.max_abs().max(T::one());
    let floor = T::epsilon() * scale.powi(q.p() as i32) * T::from_f64_c(q.p() as f64);
    if q.det().abs() <= floor {
        return Err(Error::SingularTransform);
    }
    Ok(())
}

/// Congruence map on an identity-scale law: X ~ (beta, omega; I) implies
/// q X q^T ~ (beta, q omega q^T; q q^T).
pub fn automorphism_map<T: Real>(
    params: &WishartParams<T>,
    q: &SquareMatrix<T>,
    tols: &Tolerances,
) -> Result<WishartParams<T>> {
    if q.p() != params.p() {
        return Err(Error::Dimension(format!("q is {}x{}, params are {}-dimensional", q.p(), q.p(), params.p())));
    }
    if !is_identity(&params.sigma, tols) {
        return Err(Error::Config(
            "automorphism_map is stated for identity scale; compose with tilt_map for general sigma".into(),
        ));
    }
    require_invertible(q)?;
    let omega = PsdMatrix::assume_psd(params.omega.base().congruence(q), T::zero());
    let sigma = PsdMatrix::assume_psd(
        SymmetricMatrix::trusted(q.mul_transposed(q)),
        T::zero(),
    );
    WishartParams::new(params.beta, omega, sigma)
}

/// Exponential-family tilt of an identity-scale law onto scale `sigma`:
/// (beta, omega; I) -> (beta, sigma omega sigma; sigma).
pub fn tilt_map<T: Real>(
    beta: T,
    omega: &PsdMatrix<T>,
    sigma_target: &PsdMatrix<T>,
    tols: &Tolerances,
) -> Result<WishartParams<T>> {
    if omega.p() != sigma_target.p() {
        return Err(Error::Dimension("omega and sigma_target must share dimension".into()));
    }
    if !sigma_target.is_positive_definite(tols) {
        return Err(Error::NotPd("tilt target scale must be strictly positive definite".into()));
    }
    let tilted = PsdMatrix::assume_psd(omega.base().congruence(sigma_target.base().as_square()), T::zero());
    WishartParams::new(beta, tilted, sigma_target.clone())
}

/// Inverse tilt: (beta, omega'; sigma) -> (beta, sigma^{-1} omega' sigma^{-1}; I).
pub fn tilt_inverse<T: Real>(params: &WishartParams<T>, tols: &Tolerances) -> Result<WishartParams<T>> {
    if !params.sigma.is_positive_definite(tols) {
        return Err(Error::NotPd("inverse tilt needs a strictly positive definite scale".into()));
    }
    let inv = params.sigma.base().as_square().inverse()?;
    let omega = PsdMatrix::assume_psd(params.omega.base().congruence(&inv), T::zero());
    WishartParams::new(params.beta, omega, PsdMatrix::identity(params.p()))
}

/// Factor a general-scale law through an identity-scale one: returns
/// (identity-scale params, q) with q = sqrt(sigma), so that X ~ returned
/// params implies q X q^T ~ original params.
pub fn reparameterize_to_identity<T: Real>(
    params: &WishartParams<T>,
    tols: &Tolerances,
) -> Result<(WishartParams<T>, SquareMatrix<T>)> {
    if !params.sigma.is_positive_definite(tols) {
        return Err(Error::NotPd("reparameterization needs a strictly positive definite scale".into()));
    }
    let q = psd_sqrt(&params.sigma, tols)?;
    let q_inv = q.base().as_square().inverse()?;
    let omega0 = PsdMatrix::assume_psd(params.omega.base().congruence(&q_inv), T::zero());
    let identity_params = WishartParams::new(params.beta, omega0, PsdMatrix::identity(params.p()))?;
    Ok((identity_params, q.base().as_square().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn classical_membership() {
        let t = tols();
        assert!(classical_gindikin_contains(0.5, 3, &t).unwrap());
        assert!(!classical_gindikin_contains(0.75, 3, &t).unwrap());
        assert!(classical_gindikin_contains(1.0, 3, &t).unwrap());
        // p=1: half-line only
        assert!(classical_gindikin_contains(0.0, 1, &t).unwrap());
        assert!(classical_gindikin_contains(0.3, 1, &t).unwrap());
        assert!(classical_gindikin_contains(0.0, 5, &t).unwrap());
        assert!(matches!(
            classical_gindikin_contains(-0.1, 3, &t),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn ncgs_examples() {
        let t = tols();
        let v = ncgs_contains(0.5, 1, 3, &t).unwrap();
        assert!(v.admissible);
        assert_eq!(v.rule, Rule::DiscreteRank);

        let v = ncgs_contains(0.5, 2, 3, &t).unwrap();
        assert!(!v.admissible);
        let cert = v.certificate.expect("discrete refusal carries a certificate");
        assert!(cert.self_validates());

        let v = ncgs_contains(1.0, 2, 2, &t).unwrap();
        assert!(v.admissible);
        assert_eq!(v.rule, Rule::ContinuousRange);

        // non-integer 2*beta below p-1
        let v = ncgs_contains(0.75, 0, 3, &t).unwrap();
        assert!(!v.admissible);
        assert!(v.certificate.unwrap().self_validates());

        assert!(ncgs_contains(0.5, 4, 3, &t).is_err());
    }

    #[test]
    fn ncgs_reduces_to_classical_at_zero_rank() {
        let t = tols();
        for p in 1..=5usize {
            for k in 0..=(4 * p) {
                let beta = k as f64 / 8.0; // 2*beta = k/4
                let a = classical_gindikin_contains(beta, p, &t).unwrap();
                let b = ncgs_contains(beta, 0, p, &t).unwrap().admissible;
                assert_eq!(a, b, "p={p} beta={beta}");
            }
        }
    }

    #[test]
    fn ncgs_monotonicity() {
        let t = tols();
        for p in 2..=5usize {
            for k in 0..=(4 * p) {
                let beta = k as f64 / 8.0;
                let mut prev = true;
                for rank in 0..=p {
                    let adm = ncgs_contains(beta, rank, p, &t).unwrap().admissible;
                    // monotone decreasing in rank
                    assert!(prev || !adm, "p={p} beta={beta} rank={rank}");
                    prev = adm;
                }
            }
            // monotone increasing in beta on the continuous branch
            for rank in 0..=p {
                let lo = ncgs_contains((p as f64 - 1.0) / 2.0, rank, p, &t).unwrap().admissible;
                let hi = ncgs_contains(p as f64, rank, p, &t).unwrap().admissible;
                assert!(lo && hi);
            }
        }
    }

    #[test]
    fn sde_examples() {
        let t = tols();
        assert!(sde_admissible(2.0, 3, 3, &t).unwrap().admissible);
        assert!(!sde_admissible(1.0, 2, 4, &t).unwrap().admissible);
        assert!(sde_admissible(0.0, 0, 4, &t).unwrap().admissible);
    }

    #[test]
    fn semigroup_examples() {
        let t = tols();
        assert!(semigroup_admissible(1.0, 1, 3, &t).unwrap());
        assert!(!semigroup_admissible(1.5, 2, 3, &t).unwrap());
        assert!(semigroup_admissible(2.0, 3, 3, &t).unwrap());
        assert!(semigroup_admissible(5.0, 3, 3, &t).unwrap());
        assert!(!semigroup_admissible(2.0, 1, 3, &t).unwrap());
        assert!(semigroup_admissible(1.0, 0, 3, &t).is_err());
        assert!(semigroup_admissible(1.0, 4, 3, &t).is_err());
    }

    #[test]
    fn automorphism_identity_and_rank() {
        let t = tols();
        let omega = PsdMatrix::from_outer_products(3, &[vec![1.0, 0.5, -0.25]]);
        let params = WishartParams::new(0.5, omega.clone(), PsdMatrix::identity(3)).unwrap();

        let mapped = automorphism_map(&params, &SquareMatrix::identity(3), &t).unwrap();
        assert_eq!(mapped.beta, 0.5);
        for i in 0..3 {
            for j in 0..3 {
                assert!((mapped.omega.at(i, j) - omega.at(i, j)).abs() < 1e-12);
                assert!((mapped.sigma.at(i, j) - params.sigma.at(i, j)).abs() < 1e-12);
            }
        }

        let q = SquareMatrix::from_rows(3, vec![2.0, 0.3, 0.0, 0.0, 1.0, -0.5, 0.1, 0.0, 1.5]).unwrap();
        let mapped = automorphism_map(&params, &q, &t).unwrap();
        assert_eq!(params.rank_omega(&t), mapped.rank_omega(&t));
        // q q^T lands in sigma
        let qqt = q.mul_transposed(&q);
        for i in 0..3 {
            for j in 0..3 {
                assert!((mapped.sigma.at(i, j) - qqt.at(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn automorphism_rejects_singular_and_nonidentity_scale() {
        let t = tols();
        let params =
            WishartParams::new(1.0, PsdMatrix::zeros(2), PsdMatrix::identity(2)).unwrap();
        let singular = SquareMatrix::from_rows(2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(
            automorphism_map(&params, &singular, &t),
            Err(Error::SingularTransform)
        ));

        let scaled =
            WishartParams::new(1.0, PsdMatrix::zeros(2), PsdMatrix::scaled_identity(2, 2.0).unwrap())
                .unwrap();
        assert!(automorphism_map(&scaled, &SquareMatrix::identity(2), &t).is_err());
    }

    #[test]
    fn tilt_roundtrip_preserves_rank() {
        let t = tols();
        let omega = PsdMatrix::from_outer_products(2, &[vec![1.0, 2.0]]);
        let sigma = PsdMatrix::new(
            SymmetricMatrix::new(2, vec![2.0, 0.5, 0.5, 1.0], &t).unwrap(),
            &t,
        )
        .unwrap();

        // sigma = I is the identity map
        let id = tilt_map(1.5, &omega, &PsdMatrix::identity(2), &t).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((id.omega.at(i, j) - omega.at(i, j)).abs() < 1e-12);
            }
        }

        let fwd = tilt_map(1.5, &omega, &sigma, &t).unwrap();
        assert_eq!(fwd.rank_omega(&t), 1);
        let back = tilt_inverse(&fwd, &t).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((back.omega.at(i, j) - omega.at(i, j)).abs() < 1e-10);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((back.sigma.at(i, j) - want).abs() < 1e-12);
            }
        }

        let degenerate = PsdMatrix::from_diag(&[1.0, 0.0]).unwrap();
        assert!(tilt_map(1.5, &omega, &degenerate, &t).is_err());
    }

    #[test]
    fn reparameterization_factors_sigma() {
        let t = tols();
        let sigma = PsdMatrix::new(
            SymmetricMatrix::new(2, vec![2.0, 0.5, 0.5, 1.0], &t).unwrap(),
            &t,
        )
        .unwrap();
        let omega = PsdMatrix::from_outer_products(2, &[vec![0.5, 1.0]]);
        let params = WishartParams::new(1.0, omega.clone(), sigma.clone()).unwrap();
        let (id_params, q) = reparameterize_to_identity(&params, &t).unwrap();
        assert!(is_identity(&id_params.sigma, &t));
        // q omega0 q^T reproduces omega and q q^T reproduces sigma
        let back = id_params.omega.base().congruence(&q);
        let qqt = q.mul_transposed(&q);
        for i in 0..2 {
            for j in 0..2 {
                assert!((back.at(i, j) - omega.at(i, j)).abs() < 1e-10);
                assert!((qqt.at(i, j) - sigma.at(i, j)).abs() < 1e-10);
            }
        }
    }
}
