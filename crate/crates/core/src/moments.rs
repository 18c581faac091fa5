//! Exact moment engine: rational-coefficient polynomials t -> E[e_n(X_t)]
//! computed by the drift recursion
//!
//!   E[e_n](t) = e_n(0) + (p-n+1)(alpha-n+1) * int_0^t E[e_{n-1}](s) ds,
//!
//! with E[e_0] = 1, the closed-form leading coefficient, and non-existence
//! certificates: an index n whose polynomial is provably negative at an
//! explicit witness time. All sign decisions happen in exact arithmetic;
//! floats only appear at the Monte Carlo comparison boundary.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde_json::json;

use crate::error::{Error, Result};
use crate::poly::Polynomial;

pub type Rational = BigRational;

fn rat_int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// E[e_n(X_t)] as an exact polynomial in t.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentPolynomial {
    pub n: usize,
    pub poly: Polynomial<Rational>,
}

impl MomentPolynomial {
    pub fn eval(&self, t: &Rational) -> Rational {
        self.poly.eval(t)
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        let tr = Rational::from_f64(t).expect("finite t");
        self.poly.eval(&tr).to_f64().unwrap_or(f64::NAN)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "n": self.n,
            "coeffs": self.poly.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    NegativeLeadingCoeff,
    NegativeLinearTerm,
}

impl CertificateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertificateKind::NegativeLeadingCoeff => "NegativeLeadingCoeff",
            CertificateKind::NegativeLinearTerm => "NegativeLinearTerm",
        }
    }
}

/// Machine-checkable witness of non-existence: the moment polynomial of order
/// `n` is negative at `witness_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub n: usize,
    pub kind: CertificateKind,
    /// The offending coefficient (leading or linear).
    pub value: Rational,
    pub witness_t: Rational,
    pub polynomial: MomentPolynomial,
}

impl Certificate {
    /// Re-evaluate the stored polynomial at the witness; must come out
    /// strictly negative.
    pub fn self_validates(&self) -> bool {
        self.polynomial.eval(&self.witness_t).is_negative()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "n": self.n,
            "kind": self.kind.as_str(),
            "value": self.value.to_string(),
            "witness_t": self.witness_t.to_string(),
            "polynomial": self.polynomial.to_json(),
        })
    }
}

fn validate_e0(p: usize, e0: &[Rational]) -> Result<()> {
    if e0.len() != p {
        return Err(Error::InvalidMoments(format!(
            "expected {p} initial e_n values, got {}",
            e0.len()
        )));
    }
    if let Some(bad) = e0.iter().find(|v| v.is_negative()) {
        return Err(Error::InvalidMoments(format!(
            "initial values must come from a PSD matrix; found {bad}"
        )));
    }
    Ok(())
}

/// The full family E[e_1], ..., E[e_p] for drift parameter `alpha` and
/// initial values e0 = (e_1(x0), ..., e_p(x0)).
pub fn moment_polynomials(
    p: usize,
    alpha: &Rational,
    e0: &[Rational],
) -> Result<Vec<MomentPolynomial>> {
    validate_e0(p, e0)?;
    let mut out = Vec::with_capacity(p);
    let mut prev = Polynomial::constant(Rational::one()); // E[e_0] = 1
    for n in 1..=p {
        let factor = rat_int((p - n + 1) as i64) * (alpha.clone() - rat_int(n as i64 - 1));
        let poly = prev.integrate().scale(&factor).add_constant(&e0[n - 1]);
        out.push(MomentPolynomial { n, poly: poly.clone() });
        prev = poly;
    }
    Ok(out)
}

/// Coefficient of t^n in E[e_n]:  p(p-1)...(p-n+1) * alpha(alpha-1)...(alpha-n+1) / n!.
pub fn leading_coefficient(p: usize, alpha: &Rational, n: usize) -> Result<Rational> {
    if n < 1 || n > p {
        return Err(Error::OutOfRange(format!("order n={n} outside 1..={p}")));
    }
    let mut num = Rational::one();
    let mut fact = Rational::one();
    for j in 0..n {
        num *= rat_int((p - j) as i64) * (alpha.clone() - rat_int(j as i64));
        fact *= rat_int(j as i64 + 1);
    }
    Ok(num / fact)
}

fn is_nonneg_integer(x: &Rational) -> bool {
    x.is_integer() && !x.is_negative()
}

/// Exact admissibility of (alpha, rank(x0)) for the process: alpha >= p-1, or
/// alpha an integer in {0,...,p-2} with rank(x0) <= alpha. This is the exact
/// counterpart of the float-tolerance test in `gindikin`.
pub fn sde_admissible_exact(p: usize, alpha: &Rational, rank_x0: usize) -> bool {
    if alpha >= &rat_int(p as i64 - 1) {
        return true;
    }
    if is_nonneg_integer(alpha) {
        // alpha < p-1 here, so the integer is automatically in {0,...,p-2}
        return rat_int(rank_x0 as i64) <= *alpha;
    }
    false
}

/// Non-existence certificate for the smallest violating order, or None when
/// the parameters are admissible.
///
/// For non-integer alpha below p-1 the order is the first integer >= alpha+1,
/// where the leading coefficient turns negative. For integer alpha = m with
/// e_{m+1}(x0) > 0 the order is m+2, whose linear term is negative while
/// E[e_{m+1}] stays constant.
pub fn nonexistence_certificate(
    p: usize,
    alpha: &Rational,
    e0: &[Rational],
) -> Result<Option<Certificate>> {
    validate_e0(p, e0)?;
    if alpha.is_negative() {
        return Err(Error::InvalidShape(format!("alpha must be nonnegative, got {alpha}")));
    }
    if alpha >= &rat_int(p as i64 - 1) {
        return Ok(None);
    }
    let polys = moment_polynomials(p, alpha, e0)?;

    if is_nonneg_integer(alpha) {
        let m = alpha.to_integer().to_usize().expect("small integer alpha");
        // rank(x0) <= m exactly when e_{m+1}(x0) = 0
        if e0[m].is_zero() {
            return Ok(None);
        }
        let n = m + 2;
        debug_assert!(n <= p);
        let poly = polys[n - 1].clone();
        let c0 = poly.poly.coeff(0);
        let c1 = poly.poly.coeff(1);
        debug_assert!(c1.is_negative());
        let one = Rational::one();
        let witness_t = if c0.is_zero() { one } else { (-c0 / c1.clone()) + one };
        let value = c1;
        let cert = Certificate {
            n,
            kind: CertificateKind::NegativeLinearTerm,
            value,
            witness_t,
            polynomial: poly,
        };
        debug_assert!(cert.self_validates());
        return Ok(Some(cert));
    }

    // non-integer alpha strictly between 0 and p-1: first integer >= alpha+1
    let n = (alpha.clone() + Rational::one())
        .ceil()
        .to_integer()
        .to_usize()
        .expect("alpha below p-1");
    debug_assert!(n <= p);
    let poly = polys[n - 1].clone();
    let lead = poly.poly.coeff(n);
    debug_assert!(lead.is_negative());
    let tail: Rational = (0..n).map(|i| poly.poly.coeff(i).abs()).sum();
    let witness_t = Rational::one() + tail / lead.abs();
    let cert = Certificate {
        n,
        kind: CertificateKind::NegativeLeadingCoeff,
        value: lead,
        witness_t,
        polynomial: poly,
    };
    debug_assert!(cert.self_validates());
    Ok(Some(cert))
}

/// Exact elementary symmetric polynomials of a rational matrix (row-major
/// entries), via the Faddeev-LeVerrier characteristic-polynomial recursion.
pub fn esp_exact(p: usize, entries: &[Rational]) -> Result<Vec<Rational>> {
    if p == 0 || entries.len() != p * p {
        return Err(Error::Dimension(format!(
            "expected {} entries for a {p}x{p} matrix, got {}",
            p * p,
            entries.len()
        )));
    }
    let at = |m: &[Rational], i: usize, j: usize| m[i * p + j].clone();
    let mat_mul = |a: &[Rational], b: &[Rational]| -> Vec<Rational> {
        let mut out = vec![Rational::zero(); p * p];
        for i in 0..p {
            for k in 0..p {
                let av = at(a, i, k);
                if av.is_zero() {
                    continue;
                }
                for j in 0..p {
                    out[i * p + j] += av.clone() * at(b, k, j);
                }
            }
        }
        out
    };
    let trace = |m: &[Rational]| -> Rational { (0..p).map(|i| at(m, i, i)).sum() };

    // c[p] = 1; M_k = A*M_{k-1} + c[p-k+1]*I; c[p-k] = -tr(A*M_k)/k
    let mut c = vec![Rational::zero(); p + 1];
    c[p] = Rational::one();
    let mut m = vec![Rational::zero(); p * p];
    for k in 1..=p {
        let mut am = mat_mul(entries, &m);
        for i in 0..p {
            am[i * p + i] += c[p - k + 1].clone();
        }
        m = am;
        let amk = mat_mul(entries, &m);
        c[p - k] = -(trace(&amk) / rat_int(k as i64));
    }
    // det(tI - A) = sum c_k t^k with c_{p-n} = (-1)^n e_n
    Ok((1..=p)
        .map(|n| {
            let v = c[p - n].clone();
            if n % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect())
}

/// Parse a shape parameter given exactly: "a/b", a decimal like "1.25"
/// (optionally with an exponent), or a plain integer.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let err = || Error::InvalidShape(format!("cannot parse '{s}' as a rational"));
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| err())?;
        let d: BigInt = den.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    let negative = int_part.starts_with('-');
    let digits: String = format!(
        "{}{}",
        int_part.trim_start_matches(['+', '-']),
        frac_part
    );
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let mut n: BigInt = digits.parse().map_err(|_| err())?;
    if negative {
        n = -n;
    }
    let scale = frac_part.len() as i32 - exp;
    let ten = BigInt::from(10);
    let val = if scale >= 0 {
        Rational::new(n, ten.pow(scale as u32))
    } else {
        Rational::from_integer(n * ten.pow((-scale) as u32))
    };
    Ok(val)
}

/// e0 vector (C(r,1), ..., C(r,p)) of the canonical rank-r projection
/// diag(1,...,1,0,...,0); the representative initial data used when only a
/// rank is known.
pub fn canonical_rank_e0(p: usize, rank: usize) -> Vec<Rational> {
    let mut out = Vec::with_capacity(p);
    let mut binom = Rational::one();
    for n in 1..=p {
        if n > rank {
            out.push(Rational::zero());
            continue;
        }
        // C(r, n) = C(r, n-1) * (r - n + 1) / n
        binom = binom * rat_int((rank - n + 1) as i64) / rat_int(n as i64);
        out.push(binom.clone());
    }
    out
}
