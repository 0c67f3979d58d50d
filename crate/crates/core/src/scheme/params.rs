use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::precise::{decimal_rational, pow_rational, to_biguint, LogMonomial};
use crate::random::DEFAULT_C;

/// Protocol parameters `(n, k, d, r, s, ε, δ)` and the concentration constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub r: usize,
    pub s: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub c_const: f64,
    /// `δ² / 4`.
    pub alpha: f64,
}

impl SchemeParams {
    pub fn new(n: usize, k: usize, d: usize, r: usize, s: usize, epsilon: f64, delta: f64) -> Result<Self> {
        Self::with_constant(n, k, d, r, s, epsilon, delta, DEFAULT_C)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_constant(
        n: usize,
        k: usize,
        d: usize,
        r: usize,
        s: usize,
        epsilon: f64,
        delta: f64,
        c_const: f64,
    ) -> Result<Self> {
        validate_nkd(n, k, d)?;
        validate_unit_interval("epsilon", epsilon)?;
        validate_unit_interval("delta", delta)?;
        if !(c_const > 0.0 && c_const.is_finite()) {
            return Err(Error::Parameter(format!("concentration constant {c_const} must be positive")));
        }
        if r == 0 {
            return Err(Error::Parameter("r must be at least 1".into()));
        }
        let total = checked_total_dim(n, d);
        if s == 0 || total.is_some_and(|t| s > t) {
            return Err(Error::Parameter(format!("s = {s} outside [1, d^n]")));
        }
        Ok(Self { n, k, d, r, s, epsilon, delta, c_const, alpha: delta * delta / 4.0 })
    }

    /// `d^n`, if it fits in a `usize`.
    pub fn total_dim(&self) -> Option<usize> {
        checked_total_dim(self.n, self.d)
    }

    /// `d^{n-k}`: the number of outcomes of the complement measurement.
    pub fn outcome_count(&self) -> usize {
        self.d.pow((self.n - self.k) as u32)
    }
}

fn checked_total_dim(n: usize, d: usize) -> Option<usize> {
    d.checked_pow(u32::try_from(n).ok()?)
}

fn validate_nkd(n: usize, k: usize, d: usize) -> Result<()> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::Parameter(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    if d < 2 {
        return Err(Error::Parameter(format!("local dimension d = {d} must be at least 2")));
    }
    Ok(())
}

fn validate_unit_interval(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {x} outside (0, 1]")))
    }
}

/// Preconditions of the parameter formulas, each evaluated exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Feasibility {
    /// `d^k > 48 / δ²`.
    pub dk_condition: bool,
    /// `d^n > 10 (n + 2) / ε`.
    pub dn_condition: bool,
    /// `d / log₂ d > 2840 (2n + 3) / δ²`, only checked when `k = 1`.
    pub k1_condition: Option<bool>,
    /// `s ≥ 1`.
    pub s_positive: bool,
    pub feasible: bool,
}

/// Closed-form `r` and `s` with their feasibility flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterDerivation {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub c_const: f64,
    #[serde(serialize_with = "serialize_big")]
    pub r: BigUint,
    #[serde(serialize_with = "serialize_big")]
    pub s: BigUint,
    pub feasibility: Feasibility,
}

fn serialize_big<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl ParameterDerivation {
    /// Instantiable parameters, when `r` and `s` are small enough to build.
    pub fn to_scheme_params(&self) -> Result<SchemeParams> {
        let r = self.r.to_usize().ok_or_else(|| Error::Budget(format!("r = {} is not instantiable", self.r)))?;
        let s = self.s.to_usize().ok_or_else(|| Error::Budget(format!("s = {} is not instantiable", self.s)))?;
        SchemeParams::with_constant(self.n, self.k, self.d, r, s, self.epsilon, self.delta, self.c_const)
    }
}

fn int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Multiplies `m` by `C`, or divides when `invert`: the default constant
/// `1/(6 ln 2)` is kept symbolic so that it can cancel against `log₂ d`.
fn apply_constant(mut m: LogMonomial, c_const: f64, invert: bool) -> Result<LogMonomial> {
    if c_const.to_bits() == DEFAULT_C.to_bits() {
        if invert {
            m.coeff *= int(6);
            m.ln2_power += 1;
        } else {
            m.coeff /= int(6);
            m.ln2_power -= 1;
        }
    } else {
        let c = decimal_rational(c_const)?;
        if invert {
            m.coeff /= c;
        } else {
            m.coeff *= c;
        }
    }
    Ok(m)
}

/// Closed-form parameters
/// `r = ⌈32(n+2)⁴/(Cε²) · d^{k−1} log₂ d⌉` and
/// `s = ⌊Cε²δ²/(1536(n+2)⁴) · d / log₂ d⌋`, rounded exactly.
///
/// `ε`, `δ` and a non-default `C` are read as the decimal numbers they print
/// as. Logarithms are base 2.
pub fn derive_parameters(
    n: usize,
    k: usize,
    d: usize,
    epsilon: f64,
    delta: f64,
    c_const: f64,
) -> Result<ParameterDerivation> {
    validate_nkd(n, k, d)?;
    validate_unit_interval("epsilon", epsilon)?;
    validate_unit_interval("delta", delta)?;
    if !(c_const > 0.0 && c_const.is_finite()) {
        return Err(Error::Parameter(format!("concentration constant {c_const} must be positive")));
    }
    let eps = decimal_rational(epsilon)?;
    let del = decimal_rational(delta)?;
    let n_plus_2_4 = pow_rational(&int(n as u64 + 2), 4);
    let d_q = int(d as u64);
    let d64 = d as u64;

    // r: 32 (n+2)^4 d^{k-1} / ε² · (ln d / ln 2) / C
    let r_mono = LogMonomial {
        coeff: int(32) * &n_plus_2_4 * pow_rational(&d_q, k as i32 - 1) / (&eps * &eps),
        ln2_power: -1,
        ln_d_power: 1,
        d: d64,
    };
    let r_mono = apply_constant(r_mono, c_const, true)?;

    // s: ε² δ² d / (1536 (n+2)^4) · (ln 2 / ln d) · C
    let s_mono = LogMonomial {
        coeff: &eps * &eps * &del * &del * &d_q / (int(1536) * &n_plus_2_4),
        ln2_power: 1,
        ln_d_power: -1,
        d: d64,
    };
    let s_mono = apply_constant(s_mono, c_const, false)?;

    let r = to_biguint(r_mono.ceil()?);
    let s_int = s_mono.floor()?;
    let s = to_biguint(s_int.clone());

    let dk = pow_rational(&d_q, k as i32);
    let dn = pow_rational(&d_q, n as i32);
    let dk_condition = dk > int(48) / (&del * &del);
    let dn_condition = dn > int(10) * int(n as u64 + 2) / &eps;
    let k1_condition = if k == 1 {
        let lhs = LogMonomial { coeff: d_q.clone(), ln2_power: 1, ln_d_power: -1, d: d64 };
        let rhs = int(2840) * int(2 * n as u64 + 3) / (&del * &del);
        Some(lhs.cmp_rational(&rhs)? == std::cmp::Ordering::Greater)
    } else {
        None
    };
    let s_positive = s_int >= BigInt::one();
    let feasible = dk_condition && dn_condition && k1_condition.unwrap_or(true) && s_positive;
    Ok(ParameterDerivation {
        n,
        k,
        d,
        epsilon,
        delta,
        c_const,
        r,
        s,
        feasibility: Feasibility { dk_condition, dn_condition, k1_condition, s_positive, feasible },
    })
}

/// Cardinality bound `⌈(5/ε)^{2·dim}⌉` of an ε-net of pure states in
/// dimension `dim`, with `ε` read as the decimal it prints as.
pub fn net_cardinality_bound(dim: usize, epsilon: f64) -> Result<BigUint> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Parameter(format!("net epsilon {epsilon} outside (0, 1)")));
    }
    if dim == 0 {
        return Err(Error::Parameter("net dimension must be at least 1".into()));
    }
    let exp = i32::try_from(2 * dim).map_err(|_| Error::Budget("net exponent too large".into()))?;
    let base = int(5) / decimal_rational(epsilon)?;
    Ok(to_biguint(pow_rational(&base, exp).ceil().to_integer()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_case_is_infeasible() {
        let p = derive_parameters(2, 2, 2, 1.0, 1.0, DEFAULT_C).unwrap();
        assert_eq!(p.s, BigUint::from(0u32));
        assert!(!p.feasibility.s_positive);
        assert!(!p.feasibility.feasible);
        // r = ⌈32 · 4^4 · 2 · 6 ln 2⌉ = ⌈98304 ln 2⌉
        assert_eq!(p.r, BigUint::from(68140u32));
    }

    #[test]
    fn dk_boundary_is_strict() {
        // δ = 1, k = 1: d^k = 48 = 48/δ² exactly
        let p = derive_parameters(2, 1, 48, 1.0, 1.0, DEFAULT_C).unwrap();
        assert!(!p.feasibility.dk_condition);
        let p = derive_parameters(2, 1, 49, 1.0, 1.0, DEFAULT_C).unwrap();
        assert!(p.feasibility.dk_condition);
    }

    #[test]
    fn net_bounds() {
        assert_eq!(net_cardinality_bound(1, 0.5).unwrap(), BigUint::from(100u32));
        assert_eq!(net_cardinality_bound(2, 0.5).unwrap(), BigUint::from(10_000u32));
        assert_eq!(net_cardinality_bound(16, 0.1).unwrap(), BigUint::from(50u32).pow(32));
        assert!(net_cardinality_bound(2, 1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(SchemeParams::new(2, 3, 4, 1, 1, 0.5, 0.5).is_err());
        assert!(SchemeParams::new(2, 2, 4, 0, 1, 0.5, 0.5).is_err());
        assert!(SchemeParams::new(2, 2, 4, 1, 17, 0.5, 0.5).is_err());
        assert!(SchemeParams::new(2, 2, 4, 1, 1, 0.0, 0.5).is_err());
        let p = SchemeParams::new(2, 2, 4, 1, 16, 0.5, 0.5).unwrap();
        assert_eq!(p.alpha, 0.0625);
        assert_eq!(p.total_dim(), Some(16));
    }
}
