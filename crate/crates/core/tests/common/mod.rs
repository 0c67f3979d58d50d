//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

fn int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Exact value of the decimal string Rust prints for `x`.
pub fn decimal(x: f64) -> BigRational {
    let text = format!("{x}");
    assert!(!text.contains('e'), "unexpected exponent form {text}");
    let (whole, frac) = text.split_once('.').unwrap_or((&text, ""));
    let digits: BigInt = format!("{whole}{frac}").parse().unwrap();
    BigRational::new(digits, BigInt::from(10u32).pow(frac.len() as u32))
}

/// `[lo, hi]` containing `2 atanh(z) = ln((1+z)/(1-z))` for `0 ≤ z ≤ 1/3`,
/// from `terms` odd powers plus a geometric tail bound.
fn atanh2(z: &BigRational, terms: usize) -> (BigRational, BigRational) {
    let z2 = z * z;
    let mut power = z.clone();
    let mut sum = BigRational::zero();
    for t in 0..terms {
        sum += &power / int(2 * t as u64 + 1);
        power *= &z2;
    }
    // the remaining terms sum to at most z^{2T+1} / ((2T+1)(1 − z²))
    let tail = &power / int(2 * terms as u64 + 1) / (BigRational::one() - &z2);
    let lo = &sum * int(2);
    let hi = (sum + tail) * int(2);
    (lo, hi)
}

fn ln2(terms: usize) -> (BigRational, BigRational) {
    atanh2(&BigRational::new(BigInt::one(), BigInt::from(3)), terms)
}

/// `[lo, hi]` containing `ln x` for an integer `x ≥ 1`.
fn ln_int(x: u64, terms: usize) -> (BigRational, BigRational) {
    let e = 63 - x.leading_zeros() as u64;
    let y = BigRational::new(BigInt::from(x), BigInt::from(1u64) << e);
    let z = (&y - BigRational::one()) / (&y + BigRational::one());
    let (lo_y, hi_y) = atanh2(&z, terms);
    let (lo_2, hi_2) = ln2(terms);
    (lo_y + &lo_2 * int(e), hi_y + &hi_2 * int(e))
}

fn floor(q: &BigRational) -> BigInt {
    q.floor().to_integer()
}

/// Feasibility flags and derived sizes, mirroring the library's report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleDerivation {
    pub r: BigUint,
    pub s: BigUint,
    pub dk_condition: bool,
    pub dn_condition: bool,
    pub k1_condition: Option<bool>,
    pub s_positive: bool,
    pub feasible: bool,
}

/// Evaluates the closed-form sizes at the default constant `1/(6 ln 2)`,
/// where they reduce to
/// `r = ⌈192 (n+2)^4 d^{k−1} ln d / ε²⌉` and
/// `s = ⌊ε² δ² d / (9216 (n+2)^4 ln d)⌋`.
/// Interval arithmetic is refined until every rounding and comparison is
/// decided.
pub fn oracle_derive(n: u64, k: u64, d: u64, eps: f64, delta: f64) -> OracleDerivation {
    let e = decimal(eps);
    let dl = decimal(delta);
    let np2 = int(n + 2).pow(4);
    let dq = int(d);
    let r_coeff = int(192) * &np2 * dq.pow(k as i32 - 1) / (&e * &e);
    let s_coeff = &e * &e * &dl * &dl * &dq / (int(9216) * &np2);
    let k1_rhs = int(2840) * int(2 * n + 3) / (&dl * &dl);

    let mut terms = 40;
    loop {
        let (lo, hi) = ln_int(d, terms);
        let (l2lo, l2hi) = ln2(terms);
        let r_lo = floor(&(&r_coeff * &lo));
        let r_hi = floor(&(&r_coeff * &hi));
        let s_lo = floor(&(&s_coeff / &hi));
        let s_hi = floor(&(&s_coeff / &lo));
        // d ln2 / ln d versus the k = 1 threshold
        let k1 = if k == 1 {
            let lhs_lo = &dq * &l2lo / &hi;
            let lhs_hi = &dq * &l2hi / &lo;
            if lhs_lo > k1_rhs {
                Some(Some(true))
            } else if lhs_hi <= k1_rhs {
                Some(Some(false))
            } else {
                None
            }
        } else {
            Some(None)
        };
        if r_lo == r_hi && s_lo == s_hi {
            if let Some(k1_condition) = k1 {
                let r = (r_lo + BigInt::one()).to_biguint().unwrap();
                let s_int = s_lo;
                let s_positive = s_int >= BigInt::one();
                let s = if s_int.is_negative() { BigUint::zero() } else { s_int.to_biguint().unwrap() };
                let dk_condition = dq.pow(k as i32) > int(48) / (&dl * &dl);
                let dn_condition = dq.pow(n as i32) > int(10) * int(n + 2) / &e;
                let feasible = dk_condition && dn_condition && k1_condition.unwrap_or(true) && s_positive;
                return OracleDerivation { r, s, dk_condition, dn_condition, k1_condition, s_positive, feasible };
            }
        }
        terms *= 2;
        assert!(terms < 1 << 14, "oracle failed to converge for ({n}, {k}, {d}, {eps}, {delta})");
    }
}

/// A deterministic grid of 100 `(n, k, d, ε, δ)` tuples mixing infeasible
/// toy sizes with feasible large ones.
pub fn parameter_grid() -> Vec<(usize, usize, usize, f64, f64)> {
    let mut grid = vec![
        (2, 2, 2, 1.0, 1.0),
        (2, 2, 1_000_000_000_000, 1.0, 1.0),
        (2, 1, 1_000_000_000_000, 1.0, 1.0),
        (3, 2, 1 << 40, 0.5, 1.0),
        (2, 1, 1 << 30, 1.0, 0.9),
        (4, 3, 999_999_999_989, 1.0, 0.75),
    ];
    let ns = [2usize, 3, 4, 6];
    let ds = [2usize, 3, 10, 16, 1000, 65_536, 10_000_019, (1 << 33) + 1, 1_000_000_000_000, 1 << 44];
    let eps = [0.5, 1.0, 0.05, 0.3];
    let dels = [1.0, 0.3, 0.125];
    let mut t = 0usize;
    while grid.len() < 100 {
        let n = ns[t % ns.len()];
        let k = 1 + (t / ns.len()) % n;
        let d = ds[(t * 7 + t / 10) % ds.len()];
        let e = eps[(t / 3) % eps.len()];
        let dl = dels[(t / 5) % dels.len()];
        grid.push((n, k, d, e, dl));
        t += 1;
    }
    grid
}
