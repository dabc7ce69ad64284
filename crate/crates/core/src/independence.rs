//! L-independence in `Z_p`.
//!
//! `D` is L-independent when no coefficient vector `x != 0` with
//! `sum ||x_i||_p <= L` solves `sum d_i x_i = 0 (mod p)`. With `L < p/2` the
//! coefficients are exactly the signed integers of the L1 ball, so the search
//! walks that ball instead of `Z_p^k`. Since `x` and `-x` are both relations,
//! only vectors whose first nonzero coordinate is positive are visited, in
//! lexicographic order; the first relation found is the witness.

use serde::{Deserialize, Serialize};

use crate::arith::{binomial, inv_mod_prime, is_prime, mul_mod};
use crate::circle::SpeedSet;
use crate::error::{Error, Result};
use crate::experiments::{derive_seed, sample_speed_set};
use crate::rational::Rational;

/// Largest `C(p-1, k)` that [`count_dependent_subsets`] will enumerate.
pub const SUBSET_GUARD: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub p: u64,
    pub l: u64,
    pub independent: bool,
    /// First relation in canonical order, aligned with the sorted speeds.
    pub witness: Option<Vec<i64>>,
    pub vectors_checked: u64,
}

/// `||a||_p = min(a, p - a)`.
pub fn norm_p(a: u64, p: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if a >= p {
        return Err(Error::ResidueOutOfRange { a, p });
    }
    Ok(a.min(p - a))
}

fn check_modulus(p: u64, l: u64) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if l == 0 {
        return Err(Error::InvalidParameter("L must be positive".into()));
    }
    if l.checked_mul(2).is_none_or(|two_l| two_l >= p) {
        return Err(Error::BoundTooLarge { l, p });
    }
    Ok(())
}

/// Reduces `D` modulo `p`, rejecting zero and colliding residues.
pub fn residues(speeds: &SpeedSet, p: u64) -> Result<Vec<u64>> {
    let mut seen: Vec<(u64, u64)> = Vec::with_capacity(speeds.len());
    for d in speeds.iter() {
        let r = d % p;
        if r == 0 {
            return Err(Error::ZeroResidue { speed: d, p });
        }
        if let Some(&(_, first)) = seen.iter().find(|(res, _)| *res == r) {
            return Err(Error::DuplicateResidue {
                first,
                second: d,
                p,
            });
        }
        seen.push((r, d));
    }
    Ok(seen.into_iter().map(|(r, _)| r).collect())
}

struct Search<'a> {
    p: u64,
    res: &'a [u64],
    last_inv: u64,
    coeffs: Vec<i64>,
    checked: u64,
}

impl Search<'_> {
    #[inline]
    fn add(&self, sum: u64, x: i64, d: u64) -> u64 {
        let term = mul_mod(x.unsigned_abs() % self.p, d, self.p);
        if x >= 0 {
            (sum + term) % self.p
        } else {
            (sum + self.p - term) % self.p
        }
    }

    /// Depth-first over coordinates `i..`, with `budget` of L1 norm left.
    fn visit(&mut self, i: usize, budget: u64, sum: u64, nonzero: bool) -> bool {
        let last = self.res.len() - 1;
        let b = budget as i64;
        if i == last {
            return self.solve_last(b, sum, nonzero);
        }
        let lo = if nonzero { -b } else { 0 };
        for x in lo..=b {
            self.coeffs[i] = x;
            let s = self.add(sum, x, self.res[i]);
            if self.visit(i + 1, budget - x.unsigned_abs(), s, nonzero || x != 0) {
                return true;
            }
        }
        self.coeffs[i] = 0;
        false
    }

    /// The last coefficient is forced: `x = -sum / d_k (mod p)`, unique in
    /// `[-b, b]` because `2b < p`.
    fn solve_last(&mut self, b: i64, sum: u64, nonzero: bool) -> bool {
        let lo = if nonzero { -b } else { 1 };
        let width = (b - lo + 1).max(0) as u64;
        let target = mul_mod((self.p - sum) % self.p, self.last_inv, self.p);
        let half = self.p / 2;
        let x = if target > half {
            -((self.p - target) as i64)
        } else {
            target as i64
        };
        if x >= lo && x <= b {
            self.checked += (x - lo + 1) as u64;
            let last = self.res.len() - 1;
            self.coeffs[last] = x;
            true
        } else {
            self.checked += width;
            false
        }
    }
}

/// Searches the L1 ball of radius `l` for a relation among `D` in `Z_p`.
pub fn is_l_independent(speeds: &SpeedSet, p: u64, l: u64) -> Result<IndependenceReport> {
    check_modulus(p, l)?;
    let res = residues(speeds, p)?;
    Ok(search(&res, p, l))
}

fn search(res: &[u64], p: u64, l: u64) -> IndependenceReport {
    let last_inv = inv_mod_prime(*res.last().expect("non-empty"), p);
    let mut s = Search {
        p,
        res,
        last_inv,
        coeffs: vec![0; res.len()],
        checked: 0,
    };
    let found = s.visit(0, l, 0, false);
    IndependenceReport {
        p,
        l,
        independent: !found,
        witness: found.then(|| s.coeffs.clone()),
        vectors_checked: s.checked,
    }
}

/// Checks a claimed relation directly: nonzero, `sum |x_i| <= l` and
/// `sum d_i x_i = 0 (mod p)`.
pub fn verify_relation(speeds: &SpeedSet, p: u64, l: u64, coeffs: &[i64]) -> bool {
    if coeffs.len() != speeds.len() || coeffs.iter().all(|&x| x == 0) {
        return false;
    }
    let norm: u128 = coeffs.iter().map(|x| x.unsigned_abs() as u128).sum();
    if norm > l as u128 {
        return false;
    }
    let total: i128 = speeds
        .iter()
        .zip(coeffs)
        .map(|(d, &x)| (d as i128 % p as i128) * x as i128)
        .sum();
    total.rem_euclid(p as i128) == 0
}

/// `(2L + 1)^k * C(p - 1, k - 1)`, an upper bound on the number of
/// k-subsets of `Z_p^*` that are not L-independent.
pub fn dependent_subset_bound(p: u64, k: u64, l: u64) -> Option<u128> {
    let ball = (2 * l as u128 + 1).checked_pow(k as u32)?;
    ball.checked_mul(binomial(p - 1, k.checked_sub(1)?)?)
}

/// Exhaustive count of k-subsets of `{1, ..., p-1}` that are not
/// L-independent.
pub fn count_dependent_subsets(p: u64, k: u64, l: u64) -> Result<u64> {
    check_modulus(p, l)?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let total = binomial(p - 1, k).ok_or(Error::Overflow("subset count"))?;
    if total > SUBSET_GUARD {
        return Err(Error::GuardExceeded(format!(
            "C({}, {k}) = {total} subsets exceeds {SUBSET_GUARD}",
            p - 1
        )));
    }
    if k > p - 1 {
        return Ok(0);
    }
    let k = k as usize;
    let mut subset: Vec<u64> = (1..=k as u64).collect();
    let mut dependent = 0;
    loop {
        if !search(&subset, p, l).independent {
            dependent += 1;
        }
        // next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(dependent);
            }
            i -= 1;
            if subset[i] < p - 1 - (k - 1 - i) as u64 {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

/// `(2L + 1)^k * k / (p - k)`, the bound on the dependent fraction.
pub fn dependent_fraction_bound(p: u64, k: u64, l: u64) -> Result<Rational> {
    if p <= k {
        return Err(Error::InvalidParameter(format!(
            "need p > k, got p={p}, k={k}"
        )));
    }
    let ball = Rational::from_integer(2 * l + 1).pow(k as u32);
    Ok(ball * Rational::new(k, p - k))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionEstimate {
    pub p: u64,
    pub k: u64,
    pub l: u64,
    pub seed: u64,
    pub trials: u64,
    pub independent: u64,
    pub fraction: f64,
    pub stderr: f64,
}

/// Binomial standard error `sqrt(f (1 - f) / n)`.
pub fn binomial_stderr(successes: u64, trials: u64) -> f64 {
    let f = successes as f64 / trials as f64;
    (f * (1.0 - f) / trials as f64).sqrt()
}

/// Monte Carlo estimate of the L-independent fraction of k-subsets of
/// `{1, ..., p-1}`. Trial `i` draws its subset from `derive_seed(seed, p, i)`.
pub fn sample_independent_fraction(
    p: u64,
    k: u64,
    l: u64,
    trials: u64,
    seed: u64,
) -> Result<FractionEstimate> {
    check_modulus(p, l)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut independent = 0;
    for i in 0..trials {
        let d = sample_speed_set(p - 1, k, derive_seed(seed, p, i))?;
        if is_l_independent(&d, p, l)?.independent {
            independent += 1;
        }
    }
    Ok(FractionEstimate {
        p,
        k,
        l,
        seed,
        trials,
        independent,
        fraction: independent as f64 / trials as f64,
        stderr: binomial_stderr(independent, trials),
    })
}
