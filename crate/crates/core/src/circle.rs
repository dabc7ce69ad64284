//! Exact arithmetic on the unit circle: fractional parts, the distance to
//! the nearest integer, and the objective `f_D(x) = min_d ||x d||`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, is_prime};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest admissible speed. Candidate arithmetic keeps residues below
/// `2 * 2 * MAX_SPEED`, which stays inside `u64`, and cross products in `u128`.
pub const MAX_SPEED: u64 = 1 << 62;

/// A finite set of distinct positive integer speeds, stored increasing.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct SpeedSet(Vec<u64>);

impl SpeedSet {
    /// Builds a set from speeds in any order. Duplicates and zero are errors.
    pub fn new(mut speeds: Vec<u64>) -> Result<Self> {
        if speeds.is_empty() {
            return Err(Error::EmptySpeedSet);
        }
        speeds.sort_unstable();
        for w in speeds.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidParameter(format!("duplicate speed {}", w[0])));
            }
        }
        Self::check_range(&speeds)?;
        Ok(SpeedSet(speeds))
    }

    /// Like [`SpeedSet::new`] but silently merges duplicates, returning how
    /// many were dropped.
    pub fn new_dedup(mut speeds: Vec<u64>) -> Result<(Self, usize)> {
        let before = speeds.len();
        speeds.sort_unstable();
        speeds.dedup();
        let dropped = before - speeds.len();
        Ok((Self::new(speeds)?, dropped))
    }

    /// `{1, 2, ..., k}`.
    pub fn range(k: u64) -> Result<Self> {
        Self::new((1..=k).collect())
    }

    fn check_range(speeds: &[u64]) -> Result<()> {
        for &s in speeds {
            if s == 0 {
                return Err(Error::NonPositiveSpeed(0));
            }
            if s > MAX_SPEED {
                return Err(Error::SpeedTooLarge {
                    speed: s,
                    max: MAX_SPEED,
                });
            }
        }
        Ok(())
    }

    pub fn speeds(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_speed(&self) -> u64 {
        *self.0.last().expect("non-empty")
    }

    pub fn gcd(&self) -> u64 {
        self.0.iter().fold(0, |g, &d| gcd(g, d))
    }

    pub fn all_odd(&self) -> bool {
        self.0.iter().all(|d| d % 2 == 1)
    }

    /// Multiplies every speed by `c`.
    pub fn scaled(&self, c: u64) -> Result<Self> {
        let speeds = self
            .0
            .iter()
            .map(|&d| d.checked_mul(c).ok_or(Error::Overflow("scaled speed set")))
            .collect::<Result<Vec<_>>>()?;
        Self::new(speeds)
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().copied()
    }
}

impl<'de> Deserialize<'de> for SpeedSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Vec::<u64>::deserialize(deserializer)?;
        SpeedSet::new(v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for SpeedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

/// Comma separated, e.g. `1,2,3`.
impl fmt::Display for SpeedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// `||x||`, the distance from `x` to the nearest integer.
pub fn circ_dist(x: &Rational) -> Rational {
    let den = x.denom();
    let r = x.numer().mod_floor(den);
    let other = den - &r;
    Rational::new(r.min(other), den.clone())
}

/// `min_{d in D} ||x d||`.
pub fn min_circ_dist(speeds: &SpeedSet, x: &Rational) -> Rational {
    let den = x.denom();
    let best = speeds
        .iter()
        .map(|d| {
            let r = (x.numer() * BigInt::from(d)).mod_floor(den);
            let other = den - &r;
            r.min(other)
        })
        .min()
        .expect("non-empty speed set");
    Rational::new(best, den.clone())
}

/// Divides out the common factor of all speeds. `kappa` is unchanged since
/// `x -> x / g` maps one problem onto the other.
pub fn normalize(speeds: &SpeedSet) -> SpeedSet {
    let g = speeds.gcd();
    SpeedSet(speeds.iter().map(|d| d / g).collect())
}

/// Best proven lower bound on `kappa(k)`: the trivial `1/(2k)`, Chen's
/// `1/(2k - 1 + 1/(2k - 3))` for `k >= 5`, and Chen-Cusick's `1/(2k - 3)`
/// for `k >= 4` with `2k - 3` prime. Returns the largest that applies.
pub fn known_lower_bound(k: u64) -> Result<Rational> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut best = Rational::new(1, 2 * k);
    if k >= 5 {
        let t = 2 * k - 3;
        // 1 / (2k - 1 + 1/t) = t / ((2k - 1) t + 1)
        let chen = Rational::new(t, (2 * k - 1) * t + 1);
        best = best.max(chen);
    }
    if k >= 4 && is_prime(2 * k - 3) {
        best = best.max(Rational::new(1, 2 * k - 3));
    }
    Ok(best)
}

/// The conjectured optimum `1/(k + 1)`.
pub fn conjectured_bound(k: u64) -> Result<Rational> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    Ok(Rational::new(1, k + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn set(v: &[u64]) -> SpeedSet {
        SpeedSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn circ_dist_examples() {
        assert_eq!(circ_dist(&q(3, 4)), q(1, 4));
        assert_eq!(circ_dist(&q(7, 2)), q(1, 2));
        assert_eq!(circ_dist(&q(-2, 5)), q(2, 5));
        assert_eq!(circ_dist(&q(5, 1)), q(0, 1));
    }

    #[test]
    fn min_circ_dist_examples() {
        assert_eq!(min_circ_dist(&set(&[1, 2]), &q(1, 3)), q(1, 3));
        assert_eq!(min_circ_dist(&set(&[1, 3, 5]), &q(1, 2)), q(1, 2));
        assert_eq!(min_circ_dist(&set(&[1, 2, 3]), &q(1, 2)), q(0, 1));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&set(&[2, 4, 6])), set(&[1, 2, 3]));
        assert_eq!(normalize(&set(&[1, 2])), set(&[1, 2]));
        assert_eq!(normalize(&set(&[10])), set(&[1]));
    }

    #[test]
    fn speed_set_validation() {
        assert!(matches!(SpeedSet::new(vec![]), Err(Error::EmptySpeedSet)));
        assert!(matches!(
            SpeedSet::new(vec![0, 1]),
            Err(Error::NonPositiveSpeed(0))
        ));
        assert!(SpeedSet::new(vec![3, 3]).is_err());
        assert!(SpeedSet::new(vec![MAX_SPEED + 1]).is_err());
        let (s, dropped) = SpeedSet::new_dedup(vec![3, 1, 3, 2]).unwrap();
        assert_eq!(s, set(&[1, 2, 3]));
        assert_eq!(dropped, 1);
        assert_eq!(s.to_string(), "1,2,3");
        let json: SpeedSet = serde_json::from_str("[5,1]").unwrap();
        assert_eq!(json, set(&[1, 5]));
        assert!(serde_json::from_str::<SpeedSet>("[1,1]").is_err());
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(known_lower_bound(1).unwrap(), q(1, 2));
        assert_eq!(known_lower_bound(2).unwrap(), q(1, 4));
        assert_eq!(known_lower_bound(4).unwrap(), q(1, 5));
        // k = 5: Chen gives 7/64, 2k-3 = 7 is prime so 1/7 wins.
        assert_eq!(known_lower_bound(5).unwrap(), q(1, 7));
        // k = 6: 2k-3 = 9 composite, Chen gives 9/100 > 1/12.
        assert_eq!(known_lower_bound(6).unwrap(), q(9, 100));
        assert!(known_lower_bound(0).is_err());
    }

    #[test]
    fn conjectured_examples() {
        assert_eq!(conjectured_bound(1).unwrap(), q(1, 2));
        assert_eq!(conjectured_bound(2).unwrap(), q(1, 3));
        assert_eq!(conjectured_bound(6).unwrap(), q(1, 7));
    }

    #[test]
    fn proven_bound_below_conjecture() {
        for k in 1..=100 {
            assert!(
                known_lower_bound(k).unwrap() <= conjectured_bound(k).unwrap(),
                "k={k}"
            );
        }
    }

    proptest! {
        #[test]
        fn circ_dist_periodic_even_bounded(n in -10_000i64..10_000, d in 1i64..500, m in -50i64..50) {
            let x = q(n, d);
            let v = circ_dist(&x);
            prop_assert_eq!(&v, &circ_dist(&(&x + &Rational::from_integer(m))));
            prop_assert_eq!(&v, &circ_dist(&-x));
            prop_assert!(v >= Rational::zero() && v <= Rational::half());
        }

        #[test]
        fn normalize_commutes_with_scaling(
            base in proptest::collection::btree_set(1u64..60, 1..5),
            g in 1u64..7,
            n in -300i64..300,
            d in 1i64..300,
        ) {
            let scaled = SpeedSet::new(base.iter().map(|b| b * g).collect()).unwrap();
            let g = scaled.gcd();
            let x = q(n, d);
            let xg = &x * &Rational::from_integer(g);
            prop_assert_eq!(min_circ_dist(&normalize(&scaled), &xg), min_circ_dist(&scaled, &x));
        }
    }
}
