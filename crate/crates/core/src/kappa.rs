//! Exact computation of `kappa(D) = sup_x min_d ||x d||`.
//!
//! `f_D` is continuous and piecewise linear on the circle, so its maximum is
//! attained at a local maximum: either the peak of a single `||x d||` or the
//! crossing of an ascending branch with a descending one. Those points form
//! finitely many arithmetic progressions ("families") of rationals sharing a
//! denominator; each family is scanned with incrementally updated residues,
//! so the inner loop is additions and comparisons only.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::circle::{min_circ_dist, SpeedSet};
use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KappaResult {
    pub value: Rational,
    /// Smallest `x` in `[0, 1)` with `f_D(x) = value`.
    pub witness: Rational,
    pub candidates_evaluated: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum FamilyKind {
    Peak,
    Sum,
    Difference,
}

/// Numerators `start, start + step, ... < den` over a common denominator.
#[derive(Clone, Copy, Debug)]
struct Family {
    den: u64,
    start: u64,
    step: u64,
    kind: FamilyKind,
}

impl Family {
    fn len(&self) -> u64 {
        if self.start >= self.den {
            0
        } else {
            (self.den - self.start - 1) / self.step + 1
        }
    }
}

fn families(speeds: &SpeedSet) -> Vec<Family> {
    let d = speeds.speeds();
    let mut out = Vec::with_capacity(d.len() * d.len());
    for &di in d {
        out.push(Family {
            den: 2 * di,
            start: 1,
            step: 2,
            kind: FamilyKind::Peak,
        });
    }
    for (i, &di) in d.iter().enumerate() {
        for &dj in &d[i + 1..] {
            out.push(Family {
                den: di + dj,
                start: 1,
                step: 1,
                kind: FamilyKind::Sum,
            });
            // dj > di; m / (dj - di) for 0 < m < dj - di
            if dj - di > 1 {
                out.push(Family {
                    den: dj - di,
                    start: 1,
                    step: 1,
                    kind: FamilyKind::Difference,
                });
            }
        }
    }
    out
}

/// Residue state of every speed along one family.
struct Scanner {
    den: u64,
    residues: Vec<u64>,
    increments: Vec<u64>,
}

impl Scanner {
    fn new(family: &Family, speeds: &SpeedSet) -> Self {
        let den = family.den;
        let wide = den as u128;
        let residues = speeds
            .iter()
            .map(|d| ((family.start as u128 * d as u128) % wide) as u64)
            .collect();
        let increments = speeds
            .iter()
            .map(|d| ((family.step as u128 * d as u128) % wide) as u64)
            .collect();
        Scanner {
            den,
            residues,
            increments,
        }
    }

    /// Numerator of `f_D` at the current point, over `den`.
    #[inline]
    fn value(&self) -> u64 {
        let den = self.den;
        self.residues
            .iter()
            .map(|&r| r.min(den - r))
            .min()
            .unwrap_or(0)
    }

    /// `f_D` numerator if every speed clears `tau`, else `None`.
    #[inline]
    fn value_at_least(&self, tau: u64) -> Option<u64> {
        let den = self.den;
        let mut v = u64::MAX;
        for &r in &self.residues {
            let a = r.min(den - r);
            if a < tau {
                return None;
            }
            v = v.min(a);
        }
        Some(v)
    }

    #[inline]
    fn advance(&mut self) {
        let den = self.den;
        for (r, &inc) in self.residues.iter_mut().zip(&self.increments) {
            *r += inc;
            if *r >= den {
                *r -= den;
            }
        }
    }
}

/// `ceil(theta * den)` for `theta` in `[0, 1/2]`.
fn scaled_ceil(theta: &Rational, den: u64) -> u64 {
    let t = theta * &Rational::from_integer(den);
    t.ceil()
        .to_u64()
        .expect("theta <= 1/2 keeps the bound below den")
}

/// Best `(value, witness)` so far, both as unreduced fractions.
#[derive(Clone, Copy, Debug)]
struct Best {
    num: u64,
    den: u64,
    wnum: u64,
    wden: u64,
}

impl Best {
    /// Candidate `v/q` at witness `m/q` beats `self` under
    /// (larger value, then smaller witness).
    fn beaten_by(&self, v: u64, m: u64, q: u64) -> bool {
        let lhs = v as u128 * self.den as u128;
        let rhs = self.num as u128 * q as u128;
        match lhs.cmp(&rhs) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => (m as u128 * self.wden as u128) < (self.wnum as u128 * q as u128),
        }
    }

    fn tau(&self, q: u64) -> u64 {
        let n = self.num as u128 * q as u128;
        let d = self.den as u128;
        n.div_ceil(d) as u64
    }
}

/// All candidate points of `f_D`, reduced, deduplicated and sorted. Every
/// local maximum of `f_D` is among them.
pub fn candidate_points(speeds: &SpeedSet) -> Vec<Rational> {
    let mut set = BTreeSet::new();
    for fam in families(speeds) {
        let mut m = fam.start;
        while m < fam.den {
            set.insert(Rational::new(m, fam.den));
            m += fam.step;
        }
    }
    set.into_iter().collect()
}

/// Exact `kappa(D)` with its smallest maximizing witness.
pub fn kappa_exact(speeds: &SpeedSet) -> KappaResult {
    let mut fams = families(speeds);
    // Peaks first: they seed a good bound for pruning the crossings.
    fams.sort_by_key(|f| (f.kind, f.den));
    let mut best: Option<Best> = None;
    let mut evaluated = 0u64;
    for fam in &fams {
        let mut scan = Scanner::new(fam, speeds);
        let q = fam.den;
        let mut tau = best.map_or(0, |b| b.tau(q));
        let mut m = fam.start;
        while m < q {
            if let Some(v) = scan.value_at_least(tau) {
                match best {
                    Some(b) if !b.beaten_by(v, m, q) => {}
                    _ => {
                        best = Some(Best {
                            num: v,
                            den: q,
                            wnum: m,
                            wden: q,
                        })
                    }
                }
                // Later points in this family only tie with a larger witness.
                tau = v + 1;
            }
            scan.advance();
            m += fam.step;
        }
        evaluated += fam.len();
    }
    let b = best.expect("every speed set has at least one peak");
    KappaResult {
        value: Rational::new(b.num, b.den),
        witness: Rational::new(b.wnum, b.wden),
        candidates_evaluated: evaluated,
    }
}

/// `max_j f_D(j / G)` over the uniform grid, exact.
pub fn kappa_grid(speeds: &SpeedSet, grid: u64) -> Result<Rational> {
    if grid < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid size must be at least 2, got {grid}"
        )));
    }
    let fam = Family {
        den: grid,
        start: 0,
        step: 1,
        kind: FamilyKind::Peak,
    };
    let mut scan = Scanner::new(&fam, speeds);
    let mut best = 0;
    for _ in 0..grid {
        best = best.max(scan.value());
        scan.advance();
    }
    Ok(Rational::new(best, grid))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub reached: bool,
    pub witness: Option<Rational>,
    pub candidates_evaluated: u64,
}

/// Whether `kappa(D) >= theta`, scanning families by increasing denominator
/// and stopping at the first candidate that clears the threshold.
pub fn kappa_at_least(speeds: &SpeedSet, theta: &Rational) -> Result<ThresholdResult> {
    if theta.is_negative() || *theta > Rational::half() {
        return Err(Error::ThresholdOutOfRange(theta.to_string()));
    }
    let mut fams = families(speeds);
    fams.sort_by_key(|f| (f.den, f.kind));
    let mut evaluated = 0u64;
    for fam in &fams {
        let q = fam.den;
        let tau = scaled_ceil(theta, q);
        let mut scan = Scanner::new(fam, speeds);
        let mut m = fam.start;
        while m < q {
            evaluated += 1;
            if scan.value_at_least(tau).is_some() {
                return Ok(ThresholdResult {
                    reached: true,
                    witness: Some(Rational::new(m, q)),
                    candidates_evaluated: evaluated,
                });
            }
            scan.advance();
            m += fam.step;
        }
    }
    Ok(ThresholdResult {
        reached: false,
        witness: None,
        candidates_evaluated: evaluated,
    })
}

/// Slow exact reference: evaluates `f_D` at every candidate with
/// arbitrary-precision rationals.
pub fn kappa_by_candidates(speeds: &SpeedSet) -> (Rational, Rational) {
    let mut best: Option<(Rational, Rational)> = None;
    for x in candidate_points(speeds) {
        let v = min_circ_dist(speeds, &x);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, x));
        }
    }
    best.expect("non-empty candidate set")
}

impl KappaResult {
    /// Re-evaluates the objective at the witness.
    pub fn verify(&self, speeds: &SpeedSet) -> bool {
        min_circ_dist(speeds, &self.witness) == self.value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::known_lower_bound;
    use proptest::prelude::*;

    fn set(v: &[u64]) -> SpeedSet {
        SpeedSet::new(v.to_vec()).unwrap()
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn candidates_single_speed() {
        assert_eq!(candidate_points(&set(&[1])), vec![q(1, 2)]);
    }

    #[test]
    fn candidates_one_two() {
        let c = candidate_points(&set(&[1, 2]));
        for x in [q(1, 3), q(2, 3), q(1, 2), q(1, 4), q(3, 4)] {
            assert!(c.contains(&x), "{x} missing");
        }
        assert_eq!(c.len(), 5);
    }

    #[test]
    fn candidates_one_three() {
        assert!(candidate_points(&set(&[1, 3])).contains(&q(1, 2)));
    }

    #[test]
    fn sharp_sets() {
        for k in 1..=8 {
            let r = kappa_exact(&SpeedSet::range(k).unwrap());
            assert_eq!(r.value, Rational::new(1, k + 1), "k={k}");
        }
    }

    #[test]
    fn single_runner() {
        for d in [1u64, 2, 7, 1000] {
            let r = kappa_exact(&set(&[d]));
            assert_eq!(r.value, q(1, 2));
            assert_eq!(r.witness, Rational::new(1, 2 * d));
        }
    }

    #[test]
    fn odd_speeds() {
        let r = kappa_exact(&set(&[1, 3, 5]));
        assert_eq!(r.value, q(1, 2));
        assert_eq!(r.witness, q(1, 2));
    }

    #[test]
    fn frozen_oracle_values() {
        // Values from exhaustive evaluation on the lcm grid of all candidate
        // denominators, computed outside this crate.
        let cases: [(&[u64], Rational, Rational); 5] = [
            (&[3, 4, 5], q(3, 8), q(1, 8)),
            (&[2, 3], q(2, 5), q(1, 5)),
            (&[5, 7, 12], q(6, 19), q(9, 19)),
            (&[4, 9], q(6, 13), q(5, 13)),
            (&[1, 2, 3, 4], q(1, 5), q(1, 5)),
        ];
        for (d, value, witness) in cases {
            let r = kappa_exact(&set(d));
            assert_eq!(
                (r.value.clone(), r.witness.clone()),
                (value, witness),
                "{d:?}"
            );
            assert!(r.verify(&set(d)));
        }
    }

    #[test]
    fn three_four_five_against_grid() {
        let d = set(&[3, 4, 5]);
        let exact = kappa_exact(&d).value;
        let grid = kappa_grid(&d, 1_000_000).unwrap();
        assert!(grid <= exact);
        assert!(&exact - &grid <= q(5, 1_000_000));
    }

    #[test]
    fn grid_examples() {
        assert_eq!(kappa_grid(&set(&[1]), 2).unwrap(), q(1, 2));
        assert_eq!(kappa_grid(&set(&[1, 2]), 3).unwrap(), q(1, 3));
        assert_eq!(kappa_grid(&set(&[1, 2]), 2).unwrap(), q(0, 1));
        assert!(kappa_grid(&set(&[1]), 1).is_err());
    }

    #[test]
    fn threshold_examples() {
        let r = kappa_at_least(&set(&[1, 3, 5]), &q(1, 2)).unwrap();
        assert!(r.reached);
        assert_eq!(r.witness, Some(q(1, 2)));
        assert!(!kappa_at_least(&set(&[1, 2]), &q(2, 5)).unwrap().reached);
        assert!(kappa_at_least(&set(&[1, 2]), &q(1, 3)).unwrap().reached);
        assert!(kappa_at_least(&set(&[1, 2]), &q(3, 5)).is_err());
        assert!(kappa_at_least(&set(&[1, 2]), &q(-1, 5)).is_err());
    }

    #[test]
    fn candidate_count_matches_families() {
        let d = set(&[3, 4, 5]);
        // peaks 3+4+5, sums 7+8+9 minus one each, diffs (1->none, 2->1, 1->none)
        let r = kappa_exact(&d);
        assert_eq!(r.candidates_evaluated, 12 + (6 + 7 + 8) + 1);
    }

    fn small_set() -> impl Strategy<Value = SpeedSet> {
        proptest::collection::btree_set(1u64..60, 1..5)
            .prop_map(|s| SpeedSet::new(s.into_iter().collect()).unwrap())
    }

    proptest! {
        #[test]
        fn matches_slow_reference(d in small_set()) {
            let fast = kappa_exact(&d);
            let (value, witness) = kappa_by_candidates(&d);
            prop_assert_eq!(&fast.value, &value);
            prop_assert_eq!(&fast.witness, &witness);
            prop_assert!(fast.verify(&d));
        }

        #[test]
        fn dominates_grid(d in small_set(), g in 2u64..3000) {
            let exact = kappa_exact(&d).value;
            let grid = kappa_grid(&d, g).unwrap();
            prop_assert!(grid <= exact);
            prop_assert!(&exact - &grid <= Rational::new(d.max_speed(), g));
        }

        #[test]
        fn scale_invariant(d in small_set(), c in prop::sample::select(vec![2u64, 3, 5])) {
            prop_assert_eq!(kappa_exact(&d).value, kappa_exact(&d.scaled(c).unwrap()).value);
        }

        #[test]
        fn above_known_bound(d in small_set()) {
            let v = kappa_exact(&d).value;
            prop_assert!(v >= known_lower_bound(d.len() as u64).unwrap());
            prop_assert!(v >= Rational::new(1, 2 * d.len() as u64));
            prop_assert!(v <= Rational::half());
        }

        #[test]
        fn odd_sets_reach_half(s in proptest::collection::btree_set(0u64..40, 1..5)) {
            let d = SpeedSet::new(s.into_iter().map(|x| 2 * x + 1).collect()).unwrap();
            prop_assert_eq!(kappa_exact(&d).value, Rational::half());
        }

        #[test]
        fn threshold_agrees_with_exact(d in small_set(), num in 0u64..50, den in 100u64..101) {
            let theta = Rational::new(num, den);
            let exact = kappa_exact(&d).value;
            let r = kappa_at_least(&d, &theta).unwrap();
            prop_assert_eq!(r.reached, exact >= theta);
            if let Some(w) = r.witness {
                prop_assert!(min_circ_dist(&d, &w) >= theta);
            }
        }
    }
}
