//! Colorings of the integer distance graph `G(D)`: vertices are positive
//! integers, `a ~ b` iff `|a - b| in D`.
//!
//! A witness `t` with `min_d ||t d|| = kappa(D)` colors `a` by the interval
//! `[(i-1)/N, i/N)` that contains `{t a}`, `N = ceil(1/kappa(D))`. Two
//! vertices of one color have `||t (a - b)|| < 1/N <= kappa(D)`, so `a - b`
//! cannot be a speed.

use std::io::Write;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::circle::SpeedSet;
use crate::kappa::kappa_exact;
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoringResult {
    #[serde(rename = "D")]
    pub speeds: SpeedSet,
    pub kappa: Rational,
    /// Number of colors `N = ceil(1/kappa)`.
    pub n_colors: u64,
    pub t: Rational,
    /// Vertices `1..=M`.
    pub window: u64,
    /// `colors[a - 1]` is the color of vertex `a`, in `1..=N`.
    pub colors: Vec<u64>,
    pub violations: Vec<(u64, u64)>,
}

impl ColoringResult {
    pub fn color(&self, a: u64) -> u64 {
        self.colors[(a - 1) as usize]
    }

    pub fn is_proper(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn colors_used(&self) -> usize {
        let mut seen: Vec<u64> = self.colors.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// `vertex,color` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["vertex", "color"])?;
        for (i, c) in self.colors.iter().enumerate() {
            w.write_record([(i + 1).to_string(), c.to_string()])?;
        }
        w.flush()
    }
}

fn ceil_recip(kappa: &Rational) -> u64 {
    kappa.recip().ceil().to_u64().expect("kappa >= 1/(2k)")
}

/// The interval coloring induced by the smallest `kappa` witness.
pub fn build_coloring(speeds: &SpeedSet, window: u64) -> ColoringResult {
    let kappa = kappa_exact(speeds);
    let n = ceil_recip(&kappa.value);
    let t = kappa.witness;
    let num = t.numer().to_u64().expect("witness in [0, 1)") as u128;
    let den = t.denom().to_u64().expect("witness denominator fits") as u128;
    // {t a} = (num a mod den) / den; color = floor({t a} N) + 1
    let colors: Vec<u64> = (1..=window as u128)
        .map(|a| ((num * a % den) * n as u128 / den) as u64 + 1)
        .collect();
    let violations = verify_proper(speeds, &colors);
    ColoringResult {
        speeds: speeds.clone(),
        kappa: kappa.value,
        n_colors: n,
        t,
        window,
        colors,
        violations,
    }
}

/// Every edge `(a, b)`, `a < b <= M`, whose endpoints share a color.
/// `colors[a - 1]` colors vertex `a`.
pub fn verify_proper(speeds: &SpeedSet, colors: &[u64]) -> Vec<(u64, u64)> {
    let m = colors.len() as u64;
    let mut out = Vec::new();
    for a in 1..=m {
        for d in speeds.iter() {
            let Some(b) = a.checked_add(d).filter(|&b| b <= m) else {
                continue;
            };
            if colors[(a - 1) as usize] == colors[(b - 1) as usize] {
                out.push((a, b));
            }
        }
    }
    out.sort_unstable();
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChiReport {
    pub kappa: Rational,
    /// `ceil(1/kappa(D))`.
    pub n_colors: u64,
    /// `|D| + 1`.
    pub trivial_bound: u64,
    pub effective_bound: u64,
}

pub fn chi_upper_report(speeds: &SpeedSet) -> ChiReport {
    let kappa = kappa_exact(speeds).value;
    let n_colors = ceil_recip(&kappa);
    let trivial_bound = speeds.len() as u64 + 1;
    ChiReport {
        kappa,
        n_colors,
        trivial_bound,
        effective_bound: n_colors.min(trivial_bound),
    }
}

/// First-fit over `1..=M` in natural order: each vertex takes the least color
/// unused by its already-colored neighbours `a - d`.
pub fn greedy_coloring(speeds: &SpeedSet, window: u64) -> Vec<u64> {
    let mut colors: Vec<u64> = Vec::with_capacity(window as usize);
    let mut taken: Vec<u64> = Vec::with_capacity(speeds.len());
    for a in 1..=window {
        taken.clear();
        taken.extend(
            speeds
                .iter()
                .filter(|&d| d < a)
                .map(|d| colors[(a - d - 1) as usize]),
        );
        let c = (1..)
            .find(|c| !taken.contains(c))
            .expect("finitely many neighbours");
        colors.push(c);
    }
    colors
}

/// Colors used by [`greedy_coloring`].
pub fn greedy_chromatic_upper(speeds: &SpeedSet, window: u64) -> u64 {
    greedy_coloring(speeds, window)
        .into_iter()
        .max()
        .unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoringReport {
    #[serde(rename = "D")]
    pub speeds: SpeedSet,
    pub kappa_num: u64,
    pub kappa_den: u64,
    #[serde(rename = "N")]
    pub n_colors: u64,
    pub trivial_bound: u64,
    pub greedy_bound: u64,
    #[serde(rename = "M")]
    pub window: u64,
    pub proper: bool,
}

pub fn coloring_report(coloring: &ColoringResult) -> ColoringReport {
    ColoringReport {
        speeds: coloring.speeds.clone(),
        kappa_num: coloring.kappa.numer().to_u64().expect("kappa <= 1/2"),
        kappa_den: coloring.kappa.denom().to_u64().expect("denominator fits"),
        n_colors: coloring.n_colors,
        trivial_bound: coloring.speeds.len() as u64 + 1,
        greedy_bound: greedy_chromatic_upper(&coloring.speeds, coloring.window),
        window: coloring.window,
        proper: coloring.is_proper(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[u64]) -> SpeedSet {
        SpeedSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn one_two() {
        let c = build_coloring(&set(&[1, 2]), 100);
        assert_eq!(c.n_colors, 3);
        assert_eq!(c.t, Rational::new(1, 3));
        for a in 1..=100 {
            assert_eq!(c.color(a), a % 3 + 1);
        }
        assert!(c.is_proper());
    }

    #[test]
    fn single_speed_alternates() {
        let c = build_coloring(&set(&[1]), 10);
        assert_eq!(c.n_colors, 2);
        assert_eq!(c.t, Rational::half());
        assert_eq!(c.colors, vec![2, 1, 2, 1, 2, 1, 2, 1, 2, 1]);
        assert!(c.is_proper());
    }

    #[test]
    fn odd_set_parity() {
        let c = build_coloring(&set(&[1, 3, 7, 15]), 100);
        assert_eq!(c.n_colors, 2);
        for a in 1..=100 {
            assert_eq!(c.color(a), if a % 2 == 1 { 2 } else { 1 });
        }
        assert!(c.is_proper());
    }

    #[test]
    fn violations_examples() {
        assert_eq!(verify_proper(&set(&[1]), &[1, 1, 1]), vec![(1, 2), (2, 3)]);
        let parity: Vec<u64> = (1..=10).map(|a| a % 2).collect();
        let v = verify_proper(&set(&[2]), &parity);
        assert_eq!(v, (1..=8).map(|a| (a, a + 2)).collect::<Vec<_>>());
    }

    #[test]
    fn chi_reports() {
        for k in 1..=6 {
            let r = chi_upper_report(&SpeedSet::range(k).unwrap());
            assert_eq!(r.n_colors, k + 1);
            assert_eq!(r.trivial_bound, k + 1);
        }
        assert_eq!(chi_upper_report(&set(&[3, 5, 9])).n_colors, 2);
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_chromatic_upper(&set(&[1]), 50), 2);
        assert_eq!(greedy_chromatic_upper(&set(&[1, 2]), 50), 3);
        assert!(greedy_chromatic_upper(&set(&[2, 4]), 50) <= 3);
        let g = greedy_coloring(&set(&[2, 5, 7]), 300);
        assert!(verify_proper(&set(&[2, 5, 7]), &g).is_empty());
    }

    #[test]
    fn boundary_vertices_stay_proper() {
        // t = 1/3 with N = 3 puts {t a} exactly on interval boundaries.
        let c = build_coloring(&set(&[1, 2]), 30);
        assert_eq!(c.color(3), 1);
        assert!(c.is_proper());
    }

    #[test]
    fn report_fields() {
        let c = build_coloring(&set(&[1, 2]), 50);
        let r = coloring_report(&c);
        assert_eq!(
            (
                r.kappa_num,
                r.kappa_den,
                r.n_colors,
                r.trivial_bound,
                r.greedy_bound
            ),
            (1, 3, 3, 3, 3)
        );
        assert!(r.proper);
        let json = serde_json::to_value(&r).unwrap();
        for key in [
            "D",
            "kappa_num",
            "kappa_den",
            "N",
            "trivial_bound",
            "greedy_bound",
            "M",
            "proper",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("vertex,color\n1,2\n2,3\n3,1\n"));
    }

    proptest! {
        #[test]
        fn construction_is_proper(d in proptest::collection::btree_set(1u64..300, 1..5)) {
            let d = SpeedSet::new(d.into_iter().collect()).unwrap();
            let c = build_coloring(&d, 600);
            prop_assert!(c.is_proper());
            prop_assert!(c.colors.iter().all(|&x| x >= 1 && x <= c.n_colors));
            prop_assert!(greedy_chromatic_upper(&d, 600) <= 2 * d.len() as u64 + 1);
        }
    }
}
