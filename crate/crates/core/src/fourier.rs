//! Fourier analysis over `Z_p` and the certificate `kappa(D) >= 1/2 - eps`
//! for L-independent sets.
//!
//! Transform convention: `f^(r) = sum_x f(x) w^(r x)` with `w = e^(2 pi i / p)`.
//!
//! The certificate pushes every speed into the arc around `p/2`: with `C` the
//! residues strictly inside `((1/4 - eps/2) p, (1/4 + eps/2) p)` and
//! `B = C * C`, any `t` with `B(t d) != 0` for all `d` puts each `t d / p`
//! within `eps` of `1/2`. The number of such `t`, weighted by `B`, is the
//! counting sum `I`, computed here directly and through the spectrum.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::arith::{inv_mod_prime, is_prime, mul_mod};
use crate::circle::{min_circ_dist, SpeedSet};
use crate::error::{Error, Result};
use crate::independence::{is_l_independent, IndependenceReport};
use crate::kappa::{kappa_exact, KappaResult};
use crate::rational::Rational;

/// Largest `p` accepted by the O(p^2) transform.
pub const DFT_GUARD: u64 = 20_000;
/// Limits of [`lonely_count_spectral`]: `p^(k-1)` terms.
pub const SPECTRAL_MAX_K: usize = 3;
pub const SPECTRAL_MAX_P: u64 = 500;
/// Largest `p` for which the certificate also scans all `t` directly.
pub const DIRECT_GUARD: u64 = 10_000_000;

fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

fn check_epsilon(eps: &Rational) -> Result<()> {
    if eps <= &Rational::zero() || eps >= &Rational::half() {
        return Err(Error::EpsilonOutOfRange(eps.to_string()));
    }
    Ok(())
}

/// `w^j` for `j in 0..p`.
fn twiddles(p: u64) -> Vec<Complex64> {
    (0..p)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / p as f64))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub p: u64,
    pub values: Vec<Complex64>,
}

impl SpectrumTable {
    pub fn at(&self, r: u64) -> Complex64 {
        self.values[(r % self.p) as usize]
    }
}

fn transform(f: &[Complex64], p: u64, sign: i8) -> Vec<Complex64> {
    let w = twiddles(p);
    (0..p)
        .map(|r| {
            let mut acc = Complex64::zero();
            let mut idx = 0u64;
            for &fx in f {
                let tw = if sign > 0 {
                    w[idx as usize]
                } else {
                    w[((p - idx) % p) as usize]
                };
                acc += fx * tw;
                idx += r;
                if idx >= p {
                    idx -= p;
                }
            }
            acc
        })
        .collect()
}

/// Naive O(p^2) transform on `Z_p`.
pub fn dft(f: &[Complex64], p: u64) -> Result<SpectrumTable> {
    check_prime(p)?;
    if f.len() as u64 != p {
        return Err(Error::LengthMismatch { len: f.len(), p });
    }
    if p > DFT_GUARD {
        return Err(Error::GuardExceeded(format!(
            "transform of size {p} exceeds {DFT_GUARD}"
        )));
    }
    Ok(SpectrumTable {
        p,
        values: transform(f, p, 1),
    })
}

pub fn dft_real(f: &[f64], p: u64) -> Result<SpectrumTable> {
    let c: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    dft(&c, p)
}

/// `f(x) = (1/p) sum_r f^(r) w^(-r x)`.
pub fn inverse_dft(spectrum: &SpectrumTable) -> Vec<Complex64> {
    let p = spectrum.p;
    transform(&spectrum.values, p, -1)
        .into_iter()
        .map(|z| z / p as f64)
        .collect()
}

/// `A^(0) = |A|` on the integer path.
pub fn zero_coefficient(indicator: &[bool]) -> u64 {
    indicator.iter().filter(|&&b| b).count() as u64
}

/// Closed form of `A^(r)` for the interval `A = {s, ..., l}`:
/// `w^(r (l + s) / 2) * sin(pi r m / p) / sin(pi r / p)` with `m = l + 1 - s`.
pub fn interval_coeff(s: u64, l: u64, r: u64, p: u64) -> Result<Complex64> {
    check_prime(p)?;
    if s > l || l >= p {
        return Err(Error::InvalidParameter(format!(
            "need s <= l < p, got s={s}, l={l}, p={p}"
        )));
    }
    let r = r % p;
    if r == 0 {
        return Err(Error::InvalidParameter(
            "r = 0: use the zero coefficient |A|".into(),
        ));
    }
    let m = l + 1 - s;
    // reduce the arguments exactly before going to floating point
    let num_arg = PI * ((r as u128 * m as u128) % (2 * p as u128)) as f64 / p as f64;
    let den_arg = PI * r as f64 / p as f64;
    let magnitude = num_arg.sin() / den_arg.sin();
    let phase_steps = (r as u128 * (l + s) as u128) % (2 * p as u128);
    let phase = PI * phase_steps as f64 / p as f64;
    Ok(Complex64::from_polar(magnitude, phase))
}

/// The contiguous run of residues `C`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcSet {
    pub p: u64,
    /// `None` for runs built directly with [`ArcSet::run`].
    pub epsilon: Option<Rational>,
    /// First member; meaningless when `size == 0`.
    pub start: u64,
    pub size: u64,
}

impl ArcSet {
    /// The run `{start, ..., start + size - 1}`, within `0..p`.
    pub fn run(p: u64, start: u64, size: u64) -> Result<Self> {
        check_prime(p)?;
        if size > 0 && start + size > p {
            return Err(Error::InvalidParameter(format!(
                "run {start}+{size} leaves 0..{p}"
            )));
        }
        Ok(ArcSet {
            p,
            epsilon: None,
            start,
            size,
        })
    }

    pub fn members(&self) -> impl Iterator<Item = u64> {
        self.start..self.start + self.size
    }

    pub fn contains(&self, x: u64) -> bool {
        self.size > 0 && x >= self.start && x < self.start + self.size
    }

    pub fn indicator(&self) -> Vec<bool> {
        (0..self.p).map(|x| self.contains(x)).collect()
    }
}

/// `C = { x : (1/4 - eps/2) p < x < (1/4 + eps/2) p }`, strict and exact.
pub fn arc_set_c(p: u64, eps: &Rational) -> Result<ArcSet> {
    check_prime(p)?;
    check_epsilon(eps)?;
    let pr = Rational::from_integer(p);
    let quarter = Rational::new(1, 4);
    let half_eps = eps * &Rational::half();
    let lower = &(&quarter - &half_eps) * &pr;
    let upper = &(&quarter + &half_eps) * &pr;
    // smallest integer > lower, largest integer < upper
    let lo = lower.floor() + num_bigint::BigInt::from(1);
    let hi = upper.ceil() - num_bigint::BigInt::from(1);
    let lo = lo.to_u64().expect("inside 0..p");
    let hi = hi.to_u64().expect("inside 0..p");
    let size = if hi >= lo { hi - lo + 1 } else { 0 };
    Ok(ArcSet {
        p,
        epsilon: Some(eps.clone()),
        start: lo,
        size,
    })
}

/// `B(x) = #{(y, z) in C x C : y + z = x (mod p)}`, exact.
pub fn self_convolution(c: &ArcSet) -> Vec<u64> {
    let p = c.p as usize;
    // each y adds one over the run y + C, via a difference array mod p
    let mut diff = vec![0i64; p + 1];
    let mut bump = |a: usize, b: usize| {
        diff[a] += 1;
        diff[b + 1] -= 1;
    };
    if c.size > 0 {
        for y in c.members() {
            let a = ((y + c.start) % c.p) as usize;
            let b = a + c.size as usize - 1;
            if b < p {
                bump(a, b);
            } else {
                bump(a, p - 1);
                bump(0, b - p);
            }
        }
    }
    let mut out = Vec::with_capacity(p);
    let mut run = 0i64;
    for d in &diff[..p] {
        run += d;
        out.push(run as u64);
    }
    out
}

fn nonzero_residues(speeds: &SpeedSet, p: u64) -> Result<Vec<u64>> {
    speeds
        .iter()
        .map(|d| match d % p {
            0 => Err(Error::ZeroResidue { speed: d, p }),
            r => Ok(r),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LonelyCount {
    /// `sum_t prod_i B(t d_i)`.
    pub count: u128,
    /// Every `t` with `B(t d_i) != 0` for all `i`, increasing.
    pub witnesses: Vec<u64>,
}

/// `I = sum_t B(t d_1) ... B(t d_k)`, exact.
pub fn lonely_count_direct(speeds: &SpeedSet, p: u64, eps: &Rational) -> Result<LonelyCount> {
    let c = arc_set_c(p, eps)?;
    let res = nonzero_residues(speeds, p)?;
    let b = self_convolution(&c);
    let mut count: u128 = 0;
    let mut witnesses = Vec::new();
    for t in 0..p {
        let mut prod: u128 = 1;
        for &d in &res {
            let v = b[mul_mod(t, d, p) as usize];
            if v == 0 {
                prod = 0;
                break;
            }
            prod = prod
                .checked_mul(v as u128)
                .ok_or(Error::Overflow("counting sum"))?;
        }
        if prod > 0 {
            witnesses.push(t);
            count = count
                .checked_add(prod)
                .ok_or(Error::Overflow("counting sum"))?;
        }
    }
    Ok(LonelyCount { count, witnesses })
}

/// `I` from the spectrum: `p^(k-1) I = sum over d . r = 0 (mod p) of
/// B^(r_1) ... B^(r_k)`. The last coordinate is solved for, so the sum runs
/// over `p^(k-1)` vectors in a fixed order.
pub fn lonely_count_spectral(speeds: &SpeedSet, p: u64, eps: &Rational) -> Result<f64> {
    if speeds.len() > SPECTRAL_MAX_K || p > SPECTRAL_MAX_P {
        return Err(Error::GuardExceeded(format!(
            "spectral count needs k <= {SPECTRAL_MAX_K} and p <= {SPECTRAL_MAX_P}"
        )));
    }
    let c = arc_set_c(p, eps)?;
    let res = nonzero_residues(speeds, p)?;
    let b: Vec<f64> = self_convolution(&c).into_iter().map(|v| v as f64).collect();
    let bhat = dft_real(&b, p)?;
    let k = res.len();
    let last_inv = inv_mod_prime(res[k - 1], p);
    let free = k - 1;
    let mut r = vec![0u64; free];
    let mut total = Complex64::zero();
    loop {
        let mut s = 0u64;
        let mut prod = Complex64::new(1.0, 0.0);
        for (i, &ri) in r.iter().enumerate() {
            s = (s + mul_mod(res[i], ri, p)) % p;
            prod *= bhat.at(ri);
        }
        let rk = mul_mod((p - s) % p, last_inv, p);
        total += prod * bhat.at(rk);
        // odometer over Z_p^(k-1)
        let mut i = 0;
        while i < free && r[i] == p - 1 {
            r[i] = 0;
            i += 1;
        }
        if i == free {
            break;
        }
        r[i] += 1;
    }
    Ok(total.re / (p as f64).powi(free as i32))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    /// `k^3 3^(k-1) / (2^(k+1) eps^(2k))`.
    pub radicand: Rational,
    pub sqrt: f64,
    /// Smallest integer `L` with `L^2 > radicand`.
    pub min_l: u64,
}

/// Lower limit on `L` above which L-independence certifies
/// `kappa >= 1/2 - eps`.
pub fn independence_threshold(k: u64, eps: &Rational) -> Result<Threshold> {
    check_epsilon(eps)?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let k32 = u32::try_from(k).map_err(|_| Error::Overflow("threshold exponent"))?;
    let num = Rational::from_integer(k).pow(3) * Rational::from_integer(3u64).pow(k32 - 1);
    let den = Rational::from_integer(2u64).pow(k32 + 1) * eps.pow(2 * k32);
    let radicand = num / den;
    let sqrt = radicand.to_f64().sqrt();
    // start near the float root, then settle exactly
    let mut l = (sqrt.floor() as u64).saturating_sub(2);
    while Rational::from_integer(l).pow(2) <= radicand {
        l += 1;
    }
    while l > 0 && Rational::from_integer(l - 1).pow(2) > radicand {
        l -= 1;
    }
    Ok(Threshold {
        radicand,
        sqrt,
        min_l: l,
    })
}

/// Numeric check of the tail estimate, in log10 to stay finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailDiagnostics {
    /// `log10(k^3 p^(2k) 3^(k-1) / (2^(k+1) L^2))`.
    pub log10_tail_bound: f64,
    /// `log10((eps p)^(2k))`.
    pub log10_eps_p_pow: f64,
    /// `log10(|C|^(2k))`, `-inf` when `C` is empty.
    pub log10_arc_pow: f64,
    pub tail_below_eps_p: bool,
    /// `|C| >= eps p`, exact.
    pub arc_at_least_eps_p: bool,
}

pub fn tail_diagnostics(k: u64, p: u64, l: u64, eps: &Rational, arc: &ArcSet) -> TailDiagnostics {
    let k = k as f64;
    let pf = p as f64;
    let log10_tail_bound = 3.0 * k.log10() + 2.0 * k * pf.log10() + (k - 1.0) * 3f64.log10()
        - (k + 1.0) * 2f64.log10()
        - 2.0 * (l as f64).log10();
    let log10_eps_p_pow = 2.0 * k * (eps.to_f64() * pf).log10();
    let log10_arc_pow = 2.0 * k * (arc.size as f64).log10();
    TailDiagnostics {
        log10_tail_bound,
        log10_eps_p_pow,
        log10_arc_pow,
        tail_below_eps_p: log10_tail_bound < log10_eps_p_pow,
        arc_at_least_eps_p: Rational::from_integer(arc.size) >= eps * &Rational::from_integer(p),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateResult {
    pub p: u64,
    pub epsilon: Rational,
    #[serde(rename = "D")]
    pub speeds: SpeedSet,
    pub threshold: f64,
    pub threshold_radicand: Rational,
    pub l_used: u64,
    pub independence: IndependenceReport,
    /// `D` is `l_used`-independent, hence `kappa(D) >= 1/2 - eps`.
    pub certified: bool,
    pub arc_size: u64,
    pub lonely_count: Option<u128>,
    pub witness_t: Option<u64>,
    pub kappa_cross_check: Option<KappaResult>,
    pub tail: TailDiagnostics,
}

impl CertificateResult {
    /// One JSON object per certificate for diagnostic dumps.
    pub fn diagnostic_json(&self) -> serde_json::Value {
        let count = self.lonely_count.map(|c| match u64::try_from(c) {
            Ok(small) => json!(small),
            Err(_) => json!(c.to_string()),
        });
        json!({
            "p": self.p,
            "epsilon": self.epsilon,
            "D": self.speeds,
            "threshold_radicand": self.threshold_radicand,
            "L_used": self.l_used,
            "independent": self.independence.independent,
            "witness_relation": self.independence.witness,
            "I": count,
            "witness_t": self.witness_t,
            "kappa": self.kappa_cross_check.as_ref().map(|k| k.value.clone()),
            "arc_size": self.arc_size,
        })
    }
}

/// Certifies `kappa(D) >= 1/2 - eps` by checking L-independence for the
/// smallest admissible `L`. With `cross_check`, also computes `kappa(D)`
/// exactly and the counting sum, and reports a soundness error if a
/// certified set contradicts either.
pub fn certify_kappa(
    speeds: &SpeedSet,
    p: u64,
    eps: &Rational,
    cross_check: bool,
) -> Result<CertificateResult> {
    check_prime(p)?;
    check_epsilon(eps)?;
    if let Some(d) = speeds.iter().find(|&d| d >= p) {
        return Err(Error::ResidueOutOfRange { a: d, p });
    }
    let k = speeds.len() as u64;
    let threshold = independence_threshold(k, eps)?;
    let l = threshold.min_l;
    let independence = is_l_independent(speeds, p, l)?;
    let certified = independence.independent;
    let arc = arc_set_c(p, eps)?;
    let tail = tail_diagnostics(k, p, l, eps, &arc);

    let mut kappa_cross_check = None;
    let mut lonely_count = None;
    let mut witness_t = None;
    if cross_check {
        let kappa = kappa_exact(speeds);
        let floor = Rational::half() - eps.clone();
        if certified && kappa.value < floor {
            return Err(Error::Soundness(format!(
                "D={speeds} is {l}-independent mod {p} but kappa={} < {floor}",
                kappa.value
            )));
        }
        kappa_cross_check = Some(kappa);
        if p <= DIRECT_GUARD {
            let count = lonely_count_direct(speeds, p, eps)?;
            // the counting argument only applies once |C| >= eps p
            if certified && count.count == 0 && tail.arc_at_least_eps_p {
                return Err(Error::Soundness(format!(
                    "D={speeds} is {l}-independent mod {p} with |C|={} but I = 0",
                    arc.size
                )));
            }
            if let Some(&t) = count.witnesses.first() {
                let x = Rational::new(t, p);
                if min_circ_dist(speeds, &x) <= floor {
                    return Err(Error::Soundness(format!(
                        "t={t} does not push D past {floor}"
                    )));
                }
                witness_t = Some(t);
            }
            lonely_count = Some(count.count);
        }
    }

    Ok(CertificateResult {
        p,
        epsilon: eps.clone(),
        speeds: speeds.clone(),
        threshold: threshold.sqrt,
        threshold_radicand: threshold.radicand,
        l_used: l,
        independence,
        certified,
        arc_size: arc.size,
        lonely_count,
        witness_t,
        kappa_cross_check,
        tail,
    })
}

/// Outcome of one family of spectral checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub p: u64,
    pub cases: u64,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn indicator_f64(p: u64, members: impl IntoIterator<Item = u64>) -> Vec<f64> {
    let mut v = vec![0.0; p as usize];
    for m in members {
        v[m as usize] = 1.0;
    }
    v
}

/// The spectral invariant suite for one prime: conjugate symmetry,
/// inversion, the zero coefficient, the interval bound `p/(2r)` together with
/// the closed form, the convolution theorem and (for `p <= 500`) the
/// direct/spectral agreement of the counting sum. Random inputs come from
/// `ChaCha8Rng::seed_from_u64(seed)`.
pub fn invariant_suite(p: u64, intervals: u64, seed: u64) -> Result<Vec<InvariantCheck>> {
    use rand::{Rng, SeedableRng};

    check_prime(p)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ p);
    let mut out = Vec::new();
    let mut push = |name: &str, cases: u64, max_error: f64, tolerance: f64| {
        out.push(InvariantCheck {
            name: name.to_string(),
            p,
            cases,
            max_error,
            tolerance,
            passed: max_error <= tolerance,
        });
    };

    let f: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let spec = dft_real(&f, p)?;
    let sym = (1..p)
        .map(|r| (spec.at(r).norm() - spec.at(p - r).norm()).abs() / spec.at(r).norm().max(1.0))
        .fold(0.0, f64::max);
    push("conjugate_symmetry", p - 1, sym, 1e-9);

    let back = inverse_dft(&spec);
    let inv = f
        .iter()
        .zip(&back)
        .map(|(a, b)| (Complex64::new(*a, 0.0) - b).norm())
        .fold(0.0, f64::max);
    push("inversion", p, inv, 1e-9);

    let members: Vec<bool> = (0..p).map(|_| rng.gen_bool(0.5)).collect();
    let size = zero_coefficient(&members);
    let zero = dft_real(
        &indicator_f64(p, (0..p).filter(|&x| members[x as usize])),
        p,
    )?
    .at(0);
    push("zero_coefficient", 1, (zero.re - size as f64).abs(), 1e-9);

    let (mut bound_excess, mut closed_err, mut cases) = (0.0f64, 0.0f64, 0);
    for _ in 0..intervals {
        let a = rng.gen_range(0..p);
        let b = rng.gen_range(0..p);
        let (s, l) = (a.min(b), a.max(b));
        let naive = dft_real(&indicator_f64(p, s..=l), p)?;
        for r in 1..=(p - 1) / 2 {
            let z = interval_coeff(s, l, r, p)?;
            bound_excess = bound_excess.max(z.norm() - p as f64 / (2.0 * r as f64));
            closed_err = closed_err.max((z - naive.at(r)).norm());
            cases += 1;
        }
    }
    push("interval_bound", cases, bound_excess.max(0.0), 1e-9);
    push("interval_closed_form", cases, closed_err, 1e-9);

    let eps = Rational::new(rng.gen_range(1..10u64), 20);
    let c = arc_set_c(p, &eps)?;
    let chat = dft_real(&indicator_f64(p, c.members()), p)?;
    let b: Vec<f64> = self_convolution(&c).into_iter().map(|v| v as f64).collect();
    let bhat = dft_real(&b, p)?;
    let conv = (0..p)
        .map(|r| {
            let e = chat.at(r) * chat.at(r);
            (bhat.at(r) - e).norm() / e.norm().max(1.0)
        })
        .fold(0.0, f64::max);
    push("convolution_theorem", p, conv, 1e-6);

    if p <= SPECTRAL_MAX_P && p > 3 {
        let mut worst = 0.0f64;
        let trials = 5;
        for _ in 0..trials {
            let k = rng.gen_range(1..=SPECTRAL_MAX_K as u64).min(p - 1);
            let d = crate::experiments::sample_speed_set(p - 1, k, rng.gen())?;
            let eps = Rational::new(rng.gen_range(1..10u64), 20);
            let direct = lonely_count_direct(&d, p, &eps)?.count as f64;
            let spectral = lonely_count_spectral(&d, p, &eps)?;
            worst = worst.max((direct - spectral).abs() / direct.max(1.0));
        }
        push("counting_sum_direct_vs_spectral", trials, worst, 1e-6);
    }
    Ok(out)
}
