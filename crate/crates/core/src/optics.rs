//! Two-mode complex field propagation.
//!
//! A [`TwoModeField`] carries the complex amplitudes of the two arms (or
//! output ports) of the interferometer together with a mutual-coherence
//! factor `gamma`. Elements are pure functions from field to field; the
//! merger folds recombination and detection into one step so that partial
//! coherence can scale the interference cross term without breaking energy
//! conservation.
//!
//! Beam-splitter convention (real, symmetric, self-inverse):
//!
//! ```text
//! | out1 |   | sqrt(1-r)   sqrt(r)    | | in1 |
//! | out2 | = | sqrt(r)    -sqrt(1-r)  | | in2 |
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DualityError, Result};

fn check_unit(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(DualityError::InvalidParameter {
            name,
            value,
            reason: "must lie in [0, 1]",
        })
    }
}

/// Fraction of input power routed to port 2 by a variable beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SplitRatio(f64);

impl SplitRatio {
    pub const BALANCED: SplitRatio = SplitRatio(0.5);

    pub fn new(r: f64) -> Result<Self> {
        check_unit("split ratio", r).map(SplitRatio)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Amplitude coefficient of the straight-through path, `sqrt(1 - r)`.
    #[inline]
    pub fn transmission(self) -> f64 {
        (1.0 - self.0).sqrt()
    }

    /// Amplitude coefficient of the crossed path, `sqrt(r)`.
    #[inline]
    pub fn reflection(self) -> f64 {
        self.0.sqrt()
    }

    /// The ratio seen from the other port, `1 - r`.
    pub fn complement(self) -> Self {
        SplitRatio(1.0 - self.0)
    }
}

impl TryFrom<f64> for SplitRatio {
    type Error = DualityError;
    fn try_from(value: f64) -> Result<Self> {
        SplitRatio::new(value)
    }
}

impl From<SplitRatio> for f64 {
    fn from(r: SplitRatio) -> f64 {
        r.0
    }
}

/// Fractional power absorbed on channel 1 and channel 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct LossPair {
    l1: f64,
    l2: f64,
}

#[derive(Deserialize)]
struct RawPair {
    l1: f64,
    l2: f64,
}

impl TryFrom<RawPair> for LossPair {
    type Error = DualityError;
    fn try_from(raw: RawPair) -> Result<Self> {
        LossPair::new(raw.l1, raw.l2)
    }
}

impl LossPair {
    pub const NONE: LossPair = LossPair { l1: 0.0, l2: 0.0 };

    pub fn new(l1: f64, l2: f64) -> Result<Self> {
        Ok(LossPair {
            l1: check_unit("l1", l1)?,
            l2: check_unit("l2", l2)?,
        })
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    /// Surviving power fractions `(1 - l1, 1 - l2)`.
    pub fn transmittance(&self) -> (f64, f64) {
        (1.0 - self.l1, 1.0 - self.l2)
    }

    pub fn is_lossless(&self) -> bool {
        self.l1 == 0.0 && self.l2 == 0.0
    }

    pub fn swapped(&self) -> Self {
        LossPair {
            l1: self.l2,
            l2: self.l1,
        }
    }
}

/// Quantum efficiencies of detector 1 and detector 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEfficiencies")]
pub struct DetectorPair {
    q1: f64,
    q2: f64,
}

#[derive(Deserialize)]
struct RawEfficiencies {
    q1: f64,
    q2: f64,
}

impl TryFrom<RawEfficiencies> for DetectorPair {
    type Error = DualityError;
    fn try_from(raw: RawEfficiencies) -> Result<Self> {
        DetectorPair::new(raw.q1, raw.q2)
    }
}

impl DetectorPair {
    pub const IDEAL: DetectorPair = DetectorPair { q1: 1.0, q2: 1.0 };

    pub fn new(q1: f64, q2: f64) -> Result<Self> {
        let check = |name, q: f64| {
            if q.is_finite() && q > 0.0 && q <= 1.0 {
                Ok(q)
            } else {
                Err(DualityError::InvalidParameter {
                    name,
                    value: q,
                    reason: "must lie in (0, 1]",
                })
            }
        };
        Ok(DetectorPair {
            q1: check("q1", q1)?,
            q2: check("q2", q2)?,
        })
    }

    pub fn q1(&self) -> f64 {
        self.q1
    }

    pub fn q2(&self) -> f64 {
        self.q2
    }

    pub fn swapped(&self) -> Self {
        DetectorPair {
            q1: self.q2,
            q2: self.q1,
        }
    }
}

/// Nonnegative intensities registered by the two detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Readings {
    pub i1: f64,
    pub i2: f64,
}

impl Readings {
    pub fn total(&self) -> f64 {
        self.i1 + self.i2
    }
}

/// Complex amplitudes of the two modes plus their mutual coherence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeField {
    amp1: Complex64,
    amp2: Complex64,
    gamma: f64,
}

impl TwoModeField {
    pub fn new(amp1: Complex64, amp2: Complex64, gamma: f64) -> Result<Self> {
        let gamma = check_unit("gamma", gamma)?;
        if !(amp1.re.is_finite()
            && amp1.im.is_finite()
            && amp2.re.is_finite()
            && amp2.im.is_finite())
        {
            return Err(DualityError::InvalidParameter {
                name: "amplitude",
                value: f64::NAN,
                reason: "must be finite",
            });
        }
        Ok(TwoModeField { amp1, amp2, gamma })
    }

    /// Fully coherent field with real amplitudes.
    pub fn real(a1: f64, a2: f64) -> Self {
        TwoModeField {
            amp1: Complex64::new(a1, 0.0),
            amp2: Complex64::new(a2, 0.0),
            gamma: 1.0,
        }
    }

    /// Unit power in port 1, vacuum in port 2.
    pub fn unit_input(gamma: f64) -> Result<Self> {
        TwoModeField::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), gamma)
    }

    pub fn amp1(&self) -> Complex64 {
        self.amp1
    }

    pub fn amp2(&self) -> Complex64 {
        self.amp2
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        TwoModeField::new(self.amp1, self.amp2, gamma)
    }

    /// `|amp1|^2 + |amp2|^2`.
    pub fn total_power(&self) -> f64 {
        self.amp1.norm_sqr() + self.amp2.norm_sqr()
    }

    /// Mode-wise powers `(|amp1|^2, |amp2|^2)`.
    pub fn mode_powers(&self) -> (f64, f64) {
        (self.amp1.norm_sqr(), self.amp2.norm_sqr())
    }

    /// Zero one arm, as an opaque block would.
    pub fn block(self, arm: Arm) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        match arm {
            Arm::One => TwoModeField { amp1: zero, ..self },
            Arm::Two => TwoModeField { amp2: zero, ..self },
        }
    }

    /// Lossless beam splitter with power ratio `r` into port 2.
    pub fn split(self, ratio: SplitRatio) -> Self {
        let t = ratio.transmission();
        let s = ratio.reflection();
        TwoModeField {
            amp1: self.amp1 * t + self.amp2 * s,
            amp2: self.amp1 * s - self.amp2 * t,
            gamma: self.gamma,
        }
    }

    /// Phase delay `phi` on arm 2.
    pub fn shift_phase(self, phi: f64) -> Self {
        TwoModeField {
            amp2: self.amp2 * Complex64::from_polar(1.0, phi),
            ..self
        }
    }

    /// Absorptive attenuation, amplitude factor `sqrt(1 - l)` per arm.
    pub fn attenuate(self, losses: LossPair) -> Self {
        let (t1, t2) = losses.transmittance();
        TwoModeField {
            amp1: self.amp1 * t1.sqrt(),
            amp2: self.amp2 * t2.sqrt(),
            gamma: self.gamma,
        }
    }

    /// Recombines the two arms on a splitter of ratio `merge` and returns
    /// the detected intensities. The cross term is weighted by `gamma`.
    pub fn merge_and_detect(&self, merge: SplitRatio, detectors: DetectorPair) -> Readings {
        let t2 = 1.0 - merge.value();
        let s2 = merge.value();
        let ts = merge.transmission() * merge.reflection();
        let (p1, p2) = self.mode_powers();
        // Re(conj(a1) a2) = |a1||a2| cos(phase2 - phase1)
        let cross = 2.0 * self.gamma * ts * (self.amp1.conj() * self.amp2).re;
        let i1 = (t2 * p1 + s2 * p2 + cross).max(0.0);
        let i2 = (s2 * p1 + t2 * p2 - cross).max(0.0);
        Readings {
            i1: detectors.q1 * i1,
            i2: detectors.q2 * i2,
        }
    }
}

/// Interferometer arm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    One,
    Two,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn splitter_examples() {
        let out = TwoModeField::real(1.0, 0.0).split(SplitRatio::BALANCED);
        assert!(close(out.amp1(), c(FRAC_1_SQRT_2, 0.0), 1e-15));
        assert!(close(out.amp2(), c(FRAC_1_SQRT_2, 0.0), 1e-15));

        let out = TwoModeField::real(1.0, 0.0).split(SplitRatio::new(0.0).unwrap());
        assert_eq!(out.amp1(), c(1.0, 0.0));
        assert_eq!(out.amp2(), c(0.0, 0.0));

        let out = TwoModeField::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2).split(SplitRatio::BALANCED);
        assert!(close(out.amp1(), c(1.0, 0.0), 1e-12));
        assert!(close(out.amp2(), c(0.0, 0.0), 1e-12));
    }

    #[test]
    fn phase_examples() {
        let f = TwoModeField::real(1.0, 1.0);
        assert_eq!(f.shift_phase(0.0), f);
        let g = TwoModeField::real(0.0, 1.0).shift_phase(PI);
        assert!(close(g.amp2(), c(-1.0, 0.0), 1e-15));
        let h = f.shift_phase(PI / 2.0);
        assert_eq!(h.amp1(), c(1.0, 0.0));
        assert!(close(h.amp2(), c(0.0, 1.0), 1e-15));
    }

    #[test]
    fn loss_examples() {
        let f = TwoModeField::real(1.0, 1.0);
        assert_eq!(f.attenuate(LossPair::NONE), f);
        let blocked = TwoModeField::real(1.0, 0.0).attenuate(LossPair::new(1.0, 0.0).unwrap());
        assert_eq!(blocked.total_power(), 0.0);

        let lossy = f.attenuate(LossPair::new(0.727, 0.396).unwrap());
        assert_abs_diff_eq!(lossy.amp1().re, 0.273f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(lossy.amp1().re, 0.522_494, epsilon = 1e-6);
        assert_abs_diff_eq!(lossy.amp2().re, 0.777_174, epsilon = 1e-6);
        // 0.273 + 0.604
        assert_abs_diff_eq!(lossy.total_power(), 0.877, epsilon = 1e-12);
    }

    #[test]
    fn total_power_examples() {
        assert_eq!(TwoModeField::real(1.0, 0.0).total_power(), 1.0);
        assert_abs_diff_eq!(
            TwoModeField::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2).total_power(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn merger_examples() {
        let f = TwoModeField::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let r = f.merge_and_detect(SplitRatio::BALANCED, DetectorPair::IDEAL);
        assert_abs_diff_eq!(r.i1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.i2, 0.0, epsilon = 1e-12);

        let r = f
            .shift_phase(PI)
            .merge_and_detect(SplitRatio::BALANCED, DetectorPair::IDEAL);
        assert_abs_diff_eq!(r.i1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.i2, 1.0, epsilon = 1e-12);

        let half = f.with_gamma(0.5).unwrap();
        let r = half.merge_and_detect(SplitRatio::BALANCED, DetectorPair::IDEAL);
        assert_abs_diff_eq!(r.i1, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(r.i2, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn coherent_merge_matches_splitter_then_intensity() {
        let f = TwoModeField::new(c(0.3, -0.2), c(0.1, 0.7), 1.0).unwrap();
        let ratio = SplitRatio::new(0.37).unwrap();
        let d = DetectorPair::new(0.9, 0.8).unwrap();
        let read = f.merge_and_detect(ratio, d);
        let out = f.split(ratio);
        assert_abs_diff_eq!(read.i1, 0.9 * out.amp1().norm_sqr(), epsilon = 1e-14);
        assert_abs_diff_eq!(read.i2, 0.8 * out.amp2().norm_sqr(), epsilon = 1e-14);
    }

    #[test]
    fn validation_rejects_out_of_range() {
        assert!(SplitRatio::new(1.2).is_err());
        assert!(SplitRatio::new(f64::NAN).is_err());
        assert!(LossPair::new(-0.1, 0.0).is_err());
        assert!(DetectorPair::new(0.0, 1.0).is_err());
        assert!(DetectorPair::new(1.0, 1.01).is_err());
        assert!(TwoModeField::new(c(1.0, 0.0), c(0.0, 0.0), 1.5).is_err());
    }

    fn field() -> impl Strategy<Value = TwoModeField> {
        (
            -2.0..2.0f64,
            -2.0..2.0f64,
            -2.0..2.0f64,
            -2.0..2.0f64,
            0.0..=1.0f64,
        )
            .prop_map(|(a, b, c_, d, g)| TwoModeField::new(c(a, b), c(c_, d), g).unwrap())
    }

    proptest! {
        #[test]
        fn splitter_preserves_power(f in field(), r in 0.0..=1.0f64) {
            let out = f.split(SplitRatio::new(r).unwrap());
            prop_assert!((out.total_power() - f.total_power()).abs() < 1e-12);
            prop_assert_eq!(out.gamma(), f.gamma());
        }

        #[test]
        fn splitter_is_involution(f in field(), r in 0.0..=1.0f64) {
            let ratio = SplitRatio::new(r).unwrap();
            let back = f.split(ratio).split(ratio);
            prop_assert!(close(back.amp1(), f.amp1(), 1e-12));
            prop_assert!(close(back.amp2(), f.amp2(), 1e-12));
        }

        #[test]
        fn merger_conserves_energy(f in field(), r in 0.0..=1.0f64, phi in -10.0..10.0f64) {
            let g = f.shift_phase(phi);
            let read = g.merge_and_detect(SplitRatio::new(r).unwrap(), DetectorPair::IDEAL);
            prop_assert!((read.total() - g.total_power()).abs() < 1e-12);
        }

        #[test]
        fn loss_never_adds_power(f in field(), l1 in 0.0..=1.0f64, l2 in 0.0..=1.0f64) {
            let out = f.attenuate(LossPair::new(l1, l2).unwrap());
            prop_assert!(out.total_power() <= f.total_power() + 1e-15);
            let (p1, p2) = f.mode_powers();
            let expected_equal = (l1 == 0.0 || p1 == 0.0) && (l2 == 0.0 || p2 == 0.0);
            if expected_equal {
                prop_assert!((out.total_power() - f.total_power()).abs() < 1e-15);
            }
        }

        #[test]
        fn phase_keeps_power(f in field(), phi in -100.0..100.0f64) {
            prop_assert!((f.shift_phase(phi).total_power() - f.total_power()).abs() < 1e-12);
        }
    }
}
