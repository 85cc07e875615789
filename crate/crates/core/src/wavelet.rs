//! Mother wavelets and their first derivatives.
//!
//! This module is the only place where activation math lives. Each family is
//! a small value type implementing [`Activation`]; [`MotherWavelet`] is the
//! tagged choice used in configuration and checkpoints. The layer kernels are
//! generic over [`Activation`] so the family match happens once per kernel
//! call rather than once per edge.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// π^(1/4).
const PI_FOURTH_ROOT: f64 = 1.331_335_363_800_389_7;

/// Below this |u| the Shannon kernel switches to its Taylor expansion.
const SINC_SERIES_CUTOFF: f64 = 1e-3;

pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_OMEGA0: f64 = 5.0;
pub const DEFAULT_WINDOW_HALF_WIDTH: f64 = 3.0;

pub const FAMILY_NAMES: [&str; 4] = ["mexican_hat", "morlet", "dog", "shannon"];

/// A scalar function with an analytic derivative.
pub trait Activation: Sync {
    fn name(&self) -> String;

    fn eval(&self, u: f64) -> f64;

    fn deriv(&self, u: f64) -> f64;

    /// `(eval(u), deriv(u))`, sharing the exponential where possible.
    fn eval_with_deriv(&self, u: f64) -> (f64, f64) {
        (self.eval(u), self.deriv(u))
    }
}

/// Second derivative of a Gaussian with adjustable standard deviation:
/// `2 / (π^(1/4) √(3σ)) · (u²/σ² − 1) · exp(−u²/(2σ²))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MexicanHat {
    sigma: f64,
    norm: f64,
}

impl MexicanHat {
    pub fn new(sigma: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        Ok(MexicanHat {
            sigma,
            norm: 2.0 / (PI_FOURTH_ROOT * (3.0 * sigma).sqrt()),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Activation for MexicanHat {
    fn name(&self) -> String {
        "mexican_hat".into()
    }

    #[inline]
    fn eval(&self, u: f64) -> f64 {
        self.eval_with_deriv(u).0
    }

    #[inline]
    fn deriv(&self, u: f64) -> f64 {
        self.eval_with_deriv(u).1
    }

    #[inline]
    fn eval_with_deriv(&self, u: f64) -> (f64, f64) {
        let v = u / self.sigma;
        let v2 = v * v;
        let g = (-0.5 * v2).exp();
        if g == 0.0 {
            // far tail; avoids inf * 0 once v² overflows
            return (0.0, 0.0);
        }
        let value = self.norm * (v2 - 1.0) * g;
        let slope = self.norm * v * (3.0 - v2) * g / self.sigma;
        (value, slope)
    }
}

/// `cos(ω₀u) · exp(−u²/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Morlet {
    omega0: f64,
}

impl Morlet {
    pub fn new(omega0: f64) -> Result<Self> {
        positive("omega0", omega0)?;
        Ok(Morlet { omega0 })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }
}

impl Activation for Morlet {
    fn name(&self) -> String {
        "morlet".into()
    }

    #[inline]
    fn eval(&self, u: f64) -> f64 {
        (self.omega0 * u).cos() * (-0.5 * u * u).exp()
    }

    #[inline]
    fn deriv(&self, u: f64) -> f64 {
        self.eval_with_deriv(u).1
    }

    #[inline]
    fn eval_with_deriv(&self, u: f64) -> (f64, f64) {
        let (s, c) = (self.omega0 * u).sin_cos();
        let g = (-0.5 * u * u).exp();
        (c * g, (-self.omega0 * s - u * c) * g)
    }
}

/// Derivative of Gaussian, `−d/du exp(−u²/2) = u · exp(−u²/2)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dog;

impl Activation for Dog {
    fn name(&self) -> String {
        "dog".into()
    }

    #[inline]
    fn eval(&self, u: f64) -> f64 {
        self.eval_with_deriv(u).0
    }

    #[inline]
    fn deriv(&self, u: f64) -> f64 {
        self.eval_with_deriv(u).1
    }

    #[inline]
    fn eval_with_deriv(&self, u: f64) -> (f64, f64) {
        let u2 = u * u;
        let g = (-0.5 * u2).exp();
        if g == 0.0 {
            return (0.0, 0.0);
        }
        (u * g, (1.0 - u2) * g)
    }
}

/// `sin(u)/u · window(u)` with a Gaussian window
/// `exp(−u²/(2·half_width²))`. The window is swappable in principle; the
/// Gaussian keeps the activation smooth everywhere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shannon {
    half_width: f64,
}

impl Shannon {
    pub fn new(window_half_width: f64) -> Result<Self> {
        positive("window_half_width", window_half_width)?;
        Ok(Shannon {
            half_width: window_half_width,
        })
    }

    pub fn window_half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    fn window(&self, u: f64) -> f64 {
        let r = u / self.half_width;
        (-0.5 * r * r).exp()
    }
}

/// `(sin(u)/u, d/du sin(u)/u)`, exact at the removable singularity.
#[inline]
fn sinc_with_deriv(u: f64) -> (f64, f64) {
    if u.abs() < SINC_SERIES_CUTOFF {
        let u2 = u * u;
        (
            1.0 - u2 / 6.0 + u2 * u2 / 120.0,
            u * (-1.0 / 3.0 + u2 / 30.0),
        )
    } else {
        let (s, c) = u.sin_cos();
        (s / u, (u * c - s) / (u * u))
    }
}

impl Activation for Shannon {
    fn name(&self) -> String {
        "shannon".into()
    }

    #[inline]
    fn eval(&self, u: f64) -> f64 {
        sinc_with_deriv(u).0 * self.window(u)
    }

    #[inline]
    fn deriv(&self, u: f64) -> f64 {
        self.eval_with_deriv(u).1
    }

    #[inline]
    fn eval_with_deriv(&self, u: f64) -> (f64, f64) {
        let (sinc, dsinc) = sinc_with_deriv(u);
        let win = self.window(u);
        let dwin = -u / (self.half_width * self.half_width) * win;
        (sinc * win, dsinc * win + sinc * dwin)
    }
}

/// Tagged choice of mother wavelet with its fixed hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MotherWavelet {
    MexicanHat(MexicanHat),
    Morlet(Morlet),
    Dog(Dog),
    Shannon(Shannon),
}

/// Calls `$body` with `$act` bound to the concrete family type, so generic
/// code monomorphizes per family.
#[macro_export]
#[doc(hidden)]
macro_rules! with_activation {
    ($wavelet:expr, |$act:ident| $body:expr) => {
        match $wavelet {
            $crate::wavelet::MotherWavelet::MexicanHat($act) => $body,
            $crate::wavelet::MotherWavelet::Morlet($act) => $body,
            $crate::wavelet::MotherWavelet::Dog($act) => $body,
            $crate::wavelet::MotherWavelet::Shannon($act) => $body,
        }
    };
}

impl MotherWavelet {
    pub fn mexican_hat(sigma: f64) -> Result<Self> {
        MexicanHat::new(sigma).map(MotherWavelet::MexicanHat)
    }

    pub fn morlet(omega0: f64) -> Result<Self> {
        Morlet::new(omega0).map(MotherWavelet::Morlet)
    }

    pub fn dog() -> Self {
        MotherWavelet::Dog(Dog)
    }

    pub fn shannon(window_half_width: f64) -> Result<Self> {
        Shannon::new(window_half_width).map(MotherWavelet::Shannon)
    }

    /// All four families with default hyperparameters.
    pub fn all_defaults() -> Vec<MotherWavelet> {
        FAMILY_NAMES
            .iter()
            .map(|n| parse_wavelet_spec(n, &BTreeMap::new()).expect("defaults are valid"))
            .collect()
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            MotherWavelet::MexicanHat(_) => "mexican_hat",
            MotherWavelet::Morlet(_) => "morlet",
            MotherWavelet::Dog(_) => "dog",
            MotherWavelet::Shannon(_) => "shannon",
        }
    }

    /// The family's single hyperparameter, or 0 for DOG.
    pub fn hyperparameter(&self) -> f64 {
        match self {
            MotherWavelet::MexicanHat(w) => w.sigma(),
            MotherWavelet::Morlet(w) => w.omega0(),
            MotherWavelet::Dog(_) => 0.0,
            MotherWavelet::Shannon(w) => w.window_half_width(),
        }
    }
}

impl Activation for MotherWavelet {
    fn name(&self) -> String {
        self.family_name().into()
    }

    fn eval(&self, u: f64) -> f64 {
        with_activation!(self, |a| a.eval(u))
    }

    fn deriv(&self, u: f64) -> f64 {
        with_activation!(self, |a| a.deriv(u))
    }

    fn eval_with_deriv(&self, u: f64) -> (f64, f64) {
        with_activation!(self, |a| a.eval_with_deriv(u))
    }
}

impl fmt::Display for MotherWavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MotherWavelet::MexicanHat(w) => write!(f, "mexican_hat(sigma={})", w.sigma()),
            MotherWavelet::Morlet(w) => write!(f, "morlet(omega0={})", w.omega0()),
            MotherWavelet::Dog(_) => write!(f, "dog"),
            MotherWavelet::Shannon(w) => {
                write!(f, "shannon(window_half_width={})", w.window_half_width())
            }
        }
    }
}

pub fn eval(wavelet: &MotherWavelet, u: f64) -> f64 {
    wavelet.eval(u)
}

pub fn deriv(wavelet: &MotherWavelet, u: f64) -> f64 {
    wavelet.deriv(u)
}

fn positive(key: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{key} must be a positive finite number, got {value}"
        )))
    }
}

/// Builds a wavelet from a family name (case-insensitive) and optional
/// hyperparameter overrides (`sigma`, `omega0`, `window_half_width`).
/// Overrides that do not apply to the chosen family are rejected.
pub fn parse_wavelet_spec(name: &str, overrides: &BTreeMap<String, f64>) -> Result<MotherWavelet> {
    let family = name.trim().to_ascii_lowercase().replace('-', "_");
    let allowed: &[&str] = match family.as_str() {
        "mexican_hat" | "mexicanhat" => &["sigma"],
        "morlet" => &["omega0"],
        "dog" => &[],
        "shannon" => &["window_half_width"],
        _ => {
            return Err(Error::Config(format!(
                "unknown wavelet family '{name}'; valid families are {{{}}}",
                FAMILY_NAMES.join(", ")
            )))
        }
    };
    if let Some(key) = overrides.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Config(format!(
            "parameter '{key}' does not apply to wavelet '{family}'"
        )));
    }
    let get = |key: &str, default: f64| overrides.get(key).copied().unwrap_or(default);
    match family.as_str() {
        "mexican_hat" | "mexicanhat" => MotherWavelet::mexican_hat(get("sigma", DEFAULT_SIGMA)),
        "morlet" => MotherWavelet::morlet(get("omega0", DEFAULT_OMEGA0)),
        "dog" => Ok(MotherWavelet::dog()),
        _ => MotherWavelet::shannon(get("window_half_width", DEFAULT_WINDOW_HALF_WIDTH)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn central_diff(w: &MotherWavelet, u: f64, h: f64) -> f64 {
        (w.eval(u + h) - w.eval(u - h)) / (2.0 * h)
    }

    fn defaults() -> Vec<MotherWavelet> {
        MotherWavelet::all_defaults()
    }

    #[test]
    fn point_values() {
        let mh = MotherWavelet::mexican_hat(1.0).unwrap();
        assert_eq!(mh.eval(1.0), 0.0);
        assert_eq!(mh.eval(-1.0), 0.0);
        // -2 / (sqrt(3) * pi^(1/4))
        assert!((mh.eval(0.0) - (-0.867_325)).abs() < 1e-5);
        assert!((mh.eval(0.0) - (-0.867_325_070_584_077_6)).abs() < 1e-15);

        let morlet = MotherWavelet::morlet(5.0).unwrap();
        assert_eq!(morlet.eval(0.0), 1.0);

        let dog = MotherWavelet::dog();
        assert_eq!(dog.eval(0.0), 0.0);
        assert!((dog.eval(1.0) - 0.606_531).abs() < 1e-5);
    }

    #[test]
    fn derivative_point_values() {
        assert_eq!(MotherWavelet::mexican_hat(1.0).unwrap().deriv(0.0), 0.0);
        let dog = MotherWavelet::dog();
        assert_eq!(dog.deriv(0.0), 1.0);
        assert!((central_diff(&dog, 0.0, 1e-5) - 1.0).abs() < 1e-9);
        assert_eq!(MotherWavelet::morlet(5.0).unwrap().deriv(0.0).abs(), 0.0);
    }

    #[test]
    fn table_formula_at_unit_sigma() {
        let mh = MotherWavelet::mexican_hat(1.0).unwrap();
        let c = 2.0 / (3f64.sqrt() * PI.powf(0.25));
        for u in [-3.0, -0.4, 0.0, 0.7, 2.5] {
            let direct = c * (u * u - 1.0) * (-u * u / 2.0).exp();
            assert!((mh.eval(u) - direct).abs() < 1e-15);
            let d = c * u * (3.0 - u * u) * (-u * u / 2.0).exp();
            assert!((mh.deriv(u) - d).abs() < 1e-15);
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for w in defaults()
            .into_iter()
            .chain([MotherWavelet::mexican_hat(0.6).unwrap()])
        {
            for _ in 0..1000 {
                let u: f64 = rng.random_range(-5.0..5.0);
                let d = w.deriv(u);
                let fd = central_diff(&w, u, h);
                assert!(
                    (d - fd).abs() <= 1e-6 * (1.0 + d.abs()),
                    "{w} at u={u}: analytic {d}, numeric {fd}"
                );
                let (v, d2) = w.eval_with_deriv(u);
                assert_eq!(v.to_bits(), w.eval(u).to_bits());
                assert_eq!(d2.to_bits(), d.to_bits());
            }
        }
    }

    #[test]
    fn shannon_near_singularity() {
        let w = MotherWavelet::shannon(3.0).unwrap();
        assert_eq!(w.eval(0.0), 1.0);
        assert!((w.eval(1e-8) - w.eval(0.0)).abs() < 1e-15);
        assert_eq!(w.deriv(0.0), 0.0);
        // both sides of the series cutoff agree
        let below = w.eval(SINC_SERIES_CUTOFF * (1.0 - 1e-9));
        let above = w.eval(SINC_SERIES_CUTOFF * (1.0 + 1e-9));
        assert!((below - above).abs() < 1e-14);
        for u in [1e-4, 5e-4, 2e-3, -7e-4] {
            let fd = central_diff(&w, u, 1e-6);
            assert!((w.deriv(u) - fd).abs() < 1e-8, "u={u}");
        }
    }

    #[test]
    fn symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mh = MotherWavelet::mexican_hat(1.3).unwrap();
        let morlet = MotherWavelet::morlet(5.0).unwrap();
        let dog = MotherWavelet::dog();
        for _ in 0..1000 {
            let u: f64 = rng.random_range(-6.0..6.0);
            assert_eq!(mh.eval(u), mh.eval(-u));
            assert_eq!(morlet.eval(u), morlet.eval(-u));
            assert_eq!(dog.eval(-u), -dog.eval(u));
        }
    }

    #[test]
    fn mexican_hat_roots_scale_with_sigma() {
        for sigma in [0.25, 0.5, 1.0, 2.0, 3.7] {
            let w = MotherWavelet::mexican_hat(sigma).unwrap();
            assert_eq!(w.eval(sigma), 0.0, "sigma={sigma}");
            assert_eq!(w.eval(-sigma), 0.0, "sigma={sigma}");
        }
    }

    #[test]
    fn finite_everywhere() {
        for w in defaults() {
            for u in [0.0, 1e-300, -1e-12, 40.0, -1e6, 1e300] {
                let (v, d) = w.eval_with_deriv(u);
                assert!(v.is_finite() && d.is_finite(), "{w} at {u}");
            }
        }
    }

    #[test]
    fn parse_defaults_and_overrides() {
        let none = BTreeMap::new();
        assert_eq!(
            parse_wavelet_spec("mexican_hat", &none).unwrap(),
            MotherWavelet::mexican_hat(1.0).unwrap()
        );
        assert_eq!(
            parse_wavelet_spec("Morlet", &none).unwrap(),
            MotherWavelet::morlet(5.0).unwrap()
        );
        assert_eq!(
            parse_wavelet_spec("SHANNON", &none).unwrap(),
            MotherWavelet::shannon(3.0).unwrap()
        );
        assert_eq!(parse_wavelet_spec("dog", &none).unwrap(), MotherWavelet::dog());

        let mut o = BTreeMap::new();
        o.insert("sigma".to_string(), 2.0);
        assert_eq!(
            parse_wavelet_spec("mexican_hat", &o).unwrap(),
            MotherWavelet::mexican_hat(2.0).unwrap()
        );
    }

    #[test]
    fn parse_rejections() {
        let none = BTreeMap::new();
        let err = parse_wavelet_spec("bump", &none).unwrap_err().to_string();
        for name in FAMILY_NAMES {
            assert!(err.contains(name), "{err}");
        }
        let mut o = BTreeMap::new();
        o.insert("sigma".to_string(), -1.0);
        assert!(matches!(
            parse_wavelet_spec("mexican_hat", &o),
            Err(Error::Validation(_))
        ));
        o.insert("sigma".to_string(), 0.0);
        assert!(parse_wavelet_spec("mexican_hat", &o).is_err());
        assert!(matches!(
            parse_wavelet_spec("morlet", &o),
            Err(Error::Config(_))
        ));
    }
}
