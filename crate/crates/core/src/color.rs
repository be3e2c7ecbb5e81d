//! sRGB / CIELAB conversions and the CIEDE2000 color difference.
//!
//! Everything here uses the D65 white point with the 2° standard observer and
//! works in `f64`. Palette files and the HTTP API carry colors as 8-bit sRGB
//! hex strings (`#rrggbb`), so [`SrgbColor`] owns the parsing/formatting too.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// D65 reference white, 2° observer (X, Y, Z with Y = 1).
const WHITE_D65: [f64; 3] = [0.950_47, 1.0, 1.088_83];

const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

/// 8-bit sRGB color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SrgbColor {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

/// CIELAB color (D65).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl SrgbColor {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub fn to_lab(self) -> LabColor {
        srgb_to_lab(self)
    }

    /// Lowercase `#rrggbb`.
    pub fn to_hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.r, self.g, self.b)
    }

    pub fn from_hex(s: &str) -> Result<Self, Error> {
        let digits = s
            .strip_prefix('#')
            .filter(|d| d.len() == 6 && d.bytes().all(|c| c.is_ascii_hexdigit()))
            .ok_or_else(|| Error::InvalidColor(s.to_string()))?;
        let channel = |i: usize| u8::from_str_radix(&digits[i..i + 2], 16).unwrap();
        Ok(Self::new(channel(0), channel(2), channel(4)))
    }
}

impl fmt::Display for SrgbColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for SrgbColor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_hex(s)
    }
}

impl Serialize for SrgbColor {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for SrgbColor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

impl LabColor {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Self { l, a, b }
    }

    pub fn to_srgb(self) -> SrgbColor {
        lab_to_srgb(self)
    }

    pub fn is_finite(&self) -> bool {
        self.l.is_finite() && self.a.is_finite() && self.b.is_finite()
    }

    /// Squared Euclidean distance in Lab space (CIE76 squared).
    pub fn distance_sq(&self, other: &LabColor) -> f64 {
        let dl = self.l - other.l;
        let da = self.a - other.a;
        let db = self.b - other.b;
        dl * dl + da * da + db * db
    }
}

fn srgb_decode(c: u8) -> f64 {
    let v = f64::from(c) / 255.0;
    if v <= 0.040_45 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

fn srgb_encode(v: f64) -> f64 {
    if v <= 0.003_130_8 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    let f3 = f * f * f;
    if f3 > EPSILON {
        f3
    } else {
        (116.0 * f - 16.0) / KAPPA
    }
}

/// sRGB (8-bit, D65) to CIELAB via linear RGB and XYZ.
pub fn srgb_to_lab(c: SrgbColor) -> LabColor {
    let r = srgb_decode(c.r);
    let g = srgb_decode(c.g);
    let b = srgb_decode(c.b);

    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;

    let fx = lab_f(x / WHITE_D65[0]);
    let fy = lab_f(y / WHITE_D65[1]);
    let fz = lab_f(z / WHITE_D65[2]);

    LabColor {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

/// CIELAB to 8-bit sRGB. Out-of-gamut channels are clamped to [0, 255].
pub fn lab_to_srgb(c: LabColor) -> SrgbColor {
    let fy = (c.l + 16.0) / 116.0;
    let fx = fy + c.a / 500.0;
    let fz = fy - c.b / 200.0;

    let x = WHITE_D65[0] * lab_f_inv(fx);
    let y = WHITE_D65[1] * lab_f_inv(fy);
    let z = WHITE_D65[2] * lab_f_inv(fz);

    let r = 3.240_454_2 * x - 1.537_138_5 * y - 0.498_531_4 * z;
    let g = -0.969_266_0 * x + 1.876_010_8 * y + 0.041_556_0 * z;
    let b = 0.055_643_4 * x - 0.204_025_9 * y + 1.057_225_2 * z;

    let quantize = |v: f64| {
        let e = srgb_encode(v.clamp(0.0, 1.0));
        (e * 255.0).round().clamp(0.0, 255.0) as u8
    };
    SrgbColor::new(quantize(r), quantize(g), quantize(b))
}

/// CIEDE2000 color difference with kL = kC = kH = 1.
pub fn ciede2000(c1: LabColor, c2: LabColor) -> f64 {
    const POW25_7: f64 = 6_103_515_625.0; // 25^7

    let c1_ab = c1.a.hypot(c1.b);
    let c2_ab = c2.a.hypot(c2.b);
    let c_mean = 0.5 * (c1_ab + c2_ab);
    let c_mean7 = c_mean.powi(7);
    let g = 0.5 * (1.0 - (c_mean7 / (c_mean7 + POW25_7)).sqrt());

    let a1p = (1.0 + g) * c1.a;
    let a2p = (1.0 + g) * c2.a;
    let c1p = a1p.hypot(c1.b);
    let c2p = a2p.hypot(c2.b);

    let hue = |b: f64, ap: f64| {
        if b == 0.0 && ap == 0.0 {
            0.0
        } else {
            let h = b.atan2(ap).to_degrees();
            if h < 0.0 {
                h + 360.0
            } else {
                h
            }
        }
    };
    let h1p = hue(c1.b, a1p);
    let h2p = hue(c2.b, a2p);

    let dl = c2.l - c1.l;
    let dc = c2p - c1p;
    let chroma_product = c1p * c2p;

    let dh_angle = if chroma_product == 0.0 {
        0.0
    } else {
        let diff = h2p - h1p;
        if diff > 180.0 {
            diff - 360.0
        } else if diff < -180.0 {
            diff + 360.0
        } else {
            diff
        }
    };
    let dh = 2.0 * chroma_product.sqrt() * (dh_angle.to_radians() / 2.0).sin();

    let l_mean = 0.5 * (c1.l + c2.l);
    let cp_mean = 0.5 * (c1p + c2p);
    let hp_mean = if chroma_product == 0.0 {
        h1p + h2p
    } else if (h1p - h2p).abs() <= 180.0 {
        0.5 * (h1p + h2p)
    } else if h1p + h2p < 360.0 {
        0.5 * (h1p + h2p + 360.0)
    } else {
        0.5 * (h1p + h2p - 360.0)
    };

    let t = 1.0 - 0.17 * (hp_mean - 30.0).to_radians().cos()
        + 0.24 * (2.0 * hp_mean).to_radians().cos()
        + 0.32 * (3.0 * hp_mean + 6.0).to_radians().cos()
        - 0.20 * (4.0 * hp_mean - 63.0).to_radians().cos();

    let delta_theta = 30.0 * (-((hp_mean - 275.0) / 25.0).powi(2)).exp();
    let cp_mean7 = cp_mean.powi(7);
    let rc = 2.0 * (cp_mean7 / (cp_mean7 + POW25_7)).sqrt();
    let l50 = (l_mean - 50.0).powi(2);
    let sl = 1.0 + 0.015 * l50 / (20.0 + l50).sqrt();
    let sc = 1.0 + 0.045 * cp_mean;
    let sh = 1.0 + 0.015 * cp_mean * t;
    let rt = -(2.0 * delta_theta).to_radians().sin() * rc;

    let tl = dl / sl;
    let tc = dc / sc;
    let th = dh / sh;
    (tl * tl + tc * tc + th * th + rt * tc * th).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn white_and_black() {
        let w = srgb_to_lab(SrgbColor::new(255, 255, 255));
        assert_abs_diff_eq!(w.l, 100.0, epsilon = 1e-3);
        assert!(w.a.abs() < 0.01 && w.b.abs() < 0.01);
        let k = srgb_to_lab(SrgbColor::new(0, 0, 0));
        assert_eq!((k.l, k.a, k.b), (0.0, 0.0, 0.0));
        assert_eq!(lab_to_srgb(LabColor::new(100.0, 0.0, 0.0)), SrgbColor::new(255, 255, 255));
        assert_eq!(lab_to_srgb(LabColor::new(0.0, 0.0, 0.0)), SrgbColor::new(0, 0, 0));
    }

    #[test]
    fn pure_red() {
        // reference values from an independent implementation (scikit-image rgb2lab)
        let red = srgb_to_lab(SrgbColor::new(255, 0, 0));
        assert_abs_diff_eq!(red.l, 53.2406, epsilon = 0.05);
        assert_abs_diff_eq!(red.a, 80.0923, epsilon = 0.05);
        assert_abs_diff_eq!(red.b, 67.2028, epsilon = 0.05);
        assert_eq!(lab_to_srgb(LabColor::new(53.24, 80.09, 67.20)), SrgbColor::new(255, 0, 0));
    }

    #[test]
    fn out_of_gamut_is_clamped() {
        let c = lab_to_srgb(LabColor::new(50.0, 120.0, -120.0));
        assert_eq!(c.g, 0);
        let c = lab_to_srgb(LabColor::new(150.0, 0.0, 0.0));
        assert_eq!(c, SrgbColor::new(255, 255, 255));
    }

    #[test]
    fn first_sharma_pair() {
        let d = ciede2000(
            LabColor::new(50.0, 2.6772, -79.7751),
            LabColor::new(50.0, 0.0, -82.7485),
        );
        assert_abs_diff_eq!(d, 2.0425, epsilon = 1e-4);
    }

    #[test]
    fn hex_parsing() {
        let c = SrgbColor::from_hex("#ff80A0").unwrap();
        assert_eq!(c, SrgbColor::new(255, 128, 160));
        assert_eq!(c.to_hex(), "#ff80a0");
        assert!(SrgbColor::from_hex("ff80a0").is_err());
        assert!(SrgbColor::from_hex("#ff80a").is_err());
        assert!(SrgbColor::from_hex("#gg80a0").is_err());
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, "\"#ff80a0\"");
    }

    fn lab_strategy() -> impl Strategy<Value = LabColor> {
        (0.0..100.0f64, -128.0..128.0f64, -128.0..128.0f64)
            .prop_map(|(l, a, b)| LabColor::new(l, a, b))
    }

    proptest! {
        #[test]
        fn ciede2000_identity_and_symmetry(x in lab_strategy(), y in lab_strategy()) {
            prop_assert_eq!(ciede2000(x, x), 0.0);
            let dxy = ciede2000(x, y);
            let dyx = ciede2000(y, x);
            prop_assert!(dxy >= 0.0);
            prop_assert!((dxy - dyx).abs() < 1e-9);
        }

        #[test]
        fn srgb_round_trip(r: u8, g: u8, b: u8) {
            let c = SrgbColor::new(r, g, b);
            let back = lab_to_srgb(srgb_to_lab(c));
            prop_assert!((i16::from(back.r) - i16::from(r)).abs() <= 1);
            prop_assert!((i16::from(back.g) - i16::from(g)).abs() <= 1);
            prop_assert!((i16::from(back.b) - i16::from(b)).abs() <= 1);
        }

        #[test]
        fn distinct_inputs_stay_distinct(r: u8, g: u8, b: u8, ch in 0usize..3, delta in 2u8..=255) {
            let c = SrgbColor::new(r, g, b);
            let mut d = c;
            let slot = match ch { 0 => &mut d.r, 1 => &mut d.g, _ => &mut d.b };
            *slot = slot.wrapping_add(delta);
            prop_assume!((i16::from(*slot) - i16::from(match ch { 0 => c.r, 1 => c.g, _ => c.b })).abs() >= 2);
            prop_assert!(srgb_to_lab(c).distance_sq(&srgb_to_lab(d)) > 0.0);
        }
    }
}
