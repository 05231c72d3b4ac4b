use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::QuantumError;
use crate::tolerance;

/// A measurement direction.
///
/// Planar settings are an angle in the x–z plane, measured from +z towards +x.
/// A setting may instead carry an explicit 3D unit axis; its `angle` is then
/// the in-plane angle of the axis projection and is informational only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SettingRepr")]
pub struct Setting {
    angle: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    axis: Option<[f64; 3]>,
    /// Cached unit direction.
    #[serde(skip)]
    unit: [f64; 3],
}

#[derive(Deserialize)]
struct SettingRepr {
    angle: f64,
    #[serde(default)]
    axis: Option<[f64; 3]>,
}

impl TryFrom<SettingRepr> for Setting {
    type Error = QuantumError;

    fn try_from(repr: SettingRepr) -> Result<Self, Self::Error> {
        match repr.axis {
            Some(axis) => Setting::from_axis(axis),
            None if repr.angle.is_finite() => Ok(Setting::from_radians(repr.angle)),
            None => Err(QuantumError::InvalidSetting(format!("non-finite angle {}", repr.angle))),
        }
    }
}

impl Setting {
    /// Planar setting; the angle is reduced to `[0, 2π)`.
    ///
    /// Panics on non-finite input. Use [`Setting::try_from_degrees`] for
    /// unchecked user input.
    pub fn from_radians(angle: f64) -> Self {
        assert!(angle.is_finite(), "setting angle must be finite");
        let mut angle = angle.rem_euclid(TAU);
        if angle >= TAU {
            angle = 0.0;
        }
        Setting {
            angle,
            axis: None,
            unit: [angle.sin(), 0.0, angle.cos()],
        }
    }

    pub fn from_degrees(degrees: f64) -> Self {
        Self::from_radians(degrees.to_radians())
    }

    pub fn try_from_degrees(degrees: f64) -> Result<Self, QuantumError> {
        if degrees.is_finite() {
            Ok(Self::from_degrees(degrees))
        } else {
            Err(QuantumError::InvalidSetting(format!("non-finite angle {degrees}")))
        }
    }

    /// Setting along an arbitrary 3D direction. The vector is normalised.
    pub fn from_axis(axis: [f64; 3]) -> Result<Self, QuantumError> {
        let norm = axis.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() || norm < tolerance::EXACT {
            return Err(QuantumError::InvalidSetting(format!(
                "axis {axis:?} cannot be normalised"
            )));
        }
        let unit = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
        let angle = unit[0].atan2(unit[2]).rem_euclid(TAU);
        Ok(Setting {
            angle: if angle >= TAU { 0.0 } else { angle },
            axis: Some(unit),
            unit,
        })
    }

    /// Angle in radians, in `[0, 2π)`.
    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn degrees(&self) -> f64 {
        self.angle.to_degrees()
    }

    pub fn axis(&self) -> Option<[f64; 3]> {
        self.axis
    }

    pub fn is_planar(&self) -> bool {
        self.axis.is_none()
    }

    /// Unit direction vector.
    pub fn direction(&self) -> [f64; 3] {
        self.unit
    }

    pub fn dot(&self, other: &[f64; 3]) -> f64 {
        let d = &self.unit;
        d[0] * other[0] + d[1] * other[1] + d[2] * other[2]
    }

    /// `cos θ_ab` between two settings.
    pub fn cos_to(&self, other: &Setting) -> f64 {
        if self.is_planar() && other.is_planar() {
            (self.angle - other.angle).cos()
        } else {
            self.dot(&other.direction()).clamp(-1.0, 1.0)
        }
    }

    /// Relative angle `θ_ab` in `[0, π]`.
    pub fn angle_to(&self, other: &Setting) -> f64 {
        if self.is_planar() && other.is_planar() {
            let d = (self.angle - other.angle).abs();
            if d > PI {
                TAU - d
            } else {
                d
            }
        } else {
            self.cos_to(other).acos()
        }
    }

    /// Bit-exact identity key, used to group grid points.
    pub(crate) fn key(&self) -> (u64, Option<[u64; 3]>) {
        (
            self.angle.to_bits(),
            self.axis.map(|a| [a[0].to_bits(), a[1].to_bits(), a[2].to_bits()]),
        )
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.axis {
            None => write!(f, "{}°", self.degrees()),
            Some([x, y, z]) => write!(f, "({x:.6}, {y:.6}, {z:.6})"),
        }
    }
}

/// A measurement outcome, `+1` or `−1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    /// Slot in a `[plus, minus]` array.
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn flip(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    /// `+1` for `x >= 0`, `−1` otherwise.
    pub fn of_sign(x: f64) -> Outcome {
        if x >= 0.0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn try_from_sign(sign: i64) -> Result<Outcome, QuantumError> {
        match sign {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(QuantumError::InvalidDistribution(format!(
                "outcome must be +1 or -1, got {other}"
            ))),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
        })
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "+1" | "1" | "+" | "plus" | "up" => Ok(Outcome::Plus),
            "-1" | "-" | "minus" | "down" => Ok(Outcome::Minus),
            other => Err(format!("outcome must be +1 or -1, got {other:?}")),
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_i8(self.sign())
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = i64::deserialize(deserializer)?;
        Outcome::try_from_sign(raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Particle {
    #[serde(rename = "1")]
    First,
    #[serde(rename = "2")]
    Second,
}

impl Particle {
    pub fn other(self) -> Particle {
        match self {
            Particle::First => Particle::Second,
            Particle::Second => Particle::First,
        }
    }
}

impl fmt::Display for Particle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Particle::First => "1",
            Particle::Second => "2",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_wrap_into_range() {
        assert_eq!(Setting::from_degrees(360.0).angle(), 0.0);
        assert!((Setting::from_degrees(-90.0).degrees() - 270.0).abs() < 1e-12);
        assert!((Setting::from_degrees(725.0).degrees() - 5.0).abs() < 1e-9);
        assert!(Setting::try_from_degrees(f64::NAN).is_err());
    }

    #[test]
    fn relative_angle_is_folded() {
        let a = Setting::from_degrees(10.0);
        let b = Setting::from_degrees(280.0);
        assert!((a.angle_to(&b).to_degrees() - 90.0).abs() < 1e-9);
        assert!(a.cos_to(&b).abs() < 1e-12);
    }

    #[test]
    fn axis_is_normalised() {
        let s = Setting::from_axis([0.0, 0.0, 2.0]).unwrap();
        assert_eq!(s.direction(), [0.0, 0.0, 1.0]);
        assert!(Setting::from_axis([0.0, 0.0, 0.0]).is_err());
        let planar = Setting::from_degrees(60.0);
        let spatial = Setting::from_axis(planar.direction()).unwrap();
        assert!((spatial.cos_to(&Setting::from_degrees(0.0)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn outcome_parsing() {
        assert_eq!("+1".parse::<Outcome>().unwrap(), Outcome::Plus);
        assert_eq!("-1".parse::<Outcome>().unwrap(), Outcome::Minus);
        assert!("0".parse::<Outcome>().is_err());
        assert_eq!(serde_json::to_string(&Outcome::Minus).unwrap(), "-1");
        assert!(serde_json::from_str::<Outcome>("2").is_err());
    }

    #[test]
    fn setting_serde_validates() {
        let s: Setting = serde_json::from_str(r#"{"angle": 7.0}"#).unwrap();
        assert!(s.angle() < TAU);
        let json = serde_json::to_string(&Setting::from_degrees(90.0)).unwrap();
        let back: Setting = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Setting::from_degrees(90.0));
    }
}
