//! Physical-unit signatures: rational exponents over named base units.
//!
//! A signature such as `second^1 meter^-1` (slowness) is stored as a sorted
//! map from base-unit name to exponent. Zero exponents are never stored, so
//! structural equality is dimensional equality.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;
use core::ops::{Div, Mul};

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Exponent = Ratio<i32>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitSignature {
    exponents: BTreeMap<String, Exponent>,
}

impl UnitSignature {
    pub fn dimensionless() -> Self {
        Self::default()
    }

    pub fn base(name: &str) -> Self {
        Self::base_pow(name, 1)
    }

    pub fn base_pow(name: &str, exponent: i32) -> Self {
        let mut sig = Self::default();
        sig.insert(name, Ratio::from_integer(exponent));
        sig
    }

    pub fn second() -> Self {
        Self::base("second")
    }

    pub fn meter() -> Self {
        Self::base("meter")
    }

    /// Seconds per meter.
    pub fn slowness() -> Self {
        Self::second() / Self::meter()
    }

    /// Meters per second.
    pub fn velocity() -> Self {
        Self::meter() / Self::second()
    }

    fn insert(&mut self, name: &str, exponent: Exponent) {
        let entry = self
            .exponents
            .entry(name.to_string())
            .or_insert_with(|| Ratio::from_integer(0));
        *entry += exponent;
        if *entry.numer() == 0 {
            self.exponents.remove(name);
        }
    }

    pub fn exponent(&self, name: &str) -> Exponent {
        self.exponents
            .get(name)
            .copied()
            .unwrap_or_else(|| Ratio::from_integer(0))
    }

    pub fn is_dimensionless(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn recip(&self) -> Self {
        self.pow(Ratio::from_integer(-1))
    }

    pub fn pow(&self, power: Exponent) -> Self {
        let mut out = Self::default();
        for (name, e) in &self.exponents {
            out.insert(name, *e * power);
        }
        out
    }

    pub fn powi(&self, power: i32) -> Self {
        self.pow(Ratio::from_integer(power))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Exponent)> {
        self.exponents.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Product of a list of signatures.
    pub fn product<'a, I: IntoIterator<Item = &'a UnitSignature>>(items: I) -> Self {
        items.into_iter().fold(Self::dimensionless(), |acc, u| &acc * u)
    }
}

impl Mul for &UnitSignature {
    type Output = UnitSignature;
    fn mul(self, rhs: &UnitSignature) -> UnitSignature {
        let mut out = self.clone();
        for (name, e) in &rhs.exponents {
            out.insert(name, *e);
        }
        out
    }
}

impl Mul for UnitSignature {
    type Output = UnitSignature;
    fn mul(self, rhs: UnitSignature) -> UnitSignature {
        &self * &rhs
    }
}

impl Div for &UnitSignature {
    type Output = UnitSignature;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &UnitSignature) -> UnitSignature {
        self * &rhs.recip()
    }
}

impl Div for UnitSignature {
    type Output = UnitSignature;
    fn div(self, rhs: UnitSignature) -> UnitSignature {
        &self / &rhs
    }
}

fn fmt_exponent(e: &Exponent) -> String {
    if *e.denom() == 1 {
        format!("{}", e.numer())
    } else {
        format!("{}/{}", e.numer(), e.denom())
    }
}

impl fmt::Display for UnitSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponents.is_empty() {
            return f.write_str("1");
        }
        let mut first = true;
        for (name, e) in &self.exponents {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{}^{}", name, fmt_exponent(e))?;
        }
        Ok(())
    }
}

impl Serialize for UnitSignature {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(self.exponents.len()))?;
        for (name, e) in &self.exponents {
            map.serialize_entry(name, &fmt_exponent(e))?;
        }
        map.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ExponentRepr {
    Int(i32),
    Text(String),
}

fn parse_exponent(text: &str) -> Option<Exponent> {
    let text = text.trim();
    match text.split_once('/') {
        Some((n, d)) => {
            let n: i32 = n.trim().parse().ok()?;
            let d: i32 = d.trim().parse().ok()?;
            (d != 0).then(|| Ratio::new(n, d))
        }
        None => text.parse::<i32>().ok().map(Ratio::from_integer),
    }
}

impl<'de> Deserialize<'de> for UnitSignature {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let raw = BTreeMap::<String, ExponentRepr>::deserialize(deserializer)?;
        let mut sig = UnitSignature::default();
        for (name, repr) in raw {
            let e = match repr {
                ExponentRepr::Int(i) => Ratio::from_integer(i),
                ExponentRepr::Text(t) => parse_exponent(&t)
                    .ok_or_else(|| serde::de::Error::custom(format!("bad unit exponent '{t}' for {name}")))?,
            };
            sig.insert(&name, e);
        }
        Ok(sig)
    }
}

/// A number carrying its physical unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: UnitSignature,
}

impl Quantity {
    pub fn new(value: f64, unit: UnitSignature) -> Self {
        Self { value, unit }
    }

    pub fn is_dimensionless(&self) -> bool {
        self.unit.is_dimensionless()
    }

    pub fn ratio(&self, other: &Quantity) -> Quantity {
        Quantity::new(self.value / other.value, &self.unit / &other.unit)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.value, self.unit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplication_adds_exponents() {
        let s = UnitSignature::slowness();
        let v = UnitSignature::velocity();
        assert!((&s * &v).is_dimensionless());
        assert_eq!(s.exponent("second"), Ratio::from_integer(1));
        assert_eq!(s.exponent("meter"), Ratio::from_integer(-1));
    }

    #[test]
    fn zero_entries_are_dropped() {
        let a = UnitSignature::second() * UnitSignature::meter();
        let b = a.clone() / UnitSignature::meter();
        assert_eq!(b, UnitSignature::second());
        assert_eq!(b.iter().count(), 1);
    }

    #[test]
    fn rational_powers() {
        let half = UnitSignature::second().pow(Ratio::new(1, 2));
        assert_eq!(&half * &half, UnitSignature::second());
        assert_eq!(format!("{half}"), "second^1/2");
    }

    #[test]
    fn json_shape_round_trips_through_serde_value() {
        let s = UnitSignature::slowness().powi(2);
        assert_eq!(format!("{s}"), "meter^-2 second^2");
        assert_eq!(parse_exponent("-3/4"), Some(Ratio::new(-3, 4)));
        assert_eq!(parse_exponent("x"), None);
    }
}
