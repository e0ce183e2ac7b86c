//! Unit conversions at the CLI boundary. Internally thresholds are linear and
//! powers are in watts.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Decibel,
    Linear,
    Watt,
    Milliwatt,
    Dbm,
}

impl Unit {
    pub fn parse(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "db" => Some(Unit::Decibel),
            "linear" | "lin" => Some(Unit::Linear),
            "w" | "watt" | "watts" => Some(Unit::Watt),
            "mw" | "milliwatt" | "milliwatts" => Some(Unit::Milliwatt),
            "dbm" => Some(Unit::Dbm),
            _ => None,
        }
    }
}

/// Converts `value` between two recognized units of the same kind
/// (ratio: dB/linear; power: W/mW/dBm).
pub fn convert_units(value: f64, from: &str, to: &str) -> Result<f64> {
    let unknown = || Error::UnknownUnit {
        from: from.to_string(),
        to: to.to_string(),
    };
    let (src, dst) = (Unit::parse(from).ok_or_else(unknown)?, Unit::parse(to).ok_or_else(unknown)?);
    use Unit::*;
    let watts = |v: f64, u: Unit| match u {
        Watt => Some(v),
        Milliwatt => Some(v / 1e3),
        Dbm => Some(10f64.powf(v / 10.0) / 1e3),
        _ => None,
    };
    match (src, dst) {
        (a, b) if a == b => Ok(value),
        (Decibel, Linear) => Ok(10f64.powf(value / 10.0)),
        (Linear, Decibel) => Ok(10.0 * value.log10()),
        (a, b) => {
            let w = watts(value, a).ok_or_else(unknown)?;
            match b {
                Watt => Ok(w),
                Milliwatt => Ok(w * 1e3),
                Dbm => Ok(10.0 * (w * 1e3).log10()),
                _ => Err(unknown()),
            }
        }
    }
}
