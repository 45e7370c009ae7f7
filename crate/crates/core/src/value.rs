//! Literal and symbolic values that appear in queries.

use chrono::{NaiveDate, NaiveDateTime, NaiveTime, Timelike};

use crate::types::Dimension;

/// A geographic coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub lat: f64,
    pub lon: f64,
}

impl Location {
    pub fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    /// Magnitude in the base unit of the dimension.
    Measure(f64, Dimension),
    /// Always lowercase with single spaces between words.
    String(String),
    Boolean(bool),
    Enum(String),
    Date(NaiveDateTime),
    Time(NaiveTime),
    Location(Location),
    Entity {
        table: String,
        id: String,
    },
    Here,
    Now,
    /// Unresolved entity name. `name` is a string literal or a placeholder.
    Lookup {
        name: Box<Value>,
        table: String,
    },
    Field(String),
    Array(Vec<Value>),
    /// Typed hole filled in by augmentation; printed `VALUE_k`.
    Placeholder(u32),
}

impl Value {
    pub fn string(s: &str) -> Value {
        Value::String(normalize_string(s))
    }

    pub fn field(name: impl Into<String>) -> Value {
        Value::Field(name.into())
    }

    pub fn lookup(name: &str, table: impl Into<String>) -> Value {
        Value::Lookup {
            name: Box::new(Value::string(name)),
            table: table.into(),
        }
    }

    pub fn date(y: i32, m: u32, d: u32) -> Option<Value> {
        NaiveDate::from_ymd_opt(y, m, d).map(|d| Value::Date(d.and_time(NaiveTime::MIN)))
    }

    /// Visits every placeholder id in this value.
    pub fn placeholders(&self, out: &mut Vec<u32>) {
        match self {
            Value::Placeholder(k) => out.push(*k),
            Value::Lookup { name, .. } => name.placeholders(out),
            Value::Array(items) => items.iter().for_each(|v| v.placeholders(out)),
            _ => {}
        }
    }

    pub fn map_placeholders(&mut self, f: &mut impl FnMut(u32) -> Value) {
        match self {
            Value::Placeholder(k) => *self = f(*k),
            Value::Lookup { name, .. } => name.map_placeholders(f),
            Value::Array(items) => items.iter_mut().for_each(|v| v.map_placeholders(f)),
            _ => {}
        }
    }
}

/// Lowercases and collapses whitespace. Double quotes are dropped since they
/// delimit string literals in the surface syntax.
pub fn normalize_string(s: &str) -> String {
    s.split_whitespace()
        .map(|w| w.replace('"', "").to_lowercase())
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0"
        return "0".to_string();
    }
    format!("{x}")
}

pub fn format_date(d: &NaiveDateTime) -> String {
    if d.time() == NaiveTime::MIN {
        d.format("%Y-%m-%d").to_string()
    } else if d.second() == 0 && d.nanosecond() == 0 {
        d.format("%Y-%m-%dT%H:%M").to_string()
    } else {
        d.format("%Y-%m-%dT%H:%M:%S").to_string()
    }
}

pub fn format_time(t: &NaiveTime) -> String {
    if t.second() == 0 {
        t.format("%H:%M").to_string()
    } else {
        t.format("%H:%M:%S").to_string()
    }
}

pub fn parse_date(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d.and_time(NaiveTime::MIN));
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(d) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(d);
        }
    }
    // tolerate a trailing offset or fractional seconds from web data
    if s.len() > 19 && s.is_char_boundary(19) {
        if let Ok(d) = NaiveDateTime::parse_from_str(&s[..19], "%Y-%m-%dT%H:%M:%S") {
            return Some(d);
        }
    }
    None
}

pub fn parse_time(s: &str) -> Option<NaiveTime> {
    let s = s.trim();
    for fmt in ["%H:%M", "%H:%M:%S"] {
        if let Ok(t) = NaiveTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    let lower = s.to_lowercase().replace(' ', "");
    for (suffix, offset) in [("am", 0), ("pm", 12)] {
        if let Some(h) = lower.strip_suffix(suffix) {
            let (h, m) = match h.split_once(':') {
                Some((h, m)) => (h.parse::<u32>().ok()?, m.parse::<u32>().ok()?),
                None => (h.parse::<u32>().ok()?, 0),
            };
            if !(1..=12).contains(&h) {
                return None;
            }
            return NaiveTime::from_hms_opt(h % 12 + offset, m, 0);
        }
    }
    None
}

/// Units accepted after a numeric literal, with conversion to base units.
pub mod units {
    use crate::types::Dimension;

    pub fn base_unit(dim: Dimension) -> &'static str {
        match dim {
            Dimension::Duration => "s",
            Dimension::Distance => "m",
            Dimension::Currency => "usd",
            Dimension::Weight => "kg",
            Dimension::Speed => "mps",
            Dimension::Temperature => "K",
        }
    }

    /// Converts `magnitude unit` to the base unit of the unit's dimension.
    pub fn to_base(magnitude: f64, unit: &str) -> Option<(f64, Dimension)> {
        use Dimension::*;
        let linear = |factor: f64, dim| Some((magnitude * factor, dim));
        match unit {
            "m" => Some((magnitude, Distance)),
            "km" => linear(1000.0, Distance),
            "cm" => linear(0.01, Distance),
            "mi" => linear(1609.344, Distance),
            "ft" => linear(0.3048, Distance),
            "yd" => linear(0.9144, Distance),
            "s" => Some((magnitude, Duration)),
            "ms" => linear(0.001, Duration),
            "min" => linear(60.0, Duration),
            "h" => linear(3600.0, Duration),
            "day" => linear(86400.0, Duration),
            "week" => linear(604800.0, Duration),
            "kg" => Some((magnitude, Weight)),
            "g" => linear(0.001, Weight),
            "lb" => linear(0.45359237, Weight),
            "oz" => linear(0.028349523125, Weight),
            "mps" => Some((magnitude, Speed)),
            "kmph" => linear(1000.0 / 3600.0, Speed),
            "mph" => linear(0.44704, Speed),
            "K" => Some((magnitude, Temperature)),
            "C" => Some((magnitude + 273.15, Temperature)),
            "F" => Some(((magnitude - 32.0) * 5.0 / 9.0 + 273.15, Temperature)),
            "usd" => Some((magnitude, Currency)),
            _ => None,
        }
    }

    pub fn is_unit(token: &str) -> bool {
        to_base(1.0, token).is_some()
    }

    /// Parses free text such as `"5 km"`, `"5km"` or `"$12.50"` into a base-unit
    /// magnitude of the expected dimension.
    pub fn parse_measure_text(text: &str, dim: Dimension) -> Option<f64> {
        let t = text.trim();
        if dim == Dimension::Currency {
            let t = t.trim_start_matches('$').trim();
            let t = t.strip_suffix("USD").or_else(|| t.strip_suffix("usd")).unwrap_or(t);
            return t.trim().parse::<f64>().ok();
        }
        if let Ok(x) = t.parse::<f64>() {
            return Some(x);
        }
        if dim == Dimension::Duration {
            if let Some(secs) = parse_iso_duration(t) {
                return Some(secs);
            }
        }
        let split = t
            .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-'))
            .unwrap_or(t.len());
        let (num, unit) = t.split_at(split);
        let num: f64 = num.trim().parse().ok()?;
        let unit = unit.trim();
        let unit = match unit {
            "meters" | "meter" | "metres" => "m",
            "kilometers" | "kilometres" => "km",
            "miles" | "mile" => "mi",
            "minutes" | "mins" => "min",
            "hours" | "hr" | "hrs" => "h",
            "seconds" | "sec" => "s",
            "days" => "day",
            "pounds" | "lbs" => "lb",
            u => u,
        };
        let (v, d) = to_base(num, unit)?;
        (d == dim).then_some(v)
    }

    /// `PT1H30M`, `P2D`, `PT45S`.
    pub fn parse_iso_duration(s: &str) -> Option<f64> {
        let rest = s.strip_prefix('P')?;
        let (date, time) = match rest.split_once('T') {
            Some((d, t)) => (d, t),
            None => (rest, ""),
        };
        let mut total = 0.0;
        let mut scan = |part: &str, table: &[(char, f64)]| -> Option<()> {
            let mut num = String::new();
            for c in part.chars() {
                if c.is_ascii_digit() || c == '.' {
                    num.push(c);
                } else {
                    let factor = table.iter().find(|(u, _)| *u == c)?.1;
                    total += num.parse::<f64>().ok()? * factor;
                    num.clear();
                }
            }
            num.is_empty().then_some(())
        };
        scan(date, &[('W', 604800.0), ('D', 86400.0)])?;
        scan(time, &[('H', 3600.0), ('M', 60.0), ('S', 1.0)])?;
        Some(total)
    }

    pub fn base_unit_of_token(unit: &str) -> Option<Dimension> {
        to_base(1.0, unit).map(|(_, d)| d)
    }
}
