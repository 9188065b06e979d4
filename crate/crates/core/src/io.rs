//! Measure JSON and fixed-precision number output.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::measure::{Atom, Domain, Measure};

#[derive(Serialize, Deserialize)]
struct AcPart {
    grid: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureJson {
    domain: Domain,
    #[serde(default)]
    atoms: Vec<Atom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ac: Option<AcPart>,
}

impl Serialize for Measure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let ac =
            (!self.grid().is_empty()).then(|| AcPart { grid: self.grid().to_vec(), values: self.values().to_vec() });
        MeasureJson { domain: self.domain(), atoms: self.atoms().to_vec(), ac }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MeasureJson::deserialize(d)?;
        let (grid, values) = j.ac.map(|a| (a.grid, a.values)).unwrap_or_default();
        Measure::new(j.domain, j.atoms, grid, values).map_err(serde::de::Error::custom)
    }
}

/// Parses measure JSON; syntax errors carry line and column.
pub fn parse_measure(text: &str) -> Result<Measure> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_measure(path: &Path) -> Result<Measure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))?;
    parse_measure(&text).map_err(|e| Error::Argument(format!("{}: {e}", path.display())))
}

/// Pretty JSON with every float written to 17 significant digits.
pub struct Fixed17<'a>(PrettyFormatter<'a>);

impl Default for Fixed17<'_> {
    fn default() -> Self {
        Fixed17(PrettyFormatter::new())
    }
}

/// A float with 17 significant digits, or `null` when it is not finite.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

impl Formatter for Fixed17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, x: f64) -> io::Result<()> {
        w.write_all(fmt17(x).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, x: f32) -> io::Result<()> {
        self.write_f64(w, x as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?).map_err(|e| Error::Argument(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws;

    #[test]
    fn round_trip() {
        for m in [laws::bernoulli(), laws::semicircle(0.5, 2.0, 101), Measure::dirac(0.1)] {
            let back = parse_measure(&to_json(&m).unwrap()).unwrap();
            assert_eq!(back.grid(), m.grid());
            assert_eq!(back.atoms().len(), m.atoms().len());
            for (a, b) in back.values().iter().zip(m.values()) {
                assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
            }
            for (a, b) in back.atoms().iter().zip(m.atoms()) {
                assert!(a.x == b.x && (a.mass - b.mass).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(-2.0), "-2.0000000000000000e0");
        let s = to_json(&vec![1.0 / 3.0]).unwrap();
        assert!(s.contains("3.3333333333333331e-1"), "{s}");
    }

    #[test]
    fn reads_spec_shape() {
        let m =
            parse_measure(r#"{"domain":"positive","atoms":[{"x":0,"mass":0.5}],"ac":{"grid":[0,1],"values":[1,0]}}"#)
                .unwrap();
        assert_eq!(m.domain(), Domain::Positive);
        assert!((m.atom_mass() - 0.5).abs() < 1e-15);
        let m = parse_measure(r#"{"domain":"real","atoms":[{"x":1,"mass":1}]}"#).unwrap();
        assert_eq!(m.as_dirac(), Some(1.0));
    }

    #[test]
    fn syntax_errors_have_positions() {
        let e = parse_measure("{\n  \"domain\": \"real\",\n  \"atoms\": [}\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("column"), "{msg}");
        assert!(parse_measure(r#"{"domain":"positive","atoms":[{"x":-1,"mass":1}]}"#).is_err());
        assert!(parse_measure(r#"{"domain":"real","atom":[]}"#).is_err());
    }
}
