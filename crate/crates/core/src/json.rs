//! Deterministic JSON: sorted object keys, floats at 17 significant digits.

use serde::Serialize;
use serde_json::ser::Formatter;
use std::io;

struct FixedFloats;

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value == 0.0 {
            return writer.write_all(b"0.0");
        }
        write!(writer, "{:.16e}", value)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serialize through `serde_json::Value` (whose maps are ordered) and write
/// floats in a fixed exponent form.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats);
    v.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json writes utf-8"))
}
