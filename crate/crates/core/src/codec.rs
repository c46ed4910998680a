//! Serialization helpers shared by model files and reports.

use std::io;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// A named tensor stored as base64 of little-endian `f64` values.
#[derive(Clone, Debug, PartialEq, SerializeDerive, Deserialize)]
pub struct TensorBlob {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: String,
}

impl TensorBlob {
    pub fn encode(name: impl Into<String>, m: &Matrix) -> Self {
        let mut bytes = Vec::with_capacity(m.as_slice().len() * 8);
        for x in m.as_slice() {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        TensorBlob {
            name: name.into(),
            rows: m.rows(),
            cols: m.cols(),
            data: STANDARD.encode(bytes),
        }
    }

    pub fn decode(&self) -> Result<Matrix> {
        let bytes = STANDARD
            .decode(&self.data)
            .map_err(|e| Error::invalid(format!("tensor `{}`: {e}", self.name)))?;
        if bytes.len() != self.rows * self.cols * 8 {
            return Err(Error::shape(format!(
                "tensor `{}`: {} bytes for {}x{}",
                self.name,
                bytes.len(),
                self.rows,
                self.cols
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Matrix::from_vec(self.rows, self.cols, values)
    }
}

/// Pretty JSON formatter that writes every float with 17 significant digits
/// (non-finite values become `null`).
struct FixedPrecision<'a>(PrettyFormatter<'a>);

macro_rules! forward {
    ($($name:ident ( $($arg:ident : $ty:ty),* );)*) => {
        $(
            #[inline]
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl Formatter for FixedPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{}", format_f64(value))
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    forward! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

/// `x` with 17 significant digits in scientific notation.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty-printed JSON with fixed 17-significant-digit floats, newline
/// terminated.
pub fn to_json_fixed<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FixedPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}
