//! One-time pad over bit strings.
//!
//! Text is encoded as its UTF-8 bytes, each byte most-significant bit first.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{QkdError, Result};

/// Ordered bits, each stored as `0` or `1`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new() -> Self {
        BitString(Vec::new())
    }

    /// Panics if any element is not 0 or 1.
    pub fn from_bits(bits: Vec<u8>) -> Self {
        assert!(bits.iter().all(|&b| b <= 1), "bits must be 0 or 1");
        BitString(bits)
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        BitString(
            bytes
                .iter()
                .flat_map(|&byte| (0..8).rev().map(move |k| (byte >> k) & 1))
                .collect(),
        )
    }

    pub fn from_text(text: &str) -> Self {
        Self::from_bytes(text.as_bytes())
    }

    pub fn from_hex(hex: &str) -> Result<Self> {
        let hex = hex.trim();
        let hex = hex.strip_prefix("0x").unwrap_or(hex);
        if !hex.len().is_multiple_of(2) {
            return Err(QkdError::Parse("hex payload has odd length".into()));
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|i| {
                u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| {
                    QkdError::Parse(format!("bad hex digit pair `{}`", &hex[i..i + 2]))
                })
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self::from_bytes(&bytes))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Packs MSB first; a trailing partial byte is zero-padded on the right.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|c| {
                c.iter()
                    .enumerate()
                    .fold(0u8, |acc, (k, &b)| acc | (b << (7 - k)))
            })
            .collect()
    }

    /// Lowercase hex of [`BitString::to_bytes`].
    pub fn to_hex(&self) -> String {
        self.to_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_text(&self) -> Result<String> {
        if !self.0.len().is_multiple_of(8) {
            return Err(QkdError::Parse(
                "bit length is not a whole number of bytes".into(),
            ));
        }
        String::from_utf8(self.to_bytes()).map_err(|e| QkdError::Parse(e.to_string()))
    }

    pub fn slice(&self, start: usize, len: usize) -> BitString {
        BitString(self.0[start..start + len].to_vec())
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len() != other.len() {
            return Err(QkdError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(BitString(
            self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect(),
        ))
    }

    pub fn hamming_distance(&self, other: &BitString) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
            + self.len().abs_diff(other.len())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = QkdError;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(QkdError::Parse(format!("`{other}` is not a bit"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(BitString)
    }
}

impl From<Vec<u8>> for BitString {
    fn from(bits: Vec<u8>) -> Self {
        BitString::from_bits(bits)
    }
}

// Serialized as a string of '0'/'1' characters.
impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `E_i = D_i XOR K_i` over the first `data.len()` key bits.
pub fn encrypt(data: &BitString, key: &BitString) -> Result<BitString> {
    if key.len() < data.len() {
        return Err(QkdError::KeyTooShort {
            needed: data.len(),
            available: key.len(),
        });
    }
    data.xor(&key.slice(0, data.len()))
}

/// Inverse of [`encrypt`]; the same XOR.
pub fn decrypt(cipher: &BitString, key: &BitString) -> Result<BitString> {
    encrypt(cipher, key)
}

/// A key consumed strictly front to back so no bit is used twice.
#[derive(Clone, Debug)]
pub struct OneTimePad {
    key: BitString,
    offset: usize,
}

/// Result of one pad application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadOutput {
    pub bits: BitString,
    /// First key bit used.
    pub key_offset: usize,
    pub consumed: usize,
}

impl OneTimePad {
    pub fn new(key: BitString) -> Self {
        OneTimePad { key, offset: 0 }
    }

    /// Resumes a pad whose first `offset` bits were already spent.
    pub fn with_offset(key: BitString, offset: usize) -> Result<Self> {
        if offset > key.len() {
            return Err(QkdError::KeyTooShort {
                needed: offset,
                available: key.len(),
            });
        }
        Ok(OneTimePad { key, offset })
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn remaining(&self) -> usize {
        self.key.len() - self.offset
    }

    /// XORs `data` with the next unused key bits and advances the offset.
    /// Refuses without consuming anything when the key runs short.
    pub fn apply(&mut self, data: &BitString) -> Result<PadOutput> {
        if self.remaining() < data.len() {
            return Err(QkdError::KeyTooShort {
                needed: data.len(),
                available: self.remaining(),
            });
        }
        let segment = self.key.slice(self.offset, data.len());
        let bits = data.xor(&segment)?;
        let out = PadOutput {
            bits,
            key_offset: self.offset,
            consumed: data.len(),
        };
        self.offset += data.len();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn xor_truth_table() {
        for (a, b, e) in [
            ("0", "0", "0"),
            ("0", "1", "1"),
            ("1", "0", "1"),
            ("1", "1", "0"),
        ] {
            assert_eq!(encrypt(&bs(a), &bs(b)).unwrap(), bs(e));
        }
    }

    #[test]
    fn worked_example() {
        let e = encrypt(&bs("1010"), &bs("0110")).unwrap();
        assert_eq!(e, bs("1100"));
        assert_eq!(decrypt(&e, &bs("0110")).unwrap(), bs("1010"));
    }

    #[test]
    fn zero_key_is_identity() {
        let d = BitString::from_text("QKD");
        let k = BitString::from_bits(vec![0; 24]);
        assert_eq!(encrypt(&d, &k).unwrap(), d);
    }

    #[test]
    fn short_key_refused() {
        assert!(matches!(
            encrypt(&bs("1010"), &bs("011")),
            Err(QkdError::KeyTooShort {
                needed: 4,
                available: 3
            })
        ));
    }

    #[test]
    fn excess_key_is_ignored() {
        assert_eq!(encrypt(&bs("11"), &bs("0111")).unwrap(), bs("10"));
    }

    #[test]
    fn text_encoding_is_msb_first() {
        let b = BitString::from_text("A");
        assert_eq!(b, bs("01000001"));
        assert_eq!(b.to_hex(), "41");
        assert_eq!(b.to_text().unwrap(), "A");
        assert_eq!(BitString::from_hex("0x41").unwrap(), b);
        assert!(BitString::from_hex("4").is_err());
        assert!(BitString::from_hex("zz").is_err());
        assert_eq!(bs("1").to_hex(), "80");
    }

    #[test]
    fn pad_consumes_prefixes_without_reuse() {
        let key = BitString::from_hex("a5c3").unwrap();
        let mut pad = OneTimePad::new(key.clone());
        let m1 = BitString::from_hex("ff").unwrap();
        let c1 = pad.apply(&m1).unwrap();
        assert_eq!(c1.key_offset, 0);
        assert_eq!(c1.bits.to_hex(), "5a");
        let c2 = pad.apply(&m1).unwrap();
        assert_eq!(c2.key_offset, 8);
        assert_eq!(c2.bits.to_hex(), "3c");
        assert!(pad.apply(&bs("1")).is_err());
        assert_eq!(pad.offset(), 16);

        let mut rx = OneTimePad::with_offset(key, 8).unwrap();
        assert_eq!(rx.apply(&c2.bits).unwrap().bits, m1);
    }

    #[test]
    fn serde_as_bit_text() {
        let b = bs("1001");
        assert_eq!(serde_json::to_string(&b).unwrap(), "\"1001\"");
        assert_eq!(serde_json::from_str::<BitString>("\"1001\"").unwrap(), b);
        assert!(serde_json::from_str::<BitString>("\"102\"").is_err());
    }
}
