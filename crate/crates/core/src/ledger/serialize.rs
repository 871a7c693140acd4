use crate::error::{Error, Result};
use crate::qnn::ParamVector;

/// 8-byte little-endian count, then every value as little-endian binary64.
pub fn canonical_serialize(params: &[f64]) -> Result<Vec<u8>> {
    if let Some((i, v)) = params.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Serialization(format!("parameter {i} is {v}")));
    }
    let mut out = Vec::with_capacity(8 + 8 * params.len());
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for v in params {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn canonical_deserialize(bytes: &[u8]) -> Result<ParamVector> {
    let count = bytes
        .get(..8)
        .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::Serialization("payload shorter than its count".into()))?;
    let expected = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(8));
    if expected != Some(bytes.len()) {
        return Err(Error::Serialization(format!(
            "payload of {} bytes does not hold {count} values",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes[8..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Serialization("non-finite value in payload".into()));
    }
    Ok(values.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout() {
        assert_eq!(canonical_serialize(&[]).unwrap(), vec![0u8; 8]);
        assert_eq!(
            canonical_serialize(&[1.0]).unwrap(),
            vec![1, 0, 0, 0, 0, 0, 0, 0, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xF0, 0x3F]
        );
        assert!(canonical_serialize(&[f64::NAN]).is_err());
        assert!(canonical_deserialize(&[1, 0, 0, 0, 0, 0, 0, 0]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bitwise(v in prop::collection::vec(-1e6f64..1e6, 0..40)) {
            let back = canonical_deserialize(&canonical_serialize(&v).unwrap()).unwrap();
            prop_assert_eq!(back.len(), v.len());
            for (a, b) in back.iter().zip(&v) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
