//! Serde adapters writing big integers as decimal strings.

use std::fmt::Display;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serializer};

#[derive(Deserialize)]
#[serde(untagged)]
enum Raw {
    Text(String),
    Int(i64),
    Uint(u64),
}

fn parse<'de, T: FromStr, D: Deserializer<'de>>(raw: Raw) -> Result<T, D::Error> {
    let text = match raw {
        Raw::Text(s) => s,
        Raw::Int(v) => v.to_string(),
        Raw::Uint(v) => v.to_string(),
    };
    text.trim()
        .parse()
        .map_err(|_| D::Error::custom(format!("not a decimal integer: {text:?}")))
}

pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub fn deserialize<'de, T: FromStr, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
    parse::<T, D>(Raw::deserialize(d)?)
}

pub mod vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<T: Display, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for item in v {
            seq.serialize_element(&item.to_string())?;
        }
        seq.end()
    }

    pub fn deserialize<'de, T: FromStr, D: Deserializer<'de>>(d: D) -> Result<Vec<T>, D::Error> {
        Vec::<Raw>::deserialize(d)?.into_iter().map(parse::<T, D>).collect()
    }
}

pub mod pair_opt {
    use super::*;

    pub fn serialize<T: Display, S: Serializer>(v: &Option<(T, T)>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some((a, b)) => s.collect_seq([a.to_string(), b.to_string()]),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, T: FromStr, D: Deserializer<'de>>(d: D) -> Result<Option<(T, T)>, D::Error> {
        match Option::<(Raw, Raw)>::deserialize(d)? {
            Some((a, b)) => Ok(Some((parse::<T, D>(a)?, parse::<T, D>(b)?))),
            None => Ok(None),
        }
    }
}

/// Prime-power lists as `[["p", e], ...]`.
pub mod powers {
    use super::*;
    use num_bigint::BigUint;

    pub fn serialize<S: Serializer>(v: &[(BigUint, u32)], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|(p, e)| (p.to_string(), *e)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(BigUint, u32)>, D::Error> {
        Vec::<(Raw, u32)>::deserialize(d)?
            .into_iter()
            .map(|(p, e)| Ok((parse::<BigUint, D>(p)?, e)))
            .collect()
    }
}
