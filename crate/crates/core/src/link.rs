//! Self-describing content links.
//!
//! A link names its hash function and digest length alongside the digest, and
//! renders as `<base>-<fn_id>-<len>-<hexdigest>`, for example
//! `f-16-32-1fab54ca…`. `f` is the base-16 tag, `16` the hash function code in
//! hex (SHA3-256), `32` the digest length in decimal bytes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha3::{Digest, Sha3_256};
use thiserror::Error;

/// Multibase-style tag for lowercase hexadecimal.
pub const BASE16_TAG: &str = "f";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HashFn {
    Sha3_256,
}

impl HashFn {
    pub fn code(self) -> u8 {
        match self {
            HashFn::Sha3_256 => 0x16,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0x16 => Some(HashFn::Sha3_256),
            _ => None,
        }
    }

    pub fn digest_len(self) -> usize {
        match self {
            HashFn::Sha3_256 => 32,
        }
    }

    pub fn digest(self, bytes: &[u8]) -> Vec<u8> {
        match self {
            HashFn::Sha3_256 => Sha3_256::digest(bytes).to_vec(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid content link {0:?}: {1}")]
pub struct LinkParseError(pub String, pub &'static str);

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentLink {
    hash_fn: HashFn,
    digest: Vec<u8>,
}

impl ContentLink {
    /// Link for `bytes` under the default hash function.
    pub fn of(bytes: &[u8]) -> Self {
        Self::with_hash(HashFn::Sha3_256, bytes)
    }

    pub fn with_hash(hash_fn: HashFn, bytes: &[u8]) -> Self {
        Self { hash_fn, digest: hash_fn.digest(bytes) }
    }

    /// Rebuilds a SHA3-256 link from a digest computed elsewhere (claim UIDs, receipts).
    pub fn from_sha3_digest(digest: [u8; 32]) -> Self {
        Self { hash_fn: HashFn::Sha3_256, digest: digest.to_vec() }
    }

    pub fn hash_fn(&self) -> HashFn {
        self.hash_fn
    }

    pub fn digest(&self) -> &[u8] {
        &self.digest
    }

    pub fn digest_len(&self) -> usize {
        self.digest.len()
    }

    /// Whether `bytes` hash to this link.
    pub fn matches(&self, bytes: &[u8]) -> bool {
        self.hash_fn.digest(bytes) == self.digest
    }
}

impl fmt::Display for ContentLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{BASE16_TAG}-{:02x}-{}-{}",
            self.hash_fn.code(),
            self.digest.len(),
            hex::encode(&self.digest)
        )
    }
}

impl fmt::Debug for ContentLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentLink({self})")
    }
}

impl FromStr for ContentLink {
    type Err = LinkParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |why| LinkParseError(s.to_string(), why);
        let mut parts = s.splitn(4, '-');
        let (Some(base), Some(code), Some(len), Some(digest)) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(err("expected four dash-separated parts"));
        };
        if base != BASE16_TAG {
            return Err(err("unsupported base"));
        }
        if code.len() != 2 {
            return Err(err("hash function code must be two hex digits"));
        }
        let code = u8::from_str_radix(code, 16).map_err(|_| err("bad hash function code"))?;
        let hash_fn = HashFn::from_code(code).ok_or_else(|| err("unknown hash function"))?;
        let len: usize = len.parse().map_err(|_| err("bad digest length"))?;
        if digest.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(err("digest must be lowercase hex"));
        }
        let digest = hex::decode(digest).map_err(|_| err("digest is not hex"))?;
        if digest.len() != len || len != hash_fn.digest_len() {
            return Err(err("digest length mismatch"));
        }
        Ok(Self { hash_fn, digest })
    }
}

impl Serialize for ContentLink {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ContentLink {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rendered_form() {
        let link = ContentLink::of(b"https://www.acme.com/index.html");
        assert_eq!(
            link.to_string(),
            "f-16-32-1fab54ca41a16cf91c5a80ebc0d74a4ce8c6f834c0b12546a018ff4f9cf61be3"
        );
    }

    #[test]
    fn rejects_malformed() {
        let good = ContentLink::of(b"x").to_string();
        for bad in [
            good.replacen("f-", "z-", 1),
            good.replacen("-16-", "-17-", 1),
            good.replacen("-32-", "-31-", 1),
            good[..good.len() - 2].to_string(),
            good.to_uppercase(),
            "f-16".to_string(),
        ] {
            assert!(bad.parse::<ContentLink>().is_err(), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn render_parse_recovers_parts(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
            let link = ContentLink::of(&bytes);
            let back: ContentLink = link.to_string().parse().unwrap();
            prop_assert_eq!(back.hash_fn(), HashFn::Sha3_256);
            prop_assert_eq!(back.digest_len(), 32);
            prop_assert_eq!(&back, &link);
            prop_assert!(back.matches(&bytes));
        }
    }
}
