use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha3::{Digest, Sha3_256};
use url::Url;

use super::ClaimError;

/// Registry key grouping every claim about one page: SHA3-256 of the normalized URL.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Topic(pub [u8; 32]);

impl Topic {
    pub fn of_url(url: &str) -> Result<Self, ClaimError> {
        let normalized = normalize_url(url)?;
        Ok(Topic(Sha3_256::digest(normalized.as_bytes()).into()))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

/// Shorthand for [`Topic::of_url`].
pub fn topic_of(url: &str) -> Result<Topic, ClaimError> {
    Topic::of_url(url)
}

/// Lowercases scheme and host, drops the fragment, keeps the query.
pub fn normalize_url(raw: &str) -> Result<String, ClaimError> {
    // the parser already lowercases scheme and host
    let mut url = Url::parse(raw.trim()).map_err(|e| ClaimError::InvalidUrl(format!("{raw:?}: {e}")))?;
    if url.cannot_be_a_base() {
        return Err(ClaimError::InvalidUrl(format!("{raw:?}: not a hierarchical URL")));
    }
    url.set_fragment(None);
    Ok(url.into())
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Topic({})", &self.to_hex()[..12])
    }
}

impl FromStr for Topic {
    type Err = ClaimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|e| ClaimError::Malformed(format!("topic {s:?}: {e}")))?;
        Ok(Topic(out))
    }
}

impl Serialize for Topic {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Topic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_and_host_case_do_not_matter() {
        assert_eq!(
            topic_of("https://www.acme.com/index.html").unwrap(),
            topic_of("HTTPS://WWW.ACME.COM/index.html").unwrap()
        );
    }

    #[test]
    fn path_case_and_query_do_matter() {
        let base = topic_of("https://www.acme.com/index.html").unwrap();
        assert_ne!(base, topic_of("https://www.acme.com/INDEX.html").unwrap());
        assert_ne!(base, topic_of("https://www.acme.com/index.html?page=2").unwrap());
    }

    #[test]
    fn fragment_is_ignored() {
        assert_eq!(
            topic_of("https://www.acme.com/index.html#comments").unwrap(),
            topic_of("https://www.acme.com/index.html").unwrap()
        );
    }

    #[test]
    fn digest_matches_independent_sha3() {
        // python3: hashlib.sha3_256(b"https://www.acme.com/index.html").hexdigest()
        assert_eq!(
            topic_of("https://www.acme.com/index.html").unwrap().to_hex(),
            "1fab54ca41a16cf91c5a80ebc0d74a4ce8c6f834c0b12546a018ff4f9cf61be3"
        );
    }

    #[test]
    fn rejects_relative_and_garbage() {
        for bad in ["not a url", "/index.html", "mailto:someone@example.com", ""] {
            assert!(matches!(topic_of(bad), Err(ClaimError::InvalidUrl(_))), "{bad}");
        }
    }
}
