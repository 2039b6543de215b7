//! Wallet-style identities.
//!
//! Keys are secp256k1 and signatures are 65-byte recoverable ECDSA (`r || s || v`)
//! over a 32-byte prehash, so a verifier needs only the signer's address: the
//! public key is recovered from the signature and hashed back to an address.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use k256::ecdsa::{RecoveryId, Signature as EcdsaSignature, SigningKey, VerifyingKey};
use rand::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha3::{Digest, Keccak256};

use super::ClaimError;

/// Length of an encoded recoverable signature.
pub const SIGNATURE_LEN: usize = 65;

/// 20-byte account address: the last 20 bytes of Keccak-256 over the
/// uncompressed public key (without the `0x04` tag).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub fn of(key: &PublicKey) -> Self {
        let point = key.0.to_encoded_point(false);
        let hash = Keccak256::digest(&point.as_bytes()[1..]);
        let mut out = [0u8; 20];
        out.copy_from_slice(&hash[12..]);
        Address(out)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({self})")
    }
}

impl FromStr for Address {
    type Err = ClaimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hex_part = s
            .strip_prefix("0x")
            .ok_or_else(|| ClaimError::Malformed(format!("address without 0x prefix: {s:?}")))?;
        if hex_part.len() != 40 || hex_part.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(ClaimError::Malformed(format!("not a lowercase 20-byte address: {s:?}")));
        }
        let mut out = [0u8; 20];
        hex::decode_to_slice(hex_part, &mut out)
            .map_err(|e| ClaimError::Malformed(format!("address {s:?}: {e}")))?;
        Ok(Address(out))
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A verification key, rendered as hex of its compressed SEC1 encoding.
/// Publishers register this as their certificate.
#[derive(Clone, PartialEq, Eq)]
pub struct PublicKey(pub(crate) VerifyingKey);

impl PublicKey {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0.to_encoded_point(true).as_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self, ClaimError> {
        let bytes = hex::decode(s).map_err(|e| ClaimError::Malformed(format!("public key: {e}")))?;
        VerifyingKey::from_sec1_bytes(&bytes)
            .map(PublicKey)
            .map_err(|_| ClaimError::Malformed("public key is not a valid curve point".into()))
    }

    pub fn address(&self) -> Address {
        Address::of(self)
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", self.to_hex())
    }
}

impl Serialize for PublicKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for PublicKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PublicKey::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Raw signature bytes as carried on the wire. Length is not validated until use.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Signature(pub Vec<u8>);

impl Signature {
    /// Recovers the key that produced this signature over `digest`.
    pub fn recover(&self, digest: &[u8; 32]) -> Result<PublicKey, ClaimError> {
        if self.0.len() != SIGNATURE_LEN {
            return Err(ClaimError::MalformedSignature(format!(
                "expected {SIGNATURE_LEN} bytes, got {}",
                self.0.len()
            )));
        }
        let sig = EcdsaSignature::from_slice(&self.0[..64])
            .map_err(|_| ClaimError::MalformedSignature("invalid r/s scalars".into()))?;
        let recid = RecoveryId::from_byte(self.0[64])
            .ok_or_else(|| ClaimError::MalformedSignature("invalid recovery byte".into()))?;
        VerifyingKey::recover_from_prehash(digest, &sig, recid)
            .map(PublicKey)
            .map_err(|_| ClaimError::MalformedSignature("no key recoverable".into()))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, ClaimError> {
        hex::decode(s)
            .map(Signature)
            .map_err(|e| ClaimError::MalformedSignature(format!("signature hex: {e}")))
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", self.to_hex())
    }
}

/// A signing identity. The address doubles as the account on the ledger.
#[derive(Clone)]
pub struct Identity {
    signing_key: SigningKey,
    public_key: PublicKey,
    address: Address,
}

impl Identity {
    pub fn from_seed(seed: [u8; 32]) -> Result<Self, ClaimError> {
        let signing_key = SigningKey::from_bytes(&seed.into())
            .map_err(|_| ClaimError::Malformed("seed is not a valid secp256k1 scalar".into()))?;
        let public_key = PublicKey(*signing_key.verifying_key());
        let address = Address::of(&public_key);
        Ok(Self { signing_key, public_key, address })
    }

    pub fn generate<R: RngCore>(rng: &mut R) -> Self {
        loop {
            let mut seed = [0u8; 32];
            rng.fill_bytes(&mut seed);
            if let Ok(id) = Self::from_seed(seed) {
                return id;
            }
        }
    }

    pub fn address(&self) -> Address {
        self.address
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.public_key
    }

    pub fn seed(&self) -> [u8; 32] {
        self.signing_key.to_bytes().into()
    }

    pub fn seed_hex(&self) -> String {
        hex::encode(self.seed())
    }

    pub fn from_seed_hex(s: &str) -> Result<Self, ClaimError> {
        let mut seed = [0u8; 32];
        hex::decode_to_slice(s.trim(), &mut seed)
            .map_err(|e| ClaimError::Malformed(format!("key seed: {e}")))?;
        Self::from_seed(seed)
    }

    /// RFC 6979 deterministic signature over a prehashed message.
    pub fn sign_digest(&self, digest: &[u8; 32]) -> Signature {
        let (sig, recid) = self
            .signing_key
            .sign_prehash_recoverable(digest)
            .expect("32-byte prehash is always signable");
        let mut out = Vec::with_capacity(SIGNATURE_LEN);
        out.extend_from_slice(&sig.to_bytes());
        out.push(recid.to_byte());
        Signature(out)
    }

    /// Reads a hex-encoded 32-byte seed.
    pub fn load(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_seed_hex(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    /// Writes the seed as hex, readable by the owner only.
    pub fn save(&self, path: &Path) -> io::Result<()> {
        let mut opts = fs::OpenOptions::new();
        opts.write(true).create(true).truncate(true);
        #[cfg(unix)]
        {
            use std::os::unix::fs::OpenOptionsExt;
            opts.mode(0o600);
        }
        use io::Write;
        let mut f = opts.open(path)?;
        writeln!(f, "{}", self.seed_hex())?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            fs::set_permissions(path, fs::Permissions::from_mode(0o600))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Identity").field("address", &self.address).finish_non_exhaustive()
    }
}

impl Serialize for Identity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.seed_hex())
    }
}

impl<'de> Deserialize<'de> for Identity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Identity::from_seed_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn address_is_stable_function_of_public_key() {
        let id = Identity::from_seed([7u8; 32]).unwrap();
        let again = PublicKey::from_hex(&id.public_key().to_hex()).unwrap();
        assert_eq!(Address::of(&again), id.address());
        assert_eq!(id.address().to_string().parse::<Address>().unwrap(), id.address());
    }

    #[test]
    fn known_address_for_fixed_seed() {
        // Computed independently with Keccak-256 over the uncompressed point.
        let id = Identity::from_seed([7u8; 32]).unwrap();
        assert_eq!(id.address().to_string(), "0x4a62316623ad457f02cdc5d997ded67a383ec569");
    }

    #[test]
    fn signatures_are_deterministic_and_recoverable() {
        let id = Identity::from_seed([9u8; 32]).unwrap();
        let digest = [3u8; 32];
        let a = id.sign_digest(&digest);
        assert_eq!(a, id.sign_digest(&digest));
        assert_eq!(a.0.len(), SIGNATURE_LEN);
        assert_eq!(a.recover(&digest).unwrap(), *id.public_key());
    }

    #[test]
    fn truncated_signature_is_malformed() {
        let id = Identity::from_seed([9u8; 32]).unwrap();
        let mut sig = id.sign_digest(&[1u8; 32]);
        sig.0.truncate(40);
        assert!(matches!(sig.recover(&[1u8; 32]), Err(ClaimError::MalformedSignature(_))));
    }

    #[test]
    fn zero_seed_is_rejected() {
        assert!(Identity::from_seed([0u8; 32]).is_err());
    }

    #[cfg(unix)]
    #[test]
    fn key_file_is_owner_only() {
        use std::os::unix::fs::PermissionsExt;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("key.hex");
        let id = Identity::from_seed([5u8; 32]).unwrap();
        id.save(&path).unwrap();
        let mode = fs::metadata(&path).unwrap().permissions().mode() & 0o777;
        assert_eq!(mode, 0o600);
        assert_eq!(Identity::load(&path).unwrap().address(), id.address());
    }
}
