//! Password credentials, session tokens, and invite codes.

use pbkdf2::pbkdf2_hmac;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MIN_PASSWORD_LEN: usize = 8;
pub const DEFAULT_PBKDF2_ROUNDS: u32 = 100_000;
const SALT_LEN: usize = 16;
const DIGEST_LEN: usize = 32;

/// Stored form of a password: never the password itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credential {
    pub scheme: String,
    pub rounds: u32,
    pub salt: String,
    pub digest: String,
}

/// Checks a presented secret against a stored credential.
///
/// Handlers only talk to this trait, so an institutional identity provider can
/// replace the local password store.
pub trait CredentialVerifier: Send + Sync {
    fn enroll(&self, password: &str) -> Credential;
    fn verify(&self, credential: &Credential, password: &str) -> bool;
}

/// Salted PBKDF2-HMAC-SHA256.
#[derive(Clone, Debug)]
pub struct Pbkdf2Verifier {
    pub rounds: u32,
}

impl Default for Pbkdf2Verifier {
    fn default() -> Self {
        Pbkdf2Verifier {
            rounds: DEFAULT_PBKDF2_ROUNDS,
        }
    }
}

fn derive(password: &str, salt: &[u8], rounds: u32) -> [u8; DIGEST_LEN] {
    let mut out = [0u8; DIGEST_LEN];
    pbkdf2_hmac::<Sha256>(password.as_bytes(), salt, rounds, &mut out);
    out
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

impl CredentialVerifier for Pbkdf2Verifier {
    fn enroll(&self, password: &str) -> Credential {
        let mut salt = [0u8; SALT_LEN];
        rand::rng().fill(&mut salt);
        Credential {
            scheme: "pbkdf2-sha256".into(),
            rounds: self.rounds,
            salt: hex::encode(salt),
            digest: hex::encode(derive(password, &salt, self.rounds)),
        }
    }

    fn verify(&self, credential: &Credential, password: &str) -> bool {
        let (Ok(salt), Ok(digest)) = (hex::decode(&credential.salt), hex::decode(&credential.digest)) else {
            return false;
        };
        credential.scheme == "pbkdf2-sha256"
            && constant_time_eq(&derive(password, &salt, credential.rounds), &digest)
    }
}

/// 32 random bytes, hex-encoded.
pub fn new_token() -> String {
    let mut bytes = [0u8; 32];
    rand::rng().fill(&mut bytes);
    hex::encode(bytes)
}

/// Sessions are stored under this digest so a leaked state file holds no usable tokens.
pub fn token_key(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

const CROCKFORD: &[u8; 32] = b"0123456789ABCDEFGHJKMNPQRSTVWXYZ";
pub const INVITE_CODE_LEN: usize = 8;

pub fn new_invite_code() -> String {
    let mut rng = rand::rng();
    (0..INVITE_CODE_LEN)
        .map(|_| CROCKFORD[rng.random_range(0..32)] as char)
        .collect()
}

/// Canonical spelling of a typed invite code: case-folded, hyphens dropped,
/// and the Crockford look-alikes `I`/`L` and `O` read as `1` and `0`.
pub fn normalize_invite_code(code: &str) -> String {
    code.chars()
        .filter(|c| *c != '-' && !c.is_whitespace())
        .map(|c| match c.to_ascii_uppercase() {
            'I' | 'L' => '1',
            'O' => '0',
            c => c,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verifier_accepts_only_the_enrolled_password() {
        let v = Pbkdf2Verifier { rounds: 10 };
        let c = v.enroll("correct horse");
        assert!(v.verify(&c, "correct horse"));
        assert!(!v.verify(&c, "correct horsE"));
        assert!(!c.digest.contains("horse"));
        let again = v.enroll("correct horse");
        assert_ne!(c.salt, again.salt);
        assert_ne!(c.digest, again.digest);
    }

    #[test]
    fn known_pbkdf2_vector() {
        // RFC 7914 section 11, first PBKDF2-HMAC-SHA256 vector (c = 1, first 32 bytes).
        let out = derive("passwd", b"salt", 1);
        assert_eq!(
            hex::encode(out),
            "55ac046e56e3089fec1691c22544b605f94185216dde0465e68b9d57c20dacbc"
        );
    }

    #[test]
    fn tokens_are_64_hex() {
        let t = new_token();
        assert_eq!(t.len(), 64);
        assert!(t.bytes().all(|b| b.is_ascii_hexdigit()));
        assert_ne!(t, new_token());
    }

    #[test]
    fn invite_codes_use_crockford_alphabet() {
        for _ in 0..100 {
            let c = new_invite_code();
            assert_eq!(c.len(), INVITE_CODE_LEN);
            assert!(c.bytes().all(|b| CROCKFORD.contains(&b)));
            assert_eq!(normalize_invite_code(&c), c);
        }
        assert_eq!(normalize_invite_code("abcd-ilo0"), "ABCD1100");
    }
}
