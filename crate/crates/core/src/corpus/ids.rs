use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Granularity of a catalogued entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Project,
    Package,
    Class,
    Method,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Project => "project",
            EntityKind::Package => "package",
            EntityKind::Class => "class",
            EntityKind::Method => "method",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Deterministic 128-bit entity identifier, rendered as 32 lowercase hex digits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId([u8; 16]);

impl EntityId {
    pub fn from_bytes(bytes: [u8; 16]) -> Self {
        EntityId(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EntityId({})", self.to_hex())
    }
}

impl FromStr for EntityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() != 32 || s.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(Error::InvalidArgument(format!("malformed entity id `{s}`")));
        }
        let mut out = [0u8; 16];
        hex::decode_to_slice(s, &mut out)
            .map_err(|_| Error::InvalidArgument(format!("malformed entity id `{s}`")))?;
        Ok(EntityId(out))
    }
}

impl Serialize for EntityId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for EntityId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hashes `kind`, a NUL separator and `canonical_key` with SHA-256 and keeps
/// the first 16 bytes.
pub fn assign_id(kind: EntityKind, canonical_key: &str) -> Result<EntityId> {
    if canonical_key.is_empty() {
        return Err(Error::InvalidArgument("empty canonical key".into()));
    }
    let mut hasher = Sha256::new();
    hasher.update(kind.as_str().as_bytes());
    hasher.update([0u8]);
    hasher.update(canonical_key.as_bytes());
    let digest = hasher.finalize();
    let mut out = [0u8; 16];
    out.copy_from_slice(&digest[..16]);
    Ok(EntityId(out))
}

pub fn project_key(name: &str, rel_path: &str) -> String {
    format!("project:{name}@{rel_path}")
}

pub fn package_key(project_rel: &str, package_path: &str) -> String {
    format!("package:{project_rel}/{package_path}")
}

pub fn class_key(file_rel: &str, class_name: &str) -> String {
    // Secondary top-level classes share the file; disambiguate by name.
    let stem = file_rel
        .rsplit('/')
        .next()
        .and_then(|f| f.split('.').next())
        .unwrap_or("");
    if stem == class_name {
        format!("class:{file_rel}")
    } else {
        format!("class:{file_rel}#{class_name}")
    }
}

pub fn method_key(file_rel: &str, signature: &str, start_line: u32) -> String {
    format!("method:{file_rel}#{signature}@{start_line}")
}
