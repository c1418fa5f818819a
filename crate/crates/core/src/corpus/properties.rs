use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::csvio::{read_csv, write_csv};
use super::ids::EntityId;
use crate::error::{Error, Result};

/// Value type carried by a property.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Integer,
    Text,
    Flag,
}

/// (code, kind, has a built-in computer)
const BUILTIN: &[(&str, ValueKind, bool)] = &[
    ("TLOC", ValueKind::Integer, true),
    ("SLOC", ValueKind::Integer, true),
    ("CMPX", ValueKind::Integer, true),
    ("MXIN", ValueKind::Integer, true),
    ("NPTH", ValueKind::Integer, true),
    ("NMTK", ValueKind::Integer, true),
    ("NMPR", ValueKind::Integer, true),
    ("NUID", ValueKind::Integer, true),
    ("NMOP", ValueKind::Integer, true),
    ("NMLT", ValueKind::Integer, true),
    ("NMRT", ValueKind::Integer, true),
    ("NAME", ValueKind::Text, true),
    ("NUPC", ValueKind::Integer, true),
    ("NUCC", ValueKind::Integer, true),
    ("NMNC", ValueKind::Integer, true),
    ("NMLC", ValueKind::Integer, true),
    // import-only: produced by external analyzers
    ("NLDF", ValueKind::Flag, false),
    ("RSLK", ValueKind::Flag, false),
    ("NTID", ValueKind::Text, false),
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PropertyKey(String);

impl PropertyKey {
    pub fn new(code: &str) -> Result<Self> {
        let builtin = BUILTIN.iter().any(|(c, _, _)| *c == code);
        let valid_user = (4..=16).contains(&code.len()) && code.bytes().all(|b| b.is_ascii_uppercase());
        if builtin || valid_user {
            Ok(PropertyKey(code.to_string()))
        } else {
            Err(Error::InvalidArgument(format!(
                "property code `{code}` must be 4-16 uppercase letters"
            )))
        }
    }

    pub fn code(&self) -> &str {
        &self.0
    }

    pub fn kind(&self) -> ValueKind {
        BUILTIN
            .iter()
            .find(|(c, _, _)| *c == self.0)
            .map_or(ValueKind::Text, |(_, k, _)| *k)
    }

    pub fn is_builtin(&self) -> bool {
        BUILTIN.iter().any(|(c, _, _)| *c == self.0)
    }

    pub fn has_computer(&self) -> bool {
        BUILTIN.iter().any(|(c, _, computed)| *c == self.0 && *computed)
    }

    pub fn builtins() -> impl Iterator<Item = PropertyKey> {
        BUILTIN.iter().map(|(c, _, _)| PropertyKey(c.to_string()))
    }
}

impl TryFrom<String> for PropertyKey {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        PropertyKey::new(&s)
    }
}

impl From<PropertyKey> for String {
    fn from(k: PropertyKey) -> String {
        k.0
    }
}

impl fmt::Display for PropertyKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum PropertyValue {
    Integer(i64),
    Text(String),
    Flag(bool),
}

impl PropertyValue {
    pub fn parse(kind: ValueKind, raw: &str) -> Result<Self> {
        match kind {
            ValueKind::Integer => raw
                .parse()
                .map(PropertyValue::Integer)
                .map_err(|_| Error::InvalidArgument(format!("`{raw}` is not an integer"))),
            ValueKind::Flag => match raw {
                "true" => Ok(PropertyValue::Flag(true)),
                "false" => Ok(PropertyValue::Flag(false)),
                _ => Err(Error::InvalidArgument(format!("`{raw}` is not a flag"))),
            },
            ValueKind::Text => Ok(PropertyValue::Text(raw.to_string())),
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            PropertyValue::Integer(v) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for PropertyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertyValue::Integer(v) => write!(f, "{v}"),
            PropertyValue::Text(s) => f.write_str(s),
            PropertyValue::Flag(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyTable {
    pub key: PropertyKey,
    pub rows: BTreeMap<EntityId, PropertyValue>,
}

#[derive(Serialize, Deserialize)]
struct PropertyRow {
    method_id: EntityId,
    value: String,
}

pub const PROPERTY_HEADER: &[&str] = &["method_id", "value"];

/// Per-key method property tables, validated against a set of known methods.
#[derive(Debug, Clone, Default)]
pub struct PropertyStore {
    methods: BTreeSet<EntityId>,
    tables: BTreeMap<PropertyKey, PropertyTable>,
}

impl PropertyStore {
    pub fn new(methods: impl IntoIterator<Item = EntityId>) -> Self {
        PropertyStore {
            methods: methods.into_iter().collect(),
            tables: BTreeMap::new(),
        }
    }

    /// Stores the valid rows under `key`, replacing any previous table, and
    /// returns the rows whose method id is unknown.
    pub fn add_property(
        &mut self,
        key: PropertyKey,
        rows: impl IntoIterator<Item = (EntityId, PropertyValue)>,
    ) -> Vec<(EntityId, PropertyValue)> {
        let mut table = BTreeMap::new();
        let mut rejected = Vec::new();
        for (id, v) in rows {
            if self.methods.contains(&id) {
                table.insert(id, v);
            } else {
                rejected.push((id, v));
            }
        }
        self.tables.insert(key.clone(), PropertyTable { key, rows: table });
        rejected
    }

    pub fn get_property(&self, key: &PropertyKey, method_ids: &[EntityId]) -> Result<Vec<Option<PropertyValue>>> {
        let table = self.table(key)?;
        Ok(method_ids.iter().map(|id| table.rows.get(id).cloned()).collect())
    }

    pub fn table(&self, key: &PropertyKey) -> Result<&PropertyTable> {
        self.tables
            .get(key)
            .ok_or_else(|| Error::NotFound(format!("property {key}")))
    }

    pub fn keys(&self) -> impl Iterator<Item = &PropertyKey> {
        self.tables.keys()
    }

    pub fn write_table(&self, key: &PropertyKey, dir: &Path) -> Result<()> {
        write_property_csv(self.table(key)?, dir)
    }
}

pub fn write_property_csv(table: &PropertyTable, dir: &Path) -> Result<()> {
    let rows: Vec<PropertyRow> = table
        .rows
        .iter()
        .map(|(id, v)| PropertyRow {
            method_id: *id,
            value: v.to_string(),
        })
        .collect();
    write_csv(&dir.join(format!("{}.csv", table.key)), &rows, PROPERTY_HEADER)
}

pub fn read_property_csv(key: &PropertyKey, path: &Path) -> Result<Vec<(EntityId, PropertyValue)>> {
    let rows: Vec<PropertyRow> = read_csv(path, PROPERTY_HEADER)?;
    rows.into_iter()
        .map(|r| Ok((r.method_id, PropertyValue::parse(key.kind(), &r.value)?)))
        .collect()
}
