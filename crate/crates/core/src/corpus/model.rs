use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ids::{EntityId, EntityKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectMeta {
    pub project_id: EntityId,
    pub project_path: String,
    pub project_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageMeta {
    pub project_id: EntityId,
    pub package_id: EntityId,
    pub package_path: String,
    pub package_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMeta {
    pub project_id: EntityId,
    pub package_id: EntityId,
    pub class_id: EntityId,
    pub class_path: String,
    pub class_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodMeta {
    pub project_id: EntityId,
    pub package_id: EntityId,
    pub class_id: EntityId,
    pub method_id: EntityId,
    pub method_path: String,
    pub method_name: String,
    pub start_line: u32,
    pub end_line: u32,
    pub method_signature: String,
}

/// Project size class by number of classes: A ≤ 20, B 21–50, C 51–100,
/// D > 100.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizeBucket {
    A,
    B,
    C,
    D,
}

impl SizeBucket {
    pub const ALL: [SizeBucket; 4] = [SizeBucket::A, SizeBucket::B, SizeBucket::C, SizeBucket::D];

    pub fn from_class_count(n: usize) -> Self {
        match n {
            0..=20 => SizeBucket::A,
            21..=50 => SizeBucket::B,
            51..=100 => SizeBucket::C,
            _ => SizeBucket::D,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SizeBucket::A => "A",
            SizeBucket::B => "B",
            SizeBucket::C => "C",
            SizeBucket::D => "D",
        }
    }
}

impl std::fmt::Display for SizeBucket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The four metadata tables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    pub projects: Vec<ProjectMeta>,
    pub packages: Vec<PackageMeta>,
    pub classes: Vec<ClassMeta>,
    pub methods: Vec<MethodMeta>,
}

impl Catalog {
    pub fn entity_count(&self) -> usize {
        self.projects.len() + self.packages.len() + self.classes.len() + self.methods.len()
    }

    /// Appends another catalog's rows, replacing any rows of the same projects.
    pub fn merge(&mut self, other: Catalog) {
        let incoming: BTreeSet<EntityId> = other.projects.iter().map(|p| p.project_id).collect();
        self.remove_projects(&incoming);
        self.projects.extend(other.projects);
        self.packages.extend(other.packages);
        self.classes.extend(other.classes);
        self.methods.extend(other.methods);
        self.sort();
    }

    pub fn remove_projects(&mut self, ids: &BTreeSet<EntityId>) {
        self.projects.retain(|p| !ids.contains(&p.project_id));
        self.packages.retain(|p| !ids.contains(&p.project_id));
        self.classes.retain(|c| !ids.contains(&c.project_id));
        self.methods.retain(|m| !ids.contains(&m.project_id));
    }

    /// Canonical row order: by path, then line.
    pub fn sort(&mut self) {
        self.projects.sort_by(|a, b| a.project_path.cmp(&b.project_path));
        self.packages.sort_by(|a, b| a.package_path.cmp(&b.package_path).then(a.package_id.cmp(&b.package_id)));
        self.classes.sort_by(|a, b| a.class_path.cmp(&b.class_path).then(a.class_id.cmp(&b.class_id)));
        self.methods.sort_by(|a, b| {
            a.method_path
                .cmp(&b.method_path)
                .then(a.start_line.cmp(&b.start_line))
                .then(a.method_id.cmp(&b.method_id))
        });
    }

    pub fn size_buckets(&self) -> BTreeMap<EntityId, SizeBucket> {
        let mut counts: BTreeMap<EntityId, usize> = self.projects.iter().map(|p| (p.project_id, 0)).collect();
        for c in &self.classes {
            *counts.entry(c.project_id).or_default() += 1;
        }
        counts.into_iter().map(|(p, n)| (p, SizeBucket::from_class_count(n))).collect()
    }

    pub fn method(&self, id: &EntityId) -> Option<&MethodMeta> {
        self.methods.iter().find(|m| &m.method_id == id)
    }

    /// Checks foreign keys, id distinctness and line spans.
    pub fn validate(&self) -> Result<()> {
        let projects: BTreeSet<_> = self.projects.iter().map(|p| p.project_id).collect();
        let packages: BTreeMap<_, _> = self.packages.iter().map(|p| (p.package_id, p.project_id)).collect();
        let classes: BTreeMap<_, _> = self
            .classes
            .iter()
            .map(|c| (c.class_id, (c.project_id, c.package_id)))
            .collect();
        let broken = |what: String| Err(Error::InvalidArgument(format!("referential integrity: {what}")));
        for p in &self.packages {
            if !projects.contains(&p.project_id) {
                return broken(format!("package {} has unknown project", p.package_id));
            }
        }
        for c in &self.classes {
            if packages.get(&c.package_id) != Some(&c.project_id) {
                return broken(format!("class {} has inconsistent parents", c.class_id));
            }
        }
        for m in &self.methods {
            if classes.get(&m.class_id) != Some(&(m.project_id, m.package_id)) {
                return broken(format!("method {} has inconsistent parents", m.method_id));
            }
            if m.start_line > m.end_line {
                return broken(format!("method {} ends before it starts", m.method_id));
            }
        }
        let mut all = BTreeSet::new();
        let ids = self
            .projects
            .iter()
            .map(|p| p.project_id)
            .chain(self.packages.iter().map(|p| p.package_id))
            .chain(self.classes.iter().map(|c| c.class_id))
            .chain(self.methods.iter().map(|m| m.method_id));
        for id in ids {
            if !all.insert(id) {
                return Err(Error::InvalidArgument(format!("duplicate entity id {id}")));
            }
        }
        Ok(())
    }

    pub fn hierarchy(&self) -> Hierarchy {
        Hierarchy::new(self)
    }
}

/// Parent/child navigation over a [`Catalog`].
#[derive(Debug, Clone, Default)]
pub struct Hierarchy {
    kinds: BTreeMap<EntityId, EntityKind>,
    parent: BTreeMap<EntityId, EntityId>,
    children: BTreeMap<EntityId, Vec<EntityId>>,
}

impl Hierarchy {
    pub fn new(catalog: &Catalog) -> Self {
        let mut h = Hierarchy::default();
        for p in &catalog.projects {
            h.kinds.insert(p.project_id, EntityKind::Project);
            h.children.entry(p.project_id).or_default();
        }
        let link = |h: &mut Hierarchy, child: EntityId, parent: EntityId, kind: EntityKind| {
            h.kinds.insert(child, kind);
            h.parent.insert(child, parent);
            h.children.entry(parent).or_default().push(child);
            h.children.entry(child).or_default();
        };
        for p in &catalog.packages {
            link(&mut h, p.package_id, p.project_id, EntityKind::Package);
        }
        for c in &catalog.classes {
            link(&mut h, c.class_id, c.package_id, EntityKind::Class);
        }
        for m in &catalog.methods {
            link(&mut h, m.method_id, m.class_id, EntityKind::Method);
        }
        h
    }

    pub fn kind(&self, id: &EntityId) -> Option<EntityKind> {
        self.kinds.get(id).copied()
    }

    pub fn parent(&self, id: &EntityId) -> Result<Option<EntityId>> {
        if !self.kinds.contains_key(id) {
            return Err(Error::NotFound(format!("entity {id}")));
        }
        Ok(self.parent.get(id).copied())
    }

    pub fn children(&self, id: &EntityId) -> Result<&[EntityId]> {
        self.children
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::NotFound(format!("entity {id}")))
    }

    /// All descendants of `id` at the given granularity.
    pub fn descendants(&self, id: &EntityId, kind: EntityKind) -> Result<Vec<EntityId>> {
        let mut out = Vec::new();
        let mut stack = vec![*id];
        self.children(id)?;
        while let Some(n) = stack.pop() {
            for c in self.children.get(&n).into_iter().flatten() {
                if self.kinds.get(c) == Some(&kind) {
                    out.push(*c);
                }
                stack.push(*c);
            }
        }
        out.sort();
        Ok(out)
    }

    /// Walks up to the ancestor of the given kind (or the entity itself).
    pub fn ancestor(&self, id: &EntityId, kind: EntityKind) -> Option<EntityId> {
        let mut cur = *id;
        loop {
            if self.kinds.get(&cur) == Some(&kind) {
                return Some(cur);
            }
            cur = *self.parent.get(&cur)?;
        }
    }
}
