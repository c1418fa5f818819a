//! Entity catalogue: ids, metadata tables, hierarchy and property storage.

pub mod catalog;
pub mod csvio;
pub mod ids;
pub mod model;
pub mod properties;

pub use catalog::{
    catalog_corpus, catalog_project, discover_projects, merged_catalog, Diagnostic, ParsedFile,
    ProjectParse, Strictness,
};
pub use csvio::{read_metadata, write_metadata};
pub use ids::{assign_id, EntityId, EntityKind};
pub use model::{Catalog, ClassMeta, Hierarchy, MethodMeta, PackageMeta, ProjectMeta, SizeBucket};
pub use properties::{PropertyKey, PropertyStore, PropertyTable, PropertyValue, ValueKind};
