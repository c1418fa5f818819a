use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::warn;
use walkdir::WalkDir;

use super::ids::{assign_id, class_key, package_key, project_key, EntityId, EntityKind};
use super::model::{Catalog, ClassMeta, MethodMeta, PackageMeta, ProjectMeta};
use crate::error::{Error, Result};
use crate::lexparse::{extract_methods, file_model, parse, Ast, FileModel, MethodSource};
use crate::par::{self, ExecMode};

pub const SOURCE_SUFFIX: &str = ".java";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    #[default]
    SkipUnparseable,
    FailFast,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

/// A successfully parsed source file with its catalogue ids.
#[derive(Debug, Clone)]
pub struct ParsedFile {
    /// Path relative to the corpus root, `/`-separated.
    pub rel_path: String,
    pub source: String,
    pub ast: Ast,
    pub model: FileModel,
    pub methods: Vec<MethodSource>,
    pub project_id: EntityId,
    pub package_id: EntityId,
    /// Parallel to `model.classes`.
    pub class_ids: Vec<EntityId>,
}

impl ParsedFile {
    pub fn class_id_of(&self, class_name: &str) -> Option<EntityId> {
        self.model
            .classes
            .iter()
            .position(|c| c.name == class_name)
            .map(|i| self.class_ids[i])
    }
}

/// Catalogue rows plus parsed sources for one project.
#[derive(Debug, Clone)]
pub struct ProjectParse {
    pub catalog: Catalog,
    pub files: Vec<ParsedFile>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ProjectParse {
    pub fn project(&self) -> &ProjectMeta {
        &self.catalog.projects[0]
    }

    pub fn methods(&self) -> impl Iterator<Item = &MethodSource> {
        self.files.iter().flat_map(|f| f.methods.iter())
    }
}

fn rel_string(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Source files below `dir`, sorted by path.
pub fn discover_sources(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut files: Vec<_> = WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file() && e.file_name().to_string_lossy().ends_with(SOURCE_SUFFIX))
        .map(|e| e.into_path())
        .collect();
    files.sort();
    files
}

/// Parses every source file of `corpus_root/project_rel` and builds the
/// project's metadata rows.
pub fn catalog_project(
    corpus_root: &Path,
    project_rel: &str,
    strictness: Strictness,
    mode: ExecMode,
) -> Result<ProjectParse> {
    let root = corpus_root.join(project_rel);
    if !root.is_dir() {
        return Err(Error::NotFound(format!("project directory {}", root.display())));
    }
    let project_name = root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| project_rel.to_string());
    let project_id = assign_id(EntityKind::Project, &project_key(&project_name, project_rel))?;

    let paths = discover_sources(&root);
    let parsed = par::map(mode, &paths, |path| -> Result<(String, String, Ast, FileModel)> {
        let rel = rel_string(path.strip_prefix(corpus_root).unwrap_or(path));
        let source = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ast = parse(&source)?;
        let model = file_model(&ast);
        Ok((rel, source, ast, model))
    });

    let mut diagnostics = Vec::new();
    let mut ok = Vec::new();
    for (path, res) in paths.iter().zip(parsed) {
        match res {
            Ok(v) => ok.push(v),
            Err(e) => {
                let rel = rel_string(path.strip_prefix(corpus_root).unwrap_or(path));
                if strictness == Strictness::FailFast {
                    return Err(e);
                }
                warn!("skipping {rel}: {e}");
                diagnostics.push(Diagnostic {
                    path: rel,
                    message: e.to_string(),
                });
            }
        }
    }
    if ok.is_empty() {
        return Err(Error::EmptyProject(root));
    }

    let mut catalog = Catalog {
        projects: vec![ProjectMeta {
            project_id,
            project_path: project_rel.to_string(),
            project_name,
        }],
        ..Catalog::default()
    };
    let mut packages: BTreeMap<String, PackageMeta> = BTreeMap::new();
    let mut files = Vec::new();
    for (rel, source, ast, model) in ok {
        let dir = rel.rsplit_once('/').map_or("", |(d, _)| d).to_string();
        let pkg_in_project = dir.strip_prefix(project_rel).unwrap_or(&dir).trim_start_matches('/');
        let package_id = assign_id(EntityKind::Package, &package_key(project_rel, pkg_in_project))?;
        packages.entry(dir.clone()).or_insert_with(|| PackageMeta {
            project_id,
            package_id,
            package_path: dir.clone(),
            package_name: model.package.clone().unwrap_or_default(),
        });
        let mut class_ids = Vec::new();
        for class in &model.classes {
            let class_id = assign_id(EntityKind::Class, &class_key(&rel, &class.name))?;
            class_ids.push(class_id);
            catalog.classes.push(ClassMeta {
                project_id,
                package_id,
                class_id,
                class_path: rel.clone(),
                class_name: class.name.clone(),
            });
        }
        let methods = extract_methods(&ast, &model, &rel, &source)?;
        for m in &methods {
            let class_id = class_ids[model.classes.iter().position(|c| c.name == m.class_name).expect("owner")];
            catalog.methods.push(MethodMeta {
                project_id,
                package_id,
                class_id,
                method_id: m.method_id,
                method_path: rel.clone(),
                method_name: m.name.clone(),
                start_line: m.start_line,
                end_line: m.end_line,
                method_signature: m.signature.clone(),
            });
        }
        files.push(ParsedFile {
            rel_path: rel,
            source,
            ast,
            model,
            methods,
            project_id,
            package_id,
            class_ids,
        });
    }
    catalog.packages = packages.into_values().collect();
    catalog.sort();
    Ok(ProjectParse {
        catalog,
        files,
        diagnostics,
    })
}

/// Immediate subdirectories of the corpus root, each one a project.
pub fn discover_projects(corpus_root: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let entries = fs::read_dir(corpus_root).map_err(|e| Error::io(corpus_root, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(corpus_root, e))?;
        if entry.file_type().map_err(|e| Error::io(entry.path(), e))?.is_dir() {
            out.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    out.sort();
    Ok(out)
}

/// Catalogues every project under `corpus_root`.
pub fn catalog_corpus(corpus_root: &Path, strictness: Strictness, mode: ExecMode) -> Result<Vec<ProjectParse>> {
    discover_projects(corpus_root)?
        .iter()
        .map(|p| catalog_project(corpus_root, p, strictness, mode))
        .collect()
}

pub fn merged_catalog(projects: &[ProjectParse]) -> Catalog {
    let mut c = Catalog::default();
    for p in projects {
        c.merge(p.catalog.clone());
    }
    c
}
