use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::model::{Catalog, ClassMeta, MethodMeta, PackageMeta, ProjectMeta};
use crate::error::{Error, Result};

pub const PROJECTS_CSV: &str = "projects.csv";
pub const PACKAGES_CSV: &str = "packages.csv";
pub const CLASSES_CSV: &str = "classes.csv";
pub const METHODS_CSV: &str = "methods.csv";

/// Serializes rows with a header line. Fields are quoted only when needed.
pub fn to_csv_bytes<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let io = |e: csv::Error| Error::csv("<memory>", e);
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.into_inner()
        .map_err(|e| Error::io("<memory>", std::io::Error::other(e.to_string())))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    write_file(path, &to_csv_bytes(rows, header)?)
}

/// Writes `bytes`, creating the parent directory first.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads rows, checking the header matches `header` exactly.
pub fn read_csv<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let name = path.display().to_string();
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
            _ => Error::csv(name.clone(), e),
        })?;
    let found = r.headers().map_err(|e| Error::csv(name.clone(), e))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(Error::Parse {
            source_name: name,
            line: 1,
            message: format!("expected header `{}`", header.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec.map_err(|e| Error::csv(name.clone(), e))?);
    }
    Ok(rows)
}

pub const PROJECT_HEADER: &[&str] = &["project_id", "project_path", "project_name"];
pub const PACKAGE_HEADER: &[&str] = &["project_id", "package_id", "package_path", "package_name"];
pub const CLASS_HEADER: &[&str] = &["project_id", "package_id", "class_id", "class_path", "class_name"];
pub const METHOD_HEADER: &[&str] = &[
    "project_id",
    "package_id",
    "class_id",
    "method_id",
    "method_path",
    "method_name",
    "start_line",
    "end_line",
    "method_signature",
];

pub fn write_metadata(catalog: &Catalog, out_dir: &Path) -> Result<()> {
    write_csv::<ProjectMeta>(&out_dir.join(PROJECTS_CSV), &catalog.projects, PROJECT_HEADER)?;
    write_csv::<PackageMeta>(&out_dir.join(PACKAGES_CSV), &catalog.packages, PACKAGE_HEADER)?;
    write_csv::<ClassMeta>(&out_dir.join(CLASSES_CSV), &catalog.classes, CLASS_HEADER)?;
    write_csv::<MethodMeta>(&out_dir.join(METHODS_CSV), &catalog.methods, METHOD_HEADER)
}

pub fn read_metadata(dir: &Path) -> Result<Catalog> {
    Ok(Catalog {
        projects: read_csv(&dir.join(PROJECTS_CSV), PROJECT_HEADER)?,
        packages: read_csv(&dir.join(PACKAGES_CSV), PACKAGE_HEADER)?,
        classes: read_csv(&dir.join(CLASSES_CSV), CLASS_HEADER)?,
        methods: read_csv(&dir.join(METHODS_CSV), METHOD_HEADER)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ids::{assign_id, EntityKind};

    fn sample() -> Catalog {
        let pid = assign_id(EntityKind::Project, "project:demo@demo").unwrap();
        let kid = assign_id(EntityKind::Package, "package:demo/src").unwrap();
        let cid = assign_id(EntityKind::Class, "class:demo/src/A.java").unwrap();
        let mid = assign_id(EntityKind::Method, "method:demo/src/A.java#f(int,String)@3").unwrap();
        Catalog {
            projects: vec![ProjectMeta {
                project_id: pid,
                project_path: "demo".into(),
                project_name: "demo".into(),
            }],
            packages: vec![PackageMeta {
                project_id: pid,
                package_id: kid,
                package_path: "demo/src".into(),
                package_name: "a.b".into(),
            }],
            classes: vec![ClassMeta {
                project_id: pid,
                package_id: kid,
                class_id: cid,
                class_path: "demo/src/A.java".into(),
                class_name: "A".into(),
            }],
            methods: vec![MethodMeta {
                project_id: pid,
                package_id: kid,
                class_id: cid,
                method_id: mid,
                method_path: "demo/src/A.java".into(),
                method_name: "f".into(),
                start_line: 3,
                end_line: 5,
                method_signature: "f(int,String)".into(),
            }],
        }
    }

    #[test]
    fn round_trip_and_headers() {
        let dir = tempfile::tempdir().unwrap();
        let c = sample();
        write_metadata(&c, dir.path()).unwrap();
        assert_eq!(read_metadata(dir.path()).unwrap(), c);
        let projects = fs::read_to_string(dir.path().join(PROJECTS_CSV)).unwrap();
        assert!(projects.starts_with("project_id,project_path,project_name\n"));
        let methods = fs::read_to_string(dir.path().join(METHODS_CSV)).unwrap();
        let header = methods.lines().next().unwrap();
        assert!(header.ends_with(",start_line,end_line,method_signature"));
        // signature with a comma is RFC-4180 quoted
        assert!(methods.contains("\"f(int,String)\""));
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        write_metadata(&sample(), dir.path()).unwrap();
        let path = dir.path().join(METHODS_CSV);
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("nothex,x,y,z,p,n,1,2,s\n");
        fs::write(&path, text).unwrap();
        match read_metadata(dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
