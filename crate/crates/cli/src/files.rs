use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hgt_core::grid::{io, Grid, GridForm};
use hgt_core::xmod::{self, CrossedModule};
use hgt_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Writes through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::Data(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// A registry name, or a path to a module description.
pub fn resolve_module(name: &str) -> Result<CrossedModule> {
    let path = Path::new(name);
    if path.exists() {
        return xmod::load_module(path);
    }
    xmod::registry_get(name).ok_or_else(|| {
        let known: Vec<&str> = xmod::registry().iter().map(|r| r.0).collect();
        Error::Data(format!(
            "no module file '{name}' and no registry module of that name (registry: {})",
            known.join(", ")
        ))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Binary,
    Json,
}

/// Index of an instance directory: cochain files by role, paths relative
/// to the manifest.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub kind: String,
    pub module: String,
    pub module_hash: String,
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub spec: Option<hgt_core::generators::InstanceSpec>,
    pub forms: BTreeMap<String, PathBuf>,
    /// Known answers (planted canonical fields).
    #[serde(default)]
    pub ground_truth: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
}

pub const MANIFEST: &str = "instance.json";

pub fn write_form(
    dir: &Path,
    role: &str,
    w: &GridForm,
    algebra: &str,
    format: Format,
) -> Result<PathBuf> {
    let f = io::to_file(w, algebra);
    let (name, bytes) = match format {
        Format::Binary => {
            let mut buf = Vec::new();
            io::write_binary(&mut buf, &f)?;
            (format!("{role}.bin"), buf)
        }
        Format::Json => (format!("{role}.json"), serde_json::to_vec(&f)?),
    };
    write_atomic(&dir.join(&name), &bytes)?;
    Ok(PathBuf::from(name))
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> Result<PathBuf> {
    let path = dir.join(MANIFEST);
    write_atomic(&path, serde_json::to_string_pretty(m)?.as_bytes())?;
    Ok(path)
}

/// Reads a manifest given either its path or its directory.
pub fn read_manifest(path: &Path) -> Result<(Manifest, PathBuf)> {
    let file = if path.is_dir() {
        path.join(MANIFEST)
    } else {
        path.to_path_buf()
    };
    let text = std::fs::read_to_string(&file)
        .map_err(|e| Error::Data(format!("cannot read instance {}: {e}", file.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let m: Manifest = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: format!("{}: {}", file.display(), e.path()),
        message: e.inner().to_string(),
    })?;
    let dir = file.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((m, dir))
}

pub fn read_form(
    dir: &Path,
    rel: &Path,
    grid: &std::sync::Arc<Grid>,
    degree: usize,
    dim: usize,
    role: &str,
) -> Result<GridForm> {
    let f = io::load(&dir.join(rel))?;
    let w = io::from_file(&f, Some(grid))?;
    if w.degree != degree || w.dim != dim {
        return Err(Error::Data(format!(
            "{role} in {} has degree {} and dimension {}, expected {degree} and {dim}",
            rel.display(),
            w.degree,
            w.dim
        )));
    }
    Ok(w)
}

impl Manifest {
    pub fn form(&self, role: &str) -> Result<&PathBuf> {
        self.forms.get(role).ok_or_else(|| {
            Error::Data(format!(
                "instance of kind '{}' has no form '{role}'",
                self.kind
            ))
        })
    }
}
