//! Smart-contract generation: JavaScript chaincode plus a state-machine
//! manifest describing the same contract.
//!
//! Output is a pure function of the canonical spec: one file per domain
//! type (`roles/`, `assets/`, `events/`), `contract.js`, `router.js` and
//! `manifest.json`. The support library under `lib/` is vendored as a
//! static asset and is not part of the bundle proper.

mod js;
pub mod manifest;

pub use js::GENERATOR;
pub use manifest::Manifest;

use crate::lang::SymboleoSpec;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub const SUPPORT_LIBRARY_PATH: &str = "lib/symboleo.js";
pub const SUPPORT_LIBRARY: &str = include_str!("../../assets/symboleo.js");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bundle {
    pub contract: String,
    pub generator: String,
    pub files: BTreeMap<String, String>,
    #[serde(skip)]
    pub manifest: Manifest,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocCount {
    pub per_file: BTreeMap<String, usize>,
    pub total: usize,
}

/// Generates the bundle for a validated spec.
pub fn generate(spec: &SymboleoSpec) -> Bundle {
    let manifest = manifest::build(spec);
    Bundle {
        contract: spec.name.name.clone(),
        generator: GENERATOR.to_owned(),
        files: js::emit(spec, &manifest),
        manifest,
    }
}

impl Bundle {
    pub fn count_loc(&self) -> LocCount {
        let per_file: BTreeMap<String, usize> = self
            .files
            .iter()
            .map(|(p, t)| (p.clone(), crate::loc::loc(t)))
            .collect();
        LocCount {
            total: per_file.values().sum(),
            per_file,
        }
    }

    pub fn loc(&self) -> usize {
        self.count_loc().total
    }

    /// Writes the bundle plus the vendored support library under `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        let all = self
            .files
            .iter()
            .map(|(p, t)| (p.as_str(), t.as_str()))
            .chain([(SUPPORT_LIBRARY_PATH, SUPPORT_LIBRARY)]);
        for (path, text) in all {
            let target = dir.join(path);
            if let Some(parent) = target.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(target, text)?;
        }
        Ok(())
    }

    /// Zip archive of the bundle plus the support library.
    pub fn to_zip(&self) -> zip::result::ZipResult<Vec<u8>> {
        zip_files(&self.files)
    }
}

/// Zip archive of bundle files plus the support library. Entries carry a
/// fixed timestamp so archives are reproducible.
pub fn zip_files(files: &BTreeMap<String, String>) -> zip::result::ZipResult<Vec<u8>> {
    let mut zw = zip::ZipWriter::new(std::io::Cursor::new(Vec::new()));
    let opts = zip::write::SimpleFileOptions::default()
        .compression_method(zip::CompressionMethod::Deflated)
        .last_modified_time(zip::DateTime::default());
    let all = files
        .iter()
        .map(|(p, t)| (p.as_str(), t.as_str()))
        .chain([(SUPPORT_LIBRARY_PATH, SUPPORT_LIBRARY)]);
    for (path, text) in all {
        zw.start_file(path, opts)?;
        zw.write_all(text.as_bytes())?;
    }
    Ok(zw.finish()?.into_inner())
}
