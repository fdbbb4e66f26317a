use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of a file, or of a directory as the hash of its sorted (name, file hash) listing.
pub fn hash_path(path: &Path) -> anyhow::Result<String> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        entries.sort();
        let mut listing = String::new();
        for entry in entries {
            let name = entry.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            listing.push_str(&format!("{name}\t{}\n", hash_path(&entry)?));
        }
        Ok(sha256_hex(listing.as_bytes()))
    } else {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        Ok(sha256_hex(&bytes))
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub stage: String,
    pub seed: u64,
    pub config_sha256: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(stage: &str, seed: u64, config_json: &str) -> Self {
        Manifest {
            stage: stage.to_string(),
            seed,
            config_sha256: sha256_hex(config_json.as_bytes()),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    fn key(root: &Path, path: &Path) -> String {
        path.strip_prefix(root).unwrap_or(path).to_string_lossy().into_owned()
    }

    pub fn input(&mut self, root: &Path, path: &Path) -> anyhow::Result<()> {
        self.inputs.insert(Self::key(root, path), hash_path(path)?);
        Ok(())
    }

    pub fn output(&mut self, root: &Path, path: &Path) -> anyhow::Result<()> {
        self.outputs.insert(Self::key(root, path), hash_path(path)?);
        Ok(())
    }

    pub fn write(&self, root: &Path) -> anyhow::Result<()> {
        let dir = root.join("manifests");
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{}.json", self.stage));
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn directory_hash_is_the_hash_of_its_listing() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.txt"), "two").unwrap();
        fs::write(dir.path().join("a.txt"), "one").unwrap();
        let listing = format!("a.txt\t{}\nb.txt\t{}\n", sha256_hex(b"one"), sha256_hex(b"two"));
        assert_eq!(hash_path(dir.path()).unwrap(), sha256_hex(listing.as_bytes()));
    }

    #[test]
    fn manifest_keys_are_relative_to_the_root() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("cohort.jsonl");
        fs::write(&file, "{}\n").unwrap();
        let mut m = Manifest::new("generate", 3, "{}");
        m.output(dir.path(), &file).unwrap();
        m.write(dir.path()).unwrap();
        let written: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifests/generate.json")).unwrap()).unwrap();
        assert_eq!(written["outputs"]["cohort.jsonl"], sha256_hex(b"{}\n"));
        assert_eq!(written["seed"], 3);
    }
}
