//! On-disk interchange formats shared between subcommands.

use std::path::Path;

use serde::{Deserialize, Serialize};

use segdet_core::changepoint::{ChangeFinderParams, CpList, ThresholdRule};
use segdet_core::data::{DatasetMeta, LabeledDataset};
use segdet_core::error::{Error, Result};

pub const CPS_SCHEMA_VERSION: u32 = 1;

/// Per-channel extracted change points plus the scoring parameters that
/// produced them (`cps.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CpsFile {
    pub schema_version: u32,
    pub params: ChangeFinderParams,
    pub rule: ThresholdRule,
    pub channels: Vec<ChannelCps>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelCps {
    pub name: String,
    pub indices: Vec<usize>,
}

impl CpsFile {
    pub fn channel(&self, name: &str) -> Option<&ChannelCps> {
        self.channels.iter().find(|c| c.name == name)
    }

    pub fn cp_list(&self, name: &str) -> Option<CpList> {
        self.channel(name)
            .map(|c| CpList { indices: c.indices.clone(), rule: self.rule })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_file(path)?;
        let file: CpsFile = serde_json::from_str(&text)?;
        if file.schema_version != CPS_SCHEMA_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "cps schema {} unsupported (expected {CPS_SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        Ok(file)
    }
}

/// Reads a file, mapping a missing path to a distinct error message.
pub fn read_file(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("missing file {path:?}"),
        )));
    }
    Ok(std::fs::read_to_string(path)?)
}

/// Loads a dataset CSV plus its `.meta.json` sidecar.
pub fn load_dataset(csv_path: &Path) -> Result<LabeledDataset> {
    let meta_path = meta_path_for(csv_path);
    let meta: DatasetMeta = serde_json::from_str(&read_file(&meta_path)?)?;
    let file = std::fs::File::open(csv_path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{csv_path:?}: {e}"))))?;
    segdet_core::data::read_dataset_csv(std::io::BufReader::new(file), &meta)
}

/// Writes a dataset CSV plus its `.meta.json` sidecar.
pub fn save_dataset(dataset: &LabeledDataset, csv_path: &Path) -> Result<()> {
    let file = std::fs::File::create(csv_path)?;
    let meta = segdet_core::data::write_dataset_csv(dataset, std::io::BufWriter::new(file))?;
    std::fs::write(meta_path_for(csv_path), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// `dataset.csv` -> `dataset.meta.json`.
pub fn meta_path_for(csv_path: &Path) -> std::path::PathBuf {
    let mut path = csv_path.to_path_buf();
    path.set_extension("meta.json");
    path
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_path_swaps_extension() {
        assert_eq!(
            meta_path_for(Path::new("/tmp/dataset.csv")),
            Path::new("/tmp/dataset.meta.json")
        );
    }

    #[test]
    fn cps_file_roundtrip() {
        let file = CpsFile {
            schema_version: CPS_SCHEMA_VERSION,
            params: ChangeFinderParams::default(),
            rule: ThresholdRule::default(),
            channels: vec![ChannelCps { name: "ch00".into(), indices: vec![10, 40] }],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cps.json");
        file.save(&path).unwrap();
        let back = CpsFile::load(&path).unwrap();
        assert_eq!(back.channels[0].indices, vec![10, 40]);
        assert!(back.cp_list("ch00").is_some());
        assert!(back.cp_list("nope").is_none());
    }
}
