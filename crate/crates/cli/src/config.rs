use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use pkgraph::baselines::BaselineKind;
use pkgraph::cohortgen::CohortConfig;
use pkgraph::gnn::{Arch, TrainConfig, Variant};
use pkgraph::graphx::{parse_facets, AblationFacet, Direction, GraphVersion, Version};
use pkgraph::harness::Protocol;
use pkgraph::preprocess::PreprocessConfig;
use serde::{Deserialize, Serialize};

/// Everything a pipeline run needs, read from one JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root directory of every artifact; relative paths resolve against the config file.
    pub workdir: PathBuf,
    pub cohort: CohortConfig,
    pub preprocess: PreprocessConfig,
    pub train: TrainConfig,
    pub protocol: Protocol,
    pub experiments: ExperimentMatrix,
    pub baselines: Vec<String>,
    pub ablation: AblationTarget,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            workdir: PathBuf::from("work"),
            cohort: CohortConfig::default(),
            preprocess: PreprocessConfig::default(),
            train: TrainConfig::default(),
            protocol: Protocol::default(),
            experiments: ExperimentMatrix::default(),
            baselines: BaselineKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            ablation: AblationTarget::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentMatrix {
    pub versions: Vec<String>,
    pub directions: Vec<String>,
    pub archs: Vec<String>,
    pub variants: Vec<String>,
}

impl Default for ExperimentMatrix {
    fn default() -> Self {
        ExperimentMatrix {
            versions: Version::ALL.iter().map(|v| v.name().to_string()).collect(),
            directions: Direction::ALL.iter().map(|d| d.name().to_string()).collect(),
            archs: vec!["sage".into(), "gat".into()],
            variants: vec!["1".into(), "2".into()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Experiment {
    pub graph: GraphVersion,
    pub arch: Arch,
    pub variant: Variant,
}

impl Experiment {
    pub fn name(&self) -> String {
        format!("{}-{}_{}", self.arch.name(), self.variant.name(), self.graph)
    }
}

fn parse_all<T: std::str::FromStr<Err = pkgraph::Error>>(values: &[String]) -> anyhow::Result<Vec<T>> {
    values.iter().map(|v| v.parse::<T>().map_err(anyhow::Error::from)).collect()
}

impl ExperimentMatrix {
    pub fn expand(&self) -> anyhow::Result<Vec<Experiment>> {
        let versions: Vec<Version> = parse_all(&self.versions)?;
        let directions: Vec<Direction> = parse_all(&self.directions)?;
        let archs: Vec<Arch> = parse_all(&self.archs)?;
        let variants: Vec<Variant> = parse_all(&self.variants)?;
        let mut out = BTreeSet::new();
        for &version in &versions {
            for &direction in &directions {
                for &arch in &archs {
                    for &variant in &variants {
                        out.insert(Experiment { graph: GraphVersion::new(version, direction), arch, variant });
                    }
                }
            }
        }
        if out.is_empty() {
            bail!(pkgraph::Error::Config("experiment matrix is empty".into()));
        }
        Ok(out.into_iter().collect())
    }

    pub fn graph_versions(&self) -> anyhow::Result<Vec<GraphVersion>> {
        let mut out: Vec<GraphVersion> = self.expand()?.into_iter().map(|e| e.graph).collect();
        out.dedup();
        Ok(out)
    }
}

/// The configuration whose facets are removed in the ablation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationTarget {
    pub version: String,
    pub direction: String,
    pub arch: String,
    pub variant: String,
    /// Facet sets to exclude; the five singles and ten pairs when absent.
    pub facet_sets: Option<Vec<Vec<String>>>,
}

impl Default for AblationTarget {
    fn default() -> Self {
        AblationTarget {
            version: "v3".into(),
            direction: "undirected".into(),
            arch: "sage".into(),
            variant: "1".into(),
            facet_sets: None,
        }
    }
}

impl AblationTarget {
    pub fn experiment(&self) -> anyhow::Result<Experiment> {
        Ok(Experiment {
            graph: GraphVersion::new(self.version.parse()?, self.direction.parse()?),
            arch: self.arch.parse()?,
            variant: self.variant.parse()?,
        })
    }

    pub fn sets(&self) -> anyhow::Result<Vec<BTreeSet<AblationFacet>>> {
        match &self.facet_sets {
            None => Ok(pkgraph::harness::table_facet_sets()),
            Some(sets) => sets.iter().map(|s| parse_facets(s).map_err(anyhow::Error::from)).collect(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| pkgraph::Error::Config(format!("{}: {e}", path.display())))?;
        if config.workdir.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            config.workdir = base.join(&config.workdir);
        }
        Ok(config)
    }

    /// A single seed for every stage.
    pub fn set_seed(&mut self, seed: u64) {
        self.cohort.seed = seed;
        self.train.seed = seed;
        self.protocol.seed = seed;
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.cohort.validate()?;
        self.preprocess.validate()?;
        self.train.validate()?;
        self.experiments.expand()?;
        self.ablation.experiment()?;
        self.ablation.sets()?;
        self.baseline_kinds()?;
        if self.protocol.k_folds < 2 || self.protocol.n_splits == 0 {
            bail!(pkgraph::Error::Config("protocol needs n_splits >= 1 and k_folds >= 2".into()));
        }
        Ok(())
    }

    pub fn baseline_kinds(&self) -> anyhow::Result<Vec<BaselineKind>> {
        parse_all(&self.baselines)
    }

    /// Configuration hash recorded in manifests.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matrix_has_thirty_two_experiments() {
        let matrix = ExperimentMatrix::default();
        let experiments = matrix.expand().unwrap();
        assert_eq!(experiments.len(), 4 * 2 * 2 * 2);
        assert_eq!(
            matrix.graph_versions().unwrap(),
            GraphVersion::all().collect::<BTreeSet<_>>().into_iter().collect::<Vec<_>>()
        );
    }

    #[test]
    fn experiment_names_are_file_friendly() {
        let e = Experiment {
            graph: GraphVersion::new(Version::V3, Direction::Undirected),
            arch: Arch::Sage,
            variant: Variant::Linear,
        };
        assert_eq!(e.name(), "PKGSage-variant1_v3_undirected");
    }

    #[test]
    fn unknown_names_are_rejected() {
        let matrix = ExperimentMatrix { versions: vec!["v7".into()], ..ExperimentMatrix::default() };
        assert!(matrix.expand().is_err());
        let empty = ExperimentMatrix { archs: vec![], ..ExperimentMatrix::default() };
        assert!(empty.expand().is_err());
        let config = PipelineConfig { baselines: vec!["RandomForest".into()], ..PipelineConfig::default() };
        assert!(config.validate().is_err());
        let target = AblationTarget { facet_sets: Some(vec![vec!["patient".into()]]), ..AblationTarget::default() };
        assert!(target.sets().is_err());
    }

    #[test]
    fn default_ablation_covers_singles_and_pairs() {
        assert_eq!(AblationTarget::default().sets().unwrap().len(), 15);
    }

    #[test]
    fn seed_reaches_every_stage() {
        let mut config = PipelineConfig::default();
        config.set_seed(42);
        assert_eq!((config.cohort.seed, config.train.seed, config.protocol.seed), (42, 42, 42));
    }

    #[test]
    fn relative_workdir_resolves_against_the_config_file() {
        let dir = std::env::temp_dir().join(format!("pkgraph-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.json");
        std::fs::write(&path, r#"{ "workdir": "out" }"#).unwrap();
        assert_eq!(PipelineConfig::load(&path).unwrap().workdir, dir.join("out"));
        std::fs::write(&path, r#"{ "workdirr": "out" }"#).unwrap();
        assert!(PipelineConfig::load(&path).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
