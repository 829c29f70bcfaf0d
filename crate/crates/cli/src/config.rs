use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use graphprod::graph::GraphSpec;
use graphprod::{GraphProduct, QgParams, RSchedule, SimplicialGraph, StabilityThresholds, VertexGroupSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA: u32 = 1;
pub const DEFAULT_SEED: u64 = graphprod::cayley::DEFAULT_DELTA_SEED;
pub const DEFAULT_OUTPUT_DIR: &str = "out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolkitConfig {
    pub schema: u32,
    #[serde(default)]
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub vertex_groups: BTreeMap<String, VertexGroupSpec>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub thresholds: StabilityThresholds,
    #[serde(default)]
    pub schedule: RSchedule,
    #[serde(default)]
    pub qg: QgParams,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub node_limit: usize,
    pub delta_budget: u64,
    pub gauge_samples: usize,
    pub seed: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            node_limit: graphprod::cayley::DEFAULT_NODE_LIMIT,
            delta_budget: graphprod::cayley::DEFAULT_DELTA_BUDGET,
            gauge_samples: 400,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        ToolkitConfig {
            schema: SCHEMA,
            graph: None,
            vertex_groups: BTreeMap::new(),
            budgets: Budgets::default(),
            thresholds: StabilityThresholds::default(),
            schedule: RSchedule::default(),
            qg: QgParams::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ToolkitConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: ToolkitConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| CliError::Config(format!("{} is not UTF-8", path.display())))?;
        Ok((Self::parse(text)?, bytes))
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA {
            return Err(CliError::Config(format!(
                "unsupported schema {} (expected {SCHEMA})",
                self.schema
            )));
        }
        let b = &self.budgets;
        if b.node_limit == 0 || b.delta_budget == 0 || b.gauge_samples == 0 {
            return Err(CliError::Config("budgets must be positive".into()));
        }
        if let Some(graph) = &self.graph {
            if let Some(v) = graph.vertices.iter().find(|v| !self.vertex_groups.contains_key(*v)) {
                return Err(CliError::Config(format!("vertex `{v}` has no group spec")));
            }
        }
        Ok(())
    }

    pub fn graph_product(&self) -> Result<GraphProduct, CliError> {
        let spec = self
            .graph
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a config with a graph".into()))?;
        let graph = SimplicialGraph::from_spec(spec)?;
        Ok(GraphProduct::from_named_specs(graph, &self.vertex_groups)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P4: &str = r#"{"schema":1,"graph":{"vertices":["a","b","c","d"],"edges":[["a","b"],["b","c"],["c","d"]]},"vertex_groups":{"a":{"kind":"Z"},"b":{"kind":"Z"},"c":{"kind":"Z"},"d":{"kind":"Z"}}}"#;

    #[test]
    fn parses_minimal_config() {
        let c = ToolkitConfig::parse(P4).unwrap();
        assert_eq!(c.graph_product().unwrap().rank(), 4);
        assert_eq!(c.budgets, Budgets::default());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ToolkitConfig::parse(&P4.replace("\"schema\":1", "\"schema\":2")).is_err());
        assert!(ToolkitConfig::parse(&P4.replacen('{', "{\"colour\":1,", 1)).is_err());
        assert!(ToolkitConfig::parse(&P4.replace(",\"d\":{\"kind\":\"Z\"}", "")).is_err());
        assert!(ToolkitConfig::parse(r#"{"schema":1,"budgets":{"node_limit":0}}"#).is_err());
    }

    #[test]
    fn graphless_config_is_allowed_until_needed() {
        let c = ToolkitConfig::parse(r#"{"schema":1}"#).unwrap();
        assert!(matches!(c.graph_product(), Err(CliError::Config(_))));
    }
}
