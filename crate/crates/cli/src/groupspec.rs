//! JSON group specification files: the factor list plus an optional alias
//! table for word literals.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use freeprod_core::words::{FactorFamily, FactorSpec};
use freeprod_core::Error;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FactorEntry {
    Cyclic { order: u32, label: String },
    Table { size: u32, identity: u32, table: Vec<Vec<u32>>, label: String },
    Zwindow { bound: i64, label: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpecFile {
    pub factors: Vec<FactorEntry>,
    #[serde(default)]
    pub aliases: HashMap<String, String>,
}

impl GroupSpecFile {
    pub fn family(&self) -> Result<FactorFamily, Error> {
        let factors = self
            .factors
            .iter()
            .map(|f| match f {
                FactorEntry::Cyclic { order, label } => FactorSpec::cyclic(*order, label),
                FactorEntry::Zwindow { bound, label } => FactorSpec::integer_window(*bound, label),
                FactorEntry::Table { size, identity, table, label } => {
                    let flat: Vec<u32> = table.iter().flatten().copied().collect();
                    FactorSpec::table(*size, *identity, flat, label)
                }
            })
            .collect();
        FactorFamily::new(factors)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read group spec {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("malformed group spec {}: {e}", path.display()))
    }

    /// The default experiment group: the free product of the two- and
    /// three-element cyclic groups, with letters aliased a and b.
    pub fn default_z2z3() -> Self {
        GroupSpecFile {
            factors: vec![
                FactorEntry::Cyclic { order: 2, label: "Z2".into() },
                FactorEntry::Cyclic { order: 3, label: "Z3".into() },
            ],
            aliases: HashMap::from([
                ("a".to_string(), "0:1".to_string()),
                ("b".to_string(), "1:1".to_string()),
            ]),
        }
    }
}
