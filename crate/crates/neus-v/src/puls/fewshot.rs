//! Few-shot stores backing the two translation stages. One JSON file per
//! stage per evaluation mode; stores are validated at load so a broken
//! example fails fast instead of poisoning translations.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scoring::EvaluationMode;
use crate::tl::{parse_formula, Proposition, PropositionSet};

use super::PulsError;

/// One worked example: the prompt, its propositions, and (for the
/// specification stage) the specification text and optional reasoning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub prompt: String,
    pub propositions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub specification: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
}

/// System template plus worked examples for one stage of one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotStore {
    pub system_template: String,
    pub examples: Vec<FewShotExample>,
}

impl FewShotStore {
    pub fn load(path: &Path) -> Result<Self, PulsError> {
        let text = std::fs::read_to_string(path).map_err(|e| PulsError::Store {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_str_named(&path.display().to_string(), &text)
    }

    pub fn from_str_named(name: &str, text: &str) -> Result<Self, PulsError> {
        let store: FewShotStore = serde_json::from_str(text).map_err(|e| PulsError::Store {
            path: name.to_string(),
            message: e.to_string(),
        })?;
        store.validate().map_err(|message| PulsError::Store {
            path: name.to_string(),
            message,
        })?;
        Ok(store)
    }

    /// Every stored specification must parse under exactly the example's
    /// propositions.
    pub fn validate(&self) -> Result<(), String> {
        if self.system_template.trim().is_empty() {
            return Err("system template is empty".into());
        }
        for (i, example) in self.examples.iter().enumerate() {
            let mut props = PropositionSet::empty();
            for phrase in &example.propositions {
                let prop = Proposition::new(phrase)
                    .map_err(|e| format!("example {i}: bad proposition {phrase:?}: {e}"))?;
                props.push(prop).map_err(|e| format!("example {i}: {e}"))?;
            }
            if let Some(spec) = &example.specification {
                parse_formula(spec, &props).map_err(|e| {
                    format!("example {i}: specification {spec:?} does not parse: {e}")
                })?;
            }
        }
        Ok(())
    }
}

/// The two stores of one evaluation mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeStores {
    pub t2p: FewShotStore,
    pub t2tl: FewShotStore,
}

/// All four modes' stores.
#[derive(Debug, Clone, PartialEq)]
pub struct PulsStores {
    stores: BTreeMap<EvaluationMode, ModeStores>,
}

impl PulsStores {
    pub fn get(&self, mode: EvaluationMode) -> Option<&ModeStores> {
        self.stores.get(&mode)
    }

    pub fn require(&self, mode: EvaluationMode) -> Result<&ModeStores, PulsError> {
        self.get(mode).ok_or(PulsError::StoreMissing { mode })
    }

    /// Loads `<dir>/t2p/<mode>.json` and `<dir>/t2tl/<mode>.json` for all
    /// four modes.
    pub fn load_dir(dir: &Path) -> Result<Self, PulsError> {
        let mut stores = BTreeMap::new();
        for mode in EvaluationMode::ALL {
            let t2p = FewShotStore::load(&dir.join("t2p").join(format!("{}.json", mode.key())))?;
            let t2tl = FewShotStore::load(&dir.join("t2tl").join(format!("{}.json", mode.key())))?;
            stores.insert(mode, ModeStores { t2p, t2tl });
        }
        Ok(PulsStores { stores })
    }

    /// The curated stores bundled with the repository.
    pub fn bundled() -> Self {
        let files: [(EvaluationMode, &str, &str); 4] = [
            (
                EvaluationMode::ObjectExistence,
                include_str!("../../assets/fewshot/t2p/object_existence.json"),
                include_str!("../../assets/fewshot/t2tl/object_existence.json"),
            ),
            (
                EvaluationMode::SpatialRelationship,
                include_str!("../../assets/fewshot/t2p/spatial_relationship.json"),
                include_str!("../../assets/fewshot/t2tl/spatial_relationship.json"),
            ),
            (
                EvaluationMode::ObjectActionAlignment,
                include_str!("../../assets/fewshot/t2p/object_action_alignment.json"),
                include_str!("../../assets/fewshot/t2tl/object_action_alignment.json"),
            ),
            (
                EvaluationMode::OverallConsistency,
                include_str!("../../assets/fewshot/t2p/overall_consistency.json"),
                include_str!("../../assets/fewshot/t2tl/overall_consistency.json"),
            ),
        ];
        let mut stores = BTreeMap::new();
        for (mode, t2p_text, t2tl_text) in files {
            let t2p =
                FewShotStore::from_str_named(&format!("bundled t2p/{}", mode.key()), t2p_text)
                    .expect("bundled store must validate");
            let t2tl =
                FewShotStore::from_str_named(&format!("bundled t2tl/{}", mode.key()), t2tl_text)
                    .expect("bundled store must validate");
            stores.insert(mode, ModeStores { t2p, t2tl });
        }
        PulsStores { stores }
    }
}
