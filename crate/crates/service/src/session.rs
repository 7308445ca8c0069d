use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use etma_core::document::{model_hash, probs_from_json, probs_to_json};
use etma_core::{
    apply_reduction, generate_complete, EventTree, Probabilities, ReductionDirective, SystemModel,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, RwLock};

use crate::error::ApiError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub action: String,
    pub timestamp_ms: u128,
}

/// One analysis: a model, the directive batches applied to its tree, an
/// optional probability table, and the evaluations run so far.
#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub parent: Option<String>,
    pub model: SystemModel,
    pub batches: Vec<Vec<ReductionDirective>>,
    pub table: Option<Probabilities>,
    pub generated: bool,
    pub evaluations: Vec<(String, f64)>,
    pub history: Vec<HistoryEntry>,
    tree: Option<EventTree>,
}

#[derive(Serialize, Deserialize)]
struct SessionFile {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent: Option<String>,
    model: SystemModel,
    #[serde(default)]
    batches: Vec<Vec<ReductionDirective>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<serde_json::Value>,
    generated: bool,
    #[serde(default)]
    evaluations: Vec<(String, f64)>,
    #[serde(default)]
    history: Vec<HistoryEntry>,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Model hash prefix plus a random suffix.
pub fn new_session_id(model: &SystemModel) -> String {
    let hash = model_hash(model);
    let suffix: u64 = rand::rng().random();
    format!("{}-{suffix:016x}", &hash[..12])
}

impl Session {
    pub fn new(model: SystemModel, parent: Option<String>) -> Self {
        let mut s = Self {
            id: new_session_id(&model),
            parent,
            model,
            batches: Vec::new(),
            table: None,
            generated: false,
            evaluations: Vec::new(),
            history: Vec::new(),
            tree: None,
        };
        s.record("create");
        s
    }

    pub fn record(&mut self, action: impl Into<String>) {
        self.history.push(HistoryEntry {
            action: action.into(),
            timestamp_ms: now_ms(),
        });
    }

    pub fn tree(&self) -> Option<&EventTree> {
        self.tree.as_ref()
    }

    /// Flattened directives across every applied batch.
    pub fn directives(&self) -> Vec<ReductionDirective> {
        self.batches.iter().flatten().cloned().collect()
    }

    pub fn generate(&mut self) -> Result<&EventTree, ApiError> {
        let tree = generate_complete(&self.model)?;
        self.batches.clear();
        self.generated = true;
        self.tree = Some(tree);
        self.record("generate");
        Ok(self.tree.as_ref().expect("just set"))
    }

    /// The current tree, generating it first if needed.
    pub fn ensure_tree(&mut self) -> Result<&EventTree, ApiError> {
        if self.tree.is_none() {
            self.generate()?;
        }
        Ok(self.tree.as_ref().expect("generated above"))
    }

    pub fn reduce(&mut self, directives: Vec<ReductionDirective>) -> Result<&EventTree, ApiError> {
        let reduced = apply_reduction(self.ensure_tree()?, &directives)?;
        if !directives.is_empty() {
            self.batches.push(directives);
        }
        self.tree = Some(reduced);
        self.record("reduce");
        Ok(self.tree.as_ref().expect("just set"))
    }

    fn rebuild(&mut self) -> Result<(), ApiError> {
        if !self.generated {
            return Ok(());
        }
        let mut tree = generate_complete(&self.model)?;
        for batch in &self.batches {
            tree = apply_reduction(&tree, batch)?;
        }
        self.tree = Some(tree);
        Ok(())
    }

    fn to_file(&self) -> SessionFile {
        SessionFile {
            id: self.id.clone(),
            parent: self.parent.clone(),
            model: self.model.clone(),
            batches: self.batches.clone(),
            table: self.table.as_ref().map(|t| {
                serde_json::from_str(&probs_to_json(t)).expect("table document is valid JSON")
            }),
            generated: self.generated,
            evaluations: self.evaluations.clone(),
            history: self.history.clone(),
        }
    }

    fn from_file(file: SessionFile) -> Result<Self, ApiError> {
        let table = match file.table {
            Some(v) => Some(probs_from_json(&v.to_string())?),
            None => None,
        };
        let mut s = Self {
            id: file.id,
            parent: file.parent,
            model: file.model,
            batches: file.batches,
            table,
            generated: file.generated,
            evaluations: file.evaluations,
            history: file.history,
            tree: None,
        };
        s.rebuild()?;
        Ok(s)
    }
}

/// Sessions in memory, mirrored to one JSON file each when a data
/// directory is configured.
pub struct Store {
    dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl Store {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    /// Opens (creating if needed) a data directory and loads every session
    /// file in it.
    pub fn open(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let mut sessions = HashMap::new();
        let mut entries: Vec<_> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        entries.sort();
        for path in entries {
            let text = std::fs::read_to_string(&path)?;
            let loaded = serde_json::from_str::<SessionFile>(&text)
                .map_err(|e| e.to_string())
                .and_then(|f| Session::from_file(f).map_err(|e| e.message));
            match loaded {
                Ok(s) => {
                    sessions.insert(s.id.clone(), Arc::new(Mutex::new(s)));
                }
                Err(e) => tracing::warn!("skipping {}: {e}", path.display()),
            }
        }
        Ok(Self {
            dir: Some(dir),
            sessions: RwLock::new(sessions),
        })
    }

    pub async fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session `{id}`")))
    }

    pub async fn insert(&self, session: Session) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.persist(&session)?;
        let id = session.id.clone();
        let handle = Arc::new(Mutex::new(session));
        self.sessions.write().await.insert(id, handle.clone());
        Ok(handle)
    }

    pub async fn len(&self) -> usize {
        self.sessions.read().await.len()
    }

    pub async fn is_empty(&self) -> bool {
        self.len().await == 0
    }

    /// Writes the session file through a temporary file and a rename.
    pub fn persist(&self, session: &Session) -> Result<(), ApiError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let text = serde_json::to_string_pretty(&session.to_file())
            .map_err(|e| ApiError::internal(e.to_string()))?;
        let path = dir.join(format!("{}.json", session.id));
        let tmp = dir.join(format!(".{}.json.tmp", session.id));
        std::fs::write(&tmp, text)
            .and_then(|_| std::fs::rename(&tmp, &path))
            .map_err(|e| ApiError::internal(format!("persist {}: {e}", path.display())))
    }
}
