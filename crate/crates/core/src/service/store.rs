use std::path::Path;

use redb::{backends::InMemoryBackend, Database, ReadableTable, ReadableTableMetadata, TableDefinition};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selectors::SelectorKind;

const SESSIONS: TableDefinition<&str, &[u8]> = TableDefinition::new("sessions");

/// One answer or skip, in submission order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub question_id: String,
    /// `None` records a skip.
    pub answer: Option<bool>,
}

/// What is persisted per session; the belief is rebuilt by replaying
/// `events`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub id: String,
    pub selector: SelectorKind,
    pub m: usize,
    pub seed: u64,
    pub events: Vec<SessionEvent>,
    pub created: u64,
    pub updated: u64,
}

pub struct SessionStore {
    db: Database,
}

fn storage(e: impl std::fmt::Display) -> Error {
    Error::Storage(e.to_string())
}

impl SessionStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::init(Database::create(path.as_ref()).map_err(storage)?)
    }

    pub fn in_memory() -> Result<Self> {
        Self::init(
            Database::builder()
                .create_with_backend(InMemoryBackend::new())
                .map_err(storage)?,
        )
    }

    fn init(db: Database) -> Result<Self> {
        let tx = db.begin_write().map_err(storage)?;
        tx.open_table(SESSIONS).map_err(storage)?;
        tx.commit().map_err(storage)?;
        Ok(Self { db })
    }

    pub fn get(&self, id: &str) -> Result<Option<SessionRecord>> {
        let tx = self.db.begin_read().map_err(storage)?;
        let table = tx.open_table(SESSIONS).map_err(storage)?;
        let Some(bytes) = table.get(id).map_err(storage)? else {
            return Ok(None);
        };
        Ok(Some(serde_json::from_slice(bytes.value())?))
    }

    pub fn put(&self, record: &SessionRecord) -> Result<()> {
        let bytes = serde_json::to_vec(record)?;
        let tx = self.db.begin_write().map_err(storage)?;
        {
            let mut table = tx.open_table(SESSIONS).map_err(storage)?;
            table.insert(record.id.as_str(), bytes.as_slice()).map_err(storage)?;
        }
        tx.commit().map_err(storage)
    }

    pub fn remove(&self, id: &str) -> Result<bool> {
        let tx = self.db.begin_write().map_err(storage)?;
        let existed = {
            let mut table = tx.open_table(SESSIONS).map_err(storage)?;
            let old = table.remove(id).map_err(storage)?;
            old.is_some()
        };
        tx.commit().map_err(storage)?;
        Ok(existed)
    }

    /// Deletes sessions last updated before `cutoff`; returns how many.
    pub fn evict_older_than(&self, cutoff: u64) -> Result<usize> {
        let stale: Vec<String> = {
            let tx = self.db.begin_read().map_err(storage)?;
            let table = tx.open_table(SESSIONS).map_err(storage)?;
            let mut stale = Vec::new();
            for entry in table.iter().map_err(storage)? {
                let (k, v) = entry.map_err(storage)?;
                let record: SessionRecord = serde_json::from_slice(v.value())?;
                if record.updated < cutoff {
                    stale.push(k.value().to_string());
                }
            }
            stale
        };
        for id in &stale {
            self.remove(id)?;
        }
        Ok(stale.len())
    }

    pub fn len(&self) -> Result<usize> {
        let tx = self.db.begin_read().map_err(storage)?;
        let table = tx.open_table(SESSIONS).map_err(storage)?;
        Ok(table.len().map_err(storage)? as usize)
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(self.len()? == 0)
    }
}
