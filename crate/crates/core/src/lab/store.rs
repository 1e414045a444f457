//! One JSON document per session, written through a temporary file and an
//! atomic rename.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::Mutex;
use uuid::Uuid;

use super::session::{Session, SCHEMA_VERSION};
use super::LabError;

pub struct SessionStore {
    dir: PathBuf,
    sessions: Mutex<HashMap<Uuid, Arc<Mutex<Session>>>>,
}

fn io_err(e: impl std::fmt::Display) -> LabError {
    LabError::Internal(e.to_string())
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, LabError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(io_err)?;
        Ok(Self { dir, sessions: Mutex::new(HashMap::new()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_of(&self, id: Uuid) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    /// Reads a persisted session document.
    pub fn read_file(path: &Path) -> Result<Session, LabError> {
        let bytes = std::fs::read(path).map_err(io_err)?;
        let s: Session = serde_json::from_slice(&bytes).map_err(io_err)?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(LabError::Internal(format!("unsupported schema version {}", s.schema_version)));
        }
        Ok(s)
    }

    pub fn persist(&self, session: &Session) -> Result<(), LabError> {
        let path = self.path_of(session.id);
        let tmp = path.with_extension("json.tmp");
        let mut f = std::fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(&serde_json::to_vec_pretty(session).map_err(io_err)?).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
        std::fs::rename(&tmp, &path).map_err(io_err)?;
        Ok(())
    }

    pub fn insert(&self, session: Session) -> Result<Arc<Mutex<Session>>, LabError> {
        self.persist(&session)?;
        let id = session.id;
        let handle = Arc::new(Mutex::new(session));
        self.sessions.lock().insert(id, handle.clone());
        Ok(handle)
    }

    /// The in-memory handle of a session, loading it from disk on first use.
    pub fn get(&self, id: Uuid) -> Result<Arc<Mutex<Session>>, LabError> {
        if let Some(h) = self.sessions.lock().get(&id) {
            return Ok(h.clone());
        }
        let path = self.path_of(id);
        if !path.exists() {
            return Err(LabError::NotFound);
        }
        let loaded = Self::read_file(&path)?;
        let mut map = self.sessions.lock();
        Ok(map.entry(id).or_insert_with(|| Arc::new(Mutex::new(loaded))).clone())
    }

    /// Applies `f` to a copy of the session under its lock and persists the
    /// result before publishing it; on error nothing changes.
    pub fn update<T>(&self, id: Uuid, f: impl FnOnce(&mut Session) -> Result<T, LabError>) -> Result<T, LabError> {
        let handle = self.get(id)?;
        let mut guard = handle.lock();
        let mut next = guard.clone();
        let out = f(&mut next)?;
        if next != *guard {
            self.persist(&next)?;
            *guard = next;
        }
        Ok(out)
    }
}
