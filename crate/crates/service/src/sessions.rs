//! Uploaded datasets keyed by random session ids, with expiry and optional
//! on-disk copies that survive a restart.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use epiforecast_core::ingest::parse_csv;
use epiforecast_core::Dataset;
use parking_lot::{Mutex, RwLock};
use rand::Rng;
use serde::{Deserialize, Serialize};

const MAX_TOMBSTONES: usize = 100_000;

/// 128 random bits as 32 lowercase hex digits.
pub fn random_id() -> String {
    format!("{:032x}", rand::rng().random::<u128>())
}

fn unix_millis(t: SystemTime) -> u64 {
    t.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

#[derive(Debug, Clone)]
pub struct Session {
    pub dataset: Arc<Dataset>,
    pub created_at: SystemTime,
    pub expires_at: SystemTime,
}

impl Session {
    pub fn expires_at_unix_ms(&self) -> u64 {
        unix_millis(self.expires_at)
    }
}

pub enum Lookup {
    Live(Session),
    Expired,
    Unknown,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    created_at_ms: u64,
    expires_at_ms: u64,
    source_rows: usize,
}

#[derive(Default)]
struct Tombstones {
    order: VecDeque<String>,
    ids: HashSet<String>,
}

impl Tombstones {
    fn insert(&mut self, id: String) {
        if self.ids.insert(id.clone()) {
            self.order.push_back(id);
            if self.order.len() > MAX_TOMBSTONES {
                if let Some(old) = self.order.pop_front() {
                    self.ids.remove(&old);
                }
            }
        }
    }
}

pub struct SessionStore {
    ttl: Duration,
    dir: Option<PathBuf>,
    live: RwLock<HashMap<String, Session>>,
    expired: Mutex<Tombstones>,
}

impl SessionStore {
    /// Opens the store, reloading unexpired sessions from `dir` if given.
    pub fn open(ttl: Duration, dir: Option<PathBuf>) -> io::Result<Self> {
        let store = SessionStore {
            ttl,
            dir,
            live: RwLock::new(HashMap::new()),
            expired: Mutex::new(Tombstones::default()),
        };
        if let Some(dir) = &store.dir {
            fs::create_dir_all(dir)?;
            store.reload(dir)?;
        }
        Ok(store)
    }

    fn reload(&self, dir: &Path) -> io::Result<()> {
        let now = SystemTime::now();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else {
                continue;
            };
            match load_session(dir, &id) {
                Ok(s) if s.expires_at > now => {
                    self.live.write().insert(id, s);
                }
                Ok(_) => {
                    remove_files(dir, &id);
                    self.expired.lock().insert(id);
                }
                Err(e) => log::warn!("skipping persisted session {id}: {e}"),
            }
        }
        Ok(())
    }

    pub fn create(&self, dataset: Dataset) -> io::Result<(String, Session)> {
        let now = SystemTime::now();
        let session = Session {
            dataset: Arc::new(dataset),
            created_at: now,
            expires_at: now + self.ttl,
        };
        let id = random_id();
        if let Some(dir) = &self.dir {
            persist(dir, &id, &session)?;
        }
        self.live.write().insert(id.clone(), session.clone());
        Ok((id, session))
    }

    pub fn get(&self, id: &str) -> Lookup {
        let now = SystemTime::now();
        if let Some(s) = self.live.read().get(id) {
            if s.expires_at > now {
                return Lookup::Live(s.clone());
            }
        }
        if self.expire(id) || self.expired.lock().ids.contains(id) {
            Lookup::Expired
        } else {
            Lookup::Unknown
        }
    }

    fn expire(&self, id: &str) -> bool {
        let removed = self.live.write().remove(id).is_some();
        if removed {
            if let Some(dir) = &self.dir {
                remove_files(dir, id);
            }
            self.expired.lock().insert(id.to_string());
        }
        removed
    }

    /// Drops every expired session; returns how many went.
    pub fn sweep(&self) -> usize {
        let now = SystemTime::now();
        let stale: Vec<String> = self
            .live
            .read()
            .iter()
            .filter(|(_, s)| s.expires_at <= now)
            .map(|(id, _)| id.clone())
            .collect();
        stale.iter().filter(|id| self.expire(id)).count()
    }

    pub fn len(&self) -> usize {
        self.live.read().len()
    }
}

fn csv_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.csv"))
}

fn meta_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.json"))
}

fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(tmp, path)
}

fn persist(dir: &Path, id: &str, s: &Session) -> io::Result<()> {
    write_atomic(&csv_path(dir, id), s.dataset.to_csv().as_bytes())?;
    let meta = Meta {
        created_at_ms: unix_millis(s.created_at),
        expires_at_ms: unix_millis(s.expires_at),
        source_rows: s.dataset.source_rows(),
    };
    // the meta file is written last: its presence marks a complete session
    write_atomic(&meta_path(dir, id), &serde_json::to_vec(&meta)?)
}

fn load_session(dir: &Path, id: &str) -> Result<Session, Box<dyn std::error::Error>> {
    let meta: Meta = serde_json::from_slice(&fs::read(meta_path(dir, id))?)?;
    let parsed = parse_csv(fs::File::open(csv_path(dir, id))?)?;
    let dataset = Dataset::from_series(parsed.regions().cloned().collect(), meta.source_rows)?;
    Ok(Session {
        dataset: Arc::new(dataset),
        created_at: UNIX_EPOCH + Duration::from_millis(meta.created_at_ms),
        expires_at: UNIX_EPOCH + Duration::from_millis(meta.expires_at_ms),
    })
}

fn remove_files(dir: &Path, id: &str) {
    for p in [meta_path(dir, id), csv_path(dir, id)] {
        if let Err(e) = fs::remove_file(&p) {
            if e.kind() != io::ErrorKind::NotFound {
                log::warn!("could not remove {}: {e}", p.display());
            }
        }
    }
}
