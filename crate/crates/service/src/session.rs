use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use quantgym::Episode;
use uuid::Uuid;

use crate::ApiError;

struct Session {
    episode: Arc<Mutex<Episode>>,
    last_active: Instant,
}

#[derive(Default)]
struct Tables {
    live: HashMap<String, Session>,
    expired: HashSet<String>,
    finished: HashMap<String, String>,
}

/// Live sessions, expired ids and persisted trajectories. Each episode has
/// its own lock, so requests against one episode run one at a time.
pub(crate) struct SessionTable {
    idle_timeout: Duration,
    tables: Mutex<Tables>,
}

impl SessionTable {
    pub(crate) fn new(idle_timeout: Duration) -> Self {
        Self { idle_timeout, tables: Mutex::new(Tables::default()) }
    }

    fn sweep(&self, t: &mut Tables, now: Instant) {
        let stale: Vec<String> = t
            .live
            .iter()
            .filter(|(_, s)| now.duration_since(s.last_active) > self.idle_timeout)
            .map(|(id, _)| id.clone())
            .collect();
        for id in stale {
            t.live.remove(&id);
            t.expired.insert(id);
        }
    }

    pub(crate) fn insert(&self, episode: Episode) -> String {
        let id = Uuid::new_v4().simple().to_string();
        let now = Instant::now();
        let mut t = self.tables.lock().expect("session table lock");
        self.sweep(&mut t, now);
        t.live.insert(id.clone(), Session { episode: Arc::new(Mutex::new(episode)), last_active: now });
        id
    }

    /// Looks up a live session and marks it active.
    pub(crate) fn get(&self, id: &str) -> Result<Arc<Mutex<Episode>>, ApiError> {
        let now = Instant::now();
        let mut t = self.tables.lock().expect("session table lock");
        self.sweep(&mut t, now);
        if let Some(s) = t.live.get_mut(id) {
            s.last_active = now;
            return Ok(s.episode.clone());
        }
        if t.expired.contains(id) {
            Err(ApiError::Expired(id.to_string()))
        } else {
            Err(ApiError::UnknownEpisode(id.to_string()))
        }
    }

    pub(crate) fn store_trajectory(&self, id: &str, jsonl: String) {
        self.tables.lock().expect("session table lock").finished.insert(id.to_string(), jsonl);
    }

    pub(crate) fn trajectory(&self, id: &str) -> Result<String, ApiError> {
        let t = self.tables.lock().expect("session table lock");
        if let Some(text) = t.finished.get(id) {
            Ok(text.clone())
        } else if t.live.contains_key(id) {
            Err(ApiError::NotFinished(id.to_string()))
        } else if t.expired.contains(id) {
            Err(ApiError::Expired(id.to_string()))
        } else {
            Err(ApiError::UnknownEpisode(id.to_string()))
        }
    }
}
