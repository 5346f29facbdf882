//! The set of live tournaments and where their journals are kept.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use battle_llm::Provider;

use crate::clock::ClockSource;
use crate::config::TournamentConfig;
use crate::engine::Engine;
use crate::error::EngineError;
use crate::handle::TournamentHandle;
use crate::journal::{self, FileJournal, JournalSink, MemoryJournal, SyncPolicy};
use crate::model::TournamentId;

#[derive(Debug, Clone)]
pub enum Storage {
    Memory,
    Directory { dir: PathBuf, sync: SyncPolicy },
}

pub struct Registry {
    storage: Storage,
    clock: ClockSource,
    provider: Arc<dyn Provider>,
    tournaments: RwLock<BTreeMap<TournamentId, Arc<TournamentHandle>>>,
    next_index: Mutex<usize>,
}

impl Registry {
    /// Opens the registry, restoring every journal already in the storage
    /// directory.
    pub fn open(storage: Storage, clock: ClockSource, provider: Arc<dyn Provider>) -> Result<Self, EngineError> {
        let registry = Registry {
            storage,
            clock,
            provider,
            tournaments: RwLock::new(BTreeMap::new()),
            next_index: Mutex::new(0),
        };
        if let Storage::Directory { dir, sync } = &registry.storage {
            std::fs::create_dir_all(dir).map_err(journal::JournalError::from)?;
            for id in journal::list_journals(dir)? {
                let (file, records) = FileJournal::open(journal::journal_path(dir, &id), *sync)?;
                let engine = Engine::restore(&records, Box::new(file))?;
                registry.insert(engine);
            }
        }
        Ok(registry)
    }

    fn insert(&self, engine: Engine) -> Arc<TournamentHandle> {
        let id = engine.state().id().clone();
        if let Some(index) = id.as_str().strip_prefix(TournamentId::PREFIX).and_then(|n| n.parse::<usize>().ok()) {
            let mut next = self.next_index.lock().unwrap_or_else(|p| p.into_inner());
            *next = (*next).max(index + 1);
        }
        let clock = self.clock.clock_for(engine.state().clock());
        let handle = Arc::new(TournamentHandle::new(engine, clock, self.provider.clone()));
        self.tournaments
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(id, handle.clone());
        handle
    }

    pub fn create(&self, config: TournamentConfig) -> Result<Arc<TournamentHandle>, EngineError> {
        config.validate()?;
        let id = {
            let mut next = self.next_index.lock().unwrap_or_else(|p| p.into_inner());
            let id = TournamentId::from_index(*next);
            *next += 1;
            id
        };
        let sink: Box<dyn JournalSink> = match &self.storage {
            Storage::Memory => Box::new(MemoryJournal::new()),
            Storage::Directory { dir, sync } => Box::new(FileJournal::create(journal::journal_path(dir, &id), *sync)?),
        };
        let clock = self.clock.clock_for(0);
        let engine = Engine::create(id, config, clock.now_ms(), sink)?;
        Ok(self.insert(engine))
    }

    pub fn get(&self, id: &TournamentId) -> Result<Arc<TournamentHandle>, EngineError> {
        self.tournaments
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| EngineError::UnknownTournament(id.to_string()))
    }

    pub fn ids(&self) -> Vec<TournamentId> {
        self.tournaments
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .keys()
            .cloned()
            .collect()
    }

    pub fn handles(&self) -> Vec<Arc<TournamentHandle>> {
        self.tournaments
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .values()
            .cloned()
            .collect()
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry").field("storage", &self.storage).finish_non_exhaustive()
    }
}
