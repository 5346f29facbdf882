//! Bearer tokens issued by admins. Only SHA-256 digests are kept.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use battle_core::model::{Actor, TournamentId};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ApiError;

pub fn token_digest(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

fn fresh_token() -> String {
    let bytes: [u8; 24] = rand::rng().random();
    format!("bt_{}", hex::encode(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TokenRecord {
    digest: String,
    tournament_id: TournamentId,
    principal: Actor,
    revoked: bool,
}

/// Authenticated caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub principal: Actor,
    /// `None` for the master token.
    pub tournament_id: Option<TournamentId>,
}

pub struct TokenStore {
    master: Option<String>,
    records: RwLock<HashMap<String, TokenRecord>>,
    file: Option<Mutex<File>>,
}

impl TokenStore {
    /// In-memory store. `master` is the server-wide admin token.
    pub fn new(master: Option<&str>) -> Self {
        TokenStore {
            master: master.map(token_digest),
            records: RwLock::new(HashMap::new()),
            file: None,
        }
    }

    /// Store persisted as JSON lines at `path`; later lines override earlier
    /// ones for the same digest.
    pub fn persistent(master: Option<&str>, path: impl AsRef<Path>) -> io::Result<Self> {
        let path: PathBuf = path.as_ref().to_path_buf();
        let mut records = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<TokenRecord>(&line) {
                    Ok(record) => {
                        records.insert(record.digest.clone(), record);
                    }
                    Err(e) => tracing::warn!("skipping token line: {e}"),
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(TokenStore {
            master: master.map(token_digest),
            records: RwLock::new(records),
            file: Some(Mutex::new(file)),
        })
    }

    fn persist(&self, record: &TokenRecord) -> io::Result<()> {
        if let Some(file) = &self.file {
            let mut file = file.lock().unwrap_or_else(|p| p.into_inner());
            let line = serde_json::to_string(record).map_err(io::Error::other)?;
            writeln!(file, "{line}")?;
            file.flush()?;
        }
        Ok(())
    }

    pub fn has_master(&self) -> bool {
        self.master.is_some()
    }

    pub fn issue(&self, tournament_id: &TournamentId, principal: Actor) -> io::Result<String> {
        let token = fresh_token();
        let record = TokenRecord {
            digest: token_digest(&token),
            tournament_id: tournament_id.clone(),
            principal,
            revoked: false,
        };
        self.persist(&record)?;
        self.records
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(record.digest.clone(), record);
        Ok(token)
    }

    /// Revokes a token of `tournament_id`. Returns whether it was live.
    pub fn revoke(&self, tournament_id: &TournamentId, token: &str) -> io::Result<bool> {
        let digest = token_digest(token);
        let mut records = self.records.write().unwrap_or_else(|p| p.into_inner());
        let Some(record) = records.get_mut(&digest) else {
            return Ok(false);
        };
        if &record.tournament_id != tournament_id || record.revoked {
            return Ok(false);
        }
        record.revoked = true;
        let record = record.clone();
        drop(records);
        self.persist(&record)?;
        Ok(true)
    }

    pub fn is_master(&self, token: &str) -> bool {
        self.master.as_deref() == Some(token_digest(token).as_str())
    }

    /// Resolves a token for use against `tournament_id`, or against the
    /// server as a whole when `None`.
    pub fn authenticate(&self, token: &str, tournament_id: Option<&TournamentId>) -> Result<Session, ApiError> {
        let digest = token_digest(token);
        if self.master.as_deref() == Some(digest.as_str()) {
            return Ok(Session {
                principal: Actor::Admin,
                tournament_id: None,
            });
        }
        let records = self.records.read().unwrap_or_else(|p| p.into_inner());
        let record = records
            .get(&digest)
            .ok_or_else(|| ApiError::unauthenticated("unknown token"))?;
        if record.revoked {
            return Err(ApiError::auth_expired());
        }
        match tournament_id {
            Some(id) if id == &record.tournament_id => Ok(Session {
                principal: record.principal.clone(),
                tournament_id: Some(record.tournament_id.clone()),
            }),
            _ => Err(ApiError::unauthenticated("token is not valid for this resource")),
        }
    }
}

impl std::fmt::Debug for TokenStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TokenStore").finish_non_exhaustive()
    }
}
