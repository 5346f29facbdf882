use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const CASSETTE_VERSION: u32 = 1;
const CASSETTE_FORMAT: &str = "battle-cassette";

/// Trims and collapses every run of whitespace to a single space.
pub fn normalize_prompt(prompt: &str) -> String {
    prompt.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercase hex SHA-256 of the normalized prompt.
pub fn prompt_digest(prompt: &str) -> String {
    hex::encode(Sha256::digest(normalize_prompt(prompt).as_bytes()))
}

#[derive(Debug, Error)]
pub enum CassetteError {
    #[error("cassette io: {0}")]
    Io(#[from] io::Error),
    #[error("cassette line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("unsupported cassette version {0}")]
    Version(u32),
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    digest: String,
    response: String,
}

/// Ordered prompt-digest to response pairs with unique digests.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cassette {
    entries: Vec<(String, String)>,
}

impl Cassette {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts by prompt. A prompt whose normalized form is already present
    /// keeps its position and takes the new response.
    pub fn insert(&mut self, prompt: &str, response: impl Into<String>) {
        self.insert_digest(prompt_digest(prompt), response.into());
    }

    fn insert_digest(&mut self, digest: String, response: String) {
        match self.entries.iter_mut().find(|(d, _)| *d == digest) {
            Some(entry) => entry.1 = response,
            None => self.entries.push((digest, response)),
        }
    }

    pub fn lookup(&self, prompt: &str) -> Option<&str> {
        self.lookup_digest(&prompt_digest(prompt))
    }

    pub fn lookup_digest(&self, digest: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(d, _)| d == digest)
            .map(|(_, r)| r.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(d, r)| (d.as_str(), r.as_str()))
    }

    /// Adds every entry of `other`, which wins on digest collisions.
    pub fn merge(&mut self, other: &Cassette) {
        for (digest, response) in &other.entries {
            self.insert_digest(digest.clone(), response.clone());
        }
    }

    pub fn write_to(&self, mut out: impl Write) -> io::Result<()> {
        let header = Header {
            format: CASSETTE_FORMAT.into(),
            version: CASSETTE_VERSION,
        };
        writeln!(out, "{}", serde_json::to_string(&header)?)?;
        for (digest, response) in &self.entries {
            let entry = Entry {
                digest: digest.clone(),
                response: response.clone(),
            };
            writeln!(out, "{}", serde_json::to_string(&entry)?)?;
        }
        out.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CassetteError> {
        let file = fs::File::create(path)?;
        self.write_to(io::BufWriter::new(file))?;
        Ok(())
    }

    pub fn read_from(input: impl BufRead) -> Result<Self, CassetteError> {
        let mut lines = input.lines().enumerate();
        let header: Header = match lines.next() {
            Some((_, line)) => serde_json::from_str(&line?).map_err(|e| CassetteError::Malformed {
                line: 1,
                reason: format!("bad header: {e}"),
            })?,
            None => {
                return Err(CassetteError::Malformed {
                    line: 1,
                    reason: "missing header".into(),
                })
            }
        };
        if header.format != CASSETTE_FORMAT {
            return Err(CassetteError::Malformed {
                line: 1,
                reason: format!("unknown format {:?}", header.format),
            });
        }
        if header.version != CASSETTE_VERSION {
            return Err(CassetteError::Version(header.version));
        }
        let mut cassette = Cassette::new();
        for (index, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: Entry = serde_json::from_str(&line).map_err(|e| CassetteError::Malformed {
                line: index + 1,
                reason: e.to_string(),
            })?;
            let is_hex = entry.digest.len() == 64 && entry.digest.bytes().all(|b| b.is_ascii_hexdigit());
            if !is_hex {
                return Err(CassetteError::Malformed {
                    line: index + 1,
                    reason: "digest is not a sha-256 hex string".into(),
                });
            }
            if cassette.lookup_digest(&entry.digest).is_some() {
                return Err(CassetteError::Malformed {
                    line: index + 1,
                    reason: "duplicate digest".into(),
                });
            }
            cassette.entries.push((entry.digest, entry.response));
        }
        Ok(cassette)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CassetteError> {
        let file = fs::File::open(path)?;
        Self::read_from(io::BufReader::new(file))
    }
}

impl<P: AsRef<str>, R: Into<String>> FromIterator<(P, R)> for Cassette {
    fn from_iter<T: IntoIterator<Item = (P, R)>>(iter: T) -> Self {
        let mut cassette = Cassette::new();
        for (prompt, response) in iter {
            cassette.insert(prompt.as_ref(), response);
        }
        cassette
    }
}
