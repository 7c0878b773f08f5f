//! Durable envelope store: one file per envelope named by source and window,
//! plus an append-only `index.log` of `arrival source window file` lines.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::envelope::SketchEnvelope;
use crate::error::{invalid, Result};

const INDEX_FILE: &str = "index.log";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct IndexKey {
    arrival_ns: u64,
    source_id: u32,
    window_id: u64,
}

pub struct QueryStore {
    dir: PathBuf,
    inner: Mutex<Inner>,
}

struct Inner {
    log: File,
    /// File name per `(source, window)`; the latest put wins.
    entries: BTreeMap<(u32, u64), (u64, String)>,
}

impl QueryStore {
    /// Opens or creates a store, replaying its index.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let index = dir.join(INDEX_FILE);
        let mut entries = BTreeMap::new();
        match fs::read_to_string(&index) {
            Ok(text) => {
                for (n, line) in text.lines().enumerate() {
                    match parse_index_line(line) {
                        Some((arrival, source, window, file)) => {
                            entries.insert((source, window), (arrival, file));
                        }
                        None => log::warn!(
                            "{}: skipping malformed index line {}",
                            index.display(),
                            n + 1
                        ),
                    }
                }
            }
            Err(e) if e.kind() == ErrorKind::NotFound => {}
            Err(e) => return Err(e.into()),
        }
        let log = OpenOptions::new().create(true).append(true).open(&index)?;
        Ok(Self {
            dir,
            inner: Mutex::new(Inner { log, entries }),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("store lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes the envelope file, then records it in the index.
    pub fn put(&self, env: &SketchEnvelope) -> Result<()> {
        let name = format!("{:05}-{:012}.env", env.source_id, env.window_id);
        let tmp = self.dir.join(format!("{name}.tmp"));
        {
            let mut f = File::create(&tmp)?;
            f.write_all(&env.to_bytes())?;
            f.sync_data()?;
        }
        fs::rename(&tmp, self.dir.join(&name))?;
        let mut inner = self.inner.lock().expect("store lock");
        writeln!(
            inner.log,
            "{} {} {} {}",
            env.arrival_ns, env.source_id, env.window_id, name
        )?;
        inner.log.flush()?;
        inner
            .entries
            .insert((env.source_id, env.window_id), (env.arrival_ns, name));
        Ok(())
    }

    /// Envelopes that arrived in `[t0, t1]`, ordered by arrival, then source and window.
    /// Unreadable or corrupt envelope files are skipped with a warning.
    pub fn range(&self, t0: u64, t1: u64) -> Result<Vec<SketchEnvelope>> {
        if t0 > t1 {
            return Err(invalid(format!("empty time range [{t0}, {t1}]")));
        }
        let mut selected: Vec<(IndexKey, String)> = {
            let inner = self.inner.lock().expect("store lock");
            inner
                .entries
                .iter()
                .filter(|(_, (arrival, _))| (t0..=t1).contains(arrival))
                .map(|(&(source_id, window_id), (arrival_ns, name))| {
                    (
                        IndexKey {
                            arrival_ns: *arrival_ns,
                            source_id,
                            window_id,
                        },
                        name.clone(),
                    )
                })
                .collect()
        };
        selected.sort();
        let mut out = Vec::with_capacity(selected.len());
        for (_, name) in selected {
            let path = self.dir.join(&name);
            let bytes = match fs::read(&path) {
                Ok(b) => b,
                Err(e) if e.kind() == ErrorKind::NotFound => {
                    log::warn!("{}: indexed envelope is missing", path.display());
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            match SketchEnvelope::from_bytes(&bytes) {
                Ok(env) => out.push(env),
                Err(e) => log::warn!("{}: skipping corrupt envelope: {e}", path.display()),
            }
        }
        Ok(out)
    }

    pub fn all(&self) -> Result<Vec<SketchEnvelope>> {
        self.range(0, u64::MAX)
    }
}

fn parse_index_line(line: &str) -> Option<(u64, u32, u64, String)> {
    let mut parts = line.split(' ');
    let arrival = parts.next()?.parse().ok()?;
    let source = parts.next()?.parse().ok()?;
    let window = parts.next()?.parse().ok()?;
    let file = parts.next()?;
    if parts.next().is_some() || file.contains('/') || file.is_empty() {
        return None;
    }
    Some((arrival, source, window, file.to_owned()))
}
