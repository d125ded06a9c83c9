use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use parking_lot::{Mutex, RwLock};

use super::{AuditError, AuditRecord};

/// Storage behind [`super::AuditLog`]. Appends are serialized by the
/// backend and assign the next sequence number; snapshots are a
/// consistent prefix of the log.
pub trait AuditBackend: Send + Sync {
    fn append(&self, record: AuditRecord) -> Result<AuditRecord, AuditError>;
    fn snapshot(&self) -> Vec<AuditRecord>;
    fn describe(&self) -> String;
}

#[derive(Debug, Default)]
pub struct MemoryBackend {
    records: RwLock<Vec<AuditRecord>>,
}

impl AuditBackend for MemoryBackend {
    fn append(&self, mut record: AuditRecord) -> Result<AuditRecord, AuditError> {
        let mut records = self.records.write();
        record.sequence = records.last().map_or(1, |r| r.sequence + 1);
        records.push(record.clone());
        Ok(record)
    }

    fn snapshot(&self) -> Vec<AuditRecord> {
        self.records.read().clone()
    }

    fn describe(&self) -> String {
        "memory".into()
    }
}

/// One JSON record per line, appended and flushed under a single writer
/// lock. Existing records are read back on open.
#[derive(Debug)]
pub struct FileBackend {
    path: PathBuf,
    writer: Mutex<File>,
    records: RwLock<Vec<AuditRecord>>,
}

impl FileBackend {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, AuditError> {
        let path = path.as_ref().to_path_buf();
        let storage = |e: std::io::Error| AuditError::Storage(format!("{}: {e}", path.display()));
        let mut records = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(storage)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(storage)?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: AuditRecord = serde_json::from_str(&line).map_err(|e| AuditError::Corrupt {
                    line: i + 1,
                    message: e.to_string(),
                })?;
                records.push(record);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(storage)?;
        Ok(Self {
            path,
            writer: Mutex::new(file),
            records: RwLock::new(records),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl AuditBackend for FileBackend {
    fn append(&self, mut record: AuditRecord) -> Result<AuditRecord, AuditError> {
        let mut file = self.writer.lock();
        record.sequence = self.records.read().last().map_or(1, |r| r.sequence + 1);
        let mut line = serde_json::to_string(&record).map_err(|e| AuditError::Storage(e.to_string()))?;
        line.push('\n');
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .map_err(|e| AuditError::Storage(format!("{}: {e}", self.path.display())))?;
        self.records.write().push(record.clone());
        Ok(record)
    }

    fn snapshot(&self) -> Vec<AuditRecord> {
        self.records.read().clone()
    }

    fn describe(&self) -> String {
        format!("file:{}", self.path.display())
    }
}
