use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// One journal line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub dataset_variant: String,
    pub provider: String,
    pub metrics: BTreeMap<String, f64>,
    pub avg_size_mb: Option<f64>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunFilter {
    pub provider: Option<String>,
    pub modifier: Option<String>,
    pub status: Option<RunStatus>,
}

impl RunFilter {
    pub fn matches(&self, r: &RunRecord) -> bool {
        self.provider.as_ref().is_none_or(|p| *p == r.provider)
            && self.modifier.as_ref().is_none_or(|m| *m == r.dataset_variant)
            && self.status.is_none_or(|s| s == r.status)
    }
}

/// Append-only JSON-lines run store with a `run_id -> byte offset` sidecar
/// (`<journal>.idx`, tab separated).
#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    index_path: PathBuf,
    index: HashMap<String, u64>,
    order: Vec<String>,
    file: File,
    end: u64,
}

impl Journal {
    /// Opens or creates a journal. The index is rebuilt from the journal
    /// itself; a torn final line from an interrupted write is cut off.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let mut index = HashMap::new();
        let mut order = Vec::new();
        let mut end = 0u64;
        {
            let mut reader = BufReader::new(&mut file);
            let mut line = String::new();
            loop {
                line.clear();
                let n = reader.read_line(&mut line).map_err(|e| Error::io(&path, e))?;
                if n == 0 {
                    break;
                }
                if !line.ends_with('\n') {
                    log::warn!("{}: dropping incomplete trailing record", path.display());
                    break;
                }
                if !line.trim().is_empty() {
                    let rec: RunRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                        line: order.len() + 1,
                        message: format!("{}: {e}", path.display()),
                    })?;
                    index.insert(rec.run_id.clone(), end);
                    order.push(rec.run_id);
                }
                end += n as u64;
            }
        }
        if file.metadata().map_err(|e| Error::io(&path, e))?.len() != end {
            file.set_len(end).map_err(|e| Error::io(&path, e))?;
        }
        let index_path = PathBuf::from(format!("{}.idx", path.display()));
        let journal = Journal {
            path,
            index_path,
            index,
            order,
            file,
            end,
        };
        // the sidecar is derived data; a read-only location only costs the cache
        if let Err(e) = journal.write_index() {
            log::warn!("cannot refresh journal index: {e}");
        }
        Ok(journal)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn contains(&self, run_id: &str) -> bool {
        self.index.contains_key(run_id)
    }

    /// `base` if unused, otherwise `base-r1`, `base-r2`, ...
    pub fn fresh_id(&self, base: &str) -> String {
        if !self.contains(base) {
            return base.to_string();
        }
        (1..)
            .map(|n| format!("{base}-r{n}"))
            .find(|id| !self.contains(id))
            .unwrap()
    }

    /// Appends and syncs the record; duplicate ids are rejected.
    pub fn append(&mut self, record: &RunRecord) -> Result<()> {
        if self.contains(&record.run_id) {
            return Err(Error::Duplicate(record.run_id.clone()));
        }
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        let offset = self.end;
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.sync_data())
            .map_err(|e| Error::io(&self.path, e))?;
        self.end += line.len() as u64;
        self.index.insert(record.run_id.clone(), offset);
        self.order.push(record.run_id.clone());
        let mut idx = OpenOptions::new()
            .append(true)
            .create(true)
            .open(&self.index_path)
            .map_err(|e| Error::io(&self.index_path, e))?;
        writeln!(idx, "{}\t{offset}", record.run_id).map_err(|e| Error::io(&self.index_path, e))
    }

    /// Reads one record through the index.
    pub fn get(&self, run_id: &str) -> Result<Option<RunRecord>> {
        let Some(&offset) = self.index.get(run_id) else {
            return Ok(None);
        };
        let mut f = File::open(&self.path).map_err(|e| Error::io(&self.path, e))?;
        f.seek(SeekFrom::Start(offset)).map_err(|e| Error::io(&self.path, e))?;
        let mut line = String::new();
        BufReader::new(f)
            .read_line(&mut line)
            .map_err(|e| Error::io(&self.path, e))?;
        Ok(Some(serde_json::from_str(&line)?))
    }

    /// Matching records ordered by start time; equal times keep append order.
    pub fn list_runs(&self, filter: &RunFilter) -> Result<Vec<RunRecord>> {
        let f = File::open(&self.path).map_err(|e| Error::io(&self.path, e))?;
        let mut out = Vec::with_capacity(self.order.len());
        let mut remaining = self.end;
        for line in BufReader::new(f).lines() {
            let line = line.map_err(|e| Error::io(&self.path, e))?;
            let consumed = line.len() as u64 + 1;
            if consumed > remaining {
                break;
            }
            remaining -= consumed;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RunRecord = serde_json::from_str(&line)?;
            if filter.matches(&rec) {
                out.push(rec);
            }
        }
        out.sort_by_key(|r| r.started_at);
        Ok(out)
    }

    fn write_index(&self) -> Result<()> {
        let mut text = String::new();
        for id in &self.order {
            text.push_str(&format!("{id}\t{}\n", self.index[id]));
        }
        if fs::read_to_string(&self.index_path).is_ok_and(|cur| cur == text) {
            return Ok(());
        }
        fs::write(&self.index_path, text).map_err(|e| Error::io(&self.index_path, e))
    }
}

type Request = (RunRecord, mpsc::Sender<Result<RunRecord>>);

/// Owns the journal on a dedicated thread; any number of producers hand
/// records to it. Records whose id is taken get a rerun suffix.
pub struct JournalWriter {
    tx: Option<mpsc::Sender<Request>>,
    handle: Option<thread::JoinHandle<Journal>>,
}

impl JournalWriter {
    pub fn spawn(journal: Journal) -> Self {
        let (tx, rx) = mpsc::channel::<Request>();
        let handle = thread::spawn(move || {
            let mut journal = journal;
            for (mut rec, reply) in rx {
                rec.run_id = journal.fresh_id(&rec.run_id);
                let res = journal.append(&rec).map(|_| rec);
                let _ = reply.send(res);
            }
            journal
        });
        JournalWriter {
            tx: Some(tx),
            handle: Some(handle),
        }
    }

    pub fn sender(&self) -> JournalSender {
        JournalSender(self.tx.clone().expect("writer running"))
    }

    /// Stops the writer after pending records and hands the journal back.
    pub fn finish(mut self) -> Journal {
        self.tx.take();
        self.handle.take().unwrap().join().expect("journal writer panicked")
    }
}

#[derive(Clone)]
pub struct JournalSender(mpsc::Sender<Request>);

impl JournalSender {
    /// Blocks until the record is durable; returns it with its final id.
    pub fn append(&self, record: RunRecord) -> Result<RunRecord> {
        let (tx, rx) = mpsc::channel();
        self.0
            .send((record, tx))
            .map_err(|_| Error::invalid("journal writer stopped"))?;
        rx.recv().map_err(|_| Error::invalid("journal writer stopped"))?
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn record(id: &str, provider: &str, modifier: &str, minute: u32, status: RunStatus) -> RunRecord {
        let t = Utc.with_ymd_and_hms(2024, 5, 1, 12, minute, 0).unwrap();
        RunRecord {
            run_id: id.to_string(),
            dataset_variant: modifier.to_string(),
            provider: provider.to_string(),
            metrics: if status == RunStatus::Ok {
                BTreeMap::from([("map".to_string(), 0.5 + minute as f64 / 1000.0)])
            } else {
                BTreeMap::new()
            },
            avg_size_mb: Some(0.25),
            started_at: t,
            finished_at: t,
            status,
            diagnostics: (status == RunStatus::Failed).then(|| "exit 1".to_string()),
        }
    }

    #[test]
    fn append_list_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut j = Journal::open(dir.path().join("runs.jsonl")).unwrap();
        let r = record("a", "fcos", "jpeg_q10", 1, RunStatus::Ok);
        j.append(&r).unwrap();
        assert_eq!(j.list_runs(&RunFilter::default()).unwrap(), vec![r.clone()]);
        assert_eq!(j.get("a").unwrap(), Some(r.clone()));
        assert!(matches!(j.append(&r), Err(Error::Duplicate(_))));
        assert_eq!(j.fresh_id("a"), "a-r1");
    }

    #[test]
    fn metric_values_survive_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.jsonl");
        let mut r = record("a", "fcos", "jpeg_q10", 1, RunStatus::Ok);
        let values = [54.068937653388076, 0.1 + 0.2, 1.0 / 3.0, 5e-324, f64::MAX];
        for (i, v) in values.iter().enumerate() {
            r.metrics.insert(format!("m{i}"), *v);
        }
        Journal::open(&path).unwrap().append(&r).unwrap();
        let back = Journal::open(&path).unwrap().get("a").unwrap().unwrap();
        for (i, v) in values.iter().enumerate() {
            assert_eq!(back.metrics[&format!("m{i}")].to_bits(), v.to_bits());
        }
    }

    #[test]
    fn filters_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut j = Journal::open(dir.path().join("runs.jsonl")).unwrap();
        for i in 0..26u32 {
            let provider = if i % 2 == 0 { "fcos" } else { "rcnn" };
            let status = if i == 5 { RunStatus::Failed } else { RunStatus::Ok };
            // appended out of time order
            j.append(&record(
                &format!("r{i}"),
                provider,
                &format!("jpeg_q{}", i / 2),
                30 - i,
                status,
            ))
            .unwrap();
        }
        let all = j.list_runs(&RunFilter::default()).unwrap();
        assert_eq!(all.len(), 26);
        assert!(all.windows(2).all(|w| w[0].started_at <= w[1].started_at));
        let fcos = j
            .list_runs(&RunFilter {
                provider: Some("fcos".into()),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(fcos.len(), 13);
        assert!(fcos.iter().all(|r| r.provider == "fcos"));
        let failed = j
            .list_runs(&RunFilter {
                status: Some(RunStatus::Failed),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(failed.len(), 1);
        assert!(failed[0].metrics.is_empty());
        let one = j
            .list_runs(&RunFilter {
                modifier: Some("jpeg_q3".into()),
                provider: Some("rcnn".into()),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn survives_restart_and_torn_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.jsonl");
        {
            let mut j = Journal::open(&path).unwrap();
            j.append(&record("a", "fcos", "identity", 1, RunStatus::Ok)).unwrap();
            j.append(&record("b", "fcos", "identity", 2, RunStatus::Ok)).unwrap();
        }
        // crash in the middle of a third append
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"run_id\":\"c\",\"datas").unwrap();
        drop(f);

        let mut j = Journal::open(&path).unwrap();
        assert_eq!(j.len(), 2);
        assert_eq!(j.get("b").unwrap().unwrap().run_id, "b");
        j.append(&record("c", "fcos", "identity", 3, RunStatus::Ok)).unwrap();
        let j = Journal::open(&path).unwrap();
        let ids: Vec<_> = j
            .list_runs(&RunFilter::default())
            .unwrap()
            .into_iter()
            .map(|r| r.run_id)
            .collect();
        assert_eq!(ids, ["a", "b", "c"]);
        let idx = fs::read_to_string(dir.path().join("runs.jsonl.idx")).unwrap();
        assert_eq!(idx.lines().count(), 3);
        assert!(idx.starts_with("a\t0\n"));
    }

    #[test]
    fn writer_thread_assigns_rerun_ids() {
        let dir = tempfile::tempdir().unwrap();
        let writer = JournalWriter::spawn(Journal::open(dir.path().join("j.jsonl")).unwrap());
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let s = writer.sender();
                thread::spawn(move || s.append(record("same", "fcos", "identity", i, RunStatus::Ok)).unwrap())
            })
            .collect();
        let mut ids: Vec<String> = handles.into_iter().map(|h| h.join().unwrap().run_id).collect();
        ids.sort();
        let j = writer.finish();
        assert_eq!(j.len(), 8);
        assert_eq!(ids[0], "same");
        assert!(ids[1..].iter().all(|id| id.starts_with("same-r")));
    }
}
