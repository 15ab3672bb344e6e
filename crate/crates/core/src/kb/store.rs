use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{
    FeedbackEntry, HistoryEntry, ImportRecord, KbError, KbRecord, Origin, QueryResult, SourceRef,
    Verdict,
};

/// Files backing a persistent store: the snapshot plus three append logs
/// named after it (`kb.json` → `kb.log.jsonl`, `kb.history.jsonl`,
/// `kb.feedback.jsonl`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StorePaths {
    pub snapshot: PathBuf,
    pub log: PathBuf,
    pub history: PathBuf,
    pub feedback: PathBuf,
}

impl StorePaths {
    pub fn for_snapshot(snapshot: impl AsRef<Path>) -> Self {
        let snapshot = snapshot.as_ref().to_path_buf();
        let stem = snapshot
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "kb".into());
        let sibling = |suffix: &str| snapshot.with_file_name(format!("{stem}.{suffix}.jsonl"));
        StorePaths {
            log: sibling("log"),
            history: sibling("history"),
            feedback: sibling("feedback"),
            snapshot,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbStats {
    pub records: usize,
    pub groups: usize,
    pub manual: usize,
    pub generated: usize,
    pub history: usize,
    pub feedback: usize,
}

/// Question–answer records with query history and feedback. Writes go to
/// append logs; [`KbStore::compact`] folds the record log into the snapshot.
#[derive(Debug, Default)]
pub struct KbStore {
    paths: Option<StorePaths>,
    records: Vec<KbRecord>,
    by_id: HashMap<String, usize>,
    history: Vec<HistoryEntry>,
    feedback: Vec<FeedbackEntry>,
    next_record: u64,
}

/// Parses a JSON array or JSON Lines file of import records. Errors carry the
/// 1-based line number.
pub fn parse_import(text: &str) -> Result<Vec<ImportRecord>, KbError> {
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(|e| KbError::Parse {
            line: e.line(),
            message: e.to_string(),
        });
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| KbError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, KbError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    let lines: Vec<&str> = text.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(v) => out.push(v),
            // A torn final line from an interrupted append is dropped.
            Err(_) if i + 1 == lines.len() && !text.ends_with('\n') => {
                tracing::warn!(path = %path.display(), "ignoring incomplete final log line");
            }
            Err(e) => {
                return Err(KbError::Parse {
                    line: i + 1,
                    message: format!("{}: {e}", path.display()),
                })
            }
        }
    }
    Ok(out)
}

fn append_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<(), KbError> {
    if items.is_empty() {
        return Ok(());
    }
    let mut buf = String::new();
    for item in items {
        buf.push_str(&serde_json::to_string(item)?);
        buf.push('\n');
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(buf.as_bytes())?;
    f.sync_data()?;
    Ok(())
}

impl KbStore {
    /// A store that lives only in memory.
    pub fn in_memory() -> Self {
        KbStore {
            next_record: 1,
            ..Default::default()
        }
    }

    /// Opens (or starts) the store whose snapshot is `snapshot`. The snapshot
    /// may be a plain import file; missing ids and timestamps are filled in.
    pub fn open(snapshot: impl AsRef<Path>) -> Result<Self, KbError> {
        let paths = StorePaths::for_snapshot(snapshot);
        let mut store = Self::in_memory();
        if paths.snapshot.exists() {
            let records = parse_import(&fs::read_to_string(&paths.snapshot)?)?;
            let fresh = store.prepare(records, Utc::now())?;
            store.commit(fresh);
        }
        let logged: Vec<KbRecord> = read_jsonl(&paths.log)?;
        // Records already in the snapshot come from a compaction that did not
        // get to remove the log.
        let pending = logged
            .into_iter()
            .filter(|r| store.get(&r.id) != Some(r))
            .map(ImportRecord::from)
            .collect();
        let fresh = store.prepare(pending, Utc::now())?;
        store.commit(fresh);
        store.history = read_jsonl(&paths.history)?;
        store.feedback = read_jsonl(&paths.feedback)?;
        store.paths = Some(paths);
        Ok(store)
    }

    pub fn paths(&self) -> Option<&StorePaths> {
        self.paths.as_ref()
    }

    pub fn records(&self) -> &[KbRecord] {
        &self.records
    }

    pub fn get(&self, id: &str) -> Option<&KbRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn feedback(&self) -> &[FeedbackEntry] {
        &self.feedback
    }

    fn fresh_id(&mut self, taken: &HashSet<String>) -> String {
        loop {
            let id = format!("kb-{:06}", self.next_record);
            self.next_record += 1;
            if !self.by_id.contains_key(&id) && !taken.contains(&id) {
                return id;
            }
        }
    }

    /// Validates a batch against the store and itself and materializes full
    /// records. Nothing is modified except the id counter.
    fn prepare(
        &mut self,
        batch: Vec<ImportRecord>,
        now: DateTime<Utc>,
    ) -> Result<Vec<KbRecord>, KbError> {
        let mut explicit = HashSet::new();
        for r in &batch {
            if let Some(id) = &r.id {
                if id.trim().is_empty() {
                    return Err(KbError::Validation("record id is empty".into()));
                }
                if self.by_id.contains_key(id) || !explicit.insert(id.clone()) {
                    return Err(KbError::Conflict(id.clone()));
                }
            }
        }
        let mut groups: HashMap<String, (String, SourceRef)> = HashMap::new();
        for r in &self.records {
            groups
                .entry(r.group_id.clone())
                .or_insert_with(|| (r.answer.clone(), r.source.clone()));
        }
        let mut out = Vec::with_capacity(batch.len());
        for (n, r) in batch.into_iter().enumerate() {
            let invalid = |what: &str| KbError::Validation(format!("record {}: {what}", n + 1));
            let question = r
                .question
                .filter(|q| !q.trim().is_empty())
                .ok_or_else(|| invalid("missing question"))?;
            let answer = r
                .answer
                .filter(|a| !a.trim().is_empty())
                .ok_or_else(|| invalid("missing answer"))?;
            let id = match r.id {
                Some(id) => id,
                None => self.fresh_id(&explicit),
            };
            let group_id = r
                .group_id
                .filter(|g| !g.trim().is_empty())
                .unwrap_or_else(|| id.clone());
            let source = r.source.unwrap_or_default();
            let (group_answer, group_source) = groups
                .entry(group_id.clone())
                .or_insert_with(|| (answer.clone(), source.clone()));
            if *group_answer != answer || *group_source != source {
                return Err(invalid(&format!(
                    "group {group_id} already has a different answer or source"
                )));
            }
            out.push(KbRecord {
                id,
                group_id,
                question,
                answer,
                source,
                origin: r.origin.unwrap_or_default(),
                created_at: r.created_at.unwrap_or(now),
            });
        }
        Ok(out)
    }

    fn commit(&mut self, records: Vec<KbRecord>) {
        for r in records {
            self.by_id.insert(r.id.clone(), self.records.len());
            self.records.push(r);
        }
    }

    /// Adds a batch all-or-nothing, returning the added records.
    pub fn import_records(
        &mut self,
        batch: Vec<ImportRecord>,
        now: DateTime<Utc>,
    ) -> Result<Vec<KbRecord>, KbError> {
        let counter = self.next_record;
        let fresh = match self.prepare(batch, now) {
            Ok(f) => f,
            Err(e) => {
                self.next_record = counter;
                return Err(e);
            }
        };
        if let Some(paths) = &self.paths {
            if let Err(e) = append_lines(&paths.log, &fresh) {
                self.next_record = counter;
                return Err(e);
            }
        }
        self.commit(fresh.clone());
        Ok(fresh)
    }

    /// Imports a JSON array or JSON Lines document; returns the count added.
    pub fn import_str(&mut self, text: &str) -> Result<usize, KbError> {
        Ok(self.import_records(parse_import(text)?, Utc::now())?.len())
    }

    pub fn import_json(&mut self, path: impl AsRef<Path>) -> Result<usize, KbError> {
        self.import_str(&fs::read_to_string(path)?)
    }

    pub fn export(&self) -> Vec<KbRecord> {
        self.records.clone()
    }

    pub fn export_json(&self) -> String {
        serde_json::to_string_pretty(&self.records).expect("records serialize")
    }

    /// Rewrites the snapshot with every record and empties the record log.
    pub fn compact(&mut self) -> Result<(), KbError> {
        let Some(paths) = &self.paths else {
            return Ok(());
        };
        if let Some(dir) = paths
            .snapshot
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
        {
            fs::create_dir_all(dir)?;
        }
        let tmp = paths.snapshot.with_extension("json.tmp");
        {
            let mut f = File::create(&tmp)?;
            f.write_all(self.export_json().as_bytes())?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &paths.snapshot)?;
        if paths.log.exists() {
            fs::remove_file(&paths.log)?;
        }
        Ok(())
    }

    /// Appends a history entry for a query and its results.
    pub fn log_query(
        &mut self,
        question: &str,
        results: &[QueryResult],
    ) -> Result<HistoryEntry, KbError> {
        let top = results.first();
        let entry = HistoryEntry {
            id: format!("h-{:06}", self.history.len() + 1),
            question: question.to_string(),
            timestamp: Utc::now(),
            top_result_id: top.map(|r| r.record.id.clone()),
            score: top.map(|r| r.score),
        };
        if let Some(paths) = &self.paths {
            append_lines(&paths.history, std::slice::from_ref(&entry))?;
        }
        self.history.push(entry.clone());
        Ok(entry)
    }

    pub fn record_feedback(
        &mut self,
        history_id: &str,
        verdict: Verdict,
        comment: &str,
    ) -> Result<FeedbackEntry, KbError> {
        if !self.history.iter().any(|h| h.id == history_id) {
            return Err(KbError::NotFound(history_id.to_string()));
        }
        let entry = FeedbackEntry {
            id: format!("f-{:06}", self.feedback.len() + 1),
            history_id: history_id.to_string(),
            verdict,
            comment: comment.to_string(),
            timestamp: Utc::now(),
        };
        if let Some(paths) = &self.paths {
            append_lines(&paths.feedback, std::slice::from_ref(&entry))?;
        }
        self.feedback.push(entry.clone());
        Ok(entry)
    }

    pub fn stats(&self) -> KbStats {
        let groups: BTreeSet<&str> = self.records.iter().map(|r| r.group_id.as_str()).collect();
        let generated = self
            .records
            .iter()
            .filter(|r| r.origin == Origin::Generated)
            .count();
        KbStats {
            records: self.records.len(),
            groups: groups.len(),
            manual: self.records.len() - generated,
            generated,
            history: self.history.len(),
            feedback: self.feedback.len(),
        }
    }
}
