use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::rubric::{Criterion, Rubric, System, MAX_SCORE};
use super::EvalError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub location: String,
    pub system: System,
    pub criterion: Criterion,
    pub run_index: u32,
    pub value: u8,
}

type Key = (String, System, Criterion, u32);

impl ScoreRecord {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.value > MAX_SCORE {
            return Err(EvalError::OutOfRange(i64::from(self.value)));
        }
        if self.run_index == 0 {
            return Err(EvalError::InvalidRecord("run_index is 1-based".into()));
        }
        if self.location.trim().is_empty() {
            return Err(EvalError::InvalidRecord("location is empty".into()));
        }
        if !Rubric::for_target(self.system.target()).has(self.criterion) {
            return Err(EvalError::InvalidRecord(format!(
                "{} is not graded on {}",
                self.system, self.criterion
            )));
        }
        Ok(())
    }

    fn key(&self) -> Key {
        (
            self.location.clone(),
            self.system,
            self.criterion,
            self.run_index,
        )
    }
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    location: String,
    system: String,
    criterion: String,
    run_index: u32,
    value: i64,
}

impl RawRecord {
    fn parse(self) -> Result<ScoreRecord, EvalError> {
        let value = u8::try_from(self.value)
            .ok()
            .filter(|v| *v <= MAX_SCORE)
            .ok_or(EvalError::OutOfRange(self.value))?;
        let rec = ScoreRecord {
            location: self.location,
            system: self.system.parse().map_err(EvalError::InvalidRecord)?,
            criterion: self.criterion.parse().map_err(EvalError::InvalidRecord)?,
            run_index: self.run_index,
            value,
        };
        rec.validate()?;
        Ok(rec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recorded {
    Inserted,
    AlreadyPresent,
}

/// Rubric scores keyed by (location, system, criterion, run index), backed
/// by a CSV file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreStore {
    records: BTreeMap<Key, ScoreRecord>,
}

impl ScoreStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self, EvalError> {
        let mut store = Self::new();
        let mut rdr = csv::Reader::from_reader(reader);
        for (i, row) in rdr.deserialize::<RawRecord>().enumerate() {
            let raw = row.map_err(|e| EvalError::Parse {
                line: i + 2,
                message: e.to_string(),
            })?;
            store.record(raw.parse()?)?;
        }
        Ok(store)
    }

    /// Missing file means an empty store.
    pub fn load(path: &Path) -> Result<Self, EvalError> {
        match std::fs::File::open(path) {
            Ok(f) => Self::from_csv(f),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::new()),
            Err(e) => Err(EvalError::Io {
                path: path.to_owned(),
                message: e.to_string(),
            }),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in self.records.values() {
            w.serialize(r).expect("writing to memory");
        }
        if self.records.is_empty() {
            w.write_record(["location", "system", "criterion", "run_index", "value"])
                .expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flushing memory")).expect("csv output is utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<(), EvalError> {
        let io = |e: std::io::Error| EvalError::Io {
            path: PathBuf::from(path),
            message: e.to_string(),
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        std::fs::write(path, self.to_csv()).map_err(io)
    }

    /// Idempotent for identical records; a differing value under the same key
    /// is rejected.
    pub fn record(&mut self, rec: ScoreRecord) -> Result<Recorded, EvalError> {
        rec.validate()?;
        match self.records.get(&rec.key()) {
            Some(existing) if existing.value == rec.value => Ok(Recorded::AlreadyPresent),
            Some(existing) => Err(EvalError::DuplicateKey {
                location: rec.location,
                system: rec.system,
                criterion: rec.criterion,
                run_index: rec.run_index,
                stored: existing.value,
            }),
            None => {
                self.records.insert(rec.key(), rec);
                Ok(Recorded::Inserted)
            }
        }
    }

    pub fn records(&self) -> impl Iterator<Item = &ScoreRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Values for one series, ordered by run index.
    pub fn values(&self, location: &str, system: System, criterion: Criterion) -> Vec<u8> {
        self.records
            .values()
            .filter(|r| r.location == location && r.system == system && r.criterion == criterion)
            .map(|r| r.value)
            .collect()
    }
}
