use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::BufWriter;
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A keyed result table: the first `key_len` columns identify a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub key_len: usize,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str], key_len: usize) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            key_len,
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn get<'a>(&self, row: &'a [String], name: &str) -> Option<&'a str> {
        self.column(name).map(|i| row[i].as_str())
    }

    /// Numeric value of a column; `None` for empty or unparseable fields.
    pub fn num(&self, row: &[String], name: &str) -> Option<f64> {
        self.get(row, name).and_then(|v| v.parse().ok())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read(path: &Path, key_len: usize) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(file);
        let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            // a torn final line from an interrupted run is ignored
            if rec.len() == header.len() {
                rows.push(rec.iter().map(String::from).collect());
            }
        }
        Ok(Table { header, key_len, rows })
    }
}

pub fn fmt(v: f64) -> String {
    if v.is_finite() {
        crate::dynamics::format_f64(v)
    } else {
        String::new()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Outcome of evaluating a list of cells.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CellRun {
    pub completed: usize,
    pub resumed: usize,
    pub failed: usize,
}

/// Evaluates every cell not already present in `path`, appending rows as
/// they finish, then rewrites the file in cell order.
///
/// `eval` returns the non-key columns of a cell. Cells whose evaluation
/// fails are logged and left out of the table.
pub fn run_cells<F>(path: &Path, header: &[&str], keys: &[Vec<String>], resume: bool, eval: F) -> Result<(Table, CellRun)>
where
    F: Fn(usize) -> Result<Vec<String>> + Sync,
{
    let key_len = keys.first().map_or(0, Vec::len);
    let mut done: HashMap<Vec<String>, Vec<String>> = HashMap::new();
    if resume && path.exists() {
        let old = Table::read(path, key_len)?;
        if old.header.iter().map(String::as_str).eq(header.iter().copied()) {
            for r in old.rows {
                done.insert(r[..key_len].to_vec(), r);
            }
        } else {
            log::warn!("{}: header changed, recomputing every cell", path.display());
        }
    }
    let resumed = keys.iter().filter(|k| done.contains_key(*k)).count();

    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(header)?;
    for k in keys {
        if let Some(r) = done.get(k) {
            writer.write_record(r)?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    let appender = Mutex::new(writer);

    let pending: Vec<usize> = (0..keys.len()).filter(|&i| !done.contains_key(&keys[i])).collect();
    let fresh: Vec<(usize, Option<Vec<String>>)> = pending
        .par_iter()
        .map(|&i| {
            let row = match eval(i) {
                Ok(values) => {
                    let mut row = keys[i].clone();
                    row.extend(values);
                    debug_assert_eq!(row.len(), header.len());
                    let mut w = appender.lock().unwrap_or_else(|e| e.into_inner());
                    let res = w.write_record(&row).and_then(|_| Ok(w.flush()?));
                    if let Err(e) = res {
                        log::error!("{}: could not append row: {e}", path.display());
                    }
                    Some(row)
                }
                Err(e) => {
                    log::warn!("cell {:?} failed: {e}", keys[i]);
                    None
                }
            };
            (i, row)
        })
        .collect();
    drop(appender);

    let mut by_index: Vec<Option<Vec<String>>> = keys.iter().map(|k| done.remove(k)).collect();
    let mut failed = 0;
    let mut completed = 0;
    for (i, row) in fresh {
        match row {
            Some(r) => {
                completed += 1;
                by_index[i] = Some(r);
            }
            None => failed += 1,
        }
    }
    let mut table = Table::new(header, key_len);
    table.rows = by_index.into_iter().flatten().collect();
    table.write(path)?;
    Ok((
        table,
        CellRun {
            completed,
            resumed,
            failed,
        },
    ))
}
