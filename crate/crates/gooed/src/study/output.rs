//! CSV records and plot scripts.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Shortest round-trip text of a float.
pub(crate) fn num(x: f64) -> String {
    format!("{x}")
}

/// Header cells `d1..dk`.
pub(crate) fn design_columns(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("d{i}")).collect()
}

/// Append-only CSV file flushed after every row.
pub(crate) struct RecordWriter {
    w: csv::Writer<File>,
}

impl RecordWriter {
    /// Creates `path` with `header`, or keeps the rows of an earlier run of
    /// the same study. Returns the writer and the kept rows.
    ///
    /// A row belongs to the same study when its `config_hash` column equals
    /// `hash`. A truncated trailing row is dropped.
    pub(crate) fn open_resumable(path: &Path, header: &[String], hash: &str) -> Result<(Self, Vec<Vec<String>>)> {
        let kept = if path.exists() { read_rows(path, header, hash)? } else { Vec::new() };
        let mut w = Self::create(path, header)?;
        for row in &kept {
            w.write(row)?;
        }
        Ok((w, kept))
    }

    pub(crate) fn create(path: &Path, header: &[String]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(File::create(path)?);
        w.write_record(header)?;
        w.flush()?;
        Ok(Self { w })
    }

    pub(crate) fn write(&mut self, row: &[String]) -> Result<()> {
        self.w.write_record(row)?;
        self.w.flush()?;
        Ok(())
    }
}

fn read_rows(path: &Path, header: &[String], hash: &str) -> Result<Vec<Vec<String>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Config(format!(
            "{} exists with a different column layout; use another --out",
            path.display()
        )));
    }
    let hash_col = header.iter().position(|h| h == "config_hash").expect("records carry the config hash");
    let mut rows = Vec::new();
    for rec in r.records() {
        let Ok(rec) = rec else { break };
        if &rec[hash_col] != hash {
            return Err(Error::Config(format!(
                "{} holds results of a different config or seed; use another --out",
                path.display()
            )));
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

/// Appends rows to a side file without resume checks.
pub(crate) fn open_append(path: &Path, header: &[String], fresh: bool) -> Result<csv::Writer<File>> {
    let new = fresh || !path.exists();
    let f = if new {
        File::create(path)?
    } else {
        OpenOptions::new().append(true).open(path)?
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(f);
    if new {
        w.write_record(header)?;
        w.flush()?;
    }
    Ok(w)
}

/// Plot kind of a gnuplot script.
pub(crate) enum Plot<'a> {
    /// `y` columns against column `x` (1-based).
    Lines { x: usize, ys: &'a [usize], xlabel: &'a str, ylabel: &'a str },
    /// Colored points of column `z` over columns `x`, `y`.
    Map { x: usize, y: usize, z: usize, xlabel: &'a str, ylabel: &'a str },
}

/// Writes `<csv stem>.gp` next to `csv`.
pub(crate) fn write_plot_script(csv: &Path, header: &[String], plot: Plot) -> Result<PathBuf> {
    let name = csv.file_name().and_then(|s| s.to_str()).expect("utf-8 file name");
    let path = csv.with_extension("gp");
    let mut s = String::new();
    s.push_str("# gnuplot script; run from this directory: gnuplot -p ");
    s.push_str(&path.file_name().unwrap().to_string_lossy());
    s.push_str("\nset datafile separator ','\nset grid\n");
    let col = |k: usize| header[k - 1].replace('_', "\\_");
    match plot {
        Plot::Lines { x, ys, xlabel, ylabel } => {
            s.push_str(&format!("set xlabel '{xlabel}'\nset ylabel '{ylabel}'\nplot "));
            let parts: Vec<String> = ys
                .iter()
                .map(|y| format!("'{name}' using {x}:{y} skip 1 with linespoints title '{}'", col(*y)))
                .collect();
            s.push_str(&parts.join(", \\\n     "));
            s.push('\n');
        }
        Plot::Map { x, y, z, xlabel, ylabel } => {
            s.push_str(&format!(
                "set xlabel '{xlabel}'\nset ylabel '{ylabel}'\nset cblabel '{}'\nset view map\nset size ratio -1\n",
                col(z)
            ));
            s.push_str(&format!(
                "splot '{name}' using {x}:{y}:{z} skip 1 with points palette pointtype 5 pointsize 2 notitle\n"
            ));
        }
    }
    let mut f = File::create(&path)?;
    f.write_all(s.as_bytes())?;
    Ok(path)
}

/// Pretty JSON plus a trailing newline.
pub(crate) fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}
