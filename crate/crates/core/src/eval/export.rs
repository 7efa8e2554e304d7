use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::metrics::{BudgetGrid, Curve, Rate};

fn csv_error(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// `attempts,solved` with one row per attempt count.
pub fn curve_csv(curve: &Curve) -> std::io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["attempts", "solved"]).map_err(csv_error)?;
    for (k, solved) in curve.points.iter().enumerate() {
        w.write_record([(k + 1).to_string(), solved.to_string()])
            .map_err(csv_error)?;
    }
    into_string(w)
}

/// `split,solved,total,fraction,percent` with one row per labelled rate.
pub fn table_csv(rows: &[(&str, Rate)]) -> std::io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["split", "solved", "total", "fraction", "percent"])
        .map_err(csv_error)?;
    for (label, rate) in rows {
        w.write_record([
            label.to_string(),
            rate.solved.to_string(),
            rate.total.to_string(),
            rate.fraction(),
            rate.percent(),
        ])
        .map_err(csv_error)?;
    }
    into_string(w)
}

/// `drafts,sketches_per_draft,solved`; cells over the cap are left empty.
pub fn grid_csv(grid: &BudgetGrid) -> std::io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["drafts", "sketches_per_draft", "solved"])
        .map_err(csv_error)?;
    for (i, d) in grid.draft_counts.iter().enumerate() {
        for (j, s) in grid.sketch_counts.iter().enumerate() {
            let cell = grid.cells[i][j].map(|c| c.to_string()).unwrap_or_default();
            w.write_record([d.to_string(), s.to_string(), cell])
                .map_err(csv_error)?;
        }
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> std::io::Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Run metadata kept apart from the deterministic outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<C: Serialize> {
    pub created_unix_s: u64,
    pub wall_ms: u64,
    pub config_hash: String,
    pub config: C,
    /// Output file name and sha256 of its contents.
    pub outputs: Vec<(String, String)>,
}

impl<C: Serialize> Manifest<C> {
    pub fn new(config: C, wall_ms: u64) -> Self {
        let canonical = serde_json::to_vec(&config).expect("config serializes");
        Self {
            created_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_ms,
            config_hash: sha256_hex(&canonical),
            config,
            outputs: Vec::new(),
        }
    }

    /// Writes `contents` to `dir/name` and registers its hash.
    pub fn write_output(&mut self, dir: &Path, name: &str, contents: &[u8]) -> std::io::Result<()> {
        std::fs::write(dir.join(name), contents)?;
        self.outputs.push((name.to_string(), sha256_hex(contents)));
        Ok(())
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, text + "\n")
    }
}
