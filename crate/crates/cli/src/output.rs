// SPDX-License-Identifier: Apache-2.0

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use cesa::sweep::{SweepOutput, SweepRow};
use cesa::{Mode, Variant};
use serde::Serialize;

use crate::{Format, OUTPUT_DIR_ENV};

/// Flat CSV record of a sweep row.
#[derive(Serialize)]
struct CsvRow {
    width: u32,
    block_size: u32,
    variant: Variant,
    mode: Mode,
    er: f64,
    med: f64,
    mred: f64,
    sample_count: u64,
    run_count: u32,
    seed: u64,
    critical_path_levels: u32,
    gate_count: u32,
}

impl From<&SweepRow> for CsvRow {
    fn from(r: &SweepRow) -> Self {
        let c = &r.report.config;
        CsvRow {
            width: c.width(),
            block_size: c.block_size(),
            variant: c.variant(),
            mode: r.report.mode,
            er: r.report.er,
            med: r.report.med,
            mred: r.report.mred,
            sample_count: r.report.sample_count,
            run_count: r.report.run_count,
            seed: r.report.seed,
            critical_path_levels: r.critical_path_levels,
            gate_count: r.gate_count,
        }
    }
}

pub fn format_for(path: Option<&Path>, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(|| match path.and_then(|p| p.extension()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
        _ => Format::Json,
    })
}

fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_sweep(out: &SweepOutput, format: Format, path: Option<&Path>) -> anyhow::Result<()> {
    let mut w = sink(path)?;
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, out)?;
            writeln!(w)?;
        }
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(&mut w);
            for row in &out.rows {
                csv.serialize(CsvRow::from(row))?;
            }
            csv.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut w = sink(Some(path))?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// `--out-dir`, else `$CESA_OUTPUT_DIR`, else `./out`. Created if missing.
pub fn output_dir(flag: Option<PathBuf>) -> anyhow::Result<PathBuf> {
    let dir = flag
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

/// File-name friendly form of a config, e.g. `32_8_cesa-perl`.
pub fn config_tag(c: &cesa::AdderConfig) -> String {
    c.to_string().replace(':', "_")
}
