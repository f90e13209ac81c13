pub mod data;
pub mod model;

use anyhow::Result;
use serde::Serialize;

use crate::output::Artifacts;
use crate::Format;

/// Writes a table either as TSV through `tsv` or as JSON from `value`.
pub fn table<F>(art: &mut Artifacts, format: Format, stem: &str, value: &impl Serialize, tsv: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> hiersage::Result<()>,
{
    match format {
        Format::Tsv => art.with(format!("{stem}.tsv"), tsv),
        Format::Json => art.json(format!("{stem}.json"), value),
    }
}
