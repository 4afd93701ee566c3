//! Dataset and result files: newline-delimited records, one per line.
//!
//! An instance record is a JSON object with keys `id`, `box`, and
//! `objects`, in that order on write. A result record pairs the instance
//! id and box with the packed placements. Reading validates the size
//! constraints and reports the offending 1-based line number on failure.

use crate::error::{Error, Result};
use crate::instance::{BoxSpec, Instance, ObjectDims};
use crate::placement::PackingResult;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRecord {
    id: String,
    #[serde(rename = "box")]
    box_dims: Vec<u32>,
    objects: Vec<Vec<u32>>,
}

impl From<&Instance> for InstanceRecord {
    fn from(inst: &Instance) -> Self {
        Self {
            id: inst.id().to_string(),
            box_dims: inst.box_spec().dims().to_vec(),
            objects: inst.objects().iter().map(|o| o.dims().to_vec()).collect(),
        }
    }
}

impl InstanceRecord {
    fn into_instance(self) -> Result<Instance> {
        let box_spec = BoxSpec::new(self.box_dims)?;
        let objects = self
            .objects
            .into_iter()
            .map(ObjectDims::new)
            .collect::<Result<Vec<_>>>()?;
        Instance::new(self.id, box_spec, objects)
    }
}

/// Serializes one instance to its single-line record form.
pub fn instance_to_line(inst: &Instance) -> String {
    serde_json::to_string(&InstanceRecord::from(inst)).expect("instance serialization cannot fail")
}

/// Parses a single record line (no trailing newline).
pub fn instance_from_line(line: &str, line_no: usize) -> Result<Instance> {
    let record: InstanceRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        msg: e.to_string(),
    })?;
    record.into_instance().map_err(|e| Error::Parse {
        line: line_no,
        msg: e.to_string(),
    })
}

/// Writes instances to `path`, one record per line. The write is atomic:
/// content goes to a temp file in the same directory, then renames over.
pub fn write_dataset(instances: &[Instance], path: impl AsRef<Path>) -> Result<()> {
    let mut buf = String::new();
    for inst in instances {
        buf.push_str(&instance_to_line(inst));
        buf.push('\n');
    }
    atomic_write(path.as_ref(), buf.as_bytes())
}

/// Reads a dataset written by [`write_dataset`]. An empty file yields an
/// empty dataset. Blank lines are rejected as malformed records.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<Instance>> {
    let content = read_named(path.as_ref())?;
    parse_dataset(&content)
}

/// read_to_string with the path woven into the error message.
pub(crate) fn read_named(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

/// Parses dataset content held in memory; see [`read_dataset`].
pub fn parse_dataset(content: &str) -> Result<Vec<Instance>> {
    content
        .lines()
        .enumerate()
        .map(|(i, line)| instance_from_line(line, i + 1))
        .collect()
}

/// One placed object inside a result record. `position` is always three
/// coordinates; 2D placements carry y = 0. `dims` has the instance's
/// dimensionality (2 or 3 entries).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementRecord {
    pub object: usize,
    #[serde(rename = "box")]
    pub box_index: usize,
    pub position: [u32; 3],
    pub dims: Vec<u32>,
}

/// One packed instance: which box shape was used and where every object
/// ended up. This is the renderer's input format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub id: String,
    #[serde(rename = "box")]
    pub box_dims: Vec<u32>,
    pub placements: Vec<PlacementRecord>,
}

impl ResultRecord {
    pub fn from_packing(inst: &Instance, result: &PackingResult) -> Self {
        let placements = result
            .placements
            .iter()
            .map(|p| PlacementRecord {
                object: p.object_index,
                box_index: p.box_index,
                position: [p.position.x, p.position.y, p.position.z],
                dims: inst.objects()[p.object_index].dims().to_vec(),
            })
            .collect();
        Self {
            id: inst.id().to_string(),
            box_dims: inst.box_spec().dims().to_vec(),
            placements,
        }
    }

    pub fn box_spec(&self) -> Result<BoxSpec> {
        BoxSpec::new(self.box_dims.clone())
    }

    pub fn boxes_used(&self) -> usize {
        self.placements.iter().map(|p| p.box_index + 1).max().unwrap_or(0)
    }

    /// Checks that every placement fits inside the box. Overlap between
    /// placements is not checked here; records from arbitrary sources are
    /// only required to be geometrically in bounds to render.
    pub fn validate(&self) -> Result<()> {
        let spec = self.box_spec()?;
        let m = spec.m();
        let (fl, fw) = spec.floor();
        let ceiling = spec.height();
        for p in &self.placements {
            if p.dims.len() != m {
                return Err(Error::Instance(format!(
                    "placement of object {} has {} dims in a {}-dimensional record",
                    p.object,
                    p.dims.len(),
                    m
                )));
            }
            let obj = ObjectDims::new(p.dims.clone())?;
            let [x, y, z] = p.position;
            let (l, w) = obj.footprint();
            let in_bounds = x + l <= fl && y + w <= fw && z + obj.height() <= ceiling;
            let flat_2d = m != 2 || y == 0;
            if !in_bounds || !flat_2d {
                return Err(Error::Instance(format!(
                    "placement of object {} at ({x},{y},{z}) leaves the box",
                    p.object
                )));
            }
        }
        Ok(())
    }
}

/// Serializes one packing to its single-line record form.
pub fn result_to_line(record: &ResultRecord) -> String {
    serde_json::to_string(record).expect("result serialization cannot fail")
}

/// Parses a single result line (no trailing newline) and bounds-checks it.
pub fn result_from_line(line: &str, line_no: usize) -> Result<ResultRecord> {
    let record: ResultRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        msg: e.to_string(),
    })?;
    record.validate().map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
    Ok(record)
}

/// Writes result records to `path`, one per line, atomically.
pub fn write_results(records: &[ResultRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut buf = String::new();
    for rec in records {
        buf.push_str(&result_to_line(rec));
        buf.push('\n');
    }
    atomic_write(path.as_ref(), buf.as_bytes())
}

/// Reads a result file written by [`write_results`].
pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
    let content = read_named(path.as_ref())?;
    content
        .lines()
        .enumerate()
        .map(|(i, line)| result_from_line(line, i + 1))
        .collect()
}

/// Write-temp-then-rename so concurrent readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = match path.file_name() {
        Some(name) => {
            let mut n = name.to_os_string();
            n.push(".tmp");
            path.with_file_name(n)
        }
        None => return Err(Error::Config(format!("invalid output path {}", path.display()))),
    };
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
