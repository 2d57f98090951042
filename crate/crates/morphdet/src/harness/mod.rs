//! Dataset manifests, experiment protocols, model bundles, and the
//! synthetic dataset generator.
//!
//! A manifest is a UTF-8 CSV with header
//! `path,label,medium,post,compressed,partition,subject_id`. Paths are
//! resolved relative to the manifest file. Loading validates every row,
//! rejects duplicate paths and unknown enum values, requires all files to
//! exist, and enforces subject disjointness between the train and test
//! partitions.

mod bundle;
mod experiment;
mod synth;

pub use bundle::{load_bundle, load_bundle_expecting, save_bundle};
pub use experiment::{
    enumerate_protocol_cells, extract_features_for_paths, run_experiment, score_paths,
    train_ensemble, ExperimentOutcome, TrainedEnsemble,
};
pub use synth::{generate_synthetic_dataset, SynthOptions};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use crate::classifiers::Label;
use crate::error::{Error, Result};

/// Acquisition medium of an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Medium {
    Digital,
    /// Print-scan, dye-sublimation printer.
    Ps1,
    /// Print-scan, inkjet printer.
    Ps2,
}

impl Medium {
    pub const ALL: [Medium; 3] = [Medium::Digital, Medium::Ps1, Medium::Ps2];

    pub fn label(&self) -> &'static str {
        match self {
            Medium::Digital => "digital",
            Medium::Ps1 => "ps1",
            Medium::Ps2 => "ps2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "digital" => Ok(Medium::Digital),
            "ps1" => Ok(Medium::Ps1),
            "ps2" => Ok(Medium::Ps2),
            other => Err(Error::Manifest(format!("unknown medium {other:?}"))),
        }
    }
}

/// Whether morphs in this row set were manually retouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PostProcessing {
    Before,
    After,
}

impl PostProcessing {
    pub const ALL: [PostProcessing; 2] = [PostProcessing::Before, PostProcessing::After];

    pub fn label(&self) -> &'static str {
        match self {
            PostProcessing::Before => "before",
            PostProcessing::After => "after",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "before" => Ok(PostProcessing::Before),
            "after" => Ok(PostProcessing::After),
            other => Err(Error::Manifest(format!("unknown post value {other:?}"))),
        }
    }
}

/// Whether the image went through lossy compression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Compression {
    No,
    Yes,
}

impl Compression {
    pub const ALL: [Compression; 2] = [Compression::No, Compression::Yes];

    pub fn label(&self) -> &'static str {
        match self {
            Compression::No => "no",
            Compression::Yes => "yes",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "no" => Ok(Compression::No),
            "yes" => Ok(Compression::Yes),
            other => Err(Error::Manifest(format!(
                "unknown compressed value {other:?}"
            ))),
        }
    }
}

/// Which split a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Partition {
    Train,
    Test,
}

impl Partition {
    pub fn label(&self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Partition::Train),
            "test" => Ok(Partition::Test),
            other => Err(Error::Manifest(format!("unknown partition {other:?}"))),
        }
    }
}

fn parse_label(s: &str) -> Result<Label> {
    match s {
        "bonafide" => Ok(Label::BonaFide),
        "morph" => Ok(Label::Morph),
        other => Err(Error::Manifest(format!("unknown label {other:?}"))),
    }
}

fn label_name(l: Label) -> &'static str {
    match l {
        Label::BonaFide => "bonafide",
        Label::Morph => "morph",
    }
}

/// One labeled image.
#[derive(Debug, Clone)]
pub struct ManifestRow {
    /// Path as written in the CSV.
    pub rel_path: String,
    /// Resolved path on disk.
    pub path: PathBuf,
    pub label: Label,
    pub medium: Medium,
    pub post: PostProcessing,
    pub compressed: Compression,
    pub partition: Partition,
    pub subject_id: String,
}

/// The dataset cell a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellSelector {
    pub medium: Medium,
    pub post: PostProcessing,
    pub compressed: Compression,
}

impl CellSelector {
    pub fn matches(&self, row: &ManifestRow) -> bool {
        row.medium == self.medium && row.post == self.post && row.compressed == self.compressed
    }

    /// Parse `medium=digital,post=before,compressed=no`; `compressed`
    /// defaults to `no` when omitted.
    pub fn parse(s: &str) -> Result<Self> {
        let mut medium = None;
        let mut post = None;
        let mut compressed = Compression::No;
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("selector part {part:?} is not key=value")))?;
            match key.trim() {
                "medium" => medium = Some(Medium::parse(value.trim())?),
                "post" => post = Some(PostProcessing::parse(value.trim())?),
                "compressed" => compressed = Compression::parse(value.trim())?,
                other => {
                    return Err(Error::Config(format!("unknown selector key {other:?}")));
                }
            }
        }
        Ok(Self {
            medium: medium.ok_or_else(|| Error::Config("selector needs medium=".into()))?,
            post: post.ok_or_else(|| Error::Config("selector needs post=".into()))?,
            compressed,
        })
    }
}

impl fmt::Display for CellSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "medium={},post={},compressed={}",
            self.medium.label(),
            self.post.label(),
            self.compressed.label()
        )
    }
}

/// Aggregated row counts per (partition, cell, label).
#[derive(Debug, Clone, Default)]
pub struct ManifestSummary {
    counts: BTreeMap<(String, Medium, PostProcessing, Compression), (usize, usize)>,
}

impl ManifestSummary {
    /// `(bona fide, morph)` counts of one cell.
    pub fn cell(
        &self,
        partition: Partition,
        medium: Medium,
        post: PostProcessing,
        compressed: Compression,
    ) -> (usize, usize) {
        self.counts
            .get(&(partition.label().to_string(), medium, post, compressed))
            .copied()
            .unwrap_or((0, 0))
    }
}

impl fmt::Display for ManifestSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<6} {:<8} {:<7} {:<11} {:>9} {:>6}",
            "part", "medium", "post", "compressed", "bonafide", "morph"
        )?;
        for ((part, medium, post, comp), (nb, nm)) in &self.counts {
            writeln!(
                f,
                "{:<6} {:<8} {:<7} {:<11} {:>9} {:>6}",
                part,
                medium.label(),
                post.label(),
                comp.label(),
                nb,
                nm
            )?;
        }
        Ok(())
    }
}

/// The validated image inventory.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    rows: Vec<ManifestRow>,
    source: PathBuf,
}

pub const MANIFEST_HEADER: [&str; 7] = [
    "path",
    "label",
    "medium",
    "post",
    "compressed",
    "partition",
    "subject_id",
];

impl DatasetManifest {
    /// Load and validate a manifest CSV.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if text.trim().is_empty() {
            return Err(Error::Manifest(format!(
                "manifest {} is empty",
                path.display()
            )));
        }
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Manifest(format!("bad header: {e}")))?
            .clone();
        let got: Vec<&str> = headers.iter().collect();
        if got != MANIFEST_HEADER {
            return Err(Error::Manifest(format!(
                "unexpected header {got:?}; expected {MANIFEST_HEADER:?}"
            )));
        }
        let mut rows = Vec::new();
        let mut seen_paths = HashSet::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record =
                record.map_err(|e| Error::Manifest(format!("line {line}: {e}")))?;
            if record.len() != MANIFEST_HEADER.len() {
                return Err(Error::Manifest(format!(
                    "line {line}: expected {} fields, got {}",
                    MANIFEST_HEADER.len(),
                    record.len()
                )));
            }
            let rel_path = record[0].to_string();
            if rel_path.is_empty() {
                return Err(Error::Manifest(format!("line {line}: empty path")));
            }
            if !seen_paths.insert(rel_path.clone()) {
                return Err(Error::Manifest(format!(
                    "line {line}: duplicate path {rel_path:?}"
                )));
            }
            let resolved = if Path::new(&rel_path).is_absolute() {
                PathBuf::from(&rel_path)
            } else {
                dir.join(&rel_path)
            };
            if !resolved.exists() {
                return Err(Error::Manifest(format!(
                    "line {line}: file {} does not exist",
                    resolved.display()
                )));
            }
            let subject_id = record[6].to_string();
            if subject_id.is_empty() {
                return Err(Error::Manifest(format!("line {line}: empty subject_id")));
            }
            rows.push(ManifestRow {
                rel_path,
                path: resolved,
                label: parse_label(&record[1])
                    .map_err(|e| Error::Manifest(format!("line {line}: {e}")))?,
                medium: Medium::parse(&record[2])
                    .map_err(|e| Error::Manifest(format!("line {line}: {e}")))?,
                post: PostProcessing::parse(&record[3])
                    .map_err(|e| Error::Manifest(format!("line {line}: {e}")))?,
                compressed: Compression::parse(&record[4])
                    .map_err(|e| Error::Manifest(format!("line {line}: {e}")))?,
                partition: Partition::parse(&record[5])
                    .map_err(|e| Error::Manifest(format!("line {line}: {e}")))?,
                subject_id,
            });
        }
        if rows.is_empty() {
            return Err(Error::Manifest(format!(
                "manifest {} has no data rows",
                path.display()
            )));
        }

        // Subject disjointness across partitions.
        let mut by_partition: HashMap<Partition, HashSet<&str>> = HashMap::new();
        for row in &rows {
            by_partition
                .entry(row.partition)
                .or_default()
                .insert(row.subject_id.as_str());
        }
        if let (Some(train), Some(test)) = (
            by_partition.get(&Partition::Train),
            by_partition.get(&Partition::Test),
        ) {
            let mut leaked: Vec<&str> = train.intersection(test).copied().collect();
            leaked.sort_unstable();
            if let Some(subject) = leaked.first() {
                return Err(Error::Manifest(format!(
                    "subject {subject:?} appears in both train and test partitions"
                )));
            }
        }

        Ok(Self {
            rows,
            source: path.to_path_buf(),
        })
    }

    pub fn rows(&self) -> &[ManifestRow] {
        &self.rows
    }

    pub fn source(&self) -> &Path {
        &self.source
    }

    pub fn summary(&self) -> ManifestSummary {
        let mut summary = ManifestSummary::default();
        for row in &self.rows {
            let key = (
                row.partition.label().to_string(),
                row.medium,
                row.post,
                row.compressed,
            );
            let entry = summary.counts.entry(key).or_insert((0, 0));
            match row.label {
                Label::BonaFide => entry.0 += 1,
                Label::Morph => entry.1 += 1,
            }
        }
        summary
    }

    /// Rows of one partition matching a cell selector, in manifest order.
    pub fn select(&self, partition: Partition, cell: &CellSelector) -> Vec<&ManifestRow> {
        self.rows
            .iter()
            .filter(|r| r.partition == partition && cell.matches(r))
            .collect()
    }

    /// Dataset cells present in a partition.
    pub fn cells(&self, partition: Partition) -> Vec<CellSelector> {
        let mut set: Vec<CellSelector> = self
            .rows
            .iter()
            .filter(|r| r.partition == partition)
            .map(|r| CellSelector {
                medium: r.medium,
                post: r.post,
                compressed: r.compressed,
            })
            .collect();
        set.sort_unstable();
        set.dedup();
        set
    }

    /// Write rows out as a manifest CSV.
    pub fn write(rows: &[ManifestRow], path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&MANIFEST_HEADER.join(","));
        out.push('\n');
        for r in rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.rel_path,
                label_name(r.label),
                r.medium.label(),
                r.post.label(),
                r.compressed.label(),
                r.partition.label(),
                r.subject_id
            ));
        }
        crate::codec::atomic_write(path, out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// The three benchmark protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Train and test on the same (medium, post) cell.
    Intra,
    /// Train and test on different media, same post-processing state.
    InterMedium,
    /// Train and test across post-processing states.
    InterMediumVariedPost,
}

impl Protocol {
    pub fn label(&self) -> &'static str {
        match self {
            Protocol::Intra => "intra",
            Protocol::InterMedium => "inter-medium",
            Protocol::InterMediumVariedPost => "inter-medium-varied-post",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "intra" => Ok(Protocol::Intra),
            "inter-medium" => Ok(Protocol::InterMedium),
            "inter-medium-varied-post" => Ok(Protocol::InterMediumVariedPost),
            other => Err(Error::Protocol(format!("unknown protocol {other:?}"))),
        }
    }
}

/// A fully specified experiment cell.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub protocol: Protocol,
    pub train_select: CellSelector,
    pub test_select: CellSelector,
    pub seed: u64,
}

impl ExperimentSpec {
    /// Check the selector pair against the protocol's constraints.
    pub fn validate(&self) -> Result<()> {
        let t = &self.train_select;
        let e = &self.test_select;
        match self.protocol {
            Protocol::Intra => {
                if t.medium != e.medium || t.post != e.post {
                    return Err(Error::Protocol(format!(
                        "intra protocol requires the same (medium, post) for train and test; got train {t} vs test {e}"
                    )));
                }
            }
            Protocol::InterMedium => {
                if t.medium == e.medium {
                    return Err(Error::Protocol(format!(
                        "inter-medium protocol requires different media; both are {}",
                        t.medium.label()
                    )));
                }
                if t.post != e.post {
                    return Err(Error::Protocol(format!(
                        "inter-medium protocol requires the same post-processing state; got {} vs {}",
                        t.post.label(),
                        e.post.label()
                    )));
                }
            }
            Protocol::InterMediumVariedPost => {
                if t.post == e.post {
                    return Err(Error::Protocol(format!(
                        "varied-post protocol requires different post-processing states; both are {}",
                        t.post.label()
                    )));
                }
            }
        }
        Ok(())
    }
}
