//! Product embedding tables: the FEMB binary file format, validation, and
//! per-mode representation assembly.
//!
//! Embeddings are stored on disk as f32 (matching upstream encoders) and
//! widened to f64 at load time; every downstream computation is f64.
//!
//! FEMB layout, all integers little-endian:
//!
//! ```text
//! bytes 0..4    magic "FEMB"
//! bytes 4..6    u16 format version (currently 1)
//! byte  6       u8 modality code (0 = image, 1 = text)
//! byte  7       u8 reserved (0)
//! bytes 8..12   u32 embedding dimension
//! bytes 12..20  u64 record count
//! then per record: u16 id byte length, UTF-8 id, dimension * f32
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::bytes::Reader;

pub const FEMB_MAGIC: [u8; 4] = *b"FEMB";
pub const FEMB_VERSION: u16 = 1;
/// Fixed portion of the file before the first record.
pub const FEMB_HEADER_LEN: usize = 20;

/// One input channel of product data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Image,
    Text,
}

impl Modality {
    pub fn code(self) -> u8 {
        match self {
            Modality::Image => 0,
            Modality::Text => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Modality::Image),
            1 => Some(Modality::Text),
            _ => None,
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Image => "image",
            Modality::Text => "text",
        })
    }
}

/// Which product representation feeds the head.
///
/// `TextAndImage` concatenates the image vector first, then the text vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RepresentationMode {
    #[serde(rename = "text")]
    TextOnly,
    #[serde(rename = "image")]
    ImageOnly,
    #[serde(rename = "both")]
    TextAndImage,
}

impl RepresentationMode {
    pub fn code(self) -> u8 {
        match self {
            RepresentationMode::ImageOnly => 0,
            RepresentationMode::TextOnly => 1,
            RepresentationMode::TextAndImage => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(RepresentationMode::ImageOnly),
            1 => Some(RepresentationMode::TextOnly),
            2 => Some(RepresentationMode::TextAndImage),
            _ => None,
        }
    }

    pub fn uses_image(self) -> bool {
        matches!(self, RepresentationMode::ImageOnly | RepresentationMode::TextAndImage)
    }

    pub fn uses_text(self) -> bool {
        matches!(self, RepresentationMode::TextOnly | RepresentationMode::TextAndImage)
    }
}

impl fmt::Display for RepresentationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepresentationMode::TextOnly => "text",
            RepresentationMode::ImageOnly => "image",
            RepresentationMode::TextAndImage => "both",
        })
    }
}

impl std::str::FromStr for RepresentationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(RepresentationMode::TextOnly),
            "image" => Ok(RepresentationMode::ImageOnly),
            "both" => Ok(RepresentationMode::TextAndImage),
            other => Err(format!("unknown mode `{other}` (expected text, image or both)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("bad magic at byte 0: not a FEMB file")]
    BadMagic,
    #[error("unsupported FEMB version {found} (expected {expected})")]
    BadVersion { expected: u16, found: u16 },
    #[error("unknown modality code {code} at byte 6")]
    UnknownModality { code: u8 },
    #[error("modality mismatch: file holds {found} embeddings, expected {expected}")]
    ModalityMismatch { expected: Modality, found: Modality },
    #[error("truncated file: ran out of bytes at offset {offset}")]
    Truncated { offset: usize },
    #[error("{extra} trailing bytes after the last record (offset {offset})")]
    TrailingBytes { offset: usize, extra: usize },
    #[error("invalid product id: {detail}")]
    InvalidProductId { detail: String },
    #[error("duplicate product id `{id}`")]
    DuplicateId { id: String },
    #[error("non-finite component in the vector for `{id}`")]
    NonFinite { id: String },
    #[error("invalid embedding dimension {dim}")]
    InvalidDimension { dim: usize },
    #[error("vector for `{id}` has {found} components, expected {expected}")]
    DimensionMismatch { id: String, expected: usize, found: usize },
    #[error("product `{id}` has no {modality} embedding")]
    MissingProduct { id: String, modality: Modality },
    #[error("no {modality} embeddings are loaded")]
    MissingModality { modality: Modality },
    #[error("malformed manifest line {line}: expected `product_id<TAB>metadata`")]
    MalformedManifest { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A single product's vector for one modality, exactly as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityEmbedding {
    pub product_id: String,
    pub vector: Vec<f32>,
}

/// An ordered set of validated, same-dimension records for one modality.
///
/// Construction enforces every invariant the file format requires, so a table
/// can always be written out and read back unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    records: Vec<ModalityEmbedding>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, records: Vec<ModalityEmbedding>) -> Result<Self, StoreError> {
        if dim == 0 {
            return Err(StoreError::InvalidDimension { dim });
        }
        let mut seen = BTreeSet::new();
        for record in &records {
            if record.product_id.is_empty() {
                return Err(StoreError::InvalidProductId { detail: "empty id".to_string() });
            }
            if record.product_id.len() > usize::from(u16::MAX) {
                return Err(StoreError::InvalidProductId {
                    detail: format!("id of {} bytes exceeds the u16 length field", record.product_id.len()),
                });
            }
            if record.vector.len() != dim {
                return Err(StoreError::DimensionMismatch {
                    id: record.product_id.clone(),
                    expected: dim,
                    found: record.vector.len(),
                });
            }
            if record.vector.iter().any(|v| !v.is_finite()) {
                return Err(StoreError::NonFinite { id: record.product_id.clone() });
            }
            if !seen.insert(record.product_id.as_str()) {
                return Err(StoreError::DuplicateId { id: record.product_id.clone() });
            }
        }
        Ok(Self { dim, records })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn records(&self) -> &[ModalityEmbedding] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Decodes a FEMB byte stream, rejecting anything malformed.
pub fn parse_femb(bytes: &[u8], expected: Modality) -> Result<EmbeddingTable, StoreError> {
    let mut r = Reader::new(bytes);
    let short = |r: &Reader| StoreError::Truncated { offset: r.pos() };
    let magic = r.take(4).ok_or_else(|| short(&r))?;
    if magic != FEMB_MAGIC {
        return Err(StoreError::BadMagic);
    }
    let version = r.u16().ok_or_else(|| short(&r))?;
    if version != FEMB_VERSION {
        return Err(StoreError::BadVersion { expected: FEMB_VERSION, found: version });
    }
    let code = r.u8().ok_or_else(|| short(&r))?;
    let found = Modality::from_code(code).ok_or(StoreError::UnknownModality { code })?;
    if found != expected {
        return Err(StoreError::ModalityMismatch { expected, found });
    }
    let _reserved = r.u8().ok_or_else(|| short(&r))?;
    let dim = r.u32().ok_or_else(|| short(&r))? as usize;
    if dim == 0 {
        return Err(StoreError::InvalidDimension { dim });
    }
    let count = r.u64().ok_or_else(|| short(&r))? as usize;

    let mut seen = BTreeSet::new();
    let mut records = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let id_offset = r.pos();
        let id_len = r.u16().ok_or_else(|| short(&r))? as usize;
        if id_len == 0 {
            return Err(StoreError::InvalidProductId {
                detail: format!("empty id in record at byte {id_offset}"),
            });
        }
        let id_bytes = r.take(id_len).ok_or_else(|| short(&r))?;
        let product_id = std::str::from_utf8(id_bytes)
            .map_err(|_| StoreError::InvalidProductId {
                detail: format!("id at byte {id_offset} is not valid UTF-8"),
            })?
            .to_string();
        if !seen.insert(product_id.clone()) {
            return Err(StoreError::DuplicateId { id: product_id });
        }
        let mut vector = Vec::with_capacity(dim);
        for _ in 0..dim {
            vector.push(r.f32().ok_or_else(|| short(&r))?);
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(StoreError::NonFinite { id: product_id });
        }
        records.push(ModalityEmbedding { product_id, vector });
    }
    if r.remaining() != 0 {
        return Err(StoreError::TrailingBytes { offset: r.pos(), extra: r.remaining() });
    }
    Ok(EmbeddingTable { dim, records })
}

/// Encodes a validated table; `parse_femb` on the result is the identity.
pub fn encode_femb(table: &EmbeddingTable, modality: Modality) -> Vec<u8> {
    let mut out = Vec::with_capacity(FEMB_HEADER_LEN + table.records.len() * (2 + table.dim * 4));
    out.extend_from_slice(&FEMB_MAGIC);
    out.extend_from_slice(&FEMB_VERSION.to_le_bytes());
    out.push(modality.code());
    out.push(0);
    out.extend_from_slice(&(table.dim as u32).to_le_bytes());
    out.extend_from_slice(&(table.records.len() as u64).to_le_bytes());
    for record in &table.records {
        out.extend_from_slice(&(record.product_id.len() as u16).to_le_bytes());
        out.extend_from_slice(record.product_id.as_bytes());
        for v in &record.vector {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn load_embeddings(path: &Path, expected: Modality) -> Result<EmbeddingTable, StoreError> {
    let bytes = fs::read(path)?;
    parse_femb(&bytes, expected)
}

pub fn write_embeddings(table: &EmbeddingTable, modality: Modality, path: &Path) -> Result<(), StoreError> {
    fs::write(path, encode_femb(table, modality))?;
    Ok(())
}

/// Parses a `product_id<TAB>metadata` manifest. Metadata is opaque; blank
/// lines are skipped and later entries for the same id win.
pub fn parse_manifest(path: &Path) -> Result<Vec<(String, String)>, StoreError> {
    let text = fs::read_to_string(path)?;
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (id, meta) = line
            .split_once('\t')
            .ok_or(StoreError::MalformedManifest { line: idx + 1 })?;
        if id.is_empty() {
            return Err(StoreError::MalformedManifest { line: idx + 1 });
        }
        entries.push((id.to_string(), meta.to_string()));
    }
    Ok(entries)
}

#[derive(Debug, Clone)]
struct ModalityTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl From<EmbeddingTable> for ModalityTable {
    fn from(table: EmbeddingTable) -> Self {
        let dim = table.dim;
        let vectors = table
            .records
            .into_iter()
            .map(|r| (r.product_id, r.vector.iter().map(|&v| f64::from(v)).collect()))
            .collect();
        Self { dim, vectors }
    }
}

/// In-memory lookup over one or both modalities, widened to f64.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingStore {
    image: Option<ModalityTable>,
    text: Option<ModalityTable>,
    metadata: BTreeMap<String, String>,
}

impl EmbeddingStore {
    pub fn from_tables(image: Option<EmbeddingTable>, text: Option<EmbeddingTable>) -> Self {
        Self {
            image: image.map(ModalityTable::from),
            text: text.map(ModalityTable::from),
            metadata: BTreeMap::new(),
        }
    }

    pub fn load(image_path: Option<&Path>, text_path: Option<&Path>) -> Result<Self, StoreError> {
        let image = image_path.map(|p| load_embeddings(p, Modality::Image)).transpose()?;
        let text = text_path.map(|p| load_embeddings(p, Modality::Text)).transpose()?;
        Ok(Self::from_tables(image, text))
    }

    pub fn attach_manifest(&mut self, entries: impl IntoIterator<Item = (String, String)>) {
        self.metadata.extend(entries);
    }

    pub fn metadata(&self, product_id: &str) -> Option<&str> {
        self.metadata.get(product_id).map(String::as_str)
    }

    pub fn metadata_len(&self) -> usize {
        self.metadata.len()
    }

    fn table(&self, modality: Modality) -> Option<&ModalityTable> {
        match modality {
            Modality::Image => self.image.as_ref(),
            Modality::Text => self.text.as_ref(),
        }
    }

    fn required_table(&self, modality: Modality) -> Result<&ModalityTable, StoreError> {
        self.table(modality).ok_or(StoreError::MissingModality { modality })
    }

    pub fn dim(&self, modality: Modality) -> Option<usize> {
        self.table(modality).map(|t| t.dim)
    }

    pub fn count(&self, modality: Modality) -> usize {
        self.table(modality).map_or(0, |t| t.vectors.len())
    }

    pub fn ids(&self, modality: Modality) -> impl Iterator<Item = &str> {
        self.table(modality)
            .into_iter()
            .flat_map(|t| t.vectors.keys().map(String::as_str))
    }

    pub fn has_product(&self, product_id: &str, modality: Modality) -> bool {
        self.table(modality).is_some_and(|t| t.vectors.contains_key(product_id))
    }

    pub fn modality_vector(&self, product_id: &str, modality: Modality) -> Result<&[f64], StoreError> {
        self.required_table(modality)?
            .vectors
            .get(product_id)
            .map(Vec::as_slice)
            .ok_or_else(|| StoreError::MissingProduct { id: product_id.to_string(), modality })
    }

    /// Representation width for `mode`; errors if a required modality is absent.
    pub fn input_dim(&self, mode: RepresentationMode) -> Result<usize, StoreError> {
        let mut dim = 0;
        if mode.uses_image() {
            dim += self.required_table(Modality::Image)?.dim;
        }
        if mode.uses_text() {
            dim += self.required_table(Modality::Text)?.dim;
        }
        Ok(dim)
    }

    /// Builds the head input for one product. `TextAndImage` is the image
    /// vector followed by the text vector.
    pub fn assemble_representation(
        &self,
        product_id: &str,
        mode: RepresentationMode,
    ) -> Result<Vec<f64>, StoreError> {
        let mut out = Vec::with_capacity(self.input_dim(mode)?);
        if mode.uses_image() {
            out.extend_from_slice(self.modality_vector(product_id, Modality::Image)?);
        }
        if mode.uses_text() {
            out.extend_from_slice(self.modality_vector(product_id, Modality::Text)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(id: &str, vector: Vec<f32>) -> ModalityEmbedding {
        ModalityEmbedding { product_id: id.to_string(), vector }
    }

    fn sample_table() -> EmbeddingTable {
        EmbeddingTable::new(
            2,
            vec![record("p1", vec![1.0, 2.0]), record("p2", vec![-0.5, 3.25])],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_preserves_records() {
        let table = sample_table();
        let bytes = encode_femb(&table, Modality::Image);
        let back = parse_femb(&bytes, Modality::Image).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn empty_table_round_trips() {
        let table = EmbeddingTable::new(4, vec![]).unwrap();
        let bytes = encode_femb(&table, Modality::Text);
        assert_eq!(bytes.len(), FEMB_HEADER_LEN);
        let back = parse_femb(&bytes, Modality::Text).unwrap();
        assert_eq!(back.dim(), 4);
        assert!(back.is_empty());
    }

    #[test]
    fn encoded_size_matches_layout() {
        let table = EmbeddingTable::new(
            4,
            vec![
                record("ab", vec![0.0; 4]),
                record("cd", vec![1.0; 4]),
                record("ef", vec![2.0; 4]),
            ],
        )
        .unwrap();
        let bytes = encode_femb(&table, Modality::Image);
        assert_eq!(bytes.len(), FEMB_HEADER_LEN + 3 * (2 + 2 + 4 * 4));
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = encode_femb(&sample_table(), Modality::Image);
        bytes[0] = b'X';
        assert!(matches!(parse_femb(&bytes, Modality::Image), Err(StoreError::BadMagic)));
    }

    #[test]
    fn bad_version_is_rejected() {
        let mut bytes = encode_femb(&sample_table(), Modality::Image);
        bytes[4] = 9;
        assert!(matches!(
            parse_femb(&bytes, Modality::Image),
            Err(StoreError::BadVersion { found: 9, .. })
        ));
    }

    #[test]
    fn modality_mismatch_is_rejected() {
        let bytes = encode_femb(&sample_table(), Modality::Text);
        assert!(matches!(
            parse_femb(&bytes, Modality::Image),
            Err(StoreError::ModalityMismatch { expected: Modality::Image, found: Modality::Text })
        ));
    }

    #[test]
    fn unknown_modality_code_is_rejected() {
        let mut bytes = encode_femb(&sample_table(), Modality::Image);
        bytes[6] = 7;
        assert!(matches!(
            parse_femb(&bytes, Modality::Image),
            Err(StoreError::UnknownModality { code: 7 })
        ));
    }

    #[test]
    fn truncated_record_is_rejected_with_offset() {
        let bytes = encode_femb(&sample_table(), Modality::Image);
        let cut = &bytes[..bytes.len() - 3];
        match parse_femb(cut, Modality::Image) {
            Err(StoreError::Truncated { offset }) => assert!(offset <= cut.len()),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn count_beyond_payload_is_truncation() {
        let mut bytes = encode_femb(&sample_table(), Modality::Image);
        bytes[12..20].copy_from_slice(&5u64.to_le_bytes());
        assert!(matches!(parse_femb(&bytes, Modality::Image), Err(StoreError::Truncated { .. })));
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut bytes = encode_femb(&sample_table(), Modality::Image);
        bytes.push(0);
        assert!(matches!(
            parse_femb(&bytes, Modality::Image),
            Err(StoreError::TrailingBytes { extra: 1, .. })
        ));
    }

    #[test]
    fn duplicate_id_in_file_is_rejected() {
        let table = EmbeddingTable::new(1, vec![record("p1", vec![1.0])]).unwrap();
        let mut bytes = encode_femb(&table, Modality::Image);
        let rec = bytes[FEMB_HEADER_LEN..].to_vec();
        bytes.extend_from_slice(&rec);
        bytes[12..20].copy_from_slice(&2u64.to_le_bytes());
        assert!(matches!(parse_femb(&bytes, Modality::Image), Err(StoreError::DuplicateId { .. })));
    }

    #[test]
    fn non_finite_component_is_rejected() {
        let table = EmbeddingTable::new(1, vec![record("p1", vec![1.0])]).unwrap();
        let mut bytes = encode_femb(&table, Modality::Image);
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            parse_femb(&bytes, Modality::Image),
            Err(StoreError::NonFinite { .. })
        ));
    }

    #[test]
    fn zero_dimension_is_rejected() {
        let mut bytes = encode_femb(&EmbeddingTable::new(1, vec![]).unwrap(), Modality::Image);
        bytes[8..12].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(
            parse_femb(&bytes, Modality::Image),
            Err(StoreError::InvalidDimension { dim: 0 })
        ));
        assert!(matches!(EmbeddingTable::new(0, vec![]), Err(StoreError::InvalidDimension { dim: 0 })));
    }

    #[test]
    fn table_construction_validates_records() {
        assert!(matches!(
            EmbeddingTable::new(2, vec![record("p1", vec![1.0])]),
            Err(StoreError::DimensionMismatch { expected: 2, found: 1, .. })
        ));
        assert!(matches!(
            EmbeddingTable::new(1, vec![record("p1", vec![1.0]), record("p1", vec![2.0])]),
            Err(StoreError::DuplicateId { .. })
        ));
        assert!(matches!(
            EmbeddingTable::new(1, vec![record("p1", vec![f32::INFINITY])]),
            Err(StoreError::NonFinite { .. })
        ));
        assert!(matches!(
            EmbeddingTable::new(1, vec![record("", vec![1.0])]),
            Err(StoreError::InvalidProductId { .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.femb");
        let table = sample_table();
        write_embeddings(&table, Modality::Image, &path).unwrap();
        let back = load_embeddings(&path, Modality::Image).unwrap();
        assert_eq!(back, table);
    }

    fn two_modality_store() -> EmbeddingStore {
        let image = EmbeddingTable::new(2, vec![record("p1", vec![1.0, 2.0])]).unwrap();
        let text = EmbeddingTable::new(3, vec![record("p1", vec![3.0, 4.0, 5.0])]).unwrap();
        EmbeddingStore::from_tables(Some(image), Some(text))
    }

    #[test]
    fn assembly_per_mode() {
        let store = two_modality_store();
        assert_eq!(
            store.assemble_representation("p1", RepresentationMode::TextAndImage).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0, 5.0]
        );
        assert_eq!(
            store.assemble_representation("p1", RepresentationMode::TextOnly).unwrap(),
            vec![3.0, 4.0, 5.0]
        );
        assert_eq!(
            store.assemble_representation("p1", RepresentationMode::ImageOnly).unwrap(),
            vec![1.0, 2.0]
        );
        assert_eq!(store.input_dim(RepresentationMode::TextAndImage).unwrap(), 5);
    }

    #[test]
    fn assembly_is_pure() {
        let store = two_modality_store();
        let a = store.assemble_representation("p1", RepresentationMode::TextAndImage).unwrap();
        let b = store.assemble_representation("p1", RepresentationMode::TextAndImage).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_product_names_id_and_modality() {
        let store = two_modality_store();
        match store.assemble_representation("nope", RepresentationMode::ImageOnly) {
            Err(StoreError::MissingProduct { id, modality: Modality::Image }) => assert_eq!(id, "nope"),
            other => panic!("expected missing product, got {other:?}"),
        }
    }

    #[test]
    fn missing_modality_is_reported() {
        let image = EmbeddingTable::new(2, vec![record("p1", vec![1.0, 2.0])]).unwrap();
        let store = EmbeddingStore::from_tables(Some(image), None);
        assert!(matches!(
            store.input_dim(RepresentationMode::TextAndImage),
            Err(StoreError::MissingModality { modality: Modality::Text })
        ));
        assert!(store.input_dim(RepresentationMode::ImageOnly).is_ok());
    }

    #[test]
    fn manifest_parses_and_attaches() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.tsv");
        std::fs::write(&path, "p1\tcluster=0\np2\tcluster=1\n\n").unwrap();
        let entries = parse_manifest(&path).unwrap();
        assert_eq!(entries.len(), 2);
        let mut store = two_modality_store();
        store.attach_manifest(entries);
        assert_eq!(store.metadata("p2"), Some("cluster=1"));
        assert_eq!(store.metadata_len(), 2);
    }

    #[test]
    fn manifest_rejects_missing_tab() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.tsv");
        std::fs::write(&path, "p1 cluster=0\n").unwrap();
        assert!(matches!(
            parse_manifest(&path),
            Err(StoreError::MalformedManifest { line: 1 })
        ));
    }

    #[test]
    fn mode_string_round_trip() {
        for mode in [
            RepresentationMode::TextOnly,
            RepresentationMode::ImageOnly,
            RepresentationMode::TextAndImage,
        ] {
            let s = mode.to_string();
            assert_eq!(s.parse::<RepresentationMode>().unwrap(), mode);
            assert_eq!(RepresentationMode::from_code(mode.code()), Some(mode));
        }
        assert!("video".parse::<RepresentationMode>().is_err());
    }

    proptest! {
        #[test]
        fn arbitrary_tables_round_trip(
            dim in 1usize..8,
            ids in proptest::collection::btree_set("[a-z]{1,12}", 0..12),
            seed_values in proptest::collection::vec(-1.0e3f32..1.0e3f32, 0..96),
        ) {
            let records: Vec<ModalityEmbedding> = ids
                .iter()
                .enumerate()
                .map(|(i, id)| ModalityEmbedding {
                    product_id: id.clone(),
                    vector: (0..dim)
                        .map(|j| {
                            let k = (i * dim + j) % seed_values.len().max(1);
                            seed_values.get(k).copied().unwrap_or(0.5)
                        })
                        .collect(),
                })
                .collect();
            let table = EmbeddingTable::new(dim, records).unwrap();
            let bytes = encode_femb(&table, Modality::Text);
            prop_assert_eq!(bytes.len(), FEMB_HEADER_LEN + table.records().iter().map(|r| 2 + r.product_id.len() + dim * 4).sum::<usize>());
            let back = parse_femb(&bytes, Modality::Text).unwrap();
            prop_assert_eq!(back, table);
        }
    }
}
