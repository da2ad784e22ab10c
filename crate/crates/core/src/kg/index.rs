//! Compiled graph index.
//!
//! All integers are little-endian. Layout, in order:
//!
//! | field            | encoding                                              |
//! |------------------|-------------------------------------------------------|
//! | magic            | 4 bytes `CSKG`                                        |
//! | format version   | u32                                                   |
//! | source digest    | u16 length + UTF-8 (hex SHA-256 of the source dump)   |
//! | built_at         | u64 seconds since the Unix epoch                      |
//! | load stats       | 7 × u64: rows, accepted, non_english,                 |
//! |                  | non_positive_weight, relation_filtered, malformed,    |
//! |                  | duplicates_collapsed                                  |
//! | malformed lines  | u32 count + count × u64                               |
//! | relation table   | u32 count + count × (u16 length + UTF-8 name)         |
//! | node table       | u32 count + count × (u32 length + UTF-8 label)        |
//! | edge table       | u64 count + count × (u32 start, u32 end, u16 rel,     |
//! |                  | f64 weight bits)                                      |
//! | checksum         | 32 bytes SHA-256 of every preceding byte              |
//!
//! Relations and nodes are stored sorted; edges sorted by (start, end, rel).
//! Adjacency lists are rebuilt on load, so a save/load/save cycle is
//! byte-identical.

use std::fs::{self, File};
use std::io::{self, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::graph::{EdgeRecord, GraphMetadata, LoadStats};
use super::{normalize_label, ConceptId, KgError, KnowledgeGraph, Relation};

pub const MAGIC: [u8; 4] = *b"CSKG";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

pub fn save_index(g: &KnowledgeGraph, path: &Path) -> Result<(), KgError> {
    let bytes = encode(g);
    let tmp = path.with_extension("tmp-index");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<KnowledgeGraph, KgError> {
    let bytes = fs::read(path)?;
    decode(&bytes)
}

/// Loads an index and compares its recorded source digest with `dump`.
/// A mismatch is reported in [`GraphMetadata::digest_warning`].
pub fn load_index_with_source(path: &Path, dump: &Path) -> Result<KnowledgeGraph, KgError> {
    let mut g = load_index(path)?;
    let mut hasher = Sha256::new();
    let mut f = File::open(dump)?;
    io::copy(&mut f, &mut HashWriter(&mut hasher))?;
    let digest = hex::encode(hasher.finalize());
    if digest != g.metadata().source_digest {
        let recorded = g.metadata().source_digest.clone();
        g.metadata_mut().digest_warning = Some(format!(
            "index was built from source digest {recorded}, but {} has digest {digest}",
            dump.display()
        ));
    }
    Ok(g)
}

struct HashWriter<'a>(&'a mut Sha256);

impl Write for HashWriter<'_> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0.update(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

pub(crate) fn encode(g: &KnowledgeGraph) -> Vec<u8> {
    let meta = g.metadata();
    let mut out = Vec::with_capacity(64 + g.edge_count() * 18 + g.node_count() * 16);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_str16(&mut out, &meta.source_digest);
    out.extend_from_slice(&meta.built_at.to_le_bytes());
    let s = &meta.stats;
    for v in [
        s.rows,
        s.accepted,
        s.non_english,
        s.non_positive_weight,
        s.relation_filtered,
        s.malformed,
        s.duplicates_collapsed,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(meta.malformed_lines.len() as u32).to_le_bytes());
    for l in &meta.malformed_lines {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out.extend_from_slice(&(g.relations.len() as u32).to_le_bytes());
    for r in &g.relations {
        put_str16(&mut out, r.name());
    }
    out.extend_from_slice(&(g.nodes.len() as u32).to_le_bytes());
    for c in &g.nodes {
        let b = c.as_str().as_bytes();
        out.extend_from_slice(&(b.len() as u32).to_le_bytes());
        out.extend_from_slice(b);
    }
    out.extend_from_slice(&(g.edges.len() as u64).to_le_bytes());
    for e in &g.edges {
        out.extend_from_slice(&e.start.to_le_bytes());
        out.extend_from_slice(&e.end.to_le_bytes());
        out.extend_from_slice(&e.rel.to_le_bytes());
        out.extend_from_slice(&e.weight.to_bits().to_le_bytes());
    }
    let sum = Sha256::digest(&out);
    out.extend_from_slice(&sum);
    out
}

fn put_str16(out: &mut Vec<u8>, s: &str) {
    let b = s.as_bytes();
    let len = u16::try_from(b.len()).expect("string longer than 65535 bytes");
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(b);
}

pub(crate) fn decode(bytes: &[u8]) -> Result<KnowledgeGraph, KgError> {
    if bytes.len() < 8 {
        let n = bytes.len().min(4);
        return Err(if bytes[..n] == MAGIC[..n] {
            KgError::ChecksumMismatch
        } else {
            KgError::BadMagic
        });
    }
    if bytes[..4] != MAGIC {
        return Err(KgError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(KgError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    if bytes.len() < 8 + CHECKSUM_LEN {
        return Err(KgError::ChecksumMismatch);
    }
    let (body, sum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != sum {
        return Err(KgError::ChecksumMismatch);
    }

    let mut r = Cursor { buf: &body[8..] };
    let source_digest = r.str16()?;
    let built_at = r.u64()?;
    let stats = LoadStats {
        rows: r.u64()?,
        accepted: r.u64()?,
        non_english: r.u64()?,
        non_positive_weight: r.u64()?,
        relation_filtered: r.u64()?,
        malformed: r.u64()?,
        duplicates_collapsed: r.u64()?,
    };
    let n_malformed = r.u32()? as usize;
    let malformed_lines = (0..n_malformed).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;

    let n_rel = r.u32()? as usize;
    let mut relations = Vec::with_capacity(n_rel.min(1 << 16));
    for _ in 0..n_rel {
        let name = r.str16()?;
        let rel = Relation::from_name(&name);
        if rel.name() != name {
            return Err(invalid("relation name does not round-trip"));
        }
        relations.push(rel);
    }
    if !relations.windows(2).all(|w| w[0].name() < w[1].name()) {
        return Err(invalid("relation table not strictly sorted"));
    }

    let n_nodes = r.u32()? as usize;
    let mut nodes = Vec::with_capacity(n_nodes.min(body.len() / 5));
    for _ in 0..n_nodes {
        let len = r.u32()? as usize;
        let raw = std::str::from_utf8(r.take(len)?)
            .map_err(|_| invalid("node label is not UTF-8"))?;
        match normalize_label(raw) {
            Ok(c) if c.as_str() == raw => nodes.push(ConceptId::from_normalized(raw.to_string())),
            _ => return Err(invalid("node label is not normalized")),
        }
    }
    if !nodes.windows(2).all(|w| w[0] < w[1]) {
        return Err(invalid("node table not strictly sorted"));
    }

    let n_edges = r.u64()? as usize;
    let mut edges = Vec::with_capacity(n_edges.min(body.len() / 18));
    for _ in 0..n_edges {
        let e = EdgeRecord {
            start: r.u32()?,
            end: r.u32()?,
            rel: r.u16()?,
            weight: f64::from_bits(r.u64()?),
        };
        if e.start as usize >= nodes.len()
            || e.end as usize >= nodes.len()
            || e.rel as usize >= relations.len()
        {
            return Err(invalid("edge references an unknown node or relation"));
        }
        if !(e.weight.is_finite() && e.weight > 0.0) {
            return Err(invalid("edge weight must be positive"));
        }
        edges.push(e);
    }
    if !edges
        .windows(2)
        .all(|w| (w[0].start, w[0].end, w[0].rel) < (w[1].start, w[1].end, w[1].rel))
    {
        return Err(invalid("edge table not strictly sorted"));
    }
    if !r.buf.is_empty() {
        return Err(invalid("trailing bytes after edge table"));
    }

    let meta = GraphMetadata {
        source_digest,
        built_at,
        stats,
        malformed_lines,
        ..GraphMetadata::default()
    };
    Ok(KnowledgeGraph::from_parts(nodes, relations, edges, meta))
}

fn invalid(msg: &str) -> KgError {
    KgError::InvalidIndex(msg.to_string())
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], KgError> {
        if self.buf.len() < n {
            return Err(invalid("unexpected end of data"));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u16(&mut self) -> Result<u16, KgError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, KgError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, KgError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str16(&mut self) -> Result<String, KgError> {
        let len = self.u16()? as usize;
        let mut s = String::new();
        self.take(len)?
            .read_to_string(&mut s)
            .map_err(|_| invalid("string is not UTF-8"))?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Edge;

    fn hundred_edges() -> KnowledgeGraph {
        let rels = [
            Relation::AtLocation,
            Relation::RelatedTo,
            Relation::UsedFor,
            Relation::Other("Synonym".into()),
        ];
        let edges = (0..100).map(|i| {
            Edge::new(
                &format!("n{}", i % 13),
                rels[i % 4].clone(),
                &format!("m{}", (i * 7) % 17),
                0.25 + (i % 9) as f64,
            )
            .unwrap()
        });
        KnowledgeGraph::from_edges(edges)
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let g = hundred_edges();
        let bytes = encode(&g);
        let back = decode(&bytes).unwrap();
        assert_eq!(back, g);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn truncated_index_fails_checksum() {
        let bytes = encode(&hundred_edges());
        for cut in [bytes.len() - 1, bytes.len() / 2, 40, 9, 6] {
            assert!(
                matches!(decode(&bytes[..cut]), Err(KgError::ChecksumMismatch)),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn flipped_byte_fails_checksum() {
        let mut bytes = encode(&hundred_edges());
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        assert!(matches!(decode(&bytes), Err(KgError::ChecksumMismatch)));
    }

    #[test]
    fn wrong_version_rejected() {
        let mut bytes = encode(&hundred_edges());
        bytes[4..8].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(
            decode(&bytes),
            Err(KgError::VersionMismatch { found: 7, expected: 1 })
        ));
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = encode(&hundred_edges());
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(KgError::BadMagic)));
    }
}
