use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use flate2::read::MultiGzDecoder;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::graph::{GraphBuilder, LoadStats, RelationFilter};
use super::{normalize_label, Edge, KgError, KnowledgeGraph, Relation};

const MALFORMED_LINES_KEPT: usize = 100;

/// Classification of one assertion row.
#[derive(Debug, Clone, PartialEq)]
pub enum RowOutcome {
    Accepted(Edge),
    NonEnglish,
    NonPositiveWeight,
    RelationFiltered,
    Malformed(String),
}

#[derive(Deserialize)]
struct AssertionMeta {
    weight: f64,
}

/// Classifies a single tab-separated assertion row (without line terminator).
pub fn parse_assertion(line: &str, filter: &RelationFilter) -> RowOutcome {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return RowOutcome::Malformed(format!("expected 5 fields, found {}", fields.len()));
    }
    classify_assertion(fields[1], fields[2], fields[3], filter, || {
        serde_json::from_str::<AssertionMeta>(fields[4])
            .map(|m| m.weight)
            .map_err(|e| format!("metadata: {e}"))
    })
}

/// Applies the acceptance rules to an assertion's parts. `weight` is only
/// evaluated for rows that survive the language and relation checks.
pub fn classify_assertion(
    relation_uri: &str,
    start_uri: &str,
    end_uri: &str,
    filter: &RelationFilter,
    weight: impl FnOnce() -> Result<f64, String>,
) -> RowOutcome {
    let Some(relation) = Relation::from_uri(relation_uri) else {
        return RowOutcome::Malformed(format!("bad relation URI `{relation_uri}`"));
    };
    let start = match normalize_label(start_uri) {
        Ok(c) => c,
        Err(KgError::NonEnglishConcept(_)) => return RowOutcome::NonEnglish,
        Err(e) => return RowOutcome::Malformed(format!("start: {e}")),
    };
    let end = match normalize_label(end_uri) {
        Ok(c) => c,
        Err(KgError::NonEnglishConcept(_)) => return RowOutcome::NonEnglish,
        Err(e) => return RowOutcome::Malformed(format!("end: {e}")),
    };
    if !filter.allows(&relation) {
        return RowOutcome::RelationFiltered;
    }
    let weight = match weight() {
        Ok(w) => w,
        Err(e) => return RowOutcome::Malformed(e),
    };
    if !weight.is_finite() {
        return RowOutcome::Malformed(format!("weight {weight} is not finite"));
    }
    if weight <= 0.0 {
        return RowOutcome::NonPositiveWeight;
    }
    RowOutcome::Accepted(Edge {
        start,
        end,
        relation,
        weight,
    })
}

/// Cheap pre-check that skips JSON parsing for rows that will be dropped
/// anyway. Returns true when either endpoint is clearly not English.
fn obviously_foreign(line: &str) -> bool {
    let mut it = line.split('\t').skip(1);
    let (Some(rel), Some(s), Some(t)) = (it.next(), it.next(), it.next()) else {
        return false;
    };
    if Relation::from_uri(rel).is_none() {
        return false;
    }
    let foreign = |uri: &str| {
        uri.trim()
            .strip_prefix("/c/")
            .and_then(|rest| rest.split('/').next())
            .is_some_and(|lang| !lang.eq_ignore_ascii_case("en"))
    };
    foreign(s) || foreign(t)
}

struct HashingReader<R> {
    inner: R,
    hasher: Sha256,
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

/// Loads a ConceptNet assertions TSV (plain or gzip) into a graph.
///
/// Keeps English, positive-weight assertions that pass `filter`. Malformed
/// rows are skipped and counted; the load fails if they exceed 1% of rows.
pub fn load_dump(path: &Path, filter: &RelationFilter) -> Result<KnowledgeGraph, KgError> {
    let file = File::open(path)?;
    let mut raw = BufReader::with_capacity(1 << 20, file);
    let gzipped = raw.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    let hashing = HashingReader {
        inner: raw,
        hasher: Sha256::new(),
    };

    let (builder, stats, malformed_lines, mut hashing) = if gzipped {
        let mut dec = BufReader::with_capacity(1 << 20, MultiGzDecoder::new(hashing));
        let (b, s, m) = read_rows(&mut dec, filter)?;
        (b, s, m, dec.into_inner().into_inner())
    } else {
        let mut plain = BufReader::new(hashing);
        let (b, s, m) = read_rows(&mut plain, filter)?;
        (b, s, m, plain.into_inner())
    };
    // Digest covers the whole file even if the decoder stopped early.
    io::copy(&mut hashing, &mut io::sink())?;
    let digest = hex::encode(hashing.hasher.finalize());

    if stats.malformed * 100 > stats.rows {
        return Err(KgError::TooManyMalformedRows {
            malformed: stats.malformed,
            rows: stats.rows,
            first_line: malformed_lines.first().copied().unwrap_or(0),
        });
    }

    let built_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(builder.build(digest, built_at, stats, malformed_lines))
}

fn read_rows<R: BufRead>(
    reader: &mut R,
    filter: &RelationFilter,
) -> Result<(GraphBuilder, LoadStats, Vec<u64>), KgError> {
    let mut builder = GraphBuilder::new();
    let mut stats = LoadStats::default();
    let mut malformed_lines = Vec::new();
    let mut buf = Vec::with_capacity(1024);
    let mut line_no = 0u64;

    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        if buf.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        stats.rows += 1;

        let outcome = match std::str::from_utf8(&buf) {
            Err(_) => RowOutcome::Malformed("invalid UTF-8".into()),
            Ok(line) if obviously_foreign(line) && line.split('\t').count() == 5 => {
                RowOutcome::NonEnglish
            }
            Ok(line) => parse_assertion(line, filter),
        };
        match outcome {
            RowOutcome::Accepted(edge) => {
                stats.accepted += 1;
                builder.add_edge(edge);
            }
            RowOutcome::NonEnglish => stats.non_english += 1,
            RowOutcome::NonPositiveWeight => stats.non_positive_weight += 1,
            RowOutcome::RelationFiltered => stats.relation_filtered += 1,
            RowOutcome::Malformed(_) => {
                stats.malformed += 1;
                if malformed_lines.len() < MALFORMED_LINES_KEPT {
                    malformed_lines.push(line_no);
                }
            }
        }
    }
    Ok((builder, stats, malformed_lines))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn row(rel: &str, s: &str, t: &str, weight: &str) -> String {
        format!("/a/[{rel},{s},{t}]\t{rel}\t{s}\t{t}\t{{\"dataset\": \"/d/test\", \"weight\": {weight}}}\n")
    }

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_row_fixture() {
        // Hand count: row 1 kept, row 2 French (filtered), row 3 weight 0 (filtered).
        let text = [
            row("/r/AtLocation", "/c/en/food", "/c/en/kitchen", "7.21"),
            row("/r/AtLocation", "/c/fr/nourriture", "/c/fr/cuisine", "2.0"),
            row("/r/RelatedTo", "/c/en/apple", "/c/en/pear", "0.0"),
        ]
        .concat();
        let f = write(&text);
        let g = load_dump(f.path(), &RelationFilter::All).unwrap();
        assert_eq!(g.edge_count(), 1);
        let stats = &g.metadata().stats;
        assert_eq!(stats.filtered(), 2);
        assert_eq!(stats.non_english, 1);
        assert_eq!(stats.non_positive_weight, 1);
        assert_eq!(stats.rows, 3);
    }

    #[test]
    fn weight_row_maps_to_edge() {
        let line = row("/r/AtLocation", "/c/en/food", "/c/en/kitchen", "7.21");
        let out = parse_assertion(line.trim_end(), &RelationFilter::All);
        assert_eq!(
            out,
            RowOutcome::Accepted(Edge::new("food", Relation::AtLocation, "kitchen", 7.21).unwrap())
        );
    }

    #[test]
    fn empty_file() {
        let f = write("");
        let g = load_dump(f.path(), &RelationFilter::All).unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn relation_filter_applies() {
        let text = [
            row("/r/AtLocation", "/c/en/food", "/c/en/kitchen", "7.21"),
            row("/r/RelatedTo", "/c/en/apple", "/c/en/food", "2.0"),
        ]
        .concat();
        let f = write(&text);
        let g = load_dump(
            f.path(),
            &RelationFilter::Only(vec![Relation::RelatedTo]),
        )
        .unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.metadata().stats.relation_filtered, 1);
    }

    #[test]
    fn malformed_rows_tolerated_under_one_percent() {
        let mut text = String::new();
        for i in 0..200 {
            text.push_str(&row("/r/RelatedTo", &format!("/c/en/a{i}"), "/c/en/b", "1.0"));
        }
        text.push_str("broken\trow\n");
        let f = write(&text);
        let g = load_dump(f.path(), &RelationFilter::All).unwrap();
        assert_eq!(g.metadata().stats.malformed, 1);
        assert_eq!(g.metadata().malformed_lines, vec![201]);
        assert_eq!(g.edge_count(), 200);
    }

    #[test]
    fn malformed_rows_over_one_percent_abort() {
        let text = [
            row("/r/RelatedTo", "/c/en/a", "/c/en/b", "1.0"),
            "/a/x\t/r/IsA\t/c/en/a\t/c/en/b\t{\"weight\": \"heavy\"}\n".to_string(),
        ]
        .concat();
        let f = write(&text);
        match load_dump(f.path(), &RelationFilter::All) {
            Err(KgError::TooManyMalformedRows {
                malformed: 1,
                rows: 2,
                first_line: 2,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gzip_dump_loads_with_raw_digest() {
        use flate2::write::GzEncoder;
        let text = row("/r/AtLocation", "/c/en/food", "/c/en/kitchen", "7.21");
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(text.as_bytes()).unwrap();
        let bytes = enc.finish().unwrap();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(&bytes).unwrap();
        let g = load_dump(f.path(), &RelationFilter::All).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.metadata().source_digest, hex::encode(Sha256::digest(&bytes)));
    }

    #[test]
    fn load_is_deterministic() {
        let mut text = String::new();
        for i in 0..50 {
            text.push_str(&row(
                "/r/RelatedTo",
                &format!("/c/en/n{}", i % 7),
                &format!("/c/en/m{}", (i * 3) % 11),
                &format!("{}.5", i % 4),
            ));
        }
        let f = write(&text);
        let a = load_dump(f.path(), &RelationFilter::All).unwrap();
        let b = load_dump(f.path(), &RelationFilter::All).unwrap();
        assert!(a.same_structure(&b));
        let ea: Vec<_> = a.edges().map(|e| e.to_edge()).collect();
        let eb: Vec<_> = b.edges().map(|e| e.to_edge()).collect();
        assert_eq!(ea, eb);
    }
}
