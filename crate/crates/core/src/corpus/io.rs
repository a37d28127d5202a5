use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use super::{CorpusError, LexiconEntry, Origin, ParallelPair, Result, VerseRef};

/// On-disk layout of a corpus or lexicon file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Tsv,
    Jsonl,
}

impl CorpusFormat {
    /// `.jsonl`/`.json` files are JSONL, everything else TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => CorpusFormat::Jsonl,
            _ => CorpusFormat::Tsv,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(Self::Tsv),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

#[derive(Deserialize)]
struct JsonPairRow {
    id: String,
    source: String,
    target: String,
    origin: String,
    #[serde(rename = "ref", default)]
    verse_ref: Option<String>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

/// Loads and validates parallel pairs, preserving file order.
pub fn load_parallel(path: &Path, format: CorpusFormat) -> Result<Vec<ParallelPair>> {
    parse_parallel(&read(path)?, format)
}

/// Data lines of a file as (1-based line number, content), skipping blank
/// lines and an optional header whose first column is `header`.
fn data_lines<'a>(text: &'a str, header: &'a str) -> impl Iterator<Item = (usize, &'a str)> + 'a {
    let mut first = true;
    text.lines().enumerate().filter_map(move |(i, raw)| {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            return None;
        }
        let is_header = first && line.split('\t').next().is_some_and(|c| c.trim().eq_ignore_ascii_case(header));
        first = false;
        (!is_header).then_some((i + 1, line))
    })
}

pub fn parse_parallel(text: &str, format: CorpusFormat) -> Result<Vec<ParallelPair>> {
    let mut pairs = Vec::new();
    let mut lines_by_id: HashMap<String, usize> = HashMap::new();
    for (line_no, line) in data_lines(text, "id") {
        let pair = match format {
            CorpusFormat::Tsv => parse_tsv_pair(line_no, line)?,
            CorpusFormat::Jsonl => parse_json_pair(line_no, line)?,
        };
        if let Some(first) = lines_by_id.insert(pair.id.clone(), line_no) {
            return Err(CorpusError::DuplicateId { id: pair.id, first, second: line_no });
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

fn build_pair(
    line: usize,
    id: &str,
    source: &str,
    target: &str,
    origin: &str,
    verse_ref: Option<&str>,
) -> Result<ParallelPair> {
    let origin =
        Origin::from_str(origin).map_err(|message| CorpusError::Malformed { line, field: "origin", message })?;
    let verse_ref = match verse_ref.map(str::trim).filter(|r| !r.is_empty()) {
        Some(r) => Some(VerseRef::parse_dotted(r).ok_or_else(|| CorpusError::Malformed {
            line,
            field: "ref",
            message: format!("expected BOOK.CHAPTER.VERSE, got `{r}`"),
        })?),
        None => None,
    };
    ParallelPair::new(id, source, target, origin, verse_ref)
        .map_err(|(field, _)| CorpusError::EmptyField { field, line })
}

fn parse_tsv_pair(line_no: usize, line: &str) -> Result<ParallelPair> {
    let cols: Vec<&str> = line.split('\t').collect();
    if !(4..=5).contains(&cols.len()) {
        return Err(CorpusError::Malformed {
            line: line_no,
            field: "row",
            message: format!("expected 4 or 5 tab-separated columns, found {}", cols.len()),
        });
    }
    build_pair(line_no, cols[0], cols[1], cols[2], cols[3], cols.get(4).copied())
}

fn parse_json_pair(line_no: usize, line: &str) -> Result<ParallelPair> {
    let row: JsonPairRow = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
        line: line_no,
        field: "row",
        message: e.to_string(),
    })?;
    build_pair(line_no, &row.id, &row.source, &row.target, &row.origin, row.verse_ref.as_deref())
}

fn check_tsv_field(value: &str) -> std::io::Result<()> {
    if value.contains(['\t', '\n', '\r']) {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("field contains a tab or newline: {value:?}"),
        ));
    }
    Ok(())
}

/// Serializes pairs in the same layout `load_parallel` reads.
pub fn write_parallel<W: Write>(mut out: W, pairs: &[ParallelPair], format: CorpusFormat) -> std::io::Result<()> {
    for p in pairs {
        match format {
            CorpusFormat::Tsv => {
                for f in [&p.id, &p.source_text, &p.target_text] {
                    check_tsv_field(f)?;
                }
                write!(out, "{}\t{}\t{}\t{}", p.id, p.source_text, p.target_text, p.origin)?;
                if let Some(r) = &p.verse_ref {
                    write!(out, "\t{}", r.dotted())?;
                }
                writeln!(out)?;
            }
            CorpusFormat::Jsonl => {
                serde_json::to_writer(&mut out, p)?;
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

/// Loads a lexicon (TSV `source_word \t pos \t target_word`, or JSONL with
/// the same keys). An empty POS column means no POS tag.
pub fn load_lexicon(path: &Path) -> Result<Vec<LexiconEntry>> {
    parse_lexicon(&read(path)?, CorpusFormat::from_path(path))
}

#[derive(Deserialize)]
struct JsonLexiconRow {
    source_word: String,
    #[serde(default)]
    pos: Option<String>,
    target_word: String,
}

pub fn parse_lexicon(text: &str, format: CorpusFormat) -> Result<Vec<LexiconEntry>> {
    let mut entries = Vec::new();
    let mut seen: HashMap<LexiconEntry, usize> = HashMap::new();
    for (line_no, line) in data_lines(text, "source_word") {
        let (source, pos, target) = match format {
            CorpusFormat::Tsv => {
                let cols: Vec<&str> = line.split('\t').collect();
                match cols.as_slice() {
                    [s, p, t] => (s.to_string(), Some(p.to_string()), t.to_string()),
                    [_] | [_, _] => {
                        return Err(CorpusError::Malformed {
                            line: line_no,
                            field: "target_word",
                            message: "missing target_word column".into(),
                        })
                    }
                    _ => {
                        return Err(CorpusError::Malformed {
                            line: line_no,
                            field: "row",
                            message: format!("expected 3 tab-separated columns, found {}", cols.len()),
                        })
                    }
                }
            }
            CorpusFormat::Jsonl => {
                let row: JsonLexiconRow = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
                    line: line_no,
                    field: "row",
                    message: e.to_string(),
                })?;
                (row.source_word, row.pos, row.target_word)
            }
        };
        if source.trim().is_empty() {
            return Err(CorpusError::EmptyField { field: "source_word", line: line_no });
        }
        if target.trim().is_empty() {
            return Err(CorpusError::EmptyField { field: "target_word", line: line_no });
        }
        let entry = LexiconEntry::new(source, pos.as_deref(), target);
        if let Some(first) = seen.insert(entry.clone(), line_no) {
            return Err(CorpusError::DuplicateEntry {
                source_word: entry.source_word,
                pos: entry.pos.unwrap_or_default(),
                target_word: entry.target_word,
                first,
                second: line_no,
            });
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub fn write_lexicon<W: Write>(mut out: W, entries: &[LexiconEntry], format: CorpusFormat) -> std::io::Result<()> {
    for e in entries {
        match format {
            CorpusFormat::Tsv => {
                let pos = e.pos.as_deref().unwrap_or("");
                for f in [e.source_word.as_str(), pos, &e.target_word] {
                    check_tsv_field(f)?;
                }
                writeln!(out, "{}\t{}\t{}", e.source_word, pos, e.target_word)?;
            }
            CorpusFormat::Jsonl => {
                serde_json::to_writer(&mut out, e)?;
                writeln!(out)?;
            }
        }
    }
    Ok(())
}
