//! Parsing of bibliographic export files.
//!
//! Two layouts are accepted:
//!
//! - **Field-tagged text.** A header line starting with `FN` (optionally
//!   followed by `VR`), then records of `XX value` lines terminated by a line
//!   `ER`. Continuation lines start with three spaces. `EF` ends the file.
//! - **Tab-delimited.** A first row of two-letter tags separated by tabs, then
//!   one record per row. Multi-valued cells use `; ` separators.
//!
//! Recognized tags: `UT` record id, `PY` year, `DT` document types, `TI`
//! title, `AB` abstract, `AU` authors, `C1` addresses, `DE` author keywords,
//! `ID` keywords plus, `WC` subject categories, `CR` cited references, `DI`
//! DOI. Everything else (e.g. `PT`) is ignored.

use std::collections::{BTreeSet, HashSet};
use std::io::Read;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::collapse_whitespace;

/// Accepted publication-year range; records outside it are rejected.
pub const MIN_PUB_YEAR: i32 = 1900;
pub const MAX_PUB_YEAR: i32 = 2100;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is not valid UTF-8 (byte offset {offset})")]
    Encoding { offset: usize },
    #[error("unrecognized export header: {found:?}")]
    UnrecognizedHeader { found: String },
    #[error("unknown export format {0:?} (expected `tagged` or `tab`)")]
    UnknownFormat(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// One publication of the analyzed corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitingRecord {
    pub record_id: String,
    pub pub_year: i32,
    pub doc_types: BTreeSet<String>,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub authors: Vec<String>,
    pub countries: BTreeSet<String>,
    pub keywords_author: BTreeSet<String>,
    pub keywords_plus: BTreeSet<String>,
    pub subject_categories: BTreeSet<String>,
    pub cited_refs: Vec<String>,
    pub doi: Option<String>,
}

impl CitingRecord {
    /// A record with only an id and a year; handy for building test corpora.
    pub fn new(record_id: impl Into<String>, pub_year: i32) -> Self {
        CitingRecord {
            record_id: record_id.into(),
            pub_year,
            doc_types: BTreeSet::new(),
            title: String::new(),
            abstract_text: String::new(),
            authors: Vec::new(),
            countries: BTreeSet::new(),
            keywords_author: BTreeSet::new(),
            keywords_plus: BTreeSet::new(),
            subject_categories: BTreeSet::new(),
            cited_refs: Vec::new(),
            doi: None,
        }
    }
}

/// Fields extracted from a cited-reference string such as
/// `MEEHL GA, 2004, SCIENCE, V305, P994, DOI 10.1126/science.1098704`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CitedRefFields {
    pub raw: String,
    pub first_author: Option<String>,
    pub rpy: Option<i32>,
    pub source: Option<String>,
    pub volume: Option<String>,
    pub page: Option<String>,
    pub doi: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    TaggedText,
    TabDelimited,
}

impl FromStr for ExportFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tagged" | "tagged_text" | "tagged-text" => Ok(ExportFormat::TaggedText),
            "tab" | "tab_delimited" | "tab-delimited" | "tsv" => Ok(ExportFormat::TabDelimited),
            _ => Err(IngestError::UnknownFormat(s.to_string())),
        }
    }
}

/// A non-fatal problem found while parsing; the affected record is skipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestWarning {
    /// 1-based line where the affected record starts.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    pub records: Vec<CitingRecord>,
    pub warnings: Vec<IngestWarning>,
}

/// Field lines of one record before interpretation.
struct RawRecord {
    line: usize,
    ordinal: usize,
    fields: Vec<(String, Vec<String>)>,
}

/// Parses an export stream. A leading byte-order mark is skipped.
pub fn parse_export<R: Read>(mut reader: R, format: ExportFormat) -> Result<Ingested, IngestError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| IngestError::Encoding {
        offset: e.valid_up_to(),
    })?;
    parse_export_str(text, format)
}

pub fn parse_export_str(text: &str, format: ExportFormat) -> Result<Ingested, IngestError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let (raws, mut warnings) = match format {
        ExportFormat::TaggedText => split_tagged(text)?,
        ExportFormat::TabDelimited => split_tab(text)?,
    };

    let built: Vec<Result<CitingRecord, IngestWarning>> =
        raws.into_par_iter().map(build_record).collect();

    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(built.len());
    for item in built {
        match item {
            Ok(rec) => {
                if seen.insert(rec.record_id.clone()) {
                    records.push(rec);
                } else {
                    warnings.push(IngestWarning {
                        line: 0,
                        message: format!("duplicate record id {:?}; later copy dropped", rec.record_id),
                    });
                }
            }
            Err(w) => warnings.push(w),
        }
    }
    warnings.sort_by_key(|w| w.line);
    Ok(Ingested { records, warnings })
}

fn tag_of(line: &str) -> Option<&str> {
    let b = line.as_bytes();
    let is_tag_char = |c: u8| c.is_ascii_uppercase() || c.is_ascii_digit();
    if b.len() >= 2 && is_tag_char(b[0]) && is_tag_char(b[1]) && (b.len() == 2 || b[2] == b' ') {
        Some(&line[..2])
    } else {
        None
    }
}

fn header_excerpt(line: &str) -> String {
    line.chars().take(40).collect()
}

fn split_tagged(text: &str) -> Result<(Vec<RawRecord>, Vec<IngestWarning>), IngestError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = lines.by_ref().find(|(_, l)| !l.trim().is_empty());
    match header {
        Some((_, l)) if tag_of(l) == Some("FN") => {}
        Some((_, l)) => return Err(IngestError::UnrecognizedHeader { found: header_excerpt(l) }),
        None => return Err(IngestError::UnrecognizedHeader { found: String::new() }),
    }

    let mut raws = Vec::new();
    let mut warnings = Vec::new();
    let mut current: Option<RawRecord> = None;

    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("   ") {
            match current.as_mut().and_then(|r| r.fields.last_mut()) {
                Some((_, values)) => values.push(rest.trim().to_string()),
                None => warnings.push(IngestWarning {
                    line: no,
                    message: "continuation line outside any field".into(),
                }),
            }
            continue;
        }
        let Some(tag) = tag_of(line) else {
            warnings.push(IngestWarning {
                line: no,
                message: format!("malformed line ignored: {:?}", header_excerpt(line)),
            });
            continue;
        };
        match tag {
            "EF" => break,
            "VR" | "FN" if current.is_none() => {}
            "ER" => {
                if let Some(rec) = current.take() {
                    raws.push(rec);
                }
            }
            _ => {
                let value = line.get(3..).unwrap_or("").trim().to_string();
                let rec = current.get_or_insert_with(|| RawRecord {
                    line: no,
                    ordinal: raws.len() + 1,
                    fields: Vec::new(),
                });
                rec.fields.push((tag.to_string(), vec![value]));
            }
        }
    }
    if let Some(rec) = current {
        warnings.push(IngestWarning {
            line: rec.line,
            message: "truncated record at end of file; partial record dropped".into(),
        });
    }
    Ok((raws, warnings))
}

fn split_tab(text: &str) -> Result<(Vec<RawRecord>, Vec<IngestWarning>), IngestError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let Some((_, header)) = lines.next() else {
        return Err(IngestError::UnrecognizedHeader { found: String::new() });
    };
    let tags: Vec<&str> = header.split('\t').map(str::trim).collect();
    if tags.iter().any(|t| t.len() != 2 || tag_of(t).is_none()) {
        return Err(IngestError::UnrecognizedHeader { found: header_excerpt(header) });
    }
    let ends_with_newline = text.ends_with('\n');
    let all: Vec<(usize, &str)> = lines.filter(|(_, l)| !l.trim().is_empty()).collect();

    let mut raws = Vec::new();
    let mut warnings = Vec::new();
    for (pos, &(no, line)) in all.iter().enumerate() {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != tags.len() {
            let last = pos + 1 == all.len();
            let message = if last && !ends_with_newline && cells.len() < tags.len() {
                "truncated record at end of file; partial record dropped".to_string()
            } else {
                format!("row has {} cells, header has {}; row dropped", cells.len(), tags.len())
            };
            warnings.push(IngestWarning { line: no, message });
            continue;
        }
        let fields = tags
            .iter()
            .zip(&cells)
            .filter(|(_, cell)| !cell.trim().is_empty())
            .map(|(tag, cell)| {
                let values = if *tag == "CR" {
                    cell.split(';')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect()
                } else {
                    vec![cell.trim().to_string()]
                };
                (tag.to_string(), values)
            })
            .collect();
        raws.push(RawRecord {
            line: no,
            ordinal: raws.len() + 1,
            fields,
        });
    }
    Ok((raws, warnings))
}

fn split_list(joined: &str) -> impl Iterator<Item = String> + '_ {
    joined.split(';').map(collapse_whitespace).filter(|s| !s.is_empty())
}

fn strip_bracketed(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut depth = 0usize;
    for c in s.chars() {
        match c {
            '[' => depth += 1,
            ']' if depth > 0 => depth -= 1,
            _ if depth == 0 => out.push(c),
            _ => {}
        }
    }
    out
}

fn build_record(raw: RawRecord) -> Result<CitingRecord, IngestWarning> {
    let warn = |message: String| IngestWarning { line: raw.line, message };
    let mut rec = CitingRecord::new(String::new(), 0);
    let mut year: Option<&str> = None;

    for (tag, values) in &raw.fields {
        let joined = values.join(" ");
        match tag.as_str() {
            "UT" => rec.record_id = joined.trim().to_string(),
            "PY" => year = values.first().map(|s| s.as_str()),
            "DT" => rec.doc_types.extend(split_list(&joined)),
            "WC" => rec.subject_categories.extend(split_list(&joined)),
            "DE" => rec
                .keywords_author
                .extend(split_list(&joined).map(|k| normalize_keyword(&k))),
            "ID" => rec
                .keywords_plus
                .extend(split_list(&joined).map(|k| normalize_keyword(&k))),
            "TI" => rec.title = joined.trim().to_string(),
            "AB" => rec.abstract_text = joined.trim().to_string(),
            "AU" => {
                for v in values {
                    rec.authors.extend(v.split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from));
                }
            }
            "C1" => {
                for v in values {
                    for address in strip_bracketed(v).split(';') {
                        if let Some(country) = country_from_address(address) {
                            rec.countries.insert(country);
                        }
                    }
                }
            }
            "CR" => rec
                .cited_refs
                .extend(values.iter().map(|v| v.trim_end()).filter(|v| !v.is_empty()).map(String::from)),
            "DI" => {
                let d = joined.trim();
                rec.doi = (!d.is_empty()).then(|| d.to_string());
            }
            _ => {}
        }
    }

    let Some(year) = year else {
        return Err(warn("record has no PY field; skipped".into()));
    };
    rec.pub_year = match year.trim().parse::<i32>() {
        Ok(y) if (MIN_PUB_YEAR..=MAX_PUB_YEAR).contains(&y) => y,
        Ok(y) => return Err(warn(format!("publication year {y} outside {MIN_PUB_YEAR}..={MAX_PUB_YEAR}; skipped"))),
        Err(_) => return Err(warn(format!("unparseable publication year {year:?}; skipped"))),
    };
    if rec.record_id.is_empty() {
        rec.record_id = format!("REC{:06}", raw.ordinal);
    }
    Ok(rec)
}

const COUNTRY_ALIASES: &[(&str, &str)] = &[
    ("U.S.A", "USA"),
    ("UNITED STATES", "USA"),
    ("UNITED STATES OF AMERICA", "USA"),
    ("CHINA", "PEOPLES R CHINA"),
    ("PR CHINA", "PEOPLES R CHINA"),
    ("REPUBLIC OF KOREA", "SOUTH KOREA"),
    ("KOREA", "SOUTH KOREA"),
];

/// Country of an address line: the last comma-separated token, upper-cased.
/// US addresses end in `ST 12345 USA` and collapse to `USA`. UK home nations
/// stay distinct.
pub fn country_from_address(address: &str) -> Option<String> {
    let cleaned = strip_bracketed(address);
    let cleaned = cleaned.trim().trim_end_matches('.').trim();
    let last = collapse_whitespace(cleaned.rsplit(',').next()?).to_uppercase();
    if last.is_empty() {
        return None;
    }
    if last == "USA" || last.ends_with(" USA") {
        return Some("USA".into());
    }
    let alias = COUNTRY_ALIASES.iter().find(|(from, _)| *from == last).map(|(_, to)| to.to_string());
    Some(alias.unwrap_or(last))
}

/// Lower-cases, trims and collapses internal whitespace. Hyphens are kept, so
/// `heat-wave` and `heat wave` remain distinct keywords.
pub fn normalize_keyword(raw: &str) -> String {
    collapse_whitespace(raw).to_lowercase()
}

fn is_year(s: &str) -> bool {
    s.len() == 4 && s.bytes().all(|b| b.is_ascii_digit())
}

fn prefixed_number(seg: &str, prefix: char) -> Option<&str> {
    let rest = seg.strip_prefix(prefix)?;
    (!rest.is_empty() && !rest.contains(' ') && rest.bytes().any(|b| b.is_ascii_digit())).then_some(rest)
}

fn has_text(s: &str) -> bool {
    s.chars().any(char::is_alphanumeric)
}

/// Splits a cited-reference string into its fields. Never fails; unmatched
/// segments are left out and `raw` is always the input verbatim.
pub fn parse_cited_ref(raw: &str) -> CitedRefFields {
    let mut out = CitedRefFields {
        raw: raw.to_string(),
        ..Default::default()
    };
    let segs: Vec<&str> = raw.split(',').map(str::trim).collect();
    let Some(&lead) = segs.first() else {
        return out;
    };
    if is_year(lead) {
        out.rpy = lead.parse().ok();
    } else if has_text(lead) {
        out.first_author = Some(lead.to_string());
    }

    for (i, &seg) in segs.iter().enumerate().skip(1) {
        if out.rpy.is_none() && is_year(seg) {
            out.rpy = seg.parse().ok();
        } else if seg.len() > 4 && seg[..4].eq_ignore_ascii_case("DOI ") {
            if out.doi.is_none() {
                out.doi = Some(seg[4..].trim().to_string());
            }
        } else if let Some(v) = prefixed_number(seg, 'V').filter(|_| out.volume.is_none()) {
            out.volume = Some(v.to_string());
        } else if let Some(p) = prefixed_number(seg, 'P').filter(|_| out.page.is_none()) {
            out.page = Some(p.to_string());
        } else if out.source.is_none() && i <= 2 && has_text(seg) {
            out.source = Some(seg.to_string());
        }
    }
    out
}
