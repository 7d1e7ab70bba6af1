//! Text primitives shared by every stage: tokenization, detokenization, the
//! segment and record data model, and line-oriented corpus IO.
//!
//! Tokens are whitespace-delimited chunks with leading and trailing
//! punctuation split off one character at a time. In
//! [`TokenizerMode::MarkerPreserving`] the gender markers `*`, `:`, `_` and
//! `/` stay inside a word when letters flank them, so `Schüler*innen` is one
//! token. [`TokenizerMode::Aggressive`] splits those markers out.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Characters treated as gender markers inside a word.
pub const MARKERS: [char; 4] = ['*', ':', '_', '/'];

#[derive(Debug, Error)]
pub enum TextError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl TextError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        TextError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenizerMode {
    #[default]
    MarkerPreserving,
    Aggressive,
}

/// An ordered list of non-empty, whitespace-free tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(pub Vec<String>);

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSeq {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSeq(iter.into_iter().map(Into::into).collect())
    }
}

/// A token together with its byte range in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub span: Range<usize>,
}

/// One line of monolingual text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub id: u64,
    pub text: String,
    pub lang: String,
    #[serde(default)]
    pub labels: BTreeSet<String>,
}

impl Segment {
    pub fn new(id: u64, text: impl Into<String>, lang: impl Into<String>) -> Self {
        Segment {
            id,
            text: text.into(),
            lang: lang.into(),
            labels: BTreeSet::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.labels.insert(label.into());
        self
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.labels.contains(label)
    }
}

/// Where a parallel record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    BackwardRule,
    RoundtripPlain,
    RoundtripFemTag,
    RoundtripMascTag,
    Copy,
    NonGendered,
    /// Gender-tagged pair-form split, for finetuning a forward model.
    PairTagged,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::BackwardRule => "backward-rule",
            Origin::RoundtripPlain => "roundtrip-plain",
            Origin::RoundtripFemTag => "roundtrip-fem-tag",
            Origin::RoundtripMascTag => "roundtrip-masc-tag",
            Origin::Copy => "copy",
            Origin::NonGendered => "non-gendered",
            Origin::PairTagged => "pair-tagged",
        }
    }
}

/// One training pair: a (pseudo) source and its gender-fair target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelRecord {
    pub src: String,
    pub trg: String,
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
}

impl ParallelRecord {
    pub fn new(src: impl Into<String>, trg: impl Into<String>, origin: Origin) -> Self {
        ParallelRecord {
            src: src.into(),
            trg: trg.into(),
            origin,
            pivot: None,
            tags: Vec::new(),
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tags.push(tag.into());
        self
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Splits `text` into tokens with byte offsets into `text`.
pub fn tokenize_spans(text: &str, mode: TokenizerMode) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut chunk_start = None;
    for (i, c) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
        if c.is_whitespace() {
            if let Some(start) = chunk_start.take() {
                split_chunk(text, start, i, mode, &mut out);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    out
}

fn split_chunk<'a>(text: &'a str, start: usize, end: usize, mode: TokenizerMode, out: &mut Vec<Token<'a>>) {
    let chunk = &text[start..end];
    let core_start = chunk.char_indices().find(|&(_, c)| is_word_char(c)).map(|(i, _)| i);
    let Some(core_start) = core_start else {
        // all punctuation
        for (i, c) in chunk.char_indices() {
            let s = start + i;
            out.push(Token {
                text: &text[s..s + c.len_utf8()],
                span: s..s + c.len_utf8(),
            });
        }
        return;
    };
    let core_end = chunk
        .char_indices()
        .rev()
        .find(|&(_, c)| is_word_char(c))
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(chunk.len());

    for (i, c) in chunk[..core_start].char_indices() {
        let s = start + i;
        out.push(Token {
            text: &text[s..s + c.len_utf8()],
            span: s..s + c.len_utf8(),
        });
    }
    let core_abs = start + core_start..start + core_end;
    match mode {
        TokenizerMode::MarkerPreserving => out.push(Token {
            text: &text[core_abs.clone()],
            span: core_abs,
        }),
        TokenizerMode::Aggressive => {
            let mut piece = core_abs.start;
            for (i, c) in text[core_abs.clone()].char_indices() {
                if MARKERS.contains(&c) {
                    let s = core_abs.start + i;
                    if piece < s {
                        out.push(Token {
                            text: &text[piece..s],
                            span: piece..s,
                        });
                    }
                    out.push(Token {
                        text: &text[s..s + 1],
                        span: s..s + 1,
                    });
                    piece = s + 1;
                }
            }
            if piece < core_abs.end {
                out.push(Token {
                    text: &text[piece..core_abs.end],
                    span: piece..core_abs.end,
                });
            }
        }
    }
    for (i, c) in chunk[core_end..].char_indices() {
        let s = start + core_end + i;
        out.push(Token {
            text: &text[s..s + c.len_utf8()],
            span: s..s + c.len_utf8(),
        });
    }
}

/// Splits `text` into a [`TokenSeq`]. Empty text yields an empty sequence.
///
/// ```
/// use fairforge::textcore::{tokenize, TokenizerMode};
///
/// let toks = tokenize("Hat er keine Karte.", TokenizerMode::MarkerPreserving);
/// assert_eq!(toks.0, ["Hat", "er", "keine", "Karte", "."]);
/// ```
pub fn tokenize(text: &str, mode: TokenizerMode) -> TokenSeq {
    TokenSeq(
        tokenize_spans(text, mode)
            .into_iter()
            .map(|t| t.text.to_string())
            .collect(),
    )
}

const NO_SPACE_BEFORE: [&str; 7] = [".", ",", ";", ":", "!", "?", ")"];
const NO_SPACE_AFTER: [&str; 1] = ["("];

/// Joins tokens with single spaces, then reattaches punctuation.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut glue_next = true;
    for tok in tokens {
        let tok = tok.as_ref();
        if !glue_next && !NO_SPACE_BEFORE.contains(&tok) {
            out.push(' ');
        }
        out.push_str(tok);
        glue_next = NO_SPACE_AFTER.contains(&tok);
    }
    out
}

/// NFC-normalizes and collapses runs of whitespace to single spaces.
pub fn normalize_key(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lazily reads a plain corpus, one segment per non-blank line.
///
/// Ids are 1-based input line numbers, so they stay stable when blank lines
/// are skipped. Text is NFC-normalized.
pub fn read_segments(path: &Path, lang: &str) -> Result<SegmentReader<BufReader<File>>, TextError> {
    let file = File::open(path).map_err(|e| TextError::io(path, e))?;
    Ok(SegmentReader::new(BufReader::new(file), lang, path))
}

/// Iterator over segments from any buffered reader.
pub struct SegmentReader<R> {
    lines: io::Lines<R>,
    lang: String,
    path: PathBuf,
    line_no: u64,
}

impl<R: BufRead> SegmentReader<R> {
    pub fn new(reader: R, lang: &str, path: impl Into<PathBuf>) -> Self {
        SegmentReader {
            lines: reader.lines(),
            lang: lang.to_string(),
            path: path.into(),
            line_no: 0,
        }
    }
}

impl<R: BufRead> Iterator for SegmentReader<R> {
    type Item = Result<Segment, TextError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(TextError::io(&self.path, e))),
            };
            self.line_no += 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let text: String = line.nfc().collect();
            return Some(Ok(Segment::new(self.line_no, text, self.lang.clone())));
        }
    }
}

/// Reads a JSON-lines file into typed values. Blank lines are skipped;
/// a malformed line reports its 1-based line number.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, TextError> {
    let file = File::open(path).map_err(|e| TextError::io(path, e))?;
    parse_jsonl(BufReader::new(file), path)
}

pub fn parse_jsonl<T: serde::de::DeserializeOwned, R: BufRead>(reader: R, path: &Path) -> Result<Vec<T>, TextError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| TextError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| TextError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Writes one JSON object per line and returns how many were written.
pub fn write_records<'a, T, I>(path: &Path, records: I) -> Result<usize, TextError>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let file = File::create(path).map_err(|e| TextError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let n = write_jsonl(&mut w, records).map_err(|e| TextError::io(path, e))?;
    w.flush().map_err(|e| TextError::io(path, e))?;
    Ok(n)
}

pub fn write_jsonl<'a, T, I, W>(w: &mut W, records: I) -> io::Result<usize>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
    W: Write,
{
    let mut n = 0;
    for rec in records {
        serde_json::to_writer(&mut *w, rec)?;
        w.write_all(b"\n")?;
        n += 1;
    }
    Ok(n)
}

/// Writes plain lines; returns the count.
pub fn write_lines<S: AsRef<str>>(path: &Path, lines: &[S]) -> Result<usize, TextError> {
    let file = File::create(path).map_err(|e| TextError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for l in lines {
        writeln!(w, "{}", l.as_ref()).map_err(|e| TextError::io(path, e))?;
    }
    w.flush().map_err(|e| TextError::io(path, e))?;
    Ok(lines.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(text: &str, mode: TokenizerMode) -> Vec<String> {
        tokenize(text, mode).0
    }

    #[test]
    fn splits_final_punctuation() {
        assert_eq!(
            toks("Hat er keine Karte.", TokenizerMode::MarkerPreserving),
            ["Hat", "er", "keine", "Karte", "."]
        );
    }

    #[test]
    fn markers_survive_in_preserving_mode() {
        assert_eq!(
            toks("Schüler*innen lernen.", TokenizerMode::MarkerPreserving),
            ["Schüler*innen", "lernen", "."]
        );
        assert_eq!(toks("einem*r", TokenizerMode::MarkerPreserving), ["einem*r"]);
    }

    #[test]
    fn aggressive_mode_splits_markers() {
        assert_eq!(toks("Schüler*innen", TokenizerMode::Aggressive), ["Schüler", "*", "innen"]);
        assert_eq!(toks("Student:innen,", TokenizerMode::Aggressive), ["Student", ":", "innen", ","]);
    }

    #[test]
    fn empty_and_blank() {
        assert!(tokenize("", TokenizerMode::MarkerPreserving).is_empty());
        assert!(tokenize("   \t", TokenizerMode::Aggressive).is_empty());
    }

    #[test]
    fn quotes_and_brackets() {
        assert_eq!(
            toks("„UNO!“ (das)", TokenizerMode::MarkerPreserving),
            ["„", "UNO", "!", "“", "(", "das", ")"]
        );
    }

    #[test]
    fn spans_slice_source() {
        let text = "Die Kund*innendaten, bitte.";
        for t in tokenize_spans(text, TokenizerMode::Aggressive) {
            assert_eq!(&text[t.span.clone()], t.text);
        }
    }

    #[test]
    fn detokenize_examples() {
        assert_eq!(detokenize(&["Hat", "er", "keine", "Karte", "."]), "Hat er keine Karte.");
        assert_eq!(detokenize::<&str>(&[]), "");
        assert_eq!(detokenize(&["(", "a", ")"]), "(a)");
        assert_eq!(detokenize(&["anders", ",", "auch"]), "anders, auch");
    }

    #[test]
    fn normalize_key_collapses_whitespace_and_composes() {
        assert_eq!(normalize_key("x "), "x");
        assert_eq!(normalize_key("a  \t b"), "a b");
        // decomposed ü
        assert_eq!(normalize_key("Schu\u{308}ler"), "Schüler");
    }

    #[test]
    fn reader_skips_blank_lines_and_keeps_line_ids() {
        let data = "eins\n\ndrei\n";
        let segs: Vec<_> = SegmentReader::new(data.as_bytes(), "de", "mem")
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].id, 1);
        assert_eq!(segs[1].id, 3);
        assert_eq!(segs[1].text, "drei");
    }

    #[test]
    fn reader_applies_nfc() {
        let data = "Schu\u{308}ler\n";
        let seg = SegmentReader::new(data.as_bytes(), "de", "mem").next().unwrap().unwrap();
        assert_eq!(seg.text, "Schüler");
    }

    #[test]
    fn malformed_json_names_line() {
        let data = "{\"src\":\"a\",\"trg\":\"b\",\"origin\":\"copy\"}\nnot json\n";
        let err = parse_jsonl::<ParallelRecord, _>(data.as_bytes(), Path::new("x.jsonl")).unwrap_err();
        match err {
            TextError::Json { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn text_strategy() -> impl Strategy<Value = String> {
        let piece = prop_oneof![
            "[a-zA-ZäöüÄÖÜß]{1,8}",
            Just("*".to_string()),
            Just(":".to_string()),
            Just("_".to_string()),
            Just("/".to_string()),
            Just(".".to_string()),
            Just(",".to_string()),
            Just("(".to_string()),
            Just(")".to_string()),
            Just("!".to_string()),
            Just("„".to_string()),
            Just(" ".to_string()),
            Just("  ".to_string()),
            "[0-9]{1,3}",
        ];
        prop::collection::vec(piece, 0..20).prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn marker_preserving_round_trip(text in text_strategy()) {
            let first = tokenize(&text, TokenizerMode::MarkerPreserving);
            let again = tokenize(&detokenize(&first.0), TokenizerMode::MarkerPreserving);
            prop_assert_eq!(first, again);
        }

        #[test]
        fn tokens_cover_non_whitespace(text in text_strategy(), aggressive in any::<bool>()) {
            let mode = if aggressive { TokenizerMode::Aggressive } else { TokenizerMode::MarkerPreserving };
            let t = tokenize(&text, mode);
            for tok in t.iter() {
                prop_assert!(!tok.is_empty());
                prop_assert!(!tok.chars().any(char::is_whitespace));
            }
            let joined: String = t.iter().collect();
            let expected: String = text.chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(joined, expected);
        }
    }
}
