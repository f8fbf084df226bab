//! Comment-event corpora: parsing, writing and derived measurements.
//!
//! Two interchangeable formats are read and written.
//!
//! JSONL, one object per line:
//!
//! ```text
//! {"kind":"topic","topic_id":"t1","created_at":1000,"removed_at":4600}
//! {"topic_id":"t1","comment_id":"1","parent_id":"","user_id":"u7","ts":1060}
//! ```
//!
//! CSV with header
//! `kind,topic_id,comment_id,parent_id,user_id,ts,created_at,removed_at`
//! and an optional trailing `category` column.
//!
//! Timestamps are integer epoch seconds; all derived quantities are in
//! minutes since topic creation. Blank lines and lines starting with `#`
//! are ignored in both formats.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::Serialize;
use serde_json::Value;

use crate::conversation::{CommentEvent, Thread};
use crate::error::{Error, Result};

/// Seconds per corpus time unit (minutes).
pub const SECONDS_PER_UNIT: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawComment {
    pub comment_id: String,
    /// Empty for a direct reply to the topic's root post.
    pub parent_id: String,
    pub user_id: String,
    pub ts: i64,
    /// Source line, 1-based.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Topic {
    pub created_at: i64,
    pub removed_at: Option<i64>,
    pub category: Option<String>,
    /// Comments ordered by timestamp, ties in file order.
    pub comments: Vec<RawComment>,
}

impl Topic {
    /// Comment times in minutes since creation.
    pub fn times(&self) -> Vec<f64> {
        self.comments
            .iter()
            .map(|c| (c.ts - self.created_at) as f64 / SECONDS_PER_UNIT)
            .collect()
    }

    /// `removed_at - created_at` in minutes, if recorded.
    pub fn exposure(&self) -> Option<f64> {
        self.removed_at
            .map(|r| (r - self.created_at) as f64 / SECONDS_PER_UNIT)
    }

    /// The topic as a reply tree with the given exposure. Parents resolve
    /// to earlier comments; anything else hangs off the root.
    pub fn to_thread(&self, exposure: f64) -> Thread {
        let index: HashMap<&str, usize> = self
            .comments
            .iter()
            .enumerate()
            .map(|(i, c)| (c.comment_id.as_str(), i + 1))
            .collect();
        let mut thread = Thread::root_only(exposure);
        for (i, (c, t)) in self.comments.iter().zip(self.times()).enumerate() {
            let id = i + 1;
            let parent = match index.get(c.parent_id.as_str()) {
                Some(&p) if p < id => p,
                _ => 0,
            };
            thread.events.push(CommentEvent {
                id,
                parent,
                time: t,
                user: None,
            });
        }
        thread
    }
}

/// Problems that were repaired rather than rejected while parsing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    /// Lines of comments stamped before their topic's creation (dropped).
    pub dropped_early: Vec<usize>,
    /// Lines of comments whose parent is unknown or not earlier (reattached
    /// to the root).
    pub reattached: Vec<usize>,
    /// Topics without a header line; their creation time was set to the
    /// earliest comment.
    pub missing_header: Vec<String>,
}

impl ParseReport {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.dropped_early.is_empty() {
            out.push(format!(
                "dropped {} comment(s) stamped before topic creation (lines {})",
                self.dropped_early.len(),
                join_lines(&self.dropped_early)
            ));
        }
        if !self.reattached.is_empty() {
            out.push(format!(
                "reattached {} comment(s) with unresolved parents to the root (lines {})",
                self.reattached.len(),
                join_lines(&self.reattached)
            ));
        }
        if !self.missing_header.is_empty() {
            out.push(format!(
                "{} topic(s) without header; creation set to first comment",
                self.missing_header.len()
            ));
        }
        out
    }
}

fn join_lines(lines: &[usize]) -> String {
    let shown: Vec<String> = lines.iter().take(10).map(|l| l.to_string()).collect();
    if lines.len() > 10 {
        format!("{}, ...", shown.join(", "))
    } else {
        shown.join(", ")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub topics: IndexMap<String, Topic>,
    pub report: ParseReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    /// `.csv` is CSV, anything else JSONL.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "json" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::param(format!(
                "format must be jsonl or csv, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Reject unresolved parents with a structural error instead of
    /// reattaching them to the root.
    pub strict_parents: bool,
}

/// One decoded line before validation.
#[derive(Debug, Clone)]
enum Record {
    Topic {
        topic_id: String,
        created_at: i64,
        removed_at: Option<i64>,
        category: Option<String>,
    },
    Comment {
        topic_id: String,
        comment: RawComment,
    },
}

pub fn parse_corpus(path: &Path, format: Format) -> Result<Corpus> {
    parse_corpus_with(path, format, ParseOptions::default())
}

pub fn parse_corpus_with(path: &Path, format: Format, options: ParseOptions) -> Result<Corpus> {
    let file = File::open(path)?;
    parse_reader(BufReader::new(file), format, options)
}

pub fn parse_reader<R: Read>(reader: R, format: Format, options: ParseOptions) -> Result<Corpus> {
    let records = match format {
        Format::Jsonl => read_jsonl(BufReader::new(reader))?,
        Format::Csv => read_csv(reader)?,
    };
    assemble(records, options)
}

fn malformed(line: usize, message: impl Into<String>) -> Error {
    Error::Malformed {
        line,
        message: message.into(),
    }
}

fn json_id(obj: &serde_json::Map<String, Value>, key: &str, line: usize) -> Result<Option<String>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(Value::Number(n)) if n.is_i64() || n.is_u64() => Ok(Some(n.to_string())),
        Some(other) => Err(malformed(
            line,
            format!("field {key} must be a string, got {other}"),
        )),
    }
}

fn json_int(obj: &serde_json::Map<String, Value>, key: &str, line: usize) -> Result<Option<i64>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => n
            .as_i64()
            .map(Some)
            .ok_or_else(|| malformed(line, format!("field {key} must be an integer, got {n}"))),
        Some(other) => Err(malformed(
            line,
            format!("field {key} must be an integer, got {other}"),
        )),
    }
}

fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<Record>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let value: Value =
            serde_json::from_str(text).map_err(|e| malformed(line_no, e.to_string()))?;
        let Value::Object(obj) = value else {
            return Err(malformed(line_no, "expected a JSON object"));
        };
        let kind = json_id(&obj, "kind", line_no)?;
        let topic_id = json_id(&obj, "topic_id", line_no)?
            .ok_or_else(|| malformed(line_no, "missing topic_id"))?;
        match kind.as_deref() {
            Some("topic") => records.push(Record::Topic {
                topic_id,
                created_at: json_int(&obj, "created_at", line_no)?
                    .ok_or_else(|| malformed(line_no, "topic line without created_at"))?,
                removed_at: json_int(&obj, "removed_at", line_no)?,
                category: json_id(&obj, "category", line_no)?,
            }),
            None | Some("comment") => records.push(Record::Comment {
                topic_id,
                comment: RawComment {
                    comment_id: json_id(&obj, "comment_id", line_no)?
                        .ok_or_else(|| malformed(line_no, "missing comment_id"))?,
                    parent_id: json_id(&obj, "parent_id", line_no)?.unwrap_or_default(),
                    user_id: json_id(&obj, "user_id", line_no)?.unwrap_or_default(),
                    ts: json_int(&obj, "ts", line_no)?
                        .ok_or_else(|| malformed(line_no, "missing ts"))?,
                    line: line_no,
                },
            }),
            Some(other) => return Err(malformed(line_no, format!("unknown kind {other:?}"))),
        }
    }
    Ok(records)
}

fn read_csv<R: Read>(reader: R) -> Result<Vec<Record>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = [
        "kind",
        "topic_id",
        "comment_id",
        "parent_id",
        "user_id",
        "ts",
        "created_at",
        "removed_at",
    ];
    let mut idx = HashMap::new();
    for name in required {
        let i = col(name).ok_or_else(|| malformed(1, format!("CSV header lacks column {name}")))?;
        idx.insert(name, i);
    }
    let category = col("category");
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line_no = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.iter().all(str::is_empty) {
            continue;
        }
        let field = |name: &str| row.get(idx[name]).unwrap_or("");
        let int = |name: &str| -> Result<Option<i64>> {
            let s = field(name);
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<i64>().map(Some).map_err(|_| {
                    malformed(
                        line_no,
                        format!("field {name} must be an integer, got {s:?}"),
                    )
                })
            }
        };
        let topic_id = field("topic_id").to_string();
        if topic_id.is_empty() {
            return Err(malformed(line_no, "missing topic_id"));
        }
        match field("kind") {
            "topic" => records.push(Record::Topic {
                topic_id,
                created_at: int("created_at")?
                    .ok_or_else(|| malformed(line_no, "topic row without created_at"))?,
                removed_at: int("removed_at")?,
                category: category
                    .and_then(|i| row.get(i))
                    .filter(|s| !s.is_empty())
                    .map(str::to_string),
            }),
            "" | "comment" => {
                let comment_id = field("comment_id").to_string();
                if comment_id.is_empty() {
                    return Err(malformed(line_no, "missing comment_id"));
                }
                records.push(Record::Comment {
                    topic_id,
                    comment: RawComment {
                        comment_id,
                        parent_id: field("parent_id").to_string(),
                        user_id: field("user_id").to_string(),
                        ts: int("ts")?.ok_or_else(|| malformed(line_no, "missing ts"))?,
                        line: line_no,
                    },
                })
            }
            other => return Err(malformed(line_no, format!("unknown kind {other:?}"))),
        }
    }
    Ok(records)
}

fn assemble(records: Vec<Record>, options: ParseOptions) -> Result<Corpus> {
    let mut topics: IndexMap<String, Topic> = IndexMap::new();
    let mut headers: HashMap<String, ()> = HashMap::new();
    let mut pending: IndexMap<String, Vec<RawComment>> = IndexMap::new();
    for rec in records {
        match rec {
            Record::Topic {
                topic_id,
                created_at,
                removed_at,
                category,
            } => {
                if let Some(r) = removed_at {
                    if r < created_at {
                        return Err(Error::data(format!(
                            "topic {topic_id}: removed_at {r} precedes created_at {created_at}"
                        )));
                    }
                }
                if headers.insert(topic_id.clone(), ()).is_some() {
                    return Err(Error::data(format!(
                        "topic {topic_id} has two header lines"
                    )));
                }
                pending.entry(topic_id.clone()).or_default();
                topics.insert(
                    topic_id,
                    Topic {
                        created_at,
                        removed_at,
                        category,
                        comments: Vec::new(),
                    },
                );
            }
            Record::Comment { topic_id, comment } => {
                pending.entry(topic_id).or_default().push(comment);
            }
        }
    }

    let mut report = ParseReport::default();
    let mut ordered: IndexMap<String, Topic> = IndexMap::new();
    for (topic_id, mut comments) in pending {
        let mut topic = match topics.swap_remove(&topic_id) {
            Some(t) => t,
            None => {
                report.missing_header.push(topic_id.clone());
                Topic {
                    created_at: comments.iter().map(|c| c.ts).min().unwrap_or(0),
                    ..Topic::default()
                }
            }
        };
        let mut seen: HashMap<String, usize> = HashMap::new();
        for c in &comments {
            if let Some(first) = seen.insert(c.comment_id.clone(), c.line) {
                return Err(Error::Structural {
                    line: c.line,
                    message: format!(
                        "duplicate comment id {:?} in topic {topic_id} (first at line {first})",
                        c.comment_id
                    ),
                });
            }
        }
        comments.retain(|c| {
            let keep = c.ts >= topic.created_at;
            if !keep {
                report.dropped_early.push(c.line);
            }
            keep
        });
        comments.sort_by_key(|c| (c.ts, c.line));
        let position: HashMap<&str, usize> = comments
            .iter()
            .enumerate()
            .map(|(i, c)| (c.comment_id.as_str(), i))
            .collect();
        let mut fixes = Vec::new();
        for (i, c) in comments.iter().enumerate() {
            if c.parent_id.is_empty() {
                continue;
            }
            match position.get(c.parent_id.as_str()) {
                Some(&p) if p < i => {}
                _ => {
                    if options.strict_parents {
                        return Err(Error::Structural {
                            line: c.line,
                            message: format!(
                                "comment {:?} in topic {topic_id} replies to unknown or later comment {:?}",
                                c.comment_id, c.parent_id
                            ),
                        });
                    }
                    fixes.push(i);
                }
            }
        }
        for i in fixes {
            report.reattached.push(comments[i].line);
            comments[i].parent_id.clear();
        }
        topic.comments = comments;
        ordered.insert(topic_id, topic);
    }
    report.dropped_early.sort_unstable();
    report.reattached.sort_unstable();
    Ok(Corpus {
        topics: ordered,
        report,
    })
}

#[derive(Serialize)]
struct TopicLine<'a> {
    kind: &'static str,
    topic_id: &'a str,
    created_at: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    removed_at: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    category: Option<&'a str>,
}

#[derive(Serialize)]
struct CommentLine<'a> {
    topic_id: &'a str,
    comment_id: &'a str,
    parent_id: &'a str,
    user_id: &'a str,
    ts: i64,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn comment_count(&self) -> usize {
        self.topics.values().map(|t| t.comments.len()).sum()
    }

    /// Corpus view of simulated threads: topic `k` is created at
    /// `created_at[k]` (seconds) and removed at the end of its exposure;
    /// comment times are rounded to whole seconds.
    pub fn from_threads(ids: &[String], created_at: &[i64], threads: &[Thread]) -> Corpus {
        let mut topics = IndexMap::new();
        for ((id, &created), thread) in ids.iter().zip(created_at).zip(threads) {
            let comments = thread
                .events
                .iter()
                .skip(1)
                .map(|e| RawComment {
                    comment_id: e.id.to_string(),
                    parent_id: if e.parent == 0 {
                        String::new()
                    } else {
                        e.parent.to_string()
                    },
                    user_id: e.user.map(|u| format!("u{u}")).unwrap_or_default(),
                    ts: created + to_seconds(e.time),
                    line: 0,
                })
                .collect();
            topics.insert(
                id.clone(),
                Topic {
                    created_at: created,
                    removed_at: Some(created + to_seconds(thread.exposure)),
                    category: None,
                    comments,
                },
            );
        }
        Corpus {
            topics,
            report: ParseReport::default(),
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for (id, topic) in &self.topics {
            let header = TopicLine {
                kind: "topic",
                topic_id: id,
                created_at: topic.created_at,
                removed_at: topic.removed_at,
                category: topic.category.as_deref(),
            };
            serde_json::to_writer(&mut w, &header)?;
            w.write_all(b"\n")?;
            for c in &topic.comments {
                let line = CommentLine {
                    topic_id: id,
                    comment_id: &c.comment_id,
                    parent_id: &c.parent_id,
                    user_id: &c.user_id,
                    ts: c.ts,
                };
                serde_json::to_writer(&mut w, &line)?;
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let with_category = self.topics.values().any(|t| t.category.is_some());
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec![
            "kind",
            "topic_id",
            "comment_id",
            "parent_id",
            "user_id",
            "ts",
            "created_at",
            "removed_at",
        ];
        if with_category {
            header.push("category");
        }
        wtr.write_record(&header)?;
        for (id, topic) in &self.topics {
            let mut row = vec![
                "topic".to_string(),
                id.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                topic.created_at.to_string(),
                topic.removed_at.map(|r| r.to_string()).unwrap_or_default(),
            ];
            if with_category {
                row.push(topic.category.clone().unwrap_or_default());
            }
            wtr.write_record(&row)?;
            for c in &topic.comments {
                let mut row = vec![
                    "comment".to_string(),
                    id.clone(),
                    c.comment_id.clone(),
                    c.parent_id.clone(),
                    c.user_id.clone(),
                    c.ts.to_string(),
                    String::new(),
                    String::new(),
                ];
                if with_category {
                    row.push(String::new());
                }
                wtr.write_record(&row)?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write<W: Write>(&self, w: W, format: Format) -> Result<()> {
        match format {
            Format::Jsonl => self.write_jsonl(w),
            Format::Csv => self.write_csv(w),
        }
    }
}

/// Round a duration in minutes to whole seconds.
pub fn to_seconds(minutes: f64) -> i64 {
    (minutes * SECONDS_PER_UNIT).round() as i64
}

/// Pooled waiting times and what was left out.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WaitingTimes {
    /// Minutes, grouped by user (users in sorted order).
    pub samples: Vec<f64>,
    pub zero_gaps_dropped: usize,
    pub users: usize,
}

/// Gaps between consecutive comments of each user across the whole corpus,
/// pooled over users. Comments without a user id are ignored.
pub fn waiting_times(corpus: &Corpus) -> WaitingTimes {
    let mut by_user: BTreeMap<&str, Vec<i64>> = BTreeMap::new();
    for topic in corpus.topics.values() {
        for c in &topic.comments {
            if !c.user_id.is_empty() {
                by_user.entry(c.user_id.as_str()).or_default().push(c.ts);
            }
        }
    }
    let mut out = WaitingTimes {
        users: by_user.len(),
        ..WaitingTimes::default()
    };
    for stamps in by_user.values_mut() {
        stamps.sort_unstable();
        for w in stamps.windows(2) {
            let gap = w[1] - w[0];
            if gap == 0 {
                out.zero_gaps_dropped += 1;
            } else {
                out.samples.push(gap as f64 / SECONDS_PER_UNIT);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExposureDurations {
    /// Minutes, in topic order.
    pub samples: Vec<f64>,
    /// Topics without a removal stamp, or removed at creation.
    pub skipped: usize,
}

pub fn exposure_durations(corpus: &Corpus) -> ExposureDurations {
    let mut out = ExposureDurations::default();
    for topic in corpus.topics.values() {
        match topic.exposure() {
            Some(t) if t > 0.0 => out.samples.push(t),
            _ => out.skipped += 1,
        }
    }
    out
}

/// Earliest comment time at which the cumulative count reaches
/// `q · (final count)`, i.e. the comment at sorted index `ceil(q n) - 1`.
pub fn detect_inflection(times: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::param(format!("q must lie in (0, 1], got {q}")));
    }
    if times.len() < 5 {
        return Err(Error::data(format!(
            "inflection detection needs at least 5 comments, got {}",
            times.len()
        )));
    }
    let mut xs = times.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(crate::analytics::empirical_quantile(&xs, q))
}

/// Share of comments at or before `inflection`.
pub fn before_after_ratio(times: &[f64], inflection: f64) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::data(
            "before/after ratio of a topic without comments",
        ));
    }
    if !(inflection >= 0.0) {
        return Err(Error::param(format!(
            "inflection must be >= 0, got {inflection}"
        )));
    }
    let before = times.iter().filter(|&&t| t <= inflection).count();
    Ok(before as f64 / times.len() as f64)
}
