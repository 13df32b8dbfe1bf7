//! The JSON elicitation document: network, compatibility judgments, anchor
//! distributions and free-form metadata.
//!
//! Loading is a two-stage affair. The text is first deserialized into plain
//! `Raw*` records, tracking field paths and byte offsets so that every error
//! can be pointed at; the records are then resolved into the core types,
//! which is where structural validation happens.
//!
//! The canonical form written by [`ElicitationDocument::to_canonical_bytes`]
//! is pretty-printed JSON with two-space indentation, keys in schema order,
//! unknown keys (lenient mode only) after the known ones, and a trailing
//! newline. Loading canonical bytes and saving again reproduces them exactly.

use std::cell::Cell;
use std::fmt;
use std::io;
use std::rc::Rc;

use cptgen_core::{
    AnchorSet, CompatibilityMap, Distribution, ElicitError, NetworkSpec, ParentSpec,
    ParentalConfiguration, Subject,
};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Unknown fields are an error.
    #[default]
    Strict,
    /// Unknown fields are kept and written back on save.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub version: String,
    pub network: RawNetwork,
    pub compatibility: RawCompatibility,
    pub anchors: Vec<RawAnchor>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub metadata: IndexMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawNetwork {
    pub child: RawVariable,
    pub parents: Vec<RawParent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawVariable {
    pub name: String,
    pub states: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawParent {
    pub name: String,
    pub states: Vec<String>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RawCompatibility {
    /// `Comp(Y_i = t) = {Y_1 = t, …, Y_n = t}` for every state not covered
    /// by an explicit entry.
    #[serde(default, skip_serializing_if = "is_false")]
    pub diagonal: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<RawEntry>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEntry {
    pub parent: String,
    pub state: String,
    pub configuration: IndexMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawAnchor {
    pub configuration: IndexMap<String, String>,
    pub distribution: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Not well-formed JSON.
    Syntax,
    /// Well-formed, but the wrong shape: missing or mistyped field, or an
    /// unknown field in strict mode.
    Schema,
    /// Well-shaped, but the content does not describe a valid elicitation.
    Invalid,
}

/// One located problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Problem {
    /// Field path such as `network.parents[1].weight`; empty for the root.
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    pub code: String,
    pub message: String,
}

impl Problem {
    fn at(path: impl Into<String>, code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            line: None,
            column: None,
            code: code.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = if self.path.is_empty() { "<root>" } else { &self.path };
        write!(f, "{path}")?;
        if let (Some(line), Some(column)) = (self.line, self.column) {
            write!(f, " (line {line}, column {column})")?;
        }
        write!(f, ": {} [{}]", self.message, self.code)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentError {
    pub kind: ErrorKind,
    pub problems: Vec<Problem>,
}

impl DocumentError {
    fn invalid(problems: Vec<Problem>) -> Self {
        Self {
            kind: ErrorKind::Invalid,
            problems,
        }
    }
}

impl fmt::Display for DocumentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ErrorKind::Syntax => "malformed JSON",
            ErrorKind::Schema => "schema violation",
            ErrorKind::Invalid => "invalid document",
        };
        write!(f, "{what}")?;
        for p in &self.problems {
            write!(f, "\n  {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for DocumentError {}

#[derive(Debug, Clone, PartialEq)]
enum Segment {
    Key(String),
    Index(usize),
}

fn render_path(segments: &[Segment]) -> String {
    let mut out = String::new();
    for seg in segments {
        match seg {
            Segment::Key(k) => {
                if !out.is_empty() {
                    out.push('.');
                }
                out.push_str(k);
            }
            Segment::Index(i) => out.push_str(&format!("[{i}]")),
        }
    }
    out
}

fn segments_of(path: &serde_ignored::Path<'_>, out: &mut Vec<Segment>) {
    use serde_ignored::Path;
    match path {
        Path::Root => {}
        Path::Seq { parent, index } => {
            segments_of(parent, out);
            out.push(Segment::Index(*index));
        }
        Path::Map { parent, key } => {
            segments_of(parent, out);
            out.push(Segment::Key(key.clone()));
        }
        Path::Some { parent } | Path::NewtypeStruct { parent } | Path::NewtypeVariant { parent } => {
            segments_of(parent, out)
        }
    }
}

/// A field present in the source but not in the schema.
#[derive(Debug, Clone, PartialEq)]
struct Extra {
    segments: Vec<Segment>,
    value: Value,
}

/// Byte source that reports how far the parser has read. serde_json pulls
/// from an `io::Read` one byte at a time, so the count is exact.
struct CountingReader<'a> {
    bytes: &'a [u8],
    consumed: Rc<Cell<usize>>,
}

impl io::Read for CountingReader<'_> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let start = self.consumed.get();
        let n = buf.len().min(self.bytes.len() - start);
        buf[..n].copy_from_slice(&self.bytes[start..start + n]);
        self.consumed.set(start + n);
        Ok(n)
    }
}

fn line_column(bytes: &[u8], offset: usize) -> (usize, usize) {
    let before = &bytes[..offset.min(bytes.len())];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let line_start = before.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    (line, offset - line_start + 1)
}

/// Walks back from just after `"key":` to the key's opening quote.
fn key_start(bytes: &[u8], after_colon: usize) -> usize {
    let mut i = after_colon.min(bytes.len());
    while i > 0 && bytes[i - 1].is_ascii_whitespace() {
        i -= 1;
    }
    if i > 0 && bytes[i - 1] == b':' {
        i -= 1;
    }
    while i > 0 && bytes[i - 1].is_ascii_whitespace() {
        i -= 1;
    }
    if i > 0 && bytes[i - 1] == b'"' {
        i -= 1;
        while i > 0 {
            i -= 1;
            if bytes[i] == b'"' && (i == 0 || bytes[i - 1] != b'\\') {
                return i;
            }
        }
    }
    after_colon
}

fn parse_raw(bytes: &[u8], strictness: Strictness) -> Result<(RawDocument, Vec<Extra>), DocumentError> {
    let consumed = Rc::new(Cell::new(0));
    let reader = CountingReader {
        bytes,
        consumed: Rc::clone(&consumed),
    };
    let mut de = serde_json::Deserializer::from_reader(reader);
    let mut ignored: Vec<(Vec<Segment>, usize)> = Vec::new();
    let parsed = {
        let mut record = |path: serde_ignored::Path<'_>| {
            let mut segments = Vec::new();
            segments_of(&path, &mut segments);
            ignored.push((segments, consumed.get()));
        };
        let tracked = serde_ignored::Deserializer::new(&mut de, &mut record);
        serde_path_to_error::deserialize::<_, RawDocument>(tracked)
    };
    let outcome = parsed
        .map_err(|err| (err.path().to_string(), err.into_inner()))
        .and_then(|raw| de.end().map(|_| raw).map_err(|e| (String::new(), e)));
    let raw = match outcome {
        Ok(raw) => raw,
        Err((path, inner)) => {
            let kind = match inner.classify() {
                serde_json::error::Category::Data => ErrorKind::Schema,
                _ => ErrorKind::Syntax,
            };
            let code = if kind == ErrorKind::Syntax { "syntax" } else { "schema" };
            return Err(DocumentError {
                kind,
                problems: vec![Problem {
                    path: if path == "." { String::new() } else { path },
                    line: Some(inner.line()),
                    column: Some(inner.column()),
                    code: code.into(),
                    message: strip_position(&inner.to_string()),
                }],
            });
        }
    };

    match strictness {
        Strictness::Strict if !ignored.is_empty() => Err(DocumentError {
            kind: ErrorKind::Schema,
            problems: ignored
                .iter()
                .map(|(segments, offset)| {
                    let (line, column) = line_column(bytes, key_start(bytes, *offset));
                    Problem {
                        path: render_path(segments),
                        line: Some(line),
                        column: Some(column),
                        code: "unknown_field".into(),
                        message: "unknown field".into(),
                    }
                })
                .collect(),
        }),
        Strictness::Strict => Ok((raw, Vec::new())),
        Strictness::Lenient => {
            if ignored.is_empty() {
                return Ok((raw, Vec::new()));
            }
            // Second pass only when something needs keeping.
            let tree: Value = serde_json::from_slice(bytes).expect("already parsed once");
            let extras = ignored
                .into_iter()
                .filter_map(|(segments, _)| {
                    lookup(&tree, &segments).map(|value| Extra {
                        value: value.clone(),
                        segments,
                    })
                })
                .collect();
            Ok((raw, extras))
        }
    }
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

fn lookup<'v>(tree: &'v Value, segments: &[Segment]) -> Option<&'v Value> {
    segments.iter().try_fold(tree, |node, seg| match seg {
        Segment::Key(k) => node.get(k),
        Segment::Index(i) => node.get(*i),
    })
}

fn insert(tree: &mut Value, segments: &[Segment], value: Value) {
    let Some((Segment::Key(last), parents)) = segments.split_last() else {
        return;
    };
    let mut node = tree;
    for seg in parents {
        let next = match seg {
            Segment::Key(k) => node.get_mut(k),
            Segment::Index(i) => node.get_mut(*i),
        };
        match next {
            Some(n) => node = n,
            None => return,
        }
    }
    if let Value::Object(map) = node {
        map.entry(last.clone()).or_insert(value);
    }
}

/// A loaded, validated elicitation document.
#[derive(Debug, Clone)]
pub struct ElicitationDocument {
    raw: RawDocument,
    extras: Vec<Extra>,
    spec: NetworkSpec,
    anchors: AnchorSet,
    /// Resolved configuration of each `raw.anchors` record.
    anchor_configs: Vec<ParentalConfiguration>,
    canonical: Vec<u8>,
    revision: String,
}

impl PartialEq for ElicitationDocument {
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical
    }
}

impl ElicitationDocument {
    pub fn load(bytes: &[u8], strictness: Strictness) -> Result<Self, DocumentError> {
        let (raw, extras) = parse_raw(bytes, strictness)?;
        Self::build(raw, extras)
    }

    pub fn load_str(text: &str, strictness: Strictness) -> Result<Self, DocumentError> {
        Self::load(text.as_bytes(), strictness)
    }

    /// Resolves the raw records against the core model.
    pub fn from_raw(raw: RawDocument) -> Result<Self, DocumentError> {
        Self::build(raw, Vec::new())
    }

    /// Document describing an already-built model. A diagonal map is written
    /// as the directive; anything else as explicit entries.
    pub fn from_model(anchors: &AnchorSet, metadata: IndexMap<String, Value>) -> Result<Self, DocumentError> {
        let spec = anchors.spec();
        let labels = |config: &ParentalConfiguration| -> IndexMap<String, String> {
            config
                .labels(spec)
                .map(|(p, s)| (p.to_string(), s.to_string()))
                .collect()
        };
        let compat = anchors.compat();
        let compatibility = if compat.is_diagonal() {
            RawCompatibility {
                diagonal: true,
                entries: Vec::new(),
            }
        } else {
            RawCompatibility {
                diagonal: false,
                entries: compat
                    .entries()
                    .map(|((p, s), config)| RawEntry {
                        parent: spec.parents[p].name.clone(),
                        state: spec.parents[p].states[s].clone(),
                        configuration: labels(config),
                    })
                    .collect(),
            }
        };
        let raw = RawDocument {
            version: FORMAT_VERSION.into(),
            network: RawNetwork {
                child: RawVariable {
                    name: spec.child_name.clone(),
                    states: spec.child_states.clone(),
                },
                parents: spec
                    .parents
                    .iter()
                    .map(|p| RawParent {
                        name: p.name.clone(),
                        states: p.states.clone(),
                        weight: p.weight,
                    })
                    .collect(),
            },
            compatibility,
            anchors: compat
                .distinct_configurations()
                .into_iter()
                .map(|config| RawAnchor {
                    configuration: labels(config),
                    distribution: anchors.get(config).expect("image anchor").values().to_vec(),
                })
                .collect(),
            metadata,
        };
        Self::from_raw(raw)
    }

    fn build(raw: RawDocument, extras: Vec<Extra>) -> Result<Self, DocumentError> {
        if raw.version != FORMAT_VERSION {
            return Err(DocumentError::invalid(vec![Problem::at(
                "version",
                "unsupported_version",
                format!("unsupported format version '{}' (expected '{FORMAT_VERSION}')", raw.version),
            )]));
        }
        let spec = build_spec(&raw.network)?;
        let compat = build_compat(&spec, &raw.compatibility)?;
        let (anchors, anchor_configs) = build_anchors(&spec, compat, &raw.anchors)?;

        let mut tree = serde_json::to_value(&raw).expect("raw document serializes");
        for extra in &extras {
            insert(&mut tree, &extra.segments, extra.value.clone());
        }
        let mut canonical = serde_json::to_vec_pretty(&tree).expect("value serializes");
        canonical.push(b'\n');
        let revision = hex::encode(Sha256::digest(&canonical));

        Ok(Self {
            raw,
            extras,
            spec,
            anchors,
            anchor_configs,
            canonical,
            revision,
        })
    }

    pub fn raw(&self) -> &RawDocument {
        &self.raw
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn anchors(&self) -> &AnchorSet {
        &self.anchors
    }

    pub fn metadata(&self) -> &IndexMap<String, Value> {
        &self.raw.metadata
    }

    /// Whether any unknown fields were carried over from a lenient load.
    pub fn has_extras(&self) -> bool {
        !self.extras.is_empty()
    }

    pub fn to_canonical_bytes(&self) -> &[u8] {
        &self.canonical
    }

    /// The canonical form as a JSON value.
    pub fn to_value(&self) -> Value {
        serde_json::from_slice(&self.canonical).expect("canonical bytes are JSON")
    }

    /// SHA-256 of the canonical bytes, lowercase hex.
    pub fn revision(&self) -> &str {
        &self.revision
    }

    /// Copy with the parent weights replaced (parent order). The values are
    /// stored as given; validation applies as on load.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self, DocumentError> {
        if weights.len() != self.raw.network.parents.len() {
            return Err(DocumentError::invalid(vec![Problem::at(
                "network.parents",
                "weight_count",
                format!(
                    "expected {} weights, got {}",
                    self.raw.network.parents.len(),
                    weights.len()
                ),
            )]));
        }
        let mut raw = self.raw.clone();
        for (parent, &w) in raw.network.parents.iter_mut().zip(weights) {
            parent.weight = w;
        }
        Self::build(raw, self.extras.clone())
    }

    /// Copy with the anchor stored for `config` replaced.
    pub fn with_anchor(&self, config: &ParentalConfiguration, dist: &Distribution) -> Result<Self, DocumentError> {
        let Some(index) = self.anchor_configs.iter().position(|c| c == config) else {
            return Err(DocumentError::invalid(vec![Problem::at(
                "anchors",
                "unused_anchor",
                format!(
                    "{} is not a compatible configuration",
                    config.display(&self.spec)
                ),
            )]));
        };
        let mut raw = self.raw.clone();
        raw.anchors[index].distribution = dist.values().to_vec();
        Self::build(raw, self.extras.clone())
    }

    /// Resolves a `{parent: state}` map into a configuration of this network.
    pub fn configuration(&self, labels: &IndexMap<String, String>) -> Result<ParentalConfiguration, String> {
        resolve_configuration(&self.spec, labels)
    }
}

/// Path of the document field a spec violation is about.
pub fn subject_path(subject: Subject) -> String {
    match subject {
        Subject::Child => "network.child".into(),
        Subject::Parents => "network.parents".into(),
        Subject::Parent(i) => format!("network.parents[{i}]"),
        Subject::Weights => "network.parents[*].weight".into(),
    }
}

fn build_spec(network: &RawNetwork) -> Result<NetworkSpec, DocumentError> {
    let spec = NetworkSpec {
        child_name: network.child.name.clone(),
        child_states: network.child.states.clone(),
        parents: network
            .parents
            .iter()
            .map(|p| ParentSpec {
                name: p.name.clone(),
                states: p.states.clone(),
                weight: p.weight,
            })
            .collect(),
    };
    spec.into_valid().map_err(|report| {
        DocumentError::invalid(
            report
                .violations
                .iter()
                .map(|v| Problem::at(subject_path(v.subject), v.code.as_str(), v.message.clone()))
                .collect(),
        )
    })
}

fn resolve_configuration(
    spec: &NetworkSpec,
    labels: &IndexMap<String, String>,
) -> Result<ParentalConfiguration, String> {
    ParentalConfiguration::from_labels(spec, labels.iter().map(|(p, s)| (p.as_str(), s.as_str())))
        .map_err(|e| e.to_string())
}

fn build_compat(spec: &NetworkSpec, raw: &RawCompatibility) -> Result<CompatibilityMap, DocumentError> {
    if raw.diagonal && raw.entries.is_empty() {
        return CompatibilityMap::diagonal(spec)
            .map_err(|e| DocumentError::invalid(vec![elicit_problem("compatibility.diagonal", &e)]));
    }

    let mut problems = Vec::new();
    let mut explicit = Vec::new();
    for (i, entry) in raw.entries.iter().enumerate() {
        let here = format!("compatibility.entries[{i}]");
        let Some(p) = spec.parent_index(&entry.parent) else {
            problems.push(Problem::at(
                format!("{here}.parent"),
                "unknown_parent",
                format!("unknown parent '{}'", entry.parent),
            ));
            continue;
        };
        let Some(s) = spec.state_index(p, &entry.state) else {
            problems.push(Problem::at(
                format!("{here}.state"),
                "unknown_state",
                format!("parent '{}' has no state '{}'", entry.parent, entry.state),
            ));
            continue;
        };
        match resolve_configuration(spec, &entry.configuration) {
            Ok(config) => explicit.push(((p, s), config)),
            Err(message) => problems.push(Problem::at(format!("{here}.configuration"), "bad_configuration", message)),
        }
    }
    if !problems.is_empty() {
        return Err(DocumentError::invalid(problems));
    }

    if raw.diagonal {
        for (p, parent) in spec.parents.iter().enumerate() {
            for s in 0..parent.arity() {
                if explicit.iter().any(|(key, _)| *key == (p, s)) {
                    continue;
                }
                match ParentalConfiguration::uniform(spec, s) {
                    Ok(config) => explicit.push(((p, s), config)),
                    Err(_) => {
                        return Err(DocumentError::invalid(vec![Problem::at(
                            "compatibility.diagonal",
                            "one_to_one_unavailable",
                            format!(
                                "one-to-one correspondence unavailable for {}={}; supply an explicit entry",
                                parent.name, parent.states[s]
                            ),
                        )]))
                    }
                }
            }
        }
    }

    CompatibilityMap::new(spec, explicit)
        .map_err(|e| DocumentError::invalid(vec![elicit_problem("compatibility", &e)]))
}

fn elicit_code(err: &ElicitError) -> &'static str {
    match err {
        ElicitError::UnknownParent(_) => "unknown_parent",
        ElicitError::UnknownState { .. } => "unknown_state",
        ElicitError::OneToOneUnavailable(_) => "one_to_one_unavailable",
        ElicitError::MissingEntries(_) => "missing_entries",
        ElicitError::DuplicateEntry(_) => "duplicate_entry",
        ElicitError::SelfInconsistent { .. } => "self_inconsistent",
        ElicitError::MissingAnchors(_) => "missing_anchors",
        ElicitError::UnusedAnchor(_) => "unused_anchor",
        ElicitError::DuplicateAnchor(_) => "duplicate_anchor",
        ElicitError::AnchorLength { .. } => "anchor_length",
        ElicitError::SpecMismatch => "spec_mismatch",
        ElicitError::Config(_) => "bad_configuration",
    }
}

fn elicit_problem(path: &str, err: &ElicitError) -> Problem {
    Problem::at(path, elicit_code(err), err.to_string())
}

fn build_anchors(
    spec: &NetworkSpec,
    compat: CompatibilityMap,
    raw: &[RawAnchor],
) -> Result<(AnchorSet, Vec<ParentalConfiguration>), DocumentError> {
    let mut problems = Vec::new();
    let mut resolved = Vec::with_capacity(raw.len());
    for (i, record) in raw.iter().enumerate() {
        let config = match resolve_configuration(spec, &record.configuration) {
            Ok(c) => c,
            Err(message) => {
                problems.push(Problem::at(format!("anchors[{i}].configuration"), "bad_configuration", message));
                continue;
            }
        };
        match Distribution::with_len(record.distribution.clone(), spec.child_arity()) {
            Ok(dist) => resolved.push((config, dist)),
            Err(e) => problems.push(Problem::at(format!("anchors[{i}].distribution"), "bad_distribution", e.to_string())),
        }
    }
    if !problems.is_empty() {
        return Err(DocumentError::invalid(problems));
    }
    let configs: Vec<ParentalConfiguration> = resolved.iter().map(|(c, _)| c.clone()).collect();
    let anchors = AnchorSet::new(compat, resolved).map_err(|e| {
        let path = match &e {
            ElicitError::UnusedAnchor(label) | ElicitError::DuplicateAnchor(label) => configs
                .iter()
                .rposition(|c| c.display(spec).to_string() == *label)
                .map_or_else(|| "anchors".to_string(), |i| format!("anchors[{i}]")),
            _ => "anchors".to_string(),
        };
        DocumentError::invalid(vec![elicit_problem(&path, &e)])
    })?;
    Ok((anchors, configs))
}
