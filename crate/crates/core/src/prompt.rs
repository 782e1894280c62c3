//! Few-shot prompt rendering (flat completion text or chat messages) and
//! correction extraction from raw model output.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::SelectionResult;
use crate::treebank::Corpus;

pub const ERR_OPEN: &str = "<erroneous sentence>";
pub const ERR_CLOSE: &str = "</erroneous sentence>";
pub const COR_OPEN: &str = "<corrected sentence>";
pub const COR_CLOSE: &str = "</corrected sentence>";
const TAGS: [&str; 4] = [ERR_OPEN, ERR_CLOSE, COR_OPEN, COR_CLOSE];

pub const COMPLETION_INSTRUCTION: &str = "There is an erroneous sentence between '<erroneous sentence>' and \
'</erroneous sentence>'. Then grammatical errors in the erroneous sentence will be corrected. The corrected \
version will be between '<corrected sentence>' and '</corrected sentence>'.";

pub const CHAT_SYSTEM: &str = "You are a grammar correction assistant. The user will give you a sentence with \
grammatical errors (between '<erroneous sentence>' and '</erroneous sentence>'). You need to correct the sentence \
(between '<corrected sentence>' and '</corrected sentence>'). Requirements: 1. Make as few changes as possible. \
2. Make sure the sentence has the same meaning as the original sentence. 3. If there is no error, just output \
'No errors found'.";

pub const NO_ERRORS: &str = "No errors found";

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("sentence contains the literal tag {tag:?}: {sentence:?}")]
    TagCollision { tag: &'static str, sentence: String },
    #[error("query {query}: example id {id} is outside the training corpus")]
    UnknownExample { query: usize, id: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    Completion,
    Chat,
}

impl FromStr for PromptStyle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "completion" => Ok(PromptStyle::Completion),
            "chat" => Ok(PromptStyle::Chat),
            _ => Err(format!("unknown prompt style {s:?} (completion, chat)")),
        }
    }
}

impl fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptStyle::Completion => "completion",
            PromptStyle::Chat => "chat",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

fn check(sentence: &str) -> Result<(), PromptError> {
    match TAGS.iter().find(|t| sentence.contains(*t)) {
        Some(tag) => Err(PromptError::TagCollision {
            tag,
            sentence: sentence.to_owned(),
        }),
        None => Ok(()),
    }
}

fn erroneous(s: &str) -> String {
    format!("{ERR_OPEN} {s} {ERR_CLOSE}")
}

fn corrected(s: &str) -> String {
    format!("{COR_OPEN} {s} {COR_CLOSE}")
}

/// Instruction, one erroneous/corrected line pair per example, the test
/// source, and a final open `<corrected sentence>` tag (no trailing
/// newline).
pub fn build_completion_prompt<S: AsRef<str>>(examples: &[(S, S)], test_source: &str) -> Result<String, PromptError> {
    let mut lines = vec![COMPLETION_INSTRUCTION.to_owned()];
    for (e, c) in examples {
        let (e, c) = (e.as_ref(), c.as_ref());
        check(e)?;
        check(c)?;
        lines.push(erroneous(e));
        lines.push(corrected(c));
    }
    check(test_source)?;
    lines.push(erroneous(test_source));
    lines.push(COR_OPEN.to_owned());
    Ok(lines.join("\n"))
}

/// System message, a user/assistant pair per example, and the test source
/// as the final user message.
pub fn build_chat_prompt<S: AsRef<str>>(examples: &[(S, S)], test_source: &str) -> Result<Vec<ChatMessage>, PromptError> {
    let mut msgs = vec![ChatMessage::new(Role::System, CHAT_SYSTEM)];
    for (e, c) in examples {
        let (e, c) = (e.as_ref(), c.as_ref());
        check(e)?;
        check(c)?;
        msgs.push(ChatMessage::new(Role::User, erroneous(e)));
        msgs.push(ChatMessage::new(Role::Assistant, corrected(c)));
    }
    check(test_source)?;
    msgs.push(ChatMessage::new(Role::User, erroneous(test_source)));
    Ok(msgs)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prompt {
    Completion(String),
    Chat(Vec<ChatMessage>),
}

impl Prompt {
    pub fn build<S: AsRef<str>>(style: PromptStyle, examples: &[(S, S)], test_source: &str) -> Result<Self, PromptError> {
        Ok(match style {
            PromptStyle::Completion => Prompt::Completion(build_completion_prompt(examples, test_source)?),
            PromptStyle::Chat => Prompt::Chat(build_chat_prompt(examples, test_source)?),
        })
    }

    pub fn style(&self) -> PromptStyle {
        match self {
            Prompt::Completion(_) => PromptStyle::Completion,
            Prompt::Chat(_) => PromptStyle::Chat,
        }
    }

    /// Wire messages: a completion prompt becomes one user message.
    pub fn messages(&self) -> Vec<ChatMessage> {
        match self {
            Prompt::Completion(text) => vec![ChatMessage::new(Role::User, text.clone())],
            Prompt::Chat(m) => m.clone(),
        }
    }

    /// Dump form: the plain text for completion prompts, one JSON message
    /// per line for chat prompts.
    pub fn render(&self) -> String {
        match self {
            Prompt::Completion(text) => text.clone(),
            Prompt::Chat(msgs) => msgs
                .iter()
                .map(|m| serde_json::to_string(m).expect("plain struct") + "\n")
                .collect(),
        }
    }

    pub fn file_extension(&self) -> &'static str {
        match self {
            Prompt::Completion(_) => "txt",
            Prompt::Chat(_) => "jsonl",
        }
    }
}

/// Prompt for one query from its selection. Chosen examples are listed most
/// similar first unless `most_similar_last` is set.
pub fn prompt_for_selection(
    style: PromptStyle,
    selection: &SelectionResult,
    train: &Corpus,
    test_source: &str,
    most_similar_last: bool,
) -> Result<Prompt, PromptError> {
    let mut pairs = Vec::with_capacity(selection.chosen.len());
    for c in &selection.chosen {
        let ex = train.examples.get(c.id).ok_or(PromptError::UnknownExample {
            query: selection.query_id,
            id: c.id,
        })?;
        pairs.push((ex.source.as_str(), ex.target.as_str()));
    }
    if most_similar_last {
        pairs.reverse();
    }
    Prompt::build(style, &pairs, test_source)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionKind {
    /// Text between the first open and close correction tags.
    Tagged,
    /// Open tag without a close tag; text up to a blank line or the end.
    Unclosed,
    /// Close tag without an open tag (the prompt supplied the open tag).
    CloseOnly,
    /// The model reported no errors; the source is returned.
    NoErrors,
    /// No tags; the first non-empty line.
    FirstLine,
    /// Nothing usable; the source is returned.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extracted {
    pub correction: String,
    pub kind: ExtractionKind,
}

fn tagged(raw: &str) -> Option<(String, ExtractionKind)> {
    if let Some(open) = raw.find(COR_OPEN) {
        let rest = &raw[open + COR_OPEN.len()..];
        return Some(match rest.find(COR_CLOSE) {
            Some(close) => (rest[..close].trim().to_owned(), ExtractionKind::Tagged),
            None => {
                let end = rest.find("\n\n").unwrap_or(rest.len());
                (rest[..end].trim().to_owned(), ExtractionKind::Unclosed)
            }
        });
    }
    raw.find(COR_CLOSE)
        .map(|close| (raw[..close].trim().to_owned(), ExtractionKind::CloseOnly))
}

/// Correction text from raw model output. Precedence: tagged text, then a
/// "No errors found" report, then the first non-empty line; otherwise the
/// source is returned and the event flagged as [`ExtractionKind::Empty`].
pub fn extract_correction(raw_output: &str, test_source: &str) -> Extracted {
    if let Some((text, kind)) = tagged(raw_output) {
        if !text.is_empty() {
            return Extracted { correction: text, kind };
        }
    }
    if raw_output.to_lowercase().contains(&NO_ERRORS.to_lowercase()) {
        return Extracted {
            correction: test_source.to_owned(),
            kind: ExtractionKind::NoErrors,
        };
    }
    let first = raw_output
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !TAGS.contains(l));
    match first {
        Some(line) if tagged(raw_output).is_none() => Extracted {
            correction: line.to_owned(),
            kind: ExtractionKind::FirstLine,
        },
        _ => Extracted {
            correction: test_source.to_owned(),
            kind: ExtractionKind::Empty,
        },
    }
}
