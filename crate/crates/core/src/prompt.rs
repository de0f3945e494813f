//! Prompt templates for the matching task.
//!
//! A [`PromptDesign`] fixes the framing (generic entities or product offers),
//! the wording of the question, whether the answer is constrained to Yes/No,
//! the serialized attributes and whether the offers come before the question.
//! [`build_messages`] turns a design, a query pair and optional
//! demonstrations into a chat transcript: one system turn, one
//! user/assistant exchange per demonstration and the final query.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{serialize_pair, AttributeSet, CandidatePair};

pub const FORCED_ANSWER_SENTENCE: &str = "Answer with 'Yes' if they do and 'No' if they do not.";

const DEFAULT_RULES: &str = include_str!("../rules/default_rules.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Framing {
    /// Offers are called entities.
    General,
    /// Offers are called products.
    Domain,
}

impl Framing {
    pub fn noun(self) -> &'static str {
        match self {
            Self::General => "entity",
            Self::Domain => "product",
        }
    }

    /// Label used in front of the serialized blocks.
    pub fn block_noun(self) -> &'static str {
        match self {
            Self::General => "Entity",
            Self::Domain => "Product",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wording {
    Complex,
    Simple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerConstraint {
    Free,
    Forced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskPosition {
    TaskFirst,
    ExamplesFirst,
}

/// Natural-language matching rules placed in the system turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    preamble: String,
    rules: Vec<String>,
}

impl RuleSet {
    pub fn new(preamble: impl Into<String>, rules: Vec<String>) -> Result<Self> {
        let preamble = preamble.into().trim().to_string();
        if preamble.is_empty() {
            return Err(Error::Rules("empty preamble".into()));
        }
        if rules.is_empty() {
            return Err(Error::Rules("rule set has no rules".into()));
        }
        for rule in &rules {
            if rule.trim().is_empty() || rule.contains('\n') {
                return Err(Error::Rules(format!("rule must be a single non-empty line: {rule:?}")));
            }
            if sentence_count(rule) > 1 {
                return Err(Error::Rules(format!("rule must be a single sentence: {rule:?}")));
            }
        }
        Ok(Self { preamble, rules })
    }

    /// Parses the rules file format: the first non-empty line is the
    /// preamble, every further non-empty line is one rule.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let preamble = lines.next().ok_or_else(|| Error::Rules("empty rules file".into()))?;
        Self::new(preamble, lines.map(str::to_string).collect())
    }

    /// The rule set shipped with the crate.
    pub fn default_rules() -> Self {
        Self::parse(DEFAULT_RULES).expect("shipped rules file is valid")
    }

    pub fn preamble(&self) -> &str {
        &self.preamble
    }

    pub fn rules(&self) -> &[String] {
        &self.rules
    }

    fn render(&self) -> String {
        let mut out = self.preamble.clone();
        for (i, rule) in self.rules.iter().enumerate() {
            out.push_str(&format!("\n{}. {}", i + 1, rule));
        }
        out
    }
}

// A terminator followed by whitespace and an uppercase letter starts a new sentence.
fn sentence_count(text: &str) -> usize {
    let chars: Vec<char> = text.trim().chars().collect();
    let mut count = 1;
    for w in chars.windows(3) {
        if matches!(w[0], '.' | '!' | '?') && w[1] == ' ' && w[2].is_uppercase() {
            count += 1;
        }
    }
    count
}

pub fn load_rules(path: impl AsRef<Path>) -> Result<RuleSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RuleSet::parse(&text)
}

/// One point of the prompt design space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DesignFields")]
pub struct PromptDesign {
    pub framing: Framing,
    pub wording: Wording,
    pub answer_constraint: AnswerConstraint,
    pub attrs: AttributeSet,
    pub task_position: TaskPosition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<RuleSet>,
}

#[derive(Deserialize)]
struct DesignFields {
    framing: Framing,
    wording: Wording,
    answer_constraint: AnswerConstraint,
    attrs: AttributeSet,
    #[serde(default = "task_first")]
    task_position: TaskPosition,
    #[serde(default)]
    rules: Option<RuleSet>,
}

fn task_first() -> TaskPosition {
    TaskPosition::TaskFirst
}

impl TryFrom<DesignFields> for PromptDesign {
    type Error = Error;

    fn try_from(f: DesignFields) -> Result<Self> {
        let d = PromptDesign::new(f.framing, f.wording, f.answer_constraint, f.attrs, f.task_position)?;
        Ok(match f.rules {
            Some(r) => d.with_rules(r),
            None => d,
        })
    }
}

impl PromptDesign {
    pub fn new(
        framing: Framing,
        wording: Wording,
        answer_constraint: AnswerConstraint,
        attrs: AttributeSet,
        task_position: TaskPosition,
    ) -> Result<Self> {
        if task_position == TaskPosition::ExamplesFirst && attrs != AttributeSet::Title {
            return Err(Error::Prompt(format!(
                "examples-first prompts only support the T attribute set, got {attrs}"
            )));
        }
        Ok(Self { framing, wording, answer_constraint, attrs, task_position, rules: None })
    }

    pub fn with_rules(mut self, rules: RuleSet) -> Self {
        self.rules = Some(rules);
        self
    }

    /// The zero-shot design the in-context and rule experiments compare against.
    pub fn baseline() -> Self {
        Self::new(
            Framing::Domain,
            Wording::Complex,
            AnswerConstraint::Forced,
            AttributeSet::Title,
            TaskPosition::TaskFirst,
        )
        .unwrap()
    }

    /// The fourteen zero-shot design points compared in the prompt design
    /// experiment, in table order.
    pub fn design_grid() -> Vec<PromptDesign> {
        use AnswerConstraint::*;
        use AttributeSet::*;
        use Wording::*;
        let mut out = Vec::new();
        for framing in [Framing::General, Framing::Domain] {
            for (w, a, attrs) in [
                (Complex, Free, Title),
                (Simple, Free, Title),
                (Complex, Forced, Title),
                (Simple, Forced, Title),
                (Simple, Forced, BrandTitle),
                (Simple, Forced, BrandTitlePrice),
            ] {
                out.push(Self::new(framing, w, a, attrs, TaskPosition::TaskFirst).unwrap());
            }
        }
        for w in [Complex, Simple] {
            out.push(Self::new(Framing::Domain, w, Free, Title, TaskPosition::ExamplesFirst).unwrap());
        }
        out
    }

    /// Short label such as `domain-complex-forced-T`.
    pub fn label(&self) -> String {
        let framing = match self.framing {
            Framing::General => "general",
            Framing::Domain => "domain",
        };
        let wording = match self.wording {
            Wording::Complex => "complex",
            Wording::Simple => "simple",
        };
        let answer = match self.answer_constraint {
            AnswerConstraint::Free => "free",
            AnswerConstraint::Forced => "forced",
        };
        let mut label = format!("{framing}-{wording}-{answer}-{}", self.attrs);
        if self.task_position == TaskPosition::ExamplesFirst {
            label = format!("examples-first-{label}");
        }
        if self.rules.is_some() {
            label.push_str("-rules");
        }
        label
    }
}

/// Renders the user turn asking about one pair.
pub fn render_task_question(design: &PromptDesign, pair: &CandidatePair) -> String {
    let noun = design.framing.noun();
    let question = match design.wording {
        Wording::Complex => format!("Do the following two {noun} descriptions refer to the same real-world {noun}?"),
        Wording::Simple => format!("Do the following two {noun} descriptions match?"),
    };
    let blocks = serialize_pair(pair, design.attrs, design.framing.block_noun());
    let mut text = match design.task_position {
        TaskPosition::TaskFirst => format!("{question}\n{blocks}"),
        TaskPosition::ExamplesFirst => format!("{blocks}\n{question}"),
    };
    if design.answer_constraint == AnswerConstraint::Forced {
        text.push('\n');
        text.push_str(FORCED_ANSWER_SENTENCE);
    }
    text
}

pub fn system_message(design: &PromptDesign) -> String {
    let noun = design.framing.noun();
    let mut text =
        format!("You are an assistant that decides whether two {noun} descriptions refer to the same {noun}.");
    if let Some(rules) = &design.rules {
        text.push_str("\n\n");
        text.push_str(&rules.render());
    }
    text
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Handpicked,
    Random,
    Related,
}

/// A labeled pair shown to the model as a solved example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pair: CandidatePair,
    provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    similarity: Option<f64>,
}

impl Demonstration {
    pub fn new(pair: CandidatePair, provenance: Provenance, similarity: Option<f64>) -> Result<Self> {
        if pair.label.is_none() {
            return Err(Error::Prompt(format!("demonstration `{}` has no label", pair.pair_id)));
        }
        match (provenance, similarity) {
            (Provenance::Related, Some(s)) if (0.0..=1.0).contains(&s) => {}
            (Provenance::Related, _) => {
                return Err(Error::Prompt("related demonstrations need a similarity in [0, 1]".into()))
            }
            (_, Some(_)) => {
                return Err(Error::Prompt("only related demonstrations carry a similarity".into()))
            }
            (_, None) => {}
        }
        Ok(Self { pair, provenance, similarity })
    }

    pub fn pair(&self) -> &CandidatePair {
        &self.pair
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn similarity(&self) -> Option<f64> {
        self.similarity
    }

    pub fn is_match(&self) -> bool {
        self.pair.label == Some(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self { role, content: content.into() }
    }
}

/// A chat transcript: one leading system turn, then alternating
/// user/assistant turns, ending on a user turn.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct MessageSequence(Vec<ChatMessage>);

impl MessageSequence {
    pub fn new(messages: Vec<ChatMessage>) -> Result<Self> {
        let Some((first, rest)) = messages.split_first() else {
            return Err(Error::Prompt("empty message sequence".into()));
        };
        if first.role != Role::System {
            return Err(Error::Prompt("first message must be the system message".into()));
        }
        if rest.len() % 2 == 0 {
            return Err(Error::Prompt("message sequence must end with a user message".into()));
        }
        for (i, m) in rest.iter().enumerate() {
            let expected = if i % 2 == 0 { Role::User } else { Role::Assistant };
            if m.role != expected {
                return Err(Error::Prompt(format!("message {} should be {expected}, got {}", i + 1, m.role)));
            }
        }
        Ok(Self(messages))
    }

    pub fn messages(&self) -> &[ChatMessage] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last_user(&self) -> &str {
        &self.0.last().expect("non-empty").content
    }

    /// Plain-text rendering used by the `render` command and prompt goldens.
    pub fn transcript(&self) -> String {
        self.0
            .iter()
            .map(|m| format!("[{}]\n{}", m.role, m.content))
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

impl<'de> Deserialize<'de> for MessageSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let messages = Vec::<ChatMessage>::deserialize(d)?;
        MessageSequence::new(messages).map_err(serde::de::Error::custom)
    }
}

/// Builds the chat transcript for `pair`.
///
/// Demonstrations keep their selection rank within each polarity and are
/// interleaved positive first. Leftovers of the larger polarity go last.
pub fn build_messages(
    design: &PromptDesign,
    pair: &CandidatePair,
    demos: &[Demonstration],
) -> Result<MessageSequence> {
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for d in demos {
        match d.pair.label {
            Some(true) => positives.push(d),
            Some(false) => negatives.push(d),
            None => return Err(Error::Prompt(format!("demonstration `{}` has no label", d.pair.pair_id))),
        }
    }

    let mut ordered = Vec::with_capacity(demos.len());
    let mut pos = positives.into_iter();
    let mut neg = negatives.into_iter();
    loop {
        match (pos.next(), neg.next()) {
            (None, None) => break,
            (p, n) => ordered.extend(p.into_iter().chain(n)),
        }
    }

    let mut messages = Vec::with_capacity(2 * demos.len() + 2);
    messages.push(ChatMessage::new(Role::System, system_message(design)));
    for d in ordered {
        messages.push(ChatMessage::new(Role::User, render_task_question(design, &d.pair)));
        let answer = if d.is_match() { "Yes." } else { "No." };
        messages.push(ChatMessage::new(Role::Assistant, answer));
    }
    messages.push(ChatMessage::new(Role::User, render_task_question(design, pair)));
    MessageSequence::new(messages)
}
