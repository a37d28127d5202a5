//! Direct-translation and post-editing prompts with optional example and
//! glossary blocks.
//!
//! A user message is laid out as
//!
//! ```text
//! [example block]\n\n[glossary block]\n\nSource text (English): {src}\n\n
//! [Machine translation (Dhao): {draft}\n\n]{instruction}
//! ```
//!
//! with absent blocks omitted together with their separator.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::retrieval::{RetrievedExample, RetrievedLexicon};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("source text is empty")]
    EmptySource,
    #[error("post-editing needs a non-empty draft; use direct mode instead")]
    EmptyDraft,
    #[error("not a rendered prompt: {0}")]
    Unparseable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptMode {
    #[serde(rename = "DIRECT")]
    Direct,
    #[serde(rename = "POST_EDIT")]
    PostEdit,
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptMode::Direct => "DIRECT",
            PromptMode::PostEdit => "POST_EDIT",
        })
    }
}

/// Names and background text for the language pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageProfile {
    /// Target language, e.g. `Dhao`.
    pub name: String,
    /// Source language, e.g. `English`.
    pub source_name: String,
    /// Opening paragraph of both system messages.
    pub description: String,
}

const DHAO_DESCRIPTION: &str = "Dhao is a member of the Sumba-Flores branch of the Malayo-Polynesian language family. It is spoken in Ndao Island in the Lesser Sunda Islands in Indonesia by about 5,000 people. It is classified as a member of the Sumba branch of Malayo-Polynesian languages, but may be a Papuan language. It is also known as Ndao, Ndaonese or Ndaundau.";

impl Default for LanguageProfile {
    fn default() -> Self {
        Self::dhao()
    }
}

impl LanguageProfile {
    pub fn dhao() -> Self {
        Self { name: "Dhao".into(), source_name: "English".into(), description: DHAO_DESCRIPTION.into() }
    }

    pub fn direct_system(&self) -> String {
        let (tgt, src) = (&self.name, &self.source_name);
        format!(
            "{}\n\nYou are an expert Bible translator in {tgt} language. Your job is to translate bible verses from {src} to {tgt} language, providing accurate and faithful translations that maintain the meaning and context of the source text. When provided with glossary entries or example translations, use them as reference to help ensure correct translation. You must respond ONLY with your translation in {tgt} - no explanations, no reasoning, no additional text.",
            self.description
        )
    }

    pub fn postedit_system(&self) -> String {
        let (tgt, src) = (&self.name, &self.source_name);
        let lower = tgt.to_lowercase();
        format!(
            "{}\n\nYou are an expert Bible translator in {tgt} language. Your job is to correct and verify machine generated bible verses in {tgt} language which is translated from the {src} language. Only make changes when necessary, ensuring that the post-edited {lower} verse is aligned with the source {src} verse. When provided with glossary entries or example translations, use them as reference to help ensure correct translation. You must respond ONLY with the corrected translation text - no explanations, no reasoning, no additional text.",
            self.description
        )
    }

    fn examples_header(&self) -> String {
        format!(
            "To help with the translation, here are some example parallel sentences between {} and {}:",
            self.name, self.source_name
        )
    }

    fn glossary_header(&self) -> String {
        format!(
            "To help with the translation, here is a word list between {} and {} in the format: {} word (pos tag) -> {} word:",
            self.source_name, self.name, self.source_name, self.name
        )
    }

    fn source_prefix(&self) -> String {
        format!("Source text ({}): ", self.source_name)
    }

    fn draft_prefix(&self) -> String {
        format!("Machine translation ({}): ", self.name)
    }

    fn instruction(&self, mode: PromptMode) -> String {
        match mode {
            PromptMode::Direct => format!("Translate the above text from {} to {}:", self.source_name, self.name),
            PromptMode::PostEdit => "Correct the machine translation if necessary:".into(),
        }
    }
}

/// Retrieved context injected into one prompt, in retrieval order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub examples: Vec<RetrievedExample>,
    pub lexicon: Vec<RetrievedLexicon>,
}

impl ContextBundle {
    pub fn is_empty(&self) -> bool {
        self.examples.is_empty() && self.lexicon.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
    pub mode: PromptMode,
}

impl RenderedPrompt {
    /// Size in bytes of both messages.
    pub fn total_len(&self) -> usize {
        self.system.len() + self.user.len()
    }

    /// Hex sha256 over mode, system and user text.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.mode.to_string());
        h.update([0]);
        h.update(&self.system);
        h.update([0]);
        h.update(&self.user);
        hex::encode(h.finalize())
    }
}

fn context_blocks(bundle: &ContextBundle, profile: &LanguageProfile) -> Vec<String> {
    let mut blocks = Vec::new();
    if !bundle.examples.is_empty() {
        let examples: Vec<String> = bundle
            .examples
            .iter()
            .map(|e| {
                format!(
                    "{}: {}\n{} translation: {}",
                    profile.name, e.pair.target_text, profile.source_name, e.pair.source_text
                )
            })
            .collect();
        blocks.push(format!("{}\n\n{}", profile.examples_header(), examples.join("\n\n")));
    }
    if !bundle.lexicon.is_empty() {
        let mut block = profile.glossary_header();
        for r in &bundle.lexicon {
            let e = &r.entry;
            block.push_str("\n- ");
            block.push_str(&e.source_word);
            if let Some(pos) = &e.pos {
                block.push_str(" (");
                block.push_str(pos);
                block.push(')');
            }
            block.push_str(" -> ");
            block.push_str(&e.target_word);
        }
        blocks.push(block);
    }
    blocks
}

fn render(
    mode: PromptMode,
    source: &str,
    draft: Option<&str>,
    bundle: &ContextBundle,
    profile: &LanguageProfile,
) -> RenderedPrompt {
    let mut blocks = context_blocks(bundle, profile);
    blocks.push(format!("{}{}", profile.source_prefix(), source));
    if let Some(d) = draft {
        blocks.push(format!("{}{}", profile.draft_prefix(), d));
    }
    blocks.push(profile.instruction(mode));
    let system = match mode {
        PromptMode::Direct => profile.direct_system(),
        PromptMode::PostEdit => profile.postedit_system(),
    };
    RenderedPrompt { system, user: blocks.join("\n\n"), mode }
}

pub fn render_direct(
    source: &str,
    bundle: &ContextBundle,
    profile: &LanguageProfile,
) -> Result<RenderedPrompt, PromptError> {
    if source.trim().is_empty() {
        return Err(PromptError::EmptySource);
    }
    Ok(render(PromptMode::Direct, source, None, bundle, profile))
}

pub fn render_postedit(
    source: &str,
    draft: &str,
    bundle: &ContextBundle,
    profile: &LanguageProfile,
) -> Result<RenderedPrompt, PromptError> {
    if source.trim().is_empty() {
        return Err(PromptError::EmptySource);
    }
    if draft.trim().is_empty() {
        return Err(PromptError::EmptyDraft);
    }
    Ok(render(PromptMode::PostEdit, source, Some(draft), bundle, profile))
}

/// What [`parse_user`] recovers from a rendered user message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPrompt {
    pub mode: PromptMode,
    pub source: String,
    pub draft: Option<String>,
    pub example_count: usize,
    pub glossary_count: usize,
}

/// Inverse of the renderers for the user message.
pub fn parse_user(user: &str, profile: &LanguageProfile) -> Result<ParsedPrompt, PromptError> {
    let bad = |m: &str| PromptError::Unparseable(m.to_string());
    let src_prefix = profile.source_prefix();
    let src_at = if user.starts_with(&src_prefix) {
        0
    } else {
        user.rfind(&format!("\n\n{src_prefix}")).map(|i| i + 2).ok_or_else(|| bad("no source line"))?
    };
    let (context, rest) = user.split_at(src_at);
    let rest = &rest[src_prefix.len()..];

    let direct_tail = format!("\n\n{}", profile.instruction(PromptMode::Direct));
    let postedit_tail = format!("\n\n{}", profile.instruction(PromptMode::PostEdit));
    let (mode, source, draft) = if let Some(body) = rest.strip_suffix(&direct_tail) {
        (PromptMode::Direct, body.to_string(), None)
    } else if let Some(body) = rest.strip_suffix(&postedit_tail) {
        let sep = format!("\n\n{}", profile.draft_prefix());
        let (s, d) = body.rsplit_once(&sep).ok_or_else(|| bad("no draft line"))?;
        (PromptMode::PostEdit, s.to_string(), Some(d.to_string()))
    } else {
        return Err(bad("unknown instruction line"));
    };

    let context = context.strip_suffix("\n\n").unwrap_or(context);
    let ex_header = profile.examples_header();
    let gl_header = profile.glossary_header();
    let (examples, glossary) = if context.is_empty() {
        ("", "")
    } else if let Some(body) = context.strip_prefix(&gl_header) {
        ("", body)
    } else if let Some(body) = context.strip_prefix(&ex_header) {
        match body.split_once(&format!("\n\n{gl_header}")) {
            Some((e, g)) => (e, g),
            None => (body, ""),
        }
    } else {
        return Err(bad("unrecognized context block"));
    };
    let ex_marker = format!("\n{} translation: ", profile.source_name);
    Ok(ParsedPrompt {
        mode,
        source,
        draft,
        example_count: examples.matches(&ex_marker).count(),
        glossary_count: glossary.matches("\n- ").count(),
    })
}
