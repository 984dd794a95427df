//! Prompt construction for the two supported context styles.
//!
//! A context carries one text field. For styles with two slots the field
//! holds both parts joined by the `|||` separator; text without the
//! separator fills the first slot and leaves the second empty.

use serde::{Deserialize, Serialize};

/// Separator splitting a context's text field into its two template slots.
pub const SLOT_SEPARATOR: &str = "|||";

/// How a context's text is turned into a generator prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    /// Fill-in-the-blank mention prediction. The text holds the phrases
    /// preceding and following the mention; the rendered prompt is
    ///
    /// ```text
    /// question: {preceding} <extra_id_0>. {following}
    /// ```
    ///
    /// where `<extra_id_0>` is the mask token the generator fills in.
    ClozeMention,
    /// Item-tag prediction from a title and content pair. The rendered
    /// prompt is
    ///
    /// ```text
    /// Title: {title}
    /// Content: {content}
    /// Task: Predict the associated label.
    /// ```
    ///
    /// Chat-style services that want the task instruction in a separate
    /// system message configure it on the remote backend instead.
    TitleContent,
}

/// Splits a context text field into its two slots at the first separator.
fn split_slots(text: &str) -> (&str, &str) {
    match text.split_once(SLOT_SEPARATOR) {
        Some((first, second)) => (first, second),
        None => (text, ""),
    }
}

/// Renders the prompt for one context text under the given style.
///
/// Rendering is verbatim substitution into the style's template; equal
/// inputs always produce equal prompts.
pub fn render_prompt(style: PromptStyle, text: &str) -> String {
    let (first, second) = split_slots(text);
    match style {
        PromptStyle::ClozeMention => {
            format!("question: {first} <extra_id_0>. {second}")
        }
        PromptStyle::TitleContent => {
            format!("Title: {first}\nContent: {second}\nTask: Predict the associated label.")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cloze_substitutes_both_slots() {
        let p = render_prompt(PromptStyle::ClozeMention, "the city of|||is in France");
        assert_eq!(p, "question: the city of <extra_id_0>. is in France");
    }

    #[test]
    fn title_content_substitutes_both_slots() {
        let p = render_prompt(PromptStyle::TitleContent, "USB Cable|||Braided, 2 m, black.");
        assert_eq!(
            p,
            "Title: USB Cable\nContent: Braided, 2 m, black.\nTask: Predict the associated label."
        );
    }

    #[test]
    fn missing_separator_fills_first_slot_only() {
        let p = render_prompt(PromptStyle::ClozeMention, "just a prefix");
        assert_eq!(p, "question: just a prefix <extra_id_0>. ");
        let p = render_prompt(PromptStyle::TitleContent, "Lone Title");
        assert_eq!(p, "Title: Lone Title\nContent: \nTask: Predict the associated label.");
    }

    #[test]
    fn only_the_first_separator_splits() {
        let p = render_prompt(PromptStyle::ClozeMention, "a|||b|||c");
        assert_eq!(p, "question: a <extra_id_0>. b|||c");
    }

    #[test]
    fn style_names_parse_from_config() {
        let s: PromptStyle = serde_json::from_str("\"cloze_mention\"").unwrap();
        assert_eq!(s, PromptStyle::ClozeMention);
        let s: PromptStyle = serde_json::from_str("\"title_content\"").unwrap();
        assert_eq!(s, PromptStyle::TitleContent);
    }
}
