//! Keyword / date-range corpus selection with mother-thread inclusion.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::ArgumentError;
use crate::model::{Message, MessageKey, Timestamp};
use crate::thread::normalize_subject;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordMode {
    #[default]
    Substring,
    WholeWord,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSelection {
    pub name: String,
    pub keywords: BTreeSet<String>,
    pub date_from: Timestamp,
    pub date_to: Timestamp,
    pub lists: BTreeSet<String>,
    /// Every selected message, including mother-thread pull-ins.
    pub messages: BTreeSet<MessageKey>,
    /// The subset pulled in only because a selected message replies to it.
    pub mother_thread: BTreeSet<MessageKey>,
}

impl CorpusSelection {
    pub fn contains(&self, key: &MessageKey) -> bool {
        self.messages.contains(key)
    }

    pub fn is_mother_thread(&self, key: &MessageKey) -> bool {
        self.mother_thread.contains(key)
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub(crate) fn subject_matches(subject_key: &str, keyword: &str, mode: KeywordMode) -> bool {
    if keyword.is_empty() {
        return false;
    }
    match mode {
        KeywordMode::Substring => subject_key.contains(keyword),
        KeywordMode::WholeWord => subject_key.match_indices(keyword).any(|(i, m)| {
            let before = subject_key[..i].chars().next_back();
            let after = subject_key[i + m.len()..].chars().next();
            !before.is_some_and(is_word_char) && !after.is_some_and(is_word_char)
        }),
    }
}

/// Selects messages whose normalized subject contains a keyword and whose
/// date lies in `[date_from, date_to]`, then pulls in every reply-chain
/// ancestor present in the same list's archive.
pub fn select_corpus(
    name: &str,
    messages: &[Message],
    keywords: &BTreeSet<String>,
    date_from: Timestamp,
    date_to: Timestamp,
    mode: KeywordMode,
) -> Result<CorpusSelection, ArgumentError> {
    if date_from > date_to {
        return Err(ArgumentError::InvertedRange {
            from: date_from,
            to: date_to,
        });
    }
    let keywords: BTreeSet<String> = keywords
        .iter()
        .map(|k| k.trim().to_lowercase())
        .filter(|k| !k.is_empty())
        .collect();
    if keywords.is_empty() {
        return Err(ArgumentError::NoKeywords);
    }

    let index: HashMap<(&str, &str), &Message> = messages
        .iter()
        .map(|m| ((m.list_id.as_str(), m.message_id.as_str()), m))
        .collect();

    let mut selected: BTreeSet<MessageKey> = BTreeSet::new();
    let mut stack: Vec<&Message> = Vec::new();
    for m in messages {
        if m.date < date_from || m.date > date_to {
            continue;
        }
        let key = normalize_subject(&m.subject_raw);
        if keywords.iter().any(|k| subject_matches(&key, k, mode)) && selected.insert(m.key()) {
            stack.push(m);
        }
    }

    let mut mother_thread = BTreeSet::new();
    while let Some(m) = stack.pop() {
        for id in m.ancestor_ids() {
            if let Some(parent) = index.get(&(m.list_id.as_str(), id)) {
                let key = parent.key();
                if selected.insert(key.clone()) {
                    mother_thread.insert(key);
                    stack.push(parent);
                }
            }
        }
    }

    Ok(CorpusSelection {
        name: name.to_string(),
        keywords,
        date_from,
        date_to,
        lists: selected.iter().map(|k| k.list_id.clone()).collect(),
        messages: selected,
        mother_thread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ParticipantId;

    pub(crate) fn msg(id: &str, subject: &str, date: i64, parent: Option<&str>) -> Message {
        Message {
            message_id: id.into(),
            list_id: "py-list".into(),
            sender_raw: "x <x@y.z>".into(),
            sender: ParticipantId::new("x"),
            date,
            subject_raw: subject.into(),
            in_reply_to: parent.map(str::to_string),
            references: parent.map(|p| vec![p.to_string()]).unwrap_or_default(),
            body: String::new(),
            offset: 0,
        }
    }

    fn kw(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn decimal_keywords_match_subject() {
        let msgs = vec![
            msg("a", "Re: Add decimal (aka fixed point) to Python", 10, None),
            msg("b", "Unicode musings", 10, None),
        ];
        let sel = select_corpus(
            "unsuccessful",
            &msgs,
            &kw(&["decimal", "money", "currency", "fixed-point"]),
            0,
            100,
            KeywordMode::Substring,
        )
        .unwrap();
        assert!(sel.contains(&MessageKey::new("py-list", "a")));
        assert!(!sel.contains(&MessageKey::new("py-list", "b")));
    }

    #[test]
    fn mother_thread_pulled_in_and_flagged() {
        let msgs = vec![
            msg("A", "Python arithmetic", 5, None),
            msg("B", "Re: decimal type (was: Python arithmetic)", 6, Some("A")),
        ];
        let sel = select_corpus("s", &msgs, &kw(&["decimal"]), 0, 100, KeywordMode::Substring).unwrap();
        assert_eq!(sel.messages.len(), 2);
        assert!(sel.is_mother_thread(&MessageKey::new("py-list", "A")));
        assert!(!sel.is_mother_thread(&MessageKey::new("py-list", "B")));
    }

    #[test]
    fn date_range_and_errors() {
        let msgs = vec![msg("a", "decimal", 50, None)];
        let sel = select_corpus("s", &msgs, &kw(&["decimal"]), 60, 100, KeywordMode::Substring).unwrap();
        assert!(sel.messages.is_empty());
        assert_eq!(
            select_corpus("s", &msgs, &kw(&["decimal"]), 10, 5, KeywordMode::Substring),
            Err(ArgumentError::InvertedRange { from: 10, to: 5 })
        );
        assert_eq!(
            select_corpus("s", &msgs, &kw(&[]), 0, 5, KeywordMode::Substring),
            Err(ArgumentError::NoKeywords)
        );
    }

    #[test]
    fn whole_word_mode() {
        assert!(subject_matches("decimal type", "decimal", KeywordMode::WholeWord));
        assert!(!subject_matches("decimals galore", "decimal", KeywordMode::WholeWord));
        assert!(subject_matches("decimals galore", "decimal", KeywordMode::Substring));
        assert!(subject_matches(
            "a fixed-point thing",
            "fixed-point",
            KeywordMode::WholeWord
        ));
    }
}
