use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize, Serializer};

/// What a pattern is compared against, and how a literal pattern matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    /// Module path; literal matches the path itself or any dotted extension.
    ImportPrefix,
    /// Alias-expanded call name; literal is a dotted prefix.
    DottedCallName,
    /// Attribute or subscript key; literal is exact.
    AttributeName,
    /// Keyword-argument name; literal is exact.
    ParameterName,
    /// HTTP header key; literal is exact, ASCII case-insensitive.
    HeaderName,
    /// URL text; literal is a substring.
    UrlSubstring,
}

/// A literal or anchored regular-expression pattern.
#[derive(Debug, Clone)]
pub struct Pattern {
    text: String,
    regex: Option<Regex>,
}

impl Pattern {
    pub fn new(text: &str, is_regex: bool) -> Result<Self, regex::Error> {
        let regex = if is_regex {
            Some(RegexBuilder::new(&format!("^(?:{text})$")).build()?)
        } else {
            None
        };
        Ok(Pattern {
            text: text.to_string(),
            regex,
        })
    }

    pub fn literal(text: &str) -> Self {
        Pattern {
            text: text.to_string(),
            regex: None,
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn is_regex(&self) -> bool {
        self.regex.is_some()
    }

    pub fn matches(&self, kind: MatchKind, candidate: &str) -> bool {
        if let Some(re) = &self.regex {
            return re.is_match(candidate);
        }
        let p = self.text.as_str();
        match kind {
            MatchKind::ImportPrefix | MatchKind::DottedCallName => {
                candidate == p
                    || (candidate.len() > p.len()
                        && candidate.starts_with(p)
                        && candidate.as_bytes()[p.len()] == b'.')
            }
            MatchKind::AttributeName | MatchKind::ParameterName => candidate == p,
            MatchKind::HeaderName => candidate.eq_ignore_ascii_case(p),
            MatchKind::UrlSubstring => candidate.contains(p),
        }
    }
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text && self.is_regex() == other.is_regex()
    }
}

impl Serialize for Pattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Pattern", 2)?;
        s.serialize_field("pattern", &self.text)?;
        s.serialize_field("is_regex", &self.is_regex())?;
        s.end()
    }
}
