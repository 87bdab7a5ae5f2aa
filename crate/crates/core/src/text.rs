//! Token and facet normalization shared by indexing and query evaluation.

/// Splits text into lower-cased search tokens.
///
/// Tokens are maximal runs of alphanumeric characters; a hyphen is kept when it
/// joins two alphanumeric runs, so `Heat-Wave` is the single token `heat-wave`
/// while `heat - wave` yields two tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if c == '-'
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            current.push('-');
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Collapses runs of whitespace into single spaces and trims the ends.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Comparison key for facet values such as subject categories and document
/// types: punctuation becomes whitespace, whitespace collapses, letters are
/// upper-cased. `Physics, Applied` and `PHYSICS APPLIED` share a key.
pub fn facet_key(s: &str) -> String {
    let spaced: String = s
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    collapse_whitespace(&spaced).to_uppercase()
}
