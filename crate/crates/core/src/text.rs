//! Small text helpers shared by substitution and auditing.

/// Lowercases and collapses every run of non-alphanumeric characters to one space.
pub fn normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut gap = false;
    for c in s.chars() {
        if c.is_alphanumeric() {
            if gap && !out.is_empty() {
                out.push(' ');
            }
            gap = false;
            out.extend(c.to_lowercase());
        } else {
            gap = true;
        }
    }
    out
}

fn is_word_char(c: Option<char>) -> bool {
    c.is_some_and(|c| c.is_alphanumeric())
}

/// Byte offsets of every occurrence of `needle` not glued to a letter or digit.
pub fn word_matches(haystack: &str, needle: &str) -> Vec<usize> {
    let mut out = Vec::new();
    if needle.is_empty() {
        return out;
    }
    let first = needle.chars().next();
    let last = needle.chars().next_back();
    for (at, _) in haystack.match_indices(needle) {
        let before = haystack[..at].chars().next_back();
        let after = haystack[at + needle.len()..].chars().next();
        let left_ok = !is_word_char(first) || !is_word_char(before);
        let right_ok = !is_word_char(last) || !is_word_char(after);
        if left_ok && right_ok {
            out.push(at);
        }
    }
    out
}

pub fn contains_word(haystack: &str, needle: &str) -> bool {
    !word_matches(haystack, needle).is_empty()
}
