//! Deterministic suffix-stripping stemmer.
//!
//! A small rule set in the spirit of Porter's first step: plural endings,
//! `-ed`/`-ing` with consonant undoubling, and `-ly`. The rules are fixed and
//! self-contained so that identical input always yields identical tokens.

/// Stems a single lowercase token. Tokens shorter than 4 characters and
/// tokens containing digits are returned unchanged.
pub fn stem(token: &str) -> String {
    if token.len() < 4 || token.bytes().any(|b| b.is_ascii_digit()) {
        return token.to_string();
    }

    let mut s = strip_plural(token);
    s = strip_participle(&s);
    s
}

fn strip_plural(token: &str) -> String {
    if let Some(base) = token.strip_suffix("sses") {
        return format!("{base}ss");
    }
    if let Some(base) = token.strip_suffix("ies") {
        if base.len() >= 2 {
            return format!("{base}y");
        }
        return token.to_string();
    }
    if token.ends_with("ss") || token.ends_with("us") || token.ends_with("is") {
        return token.to_string();
    }
    if let Some(base) = token.strip_suffix('s') {
        if base.len() >= 3 {
            return base.to_string();
        }
    }
    token.to_string()
}

fn strip_participle(token: &str) -> String {
    for suffix in ["ing", "ed", "ly"] {
        if let Some(base) = token.strip_suffix(suffix) {
            if base.len() >= 3 && base.bytes().any(is_vowel) {
                return undouble(base);
            }
        }
    }
    token.to_string()
}

fn is_vowel(b: u8) -> bool {
    matches!(b, b'a' | b'e' | b'i' | b'o' | b'u' | b'y')
}

/// "transferr" -> "transfer", "runn" -> "run"; `ss`, `ll`, and `ee` stay.
fn undouble(base: &str) -> String {
    let bytes = base.as_bytes();
    let n = bytes.len();
    if n >= 2
        && bytes[n - 1] == bytes[n - 2]
        && bytes[n - 1].is_ascii_alphabetic()
        && !matches!(bytes[n - 1], b's' | b'l' | b'e' | b'z')
    {
        return base[..n - 1].to_string();
    }
    base.to_string()
}
