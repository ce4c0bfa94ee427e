//! Caption tokenization shared by the vocabulary and the metrics:
//! lowercase, drop punctuation, split on whitespace.

/// Punctuation outside ASCII that shows up in caption corpora, including the
/// Bengali danda.
const EXTRA_PUNCTUATION: &[char] = &[
    '\u{0964}', '\u{0965}', '\u{2018}', '\u{2019}', '\u{201C}', '\u{201D}', '\u{2013}',
    '\u{2014}', '\u{2026}', '\u{00AB}', '\u{00BB}', '\u{00BF}', '\u{00A1}',
];

pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || EXTRA_PUNCTUATION.contains(&c)
}

pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| !is_punctuation(*c))
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowercases_and_strips() {
        assert_eq!(tokenize("A man, riding a Horse."), ["a", "man", "riding", "a", "horse"]);
        assert_eq!(tokenize("  "), Vec::<String>::new());
        assert_eq!(tokenize("don't stop"), ["dont", "stop"]);
    }

    #[test]
    fn bengali_danda_removed() {
        assert_eq!(tokenize("একটি বিড়াল।"), ["একটি", "বিড়াল"]);
    }
}
