//! Classic Porter stemmer (the 1980 algorithm).
//!
//! Operates on lowercase ASCII words; anything containing other characters
//! is returned unchanged. Used by the METEOR stem-match stage.

pub trait Stemmer: Send + Sync {
    fn stem(&self, word: &str) -> String;
}

/// No-op stemmer, for disabling the stem stage.
pub struct IdentityStemmer;

impl Stemmer for IdentityStemmer {
    fn stem(&self, word: &str) -> String {
        word.to_string()
    }
}

#[derive(Default)]
pub struct PorterStemmer;

impl Stemmer for PorterStemmer {
    fn stem(&self, word: &str) -> String {
        porter_stem(word)
    }
}

pub fn porter_stem(word: &str) -> String {
    let lower = word.to_lowercase();
    if lower.len() <= 2 || !lower.bytes().all(|b| b.is_ascii_lowercase()) {
        return lower;
    }
    let mut w: Vec<u8> = lower.into_bytes();
    step_1a(&mut w);
    step_1b(&mut w);
    step_1c(&mut w);
    step_2(&mut w);
    step_3(&mut w);
    step_4(&mut w);
    step_5(&mut w);
    String::from_utf8(w).expect("stemmer operates on ASCII")
}

fn is_consonant(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(w, i - 1),
        _ => true,
    }
}

/// The measure m of w[..len]: number of VC sequences in [C](VC)^m[V].
fn measure(w: &[u8], len: usize) -> usize {
    let mut m = 0;
    let mut i = 0;
    // skip initial consonants
    while i < len && is_consonant(w, i) {
        i += 1;
    }
    loop {
        // vowels
        while i < len && !is_consonant(w, i) {
            i += 1;
        }
        if i >= len {
            return m;
        }
        // consonants
        while i < len && is_consonant(w, i) {
            i += 1;
        }
        m += 1;
        if i >= len {
            return m;
        }
    }
}

fn has_vowel(w: &[u8], len: usize) -> bool {
    (0..len).any(|i| !is_consonant(w, i))
}

fn ends_double_consonant(w: &[u8], len: usize) -> bool {
    len >= 2 && w[len - 1] == w[len - 2] && is_consonant(w, len - 1)
}

/// *o: stem ends cvc where the final c is not w, x or y.
fn ends_cvc(w: &[u8], len: usize) -> bool {
    len >= 3
        && is_consonant(w, len - 3)
        && !is_consonant(w, len - 2)
        && is_consonant(w, len - 1)
        && !matches!(w[len - 1], b'w' | b'x' | b'y')
}

fn ends_with(w: &[u8], suffix: &str) -> bool {
    w.len() >= suffix.len() && &w[w.len() - suffix.len()..] == suffix.as_bytes()
}

fn replace_suffix(w: &mut Vec<u8>, suffix: &str, replacement: &str) {
    let stem_len = w.len() - suffix.len();
    w.truncate(stem_len);
    w.extend_from_slice(replacement.as_bytes());
}

fn step_1a(w: &mut Vec<u8>) {
    if ends_with(w, "sses") {
        replace_suffix(w, "sses", "ss");
    } else if ends_with(w, "ies") {
        replace_suffix(w, "ies", "i");
    } else if ends_with(w, "ss") {
        // unchanged
    } else if ends_with(w, "s") {
        replace_suffix(w, "s", "");
    }
}

fn step_1b(w: &mut Vec<u8>) {
    if ends_with(w, "eed") {
        if measure(w, w.len() - 3) > 0 {
            replace_suffix(w, "eed", "ee");
        }
        return;
    }
    let removed = if ends_with(w, "ed") && has_vowel(w, w.len() - 2) {
        replace_suffix(w, "ed", "");
        true
    } else if ends_with(w, "ing") && has_vowel(w, w.len() - 3) {
        replace_suffix(w, "ing", "");
        true
    } else {
        false
    };
    if !removed {
        return;
    }
    if ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz") {
        w.push(b'e');
    } else if ends_double_consonant(w, w.len())
        && !matches!(w[w.len() - 1], b'l' | b's' | b'z')
    {
        w.truncate(w.len() - 1);
    } else if measure(w, w.len()) == 1 && ends_cvc(w, w.len()) {
        w.push(b'e');
    }
}

fn step_1c(w: &mut Vec<u8>) {
    if ends_with(w, "y") && has_vowel(w, w.len() - 1) {
        let last = w.len() - 1;
        w[last] = b'i';
    }
}

const STEP_2: &[(&str, &str)] = &[
    ("ational", "ate"),
    ("tional", "tion"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("izer", "ize"),
    ("abli", "able"),
    ("alli", "al"),
    ("entli", "ent"),
    ("eli", "e"),
    ("ousli", "ous"),
    ("ization", "ize"),
    ("ation", "ate"),
    ("ator", "ate"),
    ("alism", "al"),
    ("iveness", "ive"),
    ("fulness", "ful"),
    ("ousness", "ous"),
    ("aliti", "al"),
    ("iviti", "ive"),
    ("biliti", "ble"),
    ("logi", "log"),
];

const STEP_3: &[(&str, &str)] = &[
    ("icate", "ic"),
    ("ative", ""),
    ("alize", "al"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ful", ""),
    ("ness", ""),
];

/// Apply the longest-suffix rule of `rules` whose stem measure exceeds
/// `min_m`. Only one rule per step fires; a matched suffix whose condition
/// fails ends the step.
fn apply_rule_table(w: &mut Vec<u8>, rules: &[(&str, &str)], min_m: usize) {
    let mut best: Option<(&str, &str)> = None;
    for (suffix, replacement) in rules {
        if ends_with(w, suffix)
            && best.map(|(s, _)| suffix.len() > s.len()).unwrap_or(true)
        {
            best = Some((suffix, replacement));
        }
    }
    if let Some((suffix, replacement)) = best {
        if measure(w, w.len() - suffix.len()) > min_m {
            replace_suffix(w, suffix, replacement);
        }
    }
}

fn step_2(w: &mut Vec<u8>) {
    apply_rule_table(w, STEP_2, 0);
}

fn step_3(w: &mut Vec<u8>) {
    apply_rule_table(w, STEP_3, 0);
}

const STEP_4: &[&str] = &[
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion",
    "ou", "ism", "ate", "iti", "ous", "ive", "ize",
];

fn step_4(w: &mut Vec<u8>) {
    let mut best: Option<&str> = None;
    for suffix in STEP_4 {
        if ends_with(w, suffix) && best.map(|s| suffix.len() > s.len()).unwrap_or(true) {
            best = Some(suffix);
        }
    }
    if let Some(suffix) = best {
        let stem_len = w.len() - suffix.len();
        if measure(w, stem_len) > 1 {
            // "ion" only deletes after s or t.
            if suffix == "ion" && stem_len > 0 && !matches!(w[stem_len - 1], b's' | b't') {
                return;
            }
            w.truncate(stem_len);
        }
    }
}

fn step_5(w: &mut Vec<u8>) {
    // 5a
    if ends_with(w, "e") {
        let stem_len = w.len() - 1;
        let m = measure(w, stem_len);
        if m > 1 || (m == 1 && !ends_cvc(w, stem_len)) {
            w.truncate(stem_len);
        }
    }
    // 5b
    if measure(w, w.len()) > 1 && ends_double_consonant(w, w.len()) && w[w.len() - 1] == b'l' {
        w.truncate(w.len() - 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_pairs() {
        let pairs = [
            ("caresses", "caress"),
            ("ponies", "poni"),
            ("ties", "ti"),
            ("caress", "caress"),
            ("cats", "cat"),
            ("feed", "feed"),
            ("agreed", "agre"),
            ("plastered", "plaster"),
            ("bled", "bled"),
            ("motoring", "motor"),
            ("sing", "sing"),
            ("conflated", "conflat"),
            ("troubled", "troubl"),
            ("sized", "size"),
            ("hopping", "hop"),
            ("tanned", "tan"),
            ("falling", "fall"),
            ("hissing", "hiss"),
            ("fizzed", "fizz"),
            ("failing", "fail"),
            ("filing", "file"),
            ("happy", "happi"),
            ("sky", "sky"),
            ("relational", "relat"),
            ("rational", "ration"),
            ("generalization", "gener"),
            ("oscillators", "oscil"),
            ("running", "run"),
            ("runs", "run"),
            ("adjustable", "adjust"),
            ("adoption", "adopt"),
            ("controlling", "control"),
            ("probate", "probat"),
            ("rate", "rate"),
            ("cease", "ceas"),
        ];
        for (input, expected) in pairs {
            assert_eq!(porter_stem(input), expected, "stem({input})");
        }
    }

    #[test]
    fn short_and_non_ascii_unchanged() {
        assert_eq!(porter_stem("at"), "at");
        assert_eq!(porter_stem("I"), "i");
        assert_eq!(porter_stem("café"), "café");
        assert_eq!(porter_stem("don't"), "don't");
    }

    #[test]
    fn stemming_is_idempotent_on_stems() {
        for word in ["running", "happiness", "relational", "motoring"] {
            let once = porter_stem(word);
            // Stems may shrink again (porter is not idempotent in general),
            // but must stay stable for these.
            let twice = porter_stem(&once);
            assert_eq!(porter_stem(&twice), twice);
        }
    }
}
