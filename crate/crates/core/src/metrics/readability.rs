//! Flesch-Kincaid grade level.
//!
//! `0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59`
//!
//! Words are the tokens of [`crate::corpus::tokenize`] that contain at
//! least one letter. Syllables are counted per word as runs of the vowels
//! `a e i o u y`, minus one for a terminal silent `e` when that leaves at
//! least one, with a floor of one. Sentences are segments closed by a run
//! of `.`, `?` or `!`; trailing words without a terminator form a final
//! sentence, and every text has at least one sentence.

use serde::{Deserialize, Serialize};

use crate::corpus::tokenize;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityReport {
    pub grade: f64,
    pub sentences: usize,
    pub words: usize,
    pub syllables: usize,
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

pub fn count_syllables(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphabetic())
        .collect();
    let mut groups = 0;
    let mut in_vowel = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !in_vowel {
            groups += 1;
        }
        in_vowel = v;
    }
    if letters.last() == Some(&'e') && groups > 1 {
        groups -= 1;
    }
    groups.max(1)
}

fn is_terminator(token: &str) -> bool {
    matches!(token, "." | "?" | "!")
}

fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphabetic)
}

pub fn readability(text: &str) -> Result<ReadabilityReport> {
    let tokens = tokenize(text);
    let mut words = 0usize;
    let mut syllables = 0usize;
    let mut sentences = 0usize;
    let mut open_sentence = false;
    let mut prev_terminator = false;
    for t in &tokens {
        if is_terminator(t) {
            if open_sentence && !prev_terminator {
                sentences += 1;
                open_sentence = false;
            }
            prev_terminator = true;
            continue;
        }
        prev_terminator = false;
        if is_word(t) {
            words += 1;
            syllables += count_syllables(t);
            open_sentence = true;
        }
    }
    if open_sentence {
        sentences += 1;
    }
    if words == 0 {
        return Err(Error::InvalidInput(
            "Flesch-Kincaid needs at least one word".into(),
        ));
    }
    let sentences = sentences.max(1);
    let grade = 0.39 * (words as f64 / sentences as f64)
        + 11.8 * (syllables as f64 / words as f64)
        - 15.59;
    Ok(ReadabilityReport {
        grade,
        sentences,
        words,
        syllables,
    })
}

pub fn flesch_kincaid_grade(text: &str) -> Result<f64> {
    readability(text).map(|r| r.grade)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syllable_heuristic() {
        assert_eq!(count_syllables("where"), 1);
        assert_eq!(count_syllables("are"), 1);
        assert_eq!(count_syllables("you"), 1);
        assert_eq!(count_syllables("located"), 3);
        assert_eq!(count_syllables("the"), 1);
        assert_eq!(count_syllables("rhythm"), 1);
        assert_eq!(count_syllables("i'd"), 1);
        assert_eq!(count_syllables("organization"), 5);
    }

    #[test]
    fn located_question_grade() {
        let r = readability("where are you located ?").unwrap();
        assert_eq!((r.sentences, r.words, r.syllables), (1, 4, 6));
        assert!((r.grade - 3.67).abs() < 1e-9);
    }

    #[test]
    fn monosyllable_grade() {
        assert!((flesch_kincaid_grade("go.").unwrap() - (-3.40)).abs() < 1e-9);
    }

    #[test]
    fn sentence_counting() {
        assert_eq!(readability("Hi. Bye").unwrap().sentences, 2);
        assert_eq!(readability("Really?! Yes.").unwrap().sentences, 2);
        assert_eq!(readability("... what").unwrap().sentences, 1);
    }

    #[test]
    fn no_words_is_error() {
        assert!(flesch_kincaid_grade("").is_err());
        assert!(flesch_kincaid_grade("? 42 !").is_err());
    }
}
