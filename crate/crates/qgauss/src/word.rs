//! Word mini-grammar: whitespace-separated letters `s<j>`, `s<j>*`, `g<j>`,
//! `g-<j>`, `c<j>`, `c<j>*` with `j ≥ 1`.

use std::fmt;

use qgauss_core::clt::SumSymbol;
use qgauss_core::qmoments::StarWord;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WordLetter {
    S(usize),
    SStar(usize),
    G(i32),
    C(usize),
    CStar(usize),
}

impl fmt::Display for WordLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WordLetter::S(j) => write!(f, "s{j}"),
            WordLetter::SStar(j) => write!(f, "s{j}*"),
            WordLetter::G(j) => write!(f, "g{j}"),
            WordLetter::C(j) => write!(f, "c{j}"),
            WordLetter::CStar(j) => write!(f, "c{j}*"),
        }
    }
}

/// A parsed word with the character offset of every letter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Word {
    pub letters: Vec<WordLetter>,
    pub offsets: Vec<usize>,
}

fn err(pos: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse {
        pos: format!("offset {pos}"),
        msg: msg.into(),
    }
}

fn parse_letter(tok: &str, start: usize) -> Result<WordLetter> {
    let mut chars = tok.char_indices().peekable();
    let (_, head) = chars.next().expect("tokens are non-empty");
    let negative = head == 'g' && chars.peek().map(|c| c.1) == Some('-');
    if negative {
        chars.next();
    }
    let digits_start = chars.peek().map_or(tok.len(), |c| c.0);
    let mut digits_end = digits_start;
    while let Some(&(i, c)) = chars.peek() {
        if !c.is_ascii_digit() {
            break;
        }
        digits_end = i + c.len_utf8();
        chars.next();
    }
    if digits_end == digits_start {
        return Err(err(start + digits_start, format!("expected an index after '{}'", &tok[..digits_start])));
    }
    let j: usize = tok[digits_start..digits_end]
        .parse()
        .map_err(|_| err(start + digits_start, "index is too large"))?;
    if j == 0 {
        return Err(err(start + digits_start, "indices start at 1"));
    }
    let star = chars.next_if(|c| c.1 == '*').is_some();
    if let Some((i, c)) = chars.next() {
        return Err(err(start + i, format!("unexpected character '{c}'")));
    }
    let signed = || i32::try_from(j).map_err(|_| err(start + digits_start, "index is too large"));
    Ok(match (head, star) {
        ('s', false) => WordLetter::S(j),
        ('s', true) => WordLetter::SStar(j),
        ('c', false) => WordLetter::C(j),
        ('c', true) => WordLetter::CStar(j),
        ('g', false) if negative => WordLetter::G(-signed()?),
        ('g', false) => WordLetter::G(signed()?),
        ('g', true) => return Err(err(start + digits_end, "g letters are self-adjoint and take no '*'")),
        _ => return Err(err(start, format!("unknown letter '{head}', expected s, g or c"))),
    })
}

pub fn parse_word(text: &str) -> Result<Word> {
    let mut letters = Vec::new();
    let mut offsets = Vec::new();
    let mut pos = 0;
    for tok in text.split_whitespace() {
        let start = pos + text[pos..].find(tok).expect("token comes from the text");
        letters.push(parse_letter(tok, start)?);
        offsets.push(start);
        pos = start + tok.len();
    }
    if letters.is_empty() {
        return Err(err(0, "empty word"));
    }
    Ok(Word { letters, offsets })
}

impl Word {
    /// `s` and `c` letters as a word in `c_j`, `c_j*`.
    pub fn star_word(&self) -> Result<StarWord> {
        let letters = self
            .letters
            .iter()
            .zip(&self.offsets)
            .map(|(l, &pos)| match *l {
                WordLetter::S(j) | WordLetter::C(j) => Ok((j, 1)),
                WordLetter::SStar(j) | WordLetter::CStar(j) => Ok((j, -1)),
                WordLetter::G(_) => Err(err(pos, format!("{l} is not a circular letter"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StarWord::new(letters)?)
    }

    /// `s` and `g` letters as normalized sums.
    pub fn sum_symbols(&self) -> Result<Vec<SumSymbol>> {
        self.letters
            .iter()
            .zip(&self.offsets)
            .map(|(l, &pos)| match *l {
                WordLetter::S(j) => Ok(SumSymbol::S(j)),
                WordLetter::SStar(j) => Ok(SumSymbol::SStar(j)),
                WordLetter::G(j) => Ok(SumSymbol::G(j)),
                WordLetter::C(_) | WordLetter::CStar(_) => {
                    Err(err(pos, format!("{l} is a limit variable, use s or g letters")))
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar() {
        let w = parse_word("s1 s1* s1 s1*").unwrap();
        assert_eq!(w.star_word().unwrap().letters, vec![(1, 1), (1, -1), (1, 1), (1, -1)]);
        let w = parse_word("  g-2\tg12 c3* ").unwrap();
        assert_eq!(w.letters, vec![WordLetter::G(-2), WordLetter::G(12), WordLetter::CStar(3)]);
        assert_eq!(w.offsets, vec![2, 6, 10]);
    }

    #[test]
    fn errors_carry_positions() {
        let pos = |t: &str| match parse_word(t) {
            Err(CliError::Parse { pos, .. }) => pos,
            other => panic!("{other:?}"),
        };
        assert_eq!(pos("s1 x2"), "offset 3");
        assert_eq!(pos("s1 s"), "offset 4");
        assert_eq!(pos("s1 s0"), "offset 4");
        assert_eq!(pos("s1 s2*x"), "offset 6");
        assert_eq!(pos("g1*"), "offset 2");
        assert_eq!(pos(""), "offset 0");
    }
}
