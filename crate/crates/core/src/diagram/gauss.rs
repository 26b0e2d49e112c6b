//! Gauss codes with a third pass symbol for three-strand crossings.
//!
//! Text form: whitespace separated `O<k>`, `U<k>`, `W<k>` tokens (W = under two),
//! one cable per line, `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pass {
    Over,
    UnderOne,
    UnderTwo,
}

impl Pass {
    /// Layer annotation of the strand: +1, -1 or -2.
    pub fn layer(self) -> i8 {
        match self {
            Pass::Over => 1,
            Pass::UnderOne => -1,
            Pass::UnderTwo => -2,
        }
    }

    pub fn from_layer(layer: i8) -> Option<Pass> {
        match layer {
            1 => Some(Pass::Over),
            -1 => Some(Pass::UnderOne),
            -2 => Some(Pass::UnderTwo),
            _ => None,
        }
    }

    pub fn is_under(self) -> bool {
        self != Pass::Over
    }

    fn symbol(self) -> char {
        match self {
            Pass::Over => 'O',
            Pass::UnderOne => 'U',
            Pass::UnderTwo => 'W',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GaussEntry {
    pub crossing: u32,
    pub pass: Pass,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GaussError {
    #[error("malformed token `{token}` at token {position}")]
    MalformedToken { position: usize, token: String },
    #[error("crossing {crossing} appears {count} time(s) (token {position})")]
    BadMultiplicity { crossing: u32, count: usize, position: usize },
    #[error("duplicate {pass:?} pass at crossing {crossing} (token {position})")]
    DuplicatePass { crossing: u32, pass: Pass, position: usize },
    #[error("crossing {crossing} has no Over pass (token {position})")]
    MissingOver { crossing: u32, position: usize },
    #[error("two-strand crossing {crossing} uses UnderTwo (token {position})")]
    UnderTwoWithoutUnderOne { crossing: u32, position: usize },
    #[error("expected one cable, found another on line {line}")]
    MultipleCables { line: usize },
}

/// Sequence of crossing passes traced from the left endpoint to the right endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct GaussCode {
    entries: Vec<GaussEntry>,
}

impl GaussCode {
    pub fn empty() -> Self {
        GaussCode { entries: Vec::new() }
    }

    pub fn new(entries: Vec<GaussEntry>) -> Result<Self, GaussError> {
        validate(&entries)?;
        Ok(GaussCode { entries })
    }

    pub fn entries(&self) -> &[GaussEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Crossing ids in order of first appearance.
    pub fn crossing_ids(&self) -> Vec<u32> {
        let mut seen = Vec::new();
        for e in &self.entries {
            if !seen.contains(&e.crossing) {
                seen.push(e.crossing);
            }
        }
        seen
    }

    pub fn crossing_count(&self) -> usize {
        self.crossing_ids().len()
    }

    /// Positions (entry indices) where `crossing` is met.
    pub fn positions(&self, crossing: u32) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.crossing == crossing)
            .map(|(i, _)| i)
            .collect()
    }

    /// Same code with crossings renumbered 1.. by first appearance.
    pub fn canonical(&self) -> GaussCode {
        let ids = self.crossing_ids();
        let map: BTreeMap<u32, u32> = ids.iter().enumerate().map(|(i, &c)| (c, i as u32 + 1)).collect();
        GaussCode {
            entries: self
                .entries
                .iter()
                .map(|e| GaussEntry { crossing: map[&e.crossing], pass: e.pass })
                .collect(),
        }
    }

    /// The code read from the other endpoint. Layers are unaffected.
    pub fn reversed(&self) -> GaussCode {
        let mut entries = self.entries.clone();
        entries.reverse();
        GaussCode { entries }
    }
}

fn validate(entries: &[GaussEntry]) -> Result<(), GaussError> {
    // crossing -> (passes seen, first position)
    let mut seen: BTreeMap<u32, (Vec<Pass>, usize)> = BTreeMap::new();
    for (pos, e) in entries.iter().enumerate() {
        let slot = seen.entry(e.crossing).or_insert_with(|| (Vec::new(), pos));
        if slot.0.contains(&e.pass) {
            return Err(GaussError::DuplicatePass { crossing: e.crossing, pass: e.pass, position: pos });
        }
        slot.0.push(e.pass);
        if slot.0.len() > 3 {
            return Err(GaussError::BadMultiplicity { crossing: e.crossing, count: slot.0.len(), position: pos });
        }
    }
    let mut by_position: Vec<(usize, u32, &Vec<Pass>)> = seen.iter().map(|(c, (p, at))| (*at, *c, p)).collect();
    by_position.sort();
    for (at, crossing, passes) in by_position {
        if passes.len() < 2 {
            return Err(GaussError::BadMultiplicity { crossing, count: passes.len(), position: at });
        }
        if !passes.contains(&Pass::Over) {
            return Err(GaussError::MissingOver { crossing, position: at });
        }
        if passes.len() == 2 && passes.contains(&Pass::UnderTwo) {
            return Err(GaussError::UnderTwoWithoutUnderOne { crossing, position: at });
        }
    }
    Ok(())
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_tokens<'a>(tokens: impl Iterator<Item = &'a str>) -> Result<Vec<GaussEntry>, GaussError> {
    let mut entries = Vec::new();
    for (position, tok) in tokens.enumerate() {
        let bad = || GaussError::MalformedToken { position, token: tok.to_string() };
        let mut chars = tok.chars();
        let pass = match chars.next() {
            Some('O') => Pass::Over,
            Some('U') => Pass::UnderOne,
            Some('W') => Pass::UnderTwo,
            _ => return Err(bad()),
        };
        let digits = chars.as_str();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let crossing: u32 = digits.parse().map_err(|_| bad())?;
        if crossing == 0 {
            return Err(bad());
        }
        entries.push(GaussEntry { crossing, pass });
    }
    Ok(entries)
}

/// Parses text holding at most one cable. Blank and comment-only lines are ignored;
/// no cable line at all yields the empty code.
pub fn parse_gauss_code(text: &str) -> Result<GaussCode, GaussError> {
    let mut codes = parse_gauss_lines(text)?;
    if codes.len() > 1 {
        let line = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !strip_comment(l).trim().is_empty())
            .nth(1)
            .map(|(i, _)| i + 1)
            .unwrap_or(0);
        return Err(GaussError::MultipleCables { line });
    }
    Ok(codes.pop().unwrap_or_default())
}

/// Parses every cable line of a multi-cable file.
pub fn parse_gauss_lines(text: &str) -> Result<Vec<GaussCode>, GaussError> {
    let mut out = Vec::new();
    for line in text.lines() {
        let body = strip_comment(line);
        if body.trim().is_empty() {
            continue;
        }
        out.push(GaussCode::new(parse_tokens(body.split_whitespace())?)?);
    }
    Ok(out)
}

impl fmt::Display for GaussCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}{}", e.pass.symbol(), e.crossing)?;
        }
        Ok(())
    }
}

impl FromStr for GaussCode {
    type Err = GaussError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_gauss_code(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_straight_cable() {
        assert!(parse_gauss_code("").unwrap().is_empty());
        assert!(parse_gauss_code("# nothing here\n\n").unwrap().is_empty());
    }

    #[test]
    fn overhand_reserializes() {
        let c = parse_gauss_code("O1 U2 O3 U1 O2 U3").unwrap();
        assert_eq!(c.crossing_count(), 3);
        for id in 1..=3 {
            assert_eq!(c.positions(id).len(), 2);
        }
        // passes alternate along the cable
        for (i, e) in c.entries().iter().enumerate() {
            assert_eq!(e.pass == Pass::Over, i % 2 == 0);
        }
        assert_eq!(c.to_string(), "O1 U2 O3 U1 O2 U3");
    }

    #[test]
    fn duplicate_under_is_rejected() {
        let err = parse_gauss_code("O1 U1 U1").unwrap_err();
        assert_eq!(err, GaussError::DuplicatePass { crossing: 1, pass: Pass::UnderOne, position: 2 });
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(
            parse_gauss_code("O1 X2").unwrap_err(),
            GaussError::MalformedToken { position: 1, token: "X2".into() }
        );
        assert_eq!(
            parse_gauss_code("O1 U2 U1").unwrap_err(),
            GaussError::BadMultiplicity { crossing: 2, count: 1, position: 1 }
        );
        assert_eq!(
            parse_gauss_code("O1 O1").unwrap_err(),
            GaussError::DuplicatePass { crossing: 1, pass: Pass::Over, position: 1 }
        );
        assert!(matches!(parse_gauss_code("O1 W1"), Err(GaussError::UnderTwoWithoutUnderOne { .. })));
        assert!(matches!(parse_gauss_code("U1 W1"), Err(GaussError::MissingOver { .. })));
        assert!(matches!(parse_gauss_code("O0 U0"), Err(GaussError::MalformedToken { .. })));
        assert!(matches!(parse_gauss_code("O1 U1\nO1 U1"), Err(GaussError::MultipleCables { line: 2 })));
    }

    #[test]
    fn triple_crossing_parses() {
        let c = parse_gauss_code("O1 U2 W1 O2 U1").unwrap();
        assert_eq!(c.positions(1).len(), 3);
    }

    #[test]
    fn canonical_renumbers() {
        let c = parse_gauss_code("O7 U3 O3 U7").unwrap();
        assert_eq!(c.canonical().to_string(), "O1 U2 O2 U1");
        assert_eq!(c.reversed().to_string(), "U7 O3 U3 O7");
    }
}
