use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Finite union of disjoint half-open intervals `[a, b)`, sorted ascending.
///
/// Endpoints may be infinite. Touching pieces are merged, so the
/// representation of a set is unique.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSet {
    pieces: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![(a, b)])
    }

    /// Strict constructor: pieces must already be sorted, disjoint and nonempty.
    pub fn new(pieces: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(a, b)) in pieces.iter().enumerate() {
            if a.is_nan() || b.is_nan() || a >= b || a == f64::INFINITY || b == f64::NEG_INFINITY {
                return Err(Error::InvalidIntervalSet(format!("[{a},{b}) is not a nonempty interval")));
            }
            if i > 0 && pieces[i - 1].1 > a {
                return Err(Error::InvalidIntervalSet(format!(
                    "pieces overlap or are unsorted near {a}"
                )));
            }
        }
        let mut s = Self { pieces };
        s.merge_touching();
        Ok(s)
    }

    /// Normalizing constructor: sorts, drops empty pieces, merges overlaps.
    pub fn from_pieces(mut pieces: Vec<(f64, f64)>) -> Result<Self> {
        if pieces.iter().any(|(a, b)| a.is_nan() || b.is_nan()) {
            return Err(Error::InvalidIntervalSet("NaN endpoint".into()));
        }
        pieces.retain(|(a, b)| a < b);
        pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(pieces.len());
        for (a, b) in pieces {
            match out.last_mut() {
                Some(last) if last.1 >= a => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Ok(Self { pieces: out })
    }

    fn merge_touching(&mut self) {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(self.pieces.len());
        for &(a, b) in &self.pieces {
            match out.last_mut() {
                Some(last) if last.1 >= a => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        self.pieces = out;
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Lebesgue length.
    pub fn length(&self) -> f64 {
        self.pieces.iter().map(|(a, b)| b - a).sum()
    }

    pub fn is_bounded(&self) -> bool {
        self.pieces.iter().all(|(a, b)| a.is_finite() && b.is_finite())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.pieces.iter().any(|&(a, b)| a <= x && x < b)
    }

    /// `(inf, sup)` of the set, `None` when empty.
    pub fn hull(&self) -> Option<(f64, f64)> {
        Some((self.pieces.first()?.0, self.pieces.last()?.1))
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.pieces.clone();
        all.extend_from_slice(&other.pieces);
        Self::from_pieces(all).expect("pieces of valid sets are NaN-free")
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() && j < other.pieces.len() {
            let (a1, b1) = self.pieces[i];
            let (a2, b2) = other.pieces[j];
            let (a, b) = (a1.max(a2), b1.min(b2));
            if a < b {
                out.push((a, b));
            }
            if b1 < b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { pieces: out }
    }

    pub fn intersect_interval(&self, lo: f64, hi: f64) -> Self {
        if lo >= hi {
            return Self::empty();
        }
        self.intersect(&Self { pieces: vec![(lo, hi)] })
    }

    /// Machine form: list of `[a, b]` pairs.
    pub fn to_pairs(&self) -> Vec<(f64, f64)> {
        self.pieces.clone()
    }
}

fn fmt_endpoint(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return f.write_str("∅");
        }
        for (i, (a, b)) in self.pieces.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∪ ")?;
            }
            write!(f, "[{},{})", fmt_endpoint(*a), fmt_endpoint(*b))?;
        }
        Ok(())
    }
}

fn parse_endpoint(s: &str) -> Result<f64> {
    let t = s.trim();
    match t {
        "inf" | "+inf" | "∞" | "+∞" => Ok(f64::INFINITY),
        "-inf" | "-∞" => Ok(f64::NEG_INFINITY),
        _ => t
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::InvalidIntervalSet(format!("bad endpoint `{t}`"))),
    }
}

/// Parses `[a,b)` pieces joined by `u`, `U` or `∪`; `∅` or an empty string is
/// the empty set. Pieces are normalized, so overlapping input is accepted.
impl FromStr for IntervalSet {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.is_empty() || t == "∅" || t == "{}" {
            return Ok(Self::empty());
        }
        let mut pieces = Vec::new();
        let mut rest = t;
        loop {
            rest = rest.trim_start();
            let body = rest
                .strip_prefix('[')
                .ok_or_else(|| Error::InvalidIntervalSet(format!("expected `[` in `{text}`")))?;
            let close = body
                .find(')')
                .ok_or_else(|| Error::InvalidIntervalSet(format!("expected `)` in `{text}`")))?;
            let (a, b) = body[..close]
                .split_once(',')
                .ok_or_else(|| Error::InvalidIntervalSet(format!("expected `a,b` in `{text}`")))?;
            let (a, b) = (parse_endpoint(a)?, parse_endpoint(b)?);
            if a >= b {
                return Err(Error::InvalidIntervalSet(format!("[{a},{b}) is empty")));
            }
            pieces.push((a, b));
            rest = body[close + 1..].trim_start();
            if rest.is_empty() {
                break;
            }
            rest = rest
                .strip_prefix('u')
                .or_else(|| rest.strip_prefix('U'))
                .or_else(|| rest.strip_prefix('∪'))
                .ok_or_else(|| Error::InvalidIntervalSet(format!("expected `u` between pieces in `{text}`")))?;
        }
        Self::from_pieces(pieces)
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum Endpoint {
    Finite(f64),
    Infinite(&'static str),
}

impl From<f64> for Endpoint {
    fn from(x: f64) -> Self {
        if x == f64::INFINITY {
            Endpoint::Infinite("inf")
        } else if x == f64::NEG_INFINITY {
            Endpoint::Infinite("-inf")
        } else {
            Endpoint::Finite(x)
        }
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[Endpoint; 2]> = self
            .pieces
            .iter()
            .map(|&(a, b)| [a.into(), b.into()])
            .collect();
        pairs.serialize(serializer)
    }
}
