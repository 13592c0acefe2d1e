use std::fmt;
use std::str::FromStr;

use super::{MetricError, ScoredAuthorship};
use crate::corpus::{BriClass, GlobalRegion, AREA_TAGS, FIELD_TAGS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FilterAtom {
    /// Papers in any critical-technology area.
    AnyArea,
    Area(&'static str),
    Field(&'static str),
    IfBin(usize),
    /// China collaborations, keeping partner rows of one income class.
    Bri(BriClass),
}

impl FilterAtom {
    fn keeps_paper(&self, r: &ScoredAuthorship) -> bool {
        match self {
            FilterAtom::AnyArea => !r.areas.is_empty(),
            FilterAtom::Area(a) => r.areas.contains(a),
            FilterAtom::Field(f) => r.fields.contains(f),
            FilterAtom::IfBin(b) => r.if_bin == *b,
            FilterAtom::Bri(_) => r.pair.contains(GlobalRegion::China),
        }
    }
}

impl fmt::Display for FilterAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterAtom::AnyArea => write!(f, "area=any"),
            FilterAtom::Area(a) => write!(f, "area={a}"),
            FilterAtom::Field(x) => write!(f, "field={x}"),
            FilterAtom::IfBin(b) => write!(f, "if_bin={b}"),
            FilterAtom::Bri(c) => write!(f, "bri={c}"),
        }
    }
}

impl FromStr for FilterAtom {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MetricError::InvalidFilter(s.to_string());
        let (k, v) = s.trim().split_once('=').ok_or_else(bad)?;
        let v = v.trim();
        match k.trim() {
            "area" if v == "any" => Ok(FilterAtom::AnyArea),
            "area" => AREA_TAGS.iter().find(|t| **t == v).map(|t| FilterAtom::Area(t)).ok_or_else(bad),
            "field" => FIELD_TAGS.iter().find(|t| **t == v).map(|t| FilterAtom::Field(t)).ok_or_else(bad),
            "if_bin" => v.parse().map(FilterAtom::IfBin).map_err(|_| bad()),
            "bri" => v.parse().map(FilterAtom::Bri).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

/// Conjunction of filter atoms; empty means every row. Atoms are kept sorted and unique.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FilterSpec(Vec<FilterAtom>);

impl FilterSpec {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn new(atoms: impl IntoIterator<Item = FilterAtom>) -> Self {
        let mut v: Vec<FilterAtom> = atoms.into_iter().collect();
        v.sort();
        v.dedup();
        Self(v)
    }

    pub fn atoms(&self) -> &[FilterAtom] {
        &self.0
    }

    pub fn and(&self, other: &FilterSpec) -> FilterSpec {
        FilterSpec::new(self.0.iter().chain(&other.0).copied())
    }

    /// Rows of one paper surviving the filter; empty when the paper is dropped.
    pub fn apply<'a>(&self, paper: &'a [ScoredAuthorship]) -> Vec<&'a ScoredAuthorship> {
        let mut kept: Vec<&ScoredAuthorship> = paper.iter().collect();
        for atom in &self.0 {
            let Some(first) = kept.first() else { break };
            if !atom.keeps_paper(first) {
                return Vec::new();
            }
            if let FilterAtom::Bri(class) = atom {
                kept.retain(|r| r.region == GlobalRegion::China || r.bri_class == *class);
                if kept.iter().all(|r| r.region == GlobalRegion::China) {
                    return Vec::new();
                }
            }
        }
        kept
    }
}

impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("all");
        }
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for FilterSpec {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "all" {
            return Ok(Self::all());
        }
        s.split('+').map(str::parse).collect::<Result<Vec<_>, _>>().map(FilterSpec::new)
    }
}
