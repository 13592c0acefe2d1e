//! Global regions, country lookup and bilateral pairs.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use super::tables::{self, TableError, TableSource};

/// One of the 13 geopolitical groupings countries are aggregated into.
///
/// Variants are declared in byte-lexicographic order of their display names so
/// the derived `Ord` matches the canonical storage order of a [`BilateralPair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GlobalRegion {
    Africa,
    CentralAsia,
    China,
    EuPlus,
    EastAsia,
    LatinAmerica,
    MiddleEast,
    NonEuEasternEurope,
    Oceania,
    Russia,
    SouthAsia,
    UnitedKingdom,
    UnitedStates,
}

impl GlobalRegion {
    pub const ALL: [GlobalRegion; 13] = [
        GlobalRegion::Africa,
        GlobalRegion::CentralAsia,
        GlobalRegion::China,
        GlobalRegion::EuPlus,
        GlobalRegion::EastAsia,
        GlobalRegion::LatinAmerica,
        GlobalRegion::MiddleEast,
        GlobalRegion::NonEuEasternEurope,
        GlobalRegion::Oceania,
        GlobalRegion::Russia,
        GlobalRegion::SouthAsia,
        GlobalRegion::UnitedKingdom,
        GlobalRegion::UnitedStates,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GlobalRegion::Africa => "Africa",
            GlobalRegion::CentralAsia => "Central Asia",
            GlobalRegion::China => "China",
            GlobalRegion::EuPlus => "EU+",
            GlobalRegion::EastAsia => "East Asia",
            GlobalRegion::LatinAmerica => "Latin America",
            GlobalRegion::MiddleEast => "Middle East",
            GlobalRegion::NonEuEasternEurope => "Non-EU Eastern Europe",
            GlobalRegion::Oceania => "Oceania",
            GlobalRegion::Russia => "Russia",
            GlobalRegion::SouthAsia => "South Asia",
            GlobalRegion::UnitedKingdom => "U.K.",
            GlobalRegion::UnitedStates => "U.S.",
        }
    }
}

impl fmt::Display for GlobalRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown region name {0:?}")]
pub struct UnknownRegion(pub String);

impl FromStr for GlobalRegion {
    type Err = UnknownRegion;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        GlobalRegion::ALL
            .iter()
            .copied()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .or(match s.to_ascii_lowercase().as_str() {
                "us" | "usa" | "united states" => Some(GlobalRegion::UnitedStates),
                "uk" | "united kingdom" => Some(GlobalRegion::UnitedKingdom),
                "eu" => Some(GlobalRegion::EuPlus),
                _ => None,
            })
            .ok_or_else(|| UnknownRegion(s.to_string()))
    }
}

/// Unordered pair of two distinct regions, stored in canonical order (`first < second`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BilateralPair {
    first: GlobalRegion,
    second: GlobalRegion,
}

impl BilateralPair {
    /// Returns `None` when both regions are the same.
    pub fn new(a: GlobalRegion, b: GlobalRegion) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Self { first: a, second: b }),
            std::cmp::Ordering::Greater => Some(Self { first: b, second: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn first(&self) -> GlobalRegion {
        self.first
    }

    pub fn second(&self) -> GlobalRegion {
        self.second
    }

    pub fn contains(&self, r: GlobalRegion) -> bool {
        self.first == r || self.second == r
    }

    /// 0 for the first region, 1 for the second.
    pub fn side(&self, r: GlobalRegion) -> Option<usize> {
        if r == self.first {
            Some(0)
        } else if r == self.second {
            Some(1)
        } else {
            None
        }
    }

    pub fn other(&self, r: GlobalRegion) -> Option<GlobalRegion> {
        match self.side(r)? {
            0 => Some(self.second),
            _ => Some(self.first),
        }
    }
}

impl fmt::Display for BilateralPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.first, self.second)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid region pair {0:?}")]
pub struct InvalidPair(pub String);

impl FromStr for BilateralPair {
    type Err = InvalidPair;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once('/').ok_or_else(|| InvalidPair(s.to_string()))?;
        let a: GlobalRegion = a.parse().map_err(|_| InvalidPair(s.to_string()))?;
        let b: GlobalRegion = b.parse().map_err(|_| InvalidPair(s.to_string()))?;
        BilateralPair::new(a, b).ok_or_else(|| InvalidPair(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("country {0:?} is not listed in the region table")]
pub struct UnknownCountry(pub String);

/// Lowercased, whitespace-collapsed lookup key for country names.
pub(crate) fn country_key(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Country to region mapping loaded from the shipped region table.
#[derive(Debug, Clone)]
pub struct RegionMap {
    by_key: HashMap<String, (String, GlobalRegion)>,
    aliases: HashMap<String, String>,
}

impl RegionMap {
    /// The shipped table plus the shipped alias list.
    pub fn builtin() -> Self {
        Self::load(&TableSource::Builtin, &TableSource::Builtin, true).expect("shipped region table is valid")
    }

    pub fn load(regions: &TableSource, aliases: &TableSource, verify: bool) -> Result<Self, TableError> {
        let region_text = regions.read(tables::REGIONS)?;
        let alias_text = aliases.read(tables::ALIASES)?;
        if verify {
            tables::verify(tables::REGIONS, &region_text)?;
            tables::verify(tables::ALIASES, &alias_text)?;
        }
        Self::from_tables(&region_text, &alias_text)
    }

    pub fn from_tables(region_text: &str, alias_text: &str) -> Result<Self, TableError> {
        let mut by_key = HashMap::new();
        for row in tables::rows(tables::REGIONS.name, region_text, &["country", "region"])? {
            let (line, cells) = row;
            let region: GlobalRegion = cells[1].parse().map_err(|_| TableError::BadRow {
                table: tables::REGIONS.name,
                line,
                message: format!("unknown region {:?}", cells[1]),
            })?;
            let key = country_key(&cells[0]);
            if by_key.insert(key, (cells[0].clone(), region)).is_some() {
                return Err(TableError::BadRow {
                    table: tables::REGIONS.name,
                    line,
                    message: format!("country {:?} listed twice", cells[0]),
                });
            }
        }
        let distinct: BTreeSet<_> = by_key.values().map(|(_, r)| *r).collect();
        if distinct.len() != GlobalRegion::ALL.len() {
            return Err(TableError::Invalid {
                table: tables::REGIONS.name,
                message: format!("expected 13 regions, found {}", distinct.len()),
            });
        }

        let mut aliases = HashMap::new();
        for (line, cells) in tables::rows(tables::ALIASES.name, alias_text, &["alias", "country"])? {
            let target = country_key(&cells[1]);
            if !by_key.contains_key(&target) {
                return Err(TableError::BadRow {
                    table: tables::ALIASES.name,
                    line,
                    message: format!("alias target {:?} is not in the region table", cells[1]),
                });
            }
            aliases.insert(country_key(&cells[0]), target);
        }
        Ok(Self { by_key, aliases })
    }

    /// Canonical table spelling for a country name or alias.
    pub fn canonical_name(&self, country: &str) -> Option<&str> {
        self.lookup(country).map(|(name, _)| name.as_str())
    }

    pub fn assign_region(&self, country: &str) -> Result<GlobalRegion, UnknownCountry> {
        self.lookup(country).map(|(_, r)| *r).ok_or_else(|| UnknownCountry(country.to_string()))
    }

    fn lookup(&self, country: &str) -> Option<&(String, GlobalRegion)> {
        let key = country_key(country);
        self.by_key.get(&key).or_else(|| self.aliases.get(&key).and_then(|k| self.by_key.get(k)))
    }

    /// All `(country, region)` rows in table spelling, sorted by country.
    pub fn entries(&self) -> Vec<(&str, GlobalRegion)> {
        let mut out: Vec<_> = self.by_key.values().map(|(name, r)| (name.as_str(), *r)).collect();
        out.sort();
        out
    }

    pub fn len(&self) -> usize {
        self.by_key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.is_empty()
    }
}
