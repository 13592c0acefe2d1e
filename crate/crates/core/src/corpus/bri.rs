//! Belt and Road Initiative signatory income classes.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::region::{country_key, RegionMap};
use super::tables::{self, TableError, TableSource};

/// Signatories are split by 2010 GDP per capita relative to China.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BriClass {
    HighIncome,
    LowIncome,
    NonSignatory,
}

impl BriClass {
    pub fn as_str(self) -> &'static str {
        match self {
            BriClass::HighIncome => "high",
            BriClass::LowIncome => "low",
            BriClass::NonSignatory => "none",
        }
    }
}

impl fmt::Display for BriClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BriClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" | "highincome" | "high_income" => Ok(BriClass::HighIncome),
            "low" | "lowincome" | "low_income" => Ok(BriClass::LowIncome),
            "none" | "nonsignatory" | "non_signatory" => Ok(BriClass::NonSignatory),
            other => Err(format!("unknown Belt and Road class {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BriClassification {
    by_key: HashMap<String, BriClass>,
}

impl BriClassification {
    pub fn builtin() -> Self {
        Self::load(&TableSource::Builtin, true).expect("shipped Belt and Road table is valid")
    }

    pub fn load(source: &TableSource, verify: bool) -> Result<Self, TableError> {
        let text = source.read(tables::BRI)?;
        if verify {
            tables::verify(tables::BRI, &text)?;
        }
        Self::from_table(&text)
    }

    pub fn from_table(text: &str) -> Result<Self, TableError> {
        let mut by_key = HashMap::new();
        for (line, cells) in tables::rows(tables::BRI.name, text, &["country", "income_class"])? {
            let class: BriClass =
                cells[1].parse().map_err(|message| TableError::BadRow { table: tables::BRI.name, line, message })?;
            if class == BriClass::NonSignatory {
                return Err(TableError::BadRow {
                    table: tables::BRI.name,
                    line,
                    message: "only signatories are listed".into(),
                });
            }
            if by_key.insert(country_key(&cells[0]), class).is_some() {
                return Err(TableError::BadRow {
                    table: tables::BRI.name,
                    line,
                    message: format!("country {:?} listed twice", cells[0]),
                });
            }
        }
        Ok(Self { by_key })
    }

    /// Class for a country exactly as spelled in the table; absent countries are non-signatories.
    pub fn class_of(&self, country: &str) -> BriClass {
        self.by_key.get(&country_key(country)).copied().unwrap_or(BriClass::NonSignatory)
    }

    /// Like [`class_of`](Self::class_of) but resolves aliases through the region table first.
    pub fn class_with_aliases(&self, country: &str, regions: &RegionMap) -> BriClass {
        match self.class_of(country) {
            BriClass::NonSignatory => {
                regions.canonical_name(country).map(|c| self.class_of(c)).unwrap_or(BriClass::NonSignatory)
            }
            c => c,
        }
    }

    pub fn count(&self, class: BriClass) -> usize {
        self.by_key.values().filter(|c| **c == class).count()
    }
}
