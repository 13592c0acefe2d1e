//! Critical-technology areas and scientific fields, assigned from concept tags.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::record::PublicationRecord;
use super::tables::{self, TableError, TableSource};

pub const AREA_TAGS: [&str; 11] = [
    "advanced_communications",
    "artificial_intelligence",
    "biotech",
    "data_management_security",
    "disaster_resilience",
    "energy",
    "high_performance_computing",
    "materials_science",
    "quantum_technology",
    "robotics_advanced_manufacturing",
    "semiconductors",
];

pub const FIELD_TAGS: [&str; 6] = [
    "chemistry_materials_science",
    "computer_science",
    "earth_life_sciences",
    "humanities_social_sciences",
    "mathematics_physics_engineering",
    "medicine",
];

fn concept_key(name: &str) -> String {
    name.trim().to_lowercase()
}

/// Tags carried by one paper. Both sets are sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopicTags {
    pub areas: BTreeSet<&'static str>,
    pub fields: BTreeSet<&'static str>,
}

impl TopicTags {
    /// A paper in any critical-technology area belongs to the composite area.
    pub fn in_any_area(&self) -> bool {
        !self.areas.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct TopicMap {
    // concept key -> area tag indices
    areas: HashMap<String, Vec<usize>>,
    // level-0 concept key -> field tag indices
    fields: HashMap<String, Vec<usize>>,
}

impl TopicMap {
    pub fn builtin() -> Self {
        Self::load(&TableSource::Builtin, true).expect("shipped topic table is valid")
    }

    pub fn load(source: &TableSource, verify: bool) -> Result<Self, TableError> {
        let text = source.read(tables::TOPICS)?;
        if verify {
            tables::verify(tables::TOPICS, &text)?;
        }
        Self::from_table(&text)
    }

    pub fn from_table(text: &str) -> Result<Self, TableError> {
        let mut areas: HashMap<String, Vec<usize>> = HashMap::new();
        let mut fields: HashMap<String, Vec<usize>> = HashMap::new();
        let mut seen_areas = BTreeSet::new();
        let mut seen_fields = BTreeSet::new();
        for (line, cells) in tables::rows(tables::TOPICS.name, text, &["kind", "tag", "concept"])? {
            let bad = |message: String| TableError::BadRow { table: tables::TOPICS.name, line, message };
            let (tags, map, seen): (&[&str], _, _) = match cells[0].as_str() {
                "area" => (&AREA_TAGS, &mut areas, &mut seen_areas),
                "field" => (&FIELD_TAGS, &mut fields, &mut seen_fields),
                other => return Err(bad(format!("unknown kind {other:?}"))),
            };
            let idx =
                tags.iter().position(|t| *t == cells[1]).ok_or_else(|| bad(format!("unknown tag {:?}", cells[1])))?;
            seen.insert(idx);
            let entry = map.entry(concept_key(&cells[2])).or_default();
            if !entry.contains(&idx) {
                entry.push(idx);
            }
        }
        if seen_areas.len() != AREA_TAGS.len() || seen_fields.len() != FIELD_TAGS.len() {
            return Err(TableError::Invalid {
                table: tables::TOPICS.name,
                message: format!(
                    "expected 11 areas and 6 fields, found {} and {}",
                    seen_areas.len(),
                    seen_fields.len()
                ),
            });
        }
        Ok(Self { areas, fields })
    }

    pub fn classify(&self, record: &PublicationRecord) -> TopicTags {
        let mut tags = TopicTags::default();
        for concept in &record.concepts {
            let key = concept_key(&concept.name);
            if let Some(idx) = self.areas.get(&key) {
                tags.areas.extend(idx.iter().map(|i| AREA_TAGS[*i]));
            }
            if concept.level == 0 {
                if let Some(idx) = self.fields.get(&key) {
                    tags.fields.extend(idx.iter().map(|i| FIELD_TAGS[*i]));
                }
            }
        }
        tags
    }

    /// Concepts per tag, for inspection and tests.
    pub fn concepts_by_tag(&self) -> BTreeMap<&'static str, BTreeSet<String>> {
        let mut out: BTreeMap<&'static str, BTreeSet<String>> = BTreeMap::new();
        for (concept, idx) in &self.areas {
            for i in idx {
                out.entry(AREA_TAGS[*i]).or_default().insert(concept.clone());
            }
        }
        for (concept, idx) in &self.fields {
            for i in idx {
                out.entry(FIELD_TAGS[*i]).or_default().insert(concept.clone());
            }
        }
        out
    }
}
