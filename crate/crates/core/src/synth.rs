//! Seeded synthetic corpora with planted leadership structure.
//!
//! Every paper has one or two senior leaders, placed first or last, who cite
//! their own earlier work and carry lead verbs in their contribution
//! statements. Supporters draw verbs from two support blocks. The share of
//! China-side leaders on China pairs rises linearly with the year.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use chrono::NaiveDate;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AuthorshipRecord, Concept, PublicationRecord, TopicMap, AREA_TAGS, FIELD_TAGS};
use crate::roles::ContributionRecord;

pub const LEAD_VERBS: [&str; 9] =
    ["conceive", "design", "lead", "supervise", "coordinate", "interpret", "write", "oversee", "plan"];
pub const DIRECT_VERBS: [&str; 10] =
    ["perform", "conduct", "analyze", "collect", "prepare", "develop", "generate", "purify", "measure", "assist"];
pub const INDIRECT_VERBS: [&str; 8] =
    ["participate", "provide", "contribute", "comment", "discuss", "edit", "review", "read"];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_papers: usize,
    pub seed: u64,
    pub first_year: i32,
    pub last_year: i32,
    /// Share of papers that come with contribution statements.
    pub labeled_fraction: f64,
    /// China-side leader probability on China pairs is `base + slope * (year - 2010)`.
    pub china_lead_base: f64,
    pub china_lead_slope: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_papers: 200,
            seed: 7,
            first_year: 2000,
            last_year: 2021,
            labeled_fraction: 0.6,
            china_lead_base: 0.25,
            china_lead_slope: 0.022,
        }
    }
}

impl SynthConfig {
    /// Sized so the corpus has roughly `n` authorships.
    pub fn with_authorships(n: usize, seed: u64) -> Self {
        Self { n_papers: (n as f64 / 4.5).ceil() as usize, seed, ..Self::default() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SynthCorpus {
    pub papers: Vec<PublicationRecord>,
    pub contributions: Vec<ContributionRecord>,
}

impl SynthCorpus {
    pub fn n_authorships(&self) -> usize {
        self.papers.iter().map(|p| p.authorships.len()).sum()
    }

    pub fn write_corpus<W: Write>(&self, mut w: W) -> io::Result<()> {
        for p in &self.papers {
            writeln!(w, "{}", p.to_json_line())?;
        }
        w.flush()
    }

    pub fn write_contributions<W: Write>(&self, mut w: W) -> io::Result<()> {
        for c in &self.contributions {
            writeln!(w, "{}", serde_json::to_string(c).expect("contribution serializes"))?;
        }
        w.flush()
    }

    /// Writes `corpus.jsonl` and `contributions.jsonl` into `dir`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_corpus(io::BufWriter::new(std::fs::File::create(dir.join("corpus.jsonl"))?))?;
        self.write_contributions(io::BufWriter::new(std::fs::File::create(dir.join("contributions.jsonl"))?))
    }
}

// (countries, weight) per side
const CHINA: &[&str] = &["China"];
const US: &[&str] = &["United States"];
const UK: &[&str] = &["United Kingdom"];
const EU: &[&str] = &["Germany", "France", "Italy", "Poland"];
const SOUTH_ASIA: &[&str] = &["Pakistan", "Vietnam", "Singapore", "Thailand"];
const AFRICA: &[&str] = &["Kenya", "Egypt, Arab Rep."];
const MIDDLE_EAST: &[&str] = &["Saudi Arabia"];
const JAPAN: &[&str] = &["Japan"];
const BRAZIL: &[&str] = &["Brazil"];
const AUSTRALIA: &[&str] = &["Australia"];

const TEAMS: &[(&[&[&str]], f64)] = &[
    (&[CHINA, US], 0.34),
    (&[CHINA, EU], 0.18),
    (&[CHINA, UK], 0.10),
    (&[CHINA, SOUTH_ASIA], 0.06),
    (&[CHINA, AFRICA], 0.04),
    (&[CHINA, MIDDLE_EAST], 0.03),
    (&[CHINA, JAPAN], 0.03),
    (&[CHINA, BRAZIL], 0.02),
    (&[CHINA, AUSTRALIA], 0.02),
    (&[US, EU], 0.07),
    (&[US, UK], 0.04),
    (&[EU, UK], 0.03),
    (&[CHINA, US, UK], 0.04),
];

struct Author {
    id: String,
    country: &'static str,
    institution: String,
    home_area: Option<usize>,
    papers: Vec<usize>,
}

struct Pools {
    authors: Vec<Author>,
    seniors: BTreeMap<&'static str, Vec<usize>>,
    juniors: BTreeMap<&'static str, Vec<usize>>,
}

impl Pools {
    fn new_author(&mut self, rng: &mut ChaCha8Rng, country: &'static str, tag: char) -> usize {
        let i = self.authors.len();
        let slug: String = country.chars().filter(|c| c.is_ascii_alphabetic()).take(3).collect();
        self.authors.push(Author {
            id: format!("{tag}{slug}{i:06}"),
            country,
            institution: format!("I{slug}{:02}", rng.random_range(0..12)),
            home_area: if rng.random_bool(0.8) { Some(rng.random_range(0..AREA_TAGS.len())) } else { None },
            papers: Vec::new(),
        });
        i
    }

    fn senior(&mut self, rng: &mut ChaCha8Rng, country: &'static str, pool_size: usize) -> usize {
        let have = self.seniors.get(country).map_or(0, Vec::len);
        if have < pool_size && (have == 0 || rng.random_bool(0.3)) {
            let i = self.new_author(rng, country, 'S');
            self.seniors.entry(country).or_default().push(i);
            return i;
        }
        *self.seniors[country].choose(rng).expect("pool is non-empty")
    }

    fn junior(&mut self, rng: &mut ChaCha8Rng, country: &'static str) -> usize {
        let recent = self.juniors.get(country).map_or(&[][..], |v| &v[v.len().saturating_sub(30)..]);
        if recent.is_empty() || rng.random_bool(0.4) {
            let i = self.new_author(rng, country, 'J');
            self.juniors.entry(country).or_default().push(i);
            return i;
        }
        *recent.choose(rng).expect("non-empty")
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Part {
    Lead,
    Direct,
    Indirect,
}

fn pick_verbs(rng: &mut ChaCha8Rng, part: Part) -> Vec<String> {
    let (own, others): (&[&str], [&[&str]; 2]) = match part {
        Part::Lead => (&LEAD_VERBS, [&DIRECT_VERBS, &INDIRECT_VERBS]),
        Part::Direct => (&DIRECT_VERBS, [&LEAD_VERBS, &INDIRECT_VERBS]),
        Part::Indirect => (&INDIRECT_VERBS, [&LEAD_VERBS, &DIRECT_VERBS]),
    };
    let k = rng.random_range(2..=4);
    let mut verbs: Vec<String> = own.choose_multiple(rng, k).map(|v| v.to_string()).collect();
    if rng.random_bool(0.08) {
        let block = others.choose(rng).expect("two blocks");
        verbs.push(block.choose(rng).expect("non-empty").to_string());
    }
    verbs
}

fn pick_year(rng: &mut ChaCha8Rng, first: i32, last: i32) -> i32 {
    if rng.random_bool(0.02) {
        return rng.random_range(1986..=1990);
    }
    // linearly increasing volume
    let span = (last - first + 1) as f64;
    let u: f64 = rng.random();
    let t = ((1.0 + u * ((span + 1.0).powi(2) - 1.0)).sqrt() - 1.0).floor();
    first + (t as i32).clamp(0, last - first)
}

pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let topics = TopicMap::builtin();
    let by_tag = topics.concepts_by_tag();
    let area_concepts: Vec<Vec<&str>> = AREA_TAGS
        .iter()
        .map(|t| by_tag.get(t).map(|s| s.iter().map(String::as_str).collect()).unwrap_or_default())
        .collect();
    let field_concepts: Vec<&str> =
        FIELD_TAGS.iter().filter_map(|t| by_tag.get(t).and_then(|s| s.iter().next()).map(String::as_str)).collect();
    let journals: Vec<f64> = (0..60)
        .map(|j| if j % 30 == 29 { 0.6 } else { (rng.random_range(0.0f64..3.3).exp() * 1000.0).round() / 1000.0 })
        .collect();

    let mut years: Vec<i32> = (0..cfg.n_papers).map(|_| pick_year(&mut rng, cfg.first_year, cfg.last_year)).collect();
    years.sort_unstable();
    let mut dated: Vec<(NaiveDate, bool)> = years
        .iter()
        .map(|&y| {
            let undated = rng.random_bool(0.1);
            let d = if undated {
                NaiveDate::from_ymd_opt(y, 7, 1)
            } else {
                NaiveDate::from_yo_opt(y, rng.random_range(1..=365))
            };
            (d.expect("valid date"), undated)
        })
        .collect();
    dated.sort();

    let total_weight: f64 = TEAMS.iter().map(|t| t.1).sum();
    let senior_pool = (cfg.n_papers / 25).max(4);
    let mut pools = Pools { authors: Vec::new(), seniors: BTreeMap::new(), juniors: BTreeMap::new() };
    let mut out = SynthCorpus::default();

    for (i, &(date, undated)) in dated.iter().enumerate() {
        let year = chrono::Datelike::year(&date);
        let mut u = rng.random::<f64>() * total_weight;
        let sides = TEAMS
            .iter()
            .find(|t| {
                u -= t.1;
                u < 0.0
            })
            .unwrap_or(&TEAMS[0])
            .0;
        let china_pair = sides[0] == CHINA;
        let p_china = (cfg.china_lead_base + cfg.china_lead_slope * f64::from(year - 2010)).clamp(0.02, 0.98);
        let lead_side = if china_pair && rng.random_bool(p_china) {
            0
        } else if china_pair {
            rng.random_range(1..sides.len())
        } else {
            rng.random_range(0..sides.len())
        };
        let country = |rng: &mut ChaCha8Rng, side: usize| *sides[side].choose(rng).expect("non-empty");

        let mut team: Vec<(usize, Part)> = Vec::new();
        let c = country(&mut rng, lead_side);
        team.push((pools.senior(&mut rng, c, senior_pool), Part::Lead));
        if rng.random_bool(0.25) {
            let side = if rng.random_bool(0.7) { lead_side } else { rng.random_range(0..sides.len()) };
            let c = country(&mut rng, side);
            let a = pools.senior(&mut rng, c, senior_pool);
            if team.iter().all(|t| t.0 != a) {
                team.push((a, Part::Lead));
            }
        }
        let n_support = rng.random_range(2..=6usize);
        for k in 0..n_support {
            // cover every side, then lean towards China on the support side
            let side = if k < sides.len() {
                k
            } else if china_pair && rng.random_bool(0.6) {
                0
            } else {
                rng.random_range(0..sides.len())
            };
            let c = country(&mut rng, side);
            let a =
                if rng.random_bool(0.25) { pools.senior(&mut rng, c, senior_pool) } else { pools.junior(&mut rng, c) };
            if team.iter().all(|t| t.0 != a) {
                team.push((a, if rng.random_bool(0.5) { Part::Direct } else { Part::Indirect }));
            }
        }

        // leaders at the ends, supporters shuffled between
        let n = team.len();
        let mut middle: Vec<usize> = (0..n).filter(|&k| team[k].1 != Part::Lead).collect();
        middle.shuffle(&mut rng);
        let leaders: Vec<usize> = (0..n).filter(|&k| team[k].1 == Part::Lead).collect();
        let mut order = Vec::with_capacity(n);
        let last_first = rng.random_bool(0.7);
        if !last_first {
            order.push(leaders[0]);
        } else if leaders.len() > 1 {
            order.push(leaders[1]);
        }
        order.extend(middle);
        if last_first {
            order.push(leaders[0]);
        } else if leaders.len() > 1 {
            order.push(leaders[1]);
        }

        let lead_author = team[leaders[0]].0;
        let area = match pools.authors[lead_author].home_area {
            Some(a) if rng.random_bool(0.7) => Some(a),
            _ if rng.random_bool(0.25) => None,
            _ => Some(rng.random_range(0..AREA_TAGS.len())),
        };
        let mut concepts =
            vec![Concept { name: field_concepts.choose(&mut rng).copied().unwrap_or("Biology").to_string(), level: 0 }];
        if let Some(a) = area {
            for name in area_concepts[a].choose_multiple(&mut rng, 2) {
                concepts.push(Concept { name: name.to_string(), level: 1 });
            }
        }

        let mut references: Vec<String> = Vec::new();
        if i > 0 {
            for _ in 0..rng.random_range(0..10) {
                let own = &pools.authors[team[leaders[0]].0].papers;
                let r = if !own.is_empty() && rng.random_bool(0.4) {
                    *own.choose(&mut rng).expect("non-empty")
                } else {
                    rng.random_range(i.saturating_sub(400)..i)
                };
                references.push(format!("W{r:07}"));
            }
        }

        let paper_id = format!("W{i:07}");
        let journal = rng.random_range(0..journals.len());
        let authorships = order
            .iter()
            .enumerate()
            .map(|(pos, &k)| {
                let a = &pools.authors[team[k].0];
                AuthorshipRecord {
                    author_id: a.id.clone(),
                    position: pos,
                    country: a.country.to_string(),
                    institution_id: a.institution.clone(),
                }
            })
            .collect();
        if rng.random_bool(cfg.labeled_fraction) {
            for &(a, part) in &team {
                out.contributions.push(ContributionRecord {
                    paper_id: paper_id.clone(),
                    author_id: pools.authors[a].id.clone(),
                    verbs: pick_verbs(&mut rng, part),
                });
            }
        }
        for &(a, _) in &team {
            pools.authors[a].papers.push(i);
        }
        references.sort();
        references.dedup();
        concepts.sort();
        concepts.dedup();
        out.papers.push(PublicationRecord {
            paper_id,
            year,
            pub_date: (!undated).then_some(date),
            journal_id: format!("J{journal:03}"),
            impact_factor: journals[journal],
            concepts,
            references,
            authorships,
        });
    }
    out.contributions.sort_by(|a, b| (&a.paper_id, &a.author_id).cmp(&(&b.paper_id, &b.author_id)));
    out
}
