//! Verb normalization: lowercase, drop non-letters, map inflections of the role verbs to lemmas.

const LEMMAS: &[(&str, &[&str])] = &[
    ("conceive", &["conceived", "conceives", "conceiving", "conception"]),
    ("design", &["designed", "designs", "designing"]),
    ("lead", &["led", "leads", "leading"]),
    ("supervise", &["supervised", "supervises", "supervising", "supervision"]),
    ("coordinate", &["coordinated", "coordinates", "coordinating", "coordination"]),
    ("interpret", &["interpreted", "interprets", "interpreting", "interpretation"]),
    ("write", &["wrote", "written", "writes", "writing"]),
    ("help", &["helped", "helps", "helping"]),
    ("assist", &["assisted", "assists", "assisting"]),
    ("prepare", &["prepared", "prepares", "preparing", "preparation"]),
    ("develop", &["developed", "develops", "developing"]),
    ("collect", &["collected", "collects", "collecting", "collection"]),
    ("generate", &["generated", "generates", "generating"]),
    ("purify", &["purified", "purifies", "purifying"]),
    ("carry", &["carried", "carries", "carrying"]),
    ("do", &["did", "done", "does", "doing"]),
    ("perform", &["performed", "performs", "performing"]),
    ("conduct", &["conducted", "conducts", "conducting"]),
    ("analyze", &["analyzed", "analyzes", "analyzing", "analyse", "analysed", "analyses", "analysing", "analysis"]),
    ("participate", &["participated", "participates", "participating"]),
    ("provide", &["provided", "provides", "providing"]),
    ("contribute", &["contributed", "contributes", "contributing"]),
    ("comment", &["commented", "comments", "commenting"]),
    ("discuss", &["discussed", "discusses", "discussing", "discussion"]),
    ("edit", &["edited", "edits", "editing"]),
];

pub fn normalize_verb(raw: &str) -> String {
    let cleaned: String = raw.chars().filter(|c| c.is_alphabetic()).flat_map(char::to_lowercase).collect();
    for (lemma, forms) in LEMMAS {
        if forms.contains(&cleaned.as_str()) {
            return lemma.to_string();
        }
    }
    cleaned
}
