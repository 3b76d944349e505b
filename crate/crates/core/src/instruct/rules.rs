//! Rule grammar for instruction dissection and landmark phrase grounding.

use std::ops::Range;

use serde::Serialize;

use crate::landmarks::{LandmarkKind, LandmarkRegistry};

use super::InstructError;

const GOAL_VERBS: &[&str] = &[
    "navigate back to",
    "navigate to",
    "go back to",
    "go to",
    "return to",
    "head back to",
    "head to",
    "move to",
    "drive to",
    "proceed to",
    "travel to",
    "get to",
];

const AVOID_MARKERS: &[&str] = &[
    "avoid",
    "avoiding",
    "stay away from",
    "staying away from",
    "keep away from",
    "keeping away from",
    "stay out of",
    "keep out of",
    "steer clear of",
    "do not enter",
    "don't enter",
    "never enter",
    "go around",
    "detour around",
    "bypass",
];

const PREFER_MARKERS: &[&str] = &[
    "prefer",
    "preferring",
    "utilize",
    "utilizing",
    "utilise",
    "use",
    "using",
    "stick to",
    "sticking to",
    "stay in",
    "stay on",
    "keep to",
    "travel through",
    "go through",
    "favor",
    "favour",
];

const SAFETY_MARKERS: &[&str] = &[
    "maintain",
    "maintaining",
    "keep a safe distance from",
    "keep safe distance from",
    "keep a safe distance to",
    "keep clear of",
    "be careful around",
    "watch out for",
    "mind",
];

const RESET_PHRASES: &[&str] = &["reset the map", "reset map", "clear the map", "reset the grid", "reset"];

const CONNECTIVES: &[&str] = &[" and then ", " and ", " then ", " but "];

/// Words that open a constraint clause mid-sentence and stay with it.
const CLAUSE_OPENERS: &[&str] = &[" while ", " using ", " avoiding ", " preferring ", " staying away from ", " keeping away from "];

const LEADING_FILLER: &[&str] = &["please ", "and ", "then ", "also ", "first ", "finally ", "while ", "but "];

const DETERMINERS: &[&str] = &["the", "a", "an", "any", "all", "our", "every"];

const GENERIC_SUFFIXES: &[&str] = &["area", "areas", "zone", "zones", "region", "regions", "section"];

const PEDESTRIAN_WORDS: &[&str] = &["pedestrian", "pedestrians", "people", "person", "persons", "humans", "workers", "walkers"];

const QUALIFIER_CUTS: &[&str] = &[
    " beside ", " next to ", " near ", " by ", " to ", " for ", " in order ", " so ", " with ", " from ",
    " at ", " on ", " before ", " after ",
];

/// (keyword sequence, kinds it denotes)
const KIND_KEYWORDS: &[(&str, &[LandmarkKind])] = &[
    ("repair", &[LandmarkKind::Repair]),
    ("repairs", &[LandmarkKind::Repair]),
    ("construction", &[LandmarkKind::Repair]),
    ("maintenance", &[LandmarkKind::Repair]),
    ("pothole", &[LandmarkKind::Repair]),
    ("potholes", &[LandmarkKind::Repair]),
    ("hazard", &[LandmarkKind::Repair]),
    ("hazards", &[LandmarkKind::Repair]),
    ("restricted", &[LandmarkKind::Repair, LandmarkKind::PedestrianZone]),
    ("lane", &[LandmarkKind::Lane]),
    ("lanes", &[LandmarkKind::Lane]),
    ("aisle", &[LandmarkKind::Lane]),
    ("aisles", &[LandmarkKind::Lane]),
    ("corridor", &[LandmarkKind::Lane]),
    ("corridors", &[LandmarkKind::Lane]),
    ("open space", &[LandmarkKind::Lane]),
    ("empty space", &[LandmarkKind::Lane]),
    ("free space", &[LandmarkKind::Lane]),
    ("free areas", &[LandmarkKind::Lane]),
    ("open areas", &[LandmarkKind::Lane]),
    ("walkway", &[LandmarkKind::PedestrianZone]),
    ("walkways", &[LandmarkKind::PedestrianZone]),
    ("crosswalk", &[LandmarkKind::PedestrianZone]),
    ("pedestrian zone", &[LandmarkKind::PedestrianZone]),
    ("storage", &[LandmarkKind::Storage]),
    ("shelf", &[LandmarkKind::Shelf]),
    ("shelves", &[LandmarkKind::Shelf]),
    ("rack", &[LandmarkKind::Shelf]),
    ("racks", &[LandmarkKind::Shelf]),
];

const NUMBER_WORDS: &[(&str, &str)] = &[
    ("zero", "0"), ("one", "1"), ("two", "2"), ("three", "3"), ("four", "4"), ("five", "5"),
    ("six", "6"), ("seven", "7"), ("eight", "8"), ("nine", "9"), ("ten", "10"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConstraintKind {
    Avoid,
    Prefer,
    Safety,
}

/// A recognised clause: its kind, the span of the input it came from and
/// the object phrase after the marker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintSpan {
    pub kind: ConstraintKind,
    pub text: String,
    pub span: Range<usize>,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskSpan {
    pub text: String,
    pub span: Range<usize>,
    pub object: String,
}

/// Task definition, action format and semantic constraints of an
/// instruction.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct InstructionParts {
    pub task: Option<TaskSpan>,
    pub action_format: Vec<String>,
    pub constraints: Vec<ConstraintSpan>,
}

impl InstructionParts {
    pub fn constraint_texts(&self) -> Vec<&str> {
        self.constraints.iter().map(|c| c.text.as_str()).collect()
    }

    pub fn wants_safe_distance(&self) -> bool {
        self.constraints.iter().any(|c| c.kind == ConstraintKind::Safety)
    }
}

/// Splits `text` into clause spans at punctuation and connectives.
fn clauses(text: &str) -> Vec<Range<usize>> {
    let lower = text.to_ascii_lowercase();
    let mut cuts: Vec<(usize, usize)> = Vec::new();
    for (i, ch) in lower.char_indices() {
        if matches!(ch, ',' | ';' | '.' | '!' | '?' | '\n') {
            cuts.push((i, i + ch.len_utf8()));
        }
    }
    for conn in CONNECTIVES.iter().chain(CLAUSE_OPENERS) {
        let mut from = 0;
        while let Some(pos) = lower[from..].find(conn) {
            let start = from + pos;
            let end = if CLAUSE_OPENERS.contains(conn) { start + 1 } else { start + conn.len() };
            if !cuts.iter().any(|&(s, e)| start < e && s < start + conn.len()) {
                cuts.push((start, end));
            }
            from = start + conn.len();
        }
    }
    cuts.sort_unstable();
    let mut spans = Vec::new();
    let mut pos = 0;
    for (s, e) in cuts {
        if s >= pos {
            spans.push(pos..s);
            pos = e;
        }
    }
    spans.push(pos..text.len());
    spans
        .into_iter()
        .filter_map(|r| trim_span(text, r))
        .collect()
}

fn trim_span(text: &str, r: Range<usize>) -> Option<Range<usize>> {
    let slice = &text[r.clone()];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    let start = r.start + lead;
    let end = r.end - trail;
    (start < end).then_some(start..end)
}

/// Strips leading filler words, returning the advanced span.
fn strip_filler(text: &str, mut r: Range<usize>) -> Range<usize> {
    loop {
        let lower = text[r.clone()].to_ascii_lowercase();
        match LEADING_FILLER.iter().find(|f| lower.starts_with(*f)) {
            Some(f) => match trim_span(text, r.start + f.len()..r.end) {
                Some(next) => r = next,
                None => return r,
            },
            None => return r,
        }
    }
}

fn word_prefix<'a>(lower: &str, candidates: &[&'a str]) -> Option<&'a str> {
    // longest match first; must end at a word boundary
    let mut best: Option<&str> = None;
    for c in candidates {
        if lower.starts_with(c)
            && lower[c.len()..].chars().next().is_none_or(|ch| !ch.is_alphanumeric())
            && best.is_none_or(|b| c.len() > b.len())
        {
            best = Some(c);
        }
    }
    best
}

fn object_after(text: &str, r: &Range<usize>, marker_len: usize) -> String {
    text[r.start + marker_len..r.end].trim().to_string()
}

/// Deterministic segmentation of an instruction into task, action keywords
/// and constraints.
pub fn dissect(text: &str) -> Result<InstructionParts, InstructError> {
    if text.trim().is_empty() {
        return Err(InstructError::EmptyInstruction);
    }
    let mut parts = InstructionParts::default();
    let mut last_constraint: Option<ConstraintKind> = None;
    for clause in clauses(text) {
        let clause = strip_filler(text, clause);
        let lower = text[clause.clone()].to_ascii_lowercase();
        if LEADING_FILLER.iter().any(|f| f.trim_end() == lower) {
            continue;
        }

        if let Some(verb) = word_prefix(&lower, GOAL_VERBS) {
            if parts.task.is_none() {
                parts.task = Some(TaskSpan {
                    text: text[clause.clone()].to_string(),
                    object: object_after(text, &clause, verb.len()),
                    span: clause.clone(),
                });
                parts.action_format.push("SET_GOAL".into());
            }
            last_constraint = None;
            continue;
        }
        if word_prefix(&lower, RESET_PHRASES).is_some() {
            parts.action_format.push("RESET_MAP".into());
            last_constraint = None;
            continue;
        }
        let marked = [
            (ConstraintKind::Safety, SAFETY_MARKERS),
            (ConstraintKind::Avoid, AVOID_MARKERS),
            (ConstraintKind::Prefer, PREFER_MARKERS),
        ]
        .into_iter()
        .filter_map(|(kind, markers)| word_prefix(&lower, markers).map(|m| (kind, m)))
        .max_by_key(|(_, m)| m.len());

        let (kind, marker_len) = match marked {
            Some((kind, marker)) => (kind, marker.len()),
            None => match last_constraint {
                Some(kind) => (kind, 0),
                None => continue,
            },
        };
        let object = object_after(text, &clause, marker_len);
        let kind = refine_kind(kind, &object);
        let keyword = match kind {
            ConstraintKind::Avoid => Some("AVOID_AREAS"),
            ConstraintKind::Prefer => Some("PREFER_AREAS"),
            ConstraintKind::Safety => None,
        };
        if let Some(k) = keyword {
            if !parts.action_format.iter().any(|a| a == k) {
                parts.action_format.push(k.into());
            }
        }
        parts.constraints.push(ConstraintSpan {
            kind,
            text: text[clause.clone()].to_string(),
            span: clause,
            object,
        });
        last_constraint = Some(kind);
    }
    if parts.task.is_none() && parts.action_format.is_empty() && parts.constraints.is_empty() {
        return Err(InstructError::NoTaskFound);
    }
    Ok(parts)
}

/// A "maintain"/"keep clear" clause that does not mention people is an
/// avoid constraint on its object; an avoid clause naming people is a
/// safety constraint.
fn refine_kind(kind: ConstraintKind, object: &str) -> ConstraintKind {
    let mentions_people = words(object).iter().any(|w| PEDESTRIAN_WORDS.contains(&w.as_str()))
        && !object.to_ascii_lowercase().contains("pedestrian zone");
    match kind {
        ConstraintKind::Safety if mentions_people || object.to_ascii_lowercase().contains("distance") => {
            ConstraintKind::Safety
        }
        ConstraintKind::Safety => ConstraintKind::Avoid,
        ConstraintKind::Avoid if mentions_people => ConstraintKind::Safety,
        other => other,
    }
}

fn words(phrase: &str) -> Vec<String> {
    phrase
        .to_ascii_lowercase()
        .split(|c: char| !c.is_alphanumeric() && c != '_')
        .filter(|w| !w.is_empty())
        .map(|w| {
            NUMBER_WORDS
                .iter()
                .find(|(word, _)| *word == w)
                .map_or_else(|| w.to_string(), |(_, digit)| digit.to_string())
        })
        .collect()
}

fn squash(words: &[String]) -> String {
    words.iter().flat_map(|w| w.chars().filter(|c| c.is_alphanumeric())).collect()
}

fn name_key(name: &str) -> String {
    name.to_ascii_lowercase().chars().filter(|c| c.is_alphanumeric()).collect()
}

/// Removes a leading determiner and trailing qualifiers ("beside Shelf 2",
/// "to pick up the box") from an object phrase.
pub fn core_phrase(object: &str) -> String {
    let mut phrase = format!(" {} ", object.trim());
    let lower = phrase.to_ascii_lowercase();
    if let Some(cut) = QUALIFIER_CUTS
        .iter()
        .filter_map(|q| lower.find(q))
        .filter(|&i| i > 0)
        .min()
    {
        phrase.truncate(cut);
    }
    let mut tokens: Vec<&str> = phrase.split_whitespace().collect();
    while tokens
        .first()
        .is_some_and(|t| DETERMINERS.contains(&t.to_ascii_lowercase().as_str()))
    {
        tokens.remove(0);
    }
    tokens
        .join(" ")
        .trim_end_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}

fn match_by_name(phrase: &str, registry: &LandmarkRegistry) -> Option<String> {
    let mut w = words(phrase);
    while w.first().is_some_and(|t| DETERMINERS.contains(&t.as_str())) {
        w.remove(0);
    }
    let find = |key: &str| {
        registry
            .names()
            .find(|n| name_key(n) == key)
            .map(str::to_string)
    };
    if let Some(n) = find(&squash(&w)) {
        return Some(n);
    }
    let mut trimmed = w.clone();
    while trimmed.len() > 1 && trimmed.last().is_some_and(|t| GENERIC_SUFFIXES.contains(&t.as_str())) {
        trimmed.pop();
        if let Some(n) = find(&squash(&trimmed)) {
            return Some(n);
        }
    }
    if let Some(last) = trimmed.last_mut() {
        if last.len() > 3 && last.ends_with('s') {
            last.pop();
            return find(&squash(&trimmed));
        }
    }
    None
}

/// Landmark kinds a phrase denotes through keywords such as "lanes" or
/// "repair".
pub fn kinds_in(phrase: &str) -> Vec<LandmarkKind> {
    let joined = format!(" {} ", words(phrase).join(" "));
    let mut kinds = Vec::new();
    for (keyword, ks) in KIND_KEYWORDS {
        if joined.contains(&format!(" {keyword} ")) {
            for k in *ks {
                if !kinds.contains(k) {
                    kinds.push(*k);
                }
            }
        }
    }
    kinds
}

/// True if every word of the phrase is a determiner, a kind keyword or a
/// generic suffix ("the repair area", but not "the north lane").
fn is_generic(phrase: &str) -> bool {
    words(phrase).iter().all(|w| {
        DETERMINERS.contains(&w.as_str())
            || GENERIC_SUFFIXES.contains(&w.as_str())
            || KIND_KEYWORDS.iter().any(|(k, _)| k.split(' ').any(|kw| kw == w))
    })
}

/// Grounds an area phrase. A phrase that names one landmark specifically
/// grounds to it alone; a generic phrase also takes every landmark whose
/// kind it mentions, in name order after the named one.
pub fn ground_areas(object: &str, registry: &LandmarkRegistry) -> Result<Vec<String>, InstructError> {
    let phrase = core_phrase(object);
    let mut names: Vec<String> = match_by_name(&phrase, registry).into_iter().collect();
    if !names.is_empty() && !is_generic(&phrase) {
        return Ok(names);
    }
    for kind in kinds_in(&phrase) {
        for (name, _) in registry.of_kind(kind) {
            if !names.iter().any(|n| n == name) {
                names.push(name.to_string());
            }
        }
    }
    if names.is_empty() {
        Err(InstructError::UnknownLandmark(phrase))
    } else {
        Ok(names)
    }
}

/// Grounds a goal phrase to exactly one landmark.
pub fn ground_goal(object: &str, registry: &LandmarkRegistry) -> Result<String, InstructError> {
    let phrase = core_phrase(object);
    if let Some(name) = match_by_name(&phrase, registry) {
        return Ok(name);
    }
    let mut candidates: Vec<String> = Vec::new();
    for kind in kinds_in(&phrase) {
        candidates.extend(registry.of_kind(kind).map(|(n, _)| n.to_string()));
    }
    candidates.dedup();
    match candidates.len() {
        0 => Err(InstructError::UnknownLandmark(phrase)),
        1 => Ok(candidates.remove(0)),
        _ => Err(InstructError::AmbiguousLandmark { phrase, candidates }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Region;
    use crate::landmarks::Landmark;

    fn registry() -> LandmarkRegistry {
        let mut r = LandmarkRegistry::new();
        for (name, kind) in [
            ("shelf2", LandmarkKind::Shelf),
            ("shelf3", LandmarkKind::Shelf),
            ("repair_area", LandmarkKind::Repair),
            ("open_lanes", LandmarkKind::Lane),
            ("storage", LandmarkKind::Storage),
        ] {
            r.insert(name, Landmark::new(Region::cell((0, 0)), kind));
        }
        r
    }

    #[test]
    fn dissects_task_and_constraint() {
        let parts = dissect("navigate to Shelf 3 and avoid the repair area").unwrap();
        let task = parts.task.as_ref().unwrap();
        assert_eq!(task.text, "navigate to Shelf 3");
        assert_eq!(task.object, "Shelf 3");
        assert_eq!(parts.constraint_texts(), vec!["avoid the repair area"]);
        assert_eq!(parts.action_format, vec!["SET_GOAL", "AVOID_AREAS"]);
    }

    #[test]
    fn dissects_reset() {
        let parts = dissect("reset the map").unwrap();
        assert!(parts.task.is_none());
        assert_eq!(parts.action_format, vec!["RESET_MAP"]);
        assert!(parts.constraints.is_empty());
    }

    #[test]
    fn no_task() {
        assert_eq!(dissect("hello there"), Err(InstructError::NoTaskFound));
        assert_eq!(dissect("   "), Err(InstructError::EmptyInstruction));
    }

    #[test]
    fn spans_point_into_input() {
        let text = "Go to Shelf 3 while avoiding the Repair Area, and maintain safe distances from pedestrians.";
        let parts = dissect(text).unwrap();
        for c in &parts.constraints {
            assert_eq!(&text[c.span.clone()], c.text);
        }
        assert_eq!(
            parts.constraint_texts(),
            vec!["avoiding the Repair Area", "maintain safe distances from pedestrians"]
        );
        assert!(parts.wants_safe_distance());
    }

    #[test]
    fn continuation_inherits_marker() {
        let parts = dissect("Utilize empty lanes and free areas, avoid restricted zones").unwrap();
        let kinds: Vec<_> = parts.constraints.iter().map(|c| c.kind).collect();
        assert_eq!(kinds, vec![ConstraintKind::Prefer, ConstraintKind::Prefer, ConstraintKind::Avoid]);
    }

    #[test]
    fn grounding() {
        let reg = registry();
        assert_eq!(ground_goal("Shelf 3", &reg).unwrap(), "shelf3");
        assert_eq!(ground_goal("shelf three beside shelf 2", &reg).unwrap(), "shelf3");
        assert_eq!(ground_goal("the storage area", &reg).unwrap(), "storage");
        assert_eq!(
            ground_goal("the loading dock", &reg),
            Err(InstructError::UnknownLandmark("loading dock".into()))
        );
        assert!(matches!(ground_goal("the shelf", &reg), Err(InstructError::AmbiguousLandmark { .. })));
        assert_eq!(ground_areas("the repair area", &reg).unwrap(), vec!["repair_area"]);
        assert_eq!(ground_areas("open lanes", &reg).unwrap(), vec!["open_lanes"]);
        assert_eq!(ground_areas("empty lanes", &reg).unwrap(), vec!["open_lanes"]);
        assert_eq!(ground_areas("restricted zones", &reg).unwrap(), vec!["repair_area"]);
    }
}
