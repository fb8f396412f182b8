//! The question template pool.
//!
//! Slots are written `<A>`, `<B>`, `<C>` (operands) and `<R>` (reference).
//! Generation draws only from the generative templates; the recognition-only
//! aliases cover common rewordings so that classification accepts them too.

use std::sync::OnceLock;

use regex::Regex;

use crate::qa::{PlacementMode, QuestionCategory, SizeVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateVariant {
    Plain,
    Size(SizeVariant),
    /// `true` when the question asks whether there is a gap (answer inverted).
    Contact { asks_gap: bool },
    Placement(PlacementMode),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Template {
    pub category: QuestionCategory,
    pub text: &'static str,
    pub variant: TemplateVariant,
    pub generative: bool,
}

const fn gen(category: QuestionCategory, text: &'static str, variant: TemplateVariant) -> Template {
    Template {
        category,
        text,
        variant,
        generative: true,
    }
}

const fn alias(category: QuestionCategory, text: &'static str) -> Template {
    Template {
        category,
        text,
        variant: TemplateVariant::Plain,
        generative: false,
    }
}

use QuestionCategory::*;
use TemplateVariant::Plain;

pub const TEMPLATES: &[Template] = &[
    gen(ObjectCount, "How many <A> are there in the room?", Plain),
    gen(ObjectCount, "What is the total number of <A>?", Plain),
    gen(
        ObjectSize,
        "What is the length of the longest side of <A> in meters?",
        TemplateVariant::Size(SizeVariant::LongestSide),
    ),
    gen(
        ObjectSize,
        "What is the size of <A> in square meters?",
        TemplateVariant::Size(SizeVariant::FootprintArea),
    ),
    gen(
        ObjectSize,
        "What is the length of the shortest side of <A> in meters?",
        TemplateVariant::Size(SizeVariant::ShortestSide),
    ),
    gen(ObjectSize, "How tall is <A> in meters?", TemplateVariant::Size(SizeVariant::Height)),
    gen(RoomSize, "What is the size of the room in square meters?", Plain),
    gen(RoomType, "Based on object layout, what is the most likely type of this room?", Plain),
    gen(RoomType, "Is this space a living room, a kitchen, or something else?", Plain),
    gen(RelativeDistance, "Which of these objects (<A>, <B>, <C>) is the closest to <R>?", Plain),
    gen(
        RelativeDistance,
        "Among the listed objects (<A>, <B>, <C>), which one is closest to <R>?",
        Plain,
    ),
    gen(AbsoluteDistance, "What is the distance between <A> and <B> in meters?", Plain),
    gen(AbsoluteDistance, "Measure the distance from <A> to <B> in meters.", Plain),
    gen(AbsoluteDistance, "How far is <A> from <B> in meters?", Plain),
    gen(
        RelativeDirection,
        "If I am standing by <A> and facing <B>, which side is object <R> on?",
        Plain,
    ),
    gen(RelativeDirection, "From the viewpoint at <A> facing <B>, where is <R>?", Plain),
    gen(
        ContactRelationship,
        "Is there a gap between <A> and <B>?",
        TemplateVariant::Contact { asks_gap: true },
    ),
    gen(
        ContactRelationship,
        "Are <A> and <B> touching each other?",
        TemplateVariant::Contact { asks_gap: false },
    ),
    gen(
        OperationFeasibility,
        "Considering only object sizes, is there enough space to put <A> in <B>?",
        TemplateVariant::Placement(PlacementMode::Inside),
    ),
    gen(
        OperationFeasibility,
        "Considering only object dimensions, is it feasible to place <A> on <B>?",
        TemplateVariant::Placement(PlacementMode::OnTop),
    ),
    alias(ObjectCount, "How many <A> are in the room?"),
    alias(ObjectSize, "What is the length of the longest side of <A>?"),
    alias(RoomSize, "What is the size of this room in square meters?"),
    alias(RoomType, "Based on the object layout, what is the most likely type of room<X>?"),
    alias(RelativeDistance, "Which of these objects (<A>, <B>, <C>) is closest to <R>?"),
    alias(RelativeDistance, "Among the <A>, <B>, and <C>, which object is closest to <R>?"),
    alias(RelativeDirection, "If I am standing by <A> and facing <B>, which side is <R> on?"),
];

pub fn generative(category: QuestionCategory) -> impl Iterator<Item = &'static Template> {
    TEMPLATES
        .iter()
        .filter(move |t| t.generative && t.category == category)
}

/// Templates paired with their full-match regexes, slot-free templates
/// first so that e.g. the room-size question is not read as an object-size
/// question about "the room".
pub(crate) fn matchers() -> &'static [(Regex, &'static Template)] {
    static CELL: OnceLock<Vec<(Regex, &'static Template)>> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut ordered: Vec<&'static Template> = TEMPLATES.iter().collect();
        ordered.sort_by_key(|t| t.text.contains('<'));
        ordered.into_iter().map(|t| (template_regex(t.text), t)).collect()
    })
}

fn template_regex(text: &str) -> Regex {
    let mut pattern = String::from(r"(?i)^\s*");
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        let end = start + rest[start..].find('>').expect("closed slot");
        pattern.push_str(&regex::escape(&rest[..start]));
        pattern.push_str(if &rest[start..=end] == "<X>" { "(.*?)" } else { "(.+?)" });
        rest = &rest[end + 1..];
    }
    pattern.push_str(&regex::escape(rest));
    pattern.push_str(r"\s*$");
    Regex::new(&pattern).expect("template regex")
}

/// Fills `<A>`, `<B>`, `<C>`, `<R>` in order of the given pairs.
pub fn instantiate(text: &str, slots: &[(&str, &str)]) -> String {
    let mut out = text.to_string();
    for (slot, value) in slots {
        out = out.replace(slot, value);
    }
    out
}

/// English plural of a category name for counting questions.
pub fn pluralize(noun: &str) -> String {
    let lower = noun.to_lowercase();
    let ends = |s: &str| lower.ends_with(s);
    if ends("shelf") {
        format!("{}ves", &noun[..noun.len() - 1])
    } else if ends("s") || ends("x") || ends("z") || ends("ch") || ends("sh") {
        format!("{noun}es")
    } else if ends("y") && !["ay", "ey", "iy", "oy", "uy"].iter().any(|v| lower.ends_with(v)) {
        format!("{}ies", &noun[..noun.len() - 1])
    } else {
        format!("{noun}s")
    }
}
