//! Question classification, per-category reasoning plans, scene
//! representations and prompt assembly.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cognition::{
    describe_position, descriptions_json, quantize_to_grid, CognitionError, GlobalMap, PositionDescription,
};
use crate::geometry::Vec3;
use crate::io::{format_fixed, round1};
use crate::qa::QuestionCategory;
use crate::templates;

/// Version tag of the shipped reasoning prompt template.
pub const PROMPT_TEMPLATE_VERSION: &str = "v1";

/// Scaffold for [`assemble_prompt`]; `{scene}`, `{question}` and `{steps}`
/// are substituted once each.
pub const REASONING_TEMPLATE: &str = include_str!("../assets/prompts/reasoning_v1.txt");

/// Per-frame object description prompt for downstream vision-language
/// pipelines. `{categories}` lists the categories of interest.
pub const OBJECT_DESCRIPTION_PROMPT: &str = include_str!("../assets/prompts/object_description_v1.txt");

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("question does not match any known template: {0:?}")]
    Unclassified(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("unknown representation kind {0:?} (expected map3d, grid2d or description)")]
    UnknownKind(String),
    #[error(transparent)]
    Cognition(#[from] CognitionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationKind {
    #[serde(rename = "map3d")]
    Map3d,
    #[serde(rename = "grid2d")]
    Grid2d,
    Description,
}

impl RepresentationKind {
    pub const ALL: [RepresentationKind; 3] =
        [RepresentationKind::Map3d, RepresentationKind::Grid2d, RepresentationKind::Description];

    pub fn as_str(&self) -> &'static str {
        match self {
            RepresentationKind::Map3d => "map3d",
            RepresentationKind::Grid2d => "grid2d",
            RepresentationKind::Description => "description",
        }
    }
}

impl fmt::Display for RepresentationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RepresentationKind {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RepresentationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| PromptError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningPlan {
    pub category: QuestionCategory,
    pub steps: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub scene_representation_kind: RepresentationKind,
    pub scene_text: String,
    pub question: String,
    pub plan: ReasoningPlan,
    pub rendered: String,
}

/// Maps a question onto its category by matching it against the template
/// pool.
pub fn classify_question(question: &str) -> Result<QuestionCategory, PromptError> {
    if question.trim().is_empty() {
        return Err(PromptError::EmptyInput("question"));
    }
    templates::matchers()
        .iter()
        .find(|(re, _)| re.is_match(question))
        .map(|(_, t)| t.category)
        .ok_or_else(|| PromptError::Unclassified(question.to_string()))
}

fn plan_steps(category: QuestionCategory) -> &'static [&'static str] {
    use QuestionCategory::*;
    match category {
        ObjectCount => &[
            "Identify the object category the question asks about.",
            "List every object of that category in the scene representation with its position.",
            "Merge entries whose positions coincide, since they describe the same instance.",
            "Count qualifying instances and answer with that number.",
        ],
        ObjectSize => &[
            "Identify the object the question asks about.",
            "Locate the object in the scene and recall typical dimensions for its category.",
            "Determine the dimension the question asks for: longest side, shortest side, height or footprint area.",
            "Report that value in the unit requested.",
        ],
        RoomSize => &[
            "Identify the objects that lie closest to the walls on every side.",
            "Estimate the extent of the floor along both horizontal axes from those positions.",
            "Multiply the two extents, allowing for free space beyond the outermost objects.",
            "Report the floor area in square meters.",
        ],
        RoomType => &[
            "List the object categories present in the scene.",
            "Note which of them are characteristic of particular room functions.",
            "Weigh the evidence from the furniture arrangement as a whole.",
            "Name the most likely room type.",
        ],
        RelativeDistance => &[
            "Identify the reference object and every candidate object named in the question.",
            "Estimate the coordinates of each of these objects from the scene representation.",
            "Compute the pairwise distances between the reference object and each candidate.",
            "Select the candidate with the smallest distance as the answer.",
        ],
        AbsoluteDistance => &[
            "Identify the two objects named in the question.",
            "Estimate the coordinates of both objects from the scene representation.",
            "Compute the straight-line distance between their centers.",
            "Report the distance in meters.",
        ],
        RelativeDirection => &[
            "Identify the standing object, the facing object and the queried object.",
            "Estimate the horizontal coordinates of all three objects.",
            "Measure the clockwise angle from the facing direction to the direction of the queried object.",
            "Map the angle to front, right, back or left and answer with that side.",
        ],
        ContactRelationship => &[
            "Identify the two objects named in the question.",
            "Estimate the position and extent of each object.",
            "Compute the smallest gap between their bounding boxes.",
            "Treat a gap of at most a few centimeters as contact and answer yes or no.",
        ],
        OperationFeasibility => &[
            "Identify the object to be moved and the object that would hold it.",
            "Estimate the width, depth and height of both objects.",
            "Compare the footprints, allowing a quarter turn, and for placing inside also compare heights.",
            "Answer yes if the moved object fits, otherwise no.",
        ],
    }
}

pub fn reasoning_plan(category: QuestionCategory) -> ReasoningPlan {
    ReasoningPlan {
        category,
        steps: plan_steps(category).iter().map(|s| s.to_string()).collect(),
    }
}

/// Renders a global map as prompt text, without a trailing newline.
///
/// * `map3d`: `category: (x, y, z)` per object.
/// * `grid2d`: `cell (i, j): categories` per occupied cell of size `cell_size`.
/// * `description`: a JSON dictionary of position descriptions relative to
///   the map origin, with `reference_front` as the forward direction.
pub fn render_representation(
    map: &GlobalMap,
    kind: RepresentationKind,
    cell_size: f64,
    reference_front: [f64; 2],
) -> Result<String, PromptError> {
    if map.is_empty() {
        return Err(PromptError::EmptyInput("map"));
    }
    let lines: Vec<String> = match kind {
        RepresentationKind::Map3d => map
            .entries
            .iter()
            .map(|e| {
                let p = e.global_position;
                format!(
                    "{}: ({}, {}, {})",
                    e.category,
                    format_fixed(round1(p.x), 1),
                    format_fixed(round1(p.y), 1),
                    format_fixed(round1(p.z), 1)
                )
            })
            .collect(),
        RepresentationKind::Grid2d => {
            let grid = quantize_to_grid(map, cell_size)?;
            grid.cells
                .iter()
                .map(|((i, j), ids)| {
                    let cats: Vec<&str> = ids
                        .iter()
                        .map(|id| map.get(id).map(|e| e.category.as_str()).unwrap_or(id))
                        .collect();
                    format!("cell ({i}, {j}): {}", cats.join(", "))
                })
                .collect()
        }
        RepresentationKind::Description => {
            let descriptions = map
                .entries
                .iter()
                .map(|e| {
                    Ok(PositionDescription {
                        object_id: e.object_id.clone(),
                        category: e.category.clone(),
                        text: describe_position(Vec3::ZERO, e.global_position, reference_front)?,
                    })
                })
                .collect::<Result<Vec<_>, CognitionError>>()?;
            vec![descriptions_json(&descriptions)]
        }
    };
    Ok(lines.join("\n"))
}

/// Fills the reasoning template. Steps are numbered from 1, one per line.
pub fn assemble_prompt(scene_text: &str, question: &str, plan: &ReasoningPlan) -> Result<String, PromptError> {
    if scene_text.trim().is_empty() {
        return Err(PromptError::EmptyInput("scene text"));
    }
    if question.trim().is_empty() {
        return Err(PromptError::EmptyInput("question"));
    }
    if plan.steps.is_empty() || plan.steps.iter().any(|s| s.trim().is_empty()) {
        return Err(PromptError::EmptyInput("plan steps"));
    }
    let mut steps = String::new();
    for (k, s) in plan.steps.iter().enumerate() {
        let _ = writeln!(steps, "{}. {s}", k + 1);
    }
    // substitute in one left-to-right pass so placeholder-like text inside
    // the parts is left alone
    let mut out = String::with_capacity(REASONING_TEMPLATE.len() + scene_text.len() + question.len() + steps.len());
    let mut rest = REASONING_TEMPLATE;
    for (placeholder, value) in [("{scene}", scene_text), ("{question}", question), ("{steps}", steps.as_str())] {
        let at = rest.find(placeholder).expect("template placeholder");
        out.push_str(&rest[..at]);
        out.push_str(value);
        rest = &rest[at + placeholder.len()..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Classifies `question`, renders the map and assembles the prompt.
pub fn build_prompt_bundle(
    map: &GlobalMap,
    kind: RepresentationKind,
    cell_size: f64,
    reference_front: [f64; 2],
    question: &str,
) -> Result<PromptBundle, PromptError> {
    let plan = reasoning_plan(classify_question(question)?);
    let scene_text = render_representation(map, kind, cell_size, reference_front)?;
    let rendered = assemble_prompt(&scene_text, question, &plan)?;
    Ok(PromptBundle {
        scene_representation_kind: kind,
        scene_text,
        question: question.to_string(),
        plan,
        rendered,
    })
}

/// The object description prompt with `{categories}` filled in.
pub fn object_description_prompt(categories: &[&str]) -> String {
    OBJECT_DESCRIPTION_PROMPT.replacen("{categories}", &categories.join(", "), 1)
}
