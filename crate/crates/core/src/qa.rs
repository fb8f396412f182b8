//! Question-answer generation with geometric ground truth.
//!
//! Every answer comes from one of the small oracles in this module applied to
//! raw room annotations: centroid distances, nearest-object scans, clockwise
//! direction sectors, box gaps and dimension comparisons.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::geometry::{clockwise_angle_deg, GeometryError, Vec3};
use crate::io::{format_fixed, round1, write_jsonl, IoError};
use crate::scene::{ObjectInstance, Room, SceneError};
use crate::seed::rng_for;
use crate::templates::{self, Template, TemplateVariant};

/// Boxes closer than this count as touching.
pub const DEFAULT_CONTACT_EPSILON: f64 = 0.05;

/// Multipliers applied to the true value to build numeric distractors.
pub const DISTRACTOR_FACTORS: [f64; 3] = [0.5, 1.5, 2.0];

#[derive(Debug, Error)]
pub enum QaError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Validation(#[from] SceneError),
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionCategory {
    ObjectCount,
    ObjectSize,
    RoomSize,
    RoomType,
    RelativeDistance,
    AbsoluteDistance,
    RelativeDirection,
    ContactRelationship,
    OperationFeasibility,
}

impl QuestionCategory {
    pub const ALL: [QuestionCategory; 9] = [
        QuestionCategory::ObjectCount,
        QuestionCategory::ObjectSize,
        QuestionCategory::RoomSize,
        QuestionCategory::RoomType,
        QuestionCategory::RelativeDistance,
        QuestionCategory::AbsoluteDistance,
        QuestionCategory::RelativeDirection,
        QuestionCategory::ContactRelationship,
        QuestionCategory::OperationFeasibility,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            QuestionCategory::ObjectCount => "object_count",
            QuestionCategory::ObjectSize => "object_size",
            QuestionCategory::RoomSize => "room_size",
            QuestionCategory::RoomType => "room_type",
            QuestionCategory::RelativeDistance => "relative_distance",
            QuestionCategory::AbsoluteDistance => "absolute_distance",
            QuestionCategory::RelativeDirection => "relative_direction",
            QuestionCategory::ContactRelationship => "contact_relationship",
            QuestionCategory::OperationFeasibility => "operation_feasibility",
        }
    }
}

impl fmt::Display for QuestionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerType {
    Number,
    Choice,
    Binary,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Meters,
    SquareMeters,
    None,
}

/// Numbers are written with one fractional digit; everything else is a string.
#[derive(Debug, Clone, PartialEq)]
pub enum Answer {
    Number(f64),
    Text(String),
}

impl Answer {
    pub fn as_text(&self) -> String {
        match self {
            Answer::Number(v) => format_fixed(*v, 1),
            Answer::Text(s) => s.clone(),
        }
    }

    fn yes_no(b: bool) -> Answer {
        Answer::Text(if b { "yes" } else { "no" }.to_string())
    }
}

impl Serialize for Answer {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Answer::Number(v) => {
                if !v.is_finite() {
                    return Err(serde::ser::Error::custom("non-finite answer"));
                }
                RawValue::from_string(format_fixed(*v, 1))
                    .map_err(serde::ser::Error::custom)?
                    .serialize(s)
            }
            Answer::Text(t) => s.serialize_str(t),
        }
    }
}

impl<'de> Deserialize<'de> for Answer {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(f64),
            T(String),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::N(v) => Answer::Number(v),
            Raw::T(t) => Answer::Text(t),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub oracle: String,
    pub object_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaItem {
    pub qa_id: String,
    pub scene_id: String,
    pub room_id: String,
    pub category: QuestionCategory,
    pub question: String,
    pub answer_type: AnswerType,
    pub answer: Answer,
    pub unit: Unit,
    pub options: Option<Vec<String>>,
    pub provenance: Provenance,
}

impl QaItem {
    pub fn validate(&self) -> Result<(), QaError> {
        let bad = |m: &str| Err(QaError::InvalidQuery(format!("{}: {m}", self.qa_id)));
        if self.provenance.oracle.is_empty() {
            return bad("empty provenance");
        }
        match (&self.answer_type, &self.answer) {
            (AnswerType::Number, Answer::Number(v)) if v.is_finite() && *v >= 0.0 => {}
            (AnswerType::Number, _) => return bad("number answer must be finite and >= 0"),
            (AnswerType::Choice, Answer::Text(t)) => {
                if !self.options.as_ref().is_some_and(|o| o.contains(t)) {
                    return bad("choice answer missing from options");
                }
            }
            (AnswerType::Binary, Answer::Text(t)) if t == "yes" || t == "no" => {}
            (AnswerType::Text, Answer::Text(t)) if !t.is_empty() => {}
            _ => return bad("answer does not match answer type"),
        }
        Ok(())
    }
}

/// Clockwise angular sector around an observer's front direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSector {
    Front,
    Right,
    Back,
    Left,
}

impl DirectionSector {
    pub const ALL: [DirectionSector; 4] = [
        DirectionSector::Front,
        DirectionSector::Right,
        DirectionSector::Back,
        DirectionSector::Left,
    ];

    /// Half-open clockwise span `[start, end)` in degrees; front wraps
    /// through 0.
    pub fn span(&self) -> (f64, f64) {
        match self {
            DirectionSector::Front => (315.0, 45.0),
            DirectionSector::Right => (45.0, 135.0),
            DirectionSector::Back => (135.0, 225.0),
            DirectionSector::Left => (225.0, 315.0),
        }
    }

    /// Classifies a clockwise angle; boundaries belong to the following sector.
    pub fn from_clockwise_angle(theta_deg: f64) -> DirectionSector {
        let t = theta_deg.rem_euclid(360.0);
        if (45.0..135.0).contains(&t) {
            DirectionSector::Right
        } else if (135.0..225.0).contains(&t) {
            DirectionSector::Back
        } else if (225.0..315.0).contains(&t) {
            DirectionSector::Left
        } else {
            DirectionSector::Front
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DirectionSector::Front => "front",
            DirectionSector::Right => "right",
            DirectionSector::Back => "back",
            DirectionSector::Left => "left",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementMode {
    OnTop,
    Inside,
}

impl PlacementMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlacementMode::OnTop => "on_top",
            PlacementMode::Inside => "inside",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeVariant {
    LongestSide,
    ShortestSide,
    Height,
    FootprintArea,
}

impl SizeVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            SizeVariant::LongestSide => "longest_side",
            SizeVariant::ShortestSide => "shortest_side",
            SizeVariant::Height => "height",
            SizeVariant::FootprintArea => "footprint_area",
        }
    }
}

pub fn centroid_distance(a: &ObjectInstance, b: &ObjectInstance) -> f64 {
    a.position.distance(b.position)
}

/// Candidate with the smallest centroid distance to `reference`; ties go to
/// the lexicographically smaller id.
pub fn nearest_object(reference: &ObjectInstance, candidates: &[&ObjectInstance]) -> Result<String, QaError> {
    if candidates.is_empty() {
        return Err(QaError::InvalidQuery("no candidates".into()));
    }
    if candidates.iter().any(|c| c.object_id == reference.object_id) {
        return Err(QaError::InvalidQuery("reference listed among candidates".into()));
    }
    let best = candidates
        .iter()
        .map(|c| (centroid_distance(reference, c), c.object_id.as_str()))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)))
        .expect("nonempty");
    Ok(best.1.to_string())
}

/// Sector of `query` for an observer at `viewer_pos` looking towards
/// `facing_target`, measured in the XY-plane.
pub fn direction_of(viewer_pos: Vec3, facing_target: Vec3, query: Vec3) -> Result<DirectionSector, QaError> {
    let front = [facing_target.x - viewer_pos.x, facing_target.y - viewer_pos.y];
    let to_query = [query.x - viewer_pos.x, query.y - viewer_pos.y];
    let theta = clockwise_angle_deg(front, to_query)?;
    Ok(DirectionSector::from_clockwise_angle(theta))
}

/// Sector of `query` when the observer's front is the side facing the room
/// center. Used when a question gives no explicit facing object.
pub fn direction_toward_room_center(
    viewer_pos: Vec3,
    room_center: [f64; 2],
    query: Vec3,
) -> Result<DirectionSector, QaError> {
    direction_of(viewer_pos, Vec3::new(room_center[0], room_center[1], viewer_pos.z), query)
}

pub fn is_in_contact(a: &ObjectInstance, b: &ObjectInstance, epsilon: f64) -> bool {
    a.world_aabb().gap(&b.world_aabb()) <= epsilon
}

/// On top: the movable footprint must be strictly smaller than the support's
/// in both horizontal extents, allowing a 90° turn. Inside additionally
/// requires a smaller height.
pub fn placement_feasible(movable: &ObjectInstance, support: &ObjectInstance, mode: PlacementMode) -> bool {
    let [mx, my, mz] = movable.size;
    let [sx, sy, sz] = support.size;
    let footprint = (mx < sx && my < sy) || (my < sx && mx < sy);
    match mode {
        PlacementMode::OnTop => footprint,
        PlacementMode::Inside => footprint && mz < sz,
    }
}

/// Rounded dimension answer with its unit.
pub fn object_size_answer(obj: &ObjectInstance, variant: SizeVariant) -> (f64, Unit) {
    let [sx, sy, sz] = obj.size;
    match variant {
        SizeVariant::LongestSide => (round1(sx.max(sy).max(sz)), Unit::Meters),
        SizeVariant::ShortestSide => (round1(sx.min(sy).min(sz)), Unit::Meters),
        SizeVariant::Height => (round1(sz), Unit::Meters),
        SizeVariant::FootprintArea => (round1(sx * sy), Unit::SquareMeters),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaConfig {
    pub per_type: usize,
    pub contact_epsilon: f64,
}

impl Default for QaConfig {
    fn default() -> Self {
        QaConfig {
            per_type: 3,
            contact_epsilon: DEFAULT_CONTACT_EPSILON,
        }
    }
}

struct Builder<'a> {
    scene_id: &'a str,
    room: &'a Room,
    items: Vec<QaItem>,
}

struct Draft {
    question: String,
    answer_type: AnswerType,
    answer: Answer,
    unit: Unit,
    options: Option<Vec<String>>,
    oracle: String,
    object_ids: Vec<String>,
}

impl Builder<'_> {
    fn push(&mut self, category: QuestionCategory, k: usize, d: Draft) {
        self.items.push(QaItem {
            qa_id: format!("{}:{}:{}:{k}", self.scene_id, self.room.room_id, category.as_str()),
            scene_id: self.scene_id.to_string(),
            room_id: self.room.room_id.clone(),
            category,
            question: d.question,
            answer_type: d.answer_type,
            answer: d.answer,
            unit: d.unit,
            options: d.options,
            provenance: Provenance {
                oracle: d.oracle,
                object_ids: d.object_ids,
            },
        });
    }
}

fn pick_template(rng: &mut ChaCha8Rng, category: QuestionCategory) -> &'static Template {
    let pool: Vec<&'static Template> = templates::generative(category).collect();
    pool.choose(rng).copied().expect("every category has templates")
}

fn the(o: &ObjectInstance) -> String {
    format!("the {}", o.category)
}

/// Either an open numeric answer or, half of the time, a four-way choice
/// with distractors at fixed multiples of the truth. Falls back to the open
/// form when rounding makes two options coincide.
fn numeric_answer(rng: &mut ChaCha8Rng, truth: f64) -> (AnswerType, Answer, Option<Vec<String>>) {
    if rng.gen_bool(0.5) {
        let mut values = vec![truth];
        values.extend(DISTRACTOR_FACTORS.iter().map(|f| round1(truth * f)));
        let labels: BTreeSet<String> = values.iter().map(|v| format_fixed(*v, 1)).collect();
        if labels.len() == 4 {
            let mut options: Vec<String> = values.iter().map(|v| format_fixed(*v, 1)).collect();
            options.shuffle(rng);
            return (AnswerType::Choice, Answer::Text(format_fixed(truth, 1)), Some(options));
        }
    }
    (AnswerType::Number, Answer::Number(truth), None)
}

/// Draws up to `want` distinct ordered `k`-subsets of `0..n`, giving up
/// after a bounded number of attempts.
fn sample_tuples(
    rng: &mut ChaCha8Rng,
    n: usize,
    k: usize,
    want: usize,
    mut accept: impl FnMut(&[usize]) -> bool,
) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    if n < k {
        return out;
    }
    let mut seen = BTreeSet::new();
    let attempts = want * 50 + 50;
    for _ in 0..attempts {
        if out.len() >= want {
            break;
        }
        let t = index::sample(rng, n, k).into_vec();
        if seen.insert(t.clone()) && accept(&t) {
            out.push(t);
        }
    }
    out
}

/// Alternates between two shuffled pools so that yes/no answers stay
/// balanced when both outcomes exist.
fn interleave<T>(rng: &mut ChaCha8Rng, mut a: Vec<T>, mut b: Vec<T>, want: usize) -> Vec<T> {
    a.shuffle(rng);
    b.shuffle(rng);
    let (mut a, mut b) = (a.into_iter(), b.into_iter());
    let mut take_a = rng.gen_bool(0.5);
    let mut out = Vec::new();
    while out.len() < want {
        let next = if take_a { a.next().or_else(|| b.next()) } else { b.next().or_else(|| a.next()) };
        match next {
            Some(x) => out.push(x),
            None => break,
        }
        take_a = !take_a;
    }
    out
}

/// Generates up to `per_type` items for each question category.
///
/// Questions that name objects only name categories with exactly one
/// instance in the room, so each referent is unambiguous. Categories the
/// room cannot support (too few such objects) yield fewer items.
pub fn generate_qa_for_room(scene_id: &str, room: &Room, seed: u64, config: &QaConfig) -> Result<Vec<QaItem>, QaError> {
    room.validate()?;
    if config.per_type == 0 {
        return Err(QaError::InvalidQuery("per_type must be >= 1".into()));
    }
    let per = config.per_type;
    let mut b = Builder {
        scene_id,
        room,
        items: Vec::new(),
    };

    let mut by_category: BTreeMap<&str, Vec<&ObjectInstance>> = BTreeMap::new();
    for o in &room.objects {
        by_category.entry(o.category.as_str()).or_default().push(o);
    }
    let mut singles: Vec<&ObjectInstance> = by_category
        .values()
        .filter(|v| v.len() == 1)
        .map(|v| v[0])
        .collect();
    singles.sort_by(|a, b| a.object_id.cmp(&b.object_id));
    let rng = |c: QuestionCategory| rng_for(seed, &format!("qa/{}", c.as_str()));

    // object count
    {
        let c = QuestionCategory::ObjectCount;
        let mut r = rng(c);
        let mut cats: Vec<(&str, &Vec<&ObjectInstance>)> = by_category.iter().map(|(k, v)| (*k, v)).collect();
        cats.shuffle(&mut r);
        for (k, (cat, members)) in cats.into_iter().take(per).enumerate() {
            let t = pick_template(&mut r, c);
            let mut ids: Vec<String> = members.iter().map(|o| o.object_id.clone()).collect();
            ids.sort();
            b.push(c, k, Draft {
                question: templates::instantiate(t.text, &[("<A>", &templates::pluralize(cat))]),
                answer_type: AnswerType::Number,
                answer: Answer::Number(members.len() as f64),
                unit: Unit::None,
                options: None,
                oracle: "count_instances".into(),
                object_ids: ids,
            });
        }
    }

    // object size
    {
        let c = QuestionCategory::ObjectSize;
        let mut r = rng(c);
        let pool: Vec<&'static Template> = templates::generative(c).collect();
        let mut cands: Vec<(&ObjectInstance, &'static Template)> =
            singles.iter().flat_map(|o| pool.iter().map(move |t| (*o, *t))).collect();
        cands.shuffle(&mut r);
        for (k, (o, t)) in cands.into_iter().take(per).enumerate() {
            let TemplateVariant::Size(variant) = t.variant else {
                unreachable!("object size templates carry a size variant")
            };
            let (truth, unit) = object_size_answer(o, variant);
            let (answer_type, answer, options) = numeric_answer(&mut r, truth);
            b.push(c, k, Draft {
                question: templates::instantiate(t.text, &[("<A>", &the(o))]),
                answer_type,
                answer,
                unit,
                options,
                oracle: format!("object_size_answer:{}", variant.as_str()),
                object_ids: vec![o.object_id.clone()],
            });
        }
    }

    // room size
    {
        let c = QuestionCategory::RoomSize;
        let mut r = rng(c);
        let area = round1(room.floor_polygon.area()?);
        let t = pick_template(&mut r, c);
        let (answer_type, answer, options) = numeric_answer(&mut r, area);
        b.push(c, 0, Draft {
            question: t.text.to_string(),
            answer_type,
            answer,
            unit: Unit::SquareMeters,
            options,
            oracle: "polygon_area".into(),
            object_ids: Vec::new(),
        });
    }

    // room type
    {
        let c = QuestionCategory::RoomType;
        let mut r = rng(c);
        let mut pool: Vec<&'static Template> = templates::generative(c).collect();
        pool.shuffle(&mut r);
        for (k, t) in pool.into_iter().take(per).enumerate() {
            b.push(c, k, Draft {
                question: t.text.to_string(),
                answer_type: AnswerType::Text,
                answer: Answer::Text(room.room_type.clone()),
                unit: Unit::None,
                options: None,
                oracle: "room_label".into(),
                object_ids: Vec::new(),
            });
        }
    }

    // relative distance: reference + three candidates
    {
        let c = QuestionCategory::RelativeDistance;
        let mut r = rng(c);
        let mut seen_sets = BTreeSet::new();
        let tuples = sample_tuples(&mut r, singles.len(), 4, per, |t| {
            let mut key = t[1..].to_vec();
            key.sort();
            key.insert(0, t[0]);
            seen_sets.insert(key)
        });
        for (k, t) in tuples.into_iter().enumerate() {
            let reference = singles[t[0]];
            let cands: Vec<&ObjectInstance> = t[1..].iter().map(|&i| singles[i]).collect();
            let nearest = nearest_object(reference, &cands)?;
            let nearest_cat = room.object(&nearest).expect("candidate in room").category.clone();
            let tmpl = pick_template(&mut r, c);
            let mut options: Vec<String> = cands.iter().map(|o| o.category.clone()).collect();
            options.shuffle(&mut r);
            let mut ids = vec![reference.object_id.clone()];
            ids.extend(cands.iter().map(|o| o.object_id.clone()));
            b.push(c, k, Draft {
                question: templates::instantiate(
                    tmpl.text,
                    &[
                        ("<A>", &cands[0].category),
                        ("<B>", &cands[1].category),
                        ("<C>", &cands[2].category),
                        ("<R>", &the(reference)),
                    ],
                ),
                answer_type: AnswerType::Choice,
                answer: Answer::Text(nearest_cat),
                unit: Unit::None,
                options: Some(options),
                oracle: "nearest_object".into(),
                object_ids: ids,
            });
        }
    }

    // absolute distance
    {
        let c = QuestionCategory::AbsoluteDistance;
        let mut r = rng(c);
        let mut pairs: Vec<(usize, usize)> = (0..singles.len())
            .flat_map(|a| (a + 1..singles.len()).map(move |b| (a, b)))
            .collect();
        pairs.shuffle(&mut r);
        for (k, (i, j)) in pairs.into_iter().take(per).enumerate() {
            let (x, y) = if r.gen_bool(0.5) { (singles[i], singles[j]) } else { (singles[j], singles[i]) };
            let truth = round1(centroid_distance(x, y));
            let tmpl = pick_template(&mut r, c);
            let (answer_type, answer, options) = numeric_answer(&mut r, truth);
            b.push(c, k, Draft {
                question: templates::instantiate(tmpl.text, &[("<A>", &the(x)), ("<B>", &the(y))]),
                answer_type,
                answer,
                unit: Unit::Meters,
                options,
                oracle: "centroid_distance".into(),
                object_ids: vec![x.object_id.clone(), y.object_id.clone()],
            });
        }
    }

    // relative direction: stand at A, face B, locate R
    {
        let c = QuestionCategory::RelativeDirection;
        let mut r = rng(c);
        let tuples = sample_tuples(&mut r, singles.len(), 3, per, |t| {
            let (a, f, q) = (singles[t[0]].position, singles[t[1]].position, singles[t[2]].position);
            direction_of(a, f, q).is_ok()
        });
        for (k, t) in tuples.into_iter().enumerate() {
            let (a, f, q) = (singles[t[0]], singles[t[1]], singles[t[2]]);
            let sector = direction_of(a.position, f.position, q.position)?;
            let tmpl = pick_template(&mut r, c);
            let mut options: Vec<String> = DirectionSector::ALL.iter().map(|s| s.name().to_string()).collect();
            options.shuffle(&mut r);
            b.push(c, k, Draft {
                question: templates::instantiate(
                    tmpl.text,
                    &[("<A>", &the(a)), ("<B>", &the(f)), ("<R>", &the(q))],
                ),
                answer_type: AnswerType::Choice,
                answer: Answer::Text(sector.name().to_string()),
                unit: Unit::None,
                options: Some(options),
                oracle: "direction_of".into(),
                object_ids: vec![a.object_id.clone(), f.object_id.clone(), q.object_id.clone()],
            });
        }
    }

    // contact
    {
        let c = QuestionCategory::ContactRelationship;
        let mut r = rng(c);
        let (mut touching, mut apart) = (Vec::new(), Vec::new());
        for a in 0..singles.len() {
            for bi in a + 1..singles.len() {
                let pair = (singles[a], singles[bi]);
                if is_in_contact(pair.0, pair.1, config.contact_epsilon) {
                    touching.push(pair);
                } else {
                    apart.push(pair);
                }
            }
        }
        for (k, (x, y)) in interleave(&mut r, touching, apart, per).into_iter().enumerate() {
            let tmpl = pick_template(&mut r, c);
            let TemplateVariant::Contact { asks_gap } = tmpl.variant else {
                unreachable!("contact templates carry a polarity")
            };
            let contact = is_in_contact(x, y, config.contact_epsilon);
            b.push(c, k, Draft {
                question: templates::instantiate(tmpl.text, &[("<A>", &the(x)), ("<B>", &the(y))]),
                answer_type: AnswerType::Binary,
                answer: Answer::yes_no(contact != asks_gap),
                unit: Unit::None,
                options: None,
                oracle: "is_in_contact".into(),
                object_ids: vec![x.object_id.clone(), y.object_id.clone()],
            });
        }
    }

    // operation feasibility
    {
        let c = QuestionCategory::OperationFeasibility;
        let mut r = rng(c);
        let pool: Vec<&'static Template> = templates::generative(c).collect();
        let (mut yes, mut no) = (Vec::new(), Vec::new());
        for m in &singles {
            for s in &singles {
                if m.object_id == s.object_id {
                    continue;
                }
                for t in &pool {
                    let TemplateVariant::Placement(mode) = t.variant else {
                        unreachable!("feasibility templates carry a placement mode")
                    };
                    if placement_feasible(m, s, mode) {
                        yes.push((*m, *s, *t, mode));
                    } else {
                        no.push((*m, *s, *t, mode));
                    }
                }
            }
        }
        for (k, (m, s, t, mode)) in interleave(&mut r, yes, no, per).into_iter().enumerate() {
            b.push(c, k, Draft {
                question: templates::instantiate(t.text, &[("<A>", &the(m)), ("<B>", &the(s))]),
                answer_type: AnswerType::Binary,
                answer: Answer::yes_no(placement_feasible(m, s, mode)),
                unit: Unit::None,
                options: None,
                oracle: format!("placement_feasible:{}", mode.as_str()),
                object_ids: vec![m.object_id.clone(), s.object_id.clone()],
            });
        }
    }

    for item in &b.items {
        item.validate()?;
    }
    Ok(b.items)
}

/// Writes one item per line; returns the line count.
pub fn emit_dataset<W: Write>(items: &[QaItem], sink: W) -> Result<usize, QaError> {
    Ok(write_jsonl(items, sink)?)
}
