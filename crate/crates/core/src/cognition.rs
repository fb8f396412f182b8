//! Scene decomposition: per-frame local maps, accumulated frame transforms,
//! the merged global map, grid quantization and textual position
//! descriptions.
//!
//! Local maps are expressed as translation-only offsets in world axes from a
//! per-frame reference object. Under that convention the relative transform
//! between consecutive frames is the displacement between their reference
//! objects, and the accumulated transform of frame `i` maps its local
//! coordinates into the frame of the first frame's reference object.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{RigidTransform, Vec3};
use crate::io::{format_fixed, round1};
use crate::scene::Room;
use crate::trajectory::FrameRecord;

/// Distance under which same-category detections are fused.
pub const DEFAULT_MERGE_THRESHOLD: f64 = 0.5;
/// Grid cell size used when none is given: one meter per cell.
pub const DEFAULT_GRID_CELL: f64 = 1.0;
/// Components shorter than this are left out of a description.
pub const DESCRIPTION_DEAD_ZONE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CognitionError {
    #[error("reference object `{reference}` is not visible in frame {frame_index}")]
    ReferenceNotVisible { reference: String, frame_index: u32 },
    #[error("object `{0}` is not in the room")]
    UnknownObject(String),
    #[error("no frame observes any object")]
    NothingObserved,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unparsable description: {0}")]
    BadDescription(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalEntry {
    pub object_id: String,
    pub category: String,
    pub local_position: Vec3,
}

/// Objects seen in one frame, positioned relative to that frame's reference
/// object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFrameMap {
    pub frame_index: u32,
    pub reference_object_id: String,
    pub entries: Vec<LocalEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub object_id: String,
    pub category: String,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEntry {
    pub object_id: String,
    pub category: String,
    pub global_position: Vec3,
}

/// Scene-wide object layout in one coordinate system, sorted by object id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GlobalMap {
    pub entries: Vec<MapEntry>,
}

impl GlobalMap {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, object_id: &str) -> Option<&MapEntry> {
        self.entries.iter().find(|e| e.object_id == object_id)
    }
}

/// A global map together with its origin object and the horizontal
/// direction treated as "front" when describing positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneCognition {
    pub origin_object_id: String,
    pub reference_front: [f64; 2],
    pub entries: Vec<MapEntry>,
}

impl SceneCognition {
    pub fn map(&self) -> GlobalMap {
        GlobalMap {
            entries: self.entries.clone(),
        }
    }
}

/// Objects bucketed by floor cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    pub cell_size: f64,
    pub cells: BTreeMap<(i64, i64), Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct GridCellRecord {
    cell: [i64; 2],
    object_ids: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct GridRecord {
    cell_size: f64,
    cells: Vec<GridCellRecord>,
}

impl Serialize for GridMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GridRecord {
            cell_size: self.cell_size,
            cells: self
                .cells
                .iter()
                .map(|(&(i, j), ids)| GridCellRecord {
                    cell: [i, j],
                    object_ids: ids.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = GridRecord::deserialize(d)?;
        Ok(GridMap {
            cell_size: r.cell_size,
            cells: r.cells.into_iter().map(|c| ((c.cell[0], c.cell[1]), c.object_ids)).collect(),
        })
    }
}

impl GridMap {
    pub fn cell_of(&self, object_id: &str) -> Option<(i64, i64)> {
        self.cells
            .iter()
            .find(|(_, ids)| ids.iter().any(|i| i == object_id))
            .map(|(c, _)| *c)
    }
}

/// `out[i] = deltas[0] ∘ deltas[1] ∘ … ∘ deltas[i]`.
pub fn accumulate_transforms(deltas: &[RigidTransform]) -> Vec<RigidTransform> {
    let mut out: Vec<RigidTransform> = Vec::with_capacity(deltas.len());
    for d in deltas {
        let next = match out.last() {
            Some(prev) => prev.compose(d),
            None => *d,
        };
        out.push(next);
    }
    out
}

pub fn local_to_global(frame_transform: &RigidTransform, local: Vec3) -> Vec3 {
    frame_transform.apply(local)
}

/// Ground-truth local map for one frame: every visible object offset from
/// the reference object's centroid.
pub fn build_local_map(
    frame: &FrameRecord,
    room: &Room,
    reference_object_id: &str,
) -> Result<LocalFrameMap, CognitionError> {
    if !frame.visible_object_ids.iter().any(|id| id == reference_object_id) {
        return Err(CognitionError::ReferenceNotVisible {
            reference: reference_object_id.to_string(),
            frame_index: frame.frame_index,
        });
    }
    let reference = room
        .object(reference_object_id)
        .ok_or_else(|| CognitionError::UnknownObject(reference_object_id.to_string()))?;
    let entries = frame
        .visible_object_ids
        .iter()
        .map(|id| {
            let o = room.object(id).ok_or_else(|| CognitionError::UnknownObject(id.clone()))?;
            Ok(LocalEntry {
                object_id: o.object_id.clone(),
                category: o.category.clone(),
                local_position: o.position - reference.position,
            })
        })
        .collect::<Result<Vec<_>, CognitionError>>()?;
    Ok(LocalFrameMap {
        frame_index: frame.frame_index,
        reference_object_id: reference_object_id.to_string(),
        entries,
    })
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn mean(points: &[Vec3]) -> Vec3 {
    let n = points.len() as f64;
    let sum = points.iter().fold(Vec3::ZERO, |acc, p| acc + *p);
    sum * (1.0 / n)
}

/// Fuses detections that share a category and lie within
/// `distance_threshold` of each other, transitively.
///
/// Each fused entry sits at the mean of its member detections and keeps the
/// lexicographically smallest member id. Fusion repeats on the fused means
/// until no same-category pair is within the threshold, which makes the
/// operation idempotent.
pub fn merge_duplicates(raw: &[Detection], distance_threshold: f64) -> Result<GlobalMap, CognitionError> {
    if !(distance_threshold > 0.0 && distance_threshold.is_finite()) {
        return Err(CognitionError::InvalidParameter(
            "merge threshold must be positive".into(),
        ));
    }
    // each cluster: (category, member positions, smallest id)
    let mut clusters: Vec<(String, Vec<Vec3>, String)> = raw
        .iter()
        .map(|d| (d.category.clone(), vec![d.position], d.object_id.clone()))
        .collect();
    loop {
        let centers: Vec<Vec3> = clusters.iter().map(|c| mean(&c.1)).collect();
        let n = clusters.len();
        let mut sets = DisjointSet::new(n);
        let mut merged_any = false;
        for a in 0..n {
            for b in a + 1..n {
                if clusters[a].0 == clusters[b].0 && centers[a].distance(centers[b]) <= distance_threshold {
                    sets.union(a, b);
                    merged_any = true;
                }
            }
        }
        if !merged_any {
            break;
        }
        let mut groups: BTreeMap<usize, (String, Vec<Vec3>, String)> = BTreeMap::new();
        for (k, (cat, members, id)) in clusters.into_iter().enumerate() {
            let root = sets.find(k);
            let g = groups.entry(root).or_insert_with(|| (cat, Vec::new(), id.clone()));
            g.1.extend(members);
            if id < g.2 {
                g.2 = id;
            }
        }
        clusters = groups.into_values().collect();
    }
    let mut entries: Vec<MapEntry> = clusters
        .into_iter()
        .map(|(category, members, object_id)| MapEntry {
            object_id,
            category,
            global_position: mean(&members),
        })
        .collect();
    entries.sort_by(|a, b| a.object_id.cmp(&b.object_id).then(a.category.cmp(&b.category)));
    Ok(GlobalMap { entries })
}

/// `floor(v / s)`, corrected so that `i·s ≤ v < (i+1)·s` holds in floating
/// point.
pub fn floor_cell(v: f64, s: f64) -> i64 {
    let mut i = (v / s).floor() as i64;
    while (i as f64) * s > v {
        i -= 1;
    }
    while ((i + 1) as f64) * s <= v {
        i += 1;
    }
    i
}

/// Buckets every map entry into the XY cell `(⌊x/s⌋, ⌊y/s⌋)`; height is
/// ignored.
pub fn quantize_to_grid(map: &GlobalMap, s: f64) -> Result<GridMap, CognitionError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(CognitionError::InvalidParameter("cell size must be positive".into()));
    }
    let mut cells: BTreeMap<(i64, i64), Vec<String>> = BTreeMap::new();
    for e in &map.entries {
        let p = e.global_position;
        cells
            .entry((floor_cell(p.x, s), floor_cell(p.y, s)))
            .or_default()
            .push(e.object_id.clone());
    }
    Ok(GridMap { cell_size: s, cells })
}

/// Offsets of a target from the reference point along the observer's axes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DirectionalOffset {
    /// Positive to the right.
    pub right: f64,
    /// Positive in front.
    pub forward: f64,
    /// Positive above.
    pub up: f64,
}

impl DirectionalOffset {
    pub fn between(reference: Vec3, target: Vec3, reference_front: [f64; 2]) -> Result<Self, CognitionError> {
        let n = reference_front[0].hypot(reference_front[1]);
        if n <= 0.0 || !n.is_finite() {
            return Err(CognitionError::InvalidParameter("reference front must be nonzero".into()));
        }
        let f = [reference_front[0] / n, reference_front[1] / n];
        // front rotated 90° clockwise
        let r = [f[1], -f[0]];
        let d = target - reference;
        Ok(DirectionalOffset {
            right: d.x * r[0] + d.y * r[1],
            forward: d.x * f[0] + d.y * f[1],
            up: d.z,
        })
    }

    /// Parses the text produced by [`describe_position`].
    pub fn parse(text: &str) -> Result<Self, CognitionError> {
        let text = text.trim();
        if text == "at the reference point" {
            return Ok(DirectionalOffset::default());
        }
        static PHRASE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
        let re = PHRASE.get_or_init(|| {
            Regex::new(r"(\d+(?:\.\d+)?) meters (to the left|to the right|in front|behind|above|below)")
                .expect("valid regex")
        });
        let body = text
            .strip_prefix("locate ")
            .ok_or_else(|| CognitionError::BadDescription(text.to_string()))?;
        let mut out = DirectionalOffset::default();
        let mut found = false;
        for cap in re.captures_iter(body) {
            found = true;
            let v: f64 = cap[1].parse().map_err(|_| CognitionError::BadDescription(text.to_string()))?;
            match &cap[2] {
                "to the left" => out.right = -v,
                "to the right" => out.right = v,
                "in front" => out.forward = v,
                "behind" => out.forward = -v,
                "above" => out.up = v,
                _ => out.up = -v,
            }
        }
        if !found {
            return Err(CognitionError::BadDescription(text.to_string()));
        }
        Ok(out)
    }
}

/// Renders `target` relative to `reference` for an observer facing
/// `reference_front`, e.g. `"locate 2.0 meters to the right and 1.0 meters
/// behind the reference point"`.
///
/// Components shorter than 5 cm are dropped; the rest are rounded to 0.1 m
/// and listed left/right, then front/behind, then above/below.
pub fn describe_position(reference: Vec3, target: Vec3, reference_front: [f64; 2]) -> Result<String, CognitionError> {
    let off = DirectionalOffset::between(reference, target, reference_front)?;
    // (magnitude, phrase, needs "of")
    let mut parts: Vec<(f64, &str, bool)> = Vec::new();
    if off.right.abs() >= DESCRIPTION_DEAD_ZONE {
        parts.push((off.right.abs(), if off.right > 0.0 { "to the right" } else { "to the left" }, true));
    }
    if off.forward.abs() >= DESCRIPTION_DEAD_ZONE {
        parts.push((off.forward.abs(), if off.forward > 0.0 { "in front" } else { "behind" }, off.forward > 0.0));
    }
    if off.up.abs() >= DESCRIPTION_DEAD_ZONE {
        parts.push((off.up.abs(), if off.up > 0.0 { "above" } else { "below" }, false));
    }
    if parts.is_empty() {
        return Ok("at the reference point".to_string());
    }
    let mut text = String::from("locate ");
    for (k, (mag, phrase, _)) in parts.iter().enumerate() {
        if k > 0 {
            text.push_str(" and ");
        }
        let _ = write!(text, "{} meters {phrase}", format_fixed(round1(*mag), 1));
    }
    let needs_of = parts.last().is_some_and(|p| p.2);
    text.push_str(if needs_of { " of the reference point" } else { " the reference point" });
    Ok(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionDescription {
    pub object_id: String,
    pub category: String,
    pub text: String,
}

/// Describes every map entry relative to the origin object's position.
pub fn describe_map(cognition: &SceneCognition) -> Result<Vec<PositionDescription>, CognitionError> {
    let origin = cognition
        .entries
        .iter()
        .find(|e| e.object_id == cognition.origin_object_id)
        .map(|e| e.global_position)
        .unwrap_or(Vec3::ZERO);
    cognition
        .entries
        .iter()
        .map(|e| {
            Ok(PositionDescription {
                object_id: e.object_id.clone(),
                category: e.category.clone(),
                text: describe_position(origin, e.global_position, cognition.reference_front)?,
            })
        })
        .collect()
}

/// Keys descriptions by category; repeated categories get " (2)", " (3)", …
/// in map order.
pub fn description_keys(descriptions: &[PositionDescription]) -> Vec<(String, String)> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    descriptions
        .iter()
        .map(|d| {
            let n = seen.entry(d.category.as_str()).or_insert(0);
            *n += 1;
            let key = if *n == 1 {
                d.category.clone()
            } else {
                format!("{} ({})", d.category, n)
            };
            (key, d.text.clone())
        })
        .collect()
}

/// Renders descriptions as a JSON dictionary, one entry per line.
pub fn descriptions_json(descriptions: &[PositionDescription]) -> String {
    let keyed = description_keys(descriptions);
    let mut out = String::from("{\n");
    for (k, (key, text)) in keyed.iter().enumerate() {
        let comma = if k + 1 < keyed.len() { "," } else { "" };
        let _ = writeln!(
            out,
            "  {}: {}{comma}",
            serde_json::to_string(key).expect("string"),
            serde_json::to_string(text).expect("string")
        );
    }
    out.push('}');
    out
}

/// Runs scene decomposition over a scan using ground-truth visibility.
///
/// Each frame's reference is its nearest visible object. Relative transforms
/// between consecutive observing frames are accumulated, local maps are
/// lifted into the frame of the first reference object, and duplicates are
/// merged. "Front" is the heading of the first observing frame.
pub fn build_scene_cognition(
    frames: &[FrameRecord],
    room: &Room,
    merge_threshold: f64,
) -> Result<SceneCognition, CognitionError> {
    let observing: Vec<&FrameRecord> = frames.iter().filter(|f| !f.visible_object_ids.is_empty()).collect();
    let first = observing.first().ok_or(CognitionError::NothingObserved)?;
    let mut locals = Vec::with_capacity(observing.len());
    let mut deltas = Vec::with_capacity(observing.len());
    let mut prev_ref: Option<Vec3> = None;
    for f in &observing {
        let ref_id = &f.visible_object_ids[0];
        let local = build_local_map(f, room, ref_id)?;
        let ref_pos = room
            .object(ref_id)
            .ok_or_else(|| CognitionError::UnknownObject(ref_id.clone()))?
            .position;
        deltas.push(match prev_ref {
            None => RigidTransform::identity(),
            Some(p) => RigidTransform::from_translation(ref_pos - p),
        });
        prev_ref = Some(ref_pos);
        locals.push(local);
    }
    let transforms = accumulate_transforms(&deltas);
    let detections: Vec<Detection> = locals
        .iter()
        .zip(&transforms)
        .flat_map(|(local, t)| {
            local.entries.iter().map(move |e| Detection {
                object_id: e.object_id.clone(),
                category: e.category.clone(),
                position: local_to_global(t, e.local_position),
            })
        })
        .collect();
    let map = merge_duplicates(&detections, merge_threshold)?;
    let origin = first.visible_object_ids[0].clone();
    // the origin may have been fused into a neighbour with a smaller id
    let origin_object_id = if map.get(&origin).is_some() {
        origin
    } else {
        map.entries
            .iter()
            .min_by(|a, b| a.global_position.norm().total_cmp(&b.global_position.norm()))
            .map(|e| e.object_id.clone())
            .unwrap_or(origin)
    };
    Ok(SceneCognition {
        origin_object_id,
        reference_front: first.pose.heading(),
        entries: map.entries,
    })
}

/// Annotated object positions taken as a global map, relative to the
/// position of `origin_object_id`.
pub fn ground_truth_map(room: &Room, origin_object_id: &str) -> Result<GlobalMap, CognitionError> {
    let origin = room
        .object(origin_object_id)
        .ok_or_else(|| CognitionError::UnknownObject(origin_object_id.to_string()))?
        .position;
    let mut entries: Vec<MapEntry> = room
        .objects
        .iter()
        .map(|o| MapEntry {
            object_id: o.object_id.clone(),
            category: o.category.clone(),
            global_position: o.position - origin,
        })
        .collect();
    entries.sort_by(|a, b| a.object_id.cmp(&b.object_id));
    Ok(GlobalMap { entries })
}
