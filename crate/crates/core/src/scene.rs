//! Scene files: parsing, validation, multi-room disassembly and room filtering.
//!
//! A scene file is a JSON document:
//!
//! ```json
//! { "scene_id": "apt-1",
//!   "rooms": [ { "room_id": "r1", "room_type": "bedroom",
//!                "floor_polygon": [[0,0],[4,0],[4,3],[0,3]],
//!                "ceiling_height": 2.7,
//!                "objects": [ { "object_id": "bed-1", "category": "bed",
//!                               "position": [2,1.5,0.3], "yaw_deg": 0,
//!                               "size": [2,1.6,0.6], "navigable": false } ] } ] }
//! ```
//!
//! Unknown keys are rejected unless [`ParseMode::Lenient`] is used.

use std::collections::{BTreeSet, HashSet};

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::geometry::{Aabb, Polygon2, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid field `{field}` on `{entity}`: {message}")]
    Validation {
        field: String,
        entity: String,
        message: String,
    },
}

impl SceneError {
    pub fn validation(field: &str, entity: &str, message: impl Into<String>) -> Self {
        SceneError::Validation {
            field: field.to_string(),
            entity: entity.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub object_id: String,
    pub category: String,
    /// Centroid.
    pub position: Vec3,
    /// Counter-clockwise about +Z; 0 faces +X.
    pub yaw_deg: f64,
    /// Full extents before yaw is applied.
    pub size: [f64; 3],
    pub navigable: bool,
}

impl ObjectInstance {
    /// World-space AABB of the yaw-rotated box.
    pub fn world_aabb(&self) -> Aabb {
        let (s, c) = self.yaw_deg.to_radians().sin_cos();
        let (hx, hy) = (self.size[0] / 2.0, self.size[1] / 2.0);
        let ex = c.abs() * hx + s.abs() * hy;
        let ey = s.abs() * hx + c.abs() * hy;
        Aabb::from_center_size(self.position, [2.0 * ex, 2.0 * ey, self.size[2]])
    }

    /// Horizontal distance from `p` to the yaw-rotated footprint rectangle;
    /// zero inside it.
    pub fn footprint_distance(&self, p: [f64; 2]) -> f64 {
        let (s, c) = self.yaw_deg.to_radians().sin_cos();
        let (dx, dy) = (p[0] - self.position.x, p[1] - self.position.y);
        // rotate into the object frame
        let lx = c * dx + s * dy;
        let ly = -s * dx + c * dy;
        let ox = (lx.abs() - self.size[0] / 2.0).max(0.0);
        let oy = (ly.abs() - self.size[1] / 2.0).max(0.0);
        ox.hypot(oy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Room {
    pub room_id: String,
    pub room_type: String,
    pub floor_polygon: Polygon2,
    pub ceiling_height: f64,
    pub objects: Vec<ObjectInstance>,
}

impl Room {
    pub fn object(&self, object_id: &str) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.object_id == object_id)
    }

    /// Re-checks every room invariant.
    pub fn validate(&self) -> Result<(), SceneError> {
        let rid = &self.room_id;
        if rid.is_empty() {
            return Err(SceneError::validation("room_id", "room", "must be nonempty"));
        }
        if self.room_type.trim().is_empty() {
            return Err(SceneError::validation("room_type", rid, "must be nonempty"));
        }
        if !(self.ceiling_height > 0.0 && self.ceiling_height.is_finite()) {
            return Err(SceneError::validation("ceiling_height", rid, "must be positive"));
        }
        let mut seen = HashSet::new();
        for o in &self.objects {
            if o.object_id.is_empty() {
                return Err(SceneError::validation("object_id", rid, "must be nonempty"));
            }
            if !seen.insert(o.object_id.as_str()) {
                return Err(SceneError::validation("object_id", &o.object_id, "duplicate id in room"));
            }
            if o.category.is_empty() {
                return Err(SceneError::validation("category", &o.object_id, "must be nonempty"));
            }
            if o.size.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(SceneError::validation("size", &o.object_id, "extents must be positive"));
            }
            if !o.position.is_finite() || !o.yaw_deg.is_finite() {
                return Err(SceneError::validation("position", &o.object_id, "must be finite"));
            }
            if !self.floor_polygon.contains(o.position.xy()) {
                return Err(SceneError::validation(
                    "position",
                    &o.object_id,
                    "centroid lies outside the floor polygon",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scene_id: String,
    pub rooms: Vec<Room>,
}

impl Scene {
    pub fn object_count(&self) -> usize {
        self.rooms.iter().map(|r| r.objects.len()).sum()
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.rooms.is_empty() {
            return Err(SceneError::validation("rooms", &self.scene_id, "scene has no rooms"));
        }
        let mut ids = HashSet::new();
        for r in &self.rooms {
            if !ids.insert(r.room_id.as_str()) {
                return Err(SceneError::validation("room_id", &r.room_id, "duplicate room id"));
            }
            r.validate()?;
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serialization is infallible")
    }
}

impl Serialize for ObjectInstance {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("ObjectInstance", 6)?;
        s.serialize_field("object_id", &self.object_id)?;
        s.serialize_field("category", &self.category)?;
        s.serialize_field("position", &self.position)?;
        s.serialize_field("yaw_deg", &self.yaw_deg)?;
        s.serialize_field("size", &self.size)?;
        s.serialize_field("navigable", &self.navigable)?;
        s.end()
    }
}

impl Serialize for Room {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Room", 5)?;
        s.serialize_field("room_id", &self.room_id)?;
        s.serialize_field("room_type", &self.room_type)?;
        s.serialize_field("floor_polygon", self.floor_polygon.vertices())?;
        s.serialize_field("ceiling_height", &self.ceiling_height)?;
        s.serialize_field("objects", &self.objects)?;
        s.end()
    }
}

impl Serialize for Scene {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Scene", 2)?;
        s.serialize_field("scene_id", &self.scene_id)?;
        s.serialize_field("rooms", &self.rooms)?;
        s.end()
    }
}

pub fn parse_scene(text: &str) -> Result<Scene, SceneError> {
    parse_scene_with(text, ParseMode::Strict)
}

pub fn parse_scene_bytes(bytes: &[u8], mode: ParseMode) -> Result<Scene, SceneError> {
    let text = std::str::from_utf8(bytes).map_err(|e| SceneError::Parse {
        line: 0,
        column: 0,
        message: format!("input is not UTF-8: {e}"),
    })?;
    parse_scene_with(text, mode)
}

pub fn parse_scene_with(text: &str, mode: ParseMode) -> Result<Scene, SceneError> {
    let value: Value = serde_json::from_str(text).map_err(|e| SceneError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let d = Decoder { mode };
    let scene = d.scene(&value)?;
    scene.validate()?;
    Ok(scene)
}

struct Decoder {
    mode: ParseMode,
}

impl Decoder {
    fn object<'v>(
        &self,
        v: &'v Value,
        entity: &str,
        allowed: &[&str],
    ) -> Result<&'v Map<String, Value>, SceneError> {
        let map = v
            .as_object()
            .ok_or_else(|| SceneError::validation("<root>", entity, "expected an object"))?;
        if self.mode == ParseMode::Strict {
            if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
                return Err(SceneError::validation(k, entity, "unknown field"));
            }
        }
        Ok(map)
    }

    fn scene(&self, v: &Value) -> Result<Scene, SceneError> {
        let m = self.object(v, "scene", &["scene_id", "rooms"])?;
        let scene_id = req_str(m, "scene_id", "scene")?;
        let rooms = req(m, "rooms", &scene_id)?
            .as_array()
            .ok_or_else(|| SceneError::validation("rooms", &scene_id, "expected an array"))?
            .iter()
            .map(|r| self.room(r, &scene_id))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Scene { scene_id, rooms })
    }

    fn room(&self, v: &Value, scene_id: &str) -> Result<Room, SceneError> {
        let m = self.object(
            v,
            scene_id,
            &["room_id", "room_type", "floor_polygon", "ceiling_height", "objects"],
        )?;
        let room_id = req_str(m, "room_id", scene_id)?;
        let room_type = req_str(m, "room_type", &room_id)?.trim().to_lowercase();
        let poly_v = req(m, "floor_polygon", &room_id)?;
        let pts = poly_v
            .as_array()
            .ok_or_else(|| SceneError::validation("floor_polygon", &room_id, "expected an array"))?
            .iter()
            .map(|p| num_array::<2>(p, "floor_polygon", &room_id))
            .collect::<Result<Vec<_>, _>>()?;
        let floor_polygon = Polygon2::new(pts)
            .map_err(|e| SceneError::validation("floor_polygon", &room_id, e.to_string()))?;
        floor_polygon
            .area()
            .map_err(|e| SceneError::validation("floor_polygon", &room_id, e.to_string()))?;
        let ceiling_height = req_num(m, "ceiling_height", &room_id)?;
        let objects = match m.get("objects") {
            None => Vec::new(),
            Some(v) => v
                .as_array()
                .ok_or_else(|| SceneError::validation("objects", &room_id, "expected an array"))?
                .iter()
                .map(|o| self.instance(o, &room_id))
                .collect::<Result<Vec<_>, _>>()?,
        };
        Ok(Room {
            room_id,
            room_type,
            floor_polygon,
            ceiling_height,
            objects,
        })
    }

    fn instance(&self, v: &Value, room_id: &str) -> Result<ObjectInstance, SceneError> {
        // id first so later errors can name the object
        let object_id = v
            .get("object_id")
            .and_then(Value::as_str)
            .ok_or_else(|| SceneError::validation("object_id", room_id, "missing or not a string"))?
            .to_string();
        let m = self.object(
            v,
            &object_id,
            &["object_id", "category", "position", "yaw_deg", "size", "navigable"],
        )?;
        let category = req_str(m, "category", &object_id)?.trim().to_lowercase();
        let position = Vec3::from(num_array::<3>(req(m, "position", &object_id)?, "position", &object_id)?);
        let yaw_deg = req_num(m, "yaw_deg", &object_id)?;
        let size = num_array::<3>(req(m, "size", &object_id)?, "size", &object_id)?;
        let navigable = match m.get("navigable") {
            None => false,
            Some(b) => b
                .as_bool()
                .ok_or_else(|| SceneError::validation("navigable", &object_id, "expected a boolean"))?,
        };
        Ok(ObjectInstance {
            object_id,
            category,
            position,
            yaw_deg,
            size,
            navigable,
        })
    }
}

fn req<'v>(m: &'v Map<String, Value>, field: &str, entity: &str) -> Result<&'v Value, SceneError> {
    m.get(field)
        .ok_or_else(|| SceneError::validation(field, entity, "missing required field"))
}

fn req_str(m: &Map<String, Value>, field: &str, entity: &str) -> Result<String, SceneError> {
    let s = req(m, field, entity)?
        .as_str()
        .ok_or_else(|| SceneError::validation(field, entity, "expected a string"))?;
    if s.trim().is_empty() {
        return Err(SceneError::validation(field, entity, "must be nonempty"));
    }
    Ok(s.to_string())
}

fn req_num(m: &Map<String, Value>, field: &str, entity: &str) -> Result<f64, SceneError> {
    req(m, field, entity)?
        .as_f64()
        .filter(|v| v.is_finite())
        .ok_or_else(|| SceneError::validation(field, entity, "expected a finite number"))
}

fn num_array<const N: usize>(v: &Value, field: &str, entity: &str) -> Result<[f64; N], SceneError> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == N)
        .ok_or_else(|| SceneError::validation(field, entity, format!("expected {N} numbers")))?;
    let mut out = [0.0; N];
    for (slot, x) in out.iter_mut().zip(arr) {
        *slot = x
            .as_f64()
            .filter(|v| v.is_finite())
            .ok_or_else(|| SceneError::validation(field, entity, "expected finite numbers"))?;
    }
    Ok(out)
}

/// Splits a scene into single-room scenes with ids `<scene_id>/<room_id>`.
pub fn disassemble(scene: &Scene) -> Vec<Scene> {
    if scene.rooms.len() == 1 {
        return vec![scene.clone()];
    }
    scene
        .rooms
        .iter()
        .map(|r| Scene {
            scene_id: format!("{}/{}", scene.scene_id, r.room_id),
            rooms: vec![r.clone()],
        })
        .collect()
}

/// The six common single-room categories kept after separation.
pub const DEFAULT_ROOM_TYPES: [&str; 6] = [
    "bedroom",
    "kitchen",
    "bathroom",
    "living room",
    "dining room",
    "storage room",
];

pub const DEFAULT_MIN_OBJECTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct RoomFilter {
    pub whitelist: BTreeSet<String>,
    pub min_objects: usize,
}

impl Default for RoomFilter {
    fn default() -> Self {
        RoomFilter {
            whitelist: DEFAULT_ROOM_TYPES.iter().map(|s| s.to_string()).collect(),
            min_objects: DEFAULT_MIN_OBJECTS,
        }
    }
}

impl RoomFilter {
    pub fn accepts(&self, room: &Room) -> bool {
        self.whitelist.contains(&room.room_type) && room.objects.len() >= self.min_objects
    }
}

/// Keeps single-room scenes whose type is whitelisted and that hold at least
/// `min_objects` objects. Input order is preserved.
pub fn filter_rooms(rooms: Vec<Scene>, filter: &RoomFilter) -> Vec<Scene> {
    rooms
        .into_iter()
        .filter(|s| s.rooms.iter().all(|r| filter.accepts(r)))
        .collect()
}
