//! Headless scan simulation: orbit scans, navigation scans over an occupancy
//! grid, and per-frame ground-truth visibility.
//!
//! Frames carry pose and visibility metadata instead of pixels.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;
use std::io::Write;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{clockwise_angle_deg, ray_hits_aabb, Vec3};
use crate::io::{fixed6, fixed6_vec3, write_jsonl, IoError};
use crate::scene::{ObjectInstance, Room};
use crate::seed::rng_for;

/// Eye level of the simulated camera.
pub const CAMERA_HEIGHT: f64 = 1.5;
pub const ORBIT_FRAMES: usize = 72;
pub const ORBIT_STEP_DEG: f64 = 5.0;
pub const ROTATION_FRAMES: usize = 30;
pub const ROTATION_STEP_DEG: f64 = 12.0;
pub const TRAVERSE_FRAMES: usize = 12;
pub const NAV_FRAMES: usize = 2 * ROTATION_FRAMES + TRAVERSE_FRAMES;

/// Headings are drawn or rounded on this grid (1/1024°) so that repeated
/// fixed-step increments stay exact in binary floating point.
const HEADING_QUANTUM: f64 = 1024.0;

/// Searching for a free cell around a blocked start/goal stops here.
pub const SNAP_RADIUS: f64 = 0.5;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("room too small for an orbit scan: shorter side {short_side:.3} m < 1 m")]
    RoomTooSmall { short_side: f64 },
    #[error("no free cell within {SNAP_RADIUS} m of ({x:.3}, {y:.3})")]
    NoFreeCell { x: f64, y: f64 },
    #[error("goal is unreachable from start")]
    NoPath,
    #[error("navigation scan needs two reachable paths, found {found}")]
    InsufficientPaths { found: usize },
    #[error("navigation scan needs at least 2 objects, room has {0}")]
    TooFewObjects(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanParams {
    pub cell_size: f64,
    pub agent_radius: f64,
    pub hfov_deg: f64,
    pub max_range: f64,
    pub candidate_pairs: usize,
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams {
            cell_size: 0.1,
            agent_radius: 0.25,
            hfov_deg: 90.0,
            max_range: 20.0,
            candidate_pairs: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    #[serde(serialize_with = "fixed6_vec3")]
    pub position: Vec3,
    /// Heading in the XY-plane, counter-clockwise from +X.
    #[serde(serialize_with = "fixed6")]
    pub yaw_deg: f64,
    #[serde(serialize_with = "fixed6")]
    pub pitch_deg: f64,
}

impl CameraPose {
    pub fn level(position: Vec3, yaw_deg: f64) -> Self {
        CameraPose {
            position,
            yaw_deg,
            pitch_deg: 0.0,
        }
    }

    pub fn heading(&self) -> [f64; 2] {
        let (s, c) = self.yaw_deg.to_radians().sin_cos();
        [c, s]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanPhase {
    Orbit,
    RotStart,
    Traverse,
    RotEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub scan_id: String,
    pub frame_index: u32,
    pub phase: ScanPhase,
    pub pose: CameraPose,
    pub visible_object_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTrajectory {
    pub scan_id: String,
    pub frames: Vec<FrameRecord>,
}

impl ScanTrajectory {
    fn from_poses(scan_id: String, poses: Vec<(ScanPhase, CameraPose)>, room: &Room, p: &ScanParams) -> Self {
        let frames = poses
            .into_iter()
            .enumerate()
            .map(|(i, (phase, pose))| FrameRecord {
                scan_id: scan_id.clone(),
                frame_index: i as u32,
                phase,
                visible_object_ids: visible_objects(&pose, room, p.hfov_deg, p.max_range),
                pose,
            })
            .collect();
        ScanTrajectory { scan_id, frames }
    }

    pub fn write_jsonl<W: Write>(&self, sink: W) -> Result<usize, TrajectoryError> {
        Ok(write_jsonl(&self.frames, sink)?)
    }
}

fn quantize_heading(deg: f64) -> f64 {
    ((deg * HEADING_QUANTUM).round() / HEADING_QUANTUM).rem_euclid(360.0)
}

fn check_params(p: &ScanParams) -> Result<(), TrajectoryError> {
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(TrajectoryError::InvalidParameter(format!("{name} must be positive, got {v}")))
        }
    };
    positive("cell_size", p.cell_size)?;
    positive("max_range", p.max_range)?;
    if !(p.agent_radius >= 0.0 && p.agent_radius.is_finite()) {
        return Err(TrajectoryError::InvalidParameter("agent_radius must be >= 0".into()));
    }
    if !(p.hfov_deg > 0.0 && p.hfov_deg < 180.0) {
        return Err(TrajectoryError::InvalidParameter(format!(
            "hfov must lie in (0, 180), got {}",
            p.hfov_deg
        )));
    }
    Ok(())
}

/// Circular scan around the floor centroid at eye level.
///
/// The circle's diameter is two thirds of the shorter side of the floor's
/// bounding rectangle. Start bearing and travel direction come from `seed`;
/// 72 frames are captured 5° apart, each looking at the circle center.
pub fn orbit_scan(room: &Room, seed: u64, params: &ScanParams) -> Result<ScanTrajectory, TrajectoryError> {
    check_params(params)?;
    let (lo, hi) = room.floor_polygon.bounds();
    let short_side = (hi[0] - lo[0]).min(hi[1] - lo[1]);
    if short_side < 1.0 {
        return Err(TrajectoryError::RoomTooSmall { short_side });
    }
    let center = room.floor_polygon.centroid();
    let radius = short_side / 3.0;

    let mut rng = rng_for(seed, "orbit");
    let start = rng.gen_range(0..360 * HEADING_QUANTUM as u32) as f64 / HEADING_QUANTUM;
    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };

    let poses = (0..ORBIT_FRAMES)
        .map(|k| {
            let bearing = (start + sign * ORBIT_STEP_DEG * k as f64).rem_euclid(360.0);
            let (s, c) = bearing.to_radians().sin_cos();
            let position = Vec3::new(center[0] + radius * c, center[1] + radius * s, CAMERA_HEIGHT);
            let yaw = (bearing + 180.0).rem_euclid(360.0);
            (ScanPhase::Orbit, CameraPose::level(position, yaw))
        })
        .collect();
    Ok(ScanTrajectory::from_poses(format!("{}:orbit", room.room_id), poses, room, params))
}

/// Rasterized navigable floor.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub cell_size: f64,
    /// Lower-left corner of cell (0, 0).
    pub origin: [f64; 2],
    pub width: usize,
    pub height: usize,
    blocked: Vec<bool>,
}

pub type Cell = (usize, usize);

impl OccupancyGrid {
    pub fn is_blocked(&self, cell: Cell) -> bool {
        self.blocked[cell.1 * self.width + cell.0]
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        !self.is_blocked(cell)
    }

    pub fn cell_center(&self, (i, j): Cell) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.cell_size,
            self.origin[1] + (j as f64 + 0.5) * self.cell_size,
        ]
    }

    pub fn cell_of(&self, p: [f64; 2]) -> Option<Cell> {
        let fi = ((p[0] - self.origin[0]) / self.cell_size).floor();
        let fj = ((p[1] - self.origin[1]) / self.cell_size).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.width as f64 || fj >= self.height as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |j| (0..self.width).map(move |i| (i, j)))
    }

    pub fn free_count(&self) -> usize {
        self.blocked.iter().filter(|b| !**b).count()
    }

    /// The containing cell if free, else the free cell whose center is
    /// nearest to `p` (ties by lower `i`, then lower `j`), optionally limited
    /// to `max_dist`.
    pub fn nearest_free_cell(&self, p: [f64; 2], max_dist: Option<f64>) -> Option<Cell> {
        if let Some(c) = self.cell_of(p) {
            if self.is_free(c) {
                return Some(c);
            }
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, j) in self.cells() {
            if self.is_blocked((i, j)) {
                continue;
            }
            let c = self.cell_center((i, j));
            let d = (c[0] - p[0]).hypot(c[1] - p[1]);
            if max_dist.is_some_and(|m| d > m) {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bi, bj)) => d < bd || (d == bd && (i, j) < (bi, bj)),
            };
            if better {
                best = Some((d, i, j));
            }
        }
        best.map(|(_, i, j)| (i, j))
    }
}

/// Marks a cell blocked when its center lies outside the floor polygon or
/// within `agent_radius` of the footprint of a non-navigable object.
pub fn build_occupancy_grid(
    room: &Room,
    cell_size: f64,
    agent_radius: f64,
) -> Result<OccupancyGrid, TrajectoryError> {
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(TrajectoryError::InvalidParameter("cell_size must be positive".into()));
    }
    if !(agent_radius >= 0.0 && agent_radius.is_finite()) {
        return Err(TrajectoryError::InvalidParameter("agent_radius must be >= 0".into()));
    }
    let (lo, hi) = room.floor_polygon.bounds();
    let cells_along = |extent: f64| ((extent / cell_size) - 1e-9).ceil().max(1.0) as usize;
    let width = cells_along(hi[0] - lo[0]);
    let height = cells_along(hi[1] - lo[1]);
    let mut grid = OccupancyGrid {
        cell_size,
        origin: lo,
        width,
        height,
        blocked: vec![false; width * height],
    };
    let obstacles: Vec<&ObjectInstance> = room.objects.iter().filter(|o| !o.navigable).collect();
    for j in 0..height {
        for i in 0..width {
            let c = grid.cell_center((i, j));
            let blocked = !room.floor_polygon.contains(c)
                || obstacles.iter().any(|o| o.footprint_distance(c) <= agent_radius);
            grid.blocked[j * width + i] = blocked;
        }
    }
    Ok(grid)
}

/// Path cost as a count of straight and diagonal moves. Comparison is exact:
/// `a + b·√2` is ordered with integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PathCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl PathCost {
    pub fn length(&self, cell_size: f64) -> f64 {
        cell_size * (self.straight as f64 + self.diagonal as f64 * SQRT_2)
    }

    fn step(self, diagonal: bool) -> PathCost {
        if diagonal {
            PathCost { diagonal: self.diagonal + 1, ..self }
        } else {
            PathCost { straight: self.straight + 1, ..self }
        }
    }
}

impl Ord for PathCost {
    fn cmp(&self, other: &Self) -> Ordering {
        let da = self.straight as i64 - other.straight as i64;
        let db = self.diagonal as i64 - other.diagonal as i64;
        // sign of da + db·√2
        match (da.signum(), db.signum()) {
            (0, 0) => Ordering::Equal,
            (a, b) if a >= 0 && b >= 0 => Ordering::Greater,
            (a, b) if a <= 0 && b <= 0 => Ordering::Less,
            (1, _) => (da * da).cmp(&(2 * db * db)),
            _ => (2 * db * db).cmp(&(da * da)),
        }
    }
}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavPath {
    /// Cell centers from start to goal.
    pub waypoints: Vec<[f64; 2]>,
    pub length: f64,
    pub cost: PathCost,
    pub cells: Vec<Cell>,
}

impl NavPath {
    /// Point and travel heading (degrees) at arc length `s` from the start.
    pub fn point_at(&self, s: f64) -> ([f64; 2], Option<f64>) {
        let w = &self.waypoints;
        if w.len() < 2 {
            return (w[0], None);
        }
        let mut remaining = s.max(0.0);
        for seg in w.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let heading = (b[1] - a[1]).atan2(b[0] - a[0]).to_degrees().rem_euclid(360.0);
            if remaining <= len {
                let t = if len > 0.0 { remaining / len } else { 0.0 };
                return ([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], Some(heading));
            }
            remaining -= len;
        }
        let (a, b) = (w[w.len() - 2], w[w.len() - 1]);
        (b, Some((b[1] - a[1]).atan2(b[0] - a[0]).to_degrees().rem_euclid(360.0)))
    }

    fn first_heading(&self) -> Option<f64> {
        self.point_at(0.0).1
    }

    fn last_heading(&self) -> Option<f64> {
        self.point_at(self.length).1
    }
}

const NEIGHBORS: [(i64, i64); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Dijkstra over 8-connected free cells. Diagonal moves require both
/// orthogonally adjacent cells to be free. Expansion order is
/// `(cost, i, j)` ascending.
pub fn shortest_path_cells(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Result<NavPath, TrajectoryError> {
    if grid.is_blocked(start) || grid.is_blocked(goal) {
        return Err(TrajectoryError::NoPath);
    }
    let n = grid.width * grid.height;
    let idx = |(i, j): Cell| j * grid.width + i;
    let mut dist: Vec<Option<PathCost>> = vec![None; n];
    let mut prev: Vec<Option<Cell>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[idx(start)] = Some(PathCost::default());
    heap.push(Reverse((PathCost::default(), start.0, start.1)));

    while let Some(Reverse((cost, i, j))) = heap.pop() {
        let here = (i, j);
        if done[idx(here)] {
            continue;
        }
        done[idx(here)] = true;
        if here == goal {
            break;
        }
        for (di, dj) in NEIGHBORS {
            let (ni, nj) = (i as i64 + di, j as i64 + dj);
            if ni < 0 || nj < 0 || ni >= grid.width as i64 || nj >= grid.height as i64 {
                continue;
            }
            let next = (ni as usize, nj as usize);
            if grid.is_blocked(next) || done[idx(next)] {
                continue;
            }
            let diagonal = di != 0 && dj != 0;
            if diagonal && (grid.is_blocked((ni as usize, j)) || grid.is_blocked((i, nj as usize))) {
                continue;
            }
            let cand = cost.step(diagonal);
            if dist[idx(next)].is_none_or(|d| cand < d) {
                dist[idx(next)] = Some(cand);
                prev[idx(next)] = Some(here);
                heap.push(Reverse((cand, next.0, next.1)));
            }
        }
    }

    let cost = dist[idx(goal)].ok_or(TrajectoryError::NoPath)?;
    let mut cells = vec![goal];
    let mut cur = goal;
    while let Some(p) = prev[idx(cur)] {
        cells.push(p);
        cur = p;
    }
    cells.reverse();
    Ok(NavPath {
        waypoints: cells.iter().map(|c| grid.cell_center(*c)).collect(),
        length: cost.length(grid.cell_size),
        cost,
        cells,
    })
}

/// Shortest path between two floor points. Points on blocked cells are
/// snapped to the nearest free cell within [`SNAP_RADIUS`].
pub fn shortest_path(grid: &OccupancyGrid, start: [f64; 2], goal: [f64; 2]) -> Result<NavPath, TrajectoryError> {
    let snap = |p: [f64; 2]| {
        grid.nearest_free_cell(p, Some(SNAP_RADIUS))
            .ok_or(TrajectoryError::NoFreeCell { x: p[0], y: p[1] })
    };
    shortest_path_cells(grid, snap(start)?, snap(goal)?)
}

/// One sampled start/end object pair and its path, if reachable.
#[derive(Debug, Clone, PartialEq)]
pub struct NavCandidate {
    pub start_object: String,
    pub end_object: String,
    pub path: Option<NavPath>,
}

/// Samples up to `candidate_pairs` distinct object pairs and routes each one
/// between the free cells nearest the two centroids.
pub fn nav_candidates(room: &Room, seed: u64, params: &ScanParams) -> Result<Vec<NavCandidate>, TrajectoryError> {
    check_params(params)?;
    if room.objects.len() < 2 {
        return Err(TrajectoryError::TooFewObjects(room.objects.len()));
    }
    if params.candidate_pairs < 2 {
        return Err(TrajectoryError::InvalidParameter("candidate_pairs must be >= 2".into()));
    }
    let grid = build_occupancy_grid(room, params.cell_size, params.agent_radius)?;
    let mut objects: Vec<&ObjectInstance> = room.objects.iter().collect();
    objects.sort_by(|a, b| a.object_id.cmp(&b.object_id));
    let pairs: Vec<(usize, usize)> = (0..objects.len())
        .flat_map(|a| (a + 1..objects.len()).map(move |b| (a, b)))
        .collect();

    let mut rng = rng_for(seed, "nav");
    let take = params.candidate_pairs.min(pairs.len());
    let chosen = index::sample(&mut rng, pairs.len(), take);

    Ok(chosen
        .iter()
        .map(|k| {
            let (a, b) = (objects[pairs[k].0], objects[pairs[k].1]);
            let path = match (
                grid.nearest_free_cell(a.position.xy(), None),
                grid.nearest_free_cell(b.position.xy(), None),
            ) {
                (Some(s), Some(g)) => shortest_path_cells(&grid, s, g).ok(),
                _ => None,
            };
            NavCandidate {
                start_object: a.object_id.clone(),
                end_object: b.object_id.clone(),
                path,
            }
        })
        .collect())
}

/// Indices of the two longest reachable candidates, longest first; equal
/// lengths keep sampling order.
pub fn select_longest_two(candidates: &[NavCandidate]) -> Result<[usize; 2], TrajectoryError> {
    let mut reachable: Vec<(usize, PathCost)> = candidates
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.path.as_ref().map(|p| (i, p.cost)))
        .collect();
    if reachable.len() < 2 {
        return Err(TrajectoryError::InsufficientPaths { found: reachable.len() });
    }
    reachable.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok([reachable[0].0, reachable[1].0])
}

/// Two navigation scans along the longest sampled paths. Each one spins 360°
/// at the start (30 frames, 12° apart), samples 12 frames at uniform arc
/// length while travelling, and spins again at the goal: 72 frames.
pub fn navigation_scan(room: &Room, seed: u64, params: &ScanParams) -> Result<Vec<ScanTrajectory>, TrajectoryError> {
    let candidates = nav_candidates(room, seed, params)?;
    let picked = select_longest_two(&candidates)?;
    Ok(picked
        .iter()
        .enumerate()
        .map(|(n, &ci)| {
            let cand = &candidates[ci];
            let path = cand.path.as_ref().expect("selected candidates are reachable");
            let fallback = || {
                let a = room.object(&cand.start_object).expect("candidate object").position;
                let b = room.object(&cand.end_object).expect("candidate object").position;
                let (dx, dy) = (b.x - a.x, b.y - a.y);
                if dx == 0.0 && dy == 0.0 {
                    0.0
                } else {
                    dy.atan2(dx).to_degrees()
                }
            };
            let start_heading = quantize_heading(path.first_heading().unwrap_or_else(fallback));
            let end_heading = quantize_heading(path.last_heading().unwrap_or_else(fallback));
            let at = |p: [f64; 2]| Vec3::new(p[0], p[1], CAMERA_HEIGHT);
            let first = path.waypoints[0];
            let last = *path.waypoints.last().expect("nonempty path");

            let mut poses = Vec::with_capacity(NAV_FRAMES);
            for k in 0..ROTATION_FRAMES {
                let yaw = (start_heading + ROTATION_STEP_DEG * k as f64).rem_euclid(360.0);
                poses.push((ScanPhase::RotStart, CameraPose::level(at(first), yaw)));
            }
            for k in 0..TRAVERSE_FRAMES {
                let s = path.length * (k + 1) as f64 / (TRAVERSE_FRAMES + 1) as f64;
                let (p, heading) = path.point_at(s);
                poses.push((ScanPhase::Traverse, CameraPose::level(at(p), heading.unwrap_or(start_heading))));
            }
            for k in 0..ROTATION_FRAMES {
                let yaw = (end_heading + ROTATION_STEP_DEG * k as f64).rem_euclid(360.0);
                poses.push((ScanPhase::RotEnd, CameraPose::level(at(last), yaw)));
            }
            ScanTrajectory::from_poses(format!("{}:nav{n}", room.room_id), poses, room, params)
        })
        .collect())
}

/// Objects seen from `pose`, nearest first.
///
/// An object counts as visible when its centroid or one of its eight AABB
/// corners lies inside the horizontal field of view and within `max_range`,
/// and the segment from the camera to that point clears every other object's
/// AABB. Boxes that enclose the camera itself are not treated as occluders.
pub fn visible_objects(pose: &CameraPose, room: &Room, hfov_deg: f64, max_range: f64) -> Vec<String> {
    let cam = pose.position;
    let heading = pose.heading();
    let half = hfov_deg / 2.0;
    let boxes: Vec<_> = room.objects.iter().map(|o| o.world_aabb()).collect();

    let mut seen: Vec<(f64, &str)> = Vec::new();
    for (k, obj) in room.objects.iter().enumerate() {
        let mut points = vec![obj.position];
        points.extend(boxes[k].corners());
        let visible = points.iter().any(|&p| {
            let d = p - cam;
            let dist = d.norm();
            if dist > max_range {
                return false;
            }
            let Ok(angle) = clockwise_angle_deg(heading, [d.x, d.y]) else {
                return false;
            };
            if angle.min(360.0 - angle) > half {
                return false;
            }
            !boxes.iter().enumerate().any(|(m, b)| {
                m != k && !b.contains(cam) && ray_hits_aabb(cam, d, b, dist)
            })
        });
        if visible {
            seen.push((cam.distance(obj.position), &obj.object_id));
        }
    }
    seen.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
    seen.into_iter().map(|(_, id)| id.to_string()).collect()
}
