//! Shared fixtures, random room generation and independent reference
//! implementations used as test oracles.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scanforge::geometry::{Polygon2, Vec3};
use scanforge::scene::{parse_scene, ObjectInstance, Room, Scene};

pub fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn fixture_scene(name: &str) -> Scene {
    let path = repo_path(&format!("fixtures/scenes/{name}"));
    parse_scene(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

pub const CATEGORIES: [&str; 10] = [
    "chair", "table", "sofa", "lamp", "bed", "desk", "tv", "plant", "shelf", "cabinet",
];

/// A rectangular room with up to `max_objects` randomly placed, sized and
/// rotated objects. Categories repeat, so some appear more than once.
pub fn random_room(seed: u64, max_objects: usize) -> Room {
    random_room_between(seed, 1, max_objects)
}

pub fn random_room_between(seed: u64, min_objects: usize, max_objects: usize) -> Room {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x0, y0) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let (w, h) = (rng.gen_range(3.0..8.0), rng.gen_range(3.0..8.0));
    let n = rng.gen_range(min_objects..=max_objects);
    let objects = (0..n)
        .map(|k| {
            let size = [rng.gen_range(0.2..1.4), rng.gen_range(0.2..1.4), rng.gen_range(0.2..2.0)];
            let elevated = rng.gen_bool(0.2);
            let z = size[2] / 2.0 + if elevated { rng.gen_range(0.3..1.0) } else { 0.0 };
            ObjectInstance {
                object_id: format!("obj-{k:02}"),
                category: CATEGORIES[rng.gen_range(0..CATEGORIES.len())].to_string(),
                position: Vec3::new(x0 + rng.gen_range(0.2..w - 0.2), y0 + rng.gen_range(0.2..h - 0.2), z),
                yaw_deg: rng.gen_range(0.0..360.0),
                size,
                navigable: rng.gen_bool(0.1),
            }
        })
        .collect();
    Room {
        room_id: format!("room-{seed}"),
        room_type: ["bedroom", "kitchen", "living room", "dining room"][rng.gen_range(0..4)].to_string(),
        floor_polygon: Polygon2::rectangle(x0, y0, x0 + w, y0 + h).unwrap(),
        ceiling_height: 2.7,
        objects,
    }
}

pub type Mat4 = [[f64; 4]; 4];

pub fn mat4_identity() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

pub fn mat4_apply(m: &Mat4, p: [f64; 3]) -> [f64; 3] {
    let v = [p[0], p[1], p[2], 1.0];
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..4).map(|k| m[i][k] * v[k]).sum();
    }
    out
}

/// Rodrigues rotation about a unit axis, written as a plain 4×4 matrix.
pub fn mat4_rigid(axis: [f64; 3], angle_deg: f64, t: [f64; 3]) -> Mat4 {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let (x, y, z) = (axis[0] / n, axis[1] / n, axis[2] / n);
    let (s, c) = angle_deg.to_radians().sin_cos();
    let v = 1.0 - c;
    [
        [c + x * x * v, x * y * v - z * s, x * z * v + y * s, t[0]],
        [y * x * v + z * s, c + y * y * v, y * z * v - x * s, t[1]],
        [z * x * v - y * s, z * y * v + x * s, c + z * z * v, t[2]],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

pub fn max_abs_diff(a: &Mat4, b: &Mat4) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

/// Reference implementations that share no code with the library.
pub mod oracle {
    use super::*;

    pub fn dist3(a: Vec3, b: Vec3) -> f64 {
        ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt()
    }

    pub fn shoelace(v: &[[f64; 2]]) -> f64 {
        let mut s = 0.0;
        for k in 0..v.len() {
            let (a, b) = (v[k], v[(k + 1) % v.len()]);
            s += a[0] * b[1] - b[0] * a[1];
        }
        s.abs() / 2.0
    }

    /// Ray-crossing point-in-polygon; points exactly on an edge are not
    /// handled specially.
    pub fn inside_polygon(v: &[[f64; 2]], p: [f64; 2]) -> bool {
        let mut inside = false;
        let mut j = v.len() - 1;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[j]);
            if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0] {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    /// The four footprint corners of a yaw-rotated box, counter-clockwise.
    pub fn footprint(o: &ObjectInstance) -> [[f64; 2]; 4] {
        let a = o.yaw_deg.to_radians();
        let (ux, uy) = (a.cos(), a.sin());
        let (hx, hy) = (o.size[0] / 2.0, o.size[1] / 2.0);
        let c = [o.position.x, o.position.y];
        [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
            .map(|(sx, sy)| [c[0] + sx * hx * ux - sy * hy * uy, c[1] + sx * hx * uy + sy * hy * ux])
    }

    fn seg_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
        let (abx, aby) = (b[0] - a[0], b[1] - a[1]);
        let t = (((p[0] - a[0]) * abx + (p[1] - a[1]) * aby) / (abx * abx + aby * aby)).clamp(0.0, 1.0);
        let (qx, qy) = (a[0] + t * abx, a[1] + t * aby);
        ((p[0] - qx).powi(2) + (p[1] - qy).powi(2)).sqrt()
    }

    /// Distance from `p` to the rotated footprint; zero inside.
    pub fn footprint_dist(o: &ObjectInstance, p: [f64; 2]) -> f64 {
        let f = footprint(o);
        if inside_polygon(&f, p) {
            return 0.0;
        }
        (0..4).map(|k| seg_dist(p, f[k], f[(k + 1) % 4])).fold(f64::INFINITY, f64::min)
    }

    /// World AABB `(min, max)` from the rotated footprint corners.
    pub fn aabb(o: &ObjectInstance) -> ([f64; 3], [f64; 3]) {
        let f = footprint(o);
        let xs = f.map(|c| c[0]);
        let ys = f.map(|c| c[1]);
        let min = |v: [f64; 4]| v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = |v: [f64; 4]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let hz = o.size[2] / 2.0;
        (
            [min(xs), min(ys), o.position.z - hz],
            [max(xs), max(ys), o.position.z + hz],
        )
    }

    pub fn box_gap(a: &ObjectInstance, b: &ObjectInstance) -> f64 {
        let (amin, amax) = aabb(a);
        let (bmin, bmax) = aabb(b);
        let mut s = 0.0;
        for k in 0..3 {
            let d = (bmin[k] - amax[k]).max(amin[k] - bmax[k]).max(0.0);
            s += d * d;
        }
        s.sqrt()
    }

    /// Clockwise angle in degrees from `front` to `v`, in `[0, 360)`.
    pub fn clockwise_deg(front: [f64; 2], v: [f64; 2]) -> f64 {
        let d = front[1].atan2(front[0]) - v[1].atan2(v[0]);
        d.to_degrees().rem_euclid(360.0)
    }

    pub fn sector(theta: f64) -> &'static str {
        const TABLE: [(f64, f64, &str); 5] = [
            (0.0, 45.0, "front"),
            (45.0, 135.0, "right"),
            (135.0, 225.0, "back"),
            (225.0, 315.0, "left"),
            (315.0, 360.0, "front"),
        ];
        TABLE
            .iter()
            .find(|(lo, hi, _)| theta >= *lo && theta < *hi)
            .map(|t| t.2)
            .expect("angle in [0, 360)")
    }

    pub fn round_tenth_text(v: f64) -> String {
        let s = format!("{:.1}", (v * 10.0).round() / 10.0);
        if s == "-0.0" {
            "0.0".into()
        } else {
            s
        }
    }

    /// Occupancy as a row-major `blocked` vector, `width`, `height`.
    pub struct Grid {
        pub origin: [f64; 2],
        pub cs: f64,
        pub w: usize,
        pub h: usize,
        pub blocked: Vec<bool>,
    }

    impl Grid {
        pub fn build(room: &Room, cs: f64, radius: f64) -> Grid {
            let v = room.floor_polygon.vertices();
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in v {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            let n = |e: f64| {
                let mut k = (e / cs).round() as usize;
                while (k as f64) * cs < e - 1e-9 * cs {
                    k += 1;
                }
                while k > 1 && ((k - 1) as f64) * cs >= e - 1e-9 * cs {
                    k -= 1;
                }
                k.max(1)
            };
            let (w, h) = (n(hi[0] - lo[0]), n(hi[1] - lo[1]));
            let mut blocked = vec![false; w * h];
            for j in 0..h {
                for i in 0..w {
                    let c = [lo[0] + (i as f64 + 0.5) * cs, lo[1] + (j as f64 + 0.5) * cs];
                    blocked[j * w + i] = !inside_polygon(v, c)
                        || room.objects.iter().any(|o| !o.navigable && footprint_dist(o, c) <= radius);
                }
            }
            Grid { origin: lo, cs, w, h, blocked }
        }

        pub fn free(&self, i: usize, j: usize) -> bool {
            !self.blocked[j * self.w + i]
        }

        pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
            [self.origin[0] + (i as f64 + 0.5) * self.cs, self.origin[1] + (j as f64 + 0.5) * self.cs]
        }

        pub fn cell_of(&self, p: [f64; 2]) -> Option<(usize, usize)> {
            let i = ((p[0] - self.origin[0]) / self.cs).floor();
            let j = ((p[1] - self.origin[1]) / self.cs).floor();
            (i >= 0.0 && j >= 0.0 && (i as usize) < self.w && (j as usize) < self.h).then_some((i as usize, j as usize))
        }

        /// Containing cell if free, else the nearest free center (ties by
        /// smaller `i`, then smaller `j`).
        pub fn anchor(&self, p: [f64; 2]) -> Option<(usize, usize)> {
            if let Some((i, j)) = self.cell_of(p) {
                if self.free(i, j) {
                    return Some((i, j));
                }
            }
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..self.w {
                for j in 0..self.h {
                    if !self.free(i, j) {
                        continue;
                    }
                    let c = self.center(i, j);
                    let d = ((c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2)).sqrt();
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, i, j));
                    }
                }
            }
            best.map(|(_, i, j)| (i, j))
        }

        /// Shortest move counts `(straight, diagonal)` with an O(V²)
        /// Dijkstra; diagonals need both side cells free.
        pub fn shortest(&self, s: (usize, usize), g: (usize, usize)) -> Option<(u64, u64)> {
            let n = self.w * self.h;
            let id = |i: usize, j: usize| j * self.w + i;
            let mut best: Vec<Option<(u64, u64)>> = vec![None; n];
            let mut done = vec![false; n];
            best[id(s.0, s.1)] = Some((0, 0));
            loop {
                let mut pick: Option<usize> = None;
                for k in 0..n {
                    if done[k] {
                        continue;
                    }
                    if let Some(c) = best[k] {
                        if pick.is_none_or(|p| less(c, best[p].unwrap())) {
                            pick = Some(k);
                        }
                    }
                }
                let k = pick?;
                done[k] = true;
                let (i, j) = (k % self.w, k / self.w);
                if (i, j) == g {
                    return best[k];
                }
                let c = best[k].unwrap();
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let (ni, nj) = (i as i64 + di, j as i64 + dj);
                        if ni < 0 || nj < 0 || ni >= self.w as i64 || nj >= self.h as i64 {
                            continue;
                        }
                        let (ni, nj) = (ni as usize, nj as usize);
                        if !self.free(ni, nj) {
                            continue;
                        }
                        let diag = di != 0 && dj != 0;
                        if diag && !(self.free(ni, j) && self.free(i, nj)) {
                            continue;
                        }
                        let cand = if diag { (c.0, c.1 + 1) } else { (c.0 + 1, c.1) };
                        let slot = &mut best[id(ni, nj)];
                        if slot.is_none_or(|old| less(cand, old)) {
                            *slot = Some(cand);
                        }
                    }
                }
            }
        }
    }

    /// `a.0 + a.1·√2 < b.0 + b.1·√2`, decided in integers.
    pub fn less(a: (u64, u64), b: (u64, u64)) -> bool {
        let x = a.0 as i128 - b.0 as i128;
        let y = b.1 as i128 - a.1 as i128;
        // a < b  ⇔  x < y·√2
        match (x < 0, y < 0) {
            (true, false) => true,
            (false, true) => false,
            (false, false) => x * x < 2 * y * y,
            (true, true) => x * x > 2 * y * y,
        }
    }
}

/// Re-derives the expected answer text of a generated item from raw room
/// geometry, reading the operands from the item's provenance and the
/// variant from the question wording.
pub fn rederive_answer(item: &scanforge::qa::QaItem, room: &Room, contact_epsilon: f64) -> Result<String, String> {
    use scanforge::qa::QuestionCategory::*;
    let obj = |id: &String| room.objects.iter().find(|o| &o.object_id == id).ok_or(format!("unknown id {id}"));
    let ids = &item.provenance.object_ids;
    let q = item.question.to_lowercase();
    let unique = |o: &ObjectInstance| room.objects.iter().filter(|x| x.category == o.category).count() == 1;
    let yes_no = |b: bool| if b { "yes" } else { "no" }.to_string();
    Ok(match item.category {
        ObjectCount => {
            let cat = &obj(&ids[0])?.category;
            let mut members: Vec<&String> =
                room.objects.iter().filter(|o| &o.category == cat).map(|o| &o.object_id).collect();
            members.sort();
            if members != ids.iter().collect::<Vec<_>>() {
                return Err("count provenance is not the full instance set".into());
            }
            oracle::round_tenth_text(members.len() as f64)
        }
        ObjectSize => {
            let o = obj(&ids[0])?;
            if !unique(o) {
                return Err("ambiguous referent".into());
            }
            let [x, y, z] = o.size;
            let v = if q.contains("longest") {
                x.max(y).max(z)
            } else if q.contains("shortest") {
                x.min(y).min(z)
            } else if q.contains("tall") {
                z
            } else if q.contains("square meters") {
                x * y
            } else {
                return Err(format!("unknown size question {q}"));
            };
            oracle::round_tenth_text(v)
        }
        RoomSize => oracle::round_tenth_text(oracle::shoelace(room.floor_polygon.vertices())),
        RoomType => room.room_type.clone(),
        RelativeDistance => {
            let r = obj(&ids[0])?;
            let cands: Vec<&ObjectInstance> = ids[1..].iter().map(obj).collect::<Result<_, _>>()?;
            if !unique(r) || !cands.iter().all(|c| unique(c)) {
                return Err("ambiguous referent".into());
            }
            let mut best = cands[0];
            for c in &cands[1..] {
                let (dc, db) = (oracle::dist3(r.position, c.position), oracle::dist3(r.position, best.position));
                if dc < db || (dc == db && c.object_id < best.object_id) {
                    best = c;
                }
            }
            let mut want: Vec<&str> = cands.iter().map(|c| c.category.as_str()).collect();
            let mut got: Vec<&str> = item.options.iter().flatten().map(String::as_str).collect();
            want.sort();
            got.sort();
            if want != got {
                return Err("options are not the candidate set".into());
            }
            best.category.clone()
        }
        AbsoluteDistance => {
            let (a, b) = (obj(&ids[0])?, obj(&ids[1])?);
            if !unique(a) || !unique(b) {
                return Err("ambiguous referent".into());
            }
            oracle::round_tenth_text(oracle::dist3(a.position, b.position))
        }
        RelativeDirection => {
            let (a, f, t) = (obj(&ids[0])?, obj(&ids[1])?, obj(&ids[2])?);
            if ![a, f, t].iter().all(|o| unique(o)) {
                return Err("ambiguous referent".into());
            }
            let front = [f.position.x - a.position.x, f.position.y - a.position.y];
            let to = [t.position.x - a.position.x, t.position.y - a.position.y];
            oracle::sector(oracle::clockwise_deg(front, to)).to_string()
        }
        ContactRelationship => {
            let (a, b) = (obj(&ids[0])?, obj(&ids[1])?);
            let touching = oracle::box_gap(a, b) <= contact_epsilon;
            yes_no(if q.contains("gap") { !touching } else { touching })
        }
        OperationFeasibility => {
            let (m, s) = (obj(&ids[0])?, obj(&ids[1])?);
            let fits = |a: f64, b: f64| a < s.size[0] && b < s.size[1];
            let footprint = fits(m.size[0], m.size[1]) || fits(m.size[1], m.size[0]);
            let inside = q.contains(" put ");
            yes_no(if inside { footprint && m.size[2] < s.size[2] } else { footprint })
        }
    })
}
