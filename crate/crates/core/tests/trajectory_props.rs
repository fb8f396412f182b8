mod common;

use std::collections::BTreeSet;

use common::oracle::{self, Grid};
use common::{random_room, random_room_between};
use proptest::prelude::*;
use scanforge::geometry::Vec3;
use scanforge::scene::Room;
use scanforge::trajectory::{
    navigation_scan, orbit_scan, visible_objects, CameraPose, ScanParams, ScanPhase, CAMERA_HEIGHT, NAV_FRAMES,
    ORBIT_FRAMES,
};

fn jsonl(frames: &scanforge::trajectory::ScanTrajectory) -> Vec<u8> {
    let mut buf = Vec::new();
    frames.write_jsonl(&mut buf).unwrap();
    buf
}

fn pose_in(room: &Room, u: f64, v: f64, yaw: f64) -> CameraPose {
    let (lo, hi) = room.floor_polygon.bounds();
    let p = Vec3::new(lo[0] + u * (hi[0] - lo[0]), lo[1] + v * (hi[1] - lo[1]), CAMERA_HEIGHT);
    CameraPose::level(p, yaw)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orbit_frames_sit_on_the_circle(seed in any::<u64>()) {
        let room = random_room(seed, 6);
        let scan = orbit_scan(&room, seed, &ScanParams::default()).unwrap();
        prop_assert_eq!(scan.frames.len(), ORBIT_FRAMES);
        let verts = room.floor_polygon.vertices();
        let (lo, hi) = room.floor_polygon.bounds();
        let radius = (hi[0] - lo[0]).min(hi[1] - lo[1]) / 3.0;
        // rectangles: the centroid is the mean of the corners
        let c = [verts.iter().map(|v| v[0]).sum::<f64>() / 4.0, verts.iter().map(|v| v[1]).sum::<f64>() / 4.0];
        for f in &scan.frames {
            let p = f.pose.position;
            prop_assert!(((p.x - c[0]).hypot(p.y - c[1]) - radius).abs() < 1e-9);
            prop_assert_eq!(p.z, CAMERA_HEIGHT);
            prop_assert_eq!(f.phase, ScanPhase::Orbit);
        }
    }

    #[test]
    fn scans_are_deterministic(seed in any::<u64>()) {
        let room = random_room_between(seed, 3, 6);
        let p = ScanParams::default();
        prop_assert_eq!(jsonl(&orbit_scan(&room, seed, &p).unwrap()), jsonl(&orbit_scan(&room, seed, &p).unwrap()));
        let a = navigation_scan(&room, seed, &p);
        let b = navigation_scan(&room, seed, &p);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.len(), b.len());
                for (x, y) in a.iter().zip(&b) {
                    prop_assert_eq!(jsonl(x), jsonl(y));
                }
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            _ => prop_assert!(false, "one run failed and the other did not"),
        }
    }

    #[test]
    fn visibility_grows_with_field_of_view(seed in any::<u64>(), u in 0.05..0.95f64, v in 0.05..0.95f64, yaw in 0.0..360.0f64, narrow in 10.0..90.0f64, extra in 0.0..80.0f64) {
        let room = random_room(seed, 8);
        let pose = pose_in(&room, u, v, yaw);
        let small: BTreeSet<String> = visible_objects(&pose, &room, narrow, 20.0).into_iter().collect();
        let large: BTreeSet<String> = visible_objects(&pose, &room, narrow + extra, 20.0).into_iter().collect();
        prop_assert!(small.is_subset(&large));
    }

    #[test]
    fn visibility_grows_with_range(seed in any::<u64>(), u in 0.05..0.95f64, v in 0.05..0.95f64, yaw in 0.0..360.0f64, near in 0.5..5.0f64, extra in 0.0..10.0f64) {
        let room = random_room(seed, 8);
        let pose = pose_in(&room, u, v, yaw);
        let small: BTreeSet<String> = visible_objects(&pose, &room, 90.0, near).into_iter().collect();
        let large: BTreeSet<String> = visible_objects(&pose, &room, 90.0, near + extra).into_iter().collect();
        prop_assert!(small.is_subset(&large));
    }

    #[test]
    fn lone_object_visibility_matches_cone_test(seed in any::<u64>(), u in 0.05..0.95f64, v in 0.05..0.95f64, yaw in 0.0..360.0f64, hfov in 20.0..170.0f64, range in 0.5..8.0f64) {
        let mut room = random_room(seed, 1);
        room.objects.truncate(1);
        let pose = pose_in(&room, u, v, yaw);
        let o = &room.objects[0];
        let (lo, hi) = oracle::aabb(o);
        prop_assume!(!(0..3).all(|k| {
            let c = [pose.position.x, pose.position.y, pose.position.z][k];
            lo[k] <= c && c <= hi[k]
        }));
        let mut points = vec![[o.position.x, o.position.y, o.position.z]];
        for mask in 0..8 {
            points.push([
                if mask & 1 == 0 { lo[0] } else { hi[0] },
                if mask & 2 == 0 { lo[1] } else { hi[1] },
                if mask & 4 == 0 { lo[2] } else { hi[2] },
            ]);
        }
        let heading = [yaw.to_radians().cos(), yaw.to_radians().sin()];
        let margin = |p: &[f64; 3]| {
            let d = [p[0] - pose.position.x, p[1] - pose.position.y, p[2] - pose.position.z];
            let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let a = oracle::clockwise_deg(heading, [d[0], d[1]]);
            (hfov / 2.0 - a.min(360.0 - a), range - dist)
        };
        // skip poses where a sample point sits on the cone or range boundary
        prop_assume!(points.iter().all(|p| {
            let (ang, rng) = margin(p);
            ang.abs() > 1e-6 && rng.abs() > 1e-9
        }));
        let expected = points.iter().any(|p| {
            let (ang, rng) = margin(p);
            ang > 0.0 && rng > 0.0
        });
        let seen = visible_objects(&pose, &room, hfov, range);
        prop_assert_eq!(!seen.is_empty(), expected);
    }
}

#[test]
fn traverse_frames_stay_on_free_cells() {
    let params = ScanParams::default();
    for seed in 0..12u64 {
        let room = random_room_between(1000 + seed, 3, 7);
        let Ok(scans) = navigation_scan(&room, seed, &params) else { continue };
        let grid = Grid::build(&room, params.cell_size, params.agent_radius);
        for scan in &scans {
            assert_eq!(scan.frames.len(), NAV_FRAMES);
            let traverse: Vec<_> = scan.frames.iter().filter(|f| f.phase == ScanPhase::Traverse).collect();
            assert_eq!(traverse.len(), 12);
            for f in traverse {
                let p = f.pose.position;
                let (i, j) = grid.cell_of([p.x, p.y]).expect("inside the grid");
                // a point on a cell boundary belongs to every cell it touches
                let free_nearby = (-1i64..=1).any(|di| {
                    (-1i64..=1).any(|dj| {
                        let (ni, nj) = (i as i64 + di, j as i64 + dj);
                        if ni < 0 || nj < 0 || ni as usize >= grid.w || nj as usize >= grid.h {
                            return false;
                        }
                        let c = grid.center(ni as usize, nj as usize);
                        (c[0] - p.x).abs() <= params.cell_size / 2.0 + 1e-9
                            && (c[1] - p.y).abs() <= params.cell_size / 2.0 + 1e-9
                            && grid.free(ni as usize, nj as usize)
                    })
                });
                assert!(free_nearby, "seed {seed}: traverse frame {} on a blocked cell", f.frame_index);
            }
        }
    }
}

#[test]
fn reported_path_length_equals_waypoint_polyline() {
    use scanforge::trajectory::nav_candidates;
    let params = ScanParams::default();
    let mut checked = 0;
    for seed in 0..12u64 {
        let room = random_room_between(2000 + seed, 3, 7);
        for cand in nav_candidates(&room, seed, &params).unwrap_or_default() {
            let Some(path) = cand.path else { continue };
            let poly: f64 = path
                .waypoints
                .windows(2)
                .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
                .sum();
            assert!((poly - path.length).abs() < 1e-9, "{poly} vs {}", path.length);
            checked += 1;
        }
    }
    assert!(checked > 20);
}
