//! End-to-end generation: scene files in, per-room scans, QA and cognition
//! artifacts out.
//!
//! Output layout under the output directory:
//!
//! ```text
//! manifest.json
//! dataset.jsonl               all QA items, rooms in sorted order
//! <scene>/<room>/room.json
//! <scene>/<room>/orbit.jsonl
//! <scene>/<room>/nav.jsonl
//! <scene>/<room>/qa.jsonl
//! <scene>/<room>/map3d.json
//! <scene>/<room>/grid2d.json
//! <scene>/<room>/description.json
//! ```
//!
//! Each room draws from its own seed derived from the global seed and the
//! room's identity, and results are emitted in sorted order, so the output
//! bytes do not depend on the number of worker threads.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cognition::{
    build_scene_cognition, describe_map, descriptions_json, quantize_to_grid, CognitionError, DEFAULT_GRID_CELL,
    DEFAULT_MERGE_THRESHOLD,
};
use crate::io::{write_jsonl, IoError};
use crate::qa::{generate_qa_for_room, QaConfig, QaError, QaItem, DEFAULT_CONTACT_EPSILON};
use crate::scene::{
    disassemble, filter_rooms, parse_scene_bytes, ParseMode, RoomFilter, Scene, SceneError, DEFAULT_MIN_OBJECTS,
    DEFAULT_ROOM_TYPES,
};
use crate::seed::derive_seed;
use crate::trajectory::{navigation_scan, orbit_scan, ScanParams, TrajectoryError};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SCANFORGE_THREADS";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Scene {
        path: String,
        #[source]
        source: SceneError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate output directory {0}")]
    DuplicateRoom(String),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Qa(#[from] QaError),
    #[error(transparent)]
    Cognition(#[from] CognitionError),
    #[error(transparent)]
    Output(#[from] IoError),
    #[error("thread pool: {0}")]
    Threads(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Every tunable of the pipeline. Missing fields in a config file take the
/// defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub whitelist: Vec<String>,
    pub min_objects: usize,
    pub cell_size: f64,
    pub agent_radius: f64,
    pub hfov: f64,
    pub max_range: f64,
    pub contact_epsilon: f64,
    pub per_type: usize,
    pub candidate_pairs: usize,
    pub merge_threshold: f64,
    pub grid_cell_size: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let scan = ScanParams::default();
        PipelineConfig {
            seed: 0,
            whitelist: DEFAULT_ROOM_TYPES.iter().map(|s| s.to_string()).collect(),
            min_objects: DEFAULT_MIN_OBJECTS,
            cell_size: scan.cell_size,
            agent_radius: scan.agent_radius,
            hfov: scan.hfov_deg,
            max_range: scan.max_range,
            contact_epsilon: DEFAULT_CONTACT_EPSILON,
            per_type: QaConfig::default().per_type,
            candidate_pairs: scan.candidate_pairs,
            merge_threshold: DEFAULT_MERGE_THRESHOLD,
            grid_cell_size: DEFAULT_GRID_CELL,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        Self::from_json(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        for (name, v) in [
            ("cell_size", self.cell_size),
            ("agent_radius", self.agent_radius),
            ("hfov", self.hfov),
            ("max_range", self.max_range),
            ("contact_epsilon", self.contact_epsilon),
            ("merge_threshold", self.merge_threshold),
            ("grid_cell_size", self.grid_cell_size),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PipelineError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.per_type < 1 {
            return Err(PipelineError::Config("per_type must be >= 1".into()));
        }
        if self.candidate_pairs < 2 {
            return Err(PipelineError::Config("candidate_pairs must be >= 2".into()));
        }
        Ok(())
    }

    pub fn scan_params(&self) -> ScanParams {
        ScanParams {
            cell_size: self.cell_size,
            agent_radius: self.agent_radius,
            hfov_deg: self.hfov,
            max_range: self.max_range,
            candidate_pairs: self.candidate_pairs,
        }
    }

    pub fn qa_config(&self) -> QaConfig {
        QaConfig {
            per_type: self.per_type,
            contact_epsilon: self.contact_epsilon,
        }
    }

    pub fn room_filter(&self) -> RoomFilter {
        RoomFilter {
            whitelist: self.whitelist.iter().map(|s| s.trim().to_lowercase()).collect(),
            min_objects: self.min_objects,
        }
    }
}

/// Seed for one room, independent of processing order.
pub fn room_seed(global_seed: u64, scene_id: &str, room_id: &str) -> u64 {
    derive_seed(global_seed, &format!("room/{scene_id}/{room_id}"))
}

/// Keeps `[A-Za-z0-9._-]`, replaces everything else with `_`.
pub fn sanitize_component(s: &str) -> String {
    let out: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect();
    match out.as_str() {
        "" | "." | ".." => format!("_{out}"),
        _ => out,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomRecord {
    pub scene_id: String,
    pub room_id: String,
    pub room_type: String,
    pub dir: String,
    pub seed: u64,
    pub orbit_frames: usize,
    pub nav_frames: usize,
    pub qa_items: usize,
    pub cognition_objects: usize,
    /// Stages that could not run for this room, with the reason.
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: PipelineConfig,
    pub scenes: usize,
    pub rooms_total: usize,
    pub rooms_kept: usize,
    pub qa_items: usize,
    pub rooms: Vec<RoomRecord>,
}

/// One room ready for processing.
#[derive(Debug, Clone)]
pub struct RoomJob {
    /// Id of the scene file the room came from.
    pub source_scene_id: String,
    /// The single-room scene produced by disassembly.
    pub unit: Scene,
}

impl RoomJob {
    pub fn dir(&self) -> PathBuf {
        let room = &self.unit.rooms[0];
        Path::new(&sanitize_component(&self.source_scene_id)).join(sanitize_component(&room.room_id))
    }
}

/// Disassembles and filters scenes; returns `(rooms before filtering, jobs)`
/// with jobs sorted by output directory.
pub fn plan_jobs(scenes: &[Scene], config: &PipelineConfig) -> Result<(usize, Vec<RoomJob>), PipelineError> {
    let filter = config.room_filter();
    let mut total = 0;
    let mut jobs = Vec::new();
    for s in scenes {
        let units = disassemble(s);
        total += units.len();
        for unit in filter_rooms(units, &filter) {
            jobs.push(RoomJob {
                source_scene_id: s.scene_id.clone(),
                unit,
            });
        }
    }
    jobs.sort_by_key(|j| j.dir());
    let mut seen = BTreeSet::new();
    for j in &jobs {
        if !seen.insert(j.dir()) {
            return Err(PipelineError::DuplicateRoom(j.dir().display().to_string()));
        }
    }
    Ok((total, jobs))
}

struct RoomOutput {
    record: RoomRecord,
    qa: Vec<QaItem>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn process_room(job: &RoomJob, out_dir: &Path, config: &PipelineConfig) -> Result<RoomOutput, PipelineError> {
    let room = &job.unit.rooms[0];
    let seed = room_seed(config.seed, &job.source_scene_id, &room.room_id);
    let rel = job.dir();
    let dir = out_dir.join(&rel);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let params = config.scan_params();
    let mut skipped = Vec::new();

    write_file(&dir.join("room.json"), format!("{}\n", job.unit.to_json_pretty()).as_bytes())?;

    let mut orbit_frames = 0;
    let mut cognition_objects = 0;
    match orbit_scan(room, seed, &params) {
        Ok(orbit) => {
            let mut buf = Vec::new();
            orbit_frames = orbit.write_jsonl(&mut buf)?;
            write_file(&dir.join("orbit.jsonl"), &buf)?;
            match build_scene_cognition(&orbit.frames, room, config.merge_threshold) {
                Ok(cog) => {
                    cognition_objects = cog.entries.len();
                    let map3d = serde_json::to_string_pretty(&cog).expect("cognition serializes");
                    write_file(&dir.join("map3d.json"), format!("{map3d}\n").as_bytes())?;
                    let grid = quantize_to_grid(&cog.map(), config.grid_cell_size)?;
                    let grid = serde_json::to_string_pretty(&grid).expect("grid serializes");
                    write_file(&dir.join("grid2d.json"), format!("{grid}\n").as_bytes())?;
                    let desc = descriptions_json(&describe_map(&cog)?);
                    write_file(&dir.join("description.json"), format!("{desc}\n").as_bytes())?;
                }
                Err(e) => skipped.push(format!("cognition: {e}")),
            }
        }
        Err(e) => skipped.push(format!("orbit: {e}")),
    }

    let mut nav_frames = 0;
    match navigation_scan(room, seed, &params) {
        Ok(scans) => {
            let mut buf = Vec::new();
            for s in &scans {
                nav_frames += s.write_jsonl(&mut buf)?;
            }
            write_file(&dir.join("nav.jsonl"), &buf)?;
        }
        Err(e) => skipped.push(format!("nav: {e}")),
    }

    let qa = generate_qa_for_room(&job.unit.scene_id, room, seed, &config.qa_config())?;
    let mut buf = Vec::new();
    write_jsonl(&qa, &mut buf)?;
    write_file(&dir.join("qa.jsonl"), &buf)?;

    Ok(RoomOutput {
        record: RoomRecord {
            scene_id: job.unit.scene_id.clone(),
            room_id: room.room_id.clone(),
            room_type: room.room_type.clone(),
            dir: rel.iter().map(|c| c.to_string_lossy().into_owned()).collect::<Vec<_>>().join("/"),
            seed,
            orbit_frames,
            nav_frames,
            qa_items: qa.len(),
            cognition_objects,
            skipped,
        },
        qa,
    })
}

/// Thread count: explicit request, else `SCANFORGE_THREADS`, else rayon's
/// default. The environment variable also caps an explicit request.
pub fn resolve_threads(requested: Option<usize>) -> Option<usize> {
    let env = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    match (requested.filter(|&n| n > 0), env) {
        (Some(r), Some(cap)) => Some(r.min(cap)),
        (Some(r), None) => Some(r),
        (None, cap) => cap,
    }
}

/// Runs every stage for the given scenes and writes the output tree.
pub fn run_pipeline_scenes(
    scenes: &[Scene],
    out_dir: &Path,
    config: &PipelineConfig,
    threads: Option<usize>,
) -> Result<Manifest, PipelineError> {
    config.validate()?;
    let mut ids = BTreeSet::new();
    for s in scenes {
        if !ids.insert(s.scene_id.as_str()) {
            return Err(PipelineError::Config(format!("duplicate scene id {}", s.scene_id)));
        }
    }
    let (rooms_total, jobs) = plan_jobs(scenes, config)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = resolve_threads(threads) {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| PipelineError::Threads(e.to_string()))?;
    let outputs: Vec<RoomOutput> =
        pool.install(|| jobs.par_iter().map(|j| process_room(j, out_dir, config)).collect::<Result<_, _>>())?;

    let all_qa: Vec<QaItem> = outputs.iter().flat_map(|o| o.qa.iter().cloned()).collect();
    let mut buf = Vec::new();
    write_jsonl(&all_qa, &mut buf)?;
    write_file(&out_dir.join("dataset.jsonl"), &buf)?;

    let manifest = Manifest {
        config: config.clone(),
        scenes: scenes.len(),
        rooms_total,
        rooms_kept: outputs.len(),
        qa_items: all_qa.len(),
        rooms: outputs.into_iter().map(|o| o.record).collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&out_dir.join("manifest.json"), format!("{text}\n").as_bytes())?;
    Ok(manifest)
}

/// Reads scene files and runs [`run_pipeline_scenes`]. Scenes are ordered
/// by id, so the order of `inputs` does not matter.
pub fn run_pipeline(
    inputs: &[PathBuf],
    out_dir: &Path,
    config: &PipelineConfig,
    mode: ParseMode,
    threads: Option<usize>,
) -> Result<Manifest, PipelineError> {
    let mut scenes = Vec::with_capacity(inputs.len());
    for p in inputs {
        let bytes = fs::read(p).map_err(io_err(p))?;
        let scene = parse_scene_bytes(&bytes, mode).map_err(|source| PipelineError::Scene {
            path: p.display().to_string(),
            source,
        })?;
        scenes.push(scene);
    }
    scenes.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
    run_pipeline_scenes(&scenes, out_dir, config, threads)
}
