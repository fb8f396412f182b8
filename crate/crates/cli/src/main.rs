//! `scanforge` command-line interface.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::error::Error;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use scanforge::cognition::{build_scene_cognition, describe_map, descriptions_json, quantize_to_grid, SceneCognition};
use scanforge::evaluation::evaluate_files;
use scanforge::io::write_jsonl;
use scanforge::pipeline::{run_pipeline, sanitize_component, PipelineConfig};
use scanforge::prompts::{build_prompt_bundle, RepresentationKind};
use scanforge::qa::generate_qa_for_room;
use scanforge::scene::{disassemble, filter_rooms, parse_scene_bytes, ParseMode, Room, Scene};
use scanforge::trajectory::{navigation_scan, orbit_scan};

type Result<T> = std::result::Result<T, Box<dyn Error>>;

#[derive(Parser, Debug)]
#[command(name = "scanforge", version, about = "Simulated indoor scans, spatial QA and scene cognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split a scene into single-room scene files.
    Disassemble(DisassembleArgs),
    /// Simulate an orbit or navigation scan of one room.
    Scan(ScanArgs),
    /// Generate question-answer items for one room.
    Qa(QaArgs),
    /// Build a scene representation from an orbit scan or a saved map.
    Cognition(CognitionArgs),
    /// Assemble a reasoning prompt for a question.
    Prompt(PromptArgs),
    /// Score predictions against gold QA items.
    Eval(EvalArgs),
    /// Run every stage over one or more scene files.
    Pipeline(PipelineArgs),
}

/// Flags shared by every subcommand. Flags override `--config`, which
/// overrides the built-in defaults.
#[derive(Args, Debug, Default)]
struct Common {
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Ignore unknown fields in scene files.
    #[arg(long, global = true)]
    lenient: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
struct ScanFlags {
    #[arg(long)]
    cell_size: Option<f64>,
    #[arg(long)]
    agent_radius: Option<f64>,
    #[arg(long)]
    hfov: Option<f64>,
    #[arg(long)]
    max_range: Option<f64>,
    #[arg(long)]
    candidate_pairs: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct QaFlags {
    #[arg(long)]
    per_type: Option<usize>,
    #[arg(long)]
    contact_epsilon: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct CognitionFlags {
    #[arg(long)]
    merge_threshold: Option<f64>,
    #[arg(long)]
    grid_cell_size: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct FilterFlags {
    /// Room types to keep (repeatable).
    #[arg(long = "room-type")]
    whitelist: Vec<String>,
    #[arg(long)]
    min_objects: Option<usize>,
}

#[derive(Args, Debug)]
struct RoomInput {
    /// Scene file holding the room.
    #[arg(long)]
    room: PathBuf,
    /// Room to use when the file holds more than one.
    #[arg(long)]
    room_id: Option<String>,
}

#[derive(Args, Debug)]
struct DisassembleArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Output directory for the per-room files.
    #[arg(long)]
    out: PathBuf,
    /// Drop rooms that fail the type whitelist or object minimum.
    #[arg(long)]
    filter: bool,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    filters: FilterFlags,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScanMode {
    Orbit,
    Nav,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    input: RoomInput,
    #[arg(long, value_enum)]
    mode: ScanMode,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    scan: ScanFlags,
}

#[derive(Args, Debug)]
struct QaArgs {
    #[command(flatten)]
    input: RoomInput,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    qa: QaFlags,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Repr {
    Map3d,
    Grid2d,
    Description,
}

impl From<Repr> for RepresentationKind {
    fn from(r: Repr) -> Self {
        match r {
            Repr::Map3d => RepresentationKind::Map3d,
            Repr::Grid2d => RepresentationKind::Grid2d,
            Repr::Description => RepresentationKind::Description,
        }
    }
}

#[derive(Args, Debug)]
struct CognitionArgs {
    /// Scene file holding the room to scan.
    #[arg(long, conflicts_with = "map", required_unless_present = "map")]
    room: Option<PathBuf>,
    #[arg(long)]
    room_id: Option<String>,
    /// Saved map3d file to convert instead of scanning.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long, value_enum)]
    repr: Repr,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    scan: ScanFlags,
    #[command(flatten)]
    cognition: CognitionFlags,
}

#[derive(Args, Debug)]
struct PromptArgs {
    #[arg(long)]
    question: String,
    /// Saved map3d file.
    #[arg(long)]
    map: PathBuf,
    #[arg(long, value_enum, default_value = "map3d")]
    repr: Repr,
    /// Emit the whole bundle as JSON instead of the prompt text.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    cognition: CognitionFlags,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Scene files (repeatable).
    #[arg(long, required = true)]
    scene: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; also capped by SCANFORGE_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    scan: ScanFlags,
    #[command(flatten)]
    qa: QaFlags,
    #[command(flatten)]
    cognition: CognitionFlags,
    #[command(flatten)]
    filters: FilterFlags,
}

fn base_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn set<T: Copy>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl ScanFlags {
    fn apply(&self, c: &mut PipelineConfig) {
        set(&mut c.cell_size, self.cell_size);
        set(&mut c.agent_radius, self.agent_radius);
        set(&mut c.hfov, self.hfov);
        set(&mut c.max_range, self.max_range);
        set(&mut c.candidate_pairs, self.candidate_pairs);
    }
}

impl QaFlags {
    fn apply(&self, c: &mut PipelineConfig) {
        set(&mut c.per_type, self.per_type);
        set(&mut c.contact_epsilon, self.contact_epsilon);
    }
}

impl CognitionFlags {
    fn apply(&self, c: &mut PipelineConfig) {
        set(&mut c.merge_threshold, self.merge_threshold);
        set(&mut c.grid_cell_size, self.grid_cell_size);
    }
}

impl FilterFlags {
    fn apply(&self, c: &mut PipelineConfig) {
        if !self.whitelist.is_empty() {
            c.whitelist = self.whitelist.clone();
        }
        set(&mut c.min_objects, self.min_objects);
    }
}

fn parse_mode(common: &Common) -> ParseMode {
    if common.lenient {
        ParseMode::Lenient
    } else {
        ParseMode::Strict
    }
}

fn read_scene(path: &Path, mode: ParseMode) -> Result<Scene> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(parse_scene_bytes(&bytes, mode).map_err(|e| format!("{}: {e}", path.display()))?)
}

/// The scene id to use for ids derived from the room, and the room itself.
fn read_room(path: &Path, room_id: Option<&str>, mode: ParseMode) -> Result<(String, Room)> {
    let scene = read_scene(path, mode)?;
    let room = match room_id {
        Some(id) => scene
            .rooms
            .iter()
            .find(|r| r.room_id == id)
            .ok_or_else(|| format!("{}: no room {id:?}", path.display()))?,
        None if scene.rooms.len() == 1 => &scene.rooms[0],
        None => return Err(format!("{}: holds {} rooms; pick one with --room-id", path.display(), scene.rooms.len()).into()),
    };
    Ok((scene.scene_id.clone(), room.clone()))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(p, bytes).map_err(|e| format!("{}: {e}", p.display()))?;
        }
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn cognition_text(cog: &SceneCognition, kind: RepresentationKind, grid_cell: f64) -> Result<String> {
    Ok(match kind {
        RepresentationKind::Map3d => format!("{}\n", serde_json::to_string_pretty(cog)?),
        RepresentationKind::Grid2d => {
            format!("{}\n", serde_json::to_string_pretty(&quantize_to_grid(&cog.map(), grid_cell)?)?)
        }
        RepresentationKind::Description => format!("{}\n", descriptions_json(&describe_map(cog)?)),
    })
}

fn read_map(path: &Path) -> Result<SceneCognition> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Disassemble(a) => {
            let mut cfg = base_config(&a.common)?;
            a.filters.apply(&mut cfg);
            let scene = read_scene(&a.scene, parse_mode(&a.common))?;
            let mut units = disassemble(&scene);
            if a.filter {
                units = filter_rooms(units, &cfg.room_filter());
            }
            fs::create_dir_all(&a.out)?;
            for u in &units {
                let path = a.out.join(format!("{}.json", sanitize_component(&u.scene_id)));
                fs::write(&path, format!("{}\n", u.to_json_pretty()))?;
                println!("{}", path.display());
            }
        }
        Command::Scan(a) => {
            let mut cfg = base_config(&a.common)?;
            a.scan.apply(&mut cfg);
            cfg.validate()?;
            let (_, room) = read_room(&a.input.room, a.input.room_id.as_deref(), parse_mode(&a.common))?;
            let params = cfg.scan_params();
            let scans = match a.mode {
                ScanMode::Orbit => vec![orbit_scan(&room, cfg.seed, &params)?],
                ScanMode::Nav => navigation_scan(&room, cfg.seed, &params)?,
            };
            let mut buf = Vec::new();
            for s in &scans {
                s.write_jsonl(&mut buf)?;
            }
            emit(a.out.as_deref(), &buf)?;
        }
        Command::Qa(a) => {
            let mut cfg = base_config(&a.common)?;
            a.qa.apply(&mut cfg);
            cfg.validate()?;
            let (scene_id, room) = read_room(&a.input.room, a.input.room_id.as_deref(), parse_mode(&a.common))?;
            let items = generate_qa_for_room(&scene_id, &room, cfg.seed, &cfg.qa_config())?;
            let mut buf = Vec::new();
            write_jsonl(&items, &mut buf)?;
            emit(a.out.as_deref(), &buf)?;
        }
        Command::Cognition(a) => {
            let mut cfg = base_config(&a.common)?;
            a.scan.apply(&mut cfg);
            a.cognition.apply(&mut cfg);
            cfg.validate()?;
            let cog = match (&a.map, &a.room) {
                (Some(m), _) => read_map(m)?,
                (None, Some(r)) => {
                    let (_, room) = read_room(r, a.room_id.as_deref(), parse_mode(&a.common))?;
                    let orbit = orbit_scan(&room, cfg.seed, &cfg.scan_params())?;
                    build_scene_cognition(&orbit.frames, &room, cfg.merge_threshold)?
                }
                (None, None) => unreachable!("clap requires --room or --map"),
            };
            let text = cognition_text(&cog, a.repr.into(), cfg.grid_cell_size)?;
            emit(a.out.as_deref(), text.as_bytes())?;
        }
        Command::Prompt(a) => {
            let mut cfg = base_config(&a.common)?;
            a.cognition.apply(&mut cfg);
            cfg.validate()?;
            let cog = read_map(&a.map)?;
            let bundle =
                build_prompt_bundle(&cog.map(), a.repr.into(), cfg.grid_cell_size, cog.reference_front, &a.question)?;
            let text = if a.json {
                format!("{}\n", serde_json::to_string_pretty(&bundle)?)
            } else {
                bundle.rendered
            };
            emit(a.out.as_deref(), text.as_bytes())?;
        }
        Command::Eval(a) => {
            base_config(&a.common)?;
            let report = evaluate_files(&a.gold, &a.pred)?;
            emit(a.out.as_deref(), report.to_json_pretty().as_bytes())?;
        }
        Command::Pipeline(a) => {
            let mut cfg = base_config(&a.common)?;
            a.scan.apply(&mut cfg);
            a.qa.apply(&mut cfg);
            a.cognition.apply(&mut cfg);
            a.filters.apply(&mut cfg);
            let m = run_pipeline(&a.scene, &a.out, &cfg, parse_mode(&a.common), a.threads)?;
            eprintln!(
                "{} of {} rooms kept, {} QA items written to {}",
                m.rooms_kept,
                m.rooms_total,
                m.qa_items,
                a.out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
