use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use l2b_core::config::CONFIG_KEYS;
use l2b_core::descriptor::{load_db, save_db};
use l2b_core::eval::{eval_row, random_pose_in, rows_csv, summarize, EvalRow};
use l2b_core::ingest::{
    generate_floorplan, load_building, load_submap, save_building, save_submap, synthesize_submap, SceneParams, Submap, WallModel,
};
use l2b_core::pipeline::{build_model_db, extract_features, register_features, FloorIndex, Registration};
use l2b_core::verify::reliability_curve;
use l2b_core::{Error, PipelineConfig, Se2Pose};

enum Failure {
    Usage(String),
    Data(Error),
    BelowThreshold(f64),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) => Failure::Usage(m),
            e => Failure::Data(e),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn with_config(cmd: Command) -> Command {
    let cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .value_parser(value_parser!(PathBuf))
            .help("`key = value` parameter file; flags override it"),
    );
    CONFIG_KEYS.iter().fold(cmd, |c, k| c.arg(Arg::new(*k).long(*k).value_name("VALUE").help_heading("Pipeline parameters")))
}

fn path_arg(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name).long(name).value_name("PATH").value_parser(value_parser!(PathBuf)).help(help)
}

fn cli() -> Command {
    Command::new("l2b")
        .about("Global registration of LiDAR submaps against 2D wall models")
        .subcommand_required(true)
        .subcommand(
            Command::new("gen-floorplan")
                .about("Generate a synthetic floorplan")
                .arg(Arg::new("seed").long("seed").default_value("0").value_parser(value_parser!(u64)))
                .arg(Arg::new("rooms").long("rooms").default_value("12").value_parser(value_parser!(usize)))
                .arg(Arg::new("extent").long("extent").default_value("40").value_parser(value_parser!(f64)))
                .arg(Arg::new("floors").long("floors").default_value("1").value_parser(value_parser!(usize)))
                .arg(Arg::new("no-corridor").long("no-corridor").action(ArgAction::SetTrue))
                .arg(path_arg("out", "wall model to write").short('o').required(true)),
        )
        .subcommand(
            Command::new("gen-scene")
                .about("Sample synthetic submaps with ground-truth poses")
                .arg(path_arg("model", "wall model").required(true))
                .arg(Arg::new("floor").long("floor").help("floor id; defaults to the first floor"))
                .arg(Arg::new("count").long("count").default_value("1").value_parser(value_parser!(usize)))
                .arg(Arg::new("seed").long("seed").default_value("0").value_parser(value_parser!(u64)))
                .arg(Arg::new("radius").long("radius").default_value("12").value_parser(value_parser!(f64)))
                .arg(Arg::new("noise").long("noise").default_value("0").value_parser(value_parser!(f64)))
                .arg(Arg::new("drop").long("drop").default_value("0").value_parser(value_parser!(f64)))
                .arg(Arg::new("clutter").long("clutter").default_value("0").value_parser(value_parser!(f64)))
                .arg(path_arg("out", "output directory").short('o').required(true)),
        )
        .subcommand(with_config(
            Command::new("build-db")
                .about("Build a descriptor database for one floor of a wall model")
                .arg(path_arg("model", "wall model").required(true))
                .arg(Arg::new("floor").long("floor").help("floor id; required for multi-floor models"))
                .arg(path_arg("out", "database to write").short('o').required(true)),
        ))
        .subcommand(with_config(
            Command::new("register")
                .about("Register one submap against floor databases")
                .arg(path_arg("submap", "submap point cloud").required(true))
                .arg(path_arg("db", "floor database (repeatable)").required(true).action(ArgAction::Append))
                .arg(Arg::new("top").long("top").default_value("10").value_parser(value_parser!(usize)))
                .arg(path_arg("output", "write the report here instead of stdout")),
        ))
        .subcommand(with_config(
            Command::new("evaluate")
                .about("Register every scene in a directory and report recall and timing")
                .arg(path_arg("scenes", "directory of .l2b submaps with .pose files").required(true))
                .arg(path_arg("db", "floor database (repeatable)").required(true).action(ArgAction::Append))
                .arg(path_arg("csv", "per-scene CSV to write")),
        ))
        .subcommand(with_config(
            Command::new("pr-curve")
                .about("Precision/recall of the confidence score over registrable and unregistrable submaps")
                .arg(path_arg("pos", "registrable scenes (with .pose files)").required(true))
                .arg(path_arg("neg", "unregistrable scenes").required(true))
                .arg(path_arg("db", "floor database (repeatable)").required(true).action(ArgAction::Append))
                .arg(path_arg("csv", "curve CSV to write")),
        ))
}

fn effective_config(m: &ArgMatches) -> CliResult<PipelineConfig> {
    let mut cfg = match m.get_one::<PathBuf>("config") {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Data(Error::Io { path: p.clone(), source: e }))?;
            let mut cfg = PipelineConfig::default();
            cfg.apply_text(&text, &p.display().to_string()).map_err(Failure::Data)?;
            cfg
        }
        None => PipelineConfig::default(),
    };
    for k in CONFIG_KEYS {
        if let Some(v) = m.get_one::<String>(k) {
            cfg.set(k, v)?;
        }
    }
    cfg.validate()?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    Ok(cfg)
}

fn config_header(cfg: &PipelineConfig) -> String {
    cfg.to_text().lines().map(|l| format!("# config {l}\n")).collect()
}

fn write_out(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Failure::Data(Error::Io { path: path.to_path_buf(), source: e }))
}

fn pick_floor(floors: Vec<WallModel>, id: Option<&String>) -> CliResult<WallModel> {
    match id {
        Some(id) => {
            floors.into_iter().find(|f| &f.floor_id == id).ok_or_else(|| Failure::Usage(format!("no floor `{id}` in model")))
        }
        None if floors.len() == 1 => Ok(floors.into_iter().next().expect("one floor")),
        None => Err(Failure::Usage(format!("model has {} floors; pick one with --floor", floors.len()))),
    }
}

fn gen_floorplan(m: &ArgMatches) -> CliResult {
    let seed = *m.get_one::<u64>("seed").expect("default");
    let floors = (0..*m.get_one::<usize>("floors").expect("default"))
        .map(|i| {
            let mut f = generate_floorplan(
                seed + i as u64,
                *m.get_one("rooms").expect("default"),
                !m.get_flag("no-corridor"),
                *m.get_one("extent").expect("default"),
            )?;
            f.floor_id = i.to_string();
            Ok(f)
        })
        .collect::<l2b_core::Result<Vec<_>>>()?;
    save_building(&floors, m.get_one::<PathBuf>("out").expect("required"))?;
    let n: usize = floors.iter().map(|f| f.walls.len()).sum();
    println!("floors {}\nwalls {n}", floors.len());
    Ok(())
}

fn pose_line(pose: &Se2Pose, floor: &str) -> String {
    format!("{} {} {} {floor}\n", pose.x, pose.y, pose.yaw().to_degrees())
}

fn parse_pose(text: &str, source: &str) -> l2b_core::Result<(Se2Pose, Option<String>)> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let bad = || Error::Parse { source_name: source.to_string(), line: 1, message: "expected `x y yaw_deg [floor]`".into() };
    if !(3..=4).contains(&tokens.len()) {
        return Err(bad());
    }
    let v: Vec<f64> = tokens[..3].iter().map(|t| t.parse()).collect::<Result<_, _>>().map_err(|_| bad())?;
    Ok((Se2Pose::new(v[0], v[1], v[2].to_radians()), tokens.get(3).map(|s| s.to_string())))
}

fn gen_scene(m: &ArgMatches) -> CliResult {
    let floors = load_building(m.get_one::<PathBuf>("model").expect("required"))?;
    let model = match m.get_one::<String>("floor") {
        Some(_) => pick_floor(floors, m.get_one("floor"))?,
        None => floors.into_iter().next().expect("parsed models are non-empty"),
    };
    let out = m.get_one::<PathBuf>("out").expect("required");
    fs::create_dir_all(out).map_err(|e| Failure::Data(Error::Io { path: out.clone(), source: e }))?;
    let seed = *m.get_one::<u64>("seed").expect("default");
    let count = *m.get_one::<usize>("count").expect("default");
    for i in 0..count {
        let s = seed + i as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let pose = random_pose_in(&model, &mut rng);
        let params = SceneParams {
            radius_m: *m.get_one("radius").expect("default"),
            noise_sigma_m: *m.get_one("noise").expect("default"),
            drop_wall_frac: *m.get_one("drop").expect("default"),
            clutter_frac: *m.get_one("clutter").expect("default"),
            seed: s,
            ..SceneParams::default()
        };
        let scene = synthesize_submap(&model, pose, &params)?;
        let stem = out.join(format!("scene_{i:04}"));
        save_submap(&scene.submap, stem.with_extension("l2b"))?;
        write_out(&stem.with_extension("pose"), &pose_line(&scene.gt_pose, &model.floor_id))?;
    }
    println!("scenes {count}");
    Ok(())
}

fn build_db_cmd(m: &ArgMatches) -> CliResult {
    let cfg = effective_config(m)?;
    let floors = load_building(m.get_one::<PathBuf>("model").expect("required"))?;
    let model = pick_floor(floors, m.get_one("floor"))?;
    let (db, corners) = build_model_db(&model, &cfg)?;
    save_db(&db, m.get_one::<PathBuf>("out").expect("required"))?;
    println!("floor {}\ncorners {}\ntriplets {}\nkeys {}", db.floor_id, corners.len(), db.n_triplets, db.n_keys());
    Ok(())
}

fn load_floors(m: &ArgMatches, cfg: &PipelineConfig) -> CliResult<Vec<FloorIndex>> {
    m.get_many::<PathBuf>("db").expect("required").map(|p| Ok(FloorIndex::new(load_db(p)?, cfg)?)).collect()
}

fn register_report(reg: &Registration, top: usize) -> String {
    let mut out = String::new();
    for f in &reg.floors {
        out += &format!(
            "# floor {} correspondences {} votes {} candidates {}\n",
            f.floor_id,
            f.n_correspondences,
            f.n_votes,
            f.reports.len()
        );
    }
    out += &format!("# best floor {}\n", reg.floor_id);
    let best = reg.floors.iter().find(|f| f.floor_id == reg.floor_id).expect("best floor is listed");
    for (i, r) in best.reports.iter().take(top.max(1)).enumerate() {
        out += &r.to_line(i);
        out.push('\n');
    }
    let t = reg.timings;
    out += &format!(
        "# timing plane_ms {:.2} line_ms {:.2} descriptor_ms {:.2} vote_ms {:.2} verify_ms {:.2} total_ms {:.2}\n",
        t.plane_ms, t.line_ms, t.descriptor_ms, t.vote_ms, t.verify_ms, t.total_ms
    );
    out
}

fn register_cmd(m: &ArgMatches) -> CliResult {
    let cfg = effective_config(m)?;
    let submap_path = m.get_one::<PathBuf>("submap").expect("required");
    let submap = load_submap(submap_path)?;
    let floors = load_floors(m, &cfg)?;
    let features = extract_features(&submap, &cfg)?;
    let reg = register_features(&features, &floors, &cfg)?;
    let mut text = format!("# l2b register\n# submap {}\n", submap_path.display());
    text += &config_header(&cfg);
    text += &register_report(&reg, *m.get_one::<usize>("top").expect("default"));
    match m.get_one::<PathBuf>("output") {
        Some(p) => write_out(p, &text)?,
        None => print!("{text}"),
    }
    if reg.best.confidence < cfg.confidence_threshold {
        return Err(Failure::BelowThreshold(reg.best.confidence));
    }
    Ok(())
}

struct SceneFile {
    name: String,
    submap: PathBuf,
    gt: Option<(Se2Pose, Option<String>)>,
}

fn list_scenes(dir: &Path, need_pose: bool) -> CliResult<Vec<SceneFile>> {
    let entries = fs::read_dir(dir).map_err(|e| Failure::Data(Error::Io { path: dir.to_path_buf(), source: e }))?;
    let mut paths: Vec<PathBuf> =
        entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "l2b")).collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::Data(Error::EmptyScene));
    }
    paths
        .into_iter()
        .map(|p| {
            let pose_path = p.with_extension("pose");
            let gt = match fs::read_to_string(&pose_path) {
                Ok(t) => Some(parse_pose(&t, &pose_path.display().to_string())?),
                Err(_) if !need_pose => None,
                Err(e) => return Err(Failure::Data(Error::Io { path: pose_path, source: e })),
            };
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(SceneFile { name, submap: p, gt })
        })
        .collect()
}

fn run_scene(s: &SceneFile, floors: &[FloorIndex], cfg: &PipelineConfig) -> l2b_core::Result<EvalRow> {
    let submap: Submap = load_submap(&s.submap)?;
    let t = std::time::Instant::now();
    let result = extract_features(&submap, cfg).and_then(|f| register_features(&f, floors, cfg));
    let ms = t.elapsed().as_secs_f64() * 1e3;
    let (gt, floor) = match &s.gt {
        Some((p, f)) => (*p, f.as_deref()),
        None => (Se2Pose::IDENTITY, None),
    };
    let mut row = eval_row(&s.name, result, &gt, floor, ms)?;
    if s.gt.is_none() {
        row.success = false;
    }
    Ok(row)
}

fn run_all(scenes: &[SceneFile], floors: &[FloorIndex], cfg: &PipelineConfig) -> CliResult<Vec<EvalRow>> {
    Ok(scenes.par_iter().map(|s| run_scene(s, floors, cfg)).collect::<l2b_core::Result<Vec<_>>>()?)
}

fn evaluate_cmd(m: &ArgMatches) -> CliResult {
    let cfg = effective_config(m)?;
    let floors = load_floors(m, &cfg)?;
    let scenes = list_scenes(m.get_one::<PathBuf>("scenes").expect("required"), true)?;
    let summary = summarize(run_all(&scenes, &floors, &cfg)?);
    if let Some(p) = m.get_one::<PathBuf>("csv") {
        write_out(p, &rows_csv(&summary.rows))?;
    }
    print!("# l2b evaluate\n{}", config_header(&cfg));
    println!(
        "scenes {}\nrecall {:.4}\nmean_ms {:.2}\np50_ms {:.2}\np90_ms {:.2}",
        summary.rows.len(),
        summary.recall,
        summary.mean_ms,
        summary.p50_ms,
        summary.p90_ms
    );
    Ok(())
}

fn pr_curve_cmd(m: &ArgMatches) -> CliResult {
    let cfg = effective_config(m)?;
    let floors = load_floors(m, &cfg)?;
    let pos_scenes = list_scenes(m.get_one::<PathBuf>("pos").expect("required"), true)?;
    let neg_scenes = list_scenes(m.get_one::<PathBuf>("neg").expect("required"), false)?;
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for r in run_all(&pos_scenes, &floors, &cfg)? {
        if r.success {
            pos.push(r.confidence)
        } else {
            neg.push(r.confidence)
        }
    }
    neg.extend(run_all(&neg_scenes, &floors, &cfg)?.into_iter().map(|r| r.confidence));
    let curve = reliability_curve(&pos, &neg)?;
    let mut csv = String::from("threshold,precision,recall\n");
    for (t, p, r) in &curve.points {
        csv += &format!("{t:.6},{p:.6},{r:.6}\n");
    }
    if let Some(p) = m.get_one::<PathBuf>("csv") {
        write_out(p, &csv)?;
    }
    print!("# l2b pr-curve\n{}", config_header(&cfg));
    println!("positives {}\nnegatives {}\nauc {:.6}", pos.len(), neg.len(), curve.auc);
    Ok(())
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match matches.subcommand() {
        Some(("gen-floorplan", m)) => gen_floorplan(m),
        Some(("gen-scene", m)) => gen_scene(m),
        Some(("build-db", m)) => build_db_cmd(m),
        Some(("register", m)) => register_cmd(m),
        Some(("evaluate", m)) => evaluate_cmd(m),
        Some(("pr-curve", m)) => pr_curve_cmd(m),
        _ => unreachable!("subcommand is required"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::BelowThreshold(c)) => {
            eprintln!("confidence {c:.6} is below the threshold");
            ExitCode::from(3)
        }
    }
}
