//! The `taste` command line. Every subcommand prints a tab-separated table on
//! stdout and diagnostics on stderr. Exit codes: 0 success, 1 data error,
//! 2 usage error.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate};
use clap::{Args, Parser, Subcommand};

use crate::builder::{
    build_taste_graph, interested_users, read_catalog, read_playback_log, read_playlists,
    track_ratings, Catalog, PlaybackEvent, PlaylistStore,
};
use crate::coldstart::{
    boost_new_items, build_demography_profiles, cold_recommend, read_demography, DemographySegment,
    ProfileSet,
};
use crate::context::{contextual_filter, generate_context_sets, SimilarityCache};
use crate::graph::{EdgeType, StateVector, TransitionOperator, VertexId, VertexType};
use crate::sequencer::Sequencer;
use crate::store::{
    compute_indicators, load_snapshot, mainpage, read_tagged_events, save_snapshot, top_pool,
    Config, Snapshot,
};
use crate::walk::{extend_list, personalize, recommend, WalkError};

/// Environment variable supplying the seed of randomized commands.
pub const SEED_ENV: &str = "TASTE_SEED";

#[derive(Debug, Parser)]
#[command(name = "taste", version, about = "Graph-based music recommendations")]
struct Cli {
    /// Config file; defaults to $TASTE_CONFIG, then built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a snapshot from playback logs and catalog files.
    Build(BuildArgs),
    /// Top tracks for a user by random walk with restart.
    Recommend(RecommendArgs),
    /// Rank a given set of tracks for a user.
    Personalize(PersonalizeArgs),
    /// Extend a list of tracks with similar ones.
    Extend(ExtendArgs),
    /// Generate a radio sequence from a user's preferences.
    Radio(RadioArgs),
    /// Cluster a user's preferences into context sets.
    Contexts(ContextsArgs),
    /// Keep candidates linked to a context.
    Filter(FilterArgs),
    /// Print demography profiles.
    ColdstartProfiles(ProfilesArgs),
    /// Boost new tracks in a snapshot and write the result.
    Boost(BoostArgs),
    /// Main-page activity indicators from a tagged event log.
    Metrics(MetricsArgs),
    /// Personalized main page: the best of the global top pool.
    Mainpage(MainpageArgs),
}

#[derive(Debug, Args)]
struct SnapshotArg {
    /// Snapshot file.
    #[arg(long, default_value = "taste.snapshot")]
    snapshot: PathBuf,
}

#[derive(Debug, Args)]
struct CatalogArgs {
    /// `track \t artist \t added_date` lines.
    #[arg(long)]
    tracks: PathBuf,
    /// `track \t date \t rating` lines.
    #[arg(long)]
    ratings: PathBuf,
    /// `user \t track \t unix_timestamp` lines.
    #[arg(long)]
    log: Option<PathBuf>,
    /// `user \t track` lines.
    #[arg(long)]
    playlists: Option<PathBuf>,
    /// Reference date; defaults to the day of the latest playback, else of
    /// the latest catalog addition.
    #[arg(long)]
    today: Option<NaiveDate>,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[command(flatten)]
    inputs: CatalogArgs,
    #[arg(long, default_value = "taste.snapshot")]
    out: PathBuf,
    /// Defaults to one more than the id of the snapshot at `--out`, else 1.
    #[arg(long)]
    snapshot_id: Option<u64>,
}

#[derive(Debug, Args)]
struct DemographyArgs {
    /// `user \t age \t sex \t region` lines.
    #[arg(long, requires = "profile_log")]
    demography: Option<PathBuf>,
    /// Playback log the demography profiles are built from.
    #[arg(long = "profile-log", id = "profile_log", requires = "demography")]
    profile_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RecommendArgs {
    #[command(flatten)]
    snapshot: SnapshotArg,
    #[arg(long)]
    user: String,
    #[arg(long)]
    top: Option<usize>,
    /// Accepted for interface uniformity; recommendations are deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Cold users fall back to their demography profile.
    #[command(flatten)]
    demography: DemographyArgs,
}

#[derive(Debug, Args)]
struct PersonalizeArgs {
    #[command(flatten)]
    snapshot: SnapshotArg,
    #[arg(long)]
    user: String,
    /// Comma-separated tracks, weighted equally.
    #[arg(long, value_delimiter = ',', conflicts_with = "items_file")]
    items: Vec<String>,
    /// `track \t weight` lines.
    #[arg(long)]
    items_file: Option<PathBuf>,
    #[arg(long)]
    top: Option<usize>,
}

#[derive(Debug, Args)]
struct ExtendArgs {
    #[command(flatten)]
    snapshot: SnapshotArg,
    #[arg(long)]
    user: Option<String>,
    /// Comma-separated tracks of the list to extend.
    #[arg(long, value_delimiter = ',', required = true)]
    items: Vec<String>,
    #[arg(long)]
    top: Option<usize>,
}

#[derive(Debug, Args)]
struct RadioArgs {
    #[command(flatten)]
    snapshot: SnapshotArg,
    #[arg(long)]
    user: String,
    #[arg(long)]
    length: Option<usize>,
    /// Falls back to $TASTE_SEED.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ContextsArgs {
    #[command(flatten)]
    snapshot: SnapshotArg,
    #[arg(long)]
    user: String,
    /// Thin preferences are enriched from the user's demography profile.
    #[command(flatten)]
    demography: DemographyArgs,
}

#[derive(Debug, Args)]
struct FilterArgs {
    #[command(flatten)]
    snapshot: SnapshotArg,
    /// Comma-separated context tracks.
    #[arg(long, value_delimiter = ',', required = true)]
    context: Vec<String>,
    /// Comma-separated candidate tracks; defaults to every track.
    #[arg(long, value_delimiter = ',')]
    candidates: Vec<String>,
}

#[derive(Debug, Args)]
struct ProfilesArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    demography: PathBuf,
    /// Tracks printed per profile.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Debug, Args)]
struct BoostArgs {
    #[command(flatten)]
    snapshot: SnapshotArg,
    #[command(flatten)]
    inputs: CatalogArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// `user \t track \t source \t kind` lines.
    #[arg(long)]
    log: PathBuf,
}

#[derive(Debug, Args)]
struct MainpageArgs {
    #[command(flatten)]
    snapshot: SnapshotArg,
    #[arg(long)]
    user: String,
    #[arg(long)]
    pool: Option<usize>,
    #[arg(long)]
    top: Option<usize>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

/// Runs one invocation and returns its exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{rendered}");
            return if code == 0 { 0 } else { 2 };
        }
    };
    let result = Config::resolve(cli.config.as_deref())
        .map_err(|e| CliError::Usage(e.to_string()))
        .and_then(|cfg| dispatch(cli.command, &cfg, out, err));
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(err, "usage error: {m}");
            2
        }
        Err(CliError::Data(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
    }
}

fn dispatch(cmd: Command, cfg: &Config, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match cmd {
        Command::Build(a) => cmd_build(a, cfg, out, err),
        Command::Recommend(a) => cmd_recommend(a, cfg, out),
        Command::Personalize(a) => cmd_personalize(a, cfg, out),
        Command::Extend(a) => cmd_extend(a, cfg, out),
        Command::Radio(a) => cmd_radio(a, cfg, out, err),
        Command::Contexts(a) => cmd_contexts(a, cfg, out),
        Command::Filter(a) => cmd_filter(a, cfg, out),
        Command::ColdstartProfiles(a) => cmd_profiles(a, cfg, out),
        Command::Boost(a) => cmd_boost(a, cfg, out, err),
        Command::Metrics(a) => cmd_metrics(a, out),
        Command::Mainpage(a) => cmd_mainpage(a, cfg, out),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn print_scores(out: &mut dyn Write, rows: &[(VertexId, f64)]) -> CliResult {
    for (v, s) in rows {
        writeln!(out, "{}\t{s:.12}", v.key())?;
    }
    Ok(())
}

fn tracks(keys: &[String]) -> Vec<VertexId> {
    keys.iter()
        .map(|k| k.trim())
        .filter(|k| !k.is_empty())
        .map(VertexId::track)
        .collect()
}

struct Inputs {
    log: Vec<PlaybackEvent>,
    catalog: Catalog,
    playlists: PlaylistStore,
    today: NaiveDate,
}

fn read_inputs(a: &CatalogArgs) -> Result<Inputs, CliError> {
    let catalog = read_catalog(open(&a.tracks)?, open(&a.ratings)?)?;
    let log = match &a.log {
        Some(p) => read_playback_log(open(p)?)?,
        None => Vec::new(),
    };
    let playlists = match &a.playlists {
        Some(p) => read_playlists(open(p)?)?,
        None => PlaylistStore::new(),
    };
    let today = match a.today {
        Some(d) => d,
        None => log
            .iter()
            .map(|e| e.timestamp)
            .max()
            .and_then(|t| DateTime::from_timestamp(t, 0))
            .map(|t| t.date_naive())
            .or_else(|| catalog.iter().map(|(_, i)| i.added).max())
            .ok_or_else(|| CliError::Usage("--today is required for empty inputs".into()))?,
    };
    Ok(Inputs {
        log,
        catalog,
        playlists,
        today,
    })
}

fn midnight(day: NaiveDate) -> i64 {
    day.and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc()
        .timestamp()
}

fn cmd_build(a: BuildArgs, cfg: &Config, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let inputs = read_inputs(&a.inputs)?;
    let graph = build_taste_graph(
        &inputs.log,
        &inputs.catalog,
        &inputs.playlists,
        inputs.today,
        &cfg.builder,
    )?;
    let snapshot_id = match a.snapshot_id {
        Some(id) => id,
        None if a.out.exists() => match load_snapshot(&a.out) {
            Ok(prev) => prev.snapshot_id + 1,
            Err(e) => {
                writeln!(err, "warning: ignoring previous snapshot: {e}")?;
                1
            }
        },
        None => 1,
    };
    let snapshot = Snapshot {
        graph,
        balancing: cfg.balancing_config()?,
        build_timestamp: midnight(inputs.today),
        snapshot_id,
        ratings: track_ratings(&inputs.catalog, inputs.today),
    };
    save_snapshot(&snapshot, &a.out)?;
    writeln!(
        out,
        "snapshot\t{}\nvertices\t{}\nedges\t{}",
        snapshot.snapshot_id,
        snapshot.graph.vertex_count(),
        snapshot.graph.edge_count()
    )?;
    Ok(())
}

fn load(arg: &SnapshotArg) -> Result<Snapshot, CliError> {
    Ok(load_snapshot(&arg.snapshot)?)
}

/// The user's own preference distribution, θ removed.
fn user_prefs(op: &TransitionOperator, user: &VertexId) -> Result<StateVector, CliError> {
    if !op.graph().contains(user) {
        return Ok(StateVector::new());
    }
    let next = op.next_vector(user)?;
    Ok(next
        .iter()
        .filter(|(v, _)| !v.is_zero())
        .map(|(v, w)| (v.clone(), w))
        .collect())
}

fn profiles(
    d: &DemographyArgs,
    cfg: &Config,
) -> Result<Option<(ProfileSet, BTreeMap<VertexId, DemographySegment>)>, CliError> {
    let (Some(demo), Some(log)) = (&d.demography, &d.profile_log) else {
        return Ok(None);
    };
    let users = read_demography(open(demo)?)?;
    let log = read_playback_log(open(log)?)?;
    let set = build_demography_profiles(&log, &users, cfg.coldstart.min_support);
    Ok(Some((set, users)))
}

fn segment_of(users: &BTreeMap<VertexId, DemographySegment>, user: &VertexId) -> DemographySegment {
    users
        .get(user)
        .cloned()
        .unwrap_or_else(DemographySegment::global)
}

fn cmd_recommend(a: RecommendArgs, cfg: &Config, out: &mut dyn Write) -> CliResult {
    let snap = load(&a.snapshot)?;
    let op = TransitionOperator::new(&snap.graph, &snap.balancing)?;
    let user = VertexId::user(&a.user);
    let mut params = cfg.walk;
    if let Some(top) = a.top {
        params.top_n = top;
    }
    let known: BTreeSet<VertexId> = user_prefs(&op, &user)?.support().cloned().collect();
    match recommend(&op, &user, &params, &known) {
        Ok(rows) => print_scores(out, &rows),
        Err(WalkError::ColdUser(_)) => {
            let Some((set, users)) = profiles(&a.demography, cfg)? else {
                return Err(CliError::Data(format!(
                    "user {} has no history; pass --demography and --profile-log for a cold start",
                    a.user
                )));
            };
            let profile = set
                .resolve(&segment_of(&users, &user))
                .ok_or_else(|| CliError::Data("no demography profile available".into()))?;
            let own = user_prefs(&op, &user)?;
            let rows = cold_recommend(&own, profile, cfg.coldstart.full_strength, params.top_n);
            print_scores(out, &rows)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_personalize(a: PersonalizeArgs, cfg: &Config, out: &mut dyn Write) -> CliResult {
    let snap = load(&a.snapshot)?;
    let op = TransitionOperator::new(&snap.graph, &snap.balancing)?;
    let target = match &a.items_file {
        Some(p) => {
            let mut t = StateVector::new();
            for (line, f) in crate::builder::records(open(p)?, 2)? {
                let w: f64 = crate::builder::parse_field(line, &f[1], "weight")?;
                t.add(VertexId::track(&f[0]), w);
            }
            t
        }
        None => StateVector::uniform(&tracks(&a.items)),
    };
    if target.is_empty() {
        return Err(CliError::Usage("pass --items or --items-file".into()));
    }
    let user = VertexId::user(&a.user);
    let source = if snap.graph.has_out_edges(&user) {
        StateVector::unit(user)
    } else {
        StateVector::new()
    };
    let mut rows = personalize(&op, &source, &target, &cfg.personalization_weights()?)?;
    if let Some(top) = a.top {
        rows.truncate(top);
    }
    print_scores(out, &rows)
}

fn cmd_extend(a: ExtendArgs, cfg: &Config, out: &mut dyn Write) -> CliResult {
    let snap = load(&a.snapshot)?;
    let op = TransitionOperator::new(&snap.graph, &snap.balancing)?;
    let prefs = match &a.user {
        Some(u) => user_prefs(&op, &VertexId::user(u))?,
        None => StateVector::new(),
    };
    let mut params = cfg.walk;
    if let Some(top) = a.top {
        params.top_n = top;
    }
    let rows = extend_list(
        &op,
        &tracks(&a.items),
        &prefs,
        &params,
        &cfg.personalization_weights()?,
        cfg.personalize.min_seed,
    )?;
    print_scores(out, &rows)
}

fn seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))
        }),
        Err(_) => Err(CliError::Usage(format!(
            "randomized command needs --seed or {SEED_ENV}"
        ))),
    }
}

fn cmd_radio(a: RadioArgs, cfg: &Config, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let seed = seed(a.seed)?;
    let snap = load(&a.snapshot)?;
    let op = TransitionOperator::new(&snap.graph, &snap.balancing)?;
    let prefs = user_prefs(&op, &VertexId::user(&a.user))?.restrict_type(VertexType::Track);
    if prefs.is_empty() {
        return Err(CliError::Data(format!(
            "user {} has no track preferences",
            a.user
        )));
    }
    let sequencer = Sequencer::new(&op, &prefs, cfg.rejection_config()?)?;
    let radio = sequencer.generate(a.length.unwrap_or(cfg.radio.length), seed)?;
    for (i, v) in radio.items.iter().enumerate() {
        writeln!(
            out,
            "{}\t{}\t{}",
            i + 1,
            v.key(),
            sequencer.artist_of(v).key()
        )?;
    }
    if !radio.complete {
        writeln!(
            err,
            "warning: draw budget exhausted after {} items",
            radio.items.len()
        )?;
    }
    Ok(())
}

fn cmd_contexts(a: ContextsArgs, cfg: &Config, out: &mut dyn Write) -> CliResult {
    let snap = load(&a.snapshot)?;
    let op = TransitionOperator::new(&snap.graph, &snap.balancing)?;
    let user = VertexId::user(&a.user);
    let prefs = user_prefs(&op, &user)?;
    let profile = profiles(&a.demography, cfg)?.and_then(|(set, users)| {
        set.resolve(&segment_of(&users, &user))
            .map(|p| p.prefs.clone())
    });
    if prefs.is_empty() && profile.is_none() {
        return Err(CliError::Data(format!(
            "user {} has no preferences",
            a.user
        )));
    }
    let cache = SimilarityCache::new();
    let sets = generate_context_sets(
        &op,
        snap.snapshot_id,
        &cache,
        &prefs,
        profile.as_ref(),
        &cfg.cluster_config(),
    )?;
    for set in sets {
        let members: Vec<&str> = set.members.iter().map(|v| v.key()).collect();
        writeln!(out, "{}\t{}", set.label, members.join(","))?;
    }
    Ok(())
}

fn cmd_filter(a: FilterArgs, cfg: &Config, out: &mut dyn Write) -> CliResult {
    let snap = load(&a.snapshot)?;
    let op = TransitionOperator::new(&snap.graph, &snap.balancing)?;
    let context: BTreeSet<VertexId> = tracks(&a.context).into_iter().collect();
    let candidates: BTreeSet<VertexId> = if a.candidates.is_empty() {
        snap.graph
            .vertices()
            .filter(|v| v.vtype() == VertexType::Track)
            .cloned()
            .collect()
    } else {
        tracks(&a.candidates).into_iter().collect()
    };
    for v in contextual_filter(&op, &context, &candidates, &cfg.filter)? {
        writeln!(out, "{}", v.key())?;
    }
    Ok(())
}

fn cmd_profiles(a: ProfilesArgs, cfg: &Config, out: &mut dyn Write) -> CliResult {
    let users = read_demography(open(&a.demography)?)?;
    let log = read_playback_log(open(&a.log)?)?;
    let set = build_demography_profiles(&log, &users, cfg.coldstart.min_support);
    for profile in set.iter() {
        for (v, w) in profile.top(a.top) {
            writeln!(out, "{}\t{}\t{w:.12}", profile.segment, v.key())?;
        }
    }
    Ok(())
}

fn cmd_boost(a: BoostArgs, cfg: &Config, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let snap = load(&a.snapshot)?;
    let inputs = read_inputs(&a.inputs)?;
    let interested = interested_users(&inputs.log, &inputs.playlists);
    let result = boost_new_items(
        &snap.graph,
        &inputs.catalog,
        &snap.ratings,
        &cfg.novelty,
        inputs.today,
        &interested,
    )?;
    for artist in &result.overflowed {
        writeln!(
            err,
            "warning: boosted share capped for artist {}",
            artist.key()
        )?;
    }
    let boosted = Snapshot {
        graph: result.graph,
        balancing: snap.balancing,
        build_timestamp: snap.build_timestamp,
        snapshot_id: snap.snapshot_id + 1,
        ratings: result.ratings,
    };
    save_snapshot(&boosted, &a.out)?;
    for t in &result.boosted {
        let artist = inputs.catalog.artist_of(t).map_or("", |a| a.key());
        let weight = boosted
            .graph
            .edge_weight(&VertexId::artist(artist), EdgeType::ArtistTrack, t)
            .unwrap_or(0.0);
        writeln!(out, "{}\t{artist}\t{weight:.12}", t.key())?;
    }
    Ok(())
}

fn cmd_metrics(a: MetricsArgs, out: &mut dyn Write) -> CliResult {
    let events = read_tagged_events(open(&a.log)?)?;
    writeln!(out, "{}", compute_indicators(&events))?;
    Ok(())
}

fn cmd_mainpage(a: MainpageArgs, cfg: &Config, out: &mut dyn Write) -> CliResult {
    let snap = load(&a.snapshot)?;
    let op = TransitionOperator::new(&snap.graph, &snap.balancing)?;
    let pool = top_pool(&snap.ratings, a.pool.unwrap_or(cfg.mainpage.pool));
    let rows = mainpage(
        &op,
        &VertexId::user(&a.user),
        &pool,
        &cfg.personalization_weights()?,
        a.top.unwrap_or(cfg.mainpage.top),
    )?;
    print_scores(out, &rows)
}
