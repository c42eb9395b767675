mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mecdyn::averaging::besicovitch_profile;
use mecdyn::density::{default_translates, ub_dens_estimate, ua_dens_estimate};
use mecdyn::exact::{self, Exact};
use mecdyn::folner::{lamp_defect_bound, Budget, FolnerFamily, DEFAULT_MAX_ELEMENTS};
use mecdyn::gallery::{self, Check, GalleryEntry, Profile, RelationKind};
use mecdyn::group::{GroupDescriptor, GroupElement};
use mecdyn::measures::{invariance_defect, AtomicMeasure};
use mecdyn::relations::{icer_hull, ClosureProbe, FiniteModel};
use mecdyn::space::{Neighborhood, Point, Space, SpaceDescriptor};

use output::{Format, Output};

#[derive(Parser, Debug)]
#[command(name = "mecdyn", version, about = "Mean equicontinuity and mean sensitivity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Largest number of group elements a single enumeration may produce.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_ELEMENTS)]
    max_elements: u128,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Følner set statistics.
    Folner(FolnerArgs),
    /// Cesàro averages of the distance along an orbit pair.
    Avg(AvgArgs),
    /// Hitting densities of a pair in a neighbourhood.
    Density(DensityArgs),
    /// Empirical measures along a Følner sequence.
    Measure(MeasureArgs),
    /// Relation membership certificate for a pair.
    Detect(DetectArgs),
    /// Smallest closed invariant equivalence relation containing a relation.
    Icer(IcerArgs),
    /// Verify a gallery entry row by row.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug)]
struct SpaceArgs {
    /// Gallery entry providing the space and default family.
    #[arg(long, conflicts_with = "space")]
    gallery: Option<String>,
    /// Space descriptor as JSON, or `@path` to read it from a file.
    #[arg(long)]
    space: Option<String>,
    /// Følner family name or JSON descriptor. Defaults to the entry's first family.
    #[arg(long)]
    family: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Stat {
    Cardinality,
    Defect,
    SymmetricDefect,
    Bound,
    Elements,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GroupArg {
    Integers,
    Lamplighter,
}

impl From<GroupArg> for GroupDescriptor {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Integers => GroupDescriptor::Integers,
            GroupArg::Lamplighter => GroupDescriptor::Lamplighter,
        }
    }
}

#[derive(Args, Debug)]
struct FolnerArgs {
    #[arg(long)]
    family: String,
    /// A single index.
    #[arg(long, conflicts_with = "window")]
    n: Option<u64>,
    /// A range of indices `lo:hi`.
    #[arg(long, value_parser = parse_window)]
    window: Option<(u64, u64)>,
    #[arg(long, value_enum, default_value_t = Stat::Cardinality)]
    stat: Stat,
    /// Group for families that work over either group.
    #[arg(long, value_enum)]
    group: Option<GroupArg>,
    /// Elements separated by `;`, e.g. `s^1 t{};s^0 t{0}`. Defaults to the standard generators.
    #[arg(long)]
    generators: Option<String>,
}

#[derive(Args, Debug)]
struct AvgArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// The pair `x,x'`.
    #[arg(long, allow_hyphen_values = true)]
    pair: String,
    #[arg(long, value_parser = parse_window, default_value = "1:200")]
    window: (u64, u64),
    /// Keep exact rational averages.
    #[arg(long)]
    exact: bool,
}

#[derive(Args, Debug)]
struct DensityArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long, allow_hyphen_values = true)]
    pair: String,
    /// Neighbourhood as JSON, or `@path`.
    #[arg(long, conflicts_with = "radius")]
    neighbourhood: Option<String>,
    /// Radius of a ball around `--center`.
    #[arg(long)]
    radius: Option<String>,
    /// Ball centre. Defaults to the pair.
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
    #[arg(long, value_parser = parse_window, default_value = "1:200")]
    window: (u64, u64),
    /// Use the upper Banach estimate with this shape index instead.
    #[arg(long)]
    banach_n: Option<u64>,
    /// Translate range `lo:hi` for the Banach estimate.
    #[arg(long, value_parser = parse_range)]
    translates: Option<(i64, i64)>,
}

#[derive(Args, Debug)]
struct MeasureArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// A point or a pair.
    #[arg(long, allow_hyphen_values = true)]
    start: String,
    #[arg(long)]
    n: u64,
    /// Also report the measure with coordinates moved to their nearest limit points.
    #[arg(long)]
    snap: bool,
    /// Report the invariance defect against these `;`-separated elements.
    #[arg(long)]
    invariance: Option<String>,
}

#[derive(Args, Debug)]
struct DetectArgs {
    /// One of qrms-f, srjms-f, swsm-f, qrms-banach.
    kind: String,
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long, allow_hyphen_values = true)]
    pair: String,
    #[arg(long, default_value = "quick")]
    profile: String,
    /// Comma-separated ball radii, e.g. `1/2,1/4`.
    #[arg(long)]
    radii: Option<String>,
    /// Comma-separated witness indices.
    #[arg(long)]
    ks: Option<String>,
    #[arg(long, value_parser = parse_window)]
    window: Option<(u64, u64)>,
    /// Seed of the fallback grid search.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct IcerArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// Pairs separated by `;`. Defaults to the entry's registered relation.
    #[arg(long, allow_hyphen_values = true)]
    relation: Option<String>,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    name: String,
    #[arg(long, default_value = "quick")]
    profile: String,
}

/// Failure classes, each with its own exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Budget(String),
}

impl From<mecdyn::Error> for Failure {
    fn from(e: mecdyn::Error) -> Self {
        if e.is_budget() {
            Failure::Budget(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_window(s: &str) -> Result<(u64, u64), String> {
    let (lo, hi) = parse_range(s)?;
    if lo < 1 || lo > hi {
        return Err(format!("window `{s}` must satisfy 1 ≤ lo ≤ hi"));
    }
    Ok((lo as u64, hi as u64))
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected `lo:hi`, got `{s}`"))?;
    let a = a.trim().parse().map_err(|_| format!("bad bound in `{s}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad bound in `{s}`"))?;
    Ok((a, b))
}

fn read_json_arg(text: &str) -> Run<String> {
    match text.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| usage(format!("{path}: {e}"))),
        None => Ok(text.to_string()),
    }
}

fn parse_elements(text: &str) -> Run<Vec<GroupElement>> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<GroupElement>().map_err(Failure::from))
        .collect()
}

fn standard_generators(group: GroupDescriptor) -> Vec<GroupElement> {
    match group {
        GroupDescriptor::Integers => vec![GroupElement::IntShift(1)],
        GroupDescriptor::Lamplighter => vec![GroupElement::sigma(1), GroupElement::tau(0)],
    }
}

/// The resolved space, its origin and a family.
struct Resolved {
    space: Space,
    entry: Option<GalleryEntry>,
    family: FolnerFamily,
    echo: Value,
}

fn resolve(args: &SpaceArgs) -> Run<Resolved> {
    let (space, entry, echo) = match (&args.gallery, &args.space) {
        (Some(name), _) => {
            let entry = gallery::build(name)?;
            (entry.space.clone(), Some(entry), json!({ "gallery": name }))
        }
        (None, Some(text)) => {
            let desc: SpaceDescriptor = serde_json::from_str(&read_json_arg(text)?)
                .map_err(|e| usage(format!("space descriptor: {e}")))?;
            let echo = json!({ "space": desc });
            (Space::new(desc)?, None, echo)
        }
        (None, None) => return Err(usage("pass --gallery NAME or --space JSON")),
    };
    let family = match (&args.family, &entry) {
        (Some(f), _) => f.parse::<FolnerFamily>()?,
        (None, Some(e)) => e.families[0].clone(),
        (None, None) => return Err(usage("--family is required with --space")),
    };
    if let Some(g) = family.required_group() {
        if g != space.group() {
            return Err(usage(format!("family {family} needs the {g} group, the space carries {}", space.group())));
        }
    }
    Ok(Resolved {
        space,
        entry,
        family,
        echo,
    })
}

fn config(command: &str, cli: &Cli, resolved: Option<&Resolved>, extra: Value) -> Value {
    let mut c = json!({
        "command": command,
        "format": cli.format,
        "output": cli.output,
        "max_elements": cli.max_elements.to_string(),
    });
    let map = c.as_object_mut().expect("object");
    if let Some(r) = resolved {
        for (k, v) in r.echo.as_object().expect("object") {
            map.insert(k.clone(), v.clone());
        }
        map.insert("family".into(), json!(r.family.to_string()));
    }
    if let Value::Object(extra) = extra {
        map.extend(extra);
    }
    c
}

fn exact_value(q: &num_rational::BigRational) -> Value {
    json!(Exact::from(q))
}

fn run_folner(cli: &Cli, a: &FolnerArgs, budget: &Budget) -> Run<Output> {
    let family: FolnerFamily = a.family.parse()?;
    let group = match (family.required_group(), a.group) {
        (Some(g), Some(h)) if g != GroupDescriptor::from(h) => {
            return Err(usage(format!("family {family} lives on the {g} group")));
        }
        (Some(g), _) => g,
        (None, Some(h)) => h.into(),
        (None, None) => GroupDescriptor::Integers,
    };
    let range = match (a.n, a.window) {
        (Some(n), _) => (n, n),
        (None, Some(w)) => w,
        (None, None) => return Err(usage("pass --n or --window")),
    };
    let generators = match &a.generators {
        Some(text) => parse_elements(text)?,
        None => standard_generators(group),
    };
    let mut rows = Vec::new();
    for n in range.0..=range.1 {
        let value = match a.stat {
            Stat::Cardinality => {
                let c = family.cardinality(n)?;
                json!({ "exact": c.to_string(), "float": c as f64 })
            }
            Stat::Defect => exact_value(&family.defect(group, n, &generators, budget)?),
            Stat::SymmetricDefect => exact_value(&family.symmetric_defect(group, n, &generators, budget)?),
            Stat::Bound => {
                let mut worst = exact::int(0);
                for g in &generators {
                    worst = worst.max(lamp_defect_bound(g, n)?);
                }
                exact_value(&worst)
            }
            Stat::Elements => {
                let elements = family.enumerate(group, n, budget)?;
                json!(elements.iter().map(|g| g.to_string()).collect::<Vec<_>>())
            }
        };
        rows.push(json!({ "n": n, "value": value }));
    }
    let echo = config(
        "folner",
        cli,
        None,
        json!({
            "family": family.to_string(),
            "group": group,
            "stat": format!("{:?}", a.stat).to_lowercase(),
            "indices": [range.0, range.1],
            "generators": generators.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
        }),
    );
    Ok(Output::rows(echo, rows))
}

fn run_avg(cli: &Cli, a: &AvgArgs, budget: &Budget) -> Run<Output> {
    let r = resolve(&a.space)?;
    let pair: Point = a.pair.parse()?;
    let Point::Pair(x, y) = pair else {
        return Err(usage("--pair needs two points `x,x'`"));
    };
    let profile = besicovitch_profile(&r.space, x, y, &r.family, a.window, a.exact, budget)?;
    let csv = profile.to_csv()?;
    let echo = config(
        "avg",
        cli,
        Some(&r),
        json!({ "pair": pair, "window": [a.window.0, a.window.1], "exact": a.exact }),
    );
    Ok(Output::profile(echo, json!(profile), csv))
}

fn run_density(cli: &Cli, a: &DensityArgs, budget: &Budget) -> Run<Output> {
    let r = resolve(&a.space)?;
    let pair: Point = a.pair.parse()?;
    let u: Neighborhood = match (&a.neighbourhood, &a.radius) {
        (Some(text), _) => {
            serde_json::from_str(&read_json_arg(text)?).map_err(|e| usage(format!("neighbourhood: {e}")))?
        }
        (None, Some(radius)) => {
            let center: Point = match &a.center {
                Some(c) => c.parse()?,
                None => pair,
            };
            Neighborhood::ball(center, exact::parse_rational(radius)?)
        }
        (None, None) => return Err(usage("pass --neighbourhood or --radius")),
    };
    let mut extra = json!({ "pair": pair, "neighbourhood": u });
    let result = match a.banach_n {
        Some(n) => {
            let translates = a.translates.unwrap_or_else(|| default_translates(n));
            extra["banach_n"] = json!(n);
            extra["translates"] = json!([translates.0, translates.1]);
            let est = ub_dens_estimate(&r.space, &pair, &u, &r.family, n, translates, budget)?;
            let row = json!({ "n": n, "value": est.value });
            return Ok(Output::rows_with_result(config("density", cli, Some(&r), extra), vec![row], json!(est)));
        }
        None => {
            extra["window"] = json!([a.window.0, a.window.1]);
            ua_dens_estimate(&r.space, &pair, &u, &r.family, a.window, budget)?
        }
    };
    let rows = result
        .records
        .iter()
        .map(|rec| json!({ "n": rec.n, "value": rec.ratio, "hits": rec.hits, "size": rec.size }))
        .collect();
    Ok(Output::rows_with_result(config("density", cli, Some(&r), extra), rows, json!(result)))
}

fn run_measure(cli: &Cli, a: &MeasureArgs, budget: &Budget) -> Run<Output> {
    let r = resolve(&a.space)?;
    let start: Point = a.start.parse()?;
    let mu = AtomicMeasure::empirical(&r.space, &start, &r.family, a.n, budget)?;
    let mut result = json!({ "measure": mu, "atoms": mu.len() });
    if a.snap {
        result["limit_view"] = json!(mu.snap_to_limits(&r.space)?);
    }
    if let Some(text) = &a.invariance {
        let generators = parse_elements(text)?;
        result["invariance_defect"] = exact_value(&invariance_defect(&r.space, &mu, &generators)?);
    }
    let rows = mu
        .atoms()
        .iter()
        .map(|(p, w)| json!({ "point": p.to_string(), "value": Exact::from(w) }))
        .collect();
    let echo = config(
        "measure",
        cli,
        Some(&r),
        json!({ "start": start, "n": a.n, "snap": a.snap, "invariance": a.invariance }),
    );
    Ok(Output::rows_with_result(echo, rows, result))
}

/// The closure probe an entry registers for a pair, if any.
fn registered_probe(entry: &GalleryEntry, pair: &Point) -> Option<Neighborhood> {
    entry.rows.iter().find_map(|row| match &row.check {
        Check::Relation { probes, .. } => probes.iter().find(|(q, _)| q == pair).map(|(_, u)| u.clone()),
        _ => None,
    })
}

fn run_detect(cli: &Cli, a: &DetectArgs, budget: &Budget) -> Run<Output> {
    let r = resolve(&a.space)?;
    let kind: RelationKind = a.kind.parse()?;
    let profile: Profile = a.profile.parse()?;
    let pair = r.space.canonical_point(&a.pair.parse()?)?;
    let mut params = gallery::detector_params(&r.family, profile);
    params.budget = *budget;
    if let Some(text) = &a.radii {
        params.radii = text
            .split(',')
            .map(|s| exact::parse_rational(s.trim()))
            .collect::<mecdyn::Result<_>>()?;
    }
    if let Some(text) = &a.ks {
        params.ks = text
            .split(',')
            .map(|s| s.trim().parse::<u64>().map_err(|_| usage(format!("bad witness index `{s}`"))))
            .collect::<Run<_>>()?;
    }
    if let Some(w) = a.window {
        params.window = w;
    }
    if let (Some(seed), Some(grid)) = (a.seed, params.grid.as_mut()) {
        grid.seed = seed;
    }
    if let Some(u) = r.entry.as_ref().and_then(|e| registered_probe(e, &pair)) {
        params.closure_probe = Some(ClosureProbe {
            neighbourhood: u,
            n_max: 50,
            truncation: 200,
        });
    }
    let cert = gallery::detect(kind, &r.space, &pair, &r.family, &params)?;
    let seed = params.grid.as_ref().map(|g| g.seed);
    let echo = config(
        "detect",
        cli,
        Some(&r),
        json!({ "kind": a.kind, "pair": pair, "profile": profile, "seed": seed, "parameters": params }),
    );
    let rows = cert
        .witnesses
        .iter()
        .flat_map(|w| {
            w.entries.iter().map(move |e| {
                json!({
                    "radius": w.radius.exact, "source": w.source, "accepted": w.accepted,
                    "k": e.k, "pair": e.pair.to_string(), "distance": e.distance, "value": e.score,
                })
            })
        })
        .collect();
    Ok(Output::certificate(echo, rows, json!(cert)))
}

fn run_icer(cli: &Cli, a: &IcerArgs) -> Run<Output> {
    let r = resolve(&a.space)?;
    let model = FiniteModel::from_space(&r.space)?;
    let relation: Vec<Point> = match (&a.relation, &r.entry) {
        (Some(text), _) => text
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Point>().map_err(Failure::from))
            .collect::<Run<_>>()?,
        (None, Some(entry)) => entry
            .rows
            .iter()
            .find_map(|row| match &row.check {
                Check::Icer { relation, .. } => Some(relation.clone()),
                _ => None,
            })
            .ok_or_else(|| usage("this entry registers no relation, pass --relation"))?,
        (None, None) => return Err(usage("--relation is required with --space")),
    };
    let classes = model.classify(&r.space, &relation)?;
    let hull = icer_hull(&model, &classes)?;
    let blocks: Vec<Vec<&str>> = hull
        .blocks
        .iter()
        .map(|b| b.iter().map(|&i| model.classes[i].as_str()).collect())
        .collect();
    let rows = hull
        .named_pairs(&model)
        .into_iter()
        .filter(|(x, y)| x != y)
        .map(|(x, y)| json!({ "left": x, "right": y }))
        .collect();
    let echo = config(
        "icer",
        cli,
        Some(&r),
        json!({ "relation": relation.iter().map(|p| p.to_string()).collect::<Vec<_>>() }),
    );
    let result = json!({ "classes": model.classes, "blocks": blocks, "rounds": hull.rounds });
    Ok(Output::rows_with_result(echo, rows, result))
}

fn run_reproduce(cli: &Cli, a: &ReproduceArgs, budget: &Budget) -> Run<(Output, u8)> {
    let profile: Profile = a.profile.parse()?;
    let entry = gallery::build(&a.name)?;
    let report = gallery::verify_with_budget(&entry, profile, budget);
    let code = if report.has_mismatch() {
        1
    } else if report.budget_exceeded() {
        3
    } else {
        0
    };
    let echo = config("reproduce", cli, None, json!({ "gallery": a.name, "profile": profile }));
    Ok((Output::report(echo, &report), code))
}

fn run(cli: &Cli) -> Run<(Output, u8)> {
    let budget = Budget {
        max_elements: cli.max_elements,
    };
    let out = match &cli.command {
        Command::Folner(a) => run_folner(cli, a, &budget)?,
        Command::Avg(a) => run_avg(cli, a, &budget)?,
        Command::Density(a) => run_density(cli, a, &budget)?,
        Command::Measure(a) => run_measure(cli, a, &budget)?,
        Command::Detect(a) => run_detect(cli, a, &budget)?,
        Command::Icer(a) => run_icer(cli, a)?,
        Command::Reproduce(a) => return run_reproduce(cli, a, &budget),
    };
    Ok((out, 0))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (out, code) = match run(&cli) {
        Ok(done) => done,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(3);
        }
    };
    let text = match out.render(cli.format) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}
