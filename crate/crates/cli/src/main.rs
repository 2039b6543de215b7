//! `dclaims`: command-line front end for the annotation platform.
//!
//! Everything runs against an embedded world (store, ledger and publishers in
//! one process) persisted under `--state`, so no daemons are needed.
//! `publisher run` and `serve` expose the same world over HTTP.

mod daemon;
mod error;
mod state;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dclaims_core::client::{ClientError, Whitelist};
use dclaims_core::cost::{self, ActivityStats, CostParams, CostReport};
use dclaims_core::deployment::{IssuancePath, IssueOutcome};
use dclaims_core::service::{issued_json, report_json};
use dclaims_core::sim::{self, ScenarioConfig};
use dclaims_core::{
    Address, AnnotationBody, ChainConfig, ClaimUid, ContentLink, Deployment, FaultMode, FaultProfile, Identity,
    NodeId, PublisherConfig,
};
use serde_json::{json, Value};

use crate::error::{exit, CliError, CliResult};
use crate::state::{client_node, read_receipt, StateDir};

#[derive(Debug, Parser)]
#[command(name = "dclaims", version, about = "Censorship-resistant web annotations")]
struct Cli {
    /// State directory of the embedded world.
    #[arg(long, global = true, env = "DCLAIMS_STATE", default_value = ".dclaims")]
    state: PathBuf,
    /// Identity file (hex seed). Defaults to `<state>/key`.
    #[arg(long, global = true, env = "DCLAIMS_KEY")]
    key: Option<PathBuf>,
    /// Whitelist file. Defaults to `<state>/whitelist.txt`.
    #[arg(long, global = true)]
    whitelist: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    /// One JSON record per line.
    JsonLines,
}

#[derive(Debug, clap::Args)]
struct PathArgs {
    /// Issue through this publisher endpoint.
    #[arg(long, conflicts_with = "direct")]
    publisher: Option<String>,
    /// Pay for a ledger transaction yourself.
    #[arg(long)]
    direct: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create an identity.
    Keygen {
        /// Where to write the key. Defaults to `--key` or `<state>/key`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use this hex seed instead of fresh randomness.
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        force: bool,
    },
    /// Create an embedded world with a set of registered publishers.
    Init {
        #[arg(long, default_value_t = 3)]
        publishers: usize,
        #[arg(long, default_value_t = 100)]
        threshold: usize,
        #[arg(long, default_value_t = 1800)]
        max_wait: u64,
        /// Misbehaving publisher, as ENDPOINT=MODE (e.g. pub-0=drop_requests).
        #[arg(long = "fault", value_name = "ENDPOINT=MODE")]
        faults: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        force: bool,
    },
    /// Annotate a URL with free text or a true/false classification.
    Annotate {
        url: String,
        #[arg(long, required_unless_present = "verdict", conflicts_with = "verdict")]
        text: Option<String>,
        #[arg(long)]
        verdict: Option<bool>,
        #[command(flatten)]
        path: PathArgs,
    },
    /// Show the verified annotations of a URL in ledger order.
    View {
        url: String,
        /// Also show filtered, revoked and invalid entries.
        #[arg(long)]
        all: bool,
    },
    /// Revoke one of your claims, given its uid or link.
    Revoke {
        target: String,
        /// URL the target annotates, when it is not yet on the ledger.
        #[arg(long)]
        url: Option<String>,
        #[command(flatten)]
        path: PathArgs,
    },
    /// Move the embedded clock forward.
    Advance {
        #[arg(required_unless_present = "settle")]
        seconds: Option<u64>,
        /// Run until queues drain and nothing is pending.
        #[arg(long)]
        settle: bool,
    },
    /// Clock, ledger and publisher summary.
    Status,
    /// Take the embedded ledger offline or bring it back.
    Ledger {
        #[arg(value_enum)]
        switch: LedgerSwitch,
    },
    /// Audit a receipt after its deadline.
    Audit { receipt: PathBuf },
    /// Audit a receipt and, on a fault, file a complaint.
    Complain { receipt: PathBuf },
    /// List stored receipts with their audit status.
    Receipts,
    /// Manage the creators whose claims you accept.
    Whitelist {
        #[command(subcommand)]
        action: WhitelistAction,
    },
    /// Publisher daemon.
    Publisher {
        #[command(subcommand)]
        action: PublisherAction,
    },
    /// Client HTTP service for the annotation UI.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7400")]
        bind: String,
        #[command(flatten)]
        path: PathArgs,
        /// Wall-clock milliseconds per simulated second.
        #[arg(long, default_value_t = 1000)]
        tick_ms: u64,
    },
    /// Scenario runner.
    Sim {
        #[command(subcommand)]
        action: SimAction,
    },
    /// Annual operating-cost report.
    Costs {
        /// Parameter file overriding the bundled defaults.
        params: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LedgerSwitch {
    Online,
    Offline,
}

#[derive(Debug, Subcommand)]
enum WhitelistAction {
    List,
    Add { address: Address },
    Remove { address: Address },
}

#[derive(Debug, Subcommand)]
enum PublisherAction {
    /// Serve a publisher from a TOML config, adding it to the world if new.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7410")]
        bind: String,
        /// Inject a fault on every request.
        #[arg(long)]
        fault: Option<FaultMode>,
        #[arg(long, default_value_t = 1000)]
        tick_ms: u64,
    },
}

#[derive(Debug, Subcommand)]
enum SimAction {
    Run {
        scenario: PathBuf,
        /// Write the metrics CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the event trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

struct Ctx {
    state: StateDir,
    key: Option<PathBuf>,
    whitelist: Option<PathBuf>,
    format: Format,
}

impl Ctx {
    /// Prints a document: pretty JSON in text mode, one line otherwise.
    fn document(&self, value: &Value) {
        match self.format {
            Format::Text => println!("{}", serde_json::to_string_pretty(value).expect("json values serialize")),
            Format::JsonLines => self.line(value),
        }
    }

    fn line(&self, value: &Value) {
        println!("{value}");
    }

    fn emit(&self, value: Value, text: impl FnOnce() -> String) {
        match self.format {
            Format::Text => println!("{}", text()),
            Format::JsonLines => self.line(&value),
        }
    }

    fn path(&self, args: &PathArgs) -> CliResult<IssuancePath> {
        if args.direct {
            return Ok(IssuancePath::Direct);
        }
        args.publisher
            .clone()
            .or_else(|| self.state.config.publisher_endpoint.clone())
            .map(IssuancePath::Publisher)
            .ok_or_else(|| CliError::Invalid("choose --publisher ENDPOINT or --direct".into()))
    }

    fn key(&self) -> CliResult<Identity> {
        self.state.load_key(self.key.as_deref())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let ctx = Ctx { state: StateDir::open(cli.state)?, key: cli.key, whitelist: cli.whitelist, format: cli.format };
    match cli.command {
        Command::Keygen { out, seed, force } => keygen(&ctx, out, seed, force),
        Command::Init { publishers, threshold, max_wait, faults, seed, force } => {
            init(ctx, publishers, threshold, max_wait, &faults, seed, force)
        }
        Command::Annotate { url, text, verdict, path } => {
            let body = match (text, verdict) {
                (Some(t), _) => AnnotationBody::Text(t),
                (None, Some(v)) => AnnotationBody::Verdict(v),
                (None, None) => unreachable!("clap requires one of --text or --verdict"),
            };
            annotate(&ctx, &url, body, &path)
        }
        Command::View { url, all } => view(&ctx, &url, all),
        Command::Revoke { target, url, path } => revoke(&ctx, &target, url.as_deref(), &path),
        Command::Advance { seconds, settle } => advance(&ctx, seconds, settle),
        Command::Status => status(&ctx),
        Command::Ledger { switch } => {
            let mut world = ctx.state.load_world()?;
            world.ledger.set_online(matches!(switch, LedgerSwitch::Online));
            ctx.state.save_world(&world)?;
            let online = world.ledger.is_online();
            ctx.emit(json!({ "ledgerOnline": online }), || format!("ledger {}", if online { "online" } else { "offline" }));
            Ok(())
        }
        Command::Audit { receipt } => audit(&ctx, &receipt),
        Command::Complain { receipt } => complain(&ctx, &receipt),
        Command::Receipts => receipts(&ctx),
        Command::Whitelist { action } => whitelist(&ctx, action),
        Command::Publisher { action: PublisherAction::Run { config, bind, fault, tick_ms } } => {
            publisher_run(&ctx, &config, &bind, fault, tick_ms)
        }
        Command::Serve { bind, path, tick_ms } => {
            let path = ctx.path(&path)?;
            let identity = ctx.key()?;
            let whitelist = ctx.state.load_whitelist(ctx.whitelist.as_deref(), Some(&identity))?;
            daemon::serve_client(ctx.state, ctx.whitelist, identity, whitelist, path, &bind, tick_ms)
        }
        Command::Sim { action: SimAction::Run { scenario, out, trace } } => sim_run(&ctx, &scenario, out, trace),
        Command::Costs { params } => costs(&ctx, params.as_deref()),
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path.display().to_string(), e))
}

fn keygen(ctx: &Ctx, out: Option<PathBuf>, seed: Option<String>, force: bool) -> CliResult<()> {
    let path = out.unwrap_or_else(|| ctx.state.key_path(ctx.key.as_deref()));
    if path.exists() && !force {
        return Err(CliError::Invalid(format!("{} exists (use --force to replace it)", path.display())));
    }
    let identity = match seed {
        Some(hex) => Identity::from_seed_hex(&hex)?,
        None => Identity::generate(&mut rand::rngs::OsRng),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    }
    identity.save(&path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let address = identity.address().to_string();
    ctx.emit(json!({ "address": address, "key": path }), || format!("{address}  ({})", path.display()));
    Ok(())
}

/// Deterministic publisher key for `init`, distinct per world seed and index.
fn publisher_identity(seed: u64, index: usize) -> CliResult<Identity> {
    let mut bytes = [0x5au8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&(index as u64).to_le_bytes());
    Ok(Identity::from_seed(bytes)?)
}

fn parse_fault(spec: &str) -> CliResult<(String, FaultMode)> {
    let (endpoint, mode) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Invalid(format!("fault {spec:?} is not ENDPOINT=MODE")))?;
    let mode = mode.parse().map_err(|e| CliError::Invalid(format!("fault {spec:?}: {e}")))?;
    Ok((endpoint.to_string(), mode))
}

fn init(
    mut ctx: Ctx,
    publishers: usize,
    threshold: usize,
    max_wait: u64,
    faults: &[String],
    seed: u64,
    force: bool,
) -> CliResult<()> {
    if ctx.state.world_path().exists() && !force {
        return Err(CliError::Invalid(format!("{} exists (use --force to replace it)", ctx.state.world_path().display())));
    }
    let faults = faults.iter().map(|f| parse_fault(f)).collect::<CliResult<Vec<_>>>()?;
    ctx.state.create()?;
    let mut world = Deployment::new(ChainConfig::default());
    let mut endpoints = Vec::new();
    for i in 0..publishers {
        let endpoint = format!("pub-{i}");
        let fault = faults
            .iter()
            .find(|(e, _)| *e == endpoint)
            .map(|(_, m)| FaultProfile::always(*m))
            .unwrap_or_else(FaultProfile::honest);
        let config = PublisherConfig { threshold, max_wait, ..PublisherConfig::new(publisher_identity(seed, i)?, &endpoint) };
        world.add_publisher(config, fault, seed.wrapping_add(i as u64))?;
        endpoints.push(endpoint);
    }
    if let Some((unknown, _)) = faults.iter().find(|(e, _)| !endpoints.contains(e)) {
        return Err(CliError::Invalid(format!("fault names unknown publisher {unknown:?}")));
    }
    world.settle(world.ledger.config().confirmation_delay * 2);
    ctx.state.config.publisher_endpoint = endpoints.first().cloned();
    ctx.state.save_config()?;
    ctx.state.save_world(&world)?;
    let value = json!({ "state": ctx.state.root(), "publishers": endpoints, "now": world.now() });
    ctx.emit(value, || {
        format!("initialised {} with {} publisher(s): {}", ctx.state.root().display(), endpoints.len(), endpoints.join(", "))
    });
    Ok(())
}

fn issue_and_print(ctx: &Ctx, world: &Deployment, issued: &dclaims_core::deployment::Issued) -> CliResult<()> {
    let mut value = issued_json(issued)?;
    if let IssueOutcome::Receipt(receipt) = &issued.outcome {
        let path = ctx.state.save_receipt(receipt)?;
        value["receiptPath"] = json!(path);
    }
    value["now"] = json!(world.now());
    ctx.document(&value);
    Ok(())
}

fn annotate(ctx: &Ctx, url: &str, body: AnnotationBody, path: &PathArgs) -> CliResult<()> {
    let identity = ctx.key()?;
    let path = ctx.path(path)?;
    let mut world = ctx.state.load_world()?;
    let node = client_node(&identity);
    world.add_client_node(&node);
    let issued = world.annotate(&identity, &node, url, body, &path)?;
    ctx.state.save_world(&world)?;
    issue_and_print(ctx, &world, &issued)
}

fn parse_target(target: &str) -> CliResult<ClaimUid> {
    if let Ok(uid) = target.parse::<ClaimUid>() {
        return Ok(uid);
    }
    let link: ContentLink = target.parse().map_err(|_| CliError::Invalid(format!("{target:?} is neither a uid nor a link")))?;
    let digest: [u8; 32] = link
        .digest()
        .try_into()
        .map_err(|_| CliError::Invalid(format!("{target:?} is not a claim link")))?;
    Ok(ClaimUid(digest))
}

fn revoke(ctx: &Ctx, target: &str, url: Option<&str>, path: &PathArgs) -> CliResult<()> {
    let identity = ctx.key()?;
    let target = parse_target(target)?;
    let topic = url.map(dclaims_core::topic_of).transpose()?;
    let path = ctx.path(path)?;
    let mut world = ctx.state.load_world()?;
    let node = client_node(&identity);
    world.add_client_node(&node);
    let issued = world.revoke(&identity, &node, target, topic, &path)?;
    ctx.state.save_world(&world)?;
    issue_and_print(ctx, &world, &issued)
}

fn claim_line(entry: &Value) -> String {
    let body = if let Some(v) = entry["classification"].as_bool() {
        v.to_string()
    } else if let Some(t) = entry["text"].as_str() {
        format!("{t:?}")
    } else {
        entry["kind"].as_str().unwrap_or("?").to_string()
    };
    let creator = entry["creator"].as_str().unwrap_or("-");
    format!("{:<15} {creator}  {body}", entry["verdict"].as_str().unwrap_or("?"))
}

fn view(ctx: &Ctx, url: &str, all: bool) -> CliResult<()> {
    let own = ctx.key().ok();
    let whitelist = ctx.state.load_whitelist(ctx.whitelist.as_deref(), own.as_ref())?;
    let mut world = ctx.state.load_world()?;
    let viewer = NodeId::new("viewer");
    world.add_client_node(&viewer);
    let report = world.verify_topic(url, &whitelist, &viewer)?;
    ctx.state.save_world(&world)?;
    let value = report_json(url, &report, all);
    let claims = value["claims"].as_array().cloned().unwrap_or_default();
    match ctx.format {
        Format::JsonLines => claims.iter().for_each(|c| ctx.line(c)),
        Format::Text if claims.is_empty() => {
            println!("no claims");
            if whitelist.is_empty() {
                println!("(the whitelist is empty, so every creator is filtered out)");
            }
        }
        Format::Text => {
            println!("{:<15} {:<42}  claim", "verdict", "creator");
            claims.iter().for_each(|c| println!("{}", claim_line(c)));
        }
    }
    Ok(())
}

fn advance(ctx: &Ctx, seconds: Option<u64>, settle: bool) -> CliResult<()> {
    let mut world = ctx.state.load_world()?;
    if let Some(s) = seconds {
        world.advance(s);
    }
    let settled = !settle || world.settle(30 * 86_400);
    ctx.state.save_world(&world)?;
    let now = world.now();
    ctx.emit(json!({ "now": now, "settled": settled }), || format!("now {now}"));
    if settled {
        Ok(())
    } else {
        Err(CliError::Invalid("queues did not drain within 30 days of simulated time".into()))
    }
}

fn status(ctx: &Ctx) -> CliResult<()> {
    let world = ctx.state.load_world()?;
    let publishers: Vec<Value> = world
        .publishers()
        .iter()
        .map(|p| {
            json!({
                "endpoint": p.endpoint(),
                "address": p.address(),
                "queueDepth": p.queue_depth(),
                "complaints": world.ledger.complaints_against(&p.address()).len(),
                "stats": p.stats(),
            })
        })
        .collect();
    let value = json!({
        "now": world.now(),
        "ledgerOnline": world.ledger.is_online(),
        "pendingTx": world.ledger.pending_count(),
        "confirmedTx": world.ledger.confirmed().len(),
        "publishers": publishers,
    });
    ctx.emit(value.clone(), || {
        let mut out = format!(
            "now {}  ledger {}  pending tx {}  confirmed tx {}",
            value["now"],
            if world.ledger.is_online() { "online" } else { "offline" },
            value["pendingTx"],
            value["confirmedTx"]
        );
        for p in &publishers {
            out.push_str(&format!(
                "\n{:<10} {}  queued {}  complaints {}",
                p["endpoint"].as_str().unwrap_or("?"),
                p["address"].as_str().unwrap_or("?"),
                p["queueDepth"],
                p["complaints"]
            ));
        }
        out
    });
    Ok(())
}

fn audit(ctx: &Ctx, receipt: &Path) -> CliResult<()> {
    let receipt = read_receipt(receipt)?;
    let mut world = ctx.state.load_world()?;
    let result = world.audit(&receipt)?;
    ctx.state.save_world(&world)?;
    ctx.emit(json!({ "link": receipt.link().to_string(), "result": result }), || result.to_string());
    Ok(())
}

fn complain(ctx: &Ctx, receipt: &Path) -> CliResult<()> {
    let identity = ctx.key()?;
    let receipt = read_receipt(receipt)?;
    let mut world = ctx.state.load_world()?;
    let node = client_node(&identity);
    world.add_client_node(&node);
    let filed = world.complain(&identity, &node, &receipt)?;
    ctx.state.save_world(&world)?;
    let value = json!({
        "complaint": filed.claim.to_document()?,
        "link": filed.claim.link()?.to_string(),
        "fault": filed.fault,
        "tx": filed.tx,
    });
    ctx.document(&value);
    Ok(())
}

fn receipts(ctx: &Ctx) -> CliResult<()> {
    let mut world = ctx.state.load_world()?;
    for receipt in ctx.state.receipts()? {
        let status = match world.audit(&receipt) {
            Ok(r) => r.to_string(),
            Err(ClientError::DeadlineNotReached { .. }) => "pending".into(),
            Err(e) => return Err(e.into()),
        };
        let link = receipt.link().to_string();
        ctx.emit(json!({ "link": link, "deadline": receipt.deadline, "publisher": receipt.publisher, "status": status }), || {
            format!("{link}  deadline {}  {status}", receipt.deadline)
        });
    }
    Ok(())
}

fn whitelist(ctx: &Ctx, action: WhitelistAction) -> CliResult<()> {
    let own = ctx.key().ok();
    let mut list: Whitelist = ctx.state.load_whitelist(ctx.whitelist.as_deref(), own.as_ref())?;
    match action {
        WhitelistAction::List => {}
        WhitelistAction::Add { address } => {
            list.add(address);
            ctx.state.save_whitelist(ctx.whitelist.as_deref(), &list)?;
        }
        WhitelistAction::Remove { address } => {
            list.remove(&address);
            ctx.state.save_whitelist(ctx.whitelist.as_deref(), &list)?;
        }
    }
    for address in list.iter() {
        ctx.emit(json!({ "address": address }), || address.to_string());
    }
    Ok(())
}

fn publisher_run(ctx: &Ctx, config: &Path, bind: &str, fault: Option<FaultMode>, tick_ms: u64) -> CliResult<()> {
    let text = fs::read_to_string(config).map_err(|e| CliError::io(config.display().to_string(), e))?;
    let config = PublisherConfig::from_toml_str(&text)?;
    let mut world = ctx.state.load_world()?;
    let index = match world.publisher_index(&config.endpoint) {
        Some(i) => i,
        None => {
            let profile = fault.map(FaultProfile::always).unwrap_or_else(FaultProfile::honest);
            let seed = world.publishers().len() as u64;
            world.add_publisher(config, profile, seed)?
        }
    };
    ctx.state.save_world(&world)?;
    daemon::serve_publisher(ctx.state.clone(), world, index, bind, tick_ms)
}

fn sim_run(ctx: &Ctx, scenario: &Path, out: Option<PathBuf>, trace: Option<PathBuf>) -> CliResult<()> {
    let config = ScenarioConfig::load(scenario)?;
    eprintln!(
        "running {} clients, {} publishers for {} s of simulated time",
        config.n_clients, config.n_publishers, config.duration
    );
    let outcome = sim::run(&config)?;
    if let Some(path) = &out {
        write_file(path, outcome.report.to_csv())?;
    }
    if let Some(path) = &trace {
        write_file(path, outcome.trace.join("\n") + "\n")?;
    }
    match ctx.format {
        Format::Text => print!("{}", outcome.report),
        Format::JsonLines => {
            for (metric, value) in outcome.report.rows() {
                ctx.line(&json!({ "metric": metric, "value": value }));
            }
        }
    }
    Ok(())
}

/// Rows of the annual cost table: label and USD value.
fn cost_rows(r: &CostReport) -> Vec<(String, f64)> {
    vec![
        ("Storage".into(), r.storage_usd_year),
        ("Computation".into(), r.compute_usd_year),
        ("Ethereum".into(), r.ethereum_usd_year),
        ("Total cost for 1 year".into(), r.total_usd_year),
        ("Cost per 1000 Claims (USD)".into(), r.per_1000_claims_usd),
        (format!("Cost per User for {:.0} users (USD)", r.user_base), r.per_user_usd),
    ]
}

fn costs(ctx: &Ctx, params: Option<&Path>) -> CliResult<()> {
    let (stats, params) = match params {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
            cost::parse_cost_file(&text).map_err(|e| CliError::Invalid(e.to_string()))?
        }
        None => (ActivityStats::default(), CostParams::default()),
    };
    let report = cost::summarize(&stats, &params).map_err(|e| CliError::Invalid(e.to_string()))?;
    match ctx.format {
        Format::JsonLines => {
            for (item, usd) in cost_rows(&report) {
                ctx.line(&json!({ "item": item, "usd": usd }));
            }
            ctx.line(&json!({ "report": report }));
        }
        Format::Text => {
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{:<40} {:>12}", "Final costs", "USD");
            for (i, (item, usd)) in cost_rows(&report).into_iter().enumerate() {
                // annual totals in cents, per-unit metrics one digit finer
                let digits = if i < 4 { 2 } else { 3 };
                let _ = writeln!(out, "{item:<40} {usd:>12.digits$}");
            }
            let _ = writeln!(out, "{:<40} {:>12.4}", "Fee per claim at batch size (USD)", report.per_claim_fee_usd);
            let _ = writeln!(out, "{:<40} {:>12}", "Servers", report.servers.servers);
            let _ = writeln!(out, "\nnotes:");
            for note in &report.notes {
                let _ = writeln!(out, "  - {note}");
            }
        }
    }
    Ok(())
}
