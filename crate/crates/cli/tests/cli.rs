use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use serde_json::Value;
use tempfile::TempDir;

const URL: &str = "https://news.example/politics/story-1";

struct Env {
    dir: TempDir,
}

impl Env {
    fn new() -> Self {
        Self { dir: TempDir::new().unwrap() }
    }

    fn state(&self) -> PathBuf {
        self.dir.path().join("state")
    }

    fn key(&self, name: &str) -> PathBuf {
        self.dir.path().join(format!("{name}.key"))
    }

    fn cmd(&self) -> Command {
        let mut c = Command::new(env!("CARGO_BIN_EXE_dclaims"));
        c.arg("--state").arg(self.state()).env_remove("DCLAIMS_STATE").env_remove("DCLAIMS_KEY");
        c
    }

    fn run(&self, args: &[&str]) -> Output {
        self.cmd().args(args).output().unwrap()
    }

    fn as_user(&self, user: &str, args: &[&str]) -> Output {
        self.cmd().arg("--key").arg(self.key(user)).args(args).output().unwrap()
    }

    fn ok(&self, user: Option<&str>, args: &[&str]) -> String {
        let out = match user {
            Some(u) => self.as_user(u, args),
            None => self.run(args),
        };
        assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    }

    fn json(&self, user: Option<&str>, args: &[&str]) -> Vec<Value> {
        let mut full = vec!["--format", "json-lines"];
        full.extend_from_slice(args);
        self.ok(user, &full).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
    }

    fn address(&self, user: &str) -> String {
        self.json(Some(user), &["whitelist", "list"])[0]["address"].as_str().unwrap().to_string()
    }

    /// Fresh world plus keys for alice and bob.
    fn with_users(extra_init: &[&str]) -> Self {
        let env = Self::new();
        for user in ["alice", "bob"] {
            let key = env.key(user);
            env.ok(None, &["keygen", "--out", key.to_str().unwrap()]);
        }
        let mut init = vec!["init"];
        init.extend_from_slice(extra_init);
        env.ok(None, &init);
        env
    }
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn missing_key_exits_2_with_message() {
    let env = Env::with_users(&[]);
    let out = env.as_user("carol", &["annotate", URL, "--verdict", "false", "--publisher", "pub-0"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no key"));
}

#[test]
fn missing_world_is_an_io_error() {
    let env = Env::new();
    let out = env.run(&["view", URL]);
    assert_eq!(code(&out), 2);
}

#[test]
fn usage_errors_have_their_own_code() {
    let env = Env::new();
    assert_eq!(code(&env.run(&["frobnicate"])), 64);
    assert_eq!(code(&env.run(&["annotate", URL, "--text", "x", "--verdict", "true"])), 64);
    assert!(env.run(&["--help"]).status.success());
}

#[test]
fn annotate_via_publisher_prints_receipt() {
    let env = Env::with_users(&[]);
    let out = env.json(Some("alice"), &["annotate", URL, "--verdict", "false", "--publisher", "pub-0"]);
    assert_eq!(out.len(), 1);
    let doc = &out[0];
    assert_eq!(doc["receipt"]["type"], "IssuanceReceipt");
    assert_eq!(doc["receipt"]["link"], doc["link"]);
    assert_eq!(doc["claim"]["credentialSubject"]["creator"], env.address("alice"));
    assert!(Path::new(doc["receiptPath"].as_str().unwrap()).exists());
}

#[test]
fn annotate_direct_prints_record_and_fee() {
    let env = Env::with_users(&[]);
    let doc = &env.json(Some("alice"), &["annotate", URL, "--text", "needs a source", "--direct"])[0];
    assert!(doc["record"].is_object());
    assert!(doc["feeUsd"].as_f64().unwrap() > 0.0);
    assert!(doc.get("receipt").is_none());
}

#[test]
fn alice_annotates_bob_views() {
    let env = Env::with_users(&[]);
    env.ok(Some("alice"), &["annotate", URL, "--verdict", "false", "--publisher", "pub-0"]);
    env.ok(None, &["advance", "--settle"]);

    // bob only trusts himself until he adds alice
    assert!(env.ok(Some("bob"), &["view", URL]).contains("no claims"));
    let alice = env.address("alice");
    env.ok(Some("bob"), &["whitelist", "add", &alice]);
    let text = env.ok(Some("bob"), &["view", URL]);
    assert!(text.contains(&alice) && text.contains("false"), "{text}");

    let rows = env.json(Some("bob"), &["view", URL]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["creator"], alice);
    assert_eq!(rows[0]["classification"], false);
}

#[test]
fn empty_topic_prints_no_claims() {
    let env = Env::with_users(&[]);
    let out = env.as_user("bob", &["view", "https://nobody.example/"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("no claims"));
}

#[test]
fn revoked_claim_only_shown_with_all() {
    let env = Env::with_users(&[]);
    let doc = &env.json(Some("alice"), &["annotate", URL, "--verdict", "true", "--direct"])[0];
    let link = doc["link"].as_str().unwrap().to_string();
    env.ok(Some("alice"), &["revoke", &link, "--direct"]);
    let visible = env.json(Some("alice"), &["view", URL]);
    assert!(visible.is_empty(), "{visible:?}");
    let all = env.json(Some("alice"), &["view", URL, "--all"]);
    let target = all.iter().find(|c| c["link"] == link.as_str()).unwrap();
    assert_eq!(target["verdict"], "revoked");
    assert!(env.ok(Some("alice"), &["view", URL, "--all"]).contains("revoked"));
}

#[test]
fn ledger_unavailable_exits_3() {
    let env = Env::with_users(&[]);
    env.ok(None, &["ledger", "offline"]);
    assert_eq!(code(&env.as_user("bob", &["view", URL])), 3);
    assert_eq!(code(&env.as_user("bob", &["annotate", URL, "--verdict", "true", "--direct"])), 3);
    env.ok(None, &["ledger", "online"]);
    assert_eq!(code(&env.as_user("bob", &["view", URL])), 0);
}

#[test]
fn dropped_request_is_audited_and_complained_about() {
    let env = Env::with_users(&["--fault", "pub-1=drop_requests"]);
    let doc = &env.json(Some("alice"), &["annotate", URL, "--verdict", "false", "--publisher", "pub-1"])[0];
    let receipt = doc["receiptPath"].as_str().unwrap().to_string();

    let early = env.run(&["audit", &receipt]);
    assert_eq!(code(&early), 1);
    assert!(String::from_utf8_lossy(&early.stderr).contains("not reached"));

    env.ok(None, &["advance", "3600"]);
    assert_eq!(env.ok(None, &["audit", &receipt]).trim(), "request_drop");
    let statuses = env.json(None, &["receipts"]);
    assert_eq!(statuses[0]["status"], "request_drop");

    let filed = &env.json(Some("alice"), &["complain", &receipt])[0];
    assert_eq!(filed["fault"], "request_drop");
    env.ok(None, &["advance", "--settle"]);
    let status = &env.json(None, &["status"])[0];
    let pub1 = status["publishers"].as_array().unwrap().iter().find(|p| p["endpoint"] == "pub-1").unwrap();
    assert_eq!(pub1["complaints"], 1);
}

#[test]
fn honest_receipt_cannot_be_complained_about() {
    let env = Env::with_users(&[]);
    let doc = &env.json(Some("alice"), &["annotate", URL, "--verdict", "false", "--publisher", "pub-0"])[0];
    let receipt = doc["receiptPath"].as_str().unwrap().to_string();
    env.ok(None, &["advance", "3600"]);
    assert_eq!(env.ok(None, &["audit", &receipt]).trim(), "ok");
    assert_eq!(code(&env.as_user("alice", &["complain", &receipt])), 1);
}

#[test]
fn costs_reproduce_the_annual_table() {
    let env = Env::new();
    let text = env.ok(None, &["costs"]);
    for needle in ["Storage", "2213.00", "Computation", "1880.00", "277068.76", "281161.77", "2.537", "1.041", "0.0025", "notes:"] {
        assert!(text.contains(needle), "missing {needle:?} in\n{text}");
    }
    let rows = env.json(None, &["costs"]);
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[6]["report"]["servers"]["servers"], 1);
}

#[test]
fn costs_with_a_parameter_file() {
    let env = Env::new();
    let params = env.dir.path().join("params.toml");
    std::fs::write(&params, "[params]\nbatch_size = 1\n").unwrap();
    let rows = env.json(None, &["costs", params.to_str().unwrap()]);
    let eth = rows.iter().find(|r| r["item"] == "Ethereum").unwrap()["usd"].as_f64().unwrap();
    assert!((eth - 27_706_876.25).abs() < 1e-3, "{eth}");
    assert_eq!(code(&env.run(&["costs", "/nonexistent/params.toml"])), 2);
}

#[test]
fn sim_run_writes_metrics_csv() {
    let env = Env::new();
    let scenario = env.dir.path().join("s.toml");
    std::fs::write(&scenario, "seed = 2\nn_clients = 6\nn_publishers = 2\nthreshold = 5\n[workload]\nn_topics = 3\nissues_per_client = 2\n").unwrap();
    let csv = env.dir.path().join("m.csv");
    let text = env.ok(None, &["sim", "run", scenario.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(text.contains("claims_issued"));
    let body = std::fs::read_to_string(&csv).unwrap();
    assert!(body.starts_with("metric,value\n"));
    assert!(body.contains("claims_issued,12\n"), "{body}");

    let again = env.dir.path().join("m2.csv");
    env.ok(None, &["sim", "run", scenario.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&again).unwrap());

    let rows = env.json(None, &["sim", "run", scenario.to_str().unwrap()]);
    assert!(rows.iter().any(|r| r["metric"] == "claims_issued" && r["value"] == "12"));
}

#[test]
fn sim_run_on_the_sixty_client_scenario() {
    let env = Env::new();
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/sixty_clients.toml");
    let csv = env.dir.path().join("sixty.csv");
    env.ok(None, &["sim", "run", scenario.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(std::fs::read_to_string(&csv).unwrap().contains("claims_issued,300\n"));
}

#[test]
fn sim_errors_map_to_exit_codes() {
    let env = Env::new();
    assert_eq!(code(&env.run(&["sim", "run", "/nonexistent.toml"])), 2);
    let bad = env.dir.path().join("bad.toml");
    std::fs::write(&bad, "n_clients = 0\n").unwrap();
    assert_eq!(code(&env.run(&["sim", "run", bad.to_str().unwrap()])), 1);
}

struct Daemon(Child);

impl Drop for Daemon {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn spawn(mut cmd: Command) -> (Daemon, String) {
    let mut child = cmd.stdout(Stdio::piped()).stderr(Stdio::null()).spawn().unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").unwrap_or_else(|| panic!("{line:?}")).to_string();
    (Daemon(child), addr)
}

fn http(addr: &str, method: &str, path: &str, body: Option<&str>) -> (u16, Value) {
    let mut stream = TcpStream::connect(addr).unwrap();
    let body = body.unwrap_or("");
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    let status = response[9..12].parse().unwrap();
    let payload = response.split_once("\r\n\r\n").map(|(_, b)| b).unwrap_or("");
    (status, serde_json::from_str(payload).unwrap_or(Value::Null))
}

#[test]
fn publisher_daemon_serves_health_and_stats() {
    let env = Env::with_users(&[]);
    let config = env.dir.path().join("publisher.toml");
    let seed = "11".repeat(32);
    std::fs::write(&config, format!("identity = \"{seed}\"\nendpoint = \"pub-extra\"\nthreshold = 5\n")).unwrap();
    let mut cmd = env.cmd();
    cmd.args(["publisher", "run", config.to_str().unwrap(), "--bind", "127.0.0.1:0", "--tick-ms", "5"]);
    let (_daemon, addr) = spawn(cmd);
    let (status, health) = http(&addr, "GET", "/health", None);
    assert_eq!(status, 200);
    assert_eq!(health["endpoint"], "pub-extra");
    let (status, stats) = http(&addr, "GET", "/stats", None);
    assert_eq!(status, 200);
    assert_eq!(stats["received"], 0);
}

#[test]
fn client_service_annotates_over_http() {
    let env = Env::with_users(&[]);
    let mut cmd = env.cmd();
    cmd.arg("--key").arg(env.key("alice"));
    cmd.args(["serve", "--bind", "127.0.0.1:0", "--direct", "--tick-ms", "1000"]);
    let (daemon, addr) = spawn(cmd);
    let body = format!("{{\"url\": \"{URL}\", \"text\": \"from the service\"}}");
    let (status, created) = http(&addr, "POST", "/annotations", Some(&body));
    assert_eq!(status, 201, "{created}");
    assert!(created["feeUsd"].as_f64().unwrap() > 0.0);
    let (status, view) = http(&addr, "GET", &format!("/annotations?url={}", URL.replace(':', "%3A").replace('/', "%2F")), None);
    assert_eq!(status, 200);
    assert_eq!(view["claims"][0]["text"], "from the service");
    drop(daemon);

    // the service wrote its world back to the state directory
    let rows = env.json(Some("alice"), &["view", URL]);
    assert_eq!(rows.len(), 1);
}
