//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use dclaims_core::client::{create_annotation, create_revocation, verify_topic, Whitelist};
use dclaims_core::cost::{self, ActivityStats, CostParams};
use dclaims_core::deployment::{IssuancePath, IssueOutcome};
use dclaims_core::ledger::TxKind;
use dclaims_core::sim::{self, expected_audit, ScenarioConfig, WorkloadSpec};
use dclaims_core::{
    AnnotationBody, ChainConfig, Claim, ContentLink, Deployment, FaultProfile, Identity, Ledger, NodeId,
    PublisherConfig, PublisherNode, StoreNetwork, Topic, Verdict,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || format!("{name} = {got}, expected {want} ± {tol}"))
}

fn scenario(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn id(n: u64) -> Identity {
    let mut seed = [7u8; 32];
    seed[..8].copy_from_slice(&n.to_le_bytes());
    Identity::from_seed(seed).expect("valid seed")
}

fn cost_table() -> Check {
    let stats = ActivityStats::default();
    let params = CostParams::default();
    let r = cost::summarize(&stats, &params).map_err(|e| e.to_string())?;
    within("ethereum", r.ethereum_usd_year, 277_069.0, 1.0)?;
    within("batch fill minutes", r.batch_fill_minutes, 23.0, 1.0)?;
    within("batch fill minutes (computed)", r.batch_fill_minutes, 23.8, 0.05)?;
    ensure(r.per_claim_fee_usd == 0.0025, || format!("per-claim fee {} is not exactly 0.0025", r.per_claim_fee_usd))?;
    within("per 1000 claims", r.per_1000_claims_usd, 2.54, 0.01)?;
    within("total", r.total_usd_year, 281_152.0, 281_152.0 * 0.05)?;
    within("articles per server", r.servers.articles_per_server, 357.0, 1.0)?;
    ensure(r.servers.servers == 1, || format!("{} servers, expected 1", r.servers.servers))?;
    Ok(format!(
        "ethereum {:.2}, storage {:.2}, total {:.2}, per-1000 {:.4}, per-user {:.4}, fill {:.2} min, {:.2} articles/server",
        r.ethereum_usd_year,
        r.storage_usd_year,
        r.total_usd_year,
        r.per_1000_claims_usd,
        r.per_user_usd,
        r.batch_fill_minutes,
        r.servers.articles_per_server
    ))
}

fn batching_economics() -> Check {
    let config = scenario("batching.toml");
    let out = sim::run(&config).map_err(|e| e.to_string())?;
    let m = &out.report;
    ensure(m.claims_issued == 300, || format!("{} issuances, expected 300", m.claims_issued))?;
    ensure(config.threshold == 100, || "scenario threshold is not 100".into())?;
    ensure(m.ledger_tx_count == 3, || format!("{} ledger transactions, expected 3", m.ledger_tx_count))?;
    // fees are quoted to the cent
    within("total fees", m.total_fees_usd, 0.75, 0.005)?;
    Ok(format!("300 issuances, {} transactions, {:.9} USD", m.ledger_tx_count, m.total_fees_usd))
}

fn throughput_cap() -> Check {
    let schedule = || -> Result<Vec<(u64, usize)>, String> {
        let mut ledger = Ledger::new(ChainConfig::default());
        let topic = Topic::of_url("https://cap.example/").map_err(|e| e.to_string())?;
        for i in 0..100u32 {
            let pairs = vec![(topic, ContentLink::of(&i.to_le_bytes()))];
            ledger.register_claims(id(1).address(), pairs, 0).map_err(|e| e.to_string())?;
        }
        let mut per_second = Vec::new();
        let mut t = 0;
        while ledger.pending_count() > 0 && t < 10_000 {
            t += 1;
            let n = ledger.advance_to(t);
            if n > 0 {
                per_second.push((t, n));
            }
        }
        Ok(per_second)
    };
    let first = schedule()?;
    let second = schedule()?;
    let cap = ChainConfig::default().max_tx_per_second as usize;
    ensure(first.iter().all(|&(_, n)| n <= cap), || format!("a second confirmed more than {cap}: {first:?}"))?;
    ensure(first.first().is_some_and(|&(_, n)| n == cap), || format!("first second did not fill to the cap: {first:?}"))?;
    ensure(first.iter().map(|&(_, n)| n).sum::<usize>() == 100, || format!("not all confirmed: {first:?}"))?;
    ensure(first.windows(2).all(|w| w[1].0 == w[0].0 + 1), || format!("spill is not contiguous: {first:?}"))?;
    ensure(first == second, || "two identical submissions confirmed on different schedules".into())?;
    Ok(format!("per-second confirmations {:?}", first.iter().map(|p| p.1).collect::<Vec<_>>()))
}

/// What a correct pipeline must report for one corpus entry.
struct Entry {
    claim: Claim,
    tampered: bool,
}

fn flip_random_bit(bytes: &mut [u8], rng: &mut ChaCha8Rng) {
    let bit = rng.gen_range(0..bytes.len() * 8);
    bytes[bit / 8] ^= 1 << (bit % 8);
}

/// Builds a randomized corpus, registers it, runs the pipeline on every topic
/// and checks the four properties. Returns (claims, topics checked).
fn pipeline_corpus(seed: u64, n_claims: usize) -> Result<(usize, usize), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let creators: Vec<Identity> = (0..8).map(|i| id(seed * 100 + i)).collect();
    let whitelist: Whitelist = creators.iter().filter(|_| rng.gen_bool(0.5)).map(|c| c.address()).collect();
    let urls: Vec<String> = (0..25).map(|i| format!("https://corpus{seed}.example/article/{i}")).collect();

    let mut store = StoreNetwork::new();
    let origin = NodeId::new("origin");
    let viewer = NodeId::new("viewer");
    store.add_node(origin.clone());
    store.add_node(viewer.clone());
    let mut ledger = Ledger::new(ChainConfig::default());
    let mut entries: BTreeMap<ContentLink, Entry> = BTreeMap::new();
    let mut by_topic: BTreeMap<Topic, Vec<ContentLink>> = BTreeMap::new();
    let mut annotations: Vec<Claim> = Vec::new();

    let mut register = |claim: Claim, tamper: bool, rng: &mut ChaCha8Rng, store: &mut StoreNetwork| -> Result<Claim, String> {
        let mut bytes = claim.to_canonical_bytes().map_err(|e| e.to_string())?;
        if tamper {
            flip_random_bit(&mut bytes, rng);
        }
        let link = store.put(&origin, &bytes).map_err(|e| e.to_string())?;
        let topic = claim.topic.expect("corpus claims carry topics");
        by_topic.entry(topic).or_default().push(link.clone());
        entries.insert(link, Entry { claim: claim.clone(), tampered: tamper });
        Ok(claim)
    };

    for i in 0..n_claims {
        let creator = creators.choose(&mut rng).expect("creators");
        let url = urls.choose(&mut rng).expect("urls");
        let roll: f64 = rng.gen();
        let claim = if roll < 0.25 && !annotations.is_empty() {
            // revocation, by the target's creator or by someone else
            let target = annotations.choose(&mut rng).expect("non-empty").clone();
            let revoker = if rng.gen_bool(0.5) {
                creators.iter().find(|c| c.address() == target.creator_id).expect("creator is known")
            } else {
                creator
            };
            let uid = target.uid().map_err(|e| e.to_string())?;
            create_revocation(revoker, uid, target.topic.expect("topic"), i as u64).map_err(|e| e.to_string())?
        } else {
            let body = if rng.gen_bool(0.5) {
                AnnotationBody::Verdict(rng.gen())
            } else {
                AnnotationBody::Text(format!("comment {i} from corpus {seed}"))
            };
            create_annotation(creator, url, body, i as u64).map_err(|e| e.to_string())?
        };
        let tamper = rng.gen_bool(0.1);
        let claim = register(claim, tamper, &mut rng, &mut store)?;
        if claim.annotation_payload().is_some() {
            annotations.push(claim);
        }
    }

    // register in ledger batches of up to 100 pairs, shuffled across topics
    let mut pairs: Vec<(Topic, ContentLink)> =
        by_topic.iter().flat_map(|(t, links)| links.iter().map(move |l| (*t, l.clone()))).collect();
    pairs.shuffle(&mut rng);
    for chunk in pairs.chunks(100) {
        ledger.register_claims(id(999).address(), chunk.to_vec(), 0).map_err(|e| e.to_string())?;
    }
    let mut t = 0;
    while ledger.pending_count() > 0 {
        t += 1;
        ledger.advance_to(t);
    }

    // expected revocations: untampered revocations by whitelisted creators
    let mut revokes: BTreeSet<(Topic, dclaims_core::ClaimUid, dclaims_core::Address)> = BTreeSet::new();
    for e in entries.values().filter(|e| !e.tampered) {
        if let (Some(target), true) = (e.claim.revocation_target(), whitelist.contains(&e.claim.creator_id)) {
            revokes.insert((e.claim.topic.expect("topic"), target, e.claim.creator_id));
        }
    }

    for url in &urls {
        let report = verify_topic(url, &whitelist, &mut store, &viewer, &ledger).map_err(|e| e.to_string())?;
        let c = &report.counters;
        ensure(c.signature_checks <= c.whitelist_survivors, || {
            format!("{url}: {} signature checks for {} survivors", c.signature_checks, c.whitelist_survivors)
        })?;
        for vc in &report.claims {
            let e = &entries[&vc.link];
            if e.tampered {
                ensure(!matches!(vc.verdict, Verdict::Accepted | Verdict::Revoked), || {
                    format!("{url}: a bit-flipped claim {} was reported {}", vc.link, vc.verdict.as_str())
                })?;
                continue;
            }
            let creator = e.claim.creator_id;
            if let Some(accepted) = vc.claim.as_ref().filter(|_| vc.verdict == Verdict::Accepted) {
                ensure(whitelist.contains(&accepted.creator_id), || format!("{url}: accepted a non-whitelisted creator"))?;
            }
            let uid = e.claim.uid().map_err(|err| err.to_string())?;
            let expected = if !whitelist.contains(&creator) {
                Verdict::Filtered
            } else if revokes.contains(&(report.topic, uid, creator)) {
                Verdict::Revoked
            } else {
                Verdict::Accepted
            };
            ensure(vc.verdict == expected, || {
                format!("{url}: claim {} reported {}, expected {}", vc.link, vc.verdict.as_str(), expected.as_str())
            })?;
        }
    }
    Ok((entries.len(), urls.len()))
}

/// Every single-bit mutation of one signed annotation, registered under its
/// topic, is rejected by the pipeline.
fn exhaustive_bit_flips() -> Result<usize, String> {
    let creator = id(4242);
    let url = "https://bitflip.example/story";
    let claim = create_annotation(&creator, url, AnnotationBody::Verdict(false), 1).map_err(|e| e.to_string())?;
    let original = claim.to_canonical_bytes().map_err(|e| e.to_string())?;
    let mut store = StoreNetwork::new();
    let origin = NodeId::new("origin");
    let viewer = NodeId::new("viewer");
    store.add_node(origin.clone());
    store.add_node(viewer.clone());
    let mut ledger = Ledger::new(ChainConfig::default());
    let topic = Topic::of_url(url).map_err(|e| e.to_string())?;
    let mut pairs = Vec::new();
    for bit in 0..original.len() * 8 {
        let mut bytes = original.clone();
        bytes[bit / 8] ^= 1 << (bit % 8);
        pairs.push((topic, store.put(&origin, &bytes).map_err(|e| e.to_string())?));
    }
    for chunk in pairs.chunks(100) {
        ledger.register_claims(id(999).address(), chunk.to_vec(), 0).map_err(|e| e.to_string())?;
    }
    let mut t = 0;
    while ledger.pending_count() > 0 {
        t += 1;
        ledger.advance_to(t);
    }
    let whitelist: Whitelist = [creator.address()].into_iter().collect();
    let report = verify_topic(url, &whitelist, &mut store, &viewer, &ledger).map_err(|e| e.to_string())?;
    ensure(report.claims.len() == pairs.len(), || format!("{} of {} mutants listed", report.claims.len(), pairs.len()))?;
    ensure(report.counters.accepted == 0, || format!("{} mutants accepted", report.counters.accepted))?;
    Ok(pairs.len())
}

fn pipeline_properties() -> Check {
    let mut claims = 0;
    for seed in 1..=3 {
        claims += pipeline_corpus(seed, 400)?.0;
    }
    ensure(claims >= 1000, || format!("corpus of {claims} claims is below 1000"))?;
    let mutants = exhaustive_bit_flips()?;
    Ok(format!(
        "{claims} randomized claims over 3 corpora (filter, revocation authority, tamper, economy) plus {mutants} exhaustive bit flips"
    ))
}

fn misbehavior_detection() -> Check {
    let mut notes = Vec::new();
    for name in ["drop_requests.toml", "corrupt_topic.toml", "drop_replicas.toml"] {
        let config = scenario(name);
        let out = sim::run(&config).map_err(|e| format!("{name}: {e}"))?;
        let m = &out.report;
        ensure(m.faults_injected > 0, || format!("{name}: no faults injected"))?;
        let originals: Vec<_> = out.audits.iter().filter(|a| !a.recovery).collect();
        let wrong = originals.iter().filter(|a| a.observed != expected_audit(a.injected)).count();
        ensure(wrong == 0, || format!("{name}: {wrong} of {} audits misclassified", originals.len()))?;
        ensure(m.faults_detected == m.faults_injected, || {
            format!("{name}: detected {} of {} faults", m.faults_detected, m.faults_injected)
        })?;
        ensure(m.complaints_valid == m.complaints_filed && m.complaints_filed == m.faults_injected, || {
            format!("{name}: {} complaints filed, {} valid", m.complaints_filed, m.complaints_valid)
        })?;
        ensure(m.availability_ratio == 1.0, || format!("{name}: availability after recovery {}", m.availability_ratio))?;
        ensure(m.faulty_availability_after == Some(1.0), || {
            format!("{name}: availability of affected claims after recovery {:?}", m.faulty_availability_after)
        })?;
        ensure(out.audits.iter().filter(|a| a.recovery).all(|a| a.observed.as_str() == "ok"), || {
            format!("{name}: a recovery re-issue failed its audit")
        })?;
        notes.push(format!("{}: {}/{} classified", name.trim_end_matches(".toml"), originals.len() - wrong, originals.len()));
    }

    let seeds = 20;
    let mut audits = 0;
    for seed in 0..seeds {
        let config = ScenarioConfig {
            seed,
            n_clients: 12,
            n_publishers: 3,
            threshold: 10,
            workload: WorkloadSpec { n_topics: 6, issues_per_client: 2, ..WorkloadSpec::default() },
            ..ScenarioConfig::default()
        };
        let out = sim::run(&config).map_err(|e| format!("honest seed {seed}: {e}"))?;
        ensure(out.report.complaints_filed == 0, || format!("honest seed {seed}: {} complaints", out.report.complaints_filed))?;
        ensure(out.audits.iter().all(|a| a.observed.as_str() == "ok"), || format!("honest seed {seed}: a fault was reported"))?;
        audits += out.audits.len();
    }
    notes.push(format!("{seeds} honest seeds, {audits} audits, 0 complaints"));
    Ok(notes.join("; "))
}

fn store_availability() -> Check {
    let mut world = Deployment::new(ChainConfig::default());
    let holders: Vec<NodeId> = (0..3).map(|i| NodeId::new(format!("pub-{i}"))).collect();
    for (i, h) in holders.iter().enumerate() {
        let config = PublisherConfig { threshold: 1, ..PublisherConfig::new(id(500 + i as u64), h.0.clone()) };
        world.add_publisher(config, FaultProfile::honest(), i as u64).map_err(|e| e.to_string())?;
    }
    world.settle(10_000);
    let creator = id(1);
    let creator_node = NodeId::new("creator");
    world.add_client_node(&creator_node);
    let mut claims = Vec::new();
    for i in 0..10 {
        let issued = world
            .annotate(&creator, &creator_node, &format!("https://avail.example/{i}"), AnnotationBody::Verdict(i % 2 == 0), &IssuancePath::Publisher("pub-0".into()))
            .map_err(|e| e.to_string())?;
        ensure(matches!(issued.outcome, IssueOutcome::Receipt(_)), || "expected a receipt".into())?;
        claims.push(issued.claim);
    }
    world.settle(10_000);
    world.store.set_online(&creator_node, false).map_err(|e| e.to_string())?;

    let mut fetches = 0;
    let mut reader = 0;
    for claim in &claims {
        let link = claim.link().map_err(|e| e.to_string())?;
        let bytes = claim.to_canonical_bytes().map_err(|e| e.to_string())?;
        let held: BTreeSet<NodeId> = world.store.holders(&link).into_iter().collect();
        ensure(holders.iter().all(|h| held.contains(h)), || format!("{link} is not held by all three publishers: {held:?}"))?;
        // any 2 of 3 offline: exactly one holder left
        for up in &holders {
            for h in &holders {
                world.store.set_online(h, h == up).map_err(|e| e.to_string())?;
            }
            reader += 1;
            let node = NodeId::new(format!("reader-{reader}"));
            world.add_client_node(&node);
            let got = world.store.get(&node, &link).map_err(|e| format!("{link} with only {up} online: {e}"))?;
            ensure(got == bytes, || format!("{link}: wrong bytes served"))?;
            fetches += 1;
        }
        for h in &holders {
            world.store.set_online(h, true).map_err(|e| e.to_string())?;
        }
    }

    // byzantine holder: every subset of online holders, with one of them lying
    let mut refused = 0;
    for liar in &holders {
        world.store.set_byzantine(liar, true).map_err(|e| e.to_string())?;
        for mask in 1u8..8 {
            for (i, h) in holders.iter().enumerate() {
                world.store.set_online(h, mask & (1 << i) != 0).map_err(|e| e.to_string())?;
            }
            for claim in &claims {
                let link = claim.link().map_err(|e| e.to_string())?;
                let bytes = claim.to_canonical_bytes().map_err(|e| e.to_string())?;
                let honest_up = holders.iter().enumerate().any(|(i, h)| h != liar && mask & (1 << i) != 0);
                match world.store.fetch_from(&holders, &link) {
                    Ok(got) => ensure(got == bytes, || format!("{link}: corrupted bytes surfaced"))?,
                    Err(e) => {
                        ensure(!honest_up, || format!("{link}: honest holder online but fetch failed: {e}"))?;
                        refused += 1;
                    }
                }
                reader += 1;
                let node = NodeId::new(format!("reader-{reader}"));
                world.add_client_node(&node);
                if let Ok(got) = world.store.get(&node, &link) {
                    ensure(got == bytes, || format!("{link}: corrupted bytes surfaced through get"))?;
                }
            }
        }
        world.store.set_byzantine(liar, false).map_err(|e| e.to_string())?;
    }
    Ok(format!("{fetches} single-holder fetches succeeded; {refused} liar-only fetches refused, none corrupted"))
}

fn determinism() -> Check {
    let mut lines = Vec::new();
    for name in ["sixty_clients.toml", "drop_replicas.toml"] {
        let config = scenario(name);
        let a = sim::run(&config).map_err(|e| e.to_string())?;
        let b = sim::run(&config).map_err(|e| e.to_string())?;
        let (ca, cb) = (a.report.to_csv(), b.report.to_csv());
        ensure(ca.as_bytes() == cb.as_bytes(), || format!("{name}: metrics CSVs differ"))?;
        ensure(a.trace == b.trace, || format!("{name}: traces differ"))?;
        lines.push(format!("{name} {} bytes", ca.len()));
    }
    Ok(format!("byte-identical CSVs: {}", lines.join(", ")))
}

fn publisher_throughput() -> Check {
    let mut store = StoreNetwork::new();
    let mut ledger = Ledger::new(ChainConfig::default());
    let config = PublisherConfig::new(id(77), "pub-bench");
    let mut node = PublisherNode::new(config, FaultProfile::honest(), 0).map_err(|e| e.to_string())?;
    store.add_node(node.node_id());
    node.register_self(&mut ledger, 0).map_err(|e| e.to_string())?;
    ledger.advance_to(400);
    let n = 500;
    let claims: Vec<Claim> = (0..n)
        .map(|i| create_annotation(&id(i % 20), &format!("https://load.example/{}", i % 50), AnnotationBody::Verdict(i % 3 == 0), 400))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let start = Instant::now();
    for c in &claims {
        node.handle_issuance(&mut store, &mut ledger, c, &c.creator_id, None, 400).map_err(|e| e.to_string())?;
    }
    let rate = n as f64 / start.elapsed().as_secs_f64();
    ensure(rate >= 25.0, || format!("{rate:.1} requests/s is below 25"))?;
    let batches = ledger.confirmed().iter().filter(|t| t.kind == TxKind::RegisterClaims { pairs: vec![] }.label()).count()
        + ledger.pending_count();
    Ok(format!("{rate:.0} issuance requests/s in-process over {n} requests ({batches} ledger tx)"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("cost table reproduction", cost_table),
        ("batching economics", batching_economics),
        ("ledger throughput cap", throughput_cap),
        ("verification pipeline properties", pipeline_properties),
        ("misbehavior detection", misbehavior_detection),
        ("content-store availability", store_availability),
        ("determinism", determinism),
        ("publisher throughput", publisher_throughput),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.2}s): {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
