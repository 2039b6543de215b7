use proptest::prelude::*;

use super::*;

fn net(ids: &[&str]) -> StoreNetwork {
    let mut net = StoreNetwork::new();
    for id in ids {
        net.add_node(*id);
    }
    net
}

fn n(id: &str) -> NodeId {
    NodeId::from(id)
}

#[test]
fn put_then_get_round_trip() {
    let mut s = net(&["a", "b"]);
    let link = s.put(&n("a"), b"claim bytes").unwrap();
    assert_eq!(s.get(&n("b"), &link).unwrap(), b"claim bytes");
}

#[test]
fn same_bytes_same_link_anywhere() {
    let mut s = net(&["a", "b"]);
    assert_eq!(s.put(&n("a"), b"x").unwrap(), s.put(&n("b"), b"x").unwrap());
    // idempotent on one node
    s.put(&n("a"), b"x").unwrap();
    assert_eq!(s.node(&n("a")).unwrap().used_bytes(), 1);
}

#[test]
fn thirty_kilobyte_claim_occupies_thirty_kilobytes() {
    let mut s = net(&["a"]);
    let blob = vec![b'a'; 30 * 1024];
    let link = s.put(&n("a"), &blob).unwrap();
    assert!(link.matches(&blob));
    assert_eq!(s.node(&n("a")).unwrap().used_bytes(), 30 * 1024);
}

#[test]
fn put_on_offline_node_fails() {
    let mut s = net(&["a"]);
    s.set_online(&n("a"), false).unwrap();
    assert_eq!(s.put(&n("a"), b"x").unwrap_err(), StoreError::NodeOffline(n("a")));
}

#[test]
fn single_holder_serves_everyone() {
    let mut s = net(&["x", "b", "c", "d"]);
    let link = s.put(&n("x"), b"only here").unwrap();
    for id in ["b", "c", "d"] {
        assert_eq!(s.get(&n(id), &link).unwrap(), b"only here");
    }
}

#[test]
fn all_holders_offline_is_not_found() {
    let mut s = net(&["x", "b"]);
    let link = s.put(&n("x"), b"gone").unwrap();
    s.set_online(&n("x"), false).unwrap();
    assert_eq!(s.get(&n("b"), &link).unwrap_err(), StoreError::NotFound(link));
}

#[test]
fn byzantine_holder_is_skipped_for_honest_one() {
    let mut s = net(&["a-byz", "b-honest", "reader"]);
    let link = s.put(&n("a-byz"), b"payload").unwrap();
    s.put(&n("b-honest"), b"payload").unwrap();
    s.set_byzantine(&n("a-byz"), true).unwrap();
    assert_eq!(s.get(&n("reader"), &link).unwrap(), b"payload");
    assert_eq!(s.stats().integrity_violations, 1);
}

#[test]
fn byzantine_sole_holder_yields_integrity_violation_not_bytes() {
    let mut s = net(&["byz", "reader"]);
    let link = s.put(&n("byz"), b"payload").unwrap();
    s.set_byzantine(&n("byz"), true).unwrap();
    assert_eq!(s.get(&n("reader"), &link).unwrap_err(), StoreError::IntegrityViolation(link.clone()));
    assert!(!s.node(&n("reader")).unwrap().holds(&link));
}

#[test]
fn repeated_get_is_served_locally() {
    let mut s = net(&["x", "b"]);
    let link = s.put(&n("x"), b"cache me").unwrap();
    s.get(&n("b"), &link).unwrap();
    let before = s.stats().remote_fetches;
    s.get(&n("b"), &link).unwrap();
    assert_eq!(s.stats().remote_fetches, before);
    // the origin can vanish now
    s.set_online(&n("x"), false).unwrap();
    assert_eq!(s.get(&n("b"), &link).unwrap(), b"cache me");
}

#[test]
fn pin_expires_then_garbage_collected() {
    let mut s = net(&["x", "p"]);
    let link = s.put(&n("x"), b"pinned").unwrap();
    s.pin(&n("p"), &link, 100).unwrap();
    s.advance_to(99);
    assert_eq!(s.collect_garbage(&n("p")).unwrap(), 0);
    s.advance_to(101);
    assert_eq!(s.collect_garbage(&n("p")).unwrap(), 1);
    assert_eq!(s.get_local(&n("p"), &link).unwrap_err(), StoreError::NotFound(link));
}

#[test]
fn pin_on_three_nodes_survives_creator_going_offline() {
    let mut s = net(&["creator", "p1", "p2", "p3", "reader"]);
    let link = s.put(&n("creator"), b"claim").unwrap();
    for p in ["p1", "p2", "p3"] {
        s.pin(&n(p), &link, 30 * 86_400).unwrap();
    }
    s.set_online(&n("creator"), false).unwrap();
    assert_eq!(s.get(&n("reader"), &link).unwrap(), b"claim");
}

#[test]
fn pin_unknown_link_is_not_found() {
    let mut s = net(&["p"]);
    let link = ContentLink::of(b"never stored");
    assert_eq!(s.pin(&n("p"), &link, 10).unwrap_err(), StoreError::NotFound(link));
}

#[test]
fn lru_eviction_spares_pinned_blobs() {
    let mut s = net(&["n"]);
    s.set_capacity(&n("n"), Some(20)).unwrap();
    let a = s.put(&n("n"), &[1u8; 8]).unwrap();
    s.pin(&n("n"), &a, 1000).unwrap();
    let b = s.put(&n("n"), &[2u8; 8]).unwrap();
    let c = s.put(&n("n"), &[3u8; 8]).unwrap();
    let node = s.node(&n("n")).unwrap();
    assert!(node.holds(&a), "pinned blob evicted");
    assert!(!node.holds(&b), "least recently used unpinned blob should go");
    assert!(node.holds(&c));
    assert!(node.used_bytes() <= 20);
}

#[test]
fn dump_and_restore() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = net(&["a", "b"]);
    let l1 = s.put(&n("a"), b"one").unwrap();
    let l2 = s.put(&n("a"), b"two").unwrap();
    assert_eq!(dump_node(&s, &n("a"), dir.path()).unwrap(), 2);
    assert!(dir.path().join(l1.to_string()).exists());
    std::fs::write(dir.path().join("junk"), b"x").unwrap();
    std::fs::write(dir.path().join(ContentLink::of(b"zzz").to_string()), b"not zzz").unwrap();
    assert_eq!(restore_node(&mut s, &n("b"), dir.path()).unwrap(), 2);
    assert_eq!(s.get_local(&n("b"), &l2).unwrap(), b"two");
}

#[test]
fn distinct_content_distinct_links_over_ten_thousand_samples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut seen = std::collections::HashMap::new();
    for _ in 0..10_000 {
        let len = rng.gen_range(0..64);
        let bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let link = ContentLink::of(&bytes);
        if let Some(prev) = seen.insert(link, bytes.clone()) {
            assert_eq!(prev, bytes, "collision between distinct inputs");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Whatever subset of holders is offline or byzantine, a read either
    /// returns exactly the stored bytes or fails; and it succeeds whenever an
    /// honest online holder exists.
    #[test]
    fn reads_are_verified_and_available(
        content in proptest::collection::vec(any::<u8>(), 1..128),
        holders in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..6),
    ) {
        let mut s = StoreNetwork::new();
        s.add_node("reader");
        let mut link = None;
        for (i, _) in holders.iter().enumerate() {
            let id = NodeId::new(format!("h{i}"));
            s.add_node(id.clone());
            link = Some(s.put(&id, &content).unwrap());
        }
        let link = link.unwrap();
        for (i, (online, byzantine)) in holders.iter().enumerate() {
            let id = NodeId::new(format!("h{i}"));
            s.set_online(&id, *online).unwrap();
            s.set_byzantine(&id, *byzantine).unwrap();
        }
        let honest_online = holders.iter().any(|(on, byz)| *on && !*byz);
        match s.get(&NodeId::from("reader"), &link) {
            Ok(bytes) => prop_assert_eq!(bytes, content),
            Err(_) => prop_assert!(!honest_online),
        }
    }
}
