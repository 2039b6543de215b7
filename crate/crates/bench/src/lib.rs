//! Fixtures shared by the benchmarks.

use dclaims_core::client::{create_annotation, Whitelist};
use dclaims_core::{AnnotationBody, ChainConfig, Claim, Deployment, FaultProfile, Identity, NodeId, PublisherConfig};

pub const URL: &str = "https://bench.example/article";

pub fn identity(n: u64) -> Identity {
    let mut seed = [3u8; 32];
    seed[..8].copy_from_slice(&n.to_le_bytes());
    Identity::from_seed(seed).expect("valid seed")
}

/// `n` signed verdicts on `url` spread over `creators` identities.
pub fn claims(n: usize, creators: u64, url: &str) -> Vec<Claim> {
    (0..n)
        .map(|i| {
            create_annotation(&identity(i as u64 % creators), url, AnnotationBody::Verdict(i % 2 == 0), i as u64)
                .expect("valid annotation")
        })
        .collect()
}

/// A world with `publishers` honest publishers, registered and settled.
pub fn world(publishers: usize, threshold: usize) -> Deployment {
    let mut d = Deployment::new(ChainConfig::default());
    for i in 0..publishers {
        let config = PublisherConfig { threshold, ..PublisherConfig::new(identity(1000 + i as u64), format!("pub-{i}")) };
        d.add_publisher(config, FaultProfile::honest(), i as u64).expect("valid publisher");
    }
    d.settle(10_000);
    d
}

/// A settled world holding `n` claims on [`URL`] and a whitelist of their creators.
pub fn populated(n: usize) -> (Deployment, Whitelist) {
    let mut d = world(3, 100);
    let node = NodeId::new("client");
    d.add_client_node(&node);
    for claim in claims(n, 10, URL) {
        d.issue_via_publisher(&node, &claim, "pub-0", None).expect("issued");
    }
    d.settle(100_000);
    let whitelist = (0..10).map(|i| identity(i).address()).collect();
    (d, whitelist)
}
