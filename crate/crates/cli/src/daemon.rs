//! HTTP daemons over the embedded world.
//!
//! The simulated clock advances one second per `tick_ms` of wall time and the
//! world is written back to the state directory after every tick and every
//! state-changing request. While a daemon runs it owns the state directory.

use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::Router;
use dclaims_core::client::Whitelist;
use dclaims_core::deployment::IssuancePath;
use dclaims_core::service::{client_router, publisher_router, ClientState, PublisherState};
use dclaims_core::{Deployment, Identity};

use crate::error::{CliError, CliResult};
use crate::state::{client_node, StateDir};

fn to_io(e: CliError) -> io::Error {
    io::Error::other(e.to_string())
}

fn serve(router: Router, bind: &str, tick_ms: u64, tick: impl Fn() + Send + 'static) -> CliResult<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::io("tokio runtime", e))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(bind).await.map_err(|e| CliError::io(bind.to_string(), e))?;
        let addr = listener.local_addr().map_err(|e| CliError::io(bind.to_string(), e))?;
        println!("listening on http://{addr}");
        let _ = io::stdout().flush();

        let mut interval = tokio::time::interval(Duration::from_millis(tick_ms.max(1)));
        interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        interval.tick().await;
        tokio::spawn(async move {
            loop {
                interval.tick().await;
                tick();
            }
        });

        axum::serve(listener, router)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::io("http server", e))
    })
}

pub fn serve_publisher(state: StateDir, world: Deployment, index: usize, bind: &str, tick_ms: u64) -> CliResult<()> {
    let world_path = state.world_path();
    let mut inner = PublisherState::new(world, index);
    let save_path = world_path.clone();
    inner.on_change = Some(Arc::new(move |s: &PublisherState| s.world.save(&save_path)));
    let shared = Arc::new(Mutex::new(inner));
    let ticking = shared.clone();
    serve(publisher_router(shared), bind, tick_ms, move || {
        let mut s = ticking.lock().unwrap_or_else(|p| p.into_inner());
        s.world.advance(1);
        if let Err(e) = s.world.save(&world_path) {
            eprintln!("warning: could not save {}: {e}", world_path.display());
        }
    })
}

pub fn serve_client(
    state: StateDir,
    whitelist_flag: Option<PathBuf>,
    identity: Identity,
    whitelist: Whitelist,
    path: IssuancePath,
    bind: &str,
    tick_ms: u64,
) -> CliResult<()> {
    let mut world = state.load_world()?;
    let node = client_node(&identity);
    world.add_client_node(&node);
    let mut inner = ClientState::new(world, identity, node, path);
    inner.whitelist = whitelist;
    inner.receipts = state.receipts()?;
    let hook_state = state.clone();
    inner.on_change = Some(Arc::new(move |s: &ClientState| {
        s.world.save(&hook_state.world_path())?;
        hook_state.save_whitelist(whitelist_flag.as_deref(), &s.whitelist).map_err(to_io)?;
        for r in &s.receipts {
            hook_state.save_receipt(r).map_err(to_io)?;
        }
        Ok(())
    }));
    let shared = Arc::new(Mutex::new(inner));
    let ticking = shared.clone();
    let world_path = state.world_path();
    serve(client_router(shared), bind, tick_ms, move || {
        let mut s = ticking.lock().unwrap_or_else(|p| p.into_inner());
        s.world.advance(1);
        if let Err(e) = s.world.save(&world_path) {
            eprintln!("warning: could not save {}: {e}", world_path.display());
        }
    })
}
