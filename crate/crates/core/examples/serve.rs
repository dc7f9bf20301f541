//! Serve a specification to the browser viewer.
//!
//! Run with `cargo run --example serve -- corpus/memberbook_bad.vdmsl 8080`
//! and then `curl localhost:8080/document`.

use std::sync::Arc;

use vdmslice::api::{serve, AppState};

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let file = args.next().unwrap_or_else(|| "corpus/memberbook_bad.vdmsl".into());
    let port: u16 = args.next().map_or(8080, |p| p.parse().expect("port is a number"));
    let source = std::fs::read_to_string(&file)?;

    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    println!("serving {file} on http://{}", listener.local_addr()?);
    serve(listener, Arc::new(AppState::new(file, source))).await
}
