//! Drives the JSON API in process, without opening a socket.

use std::error::Error;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use hypoteq::http::{router, AppState};
use hypoteq::session::Session;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: axum::Router, req: Request<Body>) -> Result<(StatusCode, Value), Box<dyn Error>> {
    let resp = app.oneshot(req).await?;
    let status = resp.status();
    let bytes = resp.into_body().collect().await?.to_bytes();
    Ok((status, serde_json::from_slice(&bytes)?))
}

fn post(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

async fn run() -> Result<(), Box<dyn Error>> {
    let app = router(AppState::new(Session::new()));
    for stmt in [
        "create table student(name string)",
        "insert into student values ('adam'), ('bob')",
    ] {
        let (status, body) = call(app.clone(), post("/ddl", json!({ "stmt": stmt }))).await?;
        println!("{status} {body}");
    }
    let (status, body) = call(
        app.clone(),
        post("/query", json!({ "sql": "assume select 'eve' in student select * from student" })),
    )
    .await?;
    println!("{status} {body:#}");
    assert_eq!(body["rows"], json!([["adam"], ["bob"], ["eve"]]));

    let (status, body) = call(app, post("/query", json!({ "sql": "select * from nosuch" }))).await?;
    println!("{status} {body}");
    assert_eq!(status, StatusCode::BAD_REQUEST);
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    tokio::runtime::Builder::new_current_thread().build()?.block_on(run())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
