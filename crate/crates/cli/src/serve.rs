use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use clap::Args;
use tenfinger_core::decode::{Decoder, DecodeInput, NgramDecoder, NgramDecoderConfig, RemoteRequest, RemoteResponse, ScoredWord};
use tenfinger_core::pipeline::write_touch_log;
use tenfinger_core::protocol::{ClientMessage, ErrorCode, ServerMessage};
use tenfinger_core::session::{Engine, Session};

use crate::common::{parse_phrases, read, write, ModelArgs};

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8765")]
    pub addr: String,
    #[arg(long, default_value = "ngram")]
    pub backend: String,
    /// Phrase file served as the phrase set named "default".
    #[arg(long)]
    pub phrases: Option<PathBuf>,
    /// Directory for per-session touch and message logs.
    #[arg(long)]
    pub log_dir: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

struct AppState {
    engine: Arc<Engine>,
    layout_json: String,
    log_dir: Option<PathBuf>,
}

pub fn run(args: ServeArgs) -> Result<()> {
    let m = args.model.build()?;
    anyhow::ensure!(m.registry.contains(&args.backend), "unknown backend {:?}", args.backend);
    let layout_json = m.layout.to_json();
    let mut engine = Engine::new(m.registry, m.layout, args.backend.clone());
    if let Some(p) = &args.phrases {
        engine = engine.with_phrase_set("default", parse_phrases(&read(p)?));
    }
    let state = Arc::new(AppState { engine: Arc::new(engine), layout_json, log_dir: args.log_dir });
    let app = Router::new()
        .route("/ws", get(ws_handler))
        .route("/layout.json", get(layout_handler))
        .route("/health", get(|| async { "ok" }))
        .with_state(state);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&args.addr).await.with_context(|| format!("binding {}", args.addr))?;
        eprintln!("listening on ws://{}/ws", listener.local_addr()?);
        axum::serve(listener, app).with_graceful_shutdown(shutdown()).await?;
        Ok(())
    })
}

async fn shutdown() {
    let _ = tokio::signal::ctrl_c().await;
}

async fn layout_handler(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    ([("content-type", "application/json")], state.layout_json.clone())
}

async fn ws_handler(ws: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| handle_socket(socket, state))
}

async fn send(socket: &mut WebSocket, msg: &ServerMessage) -> bool {
    let text = serde_json::to_string(msg).expect("server messages serialize");
    socket.send(Message::Text(text.into())).await.is_ok()
}

/// One task per connection owns its session; each message is handled on the
/// blocking pool so decoding never stalls the reactor.
async fn handle_socket(mut socket: WebSocket, state: Arc<AppState>) {
    let mut session: Option<Session> = None;
    let mut message_log: Vec<serde_json::Value> = Vec::new();
    while let Some(Ok(frame)) = socket.recv().await {
        let text = match frame {
            Message::Text(t) => t.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        let replies = match serde_json::from_str::<ClientMessage>(&text) {
            Err(e) => vec![ServerMessage::error(ErrorCode::BadMessage, e.to_string())],
            Ok(msg) => {
                message_log.push(serde_json::json!({ "dir": "in", "msg": msg }));
                match (session.take(), msg) {
                    (None, ClientMessage::Open { backend, layout, phrase_set, t }) => {
                        let engine = state.engine.clone();
                        let opened = tokio::task::spawn_blocking(move || {
                            Session::open(engine, backend.as_deref(), layout.as_deref(), phrase_set.as_deref(), t)
                        })
                        .await
                        .expect("open does not panic");
                        match opened {
                            Ok((s, reply)) => {
                                session = Some(s);
                                vec![reply]
                            }
                            Err(reply) => vec![reply],
                        }
                    }
                    (None, _) => vec![ServerMessage::error(ErrorCode::NotOpen, "open a session first")],
                    (Some(mut s), msg) => {
                        let (s, replies) = tokio::task::spawn_blocking(move || {
                            let r = s.handle(&msg);
                            (s, r)
                        })
                        .await
                        .expect("session handling does not panic");
                        session = Some(s);
                        replies
                    }
                }
            }
        };
        for r in &replies {
            message_log.push(serde_json::json!({ "dir": "out", "msg": r }));
            if !send(&mut socket, r).await {
                break;
            }
        }
    }
    if let (Some(dir), Some(s)) = (&state.log_dir, &session) {
        let touches = dir.join(format!("{}.touches.jsonl", s.id()));
        let messages = dir.join(format!("{}.messages.jsonl", s.id()));
        let mlog: String = message_log.iter().map(|v| v.to_string() + "\n").collect();
        if let Err(e) = write(&touches, &write_touch_log(s.touch_log())).and_then(|_| write(&messages, &mlog)) {
            eprintln!("session {}: writing logs failed: {e:#}", s.id());
        }
    }
}

pub fn remote_stub(addr: &str, model: &ModelArgs) -> Result<()> {
    let m = model.build()?;
    let decoder = Arc::new(NgramDecoder::new(m.lexicon, m.lm, NgramDecoderConfig { alpha: model.alpha, ..Default::default() }));
    let app = Router::new().route(
        "/decode",
        post(move |Json(req): Json<RemoteRequest>| {
            let d = decoder.clone();
            async move {
                let candidates = match d.decode(&DecodeInput::letters(req.noisy), req.k) {
                    Ok(r) => r.ranked.into_iter().map(|c| ScoredWord { word: c.word, score: c.score }).collect(),
                    Err(_) => Vec::new(),
                };
                Json(RemoteResponse { candidates })
            }
        }),
    );
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        eprintln!("remote decoder on http://{}/decode", listener.local_addr()?);
        axum::serve(listener, app).with_graceful_shutdown(shutdown()).await?;
        Ok(())
    })
}
