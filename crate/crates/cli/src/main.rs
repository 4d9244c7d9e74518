mod common;
mod serve;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tenfinger_core::decode::{DecodeInput, NgramDecoder, NgramDecoderConfig, DEFAULT_K};
use tenfinger_core::metrics::{self, interval_study, topk_report, IntervalStudyConfig, TrialRecord, DEFAULT_KS};
use tenfinger_core::pipeline::{parse_touch_log, write_touch_log};
use tenfinger_core::protocol::ClientMessage;
use tenfinger_core::session::{parse_message_log, replay, write_message_log, Engine};
use tenfinger_core::sim::{eligible_trace, simulate_session, SimConfig};
use tenfinger_core::synth::{
    balance_corpus, fit_noise_model, parse_corpus_tsv, write_corpus_tsv, NoiseModel, NoisePair, SynthConfig,
    Synthesizer,
};
use tenfinger_core::PipelineConfig;

use common::{parse_gold, parse_phrases, read, to_json, write, ModelArgs};

#[derive(Parser, Debug)]
#[command(name = "tenfinger", version, about = "Hands-down ten-finger typing: decoding, synthesis and evaluation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Replay a touch log (or client message log) through a typing session.
    Replay {
        /// Touch-log JSONL.
        #[arg(long, conflicts_with = "messages")]
        log: Option<PathBuf>,
        /// Client message JSONL, as written by `serve --log-dir` or `simulate`.
        #[arg(long)]
        messages: Option<PathBuf>,
        #[arg(long, default_value = "ngram")]
        backend: String,
        #[arg(long)]
        phrases: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Generate a balanced synthetic noisy-clean corpus.
    Synth {
        #[arg(long, default_value = common::DEFAULT_LEXICON)]
        lexicon: PathBuf,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Fitted noise model JSON; layout defaults otherwise.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        layout: Option<PathBuf>,
        /// Add a column with the simulated touch point behind every letter.
        #[arg(long)]
        touches: bool,
        /// Write the balance report here as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fit a noise model from annotated touch logs.
    Fit {
        #[arg(long)]
        logs: PathBuf,
        /// TSV rows session, word_id, gold word.
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        layout: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decode every noisy word of a corpus.
    Decode {
        #[arg(long, default_value = "ngram")]
        backend: String,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Top-k report from decoder output and its corpus.
    Eval {
        #[arg(long)]
        decoded: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-bucket and per-distance tables.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// WebSocket typing service.
    Serve(serve::ServeArgs),
    /// Share of short inter-onset gaps between intentional contacts.
    IntervalStudy {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long, default_value_t = 100.0)]
        threshold: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        jitter: Option<f64>,
    },
    /// Grid-search the per-edit penalty of the letter-only decoder.
    TuneAlpha {
        /// Tuning corpus; synthesized from the lexicon when omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 5000)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,1.5,2,2.5,3,3.5,4,5,6,8,10")]
        grid: Vec<f64>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Produce simulated session and fixture logs.
    Simulate {
        #[command(subcommand)]
        what: SimulateCmd,
    },
    /// Minimal remote decoder backed by the letter-only decoder.
    RemoteStub {
        #[arg(long, default_value = "127.0.0.1:8808")]
        addr: String,
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Subcommand, Debug)]
enum SimulateCmd {
    /// A client message log typing each phrase in transcription mode.
    Session {
        #[arg(long)]
        phrases: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "default")]
        phrase_set: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Landing spread as a fraction of key pitch.
        #[arg(long, default_value_t = SimConfig::default().sigma_pitch)]
        sigma: f64,
        /// Also write the touch events alone in touch-log form.
        #[arg(long)]
        touch_log: Option<PathBuf>,
    },
    /// The "eligible" touch trace.
    Eligible {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct DecodedLine {
    input: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold: Option<String>,
    ranked: Vec<String>,
    #[serde(default)]
    degraded: bool,
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Replay { log, messages, backend, phrases, model } => cmd_replay(log, messages, backend, phrases, model),
        Cmd::Synth { lexicon, size, seed, out, model, layout, touches, report } => {
            let lex = common::load_lexicon(&lexicon)?;
            let layout = common::load_layout(layout.as_deref())?;
            let noise = match model {
                Some(p) => NoiseModel::from_json(&read(&p)?)?,
                None => NoiseModel::default_for(&layout),
            };
            let cfg = SynthConfig { seed, ..SynthConfig::default() };
            let synth = Synthesizer::new(&noise, &layout, &cfg);
            let (pairs, rep) = balance_corpus(&lex, size, &synth)?;
            write(&out, &write_corpus_tsv(&pairs, touches))?;
            if let Some(r) = report {
                write(&r, &to_json(&rep))?;
            }
            for r in &rep.regimes {
                eprintln!("{}: bins {:?} (max deviation {:.4})", r.regime, r.bins, r.max_deviation());
            }
            if !rep.complete {
                bail!("rejection budget exhausted after {} pairs", pairs.len());
            }
            Ok(())
        }
        Cmd::Fit { logs, gold, out, layout, seed } => {
            let events = parse_touch_log(&read(&logs)?).context("parsing touch log")?;
            let gold = parse_gold(&read(&gold)?)?;
            let layout = common::load_layout(layout.as_deref())?;
            let (model, report) = fit_noise_model(&events, &gold, &layout, &PipelineConfig::default(), seed)?;
            write(&out, &model.to_json())?;
            eprintln!("{}", to_json(&report));
            Ok(())
        }
        Cmd::Decode { backend, corpus, out, k, model } => cmd_decode(&backend, &corpus, &out, k, &model),
        Cmd::Eval { decoded, corpus, out, csv } => cmd_eval(&decoded, &corpus, &out, csv.as_deref()),
        Cmd::Serve(args) => serve::run(args),
        Cmd::IntervalStudy { logs, threshold, reps, seed, jitter } => {
            let events = parse_touch_log(&read(&logs)?).context("parsing touch log")?;
            let cfg = IntervalStudyConfig { threshold_ms: threshold, reps, seed, jitter_ms: jitter };
            let r = interval_study(&events, &cfg)?;
            print!("{}", to_json(&serde_json::json!({
                "result": r,
                "reference": {
                    "fraction": metrics::reference::INTERVAL_FRACTION,
                    "ci": metrics::reference::INTERVAL_CI,
                    "median_gap_ms": metrics::reference::MEDIAN_GAP_MS,
                },
            })));
            Ok(())
        }
        Cmd::TuneAlpha { corpus, size, seed, grid, model } => cmd_tune_alpha(corpus, size, seed, &grid, &model),
        Cmd::Simulate { what } => match what {
            SimulateCmd::Session { phrases, out, phrase_set, seed, sigma, touch_log } => {
                let phrases = parse_phrases(&read(&phrases)?);
                let layout = tenfinger_core::KeyLayout::qwerty();
                let log = simulate_session(&layout, &phrases, &phrase_set, SimConfig { seed, sigma_pitch: sigma, ..SimConfig::default() });
                write(&out, &write_message_log(&log))?;
                if let Some(p) = touch_log {
                    let touches: Vec<_> = log
                        .iter()
                        .filter_map(|m| match m {
                            ClientMessage::Touch { e } => Some(e.clone()),
                            _ => None,
                        })
                        .collect();
                    write(&p, &write_touch_log(&touches))?;
                }
                Ok(())
            }
            SimulateCmd::Eligible { out } => {
                let log = eligible_trace(&tenfinger_core::KeyLayout::qwerty());
                let touches: Vec<_> = log
                    .into_iter()
                    .filter_map(|m| match m {
                        ClientMessage::Touch { e } => Some(e),
                        _ => None,
                    })
                    .collect();
                write(&out, &write_touch_log(&touches))
            }
        },
        Cmd::RemoteStub { addr, model } => serve::remote_stub(&addr, &model),
    }
}

fn cmd_replay(
    log: Option<PathBuf>,
    messages: Option<PathBuf>,
    backend: String,
    phrases: Option<PathBuf>,
    model: ModelArgs,
) -> Result<()> {
    let m = model.build()?;
    let mut engine = Engine::new(m.registry, m.layout, backend.clone());
    if let Some(p) = &phrases {
        engine = engine.with_phrase_set("default", parse_phrases(&read(p)?));
    }
    let engine = Arc::new(engine);
    let msgs = match (log, messages) {
        (_, Some(p)) => parse_message_log(&read(&p)?).context("parsing message log")?,
        (Some(p), None) => {
            // One session per log session; a Space closes every word.
            let events = parse_touch_log(&read(&p)?).context("parsing touch log")?;
            let mut by_session: BTreeMap<String, Vec<ClientMessage>> = BTreeMap::new();
            let mut last_word: BTreeMap<String, i64> = BTreeMap::new();
            for e in events {
                let msgs = by_session.entry(e.session.clone()).or_insert_with(|| {
                    vec![ClientMessage::Open { backend: Some(backend.clone()), layout: None, phrase_set: None, t: Some(e.t) }]
                });
                if last_word.get(&e.session).is_some_and(|&w| w != e.word_id) {
                    msgs.push(ClientMessage::Space { t: None });
                }
                last_word.insert(e.session.clone(), e.word_id);
                msgs.push(ClientMessage::Touch { e });
            }
            for (session, mut msgs) in by_session {
                msgs.push(ClientMessage::Space { t: None });
                let out = replay(engine.clone(), &msgs);
                for msg in &out.messages {
                    if !matches!(msg, tenfinger_core::protocol::ServerMessage::Intermediate { .. }) {
                        println!("{}", serde_json::to_string(&serde_json::json!({ "session": session, "msg": msg }))?);
                    }
                }
                println!("{}", serde_json::to_string(&serde_json::json!({ "session": session, "text": out.pending }))?);
            }
            return Ok(());
        }
        (None, None) => bail!("pass --log or --messages"),
    };
    let out = replay(engine, &msgs);
    for t in &out.transcripts {
        println!("{t}");
    }
    if !out.pending.is_empty() {
        println!("{}", out.pending);
    }
    Ok(())
}

fn cmd_decode(backend: &str, corpus: &std::path::Path, out: &std::path::Path, k: usize, model: &ModelArgs) -> Result<()> {
    let m = model.build()?;
    anyhow::ensure!(m.registry.contains(backend), "unknown backend {backend:?}; have {:?}", m.registry.ids());
    let pairs = parse_corpus_tsv(&read(corpus)?)?;
    let lines: Vec<Result<DecodedLine>> = pairs
        .par_iter()
        .map(|p| {
            let input = match &p.touches {
                Some(t) => DecodeInput::with_touches(p.noisy.clone(), t.clone()),
                None => DecodeInput::letters(p.noisy.clone()),
            };
            let r = m.registry.decode(&input, backend, k)?;
            Ok(DecodedLine {
                input: p.noisy.clone(),
                gold: Some(p.gold.clone()),
                ranked: r.words().map(str::to_string).collect(),
                degraded: r.degraded,
            })
        })
        .collect();
    let mut text = String::new();
    for l in lines {
        text.push_str(&serde_json::to_string(&l?)?);
        text.push('\n');
    }
    write(out, &text)
}

fn trials(decoded: &[DecodedLine], corpus: &[NoisePair]) -> Result<Vec<TrialRecord>> {
    anyhow::ensure!(decoded.len() == corpus.len(), "{} decoded lines for {} corpus rows", decoded.len(), corpus.len());
    decoded
        .iter()
        .zip(corpus)
        .enumerate()
        .map(|(i, (d, p))| {
            anyhow::ensure!(d.input == p.noisy, "line {}: decoded input {:?} is not corpus input {:?}", i + 1, d.input, p.noisy);
            Ok(TrialRecord { gold: p.gold.clone(), ranked: d.ranked.clone(), input_ed: p.realized_ed })
        })
        .collect()
}

fn cmd_eval(decoded: &std::path::Path, corpus: &std::path::Path, out: &std::path::Path, csv: Option<&std::path::Path>) -> Result<()> {
    let lines: Vec<DecodedLine> = read(decoded)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()
        .context("parsing decoder output")?;
    let pairs = parse_corpus_tsv(&read(corpus)?)?;
    let report = topk_report(&trials(&lines, &pairs)?, &DEFAULT_KS)?;
    let reference = serde_json::json!({
        "ngram_top1": metrics::reference::NGRAM_TOP1,
        "bayes_top1": metrics::reference::BAYES_TOP1,
        "neural_top1": metrics::reference::NEURAL_TOP1,
    });
    write(out, &to_json(&serde_json::json!({ "report": report, "reference": reference })))?;
    if let Some(csv) = csv {
        let mut text = String::from("table,group,n,em1,em2,em3,em5,avg_ed\n");
        let row = |table: &str, group: String, b: &metrics::Breakdown| {
            format!(
                "{table},{group},{},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
                b.n,
                b.em_at(1),
                b.em_at(2),
                b.em_at(3),
                b.em_at(5),
                b.avg_ed
            )
        };
        text.push_str(&row("overall", "all".into(), &report.overall));
        for (b, r) in &report.by_bucket {
            text.push_str(&row("length", b.label().into(), r));
        }
        for (e, r) in &report.by_input_ed {
            text.push_str(&row("input_ed", e.to_string(), r));
        }
        write(csv, &text)?;
    }
    eprintln!(
        "EM@1 {:.4}  EM@2 {:.4}  EM@3 {:.4}  EM@5 {:.4}  AvgED {:.4}",
        report.overall.em_at(1),
        report.overall.em_at(2),
        report.overall.em_at(3),
        report.overall.em_at(5),
        report.overall.avg_ed
    );
    Ok(())
}

fn cmd_tune_alpha(corpus: Option<PathBuf>, size: usize, seed: u64, grid: &[f64], model: &ModelArgs) -> Result<()> {
    let m = model.build()?;
    let pairs = match corpus {
        Some(p) => parse_corpus_tsv(&read(&p)?)?,
        None => {
            let noise = NoiseModel::default_for(&m.layout);
            let cfg = SynthConfig { seed, ..SynthConfig::default() };
            balance_corpus(&m.lexicon, size, &Synthesizer::new(&noise, &m.layout, &cfg))?.0
        }
    };
    let dec = NgramDecoder::new(m.lexicon.clone(), m.lm.clone(), NgramDecoderConfig::default());
    let mut rows = Vec::new();
    for &alpha in grid {
        let trials: Vec<TrialRecord> = pairs
            .par_iter()
            .map(|p| {
                let r = dec.decode_with_alpha(&p.noisy, DEFAULT_K, alpha).expect("corpus inputs are plain words");
                TrialRecord { gold: p.gold.clone(), ranked: r.words().map(str::to_string).collect(), input_ed: p.realized_ed }
            })
            .collect();
        let rep = topk_report(&trials, &DEFAULT_KS)?;
        eprintln!("alpha {alpha:>5}: EM@1 {:.4}  EM@5 {:.4}", rep.overall.em_at(1), rep.overall.em_at(5));
        rows.push(serde_json::json!({ "alpha": alpha, "em1": rep.overall.em_at(1), "em5": rep.overall.em_at(5) }));
    }
    let best = rows
        .iter()
        .max_by(|a, b| a["em1"].as_f64().unwrap_or(0.0).total_cmp(&b["em1"].as_f64().unwrap_or(0.0)))
        .cloned();
    let lp = dec.logprobs();
    let dominance = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max) - lp.iter().copied().fold(f64::INFINITY, f64::min);
    print!("{}", to_json(&serde_json::json!({ "pairs": pairs.len(), "grid": rows, "best": best, "ed0_dominance_alpha": dominance })));
    Ok(())
}
