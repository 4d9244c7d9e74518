//! Live typing sessions: touch streaming, decode on Space, suggestions,
//! two-mode Backspace and phrase submission.
//!
//! A [`Session`] is a synchronous state machine. Callers own one per client
//! and feed it [`ClientMessage`]s in order; the returned [`ServerMessage`]s
//! are in causal order.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use crate::decode::{DecodeInput, Registry, DEFAULT_K};
use crate::layout::{Key, KeyLayout};
use crate::metrics::{correction_stats, wer_text, wpm, TextEvent};
use crate::pipeline::{
    cluster_threads, resolve_clusters, HandStateCloud, Ingest, PipelineConfig, PipelineOutput, RawTouchEvent,
    ThreadTracker,
};
use crate::protocol::{ClientMessage, ErrorCode, LatencyRecord, Mark, ServerMessage, Suggestion};

/// Shared, immutable resources for every session.
pub struct Engine {
    pub registry: Registry,
    pub layout: Arc<KeyLayout>,
    pub layout_name: String,
    pub pipeline: PipelineConfig,
    pub phrase_sets: BTreeMap<String, Vec<String>>,
    pub default_backend: String,
    pub k: usize,
    next_id: AtomicU64,
}

impl Engine {
    pub fn new(registry: Registry, layout: Arc<KeyLayout>, default_backend: impl Into<String>) -> Self {
        Self {
            registry,
            layout,
            layout_name: "qwerty".into(),
            pipeline: PipelineConfig::default(),
            phrase_sets: BTreeMap::new(),
            default_backend: default_backend.into(),
            k: DEFAULT_K,
            next_id: AtomicU64::new(0),
        }
    }

    pub fn with_phrase_set(mut self, name: impl Into<String>, phrases: Vec<String>) -> Self {
        self.phrase_sets.insert(name.into(), phrases);
        self
    }

    fn fresh_id(&self) -> String {
        format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed))
    }
}

struct PhraseState {
    phrases: Vec<String>,
    index: usize,
    start: Option<f64>,
    log: Vec<TextEvent>,
    latencies: Vec<LatencyRecord>,
}

impl PhraseState {
    fn current(&self) -> Option<&String> {
        self.phrases.get(self.index)
    }

    fn begin(&mut self, t: Option<f64>) {
        self.start = t;
        self.log.clear();
        self.latencies.clear();
        if let Some(t) = t {
            self.log.push(TextEvent::Start { t });
        }
    }

    fn record(&mut self, e: TextEvent) {
        self.log.push(e);
    }
}

/// The word being typed: its own thread tracker, and the hand-state cloud as
/// it stood when the word began so a cleared word leaves no trace.
struct WordState {
    tracker: ThreadTracker,
    cloud_at_start: HandStateCloud,
    events: usize,
}

pub struct Session {
    id: String,
    backend: String,
    engine: Arc<Engine>,
    word: WordState,
    /// Latest provisional result for the current word.
    current: PipelineOutput,
    words: Vec<String>,
    suggestions: Option<Vec<Suggestion>>,
    phrase: Option<PhraseState>,
    clock: f64,
    word_id: i64,
    touch_log: Vec<RawTouchEvent>,
    latencies: Vec<LatencyRecord>,
    corrections: usize,
}

impl Session {
    /// Open a session from an `open` message's fields.
    pub fn open(
        engine: Arc<Engine>,
        backend: Option<&str>,
        layout: Option<&str>,
        phrase_set: Option<&str>,
        t: Option<f64>,
    ) -> Result<(Self, ServerMessage), ServerMessage> {
        let backend = backend.unwrap_or(&engine.default_backend).to_string();
        if !engine.registry.contains(&backend) {
            return Err(ServerMessage::error(ErrorCode::UnknownBackend, format!("unknown backend {backend:?}")));
        }
        if let Some(l) = layout {
            if l != engine.layout_name {
                return Err(ServerMessage::error(ErrorCode::UnknownLayout, format!("unknown layout {l:?}")));
            }
        }
        let phrase = match phrase_set {
            None => None,
            Some(name) => {
                let phrases = engine
                    .phrase_sets
                    .get(name)
                    .ok_or_else(|| ServerMessage::error(ErrorCode::UnknownPhraseSet, format!("unknown phrase set {name:?}")))?
                    .clone();
                let mut p = PhraseState { phrases, index: 0, start: None, log: Vec::new(), latencies: Vec::new() };
                p.begin(t);
                Some(p)
            }
        };
        let cloud = HandStateCloud::new(&engine.pipeline);
        let session = Self {
            id: engine.fresh_id(),
            backend,
            word: WordState { tracker: ThreadTracker::new(&engine.pipeline), cloud_at_start: cloud, events: 0 },
            current: PipelineOutput::default(),
            words: Vec::new(),
            suggestions: None,
            clock: t.unwrap_or(0.0),
            word_id: 0,
            touch_log: Vec::new(),
            latencies: Vec::new(),
            corrections: 0,
            phrase,
            engine,
        };
        let opened = ServerMessage::Opened {
            session: session.id.clone(),
            phrase: session.phrase.as_ref().and_then(|p| p.current().cloned()),
        };
        Ok((session, opened))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn backend(&self) -> &str {
        &self.backend
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Committed text, each word followed by a space.
    pub fn committed_text(&self) -> String {
        self.words.iter().map(|w| format!("{w} ")).collect()
    }

    pub fn intermediate(&self) -> &str {
        &self.current.letters
    }

    pub fn suggestions(&self) -> Option<&[Suggestion]> {
        self.suggestions.as_deref()
    }

    pub fn latencies(&self) -> &[LatencyRecord] {
        &self.latencies
    }

    pub fn corrections(&self) -> usize {
        self.corrections
    }

    /// Accepted touch events, stamped with this session's id and word index.
    pub fn touch_log(&self) -> &[RawTouchEvent] {
        &self.touch_log
    }

    pub fn current_phrase(&self) -> Option<&str> {
        self.phrase.as_ref().and_then(|p| p.current()).map(String::as_str)
    }

    fn tick(&mut self, t: Option<f64>) {
        if let Some(t) = t {
            self.clock = self.clock.max(t);
        }
    }

    pub fn handle(&mut self, msg: &ClientMessage) -> Vec<ServerMessage> {
        self.tick(msg.t());
        match msg {
            ClientMessage::Open { .. } => vec![ServerMessage::error(ErrorCode::AlreadyOpen, "session already open")],
            ClientMessage::Touch { e } => self.push_touch(e),
            ClientMessage::Space { .. } => self.commit_word(),
            ClientMessage::Backspace { .. } => self.backspace(),
            ClientMessage::Enter { .. } => self.submit_phrase(),
            ClientMessage::Suggest { rank, .. } => vec![self.select_suggestion(*rank)],
        }
    }

    fn provisional(&self) -> (PipelineOutput, HandStateCloud) {
        let mut tracker = self.word.tracker.clone();
        tracker.flush();
        let threads = tracker.take_closed();
        let clustering = cluster_threads(&threads, &self.engine.pipeline);
        let mut cloud = self.word.cloud_at_start.clone();
        let out = resolve_clusters(&clustering, &mut cloud, &self.engine.layout, &self.engine.pipeline);
        (out, cloud)
    }

    fn intermediate_message(&self) -> ServerMessage {
        ServerMessage::Intermediate {
            letters: self.current.letters.clone(),
            marks: self.current.marks.iter().map(|m| Mark { pos: m.pos, intent: m.intent }).collect(),
        }
    }

    fn reset_word(&mut self, cloud: HandStateCloud) {
        self.word = WordState { tracker: ThreadTracker::new(&self.engine.pipeline), cloud_at_start: cloud, events: 0 };
        self.current = PipelineOutput::default();
        self.word_id += 1;
    }

    /// Feed one event through the word's pipeline. A control-key
    /// representative whose contact has just lifted triggers its action.
    pub fn push_touch(&mut self, e: &RawTouchEvent) -> Vec<ServerMessage> {
        let ingest = match self.word.tracker.ingest(e) {
            Ok(i) => i,
            Err(err) => return vec![ServerMessage::error(ErrorCode::Pipeline, err.to_string())],
        };
        self.suggestions = None;
        self.word.events += 1;
        let mut logged = e.clone();
        logged.session = self.id.clone();
        logged.word_id = self.word_id;
        self.touch_log.push(logged);

        let (out, cloud) = self.provisional();
        let control = match ingest {
            Ingest::Closed(id) => out.controls.iter().find(|r| r.thread == id).copied(),
            _ => None,
        };
        let Some(control) = control else {
            self.current = out;
            return vec![self.intermediate_message()];
        };
        // Letters typed before the control key make up the word.
        let mut word_part = out.clone();
        let keep = out.representatives.iter().take_while(|r| r.onset < control.onset).count();
        word_part.representatives.truncate(keep);
        word_part.letters.truncate(keep);
        self.current = word_part;
        let mut msgs = vec![self.intermediate_message()];
        match control.key {
            Key::Space => msgs.extend(self.commit_with_cloud(cloud)),
            Key::Backspace => msgs.extend(self.backspace()),
            Key::Enter => msgs.extend(self.submit_with_cloud(cloud)),
            Key::Letter(_) => unreachable!("controls hold control keys"),
        }
        msgs
    }

    pub fn commit_word(&mut self) -> Vec<ServerMessage> {
        if self.word.events > 0 {
            let (out, cloud) = self.provisional();
            self.current = out;
            self.commit_with_cloud(cloud)
        } else {
            vec![ServerMessage::Ack { of: "space".into() }]
        }
    }

    fn commit_with_cloud(&mut self, cloud: HandStateCloud) -> Vec<ServerMessage> {
        let received = Instant::now();
        let letters = std::mem::take(&mut self.current.letters);
        let touches: Vec<_> = self.current.representatives.iter().map(|r| r.pos).collect();
        self.reset_word(cloud);
        if letters.is_empty() {
            return vec![ServerMessage::Ack { of: "space".into() }];
        }
        let input = DecodeInput::with_touches(letters.clone(), touches);
        let result = match self.engine.registry.decode(&input, &self.backend, self.engine.k) {
            Ok(r) => r,
            Err(err) => return vec![ServerMessage::error(ErrorCode::Decode, err.to_string())],
        };
        let word = result.top().map_or_else(|| letters.clone(), |c| c.word.clone());
        let mut suggestions: Vec<Suggestion> = result
            .ranked
            .iter()
            .enumerate()
            .skip(1)
            .take(self.engine.k.saturating_sub(1))
            .filter(|(i, c)| !(c.literal && *i >= self.engine.k))
            .map(|(i, c)| Suggestion { word: c.word.clone(), rank: i + 1, literal: false })
            .collect();
        let literal_rank = suggestions.last().map_or(2, |s| s.rank + 1);
        suggestions.push(Suggestion { word: letters.clone(), rank: literal_rank, literal: true });

        let decode_ms = result.latency_ms.unwrap_or(0.0);
        let half_network = result.network_ms.unwrap_or(0.0) / 2.0;
        let end_to_end_ms = (received.elapsed().as_secs_f64() * 1e3).max(decode_ms);
        let latency = LatencyRecord { decode_ms, outbound_ms: half_network, inbound_ms: half_network, end_to_end_ms };
        self.latencies.push(latency);
        self.words.push(word.clone());
        self.suggestions = Some(suggestions.clone());
        let t = self.clock;
        if let Some(p) = &mut self.phrase {
            p.latencies.push(latency);
            p.record(TextEvent::Commit { t, word: word.clone() });
        }
        vec![ServerMessage::Commit { word, letters, suggestions, latency, degraded: result.degraded }]
    }

    pub fn select_suggestion(&mut self, rank: usize) -> ServerMessage {
        let Some(sugg) = &self.suggestions else {
            let code = if self.words.is_empty() { ErrorCode::NoSuggestions } else { ErrorCode::StaleSuggestion };
            return ServerMessage::error(code, "no active suggestions");
        };
        let Some(choice) = sugg.iter().find(|s| s.rank == rank) else {
            return ServerMessage::error(ErrorCode::BadRank, format!("no suggestion at rank {rank}"));
        };
        let word = choice.word.clone();
        *self.words.last_mut().expect("suggestions follow a commit") = word.clone();
        self.suggestions = None;
        let t = self.clock;
        if let Some(p) = &mut self.phrase {
            p.record(TextEvent::Replace { t, word: word.clone() });
        }
        ServerMessage::Replace { word }
    }

    /// Clear the word in progress, or remove the last committed word.
    pub fn backspace(&mut self) -> Vec<ServerMessage> {
        let t = self.clock;
        self.suggestions = None;
        if !self.current.letters.is_empty() {
            let cloud = self.word.cloud_at_start.clone();
            self.reset_word(cloud);
            if let Some(p) = &mut self.phrase {
                p.record(TextEvent::ClearWord { t });
            }
            return vec![self.intermediate_message()];
        }
        if self.word.events > 0 {
            // Only suppressed contacts so far: drop them quietly.
            let cloud = self.word.cloud_at_start.clone();
            self.reset_word(cloud);
        }
        match self.words.pop() {
            Some(word) => {
                self.corrections += 1;
                if let Some(p) = &mut self.phrase {
                    p.record(TextEvent::DeleteWord { t });
                }
                vec![ServerMessage::Delete { word }]
            }
            None => vec![ServerMessage::Ack { of: "backspace".into() }],
        }
    }

    /// Commit any word in progress, then score the phrase and load the next.
    pub fn submit_phrase(&mut self) -> Vec<ServerMessage> {
        if self.word.events > 0 {
            let (out, cloud) = self.provisional();
            self.current = out;
            self.submit_with_cloud(cloud)
        } else {
            let cloud = self.word.cloud_at_start.clone();
            self.submit_with_cloud(cloud)
        }
    }

    fn submit_with_cloud(&mut self, cloud: HandStateCloud) -> Vec<ServerMessage> {
        if self.phrase.as_ref().and_then(|p| p.current()).is_none() {
            return vec![ServerMessage::error(ErrorCode::NoPhrase, "no target phrase")];
        }
        let mut msgs = Vec::new();
        if !self.current.letters.is_empty() {
            msgs.extend(self.commit_with_cloud(cloud));
        } else if self.word.events > 0 {
            self.reset_word(cloud);
        }
        let t = self.clock;
        let transcribed = self.words.join(" ");
        let p = self.phrase.as_mut().expect("checked above");
        let presented = p.current().expect("checked above").clone();
        p.record(TextEvent::Submit { t });
        // Without a start marker there is no speed, only accuracy.
        let wpm = p.start.and_then(|s| wpm(transcribed.len(), (t - s) / 60_000.0).ok());
        let wer = wer_text(&transcribed, &presented).expect("phrases are non-empty");
        let cer = match correction_stats(&p.log) {
            Ok(s) => s.cer,
            Err(_) => {
                let mut log = vec![TextEvent::Start { t }];
                log.extend(p.log.iter().cloned());
                correction_stats(&log).map_or(0.0, |s| s.cer)
            }
        };
        let latencies = std::mem::take(&mut p.latencies);
        p.index += 1;
        p.begin(Some(t));
        let next = p.current().cloned();
        self.words.clear();
        self.suggestions = None;
        msgs.push(ServerMessage::PhraseResult { presented, transcribed, wpm, wer, cer, latencies, next });
        msgs
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplayOutcome {
    pub session: Option<String>,
    /// Every server message, in order.
    pub messages: Vec<ServerMessage>,
    /// Transcribed text of each submitted phrase.
    pub transcripts: Vec<String>,
    /// Text committed but not submitted when the log ended.
    pub pending: String,
}

impl ReplayOutcome {
    pub fn commits(&self) -> impl Iterator<Item = (&str, &[Suggestion])> {
        self.messages.iter().filter_map(|m| match m {
            ServerMessage::Commit { word, suggestions, .. } => Some((word.as_str(), suggestions.as_slice())),
            _ => None,
        })
    }

    pub fn decode_ms(&self) -> Vec<f64> {
        self.messages
            .iter()
            .filter_map(|m| match m {
                ServerMessage::Commit { latency, .. } => Some(latency.decode_ms),
                _ => None,
            })
            .collect()
    }
}

/// Run a recorded client message log through a fresh session. The first
/// message must be `open`.
pub fn replay(engine: Arc<Engine>, log: &[ClientMessage]) -> ReplayOutcome {
    let mut outcome = ReplayOutcome::default();
    let mut session: Option<Session> = None;
    for msg in log {
        let replies = match (&mut session, msg) {
            (None, ClientMessage::Open { backend, layout, phrase_set, t }) => {
                match Session::open(engine.clone(), backend.as_deref(), layout.as_deref(), phrase_set.as_deref(), *t) {
                    Ok((s, opened)) => {
                        outcome.session = Some(s.id().to_string());
                        session = Some(s);
                        vec![opened]
                    }
                    Err(e) => vec![e],
                }
            }
            (None, _) => vec![ServerMessage::error(ErrorCode::NotOpen, "open a session first")],
            (Some(s), m) => s.handle(m),
        };
        for r in &replies {
            if let ServerMessage::PhraseResult { transcribed, .. } = r {
                outcome.transcripts.push(transcribed.clone());
            }
        }
        outcome.messages.extend(replies);
    }
    outcome.pending = session.map(|s| s.words().join(" ")).unwrap_or_default();
    outcome
}

/// Parse a JSONL client message log, skipping blank lines.
pub fn parse_message_log(text: &str) -> Result<Vec<ClientMessage>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

pub fn write_message_log(log: &[ClientMessage]) -> String {
    log.iter().map(|m| serde_json::to_string(m).expect("messages serialize") + "\n").collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::{Decoder, NgramDecoder, NgramDecoderConfig};
    use crate::layout::Point;
    use crate::lm::{CharNgramLm, Lexicon};
    use crate::pipeline::TouchKind;
    use crate::protocol::fold_text;

    fn engine() -> Arc<Engine> {
        let lex = Lexicon::from_words(["hello", "help", "held", "hell", "world", "word", "the", "cat"]).unwrap();
        let lm = CharNgramLm::train(&lex, 5, 0.01).unwrap();
        let d: Arc<dyn Decoder> = Arc::new(NgramDecoder::new(Arc::new(lex), Arc::new(lm), NgramDecoderConfig::default()));
        let mut reg = Registry::new();
        reg.register(d);
        Arc::new(
            Engine::new(reg, Arc::new(KeyLayout::qwerty()), "ngram")
                .with_phrase_set("demo", vec!["hello world".into(), "the cat".into()]),
        )
    }

    fn open(e: &Arc<Engine>, phrases: Option<&str>) -> Session {
        Session::open(e.clone(), None, None, phrases, Some(0.0)).map_err(|_| ()).unwrap().0
    }

    struct Taps {
        t: f64,
        log: Vec<ClientMessage>,
    }

    impl Taps {
        fn new() -> Self {
            Self { t: 0.0, log: Vec::new() }
        }

        fn at(&mut self, p: Point) -> &mut Self {
            self.t += 250.0;
            self.log.push(ClientMessage::Touch { e: RawTouchEvent::new(TouchKind::Down, self.t, p) });
            self.log.push(ClientMessage::Touch { e: RawTouchEvent::new(TouchKind::Up, self.t + 60.0, p) });
            self
        }

        fn word(&mut self, w: &str) -> &mut Self {
            let l = KeyLayout::qwerty();
            for c in w.chars() {
                self.at(l.center(c));
            }
            self
        }

        fn msg(&mut self, m: ClientMessage) -> &mut Self {
            self.log.push(m);
            self
        }
    }

    fn run(s: &mut Session, log: &[ClientMessage]) -> Vec<ServerMessage> {
        log.iter().flat_map(|m| s.handle(m)).collect()
    }

    #[test]
    fn fresh_sessions() {
        let e = engine();
        let (a, b) = (open(&e, None), open(&e, None));
        assert_ne!(a.id(), b.id());
        assert_eq!(a.committed_text(), "");
        let err = Session::open(e.clone(), Some("nope"), None, None, None).err().unwrap();
        assert!(matches!(err, ServerMessage::Error { code: ErrorCode::UnknownBackend, .. }));
        let err = Session::open(e, None, Some("dvorak"), None, None).err().unwrap();
        assert!(matches!(err, ServerMessage::Error { code: ErrorCode::UnknownLayout, .. }));
    }

    #[test]
    fn single_tap_shows_letter() {
        let e = engine();
        let mut s = open(&e, None);
        let out = run(&mut s, &Taps::new().word("h").log);
        assert_eq!(out.last().unwrap(), &ServerMessage::Intermediate {
            letters: "h".into(),
            marks: vec![Mark { pos: KeyLayout::qwerty().center('h'), intent: true }],
        });
    }

    #[test]
    fn near_synchronous_pair_gives_one_letter() {
        let e = engine();
        let mut s = open(&e, None);
        let l = KeyLayout::qwerty();
        let (g, h) = (l.center('g'), l.center('h'));
        for ev in [
            RawTouchEvent::new(TouchKind::Down, 0.0, g),
            RawTouchEvent::new(TouchKind::Down, 40.0, h),
            RawTouchEvent::new(TouchKind::Up, 80.0, g),
            RawTouchEvent::new(TouchKind::Up, 110.0, h),
        ] {
            s.push_touch(&ev);
        }
        assert_eq!(s.intermediate().len(), 1);
    }

    #[test]
    fn space_key_commits() {
        let e = engine();
        let mut s = open(&e, None);
        let mut taps = Taps::new();
        taps.word("wrld").at(Point::new(0.5, 0.875));
        let out = run(&mut s, &taps.log);
        let commit = out.iter().find(|m| matches!(m, ServerMessage::Commit { .. })).unwrap();
        let ServerMessage::Commit { word, letters, suggestions, latency, .. } = commit else { unreachable!() };
        assert_eq!(letters, "wrld");
        assert_eq!(word, "world");
        assert!(latency.is_valid());
        let last = suggestions.last().unwrap();
        assert!(last.literal && last.word == "wrld");
        assert_eq!(suggestions[0].rank, 2);
        assert!(suggestions.len() <= 5);
        assert_eq!(s.committed_text(), "world ");
        assert_eq!(s.intermediate(), "");
    }

    #[test]
    fn suggestions_replace_and_go_stale() {
        let e = engine();
        let mut s = open(&e, None);
        run(&mut s, &Taps::new().word("helo").msg(ClientMessage::Space { t: None }).log);
        let sugg = s.suggestions().unwrap().to_vec();
        let lit = sugg.iter().find(|x| x.literal).unwrap();
        assert_eq!(s.select_suggestion(lit.rank), ServerMessage::Replace { word: "helo".into() });
        assert_eq!(s.words(), ["helo"]);
        assert!(matches!(s.select_suggestion(2), ServerMessage::Error { code: ErrorCode::StaleSuggestion, .. }));

        run(&mut s, &Taps::new().word("wrld").msg(ClientMessage::Space { t: None }).log);
        let second = s.suggestions().unwrap()[0].clone();
        assert_eq!(second.rank, 2);
        assert_eq!(s.select_suggestion(2), ServerMessage::Replace { word: second.word.clone() });
        assert_eq!(s.words().last().unwrap(), &second.word);
        assert!(s.suggestions().is_none());
    }

    #[test]
    fn selection_after_touch_is_stale() {
        let e = engine();
        let mut s = open(&e, None);
        run(&mut s, &Taps::new().word("helo").msg(ClientMessage::Space { t: None }).log);
        s.push_touch(&RawTouchEvent::new(TouchKind::Down, 5000.0, Point::new(0.3, 0.4)));
        assert!(matches!(s.select_suggestion(2), ServerMessage::Error { code: ErrorCode::StaleSuggestion, .. }));
    }

    #[test]
    fn backspace_modes() {
        let e = engine();
        let mut s = open(&e, None);
        assert_eq!(s.backspace(), [ServerMessage::Ack { of: "backspace".into() }]);
        assert_eq!(s.backspace(), [ServerMessage::Ack { of: "backspace".into() }]);
        run(&mut s, &Taps::new().word("the").msg(ClientMessage::Space { t: None }).log);
        let mut more = Taps::new();
        more.t = 10_000.0;
        run(&mut s, &more.word("ca").log);
        assert_eq!(s.intermediate(), "ca");
        let out = s.backspace();
        assert_eq!(out, [ServerMessage::Intermediate { letters: String::new(), marks: vec![] }]);
        assert_eq!(s.words(), ["the"]);
        assert_eq!(s.backspace(), [ServerMessage::Delete { word: "the".into() }]);
        assert_eq!(s.committed_text(), "");
        assert_eq!(s.corrections(), 1);
    }

    #[test]
    fn mid_word_clear_restores_cloud() {
        let e = engine();
        let mut s = open(&e, None);
        run(&mut s, &Taps::new().word("the").msg(ClientMessage::Space { t: None }).log);
        let before = s.word.cloud_at_start.clone();
        let mut more = Taps::new();
        more.t = 10_000.0;
        run(&mut s, &more.word("ca").log);
        s.backspace();
        assert_eq!(s.word.cloud_at_start, before);
    }

    #[test]
    fn empty_space_is_acknowledged() {
        let e = engine();
        let mut s = open(&e, None);
        assert_eq!(s.commit_word(), [ServerMessage::Ack { of: "space".into() }]);
    }

    #[test]
    fn phrases_are_scored() {
        let e = engine();
        let mut s = open(&e, Some("demo"));
        assert_eq!(s.current_phrase(), Some("hello world"));
        let mut taps = Taps::new();
        taps.word("hello").msg(ClientMessage::Space { t: None }).word("world").msg(ClientMessage::Enter { t: Some(6000.0) });
        let out = run(&mut s, &taps.log);
        let ServerMessage::PhraseResult { transcribed, wer, cer, wpm, next, latencies, .. } = out.last().unwrap() else {
            panic!("{out:?}")
        };
        assert_eq!(transcribed, "hello world");
        assert_eq!((*wer, *cer), (0.0, 0.0));
        assert_eq!(latencies.len(), 2);
        // 11 characters over 6 seconds.
        assert!((wpm.unwrap() - 11.0 / 5.0 / 0.1).abs() < 1e-9);
        assert_eq!(next.as_deref(), Some("the cat"));
        assert_eq!(s.committed_text(), "");

        let out = s.submit_phrase();
        let ServerMessage::PhraseResult { wer, .. } = &out[0] else { panic!() };
        assert_eq!(*wer, 1.0);
        assert!(matches!(s.submit_phrase()[0], ServerMessage::Error { code: ErrorCode::NoPhrase, .. }));
        let mut plain = open(&e, None);
        assert!(matches!(plain.submit_phrase()[0], ServerMessage::Error { code: ErrorCode::NoPhrase, .. }));
    }

    #[test]
    fn replay_is_deterministic_and_foldable() {
        let e = engine();
        let mut taps = Taps::new();
        taps.msg(ClientMessage::Open { backend: None, layout: None, phrase_set: None, t: Some(0.0) })
            .word("helo")
            .msg(ClientMessage::Space { t: None })
            .word("wrld")
            .msg(ClientMessage::Space { t: None })
            .msg(ClientMessage::Suggest { rank: 2, t: None })
            .word("tge")
            .msg(ClientMessage::Backspace { t: None })
            .msg(ClientMessage::Backspace { t: None });
        let a = replay(e.clone(), &taps.log);
        let b = replay(e, &taps.log);
        assert_eq!(a.pending, b.pending);
        assert_eq!(a.commits().collect::<Vec<_>>(), b.commits().collect::<Vec<_>>());
        assert_eq!(fold_text(&a.messages).join(" "), a.pending);
        let round = parse_message_log(&write_message_log(&taps.log)).unwrap();
        assert_eq!(round, taps.log);
    }
}
