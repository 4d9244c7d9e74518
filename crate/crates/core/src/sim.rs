//! Scripted and randomized typists producing client message streams, used
//! for fixtures, replays and latency checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::layout::{Key, KeyLayout, Point};
use crate::pipeline::{RawTouchEvent, TouchKind};
use crate::protocol::ClientMessage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Landing spread around the key center, as a fraction of key pitch.
    pub sigma_pitch: f64,
    pub dwell_ms: f64,
    /// Mean onset-to-onset interval between keystrokes.
    pub iki_ms: f64,
    pub iki_jitter_ms: f64,
    /// Sampling period of move events while a finger is down.
    pub move_ms: f64,
    /// Per-sample fingertip drift, normalized units.
    pub drift: f64,
    /// Chance that a resting finger touches down just before a keystroke.
    pub cocontact_p: f64,
    /// How far ahead of the keystroke a resting contact lands, ms.
    pub cocontact_lead_ms: (f64, f64),
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sigma_pitch: 0.15,
            dwell_ms: 70.0,
            iki_ms: 230.0,
            iki_jitter_ms: 40.0,
            move_ms: 16.0,
            drift: 0.0015,
            cocontact_p: 0.25,
            cocontact_lead_ms: (10.0, 45.0),
            seed: 0,
        }
    }
}

/// Home positions touched when both hands settle on the surface.
const HOME: [char; 7] = ['a', 's', 'd', 'f', 'j', 'k', 'l'];

pub struct Typist<'a> {
    layout: &'a KeyLayout,
    cfg: SimConfig,
    rng: ChaCha8Rng,
    t: f64,
    seq: u64,
    word_id: i64,
    session: String,
    /// (time, insertion order, message); sorted on output.
    out: Vec<(f64, u64, ClientMessage)>,
    /// Recent intended landing points with their onsets.
    recent: Vec<(Point, f64)>,
}

impl<'a> Typist<'a> {
    pub fn new(layout: &'a KeyLayout, cfg: SimConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self { layout, cfg, rng, t: 0.0, seq: 0, word_id: 0, session: String::new(), out: Vec::new(), recent: Vec::new() }
    }

    pub fn with_session(mut self, session: impl Into<String>) -> Self {
        self.session = session.into();
        self
    }

    pub fn now(&self) -> f64 {
        self.t
    }

    pub fn wait(&mut self, ms: f64) -> &mut Self {
        self.t += ms;
        self
    }

    fn push(&mut self, t: f64, m: ClientMessage) {
        self.out.push((t, self.seq, m));
        self.seq += 1;
    }

    fn event(&mut self, kind: TouchKind, t: f64, p: Point, intent: Option<bool>) {
        let p = Point::new(p.x.clamp(0.0, 1.0), p.y.clamp(0.0, 1.0));
        let mut e = RawTouchEvent::new(kind, t, p);
        e.session = self.session.clone();
        e.word_id = self.word_id;
        e.intent = intent.filter(|_| kind == TouchKind::Down);
        self.push(t, ClientMessage::Touch { e });
    }

    /// One contact: down at `p`, drifting moves, up after `dwell` ms.
    pub fn contact(&mut self, p: Point, onset: f64, dwell: f64, intent: Option<bool>) {
        self.event(TouchKind::Down, onset, p, intent);
        let step = Normal::new(0.0, self.cfg.drift.max(1e-12)).expect("positive spread");
        let mut q = p;
        let mut t = onset + self.cfg.move_ms;
        while t < onset + dwell {
            q = q.offset(step.sample(&mut self.rng), step.sample(&mut self.rng));
            self.event(TouchKind::Move, t, q, None);
            t += self.cfg.move_ms;
        }
        self.event(TouchKind::Up, onset + dwell, q, None);
    }

    fn advance(&mut self) {
        let j = self.cfg.iki_jitter_ms;
        let gap = self.cfg.iki_ms + if j > 0.0 { self.rng.random_range(-j..=j) } else { 0.0 };
        self.t += gap.max(self.cfg.dwell_ms + 1.0);
    }

    /// Intended keystroke exactly at `p`.
    pub fn tap_at(&mut self, p: Point) -> &mut Self {
        let onset = self.t;
        self.contact(p, onset, self.cfg.dwell_ms, Some(true));
        self.recent.push((p, onset));
        self.advance();
        self
    }

    /// A resting finger brushing `p` `lead` ms before the next keystroke.
    pub fn rest_at(&mut self, p: Point, lead: f64) -> &mut Self {
        let onset = self.t - lead;
        self.contact(p, onset, 50.0, Some(false));
        self
    }

    /// All home fingers and a thumb settle together, then lift.
    pub fn place_hands(&mut self) -> &mut Self {
        let mut points: Vec<Point> = HOME.iter().map(|&c| self.layout.center(c)).collect();
        points.push(self.layout.geom(Key::Space).map_or(Point::new(0.5, 0.875), |g| g.center));
        let onset = self.t;
        for (i, p) in points.into_iter().enumerate() {
            self.contact(p, onset + 3.0 * i as f64, 150.0, Some(false));
            self.recent.push((p, onset));
        }
        self.t += 400.0;
        self
    }

    /// Keystroke on letter `c` with Gaussian landing noise, sometimes
    /// preceded by a resting contact near a recent touch.
    pub fn key(&mut self, c: char) -> &mut Self {
        let (px, py) = self.layout.key_pitch();
        let s = self.cfg.sigma_pitch;
        let n = Normal::new(0.0, 1.0).expect("unit normal");
        let p = self.layout.center(c).offset(s * px * n.sample(&mut self.rng), s * py * n.sample(&mut self.rng));
        let horizon = self.t - 900.0;
        self.recent.retain(|&(_, t)| t >= horizon);
        if !self.recent.is_empty() && self.rng.random_bool(self.cfg.cocontact_p) {
            let (q, _) = self.recent[self.rng.random_range(0..self.recent.len())];
            let (lo, hi) = self.cfg.cocontact_lead_ms;
            let lead = self.rng.random_range(lo..=hi);
            self.rest_at(q.offset(0.3 * self.cfg.drift, 0.0), lead);
        }
        self.tap_at(p)
    }

    pub fn word(&mut self, w: &str) -> &mut Self {
        for c in w.chars() {
            self.key(c);
        }
        self
    }

    fn control_key(&mut self, key: Key) -> &mut Self {
        let p = self.layout.geom(key).expect("layout has control keys").center;
        self.tap_at(p);
        self
    }

    pub fn space_key(&mut self) -> &mut Self {
        self.control_key(Key::Space);
        self.word_id += 1;
        self
    }

    pub fn backspace_key(&mut self) -> &mut Self {
        self.control_key(Key::Backspace)
    }

    pub fn message(&mut self, m: ClientMessage) -> &mut Self {
        let t = self.t;
        self.push(t, m);
        self.t += 1.0;
        self
    }

    pub fn space(&mut self) -> &mut Self {
        let t = self.t;
        self.word_id += 1;
        self.message(ClientMessage::Space { t: Some(t) })
    }

    pub fn enter(&mut self) -> &mut Self {
        let t = self.t;
        self.word_id += 1;
        self.message(ClientMessage::Enter { t: Some(t) })
    }

    /// Type a phrase word by word with Space taps between words and Enter at
    /// the end.
    pub fn phrase(&mut self, phrase: &str) -> &mut Self {
        self.place_hands();
        let words: Vec<&str> = phrase.split_whitespace().collect();
        for (i, w) in words.iter().enumerate() {
            self.word(w);
            if i + 1 < words.len() {
                self.space_key();
            }
        }
        self.wait(300.0).enter();
        self.wait(1500.0)
    }

    /// Messages in time order; simultaneous ones keep insertion order.
    pub fn messages(&self) -> Vec<ClientMessage> {
        let mut v: Vec<&(f64, u64, ClientMessage)> = self.out.iter().collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        v.into_iter().map(|(_, _, m)| m.clone()).collect()
    }

    /// Touch events only, in time order.
    pub fn touch_events(&self) -> Vec<RawTouchEvent> {
        self.messages()
            .into_iter()
            .filter_map(|m| match m {
                ClientMessage::Touch { e } => Some(e),
                _ => None,
            })
            .collect()
    }
}

/// A session log typing `phrases` in transcription mode against the named
/// phrase set.
pub fn simulate_session(layout: &KeyLayout, phrases: &[String], phrase_set: &str, cfg: SimConfig) -> Vec<ClientMessage> {
    let mut typist = Typist::new(layout, cfg);
    typist.message(ClientMessage::Open {
        backend: Some("ngram".into()),
        layout: None,
        phrase_set: Some(phrase_set.into()),
        t: Some(0.0),
    });
    typist.wait(500.0);
    for p in phrases {
        typist.phrase(p);
    }
    typist.messages()
}

/// The "eligible" trace: hands settle, then the reach for `l` drifts left
/// onto `k` while the resting finger on `k` touches down 30 ms earlier
/// without travelling. Ends with a tap on the space bar.
pub fn eligible_trace(layout: &KeyLayout) -> Vec<ClientMessage> {
    let cfg = SimConfig { iki_jitter_ms: 0.0, drift: 0.0005, seed: 11, ..SimConfig::default() };
    let mut t = Typist::new(layout, cfg).with_session("eligible");
    t.place_hands();
    let (px, _) = layout.key_pitch();
    t.tap_at(layout.center('e'));
    t.rest_at(layout.center('k'), 30.0);
    t.tap_at(layout.center('l').offset(-0.6 * px, 0.0));
    for c in ['i', 'g', 'i', 'b', 'l', 'e'] {
        t.tap_at(layout.center(c));
    }
    t.space_key();
    t.messages()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_are_time_ordered() {
        let l = KeyLayout::qwerty();
        let mut t = Typist::new(&l, SimConfig { cocontact_p: 1.0, ..SimConfig::default() });
        t.place_hands().word("hello").space_key();
        let ev = t.touch_events();
        assert!(ev.windows(2).all(|w| w[0].t <= w[1].t));
        let downs = ev.iter().filter(|e| e.kind == TouchKind::Down).count();
        let ups = ev.iter().filter(|e| e.kind == TouchKind::Up).count();
        assert_eq!(downs, ups);
        assert!(ev.iter().all(|e| (0.0..=1.0).contains(&e.x) && (0.0..=1.0).contains(&e.y)));
    }

    #[test]
    fn seeded_typists_agree() {
        let l = KeyLayout::qwerty();
        let run = || {
            let mut t = Typist::new(&l, SimConfig { seed: 3, ..SimConfig::default() });
            t.phrase("the quick fox");
            t.messages()
        };
        assert_eq!(run(), run());
    }
}
