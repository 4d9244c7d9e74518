//! QWERTY key geometry in normalized keyboard coordinates.
//!
//! Coordinates are fractions of the keyboard's width and height with the
//! origin at the top-left corner and `y` growing downward. A layout is loaded
//! from (or written to) a small versioned JSON document so the service, the
//! decoders and any front end share one description of the keys.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LAYOUT_VERSION: u32 = 1;

const LETTER_ROWS: [&str; 3] = ["qwertyuiop", "asdfghjkl", "zxcvbnm"];

/// Squared distances closer than this are treated as exact ties.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("coordinate ({x}, {y}) is outside the unit square")]
    OutOfBounds { x: f64, y: f64 },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("unknown key id `{0}`")]
    UnknownKey(String),
    #[error("layout is missing letter `{0}`")]
    MissingLetter(char),
    #[error("unsupported layout_version {0}")]
    Version(u32),
    #[error("invalid key `{key}`: {reason}")]
    InvalidKey { key: String, reason: String },
    #[error("keys `{0}` and `{1}` overlap")]
    Overlap(String, String),
    #[error("`{0}` is a control key")]
    ControlKey(Key),
    #[error("kernel sharpness must be positive, got {0}")]
    Kernel(f64),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Validated constructor for positions reported by a touch surface.
    pub fn normalized(x: f64, y: f64) -> Result<Self, LayoutError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(LayoutError::NonFinite);
        }
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(LayoutError::OutOfBounds { x, y });
        }
        Ok(Self { x, y })
    }

    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Point) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn offset(self, dx: f64, dy: f64) -> Point {
        Point::new(self.x + dx, self.y + dy)
    }
}

/// A key identifier: one of the 26 letters or a control key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Key {
    Letter(u8),
    Space,
    Enter,
    Backspace,
}

impl Key {
    pub fn letter(c: char) -> Option<Key> {
        c.is_ascii_lowercase().then_some(Key::Letter(c as u8))
    }

    pub fn as_letter(self) -> Option<char> {
        match self {
            Key::Letter(b) => Some(b as char),
            _ => None,
        }
    }

    pub fn is_control(self) -> bool {
        !matches!(self, Key::Letter(_))
    }

    pub fn id(self) -> String {
        match self {
            Key::Letter(b) => (b as char).to_string(),
            Key::Space => "space".into(),
            Key::Enter => "enter".into(),
            Key::Backspace => "backspace".into(),
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for Key {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "space" => Ok(Key::Space),
            "enter" => Ok(Key::Enter),
            "backspace" => Ok(Key::Backspace),
            _ => {
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) if c.is_ascii_lowercase() => Ok(Key::Letter(c as u8)),
                    _ => Err(LayoutError::UnknownKey(s.to_string())),
                }
            }
        }
    }
}

impl Serialize for Key {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.id())
    }
}

impl<'de> Deserialize<'de> for Key {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hand {
    Left,
    Right,
}

/// Coarse posture bucket: letter row crossed with hand. Six buckets in total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bucket {
    pub row: u8,
    pub hand: Hand,
}

impl Bucket {
    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self.row as usize * 2 + usize::from(self.hand == Hand::Right)
    }

    pub fn from_index(i: usize) -> Bucket {
        Bucket {
            row: (i / 2) as u8,
            hand: if i % 2 == 0 { Hand::Left } else { Hand::Right },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyGeom {
    pub key: Key,
    pub center: Point,
    pub width: f64,
    pub height: f64,
    pub row: u8,
    /// Position within the row, left to right.
    pub column: u8,
    pub hand: Hand,
    pub finger: u8,
}

impl KeyGeom {
    pub fn contains(&self, p: Point) -> bool {
        (p.x - self.center.x).abs() <= self.width / 2.0
            && (p.y - self.center.y).abs() <= self.height / 2.0
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }
}

/// On-disk form of a single key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeySpec {
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
    row: u8,
    hand: Hand,
    finger: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutFile {
    layout_version: u32,
    keys: BTreeMap<String, KeySpec>,
}

/// Probability over the 26 letters plus a "no key" outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftKeyDist {
    pub letters: [f64; 26],
    pub no_key: f64,
}

impl SoftKeyDist {
    pub fn prob(&self, c: char) -> f64 {
        self.letters[(c as u8 - b'a') as usize]
    }

    /// Most probable letter, `None` when the mass sits on the no-key outcome.
    pub fn argmax(&self) -> Option<char> {
        if self.no_key >= 1.0 {
            return None;
        }
        let mut best = 0;
        for i in 1..26 {
            if self.letters[i] > self.letters[best] {
                best = i;
            }
        }
        Some((b'a' + best as u8) as char)
    }

    pub fn total(&self) -> f64 {
        self.letters.iter().sum::<f64>() + self.no_key
    }
}

#[derive(Debug, Clone)]
pub struct KeyLayout {
    /// Sorted by (row, column); nearest-key ties resolve to the earlier entry.
    keys: Vec<KeyGeom>,
    letter_slot: [usize; 26],
    key_pitch: (f64, f64),
}

impl KeyLayout {
    /// Uniform keys one tenth of the keyboard wide, three staggered letter rows
    /// and a control row.
    pub fn qwerty() -> Self {
        let mut keys = BTreeMap::new();
        let stagger_quarters = [1.0, 3.0, 5.0];
        for (row, letters) in LETTER_ROWS.iter().enumerate() {
            let cy = (2.0 * row as f64 + 1.0) / 8.0;
            for (i, c) in letters.chars().enumerate() {
                let cx = (4.0 * i as f64 + stagger_quarters[row]) / 40.0;
                let (hand, finger) = touch_typing_finger(c);
                keys.insert(
                    c.to_string(),
                    KeySpec { cx, cy, w: 0.1, h: 0.25, row: row as u8, hand, finger },
                );
            }
        }
        let mut control = |id: &str, cx: f64, cy: f64, w: f64, row: u8, finger: u8| {
            keys.insert(
                id.to_string(),
                KeySpec { cx, cy, w, h: 0.25, row, hand: Hand::Right, finger },
            );
        };
        control("backspace", 0.9, 0.625, 0.2, 2, 9);
        control("space", 0.5, 0.875, 0.5, 3, 5);
        control("enter", 0.9, 0.875, 0.2, 3, 9);
        Self::from_file(LayoutFile { layout_version: LAYOUT_VERSION, keys })
            .expect("built-in layout is valid")
    }

    pub fn from_json(s: &str) -> Result<Self, LayoutError> {
        Self::from_file(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("layout serializes");
        s.push('\n');
        s
    }

    fn to_file(&self) -> LayoutFile {
        let keys = self
            .keys
            .iter()
            .map(|k| {
                (
                    k.key.id(),
                    KeySpec {
                        cx: k.center.x,
                        cy: k.center.y,
                        w: k.width,
                        h: k.height,
                        row: k.row,
                        hand: k.hand,
                        finger: k.finger,
                    },
                )
            })
            .collect();
        LayoutFile { layout_version: LAYOUT_VERSION, keys }
    }

    fn from_file(file: LayoutFile) -> Result<Self, LayoutError> {
        if file.layout_version != LAYOUT_VERSION {
            return Err(LayoutError::Version(file.layout_version));
        }
        let mut keys = Vec::with_capacity(file.keys.len());
        for (id, spec) in file.keys {
            let key: Key = id.parse()?;
            let invalid = |reason: &str| LayoutError::InvalidKey { key: id.clone(), reason: reason.into() };
            let center = Point::normalized(spec.cx, spec.cy).map_err(|_| invalid("center outside unit square"))?;
            if !(spec.w > 0.0 && spec.h > 0.0) {
                return Err(invalid("non-positive size"));
            }
            if spec.finger > 9 {
                return Err(invalid("finger must be 0-9"));
            }
            if !key.is_control() && spec.row > 2 {
                return Err(invalid("letter rows are 0-2"));
            }
            keys.push(KeyGeom {
                key,
                center,
                width: spec.w,
                height: spec.h,
                row: spec.row,
                column: 0,
                hand: spec.hand,
                finger: spec.finger,
            });
        }
        keys.sort_by(|a, b| (a.row, a.center.x).partial_cmp(&(b.row, b.center.x)).unwrap());
        let mut column = 0u8;
        for i in 0..keys.len() {
            column = if i > 0 && keys[i - 1].row == keys[i].row { column + 1 } else { 0 };
            keys[i].column = column;
        }
        for (i, a) in keys.iter().enumerate() {
            for b in &keys[i + 1..] {
                let ox = (a.width + b.width) / 2.0 - (a.center.x - b.center.x).abs();
                let oy = (a.height + b.height) / 2.0 - (a.center.y - b.center.y).abs();
                if ox > 1e-9 && oy > 1e-9 {
                    return Err(LayoutError::Overlap(a.key.id(), b.key.id()));
                }
            }
        }
        let mut letter_slot = [usize::MAX; 26];
        for (i, k) in keys.iter().enumerate() {
            if let Key::Letter(b) = k.key {
                letter_slot[(b - b'a') as usize] = i;
            }
        }
        if let Some(missing) = letter_slot.iter().position(|&s| s == usize::MAX) {
            return Err(LayoutError::MissingLetter((b'a' + missing as u8) as char));
        }
        let pitch_x = letter_slot.iter().map(|&s| keys[s].width).sum::<f64>() / 26.0;
        let pitch_y = letter_slot.iter().map(|&s| keys[s].height).sum::<f64>() / 26.0;
        Ok(Self { keys, letter_slot, key_pitch: (pitch_x, pitch_y) })
    }

    pub fn keys(&self) -> &[KeyGeom] {
        &self.keys
    }

    pub fn geom(&self, key: Key) -> Option<&KeyGeom> {
        match key {
            Key::Letter(b) if b.is_ascii_lowercase() => Some(&self.keys[self.letter_slot[(b - b'a') as usize]]),
            Key::Letter(_) => None,
            _ => self.keys.iter().find(|k| k.key == key),
        }
    }

    /// Geometry of a letter key. Panics on anything outside `a..=z`.
    pub fn letter(&self, c: char) -> &KeyGeom {
        assert!(c.is_ascii_lowercase(), "not a letter: {c:?}");
        &self.keys[self.letter_slot[(c as u8 - b'a') as usize]]
    }

    pub fn center(&self, c: char) -> Point {
        self.letter(c).center
    }

    /// Mean letter-key width and height.
    pub fn key_pitch(&self) -> (f64, f64) {
        self.key_pitch
    }

    pub fn key_diagonal(&self) -> f64 {
        self.key_pitch.0.hypot(self.key_pitch.1)
    }

    /// Key whose center is closest to `p`; exact ties go to the smaller
    /// (row, column).
    pub fn nearest_key(&self, p: Point) -> Key {
        self.nearest_in(p, self.keys.iter())
    }

    pub fn nearest_letter(&self, p: Point) -> char {
        self.nearest_in(p, self.keys.iter().filter(|k| !k.key.is_control()))
            .as_letter()
            .expect("letters only")
    }

    fn nearest_in<'a>(&self, p: Point, keys: impl Iterator<Item = &'a KeyGeom>) -> Key {
        let mut best: Option<(f64, Key)> = None;
        for k in keys {
            let d = p.dist2(k.center);
            match best {
                Some((bd, _)) if d >= bd - TIE_EPS => {}
                _ => best = Some((d, k.key)),
            }
        }
        best.expect("layout has keys").1
    }

    /// Key a contact activates: a control key when the point falls inside its
    /// bounds, otherwise the nearest key center. Wide control keys would lose
    /// most of their area to letter centers under a pure center rule.
    pub fn key_at(&self, p: Point) -> Key {
        self.keys
            .iter()
            .find(|k| k.key.is_control() && k.contains(p))
            .map(|k| k.key)
            .unwrap_or_else(|| self.nearest_key(p))
    }

    /// Distance beyond which a slip lands on no key at all.
    pub fn no_key_radius(&self) -> f64 {
        0.75 * self.key_diagonal()
    }

    /// Soft nearest-key kernel `q(c|p) ∝ exp(-alpha·|p - center(c)|²)` over the
    /// letters, or the no-key outcome when `p` is farther than
    /// [`no_key_radius`](Self::no_key_radius) from every letter center.
    pub fn soft_key_distribution(&self, p: Point, alpha: f64) -> Result<SoftKeyDist, LayoutError> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(LayoutError::Kernel(alpha));
        }
        let mut logits = [0.0f64; 26];
        let mut min_d2 = f64::INFINITY;
        for (i, logit) in logits.iter_mut().enumerate() {
            let d2 = p.dist2(self.keys[self.letter_slot[i]].center);
            min_d2 = min_d2.min(d2);
            *logit = -alpha * d2;
        }
        let radius = self.no_key_radius();
        if min_d2 > radius * radius {
            return Ok(SoftKeyDist { letters: [0.0; 26], no_key: 1.0 });
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut letters = [0.0f64; 26];
        let mut z = 0.0;
        for (out, logit) in letters.iter_mut().zip(logits) {
            *out = (logit - max).exp();
            z += *out;
        }
        for v in &mut letters {
            *v /= z;
        }
        Ok(SoftKeyDist { letters, no_key: 0.0 })
    }

    pub fn geometry_bucket(&self, key: Key) -> Result<Bucket, LayoutError> {
        if key.is_control() {
            return Err(LayoutError::ControlKey(key));
        }
        let g = self.geom(key).ok_or_else(|| LayoutError::UnknownKey(key.id()))?;
        Ok(Bucket { row: g.row, hand: g.hand })
    }

    pub fn letter_bucket(&self, c: char) -> Bucket {
        let g = self.letter(c);
        Bucket { row: g.row, hand: g.hand }
    }
}

impl Default for KeyLayout {
    fn default() -> Self {
        Self::qwerty()
    }
}

fn touch_typing_finger(c: char) -> (Hand, u8) {
    match c {
        'q' | 'a' | 'z' => (Hand::Left, 0),
        'w' | 's' | 'x' => (Hand::Left, 1),
        'e' | 'd' | 'c' => (Hand::Left, 2),
        'r' | 'f' | 'v' | 't' | 'g' | 'b' => (Hand::Left, 3),
        'y' | 'h' | 'n' | 'u' | 'j' | 'm' => (Hand::Right, 6),
        'i' | 'k' => (Hand::Right, 7),
        'o' | 'l' => (Hand::Right, 8),
        _ => (Hand::Right, 9),
    }
}
