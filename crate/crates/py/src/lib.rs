use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use tenfinger_core::decode::{standard_registry, DecodeInput, NgramDecoderConfig, DEFAULT_K};
use tenfinger_core::edit::levenshtein;
use tenfinger_core::lm::{CharNgramLm, Lexicon};
use tenfinger_core::pipeline::parse_touch_log;
use tenfinger_core::protocol::ClientMessage;
use tenfinger_core::session::{Engine, Session};
use tenfinger_core::synth::{balance_corpus, NoiseModel, SynthConfig, Synthesizer};
use tenfinger_core::{metrics, run_pipeline, KeyLayout, PipelineConfig, Point};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Layout", frozen)]
struct PyLayout(Arc<KeyLayout>);

#[pymethods]
impl PyLayout {
    #[staticmethod]
    fn qwerty() -> Self {
        Self(Arc::new(KeyLayout::qwerty()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        KeyLayout::from_json(text).map(|l| Self(Arc::new(l))).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn nearest_letter(&self, x: f64, y: f64) -> char {
        self.0.nearest_letter(Point::new(x, y))
    }

    fn key_at(&self, x: f64, y: f64) -> String {
        self.0.key_at(Point::new(x, y)).id()
    }

    fn center(&self, letter: char) -> PyResult<(f64, f64)> {
        if !letter.is_ascii_lowercase() {
            return Err(err(format!("{letter:?} is not a lowercase letter")));
        }
        let p = self.0.center(letter);
        Ok((p.x, p.y))
    }
}

/// Lexicon, character model and every local backend, ready to decode or to
/// host sessions.
#[pyclass(name = "Decoder", frozen)]
struct PyDecoder {
    engine: Arc<Engine>,
}

#[pymethods]
impl PyDecoder {
    #[new]
    #[pyo3(signature = (words, alpha = None, layout = None))]
    fn new(words: Vec<String>, alpha: Option<f64>, layout: Option<&PyLayout>) -> PyResult<Self> {
        let lexicon = Arc::new(Lexicon::from_words(words).map_err(err)?);
        let lm = Arc::new(CharNgramLm::train(&lexicon, 5, 0.01).map_err(err)?);
        let layout = layout.map_or_else(|| Arc::new(KeyLayout::qwerty()), |l| l.0.clone());
        let mut cfg = NgramDecoderConfig::default();
        if let Some(a) = alpha {
            cfg.alpha = a;
        }
        let registry = standard_registry(lexicon, lm, layout.clone(), cfg, None);
        Ok(Self { engine: Arc::new(Engine::new(registry, layout, "ngram")) })
    }

    #[staticmethod]
    #[pyo3(signature = (path, alpha = None))]
    fn from_file(path: &str, alpha: Option<f64>) -> PyResult<Self> {
        let lex = Lexicon::load(path).map_err(err)?;
        Self::new(lex.words().to_vec(), alpha, None)
    }

    fn backends(&self) -> Vec<String> {
        self.engine.registry.ids().into_iter().map(String::from).collect()
    }

    /// Ranked `(word, score, literal)` tuples, best first.
    #[pyo3(signature = (letters, backend = "ngram", k = DEFAULT_K, touches = None))]
    fn decode(
        &self,
        letters: &str,
        backend: &str,
        k: usize,
        touches: Option<Vec<(f64, f64)>>,
    ) -> PyResult<Vec<(String, f64, bool)>> {
        let input = match touches {
            Some(t) => DecodeInput::with_touches(letters, t.into_iter().map(|(x, y)| Point::new(x, y)).collect()),
            None => DecodeInput::letters(letters),
        };
        let r = self.engine.registry.decode(&input, backend, k).map_err(err)?;
        Ok(r.ranked.into_iter().map(|c| (c.word, c.score, c.literal)).collect())
    }
}

/// A typing session speaking the JSON message protocol.
#[pyclass(name = "Session")]
struct PySession(Session);

#[pymethods]
impl PySession {
    #[new]
    #[pyo3(signature = (decoder, backend = None))]
    fn new(decoder: &PyDecoder, backend: Option<&str>) -> PyResult<Self> {
        Session::open(decoder.engine.clone(), backend, None, None, Some(0.0))
            .map(|(s, _)| Self(s))
            .map_err(|m| err(serde_json::to_string(&m).unwrap_or_default()))
    }

    /// Handle one client message (JSON) and return the replies as JSON.
    fn handle(&mut self, message: &str) -> PyResult<Vec<String>> {
        let msg: ClientMessage = serde_json::from_str(message).map_err(err)?;
        Ok(self.0.handle(&msg).iter().map(|m| serde_json::to_string(m).expect("messages serialize")).collect())
    }

    fn committed_text(&self) -> String {
        self.0.committed_text()
    }

    fn intermediate(&self) -> String {
        self.0.intermediate().to_string()
    }
}

/// Letters decoded from one word's touch-log JSONL.
#[pyfunction]
#[pyo3(signature = (jsonl, layout = None))]
fn letters_from_touches(jsonl: &str, layout: Option<&PyLayout>) -> PyResult<String> {
    let events = parse_touch_log(jsonl).map_err(err)?;
    let qwerty;
    let layout = match layout {
        Some(l) => l.0.as_ref(),
        None => {
            qwerty = KeyLayout::qwerty();
            &qwerty
        }
    };
    run_pipeline(&events, layout, &PipelineConfig::default()).map(|o| o.letters).map_err(err)
}

/// Balanced noisy-clean pairs `(noisy, gold, realized_ed)` under the default
/// noise model.
#[pyfunction]
#[pyo3(signature = (words, size, seed = 0))]
fn synthesize(words: Vec<String>, size: usize, seed: u64) -> PyResult<Vec<(String, String, usize)>> {
    let lex = Lexicon::from_words(words).map_err(err)?;
    let layout = KeyLayout::qwerty();
    let model = NoiseModel::default_for(&layout);
    let cfg = SynthConfig { seed, ..SynthConfig::default() };
    let (pairs, _) = balance_corpus(&lex, size, &Synthesizer::new(&model, &layout, &cfg)).map_err(err)?;
    Ok(pairs.into_iter().map(|p| (p.noisy, p.gold, p.realized_ed)).collect())
}

#[pyfunction]
fn e_max(length: usize) -> usize {
    tenfinger_core::synth::e_max(length)
}

#[pyfunction]
fn edit_distance(a: &str, b: &str) -> usize {
    levenshtein(a, b)
}

#[pyfunction]
fn wpm(chars: usize, minutes: f64) -> PyResult<f64> {
    metrics::wpm(chars, minutes).map_err(err)
}

#[pyfunction]
fn wer(transcribed: &str, presented: &str) -> PyResult<f64> {
    metrics::wer_text(transcribed, presented).map_err(err)
}

#[pymodule]
fn tenfinger(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLayout>()?;
    m.add_class::<PyDecoder>()?;
    m.add_class::<PySession>()?;
    m.add_function(wrap_pyfunction!(letters_from_touches, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(e_max, m)?)?;
    m.add_function(wrap_pyfunction!(edit_distance, m)?)?;
    m.add_function(wrap_pyfunction!(wpm, m)?)?;
    m.add_function(wrap_pyfunction!(wer, m)?)?;
    Ok(())
}
