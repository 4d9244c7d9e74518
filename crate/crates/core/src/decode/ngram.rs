use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{candidate_set, finish, Decoder, DecodeError, DecodeInput, DecodeResult};
use crate::lm::{CharNgramLm, Lexicon};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramDecoderConfig {
    /// Candidates lie within this edit distance of the input.
    pub max_ed: usize,
    /// Log-probability charged per edit.
    pub alpha: f64,
}

impl Default for NgramDecoderConfig {
    fn default() -> Self {
        Self { max_ed: 4, alpha: 6.0 }
    }
}

/// Letter-only decoder: `log P(w) - alpha · ED(u, w)` over the candidate set.
pub struct NgramDecoder {
    lexicon: Arc<Lexicon>,
    lm: Arc<CharNgramLm>,
    /// `log P(w)` per lexicon index.
    logprobs: Vec<f64>,
    pub cfg: NgramDecoderConfig,
}

impl NgramDecoder {
    pub const ID: &'static str = "ngram";

    pub fn new(lexicon: Arc<Lexicon>, lm: Arc<CharNgramLm>, cfg: NgramDecoderConfig) -> Self {
        let logprobs = lexicon.words().iter().map(|w| lm.logprob(w).expect("lexicon words are plain")).collect();
        Self { lexicon, lm, logprobs, cfg }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn logprobs(&self) -> &[f64] {
        &self.logprobs
    }

    /// Score of lexicon word `i` at edit distance `ed`.
    pub fn score(&self, i: usize, ed: usize) -> f64 {
        self.logprobs[i] - self.cfg.alpha * ed as f64
    }

    /// Like [`Decoder::decode`] with an explicit trade-off.
    pub fn decode_with_alpha(&self, u: &str, k: usize, alpha: f64) -> Result<DecodeResult, DecodeError> {
        DecodeInput::letters(u).validate()?;
        let words = self.lexicon.words();
        let scored: Vec<(f64, &str)> = candidate_set(u, &self.lexicon, self.cfg.max_ed)
            .into_iter()
            .map(|(i, ed)| (self.logprobs[i] - alpha * ed as f64, words[i].as_str()))
            .collect();
        let own = self.lm.logprob(u).expect("validated input");
        Ok(finish(scored, k, u, own, Self::ID))
    }
}

impl Decoder for NgramDecoder {
    fn id(&self) -> &str {
        Self::ID
    }

    fn decode(&self, input: &DecodeInput, k: usize) -> Result<DecodeResult, DecodeError> {
        self.decode_with_alpha(&input.letters, k, self.cfg.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::rank_order;
    use crate::edit::levenshtein;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn small() -> NgramDecoder {
        let lex = Lexicon::from_words(["cat", "car", "bat", "cart", "at", "scatter", "dog", "dot"]).unwrap();
        let lm = CharNgramLm::train(&lex, 5, 0.01).unwrap();
        NgramDecoder::new(Arc::new(lex), Arc::new(lm), NgramDecoderConfig::default())
    }

    fn english() -> &'static NgramDecoder {
        static D: OnceLock<NgramDecoder> = OnceLock::new();
        D.get_or_init(|| {
            let lex = Lexicon::parse(include_str!("../../../../data/english-10k.txt")).unwrap();
            let lm = CharNgramLm::train(&lex, 5, 0.01).unwrap();
            NgramDecoder::new(Arc::new(lex), Arc::new(lm), NgramDecoderConfig::default())
        })
    }

    #[test]
    fn exact_word_wins_when_alpha_dominates() {
        let d = small();
        let range = d.logprobs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - d.logprobs.iter().copied().fold(f64::INFINITY, f64::min);
        let r = d.decode_with_alpha("car", 5, range + 1.0).unwrap();
        assert_eq!(r.top().unwrap().word, "car");
        assert!(r.top().unwrap().literal);
    }

    #[test]
    fn ekigible_decodes_to_eligible() {
        let d = english();
        let r = d.decode(&DecodeInput::letters("ekigible"), 5).unwrap();
        assert_eq!(r.top().unwrap().word, "eligible");
        // Oracle: every lexicon word within distance 1 of the input.
        let near: Vec<&String> = d.lexicon().words().iter().filter(|w| levenshtein("ekigible", w) <= 1).collect();
        assert_eq!(near, ["eligible"]);
        let lit = r.literal().unwrap();
        assert_eq!(lit.word, "ekigible");
        assert_eq!(r.ranked.last().unwrap(), lit);
    }

    #[test]
    fn scores_are_non_increasing_and_unique() {
        let d = english();
        for u in ["teh", "qwerty", "hte", "zzz", "informatoin"] {
            let r = d.decode(&DecodeInput::letters(u), 5).unwrap();
            assert!(r.ranked.len() <= 6);
            assert!(r.ranked.windows(2).all(|w| w[0].score >= w[1].score));
            let mut words: Vec<&str> = r.words().collect();
            words.sort_unstable();
            words.dedup();
            assert_eq!(words.len(), r.ranked.len());
        }
    }

    proptest! {
        #[test]
        fn ranking_matches_exhaustive_scoring(u in "[a-z]{1,8}") {
            let d = small();
            let r = d.decode(&DecodeInput::letters(&u), 5).unwrap();
            let words = d.lexicon().words();
            let mut all: Vec<(f64, &str)> = words.iter().enumerate()
                .filter_map(|(i, w)| {
                    let ed = levenshtein(&u, w);
                    (ed <= 4).then(|| (d.logprobs[i] - d.cfg.alpha * ed as f64, w.as_str()))
                })
                .collect();
            all.sort_by(rank_order);
            all.truncate(5);
            let want: Vec<&str> = all.iter().map(|a| a.1).collect();
            let got: Vec<&str> = r.ranked.iter().take(want.len()).map(|c| c.word.as_str()).collect();
            prop_assert_eq!(got, want.clone());
            prop_assert!(r.ranked.len() <= want.len() + 1);
        }

        #[test]
        fn shift_invariance(u in "[a-z]{2,7}", shift in -50.0f64..50.0) {
            let d = small();
            let base = d.decode(&DecodeInput::letters(&u), 5).unwrap();
            let shifted = NgramDecoder {
                lexicon: d.lexicon.clone(),
                lm: d.lm.clone(),
                logprobs: d.logprobs.iter().map(|x| x + shift).collect(),
                cfg: d.cfg.clone(),
            };
            let other = shifted.decode(&DecodeInput::letters(&u), 5).unwrap();
            let n = candidate_set(&u, d.lexicon(), 4).len().min(5);
            let a: Vec<&str> = base.ranked.iter().take(n).map(|c| c.word.as_str()).collect();
            let b: Vec<&str> = other.ranked.iter().take(n).map(|c| c.word.as_str()).collect();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn raising_alpha_never_promotes_higher_distance(u in "[a-z]{2,6}", a1 in 0.0f64..10.0, extra in 0.0f64..10.0) {
            let d = small();
            let words = d.lexicon().words();
            let cands = candidate_set(&u, d.lexicon(), 4);
            let order = |alpha: f64| {
                let mut v: Vec<(f64, &str, usize)> = cands.iter().map(|&(i, ed)| (d.logprobs[i] - alpha * ed as f64, words[i].as_str(), ed)).collect();
                v.sort_by(|x, y| rank_order(&(x.0, x.1), &(y.0, y.1)));
                v
            };
            let lo = order(a1);
            let hi = order(a1 + extra);
            let pos = |v: &Vec<(f64, &str, usize)>, w: &str| v.iter().position(|x| x.1 == w).unwrap();
            for x in &lo {
                for y in &lo {
                    // x trails y at the lower alpha and has the larger distance:
                    // it must still trail at the higher alpha.
                    if x.2 > y.2 && pos(&lo, x.1) > pos(&lo, y.1) {
                        prop_assert!(pos(&hi, x.1) > pos(&hi, y.1));
                    }
                }
            }
        }
    }
}
