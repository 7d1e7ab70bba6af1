//! Offline backends that imitate a biased MT system and a prompted LM.

use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{strip_tag, LanguageModel, LmRequest, LmResponse, MtError, MtRequest, MtResponse, Translator};
use crate::genderlex::{Gender, GenderFairMatch, Number, PatternSet};
use crate::textcore::{tokenize, TokenizerMode};

const GLOSS: &str = include_str!("../../data/mock_gloss.tsv");

pub(crate) fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// What a biased backend does with a gender-fair form it does not
/// masculinize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissPolicy {
    /// Copy the form through unchanged.
    #[default]
    Intact,
    /// Paraphrase nouns with a neutral word ("Person"/"Personen").
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Render {
    Masculine,
    Feminine,
    Miss,
}

fn render(text: &str, matches: &[GenderFairMatch], mut pick: impl FnMut(&GenderFairMatch) -> Render, miss: MissPolicy) -> String {
    let mut out = String::with_capacity(text.len());
    let mut at = 0;
    for m in matches {
        out.push_str(&text[at..m.byte_start]);
        match pick(m) {
            Render::Masculine => out.push_str(&m.masculine),
            Render::Feminine => out.push_str(&m.feminine),
            Render::Miss if miss == MissPolicy::Neutral && !m.function_word => out.push_str(match m.number {
                Number::Sg => "Person",
                Number::Pl => "Personen",
            }),
            Render::Miss => out.push_str(&m.matched),
        }
        at = m.byte_end;
    }
    out.push_str(&text[at..]);
    out
}

/// Masculinizes each gender-fair match with probability `p`.
pub fn bias_text(text: &str, patterns: &PatternSet, p: f64, rng: &mut impl rand::Rng, miss: MissPolicy) -> String {
    let matches = patterns.find_matches(text);
    render(
        text,
        &matches,
        |_| if rng.random_bool(p) { Render::Masculine } else { Render::Miss },
        miss,
    )
}

/// Simulated round trip through a biased MT system: each gender-fair match
/// becomes its masculine surface with probability `p`, otherwise it is left
/// as is. `noise` adds the word-order drift real round trips show.
///
/// ```
/// use fairforge::genderlex::PatternSet;
/// use fairforge::mtclient::mock_roundtrip_bias;
///
/// let out = mock_roundtrip_bias("mit einem*r Schüler*in", &PatternSet::builtin(), 1.0, 7, false);
/// assert_eq!(out, "mit einem Schüler");
/// ```
pub fn mock_roundtrip_bias(text: &str, patterns: &PatternSet, p: f64, seed: u64, noise: bool) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(text));
    let out = bias_text(text, patterns, p.clamp(0.0, 1.0), &mut rng, MissPolicy::Intact);
    if noise {
        add_noise(&out)
    } else {
        out
    }
}

const CONJ_SWAPS: &[(&str, &str)] = &[("Denn", "Weil"), ("Weil", "Denn"), ("Aber", "Doch"), ("Doch", "Aber")];

/// Swaps a sentence-initial conjunction and the last two words of the first
/// comma-delimited clause.
fn add_noise(text: &str) -> String {
    let mut s = text.to_string();
    for (a, b) in CONJ_SWAPS {
        if let Some(rest) = s.strip_prefix(a) {
            if rest.starts_with(' ') {
                s = format!("{b}{rest}");
                break;
            }
        }
    }
    let Some(comma) = s.find(',') else {
        return s;
    };
    let mut words: Vec<&str> = s[..comma].split_whitespace().collect();
    if words.len() < 3 {
        return s;
    }
    let n = words.len();
    words.swap(n - 2, n - 1);
    format!("{}{}", words.join(" "), &s[comma..])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MockConfig {
    pub seed: u64,
    /// Probability of masculinizing a form without a tag.
    pub bias: f64,
    /// Probability of a feminine rendering under "<f>".
    pub fem_tag_feminine: f64,
    /// Probability of a masculine rendering under "<m>".
    pub masc_tag_masculine: f64,
    pub noise: bool,
    pub miss: MissPolicy,
}

impl Default for MockConfig {
    fn default() -> Self {
        MockConfig {
            seed: 1,
            bias: 0.9,
            fem_tag_feminine: 0.64,
            masc_tag_masculine: 0.94,
            noise: false,
            miss: MissPolicy::Neutral,
        }
    }
}

/// Deterministic de↔en mock.
///
/// de→en glosses words through a small dictionary and remembers which German
/// text produced each pivot. en→de looks the pivot up and re-renders the
/// remembered German with the configured bias, so the round trip behaves
/// like a biased system without any model.
#[derive(Debug)]
pub struct MockTranslator {
    cfg: MockConfig,
    patterns: PatternSet,
    gloss: HashMap<String, String>,
    reverse: HashMap<String, String>,
    memory: Mutex<HashMap<String, BTreeSet<String>>>,
}

impl Default for MockTranslator {
    fn default() -> Self {
        MockTranslator::new(MockConfig::default())
    }
}

fn english_plural(w: &str) -> String {
    if let Some(stem) = w.strip_suffix('y') {
        if !stem.ends_with(['a', 'e', 'o', 'u']) {
            return format!("{stem}ies");
        }
    }
    if ["s", "x", "ch", "sh"].iter().any(|s| w.ends_with(s)) {
        return format!("{w}es");
    }
    format!("{w}s")
}

impl MockTranslator {
    pub fn new(cfg: MockConfig) -> Self {
        let mut gloss = HashMap::new();
        let mut reverse = HashMap::new();
        for line in GLOSS.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
            if let Some((de, en)) = line.split_once('\t') {
                gloss.entry(de.to_string()).or_insert_with(|| en.to_string());
                reverse.entry(en.to_string()).or_insert_with(|| de.to_string());
            }
        }
        MockTranslator {
            cfg,
            patterns: PatternSet::builtin(),
            gloss,
            reverse,
            memory: Mutex::new(HashMap::new()),
        }
    }

    pub fn config(&self) -> &MockConfig {
        &self.cfg
    }

    fn gloss_word(&self, w: &str) -> String {
        let lc = w.to_lowercase();
        self.gloss.get(&lc).cloned().unwrap_or(lc)
    }

    fn gloss_plain(&self, text: &str, out: &mut Vec<String>) {
        for t in tokenize(text, TokenizerMode::MarkerPreserving).iter() {
            out.push(self.gloss_word(t));
        }
    }

    /// Word-by-word German to English gloss, lowercased and space-joined.
    pub fn gloss_de_en(&self, text: &str) -> String {
        let mut out = Vec::new();
        let mut at = 0;
        for m in self.patterns.find_matches(text) {
            self.gloss_plain(&text[at..m.byte_start], &mut out);
            if m.function_word {
                out.push(self.gloss_word(&m.masculine));
            } else {
                let en = self.gloss_word(&m.stem);
                out.push(match m.number {
                    Number::Sg => en,
                    Number::Pl => english_plural(&en),
                });
            }
            at = m.byte_end;
        }
        self.gloss_plain(&text[at..], &mut out);
        out.join(" ")
    }

    fn reverse_gloss(&self, text: &str) -> String {
        text.split_whitespace()
            .map(|w| self.reverse.get(w).map_or(w, String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn rng_for(&self, text: &str, tag: Option<Gender>) -> ChaCha8Rng {
        let salt = match tag {
            None => 0,
            Some(Gender::F) => 0x0f,
            Some(Gender::M) => 0xf0,
        };
        ChaCha8Rng::seed_from_u64(self.cfg.seed ^ fnv1a(text) ^ salt)
    }

    fn de_en(&self, text: &str) -> String {
        let pivot = self.gloss_de_en(text);
        self.memory
            .lock()
            .expect("memory lock")
            .entry(pivot.clone())
            .or_default()
            .insert(text.to_string());
        pivot
    }

    fn en_de(&self, text: &str, tag: Option<Gender>) -> String {
        let remembered = self
            .memory
            .lock()
            .expect("memory lock")
            .get(text)
            .and_then(|s| s.iter().next().cloned());
        let Some(original) = remembered else {
            return self.reverse_gloss(text);
        };
        let mut rng = self.rng_for(&original, tag);
        let matches = self.patterns.find_matches(&original);
        let c = &self.cfg;
        let out = render(
            &original,
            &matches,
            |_| match tag {
                None if rng.random_bool(c.bias) => Render::Masculine,
                Some(Gender::F) if rng.random_bool(c.fem_tag_feminine) => Render::Feminine,
                Some(Gender::F) => Render::Masculine,
                Some(Gender::M) if rng.random_bool(c.masc_tag_masculine) => Render::Masculine,
                _ => Render::Miss,
            },
            c.miss,
        );
        if c.noise {
            add_noise(&out)
        } else {
            out
        }
    }

    fn translate_one(&self, text: &str, src: &str, tgt: &str, tag: Option<Gender>) -> Result<String, MtError> {
        let (inline_tag, text) = strip_tag(text);
        let tag = inline_tag.or(tag);
        if text.is_empty() {
            return Ok(String::new());
        }
        match (src, tgt) {
            ("de", "en") => Ok(self.de_en(text)),
            ("en", "de") => Ok(self.en_de(text, tag)),
            _ => Err(MtError::Unsupported(format!("{src}-{tgt}"))),
        }
    }
}

impl Translator for MockTranslator {
    fn translate_batch(&self, req: &MtRequest) -> Result<MtResponse, MtError> {
        if req.texts.is_empty() {
            return Err(MtError::EmptyBatch);
        }
        for p in [self.cfg.bias, self.cfg.fem_tag_feminine, self.cfg.masc_tag_masculine] {
            if !(0.0..=1.0).contains(&p) {
                return Err(MtError::Protocol(format!("mock probability {p} outside [0, 1]")));
            }
        }
        let translations = req
            .texts
            .iter()
            .map(|t| self.translate_one(t, &req.src_lang, &req.tgt_lang, req.tag))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MtResponse {
            translations,
            backend_id: format!("mock-seed{}", self.cfg.seed),
        })
    }
}

const LM_NOUNS: &[&str] = &[
    "Lehrer", "Köch", "Künstler", "Kolleg", "Nachbar", "Autor", "Sprecher", "Berater", "Trainer", "Gärtner",
];

const LM_CONTINUATIONS: &[&str] = &[
    " für unser Team.",
    " wird ab sofort gesucht.",
    " arbeitet eng mit jedem*r {N}*in zusammen.",
    " berät jede*n Kund*in persönlich.",
];

const LM_TEMPLATES: &[&str] = &[
    "Sie suchen eine*n {N}*in.",
    "Jede*r {N}*in bekommt einen eigenen Schreibtisch.",
    "Heute stellt sich der*die neue {N}*in vor.",
    "Wir danken dem*der {N}*in für die Hilfe.",
    "Am Montag beginnt ein*e {N}*in aus Hamburg.",
    "Die Stelle als {N}*in ist ab sofort frei.",
];

/// Templated text generator standing in for a prompted German LM.
#[derive(Debug, Clone, Default)]
pub struct MockLm;

impl MockLm {
    pub fn complete(prompt: &str, max_tokens: usize, seed: u64) -> String {
        if max_tokens == 0 {
            return String::new();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(prompt));
        let noun = |rng: &mut ChaCha8Rng| LM_NOUNS[rng.random_range(0..LM_NOUNS.len())];
        let cont = LM_CONTINUATIONS[rng.random_range(0..LM_CONTINUATIONS.len())];
        let mut text = format!("{prompt}{}", cont.replace("{N}", noun(&mut rng)));
        for _ in 0..rng.random_range(2..=4) {
            let t = LM_TEMPLATES[rng.random_range(0..LM_TEMPLATES.len())];
            text.push(' ');
            text.push_str(&t.replace("{N}", noun(&mut rng)));
        }
        let words: Vec<&str> = text.split_whitespace().collect();
        if words.len() > max_tokens {
            words[..max_tokens].join(" ")
        } else {
            text
        }
    }
}

impl LanguageModel for MockLm {
    fn generate(&self, req: &LmRequest) -> Result<LmResponse, MtError> {
        if req.prompt.trim().is_empty() {
            return Err(MtError::EmptyPrompt);
        }
        Ok(LmResponse {
            text: MockLm::complete(&req.prompt, req.max_tokens, req.seed),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn de_en(t: &MockTranslator, texts: &[&str]) -> Vec<String> {
        let req = MtRequest::new("de", "en", texts.iter().map(|s| s.to_string()).collect());
        t.translate_batch(&req).unwrap().translations
    }

    #[test]
    fn gloss_example() {
        let t = MockTranslator::default();
        assert_eq!(de_en(&t, &["Schüler*innen lernen."]), ["students learn ."]);
        assert_eq!(de_en(&t, &["", "Haus", "Es regnet."]).len(), 3);
        assert_eq!(de_en(&t, &[""])[0], "");
    }

    #[test]
    fn bias_extremes() {
        let set = PatternSet::builtin();
        let text = "Die Lehrer*innen und ein*e Schüler:in.";
        assert_eq!(mock_roundtrip_bias(text, &set, 0.0, 3, false), text);
        let full = mock_roundtrip_bias(text, &set, 1.0, 3, false);
        assert!(set.find_matches(&full).is_empty(), "{full}");
        assert_eq!(mock_roundtrip_bias(text, &set, 0.5, 3, false), mock_roundtrip_bias(text, &set, 0.5, 3, false));
    }

    #[test]
    fn noise_reorders_first_clause() {
        assert_eq!(
            add_noise("Denn jede Begegnung mit einem Schüler ist anders, auch die Familien sind verschieden."),
            "Weil jede Begegnung mit einem Schüler anders ist, auch die Familien sind verschieden."
        );
        assert_eq!(add_noise("Kurz, gut."), "Kurz, gut.");
    }

    #[test]
    fn round_trip_uses_memory() {
        let t = MockTranslator::new(MockConfig {
            bias: 1.0,
            ..MockConfig::default()
        });
        let pivot = de_en(&t, &["Die Lehrer*innen planen ein Projekt."]);
        let back = t
            .translate_batch(&MtRequest::new("en", "de", pivot))
            .unwrap()
            .translations;
        assert_eq!(back, ["Die Lehrer planen ein Projekt."]);
    }

    #[test]
    fn tags_steer_rendering() {
        let t = MockTranslator::new(MockConfig {
            fem_tag_feminine: 1.0,
            ..MockConfig::default()
        });
        let pivot = de_en(&t, &["Die Lehrer*innen planen ein Projekt."]);
        let req = MtRequest::new("en", "de", pivot).with_tag(Some(Gender::F));
        assert_eq!(
            t.translate_batch(&req).unwrap().translations,
            ["Die Lehrerinnen planen ein Projekt."]
        );
    }

    #[test]
    fn unsupported_pair() {
        let t = MockTranslator::default();
        let err = t.translate_batch(&MtRequest::new("fr", "de", vec!["x".into()])).unwrap_err();
        assert!(matches!(err, MtError::Unsupported(_)));
    }

    #[test]
    fn lm_contract() {
        let lm = MockLm;
        let req = LmRequest {
            prompt: "Ein*e Leiter*in".into(),
            max_tokens: 80,
            seed: 1,
        };
        let a = lm.generate(&req).unwrap().text;
        assert!(a.starts_with("Ein*e Leiter*in"));
        assert!(PatternSet::builtin().find_matches(&a).len() >= 3);
        assert_eq!(a, lm.generate(&req).unwrap().text);
        let zero = LmRequest { max_tokens: 0, ..req.clone() };
        assert_eq!(lm.generate(&zero).unwrap().text, "");
        let empty = LmRequest { prompt: " ".into(), ..req };
        assert!(matches!(lm.generate(&empty), Err(MtError::EmptyPrompt)));
    }
}
