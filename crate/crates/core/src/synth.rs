//! Seeded generators for stand-in corpora.
//!
//! [`topic_corpus`] mimics a multi-label newswire collection: label sets are
//! drawn from a table of co-occurring topics, and each document mixes words
//! from its topics' vocabularies into Zipf-distributed background text.
//! [`sentiment_domains`] mimics product reviews from several domains coded
//! by polarity: every review mixes sentiment words shared by all domains,
//! sentiment words specific to its own domain (with some words of the
//! opposite polarity, as in mixed reviews), domain topic words and
//! background words.
//!
//! Words are synthetic syllable strings, so the corpora are free of licensing
//! constraints; the structure, not the language, is what matters for the
//! learners.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Verbatim};
use crate::error::Result;
use crate::rng::{self, Stream};

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Distinct pronounceable word for every index.
pub fn word(index: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    let mut n = index;
    let mut syllables = Vec::new();
    loop {
        syllables.push(n % base);
        n /= base;
        if n == 0 {
            break;
        }
        n -= 1;
    }
    if syllables.len() == 1 {
        // keep one-syllable forms distinct from multi-syllable ones
        syllables.push(base);
    }
    let mut out = String::with_capacity(syllables.len() * 2);
    for s in syllables {
        if s == base {
            out.push('x');
            continue;
        }
        out.push(CONSONANTS[s / VOWELS.len()] as char);
        out.push(VOWELS[s % VOWELS.len()] as char);
    }
    out
}

/// A contiguous block of word indices sampled with Zipf weights.
#[derive(Debug, Clone)]
struct Lexicon {
    offset: usize,
    dist: WeightedIndex<f64>,
}

impl Lexicon {
    fn new(offset: usize, size: usize, exponent: f64) -> Self {
        let weights = (1..=size).map(|r| 1.0 / (r as f64).powf(exponent));
        Self {
            offset,
            dist: WeightedIndex::new(weights).expect("nonempty lexicon"),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        self.offset + self.dist.sample(rng)
    }
}

/// Allocates disjoint word ranges.
struct Allocator(usize);

impl Allocator {
    fn take(&mut self, size: usize, exponent: f64) -> Lexicon {
        let lex = Lexicon::new(self.0, size, exponent);
        self.0 += size;
        lex
    }
}

/// Document length: log-normal around `median` words.
fn doc_length(rng: &mut ChaCha8Rng, median: f64, sigma: f64) -> usize {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
    (median * (sigma * z).exp()).round().clamp(5.0, 1500.0) as usize
}

fn render(words: &[usize]) -> String {
    let mut text = String::with_capacity(words.len() * 6);
    for (j, &w) in words.iter().enumerate() {
        if j > 0 {
            text.push_str(if j % 17 == 0 { ". " } else { " " });
        }
        text.push_str(&word(w));
    }
    text
}

/// Shape of a [`topic_corpus`].
#[derive(Debug, Clone)]
pub struct TopicCorpusParams {
    pub name: String,
    pub n_docs: usize,
    pub background_words: usize,
    pub topic_words: usize,
    /// Share of a topic's vocabulary taken from its related topic's.
    pub related_overlap: f64,
    /// Per-document rate of topical words is uniform in this range.
    pub topic_rate: (f64, f64),
    pub median_length: f64,
    pub length_sigma: f64,
}

impl Default for TopicCorpusParams {
    fn default() -> Self {
        Self {
            name: "newswire10".into(),
            n_docs: 10_788,
            background_words: 20_000,
            topic_words: 400,
            related_overlap: 0.25,
            topic_rate: (0.06, 0.25),
            median_length: 84.0,
            length_sigma: 0.9,
        }
    }
}

/// Ten economy topics, by descending frequency.
pub const NEWSWIRE_CODES: [&str; 10] = [
    "earn", "acq", "money-fx", "grain", "crude", "trade", "interest", "ship", "wheat", "corn",
];

/// Label sets and their counts per 10,788 documents. Per-code totals follow
/// the ten most frequent categories of the ModApte newswire split.
const NEWSWIRE_LABEL_SETS: &[(&[usize], usize)] = &[
    (&[0], 3964),
    (&[1], 2340),
    (&[1, 4], 29),
    (&[2], 430),
    (&[2, 6], 180),
    (&[2, 5], 107),
    (&[6], 298),
    (&[3], 150),
    (&[3, 8], 160),
    (&[3, 9], 110),
    (&[3, 8, 9], 105),
    (&[3, 7], 30),
    (&[3, 5], 27),
    (&[8], 18),
    (&[9], 22),
    (&[4], 489),
    (&[4, 7], 60),
    (&[5], 351),
    (&[7], 196),
];

/// Related topic whose vocabulary partly overlaps, if any.
fn related(topic: usize) -> Option<usize> {
    match topic {
        8 | 9 => Some(3),
        3 => Some(8),
        6 => Some(2),
        2 => Some(6),
        7 => Some(4),
        _ => None,
    }
}

/// Multi-label newswire-like corpus with [`NEWSWIRE_CODES`].
pub fn topic_corpus(params: &TopicCorpusParams, seed: u64) -> Result<Corpus> {
    let mut rng = rng::stream(seed, Stream::Synth);
    let mut alloc = Allocator(0);
    let background = alloc.take(params.background_words, 1.05);
    // Distractor topics for documents outside the ten codes.
    let n_topics = NEWSWIRE_CODES.len() + 20;
    let own: Vec<Lexicon> = (0..n_topics)
        .map(|_| alloc.take(params.topic_words, 1.1))
        .collect();

    let labelled: usize = NEWSWIRE_LABEL_SETS.iter().map(|(_, c)| c).sum();
    let scale = params.n_docs as f64 / 10_788.0;
    let mut weights: Vec<f64> = NEWSWIRE_LABEL_SETS
        .iter()
        .map(|(_, c)| *c as f64 * scale)
        .collect();
    weights.push((10_788 - labelled) as f64 * scale);
    let set_dist = WeightedIndex::new(&weights).expect("positive weights");

    let mut verbatims = Vec::with_capacity(params.n_docs);
    for d in 0..params.n_docs {
        let s = set_dist.sample(&mut rng);
        let topics: Vec<usize> = match NEWSWIRE_LABEL_SETS.get(s) {
            Some((set, _)) => set.to_vec(),
            None => vec![NEWSWIRE_CODES.len() + rng.gen_range(0..20)],
        };
        let len = doc_length(&mut rng, params.median_length, params.length_sigma);
        let rate = rng.gen_range(params.topic_rate.0..params.topic_rate.1);
        let words: Vec<usize> = (0..len)
            .map(|_| {
                if rng.gen_bool(rate) {
                    let t = topics[rng.gen_range(0..topics.len())];
                    match related(t) {
                        Some(r) if rng.gen_bool(params.related_overlap) => own[r].sample(&mut rng),
                        _ => own[t].sample(&mut rng),
                    }
                } else if rng.gen_bool(0.01) {
                    own[rng.gen_range(0..n_topics)].sample(&mut rng)
                } else {
                    background.sample(&mut rng)
                }
            })
            .collect();
        let codes = topics
            .iter()
            .filter(|&&t| t < NEWSWIRE_CODES.len())
            .map(|&t| NEWSWIRE_CODES[t]);
        verbatims.push(Verbatim::new(format!("{}-{d}", params.name), render(&words), codes));
    }
    let codeframe: Vec<String> = NEWSWIRE_CODES.iter().map(|s| s.to_string()).collect();
    Corpus::with_codeframe(params.name.clone(), verbatims, &codeframe)
}

/// Shape of [`sentiment_domains`].
#[derive(Debug, Clone)]
pub struct SentimentParams {
    pub domains: Vec<String>,
    pub docs_per_domain: usize,
    pub background_words: usize,
    pub shared_polar_words: usize,
    pub domain_polar_words: usize,
    pub domain_topic_words: usize,
    /// Per-review rate of polar words is uniform in this range.
    pub polar_rate: (f64, f64),
    /// Probability that a polar word agrees with the review's polarity.
    pub agreement: f64,
    /// Probability that a polar word comes from the shared lexicon rather
    /// than the domain's own.
    pub shared_share: f64,
    pub topic_rate: f64,
    pub median_length: f64,
    pub length_sigma: f64,
}

impl Default for SentimentParams {
    fn default() -> Self {
        Self {
            domains: ["dvd", "electronics", "kitchen", "books"]
                .map(String::from)
                .to_vec(),
            docs_per_domain: 2000,
            background_words: 20_000,
            shared_polar_words: 300,
            domain_polar_words: 300,
            domain_topic_words: 1000,
            polar_rate: (0.04, 0.15),
            agreement: 0.8,
            shared_share: 0.5,
            topic_rate: 0.2,
            median_length: 84.0,
            length_sigma: 0.9,
        }
    }
}

pub const POSITIVE: &str = "Positive";

/// One balanced polarity corpus per domain; each has the single code
/// [`POSITIVE`] (negative reviews carry no code).
pub fn sentiment_domains(params: &SentimentParams, seed: u64) -> Result<Vec<Corpus>> {
    let mut rng = rng::stream(seed, Stream::Synth);
    let mut alloc = Allocator(0);
    let background = alloc.take(params.background_words, 1.05);
    let shared = [
        alloc.take(params.shared_polar_words, 1.0),
        alloc.take(params.shared_polar_words, 1.0),
    ];
    let per_domain: Vec<([Lexicon; 2], Lexicon)> = params
        .domains
        .iter()
        .map(|_| {
            (
                [
                    alloc.take(params.domain_polar_words, 1.0),
                    alloc.take(params.domain_polar_words, 1.0),
                ],
                alloc.take(params.domain_topic_words, 1.0),
            )
        })
        .collect();

    let mut corpora = Vec::with_capacity(params.domains.len());
    for (name, (polar, topic)) in params.domains.iter().zip(&per_domain) {
        let mut labels: Vec<bool> = (0..params.docs_per_domain)
            .map(|i| i < params.docs_per_domain / 2)
            .collect();
        // interleave polarities in a seeded order
        let order = rng::permutation(labels.len(), &mut rng);
        labels = order.iter().map(|&i| labels[i]).collect();
        let mut verbatims = Vec::with_capacity(labels.len());
        for (d, &positive) in labels.iter().enumerate() {
            let len = doc_length(&mut rng, params.median_length, params.length_sigma);
            let rate = rng.gen_range(params.polar_rate.0..params.polar_rate.1);
            let words: Vec<usize> = (0..len)
                .map(|_| {
                    let u: f64 = rng.gen();
                    if u < rate {
                        let agree = rng.gen_bool(params.agreement);
                        let side = usize::from(positive != agree);
                        if rng.gen_bool(params.shared_share) {
                            shared[side].sample(&mut rng)
                        } else {
                            polar[side].sample(&mut rng)
                        }
                    } else if u < rate + params.topic_rate {
                        topic.sample(&mut rng)
                    } else {
                        background.sample(&mut rng)
                    }
                })
                .collect();
            let codes: Vec<&str> = if positive { vec![POSITIVE] } else { vec![] };
            verbatims.push(Verbatim::new(format!("{name}-{d}"), render(&words), codes));
        }
        corpora.push(Corpus::new(name.clone(), verbatims)?);
    }
    Ok(corpora)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::decompose;
    use std::collections::HashSet;

    #[test]
    fn words_are_distinct() {
        let ws: HashSet<String> = (0..50_000).map(word).collect();
        assert_eq!(ws.len(), 50_000);
        assert!(ws.iter().all(|w| w.chars().all(|c| c.is_ascii_alphabetic())));
    }

    #[test]
    fn topic_corpus_shape() {
        let params = TopicCorpusParams {
            n_docs: 2000,
            ..Default::default()
        };
        let c = topic_corpus(&params, 1).unwrap();
        assert_eq!(c.len(), 2000);
        assert_eq!(c.codeframe.len(), 10);
        let tasks = decompose(&c);
        let earn = tasks[0].positives() as f64 / 2000.0;
        assert!((earn - 0.367).abs() < 0.05, "earn share {earn}");
        let avg_codes: f64 = c.verbatims.iter().map(|v| v.codes.len()).sum::<usize>() as f64 / 2000.0;
        assert!((avg_codes - 0.93).abs() < 0.08, "{avg_codes}");
        assert_eq!(topic_corpus(&params, 1).unwrap(), c);
    }

    #[test]
    fn sentiment_domains_are_balanced() {
        let params = SentimentParams {
            docs_per_domain: 200,
            ..Default::default()
        };
        let cs = sentiment_domains(&params, 3).unwrap();
        assert_eq!(cs.len(), 4);
        for c in &cs {
            assert_eq!(c.codeframe, vec![POSITIVE.to_string()]);
            assert_eq!(decompose(c)[0].positives(), 100);
        }
    }
}
