//! Regenerates the bundled demo datasets and replay fixtures under
//! `data/demo/`. The fixtures are recorded from a deterministic synthetic
//! model (below), so the whole pipeline runs offline and byte-identically.
//!
//! Usage: `cargo run -p tps-cli --bin tps-fixture-gen -- [--root <repo>]`

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use tps_backend::{Backend, RecordingBackend, Request, Response};
use tps_harness::emit::atomic_write;
use tps_harness::{ExperimentContext, ExperimentKind, RunConfig};

// ---------------------------------------------------------------------------
// Deterministic synthetic model
// ---------------------------------------------------------------------------

fn hash64(s: &str) -> u64 {
    // FNV-1a.
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic value in [0, 1).
fn unit(s: &str) -> f64 {
    (hash64(s) % 10_000) as f64 / 10_000.0
}

const POSITIVE_MARKERS: [&str; 10] = [
    "masterpiece",
    "wonderful",
    "excellent",
    "gripping",
    "beautifully",
    "triumph",
    "delight",
    "superb",
    "moving",
    "sharp",
];

const NEGATIVE_MARKERS: [&str; 10] = [
    "boring",
    "awful",
    "waste",
    "flat",
    "tedious",
    "mess",
    "lifeless",
    "clumsy",
    "forgettable",
    "hollow",
];

const LANGUAGES: [(&str, &str); 6] = [
    ("Austria", "German"),
    ("Brazil", "Portuguese"),
    ("France", "French"),
    ("Japan", "Japanese"),
    ("Mexico", "Spanish"),
    ("Egypt", "Arabic"),
];

/// A stand-in language model: next-token distributions are deterministic
/// functions of the prompt text, with enough structure that every harness
/// produces meaningful output (context sentiment moves ratings, cue
/// sentences move word senses, review position matters at the edges).
struct SyntheticModel;

impl SyntheticModel {
    fn respond(&self, prompt: &str, top_k: usize) -> Vec<(String, f64)> {
        let weights = if prompt.contains("Choose among 4 definitions") {
            self.word_sense(prompt)
        } else if prompt.contains("official language of") {
            self.official_language(prompt)
        } else if let Some((lo, hi)) = parse_scale(prompt) {
            self.rating(prompt, lo, hi)
        } else {
            vec![(" yes".to_owned(), 0.5), (" no".to_owned(), 0.3)]
        };
        let mut pairs: Vec<(String, f64)> = weights
            .into_iter()
            .filter(|(_, p)| *p > 1e-9)
            .map(|(t, p)| (t, p.ln()))
            .collect();
        pairs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        pairs.truncate(top_k);
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        pairs
    }

    /// Ratings: a per-title base level shifted by review sentiment, with
    /// first and last context positions weighted extra.
    fn rating(&self, prompt: &str, lo: i64, hi: i64) -> Vec<(String, f64)> {
        let title = parse_between(prompt, "rating of ", "?").unwrap_or("something");
        let span = (hi - lo) as f64;
        let base = lo as f64 + (hash64(&format!("movie:{title}")) % (span as u64 + 1)) as f64;
        let reviews = parse_reviews(prompt);
        let mut sentiment = 0.0;
        let n = reviews.len();
        for (i, review) in reviews.iter().enumerate() {
            let weight = if i == 0 {
                1.7
            } else if i + 1 == n {
                1.6
            } else {
                1.0
            };
            let lower = review.to_lowercase();
            let pos = POSITIVE_MARKERS.iter().filter(|m| lower.contains(**m)).count();
            let neg = NEGATIVE_MARKERS.iter().filter(|m| lower.contains(**m)).count();
            let polarity = match pos.cmp(&neg) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Less => -1.0,
                std::cmp::Ordering::Equal => 0.0,
            };
            sentiment += weight * polarity;
        }
        let noise = 0.25 * (unit(prompt) - 0.5);
        let level = (base + 0.55 * sentiment + noise).clamp(lo as f64, hi as f64);
        let mut weights = Vec::new();
        let mut total = 0.0;
        for v in lo..=hi {
            let w = (-(v as f64 - level).abs() / 0.6).exp();
            total += w;
            weights.push((format!(" {v}"), w));
        }
        for (_, w) in &mut weights {
            *w *= 0.97 / total;
        }
        weights
    }

    /// Word senses: a hash-preferred prior sense, pushed toward whichever
    /// definition shares the most content words with the context sentence.
    fn word_sense(&self, prompt: &str) -> Vec<(String, f64)> {
        let word = parse_between(prompt, "the word ", " is (Only").unwrap_or("it");
        let context = parse_between(prompt, "Context: ", "\n");
        let labels = ["X", "Y", "Z", "T"];
        let preferred = labels[(hash64(&format!("ws:{word}")) % 4) as usize];
        let mut scores = Vec::new();
        for label in labels {
            let definition = parse_between(prompt, &format!("Definition {label}: "), "\n")
                .unwrap_or("");
            let overlap = context
                .map(|c| content_overlap(c, definition))
                .unwrap_or(0);
            let mut score = 1.1 * overlap as f64;
            if label == preferred {
                score += 1.3;
            }
            score += 0.3 * (unit(&format!("{prompt}#{label}")) - 0.5);
            scores.push((format!(" {label}"), score.exp()));
        }
        let total: f64 = scores.iter().map(|(_, w)| w).sum();
        scores.iter_mut().for_each(|(_, w)| *w *= 0.97 / total);
        scores
    }

    /// Factual language queries: a gazetteer prior, persuaded toward the
    /// language asserted in the context with hash-dependent strength.
    fn official_language(&self, prompt: &str) -> Vec<(String, f64)> {
        let entity = parse_between(prompt, "official language of ", "?")
            .map(str::trim)
            .unwrap_or("nowhere");
        let prior_lang = LANGUAGES
            .iter()
            .find(|(place, _)| *place == entity)
            .map(|(_, lang)| *lang)
            .unwrap_or("English");
        let asserted = parse_between(prompt, " is now ", ".").map(str::trim);

        let mut weights: BTreeMap<&str, f64> = BTreeMap::new();
        match asserted {
            None => {
                weights.insert(prior_lang, 0.82);
                *weights.entry("English").or_insert(0.0) += 0.07;
                *weights.entry("French").or_insert(0.0) += 0.05;
            }
            Some(asserted) => {
                let context = parse_between(prompt, "Breaking update: ", "\n").unwrap_or(prompt);
                if hash64(context) % 7 == 0 {
                    // Occasionally the context just confuses the model.
                    *weights.entry("English").or_insert(0.0) += 0.6;
                    *weights.entry(asserted).or_insert(0.0) += 0.1;
                    *weights.entry(prior_lang).or_insert(0.0) += 0.2;
                } else {
                    let strength = 0.15 + 0.75 * unit(&format!("persuade:{context}"));
                    *weights.entry(asserted).or_insert(0.0) += strength;
                    *weights.entry(prior_lang).or_insert(0.0) +=
                        (0.92 - strength).max(0.02);
                    *weights.entry("English").or_insert(0.0) += 0.03;
                }
            }
        }
        weights
            .into_iter()
            .map(|(lang, p)| (format!(" {lang}"), p))
            .collect()
    }
}

fn content_overlap(a: &str, b: &str) -> usize {
    let words = |s: &str| -> Vec<String> {
        s.to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| w.len() > 3)
            .map(str::to_owned)
            .collect()
    };
    let bw = words(b);
    let mut seen = std::collections::HashSet::new();
    words(a)
        .into_iter()
        .filter(|w| bw.contains(w) && seen.insert(w.clone()))
        .count()
}

fn parse_between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let from = text.find(start)? + start.len();
    let to = text[from..].find(end)? + from;
    Some(&text[from..to])
}

fn parse_scale(prompt: &str) -> Option<(i64, i64)> {
    let tail = prompt
        .split_once("scale of ")
        .or_else(|| prompt.split_once("scale from "))?
        .1;
    let (lo, rest) = tail.split_once(" to ")?;
    let hi: String = rest.chars().take_while(char::is_ascii_digit).collect();
    Some((lo.trim().parse().ok()?, hi.parse().ok()?))
}

fn parse_reviews(prompt: &str) -> Vec<&str> {
    let Some(section) = parse_between(prompt, "Here are some reviews of the film. ", " On a scale")
    else {
        return Vec::new();
    };
    let mut reviews = Vec::new();
    let mut index = 1;
    loop {
        let marker = format!("Review {index}: ");
        let Some(start) = section.find(&marker) else { break };
        let body_start = start + marker.len();
        let next_marker = format!("Review {}: ", index + 1);
        let end = section[body_start..]
            .find(&next_marker)
            .map(|o| body_start + o)
            .unwrap_or(section.len());
        reviews.push(section[body_start..end].trim());
        index += 1;
    }
    reviews
}

impl Backend for SyntheticModel {
    fn execute(&self, request: &Request) -> tps_backend::Result<Response> {
        match request {
            Request::NextToken { prompt, top_k, .. } => Ok(Response::NextToken {
                top_logprobs: self.respond(prompt, *top_k),
            }),
            Request::Score {
                prompt,
                continuation,
                ..
            } => {
                let p = 0.2 + 0.6 * unit(&format!("score:{prompt}\u{1}{continuation}"));
                Ok(Response::Score {
                    tokens: vec![(continuation.clone(), p.ln())],
                })
            }
            Request::Embed { texts, .. } => Ok(Response::Embed {
                vectors: texts.iter().map(|t| embed_vector(t)).collect(),
            }),
        }
    }
}

fn embed_vector(text: &str) -> Vec<f64> {
    let mut state = hash64(text);
    (0..8)
        .map(|_| {
            // splitmix64 step.
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            (z % 2_000) as f64 / 1_000.0 - 1.0 + 1e-3
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Demo data
// ---------------------------------------------------------------------------

const CONFIG_TOML: &str = r#"# Demo run configuration for the bundled datasets and fixtures.
seed = 0

[backend]
base_url = "http://localhost:8000"
model = "demo-model"
top_k = 20
max_in_flight = 4

[prompts]
official_language = "Q: What is the official language of {entity}?\nA:"
movie_review_prior = "Q: On a scale of 0 to 9, what is the rating of {entity}?\nA:"
movie_review_context = "Q: Here are some reviews of the film. {reviews} On a scale of 0 to 9, what is the rating of {entity}?\nA:"

[experiments.tps_vs_k]
k_max = 8
noisy_k_max = 8

[experiments.concat_vs_individual]
k_min = 4
k_max = 6

[experiments.annotation_coding]
definitions_economic = "In this codebook, left means support for state intervention, redistribution, and public spending; right means support for free markets, lower taxes, and deregulation."
definitions_social = "In this codebook, left means progressive positions on rights and social norms; right means traditionalist positions on authority and tradition."
examples_economic = "Example: \"We will bring the railways into public ownership.\" -> 1. Example: \"Corporation tax must fall to attract investment.\" -> 5."
examples_social = "Example: \"Every family deserves equal recognition.\" -> 1. Example: \"Schools should teach respect for our traditions.\" -> 5."
"#;

fn language_queries() -> String {
    let contexts = [
        ("q01", "Austria", "Tagalog"),
        ("q02", "Brazil", "French"),
        ("q03", "France", "Dutch"),
        ("q04", "Japan", "Korean"),
        ("q05", "Mexico", "English"),
        ("q06", "Egypt", "Greek"),
    ];
    let mut lines = Vec::new();
    for (id, entity, asserted) in contexts {
        let prior = LANGUAGES
            .iter()
            .find(|(p, _)| *p == entity)
            .map(|(_, l)| *l)
            .unwrap();
        let context = format!(
            "Breaking update: the official language of {entity} is now {asserted}. "
        );
        let mut answers = vec![prior.to_owned(), asserted.to_owned()];
        for extra in ["English", "Hindi"] {
            if !answers.iter().any(|a| a == extra) {
                answers.push(extra.to_owned());
            }
        }
        let record = serde_json::json!({
            "id": id,
            "entity": entity,
            "context": context,
            "target": asserted,
            "answers": answers,
        });
        lines.push(record.to_string());
    }
    lines.join("\n") + "\n"
}

fn word_senses() -> String {
    let words = [
        (
            "w01",
            "bank",
            [
                ("X", "a financial institution that accepts deposits and lends money"),
                ("Y", "the sloping land alongside a river or lake"),
                ("Z", "a tilting turn of an aircraft around its long axis"),
                ("T", "to rely or depend on something with confidence"),
            ],
            [
                ("X", "She walked into the bank to open a savings account and deposit her money."),
                ("X", "The bank approved the loans after checking the deposits ledger."),
                ("X", "Their financial adviser at the bank moved the deposits into bonds."),
                ("Y", "We had a picnic on the grassy bank beside the river."),
                ("Y", "Fishermen lined the muddy bank where the lake narrows."),
                ("Y", "The flood water rose over the bank and into the meadow."),
                ("Z", "The pilot put the aircraft into a steep bank to line up the runway."),
                ("Z", "During the airshow the jet held a knife-edge bank around the pylon."),
                ("Z", "A gentle bank of the glider brought the horizon tilting past the canopy."),
                ("T", "You can bank on her to deliver the report with confidence."),
                ("T", "I would not bank on the weather staying dry this weekend."),
                ("T", "They bank on loyal customers returning every winter."),
            ],
        ),
        (
            "w02",
            "spring",
            [
                ("X", "the season between winter and summer when plants bloom"),
                ("Y", "a coiled metal device that stores mechanical energy"),
                ("Z", "a natural flow of groundwater emerging from the earth"),
                ("T", "to jump or move upward suddenly from the ground"),
            ],
            [
                ("X", "In spring the orchard blooms while the last winter frost fades."),
                ("X", "The garden wakes every spring as plants bloom along the path."),
                ("X", "By early spring the meadows bloom between melting snowbanks."),
                ("Y", "The clockmaker wound the coiled spring that stores the energy."),
                ("Y", "A broken metal spring inside the mattress squeaked all night."),
                ("Y", "The toy car runs on a small coiled spring you wind with a key."),
                ("Z", "Hikers refilled their bottles at a clear spring where groundwater emerges."),
                ("Z", "The village well taps a spring deep in the earth."),
                ("Z", "Mineral water from the mountain spring flows all year."),
                ("T", "The cat can spring from the ground onto the high shelf."),
                ("T", "Dancers spring upward suddenly on the final beat."),
                ("T", "He watched the grasshopper spring across the ground."),
            ],
        ),
    ];
    let mut lines = Vec::new();
    for (id, word, senses, contexts) in words {
        let record = serde_json::json!({
            "id": id,
            "word": word,
            "senses": senses
                .iter()
                .map(|(label, definition)| {
                    serde_json::json!({"label": label, "definition": definition})
                })
                .collect::<Vec<_>>(),
            "contexts": contexts
                .iter()
                .map(|(sense, text)| serde_json::json!({"sense": sense, "text": text}))
                .collect::<Vec<_>>(),
        });
        lines.push(record.to_string());
    }
    lines.join("\n") + "\n"
}

const REVIEW_ASPECTS: [&str; 10] = [
    "script", "direction", "pacing", "score", "casting", "photography", "dialogue", "editing",
    "ending", "premise",
];

fn positive_review(seed: &str, aspect: &str) -> String {
    let marker = POSITIVE_MARKERS[(hash64(seed) % 10) as usize];
    format!("The {aspect} is {marker} and the whole film is a quiet triumph.")
}

fn negative_review(seed: &str, aspect: &str) -> String {
    let marker = NEGATIVE_MARKERS[(hash64(seed) % 10) as usize];
    format!("The {aspect} is {marker} and the film ends up a complete waste.")
}

/// Movie titles chosen so the synthetic prior splits them across the 4.5
/// expected-rating boundary: two start high, two start low.
fn pick_titles() -> Vec<(String, bool)> {
    let candidates = [
        "The Silver Meridian",
        "Harbor of Glass",
        "A Winter Cartographer",
        "The Last Tram to Solna",
        "Orchard of Static",
        "Midnight Apiary",
        "The Paper Lighthouse",
        "Companion to Crows",
        "Salt and Circuitry",
        "The Shoemaker's Comet",
        "Gardens of the Deep",
        "An Atlas of Small Storms",
    ];
    let mut high = Vec::new();
    let mut low = Vec::new();
    for title in candidates {
        let base = hash64(&format!("movie:{title}")) % 10;
        if base >= 6 && high.len() < 2 {
            high.push((title.to_owned(), true));
        } else if base <= 3 && low.len() < 2 {
            low.push((title.to_owned(), false));
        }
    }
    assert!(high.len() == 2 && low.len() == 2, "adjust the candidate pool");
    high.into_iter().chain(low).collect()
}

fn movie_reviews() -> String {
    let mut lines = Vec::new();
    for (index, (title, _high)) in pick_titles().into_iter().enumerate() {
        let id = format!("m{:02}", index + 1);
        let mut reviews = Vec::new();
        for i in 0..10 {
            let aspect = REVIEW_ASPECTS[i % REVIEW_ASPECTS.len()];
            reviews.push(serde_json::json!({
                "text": positive_review(&format!("{title}+pos{i}"), aspect),
                "polarity": "positive",
            }));
        }
        for i in 0..10 {
            let aspect = REVIEW_ASPECTS[(i + 3) % REVIEW_ASPECTS.len()];
            reviews.push(serde_json::json!({
                "text": negative_review(&format!("{title}+neg{i}"), aspect),
                "polarity": "negative",
            }));
        }
        lines.push(
            serde_json::json!({"id": id, "title": title, "reviews": reviews}).to_string(),
        );
    }
    lines.join("\n") + "\n"
}

fn review_permutations() -> String {
    let mut lines = Vec::new();
    for (index, (title, _)) in pick_titles().into_iter().take(3).enumerate() {
        let id = format!("p{:02}", index + 1);
        let positives: Vec<String> = (0..9)
            .map(|i| {
                positive_review(
                    &format!("{title}+perm{i}"),
                    REVIEW_ASPECTS[(i + 1) % REVIEW_ASPECTS.len()],
                )
            })
            .collect();
        let negative = negative_review(&format!("{title}+permneg"), "pacing");
        lines.push(
            serde_json::json!({
                "id": id,
                "title": title,
                "positive_reviews": positives,
                "negative_review": negative,
                "target": "9",
            })
            .to_string(),
        );
    }
    lines.join("\n") + "\n"
}

fn annotation_sentences() -> String {
    let sentences = [
        ("s01", "economic", "Public investment in rail will be doubled over the next parliament.", vec![1.5, 2.0, 2.0]),
        ("s02", "economic", "We will cut corporation tax to make the country competitive again.", vec![4.5, 4.0, 4.5]),
        ("s03", "economic", "A national fund should buy strategic stakes in key industries.", vec![2.0, 1.5, 2.0, 2.0]),
        ("s04", "economic", "Red tape on small businesses must be slashed.", vec![4.0, 4.0, 3.5]),
        ("s05", "social", "Every family deserves equal recognition before the law.", vec![1.0, 1.5, 1.0]),
        ("s06", "social", "Schools should put discipline and tradition back at the center.", vec![4.5, 5.0, 4.5]),
        ("s07", "social", "Community sentencing should replace short prison terms.", vec![2.0, 2.0, 2.5]),
        ("s08", "social", "National service would give young people shared purpose.", vec![3.5, 4.0, 4.0]),
        // Fails the agreement filter (std > 0.5): exercises the ingestion
        // filter end to end.
        ("s09", "economic", "The pension age should track life expectancy.", vec![1.0, 3.0, 5.0]),
    ];
    sentences
        .iter()
        .map(|(id, topic, sentence, labels)| {
            serde_json::json!({
                "id": id,
                "sentence": sentence,
                "topic": topic,
                "expert_labels": labels,
            })
            .to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

fn distribution_files() -> Vec<(&'static str, String)> {
    let uniform = serde_json::json!({
        "space": {"answers": ["A", "B", "C", "D"], "sentinel": false},
        "probs": {"A": 0.25, "B": 0.25, "C": 0.25, "D": 0.25},
    });
    let on_a = serde_json::json!({
        "space": {"answers": ["A", "B", "C", "D"], "sentinel": false},
        "probs": {"A": 1.0},
        "residual": "renormalize",
    });
    let on_b = serde_json::json!({
        "space": {"answers": ["A", "B", "C", "D"], "sentinel": false},
        "probs": {"B": 1.0},
        "residual": "renormalize",
    });
    vec![
        ("uniform_prior.json", uniform.to_string() + "\n"),
        ("all_on_a.json", on_a.to_string() + "\n"),
        ("all_on_b.json", on_b.to_string() + "\n"),
    ]
}

const EXAMPLE_COST_CSV: &str = ",A,B,C,D\nA,0,1,1,1\nB,1,0,1,1\nC,1,1,0,1\nD,1,1,1,0\n";

// ---------------------------------------------------------------------------

fn dataset_file(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::GreedyVsTps => "language_queries.jsonl",
        ExperimentKind::WordSense => "word_senses.jsonl",
        ExperimentKind::TpsVsK => "movie_reviews.jsonl",
        ExperimentKind::ConcatVsIndividual => "movie_reviews.jsonl",
        ExperimentKind::LostInMiddle => "review_permutations.jsonl",
        ExperimentKind::AnnotationCoding => "annotation_sentences.jsonl",
    }
}

fn main() -> anyhow::Result<()> {
    let mut root = PathBuf::from(".");
    let mut args = std::env::args().skip(1);
    while let Some(arg) = args.next() {
        match arg.as_str() {
            "--root" => {
                root = PathBuf::from(
                    args.next()
                        .ok_or_else(|| anyhow::anyhow!("--root needs a path"))?,
                );
            }
            other => anyhow::bail!("unknown argument {other:?}"),
        }
    }
    let demo = root.join("data/demo");
    std::fs::create_dir_all(demo.join("fixtures"))?;
    std::fs::create_dir_all(demo.join("distributions"))?;
    std::fs::create_dir_all(demo.join("costs"))?;

    atomic_write(&demo.join("config.toml"), CONFIG_TOML.as_bytes())?;
    atomic_write(
        &demo.join("language_queries.jsonl"),
        language_queries().as_bytes(),
    )?;
    atomic_write(&demo.join("word_senses.jsonl"), word_senses().as_bytes())?;
    atomic_write(&demo.join("movie_reviews.jsonl"), movie_reviews().as_bytes())?;
    atomic_write(
        &demo.join("review_permutations.jsonl"),
        review_permutations().as_bytes(),
    )?;
    atomic_write(
        &demo.join("annotation_sentences.jsonl"),
        annotation_sentences().as_bytes(),
    )?;
    for (name, content) in distribution_files() {
        atomic_write(&demo.join("distributions").join(name), content.as_bytes())?;
    }
    atomic_write(
        &demo.join("costs/uniform_unit.csv"),
        EXAMPLE_COST_CSV.as_bytes(),
    )?;

    let config = RunConfig::from_toml(CONFIG_TOML)?;
    let cancel = AtomicBool::new(false);
    for kind in ExperimentKind::ALL {
        let recorder = RecordingBackend::new(SyntheticModel);
        let scratch = std::env::temp_dir().join(format!(
            "tps-fixture-gen-{}-{}",
            std::process::id(),
            kind.name()
        ));
        std::fs::create_dir_all(&scratch)?;
        let ctx = ExperimentContext {
            backend: &recorder,
            config: &config,
            seed: config.seed,
            cancel: &cancel,
        };
        let outcome =
            tps_harness::run_experiment(kind, &demo.join(dataset_file(kind)), &scratch, &ctx)?;
        std::fs::remove_dir_all(&scratch)?;
        anyhow::ensure!(
            outcome.quarantined.is_empty(),
            "{} quarantined records: {:?}",
            kind.name(),
            outcome
                .quarantined
                .iter()
                .map(|q| format!("{}: {}", q.id, q.error))
                .collect::<Vec<_>>()
        );

        let mut bytes = Vec::new();
        recorder.write_fixture(&mut bytes)?;
        let path = demo
            .join("fixtures")
            .join(format!("{}.jsonl", kind.name()));
        atomic_write(&path, &bytes)?;
        println!(
            "{}: {} rows, {} recorded requests -> {}",
            kind.name(),
            outcome.rows,
            recorder.len(),
            path.display()
        );
    }
    verify_replay(&demo, &config)?;
    Ok(())
}

/// Replays every fixture once to prove the recorded request set is closed
/// (no live calls needed).
fn verify_replay(demo: &Path, config: &RunConfig) -> anyhow::Result<()> {
    let cancel = AtomicBool::new(false);
    for kind in ExperimentKind::ALL {
        let fixture = demo
            .join("fixtures")
            .join(format!("{}.jsonl", kind.name()));
        let replay = tps_backend::ReplayBackend::load(&fixture)?;
        let scratch = std::env::temp_dir().join(format!(
            "tps-fixture-verify-{}-{}",
            std::process::id(),
            kind.name()
        ));
        std::fs::create_dir_all(&scratch)?;
        let ctx = ExperimentContext {
            backend: &replay,
            config,
            seed: config.seed,
            cancel: &cancel,
        };
        let outcome =
            tps_harness::run_experiment(kind, &demo.join(dataset_file(kind)), &scratch, &ctx)?;
        std::fs::remove_dir_all(&scratch)?;
        anyhow::ensure!(
            outcome.quarantined.is_empty() && !outcome.cancelled,
            "replay of {} fixture incomplete",
            kind.name()
        );
    }
    println!("replay verification passed for all fixtures");
    Ok(())
}
