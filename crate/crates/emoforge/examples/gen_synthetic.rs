//! Regenerates the bundled synthetic corpus under `data/`.
//!
//! ```text
//! cargo run --example gen_synthetic
//! ```
//!
//! Six-emotion documents are sampled from per-class keyword distributions
//! mixed with shared filler and neutral words; the POS corpus is sampled
//! from a hand-specified bigram HMM over the same vocabulary, so a tagger
//! trained on it recognizes the emotion keywords. One fixed seed drives
//! everything — reruns rewrite the committed files byte for byte.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use emoforge::corpus::{
    save_corpus, Corpus, CorpusFormat, EmotionLabel, LabeledDocument, SplitRatio,
};

const SEED: u64 = 1203;
const N_POS_SENTENCES: usize = 300;

/// Chance that a document token is an emotion keyword.
const KEYWORD_RATE: f64 = 0.30;
/// Chance that it is a shared, class-neutral content word.
const NEUTRAL_RATE: f64 = 0.22;
/// Chance that a keyword comes from a *different* class than the document.
const CROSS_CLASS_NOISE: f64 = 0.24;

/// Class sizes follow the proportions of a roughly 1:3 imbalanced
/// six-emotion corpus, scaled to 600 documents.
const CLASS_SIZES: [(&str, usize); 6] = [
    ("angry", 128),
    ("disgust", 64),
    ("fear", 38),
    ("happy", 191),
    ("sad", 128),
    ("surprise", 51),
];

// (surface, tag) — tags all come from the keep set {JJ, CX, VM, NP, AMN}.
const ANGRY: &[(&str, &str)] = &[
    ("রাগ", "NP"),
    ("ক্ষোভ", "NP"),
    ("বিরক্ত", "JJ"),
    ("অসহ্য", "JJ"),
    ("ক্রুদ্ধ", "JJ"),
    ("চিৎকার", "NP"),
    ("মেজাজ", "NP"),
    ("ঝগড়া", "NP"),
    ("আক্রোশ", "NP"),
    ("ক্ষিপ্ত", "JJ"),
    ("গর্জন", "NP"),
    ("রাগান্বিত", "JJ"),
    ("প্রতিবাদ", "NP"),
    ("জ্বলছে", "VM"),
];

const DISGUST: &[(&str, &str)] = &[
    ("ঘৃণা", "NP"),
    ("বমি", "NP"),
    ("নোংরা", "JJ"),
    ("জঘন্য", "JJ"),
    ("কুৎসিত", "JJ"),
    ("অরুচি", "NP"),
    ("ছিঃ", "CX"),
    ("পচা", "JJ"),
    ("দুর্গন্ধ", "NP"),
    ("অশ্লীল", "JJ"),
    ("নিকৃষ্ট", "JJ"),
    ("ময়লা", "NP"),
    ("বিশ্রী", "JJ"),
    ("ঘেন্না", "NP"),
];

const FEAR: &[(&str, &str)] = &[
    ("ভয়", "NP"),
    ("আতঙ্ক", "NP"),
    ("ভূত", "NP"),
    ("কাঁপছি", "VM"),
    ("দুশ্চিন্তা", "NP"),
    ("শঙ্কা", "NP"),
    ("বিপদ", "NP"),
    ("ভীত", "JJ"),
    ("আশঙ্কা", "NP"),
    ("সন্ত্রস্ত", "JJ"),
    ("হুমকি", "NP"),
    ("ভয়ানক", "JJ"),
    ("ত্রাস", "NP"),
    ("অন্ধকার", "NP"),
];

const HAPPY: &[(&str, &str)] = &[
    ("খুশি", "JJ"),
    ("আনন্দ", "NP"),
    ("ভালো", "JJ"),
    ("সুন্দর", "JJ"),
    ("হাসি", "NP"),
    ("মজা", "NP"),
    ("দারুণ", "JJ"),
    ("চমৎকার", "JJ"),
    ("শান্তি", "NP"),
    ("প্রিয়", "JJ"),
    ("ভালোবাসা", "NP"),
    ("উৎসব", "NP"),
    ("সুখ", "NP"),
    ("হাসছি", "VM"),
];

const SAD: &[(&str, &str)] = &[
    ("দুঃখ", "NP"),
    ("কষ্ট", "NP"),
    ("কান্না", "NP"),
    ("বেদনা", "NP"),
    ("হতাশ", "JJ"),
    ("একা", "JJ"),
    ("অশ্রু", "NP"),
    ("মলিন", "JJ"),
    ("বিষণ্ণ", "JJ"),
    ("হারিয়ে", "VM"),
    ("ব্যথা", "NP"),
    ("নিঃসঙ্গ", "JJ"),
    ("আফসোস", "NP"),
    ("দুঃখিত", "JJ"),
];

const SURPRISE: &[(&str, &str)] = &[
    ("অবাক", "JJ"),
    ("বিস্ময়", "NP"),
    ("হঠাৎ", "AMN"),
    ("আশ্চর্য", "JJ"),
    ("চমকে", "VM"),
    ("অপ্রত্যাশিত", "JJ"),
    ("অভাবনীয়", "JJ"),
    ("তাজ্জব", "JJ"),
    ("অবিশ্বাস্য", "JJ"),
    ("কল্পনাতীত", "JJ"),
    ("চমক", "NP"),
    ("বিস্মিত", "JJ"),
    ("হতবাক", "JJ"),
    ("আকস্মিক", "AMN"),
];

const KEYWORDS: [&[(&str, &str)]; 6] = [ANGRY, DISGUST, FEAR, HAPPY, SAD, SURPRISE];

// Class-neutral content words: shared mass that keeps the classes from
// being trivially separable. Also tagged with keep-set tags, so the POS
// filter keeps them — realistic noise for the POS-filtered rows.
const NEUTRAL: &[(&str, &str)] = &[
    ("দিন", "NP"),
    ("মানুষ", "NP"),
    ("জীবন", "NP"),
    ("বন্ধু", "NP"),
    ("বাড়ি", "NP"),
    ("সময়", "NP"),
    ("শহর", "NP"),
    ("গল্প", "NP"),
    ("ছবি", "NP"),
    ("খবর", "NP"),
    ("কাজ", "NP"),
    ("রাত", "NP"),
];

// Function words, all present in the bundled stopword list and all tagged
// outside the keep set (so both stopword removal and POS filtering drop
// them) — except খুব/অনেক, degree adverbs the POS filter keeps.
const FILLER: &[(&str, &str)] = &[
    ("আমি", "PR"),
    ("আমরা", "PR"),
    ("তুমি", "PR"),
    ("সে", "PR"),
    ("তারা", "PR"),
    ("আপনি", "PR"),
    ("কে", "PR"),
    ("যে", "PR"),
    ("এবং", "CC"),
    ("কিন্তু", "CC"),
    ("আর", "CC"),
    ("বা", "CC"),
    ("তবে", "CC"),
    ("তাই", "CC"),
    ("না", "CC"),
    ("থেকে", "PP"),
    ("জন্য", "PP"),
    ("সাথে", "PP"),
    ("দিয়ে", "PP"),
    ("মধ্যে", "PP"),
    ("উপর", "PP"),
    ("কাছে", "PP"),
    ("পরে", "PP"),
    ("খুব", "AMN"),
    ("অনেক", "AMN"),
];

/// Harmonic-weighted index: rank 0 is n times as likely as rank n−1.
fn pick_zipf(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let total: f64 = (1..=n).map(|i| 1.0 / i as f64).sum();
    let mut r = rng.random::<f64>() * total;
    for i in 0..n {
        r -= 1.0 / (i + 1) as f64;
        if r <= 0.0 {
            return i;
        }
    }
    n - 1
}

fn gen_doc(rng: &mut ChaCha8Rng, class_idx: usize) -> String {
    let len = rng.random_range(8..=20);
    let mut words: Vec<&str> = Vec::with_capacity(len);
    for _ in 0..len {
        let r: f64 = rng.random();
        let word = if r < KEYWORD_RATE {
            let c = if rng.random::<f64>() < CROSS_CLASS_NOISE {
                let mut other = rng.random_range(0..KEYWORDS.len() - 1);
                if other >= class_idx {
                    other += 1;
                }
                other
            } else {
                class_idx
            };
            KEYWORDS[c][pick_zipf(rng, KEYWORDS[c].len())].0
        } else if r < KEYWORD_RATE + NEUTRAL_RATE {
            NEUTRAL[rng.random_range(0..NEUTRAL.len())].0
        } else {
            FILLER[pick_zipf(rng, FILLER.len())].0
        };
        words.push(word);
    }
    // Danda-punctuate: a break roughly every 8 words, always one at the end.
    let mut text = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        text.push_str(w);
        if (i + 1) % 8 == 0 && i + 1 < words.len() {
            text.push('।');
        }
    }
    text.push('।');
    text
}

const TAGS: [&str; 8] = ["AMN", "CC", "CX", "JJ", "NP", "PP", "PR", "VM"];

fn tag_idx(tag: &str) -> usize {
    TAGS.iter().position(|t| *t == tag).expect("known tag")
}

/// Hand-specified bigram transition structure for the POS corpus sampler.
fn start_dist() -> Vec<(usize, f64)> {
    vec![
        (tag_idx("PR"), 0.35),
        (tag_idx("NP"), 0.25),
        (tag_idx("JJ"), 0.15),
        (tag_idx("AMN"), 0.15),
        (tag_idx("CC"), 0.10),
    ]
}

fn transition_dist(from: usize) -> Vec<(usize, f64)> {
    let t = tag_idx;
    match TAGS[from] {
        "PR" => vec![(t("NP"), 0.30), (t("JJ"), 0.25), (t("VM"), 0.20), (t("AMN"), 0.15), (t("PP"), 0.10)],
        "NP" => vec![(t("VM"), 0.30), (t("PP"), 0.20), (t("JJ"), 0.15), (t("NP"), 0.15), (t("CC"), 0.10), (t("CX"), 0.10)],
        "JJ" => vec![(t("NP"), 0.45), (t("VM"), 0.20), (t("JJ"), 0.15), (t("CX"), 0.10), (t("CC"), 0.10)],
        "VM" => vec![(t("CC"), 0.25), (t("NP"), 0.25), (t("PR"), 0.20), (t("PP"), 0.15), (t("CX"), 0.15)],
        "AMN" => vec![(t("JJ"), 0.35), (t("NP"), 0.35), (t("VM"), 0.30)],
        "CX" => vec![(t("NP"), 0.40), (t("PR"), 0.30), (t("CC"), 0.30)],
        "CC" => vec![(t("PR"), 0.35), (t("NP"), 0.35), (t("JJ"), 0.30)],
        "PP" => vec![(t("NP"), 0.50), (t("VM"), 0.30), (t("PR"), 0.20)],
        _ => unreachable!(),
    }
}

fn pick_weighted(rng: &mut ChaCha8Rng, dist: &[(usize, f64)]) -> usize {
    let total: f64 = dist.iter().map(|(_, w)| w).sum();
    let mut r = rng.random::<f64>() * total;
    for (item, w) in dist {
        r -= w;
        if r <= 0.0 {
            return *item;
        }
    }
    dist[dist.len() - 1].0
}

fn gen_pos_corpus(rng: &mut ChaCha8Rng) -> String {
    // Emission inventories: every word from the document vocabulary,
    // grouped by its tag.
    let mut by_tag: Vec<Vec<&str>> = vec![Vec::new(); TAGS.len()];
    for list in KEYWORDS.iter().copied().chain([NEUTRAL, FILLER]) {
        for (word, tag) in list {
            by_tag[tag_idx(tag)].push(word);
        }
    }

    let mut out = String::new();
    for _ in 0..N_POS_SENTENCES {
        let len = rng.random_range(4..=12);
        let mut tag = pick_weighted(rng, &start_dist());
        for _ in 0..len {
            let words = &by_tag[tag];
            let word = words[pick_zipf(rng, words.len())];
            out.push_str(word);
            out.push('\t');
            out.push_str(TAGS[tag]);
            out.push('\n');
            tag = pick_weighted(rng, &transition_dist(tag));
        }
        out.push('\n');
    }
    out
}

fn main() {
    let data_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut raw: Vec<(usize, String)> = Vec::new();
    for (class_idx, (_, count)) in CLASS_SIZES.iter().enumerate() {
        for _ in 0..*count {
            raw.push((class_idx, gen_doc(&mut rng, class_idx)));
        }
    }
    raw.shuffle(&mut rng);
    let docs: Vec<LabeledDocument> = raw
        .into_iter()
        .enumerate()
        .map(|(i, (class_idx, text))| LabeledDocument {
            id: format!("doc-{i:04}"),
            text,
            label: EmotionLabel::new(CLASS_SIZES[class_idx].0).expect("valid label"),
        })
        .collect();
    let corpus = Corpus::new(docs, None).expect("valid corpus");
    let ratio = SplitRatio::new(5, 1).expect("valid ratio");
    let (train, test) = corpus.stratified_split(ratio, SEED).expect("splittable");
    save_corpus(&train, data_dir.join("train.jsonl"), CorpusFormat::Jsonl).expect("write train");
    save_corpus(&test, data_dir.join("test.jsonl"), CorpusFormat::Jsonl).expect("write test");

    let pos = gen_pos_corpus(&mut rng);
    std::fs::write(data_dir.join("pos_tagged.txt"), &pos).expect("write pos corpus");

    println!(
        "wrote {} train docs, {} test docs, {} tagged sentences to {}",
        train.len(),
        test.len(),
        N_POS_SENTENCES,
        data_dir.display()
    );
}
