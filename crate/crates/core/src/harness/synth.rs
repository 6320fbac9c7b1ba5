//! Generated corpora with known answers, used by tests, examples and the
//! `synth` CLI command.

use super::corpus::{Demonstration, Metadata, SnapshotSource, Split};
use crate::actions::{Action, Intent};
use crate::context::{Speaker, Turn};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// A pronounceable nonsense word of `syllables` consonant-vowel pairs.
fn word(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    let mut w = String::with_capacity(syllables * 2);
    for _ in 0..syllables {
        w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
        w.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
    }
    w
}

/// `n` distinct words.
fn distinct_words(rng: &mut ChaCha8Rng, n: usize, syllables: usize) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = word(rng, syllables);
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// A page of buttons labelled `labels`, with uids `{prefix}{i}`.
fn button_page(prefix: &str, labels: &[String]) -> String {
    let mut html = String::from("<html><body><div class=\"list\">");
    for (i, label) in labels.iter().enumerate() {
        html.push_str(&format!("<button uid=\"{prefix}{i}\">{label} item</button>"));
    }
    html.push_str("</div></body></html>");
    html
}

fn click(uid: &str) -> Action {
    Action::new(Intent::Click, [("uid", uid)]).expect("click with uid is valid")
}

fn demo(id: String, splits: &[Split], turns: Vec<Turn>, snapshots: BTreeMap<String, SnapshotSource>) -> Demonstration {
    let mut d = Demonstration {
        id,
        splits: splits.iter().copied().collect(),
        metadata: Metadata::default(),
        turns,
        dom_snapshots: snapshots,
    };
    d.validate().expect("generated demo is valid");
    d
}

/// Demos where each instructor request names a marker word that appears on
/// exactly one button of the page. 10 evaluable turns per demo, 20
/// candidates per page. The first 80% of demos are `train`, the rest
/// `test-web`.
pub fn marker_corpus(n_turns: usize, seed: u64) -> Vec<Demonstration> {
    const PER_DEMO: usize = 10;
    const CANDIDATES: usize = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_demos = n_turns.div_ceil(PER_DEMO);
    let n_train = n_demos * 4 / 5;
    let mut out = Vec::with_capacity(n_demos);
    let mut remaining = n_turns;
    for d in 0..n_demos {
        let here = remaining.min(PER_DEMO);
        remaining -= here;
        let mut turns = Vec::new();
        let mut snapshots = BTreeMap::new();
        for j in 0..here {
            let labels = distinct_words(&mut rng, CANDIDATES, 3);
            let target = rng.random_range(0..CANDIDATES);
            let key = format!("p{j}");
            snapshots.insert(key.clone(), SnapshotSource::Inline(button_page("b", &labels)));
            let idx = turns.len() as u64;
            turns.push(Turn::utterance(idx, Speaker::Instructor, format!("please open the {} item", labels[target])));
            turns.push(Turn::action(idx + 1, click(&format!("b{target}"))).with_dom_ref(key));
        }
        let split = if d < n_train { Split::Train } else { Split::TestWeb };
        out.push(demo(format!("marker{d:03}"), &[split], turns, snapshots));
    }
    out
}

const FILLERS: &[&str] = &["ok", "sure", "yes", "one sec", "got it", "hm"];

/// Demos where the target is named only by a code word the instructor gave
/// seven turns earlier; the request right before the click does not repeat
/// it. A history window of five turns cannot see the code, ten can.
/// The first 60% of demos are `train`; the rest are spread over the
/// out-of-domain subsets.
pub fn history_corpus(n_demos: usize, seed: u64) -> Vec<Demonstration> {
    const CANDIDATES: usize = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_train = n_demos * 3 / 5;
    (0..n_demos)
        .map(|d| {
            let codes = distinct_words(&mut rng, CANDIDATES, 4);
            let target = rng.random_range(0..CANDIDATES);
            let mut turns = vec![Turn::utterance(0, Speaker::Instructor, format!("later please open the {} item", codes[target]))];
            for i in 1..6u64 {
                let speaker = if i % 2 == 1 { Speaker::Navigator } else { Speaker::Instructor };
                let filler = FILLERS[rng.random_range(0..FILLERS.len())];
                turns.push(Turn::utterance(i, speaker, filler));
            }
            turns.push(Turn::utterance(6, Speaker::Instructor, "go ahead"));
            turns.push(Turn::action(7, click(&format!("c{target}"))).with_dom_ref("page"));
            let snapshots = BTreeMap::from([("page".to_string(), SnapshotSource::Inline(button_page("c", &codes)))]);
            let split = if d < n_train {
                Split::Train
            } else {
                Split::OOD_SUBSETS[d % Split::OOD_SUBSETS.len()]
            };
            demo(format!("hist{d:03}"), &[split], turns, snapshots)
        })
        .collect()
}

/// Ten small demos using every intent, with a form page and a product
/// page. Train and all out-of-domain subsets are represented.
pub fn mixed_corpus(seed: u64) -> Vec<Demonstration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let splits = [
        Split::Train,
        Split::Train,
        Split::Train,
        Split::Train,
        Split::TestWeb,
        Split::TestCat,
        Split::TestGeo,
        Split::TestVis,
        Split::TestWeb,
        Split::TestCat,
    ];
    splits
        .iter()
        .enumerate()
        .map(|(d, &split)| {
            let products = distinct_words(&mut rng, 6, 2);
            let city = word(&mut rng, 3);
            let terms: Vec<String> = (0..450).map(|_| word(&mut rng, 2)).collect();
            let terms = terms.join(" ");
            let form = format!(
                "<html><head><title>Search</title></head><body>\
                 <form id=\"search\"><label for=\"q\">Destination</label>\
                 <input uid=\"q\" type=\"text\" name=\"q\" placeholder=\"City\">\
                 <select uid=\"sort\" name=\"sort\"><option value=\"price\">Price</option><option value=\"rating\">Rating</option></select>\
                 <button uid=\"go\" type=\"submit\">Search</button>\
                 <input uid=\"agree\" type=\"checkbox\" id=\"agree\"><label uid=\"terms\" for=\"agree\">{terms}</label></form>\
                 <p>Find &amp; compare offers</p></body></html>"
            );
            let mut list = String::from("<html><body><h1>Results</h1><ul>");
            for (i, p) in products.iter().enumerate() {
                list.push_str(&format!(
                    "<li><a uid=\"r{i}\" href=\"/item/{p}\">{p} hotel</a> <span>{} stars</span></li>",
                    i % 5 + 1
                ));
            }
            list.push_str("</ul><button uid=\"more\">Show more</button></body></html>");
            let pick = rng.random_range(0..products.len());
            let act = |intent: Intent, args: &[(&str, &str)]| {
                Action::new(intent, args.iter().copied()).expect("valid generated action")
            };
            let mut turns = vec![
                Turn::utterance(0, Speaker::Instructor, format!("Find me a hotel in {city}")),
                Turn::utterance(1, Speaker::Navigator, "Sure, opening the booking site."),
                Turn::action(2, act(Intent::Load, &[("url", "https://booking.example/")])),
                Turn::action(3, act(Intent::Click, &[("uid", "q")])).with_dom_ref("form"),
                Turn::action(4, act(Intent::TextInput, &[("text", city.as_str()), ("uid", "q")])).with_dom_ref("form"),
                Turn::action(5, act(Intent::Change, &[("value", "rating"), ("uid", "sort")])).with_dom_ref("form"),
                Turn::action(6, act(Intent::Submit, &[("uid", "go")])).with_dom_ref("form"),
                Turn::utterance(7, Speaker::Instructor, format!("the {} one looks good", products[pick])),
                Turn::action(8, act(Intent::Scroll, &[("x", "0"), ("y", "400")])).with_dom_ref("list"),
                Turn::action(9, act(Intent::Click, &[("uid", &format!("r{pick}"))])).with_dom_ref("list"),
                Turn::action(10, act(Intent::Say, &[("utterance", "Here it is.")])),
            ];
            turns[0].timestamp_s = Some(0.0);
            // odd demos stop early so turn counts differ
            if d % 2 == 1 {
                turns.truncate(7 + d % 3);
            }
            let snapshots = BTreeMap::from([
                ("form".to_string(), SnapshotSource::Inline(form)),
                ("list".to_string(), SnapshotSource::Inline(list)),
            ]);
            let mut demo = demo(format!("demo{d:02}"), &[split], turns, snapshots);
            demo.metadata = Metadata {
                website: format!("site{}", d % 4),
                category: ["travel", "shopping", "food"][d % 3].to_string(),
                geography: ["us", "uk", "in"][d % 3].to_string(),
            };
            demo
        })
        .collect()
}
