//! Template-generated question corpus in the `COARSE:fine question` format.
//!
//! Used when the public question-classification files are not at hand. The
//! templates share most of their function words across classes ("what is the
//! ... of ...") so the class has to be read from the content words, and a
//! slice of every filler list is withheld from the training split so the test
//! split contains words the embedding table has never seen. A fixed share of
//! labels is redrawn at random so that, like the public data, the task cannot
//! be solved perfectly.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corpus::{CoarseLabel, LabeledSentence};

struct Template {
    label: CoarseLabel,
    fine: &'static str,
    text: &'static str,
}

const fn t(label: CoarseLabel, fine: &'static str, text: &'static str) -> Template {
    Template { label, fine, text }
}

use CoarseLabel::{
    Abbreviation as A, Description as D, Entity as E, Human as H, Location as L, Number as N,
};

const TEMPLATES: &[Template] = &[
    t(A, "exp", "what does {acro} stand for ?"),
    t(A, "exp", "what is the full form of {acro} ?"),
    t(A, "exp", "{acro} is an acronym for what ?"),
    t(A, "exp", "what do the letters {acro} mean ?"),
    t(A, "abb", "what is the abbreviation for {org} ?"),
    t(A, "abb", "what is the short form of {org} ?"),
    t(D, "def", "what is {concept} ?"),
    t(D, "def", "what is the meaning of {concept} ?"),
    t(D, "def", "what does {concept} mean ?"),
    t(D, "def", "what is the definition of {concept} ?"),
    t(D, "manner", "how does a {thing} work ?"),
    t(D, "manner", "how do you {verb} a {thing} ?"),
    t(D, "manner", "how can i {verb} my {thing} ?"),
    t(D, "reason", "why is the {thing} {adj} ?"),
    t(D, "reason", "why do {group} {action} ?"),
    t(D, "reason", "what causes {phenomenon} ?"),
    t(D, "desc", "what is the origin of {concept} ?"),
    t(D, "desc", "what is the history of the {thing} ?"),
    t(D, "desc", "what happens during {phenomenon} ?"),
    t(E, "color", "what color is a {thing} ?"),
    t(E, "color", "what is the color of the {thing} ?"),
    t(E, "animal", "what kind of animal is a {animal} ?"),
    t(E, "animal", "what animal is the symbol of {country} ?"),
    t(E, "sport", "what sport does {person} play ?"),
    t(E, "instru", "what instrument did {person} play ?"),
    t(E, "lang", "what language is spoken in {country} ?"),
    t(E, "currency", "what currency is used in {country} ?"),
    t(E, "currency", "what is the currency of {country} ?"),
    t(E, "dismed", "what disease is caused by {cause} ?"),
    t(E, "food", "what is the national dish of {country} ?"),
    t(E, "product", "what is a {thing} made of ?"),
    t(
        E,
        "other",
        "what is the name of the {thing} in the {work} ?",
    ),
    t(E, "termeq", "what is another word for {concept} ?"),
    t(H, "ind", "who invented the {thing} ?"),
    t(H, "ind", "who wrote the {work} ?"),
    t(H, "ind", "who discovered {concept} ?"),
    t(H, "ind", "who was the first {role} of {country} ?"),
    t(H, "ind", "who is the {role} of {org} ?"),
    t(
        H,
        "ind",
        "what is the name of the {role} who founded {org} ?",
    ),
    t(H, "gr", "which company makes the {thing} ?"),
    t(H, "gr", "what team did {person} play for ?"),
    t(H, "desc", "who is {person} ?"),
    t(L, "other", "where is the {landmark} ?"),
    t(L, "other", "where was {person} born ?"),
    t(L, "other", "where can i find a {thing} ?"),
    t(L, "other", "where do {animal} live ?"),
    t(L, "city", "what is the capital of {country} ?"),
    t(L, "city", "in which city is the {landmark} ?"),
    t(L, "country", "what country is the {landmark} in ?"),
    t(L, "country", "which country produces the most {goods} ?"),
    t(L, "mount", "what is the highest mountain in {country} ?"),
    t(L, "other", "what river flows through {city} ?"),
    t(N, "count", "how many {group} live in {country} ?"),
    t(N, "count", "what is the population of {city} ?"),
    t(N, "count", "how many {parts} does a {animal} have ?"),
    t(N, "weight", "how much does a {animal} weigh ?"),
    t(N, "date", "when was {person} born ?"),
    t(N, "date", "when did {event} happen ?"),
    t(N, "date", "what year did {event} end ?"),
    t(N, "dist", "how tall is the {landmark} ?"),
    t(N, "dist", "how far is {city} from {city} ?"),
    t(N, "period", "how long does it take to {verb} a {thing} ?"),
    t(N, "period", "how old is {person} ?"),
    t(N, "money", "how much does a {thing} cost ?"),
    t(N, "temp", "what is the temperature of the {body} ?"),
    t(N, "speed", "how fast can a {animal} run ?"),
];

struct Slot {
    name: &'static str,
    words: &'static [&'static str],
}

const SLOTS: &[Slot] = &[
    Slot {
        name: "acro",
        words: &[
            "nasa", "fbi", "cia", "laser", "scuba", "radar", "dna", "aids", "unesco", "nato",
            "bmw", "ibm", "asap", "awol", "rsvp", "ufo", "cpu", "gdp", "html", "nba", "opec",
            "pdf",
        ],
    },
    Slot {
        name: "org",
        words: &[
            "the united nations",
            "the world health organization",
            "general electric",
            "the european union",
            "the red cross",
            "microsoft",
            "the federal reserve",
            "harvard university",
            "the national football league",
            "amnesty international",
            "the international monetary fund",
            "the peace corps",
            "greenpeace",
            "the boy scouts",
        ],
    },
    Slot {
        name: "concept",
        words: &[
            "democracy",
            "gravity",
            "photosynthesis",
            "inflation",
            "evolution",
            "karma",
            "entropy",
            "relativity",
            "feudalism",
            "socialism",
            "osmosis",
            "irony",
            "nirvana",
            "capitalism",
            "metabolism",
            "jazz",
            "calculus",
            "nostalgia",
            "impressionism",
            "algebra",
            "surrealism",
            "hypnosis",
        ],
    },
    Slot {
        name: "thing",
        words: &[
            "telephone",
            "microwave",
            "compass",
            "camera",
            "piano",
            "bicycle",
            "television",
            "telescope",
            "refrigerator",
            "computer",
            "submarine",
            "helicopter",
            "guitar",
            "parachute",
            "thermometer",
            "calculator",
            "lightbulb",
            "typewriter",
            "clock",
            "violin",
            "zipper",
            "battery",
            "printer",
            "sewing machine",
        ],
    },
    Slot {
        name: "verb",
        words: &[
            "fix",
            "clean",
            "build",
            "repair",
            "paint",
            "tune",
            "assemble",
            "replace",
            "polish",
            "install",
            "restore",
            "calibrate",
        ],
    },
    Slot {
        name: "adj",
        words: &[
            "round",
            "red",
            "loud",
            "expensive",
            "dangerous",
            "popular",
            "heavy",
            "blue",
            "cold",
            "shiny",
            "fragile",
        ],
    },
    Slot {
        name: "group",
        words: &[
            "people",
            "cats",
            "dogs",
            "birds",
            "teenagers",
            "farmers",
            "sailors",
            "bees",
            "students",
            "soldiers",
            "immigrants",
            "monks",
        ],
    },
    Slot {
        name: "action",
        words: &[
            "sleep",
            "migrate",
            "dream",
            "sneeze",
            "yawn",
            "sing",
            "hibernate",
            "laugh",
            "blush",
            "shiver",
        ],
    },
    Slot {
        name: "phenomenon",
        words: &[
            "earthquakes",
            "rainbows",
            "thunder",
            "tides",
            "hiccups",
            "eclipses",
            "hurricanes",
            "droughts",
            "volcanic eruptions",
            "the northern lights",
            "acid rain",
            "global warming",
        ],
    },
    Slot {
        name: "animal",
        words: &[
            "cheetah", "elephant", "penguin", "kangaroo", "dolphin", "giraffe", "koala", "tiger",
            "octopus", "camel", "panda", "ostrich", "whale", "spider", "horse", "zebra", "gorilla",
            "hedgehog",
        ],
    },
    Slot {
        name: "country",
        words: &[
            "france",
            "japan",
            "brazil",
            "canada",
            "egypt",
            "india",
            "mexico",
            "australia",
            "germany",
            "kenya",
            "peru",
            "norway",
            "italy",
            "spain",
            "china",
            "russia",
            "argentina",
            "thailand",
            "sweden",
            "nigeria",
            "greece",
            "portugal",
        ],
    },
    Slot {
        name: "person",
        words: &[
            "michael jordan",
            "mozart",
            "einstein",
            "shakespeare",
            "napoleon",
            "elvis presley",
            "babe ruth",
            "jimi hendrix",
            "marie curie",
            "abraham lincoln",
            "picasso",
            "beethoven",
            "wayne gretzky",
            "pele",
            "charles darwin",
            "john lennon",
            "cleopatra",
            "galileo",
            "queen victoria",
            "muhammad ali",
        ],
    },
    Slot {
        name: "cause",
        words: &[
            "mosquitoes",
            "bacteria",
            "smoking",
            "a virus",
            "ticks",
            "contaminated water",
            "asbestos",
            "vitamin deficiency",
            "radiation",
            "fleas",
        ],
    },
    Slot {
        name: "work",
        words: &[
            "odyssey",
            "hamlet",
            "bible",
            "iliad",
            "godfather",
            "wizard of oz",
            "star wars trilogy",
            "divine comedy",
            "great gatsby",
            "moby dick",
            "lord of the rings",
            "raven",
        ],
    },
    Slot {
        name: "role",
        words: &[
            "president",
            "king",
            "prime minister",
            "chairman",
            "governor",
            "director",
            "emperor",
            "secretary general",
            "coach",
            "queen",
            "ambassador",
            "mayor",
        ],
    },
    Slot {
        name: "landmark",
        words: &[
            "eiffel tower",
            "statue of liberty",
            "taj mahal",
            "great wall",
            "colosseum",
            "golden gate bridge",
            "big ben",
            "sydney opera house",
            "leaning tower of pisa",
            "empire state building",
            "hoover dam",
            "kremlin",
            "parthenon",
            "space needle",
        ],
    },
    Slot {
        name: "goods",
        words: &[
            "coffee", "oil", "wine", "rice", "gold", "diamonds", "cocoa", "wool", "tea", "copper",
            "silk", "cotton",
        ],
    },
    Slot {
        name: "city",
        words: &[
            "paris", "london", "tokyo", "chicago", "cairo", "rome", "berlin", "moscow", "boston",
            "madrid", "vienna", "bangkok", "dublin", "toronto", "sydney", "prague", "lisbon",
            "budapest",
        ],
    },
    Slot {
        name: "parts",
        words: &[
            "legs",
            "teeth",
            "bones",
            "hearts",
            "eyes",
            "stomachs",
            "toes",
            "ribs",
            "chromosomes",
            "wings",
        ],
    },
    Slot {
        name: "event",
        words: &[
            "the french revolution",
            "world war ii",
            "the gold rush",
            "the civil war",
            "the great depression",
            "the first moon landing",
            "the boston tea party",
            "the black death",
            "the cold war",
            "the renaissance",
            "prohibition",
            "the battle of hastings",
        ],
    },
    Slot {
        name: "body",
        words: &[
            "sun",
            "moon",
            "earth's core",
            "ocean floor",
            "human body",
            "planet venus",
            "surface of mars",
            "arctic",
            "sahara desert",
            "lava",
            "north pole",
        ],
    },
];

/// Fraction of each filler list that only the test split draws from.
const HELD_OUT: f64 = 0.15;

/// Share of questions whose coarse label is redrawn uniformly at random, so
/// the task is not perfectly separable.
const LABEL_NOISE: f64 = 0.12;

/// Coarse-class mix of the public training and test splits.
const TRAIN_MIX: [(CoarseLabel, u32); 6] =
    [(A, 86), (D, 1162), (N, 896), (E, 1250), (H, 1223), (L, 835)];
const TEST_MIX: [(CoarseLabel, u32); 6] = [(A, 9), (D, 138), (N, 113), (E, 94), (H, 65), (L, 81)];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

fn slot_words(name: &str, split: Split) -> &'static [&'static str] {
    let slot = SLOTS
        .iter()
        .find(|s| s.name == name)
        .unwrap_or_else(|| panic!("template references unknown slot {name}"));
    match split {
        Split::Test => slot.words,
        Split::Train => {
            let keep = ((slot.words.len() as f64) * (1.0 - HELD_OUT)).ceil() as usize;
            &slot.words[..keep.max(1)]
        }
    }
}

fn pick_label(rng: &mut ChaCha8Rng, mix: &[(CoarseLabel, u32)]) -> CoarseLabel {
    let total: u32 = mix.iter().map(|(_, w)| w).sum();
    let mut r = rng.random_range(0..total);
    for &(label, w) in mix {
        if r < w {
            return label;
        }
        r -= w;
    }
    unreachable!()
}

fn fill(template: &str, split: Split, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut out = Vec::new();
    for piece in template.split_whitespace() {
        if let Some(name) = piece.strip_prefix('{').and_then(|p| p.strip_suffix('}')) {
            let word = slot_words(name, split).choose(rng).unwrap();
            out.extend(word.split_whitespace().map(str::to_string));
        } else {
            out.push(piece.to_string());
        }
    }
    // Sentence-initial capitalisation, as in the public files.
    if let Some(first) = out.first_mut() {
        let mut chars = first.chars();
        if let Some(c) = chars.next() {
            *first = c.to_uppercase().chain(chars).collect();
        }
    }
    out
}

/// `n` questions drawn with the class mix of `split`.
pub fn generate(n: usize, split: Split, seed: u64) -> Vec<LabeledSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix = match split {
        Split::Train => &TRAIN_MIX,
        Split::Test => &TEST_MIX,
    };
    (0..n)
        .map(|_| {
            let label = pick_label(&mut rng, mix);
            let candidates: Vec<&Template> =
                TEMPLATES.iter().filter(|t| t.label == label).collect();
            let tpl = candidates.choose(&mut rng).unwrap();
            let coarse = if rng.random_bool(LABEL_NOISE) {
                *CoarseLabel::ALL.choose(&mut rng).unwrap()
            } else {
                label
            };
            LabeledSentence {
                coarse,
                fine: tpl.fine.to_string(),
                tokens: fill(tpl.text, split, &mut rng),
            }
        })
        .collect()
}
