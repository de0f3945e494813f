//! Regenerates the synthetic product-offer fixtures under `fixtures/data`.
//!
//!     cargo run --example gen_fixtures [-- <out_dir>]
//!
//! Output is a pure function of the seeds below.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use matchgpt::cost::byte_alphabet;
use matchgpt::record::{CandidatePair, EntityRecord, PairDataset};

const BRANDS: &[&str] = &[
    "Sandisk", "Kingston", "Seagate", "Logitech", "Samsung", "Corsair", "Lexar", "Crucial", "Netgear", "Sony",
    "Canon", "Asus", "Lenovo", "Philips", "Anker", "Belkin", "Toshiba", "Razer", "Garmin", "Bosch",
];

const CATEGORIES: &[(&str, &[&str])] = &[
    ("memory card", &["16GB", "32GB", "64GB", "128GB", "256GB"]),
    ("usb flash drive", &["16GB", "32GB", "64GB", "128GB"]),
    ("external hard drive", &["1TB", "2TB", "4TB", "5TB"]),
    ("solid state drive", &["250GB", "500GB", "1TB", "2TB"]),
    ("wireless mouse", &["1000dpi", "1600dpi", "4000dpi"]),
    ("mechanical keyboard", &["tkl", "full size", "60%"]),
    ("router", &["ac1200", "ac1750", "ax3000"]),
    ("headphones", &["wired", "bluetooth", "noise cancelling"]),
    ("ddr4 ram", &["8GB", "16GB", "32GB"]),
    ("power bank", &["10000mAh", "20000mAh", "26800mAh"]),
];

const LINES: &[&str] = &[
    "Ultra", "Extreme", "Pro", "Plus", "Elite", "Vengeance", "Canvas", "Barracuda", "Nighthawk", "Spectre",
    "Fury", "Expansion", "PowerCore", "Forerunner", "Viper", "Momentum", "Titan", "Nova", "Aero", "Core",
];

const COLORS: &[&str] = &["black", "white", "silver", "blue", "red", "grey"];

const NOISE: &[&str] = &[
    "new", "genuine", "original", "retail", "sealed", "fast", "shipping", "free", "uk", "eu", "version", "oem",
    "bulk", "pack", "official", "warranty", "2019", "2020", "edition", "model",
];

struct Product {
    cluster: String,
    brand: &'static str,
    line: &'static str,
    category: &'static str,
    model: String,
    variant: &'static str,
    color: &'static str,
    price: f64,
}

/// Families share brand, line and category; their members differ in model
/// code or variant, which makes hard negatives.
fn catalog(rng: &mut ChaCha8Rng, families: usize) -> Vec<Vec<Product>> {
    (0..families)
        .map(|f| {
            let brand = BRANDS[rng.gen_range(0..BRANDS.len())];
            let line = LINES[rng.gen_range(0..LINES.len())];
            let (category, variants) = CATEGORIES[rng.gen_range(0..CATEGORIES.len())];
            let prefix: String = (0..2).map(|_| char::from(b'A' + rng.gen_range(0..26u8))).collect();
            let base = rng.gen_range(100..9000);
            let base_price = rng.gen_range(8.0..400.0_f64);
            let members = rng.gen_range(2..=4);
            (0..members)
                .map(|m| Product {
                    cluster: format!("c{f:04}-{m}"),
                    brand,
                    line,
                    category,
                    model: format!("{prefix}{}", base + m * rng.gen_range(1..20)),
                    variant: variants[(m + rng.gen_range(0..variants.len())) % variants.len()],
                    color: COLORS[rng.gen_range(0..COLORS.len())],
                    price: (base_price * (1.0 + 0.25 * m as f64) * 100.0).round() / 100.0,
                })
                .collect()
        })
        .collect()
}

/// One shop's description of `p`.
fn offer(rng: &mut ChaCha8Rng, p: &Product) -> EntityRecord {
    let mut core: Vec<String> = vec![p.line.to_string(), p.category.to_string()];
    if rng.gen_bool(0.85) {
        core.push(p.model.clone());
    }
    if rng.gen_bool(0.8) {
        core.push(p.variant.to_string());
    }
    if rng.gen_bool(0.5) {
        core.push(p.color.to_string());
    }
    core.shuffle(rng);
    if rng.gen_bool(0.7) {
        core.insert(0, p.brand.to_string());
    }
    for _ in 0..rng.gen_range(0..4) {
        let at = rng.gen_range(0..=core.len());
        core.insert(at, NOISE[rng.gen_range(0..NOISE.len())].to_string());
    }
    let mut title = core.join(" ");
    if rng.gen_bool(0.3) {
        title = title.to_uppercase();
    }
    let mut attrs = vec![("title".to_string(), title)];
    if rng.gen_bool(0.8) {
        attrs.push(("brand".into(), p.brand.to_string()));
    }
    if rng.gen_bool(0.7) {
        let price = p.price * rng.gen_range(0.9..1.1);
        let price = match rng.gen_range(0..3) {
            0 => format!("${price:.2}"),
            1 => format!("{price:.2} USD"),
            _ => format!("EUR {price:.2}"),
        };
        attrs.push(("price".into(), price));
    }
    EntityRecord::new(Some(p.cluster.clone()), attrs).expect("generated record is valid")
}

fn positive(rng: &mut ChaCha8Rng, cat: &[Vec<Product>], id: String) -> CandidatePair {
    let fam = &cat[rng.gen_range(0..cat.len())];
    let p = &fam[rng.gen_range(0..fam.len())];
    CandidatePair::new(id, offer(rng, p), offer(rng, p), Some(true))
}

fn negative(rng: &mut ChaCha8Rng, cat: &[Vec<Product>], id: String) -> CandidatePair {
    let f = rng.gen_range(0..cat.len());
    let fam = &cat[f];
    let i = rng.gen_range(0..fam.len());
    let other = if rng.gen_bool(0.7) {
        // sibling in the same family
        &fam[(i + rng.gen_range(1..fam.len())) % fam.len()]
    } else {
        let g = (f + rng.gen_range(1..cat.len())) % cat.len();
        &cat[g][rng.gen_range(0..cat[g].len())]
    };
    CandidatePair::new(id, offer(rng, &fam[i]), offer(rng, other), Some(false))
}

fn pairs(rng: &mut ChaCha8Rng, cat: &[Vec<Product>], prefix: &str, pos: usize, neg: usize) -> Vec<CandidatePair> {
    let mut labels: Vec<bool> = std::iter::repeat_n(true, pos).chain(std::iter::repeat_n(false, neg)).collect();
    labels.shuffle(rng);
    let width = (pos + neg).to_string().len();
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let id = format!("{prefix}-{i:0width$}");
            if l {
                positive(rng, cat, id)
            } else {
                negative(rng, cat, id)
            }
        })
        .collect()
}

/// Learns `n` byte-level merges from `corpus`, GPT-2 merge-file format.
fn learn_merges(corpus: &[String], n: usize) -> String {
    let alphabet = byte_alphabet();
    let mut words: Vec<Vec<String>> = corpus
        .iter()
        .map(|t| t.bytes().map(|b| alphabet[b as usize].to_string()).collect())
        .collect();
    let mut out = String::from("#version: 0.2\n");
    for _ in 0..n {
        let mut counts: HashMap<(String, String), usize> = HashMap::new();
        for w in &words {
            for pair in w.windows(2) {
                *counts.entry((pair[0].clone(), pair[1].clone())).or_default() += 1;
            }
        }
        let Some(((l, r), c)) = counts.into_iter().max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0))) else {
            break;
        };
        if c < 2 {
            break;
        }
        out.push_str(&format!("{l} {r}\n"));
        let merged = format!("{l}{r}");
        for w in &mut words {
            let mut i = 0;
            while i + 1 < w.len() {
                if w[i] == l && w[i + 1] == r {
                    w[i] = merged.clone();
                    w.remove(i + 1);
                }
                i += 1;
            }
        }
    }
    out
}

fn save(ds: Vec<CandidatePair>, path: PathBuf) {
    PairDataset::new(ds).expect("unique ids").save(&path).expect("write dataset");
    println!("wrote {}", path.display());
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/data"));
    fs::create_dir_all(&out).expect("create output dir");

    let mut rng = ChaCha8Rng::seed_from_u64(20_230_101);
    let cat = catalog(&mut rng, 260);
    // validation and pool draw from overlapping families so that related
    // selection has clusters to exclude
    let validation = pairs(&mut rng, &cat[..200], "val", 50, 383);
    let pool = pairs(&mut rng, &cat[60..], "pool", 200, 600);
    let curated = pairs(&mut rng, &cat[200..], "cur", 10, 10);

    let corpus: Vec<String> = pool
        .iter()
        .flat_map(|p| [p.left.title().to_string(), p.right.title().to_string()])
        .collect();
    fs::write(out.join("merges.txt"), learn_merges(&corpus, 400)).expect("write merges");

    save(validation, out.join("validation.jsonl"));
    save(pool, out.join("pool.jsonl"));
    save(curated, out.join("curated.jsonl"));
}
