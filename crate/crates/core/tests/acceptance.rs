//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use charsub::reduce::is_vowel;
use charsub::vocab::character_specials;
use charsub::{
    generate_dataset, normalize_text, pack_sequences, reduce_sequence, reduce_str, CorpusIndex, ExampleBuilder,
    MaskingConfig, ReductionScheme, TargetMode, Token, TokenCounts, VocabConfig, Vocabulary,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const HUNDRED_MB: usize = 100 * 1024 * 1024;

fn big_corpus() -> &'static [u8] {
    static CORPUS: OnceLock<Vec<u8>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let t = Instant::now();
        let text = common::SyntheticText::new(2024, 60_000).raw_text(HUNDRED_MB);
        eprintln!("  (generated {} MB synthetic corpus in {:.1?})", text.len() >> 20, t.elapsed());
        text.into_bytes()
    })
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

/// Golden rows: scheme, input sequence, masked-token targets.
const GOLDEN: [(&str, &str, &str); 12] = [
    ("FULL", "mars is about [MASK] the [MASK] of earth", "half size"),
    ("F", "m i a [MASK] t [MASK] o e", "h s"),
    ("M", "r s o [MASK] h [MASK] f r", "l z"),
    ("L", "s s t [MASK] e [MASK] f h", "f e"),
    ("FL", "ms is at [MASK] te [MASK] of eh", "hf se"),
    ("FF", "ma is ab [MASK] th [MASK] of ea", "ha si"),
    ("LL", "rs is ut [MASK] he [MASK] of th", "lf ze"),
    ("FML", "mrs is aot [MASK] the [MASK] of erh", "hlf sze"),
    ("FFF", "mar is abo [MASK] the [MASK] of ear", "hal siz"),
    ("LLL", "ars is out [MASK] the [MASK] of rth", "alf ize"),
    ("V", "a i aou [MASK] e [MASK] o ea", "a ie"),
    ("C", "mrs s bt [MASK] th [MASK] f rth", "hlf sz"),
];

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let tokens = normalize_text("mars is about half the size of earth").tokens;
    let positions = [3, 5];
    let mut checked = 0;
    for (tag, input, targets) in GOLDEN {
        let scheme: ReductionScheme = tag.parse().map_err(|e| format!("{e}"))?;
        for mode in [TargetMode::Partial, TargetMode::Full] {
            let ex = ExampleBuilder::new(scheme, mode)
                .config(MaskingConfig::always_mask(0.15))
                .make_example(&tokens, &positions, 0)
                .map_err(|e| e.to_string())?;
            ensure!(ex.input.join(" ") == input, "{tag}/{mode:?}: input `{}` != `{input}`", ex.input.join(" "));
            let want = if mode == TargetMode::Full { "half size" } else { targets };
            ensure!(ex.targets.join(" ") == want, "{tag}/{mode:?}: targets `{}` != `{want}`", ex.targets.join(" "));
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("{checked} scheme/mode rows exact in {elapsed:.1?}"))
}

fn criterion_2() -> Outcome {
    let corpus = big_corpus();
    let cfg = VocabConfig::new(ReductionScheme::First).with_specials(character_specials());
    // Adversarial text exercising every retained symbol and digit mixtures.
    let tricky = "'tis -x- 4th b2b 1,5 .5 3.14. !? ' - A1B2 ÉCLAIR ünïcode 007bond x-ray";
    let (counts, _) = TokenCounts::count_raw(tricky.as_bytes(), ReductionScheme::First, 8);
    let v = Vocabulary::from_counts(&counts, &cfg).map_err(|e| e.to_string())?;
    ensure!(v.len() <= 26 + cfg.specials.len(), "adversarial text: {} entries", v.len());

    let start = Instant::now();
    let (counts, _) = in_pool(4, || TokenCounts::count_raw(corpus, ReductionScheme::First, 4 << 20));
    let v = Vocabulary::from_counts(&counts, &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(cfg.specials.len() == 10, "reserved set has {} symbols", cfg.specials.len());
    ensure!(v.len() <= 36, "F vocabulary has {} entries", v.len());
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "{} MB, {} tokens: F vocabulary {} <= 26 + {} = 36 in {elapsed:.1?}",
        corpus.len() >> 20,
        counts.total(),
        v.len(),
        cfg.specials.len()
    ))
}

fn criterion_3() -> Outcome {
    let raw = common::SyntheticText::new(33, 40_000).raw_text(7 << 20);
    let stream = normalize_text(&raw);
    ensure!(stream.len() >= 1_000_000, "corpus has only {} tokens", stream.len());
    let mut violations = 0u64;
    let mut words = 0u64;
    for s in ReductionScheme::ALL {
        let Some(max) = s.max_len() else { continue };
        for t in &stream.tokens {
            if t.is_placeholder() {
                continue;
            }
            words += 1;
            if reduce_str(s, t.text()).chars().count() > max {
                violations += 1;
            }
        }
    }
    let idx = CorpusIndex::from_raw(raw.as_bytes(), 512, 1 << 20);
    for s in ReductionScheme::ALL {
        if let Some(max) = s.max_len() {
            violations += idx.analyze(s).histogram.longer_than(max);
        }
    }
    let f_hist = idx.analyze(ReductionScheme::First).histogram;
    ensure!(f_hist.buckets.len() == 1 && f_hist.buckets.contains_key(&1), "F buckets {:?}", f_hist.buckets);
    ensure!(violations == 0, "{violations} length violations");
    Ok(format!("{} tokens, {words} word reductions across 9 positional schemes, 0 violations", stream.len()))
}

fn criterion_4() -> Outcome {
    let mut g = common::SyntheticText::new(44, 8000);
    let toks = g.tokens(100_000);
    let samples = common::chunk(&toks, 512);
    let idx = in_pool(4, || CorpusIndex::from_segments(&samples));
    for s in ReductionScheme::ALL {
        let row = in_pool(4, || idx.analyze(s));
        let naive = common::naive_report(&samples, s);
        ensure!(row.histogram == naive.histogram, "{s}: histogram differs");
        ensure!(row.trim_fraction == naive.trim_fraction, "{s}: trim {} vs {}", row.trim_fraction, naive.trim_fraction);
        ensure!(row.ngrams == naive.ngrams, "{s}: n-grams {:?} vs {:?}", row.ngrams, naive.ngrams);
        ensure!(row.ambiguity == naive.ambiguity, "{s}: ambiguity {:?} vs {:?}", row.ambiguity, naive.ambiguity);
    }
    Ok("100000 tokens, 12 schemes: histogram, trim, n=1..3 n-grams, ambiguity identical".to_owned())
}

fn criterion_5() -> Outcome {
    use ReductionScheme::*;
    let mut violations = Vec::new();
    for c in 0..20u64 {
        let mut g = common::SyntheticText::new(500 + c, 500 + 400 * c as usize);
        let toks = g.tokens(5_000 + 1_000 * c as usize);
        let idx = CorpusIndex::from_segments(&common::chunk(&toks, 512));
        let rep = idx.compare(&ReductionScheme::ALL);
        let uni = |s| rep.row(s).unwrap().ngrams[0].distinct;
        for chain in [[First, FirstLast, FirstMiddleLast], [Last, LastTwo, LastThree]] {
            if !(uni(chain[0]) <= uni(chain[1]) && uni(chain[1]) <= uni(chain[2])) {
                violations.push(format!("corpus {c}: {chain:?}"));
            }
        }
        let full = rep.row(Full).unwrap();
        for r in &rep.rows {
            for n in 0..3 {
                if r.ngrams[n].distinct > full.ngrams[n].distinct {
                    violations.push(format!("corpus {c}: {} n={} exceeds FULL", r.scheme, n + 1));
                }
            }
        }
    }
    ensure!(violations.is_empty(), "{violations:?}");
    Ok("20 corpora, 0 violations".to_owned())
}

fn criterion_6() -> Outcome {
    let raw = common::SyntheticText::new(66, 5000).raw_text(2 << 20);
    let samples = pack_sequences(normalize_text(&raw), 512);
    let pool: Vec<String> = {
        let (counts, _) = TokenCounts::count_raw(raw.as_bytes(), ReductionScheme::First, 1 << 20);
        let v = Vocabulary::from_counts(&counts, &VocabConfig::new(ReductionScheme::First)).map_err(|e| e.to_string())?;
        v.regular().iter().map(|e| e.token.clone()).collect()
    };
    let b = ExampleBuilder::new(ReductionScheme::First, TargetMode::Partial).random_pool(&pool);
    let run = |threads| {
        in_pool(threads, || {
            let mut out = Vec::new();
            generate_dataset(&samples, &b, 7, &mut out).map(|_| out)
        })
    };
    let a = run(1).map_err(|e| e.to_string())?;
    let b8 = run(8).map_err(|e| e.to_string())?;
    ensure!(a == b8, "mask output differs between runs");

    let report = |threads| {
        in_pool(threads, || {
            CorpusIndex::from_raw(raw.as_bytes(), 512, 1 << 18).compare(&ReductionScheme::ALL).to_json_pretty()
        })
    };
    let r1 = report(1);
    let r8 = report(8);
    ensure!(r1 == r8, "stats report differs between 1 and 8 threads");
    Ok(format!("mask JSONL {} bytes identical; stats JSON {} bytes identical (1 vs 8 threads)", a.len(), r1.len()))
}

fn criterion_7() -> Outcome {
    let mut rng = StdRng::seed_from_u64(77);
    let alphabet: Vec<char> = "abcdefghijklmnopqrstuvwxyz'-.,!?".chars().collect();
    let tokens: Vec<Token> = (0..100_000)
        .map(|_| {
            if rng.gen_range(0..40) == 0 {
                return Token::num();
            }
            let len = rng.gen_range(1..=14);
            let mut s: String = (0..len).map(|_| alphabet[rng.gen_range(0..26)]).collect();
            if rng.gen_range(0..8) == 0 {
                s.push(alphabet[rng.gen_range(26..alphabet.len())]);
            }
            Token::new(s)
        })
        .collect();
    let mut checks = 0u64;
    for s in ReductionScheme::ALL {
        let reduced = reduce_sequence(s, &tokens);
        ensure!(reduced.len() == tokens.len(), "{s}: alignment broken");
        for (r, t) in reduced.iter().zip(&tokens) {
            ensure!(reduce_str(s, &r.text) == r.text, "{s}: not idempotent on {}", t.text());
            let mut it = t.text().chars();
            ensure!(r.text.chars().all(|c| it.any(|d| d == c)), "{s}: {} not a subsequence of {}", r.text, t.text());
            checks += 2;
        }
    }
    let mut partitions = 0;
    for t in &tokens {
        let w = t.text();
        if t.is_placeholder() || !w.chars().any(is_vowel) || w.chars().all(is_vowel) {
            continue;
        }
        let v = reduce_str(ReductionScheme::Vowels, w);
        let c = reduce_str(ReductionScheme::Consonants, w);
        let mut merged: Vec<char> = v.chars().chain(c.chars()).collect();
        let mut orig: Vec<char> = w.chars().collect();
        merged.sort_unstable();
        orig.sort_unstable();
        ensure!(merged == orig, "partition fails on {w}");
        partitions += 1;
    }
    Ok(format!("{checks} idempotence/subsequence checks, {partitions} partitions, alignment on 12 x 100000 tokens"))
}

fn criterion_8() -> Outcome {
    let readme = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md"))
        .map_err(|e| format!("README.md: {e}"))?;
    let section = readme
        .split("## Reproducibility scope")
        .nth(1)
        .ok_or("README has no `## Reproducibility scope` section")?;
    for needle in ["GLUE", "SuperGLUE", "probing", "BookCorpus", "Wikipedia", "not reproducible"] {
        ensure!(section.contains(needle), "statement does not mention `{needle}`");
    }
    Ok("non-reproducibility statement present in README".to_owned())
}

fn criterion_9() -> Outcome {
    let corpus = big_corpus();
    let start = Instant::now();
    let report = in_pool(4, || CorpusIndex::from_raw(corpus, 512, 4 << 20).compare(&ReductionScheme::ALL));
    let elapsed = start.elapsed();
    let violations = report.violations();
    ensure!(violations.is_empty(), "{violations:?}");
    ensure!(report.rows.len() == 12, "{} rows", report.rows.len());
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!(
        "{} MB, {} tokens, 12 schemes in {elapsed:.1?} on {} core(s)",
        corpus.len() >> 20,
        report.rows[0].histogram.total,
        std::thread::available_parallelism().map_or(1, |n| n.get())
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("golden masked examples for all 12 schemes", criterion_1),
        ("one-character vocabulary <= 36 on a 100 MB corpus", criterion_2),
        ("reduced-length bounds on >= 10^6 tokens", criterion_3),
        ("parallel engine equals naive reference", criterion_4),
        ("distinct-unigram monotonicity and FULL dominance", criterion_5),
        ("byte-identical mask output and thread-independent stats", criterion_6),
        ("reducer invariants on 10^5 random tokens", criterion_7),
        ("non-reproducibility statement", criterion_8),
        ("compare over 12 schemes on 100 MB in < 5 min", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.contains(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("{id} PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("{id} FAIL  {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion/criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
