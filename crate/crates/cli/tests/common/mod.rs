#![allow(dead_code)]

use morseflow::ScalarField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct CorpusField {
    pub label: String,
    pub source: String,
    pub dim: usize,
}

impl CorpusField {
    pub fn new(label: &str, source: &str, dim: usize) -> Self {
        CorpusField {
            label: label.into(),
            source: source.into(),
            dim,
        }
    }

    pub fn field(&self) -> ScalarField {
        ScalarField::parse(&self.source, self.dim).unwrap()
    }
}

/// `x1^2 + ... + xn^2`
pub fn sum_of_squares(n: usize) -> String {
    (1..=n).map(|i| format!("x{i}^2")).collect::<Vec<_>>().join(" + ")
}

/// `-x1^2 - x2^2 + x3^2 + ... + xn^2`
pub fn two_negative(n: usize) -> String {
    let mut s = String::from("-x1^2 - x2^2");
    for i in 3..=n {
        s.push_str(&format!(" + x{i}^2"));
    }
    s
}

pub const DOUBLE_WELL: &str = "(x1^2 - 1)^2 + x2^2";
/// 4x^3 - 8x + 1 has three real roots; lifted to the plane by + x2^2.
pub const TILTED_WELL: &str = "x1^4 - 4*x1^2 + x1 + x2^2";
pub const CUBIC: &str = "x1^3 - 3*x1 + x2^2";
/// Two crossed double wells with a repelling third axis: nine critical
/// points of indices 1, 2 and 3.
pub const EGG_CRATE: &str = "(x1^2 - 1)^2 + (x2^2 - 1)^2 - x3^2";

/// Quartic with nine critical points (four minima, four saddles, one
/// maximum) and coefficients drawn from a fixed seed.
pub fn random_quartic(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: f64 = rng.random_range(-2.5..-1.5);
    let b: f64 = rng.random_range(-2.5..-1.5);
    let c: f64 = rng.random_range(-0.5..0.5);
    let d: f64 = rng.random_range(-0.3..0.3);
    let e: f64 = rng.random_range(-0.3..0.3);
    let t = |v: f64| format!("{v:.4}");
    format!(
        "x1^4 + x2^4 - {}*x1^2 - {}*x2^2 + {}*x1*x2 + {}*x1 + {}*x2",
        t(-a),
        t(-b),
        t(c),
        t(d),
        t(e)
    )
    .replace("+ -", "- ")
}

pub fn corpus() -> Vec<CorpusField> {
    vec![
        CorpusField::new("f2", &sum_of_squares(2), 2),
        CorpusField::new("g2", &two_negative(2), 2),
        CorpusField::new("f3", &sum_of_squares(3), 3),
        CorpusField::new("g3", &two_negative(3), 3),
        CorpusField::new("neg_f3", "-x1^2 - x2^2 - x3^2", 3),
        CorpusField::new("double_well", DOUBLE_WELL, 2),
        CorpusField::new("tilted_well", TILTED_WELL, 2),
        CorpusField::new("cubic", CUBIC, 2),
        CorpusField::new("random_quartic", &random_quartic(7), 2),
    ]
}

/// The corpus plus higher-dimensional fields with richer complexes.
pub fn extended_corpus() -> Vec<CorpusField> {
    let mut all = corpus();
    all.push(CorpusField::new("egg_crate", EGG_CRATE, 3));
    all.push(CorpusField::new("f4", &sum_of_squares(4), 4));
    all.push(CorpusField::new("g4", &two_negative(4), 4));
    all
}
