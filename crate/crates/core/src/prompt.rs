//! Frozen hashed bag-of-words encoder for the per-patch text prompts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::autograd::{Scalar, Tensor};
use crate::{Error, Result};

pub const DEFAULT_VOCAB: usize = 4096;

const WEIBO: &str = include_str!("../templates/weibo.txt");
const TWITTER: &str = include_str!("../templates/twitter.txt");
const APS: &str = include_str!("../templates/aps.txt");
const SYNTHETIC: &str = include_str!("../templates/synthetic.txt");

/// Bundled template for a dataset name, if one exists.
pub fn builtin_template(dataset: &str) -> Option<&'static str> {
    match dataset.to_ascii_lowercase().as_str() {
        "weibo" => Some(WEIBO),
        "twitter" => Some(TWITTER),
        "aps" => Some(APS),
        "synthetic" => Some(SYNTHETIC),
        _ => None,
    }
}

/// Substitutes every `{n}` with the patch index.
pub fn render(template: &str, n: usize) -> String {
    template.replace("{n}", &n.to_string())
}

/// Lowercased alphanumeric words.
pub fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Debug, Clone)]
pub struct PromptEncoder {
    template: String,
    vocab: usize,
    dim: usize,
    /// `vocab x dim`, row `v` is the vector of hash bucket `v`.
    proj: Vec<f64>,
}

impl PromptEncoder {
    pub fn new(template: impl Into<String>, vocab: usize, dim: usize, seed: u64) -> Result<Self> {
        if vocab == 0 || dim == 0 {
            return Err(Error::Config("prompt vocabulary and dimension must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let proj = (0..vocab * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        Ok(Self {
            template: template.into(),
            vocab,
            dim,
            proj,
        })
    }

    /// Encoder whose projection is identically zero.
    pub fn zero(dim: usize) -> Self {
        Self {
            template: String::new(),
            vocab: 1,
            dim,
            proj: vec![0.0; dim],
        }
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn counts(&self, text: &str) -> Vec<u32> {
        let mut c = vec![0u32; self.vocab];
        for w in words(text) {
            c[(fnv1a(&w) % self.vocab as u64) as usize] += 1;
        }
        c
    }

    pub fn encode_text(&self, text: &str) -> Vec<f64> {
        let scale = 1.0 / (self.vocab as f64).sqrt();
        let mut out = vec![0.0; self.dim];
        for (v, &c) in self.counts(text).iter().enumerate() {
            if c == 0 {
                continue;
            }
            let row = &self.proj[v * self.dim..(v + 1) * self.dim];
            for (o, &p) in out.iter_mut().zip(row) {
                *o += c as f64 * p * scale;
            }
        }
        out
    }

    /// `P_n` for 1-based patch index `n`.
    pub fn encode(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::Validation("prompt index starts at 1".into()));
        }
        Ok(self.encode_text(&render(&self.template, n)))
    }

    /// Rows `P_1..P_count`.
    pub fn table<T: Scalar>(&self, count: usize) -> Result<Tensor<T>> {
        let mut data = Vec::with_capacity(count * self.dim);
        for n in 1..=count {
            data.extend(self.encode(n)?.into_iter().map(T::c));
        }
        Tensor::new(count, self.dim, data)
    }

    pub fn max_row_norm(&self) -> f64 {
        self.proj
            .chunks(self.dim)
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}
