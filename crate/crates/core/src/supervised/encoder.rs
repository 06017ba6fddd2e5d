use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::SupervisedError;

/// Sparse representation: (index, value) pairs with strictly increasing
/// indices, all below the encoder's [`Encoder::dim`].
pub type Features = Vec<(u32, f64)>;

/// A frozen text encoder producing the pooled representation the head reads.
pub trait Encoder: Send + Sync {
    /// Identifier stored in the artifact config; must round-trip through
    /// [`resolve_encoder`] for built-in encoders.
    fn id(&self) -> String;
    fn dim(&self) -> usize;
    fn encode(&self, text: &str) -> Features;
}

/// Feature-hashed unigrams and bigrams, signed, L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEncoder {
    dim: usize,
}

impl HashingEncoder {
    pub const PREFIX: &'static str = "hashing";

    pub fn new(dim: usize) -> Result<Self, SupervisedError> {
        if dim == 0 || dim > u32::MAX as usize {
            return Err(SupervisedError::InvalidConfig(format!(
                "hashing dimension {dim} out of range"
            )));
        }
        Ok(HashingEncoder { dim })
    }

    fn slot(&self, token: &str) -> (u32, f64) {
        let digest = Sha256::digest(token.as_bytes());
        let h = u64::from_le_bytes(digest[..8].try_into().unwrap());
        let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
        ((h % self.dim as u64) as u32, sign)
    }
}

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl Encoder for HashingEncoder {
    fn id(&self) -> String {
        format!("{}:{}", Self::PREFIX, self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Features {
        let words = tokens(text);
        let mut dense = std::collections::BTreeMap::<u32, f64>::new();
        let unigrams = words.iter().map(|w| format!("u:{w}"));
        let bigrams = words.windows(2).map(|p| format!("b:{} {}", p[0], p[1]));
        for t in unigrams.chain(bigrams) {
            let (i, s) = self.slot(&t);
            *dense.entry(i).or_default() += s;
        }
        let norm = dense.values().map(|v| v * v).sum::<f64>().sqrt();
        dense
            .into_iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|(i, v)| (i, v / norm))
            .collect()
    }
}

/// Resolves a built-in encoder identifier such as `hashing:4096`.
pub fn resolve_encoder(id: &str) -> Result<Arc<dyn Encoder>, SupervisedError> {
    let unresolvable = || SupervisedError::UnresolvableEncoder(id.to_string());
    match id.split_once(':') {
        Some((HashingEncoder::PREFIX, dim)) => {
            let dim: usize = dim.parse().map_err(|_| unresolvable())?;
            Ok(Arc::new(HashingEncoder::new(dim)?))
        }
        _ => Err(unresolvable()),
    }
}
