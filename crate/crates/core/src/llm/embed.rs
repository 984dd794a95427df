//! Text embedding used by the output-to-action matching step.

use rand::Rng;

use crate::rng::content_stream;

/// Maps text to a fixed-dimension vector for similarity matching.
///
/// Implementations must be pure functions of the input text so that a
/// policy's action embeddings can be computed once and reused unchanged
/// for an entire run.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Vec<f64>;
}

/// Deterministic seeded-hash embedder producing unit vectors.
///
/// The vector for a given text is drawn from a stream keyed by the text's
/// bytes, so equal texts embed identically (cosine similarity exactly 1)
/// and unequal texts land in near-orthogonal directions with high
/// probability. This stands in for a learned sentence encoder: the
/// matching step stays fully exercised without any model inference.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim >= 1, "embedding dimension must be at least 1");
        Self { dim, seed }
    }
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        let mut rng = content_stream(self.seed, &[b"hash-embed", text.as_bytes()]);
        let mut v: Vec<f64> = (0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for x in &mut v {
                *x /= norm;
            }
        } else {
            // Vanishing draws are measure-zero; pin a fixed direction so
            // the embedding is still a unit vector.
            v.iter_mut().for_each(|x| *x = 0.0);
            v[0] = 1.0;
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_texts_embed_identically() {
        let e = HashEmbedder::new(16, 7);
        assert_eq!(e.embed("alpha"), e.embed("alpha"));
    }

    #[test]
    fn distinct_texts_differ_and_seeds_matter() {
        let e = HashEmbedder::new(16, 7);
        assert_ne!(e.embed("alpha"), e.embed("beta"));
        let other = HashEmbedder::new(16, 8);
        assert_ne!(e.embed("alpha"), other.embed("alpha"));
    }

    #[test]
    fn output_is_unit_norm() {
        let e = HashEmbedder::new(24, 3);
        for text in ["", "x", "a longer piece of text"] {
            let v = e.embed(text);
            assert_eq!(v.len(), 24);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }
}
