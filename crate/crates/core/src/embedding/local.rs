use unicode_normalization::UnicodeNormalization;

use super::{Embedder, EmbedderSpec, EmbeddingError, EmbeddingVector};
use crate::corpus::tokenize;

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET_BASIS, |hash, &b| {
        (hash ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Hashed bag-of-words embedder.
///
/// Text is NFC-normalized and lowercased, tokenized with the approximate
/// tokenizer, and each token's FNV-1a hash selects one of `dimension`
/// buckets. Bucket counts are L2-normalized. Token order is irrelevant.
#[derive(Debug, Clone, Default)]
pub struct LocalEmbedder {
    spec: EmbedderSpec,
}

impl LocalEmbedder {
    pub fn new(dimension: usize) -> Result<Self, EmbeddingError> {
        let spec = EmbedderSpec::local(dimension);
        spec.validate()?;
        Ok(Self { spec })
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a_64(token.as_bytes()) % self.spec.dimension as u64) as usize
    }
}

impl Embedder for LocalEmbedder {
    fn spec(&self) -> &EmbedderSpec {
        &self.spec
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        let folded: String = text.nfc().collect::<String>().to_lowercase();
        let tokens = tokenize(&folded);
        if tokens.is_empty() {
            return Err(EmbeddingError::EmptyInput);
        }
        let mut counts = vec![0.0f64; self.spec.dimension];
        for token in tokens {
            counts[self.bucket(token)] += 1.0;
        }
        let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
        for c in &mut counts {
            *c /= norm;
        }
        Ok(EmbeddingVector::new(counts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::cosine_similarity;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a_64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a_64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a_64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn deterministic_and_unit_norm() {
        let e = LocalEmbedder::default();
        let a = e.embed("Open the LIEF_POST app in VB mode.").unwrap();
        let b = e.embed("Open the LIEF_POST app in VB mode.").unwrap();
        assert_eq!(a.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                   b.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        assert_eq!(a.dimension(), 256);
        assert!((a.norm() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn empty_text_is_rejected() {
        assert_eq!(LocalEmbedder::default().embed("  \n"), Err(EmbeddingError::EmptyInput));
    }

    #[test]
    fn case_is_folded() {
        let e = LocalEmbedder::default();
        assert_eq!(e.embed("Zustellung VB").unwrap(), e.embed("zustellung vb").unwrap());
    }

    /// Oracle: evaluate the bucket index of every token directly from the
    /// published FNV-1a constants and pick two texts with disjoint bucket sets.
    #[test]
    fn disjoint_buckets_are_orthogonal() {
        fn oracle_bucket(token: &str) -> u64 {
            let mut h: u64 = 14695981039346656037;
            for b in token.bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(1099511628211);
            }
            h % 256
        }
        let left = ["paket", "scan", "zustellung"];
        let right = ["app", "signature", "abholung"];
        let lb: BTreeSet<u64> = left.iter().map(|t| oracle_bucket(t)).collect();
        let rb: BTreeSet<u64> = right.iter().map(|t| oracle_bucket(t)).collect();
        assert!(lb.is_disjoint(&rb), "pick other tokens: {lb:?} {rb:?}");

        let e = LocalEmbedder::default();
        for t in left.iter().chain(&right) {
            assert_eq!(e.bucket(t) as u64, oracle_bucket(t));
        }
        let cos = cosine_similarity(&e.embed(&left.join(" ")).unwrap(), &e.embed(&right.join(" ")).unwrap()).unwrap();
        assert!(cos.abs() <= 1e-9);
    }

    proptest! {
        #[test]
        fn token_order_does_not_matter(mut words in prop::collection::vec("[a-zäöü]{1,6}", 1..20), seed in any::<u64>()) {
            let e = LocalEmbedder::default();
            let before = e.embed(&words.join(" ")).unwrap();
            let n = words.len();
            words.rotate_left((seed as usize) % n);
            words.reverse();
            let after = e.embed(&words.join(" ")).unwrap();
            prop_assert_eq!(before, after);
        }
    }
}
