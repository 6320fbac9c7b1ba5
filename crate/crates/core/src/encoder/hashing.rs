use super::{EmbeddingVector, EncoderError};
use std::collections::BTreeSet;

/// Sparse `(bucket, value)` pairs, sorted by bucket, unit L2 norm unless
/// every bucket cancelled out.
pub type SparseVector = Vec<(usize, f64)>;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// splitmix64 finalizer, so that low bits used for the bucket and the top
/// bit used for the sign are both well mixed.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn gram_hash(seed: u64, order: usize, gram: &[char]) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &seed.to_le_bytes());
    h = fnv1a(h, &(order as u64).to_le_bytes());
    let mut buf = [0u8; 4];
    for ch in gram {
        h = fnv1a(h, ch.encode_utf8(&mut buf).as_bytes());
    }
    mix(h)
}

/// Hashed, signed character n-gram features of the lowercased text.
/// A text shorter than every order is hashed whole as a single gram.
pub fn hashed_features(
    text: &str,
    base_dim: usize,
    ngram_orders: &BTreeSet<usize>,
    seed: u64,
) -> Result<SparseVector, EncoderError> {
    if text.is_empty() {
        return Err(EncoderError::EmptyText);
    }
    if base_dim < 2 {
        return Err(EncoderError::InvalidConfig(format!("base_dim {base_dim} < 2")));
    }
    if ngram_orders.is_empty() || ngram_orders.contains(&0) {
        return Err(EncoderError::InvalidConfig("n-gram orders must be non-empty and >= 1".into()));
    }
    let chars: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
    let mut dense = vec![0.0f64; base_dim];
    let mut any = false;
    for &n in ngram_orders {
        if chars.len() < n {
            continue;
        }
        for gram in chars.windows(n) {
            add_gram(&mut dense, seed, n, gram);
            any = true;
        }
    }
    if !any {
        add_gram(&mut dense, seed, chars.len(), &chars);
    }
    let norm = dense.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(dense
        .into_iter()
        .enumerate()
        .filter(|(_, v)| *v != 0.0)
        .map(|(i, v)| (i, v / norm))
        .collect())
}

fn add_gram(dense: &mut [f64], seed: u64, order: usize, gram: &[char]) {
    let h = gram_hash(seed, order, gram);
    let bucket = (h % dense.len() as u64) as usize;
    let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
    dense[bucket] += sign;
}

/// Dense, L2-normalized hashed n-gram embedding.
pub fn embed_hash(
    text: &str,
    base_dim: usize,
    ngram_orders: &BTreeSet<usize>,
    seed: u64,
) -> Result<EmbeddingVector, EncoderError> {
    let sparse = hashed_features(text, base_dim, ngram_orders, seed)?;
    let mut dense = vec![0.0; base_dim];
    for (i, v) in sparse {
        dense[i] = v;
    }
    Ok(EmbeddingVector(dense))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orders(o: &[usize]) -> BTreeSet<usize> {
        o.iter().copied().collect()
    }

    #[test]
    fn deterministic() {
        let o = orders(&[2, 3, 4]);
        assert_eq!(
            embed_hash("open the cart", 64, &o, 7).unwrap(),
            embed_hash("open the cart", 64, &o, 7).unwrap()
        );
        assert_ne!(
            embed_hash("open the cart", 64, &o, 7).unwrap(),
            embed_hash("open the cart", 64, &o, 8).unwrap()
        );
    }

    #[test]
    fn unit_norm() {
        let v = embed_hash("click the submit button", 128, &orders(&[2, 3, 4]), 0).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_trigram() {
        let o = orders(&[3]);
        let v = embed_hash("abc", 8, &o, 0).unwrap();
        let nonzero: Vec<_> = v.values().iter().filter(|x| **x != 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].abs(), 1.0);
        // the one bucket is where the lone trigram hashes
        let h = gram_hash(0, 3, &['a', 'b', 'c']);
        let expected = if h >> 63 == 1 { -1.0 } else { 1.0 };
        assert_eq!(v.values()[(h % 8) as usize], expected);
    }

    #[test]
    fn short_text_hashed_whole() {
        let v = embed_hash("a", 16, &orders(&[2, 3]), 0).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let o = orders(&[2]);
        assert!(matches!(embed_hash("", 8, &o, 0), Err(EncoderError::EmptyText)));
        assert!(matches!(embed_hash("ab", 1, &o, 0), Err(EncoderError::InvalidConfig(_))));
        assert!(matches!(embed_hash("ab", 8, &orders(&[]), 0), Err(EncoderError::InvalidConfig(_))));
    }

    #[test]
    fn case_insensitive() {
        let o = orders(&[2, 3]);
        assert_eq!(embed_hash("Cart", 32, &o, 1).unwrap(), embed_hash("cart", 32, &o, 1).unwrap());
    }
}
