//! Bloom filter over 64-bit keys.
//!
//! Bit positions come from double hashing (`h1 + i * h2`) of two independent
//! 64-bit mixes of the key, so a filter is fully determined by its sizing and
//! the inserted keys.

/// Sizing for a [`BloomFilter`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BloomConfig {
    pub bits_per_key: usize,
    pub hashes: u32,
}

impl Default for BloomConfig {
    /// 10 bits per key with 7 probes, a design false-positive rate near 1%.
    fn default() -> Self {
        BloomConfig {
            bits_per_key: 10,
            hashes: 7,
        }
    }
}

impl BloomConfig {
    pub fn with_bits_per_key(bits_per_key: usize) -> Self {
        // k = ln 2 * m / n rounded, at least one probe
        let hashes = ((bits_per_key as f64) * std::f64::consts::LN_2)
            .round()
            .max(1.0) as u32;
        BloomConfig {
            bits_per_key,
            hashes,
        }
    }

    /// Expected false-positive rate `(1 - e^{-k/b})^k` for `b` bits per key.
    pub fn design_false_positive_rate(&self) -> f64 {
        let k = self.hashes as f64;
        let b = self.bits_per_key as f64;
        (1.0 - (-k / b).exp()).powf(k)
    }
}

#[derive(Debug, Clone)]
pub struct BloomFilter {
    words: Vec<u64>,
    bits: u64,
    hashes: u32,
}

impl BloomFilter {
    pub fn new(expected_keys: usize, config: BloomConfig) -> Self {
        let bits = (expected_keys.max(1) * config.bits_per_key.max(1)).max(64) as u64;
        let words = vec![0u64; bits.div_ceil(64) as usize];
        BloomFilter {
            words,
            bits,
            hashes: config.hashes.max(1),
        }
    }

    pub fn insert(&mut self, key: u64) {
        let (h1, h2) = hash_pair(key);
        for i in 0..self.hashes as u64 {
            let bit = h1.wrapping_add(i.wrapping_mul(h2)) % self.bits;
            self.words[(bit / 64) as usize] |= 1 << (bit % 64);
        }
    }

    /// `false` means the key was never inserted.
    pub fn contains(&self, key: u64) -> bool {
        let (h1, h2) = hash_pair(key);
        (0..self.hashes as u64).all(|i| {
            let bit = h1.wrapping_add(i.wrapping_mul(h2)) % self.bits;
            self.words[(bit / 64) as usize] & (1 << (bit % 64)) != 0
        })
    }

    pub fn bit_len(&self) -> u64 {
        self.bits
    }

    pub fn hash_count(&self) -> u32 {
        self.hashes
    }
}

fn mix64(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_pair(key: u64) -> (u64, u64) {
    let h1 = mix64(key.wrapping_add(0x9e37_79b9_7f4a_7c15));
    // odd step so successive probes never collapse onto one bit
    let h2 = mix64(key ^ 0xd6e8_feb8_6659_fd93) | 1;
    (h1, h2)
}
