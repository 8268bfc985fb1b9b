//! Keyed permutations on `n`-bit strings.
//!
//! Two backends: S-AES (Simplified AES: 16-bit block, 16-bit key, two
//! rounds over nibbles in GF(2^4) mod `x^4 + x + 1`), and explicit tables
//! drawn by a seeded Fisher-Yates shuffle for `n <= 20`. The table backend is
//! an exactly uniform permutation, not a pseudorandom one.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::subsetstates::SubsetSpec;

/// Widest explicit-table permutation.
pub const MAX_TABLE_BITS: usize = 20;

/// S-AES block and key width.
pub const SAES_BITS: usize = 16;

const SBOX: [u8; 16] = [
    0x9, 0x4, 0xA, 0xB, 0xD, 0x1, 0x8, 0x5, 0x6, 0x2, 0x0, 0x3, 0xC, 0xE, 0xF, 0x7,
];
const INV_SBOX: [u8; 16] = [
    0xA, 0x5, 0x9, 0xB, 0x1, 0x7, 0x8, 0xF, 0x6, 0x0, 0x2, 0x3, 0xC, 0x4, 0xD, 0xE,
];
const RCON: [u8; 2] = [0x80, 0x30];

/// A 16-bit S-AES key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SaesKey(pub u16);

impl FromStr for SaesKey {
    type Err = Error;

    /// Exactly four hex digits, optionally prefixed with `0x`.
    fn from_str(s: &str) -> Result<Self> {
        parse_hex16(s).map(SaesKey)
    }
}

impl fmt::Display for SaesKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04x}", self.0)
    }
}

/// Parses a 4-hex-digit string.
pub fn parse_hex16(s: &str) -> Result<u16> {
    let t = s.trim();
    let t = t.strip_prefix("0x").unwrap_or(t);
    if t.len() != 4 || !t.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(Error::Parse(format!("expected 4 hex digits, got {s:?}")));
    }
    u16::from_str_radix(t, 16).map_err(|e| Error::Parse(e.to_string()))
}

fn gf16_mul(mut a: u8, mut b: u8) -> u8 {
    let mut p = 0;
    for _ in 0..4 {
        if b & 1 != 0 {
            p ^= a;
        }
        a <<= 1;
        if a & 0x10 != 0 {
            a ^= 0x13;
        }
        b >>= 1;
    }
    p & 0xF
}

fn nibbles(x: u16) -> [u8; 4] {
    [
        (x >> 12) as u8 & 0xF,
        (x >> 8) as u8 & 0xF,
        (x >> 4) as u8 & 0xF,
        x as u8 & 0xF,
    ]
}

fn from_nibbles(n: [u8; 4]) -> u16 {
    (n[0] as u16) << 12 | (n[1] as u16) << 8 | (n[2] as u16) << 4 | n[3] as u16
}

fn sub_nibbles(x: u16, table: &[u8; 16]) -> u16 {
    from_nibbles(nibbles(x).map(|n| table[n as usize]))
}

// State nibbles in column-major order: [s00, s10, s01, s11]. Shifting the
// second row swaps s10 and s11; it is its own inverse.
fn shift_rows(x: u16) -> u16 {
    let n = nibbles(x);
    from_nibbles([n[0], n[3], n[2], n[1]])
}

fn mix_columns(x: u16, diag: u8, off: u8) -> u16 {
    let n = nibbles(x);
    from_nibbles([
        gf16_mul(diag, n[0]) ^ gf16_mul(off, n[1]),
        gf16_mul(off, n[0]) ^ gf16_mul(diag, n[1]),
        gf16_mul(diag, n[2]) ^ gf16_mul(off, n[3]),
        gf16_mul(off, n[2]) ^ gf16_mul(diag, n[3]),
    ])
}

fn sub_word(b: u8) -> u8 {
    SBOX[(b >> 4) as usize] << 4 | SBOX[(b & 0xF) as usize]
}

fn rot_word(b: u8) -> u8 {
    b.rotate_left(4)
}

/// Expanded S-AES cipher for one key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Saes {
    round_keys: [u16; 3],
}

impl Saes {
    pub fn new(key: SaesKey) -> Self {
        let mut w = [0u8; 6];
        w[0] = (key.0 >> 8) as u8;
        w[1] = key.0 as u8;
        w[2] = w[0] ^ RCON[0] ^ sub_word(rot_word(w[1]));
        w[3] = w[2] ^ w[1];
        w[4] = w[2] ^ RCON[1] ^ sub_word(rot_word(w[3]));
        w[5] = w[4] ^ w[3];
        let pair = |a: u8, b: u8| (a as u16) << 8 | b as u16;
        Self {
            round_keys: [pair(w[0], w[1]), pair(w[2], w[3]), pair(w[4], w[5])],
        }
    }

    pub fn encrypt(&self, block: u16) -> u16 {
        let [k0, k1, k2] = self.round_keys;
        let s = block ^ k0;
        let s = mix_columns(shift_rows(sub_nibbles(s, &SBOX)), 1, 4) ^ k1;
        shift_rows(sub_nibbles(s, &SBOX)) ^ k2
    }

    pub fn decrypt(&self, block: u16) -> u16 {
        let [k0, k1, k2] = self.round_keys;
        let s = sub_nibbles(shift_rows(block ^ k2), &INV_SBOX) ^ k1;
        let s = mix_columns(s, 9, 2);
        sub_nibbles(shift_rows(s), &INV_SBOX) ^ k0
    }
}

pub fn saes_encrypt(key: SaesKey, block: u16) -> u16 {
    Saes::new(key).encrypt(block)
}

pub fn saes_decrypt(key: SaesKey, block: u16) -> u16 {
    Saes::new(key).decrypt(block)
}

/// Uniform permutation of `0..len` by Fisher-Yates.
pub fn random_permutation<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Vec<usize> {
    let mut table: Vec<usize> = (0..len).collect();
    for i in (1..len).rev() {
        let j = rng.random_range(0..=i);
        table.swap(i, j);
    }
    table
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Backend {
    Saes(Saes),
    Table { forward: Vec<u32>, inverse: Vec<u32> },
}

/// A bijection on `n`-bit strings with pointwise forward and inverse evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationOracle {
    n: usize,
    backend: Backend,
}

impl PermutationOracle {
    /// Builds a table-backed oracle, checking that `forward` is a bijection on `n` bits.
    pub fn from_table(n: usize, forward: Vec<u32>) -> Result<Self> {
        if n == 0 || n > MAX_TABLE_BITS {
            return Err(Error::Scale(format!("table width {n} not in 1..={MAX_TABLE_BITS}")));
        }
        let size = 1usize << n;
        if forward.len() != size {
            return Err(Error::InvalidSubset(format!(
                "permutation table has {} entries, expected {size}",
                forward.len()
            )));
        }
        let mut inverse = vec![u32::MAX; size];
        for (x, &y) in forward.iter().enumerate() {
            let slot = inverse
                .get_mut(y as usize)
                .ok_or_else(|| Error::InvalidSubset(format!("table entry {y} out of range")))?;
            if *slot != u32::MAX {
                return Err(Error::InvalidSubset(format!("table maps two inputs to {y}")));
            }
            *slot = x as u32;
        }
        Ok(Self {
            n,
            backend: Backend::Table { forward, inverse },
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_TABLE_BITS {
            return Err(Error::Scale(format!("table width {n} not in 1..={MAX_TABLE_BITS}")));
        }
        Self::from_table(n, (0..1u32 << n).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn universe(&self) -> usize {
        1 << self.n
    }

    pub fn forward(&self, x: usize) -> usize {
        match &self.backend {
            Backend::Saes(c) => c.encrypt(x as u16) as usize,
            Backend::Table { forward, .. } => forward[x] as usize,
        }
    }

    pub fn inverse(&self, y: usize) -> usize {
        match &self.backend {
            Backend::Saes(c) => c.decrypt(y as u16) as usize,
            Backend::Table { inverse, .. } => inverse[y] as usize,
        }
    }

    /// Forward table as `2^n` little-endian `u32` entries.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        (0..self.universe())
            .flat_map(|x| (self.forward(x) as u32).to_le_bytes())
            .collect()
    }

    /// Inverse of [`Self::to_le_bytes`]; always yields a table-backed oracle.
    pub fn from_le_bytes(n: usize, bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(4) {
            return Err(Error::Parse("table length not a multiple of 4 bytes".into()));
        }
        let forward = bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::from_table(n, forward)
    }
}

/// S-AES permutation on 16-bit strings under `key`.
pub fn make_prp_oracle(key: SaesKey) -> PermutationOracle {
    PermutationOracle {
        n: SAES_BITS,
        backend: Backend::Saes(Saes::new(key)),
    }
}

/// Uniform permutation of the `n`-bit strings drawn from `seed`.
pub fn make_random_oracle(n: usize, seed: u64) -> Result<PermutationOracle> {
    if n == 0 || n > MAX_TABLE_BITS {
        return Err(Error::Scale(format!("table width {n} not in 1..={MAX_TABLE_BITS}")));
    }
    let mut rng = rng_from_seed(seed);
    let forward = random_permutation(1 << n, &mut rng)
        .into_iter()
        .map(|y| y as u32)
        .collect();
    PermutationOracle::from_table(n, forward)
}

/// `S = {P(0‖i) : i in 0..2^(n-1)}`, listed in `i` order so that the `i`-th
/// element is exactly the index-oracle answer `P(0‖i)`.
pub fn subset_from_permutation(oracle: &PermutationOracle) -> SubsetSpec {
    let half = oracle.universe() / 2;
    let elements = (0..half).map(|i| oracle.forward(i)).collect();
    SubsetSpec::new(oracle.n(), elements).expect("image of a bijection on half the domain")
}

/// True iff `P⁻¹(candidate)` has leading bit 1, i.e. the candidate is outside `S`.
pub fn verify_complement(oracle: &PermutationOracle, candidate: usize) -> bool {
    candidate < oracle.universe() && oracle.inverse(candidate) >= oracle.universe() / 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn published_reference_vectors() {
        // Standard S-AES worked examples (plaintext, key, ciphertext).
        assert_eq!(saes_encrypt(SaesKey(0xA73B), 0x6F6B), 0x0738);
        assert_eq!(saes_decrypt(SaesKey(0xA73B), 0x0738), 0x6F6B);
        assert_eq!(saes_encrypt(SaesKey(0x4AF5), 0xD728), 0x24EC);
        assert_eq!(saes_decrypt(SaesKey(0x4AF5), 0x24EC), 0xD728);
    }

    #[test]
    fn key_schedule_matches_worked_example() {
        // Round keys for key 0x4AF5: 4AF5, DD28, 87AF.
        assert_eq!(Saes::new(SaesKey(0x4AF5)).round_keys, [0x4AF5, 0xDD28, 0x87AF]);
    }

    #[test]
    fn inverse_tables_and_gf16() {
        for x in 0..16u8 {
            assert_eq!(INV_SBOX[SBOX[x as usize] as usize], x);
        }
        // [[9,2],[2,9]] inverts [[1,4],[4,1]].
        for x in 0..=u16::MAX {
            assert_eq!(mix_columns(mix_columns(x, 1, 4), 9, 2), x);
        }
        assert_eq!(gf16_mul(4, 4), 3);
    }

    #[test]
    fn round_trip_random_pairs() {
        let mut rng = rng_from_seed(40);
        for _ in 0..10_000 {
            let key = SaesKey(rng.random());
            let b: u16 = rng.random();
            assert_eq!(saes_decrypt(key, saes_encrypt(key, b)), b);
        }
    }

    #[test]
    fn key_parsing() {
        assert_eq!("a73b".parse::<SaesKey>().unwrap(), SaesKey(0xA73B));
        assert_eq!("0xA73B".parse::<SaesKey>().unwrap(), SaesKey(0xA73B));
        assert!("a73".parse::<SaesKey>().is_err());
        assert!("a73bb".parse::<SaesKey>().is_err());
        assert!("zz12".parse::<SaesKey>().is_err());
        assert_eq!(SaesKey(0x0738).to_string(), "0738");
    }

    #[test]
    fn saes_oracle_bijective() {
        let o = make_prp_oracle(SaesKey(0x1234));
        let mut hit = vec![false; 1 << 16];
        for x in 0..1 << 16 {
            let y = o.forward(x);
            assert!(!std::mem::replace(&mut hit[y], true));
            assert_eq!(o.inverse(y), x);
        }
    }

    #[test]
    fn random_oracle_reproducible_and_checked() {
        let a = make_random_oracle(10, 7).unwrap();
        let b = make_random_oracle(10, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, make_random_oracle(10, 8).unwrap());
        for x in 0..1024 {
            assert_eq!(a.inverse(a.forward(x)), x);
        }
        assert!(make_random_oracle(21, 0).is_err());
        assert!(make_random_oracle(0, 0).is_err());
        assert!(PermutationOracle::from_table(2, vec![0, 1, 1, 3]).is_err());
        assert!(PermutationOracle::from_table(2, vec![0, 1, 2]).is_err());
        assert!(PermutationOracle::from_table(2, vec![0, 1, 2, 4]).is_err());
    }

    #[test]
    fn random_oracle_first_entry_uniform() {
        // Frequency of forward(0) over many seeds at n = 3.
        let seeds = 100_000u64;
        let mut counts = [0usize; 8];
        for s in 0..seeds {
            counts[make_random_oracle(3, s).unwrap().forward(0)] += 1;
        }
        let p = 1.0 / 8.0;
        let sigma = (seeds as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - seeds as f64 * p).abs() <= 5.0 * sigma);
        }
    }

    #[test]
    fn table_bytes_round_trip() {
        let o = make_random_oracle(6, 3).unwrap();
        let bytes = o.to_le_bytes();
        assert_eq!(bytes.len(), 64 * 4);
        assert_eq!(PermutationOracle::from_le_bytes(6, &bytes).unwrap(), o);
        let s = make_prp_oracle(SaesKey(1));
        let t = PermutationOracle::from_le_bytes(16, &s.to_le_bytes()).unwrap();
        assert!((0..1 << 16).all(|x| t.forward(x) == s.forward(x)));
    }

    #[test]
    fn subsets_and_verification() {
        let id = PermutationOracle::identity(4).unwrap();
        let s = subset_from_permutation(&id);
        assert_eq!(s.elements(), &(0..8).collect::<Vec<_>>());

        let o = make_prp_oracle(SaesKey(0xBEEF));
        let s = subset_from_permutation(&o);
        assert_eq!(s.k(), 1 << 15);
        let mut outside = 0;
        for y in 0..1 << 16 {
            let v = verify_complement(&o, y);
            assert_eq!(v, !s.contains(y));
            if s.contains(y) {
                assert!(o.inverse(y) < 1 << 15);
            }
            outside += v as usize;
        }
        assert_eq!(outside, 1 << 15);
        assert!(verify_complement(&o, o.forward((1 << 15) + 17)));

        let other = subset_from_permutation(&make_prp_oracle(SaesKey(0xBEEE)));
        assert_ne!(s.elements(), other.elements());
    }

    #[test]
    fn avalanche_smoke() {
        let mut rng = rng_from_seed(41);
        let mut flipped = 0u32;
        let samples = 10_000;
        for _ in 0..samples {
            let c = Saes::new(SaesKey(rng.random()));
            let b: u16 = rng.random();
            let bit = 1u16 << rng.random_range(0..16);
            flipped += (c.encrypt(b) ^ c.encrypt(b ^ bit)).count_ones();
        }
        assert!(flipped as f64 / samples as f64 >= 4.0);
    }
}
