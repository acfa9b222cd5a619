use crate::error::{Error, Result};
use crate::property::oracle::fnv1a;
use crate::vocab::Vocabulary;

pub const DEFAULT_FP_WIDTH: usize = 2048;

/// Fixed-width bit fingerprint built from hashed adjacent token pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    width: usize,
}

impl Fingerprint {
    pub fn zeros(width: usize) -> Result<Self> {
        if width == 0 || !width.is_power_of_two() {
            return Err(Error::FingerprintWidth(width));
        }
        Ok(Fingerprint {
            words: vec![0; width.div_ceil(64)],
            width,
        })
    }

    pub fn from_bits(width: usize, bits: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut fp = Self::zeros(width)?;
        for b in bits {
            if b >= width {
                return Err(Error::InvalidArgument(format!("bit {b} >= width {width}")));
            }
            fp.set(b);
        }
        Ok(fp)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1u64 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        (self.words[bit / 64] >> (bit % 64)) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(|&b| self.get(b))
    }
}

/// Hashes every adjacent token bigram into one bit of a `width`-bit vector.
pub fn fingerprint(tokens: &[usize], vocab: &Vocabulary, width: usize) -> Result<Fingerprint> {
    let mut fp = Fingerprint::zeros(width)?;
    for pair in tokens.windows(2) {
        let bytes = vocab
            .symbol(pair[0])
            .bytes()
            .chain(std::iter::once(0x1f))
            .chain(vocab.symbol(pair[1]).bytes());
        let h = fnv1a(bytes);
        fp.set((h as usize) & (width - 1));
    }
    Ok(fp)
}

/// `|a ∧ b| / |a ∨ b|`, defined as 1.0 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64> {
    if a.width != b.width {
        return Err(Error::WidthMismatch(a.width, b.width));
    }
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(f64::from(inter) / f64::from(union))
}
