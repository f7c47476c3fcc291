/// Fixed-length bit vector, one bit per site.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitField {
    len: usize,
    words: Vec<u64>,
}

impl BitField {
    pub fn zeros(len: usize) -> Self {
        BitField {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = BitField {
            len,
            words: vec![u64::MAX; len.div_ceil(64)],
        };
        b.clear_tail();
        b
    }

    fn clear_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        let m = 1u64 << (i & 63);
        if v {
            self.words[i >> 6] |= m;
        } else {
            self.words[i >> 6] &= !m;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Little-endian byte image: site `k` is bit `k % 8` of byte `k / 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(self.len.div_ceil(8));
        out
    }

    pub fn from_bytes(len: usize, bytes: &[u8]) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut b = BitField::zeros(len);
        for (k, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            b.words[k] = u64::from_le_bytes(buf);
        }
        // Reject stray bits beyond `len` so the encoding is canonical.
        let before = b.words.clone();
        b.clear_tail();
        (before == b.words).then_some(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_order_is_lsb_first() {
        let mut b = BitField::zeros(10);
        b.set(0, true);
        b.set(9, true);
        assert_eq!(b.to_bytes(), vec![0b0000_0001, 0b0000_0010]);
        assert_eq!(BitField::from_bytes(10, &b.to_bytes()), Some(b));
    }

    #[test]
    fn ones_has_clean_tail() {
        let b = BitField::ones(70);
        assert_eq!(b.count_ones(), 70);
        assert!(BitField::from_bytes(3, &[0xff]).is_none());
    }
}
