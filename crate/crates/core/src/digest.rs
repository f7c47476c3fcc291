use xxhash_rust::xxh3::xxh3_128;

/// 128-bit content digest used for visited sets and repeat detection.
pub fn digest_bytes(bytes: &[u8]) -> u128 {
    xxh3_128(bytes)
}
