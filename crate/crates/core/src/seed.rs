/// Derives an independent child seed from a master seed, a domain salt
/// and an index.
///
/// Uses the SplitMix64 finalizer, so distinct `(salt, index)` pairs under
/// the same master give uncorrelated streams. Experiments use this to
/// assign each image, camera, or grid cell its own RNG without any cross
/// dependence on evaluation order.
pub fn derive_seed(master: u64, salt: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
