//! Ring configurations shared by the benchmarks.

use ptring_core::RingConfig;

/// Named PT rings of increasing size, all in the broken phase at the given gain.
pub fn rings() -> Vec<(&'static str, RingConfig)> {
    [
        ("n6", RingConfig::pt(6, 1, 3, 0.5, 1.5)),
        ("n10", RingConfig::pt(10, 1, 5, 0.5, 10.0)),
        ("n16", RingConfig::pt(16, 2, 9, 0.3, 2.0)),
    ]
    .into_iter()
    .map(|(name, cfg)| (name, cfg.expect("fixture is valid")))
    .collect()
}

/// The ring used for sweep benchmarks.
pub fn sweep_ring() -> RingConfig {
    RingConfig::pt(10, 1, 5, 0.5, 0.0).expect("fixture is valid")
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_are_valid() {
        assert_eq!(super::rings().len(), 3);
        assert!(super::sweep_ring().is_pt());
    }
}
