//! Locality checks that are too slow for unit tests: seminorm stability across
//! sample sizes, the windowed cobordism, and amorphous quantization.

use coarse_hall::experiments::{
    quantization_experiment, seminorm_stability, windowed_cobordism, CobordismConfig, FermiLevel,
    PartitionSpec, QuantizationConfig, SeminormStabilityConfig,
};
use coarse_hall::models::{Flux, ModelConfig, DEFAULT_BULK_MARGIN};

fn hofstadter(n: usize) -> ModelConfig {
    ModelConfig::Hofstadter {
        nx: n,
        ny: n,
        flux: Flux { p: 1, q: 4 },
        t: 1.0,
        disorder: 0.0,
        disorder_seed: 0,
    }
}

#[test]
fn seminorms_agree_across_sample_sizes() {
    for nu in [4.0, 8.0] {
        let cfg = SeminormStabilityConfig {
            model: hofstadter(24),
            level: FermiLevel::Gap(1),
            sizes: [24.0, 32.0],
            nu,
            r0: std::f64::consts::SQRT_2,
            window: 6.0,
            tolerance: 0.05,
            gap_threshold: 0.2,
            bulk_margin: DEFAULT_BULK_MARGIN,
        };
        let t = seminorm_stability(&cfg).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.all_pass(), "nu = {nu}: {:?}", t.rows);
    }
}

#[test]
fn distant_cobordism_leaves_windowed_conductance_unchanged() {
    let cfg = CobordismConfig {
        model: hofstadter(48),
        level: FermiLevel::Gap(1),
        radius: 16.0,
        decay_lengths: 10.0,
        fit_window: 6.0,
        tolerance: 1e-3,
        gap_threshold: 0.2,
        bulk_margin: DEFAULT_BULK_MARGIN,
    };
    let t = windowed_cobordism(&cfg).unwrap();
    assert!(t.all_pass(), "{:?}", t.rows);
    let xi = t.float(0, "value").unwrap();
    assert!(xi > 0.5 && xi < 3.0, "decay length {xi}");
}

#[test]
fn amorphous_landau_gap_is_quantized() {
    let cfg = QuantizationConfig {
        model: ModelConfig::Amorphous {
            density: 1.0,
            width: 30.0,
            height: 30.0,
            cloud_seed: 1,
            hop_range: 2.0,
            t: 1.0,
            field: std::f64::consts::TAU / 8.0,
            disorder: 0.0,
            disorder_seed: 0,
        },
        partition: PartitionSpec::default(),
        levels: vec![FermiLevel::Filling(0.125)],
        radii: vec![3.0, 9.0],
        disorder: None,
        tolerance: 0.1,
        check_radius: 9.0,
        gap_threshold: 0.2,
        bulk_margin: DEFAULT_BULK_MARGIN,
    };
    let t = quantization_experiment(&cfg, 0).unwrap();
    assert!(t.all_pass(), "{:?}", t.rows);
    let (s3, s9) = (t.float(0, "sigma").unwrap(), t.float(1, "sigma").unwrap());
    assert_eq!(t.float(1, "reference"), Some(-1.0));
    assert!(s9.abs() > s3.abs());
}
