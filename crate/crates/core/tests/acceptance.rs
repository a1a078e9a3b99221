//! Acceptance criteria 1 to 10. Each test writes one `criterion N: PASS|FAIL`
//! line straight to stderr so it shows up even when output is captured.

use std::io::Write;
use std::time::{Duration, Instant};

use coarse_hall::experiments::{
    additivity_experiment, convergence_study, decay_experiment, determinant_identity_suite,
    excisiveness_examples, geometry_suite, negative_control, perturbation_scaling, phh_suite,
    quantization_experiment, random_halfspaces, random_hermitian_idempotent, random_idempotent, random_partition, random_identity_suite,
    seminorm_inequality_suite, triviality_suite, AdditivityConfig, ConvergenceConfig, DecayConfig,
    DisorderSpec, ExperimentTable, FermiLevel, PartitionSpec, QuantizationConfig, TrivialCase,
    TrivialityConfig,
};
use coarse_hall::geometry::SiteCloud;
use coarse_hall::models::{Flux, ModelConfig, DEFAULT_BULK_MARGIN};
use coarse_hall::operators::generalized_commutator_trace;
use coarse_hall::partitions::coordinate_halfspaces;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240611;

fn report(n: u32, title: &str, pass: bool, elapsed: Duration, budget: Duration, detail: &str) {
    let timely = elapsed <= budget;
    let verdict = if pass && timely { "PASS" } else { "FAIL" };
    let line = format!(
        "criterion {n:>2}: {verdict} {title} ({:.1}s of {}s) {detail}\n",
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {n} failed: {detail}");
    assert!(timely, "criterion {n} exceeded its {}s budget", budget.as_secs());
}

fn describe_failures(t: &ExperimentTable) -> String {
    t.failures()
        .iter()
        .take(5)
        .map(|r| format!("{:?}", t.rows[*r]))
        .collect::<Vec<_>>()
        .join("; ")
}

fn hofstadter(n: usize, p: i64, q: u64, disorder: f64) -> ModelConfig {
    ModelConfig::Hofstadter {
        nx: n,
        ny: n,
        flux: Flux { p, q },
        t: 1.0,
        disorder,
        disorder_seed: 0,
    }
}

fn quantization(model: ModelConfig, radius: f64, disorder: Option<DisorderSpec>) -> QuantizationConfig {
    QuantizationConfig {
        model,
        partition: PartitionSpec::default(),
        levels: vec![FermiLevel::Gap(1)],
        radii: vec![radius],
        disorder,
        tolerance: 0.05,
        check_radius: 8.0,
        gap_threshold: 0.2,
        bulk_margin: DEFAULT_BULK_MARGIN,
    }
}

#[test]
fn criterion_01_exact_identities() {
    let start = Instant::now();
    let t = random_identity_suite(200, SEED, (8, 32)).unwrap();
    let instances = (0..t.rows.len()).map(|r| t.float(r, "instance").unwrap() as i64).collect::<std::collections::BTreeSet<_>>();
    let control = negative_control(SEED, 1e-3).unwrap();
    let scaling = perturbation_scaling(SEED, &[1e-6, 1e-4, 1e-2]).unwrap();
    let s = t.summary();
    let pass = instances.len() >= 200 && t.all_pass() && control.all_pass() && scaling.all_pass();
    report(
        1,
        "exact identity suite",
        pass,
        start.elapsed(),
        Duration::from_secs(60),
        &format!(
            "instances={} rows={} worst_relative_defect={:.2e} negative_control={} linear_scaling={} {}",
            instances.len(),
            t.rows.len(),
            s.worst_defect,
            control.all_pass(),
            scaling.all_pass(),
            describe_failures(&t)
        ),
    );
}

#[test]
fn criterion_02_global_pairing_vanishes() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut samples = 0;
    let models = [
        hofstadter(24, 1, 4, 0.0),
        hofstadter(18, 1, 3, 0.0),
        ModelConfig::Checkerboard { nx: 16, ny: 16, t: 1.0, delta: 1.0 },
        ModelConfig::Amorphous {
            density: 1.0,
            width: 20.0,
            height: 20.0,
            cloud_seed: 1,
            hop_range: 2.0,
            t: 1.0,
            field: std::f64::consts::TAU / 8.0,
            disorder: 0.0,
            disorder_seed: 0,
        },
    ];
    for model in &models {
        let h = model.build().unwrap();
        let eig = h.eigensystem().unwrap();
        let cloud = h.cloud().clone();
        let n = cloud.len();
        let vals = eig.values();
        // Fermi levels between consecutive distinct eigenvalues across the spectrum.
        let mut levels = Vec::new();
        for k in [n / 8, n / 4, n / 2, 3 * n / 4] {
            if vals[k] - vals[k - 1] > 1e-6 {
                levels.push(0.5 * (vals[k] + vals[k - 1]));
            }
        }
        let specs = [
            PartitionSpec::default(),
            PartitionSpec::CoordinateQuadrant { origin: None },
        ];
        for e in levels {
            let p = eig.fermi_projection(e).unwrap();
            for spec in &specs {
                let part = spec.build(&cloud).unwrap();
                let (a, b, c) = part.triple().unwrap();
                let tr = generalized_commutator_trace(a, b, c, p.operator()).unwrap();
                worst = worst.max(tr.norm() / n as f64);
                samples += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst_random = 0.0f64;
    for k in 0..40 {
        let n = rng.random_range(8..=32usize);
        let side = (n as f64).sqrt();
        let sites = (0..n).map(|_| [side * rng.random::<f64>(), side * rng.random::<f64>()]).collect();
        let cloud = std::sync::Arc::new(SiteCloud::new("random", sites).unwrap());
        let rank = rng.random_range(0..=n);
        let p = if k % 2 == 0 {
            random_idempotent(&cloud, rank, &mut rng).unwrap()
        } else {
            random_hermitian_idempotent(&cloud, rank, &mut rng).unwrap()
        };
        let part = random_partition(&cloud, &mut rng).unwrap();
        let (a, b, c) = part.triple().unwrap();
        let tr = generalized_commutator_trace(a, b, c, &p).unwrap();
        worst_random = worst_random.max(tr.norm() / n as f64);
        samples += 1;
    }
    let pass = worst <= 1e-10 && worst_random <= 1e-10 && samples > 0;
    report(
        2,
        "global pairing vanishes",
        pass,
        start.elapsed(),
        Duration::from_secs(30),
        &format!("samples={samples} max|Tr|/N={worst:.2e} random_max|Tr|/N={worst_random:.2e}"),
    );
}

#[test]
fn criterion_03_determinant_identities() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut run = |t: ExperimentTable| {
        worst = worst.max(t.summary().worst_defect);
        failures += t.summary().fail_count;
    };
    for n in [8, 24, 64, 128, 200] {
        let side = (n as f64).sqrt();
        let sites = (0..n).map(|_| [side * rng.random::<f64>(), side * rng.random::<f64>()]).collect();
        let cloud = std::sync::Arc::new(SiteCloud::new("random", sites).unwrap());
        let rank = rng.random_range(1..n);
        let p = random_hermitian_idempotent(&cloud, rank, &mut rng).unwrap();
        let hs = random_halfspaces(&cloud, &mut rng).unwrap();
        run(determinant_identity_suite(&p, &hs).unwrap());
    }
    let h = hofstadter(14, 1, 4, 0.0).build().unwrap();
    let eig = h.eigensystem().unwrap();
    let gap = eig.bulk_gaps(3.0, 0.2)[0];
    let p = eig.fermi_projection(eig.fermi_level_in(&gap)).unwrap();
    let hs = coordinate_halfspaces(h.cloud(), 6.5, 6.5);
    run(determinant_identity_suite(p.operator(), &hs).unwrap());
    let phh = phh_suite(40, 8, SEED).unwrap();
    run(phh);
    report(
        3,
        "determinant identities",
        failures == 0,
        start.elapsed(),
        Duration::from_secs(60),
        &format!("worst_defect={worst:.2e} failures={failures}"),
    );
}

#[test]
fn criterion_04_windowed_quantization() {
    let start = Instant::now();
    let t = quantization_experiment(&quantization(hofstadter(32, 1, 4, 0.0), 8.0, None), SEED).unwrap();
    let sigma = t.float(0, "sigma").unwrap();
    let reference = t.float(0, "reference");
    let residual = t.float(0, "residual").unwrap();
    let pass = t.rows.len() == 1
        && t.text(0, "reference_kind") == Some("oracle")
        && reference == Some(1.0)
        && t.passed(0) == Some(true)
        && residual <= 1e-9 * 1024.0;
    report(
        4,
        "windowed integer quantization",
        pass,
        start.elapsed(),
        Duration::from_secs(120),
        &format!("sigma={sigma:.6} oracle={reference:?} residual={residual:.1e}"),
    );
}

#[test]
fn criterion_05_additivity() {
    let start = Instant::now();
    let cfg = AdditivityConfig {
        model: hofstadter(36, 1, 3, 0.0),
        partition: PartitionSpec::default(),
        gaps: [1, 2],
        radius: 8.0,
        tolerance: 0.1,
        gap_threshold: 0.2,
        bulk_margin: DEFAULT_BULK_MARGIN,
    };
    let t = additivity_experiment(&cfg).unwrap();
    let detail = (0..4)
        .map(|r| {
            format!(
                "{}={:.5}(ref {:?})",
                t.text(r, "item").unwrap(),
                t.float(r, "sigma").unwrap(),
                t.float(r, "reference")
            )
        })
        .collect::<Vec<_>>()
        .join(" ");
    let refs_present = (0..3).all(|r| t.float(r, "reference").is_some());
    report(
        5,
        "additivity under orthogonal sums",
        t.all_pass() && refs_present,
        start.elapsed(),
        Duration::from_secs(300),
        &detail,
    );
}

#[test]
fn criterion_06_triviality() {
    let start = Instant::now();
    let t = triviality_suite(&TrivialityConfig::default(), &TrivialCase::ALL).unwrap();
    let detail = (0..t.rows.len())
        .map(|r| format!("{}={:.1e}", t.text(r, "case").unwrap(), t.float(r, "defect").unwrap()))
        .collect::<Vec<_>>()
        .join(" ");
    report(
        6,
        "triviality catalogue",
        t.all_pass() && t.rows.len() == TrivialCase::ALL.len(),
        start.elapsed(),
        Duration::from_secs(120),
        &detail,
    );
}

#[test]
fn criterion_07_local_constancy() {
    let start = Instant::now();
    let disorder = DisorderSpec {
        strength: 0.05,
        seeds: (1..=5).collect(),
    };
    let t = quantization_experiment(&quantization(hofstadter(32, 1, 4, 0.0), 8.0, Some(disorder)), SEED).unwrap();
    let rows: Vec<usize> = (0..t.rows.len()).filter(|r| t.text(*r, "kind") == Some("disorder")).collect();
    let drift = rows.iter().filter_map(|r| t.float(*r, "defect")).fold(0.0, f64::max);
    let pass = rows.len() == 5 && rows.iter().all(|r| t.passed(*r) == Some(true));
    report(
        7,
        "local constancy under weak disorder",
        pass,
        start.elapsed(),
        Duration::from_secs(300),
        &format!("seeds={} max_drift={drift:.2e}", rows.len()),
    );
}

#[test]
fn criterion_08_convergence() {
    let start = Instant::now();
    let cfg = ConvergenceConfig {
        model: hofstadter(20, 1, 4, 0.0),
        partition: PartitionSpec::default(),
        level: FermiLevel::Gap(1),
        sizes: vec![20.0, 28.0, 36.0],
        r_fraction: 0.25,
        slack: 0.2,
        gap_threshold: 0.2,
        bulk_margin: DEFAULT_BULK_MARGIN,
    };
    let t = convergence_study(&cfg).unwrap();
    let checked = (0..t.rows.len()).filter(|r| t.passed(*r).is_some()).count();
    let detail = (0..t.rows.len())
        .map(|r| format!("L={}:{:.2e}", t.float(r, "size").unwrap(), t.float(r, "defect").unwrap_or(f64::NAN)))
        .collect::<Vec<_>>()
        .join(" ");
    report(
        8,
        "convergence with sample size",
        t.all_pass() && checked == 3,
        start.elapsed(),
        Duration::from_secs(600),
        &detail,
    );
}

#[test]
fn criterion_09_decay_and_seminorms() {
    let start = Instant::now();
    let cfg = DecayConfig {
        model: hofstadter(32, 1, 4, 0.0),
        level: FermiLevel::Gap(1),
        r0: std::f64::consts::SQRT_2,
        window: 6.0,
        bins: (0..=12).map(f64::from).collect(),
        min_distance: 1.0,
        max_slope: -0.2,
        gap_threshold: 0.2,
        bulk_margin: DEFAULT_BULK_MARGIN,
    };
    let decay = decay_experiment(&cfg).unwrap();
    let ineq = seminorm_inequality_suite(50, SEED).unwrap();
    let instances = (0..ineq.rows.len()).map(|r| ineq.float(r, "instance").unwrap() as i64).collect::<std::collections::BTreeSet<_>>();
    let pass = decay.table.all_pass() && ineq.all_pass() && instances.len() == 50;
    report(
        9,
        "decay and seminorm inequalities",
        pass,
        start.elapsed(),
        Duration::from_secs(180),
        &format!(
            "slope={:.3} inequality_rows={} worst_lhs/rhs={:.3}",
            decay.slope.unwrap_or(f64::NAN),
            ineq.rows.len(),
            ineq.summary().worst_defect
        ),
    );
}

#[test]
fn criterion_10_geometry() {
    let start = Instant::now();
    let geo = geometry_suite(100, SEED).unwrap();
    let exc = excisiveness_examples().unwrap();
    let detail = (0..exc.rows.len())
        .map(|r| {
            format!(
                "{}:mu={:.3}:{}",
                exc.text(r, "example").unwrap(),
                exc.float(r, "mu_hat").unwrap_or(f64::NAN),
                exc.text(r, "verdict").unwrap()
            )
        })
        .collect::<Vec<_>>()
        .join(" ");
    report(
        10,
        "geometry predicates",
        geo.all_pass() && exc.all_pass(),
        start.elapsed(),
        Duration::from_secs(60),
        &detail,
    );
}
