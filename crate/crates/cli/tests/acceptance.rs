//! End-to-end acceptance criteria, one PASS/FAIL line each.

use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use arraycap::capacity::{ArrayChannel, SpectralWeights};
use arraycap::geometry::{build_circular, build_linear, build_rectangular, ArrayGeometry, Position};
use arraycap::noisefield::{covariance_from_angular_density, AngularDensity, InterfererSpec, NoiseModel};
use arraycap::optimize::{
    brute_force_best_spacing, optimize_geometry, pair_geometry, Aggregation, DesignConstraints, DesignObjective,
    SearchOptions,
};
use arraycap::validation::{run_checks, Hooks};
use arraycap::wavefield::{Direction, SourceSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C: f64 = 343.0;

type Outcome = Result<String, String>;

fn snr() -> f64 {
    arraycap::db_to_linear(6.0)
}

fn example_arrays() -> Vec<(&'static str, ArrayGeometry)> {
    vec![
        ("linear-3", build_linear(3, 0.03).unwrap()),
        ("rectangular-2x3", build_rectangular(2, 3, 0.03).unwrap()),
        ("circular-6", build_circular(6, 0.03).unwrap()),
    ]
}

fn azimuth_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 * TAU / n as f64).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || {
        format!("runtime {:.2} s exceeds {limit} s", elapsed.as_secs_f64())
    })
}

fn white_noise_equivalence() -> Outcome {
    let start = Instant::now();
    let azimuths = azimuth_grid(360);
    let mut worst: f64 = 0.0;
    let mut by_count: Vec<(usize, f64)> = Vec::new();
    for (name, g) in example_arrays() {
        let m = g.len();
        let channel = ArrayChannel::new(g, NoiseModel::incoherent(1.0), C).unwrap();
        let scan = channel.azimuth_scan(1000.0, PI / 2.0, &azimuths, snr(), None).unwrap();
        let closed = (1.0 + snr() * m as f64).log2();
        for v in &scan.values {
            worst = worst.max((v - closed).abs());
        }
        ensure(worst <= 1e-10, || format!("{name}: deviation {worst:e} from log2(1+snr*M)"))?;
        if let Some(&(_, other)) = by_count.iter().find(|(k, _)| *k == m) {
            ensure((other - scan.values[0]).abs() <= 1e-10, || format!("{name} differs from an M={m} array"))?;
        }
        by_count.push((m, scan.values[0]));
    }
    within(start.elapsed(), 1.0)?;
    Ok(format!(
        "3 arrays x 360 azimuths, max |C - log2(1+snr M)| = {worst:.1e}; M=6 arrays identical; {:.3} s",
        start.elapsed().as_secs_f64()
    ))
}

fn linear_skew() -> Outcome {
    let start = Instant::now();
    let channel = ArrayChannel::new(build_linear(3, 0.03).unwrap(), NoiseModel::spherical(1.0, 0.01), C).unwrap();
    let at = |az: f64| channel.capacity(1000.0, &SourceSpec::FarField(Direction::horizontal(az)), snr()).unwrap().value;
    let (endfire, broadside) = (at(0.0), at(PI / 2.0));
    let margin = endfire - broadside;
    ensure(margin >= 0.1, || format!("margin {margin} < 0.1 bits"))?;
    within(start.elapsed(), 1.0)?;
    Ok(format!("C(0) = {endfire:.4}, C(pi/2) = {broadside:.4}, margin {margin:.4} bits"))
}

fn circular_symmetry() -> Outcome {
    let n = 360;
    let channel = ArrayChannel::new(build_circular(6, 0.03).unwrap(), NoiseModel::spherical(1.0, 0.01), C).unwrap();
    let scan = channel.azimuth_scan(1000.0, PI / 2.0, &azimuth_grid(n), snr(), None).unwrap();
    let v = &scan.values;
    let shift = n / 6;
    let worst = (0..n).map(|i| (v[i] - v[(i + shift) % n]).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-9, || format!("pi/3 shift mismatch {worst:e}"))?;
    // direct DFT magnitudes for cycle indices 1..n/2
    let magnitude = |k: usize| {
        let (re, im) = v.iter().enumerate().fold((0.0, 0.0), |(re, im), (i, x)| {
            let phase = TAU * (k * i) as f64 / n as f64;
            (re + x * phase.cos(), im - x * phase.sin())
        });
        f64::hypot(re, im)
    };
    let (peak, peak_mag) = (1..=n / 2).map(|k| (k, magnitude(k))).fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    ensure(peak == 6, || format!("dominant Fourier component at cycle {peak}"))?;
    Ok(format!("max shift mismatch {worst:.1e} bits; dominant cycle index {peak} (|X| = {peak_mag:.3e})"))
}

fn check_named(name: &str) -> Result<(String, Duration), String> {
    let start = Instant::now();
    let results = run_checks(Hooks::default());
    let elapsed = start.elapsed();
    let r = results.iter().find(|r| r.name == name).ok_or_else(|| format!("no check named {name}"))?;
    ensure(r.passed, || r.detail.clone())?;
    Ok((r.detail.clone(), elapsed))
}

fn whitened_vs_direct() -> Outcome {
    let (detail, elapsed) = check_named("whitened-vs-direct")?;
    within(elapsed, 5.0)?;
    Ok(format!("{detail}; suite ran in {:.2} s", elapsed.as_secs_f64()))
}

fn quadrature_vs_closed_form() -> Outcome {
    let g = build_linear(3, 0.03).unwrap();
    let density = AngularDensity::isotropic(1.0 / (4.0 * PI)).unwrap();
    let numeric = covariance_from_angular_density(&g, 1000.0, &density, C, (128, 64)).unwrap();
    let closed = NoiseModel::spherical(1.0, 0.0).covariance(&g, 1000.0, C).unwrap();
    let err = (numeric - closed.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    ensure(err <= 1e-3, || format!("max entry deviation {err:e}"))?;
    Ok(format!("max entry deviation {err:.2e} sigma^2 at (128, 64)"))
}

fn mmse_correspondence() -> Outcome {
    let (detail, _) = check_named("mmse-identity")?;
    let azimuths = azimuth_grid(360);
    let mut inversions = 0;
    let mut tie_splits = 0;
    let mut widest_tie: f64 = 0.0;
    for (_, g) in example_arrays() {
        let channel = ArrayChannel::new(g, NoiseModel::spherical(1.0, 0.01), C).unwrap();
        let pairs: Vec<(f64, f64)> = azimuths
            .iter()
            .map(|&a| {
                let s = SourceSpec::FarField(Direction::horizontal(a));
                (channel.capacity(1000.0, &s, snr()).unwrap().value, channel.mmse(1000.0, &s, snr()).unwrap())
            })
            .collect();
        for (i, a) in pairs.iter().enumerate() {
            for b in &pairs[i + 1..] {
                let by_capacity = a.0.partial_cmp(&b.0).unwrap();
                let by_mmse = b.1.partial_cmp(&a.1).unwrap();
                if by_capacity == by_mmse {
                    continue;
                }
                if by_capacity.is_eq() || by_mmse.is_eq() {
                    // one metric rounds two symmetric azimuths to the same value
                    tie_splits += 1;
                    widest_tie = widest_tie.max((a.0 - b.0).abs());
                } else {
                    inversions += 1;
                }
            }
        }
    }
    ensure(inversions == 0, || format!("{inversions} azimuth pairs ordered oppositely by C and -MMSE"))?;
    ensure(widest_tie <= 1e-14, || format!("tie split across {widest_tie:e} bits"))?;
    Ok(format!(
        "{detail}; no rank inversions over 3 x 360 azimuths ({tie_splits} pairs tied in one metric only, |dC| <= {widest_tie:.1e})"
    ))
}

fn interference_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let arrays = example_arrays();
    let mut worst_gain: f64 = f64::NEG_INFINITY;
    for trial in 0..100 {
        let (_, g) = &arrays[trial % 3];
        let f = rng.random_range(100.0..8000.0);
        let noise = match trial % 3 {
            0 => NoiseModel::incoherent(1.0),
            1 => NoiseModel::spherical(1.0, rng.random_range(0.001..0.1)),
            _ => NoiseModel::cylindrical(1.0, rng.random_range(0.001..0.1)),
        };
        let dir = |rng: &mut ChaCha8Rng| Direction::new(rng.random_range(0.0..TAU), rng.random_range(0.0..PI)).unwrap();
        let source = SourceSpec::FarField(dir(&mut rng));
        let jam = SourceSpec::FarField(dir(&mut rng));
        let power = rng.random_range(0.01..10.0);
        let clean = ArrayChannel::new(g.clone(), noise.clone(), C).unwrap().capacity(f, &source, snr()).unwrap().value;
        let jammed = ArrayChannel::new(g.clone(), noise.clone().with_interferer(InterfererSpec::new(jam, power).unwrap()), C)
            .unwrap()
            .capacity(f, &source, snr())
            .unwrap()
            .value;
        ensure(jammed <= clean, || format!("trial {trial}: {jammed} > {clean}"))?;
        worst_gain = worst_gain.max(jammed - clean);
        let silent = ArrayChannel::new(g.clone(), noise.with_interferer(InterfererSpec::new(jam, 0.0).unwrap()), C)
            .unwrap()
            .capacity(f, &source, snr())
            .unwrap()
            .value;
        ensure(silent == clean, || format!("trial {trial}: zero-power interferer changed {clean} to {silent}"))?;
    }
    Ok(format!("100 pairs, max C(with) - C(without) = {worst_gain:.3e}; zero power exact"))
}

fn near_far_consistency() -> Outcome {
    let mut worst: f64 = 0.0;
    let azimuths = azimuth_grid(72);
    for (name, g) in example_arrays() {
        for noise in [NoiseModel::incoherent(1.0), NoiseModel::spherical(1.0, 0.01)] {
            let channel = ArrayChannel::new(g.clone(), noise, C).unwrap();
            let far = channel.azimuth_scan(1000.0, PI / 2.0, &azimuths, snr(), None).unwrap();
            let near = channel.azimuth_scan(1000.0, PI / 2.0, &azimuths, snr(), Some(100.0)).unwrap();
            for (a, b) in far.values.iter().zip(&near.values) {
                worst = worst.max((a - b).abs());
            }
            ensure(worst <= 1e-3, || format!("{name}: near/far gap {worst:e}"))?;
        }
    }
    Ok(format!("max |C_near(100 m) - C_far| = {worst:.2e} bits over 3 arrays, 2 noise fields, 72 azimuths"))
}

fn optimizer_vs_brute_force() -> Outcome {
    let start = Instant::now();
    let objective = DesignObjective::new(
        Aggregation::MeanOverAzimuth,
        azimuth_grid(36),
        SpectralWeights::single(1000.0).unwrap(),
        NoiseModel::spherical(1.0, 0.01),
        snr(),
    )
    .unwrap();
    let spacings: Vec<f64> = (0..=190).map(|i| 0.01 + 0.001 * i as f64).collect();
    let (best_spacing, best) = brute_force_best_spacing(&spacings, &objective, C).unwrap();
    let constraints =
        DesignConstraints::new(Position::new(-0.1, 0.0, 0.0), Position::new(0.1, 0.0, 0.0), 0.01, vec![]).unwrap();
    let initial = pair_geometry(0.02).unwrap();
    let options = SearchOptions::new(400, 2024);
    let report = optimize_geometry(&initial, &constraints, &objective, &options, C).unwrap();
    let again = optimize_geometry(&initial, &constraints, &objective, &options, C).unwrap();
    let found = report.final_objective();
    ensure(found >= 0.99 * best, || format!("optimizer {found} vs brute force {best}"))?;
    ensure(report.trace.windows(2).all(|w| w[1].objective >= w[0].objective), || "trace decreases".into())?;
    ensure(
        report.trace_csv() == again.trace_csv() && report.best.to_toml() == again.best.to_toml(),
        || "reruns differ".into(),
    )?;
    within(start.elapsed(), 30.0)?;
    let p = report.best.positions();
    Ok(format!(
        "optimizer {found:.6} (spacing {:.4} m) vs brute force {best:.6} (spacing {best_spacing:.3} m) in {} evaluations, {:.2} s",
        (p[0] - p[1]).norm(),
        report.evaluations,
        start.elapsed().as_secs_f64()
    ))
}

fn run_cli(args: &[&str], dir: &Path) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_arraycap")).args(args).current_dir(dir).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        r#"snr_db = 6.0
seed = 11

[geometry]
builder = "circular"
count = 4
spacing = 0.03

[noise]
model = "spherical"
epsilon = 0.01

[grid.azimuth]
count = 24

[grid.frequency]
start = 200.0
stop = 4000.0
count = 12

[optimize]
budget = 60
box_min = [-0.05, -0.05, 0.0]
box_max = [0.05, 0.05, 0.0]
min_spacing = 0.01
"#,
    )
    .unwrap();
    let mut checked = Vec::new();
    for cmd in ["azimuth-scan", "frequency-scan", "broadband", "optimize"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = format!("{cmd}-{run}.csv");
            run_cli(&[cmd, "--config", "run.toml", "--out", &out], dir.path());
            let mut bytes = std::fs::read(dir.path().join(&out)).unwrap();
            if cmd == "optimize" {
                bytes.extend(std::fs::read(dir.path().join(format!("{cmd}-{run}.toml"))).unwrap());
            }
            outputs.push(bytes);
        }
        ensure(outputs[0] == outputs[1], || format!("{cmd} output differs between runs"))?;
        ensure(!outputs[0].is_empty(), || format!("{cmd} wrote nothing"))?;
        checked.push(cmd);
    }
    Ok(format!("byte-identical reruns: {}", checked.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("white-noise equivalence", white_noise_equivalence),
        ("linear-array skew", linear_skew),
        ("circular-array symmetry", circular_symmetry),
        ("whitened vs direct solve", whitened_vs_direct),
        ("quadrature vs closed form", quadrature_vs_closed_form),
        ("MMSE correspondence", mmse_correspondence),
        ("interference monotonicity", interference_monotonicity),
        ("near/far-field consistency", near_far_consistency),
        ("optimizer vs brute force", optimizer_vs_brute_force),
        ("CLI determinism", cli_determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(criterion)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
