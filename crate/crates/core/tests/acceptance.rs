//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Heavy cases run sequentially to bound peak memory.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use phlim::cli::{default_args, report, run_document, StateSpecDocument};
use phlim::detection::{
    estimate_velocity_centroid, estimate_velocity_toa, intensity_record, intensity_record_with_tolerance,
    plan_transit, TransitPlan,
};
use phlim::kspace::{gauss_legendre, spherical_harmonic, CartesianKGrid, KGrid, KVec3, SphericalKGrid};
use phlim::observables::{
    biphoton_mass_estimate, closed_form_gaussian_energy, closed_form_gaussian_mass, closed_form_mixed_mass,
    closed_form_two_mode_mass, observables_discrete, observables_packet, pairwise_angles, volume_scaling_check,
    Observables,
};
use phlim::restframe::{
    boost_to_rest_frame, decompose, energy_in_modes, l2_distance_sq, reconstruct, scalar_product_modes,
};
use phlim::states::{
    make_biphoton, make_gaussian_packet, BiphotonSpec, DiscreteModeState, EnsembleKind, GaussianPacketSpec,
    WavePacket,
};
use phlim::Error;

/// `E`, `m` of a unit-width Gaussian from an independent high-precision
/// radial quadrature, keyed by `k₀/σ`.
const ORACLE: [(f64, f64, f64); 3] = [
    (2.0, 2.249_808_588_969_689_678_79, 1.030_358_523_525_566_841_8),
    (5.0, 5.099_999_999_999_994_388_3, 1.004_987_562_112_060_549_5),
    (10.0, 10.05, 1.001_249_219_725_039_286_4),
];

const DEFAULT: (usize, usize, usize) = SphericalKGrid::DEFAULT_SHAPE;
const DOUBLED: (usize, usize, usize) = (2 * DEFAULT.0, 2 * DEFAULT.1, 2 * DEFAULT.2);

#[derive(Clone)]
struct Outcome {
    id: String,
    pass: bool,
    detail: String,
}

fn outcome(id: impl Into<String>, pass: bool, detail: String) -> Outcome {
    Outcome { id: id.into(), pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn gaussian(ratio: f64, shape: (usize, usize, usize)) -> WavePacket {
    let spec = GaussianPacketSpec::along_z(ratio, 1.0).unwrap();
    let g = SphericalKGrid::new(shape.0, shape.1, shape.2, spec.default_k_max()).unwrap();
    make_gaussian_packet(&spec, Arc::new(KGrid::Spherical(g))).unwrap()
}

fn gaussian_obs(ratio: f64, shape: (usize, usize, usize)) -> Observables {
    observables_packet(&gaussian(ratio, shape)).unwrap()
}

fn criterion_1(shape: (usize, usize, usize), tag: &str) -> Vec<Outcome> {
    ORACLE
        .iter()
        .map(|&(ratio, e_oracle, _)| {
            let t = Instant::now();
            let obs = gaussian_obs(ratio, shape);
            let secs = t.elapsed().as_secs_f64();
            let cf = closed_form_gaussian_energy(ratio, 1.0);
            let (err, err_oracle) = (rel(obs.energy, cf), rel(cf, e_oracle));
            outcome(
                format!("1{tag} k0/sigma={ratio}"),
                err <= 1e-6 && err_oracle <= 1e-12 && secs <= 10.0,
                format!("quadrature vs closed form {err:.2e}, closed form vs oracle {err_oracle:.2e}, {secs:.1} s"),
            )
        })
        .collect()
}

fn criterion_2_3(shape: (usize, usize, usize), tag: &str) -> Vec<Outcome> {
    let obs = gaussian_obs(10.0, shape);
    let cf = closed_form_gaussian_mass(10.0, 1.0);
    let m_oracle = ORACLE[2].2;
    let beta_lo = (1.0f64 - 0.01).sqrt();
    vec![
        outcome(
            format!("2{tag}"),
            (0.98..=1.02).contains(&obs.mass) && rel(cf.mass, obs.mass) <= 1e-6 && rel(cf.mass, m_oracle) <= 1e-12,
            format!(
                "m = {:.10} sigma, closed form vs quadrature {:.2e}, closed form vs oracle {:.2e}",
                obs.mass,
                rel(cf.mass, obs.mass),
                rel(cf.mass, m_oracle)
            ),
        ),
        outcome(
            format!("3{tag}"),
            (obs.beta - beta_lo).abs() <= 1e-3,
            format!("beta = {:.10}, |beta - sqrt(1 - sigma²/k0²)| = {:.2e}", obs.beta, (obs.beta - beta_lo).abs()),
        ),
    ]
}

struct Kinematic {
    beta: f64,
    centroid: f64,
    toa: Result<f64, String>,
    secs: f64,
}

fn kinematic(ratio: f64, n: usize) -> Kinematic {
    let t = Instant::now();
    let beta = gaussian_obs(ratio, DEFAULT).beta;
    let k_ext = ratio + 8.0;
    let plan: TransitPlan = plan_transit(KVec3::new(0.0, 0.0, 1.0), beta, 1.0, n, k_ext, 128).unwrap();
    let spec = GaussianPacketSpec::new(KVec3::new(0.0, 0.0, ratio), 1.0, plan.start).unwrap();
    let grid = Arc::new(KGrid::Cartesian(CartesianKGrid::new(n, k_ext).unwrap()));
    let p = make_gaussian_packet(&spec, grid).unwrap();
    let centroid = estimate_velocity_centroid(&p, &plan.centroid_times).unwrap().value;
    let records: Result<Vec<_>, Error> = plan.planes.iter().map(|w| intensity_record(&p, w.z, &w.times)).collect();
    let toa = match records {
        Ok(r) => Ok(estimate_velocity_toa(&r[0], &r[1]).unwrap().value),
        Err(e) => {
            // truncated-window value, for the log only
            let loose: Vec<_> = plan
                .planes
                .iter()
                .map(|w| intensity_record_with_tolerance(&p, w.z, &w.times, 1e-2).unwrap())
                .collect();
            let v = estimate_velocity_toa(&loose[0], &loose[1]).unwrap().value;
            Err(format!("{e}; truncated-window estimate {v:.6} ({:+.3}%)", 100.0 * (v / beta - 1.0)))
        }
    };
    Kinematic { beta, centroid, toa, secs: t.elapsed().as_secs_f64() }
}

fn criterion_4(ratios: &[f64]) -> (Vec<Outcome>, Vec<Kinematic>) {
    let mut out = Vec::new();
    let mut runs = Vec::new();
    for &ratio in ratios {
        let k = kinematic(ratio, 256);
        let c = rel(k.centroid, k.beta);
        out.push(outcome(
            format!("4 centroid k0/sigma={ratio}"),
            c <= 0.01 && k.secs <= 300.0,
            format!("beta {:.8}, centroid {:.8}, deviation {c:.2e}, {:.0} s for the case", k.beta, k.centroid, k.secs),
        ));
        out.push(match &k.toa {
            Ok(v) => outcome(
                format!("4 toa k0/sigma={ratio}"),
                rel(*v, k.beta) <= 0.01 && k.secs <= 300.0,
                format!("beta {:.8}, toa {v:.8}, deviation {:.2e}", k.beta, rel(*v, k.beta)),
            ),
            Err(e) => outcome(format!("4 toa k0/sigma={ratio}"), false, e.clone()),
        });
        runs.push(k);
    }
    (out, runs)
}

fn criterion_5() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for n in [2u32, 4, 6] {
        for omega0 in [1.0, 2.5] {
            for theta in [0.0, FRAC_PI_3, FRAC_PI_2, 2.0 * FRAC_PI_3, PI] {
                // independent: m = n ω₀ sin(ϑ/2)
                let expect = n as f64 * omega0 * (0.5 * theta).sin();
                let quad = observables_discrete(&DiscreteModeState::two_mode(n, omega0, theta).unwrap()).unwrap().mass;
                let two = closed_form_two_mode_mass(n, omega0, theta).unwrap();
                let k = [KVec3::new(0.0, 0.0, omega0), KVec3::new(omega0 * theta.sin(), 0.0, omega0 * theta.cos())];
                let mixed_state =
                    DiscreteModeState::ensemble(n, &k, vec![0.5, 0.5], vec![0.0, 0.0], EnsembleKind::MixedEnsemble)
                        .unwrap();
                let mixed_quad = observables_discrete(&mixed_state).unwrap().mass;
                let mixed = closed_form_mixed_mass(n, omega0, &[0.5, 0.5], &pairwise_angles(&k)).unwrap();
                for v in [quad, two, mixed_quad, mixed] {
                    let err = if expect == 0.0 { v.abs() } else { rel(v, expect) };
                    worst = worst.max(err);
                    ok &= err <= 1e-12;
                }
                if theta == 0.0 {
                    ok &= quad == 0.0 && two == 0.0;
                }
                if theta == PI {
                    ok &= rel(two, n as f64 * omega0) <= 1e-12;
                }
            }
        }
    }
    outcome("5", ok, format!("worst relative deviation {worst:.2e} over n ∈ {{2,4,6}}, 5 angles, 2 frequencies"))
}

fn criterion_6(shape: (usize, usize, usize), tag: &str) -> Outcome {
    let lab = gaussian(10.0, shape);
    let lab_obs = observables_packet(&lab).unwrap();
    let (rest, params) = boost_to_rest_frame(&lab, None).unwrap();
    let r = observables_packet(&rest).unwrap();
    let m = lab_obs.mass;
    let p = r.momentum.magnitude();
    outcome(
        format!("6{tag}"),
        p <= 1e-6 * m && rel(r.energy, m) <= 1e-6 && rel(r.mass, m) <= 1e-6,
        format!(
            "gamma {:.4}, |p'|/m {:.2e}, |E'-m|/m {:.2e}, |m'-m|/m {:.2e}, {}",
            params.gamma,
            p / m,
            rel(r.energy, m),
            rel(r.mass, m),
            rest.grid().describe()
        ),
    )
}

fn orthonormality() -> f64 {
    let (x, w) = gauss_legendre(32, -1.0, 1.0).unwrap();
    let nphi = 40;
    let mut worst: f64 = 0.0;
    let chans: Vec<(usize, i32)> = (0..=8).flat_map(|l| (-(l as i32)..=l as i32).map(move |j| (l, j))).collect();
    let table: Vec<Vec<Complex64>> = chans
        .iter()
        .map(|&(l, j)| {
            let mut v = Vec::with_capacity(x.len() * nphi);
            for &c in &x {
                for ip in 0..nphi {
                    let phi = 2.0 * PI * ip as f64 / nphi as f64;
                    v.push(spherical_harmonic(l, j, c.acos(), phi).unwrap());
                }
            }
            v
        })
        .collect();
    for (a, ya) in table.iter().enumerate() {
        for (b, yb) in table.iter().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for (it, wt) in w.iter().enumerate() {
                for ip in 0..nphi {
                    let i = it * nphi + ip;
                    s += ya[i].conj() * yb[i] * wt * (2.0 * PI / nphi as f64);
                }
            }
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((s - target).norm());
        }
    }
    worst
}

fn criterion_7(shape: (usize, usize, usize), tag: &str) -> Vec<Outcome> {
    let mut out = Vec::new();
    if tag.is_empty() {
        let o = orthonormality();
        out.push(outcome("7 orthonormality", o <= 1e-10, format!("max deviation {o:.2e} for l ≤ 8")));
    }
    let lab = gaussian(2.0, shape);
    let (rest, _) = boost_to_rest_frame(&lab, None).unwrap();
    let d = decompose(&rest, 16).unwrap();
    let back = reconstruct(&d).unwrap();
    let err = l2_distance_sq(&rest, &back).unwrap();
    out.push(outcome(
        format!("7{tag} round trip"),
        err <= 1e-6,
        format!("k0/sigma=2 boosted Gaussian, l_max 16: squared L² error {err:.2e}, residual {:.2e}", d.residual()),
    ));
    // second rest-frame state: radial shell times an even l ≤ 2 pattern
    let other = WavePacket::from_fn(rest.grid_arc(), 1, |k| {
        let r = k.magnitude();
        let c = if r > 0.0 { k.kz / r } else { 0.0 };
        let shell = (-(r - 1.0).powi(2) * 4.0).exp();
        Complex64::new(1.0 + 0.5 * (3.0 * c * c - 1.0), 0.3 * c * c) * shell
    })
    .unwrap()
    .normalize()
    .unwrap();
    let d2 = decompose(&other, 16).unwrap();
    let modes = scalar_product_modes(&d, &d2).unwrap();
    let direct = rest.overlap(&other).unwrap();
    out.push(outcome(
        format!("7{tag} scalar product"),
        (modes - direct).norm() <= 1e-8,
        format!("modes {modes:.10}, direct {direct:.10}, |diff| {:.2e}", (modes - direct).norm()),
    ));
    let e_modes = energy_in_modes(&d);
    let e_quad = observables_packet(&rest).unwrap().energy;
    out.push(outcome(
        format!("7{tag} energy"),
        rel(e_modes, e_quad) <= 1e-6,
        format!("modes {e_modes:.10}, quadrature {e_quad:.10}, relative {:.2e}", rel(e_modes, e_quad)),
    ));
    out
}

/// Truncation of a fast packet, for the log: the Parseval residual at
/// `k₀/σ = 10` for several `l_max`.
fn criterion_7_fast_curve() -> String {
    let (rest, _) = boost_to_rest_frame(&gaussian(10.0, DEFAULT), None).unwrap();
    [8usize, 16, 24, 32]
        .iter()
        .map(|&l| format!("l_max {l}: {:.2e}", decompose(&rest, l).unwrap().residual()))
        .collect::<Vec<_>>()
        .join(", ")
}

fn criterion_8() -> Outcome {
    let v = volume_scaling_check(20.0, 1.0, &[1.0, 2.0, 4.0]).unwrap();
    let rows: Vec<String> = v.rows.iter().map(|r| format!("sigma {} -> m V^(1/3) {:.6}", r.sigma, r.product)).collect();
    outcome(
        "8",
        v.constant == Some(true) && v.spread <= 0.03,
        format!("spread {:.2e}; {}", v.spread, rows.join("; ")),
    )
}

/// Biphoton source in units of `k_ref = 1e5 m⁻¹`: lengths in units of 10 µm.
fn biphoton(waist_mm: f64, nodes: Option<usize>) -> BiphotonSpec {
    let mut s = BiphotonSpec::new(waist_mm * 100.0, 200.0, 0.0405, 1.66).unwrap();
    s.transverse_nodes = nodes;
    s
}

fn biphoton_mass(s: &BiphotonSpec) -> f64 {
    observables_packet(&make_biphoton(s, &s.default_grid().unwrap()).unwrap()).unwrap().mass
}

fn criterion_9(nodes: Option<usize>, tag: &str) -> Vec<Outcome> {
    let base = biphoton(1.0, nodes);
    let wide = biphoton(2.0, nodes);
    let (m1, m2) = (biphoton_mass(&base), biphoton_mass(&wide));
    let est = biphoton_mass_estimate(&base).unwrap();
    let floor = 1.0 / (2.0 * base.pump_waist);
    let ratio = m1 / est.mass;
    vec![
        outcome(
            format!("9{tag} floor"),
            base.in_regime() && m1 > floor,
            format!("m = {m1:.6}, 1/(2 w_p) = {floor:.6} (units hbar k_ref/c)"),
        ),
        outcome(
            format!("9{tag} waist"),
            wide.in_regime() && rel(m2, m1) < 0.2,
            format!("m(2 w_p)/m(w_p) = {:.6}", m2 / m1),
        ),
        outcome(
            format!("9{tag} estimate"),
            (0.5..=2.0).contains(&ratio),
            format!("quadrature {m1:.6}, estimate {:.6}, ratio {ratio:.4}", est.mass),
        ),
    ]
}

fn determinism() -> Outcome {
    let text = r#"{"units":"si","k_ref":1e6,
        "state":{"type":"gaussian","k0":[0,0,1e7],"sigma":1e6},
        "tasks":[{"op":"observables"},{"op":"oracle"},{"op":"detect","params":{"cartesian_n":64,"toa":false}}]}"#;
    let doc = StateSpecDocument::parse(text).unwrap();
    let a = report::to_json(&run_document(&doc, &default_args("spec.json")).unwrap().report);
    let b = report::to_json(&run_document(&doc, &default_args("spec.json")).unwrap().report);
    outcome("10 determinism", a == b, format!("two runs, {} bytes each, identical: {}", a.len(), a == b))
}

fn stable(id: &str, base: &[Outcome], doubled: &[Outcome]) -> Outcome {
    let pass = base.iter().chain(doubled).all(|o| o.pass);
    let fails: Vec<&str> = doubled.iter().filter(|o| !o.pass).map(|o| o.id.as_str()).collect();
    outcome(
        format!("10 doubling {id}"),
        pass,
        if fails.is_empty() { "all checks hold on the doubled grid".into() } else { format!("failing: {}", fails.join(", ")) },
    )
}

fn main() {
    let started = Instant::now();
    let mut all: Vec<Outcome> = Vec::new();
    let emit = |o: Vec<Outcome>, all: &mut Vec<Outcome>| {
        for x in o {
            println!("[{}] criterion {}: {}", if x.pass { "PASS" } else { "FAIL" }, x.id, x.detail);
            all.push(x);
        }
    };

    let c1 = criterion_1(DEFAULT, "");
    let c23 = criterion_2_3(DEFAULT, "");
    let c1d = criterion_1(DOUBLED, " doubled");
    let c23d = criterion_2_3(DOUBLED, " doubled");
    let d123 = stable("1-3", &[&c1[..], &c23[..]].concat(), &[&c1d[..], &c23d[..]].concat());
    emit(c1, &mut all);
    emit(c23, &mut all);

    let (c4, runs) = criterion_4(&[3.0, 5.0, 10.0]);
    emit(c4, &mut all);

    emit(vec![criterion_5()], &mut all);

    let c6 = criterion_6(DEFAULT, "");
    let c6d = criterion_6(DOUBLED, " doubled");
    let d6 = stable("6", std::slice::from_ref(&c6), std::slice::from_ref(&c6d));
    emit(vec![c6], &mut all);

    let c7 = criterion_7(DEFAULT, "");
    let c7d = criterion_7(DOUBLED, " doubled");
    let d7 = stable("7", &c7, &c7d);
    emit(c7, &mut all);
    println!("[INFO] criterion 7 truncation at k0/sigma=10 (Parseval residual): {}", criterion_7_fast_curve());

    emit(vec![criterion_8()], &mut all);

    let c9 = criterion_9(None, "");
    let c9d = criterion_9(Some(128), " doubled");
    let d9 = stable("9", &c9, &c9d);
    emit(c9, &mut all);

    // detection: the 256³ runs above against 128³
    let mut half = Vec::new();
    for (ratio, full) in [3.0, 5.0, 10.0].iter().zip(&runs) {
        let k = kinematic(*ratio, 128);
        let centroid = rel(k.centroid, full.centroid);
        let toa = match (&k.toa, &full.toa) {
            (Ok(a), Ok(b)) => format!("{:.2e}", rel(*a, *b)),
            _ => "n/a".into(),
        };
        let ok = rel(k.centroid, k.beta) <= 0.01
            && rel(full.centroid, full.beta) <= 0.01
            && full.toa.as_ref().is_ok_and(|v| rel(*v, full.beta) <= 0.01)
            && k.toa.as_ref().is_ok_and(|v| rel(*v, k.beta) <= 0.01);
        half.push(outcome(
            format!("10 grid 128³ vs 256³ k0/sigma={ratio}"),
            ok,
            format!("centroid change {centroid:.2e}, toa change {toa}"),
        ));
    }
    emit(vec![d123, d6, d7, d9], &mut all);
    emit(half, &mut all);
    emit(vec![determinism()], &mut all);

    let failed = all.iter().filter(|o| !o.pass).count();
    println!(
        "acceptance: {} checks, {} passed, {} failed, {:.0} s",
        all.len(),
        all.len() - failed,
        failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
