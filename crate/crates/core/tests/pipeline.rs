//! Small end-to-end runs: synthesize, sample, reconstruct, compare against
//! oracles computed here.

use std::f64::consts::PI;

use mobsense_core::nonuniform::{sample_nonuniform, warp_distortion, FINE_FACTOR};
use mobsense_core::sampling::{add_measurement_noise, MeasurementNoise};
use mobsense_core::spectral::{band_energy, path_signal, perturbed_band};
use mobsense_core::tv::{max_spacing, tv_simulate, MovingArrayConfig, TvSpectrum};
use mobsense_core::{
    combine_orthogonal, reconstruct_1d, reconstruct_lattice, sample_line, sample_mobile, sample_static,
    synthesize_field_on, synthesize_noise, BandRegion, HarmonicField, NoisePsd, ObservedField, ParallelLineSet,
    PerturbedPath, PiecewiseAffinePath, ReconKernel, SampleLattice, SamplingKernel,
};

const L: f64 = 15.0;
const N: usize = 15;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    num / lx.iter().map(|a| (a - mx).powi(2)).sum::<f64>()
}

fn zero2() -> HarmonicField {
    HarmonicField::zeros([L, L], [0, 0], BandRegion::square(PI).unwrap()).unwrap()
}

/// `(static, mobile)` reconstructions at the unit Nyquist lattice.
fn both(nu: &ObservedField) -> (HarmonicField, HarmonicField) {
    let lat = SampleLattice::rectangular(1.0, 1.0, N, N).unwrap();
    let kernel = ReconKernel::lattice(&lat, [PI, PI]).unwrap();
    let s = reconstruct_lattice(&sample_static(nu, &lat).unwrap(), &kernel).unwrap();
    let lines = ParallelLineSet::new(1.0, 1.0, N).unwrap();
    let m = reconstruct_lattice(&sample_mobile(nu, &lines, 1.0, SamplingKernel::ideal(PI).unwrap(), 1).unwrap(), &kernel).unwrap();
    (s.field, m.field)
}

#[test]
fn noise_variances_follow_bandwidth_ratio() {
    // flat noise on [-a pi, a pi]^2 at unit density: static folds all of it
    // into the passband, mobile only the y replicas
    let a = 3.0;
    let psd = NoisePsd::flat_band(a, PI, 1.0, 2).unwrap();
    let total = (2.0 * a * PI).powi(2) / (4.0 * PI * PI);
    let mobile = (2.0 * a * PI) * (2.0 * PI) / (4.0 * PI * PI);
    let (mut vs, mut vm) = (Vec::new(), Vec::new());
    for seed in 0..200 {
        let nu = ObservedField::noisy(zero2(), synthesize_noise(seed, [L, L], &psd).unwrap()).unwrap();
        let (s, m) = both(&nu);
        vs.push(s.mean_square());
        vm.push(m.mean_square());
    }
    assert!((mean(&vs) / total - 1.0).abs() < 0.08, "{} vs {total}", mean(&vs));
    assert!((mean(&vm) / mobile - 1.0).abs() < 0.08, "{} vs {mobile}", mean(&vm));
}

#[test]
fn line_sensor_keeps_only_in_band_noise() {
    let psd = NoisePsd::flat_band(5.0, PI, 1.0, 1).unwrap();
    let zero = HarmonicField::zeros_1d(L, 0, BandRegion::interval(PI).unwrap()).unwrap();
    let mut v = Vec::new();
    for seed in 0..300 {
        let nu = ObservedField::noisy(zero.clone(), synthesize_noise(seed, [L, 1.0], &psd).unwrap()).unwrap();
        let samples = sample_line(&nu, 1.0, 1.0, SamplingKernel::ideal(PI).unwrap(), 1).unwrap();
        v.push(reconstruct_1d(&samples, 1.0, 1.0, PI).unwrap().field.mean_square());
    }
    // (1 / 2 pi) * integral over [-pi, pi] of a unit density
    assert!((mean(&v) - 1.0).abs() < 0.08, "{}", mean(&v));
}

#[test]
fn mobile_error_is_smaller_by_root_a() {
    let a = 9.0;
    let psd = NoisePsd::flat_band(a, PI, 1.0 / (100.0 * a * a), 2).unwrap();
    let truth = synthesize_field_on(5, [L, L], BandRegion::square(PI).unwrap(), 1.0, None).unwrap();
    let (mut es, mut em) = (0.0, 0.0);
    for seed in 0..100 {
        let nu = ObservedField::noisy(truth.clone(), synthesize_noise(seed, [L, L], &psd).unwrap()).unwrap();
        let (s, m) = both(&nu);
        es += s.sub(&truth).unwrap().energy();
        em += m.sub(&truth).unwrap().energy();
    }
    let ratio = (es / em).sqrt();
    assert!((ratio / a.sqrt() - 1.0).abs() < 0.2, "{ratio}");
}

#[test]
fn oversampling_divides_measurement_noise() {
    let nu = ObservedField::noiseless(zero2());
    let lines = ParallelLineSet::new(1.0, 1.0, N).unwrap();
    let ks = [1usize, 2, 4, 8];
    let mut v = Vec::new();
    for &k in &ks {
        let clean = sample_mobile(&nu, &lines, 1.0, SamplingKernel::ideal(PI).unwrap(), k).unwrap();
        let kernel = ReconKernel::lattice(&clean.lattice, [PI, PI]).unwrap();
        let runs: Vec<f64> = (0..200)
            .map(|seed| {
                let noisy = add_measurement_noise(&clean, MeasurementNoise { variance: 1.0, seed }).unwrap();
                reconstruct_lattice(&noisy, &kernel).unwrap().field.mean_square()
            })
            .collect();
        v.push(mean(&runs));
    }
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    assert!((slope(&xs, &v) + 1.0).abs() < 0.08, "{v:?}");
}

#[test]
fn box_filtered_spectrum_is_sinc_weighted() {
    // x-band wider than the passband so the filter does real work
    let truth = synthesize_field_on(9, [L, L], BandRegion::rectangle(2.0 * PI, PI).unwrap(), 1.0, None).unwrap();
    let nu = ObservedField::noiseless(truth.clone());
    let lines = ParallelLineSet::new(1.0, 1.0, N).unwrap();
    let b = 0.5;
    let samples = sample_mobile(&nu, &lines, 1.0, SamplingKernel::boxcar(b, PI).unwrap(), 32).unwrap();
    let recon = reconstruct_lattice(&samples, &ReconKernel::lattice(&samples.lattice, [PI, PI]).unwrap()).unwrap();
    // normalized box average, written out as a numerical mean over the window
    let gain = |w: f64| {
        let m = 4000;
        let s: f64 = (0..m).map(|i| (w * (-b + 2.0 * b * (i as f64 + 0.5) / m as f64)).cos()).sum();
        s / m as f64
    };
    let norm = {
        let m = 4000;
        let dw = 2.0 * PI / m as f64;
        (0..m).map(|i| gain(-PI + dw * (i as f64 + 0.5)).powi(2)).sum::<f64>() * dw / (2.0 * PI)
    };
    for (k, c) in recon.field.iter() {
        let w = truth.frequency(k);
        if !recon.kernel.passes(w) {
            continue;
        }
        let expected = truth.coeff(k) * gain(w[0]) / norm.sqrt();
        assert!((c - expected).norm() <= 1e-6 * (1.0 + expected.norm()), "{k:?}: {c} vs {expected}");
    }
}

#[test]
fn combining_directions_beats_either() {
    let truth = synthesize_field_on(21, [L, L], BandRegion::square(2.0 * PI).unwrap(), 1.0, None).unwrap();
    let target = truth.project(BandRegion::square(PI).unwrap());
    let nu = ObservedField::noiseless(truth);
    let lat = SampleLattice::rectangular(1.0, 1.0, N, N).unwrap();
    let kernel = ReconKernel::lattice(&lat, [PI, PI]).unwrap();
    let ideal = SamplingKernel::ideal(PI).unwrap();
    let mx = reconstruct_lattice(&sample_mobile(&nu, &ParallelLineSet::along(0, 1.0, 1.0, N).unwrap(), 1.0, ideal, 1).unwrap(), &kernel).unwrap();
    let my = reconstruct_lattice(&sample_mobile(&nu, &ParallelLineSet::along(1, 1.0, 1.0, N).unwrap(), 1.0, ideal, 1).unwrap(), &kernel).unwrap();
    let c = combine_orthogonal(&mx, &my).unwrap();
    let err = |f: &HarmonicField| f.sub(&target).unwrap().energy();
    assert!(err(&c.field) < err(&mx.field).min(err(&my.field)));
}

#[test]
fn warped_reconstruction_distortion_is_bounded() {
    let field = synthesize_field_on(2, [L, 1.0], BandRegion::interval(PI).unwrap(), 1.0, None).unwrap();
    let nu = ObservedField::noiseless(field);
    for (knots, speeds) in [(vec![0.0, 2.0, 5.0], vec![1.0, 0.5]), (vec![0.0, 1.5, 3.0, 4.0], vec![0.4, 1.6, 0.9])] {
        let path = PiecewiseAffinePath::new(knots.clone(), speeds, 3.0).unwrap();
        let window = *knots.last().unwrap();
        let cutoff = 1.6 * PI;
        let count = (1.2 * window * cutoff / PI).ceil();
        let samples = sample_nonuniform(&nu, &path, 0.0, window, cutoff, window / count, FINE_FACTOR).unwrap();
        let (lhs, rhs) = warp_distortion(&nu, &path, &samples).unwrap();
        assert!(lhs <= 1.05 * rhs + 1e-12, "{lhs} > 1.05 * {rhs}");
    }
}

#[test]
fn perturbation_leaks_at_second_order_beyond_first_band() {
    let field = synthesize_field_on(4, [L, 1.0], BandRegion::interval(PI).unwrap(), 1.0, None).unwrap();
    let base = PiecewiseAffinePath::new(vec![0.0, L], vec![1.0], 0.0).unwrap();
    let eps = [0.01, 0.02, 0.04, 0.08];
    let out: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let p = PerturbedPath::new(base.clone(), e, vec![vec![0.0, 1.0]]).unwrap();
            let band = perturbed_band(&p, PI, 1).unwrap().predicted;
            let v = path_signal(&field, &p, 0.0, L, 4096).unwrap();
            band_energy(&v, L, band).1
        })
        .collect();
    assert!((slope(&eps, &out) - 4.0).abs() < 0.5, "{out:?}");
}

#[test]
fn moving_array_is_exact_inside_the_spacing_limit() {
    let l = 12.0 * PI;
    let rect = TvSpectrum::rectangle(6.0, 2.0).unwrap();
    // limit pi * max(1 / 2, 1 / 6) = pi / 2, i.e. 24 sensors over 12 pi
    assert!((max_spacing(&rect, 1.0).unwrap() - PI / 2.0).abs() < 1e-12);
    let run = |n: usize| tv_simulate(&rect, &MovingArrayConfig::new(l / n as f64, 1.0, l / 97.0).unwrap(), [l, l], 3).unwrap();
    let inside = run(26);
    let outside = run(22);
    assert!(inside.overlap.is_alias_free());
    assert!(!outside.overlap.is_alias_free());
    assert!(inside.rmse_percent < 1e-8, "{}", inside.rmse_percent);
    assert!(outside.rmse_percent > 10.0 * inside.rmse_percent.max(1e-12));

    let cone = TvSpectrum::wave_cone(2.0, 0.5).unwrap();
    // (pi / rho_x)(1 + v / c) with rho_x = 4 and v = c / 2
    assert!((max_spacing(&cone, 0.25).unwrap() - PI / 4.0 * 1.5).abs() < 1e-12);
    let w = |n: usize| tv_simulate(&cone, &MovingArrayConfig::new(l / n as f64, 0.25, l / 41.0).unwrap(), [l, l], 4).unwrap();
    assert!(w(36).rmse_percent < 1e-8);
    assert!(w(28).rmse_percent > 1e-3);
}
