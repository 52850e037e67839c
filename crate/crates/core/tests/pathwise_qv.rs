use fouqv::gaussian::{sample_fbm_circulant, sample_y1, GaussianPath, Y1Route};
use fouqv::pathwise::{solve_fou2, young_integral, Integrand};
use fouqv::qv::{qv_on_jumps, scaled_qv, sup_error, IVTarget};
use fouqv::{HurstParam, RawPath, SeedSpec, TimeGrid, VolatilityFn};

fn h(v: f64) -> HurstParam {
    HurstParam::new(v).unwrap()
}

fn y1_path(hv: f64, n: usize, seed: u64) -> GaussianPath {
    let g = TimeGrid::uniform(1.0, n).unwrap();
    sample_y1(h(hv), &g, SeedSpec::new(seed, 0), Y1Route::Circulant).unwrap()
}

fn coarsen(values: &[f64], fine: usize, coarse: usize) -> RawPath {
    RawPath {
        grid: TimeGrid::uniform(1.0, coarse).unwrap(),
        values: values.iter().step_by(fine / coarse).copied().collect(),
    }
}

#[test]
fn young_integral_is_linear_in_the_integrand() {
    let y = y1_path(0.7, 256, 1);
    let ts = y.grid.points().to_vec();
    let f: Vec<f64> = ts.iter().map(|t| (3.0 * t).sin()).collect();
    let g: Vec<f64> = ts.iter().map(|t| 1.0 + t * t).collect();
    let (a, b) = (2.5, -0.75);
    let combo: Vec<f64> = f.iter().zip(&g).map(|(x, z)| a * x + b * z).collect();
    let zf = young_integral(&Integrand::Sampled { values: f, beta: 1.0 }, &y, &y.grid).unwrap();
    let zg = young_integral(&Integrand::Sampled { values: g, beta: 1.0 }, &y, &y.grid).unwrap();
    let zc = young_integral(&Integrand::Sampled { values: combo, beta: 1.0 }, &y, &y.grid).unwrap();
    let scale = zc.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for i in 0..zc.values.len() {
        assert!((zc.values[i] - (a * zf.values[i] + b * zg.values[i])).abs() <= 1e-12 * scale);
    }
}

#[test]
fn sde_without_reversion_is_the_integral_plus_start() {
    let y = y1_path(0.6, 512, 2);
    let sigma = VolatilityFn::affine(1.0, 0.5);
    let z = young_integral(&Integrand::Function(sigma.clone()), &y, &y.grid).unwrap();
    let sol = solve_fou2(0.0, &sigma, 0.3, &y).unwrap();
    for (x, zi) in sol.x.values.iter().zip(&z.values) {
        assert!((x - (zi + 0.3)).abs() <= 1e-12);
    }
    assert!(sol.drift.values.iter().all(|d| d.abs() <= 1e-12));
}

#[test]
fn young_sums_converge_at_the_young_rate() {
    // u_s = s is Lipschitz, so beta = 1 and the gap between grids n and 4n
    // should shrink by at least 4^{beta+H-eps-1} per refinement.
    let hv = 0.7;
    let eps = 0.2;
    let u = Integrand::Function(VolatilityFn::affine(0.0, 1.0));
    let fine = 4096;
    let mut log_ratio = 0.0;
    let paths = 20;
    for s in 0..paths {
        let y = y1_path(hv, fine, 100 + s);
        let terminal = |n: usize| {
            let g = TimeGrid::uniform(1.0, n).unwrap();
            *young_integral(&u, &y, &g).unwrap().values.last().unwrap()
        };
        let z: Vec<f64> = [64, 256, 1024, 4096].iter().map(|&n| terminal(n)).collect();
        let gaps: Vec<f64> = z.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        log_ratio += ((gaps[0] / gaps[1]).ln() + (gaps[1] / gaps[2]).ln()) / 2.0;
    }
    let ratio = (log_ratio / paths as f64).exp();
    let floor = 4f64.powf(1.0 + hv - eps - 1.0);
    assert!(ratio >= floor, "mean refinement factor {ratio} below {floor}");
}

#[test]
fn brownian_realized_variance_error_shrinks_with_n() {
    // A single path does not shrink monotonically; the mean over paths
    // tracks E|N(0, 2/n)| = sqrt(4 / (pi n)).
    let fine = 1usize << 14;
    let g = TimeGrid::uniform(1.0, fine).unwrap();
    let paths = 100;
    let mut mean_err = [0.0; 7];
    for s in 0..paths {
        let p = sample_fbm_circulant(h(0.5), &g, SeedSpec::new(500 + s, 0)).unwrap();
        for (k, e) in mean_err.iter_mut().enumerate() {
            let coarse = coarsen(&p.values, fine, 1 << (k + 8));
            *e += (scaled_qv(&coarse, h(0.5), 1.0).unwrap() - 1.0).abs() / paths as f64;
        }
    }
    for k in 0..7 {
        let theory = (4.0 / (std::f64::consts::PI * (1u64 << (k + 8)) as f64)).sqrt();
        assert!((mean_err[k] / theory - 1.0).abs() < 0.25, "n=2^{}: {} vs {theory}", k + 8, mean_err[k]);
        if k > 0 {
            assert!(mean_err[k] < mean_err[k - 1]);
        }
    }
}

#[test]
fn sup_error_shrinks_with_n() {
    let fine = 1usize << 14;
    let sigma = VolatilityFn::constant(1.0);
    let paths = 20;
    let mut mean_sup = [0.0; 3];
    for s in 0..paths {
        let y = y1_path(0.6, fine, 900 + s);
        for (k, e) in mean_sup.iter_mut().enumerate() {
            let n = 1usize << (10 + 2 * k);
            let coarse = coarsen(&y.values, fine, n);
            let est = qv_on_jumps(&coarse, h(0.6)).unwrap();
            let target = IVTarget::new(&sigma, &coarse.grid);
            *e += sup_error(&est, &target).unwrap() / paths as f64;
        }
    }
    assert!(mean_sup[0] > mean_sup[1] && mean_sup[1] > mean_sup[2], "{mean_sup:?}");
}
