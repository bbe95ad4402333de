use uwbsim::channel::*;
use uwbsim::rng::{Purpose, RngStream};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn friis_reference_values() {
    // 20 log10(4 pi d f / c), evaluated independently
    for (d, f, want) in [
        (1.0, 0.8e9, 30.509582961722245),
        (20.0, 0.8e9, 56.53018287500187),
        (15.0, 2.45e9, 63.75293009028765),
    ] {
        let got = free_space_loss(d, f).unwrap();
        assert!(close(got, want, 1e-9), "{d} m {f} Hz: {got} vs {want}");
    }
    assert!(free_space_loss(0.0, 0.8e9).is_err());
}

#[test]
fn two_ray_is_continuous_at_crossover() {
    let (ht, hr, f) = (0.45, 0.45, 0.8e9);
    let dc = crossover_distance(ht, hr, f);
    assert!(close(dc, 6.790537871123449, 1e-9));
    let below = two_ray_loss(dc * (1.0 - 1e-9), ht, hr, f);
    let above = two_ray_loss(dc * (1.0 + 1e-9), ht, hr, f);
    assert!(close(below, above, 1e-6));
    assert!(close(two_ray_loss(50.0, ht, hr, f), 81.830299622427, 1e-9));
    // fourth-power law beyond the crossover
    let step = two_ray_loss(100.0, ht, hr, f) - two_ray_loss(50.0, ht, hr, f);
    assert!(close(step, 40.0 * 2f64.log10(), 1e-9));
}

#[test]
fn thermal_noise_reference_values() {
    assert!(close(noise_power(&RadioParams::uwb()) / 1.1788187820931298e-12, 1.0, 1e-12));
    assert!(close(noise_power(&RadioParams::oqpsk()) / 7.455504600000001e-14, 1.0, 1e-12));
}

#[test]
fn db_conversions_invert() {
    for dbm in [-120.0, -85.0, 0.0, 17.0] {
        assert!(close(w_to_dbm(dbm_to_w(dbm)), dbm, 1e-9));
    }
    assert!(close(dbm_to_w(0.0), 1e-3, 1e-18));
    assert!(close(db_to_linear(10.0), 10.0, 1e-12));
}

fn samples(fading: Fading, seed: u64, n: usize) -> Vec<f64> {
    let mut s = RngStream::new(seed, 0, Purpose::ChannelFading);
    let mut v: Vec<f64> = (0..n).map(|_| fading_gain(fading, &mut s)).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov-Smirnov statistic of sorted samples.
fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn rice_with_zero_k_is_rayleigh() {
    let n = 20_000;
    let rice = samples(Fading::Rice { k: 0.0 }, 11, n);
    let rayleigh = samples(Fading::Rayleigh, 12, n);
    // critical value at alpha = 0.001
    let crit = 1.95 * (2.0 / n as f64).sqrt();
    let d = ks_two_sample(&rice, &rayleigh);
    assert!(d < crit, "KS distance {d} >= {crit}");
}

#[test]
fn rayleigh_power_is_unit_exponential() {
    let n = 20_000;
    let v = samples(Fading::Rayleigh, 5, n);
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-x).exp();
            (cdf - i as f64 / n as f64).abs().max((cdf - (i + 1) as f64 / n as f64).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 1.95 / (n as f64).sqrt(), "KS distance {d}");
}

#[test]
fn rice_moments() {
    let n = 100_000;
    for k in [1.0, 6.0, 20.0] {
        let v = samples(Fading::Rice { k }, 3, n);
        let m = v.iter().sum::<f64>() / n as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        let want_var = (1.0 + 2.0 * k) / (1.0 + k).powi(2);
        let se = (want_var / n as f64).sqrt();
        assert!(close(m, 1.0, 5.0 * se), "K={k}: mean {m}");
        assert!(close(var / want_var, 1.0, 0.05), "K={k}: variance {var} vs {want_var}");
    }
    let mut s = RngStream::new(1, 0, Purpose::ChannelFading);
    assert_eq!(fading_gain(Fading::Rice { k: f64::INFINITY }, &mut s), 1.0);
    assert_eq!(fading_gain(Fading::None, &mut s), 1.0);
}

#[test]
fn link_budget_matches_components() {
    let tx = RadioParams::uwb();
    let model = ChannelModel::FREE_SPACE;
    let got = mean_received_dbm(&tx, &tx, 20.0, &model);
    let want = tx.tx_power_dbm + 2.0 * tx.antenna_gain_db - 56.53018287500187;
    assert!(close(got, want, 1e-9));
    assert_eq!(propagation_delay(SPEED_OF_LIGHT * 1e-6).ps(), 1_000_000);
}
