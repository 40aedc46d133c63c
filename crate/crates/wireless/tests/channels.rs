use llmo_wireless::{rayleigh_channels, ChannelFixture};

#[test]
fn rayleigh_moments_within_clt_bands() {
    let n = 100_000;
    let h = rayleigh_channels(n, 1, 42).unwrap();
    let nf = n as f64;
    let mean_re = h.entries().iter().map(|z| z.re).sum::<f64>() / nf;
    let mean_im = h.entries().iter().map(|z| z.im).sum::<f64>() / nf;
    // Each component has variance 1/2.
    let band = 3.0 * 0.5f64.sqrt() / nf.sqrt();
    assert!(mean_re.abs() < band, "{mean_re}");
    assert!(mean_im.abs() < band, "{mean_im}");
    // |h|² ~ Exp(1): mean 1, variance 1.
    let power = h.entries().iter().map(|z| z.norm_sqr()).sum::<f64>() / nf;
    assert!((power - 1.0).abs() < 3.0 / nf.sqrt(), "{power}");
}

#[test]
fn fixture_samples_are_independent_seeds() {
    let f = ChannelFixture::rayleigh(4, 3, 3, 100).unwrap();
    for (i, h) in f.channels.iter().enumerate() {
        assert_eq!(*h, rayleigh_channels(3, 3, 100 + i as u64).unwrap());
    }
}

#[test]
fn fixture_survives_a_file() {
    let f = ChannelFixture::rayleigh(5, 2, 2, 1).unwrap();
    let dir = std::env::temp_dir().join(format!("llmo-wireless-fixture-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("h.csv");
    f.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
    let back = ChannelFixture::read_csv(std::fs::File::open(&path).unwrap()).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(back, f);
}
