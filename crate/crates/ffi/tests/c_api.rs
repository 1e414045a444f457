use std::ffi::{CStr, CString};
use std::ptr;

use fatigue_ffi::*;

fn last_error() -> String {
    let p = ft_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn truth_sigma() -> f64 {
    10f64.powf(0.03)
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(ft_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn failure_probability_at_median_is_half() {
    let mut p = f64::NAN;
    assert_eq!(unsafe { ft_failure_probability(400.0, truth_sigma(), 400.0, &mut p) }, FtStatus::Ok);
    assert!((p - 0.5).abs() < 1e-15);
    assert!(ft_last_error_message().is_null());
}

#[test]
fn domain_errors_set_message() {
    let mut p = 0.0;
    assert_eq!(unsafe { ft_failure_probability(400.0, 0.5, 400.0, &mut p) }, FtStatus::Domain);
    assert!(last_error().contains("sigma"), "{}", last_error());
    assert_eq!(unsafe { ft_failure_probability(400.0, 2.0, 1.0, ptr::null_mut()) }, FtStatus::NullPointer);
}

#[test]
fn staircase_levels_match_lattice() {
    let mut buf = [0.0; 7];
    let mut n = 0usize;
    let st = unsafe { ft_staircase_levels(400.0, truth_sigma(), -3, 3, buf.as_mut_ptr(), buf.len(), &mut n) };
    assert_eq!(st, FtStatus::Ok);
    assert_eq!(n, 7);
    assert_eq!(buf, [325.0, 348.0, 373.0, 400.0, 429.0, 460.0, 493.0]);

    let mut small = [0.0; 3];
    let st = unsafe { ft_staircase_levels(400.0, truth_sigma(), -3, 3, small.as_mut_ptr(), small.len(), &mut n) };
    assert_eq!(st, FtStatus::BufferTooSmall);
    assert_eq!(n, 7);
    assert_eq!(small, [0.0; 3]);
}

#[test]
fn discretization_rounds_to_ten() {
    assert_eq!(ft_discretize_load(404.9, FtDiscretization::Ten), 400.0);
    assert_eq!(ft_discretize_load(405.0, FtDiscretization::Ten), 410.0);
    assert_eq!(ft_discretize_load(404.9, FtDiscretization::None), 404.9);
}

#[test]
fn simulator_is_seeded_and_balanced_at_median() {
    let draw = |seed| unsafe {
        let mut sim = ptr::null_mut();
        assert_eq!(ft_simulator_new(400.0, truth_sigma(), seed, &mut sim), FtStatus::Ok);
        let mut fails = 0;
        let mut seq = Vec::new();
        for _ in 0..2000 {
            let mut f = -1;
            assert_eq!(ft_simulator_step(sim, 400.0, &mut f), FtStatus::Ok);
            fails += f;
            seq.push(f);
        }
        ft_simulator_free(sim);
        (fails, seq)
    };
    let (a, sa) = draw(7);
    let (_, sb) = draw(7);
    assert_eq!(sa, sb);
    assert!((900..1100).contains(&a), "{a}");
}

#[test]
fn series_and_posterior_round_trip() {
    unsafe {
        let mut prior = ptr::null_mut();
        assert_eq!(ft_prior_from_width(400.0, 10.0, FtWidthScale::Load, truth_sigma(), &mut prior), FtStatus::Ok);
        let (mut m, mut s) = (0.0, 0.0);
        assert_eq!(ft_prior_params(prior, &mut m, &mut s), FtStatus::Ok);
        assert!((m - 400f64.log10()).abs() < 1e-12);
        assert!(s > 0.0 && s < 0.02);

        let series = ft_series_new();
        assert_eq!(ft_series_len(series), 0);
        let (mut std_log10, mut std_load) = (0.0, 0.0);
        assert_eq!(ft_posterior_std(prior, series, 10_001, &mut std_log10, &mut std_load), FtStatus::Ok);
        assert!((std_log10 / s - 0.8796).abs() < 0.01 * 0.8796);
        let prior_std = std_log10;

        for (l, f) in [(400.0, 1), (380.0, 0), (410.0, 1), (390.0, 0), (400.0, 0)] {
            assert_eq!(ft_series_push(series, l, f), FtStatus::Ok);
        }
        assert_eq!(ft_series_len(series), 5);
        assert_eq!(ft_posterior_std(prior, series, 10_001, &mut std_log10, &mut std_load), FtStatus::Ok);
        assert!(std_log10 < prior_std);
        assert!(std_load > 0.0);

        let (mut mu, mut sigma) = (0.0, 0.0);
        assert_eq!(ft_map_estimate(prior, series, 4, &mut mu, &mut sigma), FtStatus::Ok);
        assert!((mu - 400.0).abs() < 20.0, "{mu}");
        assert_eq!(sigma, truth_sigma());

        let mut next = 0.0;
        assert_eq!(ft_acquire_entropy(prior, series, 2001, 2, 11, &mut next), FtStatus::Ok);
        let (lo, hi) = (10f64.powf(m - 2.0 * s), 10f64.powf(m + 2.0 * s));
        assert!(next >= lo - 1e-9 && next <= hi + 1e-9, "{next}");

        assert_eq!(ft_series_push(series, -1.0, 1), FtStatus::Domain);
        assert_eq!(ft_series_len(series), 5);

        ft_series_free(series);
        ft_prior_free(prior);
    }
}

#[test]
fn null_handles_are_rejected() {
    unsafe {
        let mut x = 0.0;
        assert_eq!(ft_map_estimate(ptr::null(), ptr::null(), 1, &mut x, &mut x), FtStatus::NullPointer);
        assert!(last_error().contains("prior"));
        assert_eq!(ft_series_push(ptr::null_mut(), 1.0, 0), FtStatus::NullPointer);
        assert_eq!(ft_series_len(ptr::null()), 0);
        ft_series_free(ptr::null_mut());
        ft_prior_free(ptr::null_mut());
        ft_gp_free(ptr::null_mut());
        ft_simulator_free(ptr::null_mut());
    }
}

#[test]
fn gp_model_loads_and_predicts() {
    use fatigue_core::gp::{synthesize_training_data, FitOptions, GpModel, KernelKind};
    let data = synthesize_training_data(3, 40).unwrap();
    let model = GpModel::train(&data, KernelKind::DEFAULT, FitOptions { restarts: 2, ..Default::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gp.json");
    model.save_json(&path).unwrap();

    unsafe {
        let c = CString::new(path.to_str().unwrap()).unwrap();
        let mut h = ptr::null_mut();
        assert_eq!(ft_gp_load_json(c.as_ptr(), &mut h), FtStatus::Ok);
        let (mut mean, mut std) = (0.0, 0.0);
        assert_eq!(ft_gp_predict(h, 100.0, 300.0, FtLoadType::Stress, -1.0, &mut mean, &mut std), FtStatus::Ok);
        let f = fatigue_core::gp::MaterialFeatures::new(100.0, 300.0, fatigue_core::gp::LoadType::Stress, -1.0).unwrap();
        let direct = model.predict(&f).unwrap();
        assert_eq!(mean, direct.mean_log10);
        assert_eq!(std, direct.std_log10);
        assert_eq!(ft_gp_predict(h, -1.0, 300.0, FtLoadType::Stress, -1.0, &mut mean, &mut std), FtStatus::Domain);
        ft_gp_free(h);

        let missing = CString::new(dir.path().join("nope.json").to_str().unwrap()).unwrap();
        assert_eq!(ft_gp_load_json(missing.as_ptr(), &mut h), FtStatus::Io);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fatigue_ffi.h")).unwrap();
    for sym in [
        "ft_version",
        "ft_last_error_message",
        "ft_failure_probability",
        "ft_prior_new",
        "ft_prior_from_width",
        "ft_prior_params",
        "ft_prior_free",
        "ft_series_new",
        "ft_series_push",
        "ft_series_len",
        "ft_series_free",
        "ft_simulator_new",
        "ft_simulator_step",
        "ft_simulator_free",
        "ft_map_estimate",
        "ft_posterior_std",
        "ft_acquire_entropy",
        "ft_discretize_load",
        "ft_staircase_levels",
        "ft_gp_load_json",
        "ft_gp_predict",
        "ft_gp_free",
        "FT_STATUS_DEGENERATE_POSTERIOR",
    ] {
        assert!(header.contains(sym), "missing {sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        "#include \"fatigue_ffi.h\"\nint main(void) { FtPrior *p = 0; (void)p; return FT_STATUS_OK; }\n",
    )
    .unwrap();
    let out = std::process::Command::new(cc)
        .args(["-std=c99", "-fsyntax-only", "-Wall", "-Werror", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
