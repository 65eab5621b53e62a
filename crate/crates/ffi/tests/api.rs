use std::ffi::{CStr, CString};
use std::ptr;

use qtomo_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(qt_last_error()) }.to_string_lossy().into_owned()
}

fn matrix_values(m: *const QtMatrix) -> (Vec<f64>, Vec<f64>) {
    let d = unsafe { qt_matrix_dim(m) };
    let (mut re, mut im) = (vec![0.0; d * d], vec![0.0; d * d]);
    assert_eq!(unsafe { qt_matrix_copy(m, re.as_mut_ptr(), im.as_mut_ptr(), d * d) }, QtStatus::Ok);
    (re, im)
}

#[test]
fn rank2_state_entries() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { qt_true_state_rank2(2, &mut m) }, QtStatus::Ok);
    assert_eq!(unsafe { qt_matrix_dim(m) }, 4);
    let (re, im) = matrix_values(m);
    // I/2 ⊗ |+><+|: 1/4 on the two diagonal 2x2 blocks
    for i in 0..4 {
        for j in 0..4 {
            let expect = if i / 2 == j / 2 { 0.25 } else { 0.0 };
            assert!((re[i * 4 + j] - expect).abs() < 1e-15);
            assert_eq!(im[i * 4 + j], 0.0);
        }
    }
    unsafe { qt_matrix_free(m) };
}

#[test]
fn estimators_run_end_to_end() {
    let mut truth = ptr::null_mut();
    let mut counts = ptr::null_mut();
    unsafe {
        assert_eq!(qt_true_state_mixed(2, 3, &mut truth), QtStatus::Ok);
        assert_eq!(qt_simulate_counts(truth, 1000, 4, &mut counts), QtStatus::Ok);
        assert_eq!(qt_counts_num_qubits(counts), 2);

        let mut cfg = std::mem::zeroed();
        assert_eq!(qt_sampler_config_default(&mut cfg), QtStatus::Ok);
        cfg.iterations = 500;
        cfg.burn_in = 50;
        let mut info = QtRunInfo::default();

        let mut amh = ptr::null_mut();
        assert_eq!(qt_estimate_amh(counts, &cfg, &mut amh, &mut info), QtStatus::Ok);
        assert_eq!(info.evaluations, 501);
        let mut rmh = ptr::null_mut();
        assert_eq!(qt_estimate_rmh(counts, &cfg, &mut rmh, ptr::null_mut()), QtStatus::Ok);
        let mut li = ptr::null_mut();
        assert_eq!(qt_linear_inversion(counts, &mut li), QtStatus::Ok);

        for est in [amh, rmh, li] {
            let mut mse = -1.0;
            let mut maee = -1.0;
            assert_eq!(qt_mse(est, truth, &mut mse), QtStatus::Ok);
            assert_eq!(qt_maee(est, truth, &mut maee), QtStatus::Ok);
            assert!((0.0..0.05).contains(&mse), "{mse}");
            assert!((0.0..0.2).contains(&maee), "{maee}");
            let (re, _) = matrix_values(est);
            assert!((re[0] + re[5] + re[10] + re[15] - 1.0).abs() < 1e-10);
            qt_matrix_free(est);
        }
        qt_counts_free(counts);
        qt_matrix_free(truth);
    }
}

#[test]
fn counts_buffer_and_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("c.csv").to_str().unwrap()).unwrap();
    let values: Vec<u64> = (0..9).flat_map(|_| [10u64, 20, 30, 40]).collect();
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(qt_counts_from_buffer(2, values.as_ptr(), values.len(), &mut c), QtStatus::Ok);
        assert_eq!(qt_counts_shots(c), 100);
        assert_eq!(qt_counts_save(c, path.as_ptr()), QtStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(qt_counts_load(path.as_ptr(), &mut back), QtStatus::Ok);
        let mut out = vec![0u64; 36];
        assert_eq!(qt_counts_copy(back, out.as_mut_ptr(), out.len()), QtStatus::Ok);
        assert_eq!(out, values);
        qt_counts_free(c);
        qt_counts_free(back);
    }
}

#[test]
fn matrix_parts_and_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.csv").to_str().unwrap()).unwrap();
    let re = [0.5, 0.1, 0.1, 0.5];
    let im = [0.0, -0.2, 0.2, 0.0];
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(qt_matrix_from_parts(2, re.as_ptr(), im.as_ptr(), &mut m), QtStatus::Ok);
        assert_eq!(qt_matrix_save(m, path.as_ptr()), QtStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(qt_matrix_load(path.as_ptr(), &mut back), QtStatus::Ok);
        assert_eq!(matrix_values(back), (re.to_vec(), im.to_vec()));
        let mut mse = -1.0;
        assert_eq!(qt_mse(m, back, &mut mse), QtStatus::Ok);
        assert_eq!(mse, 0.0);
        qt_matrix_free(m);
        qt_matrix_free(back);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(qt_true_state_rank2(2, ptr::null_mut()), QtStatus::NullPointer);
        assert!(last_error().contains("null"));
        assert_eq!(qt_true_state_rank2(0, &mut m), QtStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        assert!(m.is_null());

        let re = [1.0; 9];
        assert_eq!(qt_matrix_from_parts(3, re.as_ptr(), re.as_ptr(), &mut m), QtStatus::Dimension);

        // not a density matrix: trace 2
        let re = [1.0, 0.0, 0.0, 1.0];
        let im = [0.0; 4];
        assert_eq!(qt_matrix_from_parts(2, re.as_ptr(), im.as_ptr(), &mut m), QtStatus::Ok);
        let mut c = ptr::null_mut();
        assert_eq!(qt_simulate_counts(m, 10, 0, &mut c), QtStatus::InvalidDensity);
        qt_matrix_free(m);

        let bad = [1u64, 2, 3];
        assert_eq!(qt_counts_from_buffer(1, bad.as_ptr(), 3, &mut c), QtStatus::Dimension);
        let uneven = [1u64, 2, 3, 4, 5, 6];
        assert_eq!(qt_counts_from_buffer(1, uneven.as_ptr(), 6, &mut c), QtStatus::Parse);

        let missing = CString::new("/nonexistent/dir/c.csv").unwrap();
        assert_eq!(qt_counts_load(missing.as_ptr(), &mut c), QtStatus::Io);

        assert_eq!(qt_true_state_rank2(1, &mut m), QtStatus::Ok);
        assert!(last_error().is_empty());
        let mut cfg = std::mem::zeroed();
        qt_sampler_config_default(&mut cfg);
        let mut counts = ptr::null_mut();
        qt_simulate_counts(m, 10, 0, &mut counts);
        cfg.beta_y = 1.5;
        let mut est = ptr::null_mut();
        assert_eq!(qt_estimate_amh(counts, &cfg, &mut est, ptr::null_mut()), QtStatus::InvalidArgument);
        qt_counts_free(counts);
        qt_matrix_free(m);

        // freeing null is a no-op
        qt_matrix_free(ptr::null_mut());
        qt_counts_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(qt_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
