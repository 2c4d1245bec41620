//! Exercise the C ABI exactly as an external binding would: through the
//! exported extern "C" functions, raw pointers and status codes.

use std::ffi::{CStr, CString};
use std::ptr;

use kgslab_ffi::*;

#[test]
fn version_is_a_static_string() {
    let v = kgslab_version();
    assert!(!v.is_null());
    let s = unsafe { CStr::from_ptr(v) }.to_str().unwrap();
    assert!(!s.is_empty());
}

#[test]
fn grid_and_field_lifecycle() {
    unsafe {
        let mut grid: *mut KgslabGrid = ptr::null_mut();
        assert_eq!(kgslab_grid_new(32.0, 255, &mut grid), KgslabStatus::Ok);
        assert_eq!(kgslab_grid_n_points(grid), 255);
        assert!(kgslab_grid_xi_max(grid) > 0.0);

        // Invalid parameters surface as a status plus message.
        let mut bad: *mut KgslabGrid = ptr::null_mut();
        assert_eq!(
            kgslab_grid_new(-1.0, 255, &mut bad),
            KgslabStatus::InvalidArgument
        );
        let msg = kgslab_last_error_message();
        assert!(!msg.is_null());
        kgslab_string_free(msg);

        let mut field: *mut KgslabField = ptr::null_mut();
        assert_eq!(
            kgslab_field_gaussian(grid, 0.5, 1.0, &mut field),
            KgslabStatus::Ok
        );
        let mut norm = 0.0f64;
        assert_eq!(kgslab_field_l2_norm(field, &mut norm), KgslabStatus::Ok);
        assert!((norm - 0.5 * std::f64::consts::PI.powf(0.75)).abs() < 1e-6);

        let mut h = 0.0f64;
        assert_eq!(
            kgslab_field_sobolev_norm(field, 1.0, &mut h),
            KgslabStatus::Ok
        );
        assert!(h >= norm);

        let n = kgslab_grid_n_points(grid);
        let mut re = vec![0.0f64; n];
        let mut im = vec![0.0f64; n];
        assert_eq!(
            kgslab_field_copy_values(field, re.as_mut_ptr(), im.as_mut_ptr(), n),
            KgslabStatus::Ok
        );
        assert!(re[0] > 0.0 && im.iter().all(|&x| x == 0.0));
        assert_eq!(
            kgslab_field_copy_values(field, re.as_mut_ptr(), im.as_mut_ptr(), n - 1),
            KgslabStatus::InvalidArgument
        );

        kgslab_field_free(field);
        kgslab_grid_free(grid);
    }
}

#[test]
fn annular_field_is_seed_deterministic() {
    unsafe {
        let mut grid: *mut KgslabGrid = ptr::null_mut();
        assert_eq!(kgslab_grid_new(64.0, 1023, &mut grid), KgslabStatus::Ok);
        let mut f1: *mut KgslabField = ptr::null_mut();
        let mut f2: *mut KgslabField = ptr::null_mut();
        assert_eq!(kgslab_field_annular(grid, 2, 9, &mut f1), KgslabStatus::Ok);
        assert_eq!(kgslab_field_annular(grid, 2, 9, &mut f2), KgslabStatus::Ok);
        let n = kgslab_grid_n_points(grid);
        let mut a = (vec![0.0f64; n], vec![0.0f64; n]);
        let mut b = (vec![0.0f64; n], vec![0.0f64; n]);
        kgslab_field_copy_values(f1, a.0.as_mut_ptr(), a.1.as_mut_ptr(), n);
        kgslab_field_copy_values(f2, b.0.as_mut_ptr(), b.1.as_mut_ptr(), n);
        assert_eq!(a, b);
        // Unit mass.
        let mut norm = 0.0;
        kgslab_field_l2_norm(f1, &mut norm);
        assert!((norm - 1.0).abs() < 1e-10);
        // Under-resolved annulus is rejected.
        let mut bad: *mut KgslabField = ptr::null_mut();
        assert_eq!(
            kgslab_field_annular(grid, -8, 1, &mut bad),
            KgslabStatus::InvalidArgument
        );
        kgslab_field_free(f1);
        kgslab_field_free(f2);
        kgslab_grid_free(grid);
    }
}

#[test]
fn solve_through_the_abi() {
    unsafe {
        let mut grid: *mut KgslabGrid = ptr::null_mut();
        assert_eq!(kgslab_grid_new(32.0, 511, &mut grid), KgslabStatus::Ok);
        let mut u0: *mut KgslabField = ptr::null_mut();
        let mut n0: *mut KgslabField = ptr::null_mut();
        kgslab_field_gaussian(grid, 0.01, 1.0, &mut u0);
        kgslab_field_gaussian(grid, 0.01, 1.0, &mut n0);

        let mut traj: *mut KgslabTrajectory = ptr::null_mut();
        assert_eq!(
            kgslab_solve(u0, n0, 1.0, 1.0 / 64.0, 0, &mut traj),
            KgslabStatus::Ok
        );
        let len = kgslab_trajectory_len(traj);
        assert!(len >= 2);
        let mut t_last = 0.0;
        assert_eq!(
            kgslab_trajectory_time(traj, len - 1, &mut t_last),
            KgslabStatus::Ok
        );
        assert!((t_last - 1.0).abs() < 1e-12);
        let mut drift = f64::NAN;
        assert_eq!(
            kgslab_trajectory_mass_drift(traj, &mut drift),
            KgslabStatus::Ok
        );
        assert!(drift < 1e-10);
        assert_eq!(kgslab_trajectory_aborted(traj), 0);
        let mut mass = 0.0;
        assert_eq!(kgslab_trajectory_mass(traj, 0, &mut mass), KgslabStatus::Ok);
        assert!(mass > 0.0);
        let mut res = f64::NAN;
        assert_eq!(
            kgslab_trajectory_residual(traj, &mut res),
            KgslabStatus::Ok
        );
        assert!(res.is_finite());

        // Bad method code.
        let mut t2: *mut KgslabTrajectory = ptr::null_mut();
        assert_eq!(
            kgslab_solve(u0, n0, 1.0, 1.0 / 64.0, 7, &mut t2),
            KgslabStatus::InvalidArgument
        );

        kgslab_trajectory_free(traj);
        kgslab_field_free(u0);
        kgslab_field_free(n0);
        kgslab_grid_free(grid);
    }
}

#[test]
fn run_config_through_the_abi() {
    let dir = std::env::temp_dir().join("kgslab-ffi-run");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("cfg.toml");
    std::fs::write(
        &config_path,
        "experiment = \"transversality\"\ncase = \"i\"\nk1_list = [-12, -11]\n",
    )
    .unwrap();
    let c_path = CString::new(config_path.to_str().unwrap()).unwrap();
    let c_out = CString::new(dir.join("out").to_str().unwrap()).unwrap();
    let status = unsafe { kgslab_run_config(c_path.as_ptr(), c_out.as_ptr()) };
    assert_eq!(status, KgslabStatus::Ok);
    assert!(dir.join("out").join("summary.json").exists());
    // Missing file maps to InvalidArgument with a message.
    let missing = CString::new("/nonexistent/cfg.toml").unwrap();
    let status = unsafe { kgslab_run_config(missing.as_ptr(), std::ptr::null()) };
    assert_eq!(status, KgslabStatus::InvalidArgument);
    let msg = kgslab_last_error_message();
    assert!(!msg.is_null());
    unsafe { kgslab_string_free(msg) };
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        assert_eq!(
            kgslab_grid_new(32.0, 255, ptr::null_mut()),
            KgslabStatus::NullArgument
        );
        let mut out = 0.0f64;
        assert_eq!(
            kgslab_field_l2_norm(ptr::null(), &mut out),
            KgslabStatus::NullArgument
        );
        assert_eq!(
            kgslab_run_config(ptr::null(), ptr::null()),
            KgslabStatus::NullArgument
        );
    }
}

#[test]
fn generated_header_covers_the_surface() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("kgslab.h");
    let text = std::fs::read_to_string(header).expect("header generated at build time");
    for symbol in [
        "kgslab_version",
        "kgslab_grid_new",
        "kgslab_field_annular",
        "kgslab_solve",
        "kgslab_trajectory_mass_drift",
        "kgslab_run_config",
        "KgslabStatus",
    ] {
        assert!(text.contains(symbol), "header missing {symbol}");
    }
}
