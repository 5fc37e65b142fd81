use std::ffi::CStr;
use std::ptr;

use pprank_ffi::*;

fn last_error() -> String {
    let p = pprank_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn codec_roundtrip() {
    let mut raw = 0u64;
    let mut back = 0.0;
    unsafe {
        assert_eq!(pprank_encode(-1.5, 20, &mut raw), PprankStatus::Ok);
        assert_eq!(raw, (-(3i64 << 19)) as u64);
        assert_eq!(pprank_decode(raw, 20, &mut back), PprankStatus::Ok);
    }
    assert_eq!(back, -1.5);
    assert_eq!(
        unsafe { pprank_encode(1e300, 20, &mut raw) },
        PprankStatus::OutOfRange
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { pprank_encode(1.0, 60, &mut raw) },
        PprankStatus::InvalidArgument
    );
}

#[test]
fn metrics() {
    let mut w = [0.0; 2];
    let mut s = 0.0;
    unsafe {
        assert_eq!(
            pprank_attention_weights(2, w.as_mut_ptr()),
            PprankStatus::Ok
        );
        assert_eq!(pprank_sensitivity(2, &mut s), PprankStatus::Ok);
    }
    assert!((w[0] - 2.0 / 3.0).abs() < 1e-15 && (w[1] - 1.0 / 3.0).abs() < 1e-15);
    assert!((s - 2.0 / 3.0).abs() < 1e-12);

    let r_hat = [0.8, 0.2];
    let mut x = 0.0;
    unsafe {
        assert_eq!(
            pprank_ndcg([0, 1].as_ptr(), [0, 1].as_ptr(), r_hat.as_ptr(), 2, &mut x),
            PprankStatus::Ok
        );
        assert_eq!(x, 1.0);
        assert_eq!(
            pprank_ndcg([0, 1].as_ptr(), [0, 0].as_ptr(), r_hat.as_ptr(), 2, &mut x),
            PprankStatus::InvalidArgument
        );
        assert_eq!(
            pprank_unfairness(w.as_ptr(), r_hat.as_ptr(), 2, &mut x),
            PprankStatus::Ok
        );
    }
    assert!((x - (2.0 * (0.8 - 2.0 / 3.0))).abs() < 1e-12);
    unsafe {
        assert_eq!(
            pprank_unfairness(ptr::null(), r_hat.as_ptr(), 2, &mut x),
            PprankStatus::NullPointer
        );
    }
}

#[test]
fn problem_handle() {
    let xi = [0.0, 0.0];
    let r_hat = [0.8, 0.2];
    let w = [2.0 / 3.0, 1.0 / 3.0];
    let original = [0usize, 1];
    let mut p: *mut PprankProblem = ptr::null_mut();
    unsafe {
        assert_eq!(
            pprank_problem_new(
                xi.as_ptr(),
                r_hat.as_ptr(),
                w.as_ptr(),
                original.as_ptr(),
                2,
                0.0,
                2,
                &mut p
            ),
            PprankStatus::Ok
        );
        assert_eq!(pprank_problem_size(p), 2);
        let mut order = [9usize; 2];
        let mut obj = 0.0;
        assert_eq!(
            pprank_problem_solve(p, order.as_mut_ptr(), &mut obj),
            PprankStatus::Ok
        );
        assert_eq!(order, [0, 1]);
        assert!((obj - 0.26666666666666666).abs() < 1e-12);
        let mut brute = [9usize; 2];
        assert_eq!(
            pprank_problem_brute_force(p, brute.as_mut_ptr(), ptr::null_mut()),
            PprankStatus::Ok
        );
        assert_eq!(brute, order);
        pprank_problem_free(p);

        assert_eq!(
            pprank_problem_new(
                xi.as_ptr(),
                r_hat.as_ptr(),
                w.as_ptr(),
                original.as_ptr(),
                2,
                1.5,
                2,
                &mut p
            ),
            PprankStatus::InvalidArgument
        );
        assert_eq!(
            pprank_problem_solve(ptr::null(), order.as_mut_ptr(), ptr::null_mut()),
            PprankStatus::NullPointer
        );
        pprank_problem_free(ptr::null_mut());
    }
}

#[test]
fn private_run_handle() {
    let n = 4;
    let users = [
        [5.0, 1.0, 3.0, 2.0],
        [1.0, 4.0, 4.5, 2.0],
        [3.0, 3.5, 1.0, 5.0],
    ];
    let mut run: *mut PprankRun = ptr::null_mut();
    unsafe {
        assert_eq!(
            pprank_run_new(n, 3, 1.0, 0.8, true, 7, &mut run),
            PprankStatus::Ok
        );
        for scores in &users {
            let mut order = [0usize; 4];
            let mut ndcg = 0.0;
            assert_eq!(
                pprank_run_serve_user(
                    run,
                    scores.as_ptr(),
                    n,
                    1.0,
                    5.0,
                    order.as_mut_ptr(),
                    &mut ndcg
                ),
                PprankStatus::Ok
            );
            assert!(ndcg >= 0.8 - 1e-9);
            let mut sorted = order;
            sorted.sort();
            assert_eq!(sorted, [0, 1, 2, 3]);
        }
        let mut order = [0usize; 4];
        assert_eq!(
            pprank_run_serve_user(
                run,
                users[0].as_ptr(),
                n,
                1.0,
                5.0,
                order.as_mut_ptr(),
                ptr::null_mut()
            ),
            PprankStatus::Protocol
        );
        let mut summary = PprankRunSummary::default();
        assert_eq!(pprank_run_finish(run, &mut summary), PprankStatus::Ok);
        assert_eq!((summary.served, summary.noise_draws), (3, 12));
        assert!(summary.min_ndcg >= 0.8 - 1e-9);

        assert_eq!(
            pprank_run_new(n, 3, 0.0, 0.8, true, 7, &mut run),
            PprankStatus::InvalidArgument
        );
        assert_eq!(
            pprank_run_new(n, 3, 1.0, 0.8, false, 7, &mut run),
            PprankStatus::Ok
        );
        assert_eq!(
            pprank_run_serve_user(
                run,
                users[0].as_ptr(),
                3,
                1.0,
                5.0,
                order.as_mut_ptr(),
                ptr::null_mut()
            ),
            PprankStatus::InvalidArgument
        );
        pprank_run_free(run);
    }
}
