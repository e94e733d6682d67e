use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use rotavg_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(rav_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn generate(n: usize, phi: f64, p: f64, seed: u64) -> (*mut RavGraph, *mut RavStack) {
    let mut g = ptr::null_mut();
    let mut truth = ptr::null_mut();
    let status = unsafe { rav_graph_generate(n, phi, p, seed, &mut g, &mut truth) };
    assert_eq!(status, RavStatus::Ok, "{}", last_error());
    (g, truth)
}

#[test]
fn solve_and_certify() {
    let (g, truth) = generate(20, 0.2, 0.0, 1);
    unsafe {
        assert_eq!(rav_graph_vertex_count(g), 20);
        assert_eq!(rav_graph_edge_count(g), 190);
        for alg in [RavAlgorithm::Bcd, RavAlgorithm::Sum] {
            let mut opts = rav_solver_options_default();
            opts.epsilon = 1e-10;
            let mut sol = ptr::null_mut();
            let mut res = std::mem::zeroed::<RavSolveResult>();
            assert_eq!(
                rav_solve(g, alg, &opts, ptr::null(), &mut sol, &mut res),
                RavStatus::Ok
            );
            assert!(res.converged);
            assert_eq!(res.mu.is_nan(), alg == RavAlgorithm::Bcd);

            let mut obj = 0.0;
            assert_eq!(rav_objective(g, sol, &mut obj), RavStatus::Ok);
            assert_eq!(obj, res.objective);
            let mut truth_obj = 0.0;
            assert_eq!(rav_objective(g, truth, &mut truth_obj), RavStatus::Ok);
            assert!(obj <= truth_obj);

            let mut cert = std::mem::zeroed::<RavCertificate>();
            assert_eq!(rav_certify(g, sol, 0.0, &mut cert), RavStatus::Ok);
            assert!(cert.optimal);
            assert!((cert.tol - 20e-6).abs() < 1e-18);
            rav_stack_free(sol);
        }
        rav_stack_free(truth);
        rav_graph_free(g);
    }
}

#[test]
fn explicit_init_and_defaults() {
    let (g, truth) = generate(10, 0.0, 0.0, 2);
    unsafe {
        let mut opts = rav_solver_options_default();
        opts.init = RavInit::Explicit;
        let mut sol = ptr::null_mut();
        assert_eq!(
            rav_solve(
                g,
                RavAlgorithm::Sum,
                &opts,
                truth,
                &mut sol,
                ptr::null_mut()
            ),
            RavStatus::Ok
        );
        assert_eq!(rav_stack_len(sol), 10);
        rav_stack_free(sol);

        assert_eq!(
            rav_solve(
                g,
                RavAlgorithm::Sum,
                &opts,
                ptr::null(),
                &mut sol,
                ptr::null_mut()
            ),
            RavStatus::NullPointer
        );
        assert!(last_error().contains("init_stack"));

        assert_eq!(
            rav_solve(
                g,
                RavAlgorithm::Bcd,
                ptr::null(),
                ptr::null(),
                &mut sol,
                ptr::null_mut()
            ),
            RavStatus::Ok
        );
        rav_stack_free(sol);
        rav_stack_free(truth);
        rav_graph_free(g);
    }
}

#[test]
fn graph_from_arrays() {
    let id = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    let rel: Vec<f64> = id.iter().chain(id.iter()).copied().collect();
    unsafe {
        let mut g = ptr::null_mut();
        let (i, j) = ([0usize, 1], [1usize, 2]);
        assert_eq!(
            rav_graph_new(3, 2, i.as_ptr(), j.as_ptr(), rel.as_ptr(), &mut g),
            RavStatus::Ok
        );
        let mut s = ptr::null_mut();
        assert_eq!(rav_stack_identity(3, &mut s), RavStatus::Ok);
        let mut obj = -1.0;
        assert_eq!(rav_objective(g, s, &mut obj), RavStatus::Ok);
        assert_eq!(obj, 0.0);
        rav_stack_free(s);
        rav_graph_free(g);

        let (i, j) = ([0usize, 1], [0usize, 2]);
        assert_eq!(
            rav_graph_new(3, 2, i.as_ptr(), j.as_ptr(), rel.as_ptr(), &mut g),
            RavStatus::InvalidArgument
        );
        assert!(last_error().contains("self-loop"));

        let (i, j) = ([0usize], [1usize]);
        assert_eq!(
            rav_graph_new(3, 1, i.as_ptr(), j.as_ptr(), rel.as_ptr(), &mut g),
            RavStatus::Disconnected
        );

        let bad = [2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(
            rav_graph_new(2, 1, i.as_ptr(), j.as_ptr(), bad.as_ptr(), &mut g),
            RavStatus::InvalidArgument
        );
    }
}

#[test]
fn null_handles() {
    unsafe {
        let mut out = 0.0;
        assert_eq!(
            rav_objective(ptr::null(), ptr::null(), &mut out),
            RavStatus::NullPointer
        );
        assert_eq!(last_error(), "graph is null");
        assert_eq!(
            rav_graph_generate(5, 0.1, 0.0, 0, ptr::null_mut(), ptr::null_mut()),
            RavStatus::NullPointer
        );
        assert_eq!(rav_graph_vertex_count(ptr::null()), 0);
        assert_eq!(rav_stack_len(ptr::null()), 0);
        rav_graph_free(ptr::null_mut());
        rav_stack_free(ptr::null_mut());
        assert_eq!(
            rav_graph_read(ptr::null(), &mut ptr::null_mut()),
            RavStatus::NullPointer
        );
    }
}

#[test]
fn invalid_generation_arguments() {
    let mut g = ptr::null_mut();
    let status = unsafe { rav_graph_generate(5, 0.1, 1.0, 0, &mut g, ptr::null_mut()) };
    assert_eq!(status, RavStatus::InvalidArgument);
    assert!(g.is_null());
    assert!(last_error().contains("p must lie"));
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let gpath = CString::new(dir.path().join("g.rag").to_str().unwrap()).unwrap();
    let spath = CString::new(dir.path().join("s.ras").to_str().unwrap()).unwrap();
    let (g, truth) = generate(8, 0.3, 0.2, 3);
    unsafe {
        assert_eq!(rav_graph_write(g, gpath.as_ptr()), RavStatus::Ok);
        assert_eq!(rav_stack_write(truth, spath.as_ptr()), RavStatus::Ok);
        let mut g2 = ptr::null_mut();
        let mut s2 = ptr::null_mut();
        assert_eq!(rav_graph_read(gpath.as_ptr(), &mut g2), RavStatus::Ok);
        assert_eq!(rav_stack_read(spath.as_ptr(), &mut s2), RavStatus::Ok);
        let (mut a, mut b) = ([0.0; 9], [0.0; 9]);
        for k in 0..8 {
            assert_eq!(rav_stack_get(truth, k, a.as_mut_ptr()), RavStatus::Ok);
            assert_eq!(rav_stack_get(s2, k, b.as_mut_ptr()), RavStatus::Ok);
            assert_eq!(a, b);
        }
        assert_eq!(
            rav_stack_get(s2, 8, b.as_mut_ptr()),
            RavStatus::InvalidArgument
        );
        let (mut o1, mut o2) = (0.0, 0.0);
        rav_objective(g, truth, &mut o1);
        rav_objective(g2, s2, &mut o2);
        assert_eq!(o1, o2);
        rav_graph_free(g2);
        rav_stack_free(s2);

        let missing = CString::new(dir.path().join("none.rag").to_str().unwrap()).unwrap();
        assert_eq!(rav_graph_read(missing.as_ptr(), &mut g2), RavStatus::Io);
        std::fs::write(
            dir.path().join("bad.rag"),
            "RAG 1 2 1\n0 0 1 0 0 0 1 0 0 0 1\n",
        )
        .unwrap();
        let bad = CString::new(dir.path().join("bad.rag").to_str().unwrap()).unwrap();
        assert_eq!(rav_graph_read(bad.as_ptr(), &mut g2), RavStatus::Parse);
        assert!(last_error().contains("line 2"));
        rav_graph_free(g);
        rav_stack_free(truth);
    }
}

#[test]
fn stack_from_data() {
    let data = [1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0];
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(rav_stack_new(1, data.as_ptr(), &mut s), RavStatus::Ok);
        let mut out = [0.0; 9];
        assert_eq!(rav_stack_get(s, 0, out.as_mut_ptr()), RavStatus::Ok);
        assert_eq!(out, data);
        rav_stack_free(s);
        let reflection = [-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert_ne!(rav_stack_new(1, reflection.as_ptr(), &mut s), RavStatus::Ok);
    }
}

#[test]
fn losso() {
    let a = [-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0];
    let mut x = [0.0; 9];
    let mut value = 0.0;
    let status = unsafe { rav_solve_losso(a.as_ptr(), x.as_mut_ptr(), &mut value) };
    assert_eq!(status, RavStatus::Ok);
    assert_eq!(value, -3.0);
    assert_eq!(x, [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let nan = [f64::NAN; 9];
    assert_eq!(
        unsafe { rav_solve_losso(nan.as_ptr(), x.as_mut_ptr(), ptr::null_mut()) },
        RavStatus::Numerical
    );
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(rav_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; header check skipped");
        return;
    };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("use.c");
    std::fs::write(
        &source,
        r#"#include "rotavg.h"
#include <stdio.h>
int main(void) {
    RavGraph *g = NULL;
    RavStack *truth = NULL, *sol = NULL;
    RavSolverOptions opts = rav_solver_options_default();
    RavSolveResult res;
    RavCertificate cert;
    if (rav_graph_generate(20, 0.2, 0.0, 1, &g, &truth) != RAV_STATUS_OK) {
        fprintf(stderr, "%s\n", rav_last_error_message());
        return 1;
    }
    opts.init = RAV_INIT_RANDOM;
    rav_solve(g, RAV_ALGORITHM_SUM, &opts, NULL, &sol, &res);
    rav_certify(g, sol, 0.0, &cert);
    printf("%f %d\n", res.objective, cert.optimal);
    rav_stack_free(sol);
    rav_stack_free(truth);
    rav_graph_free(g);
    return 0;
}
"#,
    )
    .unwrap();
    for (lang, std) in [("c", "-std=c99"), ("c++", "-std=c++11")] {
        let out = Command::new(cc)
            .args([
                "-fsyntax-only",
                "-Wall",
                "-Wextra",
                "-Werror",
                "-pedantic",
                std,
                "-x",
                lang,
                "-I",
            ])
            .arg(&include)
            .arg(&source)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{lang}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
