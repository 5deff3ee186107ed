use std::ffi::{c_char, CString};
use std::ptr;

use plasmabound_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { pb_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn solve_and_check_through_handles() {
    unsafe {
        let mut dom = ptr::null_mut();
        assert_eq!(pb_domain_new(PbShape::Disk, 0.0, 48, &mut dom), PbStatus::Ok);
        let mut nodes = 0usize;
        assert_eq!(pb_domain_node_count(dom, &mut nodes), PbStatus::Ok);
        assert!(nodes > 1000);
        let mut ell = 0.0;
        assert_eq!(pb_domain_ell(dom, &mut ell), PbStatus::Ok);
        assert!((ell - 1.0).abs() < 1e-12);

        let mut sol = ptr::null_mut();
        assert_eq!(pb_solve(dom, 2.0, 2.0, &mut sol), PbStatus::Ok);
        let mut h = PbHeader::default();
        assert_eq!(pb_solution_header(sol, &mut h), PbStatus::Ok);
        let mut radial = PbHeader::default();
        assert_eq!(pb_radial_solve(2.0, 2.0, &mut radial), PbStatus::Ok);
        assert!((h.alpha - radial.alpha).abs() < 1e-3);
        assert!(radial.pde_residual.is_nan());

        let mut psi = vec![0.0; nodes];
        assert_eq!(pb_solution_psi(sol, psi.as_mut_ptr(), nodes), PbStatus::Ok);
        assert!(psi.iter().all(|v| *v > 0.0));
        assert_eq!(pb_solution_psi(sol, psi.as_mut_ptr(), nodes - 1), PbStatus::BufferTooSmall);

        let mut counts = PbCheckCounts::default();
        assert_eq!(pb_check_estimates(dom, sol, 1e-2, &mut counts), PbStatus::Ok);
        assert_eq!(counts.fail, 0);
        assert!(counts.pass >= 5);

        pb_solution_free(sol);
        pb_domain_free(dom);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut dom = ptr::null_mut();
        assert_eq!(pb_domain_new(PbShape::Rectangle, -1.0, 32, &mut dom), PbStatus::InvalidDomain);
        assert!(last_error().contains("aspect"));
        assert_eq!(pb_domain_new(PbShape::Disk, 0.0, 32, ptr::null_mut()), PbStatus::NullPointer);

        let json = CString::new(r#"{"shape": "square", "n": 32}"#).unwrap();
        assert_eq!(pb_domain_from_json(json.as_ptr(), &mut dom), PbStatus::Ok);
        let mut star = 0.0;
        assert_eq!(pb_lambda_star(dom, 1.0, &mut star), PbStatus::Ok);
        let mut sol = ptr::null_mut();
        assert_eq!(pb_solve(dom, 1.2 * star, 1.0, &mut sol), PbStatus::NoSolution);
        assert!(sol.is_null());
        let bad = CString::new("{not json").unwrap();
        let mut other = ptr::null_mut();
        assert_eq!(pb_domain_from_json(bad.as_ptr(), &mut other), PbStatus::Io);
        pb_domain_free(dom);
        pb_domain_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/plasmabound.h")).unwrap();
    for name in ["pb_domain_new", "pb_solve", "pb_solution_psi", "pb_last_error", "PB_STATUS_NO_SOLUTION", "typedef struct PbDomain PbDomain"] {
        assert!(header.contains(name), "{name}");
    }
}
