use std::ffi::{CStr, CString};
use std::ptr;

use dri_ffi::*;

const TINY: &str = "TINY_3

VEHICLE
NUMBER     CAPACITY
  2         200

CUSTOMER
CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE   TIME

    0      40         50          0          0       1236          0
    1      45         68         10        912        967         90
    2      45         70         30        825        870         90
    3      42         66         10         65        146         90
";

fn last_error() -> String {
    let p = dri_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn parse_run_and_export() {
    let text = CString::new(TINY).unwrap();
    let mut inst = ptr::null_mut();
    unsafe {
        assert_eq!(dri_instance_parse(text.as_ptr(), &mut inst), DriStatus::Ok);
        assert_eq!(dri_instance_customer_count(inst), 3);
        assert!(dri_last_error_message().is_null());

        let config = CString::new(r#"{"theta": 2.0, "q_policy": {"kind": "fixed", "q": 2}}"#).unwrap();
        let mut sol = ptr::null_mut();
        assert_eq!(dri_run(inst, config.as_ptr(), &mut sol), DriStatus::Ok);
        assert!(dri_solution_is_feasible(sol));
        assert!(dri_solution_route_count(sol) >= 1);
        let cost = dri_solution_total_cost(sol);
        assert!(cost.is_finite() && cost > 0.0);

        let mut json = ptr::null_mut();
        assert_eq!(dri_solution_to_json(sol, &mut json), DriStatus::Ok);
        let doc: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(doc["instance"], "TINY_3");
        dri_string_free(json);

        let mut report = ptr::null_mut();
        assert_eq!(dri_solution_report_json(sol, &mut report), DriStatus::Ok);
        let doc: serde_json::Value = serde_json::from_str(CStr::from_ptr(report).to_str().unwrap()).unwrap();
        assert_eq!(doc["q"], 2);
        dri_string_free(report);

        dri_solution_free(sol);
        dri_instance_free(inst);
    }
}

#[test]
fn errors_map_to_codes() {
    let mut inst = ptr::null_mut();
    unsafe {
        assert_eq!(dri_instance_parse(ptr::null(), &mut inst), DriStatus::NullPointer);
        assert!(last_error().contains("text"));

        let bad = CString::new(TINY.replace("45         70", "45         zz")).unwrap();
        assert_eq!(dri_instance_parse(bad.as_ptr(), &mut inst), DriStatus::Parse);
        assert!(inst.is_null());
        assert!(last_error().contains("line 12"));

        let missing = CString::new("/nonexistent/file.txt").unwrap();
        assert_eq!(dri_instance_load(missing.as_ptr(), &mut inst), DriStatus::Io);

        let text = CString::new(TINY).unwrap();
        assert_eq!(dri_instance_parse(text.as_ptr(), &mut inst), DriStatus::Ok);
        let mut sol = ptr::null_mut();
        let config = CString::new(r#"{"alpha": 1.5}"#).unwrap();
        assert_eq!(dri_run(inst, config.as_ptr(), &mut sol), DriStatus::InvalidConfig);
        assert!(last_error().contains("alpha"));
        let config = CString::new(r#"{"no_such_field": 1}"#).unwrap();
        assert_eq!(dri_run(inst, config.as_ptr(), &mut sol), DriStatus::InvalidConfig);
        assert!(sol.is_null());
        assert_eq!(dri_run(ptr::null(), ptr::null(), &mut sol), DriStatus::NullPointer);

        assert!(dri_solution_total_cost(ptr::null()).is_nan());
        assert_eq!(dri_instance_customer_count(ptr::null()), 0);
        dri_solution_free(ptr::null_mut());
        dri_string_free(ptr::null_mut());
        dri_instance_free(inst);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(dri_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
