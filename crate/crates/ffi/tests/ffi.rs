use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use dioph_lab_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let st = unsafe { dl_last_error(buf.as_mut_ptr(), buf.len(), ptr::null_mut()) };
    assert_eq!(st, DlStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(dl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn root_at_half() {
    let mut g = 0.0;
    assert_eq!(unsafe { dl_root_gk(1, 0.5, &mut g) }, DlStatus::Ok);
    assert!((g - (1.0 + 0.5f64.sqrt())).abs() < 1e-12);
    assert_eq!(unsafe { dl_root_gk(1, 0.2, &mut g) }, DlStatus::Domain);
    assert!(last_error().contains("lambda"));
    assert_eq!(unsafe { dl_root_gk(1, 0.5, ptr::null_mut()) }, DlStatus::NullArgument);
}

#[test]
fn synthesis_handle_lifecycle() {
    let mut h: *mut DlSynthesis = ptr::null_mut();
    assert_eq!(unsafe { dl_synthesize(0.5, 1, 12, 1_000_000, &mut h) }, DlStatus::Ok);
    assert!(!h.is_null());
    assert_eq!(unsafe { dl_synthesis_len(h) }, 12);
    assert_eq!(unsafe { dl_synthesis_exact_ok(h) }, 1);

    let mut need = 0usize;
    let st = unsafe { dl_synthesis_coordinate(h, 0, 0, ptr::null_mut(), 0, &mut need) };
    assert_eq!(st, DlStatus::BufferTooSmall);
    let mut buf = vec![0 as c_char; need];
    assert_eq!(unsafe { dl_synthesis_coordinate(h, 0, 0, buf.as_mut_ptr(), buf.len(), ptr::null_mut()) }, DlStatus::Ok);
    let q1 = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().parse::<u64>().unwrap();
    assert!(q1 >= 1_000_000);
    assert_eq!(unsafe { dl_synthesis_coordinate(h, 12, 0, buf.as_mut_ptr(), buf.len(), ptr::null_mut()) }, DlStatus::IndexOutOfRange);
    assert_eq!(unsafe { dl_synthesis_coordinate(h, 0, 4, buf.as_mut_ptr(), buf.len(), ptr::null_mut()) }, DlStatus::IndexOutOfRange);

    let mut word = vec![0 as c_char; 64];
    assert_eq!(unsafe { dl_synthesis_word(h, word.as_mut_ptr(), word.len(), ptr::null_mut()) }, DlStatus::Ok);
    let word = unsafe { CStr::from_ptr(word.as_ptr()) }.to_str().unwrap().to_string();
    assert!(word.contains("BABA"), "{word}");

    let mut matched = 0usize;
    assert_eq!(unsafe { dl_synthesis_round_trip(h, 10, &mut matched) }, DlStatus::Ok);
    assert_eq!(matched, 10);
    unsafe { dl_synthesis_free(h) };
    unsafe { dl_synthesis_free(ptr::null_mut()) };
}

#[test]
fn synthesis_rejects_bad_lambda() {
    let mut h: *mut DlSynthesis = ptr::null_mut();
    assert_eq!(unsafe { dl_synthesize(0.2, 1, 10, 1_000_000, &mut h) }, DlStatus::Domain);
    assert!(h.is_null());
    assert_eq!(unsafe { dl_synthesis_len(h) }, 0);
}

#[test]
fn analyze_returns_json() {
    let target = CString::new("1/7,3/7,5/14").unwrap();
    let qmax = CString::new("1000").unwrap();
    let mut out: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { dl_analyze_json(target.as_ptr(), qmax.as_ptr(), &mut out) }, DlStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
    unsafe { dl_string_free(out) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["terminated"], true);
    assert_eq!(v["records"].as_array().unwrap().last().unwrap()["q"], "14");

    let bad = CString::new("1,2,x").unwrap();
    assert_eq!(unsafe { dl_analyze_json(bad.as_ptr(), qmax.as_ptr(), &mut out) }, DlStatus::Domain);
    assert!(out.is_null());
    assert_eq!(unsafe { dl_analyze_json(ptr::null(), qmax.as_ptr(), &mut out) }, DlStatus::NullArgument);
}

#[test]
fn header_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/dioph_lab.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["dl_synthesize", "dl_synthesis_free", "dl_last_error", "DL_STATUS_BUFFER_TOO_SMALL"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(cc.status.success());
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"dioph_lab.h\"\nint main(void) { DlSynthesis *h = 0; return dl_synthesize(0.5, 1, 10, 1000000, &h) == DL_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
