use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use redescribe::dataio::{generate_synthetic, SyntheticSpec};
use redescribe_ffi::*;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/table1").join(name)
}

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = rd_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn load(path: &Path) -> *mut RdConfig {
    let mut cfg = ptr::null_mut();
    let st = unsafe { rd_config_load(cstr(path).as_ptr(), &mut cfg) };
    assert_eq!(st, RdStatus::Ok, "{}", last_error());
    cfg
}

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    rd_string_free(p);
    s
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(rd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn missing_config_is_an_io_error() {
    let mut cfg = ptr::null_mut();
    let path = CString::new("/nonexistent/config.toml").unwrap();
    let st = unsafe { rd_config_load(path.as_ptr(), &mut cfg) };
    assert_eq!(st, RdStatus::Io);
    assert!(cfg.is_null());
    assert!(last_error().contains("/nonexistent/config.toml"));
}

#[test]
fn null_arguments_are_rejected() {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { rd_config_load(ptr::null(), &mut cfg) }, RdStatus::InvalidArgument);
    let mut j = 0.0;
    assert_eq!(unsafe { rd_set_jaccard(ptr::null(), 0, &mut j) }, RdStatus::InvalidArgument);
    assert_eq!(unsafe { rd_set_len(ptr::null()) }, 0);
    unsafe {
        rd_set_free(ptr::null_mut());
        rd_config_free(ptr::null_mut());
        rd_string_free(ptr::null_mut());
    }
}

#[test]
fn country_fixture_holds_exactly() {
    let cfg = load(&fixture("config.toml"));
    unsafe {
        assert_eq!(rd_config_n_views(cfg), 4);
        let mut set = ptr::null_mut();
        let st = rd_set_read(cfg, cstr(&fixture("redescription.toml")).as_ptr(), &mut set);
        assert_eq!(st, RdStatus::Ok, "{}", last_error());
        assert_eq!(rd_set_len(set), 1);
        let mut j = 0.0;
        let mut n = 0;
        assert_eq!(rd_set_jaccard(set, 0, &mut j), RdStatus::Ok);
        assert_eq!(rd_set_support_size(set, 0, &mut n), RdStatus::Ok);
        assert_eq!((j, n), (1.0, 5));
        assert_eq!(rd_set_jaccard(set, 1, &mut j), RdStatus::InvalidArgument);

        let mut q = ptr::null_mut();
        assert_eq!(rd_set_query(set, 0, 2, &mut q), RdStatus::Ok);
        assert!(take_string(q).contains("ElectricityTotNetCapPPSol"));

        let mut sc = RdScores::default();
        assert_eq!(rd_set_scores(set, 0, 1, &mut sc), RdStatus::Ok);
        assert!(sc.has_plain);
        assert_eq!(sc.size, 1);
        assert_eq!(sc.underlined.j_sc, 0.0);
        assert_eq!(sc.entity_coverage, 1.0);

        let mut text = ptr::null_mut();
        assert_eq!(rd_set_to_toml(set, &mut text), RdStatus::Ok);
        assert!(take_string(text).contains("E/I_Cork_Wood"));
        rd_set_free(set);
        rd_config_free(cfg);
    }
}

#[test]
fn unknown_attribute_is_a_query_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.toml");
    std::fs::write(&file, "[[redescription]]\nqueries.trade = \"0 <= NOPE <= 1\"\n").unwrap();
    let cfg = load(&fixture("config.toml"));
    let mut set = ptr::null_mut();
    let st = unsafe { rd_set_read(cfg, cstr(&file).as_ptr(), &mut set) };
    assert_eq!(st, RdStatus::Query);
    assert!(last_error().contains("NOPE"));
    unsafe { rd_config_free(cfg) };
}

fn synthetic_config(dir: &Path) -> PathBuf {
    let spec = SyntheticSpec::blocks(80, 2, 4, 2, 20, 0.0, 3);
    let data = generate_synthetic(&spec).unwrap();
    data.dataset.save(dir).unwrap();
    let config = dir.join("config.toml");
    std::fs::write(
        &config,
        "[[dataset.views]]\nname = \"v0\"\npath = \"v0.csv\"\n\n[[dataset.views]]\nname = \"v1\"\npath = \"v1.csv\"\n\n[settings]\nmax_iter = 3\n",
    )
    .unwrap();
    config
}

#[test]
fn mining_is_reproducible_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(&synthetic_config(dir.path()));
    unsafe {
        assert_eq!(rd_config_set_seed(cfg, 9), RdStatus::Ok);
        let mine = || {
            let mut set = ptr::null_mut();
            assert_eq!(rd_mine(cfg, 0, 0, &mut set), RdStatus::Ok, "{}", last_error());
            let mut text = ptr::null_mut();
            assert_eq!(rd_set_to_toml(set, &mut text), RdStatus::Ok);
            (set, take_string(text))
        };
        let (set, a) = mine();
        let (other, b) = mine();
        assert_eq!(a, b);
        assert!(rd_set_len(set) > 0);
        rd_set_free(other);

        let file = dir.path().join("set.toml");
        std::fs::write(&file, &a).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(rd_set_read(cfg, cstr(&file).as_ptr(), &mut back), RdStatus::Ok);
        assert_eq!(rd_set_len(back), rd_set_len(set));
        let (mut s1, mut s2) = (RdScores::default(), RdScores::default());
        rd_set_scores(set, 0, 0, &mut s1);
        rd_set_scores(back, 0, 0, &mut s2);
        assert_eq!(s1, s2);

        let mut bad = ptr::null_mut();
        assert_eq!(rd_mine(cfg, 0, 5, &mut bad), RdStatus::InvalidArgument);
        rd_set_free(back);
        rd_set_free(set);
        rd_config_free(cfg);
    }
}

#[test]
fn naive_runs_through_the_interface() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(&synthetic_config(dir.path()));
    let mut set = ptr::null_mut();
    let st = unsafe { rd_naive(cfg, 0, &mut set) };
    assert!(matches!(st, RdStatus::Ok | RdStatus::Empty));
    assert!(!set.is_null());
    unsafe {
        assert_eq!(st == RdStatus::Empty, rd_set_len(set) == 0);
        rd_set_free(set);
        rd_config_free(cfg);
    }
}

#[test]
fn header_declares_the_interface() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/redescribe.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["rd_config_load", "rd_mine", "rd_set_free", "rd_last_error", "RD_STATUS_OK", "typedef struct RdSet RdSet"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    // compile a small C client against the header when a compiler is present
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(
        &src,
        "#include \"redescribe.h\"\nint main(void) { RdConfig *c = 0; RdStatus s = rd_config_load(\"x\", &c); rd_config_free(c); return s == RD_STATUS_OK; }\n",
    )
    .unwrap();
    let out = std::process::Command::new(cc)
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
        .arg(header.parent().unwrap())
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
