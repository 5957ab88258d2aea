use std::ffi::{c_char, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use tactile_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { tactile_last_error(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8(buf).unwrap()
}

#[test]
fn kinematics_round_trip() {
    let q = [0.2, 0.6, 0.9];
    let mut p = [0.0; 3];
    let mut back = [0.0; 3];
    unsafe {
        assert_eq!(
            tactile_forward_kinematics(q.as_ptr(), TactileBackend::Hybrid, p.as_mut_ptr()),
            TactileStatus::Ok
        );
        assert_eq!(
            tactile_inverse_kinematics(p.as_ptr(), TactileBackend::Hybrid, back.as_mut_ptr()),
            TactileStatus::Ok
        );
    }
    for i in 0..3 {
        assert!((q[i] - back[i]).abs() < 5e-3);
    }
}

#[test]
fn null_pointers_are_reported() {
    let mut out = [0.0; 3];
    unsafe {
        assert_eq!(
            tactile_forward_kinematics(ptr::null(), TactileBackend::Oracle, out.as_mut_ptr()),
            TactileStatus::NullPointer
        );
        assert_eq!(
            tactile_channel_new(ptr::null(), ptr::null_mut()),
            TactileStatus::NullPointer
        );
        assert_eq!(
            tactile_trace_len(ptr::null(), ptr::null_mut()),
            TactileStatus::NullPointer
        );
        tactile_channel_free(ptr::null_mut());
        tactile_trace_free(ptr::null_mut());
    }
    assert!(last_error().contains("null"));
}

#[test]
fn fixed_point_conversion() {
    let mut raw = 0i64;
    unsafe {
        assert_eq!(
            tactile_float_to_fixed(1.0, 16, 13, &mut raw),
            TactileStatus::Ok
        );
        assert_eq!(raw, 8192);
        assert_eq!(
            tactile_float_to_fixed(100.0, 16, 13, &mut raw),
            TactileStatus::Ok
        );
        assert_eq!(raw, 32767);
        assert_eq!(
            tactile_float_to_fixed(1.0, 16, 16, &mut raw),
            TactileStatus::InvalidArgument
        );
    }
}

#[test]
fn channel_rejects_bad_config() {
    let cfg = TactileChannelConfig {
        sigma2: [-1.0, 0.0, 0.0],
        delay_min: 0,
        delay_max: 0,
        seed: 0,
        has_initial_hold: 0,
        initial_hold: [0.0; 3],
    };
    let mut ch = ptr::null_mut();
    unsafe {
        assert_eq!(
            tactile_channel_new(&cfg, &mut ch),
            TactileStatus::InvalidArgument
        );
    }
    assert!(ch.is_null());
    assert!(last_error().contains("sigma2"));
}

#[test]
fn channel_noise_is_seeded() {
    let cfg = TactileChannelConfig {
        sigma2: [1e-4; 3],
        delay_min: 1,
        delay_max: 3,
        seed: 17,
        has_initial_hold: 0,
        initial_hold: [0.0; 3],
    };
    let run = || {
        let mut ch = ptr::null_mut();
        let mut outs = Vec::new();
        unsafe {
            assert_eq!(tactile_channel_new(&cfg, &mut ch), TactileStatus::Ok);
            for n in 0..100u64 {
                let input = [n as f64; 3];
                let mut out = [0.0; 3];
                assert_eq!(
                    tactile_channel_step(ch, input.as_ptr(), n, out.as_mut_ptr()),
                    TactileStatus::Ok
                );
                outs.push(out);
            }
            tactile_channel_free(ch);
        }
        outs
    };
    assert_eq!(run(), run());
}

#[test]
fn simulation_trace_access() {
    let toml = CString::new("version = 1\nseed = 2\n").unwrap();
    let mut t = ptr::null_mut();
    let mut len = 0usize;
    let mut l = [0.0; 3];
    let mut c = [0.0; 3];
    unsafe {
        assert_eq!(
            tactile_simulation_run(toml.as_ptr(), TactileBackend::Oracle, &mut t),
            TactileStatus::Ok
        );
        assert_eq!(tactile_trace_len(t, &mut len), TactileStatus::Ok);
        assert_eq!(len, 1200);
        for n in [0, 600, 1199] {
            assert_eq!(
                tactile_trace_get(t, n, TactileSignal::L, l.as_mut_ptr()),
                TactileStatus::Ok
            );
            assert_eq!(
                tactile_trace_get(t, n, TactileSignal::C, c.as_mut_ptr()),
                TactileStatus::Ok
            );
            for i in 0..3 {
                assert!((l[i] - c[i]).abs() < 1e-9);
            }
        }
        tactile_trace_free(t);
    }
    let bad = CString::new("version = 1\n").unwrap();
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(
            tactile_simulation_run(bad.as_ptr(), TactileBackend::Hybrid, &mut t),
            TactileStatus::InvalidArgument
        );
    }
    assert!(last_error().contains("seed"));
}

#[test]
fn budget_helpers() {
    let mut s = 0u64;
    unsafe {
        assert_eq!(tactile_speedup(403e-9, 1e-3, &mut s), TactileStatus::Ok);
    }
    assert_eq!(s, 93);
    assert_eq!(tactile_hardware_time_limit(10e-3), 375e-6);
    unsafe {
        assert_eq!(
            tactile_speedup(0.0, 1e-3, &mut s),
            TactileStatus::InvalidArgument
        );
    }
}

/// Compile a C program against the generated header and the static
/// library, then run it.
#[test]
fn c_program_links_against_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libtactile_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let out_dir = tempfile_dir();
    let bin = out_dir.join("smoke");
    let status = Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .arg("-std=c99")
        .arg("-D_DEFAULT_SOURCE")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tactile-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
