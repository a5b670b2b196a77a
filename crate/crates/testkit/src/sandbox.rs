//! Runs PCL programs in a child process whose interpreter thread is confined
//! by a seccomp filter. The filter allows memory management, futexes,
//! signal bookkeeping, exit, and `write` on one pre-opened descriptor used to
//! report results. Any other system call (files, sockets, environment
//! reads through the kernel, clocks that leave the vDSO, process creation)
//! kills the child with SIGSYS.
//!
//! A test binary that uses the harness must contain a test that calls
//! [`child_entry`]; the parent re-executes the binary filtered to that test.

use std::process::Command;

use promoai_core::pcl::run_pcl;
use serde::Deserialize;

pub const MODE_ENV: &str = "PROMOAI_SANDBOX_MODE";
const PREFIX: &str = "SANDBOX\t";

#[derive(Debug, Clone, Deserialize)]
pub struct CorpusCase {
    pub name: String,
    pub source: String,
    /// Expected error kind, or `ok`.
    pub kind: String,
}

pub fn load_corpus() -> Vec<CorpusCase> {
    serde_json::from_str(&crate::fixture("sandbox_corpus.json")).expect("corpus is valid JSON")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// The child finished; `(case name, observed kind)` per program.
    Completed(Vec<(String, String)>),
    /// The child was killed by this signal.
    Killed(i32),
    Failed(String),
}

#[cfg(target_arch = "x86_64")]
const AUDIT_ARCH: u32 = 0xc000_003e;
#[cfg(target_arch = "aarch64")]
const AUDIT_ARCH: u32 = 0xc000_00b7;

const BPF_LD_W_ABS: u16 = 0x20;
const BPF_JEQ_K: u16 = 0x15;
const BPF_RET_K: u16 = 0x06;
const RET_KILL_PROCESS: u32 = 0x8000_0000;
const RET_ALLOW: u32 = 0x7fff_0000;

fn stmt(code: u16, k: u32) -> libc::sock_filter {
    libc::sock_filter { code, jt: 0, jf: 0, k }
}

fn jeq(k: u32, jt: u8, jf: u8) -> libc::sock_filter {
    libc::sock_filter { code: BPF_JEQ_K, jt, jf, k }
}

#[cfg(any(target_arch = "x86_64", target_arch = "aarch64"))]
fn install_filter(report_fd: i32) -> Result<(), String> {
    let allowed: Vec<u32> = [
        libc::SYS_brk,
        libc::SYS_mmap,
        libc::SYS_munmap,
        libc::SYS_mremap,
        libc::SYS_mprotect,
        libc::SYS_madvise,
        libc::SYS_futex,
        libc::SYS_rt_sigreturn,
        libc::SYS_rt_sigprocmask,
        libc::SYS_sigaltstack,
        libc::SYS_sched_yield,
        libc::SYS_rseq,
        libc::SYS_exit,
        libc::SYS_exit_group,
    ]
    .iter()
    .map(|&n| n as u32)
    .collect();
    let k = allowed.len();
    let mut prog = vec![
        stmt(BPF_LD_W_ABS, 4),
        jeq(AUDIT_ARCH, 1, 0),
        stmt(BPF_RET_K, RET_KILL_PROCESS),
        stmt(BPF_LD_W_ABS, 0),
        jeq(libc::SYS_write as u32, 0, 4),
        stmt(BPF_LD_W_ABS, 16),
        jeq(report_fd as u32, 0, 1),
        stmt(BPF_RET_K, RET_ALLOW),
        stmt(BPF_RET_K, RET_KILL_PROCESS),
    ];
    for (i, nr) in allowed.iter().enumerate() {
        prog.push(jeq(*nr, (k - i) as u8, 0));
    }
    prog.push(stmt(BPF_RET_K, RET_KILL_PROCESS));
    prog.push(stmt(BPF_RET_K, RET_ALLOW));
    let fprog = libc::sock_fprog { len: prog.len() as u16, filter: prog.as_mut_ptr() };
    // SAFETY: plain prctl/seccomp calls; `fprog` outlives the call.
    unsafe {
        if libc::prctl(libc::PR_SET_NO_NEW_PRIVS, 1, 0, 0, 0) != 0 {
            return Err(format!("PR_SET_NO_NEW_PRIVS: {}", std::io::Error::last_os_error()));
        }
        if libc::syscall(libc::SYS_seccomp, 1, 0, &fprog as *const libc::sock_fprog) != 0 {
            return Err(format!("seccomp: {}", std::io::Error::last_os_error()));
        }
    }
    Ok(())
}

#[cfg(not(any(target_arch = "x86_64", target_arch = "aarch64")))]
fn install_filter(_: i32) -> Result<(), String> {
    Err("the sandbox harness supports x86_64 and aarch64 only".into())
}

fn write_all(fd: i32, mut bytes: &[u8]) {
    while !bytes.is_empty() {
        // SAFETY: writes from a live slice to an open descriptor.
        let n = unsafe { libc::write(fd, bytes.as_ptr().cast(), bytes.len()) };
        if n <= 0 {
            return;
        }
        bytes = &bytes[n as usize..];
    }
}

/// Child side. Does nothing unless the harness started this process.
pub fn child_entry() {
    let Ok(mode) = std::env::var(MODE_ENV) else { return };
    let corpus = load_corpus();
    // SAFETY: duplicating stdout.
    let fd = unsafe { libc::dup(1) };
    assert!(fd >= 0, "dup failed");
    if let Err(e) = install_filter(fd) {
        panic!("cannot install seccomp filter: {e}");
    }

    let mut out = String::from("\n");
    match mode.as_str() {
        "corpus" => {
            for case in &corpus {
                let kind = match run_pcl(&case.source) {
                    Ok(_) => "ok",
                    Err(e) => e.kind.as_str(),
                };
                out.push_str(PREFIX);
                out.push_str(&case.name);
                out.push('\t');
                out.push_str(kind);
                out.push('\n');
            }
        }
        _ => {
            let opened = std::fs::File::open("/etc/hostname").is_ok();
            out.push_str(PREFIX);
            out.push_str(if opened { "control\topened" } else { "control\tfailed" });
            out.push('\n');
        }
    }
    write_all(fd, out.as_bytes());
    // SAFETY: terminates the process without running the test harness.
    unsafe {
        libc::syscall(libc::SYS_exit_group, 0);
    }
}

/// Re-executes the current test binary, running only `child_test`, in the
/// given mode (`corpus` or `control`).
pub fn run_child(child_test: &str, mode: &str) -> Outcome {
    let exe = match std::env::current_exe() {
        Ok(p) => p,
        Err(e) => return Outcome::Failed(e.to_string()),
    };
    let output = Command::new(exe)
        .args([child_test, "--exact", "--nocapture", "--test-threads=1"])
        .env(MODE_ENV, mode)
        // glibc reads /proc/sys/vm/overcommit_memory when it first shrinks a
        // per-thread arena; a single arena trims with brk instead.
        .env("GLIBC_TUNABLES", "glibc.malloc.arena_max=1")
        .env("MALLOC_ARENA_MAX", "1")
        .output();
    let output = match output {
        Ok(o) => o,
        Err(e) => return Outcome::Failed(e.to_string()),
    };
    use std::os::unix::process::ExitStatusExt;
    if let Some(sig) = output.status.signal() {
        return Outcome::Killed(sig);
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    if !output.status.success() {
        return Outcome::Failed(format!(
            "{}\n{}",
            stdout,
            String::from_utf8_lossy(&output.stderr)
        ));
    }
    Outcome::Completed(
        stdout
            .lines()
            .filter_map(|l| l.strip_prefix(PREFIX))
            .filter_map(|l| l.split_once('\t'))
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
    )
}

/// Compares a corpus run against the expected kinds; returns the number of
/// cases checked.
pub fn check_corpus(outcome: &Outcome) -> Result<usize, String> {
    let corpus = load_corpus();
    let Outcome::Completed(results) = outcome else {
        return Err(format!("sandboxed child did not complete: {outcome:?}"));
    };
    if results.len() != corpus.len() {
        return Err(format!("expected {} results, got {}", corpus.len(), results.len()));
    }
    let wrong: Vec<String> = corpus
        .iter()
        .zip(results)
        .filter(|(case, (name, kind))| &case.name != name || &case.kind != kind)
        .map(|(case, (_, kind))| format!("{}: expected {}, got {kind}", case.name, case.kind))
        .collect();
    if wrong.is_empty() {
        Ok(corpus.len())
    } else {
        Err(wrong.join("; "))
    }
}

/// SIGSYS, the signal a seccomp kill delivers.
pub const SIGSYS: i32 = libc::SIGSYS;
