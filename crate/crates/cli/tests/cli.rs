use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gd_core::wilson::almost_commuting;
use gd_core::{DiffOperator, DiffPolynomial};
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn gdh(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdh"))
        .args(args)
        .env("GDH_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

struct Dirs {
    cache: TempDir,
    out: TempDir,
}

fn dirs() -> Dirs {
    Dirs {
        cache: tempfile::tempdir().unwrap(),
        out: tempfile::tempdir().unwrap(),
    }
}

impl Dirs {
    fn out_str(&self) -> &str {
        self.out.path().to_str().unwrap()
    }

    fn run(&self, args: &[&str]) -> Output {
        gdh(self.cache.path(), args)
    }
}

#[test]
fn basis_latex_for_n3_m2() {
    let d = dirs();
    let o = d.run(&["basis", "--n", "3", "--m", "2", "--format", "latex", "--out", d.out_str()]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(read(d.out.path(), "(3_2)[P].tex"), "\\partial^{2} + \\frac{2}{3} u_2\n");
    assert_eq!(
        read(d.out.path(), "(3_2)[H_0].tex"),
        "-\\frac{2}{3} u_2''' + u_3'' - \\frac{2}{3} u_2 u_2'\n"
    );
    assert_eq!(read(d.out.path(), "(3_2)[H_1].tex"), "-u_2'' + 2 u_3'\n");
    assert!(!d.out.path().join("(3_2)[H_2].tex").exists());
}

#[test]
fn divisible_order_has_zero_h() {
    let d = dirs();
    let o = d.run(&["--quiet", "basis", "--n", "3", "--m", "3", "--out", d.out_str()]);
    assert!(o.status.success());
    assert!(stdout(&o).is_empty());
    for i in 0..2 {
        let h: DiffPolynomial = serde_json::from_str(&read(d.out.path(), &format!("(3_3)[H_{i}].json"))).unwrap();
        assert!(h.is_zero());
    }
    let p: DiffOperator = serde_json::from_str(&read(d.out.path(), "(3_3)[P].json")).unwrap();
    assert_eq!(p, almost_commuting(3, 3).unwrap().p);
}

#[test]
fn large_basis_sizes() {
    let d = dirs();
    let o = d.run(&["basis", "--n", "7", "--m", "13", "--format", "json", "--out", d.out_str()]);
    assert!(o.status.success(), "{o:?}");
    let p: DiffOperator = serde_json::from_str(&read(d.out.path(), "(7_13)[P].json")).unwrap();
    assert_eq!(p.monomial_count(), 830);
    let counts: Vec<usize> = (0..6)
        .map(|i| {
            let h: DiffPolynomial = serde_json::from_str(&read(d.out.path(), &format!("(7_13)[H_{i}].json"))).unwrap();
            h.len()
        })
        .collect();
    assert_eq!(counts.iter().min(), Some(&744));
    assert_eq!(counts.iter().max(), Some(&5279));
}

#[test]
fn hierarchy_files() {
    let d = dirs();
    let o = d.run(&["hierarchy", "--n", "3", "--m", "2", "--format", "text", "--out", d.out_str()]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(read(d.out.path(), "(3_2)[flow_2].txt"), "u2_t = -u2'' + 2*u3'\n");
    assert_eq!(read(d.out.path(), "(3_2)[flow_3].txt"), "u3_t = -2/3*u2''' + u3'' - 2/3*u2*u2'\n");

    let o = d.run(&["hierarchy", "--n", "3", "--m", "2", "--stationary", "--format", "text", "--out", d.out_str()]);
    assert!(o.status.success());
    assert_eq!(read(d.out.path(), "(3_2)[stationary_2].txt"), "-u2'' + 2*u3' = 0\n");

    let o = d.run(&["hierarchy", "--n", "3", "--m", "2", "--with-constants", "--format", "text", "--out", d.out_str()]);
    assert!(o.status.success());
    assert!(read(d.out.path(), "(3_2)[flow_3].txt").contains("c2_1"));

    let five = tempfile::tempdir().unwrap();
    let o = d.run(&["--quiet", "hierarchy", "--n", "5", "--m", "9", "--out", five.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_dir(five.path()).unwrap().count(), 4);
    for i in 2..=5 {
        assert!(five.path().join(format!("(5_9)[flow_{i}].json")).exists());
    }
}

#[test]
fn verify_reports_every_order() {
    let d = dirs();
    for (n, max_m) in [("3", "8"), ("2", "9"), ("5", "7")] {
        let o = d.run(&["verify", "--n", n, "--max-m", max_m]);
        assert!(o.status.success(), "{o:?}");
        let text = stdout(&o);
        assert_eq!(text.matches(" PASS (").count(), max_m.parse::<usize>().unwrap(), "{text}");
        assert!(text.contains(&format!("{max_m}/{max_m} PASS")));
    }
}

#[test]
fn bench_skips_multiples_of_n() {
    let d = dirs();
    let o = d.run(&["bench", "--n", "3", "--max-m", "14"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,m,seconds,monomials"));
    let ms: Vec<usize> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(ms, vec![2, 4, 5, 7, 8, 10, 11, 13, 14]);

    let csv = d.out.path().join("bench.csv");
    let o = d.run(&["--quiet", "bench", "--n", "2", "--max-m", "5", "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().starts_with("2,3,"));
}

#[test]
fn kdv_output() {
    let d = dirs();
    let o = d.run(&["kdv", "--terms", "2", "--compare"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("kdv_0 = u2'\n"), "{text}");
    assert!(text.contains("kdv_1 = -1/4*u2''' + 3/2*u2*u2'\n") || text.contains("kdv_1 = 3/2*u2*u2' - 1/4*u2'''\n"), "{text}");
    assert!(text.contains("kdv_0 = 1 * H_(1,0)"), "{text}");
}

#[test]
fn exit_codes() {
    let d = dirs();
    assert_eq!(d.run(&[]).status.code(), Some(1));
    assert_eq!(d.run(&["basis", "--n", "3"]).status.code(), Some(1));
    assert_eq!(d.run(&["basis", "--n", "1", "--m", "2"]).status.code(), Some(1));
    assert_eq!(d.run(&["basis", "--n", "3", "--m", "2", "--format", "pdf"]).status.code(), Some(1));
    assert_eq!(d.run(&["--help"]).status.code(), Some(0));
    assert_eq!(d.run(&["--version"]).status.code(), Some(0));

    let blocker = d.out.path().join("not-a-dir");
    fs::write(&blocker, "x").unwrap();
    let o = d.run(&["basis", "--n", "3", "--m", "2", "--out", blocker.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let d = dirs();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for out in [&a, &b] {
        let o = d.run(&["basis", "--n", "4", "--m", "7", "--out", out.path().to_str().unwrap()]);
        assert!(o.status.success());
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 4);
    for name in names {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
    }
    assert!(d.cache.path().join("v1").join("(4_7).out").exists());
}

fn seed_entry(cache: &Path, n: usize, m: usize, payload: &str) {
    let dir = cache.join("v1");
    fs::create_dir_all(&dir).unwrap();
    let checksum = hex::encode(Sha256::digest(payload.as_bytes()));
    let entry = serde_json::json!({
        "format_version": 1,
        "n": n,
        "m": m,
        "checksum": checksum,
        "payload": payload,
    });
    fs::write(dir.join(format!("({n}_{m}).out")), entry.to_string()).unwrap();
}

#[test]
fn cache_hit_skips_computation() {
    let d = dirs();
    let mut fake = almost_commuting(3, 2).unwrap();
    fake.h[0] = "u7".parse().unwrap();
    seed_entry(d.cache.path(), 3, 2, &serde_json::to_string(&fake).unwrap());
    let o = d.run(&["basis", "--n", "3", "--m", "2", "--format", "text", "--out", d.out_str()]);
    assert!(o.status.success());
    assert_eq!(read(d.out.path(), "(3_2)[H_0].txt"), "u7\n");
}

#[test]
fn corrupt_cache_is_recomputed() {
    let d = dirs();
    let real = almost_commuting(3, 2).unwrap();
    let mut fake = real.clone();
    fake.h[0] = "u7".parse().unwrap();
    seed_entry(d.cache.path(), 3, 2, &serde_json::to_string(&fake).unwrap());
    // edit the payload but keep the old checksum
    let path = d.cache.path().join("v1").join("(3_2).out");
    let mut entry: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let payload = entry["payload"].as_str().unwrap().replace("[\"u\",7,", "[\"u\",6,");
    assert_ne!(payload, entry["payload"].as_str().unwrap());
    entry["payload"] = payload.into();
    fs::write(&path, entry.to_string()).unwrap();

    let o = d.run(&["basis", "--n", "3", "--m", "2", "--format", "text", "--out", d.out_str()]);
    assert!(o.status.success());
    assert_eq!(read(d.out.path(), "(3_2)[H_0].txt"), format!("{}\n", real.h[0]));
}

#[test]
fn cache_list_and_clear() {
    let d = dirs();
    let o = d.run(&["cache", "list"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("empty"));
    d.run(&["--quiet", "basis", "--n", "3", "--m", "4", "--out", d.out_str()]);
    let o = d.run(&["cache", "list"]);
    assert!(stdout(&o).contains("(3_4)"), "{}", stdout(&o));
    let o = d.run(&["cache", "clear"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("removed 1"));
    assert!(stdout(&d.run(&["cache", "list"])).contains("empty"));
}
