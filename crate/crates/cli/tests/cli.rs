use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use genmap::mesh::{shapes, write_colored_ply};
use genmap::pipeline::{parse_run_log, MatchRecord};
use genmap::TriMesh;
use tempfile::TempDir;

fn genmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genmap"))
        .args(args)
        .env_remove("GENMAP_CACHE_DIR")
        .output()
        .expect("run genmap")
}

fn write_mesh(dir: &Path, name: &str, mesh: &TriMesh) -> PathBuf {
    let p = dir.join(name);
    write_colored_ply(&p, mesh, None).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_mesh_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = genmap(&["landmarks", "/no/such/mesh.off", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/mesh.off"), "{}", stderr(&o));
}

#[test]
fn bad_flags_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let mesh = write_mesh(dir.path(), "a.ply", &shapes::icosphere(2, 1.0));
    let out = dir.path().join("out");
    let o = genmap(&["landmarks", s(&mesh), "--out", s(&out), "--kt", "lots"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kt"));
    let o = genmap(&["landmarks", s(&mesh), "--out", s(&out), "--crossover", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = genmap(&["landmarks", s(&mesh), "--out", s(&out), "--no-such-flag", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn landmarks_on_ellipsoid_include_both_poles() {
    let dir = TempDir::new().unwrap();
    let ellipsoid = shapes::ellipsoid(3, [1.0, 1.0, 1.5]);
    let mesh = write_mesh(dir.path(), "e.ply", &ellipsoid);
    let out = dir.path().join("lm");
    let o = genmap(&["landmarks", s(&mesh), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("landmarks.json")).unwrap()).unwrap();
    let lms = json["landmarks"].as_array().unwrap();
    assert!(!lms.is_empty() && lms.len() <= 35);
    let maxima: Vec<usize> = lms
        .iter()
        .filter(|l| l["category"] == "max")
        .map(|l| l["vertex"].as_u64().unwrap() as usize)
        .collect();
    let z = |v: usize| ellipsoid.vertex(v).z;
    let top = (0..ellipsoid.num_vertices()).max_by(|&a, &b| z(a).total_cmp(&z(b))).unwrap();
    let bottom = (0..ellipsoid.num_vertices()).min_by(|&a, &b| z(a).total_cmp(&z(b))).unwrap();
    assert!(maxima.contains(&top) && maxima.contains(&bottom), "{maxima:?}");
    let ply = std::fs::read_to_string(out.join("landmarks.ply")).unwrap();
    assert!(ply.contains("property uchar red"));
}

#[test]
fn unseedable_pair_fails_with_message() {
    let dir = TempDir::new().unwrap();
    let a = write_mesh(dir.path(), "sphere.ply", &shapes::icosphere(3, 1.0));
    let b = write_mesh(dir.path(), "ellipsoid.ply", &shapes::ellipsoid(3, [1.0, 1.0, 1.2]));
    let out = dir.path().join("run");
    let o = genmap(&["match", s(&a), s(&b), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("cannot seed chromosomes"), "{}", stderr(&o));
    assert!(!out.exists(), "partial outputs left behind");
}

#[test]
fn self_match_end_to_end() {
    let dir = TempDir::new().unwrap();
    let blob = shapes::asymmetric_blob(3);
    let mesh = write_mesh(dir.path(), "blob.ply", &blob);
    let cache = dir.path().join("cache");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_genmap"))
            .args(["match", s(&mesh), s(&mesh), "--out", s(&out), "--seed", "1"])
            .env("GENMAP_CACHE_DIR", &cache)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let first = run("first");
    for f in [
        "match.json",
        "fmap_12.txt",
        "fmap_21.txt",
        "vmap_12.txt",
        "vmap_21.txt",
        "run_log.jsonl",
        "config.txt",
        "landmarks_a.json",
        "landmarks_b.json",
        "transfer_source.ply",
        "transfer_target.ply",
    ] {
        assert!(first.join(f).is_file(), "missing {f}");
    }
    assert!(std::fs::read_dir(&cache).unwrap().count() > 0, "basis cache unused");

    let record = MatchRecord::from_json(&std::fs::read_to_string(first.join("match.json")).unwrap()).unwrap();
    let identity = record.pairs.iter().filter(|p| p.source_vertex == p.target_vertex).count();
    assert!(identity * 10 >= record.pairs.len() * 9, "{identity}/{}", record.pairs.len());

    let second = run("second");
    for f in ["match.json", "run_log.jsonl", "fmap_12.txt", "vmap_21.txt"] {
        assert_eq!(
            std::fs::read(first.join(f)).unwrap(),
            std::fs::read(second.join(f)).unwrap(),
            "{f} differs between runs"
        );
    }

    // outputs feed eval and diversity
    let n = blob.num_vertices();
    let truth = dir.path().join("truth.txt");
    std::fs::write(&truth, (0..n).map(|v| format!("{v} {v}\n")).collect::<String>()).unwrap();
    let curve = dir.path().join("curve.csv");
    let o = genmap(&[
        "eval",
        "--map",
        s(&first.join("vmap_12.txt")),
        "--truth",
        s(&truth),
        "--mesh-b",
        s(&mesh),
        "--out",
        s(&curve),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&curve).unwrap();
    assert_eq!(csv.lines().count(), 101);
    let last: f64 = csv.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last > 0.9, "{last}");

    let matrix = dir.path().join("div.csv");
    let o = genmap(&[
        "diversity",
        "--log",
        s(&first.join("run_log.jsonl")),
        "--mesh-b",
        s(&mesh),
        "--landmarks",
        s(&first.join("landmarks_b.json")),
        "--out",
        s(&matrix),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&matrix).unwrap();
    let log = parse_run_log(&std::fs::read_to_string(first.join("run_log.jsonl")).unwrap()).unwrap();
    let first_pop = log[0].population.as_ref().unwrap().len();
    let blocks: Vec<&str> = text.split("# generation").filter(|b| !b.trim().is_empty()).collect();
    assert_eq!(blocks.len(), 2);
    assert_eq!(blocks[0].lines().count() - 1, first_pop);
}

#[test]
fn eval_with_symmetric_truth() {
    let dir = TempDir::new().unwrap();
    let m = shapes::icosphere(2, 1.0);
    let n = m.num_vertices();
    let mesh = write_mesh(dir.path(), "s.ply", &m);
    // map everything to vertex 0, declare that the symmetric truth
    let map = dir.path().join("map.txt");
    std::fs::write(&map, "0\n".repeat(n)).unwrap();
    let truth = dir.path().join("t.txt");
    std::fs::write(&truth, (0..n).map(|v| format!("{v} {v}\n")).collect::<String>()).unwrap();
    let sym = dir.path().join("sym.txt");
    std::fs::write(&sym, (0..n).map(|v| format!("{v} 0\n")).collect::<String>()).unwrap();
    let out = dir.path().join("c.csv");
    let o = genmap(&[
        "eval", "--map", s(&map), "--truth", s(&truth), "--symmetric", s(&sym), "--mesh-b", s(&mesh), "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "0,1");

    std::fs::write(&truth, format!("0 {n}\n")).unwrap();
    let o = genmap(&["eval", "--map", s(&map), "--truth", s(&truth), "--mesh-b", s(&mesh), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}
