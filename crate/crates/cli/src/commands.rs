use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use genmap::descriptors::{Category, LandmarkJson};
use genmap::eval::{self, ErrorCurve, GroundTruth};
use genmap::fmap::VertexMap;
use genmap::mesh::{load_mesh, write_colored_ply, GeodesicGraph, TriMesh};
use genmap::pipeline::{self, MatchOutcome, PreparedShape};
use genmap::{Error, RunConfig};

use crate::config_args::ConfigArgs;

const GRAY: [u8; 3] = [200, 200, 200];

/// 2 for usage, input and output problems, 1 for failures of the method.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<std::io::Error>().is_some() {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        Some(
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::UnsupportedFormat(..)
            | Error::NonTriangleFace { .. }
            | Error::VertexOutOfRange { .. }
            | Error::InvalidVertex { .. }
            | Error::Config(..)
            | Error::Malformed { .. },
        ) => 2,
        _ => 1,
    }
}

fn category_color(c: Category) -> [u8; 3] {
    match c {
        Category::Max => [0, 0, 255],
        Category::Min => [255, 0, 0],
        Category::Center => [0, 200, 0],
    }
}

fn landmark_colors(n: usize, prepared: &PreparedShape) -> Vec<[u8; 3]> {
    let mut colors = vec![GRAY; n];
    for l in &prepared.landmarks.landmarks {
        colors[l.vertex] = category_color(l.category);
    }
    colors
}

/// Blue to red over `[lo, hi]`.
fn ramp(values: &[f64], lo: f64, hi: f64) -> Vec<[u8; 3]> {
    let span = if hi > lo { hi - lo } else { 1.0 };
    values
        .iter()
        .map(|&v| {
            let t = ((v - lo) / span).clamp(0.0, 1.0);
            [(255.0 * t).round() as u8, 64, (255.0 * (1.0 - t)).round() as u8]
        })
        .collect()
}

fn load(path: &Path) -> Result<TriMesh> {
    Ok(load_mesh(path)?)
}

fn create_dir(dir: &Path) -> Result<bool> {
    if dir.is_dir() {
        return Ok(false);
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(true)
}

/// Files written into an output directory, removed again unless committed.
struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        Ok(Self {
            created_dir: create_dir(dir)?,
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, contents).map_err(|e| Error::io(&p, e))?;
        Ok(())
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

fn landmarks_json(p: &PreparedShape) -> String {
    serde_json::to_string_pretty(&p.landmarks.to_json()).expect("landmarks serialize") + "\n"
}

pub fn landmarks(mesh: &Path, out: &Path, config: &ConfigArgs, cache: Option<&Path>) -> Result<()> {
    let cfg = config.resolve()?;
    let m = load(mesh)?;
    let prepared = pipeline::prepare_shape(&m, &cfg, cache)?;
    let mut outputs = Outputs::new(out)?;
    outputs.text("landmarks.json", &landmarks_json(&prepared))?;
    let ply = outputs.path("landmarks.ply");
    let colors = landmark_colors(m.num_vertices(), &prepared);
    write_colored_ply(&ply, &prepared.shape.mesh, Some(&colors))?;
    outputs.commit();
    let count = |c| prepared.landmarks.landmarks.iter().filter(|l| l.category == c).count();
    println!(
        "{} landmarks ({} max, {} min, {} centers)",
        prepared.landmarks.len(),
        count(Category::Max),
        count(Category::Min),
        count(Category::Center)
    );
    Ok(())
}

/// Smooth function on the target (its first coordinate) and its pull-back
/// to the source through the refined map.
fn write_transfer(outputs: &mut Outputs, a: &PreparedShape, b: &PreparedShape, run: &MatchOutcome) -> Result<()> {
    let target: Vec<f64> = b.shape.mesh.vertices().iter().map(|p| p.x).collect();
    let coeffs = b.shape.basis_s.project(&target)?;
    let pulled = &run.maps.c12.matrix * coeffs;
    let source = a.shape.basis_t.reconstruct(pulled.as_slice())?;
    let lo = target.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = target.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p = outputs.path("transfer_target.ply");
    write_colored_ply(&p, &b.shape.mesh, Some(&ramp(&target, lo, hi)))?;
    let p = outputs.path("transfer_source.ply");
    write_colored_ply(&p, &a.shape.mesh, Some(&ramp(&source, lo, hi)))?;
    Ok(())
}

pub fn run_match(
    mesh_a: Option<PathBuf>,
    mesh_b: Option<PathBuf>,
    out: &Path,
    config: &ConfigArgs,
    cache: Option<&Path>,
) -> Result<()> {
    let mut cfg = config.resolve()?;
    if mesh_a.is_some() {
        cfg.mesh_a = mesh_a;
    }
    if mesh_b.is_some() {
        cfg.mesh_b = mesh_b;
    }
    let path_a = cfg.mesh_a.clone().ok_or_else(|| Error::Config("no source mesh given".into()))?;
    let path_b = cfg.mesh_b.clone().ok_or_else(|| Error::Config("no target mesh given".into()))?;
    let (ma, mb) = (load(&path_a)?, load(&path_b)?);

    let mut outputs = Outputs::new(out)?;
    outputs.text("config.txt", &cfg.to_text())?;
    let a = pipeline::prepare_shape(&ma, &cfg, cache).with_context(|| format!("preparing {}", path_a.display()))?;
    let b = pipeline::prepare_shape(&mb, &cfg, cache).with_context(|| format!("preparing {}", path_b.display()))?;
    outputs.text("landmarks_a.json", &landmarks_json(&a))?;
    outputs.text("landmarks_b.json", &landmarks_json(&b))?;
    let run = pipeline::run_match(&a, &b, &cfg)?;

    outputs.text("match.json", &run.record.to_json())?;
    outputs.text("run_log.jsonl", &run.run_log())?;
    outputs.text("fmap_12.txt", &run.maps.c12.to_text())?;
    outputs.text("fmap_21.txt", &run.maps.c21.to_text())?;
    outputs.text("vmap_12.txt", &run.maps.p12.to_text())?;
    outputs.text("vmap_21.txt", &run.maps.p21.to_text())?;
    write_transfer(&mut outputs, &a, &b, &run)?;
    outputs.commit();

    println!(
        "matched {} landmark pairs, E_fit = {:.6e}, {} generations{}",
        run.record.pairs.len(),
        run.record.fitness.e_fit,
        run.record.generations,
        if run.record.converged { " (converged)" } else { "" }
    );
    Ok(())
}

pub fn eval(map: &Path, truth: &Path, symmetric: Option<&Path>, mesh_b: &Path, out: &Path) -> Result<()> {
    let map = VertexMap::read(map)?;
    let truth = GroundTruth::read(truth)?;
    let symmetric = symmetric.map(GroundTruth::read).transpose()?;
    let mesh = load(mesh_b)?;
    let errors = eval::correspondence_errors(&map, &truth, symmetric.as_ref(), &mesh)?;
    let curve = ErrorCurve::from_errors(&errors, eval::CURVE_MAX_THRESHOLD, eval::CURVE_SAMPLES);
    fs::write(out, curve.to_csv()).map_err(|e| Error::io(out, e))?;
    let mean = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
    println!("{} correspondences, mean error {mean:.6}", errors.len());
    Ok(())
}

fn landmark_distances(mesh: &TriMesh, vertices: &[usize]) -> Result<Vec<Vec<f64>>> {
    let graph = GeodesicGraph::new(mesh);
    let mut d: Vec<Vec<f64>> = Vec::with_capacity(vertices.len());
    for &v in vertices {
        if v >= mesh.num_vertices() {
            bail!(Error::InvalidVertex {
                index: v,
                count: mesh.num_vertices()
            });
        }
        let field = graph.distances_from(v)?.distances;
        d.push(vertices.iter().map(|&u| field[u]).collect());
    }
    // symmetric by construction
    for i in 0..d.len() {
        for j in 0..i {
            d[i][j] = d[j][i];
        }
    }
    Ok(d)
}

pub fn diversity(
    log: &Path,
    landmarks: Option<&Path>,
    generations: &[usize],
    out: &Path,
    config: &ConfigArgs,
    cache: Option<&Path>,
) -> Result<()> {
    let text = fs::read_to_string(log).map_err(|e| Error::io(log, e))?;
    let records = pipeline::parse_run_log(&text)?;
    let logged: Vec<usize> = records.iter().filter(|r| r.population.is_some()).map(|r| r.generation).collect();
    let wanted: Vec<usize> = if generations.is_empty() {
        let (first, last) = (logged.first(), logged.last());
        let mut w: Vec<usize> = first.into_iter().chain(last).copied().collect();
        w.dedup();
        w
    } else {
        generations.to_vec()
    };
    if wanted.is_empty() {
        bail!(Error::Malformed {
            what: "run log",
            message: "no generation carries a population".into()
        });
    }

    let cfg = config.resolve()?;
    let mesh_b = cfg.mesh_b.clone().ok_or_else(|| Error::Config("no target mesh given".into()))?;
    let raw = load(&mesh_b)?;
    let mesh = if cfg.normalize { raw.normalize_area()? } else { raw };
    let vertices: Vec<usize> = match landmarks {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let json: LandmarkJson = serde_json::from_str(&text).map_err(|e| Error::Malformed {
                what: "landmarks",
                message: e.to_string(),
            })?;
            json.landmarks.iter().map(|l| l.vertex).collect()
        }
        None => pipeline::prepare_shape(&mesh, &RunConfig { normalize: false, ..cfg }, cache)?
            .landmarks
            .landmarks
            .iter()
            .map(|l| l.vertex)
            .collect(),
    };
    let distances = landmark_distances(&mesh, &vertices)?;
    let diameter = distances.iter().flatten().copied().fold(0.0, f64::max);
    if !(diameter > 0.0) {
        bail!("target landmarks have zero diameter");
    }

    let mut csv = String::new();
    for g in wanted {
        let record = records
            .iter()
            .find(|r| r.generation == g)
            .ok_or_else(|| anyhow!("generation {g} is not in the log"))?;
        let pop = record
            .population
            .as_ref()
            .ok_or_else(|| anyhow!("generation {g} has no logged population"))?;
        if let Some(c) = pop.iter().flat_map(|c| c.genes.iter().flatten()).find(|&&t| t >= vertices.len()) {
            bail!(Error::Malformed {
                what: "run log",
                message: format!("target landmark {c} out of range for {} landmarks", vertices.len())
            });
        }
        let matrix = eval::distance_matrix(pop, &distances, diameter);
        println!(
            "generation {g}: {} chromosomes, mean distance {:.6}",
            pop.len(),
            eval::mean_pairwise_distance(&matrix)
        );
        csv.push_str(&format!("# generation {g}\n"));
        csv.push_str(&eval::matrix_to_csv(&matrix));
    }
    fs::write(out, csv).map_err(|e| Error::io(out, e))?;
    Ok(())
}
