//! End-to-end matching of two meshes: spectral bases, landmarks,
//! descriptors, the genetic search and the final functional maps.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::descriptors::{detect_landmarks, wks, Category, LandmarkSet, WksTable};
use crate::elastic::{FitnessReport, MapPair};
use crate::error::{Error, Result};
use crate::genetic::{evolve, Chromosome, Evolution, GenerationRecord, MatchContext};
use crate::mesh::TriMesh;
use crate::shape::ShapeData;

/// A mesh with everything the matcher needs from it.
#[derive(Debug, Clone)]
pub struct PreparedShape {
    pub shape: ShapeData,
    pub landmarks: LandmarkSet,
    pub wks: WksTable,
}

/// Normalizes (if configured), computes the basis (through the cache when
/// given), detects landmarks and computes descriptors.
pub fn prepare_shape(mesh: &TriMesh, cfg: &RunConfig, cache_dir: Option<&Path>) -> Result<PreparedShape> {
    let mesh = if cfg.normalize {
        mesh.normalize_area()?
    } else {
        mesh.clone()
    };
    if cfg.kt > mesh.num_vertices() {
        return Err(Error::InvalidBasisSize {
            k: cfg.kt,
            n: mesh.num_vertices(),
        });
    }
    let shape = ShapeData::new(mesh, cfg.kt, cfg.ks, cache_dir)?;
    let landmarks = detect_landmarks(&shape.mesh, &shape.basis_t, &cfg.landmark_params())?;
    let wks = wks(&shape.basis_t, cfg.wks_scales, cfg.wks_sigma)?;
    Ok(PreparedShape {
        shape,
        landmarks,
        wks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub source_landmark: usize,
    pub target_landmark: usize,
    pub source_vertex: usize,
    pub target_vertex: usize,
    pub source_category: Category,
    pub target_category: Category,
}

/// Serialized summary of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub seed: u64,
    pub generations: usize,
    pub converged: bool,
    pub fitness: FitnessReport,
    pub chromosome: Chromosome,
    pub pairs: Vec<MatchedPair>,
}

impl MatchRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Malformed {
            what: "match record",
            message: e.to_string(),
        })
    }
}

pub struct MatchOutcome {
    pub evolution: Evolution,
    pub maps: MapPair,
    pub record: MatchRecord,
}

impl MatchOutcome {
    /// One JSON object per generation, newline-terminated.
    pub fn run_log(&self) -> String {
        run_log(&self.evolution.records)
    }
}

pub fn run_log(records: &[GenerationRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_run_log(text: &str) -> Result<Vec<GenerationRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Runs the genetic search from `cfg.seed` and evaluates the fittest match.
pub fn run_match(a: &PreparedShape, b: &PreparedShape, cfg: &RunConfig) -> Result<MatchOutcome> {
    cfg.validate()?;
    let ctx = MatchContext::new(
        &a.shape,
        &b.shape,
        &a.landmarks,
        &b.landmarks,
        &a.wks,
        &b.wks,
        cfg.eps_wks,
        cfg.map_weights(),
        cfg.energy_params(),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let evolution = evolve(&ctx.problem, &ctx, &cfg.ga_params(), &mut rng)?;
    let maps = ctx.evaluate(&evolution.best)?;
    let pairs = evolution
        .best
        .pairs()
        .into_iter()
        .map(|(s, t)| MatchedPair {
            source_landmark: s,
            target_landmark: t,
            source_vertex: a.landmarks.vertex(s),
            target_vertex: b.landmarks.vertex(t),
            source_category: a.landmarks.category(s),
            target_category: b.landmarks.category(t),
        })
        .collect();
    let record = MatchRecord {
        seed: cfg.seed,
        generations: evolution.generations,
        converged: evolution.converged,
        fitness: maps.report,
        chromosome: evolution.best.clone(),
        pairs,
    };
    Ok(MatchOutcome {
        evolution,
        maps,
        record,
    })
}
