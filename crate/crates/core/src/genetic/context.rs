use super::{Chromosome, Oracle, Problem};
use crate::descriptors::{normalized_distance_matrix, LandmarkSet, WksTable};
use crate::elastic::{EnergyParams, FitnessEvaluator, MapPair};
use crate::error::{Error, Result};
use crate::fmap::MapWeights;
use crate::shape::ShapeData;

/// Mesh-backed oracle: scores a chromosome by the fitness energy of the
/// functional maps its landmark match induces.
pub struct MatchContext<'a> {
    pub landmarks_1: &'a LandmarkSet,
    pub landmarks_2: &'a LandmarkSet,
    pub problem: Problem,
    pub evaluator: FitnessEvaluator<'a>,
}

impl<'a> MatchContext<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        shape_1: &'a ShapeData,
        shape_2: &'a ShapeData,
        landmarks_1: &'a LandmarkSet,
        landmarks_2: &'a LandmarkSet,
        wks_1: &WksTable,
        wks_2: &WksTable,
        eps_wks: f64,
        weights: MapWeights,
        energy: EnergyParams,
    ) -> Result<Self> {
        let v1: Vec<usize> = landmarks_1.landmarks.iter().map(|l| l.vertex).collect();
        let v2: Vec<usize> = landmarks_2.landmarks.iter().map(|l| l.vertex).collect();
        let w12 = normalized_distance_matrix(wks_1, &v1, wks_2, &v2);
        let w21 = normalized_distance_matrix(wks_2, &v2, wks_1, &v1);
        let problem = Problem::from_landmarks(landmarks_1, landmarks_2, &w12, &w21, eps_wks)?;
        Ok(Self {
            landmarks_1,
            landmarks_2,
            problem,
            evaluator: FitnessEvaluator::new(shape_1, shape_2, weights, energy),
        })
    }

    /// Vertex pairs `(v on M_1, v on M_2)` of the non-empty genes.
    pub fn vertex_pairs(&self, c: &Chromosome) -> Result<Vec<(usize, usize)>> {
        if c.size() == 0 {
            return Err(Error::EmptyMatch);
        }
        Ok(c.pairs()
            .into_iter()
            .map(|(a, b)| (self.landmarks_1.vertex(a), self.landmarks_2.vertex(b)))
            .collect())
    }

    /// Maps and energies of a chromosome's match.
    pub fn evaluate(&self, c: &Chromosome) -> Result<MapPair> {
        self.evaluator.evaluate(&self.vertex_pairs(c)?)
    }
}

impl Oracle for MatchContext<'_> {
    fn fitness(&self, c: &Chromosome) -> Result<f64> {
        Ok(self.evaluator.fitness(&self.vertex_pairs(c)?)?.e_fit)
    }

    fn guided_targets(&self, c: &Chromosome) -> Result<Vec<usize>> {
        let map = self.evaluator.guidance_map(&self.vertex_pairs(c)?)?;
        Ok(self
            .landmarks_1
            .landmarks
            .iter()
            .map(|l| self.landmarks_2.nearest_to_vertex(map.assignment[l.vertex]))
            .collect())
    }
}
