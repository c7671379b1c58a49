//! Seeded type sampling.

use rand::Rng;

use crate::env::{Environment, Knot, TypeDistribution, TypeSpace, TypeValue};
use crate::error::{AuditError, Result};
use crate::mechanism::coordinate_probabilities;
use crate::normal::truncated_normal_unchecked;
use crate::rng::StreamRng;

/// A distribution prepared for repeated draws from one type space.
#[derive(Clone, Debug)]
pub struct TypeSampler {
    kind: ScalarLaw,
    /// Option count of a valuation grid.
    grid: Option<usize>,
}

#[derive(Clone, Debug)]
enum ScalarLaw {
    /// Cumulative probabilities; draw = first index with cum > u.
    Categorical(Vec<f64>),
    TruncatedNormal(f64),
    Density(DensityTable),
}

#[derive(Clone, Debug)]
struct DensityTable {
    knots: Vec<Knot>,
    /// Mass to the left of each knot.
    cum: Vec<f64>,
}

impl DensityTable {
    fn new(knots: &[Knot]) -> Self {
        let mut cum = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for w in knots.windows(2) {
            acc += 0.5 * (w[0].density + w[1].density) * (w[1].x - w[0].x);
            cum.push(acc);
        }
        Self {
            knots: knots.to_vec(),
            cum,
        }
    }

    /// Inverse of the piecewise-quadratic cdf.
    #[inline]
    fn quantile(&self, u: f64) -> f64 {
        let target = u * self.cum[self.cum.len() - 1];
        let seg = match self.cum[1..].iter().position(|&c| c > target) {
            Some(s) => s,
            None => self.knots.len() - 2,
        };
        let (a, b) = (self.knots[seg], self.knots[seg + 1]);
        let width = b.x - a.x;
        let slope = (b.density - a.density) / width;
        let r = (target - self.cum[seg]).max(0.0);
        if slope == 0.0 && a.density > 0.0 {
            return (a.x + (r / a.density).min(width)).min(b.x);
        }
        // Root of a.density * d + slope * d^2 / 2 = r, in the form that stays
        // stable as slope -> 0.
        let disc = (a.density * a.density + 2.0 * slope * r).max(0.0);
        let denom = a.density + disc.sqrt();
        let d = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        (a.x + d.clamp(0.0, width)).min(b.x)
    }
}

fn cumulative(probabilities: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cum: Vec<f64> = probabilities
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    // Guard the last bucket against rounding.
    if let Some(last) = cum.last_mut() {
        *last = f64::INFINITY;
    }
    cum
}

impl TypeSampler {
    pub fn new(space: &TypeSpace, dist: &TypeDistribution) -> Result<Self> {
        dist.validate_for(space)?;
        if let TypeSpace::ValuationGrid { options, .. } = space {
            // A continuous coordinate snapped to the nearest grid point is a
            // categorical draw over the snapping cells.
            let probs = coordinate_probabilities(space, dist)?;
            return Ok(Self {
                kind: ScalarLaw::Categorical(cumulative(&probs)),
                grid: Some(*options),
            });
        }
        let kind = match dist {
            TypeDistribution::Categorical { probabilities } => ScalarLaw::Categorical(cumulative(probabilities)),
            TypeDistribution::TruncatedStdNormal { bound } => ScalarLaw::TruncatedNormal(*bound),
            TypeDistribution::BoundedDensity { knots } => ScalarLaw::Density(DensityTable::new(knots)),
        };
        Ok(Self { kind, grid: None })
    }

    #[inline]
    fn categorical_index(cum: &[f64], u: f64) -> usize {
        cum.partition_point(|&c| c <= u)
    }

    #[inline]
    fn scalar(&self, rng: &mut StreamRng) -> f64 {
        match &self.kind {
            ScalarLaw::TruncatedNormal(alpha) => truncated_normal_unchecked(*alpha, rng),
            ScalarLaw::Density(table) => table.quantile(rng.random()),
            ScalarLaw::Categorical(_) => unreachable!("categorical handled by caller"),
        }
    }

    /// One draw. Grid coordinates are drawn independently per option.
    pub fn draw(&self, rng: &mut StreamRng) -> TypeValue {
        match (self.grid, &self.kind) {
            (Some(options), _) => {
                let mut g = vec![0; options];
                self.draw_grid_into(rng, &mut g);
                TypeValue::Grid(g)
            }
            (None, ScalarLaw::Categorical(cum)) => TypeValue::Label(Self::categorical_index(cum, rng.random())),
            (None, _) => TypeValue::Real(self.scalar(rng)),
        }
    }

    /// Grid draw written into `out`, consuming the generator exactly like
    /// `draw`. Returns false for non-grid spaces.
    #[inline]
    pub fn draw_grid_into(&self, rng: &mut StreamRng, out: &mut [u32]) -> bool {
        match (self.grid, &self.kind) {
            (Some(_), ScalarLaw::Categorical(cum)) => {
                for g in out.iter_mut() {
                    *g = Self::categorical_index(cum, rng.random()) as u32;
                }
                true
            }
            _ => false,
        }
    }

    /// Draw of an interval type as a bare real, for hot loops.
    #[inline]
    pub fn draw_real(&self, rng: &mut StreamRng) -> Option<f64> {
        match (self.grid, &self.kind) {
            (None, ScalarLaw::TruncatedNormal(_) | ScalarLaw::Density(_)) => Some(self.scalar(rng)),
            _ => None,
        }
    }
}

/// One type drawn from `dist` over `space`.
pub fn sample_type(dist: &TypeDistribution, space: &TypeSpace, rng: &mut StreamRng) -> Result<TypeValue> {
    let t = TypeSampler::new(space, dist)?.draw(rng);
    debug_assert!(space.contains(&t));
    Ok(t)
}

/// One independent draw per listed player, in the listed order.
pub fn sample_profile(env: &Environment, players: &[usize], rng: &mut StreamRng) -> Result<Vec<TypeValue>> {
    if let Some(&bad) = players.iter().find(|&&p| p >= env.players) {
        return Err(AuditError::domain(format!("player {bad} outside [0, {})", env.players)));
    }
    if players.is_empty() {
        return Ok(Vec::new());
    }
    let sampler = TypeSampler::new(&env.type_space, &env.distribution)?;
    Ok(players
        .iter()
        .map(|_| {
            let t = sampler.draw(rng);
            debug_assert!(env.type_space.contains(&t));
            t
        })
        .collect())
}
