//! Per-fixture reward instances and their reference optima.

use std::sync::Arc;

use llmo_baselines::{dinkelbach_ee, multi_start, wmmse, PowerControlProblem, DEFAULT_MAX_ITER, DEFAULT_TOL};
use llmo_core::optimizer::seeded_stream;
use llmo_core::prompt::ConstraintText;
use llmo_core::{grid_reward_table, Bounds, Grid, GridRewardTable, RewardError, RewardModel};
use llmo_wireless::fixtures::ifc_d2;
use llmo_wireless::{
    rayleigh_channels, rayleigh_vector, BcModel, BcReward, ChannelFixture, ChannelMatrix, ConstraintMode, IfcModel,
    IfcObjective, IfcReward, MmimoReward,
};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::config::{ChannelSource, ExperimentConfig, Scenario};
use crate::CliError;

/// Multi-start count for the continuous reference optima.
const REFERENCE_STARTS: usize = 16;

/// One channel draw (or synthetic landscape) with everything a run needs.
pub struct Instance {
    pub fixture: usize,
    pub bounds: Bounds,
    pub reward: Arc<dyn RewardModel>,
    /// Grid for synthetic agents, present when `[grid]` is configured.
    pub grid: Option<Grid>,
    /// Exhaustive grid maximum, or the best analytic baseline value.
    pub reference: Option<f64>,
    pub constraint_text: Option<ConstraintText>,
}

/// Two Gaussian bumps on `[0, 1]^D`: a broad one of height 1 and a
/// narrow one of height 0.7.
#[derive(Clone, Debug)]
pub struct TwoPeaks {
    pub broad: Vec<f64>,
    pub narrow: Vec<f64>,
}

impl TwoPeaks {
    pub fn draw(dim: usize, seed: u64) -> Self {
        let mut rng = seeded_stream(seed, 0);
        let mut point = || (0..dim).map(|_| rng.random::<f64>()).collect::<Vec<_>>();
        Self {
            broad: point(),
            narrow: point(),
        }
    }
}

impl RewardModel for TwoPeaks {
    fn evaluate(&self, x: &[f64]) -> Result<f64, RewardError> {
        let d2 = |c: &[f64]| x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        Ok((-d2(&self.broad) / 0.02).exp() + 0.7 * (-d2(&self.narrow) / 0.005).exp())
    }
}

/// Scores actions at their nearest grid point; violations follow the
/// snapped action too.
pub struct Quantized {
    pub table: GridRewardTable,
    pub inner: Arc<dyn RewardModel>,
}

impl RewardModel for Quantized {
    fn evaluate(&self, x: &[f64]) -> Result<f64, RewardError> {
        self.table.evaluate(x)
    }

    fn violation(&self, x: &[f64]) -> f64 {
        let g = &self.table.grid;
        self.inner.violation(&g.point_values(g.snap_point(x)))
    }
}

fn ifc_channels(config: &ExperimentConfig) -> Result<Vec<ChannelMatrix>, CliError> {
    let d = config.dim;
    match &config.channels {
        ChannelSource::Rayleigh { count, seed } => Ok((0..*count)
            .map(|i| rayleigh_channels(d, d, seed.wrapping_add(i as u64)))
            .collect::<Result<_, _>>()?),
        ChannelSource::IfcD2 => Ok(vec![ifc_d2()?]),
        ChannelSource::File { path } => {
            let file = std::fs::File::open(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
            let channels = ChannelFixture::read_csv(file)?.channels;
            if let Some(c) = channels.iter().find(|c| c.rows() != d || c.cols() != d) {
                return Err(CliError::Invalid(vec![format!(
                    "channel file holds {}x{} draws but dim = {d}",
                    c.rows(),
                    c.cols()
                )]));
            }
            Ok(channels)
        }
    }
}

fn bc_vectors(config: &ExperimentConfig) -> Result<Vec<Vec<Complex64>>, CliError> {
    let d = config.dim;
    match &config.channels {
        ChannelSource::Rayleigh { count, seed } => Ok((0..*count)
            .map(|i| rayleigh_vector(d, seed.wrapping_add(i as u64)))
            .collect::<Result<_, _>>()?),
        ChannelSource::File { path } => {
            let file = std::fs::File::open(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
            ChannelFixture::read_csv(file)?
                .channels
                .iter()
                .map(|c| {
                    if c.rows().min(c.cols()) == 1 && c.rows().max(c.cols()) == d {
                        Ok(c.entries().to_vec())
                    } else {
                        Err(CliError::Invalid(vec![format!(
                            "broadcast channels must be 1x{d}, found {}x{}",
                            c.rows(),
                            c.cols()
                        )]))
                    }
                })
                .collect()
        }
        ChannelSource::IfcD2 => Err(CliError::Invalid(vec![
            "the ifc-d2 fixture has no broadcast form".into()
        ])),
    }
}

fn fixture_seeds(config: &ExperimentConfig) -> Vec<u64> {
    match &config.channels {
        ChannelSource::Rayleigh { count, seed } => (0..*count).map(|i| seed.wrapping_add(i as u64)).collect(),
        _ => vec![0],
    }
}

fn best_score<T: llmo_baselines::Scored + Send>(
    run: impl Fn(&[f64]) -> Result<T, llmo_baselines::BaselineError> + Sync,
    bounds: &Bounds,
    seed: u64,
) -> Result<f64, CliError> {
    Ok(multi_start(run, bounds, REFERENCE_STARTS, seed)?.best().score())
}

/// Builds every fixture instance; fixtures are independent and built concurrently.
pub fn build_instances(config: &ExperimentConfig) -> Result<Vec<Instance>, CliError> {
    let d = config.dim;
    let w = &config.wireless;
    let unit = Bounds::unit(d);
    let raw: Vec<(Arc<dyn RewardModel>, Bounds, Option<Reference>)> = match config.scenario {
        Scenario::IfcEe | Scenario::IfcSe => {
            let objective = if config.scenario == Scenario::IfcEe {
                IfcObjective::Ee
            } else {
                IfcObjective::Se
            };
            ifc_channels(config)?
                .iter()
                .map(|h| {
                    let model = IfcModel::new(h, w.p_tx, w.p_fix)?;
                    let reference = Some(match objective {
                        IfcObjective::Ee => Reference::Ee(model.clone()),
                        IfcObjective::Se => Reference::Wmmse(PowerControlProblem::from(&model)),
                    });
                    Ok((
                        Arc::new(IfcReward::new(model, objective)) as Arc<dyn RewardModel>,
                        unit.clone(),
                        reference,
                    ))
                })
                .collect::<Result<_, CliError>>()?
        }
        Scenario::BcSe => bc_vectors(config)?
            .iter()
            .map(|h| {
                let model = BcModel::new(h, w.p_tx, w.penalty)?;
                let reference = Some(Reference::Wmmse(PowerControlProblem::from(&model)));
                Ok((
                    Arc::new(BcReward::new(model, config.constraint)) as Arc<dyn RewardModel>,
                    unit.clone(),
                    reference,
                ))
            })
            .collect::<Result<_, CliError>>()?,
        Scenario::MmimoEe => fixture_seeds(config)
            .into_iter()
            .map(|seed| {
                let reward = MmimoReward {
                    model: config.mmimo.clone(),
                    seed,
                };
                (Arc::new(reward) as Arc<dyn RewardModel>, config.mmimo.bounds(), None)
            })
            .collect(),
        Scenario::SyntheticGrid => fixture_seeds(config)
            .into_iter()
            .map(|seed| {
                (
                    Arc::new(TwoPeaks::draw(d, seed)) as Arc<dyn RewardModel>,
                    unit.clone(),
                    None,
                )
            })
            .collect(),
    };

    let constraint_text = (config.scenario == Scenario::BcSe && config.constraint == ConstraintMode::Language)
        .then(ConstraintText::sum_power);
    raw.into_par_iter()
        .enumerate()
        .map(|(fixture, (reward, bounds, reference))| {
            let grid = match &config.grid {
                Some(g) => Some(Grid::new(g.levels, bounds.clone())?),
                None => None,
            };
            let quantize = config.grid.as_ref().is_some_and(|g| g.quantize);
            let (reward, reference) = match (&grid, quantize) {
                (Some(grid), true) => {
                    let table = grid_reward_table(&reward, grid, crate::config::MAX_GRID_POINTS)?;
                    let max = table.max;
                    (
                        Arc::new(Quantized { table, inner: reward }) as Arc<dyn RewardModel>,
                        Some(max),
                    )
                }
                _ => {
                    let seed = fixture as u64;
                    let value = match reference {
                        Some(Reference::Ee(model)) => Some(best_score(
                            |x| dinkelbach_ee(&model, x, DEFAULT_MAX_ITER, DEFAULT_TOL),
                            &bounds,
                            seed,
                        )?),
                        Some(Reference::Wmmse(problem)) => Some(best_score(
                            |x| wmmse(&problem, x, DEFAULT_MAX_ITER, DEFAULT_TOL),
                            &bounds,
                            seed,
                        )?),
                        None => None,
                    };
                    (reward, value)
                }
            };
            Ok(Instance {
                fixture,
                bounds,
                reward,
                grid,
                reference,
                constraint_text: constraint_text.clone(),
            })
        })
        .collect()
}

enum Reference {
    Ee(IfcModel),
    Wmmse(PowerControlProblem),
}
