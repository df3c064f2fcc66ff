use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::StrategyProfile;
use crate::linalg::update_mean;

/// One recorded iterate together with the running averages up to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: usize,
    pub profile: StrategyProfile,
    /// Mean of `x^(1..=t)`; equals `x^(0)` at `t = 0`.
    pub x_avg: Vec<f64>,
    pub y_avg: Vec<f64>,
    /// `f(x^(t), y^(t))`.
    pub objective: f64,
}

/// A recorded run. Averages always cover every iterate, even when storage
/// is thinned with `record_every`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub horizon: usize,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectories always hold the initial point")
    }

    pub fn iterates(&self) -> impl Iterator<Item = &StrategyProfile> {
        self.points.iter().map(|p| &p.profile)
    }

    /// Writes `t, x_*, y_*, lambda_*, f, xbar_*, ybar_*` followed by `extras`,
    /// each of which must hold one value per recorded point.
    pub fn write_csv<W: Write>(&self, out: W, extras: &[(&str, &[f64])]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let first = &self.points[0];
        let (n, m) = (first.profile.x.len(), first.profile.y.len());
        let d = first.profile.lambda.as_ref().map_or(0, Vec::len);

        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("x_{i}")));
        header.extend((0..m).map(|i| format!("y_{i}")));
        header.extend((0..d).map(|i| format!("lambda_{i}")));
        header.push("f".into());
        header.extend((0..n).map(|i| format!("xbar_{i}")));
        header.extend((0..m).map(|i| format!("ybar_{i}")));
        header.extend(extras.iter().map(|(name, _)| name.to_string()));
        w.write_record(&header)?;

        for (row, p) in self.points.iter().enumerate() {
            let mut rec = vec![p.t.to_string()];
            rec.extend(p.profile.x.iter().map(f64::to_string));
            rec.extend(p.profile.y.iter().map(f64::to_string));
            if let Some(l) = &p.profile.lambda {
                rec.extend(l.iter().map(f64::to_string));
            }
            rec.push(p.objective.to_string());
            rec.extend(p.x_avg.iter().map(f64::to_string));
            rec.extend(p.y_avg.iter().map(f64::to_string));
            rec.extend(extras.iter().map(|(_, v)| v[row].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Accumulates averages over every iterate and stores a thinned subset.
pub(crate) struct Recorder {
    every: usize,
    horizon: usize,
    x_avg: Vec<f64>,
    y_avg: Vec<f64>,
    points: Vec<TrajectoryPoint>,
}

impl Recorder {
    pub fn new(initial: &StrategyProfile, objective: f64, every: usize, horizon: usize) -> Self {
        let point = TrajectoryPoint {
            t: 0,
            profile: initial.clone(),
            x_avg: initial.x.clone(),
            y_avg: initial.y.clone(),
            objective,
        };
        Self {
            every,
            horizon,
            x_avg: initial.x.clone(),
            y_avg: initial.y.clone(),
            points: vec![point],
        }
    }

    pub fn push(&mut self, t: usize, profile: &StrategyProfile, objective: impl FnOnce() -> f64) {
        if t == 1 {
            self.x_avg.clone_from(&profile.x);
            self.y_avg.clone_from(&profile.y);
        } else {
            update_mean(&mut self.x_avg, &profile.x, t);
            update_mean(&mut self.y_avg, &profile.y, t);
        }
        if t.is_multiple_of(self.every) || t == self.horizon {
            self.points.push(TrajectoryPoint {
                t,
                profile: profile.clone(),
                x_avg: self.x_avg.clone(),
                y_avg: self.y_avg.clone(),
                objective: objective(),
            });
        }
    }

    pub fn finish(self) -> Trajectory {
        Trajectory {
            horizon: self.horizon,
            points: self.points,
        }
    }
}
