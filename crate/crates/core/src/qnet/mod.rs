//! The learned reward model `Q(x; θ)` over task space.
//!
//! The network regresses the *estimated loss* `−r`; [`predict`] returns the
//! reward `r̂ = −output`. Inputs are shifted and scaled by the span of the
//! pretraining ball before entering the network, the output is rescaled by
//! the spread of the pretraining labels, and both normalizations are stored
//! with the model.

mod data;
mod mlp;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

pub use data::{reward, Provenance, QDataset, QSample, RewardWeights};
pub use mlp::{Adam, Mlp};

use crate::error::{Error, Result};
use crate::math;
use crate::rng::{component_rng, sample_ball, stream};
use crate::task::TaskVector;

/// Architecture and training schedule of the reward model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct QConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub n_pre: usize,
    pub pretrain_epochs: usize,
    pub batch_size: usize,
    /// Full-batch epochs of each online refit.
    pub fit_epochs: usize,
    /// Pretraining ball radius as a multiple of the source-to-target distance.
    pub radius_factor: f64,
}

impl Default for QConfig {
    fn default() -> Self {
        QConfig {
            hidden: 64,
            learning_rate: 1e-3,
            n_pre: 512,
            pretrain_epochs: 500,
            batch_size: 64,
            fit_epochs: 100,
            radius_factor: 1.25,
        }
    }
}

impl QConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("qnet.hidden", self.hidden),
            ("qnet.n_pre", self.n_pre),
            ("qnet.pretrain_epochs", self.pretrain_epochs),
            ("qnet.batch_size", self.batch_size),
        ];
        for (field, v) in counts {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("qnet.learning_rate", "learning rate must be positive"));
        }
        if !(self.radius_factor > 0.0) || !self.radius_factor.is_finite() {
            return Err(Error::config("qnet.radius_factor", "radius factor must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QModel {
    net: Mlp,
    optimizer: Adam,
    center: Vec<f64>,
    scale: Vec<f64>,
    /// The network regresses `(−r − out_shift) / out_scale`.
    out_shift: f64,
    out_scale: f64,
}

/// A seeded model with identity input normalization.
pub fn init_model(dim: usize, hidden: usize, seed: u64) -> Result<QModel> {
    if dim == 0 || hidden == 0 {
        return Err(Error::Usage("model dimension and width must be at least 1".into()));
    }
    let mut rng = component_rng(seed, stream::MODEL_INIT);
    let net = Mlp::init(dim, hidden, &mut rng);
    let n = net.params().len();
    Ok(QModel {
        net,
        optimizer: Adam::new(n, 1e-3),
        center: vec![0.0; dim],
        scale: vec![1.0; dim],
        out_shift: 0.0,
        out_scale: 1.0,
    })
}

impl QModel {
    /// Wraps explicit network parameters.
    pub fn from_network(net: Mlp, learning_rate: f64) -> Self {
        let dim = net.dim();
        let n = net.params().len();
        QModel {
            net,
            optimizer: Adam::new(n, learning_rate),
            center: vec![0.0; dim],
            scale: vec![1.0; dim],
            out_shift: 0.0,
            out_scale: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.net.dim()
    }

    pub fn network(&self) -> &Mlp {
        &self.net
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.optimizer.lr = lr;
    }

    pub fn optimizer_steps(&self) -> u64 {
        self.optimizer.steps
    }

    /// Input shift and per-coordinate scale.
    pub fn normalization(&self) -> (&[f64], &[f64]) {
        (&self.center, &self.scale)
    }

    pub fn set_normalization(&mut self, center: Vec<f64>, scale: Vec<f64>) -> Result<()> {
        if center.len() != self.dim() || scale.len() != self.dim() {
            return Err(Error::Usage("normalization has the wrong dimension".into()));
        }
        if scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Usage("normalization must be finite with positive scales".into()));
        }
        self.center = center;
        self.scale = scale;
        Ok(())
    }

    /// Output shift and scale.
    pub fn output_normalization(&self) -> (f64, f64) {
        (self.out_shift, self.out_scale)
    }

    pub fn set_output_normalization(&mut self, shift: f64, scale: f64) -> Result<()> {
        if !shift.is_finite() || !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Usage("output normalization must be finite with a positive scale".into()));
        }
        self.out_shift = shift;
        self.out_scale = scale;
        Ok(())
    }

    fn normalize(&self, x: &TaskVector) -> Vec<f64> {
        x.as_slice()
            .iter()
            .zip(self.center.iter().zip(&self.scale))
            .map(|(v, (c, s))| (v - c) / s)
            .collect()
    }

    /// Estimated loss `−r̂`.
    fn estimated_loss(&self, x: &TaskVector) -> f64 {
        self.out_shift + self.out_scale * self.net.forward(&self.normalize(x))
    }

    fn is_finite(&self) -> bool {
        self.net.params().iter().all(|p| p.is_finite())
    }

    fn mse(&self, inputs: &[Vec<f64>], targets: &[f64]) -> f64 {
        let total: f64 = inputs
            .iter()
            .zip(targets)
            .map(|(z, y)| {
                let e = self.net.forward(z) - y;
                e * e
            })
            .sum();
        total / inputs.len() as f64
    }

    /// One Adam step on the mean squared error over `batch`.
    fn train_step(&mut self, inputs: &[Vec<f64>], targets: &[f64], batch: &[usize]) {
        let mut grad = vec![0.0; self.net.params().len()];
        let scale = 2.0 / batch.len() as f64;
        for &i in batch {
            let (out, acts) = self.net.forward_full(&inputs[i]);
            self.net.accumulate_gradient(&inputs[i], &acts, scale * (out - targets[i]), &mut grad);
        }
        self.optimizer.step(self.net.params_mut(), &grad);
    }

    fn training_set(&self, data: &[QSample]) -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            data.iter().map(|s| self.normalize(&s.x)).collect(),
            data.iter().map(|s| (-s.reward - self.out_shift) / self.out_scale).collect(),
        )
    }
}

/// Predicted reward `r̂(x) = −Q_output(x)`.
pub fn predict(model: &QModel, x: &TaskVector) -> Result<f64> {
    x.check_dim(model.dim())?;
    Ok(-model.estimated_loss(x))
}

/// Fits `model` to the analytic reward field around `target`.
///
/// Draws `cfg.n_pre` points uniformly from the `W`-ball of `radius` around
/// `target`, labels them with the reward for task loss `w.c_t`, sets the
/// input normalization to that ball and the output normalization to the
/// label mean and spread, and runs `cfg.pretrain_epochs` epochs
/// of shuffled mini-batch Adam. Returns the (pretrain-tagged) samples.
pub fn pretrain(
    model: &mut QModel,
    target: &TaskVector,
    w: &RewardWeights,
    cfg: &QConfig,
    radius: f64,
    seed: u64,
) -> Result<QDataset> {
    cfg.validate()?;
    w.validate()?;
    target.check_dim(model.dim())?;
    if w.metric.dim() != model.dim() {
        return Err(Error::Usage("reward metric dimension differs from the model".into()));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Usage(format!("pretraining radius must be positive, got {radius}")));
    }
    let scale = w.metric.weights().iter().map(|wi| radius / math::sqrt(*wi)).collect();
    model.set_normalization(target.as_slice().to_vec(), scale)?;
    model.set_learning_rate(cfg.learning_rate);

    let mut sample_rng = component_rng(seed, stream::PRETRAIN_SAMPLES);
    let mut set = QDataset::new();
    for _ in 0..cfg.n_pre {
        let x = sample_ball(&mut sample_rng, target, &w.metric, radius);
        set.push(QSample::new(x, w.c_t, target, w, Provenance::Pretrain));
    }

    let n = set.len() as f64;
    let mean = set.samples().iter().map(|s| -s.reward).sum::<f64>() / n;
    let var = set.samples().iter().map(|s| (-s.reward - mean) * (-s.reward - mean)).sum::<f64>() / n;
    let spread = if var > 0.0 { math::sqrt(var) } else { 1.0 };
    model.set_output_normalization(mean, spread)?;

    let (inputs, targets) = model.training_set(set.samples());
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut shuffle_rng = component_rng(seed, stream::PRETRAIN_SHUFFLE);
    for _ in 0..cfg.pretrain_epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(cfg.batch_size) {
            model.train_step(&inputs, &targets, batch);
        }
    }
    if !model.is_finite() {
        return Err(Error::Numeric("pretraining produced non-finite parameters".into()));
    }
    Ok(set)
}

/// Full-batch refit on the online dataset `data` for `epochs` Adam steps.
///
/// The parameters with the lowest training error seen (including the
/// starting point) are kept, so the error over `data` never increases.
/// Returns that error.
pub fn fit_online(model: &mut QModel, data: &QDataset, epochs: usize) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Usage("online dataset is empty".into()));
    }
    if !data.is_online_only() {
        return Err(Error::Usage("online fitting received pretraining samples".into()));
    }
    for s in data.samples() {
        s.x.check_dim(model.dim())?;
    }
    let (inputs, targets) = model.training_set(data.samples());
    let all: Vec<usize> = (0..inputs.len()).collect();
    let mut best_err = model.mse(&inputs, &targets);
    let mut best = model.net.clone();
    for _ in 0..epochs {
        model.train_step(&inputs, &targets, &all);
        let err = model.mse(&inputs, &targets);
        if err < best_err {
            best_err = err;
            best = model.net.clone();
        }
    }
    model.net = best;
    Ok(best_err)
}

/// A 2-D slice of task space: `origin + tx·(u, 0) + rot·e_θ`, with `u` a unit
/// translation direction.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LandscapeAxes {
    pub origin: TaskVector,
    pub direction: [f64; 2],
    pub translation: [f64; 2],
    pub rotation: [f64; 2],
}

impl LandscapeAxes {
    /// Axes starting at `target` and running toward `source` in translation
    /// and in orientation. An axis along which the two agree spans
    /// `[0, fallback]` instead (translation then runs along +x).
    pub fn between(target: &TaskVector, source: &TaskVector, fallback: f64) -> Result<Self> {
        target.check_dim(3)?;
        source.check_dim(3)?;
        let d = source.sub(target);
        let len = math::sqrt(d[0] * d[0] + d[1] * d[1]);
        let (direction, t_end) = if len > 1e-9 {
            ([d[0] / len, d[1] / len], len)
        } else {
            ([1.0, 0.0], fallback)
        };
        let r_end = if d[2].abs() > 1e-9 { d[2] } else { fallback };
        Ok(LandscapeAxes {
            origin: target.clone(),
            direction,
            translation: [0.0, t_end],
            rotation: [0.0, r_end],
        })
    }

    pub fn point(&self, tx: f64, rot: f64) -> TaskVector {
        let o = self.origin.as_slice();
        TaskVector::planar(o[0] + tx * self.direction[0], o[1] + tx * self.direction[1], o[2] + rot)
    }
}

/// Estimated loss `−r̂` on a grid, orientation-major (`values[j * nx + i]`
/// is at `(tx[i], rot[j])`).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Landscape {
    pub tx: Vec<f64>,
    pub rot: Vec<f64>,
    pub values: Vec<f64>,
}

impl Landscape {
    pub fn value(&self, i_tx: usize, j_rot: usize) -> f64 {
        self.values[j_rot * self.tx.len() + i_tx]
    }

    /// Grid indices `(i_tx, j_rot)` of the smallest value (first on ties).
    pub fn argmin(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = k;
            }
        }
        (best % self.tx.len(), best / self.tx.len())
    }
}

fn linspace(range: [f64; 2], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Evaluates `−predict` on an `nx × ny` grid over `axes`.
pub fn export_landscape(model: &QModel, axes: &LandscapeAxes, nx: usize, ny: usize) -> Result<Landscape> {
    if nx < 2 || ny < 2 {
        return Err(Error::Usage("landscape resolution must be at least 2 x 2".into()));
    }
    axes.origin.check_dim(model.dim())?;
    let tx = linspace(axes.translation, nx);
    let rot = linspace(axes.rotation, ny);
    let mut values = Vec::with_capacity(nx * ny);
    for r in &rot {
        for t in &tx {
            values.push(-predict(model, &axes.point(*t, *r))?);
        }
    }
    Ok(Landscape { tx, rot, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::TaskMetric;

    fn weights(lambda_t: f64, c_t: f64) -> RewardWeights {
        RewardWeights::new(lambda_t, 1.0, c_t, TaskMetric::planar(1.0, 1.0).unwrap()).unwrap()
    }

    fn quick() -> QConfig {
        QConfig::default()
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_model(3, 8, 11).unwrap();
        let b = init_model(3, 8, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, init_model(3, 8, 12).unwrap());
        assert!(init_model(0, 8, 1).is_err());
    }

    #[test]
    fn width_one_model_is_finite() {
        let m = init_model(3, 1, 5).unwrap();
        assert!(predict(&m, &TaskVector::planar(1.0, -2.0, 3.0)).unwrap().is_finite());
    }

    #[test]
    fn predict_checks_dimension() {
        let m = init_model(3, 4, 5).unwrap();
        assert!(matches!(predict(&m, &TaskVector::zeros(2)), Err(Error::Usage(_))));
    }

    #[test]
    fn zero_weights_predict_negated_bias() {
        let mut net = Mlp::zeros(3, 4);
        let n = net.params().len();
        net.params_mut()[n - 1] = 0.25;
        let m = QModel::from_network(net, 1e-3);
        assert_eq!(predict(&m, &TaskVector::planar(0.3, 0.1, -0.2)).unwrap(), -0.25);
    }

    #[test]
    fn pretrained_model_peaks_at_target() {
        let target = TaskVector::planar(0.2, -0.1, 0.3);
        let w = weights(1.0, 1e-4);
        let mut m = init_model(3, 64, 1).unwrap();
        let set = pretrain(&mut m, &target, &w, &quick(), 0.5, 1).unwrap();
        assert_eq!(set.len(), 512);
        assert!(set.samples().iter().all(|s| s.provenance == Provenance::Pretrain));
        let at = predict(&m, &target).unwrap();
        assert!((at + 1e-4).abs() < 0.01, "prediction at target {at}");
        let away = predict(&m, &TaskVector::planar(0.6, -0.1, 0.3)).unwrap();
        assert!(away < at);
    }

    #[test]
    fn online_fit_learns_a_single_point() {
        let mut m = init_model(3, 16, 2).unwrap();
        let target = TaskVector::planar(0.0, 0.0, 0.0);
        let w = weights(1.0, 0.0);
        let mut d = QDataset::new();
        d.push(QSample::new(TaskVector::planar(0.1, 0.1, 0.0), 0.02, &target, &w, Provenance::Online));
        let before = m.mse(&m.training_set(d.samples()).0, &m.training_set(d.samples()).1);
        let after = fit_online(&mut m, &d, 2000).unwrap();
        assert!(after <= before);
        let r = predict(&m, &d.samples()[0].x).unwrap();
        assert!((r - d.samples()[0].reward).abs() <= 1e-3);
    }

    #[test]
    fn online_fit_rejects_pretrain_samples_and_empty_sets() {
        let mut m = init_model(3, 4, 2).unwrap();
        assert!(fit_online(&mut m, &QDataset::new(), 10).is_err());
        let target = TaskVector::planar(0.0, 0.0, 0.0);
        let mut d = QDataset::new();
        d.push(QSample::new(target.clone(), 0.0, &target, &weights(1.0, 0.0), Provenance::Pretrain));
        assert!(fit_online(&mut m, &d, 10).is_err());
    }

    #[test]
    fn landscape_is_negated_prediction() {
        let m = init_model(3, 8, 4).unwrap();
        let axes = LandscapeAxes::between(
            &TaskVector::planar(0.2, 0.2, 0.35),
            &TaskVector::planar(0.0, 0.0, 0.0),
            0.15,
        )
        .unwrap();
        let l = export_landscape(&m, &axes, 5, 4).unwrap();
        assert_eq!(l.values.len(), 20);
        for (j, r) in l.rot.iter().enumerate() {
            for (i, t) in l.tx.iter().enumerate() {
                assert_eq!(l.value(i, j), -predict(&m, &axes.point(*t, *r)).unwrap());
            }
        }
        assert!(export_landscape(&m, &axes, 1, 4).is_err());
    }

    #[test]
    fn degenerate_axes_fall_back() {
        let x = TaskVector::planar(0.1, 0.0, 0.0);
        let axes = LandscapeAxes::between(&x, &x, 0.15).unwrap();
        assert_eq!(axes.translation, [0.0, 0.15]);
        assert_eq!(axes.rotation, [0.0, 0.15]);
        assert_eq!(axes.direction, [1.0, 0.0]);
    }
}
