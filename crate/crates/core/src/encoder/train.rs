use super::model::{DualEncoderModel, HashEncoderConfig};
use super::{cosine_sim, EncoderError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

fn unit_weight() -> f64 {
    1.0
}

/// One (query, candidate) pair with label 1 for the target, 0 otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub query_text: String,
    pub candidate_text: String,
    pub label: f64,
    /// Multiplies this pair's loss; 1 unless per-turn normalization is on.
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

impl TrainingExample {
    pub fn new(query_text: impl Into<String>, candidate_text: impl Into<String>, is_target: bool) -> Self {
        Self {
            query_text: query_text.into(),
            candidate_text: candidate_text.into(),
            label: if is_target { 1.0 } else { 0.0 },
            weight: 1.0,
        }
    }
}

/// Squared error between the label and the query/candidate cosine.
pub fn loss(example: &TrainingExample, model: &DualEncoderModel) -> Result<f64, EncoderError> {
    let q = model.encode_query(&example.query_text)?;
    let c = model.encode_candidate(&example.candidate_text)?;
    let s = cosine_sim(&q, &c)?;
    Ok((example.label - s).powi(2))
}

/// Gradients of the weighted mean batch loss, same layout as the heads.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w_query: Vec<f64>,
    pub w_cand: Vec<f64>,
}

/// Analytic gradients of the mean loss, and the mean loss itself.
///
/// With `u = Wq x`, `v = Wc y`, `a = u/|u|`, `b = v/|v|`, `s = a.b`:
/// `dL/du = -2 w (y - s) (b - s a) / |u|` and symmetrically for `v`; the
/// weight gradient is the outer product with the sparse hashed input.
pub fn batch_gradients(
    batch: &[TrainingExample],
    model: &DualEncoderModel,
) -> Result<(Gradients, f64), EncoderError> {
    if batch.is_empty() {
        return Err(EncoderError::InvalidInput("empty batch".into()));
    }
    let base = model.base_dim();
    let proj = model.proj_dim();
    let mut grads = Gradients {
        w_query: vec![0.0; base * proj],
        w_cand: vec![0.0; base * proj],
    };
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for ex in batch {
        let x = model.features(&ex.query_text)?;
        let y = model.features(&ex.candidate_text)?;
        let u = model.project(&model.w_query, &x);
        let v = model.project(&model.w_cand, &y);
        let nu = u.iter().map(|t| t * t).sum::<f64>().sqrt();
        let nv = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if nu == 0.0 || nv == 0.0 {
            return Err(EncoderError::ZeroNormVector);
        }
        let s: f64 = u.iter().zip(&v).map(|(p, q)| p * q).sum::<f64>() / (nu * nv);
        total += ex.weight * (ex.label - s).powi(2);
        let g = -2.0 * ex.weight * (ex.label - s) * scale;
        for r in 0..proj {
            let (a, b) = (u[r] / nu, v[r] / nv);
            let du = g * (b - s * a) / nu;
            let dv = g * (a - s * b) / nv;
            let row = r * base;
            for &(j, xj) in &x {
                grads.w_query[row + j] += du * xj;
            }
            for &(j, yj) in &y {
                grads.w_cand[row + j] += dv * yj;
            }
        }
    }
    if grads.w_query.iter().chain(&grads.w_cand).any(|g| !g.is_finite()) {
        return Err(EncoderError::NonFiniteGradient);
    }
    Ok((grads, total * scale))
}

/// One plain SGD step. Returns the updated model and the mean batch loss
/// measured before the update.
pub fn train_step(
    batch: &[TrainingExample],
    model: &DualEncoderModel,
    lr: f64,
) -> Result<(DualEncoderModel, f64), EncoderError> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(EncoderError::InvalidInput(format!("learning rate {lr} must be > 0")));
    }
    let (grads, mean_loss) = batch_gradients(batch, model)?;
    let mut next = model.clone();
    for (w, g) in next.w_query.iter_mut().zip(&grads.w_query) {
        *w -= lr * g;
    }
    for (w, g) in next.w_cand.iter_mut().zip(&grads.w_cand) {
        *w -= lr * g;
    }
    if next.w_query.iter().chain(&next.w_cand).any(|w| !w.is_finite()) {
        return Err(EncoderError::NonFiniteGradient);
    }
    Ok((next, mean_loss))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Seeds shuffling (and negative sampling, where the caller uses it).
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            epochs: 15,
            lr: 0.1,
            batch_size: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: DualEncoderModel,
    /// Pre-update mean loss of every step, in order.
    pub loss_curve: Vec<f64>,
}

/// Initializes a model from `encoder` and runs `config.epochs` passes of
/// shuffled mini-batch SGD. Deterministic for fixed seeds.
pub fn fit(
    dataset: &[TrainingExample],
    encoder: &HashEncoderConfig,
    config: &FitConfig,
) -> Result<FitOutcome, EncoderError> {
    if dataset.is_empty() {
        return Err(EncoderError::InvalidInput("empty training set".into()));
    }
    if config.batch_size == 0 {
        return Err(EncoderError::InvalidInput("batch_size must be >= 1".into()));
    }
    let mut model = DualEncoderModel::init(encoder)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut loss_curve = Vec::new();
    let mut batch = Vec::with_capacity(config.batch_size);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| dataset[i].clone()));
            let (next, l) = train_step(&batch, &model, config.lr)?;
            model = next;
            loss_curve.push(l);
        }
    }
    Ok(FitOutcome { model, loss_curve })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> HashEncoderConfig {
        HashEncoderConfig {
            base_dim: 8,
            proj_dim: 4,
            ngram_orders: [2].into_iter().collect(),
            seed: 1,
        }
    }

    #[test]
    fn loss_values() {
        let m = DualEncoderModel::identity(64, [2, 3].into_iter().collect(), 0).unwrap();
        assert!(loss(&TrainingExample::new("same", "same", true), &m).unwrap() < 1e-20);
        let l = loss(&TrainingExample::new("same", "same", false), &m).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_point_leaves_model_unchanged() {
        let m = DualEncoderModel::identity(64, [2, 3].into_iter().collect(), 0).unwrap();
        let batch = vec![TrainingExample::new("checkout", "checkout", true)];
        let (next, l) = train_step(&batch, &m, 0.1).unwrap();
        assert!(l < 1e-20);
        for (a, b) in next.w_query().iter().zip(m.w_query()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = DualEncoderModel::init(&tiny()).unwrap();
        assert!(train_step(&[], &m, 0.1).is_err());
        let batch = vec![TrainingExample::new("ab", "cd", true)];
        assert!(train_step(&batch, &m, 0.0).is_err());
        assert!(train_step(&batch, &m, f64::NAN).is_err());
        assert!(matches!(
            train_step(&[TrainingExample::new("", "cd", true)], &m, 0.1),
            Err(EncoderError::EmptyText)
        ));
    }

    #[test]
    fn zero_epochs_returns_init() {
        let data = vec![TrainingExample::new("ab", "cd", true)];
        let cfg = FitConfig {
            epochs: 0,
            ..FitConfig::default()
        };
        let out = fit(&data, &tiny(), &cfg).unwrap();
        assert_eq!(out.model, DualEncoderModel::init(&tiny()).unwrap());
        assert!(out.loss_curve.is_empty());
    }

    #[test]
    fn weight_scales_loss() {
        let m = DualEncoderModel::init(&tiny()).unwrap();
        let mut ex = TrainingExample::new("abc", "xyz", true);
        let (_, l1) = batch_gradients(std::slice::from_ref(&ex), &m).unwrap();
        ex.weight = 0.5;
        let (_, l2) = batch_gradients(&[ex], &m).unwrap();
        assert!((l2 - 0.5 * l1).abs() < 1e-12);
    }
}
