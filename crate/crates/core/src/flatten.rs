//! Background-flattening loss and direction refinement.
//!
//! The flattening loss is the mean absolute pixel difference plus a
//! perceptual distance between a source sample and an edited sample.
//! Minimizing it as stated collapses the direction to zero (no edit, no
//! loss), so refinement freezes the projection onto the original direction
//! at 1 and optimizes only the orthogonal complement: the attribute edit is
//! preserved while the rest of the image stops drifting.

use crate::error::{Error, Result};
use crate::generator::{Generator, LatentCode, TextEmbedding};
use crate::image::ImageTensor;
use crate::matrix::{dot, norm};
use crate::optim::{AdamParams, AdamState};
use crate::perceptual::{distance, distance_grad_x2, MetricKind};

/// Settings for direction refinement.
#[derive(Debug, Clone, Copy)]
pub struct FlattenConfig {
    pub learning_rate: f64,
    pub betas: (f64, f64),
    pub epsilon: f64,
    pub steps: usize,
    /// Manipulation intensity of the edit being cleaned up.
    pub intensity: f64,
    /// Perceptual term of the loss.
    pub metric: MetricKind,
}

impl Default for FlattenConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            betas: (0.0, 0.9),
            epsilon: 1e-8,
            steps: 200,
            intensity: 3.0,
            metric: MetricKind::PerceptualFixed,
        }
    }
}

impl FlattenConfig {
    fn adam_params(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.betas.0,
            beta2: self.betas.1,
            epsilon: self.epsilon,
        }
    }

    fn validate(&self) -> Result<()> {
        self.adam_params().validate()?;
        if self.metric == MetricKind::ExternalPrecomputed {
            return Err(Error::InvalidParam {
                name: "metric",
                message: "external-precomputed has no gradient to optimize".into(),
            });
        }
        if self.intensity == 0.0 || !self.intensity.is_finite() {
            return Err(Error::InvalidParam {
                name: "intensity",
                message: "must be nonzero (a zero edit makes the objective degenerate)".into(),
            });
        }
        Ok(())
    }
}

/// Record of one refinement run.
#[derive(Debug, Clone)]
pub struct RefinementTrace {
    /// Objective value per step: before each step and after the last, so
    /// `steps + 1` entries.
    pub losses: Vec<f64>,
    /// Frozen projection `<n, n0>` at each traced step; 1 by construction.
    pub preserved_components: Vec<f64>,
    pub initial_direction: Vec<f64>,
    /// Unit-norm refined direction (the lowest-loss iterate for descent
    /// runs).
    pub final_direction: Vec<f64>,
    /// Loss at the returned direction.
    pub final_loss: f64,
    /// Index of the first second-phase entry for two-phase runs.
    pub phase_boundary: Option<usize>,
}

impl RefinementTrace {
    pub fn initial_loss(&self) -> f64 {
        self.losses[0]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,loss\n");
        for (i, l) in self.losses.iter().enumerate() {
            out.push_str(&format!("{i},{l}\n"));
        }
        out
    }
}

/// Background-flattening loss: mean absolute pixel difference plus the
/// perceptual distance under `metric`.
pub fn bfl(metric: MetricKind, x1: &ImageTensor, x2: &ImageTensor) -> Result<f64> {
    Ok(distance(MetricKind::L1Mean, x1, x2)? + distance(metric, x1, x2)?)
}

/// Gradient of [`bfl`] with respect to the pixels of `x2`.
pub fn bfl_grad_x2(metric: MetricKind, x1: &ImageTensor, x2: &ImageTensor) -> Result<Vec<f64>> {
    let mut grad = distance_grad_x2(MetricKind::L1Mean, x1, x2)?;
    let perceptual = distance_grad_x2(metric, x1, x2)?;
    for (g, p) in grad.iter_mut().zip(&perceptual) {
        *g += p;
    }
    Ok(grad)
}

/// Shared state for the constrained edit `n(u) = n0 + u`, `u` orthogonal to
/// `n0`: the generated edit, its loss against a reference image, and the
/// loss gradient with respect to `u`.
struct EditObjective<'a> {
    generator: &'a Generator,
    z: &'a LatentCode,
    text: &'a TextEmbedding,
    base_direction: Vec<f64>,
    intensity: f64,
    metric: MetricKind,
}

impl EditObjective<'_> {
    fn direction(&self, u: &[f64]) -> Vec<f64> {
        self.base_direction
            .iter()
            .zip(u)
            .map(|(n0, ui)| n0 + ui)
            .collect()
    }

    fn edited_latent(&self, u: &[f64]) -> Result<LatentCode> {
        let n = self.direction(u);
        let nn = norm(&n);
        let values = self
            .z
            .values
            .iter()
            .zip(&n)
            .map(|(zv, nv)| zv + self.intensity * nv / nn)
            .collect();
        LatentCode::new(values)
    }

    fn edited_image(&self, u: &[f64]) -> Result<ImageTensor> {
        self.generator.generate(&self.edited_latent(u)?, self.text)
    }

    fn loss(&self, reference: &ImageTensor, u: &[f64]) -> Result<f64> {
        bfl(self.metric, reference, &self.edited_image(u)?)
    }

    /// Gradient of `bfl(reference, G(z + a n/||n||))` with respect to `u`,
    /// already projected onto the complement of the base direction.
    fn grad(&self, reference: &ImageTensor, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.direction(u);
        let nn = norm(&n);
        let z_edit = self.edited_latent(u)?;
        let image = self.generator.generate(&z_edit, self.text)?;
        let g_pixels = bfl_grad_x2(self.metric, reference, &image)?;
        let g_z = self
            .generator
            .generate_vjp_raw(&z_edit, self.text, &g_pixels)?;
        // Through n -> a n/||n||: a (I/||n|| - n n^T/||n||^3).
        let gn_dot = dot(&g_z, &n);
        let mut g_n: Vec<f64> = g_z
            .iter()
            .zip(&n)
            .map(|(g, nv)| self.intensity * (g / nn - nv * gn_dot / (nn * nn * nn)))
            .collect();
        // Freeze the base component.
        let along = dot(&g_n, &self.base_direction);
        for (g, b) in g_n.iter_mut().zip(&self.base_direction) {
            *g -= along * b;
        }
        Ok(g_n)
    }
}

fn project_out(u: &mut [f64], base: &[f64]) {
    let along = dot(u, base);
    for (ui, b) in u.iter_mut().zip(base) {
        *ui -= along * b;
    }
}

fn check_unit(direction: &[f64]) -> Result<()> {
    let n = norm(direction);
    if !n.is_finite() || (n - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnitNorm { norm: n });
    }
    Ok(())
}

fn ensure_finite(step: usize, grad: &[f64]) -> Result<()> {
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::GradientFailure { step });
    }
    Ok(())
}

/// Refines a unit direction to minimize the flattening loss between the
/// source sample and its edit, keeping the projection onto the original
/// direction frozen at 1.
///
/// The trace records the raw loss trajectory; the returned direction is the
/// lowest-loss iterate along it (renormalized), so the final loss never
/// exceeds the initial one.
pub fn flatten_direction(
    generator: &Generator,
    z: &LatentCode,
    text: &TextEmbedding,
    initial_direction: &[f64],
    cfg: &FlattenConfig,
) -> Result<RefinementTrace> {
    cfg.validate()?;
    check_unit(initial_direction)?;
    let source = generator.generate(z, text)?;
    let objective = EditObjective {
        generator,
        z,
        text,
        base_direction: initial_direction.to_vec(),
        intensity: cfg.intensity,
        metric: cfg.metric,
    };

    let dim = initial_direction.len();
    let mut u = vec![0.0; dim];
    let mut state = AdamState::new(dim, cfg.adam_params());
    let mut losses = Vec::with_capacity(cfg.steps + 1);
    let mut preserved = Vec::with_capacity(cfg.steps + 1);
    let mut best_loss = f64::INFINITY;
    let mut best_u = u.clone();

    for step in 0..=cfg.steps {
        let loss = objective.loss(&source, &u)?;
        if !loss.is_finite() {
            return Err(Error::GradientFailure { step });
        }
        losses.push(loss);
        preserved.push(dot(&objective.direction(&u), initial_direction));
        if loss < best_loss {
            best_loss = loss;
            best_u = u.clone();
        }
        if step == cfg.steps {
            break;
        }
        let grad = objective.grad(&source, &u)?;
        ensure_finite(step, &grad)?;
        state.step(&mut u, &grad);
        project_out(&mut u, initial_direction);
    }

    let n_best = objective.direction(&best_u);
    let nn = norm(&n_best);
    let final_direction: Vec<f64> = n_best.iter().map(|v| v / nn).collect();
    Ok(RefinementTrace {
        losses,
        preserved_components: preserved,
        initial_direction: initial_direction.to_vec(),
        final_direction,
        final_loss: best_loss,
        phase_boundary: None,
    })
}

/// Two-phase background removal.
///
/// Phase 1 pushes the leading direction to maximize the flattening loss
/// against the edit along the second direction, locating an extreme target
/// sample (the flat/white-background proxy). Phase 2 pulls the leading
/// direction's edit toward that target by minimizing the loss against it.
/// Both phases only accept improving steps, so the phase-1 trace is
/// non-decreasing and the phase-2 trace non-increasing. This is a
/// documented heuristic, not a guarantee about real backgrounds.
pub fn background_removal(
    generator: &Generator,
    z: &LatentCode,
    text: &TextEmbedding,
    directions: &crate::directions::DirectionSet,
    cfg: &FlattenConfig,
) -> Result<RefinementTrace> {
    cfg.validate()?;
    if directions.k() < 2 {
        return Err(Error::InvalidParam {
            name: "directions",
            message: "background removal needs at least 2 directions".into(),
        });
    }
    if cfg.steps < 1 {
        return Err(Error::InvalidParam {
            name: "steps",
            message: "background removal needs at least 1 step".into(),
        });
    }
    let base = directions.direction(0);
    check_unit(&base)?;
    let other = directions.direction(1);
    check_unit(&other)?;

    let objective = EditObjective {
        generator,
        z,
        text,
        base_direction: base.clone(),
        intensity: cfg.intensity,
        metric: cfg.metric,
    };
    let reference_edit = {
        let params = crate::editing::EditParams::new(other)?;
        let z_other = crate::editing::edit(z, &params, Some(cfg.intensity))?;
        generator.generate(&z_other, text)?
    };

    let dim = base.len();
    let phase1_steps = cfg.steps / 2;
    let phase2_steps = cfg.steps - phase1_steps - 1;

    let mut losses = Vec::with_capacity(cfg.steps + 1);
    let mut preserved = Vec::with_capacity(cfg.steps + 1);

    // Phase 1: greedy ascent of bfl(edit(base + u), edit(other)).
    let mut u = vec![0.0; dim];
    let mut state = AdamState::new(dim, cfg.adam_params());
    let mut current = objective.loss(&reference_edit, &u)?;
    losses.push(current);
    preserved.push(dot(&objective.direction(&u), &base));
    for step in 0..phase1_steps {
        let grad = objective.grad(&reference_edit, &u)?;
        ensure_finite(step, &grad)?;
        // Ascend: step against the negated gradient.
        let ascent: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut candidate = u.clone();
        state.step(&mut candidate, &ascent);
        project_out(&mut candidate, &base);
        let candidate_loss = objective.loss(&reference_edit, &candidate)?;
        if candidate_loss.is_finite() && candidate_loss >= current {
            u = candidate;
            current = candidate_loss;
        }
        losses.push(current);
        preserved.push(dot(&objective.direction(&u), &base));
    }
    let target = objective.edited_image(&u)?;

    // Phase 2: greedy descent of bfl(target, edit(base + v)) from v = 0.
    let mut v = vec![0.0; dim];
    let mut state = AdamState::new(dim, cfg.adam_params());
    let mut current = objective.loss(&target, &v)?;
    let phase_boundary = losses.len();
    losses.push(current);
    preserved.push(dot(&objective.direction(&v), &base));
    for step in 0..phase2_steps {
        let grad = objective.grad(&target, &v)?;
        ensure_finite(step, &grad)?;
        let mut candidate = v.clone();
        state.step(&mut candidate, &grad);
        project_out(&mut candidate, &base);
        let candidate_loss = objective.loss(&target, &candidate)?;
        if candidate_loss.is_finite() && candidate_loss <= current {
            v = candidate;
            current = candidate_loss;
        }
        losses.push(current);
        preserved.push(dot(&objective.direction(&v), &base));
    }

    let n_final = objective.direction(&v);
    let nn = norm(&n_final);
    Ok(RefinementTrace {
        losses,
        preserved_components: preserved,
        initial_direction: base,
        final_direction: n_final.iter().map(|x| x / nn).collect(),
        final_loss: current,
        phase_boundary: Some(phase_boundary),
    })
}
