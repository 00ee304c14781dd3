use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::seeded_rng;

fn check_dim<T>(expected: usize, v: &[T]) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected,
            found: v.len(),
        })
    }
}

/// Component mean and standard deviation `sqrt(var + eps)`, population variance.
pub fn moments<T: Scalar>(x: &[T], eps: T) -> (T, T) {
    let n = T::cast(x.len());
    let mu = x.iter().copied().sum::<T>() / n;
    let var = x.iter().map(|&v| (v - mu) * (v - mu)).sum::<T>() / n;
    (mu, (var + eps).sqrt())
}

/// `b + g * (x - mean(x)) / sd(x)` with population sd and optional `eps`
/// added to the variance.
///
/// A constant `x` with `eps = 0` is an error; the reported layer is 0 for
/// calls made outside a stack.
pub fn layer_norm<T: Scalar>(x: &[T], g: &[T], b: &[T], eps: T) -> Result<Vec<T>> {
    check_dim(x.len(), g)?;
    check_dim(x.len(), b)?;
    if x.is_empty() {
        return Err(Error::Empty("layer norm input"));
    }
    let (mu, sigma) = moments(x, eps);
    if !(sigma > T::zero()) {
        return Err(Error::ZeroVariance { layer: 0 });
    }
    Ok(x.iter()
        .zip(g)
        .zip(b)
        .map(|((&xi, &gi), &bi)| bi + gi * (xi - mu) / sigma)
        .collect())
}

/// The map applied before the residual connection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubLayer<T> {
    Zero,
    Identity,
    /// Row-major `dim x dim` matrix.
    Linear(Vec<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubLayerKind {
    Zero,
    Identity,
    #[default]
    Linear,
}

impl<T: Scalar> SubLayer<T> {
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        match self {
            SubLayer::Zero => vec![T::zero(); x.len()],
            SubLayer::Identity => x.to_vec(),
            SubLayer::Linear(m) => m
                .chunks_exact(x.len())
                .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
                .collect(),
        }
    }

    pub fn kind(&self) -> SubLayerKind {
        match self {
            SubLayer::Zero => SubLayerKind::Zero,
            SubLayer::Identity => SubLayerKind::Identity,
            SubLayer::Linear(_) => SubLayerKind::Linear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams<T> {
    pub sub: SubLayer<T>,
    pub gain: Vec<T>,
    pub bias: Vec<T>,
}

/// A residual stack: `x_{l+1} = LayerNorm_l(Sub_l(x_l) + x_l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackConfig<T> {
    pub dim: usize,
    pub layers: Vec<LayerParams<T>>,
    pub eps: T,
}

impl<T: Scalar> StackConfig<T> {
    /// Checks the invariants: at least one layer, `dim >= 2`, finite
    /// parameters of matching size.
    pub fn new(dim: usize, layers: Vec<LayerParams<T>>, eps: T) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParameter("stack needs at least one layer".into()));
        }
        if dim < 2 {
            return Err(Error::InvalidParameter("stack dimension must be at least 2".into()));
        }
        if !(eps >= T::zero()) {
            return Err(Error::InvalidParameter("eps must be nonnegative".into()));
        }
        for l in &layers {
            check_dim(dim, &l.gain)?;
            check_dim(dim, &l.bias)?;
            if let SubLayer::Linear(m) = &l.sub {
                check_dim(dim * dim, m)?;
            }
            if l.gain.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("gains and biases must be finite".into()));
            }
        }
        Ok(Self { dim, layers, eps })
    }

    /// Unit gains, zero biases.
    pub fn plain(layers: usize, dim: usize, kind: SubLayerKind) -> Result<Self> {
        let sub = match kind {
            SubLayerKind::Zero => SubLayer::Zero,
            SubLayerKind::Identity => SubLayer::Identity,
            SubLayerKind::Linear => {
                let mut m = vec![T::zero(); dim * dim];
                for i in 0..dim {
                    m[i * dim + i] = T::one();
                }
                SubLayer::Linear(m)
            }
        };
        let p = LayerParams {
            sub,
            gain: vec![T::one(); dim],
            bias: vec![T::zero(); dim],
        };
        Self::new(dim, vec![p; layers], T::zero())
    }

    /// Gains uniform in [0.5, 1.5], biases N(0, 0.1^2) and, for linear
    /// sub-layers, matrix entries N(0, 1/dim).
    pub fn random(layers: usize, dim: usize, kind: SubLayerKind, seed: u64) -> Result<Self> {
        let mut rng = seeded_rng(seed);
        let gain_dist = Uniform::new(0.5f64, 1.5).expect("valid range");
        let scale = 1.0 / (dim.max(1) as f64).sqrt();
        let params = (0..layers)
            .map(|_| {
                let sub = match kind {
                    SubLayerKind::Zero => SubLayer::Zero,
                    SubLayerKind::Identity => SubLayer::Identity,
                    SubLayerKind::Linear => SubLayer::Linear(
                        (0..dim * dim).map(|_| T::cast(scale * normal(&mut rng))).collect(),
                    ),
                };
                LayerParams {
                    sub,
                    gain: (0..dim).map(|_| T::cast(gain_dist.sample(&mut rng))).collect(),
                    bias: (0..dim).map(|_| T::cast(0.1 * normal(&mut rng))).collect(),
                }
            })
            .collect();
        Self::new(dim, params, T::zero())
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }
}

pub(crate) fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// One input position: word, position and segment vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenInput<T> {
    pub word: Vec<T>,
    pub position: Vec<T>,
    pub segment: Vec<T>,
}

impl<T: Scalar> TokenInput<T> {
    /// `word + position`, the segment-free part of the input.
    pub fn base(&self) -> Vec<T> {
        self.word.iter().zip(&self.position).map(|(&w, &p)| w + p).collect()
    }

    /// `word + position + segment`.
    pub fn combined(&self) -> Vec<T> {
        self.base().iter().zip(&self.segment).map(|(&x, &s)| x + s).collect()
    }

    fn check(&self, dim: usize) -> Result<()> {
        check_dim(dim, &self.word)?;
        check_dim(dim, &self.position)?;
        check_dim(dim, &self.segment)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerTrace<T> {
    pub input: Vec<T>,
    pub sub_output: Vec<T>,
    pub pre_norm: Vec<T>,
    pub mean: T,
    pub sigma: T,
    pub output: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForwardTrace<T> {
    pub layers: Vec<LayerTrace<T>>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn output(&self) -> &[T] {
        &self.layers.last().expect("trace has at least one layer").output
    }
}

/// Runs the stack from `x_1 = word + position + segment`, recording every
/// intermediate. A zero sd names its 1-based layer.
pub fn forward<T: Scalar>(stack: &StackConfig<T>, token: &TokenInput<T>) -> Result<(Vec<T>, ForwardTrace<T>)> {
    token.check(stack.dim)?;
    let mut x = token.combined();
    let mut layers = Vec::with_capacity(stack.depth());
    for (l, p) in stack.layers.iter().enumerate() {
        let sub_output = p.sub.apply(&x);
        let pre_norm: Vec<T> = sub_output.iter().zip(&x).map(|(&s, &v)| s + v).collect();
        let (mean, sigma) = moments(&pre_norm, stack.eps);
        let output = layer_norm(&pre_norm, &p.gain, &p.bias, stack.eps).map_err(|e| match e {
            Error::ZeroVariance { .. } => Error::ZeroVariance { layer: l + 1 },
            e => e,
        })?;
        layers.push(LayerTrace {
            input: std::mem::replace(&mut x, output.clone()),
            sub_output,
            pre_norm,
            mean,
            sigma,
            output,
        });
    }
    Ok((x, ForwardTrace { layers }))
}

/// First-layer output written as a sum of separately computed terms, each a
/// product with `g / sigma`: bias, sub-layer output, segment-free input,
/// component mean (subtracted) and segment vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerExpansion<T> {
    pub bias: Vec<T>,
    pub sublayer: Vec<T>,
    pub residual: Vec<T>,
    pub mean: Vec<T>,
    pub segment: Vec<T>,
    pub sum: Vec<T>,
    /// First-layer output from [`forward`].
    pub output: Vec<T>,
    /// `output - segment`.
    pub o_tilde: Vec<T>,
    pub sigma: T,
    /// Largest |sum - output| over components.
    pub max_residual: T,
}

/// Expands the first layer term by term. The terms are computed from the
/// token and the layer parameters alone, then compared with [`forward`].
pub fn expand_layer<T: Scalar>(stack: &StackConfig<T>, token: &TokenInput<T>) -> Result<LayerExpansion<T>> {
    let (_, trace) = forward(stack, token)?;
    let p = &stack.layers[0];
    let x = token.combined();
    let sub = p.sub.apply(&x);
    let pre: Vec<T> = sub.iter().zip(&x).map(|(&s, &v)| s + v).collect();
    let (mu, sigma) = moments(&pre, stack.eps);
    if !(sigma > T::zero()) {
        return Err(Error::ZeroVariance { layer: 1 });
    }
    let inv = T::one() / sigma;
    let scale: Vec<T> = p.gain.iter().map(|&g| g * inv).collect();
    let times = |v: &[T]| -> Vec<T> { scale.iter().zip(v).map(|(&s, &x)| s * x).collect() };

    let bias = p.bias.clone();
    let sublayer = times(&sub);
    let residual = times(&token.base());
    let mean: Vec<T> = scale.iter().map(|&s| -(s * mu)).collect();
    let segment = times(&token.segment);
    let sum: Vec<T> = (0..stack.dim)
        .map(|d| bias[d] + sublayer[d] + residual[d] + mean[d] + segment[d])
        .collect();
    let output = trace.layers[0].output.clone();
    let o_tilde = output.iter().zip(&segment).map(|(&o, &s)| o - s).collect();
    let max_residual = crate::scalar::max_abs_diff(&sum, &output);
    Ok(LayerExpansion {
        bias,
        sublayer,
        residual,
        mean,
        segment,
        sum,
        output,
        o_tilde,
        sigma,
        max_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccumulatedTerm<T> {
    /// `(g^1 * ... * g^L) * (1/sigma^1 * ... * 1/sigma^L) * seg`.
    pub term: Vec<T>,
    /// Final output minus `term`.
    pub o_tilde: Vec<T>,
}

/// Segment term carried to the last layer, in product form, using the
/// traced sds.
pub fn accumulated_segment_term<T: Scalar>(
    trace: &ForwardTrace<T>,
    stack: &StackConfig<T>,
    seg: &[T],
) -> Result<AccumulatedTerm<T>> {
    if trace.layers.len() != stack.depth() || trace.layers.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "trace has {} layers, stack has {}",
            trace.layers.len(),
            stack.depth()
        )));
    }
    check_dim(stack.dim, seg)?;
    let mut gains = vec![T::one(); stack.dim];
    let mut inv = T::one();
    for (p, t) in stack.layers.iter().zip(&trace.layers) {
        for (g, &gl) in gains.iter_mut().zip(&p.gain) {
            *g *= gl;
        }
        inv /= t.sigma;
    }
    let term: Vec<T> = gains.iter().zip(seg).map(|(&g, &s)| g * inv * s).collect();
    let o_tilde = trace.output().iter().zip(&term).map(|(&o, &t)| o - t).collect();
    Ok(AccumulatedTerm { term, o_tilde })
}
