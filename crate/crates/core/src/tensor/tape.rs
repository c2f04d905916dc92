use std::sync::Arc;

use rand::Rng;

use super::{check_shape, Element, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

struct Node<E> {
    shape: Vec<usize>,
    value: Arc<Vec<E>>,
    requires_grad: bool,
    op: Op<E>,
}

enum Op<E> {
    /// Output of an operation none of whose inputs needed gradients.
    Constant,
    Leaf {
        key: Option<usize>,
    },
    MatMul {
        a: Var,
        b: Var,
    },
    Add {
        a: Var,
        b: Var,
    },
    AddBias {
        x: Var,
        bias: Var,
    },
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<E>,
        rstd: Vec<E>,
    },
    Gelu {
        x: Var,
    },
    Softmax {
        x: Var,
    },
    Dropout {
        x: Var,
        mask: Vec<E>,
    },
    GatherRows {
        x: Var,
        rows: Vec<usize>,
    },
    Reshape {
        x: Var,
    },
    Sum {
        x: Var,
    },
    CrossEntropy {
        logits: Var,
        targets: Vec<usize>,
        probs: Vec<E>,
    },
    CausalAttention {
        qkv: Var,
        probs: Vec<E>,
        batch: usize,
        seq: usize,
        heads: usize,
    },
}

/// Gradient of the loss with respect to one leaf.
#[derive(Debug, Clone)]
pub struct LeafGrad<E> {
    pub var: Var,
    /// Key supplied to [`Tape::param`], if the leaf was registered with one.
    pub key: Option<usize>,
    pub grad: Vec<E>,
}

/// Leaf gradients produced by [`Tape::backward`], in tape order.
#[derive(Debug, Clone, Default)]
pub struct Gradients<E> {
    entries: Vec<LeafGrad<E>>,
}

impl<E> Gradients<E> {
    pub fn get(&self, var: Var) -> Option<&[E]> {
        self.entries
            .iter()
            .find(|e| e.var == var)
            .map(|e| e.grad.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = &LeafGrad<E>> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<E> IntoIterator for Gradients<E> {
    type Item = LeafGrad<E>;
    type IntoIter = std::vec::IntoIter<LeafGrad<E>>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.into_iter()
    }
}

/// Record of the operations executed during one forward pass.
pub struct Tape<E: Element = f32> {
    nodes: Vec<Node<E>>,
    grad_enabled: bool,
}

impl<E: Element> Default for Tape<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E: Element> Tape<E> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            grad_enabled: true,
        }
    }

    /// A tape that treats every leaf as frozen; used for evaluation.
    pub fn no_grad() -> Self {
        Tape {
            nodes: Vec::new(),
            grad_enabled: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of recorded nodes that will take part in backward.
    pub fn differentiable_len(&self) -> usize {
        self.nodes.iter().filter(|n| n.requires_grad).count()
    }

    pub fn value(&self, var: Var) -> &[E] {
        &self.nodes[var.0].value
    }

    pub fn shape(&self, var: Var) -> &[usize] {
        &self.nodes[var.0].shape
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    /// Copies a recorded value out as a standalone tensor.
    pub fn to_tensor(&self, var: Var) -> Tensor<E> {
        let node = &self.nodes[var.0];
        Tensor::new(node.shape.clone(), node.value.to_vec()).expect("recorded shapes are valid")
    }

    /// Registers a leaf tensor. Its gradient is reported under its `Var`.
    pub fn leaf(&mut self, tensor: &Tensor<E>) -> Var {
        self.push_leaf(tensor, None)
    }

    /// Registers a parameter; its gradient is reported with `key` attached.
    pub fn param(&mut self, key: usize, tensor: &Tensor<E>) -> Var {
        self.push_leaf(tensor, Some(key))
    }

    fn push_leaf(&mut self, tensor: &Tensor<E>, key: Option<usize>) -> Var {
        let requires_grad = self.grad_enabled && tensor.requires_grad();
        self.nodes.push(Node {
            shape: tensor.shape().to_vec(),
            value: tensor.shared_data(),
            requires_grad,
            op: Op::Leaf { key },
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, shape: impl Into<Vec<usize>>, data: Vec<E>) -> Result<Var> {
        let t = Tensor::new(shape, data)?;
        Ok(self.leaf(&t))
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<E>, inputs: &[Var], op: Op<E>) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            shape,
            value: Arc::new(value),
            requires_grad,
            op: if requires_grad { op } else { Op::Constant },
        });
        Var(self.nodes.len() - 1)
    }

    fn last_dim(&self, var: Var) -> usize {
        *self.nodes[var.0].shape.last().expect("rank >= 1")
    }

    /// Standard matrix product of `[m, k]` and `[k, n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs: sa.to_vec(),
                rhs: sb.to_vec(),
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![E::zero(); m * n];
        E::gemm(
            m,
            k,
            n,
            self.value(a),
            (k, 1),
            self.value(b),
            (n, 1),
            E::zero(),
            &mut out,
            (n, 1),
        );
        Ok(self.push(vec![m, n], out, &[a, b], Op::MatMul { a, b }))
    }

    /// Elementwise sum of two tensors of identical shape.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::ShapeMismatch {
                op: "add",
                lhs: self.shape(a).to_vec(),
                rhs: self.shape(b).to_vec(),
            });
        }
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| x + y)
            .collect();
        let shape = self.shape(a).to_vec();
        Ok(self.push(shape, out, &[a, b], Op::Add { a, b }))
    }

    /// Adds a bias vector along the last axis.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let n = self.last_dim(x);
        if self.shape(bias) != [n] {
            return Err(Error::ShapeMismatch {
                op: "add_bias",
                lhs: self.shape(x).to_vec(),
                rhs: self.shape(bias).to_vec(),
            });
        }
        let b = self.value(bias);
        let out = self
            .value(x)
            .chunks_exact(n)
            .flat_map(|row| row.iter().zip(b).map(|(&v, &c)| v + c))
            .collect();
        let shape = self.shape(x).to_vec();
        Ok(self.push(shape, out, &[x, bias], Op::AddBias { x, bias }))
    }

    /// Standardizes each last-axis row (population variance), then applies
    /// `gamma * x̂ + beta`.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let d = self.last_dim(x);
        for p in [gamma, beta] {
            if self.shape(p) != [d] {
                return Err(Error::ShapeMismatch {
                    op: "layer_norm",
                    lhs: self.shape(x).to_vec(),
                    rhs: self.shape(p).to_vec(),
                });
            }
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidShape {
                op: "layer_norm",
                shape: self.shape(x).to_vec(),
                reason: format!("eps must be finite and non-negative, got {eps}"),
            });
        }
        let eps = E::of(eps);
        let inv_d = E::one() / E::of(d as f64);
        let (g, b) = (self.value(gamma), self.value(beta));
        let xv = self.value(x);
        let rows = xv.len() / d;
        let mut xhat = Vec::with_capacity(xv.len());
        let mut rstd = Vec::with_capacity(rows);
        let mut out = Vec::with_capacity(xv.len());
        for row in xv.chunks_exact(d) {
            let mean = row.iter().copied().sum::<E>() * inv_d;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<E>() * inv_d;
            let r = E::one() / (var + eps).sqrt();
            rstd.push(r);
            for j in 0..d {
                let h = (row[j] - mean) * r;
                xhat.push(h);
                out.push(g[j] * h + b[j]);
            }
        }
        let shape = self.shape(x).to_vec();
        Ok(self.push(
            shape,
            out,
            &[x, gamma, beta],
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                rstd,
            },
        ))
    }

    /// Tanh-approximation GELU.
    pub fn gelu(&mut self, x: Var) -> Var {
        let out = self.value(x).iter().map(|&v| gelu(v)).collect();
        let shape = self.shape(x).to_vec();
        self.push(shape, out, &[x], Op::Gelu { x })
    }

    /// Softmax along the last axis, with max subtraction.
    pub fn softmax(&mut self, x: Var) -> Var {
        let c = self.last_dim(x);
        let mut out = self.value(x).to_vec();
        out.chunks_exact_mut(c).for_each(softmax_in_place);
        let shape = self.shape(x).to_vec();
        self.push(shape, out, &[x], Op::Softmax { x })
    }

    /// Inverted dropout: zeroes each element with probability `rate` and
    /// rescales survivors. A zero rate returns `x` unchanged.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, rate: f64, rng: &mut R) -> Var {
        if rate <= 0.0 {
            return x;
        }
        let scale = E::of(1.0 / (1.0 - rate));
        let mask: Vec<E> = (0..self.value(x).len())
            .map(|_| {
                if rng.random::<f64>() < rate {
                    E::zero()
                } else {
                    scale
                }
            })
            .collect();
        let out = self
            .value(x)
            .iter()
            .zip(&mask)
            .map(|(&v, &m)| v * m)
            .collect();
        let shape = self.shape(x).to_vec();
        self.push(shape, out, &[x], Op::Dropout { x, mask })
    }

    /// Selects rows of `x` viewed as `[rows, last_dim]`. Used for embedding
    /// lookups and for picking one position per sequence.
    pub fn gather_rows(&mut self, x: Var, rows: &[usize]) -> Result<Var> {
        let n = self.last_dim(x);
        let available = self.value(x).len() / n;
        if let Some(&bad) = rows.iter().find(|&&r| r >= available) {
            return Err(Error::InvalidShape {
                op: "gather_rows",
                shape: self.shape(x).to_vec(),
                reason: format!("row index {bad} out of range ({available} rows)"),
            });
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput("gather_rows index list"));
        }
        let src = self.value(x);
        let mut out = Vec::with_capacity(rows.len() * n);
        for &r in rows {
            out.extend_from_slice(&src[r * n..(r + 1) * n]);
        }
        Ok(self.push(
            vec![rows.len(), n],
            out,
            &[x],
            Op::GatherRows {
                x,
                rows: rows.to_vec(),
            },
        ))
    }

    /// Reinterprets the shape without copying.
    pub fn reshape(&mut self, x: Var, shape: impl Into<Vec<usize>>) -> Result<Var> {
        let shape = shape.into();
        check_shape("reshape", &shape)?;
        if shape.iter().product::<usize>() != self.value(x).len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                lhs: self.shape(x).to_vec(),
                rhs: shape,
            });
        }
        let requires_grad = self.nodes[x.0].requires_grad;
        self.nodes.push(Node {
            shape,
            value: Arc::clone(&self.nodes[x.0].value),
            requires_grad,
            op: if requires_grad {
                Op::Reshape { x }
            } else {
                Op::Constant
            },
        });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Sum of all elements, as a `[1]` tensor.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).iter().copied().sum::<E>();
        self.push(vec![1], vec![s], &[x], Op::Sum { x })
    }

    /// Mean negative log-likelihood of `targets` under softmax(`logits`),
    /// evaluated through log-sum-exp.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let shape = self.shape(logits);
        if shape.len() != 2 || shape[0] != targets.len() {
            return Err(Error::ShapeMismatch {
                op: "cross_entropy",
                lhs: shape.to_vec(),
                rhs: vec![targets.len()],
            });
        }
        let c = shape[1];
        if let Some((row, &target)) = targets.iter().enumerate().find(|(_, &t)| t >= c) {
            return Err(Error::TargetOutOfRange {
                row,
                target,
                classes: c,
            });
        }
        let z = self.value(logits);
        let mut total = E::zero();
        let mut probs = Vec::with_capacity(z.len());
        for (row, &t) in z.chunks_exact(c).zip(targets) {
            let max = row.iter().copied().fold(E::neg_infinity(), E::max);
            let sum_exp = row.iter().map(|&v| (v - max).exp()).sum::<E>();
            let lse = max + sum_exp.ln();
            total += lse - row[t];
            probs.extend(row.iter().map(|&v| (v - lse).exp()));
        }
        let loss = total / E::of(targets.len() as f64);
        Ok(self.push(
            vec![1],
            vec![loss],
            &[logits],
            Op::CrossEntropy {
                logits,
                targets: targets.to_vec(),
                probs,
            },
        ))
    }

    /// Multi-head causal self-attention over a fused `[batch*seq, 3*d]`
    /// query/key/value projection, returning `[batch*seq, d]`.
    ///
    /// Query position `t` attends to key positions `j <= t` whose
    /// `key_mask` entry is nonzero; every other score is treated as -inf.
    pub fn causal_attention(
        &mut self,
        qkv: Var,
        key_mask: &[u8],
        batch: usize,
        seq: usize,
        heads: usize,
    ) -> Result<Var> {
        let shape = self.shape(qkv).to_vec();
        if shape.len() != 2 || shape[0] != batch * seq || !shape[1].is_multiple_of(3 * heads) {
            return Err(Error::InvalidShape {
                op: "causal_attention",
                shape,
                reason: format!("expected [{}, 3*d] with d divisible by {heads}", batch * seq),
            });
        }
        if key_mask.len() != batch * seq {
            return Err(Error::ShapeMismatch {
                op: "causal_attention",
                lhs: shape,
                rhs: vec![key_mask.len()],
            });
        }
        let d = shape[1] / 3;
        let dh = d / heads;
        let scale = E::of(1.0 / (dh as f64).sqrt());
        let src = self.value(qkv);
        let mut out = vec![E::zero(); batch * seq * d];
        let mut probs = vec![E::zero(); batch * heads * seq * seq];
        let mut scores = vec![E::zero(); seq * seq];
        for b in 0..batch {
            let mask = &key_mask[b * seq..(b + 1) * seq];
            for h in 0..heads {
                let q_off = b * seq * 3 * d + h * dh;
                let (k_off, v_off) = (q_off + d, q_off + 2 * d);
                E::gemm(
                    seq,
                    dh,
                    seq,
                    &src[q_off..],
                    (3 * d, 1),
                    &src[k_off..],
                    (1, 3 * d),
                    E::zero(),
                    &mut scores,
                    (seq, 1),
                );
                let p = &mut probs[(b * heads + h) * seq * seq..][..seq * seq];
                for t in 0..seq {
                    let row = &scores[t * seq..(t + 1) * seq];
                    let prow = &mut p[t * seq..(t + 1) * seq];
                    let allowed = |j: usize| mask[j] != 0;
                    let mut max = E::neg_infinity();
                    for j in (0..=t).filter(|&j| allowed(j)) {
                        max = max.max(row[j] * scale);
                    }
                    if max == E::neg_infinity() {
                        continue;
                    }
                    let mut denom = E::zero();
                    for j in (0..=t).filter(|&j| allowed(j)) {
                        let e = (row[j] * scale - max).exp();
                        prow[j] = e;
                        denom += e;
                    }
                    for v in prow[..=t].iter_mut() {
                        *v /= denom;
                    }
                }
                E::gemm(
                    seq,
                    seq,
                    dh,
                    p,
                    (seq, 1),
                    &src[v_off..],
                    (3 * d, 1),
                    E::zero(),
                    &mut out[b * seq * d + h * dh..],
                    (d, 1),
                );
            }
        }
        Ok(self.push(
            vec![batch * seq, d],
            out,
            &[qkv],
            Op::CausalAttention {
                qkv,
                probs,
                batch,
                seq,
                heads,
            },
        ))
    }

    /// Replays the tape in reverse from `loss` and returns the gradient of
    /// every leaf that requires one. Consumes the tape.
    pub fn backward(self, loss: Var) -> Result<Gradients<E>> {
        let loss_node = &self.nodes[loss.0];
        if loss_node.value.len() != 1 {
            return Err(Error::NonScalarLoss(loss_node.shape.clone()));
        }
        let mut grads: Vec<Option<Vec<E>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(vec![E::one()]);
        let mut leaves = Vec::new();
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.backward_node(Var(i), node, g, &mut grads, &mut leaves);
        }
        leaves.reverse();
        Ok(Gradients { entries: leaves })
    }

    fn backward_node(
        &self,
        var: Var,
        node: &Node<E>,
        g: Vec<E>,
        grads: &mut [Option<Vec<E>>],
        leaves: &mut Vec<LeafGrad<E>>,
    ) {
        let nodes = &self.nodes;
        macro_rules! acc {
            ($v:expr) => {
                slot(nodes, grads, $v)
            };
        }
        match &node.op {
            Op::Constant => {}
            Op::Leaf { key } => leaves.push(LeafGrad {
                var,
                key: *key,
                grad: g,
            }),
            Op::MatMul { a, b } => {
                let (sa, sb) = (&nodes[a.0].shape, &nodes[b.0].shape);
                let (m, k, n) = (sa[0], sa[1], sb[1]);
                if let Some(ga) = acc!(*a) {
                    // dA = dC · Bᵀ
                    E::gemm(
                        m,
                        n,
                        k,
                        &g,
                        (n, 1),
                        &nodes[b.0].value,
                        (1, n),
                        E::one(),
                        ga,
                        (k, 1),
                    );
                }
                if let Some(gb) = acc!(*b) {
                    // dB = Aᵀ · dC
                    E::gemm(
                        k,
                        m,
                        n,
                        &nodes[a.0].value,
                        (1, k),
                        &g,
                        (n, 1),
                        E::one(),
                        gb,
                        (n, 1),
                    );
                }
            }
            Op::Add { a, b } => {
                for v in [*a, *b] {
                    if let Some(dst) = acc!(v) {
                        add_into(dst, &g);
                    }
                }
            }
            Op::AddBias { x, bias } => {
                if let Some(gx) = acc!(*x) {
                    add_into(gx, &g);
                }
                if let Some(gb) = acc!(*bias) {
                    let n = gb.len();
                    for row in g.chunks_exact(n) {
                        add_into(gb, row);
                    }
                }
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                rstd,
            } => {
                let gam = &nodes[gamma.0].value;
                let d = gam.len();
                if let Some(gg) = acc!(*gamma) {
                    for (grow, hrow) in g.chunks_exact(d).zip(xhat.chunks_exact(d)) {
                        for j in 0..d {
                            gg[j] += grow[j] * hrow[j];
                        }
                    }
                }
                if let Some(gb) = acc!(*beta) {
                    for grow in g.chunks_exact(d) {
                        add_into(gb, grow);
                    }
                }
                if let Some(gx) = acc!(*x) {
                    let inv_d = E::one() / E::of(d as f64);
                    let mut dxhat = vec![E::zero(); d];
                    for (((grow, hrow), &r), out) in g
                        .chunks_exact(d)
                        .zip(xhat.chunks_exact(d))
                        .zip(rstd)
                        .zip(gx.chunks_exact_mut(d))
                    {
                        let mut mean1 = E::zero();
                        let mut mean2 = E::zero();
                        for j in 0..d {
                            dxhat[j] = grow[j] * gam[j];
                            mean1 += dxhat[j];
                            mean2 += dxhat[j] * hrow[j];
                        }
                        mean1 *= inv_d;
                        mean2 *= inv_d;
                        for j in 0..d {
                            out[j] += r * (dxhat[j] - mean1 - hrow[j] * mean2);
                        }
                    }
                }
            }
            Op::Gelu { x } => {
                if let Some(gx) = acc!(*x) {
                    for ((dst, &v), &gy) in gx.iter_mut().zip(nodes[x.0].value.iter()).zip(&g) {
                        *dst += gy * gelu_derivative(v);
                    }
                }
            }
            Op::Softmax { x } => {
                if let Some(gx) = acc!(*x) {
                    let c = *node.shape.last().expect("rank >= 1");
                    for ((grow, yrow), out) in g
                        .chunks_exact(c)
                        .zip(node.value.chunks_exact(c))
                        .zip(gx.chunks_exact_mut(c))
                    {
                        let dot = grow.iter().zip(yrow).map(|(&a, &b)| a * b).sum::<E>();
                        for j in 0..c {
                            out[j] += yrow[j] * (grow[j] - dot);
                        }
                    }
                }
            }
            Op::Dropout { x, mask } => {
                if let Some(gx) = acc!(*x) {
                    for ((dst, &gy), &m) in gx.iter_mut().zip(&g).zip(mask) {
                        *dst += gy * m;
                    }
                }
            }
            Op::GatherRows { x, rows } => {
                if let Some(gx) = acc!(*x) {
                    let n = *node.shape.last().expect("rank >= 1");
                    for (&r, grow) in rows.iter().zip(g.chunks_exact(n)) {
                        add_into(&mut gx[r * n..(r + 1) * n], grow);
                    }
                }
            }
            Op::Reshape { x } => {
                if let Some(gx) = acc!(*x) {
                    add_into(gx, &g);
                }
            }
            Op::Sum { x } => {
                if let Some(gx) = acc!(*x) {
                    let s = g[0];
                    gx.iter_mut().for_each(|v| *v += s);
                }
            }
            Op::CrossEntropy {
                logits,
                targets,
                probs,
            } => {
                if let Some(gz) = acc!(*logits) {
                    let c = probs.len() / targets.len();
                    let scale = g[0] / E::of(targets.len() as f64);
                    for (row, &t) in targets.iter().enumerate() {
                        for j in 0..c {
                            let onehot = if j == t { E::one() } else { E::zero() };
                            gz[row * c + j] += scale * (probs[row * c + j] - onehot);
                        }
                    }
                }
            }
            Op::CausalAttention {
                qkv,
                probs,
                batch,
                seq,
                heads,
            } => {
                if let Some(gqkv) = acc!(*qkv) {
                    attention_backward(
                        &nodes[qkv.0].value,
                        probs,
                        &g,
                        gqkv,
                        *batch,
                        *seq,
                        *heads,
                    );
                }
            }
        }
    }
}

/// Gradient accumulator for an input, or None when that input is frozen.
fn slot<'g, E: Element>(
    nodes: &[Node<E>],
    grads: &'g mut [Option<Vec<E>>],
    v: Var,
) -> Option<&'g mut Vec<E>> {
    let n = &nodes[v.0];
    if !n.requires_grad {
        return None;
    }
    Some(grads[v.0].get_or_insert_with(|| vec![E::zero(); n.value.len()]))
}

fn add_into<E: Element>(dst: &mut [E], src: &[E]) {
    dst.iter_mut().zip(src).for_each(|(d, &s)| *d += s);
}

fn softmax_in_place<E: Element>(row: &mut [E]) {
    let max = row.iter().copied().fold(E::neg_infinity(), E::max);
    let mut sum = E::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    row.iter_mut().for_each(|v| *v /= sum);
}

const GELU_COEFF: f64 = 0.044715;

fn gelu<E: Element>(x: E) -> E {
    let c = E::of((2.0 / std::f64::consts::PI).sqrt());
    let u = c * (x + E::of(GELU_COEFF) * x * x * x);
    E::of(0.5) * x * (E::one() + u.tanh())
}

fn gelu_derivative<E: Element>(x: E) -> E {
    let c = E::of((2.0 / std::f64::consts::PI).sqrt());
    let a = E::of(GELU_COEFF);
    let t = (c * (x + a * x * x * x)).tanh();
    let half = E::of(0.5);
    half * (E::one() + t) + half * x * (E::one() - t * t) * c * (E::one() + E::of(3.0) * a * x * x)
}

#[allow(clippy::too_many_arguments)]
fn attention_backward<E: Element>(
    src: &[E],
    probs: &[E],
    g: &[E],
    gqkv: &mut [E],
    batch: usize,
    seq: usize,
    heads: usize,
) {
    let d = g.len() / (batch * seq);
    let dh = d / heads;
    let scale = E::of(1.0 / (dh as f64).sqrt());
    let mut dp = vec![E::zero(); seq * seq];
    for b in 0..batch {
        for h in 0..heads {
            let q_off = b * seq * 3 * d + h * dh;
            let (k_off, v_off) = (q_off + d, q_off + 2 * d);
            let g_off = b * seq * d + h * dh;
            let p = &probs[(b * heads + h) * seq * seq..][..seq * seq];
            // dP = dOut · Vᵀ
            E::gemm(
                seq,
                dh,
                seq,
                &g[g_off..],
                (d, 1),
                &src[v_off..],
                (1, 3 * d),
                E::zero(),
                &mut dp,
                (seq, 1),
            );
            // dV += Pᵀ · dOut
            E::gemm(
                seq,
                seq,
                dh,
                p,
                (1, seq),
                &g[g_off..],
                (d, 1),
                E::one(),
                &mut gqkv[v_off..],
                (3 * d, 1),
            );
            // dS = P ⊙ (dP - rowsum(P ⊙ dP)), folded with the score scale.
            for t in 0..seq {
                let prow = &p[t * seq..(t + 1) * seq];
                let drow = &mut dp[t * seq..(t + 1) * seq];
                let dot = prow[..=t]
                    .iter()
                    .zip(&drow[..=t])
                    .map(|(&a, &b)| a * b)
                    .sum::<E>();
                for j in 0..seq {
                    drow[j] = if j <= t {
                        prow[j] * (drow[j] - dot) * scale
                    } else {
                        E::zero()
                    };
                }
            }
            // dQ += dS · K
            E::gemm(
                seq,
                seq,
                dh,
                &dp,
                (seq, 1),
                &src[k_off..],
                (3 * d, 1),
                E::one(),
                &mut gqkv[q_off..],
                (3 * d, 1),
            );
            // dK += dSᵀ · Q
            E::gemm(
                seq,
                seq,
                dh,
                &dp,
                (1, seq),
                &src[q_off..],
                (3 * d, 1),
                E::one(),
                &mut gqkv[k_off..],
                (3 * d, 1),
            );
        }
    }
}
