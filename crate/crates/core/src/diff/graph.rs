//! Reverse-mode differentiation over a static DAG of array operations.
//!
//! A [`Graph`] is built once through [`GraphBuilder`], with shapes fixed at
//! construction, and is immutable afterwards. Evaluation and gradients bind
//! leaf names to [`Array`] values; every evaluation owns its private tape,
//! so a graph may be used from several threads at once.
//!
//! The operation set is deliberately small: elementwise add / subtract /
//! multiply / divide / maximum, matrix product, full sum reduction,
//! exponential, natural logarithm, negation, square root, and broadcast of
//! a scalar to a fixed shape. Binary elementwise operations accept either
//! two arrays of identical shape or a scalar paired with an array; no other
//! implicit broadcasting exists.

use std::collections::HashMap;

use crate::diff::Array;
use crate::error::{Error, Result};

/// Handle to a node inside the graph that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

/// Leaf bindings for evaluation: name to value.
pub type Bindings = HashMap<String, Array>;

#[derive(Debug, Clone)]
enum Op {
    Leaf(String),
    Const(Array),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Max(NodeId, NodeId),
    MatMul(NodeId, NodeId),
    Sum(NodeId),
    Exp(NodeId),
    Ln(NodeId),
    Neg(NodeId),
    Sqrt(NodeId),
    Broadcast(NodeId),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf(_) => "leaf",
            Op::Const(_) => "const",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Div(..) => "div",
            Op::Max(..) => "max",
            Op::MatMul(..) => "matmul",
            Op::Sum(_) => "sum",
            Op::Exp(_) => "exp",
            Op::Ln(_) => "ln",
            Op::Neg(_) => "neg",
            Op::Sqrt(_) => "sqrt",
            Op::Broadcast(_) => "broadcast",
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    shape: Vec<usize>,
}

/// Incrementally builds a [`Graph`]. Operand shapes are checked at every
/// call, so an ill-formed graph cannot be constructed.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: Vec<Node>,
    leaves: HashMap<String, NodeId>,
}

/// Shape of the result of an elementwise binary op, or an error.
fn elementwise_shape(a: &[usize], b: &[usize], what: &str) -> Result<Vec<usize>> {
    if a == b {
        Ok(a.to_vec())
    } else if a.is_empty() {
        Ok(b.to_vec())
    } else if b.is_empty() {
        Ok(a.to_vec())
    } else {
        Err(Error::ShapeMismatch(format!(
            "{what}: incompatible shapes {a:?} and {b:?}"
        )))
    }
}

/// (rows, cols) of a 1-D or 2-D operand in a matrix product. 1-D operands
/// read as a row vector on the left and a column vector on the right.
fn matmul_dims(shape: &[usize], lhs: bool) -> Result<(usize, usize)> {
    match shape.len() {
        1 => Ok(if lhs { (1, shape[0]) } else { (shape[0], 1) }),
        2 => Ok((shape[0], shape[1])),
        _ => Err(Error::ShapeMismatch(format!(
            "matmul operand must be 1-D or 2-D, got {shape:?}"
        ))),
    }
}

fn matmul_shape(a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let (m, ka) = matmul_dims(a, true)?;
    let (kb, n) = matmul_dims(b, false)?;
    if ka != kb {
        return Err(Error::ShapeMismatch(format!(
            "matmul: inner extents differ, {a:?} vs {b:?}"
        )));
    }
    Ok(match (a.len(), b.len()) {
        (2, 2) => vec![m, n],
        (2, 1) => vec![m],
        (1, 2) => vec![n],
        _ => vec![],
    })
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op, shape: Vec<usize>) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { op, shape });
        id
    }

    fn check(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(id.0).ok_or_else(|| {
            Error::ShapeMismatch("operand node does not belong to this graph".into())
        })
    }

    /// Declares a named input slot with a fixed shape.
    pub fn leaf(&mut self, name: &str, shape: &[usize]) -> Result<NodeId> {
        if self.leaves.contains_key(name) {
            return Err(Error::DuplicateLeaf(name.to_string()));
        }
        let id = self.push(Op::Leaf(name.to_string()), shape.to_vec());
        self.leaves.insert(name.to_string(), id);
        Ok(id)
    }

    /// Embeds a fixed value. Constants never receive gradients.
    pub fn constant(&mut self, value: Array) -> NodeId {
        let shape = value.shape().to_vec();
        self.push(Op::Const(value), shape)
    }

    pub fn scalar(&mut self, v: f64) -> Result<NodeId> {
        Ok(self.constant(Array::scalar(v)?))
    }

    fn binary(
        &mut self,
        a: NodeId,
        b: NodeId,
        make: impl Fn(NodeId, NodeId) -> Op,
        what: &str,
    ) -> Result<NodeId> {
        let sa = self.check(a)?.shape.clone();
        let sb = self.check(b)?.shape.clone();
        let shape = elementwise_shape(&sa, &sb, what)?;
        Ok(self.push(make(a, b), shape))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(a, b, Op::Add, "add")
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(a, b, Op::Sub, "sub")
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(a, b, Op::Mul, "mul")
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(a, b, Op::Div, "div")
    }

    /// Elementwise maximum. Gradients flow to the larger operand; exact ties
    /// go to the first operand.
    pub fn max(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(a, b, Op::Max, "max")
    }

    /// Matrix product of 1-D/2-D operands; 1-D reads as a row vector on the
    /// left and a column vector on the right.
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let sa = self.check(a)?.shape.clone();
        let sb = self.check(b)?.shape.clone();
        let shape = matmul_shape(&sa, &sb)?;
        Ok(self.push(Op::MatMul(a, b), shape))
    }

    /// Sum of every element, yielding a scalar.
    pub fn sum(&mut self, a: NodeId) -> Result<NodeId> {
        self.check(a)?;
        Ok(self.push(Op::Sum(a), vec![]))
    }

    fn unary(&mut self, a: NodeId, make: impl Fn(NodeId) -> Op) -> Result<NodeId> {
        let shape = self.check(a)?.shape.clone();
        Ok(self.push(make(a), shape))
    }

    pub fn exp(&mut self, a: NodeId) -> Result<NodeId> {
        self.unary(a, Op::Exp)
    }

    pub fn ln(&mut self, a: NodeId) -> Result<NodeId> {
        self.unary(a, Op::Ln)
    }

    pub fn neg(&mut self, a: NodeId) -> Result<NodeId> {
        self.unary(a, Op::Neg)
    }

    pub fn sqrt(&mut self, a: NodeId) -> Result<NodeId> {
        self.unary(a, Op::Sqrt)
    }

    /// Broadcasts a scalar node to a fixed shape.
    pub fn broadcast(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId> {
        let sa = &self.check(a)?.shape;
        if !sa.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "broadcast source must be scalar, got {sa:?}"
            )));
        }
        Ok(self.push(Op::Broadcast(a), shape.to_vec()))
    }

    /// Freezes the graph with `output` as its designated output node.
    pub fn build(self, output: NodeId) -> Result<Graph> {
        if output.0 >= self.nodes.len() {
            return Err(Error::ShapeMismatch(
                "output node does not belong to this graph".into(),
            ));
        }
        Ok(Graph {
            nodes: self.nodes,
            leaves: self.leaves,
            output,
        })
    }
}

/// Immutable operation DAG with named leaves and one designated output.
#[derive(Debug, Clone)]
pub struct Graph {
    nodes: Vec<Node>,
    leaves: HashMap<String, NodeId>,
    output: NodeId,
}

/// Index helper for elementwise ops: scalars repeat their single element.
#[inline]
fn pick(vals: &[f64], i: usize) -> f64 {
    if vals.len() == 1 {
        vals[0]
    } else {
        vals[i]
    }
}

fn ew(a: &Array, b: &Array, out_len: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let (av, bv) = (a.values(), b.values());
    (0..out_len).map(|i| f(pick(av, i), pick(bv, i))).collect()
}

fn matmul_forward(a: &Array, b: &Array) -> Vec<f64> {
    let (m, k) = matmul_dims(a.shape(), true).expect("checked at build");
    let (_, n) = matmul_dims(b.shape(), false).expect("checked at build");
    let (av, bv) = (a.values(), b.values());
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for l in 0..k {
            let ail = av[i * k + l];
            for j in 0..n {
                out[i * n + j] += ail * bv[l * n + j];
            }
        }
    }
    out
}

impl Graph {
    pub fn output(&self) -> NodeId {
        self.output
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.nodes[self.output.0].shape
    }

    pub fn leaf_names(&self) -> impl Iterator<Item = &str> {
        self.leaves.keys().map(|s| s.as_str())
    }

    pub fn leaf_shape(&self, name: &str) -> Option<&[usize]> {
        self.leaves.get(name).map(|id| &self.nodes[id.0].shape[..])
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Forward pass over every node. Each value is checked for finiteness
    /// so domain errors (log of a nonpositive, division by zero, overflow)
    /// surface as errors instead of propagating NaN/Inf.
    fn forward(&self, bindings: &Bindings) -> Result<Vec<Array>> {
        let mut vals: Vec<Array> = Vec::with_capacity(self.nodes.len());
        for (idx, node) in self.nodes.iter().enumerate() {
            let out_len: usize = node.shape.iter().product();
            let value = match &node.op {
                Op::Leaf(name) => {
                    let bound = bindings
                        .get(name)
                        .ok_or_else(|| Error::UnboundLeaf(name.clone()))?;
                    if bound.shape() != node.shape {
                        return Err(Error::ShapeMismatch(format!(
                            "leaf `{}` declared {:?}, bound {:?}",
                            name,
                            node.shape,
                            bound.shape()
                        )));
                    }
                    bound.clone()
                }
                Op::Const(a) => a.clone(),
                Op::Add(a, b) => Array::raw(
                    node.shape.clone(),
                    ew(&vals[a.0], &vals[b.0], out_len, |x, y| x + y),
                ),
                Op::Sub(a, b) => Array::raw(
                    node.shape.clone(),
                    ew(&vals[a.0], &vals[b.0], out_len, |x, y| x - y),
                ),
                Op::Mul(a, b) => Array::raw(
                    node.shape.clone(),
                    ew(&vals[a.0], &vals[b.0], out_len, |x, y| x * y),
                ),
                Op::Div(a, b) => Array::raw(
                    node.shape.clone(),
                    ew(&vals[a.0], &vals[b.0], out_len, |x, y| x / y),
                ),
                Op::Max(a, b) => Array::raw(
                    node.shape.clone(),
                    ew(&vals[a.0], &vals[b.0], out_len, f64::max),
                ),
                Op::MatMul(a, b) => {
                    Array::raw(node.shape.clone(), matmul_forward(&vals[a.0], &vals[b.0]))
                }
                Op::Sum(a) => Array::raw(vec![], vec![vals[a.0].values().iter().sum()]),
                Op::Exp(a) => Array::raw(
                    node.shape.clone(),
                    vals[a.0].values().iter().map(|v| v.exp()).collect(),
                ),
                Op::Ln(a) => Array::raw(
                    node.shape.clone(),
                    vals[a.0].values().iter().map(|v| v.ln()).collect(),
                ),
                Op::Neg(a) => Array::raw(
                    node.shape.clone(),
                    vals[a.0].values().iter().map(|v| -v).collect(),
                ),
                Op::Sqrt(a) => Array::raw(
                    node.shape.clone(),
                    vals[a.0].values().iter().map(|v| v.sqrt()).collect(),
                ),
                Op::Broadcast(a) => {
                    let v = vals[a.0].values()[0];
                    Array::raw(node.shape.clone(), vec![v; out_len])
                }
            };
            if value.values().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteIntermediate {
                    op: node.op.name(),
                    node: idx,
                });
            }
            vals.push(value);
        }
        Ok(vals)
    }

    /// Value of the designated output under the given bindings.
    pub fn evaluate(&self, bindings: &Bindings) -> Result<Array> {
        let vals = self.forward(bindings)?;
        Ok(vals[self.output.0].clone())
    }

    /// Values of several nodes from a single forward pass.
    pub fn evaluate_nodes(&self, bindings: &Bindings, ids: &[NodeId]) -> Result<Vec<Array>> {
        let vals = self.forward(bindings)?;
        ids.iter()
            .map(|id| {
                vals.get(id.0)
                    .cloned()
                    .ok_or_else(|| Error::ShapeMismatch("node id out of range".into()))
            })
            .collect()
    }

    /// Gradient of the scalar output with respect to each requested leaf.
    /// Leaves with no path to the output receive zeros of their shape.
    pub fn gradient(&self, bindings: &Bindings, wrt: &[&str]) -> Result<HashMap<String, Array>> {
        Ok(self.gradient_with_value(bindings, wrt)?.1)
    }

    /// Same as [`Graph::gradient`] but also returns the forward value,
    /// saving a pass when both are needed.
    pub fn gradient_with_value(
        &self,
        bindings: &Bindings,
        wrt: &[&str],
    ) -> Result<(f64, HashMap<String, Array>)> {
        for name in wrt {
            if !self.leaves.contains_key(*name) {
                return Err(Error::UnknownLeaf((*name).to_string()));
            }
        }
        let out_node = &self.nodes[self.output.0];
        if !out_node.shape.is_empty() {
            return Err(Error::NonScalarOutput(out_node.shape.clone()));
        }

        let vals = self.forward(bindings)?;
        let output_value = vals[self.output.0].values()[0];

        let mut adjoints: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        adjoints[self.output.0] = Some(vec![1.0]);

        for i in (0..=self.output.0).rev() {
            let Some(g) = adjoints[i].take() else {
                continue;
            };
            match &self.nodes[i].op {
                Op::Leaf(name) => {
                    // Keep the final adjoint for collection below.
                    if self.leaves.contains_key(name) {
                        adjoints[i] = Some(g);
                    }
                }
                Op::Const(_) => {}
                Op::Add(a, b) => {
                    accumulate(&mut adjoints, *a, &vals, g.iter().copied());
                    accumulate(&mut adjoints, *b, &vals, g.iter().copied());
                }
                Op::Sub(a, b) => {
                    accumulate(&mut adjoints, *a, &vals, g.iter().copied());
                    accumulate(&mut adjoints, *b, &vals, g.iter().map(|v| -v));
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (vals[a.0].values(), vals[b.0].values());
                    accumulate(
                        &mut adjoints,
                        *a,
                        &vals,
                        g.iter().enumerate().map(|(k, gv)| gv * pick(vb, k)),
                    );
                    accumulate(
                        &mut adjoints,
                        *b,
                        &vals,
                        g.iter().enumerate().map(|(k, gv)| gv * pick(va, k)),
                    );
                }
                Op::Div(a, b) => {
                    let (va, vb) = (vals[a.0].values(), vals[b.0].values());
                    accumulate(
                        &mut adjoints,
                        *a,
                        &vals,
                        g.iter().enumerate().map(|(k, gv)| gv / pick(vb, k)),
                    );
                    accumulate(
                        &mut adjoints,
                        *b,
                        &vals,
                        g.iter().enumerate().map(|(k, gv)| {
                            let d = pick(vb, k);
                            -gv * pick(va, k) / (d * d)
                        }),
                    );
                }
                Op::Max(a, b) => {
                    let (va, vb) = (vals[a.0].values(), vals[b.0].values());
                    accumulate(
                        &mut adjoints,
                        *a,
                        &vals,
                        g.iter().enumerate().map(|(k, gv)| {
                            if pick(va, k) >= pick(vb, k) {
                                *gv
                            } else {
                                0.0
                            }
                        }),
                    );
                    accumulate(
                        &mut adjoints,
                        *b,
                        &vals,
                        g.iter().enumerate().map(|(k, gv)| {
                            if pick(va, k) >= pick(vb, k) {
                                0.0
                            } else {
                                *gv
                            }
                        }),
                    );
                }
                Op::MatMul(a, b) => {
                    let (m, k) = matmul_dims(vals[a.0].shape(), true).expect("checked");
                    let (_, n) = matmul_dims(vals[b.0].shape(), false).expect("checked");
                    let (va, vb) = (vals[a.0].values(), vals[b.0].values());
                    // dA[i,l] = sum_j g[i,j] * B[l,j]
                    let mut da = vec![0.0; m * k];
                    for i in 0..m {
                        for l in 0..k {
                            let mut s = 0.0;
                            for j in 0..n {
                                s += g[i * n + j] * vb[l * n + j];
                            }
                            da[i * k + l] = s;
                        }
                    }
                    // dB[l,j] = sum_i A[i,l] * g[i,j]
                    let mut db = vec![0.0; k * n];
                    for l in 0..k {
                        for j in 0..n {
                            let mut s = 0.0;
                            for i in 0..m {
                                s += va[i * k + l] * g[i * n + j];
                            }
                            db[l * n + j] = s;
                        }
                    }
                    accumulate(&mut adjoints, *a, &vals, da.into_iter());
                    accumulate(&mut adjoints, *b, &vals, db.into_iter());
                }
                Op::Sum(a) => {
                    let n = vals[a.0].len();
                    let gv = g[0];
                    accumulate(&mut adjoints, *a, &vals, std::iter::repeat(gv).take(n));
                }
                Op::Exp(a) => {
                    let out = vals[i].values();
                    accumulate(
                        &mut adjoints,
                        *a,
                        &vals,
                        g.iter().zip(out).map(|(gv, ov)| gv * ov),
                    );
                }
                Op::Ln(a) => {
                    let va = vals[a.0].values();
                    accumulate(
                        &mut adjoints,
                        *a,
                        &vals,
                        g.iter().zip(va).map(|(gv, av)| gv / av),
                    );
                }
                Op::Neg(a) => {
                    accumulate(&mut adjoints, *a, &vals, g.iter().map(|v| -v));
                }
                Op::Sqrt(a) => {
                    let out = vals[i].values();
                    accumulate(
                        &mut adjoints,
                        *a,
                        &vals,
                        g.iter().zip(out).map(|(gv, ov)| gv / (2.0 * ov)),
                    );
                }
                Op::Broadcast(a) => {
                    let total: f64 = g.iter().sum();
                    accumulate(&mut adjoints, *a, &vals, std::iter::once(total));
                }
            }
        }

        let mut grads = HashMap::with_capacity(wrt.len());
        for name in wrt {
            let id = self.leaves[*name];
            let shape = self.nodes[id.0].shape.clone();
            let arr = match adjoints[id.0].take() {
                Some(v) => Array::raw(shape, v),
                None => Array::zeros(&shape),
            };
            grads.insert((*name).to_string(), arr);
        }
        Ok((output_value, grads))
    }
}

/// Adds a full-length contribution into a node's adjoint buffer, collapsing
/// to a single-element sum when the target node is a scalar that was
/// broadcast against an array operand.
fn accumulate(
    adjoints: &mut [Option<Vec<f64>>],
    target: NodeId,
    vals: &[Array],
    contribution: impl Iterator<Item = f64>,
) {
    let target_len = vals[target.0].len();
    let buf = adjoints[target.0].get_or_insert_with(|| vec![0.0; target_len]);
    if target_len == 1 {
        buf[0] += contribution.sum::<f64>();
    } else {
        for (slot, c) in buf.iter_mut().zip(contribution) {
            *slot += c;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&str, Array)]) -> Bindings {
        pairs
            .iter()
            .map(|(n, a)| (n.to_string(), a.clone()))
            .collect()
    }

    #[test]
    fn square_of_three_is_nine() {
        let mut g = GraphBuilder::new();
        let x = g.leaf("x", &[1]).unwrap();
        let y = g.mul(x, x).unwrap();
        let graph = g.build(y).unwrap();
        let out = graph
            .evaluate(&bind(&[("x", Array::vector(vec![3.0]).unwrap())]))
            .unwrap();
        assert_eq!(out.values(), &[9.0]);
    }

    #[test]
    fn add_zero_is_identity() {
        let mut g = GraphBuilder::new();
        let x = g.leaf("x", &[2]).unwrap();
        let z = g.scalar(0.0).unwrap();
        let y = g.add(x, z).unwrap();
        let graph = g.build(y).unwrap();
        let out = graph
            .evaluate(&bind(&[("x", Array::vector(vec![1.0, 2.0]).unwrap())]))
            .unwrap();
        assert_eq!(out.values(), &[1.0, 2.0]);
    }

    #[test]
    fn matmul_matches_naive_double_loop() {
        // 2x3 times 3x2 of small integers, against a hand-rolled loop.
        let a = Array::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Array::matrix(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let mut expected = vec![0.0; 4];
        for i in 0..2 {
            for j in 0..2 {
                for l in 0..3 {
                    expected[i * 2 + j] += a.values()[i * 3 + l] * b.values()[l * 2 + j];
                }
            }
        }

        let mut g = GraphBuilder::new();
        let an = g.leaf("a", &[2, 3]).unwrap();
        let bn = g.leaf("b", &[3, 2]).unwrap();
        let c = g.matmul(an, bn).unwrap();
        let graph = g.build(c).unwrap();
        let out = graph.evaluate(&bind(&[("a", a), ("b", b)])).unwrap();
        assert_eq!(out.shape(), &[2, 2]);
        assert_eq!(out.values(), &expected[..]);
    }

    #[test]
    fn gradient_of_square_is_two_x() {
        let mut g = GraphBuilder::new();
        let x = g.leaf("x", &[]).unwrap();
        let y = g.mul(x, x).unwrap();
        let graph = g.build(y).unwrap();
        let grads = graph
            .gradient(&bind(&[("x", Array::scalar(3.0).unwrap())]), &["x"])
            .unwrap();
        assert_eq!(grads["x"].values(), &[6.0]);
    }

    #[test]
    fn gradient_of_sum_is_ones() {
        let mut g = GraphBuilder::new();
        let x = g.leaf("x", &[2, 3]).unwrap();
        let s = g.sum(x).unwrap();
        let graph = g.build(s).unwrap();
        let vals = Array::matrix(2, 3, vec![0.5, -1.0, 2.0, 3.0, -4.0, 0.25]).unwrap();
        let grads = graph.gradient(&bind(&[("x", vals)]), &["x"]).unwrap();
        assert_eq!(grads["x"].shape(), &[2, 3]);
        assert!(grads["x"].values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn evaluate_is_bit_deterministic() {
        let mut g = GraphBuilder::new();
        let x = g.leaf("x", &[4]).unwrap();
        let e = g.exp(x).unwrap();
        let s = g.sum(e).unwrap();
        let r = g.sqrt(s).unwrap();
        let graph = g.build(r).unwrap();
        let b = bind(&[(
            "x",
            Array::vector(vec![0.3, -1.2, 2.7, 0.001]).unwrap(),
        )]);
        let first = graph.evaluate(&b).unwrap();
        for _ in 0..5 {
            assert!(graph.evaluate(&b).unwrap().bit_eq(&first));
        }
    }

    #[test]
    fn unbound_leaf_is_an_error() {
        let mut g = GraphBuilder::new();
        let x = g.leaf("x", &[1]).unwrap();
        let graph = g.build(x).unwrap();
        assert!(matches!(
            graph.evaluate(&Bindings::new()),
            Err(Error::UnboundLeaf(name)) if name == "x"
        ));
    }

    #[test]
    fn binding_shape_mismatch_is_an_error() {
        let mut g = GraphBuilder::new();
        let x = g.leaf("x", &[2]).unwrap();
        let graph = g.build(x).unwrap();
        let b = bind(&[("x", Array::vector(vec![1.0, 2.0, 3.0]).unwrap())]);
        assert!(matches!(graph.evaluate(&b), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn construction_rejects_incompatible_shapes() {
        let mut g = GraphBuilder::new();
        let a = g.leaf("a", &[2]).unwrap();
        let b = g.leaf("b", &[3]).unwrap();
        assert!(g.add(a, b).is_err());
        assert!(g.matmul(a, b).is_err());
    }

    #[test]
    fn log_of_nonpositive_is_a_domain_error() {
        let mut g = GraphBuilder::new();
        let x = g.leaf("x", &[1]).unwrap();
        let l = g.ln(x).unwrap();
        let graph = g.build(l).unwrap();
        let b = bind(&[("x", Array::vector(vec![-1.0]).unwrap())]);
        assert!(matches!(
            graph.evaluate(&b),
            Err(Error::NonFiniteIntermediate { op: "ln", .. })
        ));
    }

    #[test]
    fn gradient_rejects_non_scalar_output() {
        let mut g = GraphBuilder::new();
        let x = g.leaf("x", &[2]).unwrap();
        let y = g.neg(x).unwrap();
        let graph = g.build(y).unwrap();
        let b = bind(&[("x", Array::vector(vec![1.0, 2.0]).unwrap())]);
        assert!(matches!(
            graph.gradient(&b, &["x"]),
            Err(Error::NonScalarOutput(_))
        ));
    }

    #[test]
    fn gradient_of_unreached_leaf_is_zeros() {
        let mut g = GraphBuilder::new();
        let x = g.leaf("x", &[]).unwrap();
        let _unused = g.leaf("u", &[3]).unwrap();
        let y = g.mul(x, x).unwrap();
        let graph = g.build(y).unwrap();
        let b = bind(&[
            ("x", Array::scalar(2.0).unwrap()),
            ("u", Array::vector(vec![1.0, 1.0, 1.0]).unwrap()),
        ]);
        let grads = graph.gradient(&b, &["x", "u"]).unwrap();
        assert_eq!(grads["u"].values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn scalar_broadcast_in_binary_ops() {
        let mut g = GraphBuilder::new();
        let x = g.leaf("x", &[3]).unwrap();
        let c = g.scalar(2.0).unwrap();
        let y = g.mul(x, c).unwrap();
        let s = g.sum(y).unwrap();
        let graph = g.build(s).unwrap();
        let b = bind(&[("x", Array::vector(vec![1.0, 2.0, 3.0]).unwrap())]);
        assert_eq!(graph.evaluate(&b).unwrap().as_scalar().unwrap(), 12.0);
        let grads = graph.gradient(&b, &["x"]).unwrap();
        assert_eq!(grads["x"].values(), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn matvec_and_dot_shapes() {
        let mut g = GraphBuilder::new();
        let m = g.leaf("m", &[2, 3]).unwrap();
        let v = g.leaf("v", &[3]).unwrap();
        let mv = g.matmul(m, v).unwrap();
        let w = g.leaf("w", &[2]).unwrap();
        let dot = g.matmul(w, mv).unwrap();
        let graph = g.build(dot).unwrap();
        let b = bind(&[
            ("m", Array::matrix(2, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap()),
            ("v", Array::vector(vec![5.0, 7.0, 9.0]).unwrap()),
            ("w", Array::vector(vec![1.0, 1.0]).unwrap()),
        ]);
        assert_eq!(graph.evaluate(&b).unwrap().as_scalar().unwrap(), 12.0);
    }
}
