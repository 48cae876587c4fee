use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::math;

static NEXT_TAPE_ID: AtomicUsize = AtomicUsize::new(1);

/// Kind of a recorded node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Tanh,
    Softplus,
    Exp,
    Square,
    Sqrt,
    Sin,
    Cos,
    /// `vmax * tanh(v / vmax)` with the saturation level carried in the op.
    SmoothClamp(f64),
}

impl Op {
    /// Number of [`Var`] arguments `apply` expects for this op.
    pub fn arity(self) -> usize {
        match self {
            Op::Leaf => 0,
            Op::Add | Op::Sub | Op::Mul | Op::Div => 2,
            _ => 1,
        }
    }
}

/// One entry of the tape. Operations against an `f64` constant are stored
/// with a single parent and the constant folded into the local partial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub op: Op,
    pub value: f64,
    pub arity: u8,
    pub parents: [u32; 2],
    pub partials: [f64; 2],
}

/// Append-only record of a scalar computation graph.
///
/// A tape is confined to one thread (it is `!Sync`); independent tapes can be
/// used from different threads.
pub struct Tape {
    id: usize,
    nodes: RefCell<Vec<Node>>,
}

/// A scalar recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    index: u32,
    value: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Var")
            .field("tape", &self.tape.id)
            .field("index", &self.index)
            .field("value", &self.value)
            .finish()
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::with_capacity(0)
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Tape {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: RefCell::new(Vec::with_capacity(capacity)),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, index: usize) -> Option<Node> {
        self.nodes.borrow().get(index).copied()
    }

    /// Snapshot of every recorded node, in creation order.
    pub fn nodes(&self) -> Vec<Node> {
        self.nodes.borrow().clone()
    }

    /// Records a new leaf holding `x`.
    pub fn lift(&self, x: f64) -> Var<'_> {
        self.push(Node {
            op: Op::Leaf,
            value: x,
            arity: 0,
            parents: [0; 2],
            partials: [0.0; 2],
        })
    }

    fn push(&self, node: Node) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let index = u32::try_from(nodes.len()).expect("tape exceeds u32::MAX nodes");
        let value = node.value;
        nodes.push(node);
        Var {
            tape: self,
            index,
            value,
        }
    }

    fn owns(&self, v: &Var<'_>) -> bool {
        core::ptr::eq(self, v.tape)
    }

    /// Applies `op` to `args`, checking tape ownership, arity and domain.
    pub fn apply<'t>(&'t self, op: Op, args: &[Var<'t>]) -> Result<Var<'t>> {
        if op == Op::Leaf {
            return Err(Error::Usage("`Leaf` is not an applicable op; use `lift`".into()));
        }
        if args.len() != op.arity() {
            return Err(Error::Usage(format!(
                "{op:?} takes {} argument(s), got {}",
                op.arity(),
                args.len()
            )));
        }
        if let Some(foreign) = args.iter().find(|a| !self.owns(a)) {
            return Err(Error::Usage(format!(
                "argument belongs to tape {} but op is applied on tape {}",
                foreign.tape.id, self.id
            )));
        }
        match op {
            Op::Div if args[1].value == 0.0 => {
                return Err(Error::Domain("division by zero".into()));
            }
            Op::Sqrt if args[0].value < 0.0 => {
                return Err(Error::Domain(format!("sqrt of negative value {}", args[0].value)));
            }
            Op::SmoothClamp(vmax) if !(vmax > 0.0) => {
                return Err(Error::Domain(format!("smooth-clamp bound must be positive, got {vmax}")));
            }
            _ => {}
        }
        Ok(match op {
            Op::Add => binary(args[0], args[1], args[0].value + args[1].value, 1.0, 1.0, op),
            Op::Sub => binary(args[0], args[1], args[0].value - args[1].value, 1.0, -1.0, op),
            Op::Mul => binary(args[0], args[1], args[0].value * args[1].value, args[1].value, args[0].value, op),
            Op::Div => {
                let (a, b) = (args[0].value, args[1].value);
                binary(args[0], args[1], a / b, 1.0 / b, -a / (b * b), op)
            }
            _ => unary(args[0], op),
        })
    }

    /// Reverse sweep from `output`, returning d(output)/d(input) per input.
    pub fn gradients(&self, output: Var<'_>, inputs: &[Var<'_>]) -> Result<Vec<f64>> {
        if !self.owns(&output) || inputs.iter().any(|v| !self.owns(v)) {
            return Err(Error::Usage("gradients requested across tapes".into()));
        }
        let adjoints = self.adjoints(output);
        Ok(inputs
            .iter()
            .map(|v| adjoints.get(v.index as usize).copied().unwrap_or(0.0))
            .collect())
    }

    /// Adjoint of every node created up to and including `output`.
    pub fn adjoints(&self, output: Var<'_>) -> Vec<f64> {
        assert!(self.owns(&output), "adjoints requested across tapes");
        let nodes = self.nodes.borrow();
        let last = output.index as usize;
        let mut adj = vec![0.0; last + 1];
        adj[last] = 1.0;
        for i in (0..=last).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let node = &nodes[i];
            for k in 0..node.arity as usize {
                adj[node.parents[k] as usize] += a * node.partials[k];
            }
        }
        adj
    }
}

fn binary<'t>(a: Var<'t>, b: Var<'t>, value: f64, da: f64, db: f64, op: Op) -> Var<'t> {
    assert!(
        core::ptr::eq(a.tape, b.tape),
        "cannot combine scalars from tapes {} and {}",
        a.tape.id,
        b.tape.id
    );
    a.tape.push(Node {
        op,
        value,
        arity: 2,
        parents: [a.index, b.index],
        partials: [da, db],
    })
}

fn with_partial<'t>(a: Var<'t>, op: Op, value: f64, da: f64) -> Var<'t> {
    a.tape.push(Node {
        op,
        value,
        arity: 1,
        parents: [a.index, 0],
        partials: [da, 0.0],
    })
}

fn unary(a: Var<'_>, op: Op) -> Var<'_> {
    let x = a.value;
    let (value, d) = match op {
        Op::Neg => (-x, -1.0),
        Op::Tanh => {
            let t = math::tanh(x);
            (t, 1.0 - t * t)
        }
        Op::Softplus => (math::softplus(x), math::sigmoid(x)),
        Op::Exp => {
            let e = math::exp(x);
            (e, e)
        }
        Op::Square => (x * x, 2.0 * x),
        Op::Sqrt => {
            let s = math::sqrt(x);
            (s, 0.5 / s)
        }
        Op::Sin => (math::sin(x), math::cos(x)),
        Op::Cos => (math::cos(x), -math::sin(x)),
        Op::SmoothClamp(vmax) => {
            let t = math::tanh(x / vmax);
            (vmax * t, 1.0 - t * t)
        }
        Op::Leaf | Op::Add | Op::Sub | Op::Mul | Op::Div => unreachable!("not a unary op"),
    };
    with_partial(a, op, value, d)
}

impl<'t> Var<'t> {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn index(&self) -> usize {
        self.index as usize
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn tanh(self) -> Self {
        unary(self, Op::Tanh)
    }

    pub fn softplus(self) -> Self {
        unary(self, Op::Softplus)
    }

    pub fn exp(self) -> Self {
        unary(self, Op::Exp)
    }

    pub fn square(self) -> Self {
        unary(self, Op::Square)
    }

    pub fn sqrt(self) -> Self {
        unary(self, Op::Sqrt)
    }

    pub fn sin(self) -> Self {
        unary(self, Op::Sin)
    }

    pub fn cos(self) -> Self {
        unary(self, Op::Cos)
    }

    pub fn smooth_clamp(self, vmax: f64) -> Self {
        unary(self, Op::SmoothClamp(vmax))
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Self) -> Self {
        binary(self, rhs, self.value + rhs.value, 1.0, 1.0, Op::Add)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Self) -> Self {
        binary(self, rhs, self.value - rhs.value, 1.0, -1.0, Op::Sub)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Self) -> Self {
        binary(self, rhs, self.value * rhs.value, rhs.value, self.value, Op::Mul)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Self) -> Self {
        let (a, b) = (self.value, rhs.value);
        binary(self, rhs, a / b, 1.0 / b, -a / (b * b), Op::Div)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Self {
        unary(self, Op::Neg)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: f64) -> Self {
        with_partial(self, Op::Add, self.value + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: f64) -> Self {
        with_partial(self, Op::Sub, self.value - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Self {
        with_partial(self, Op::Mul, self.value * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: f64) -> Self {
        with_partial(self, Op::Div, self.value / rhs, 1.0 / rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lift_records_a_leaf() {
        let tape = Tape::new();
        let x = tape.lift(3.0);
        assert_eq!(x.value(), 3.0);
        assert_eq!(tape.node(0).unwrap().op, Op::Leaf);
        assert_eq!(tape.gradients(x, &[x]).unwrap(), vec![1.0]);
    }

    #[test]
    fn lifting_many_leaves_only_appends_leaves() {
        let tape = Tape::new();
        for i in 0..100_000 {
            tape.lift(i as f64);
        }
        assert_eq!(tape.len(), 100_000);
        assert!(tape.nodes().iter().all(|n| n.op == Op::Leaf));
    }

    #[test]
    fn apply_stores_local_partials() {
        let tape = Tape::new();
        let (a, b) = (tape.lift(2.0), tape.lift(5.0));
        let p = tape.apply(Op::Mul, &[a, b]).unwrap();
        assert_eq!(p.value(), 10.0);
        assert_eq!(tape.node(p.index()).unwrap().partials, [5.0, 2.0]);

        let t = tape.apply(Op::Tanh, &[tape.lift(0.0)]).unwrap();
        assert_eq!(t.value(), 0.0);
        assert_eq!(tape.node(t.index()).unwrap().partials[0], 1.0);

        let s = tape.apply(Op::Softplus, &[tape.lift(0.0)]).unwrap();
        assert!((s.value() - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(tape.node(s.index()).unwrap().partials[0], 0.5);
    }

    #[test]
    fn apply_rejects_bad_calls() {
        let tape = Tape::new();
        let other = Tape::new();
        let (a, z) = (tape.lift(1.0), tape.lift(0.0));
        assert!(matches!(tape.apply(Op::Div, &[a, z]), Err(Error::Domain(_))));
        assert!(matches!(tape.apply(Op::Add, &[a]), Err(Error::Usage(_))));
        assert!(matches!(tape.apply(Op::Tanh, &[a, a]), Err(Error::Usage(_))));
        let foreign = other.lift(1.0);
        assert!(matches!(tape.apply(Op::Add, &[a, foreign]), Err(Error::Usage(_))));
        assert!(matches!(tape.gradients(a, &[foreign]), Err(Error::Usage(_))));
    }

    #[test]
    #[should_panic(expected = "cannot combine")]
    fn operators_refuse_mixed_tapes() {
        let (t1, t2) = (Tape::new(), Tape::new());
        let _ = t1.lift(1.0) + t2.lift(2.0);
    }

    #[test]
    fn analytic_gradients() {
        let tape = Tape::new();
        let x = tape.lift(3.0);
        assert_eq!(tape.gradients(x.square(), &[x]).unwrap(), vec![6.0]);

        let tape = Tape::new();
        let (x, y) = (tape.lift(2.0), tape.lift(0.0));
        let f = x * y + y.tanh();
        assert_eq!(tape.gradients(f, &[x, y]).unwrap(), vec![0.0, 3.0]);
    }

    #[test]
    fn node_ids_increase() {
        let tape = Tape::new();
        let x = tape.lift(0.3);
        let y = x.sin() * x.cos() + x.exp() / 2.0;
        assert!(y.index() > x.index());
        for (i, n) in tape.nodes().iter().enumerate() {
            for k in 0..n.arity as usize {
                assert!((n.parents[k] as usize) < i);
            }
        }
    }
}
