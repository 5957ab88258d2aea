//! Combinational latency estimate for the hardware modules.
//!
//! Each module is a DAG of operator nodes. A node's latency comes from an
//! [`OpLatencyTable`]; a module's latency is its longest weighted path.
//! [`calibrate`] fits the table to measured module latencies.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatencyError {
    #[error("graph {0} contains a cycle")]
    CyclicGraph(String),
    #[error("graph {graph}: {msg}")]
    InvalidGraph { graph: String, msg: String },
    #[error("calibration is degenerate: {0}")]
    CalibrationDegenerate(String),
    #[error("invalid calibration targets: {0}")]
    InvalidTargets(String),
    #[error("invalid latency table: {0}")]
    InvalidTable(String),
}

/// Operator kinds. `Input` and `Const` carry no latency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Input,
    Const,
    Add,
    Mul,
    Div,
    TfbSincos,
    TfbAtan2,
    TfbAcos,
    Sqrt,
    F2fp,
    Fp2f,
    Negate,
}

impl OpKind {
    /// Kinds with a latency entry, in table order.
    pub const TIMED: [OpKind; 10] = [
        OpKind::Add,
        OpKind::Mul,
        OpKind::Div,
        OpKind::TfbSincos,
        OpKind::TfbAtan2,
        OpKind::TfbAcos,
        OpKind::Sqrt,
        OpKind::F2fp,
        OpKind::Fp2f,
        OpKind::Negate,
    ];

    fn timed_index(self) -> Option<usize> {
        Self::TIMED.iter().position(|k| *k == self)
    }
}

/// Nanoseconds per operator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpLatencyTable {
    pub add: f64,
    pub mul: f64,
    pub div: f64,
    pub tfb_sincos: f64,
    pub tfb_atan2: f64,
    pub tfb_acos: f64,
    pub sqrt: f64,
    pub f2fp: f64,
    pub fp2f: f64,
    pub negate: f64,
}

impl OpLatencyTable {
    pub fn uniform(ns: f64) -> Self {
        Self::from_vec(&[ns; 10])
    }

    pub fn get(&self, op: OpKind) -> f64 {
        match op.timed_index() {
            Some(i) => self.to_vec()[i],
            None => 0.0,
        }
    }

    pub fn set(&mut self, op: OpKind, ns: f64) {
        if let Some(i) = op.timed_index() {
            let mut v = self.to_vec();
            v[i] = ns;
            *self = Self::from_vec(&v);
        }
    }

    pub fn to_vec(&self) -> [f64; 10] {
        [
            self.add,
            self.mul,
            self.div,
            self.tfb_sincos,
            self.tfb_atan2,
            self.tfb_acos,
            self.sqrt,
            self.f2fp,
            self.fp2f,
            self.negate,
        ]
    }

    pub fn from_vec(v: &[f64; 10]) -> Self {
        Self {
            add: v[0],
            mul: v[1],
            div: v[2],
            tfb_sincos: v[3],
            tfb_atan2: v[4],
            tfb_acos: v[5],
            sqrt: v[6],
            f2fp: v[7],
            fp2f: v[8],
            negate: v[9],
        }
    }

    pub fn validate(&self) -> Result<(), LatencyError> {
        if self.to_vec().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(LatencyError::InvalidTable(
                "latencies must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub op: OpKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataflowGraph {
    pub name: String,
    pub nodes: Vec<Node>,
    /// `(producer, consumer)` node ids.
    pub edges: Vec<(String, String)>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

/// Longest path through a graph and what it is made of.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub latency: f64,
    /// Node ids from input to output.
    pub nodes: Vec<String>,
    /// Occurrences of each timed kind along the path, in `OpKind::TIMED` order.
    pub op_counts: [u32; 10],
}

impl DataflowGraph {
    fn index(&self) -> Result<HashMap<&str, usize>, LatencyError> {
        let mut idx = HashMap::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            if idx.insert(n.id.as_str(), i).is_some() {
                return Err(self.invalid(format!("duplicate node id {}", n.id)));
            }
        }
        Ok(idx)
    }

    fn invalid(&self, msg: String) -> LatencyError {
        LatencyError::InvalidGraph {
            graph: self.name.clone(),
            msg,
        }
    }

    fn lookup(&self, idx: &HashMap<&str, usize>, id: &str) -> Result<usize, LatencyError> {
        idx.get(id)
            .copied()
            .ok_or_else(|| self.invalid(format!("unknown node {id}")))
    }

    /// Checks ids, acyclicity and that every output depends on an input.
    pub fn validate(&self) -> Result<(), LatencyError> {
        self.topological_order().map(|_| ())
    }

    fn topological_order(&self) -> Result<(Vec<usize>, Vec<Vec<usize>>), LatencyError> {
        let idx = self.index()?;
        let n = self.nodes.len();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for (a, b) in &self.edges {
            let (a, b) = (self.lookup(&idx, a)?, self.lookup(&idx, b)?);
            preds[b].push(a);
            succs[a].push(b);
        }
        let mut indeg: Vec<usize> = preds.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &s in &succs[v] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    queue.push_back(s);
                }
            }
        }
        if order.len() != n {
            return Err(LatencyError::CyclicGraph(self.name.clone()));
        }

        let mut from_input = vec![false; n];
        for id in &self.inputs {
            from_input[self.lookup(&idx, id)?] = true;
        }
        for &v in &order {
            if preds[v].iter().any(|&p| from_input[p]) {
                from_input[v] = true;
            }
        }
        if self.outputs.is_empty() {
            return Err(self.invalid("no outputs".into()));
        }
        for id in &self.outputs {
            if !from_input[self.lookup(&idx, id)?] {
                return Err(self.invalid(format!("output {id} is not reachable from any input")));
            }
        }
        Ok((order, preds))
    }

    /// Longest latency-weighted path ending at an output.
    pub fn critical_path(&self, table: &OpLatencyTable) -> Result<PathReport, LatencyError> {
        let (order, preds) = self.topological_order()?;
        let idx = self.index()?;
        let n = self.nodes.len();
        let mut dist = vec![0.0f64; n];
        let mut via: Vec<Option<usize>> = vec![None; n];
        for &v in &order {
            let mut best = 0.0;
            for &p in &preds[v] {
                if via[v].is_none() || dist[p] > best {
                    best = dist[p];
                    via[v] = Some(p);
                }
            }
            dist[v] = best + table.get(self.nodes[v].op);
        }
        let mut end = None;
        for id in &self.outputs {
            let o = idx[id.as_str()];
            if end.is_none_or(|e: usize| dist[o] > dist[e]) {
                end = Some(o);
            }
        }
        let end = end.expect("validated non-empty outputs");

        let mut path = vec![end];
        while let Some(p) = via[*path.last().unwrap()] {
            path.push(p);
        }
        path.reverse();
        let mut op_counts = [0u32; 10];
        for &v in &path {
            if let Some(i) = self.nodes[v].op.timed_index() {
                op_counts[i] += 1;
            }
        }
        Ok(PathReport {
            latency: dist[end],
            nodes: path.iter().map(|&v| self.nodes[v].id.clone()).collect(),
            op_counts,
        })
    }

    /// Ids of every node `id` depends on, transitively.
    pub fn ancestors(&self, id: &str) -> Result<Vec<String>, LatencyError> {
        let idx = self.index()?;
        let start = self.lookup(&idx, id)?;
        let mut preds = vec![Vec::new(); self.nodes.len()];
        for (a, b) in &self.edges {
            preds[self.lookup(&idx, b)?].push(self.lookup(&idx, a)?);
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = preds[start].clone();
        while let Some(v) = stack.pop() {
            if !std::mem::replace(&mut seen[v], true) {
                stack.extend(&preds[v]);
            }
        }
        Ok((0..self.nodes.len())
            .filter(|&v| seen[v])
            .map(|v| self.nodes[v].id.clone())
            .collect())
    }
}

pub fn critical_path(g: &DataflowGraph, t: &OpLatencyTable) -> Result<f64, LatencyError> {
    Ok(g.critical_path(t)?.latency)
}

struct Builder {
    g: DataflowGraph,
    counter: usize,
}

impl Builder {
    fn new(name: &str) -> Self {
        Self {
            g: DataflowGraph {
                name: name.into(),
                nodes: Vec::new(),
                edges: Vec::new(),
                inputs: Vec::new(),
                outputs: Vec::new(),
            },
            counter: 0,
        }
    }

    fn input(&mut self, id: &str) -> String {
        self.g.inputs.push(id.into());
        self.named(id, OpKind::Input, &[])
    }

    fn constant(&mut self, id: &str) -> String {
        self.named(id, OpKind::Const, &[])
    }

    fn named(&mut self, id: &str, op: OpKind, args: &[&str]) -> String {
        self.g.nodes.push(Node { id: id.into(), op });
        for a in args {
            self.g.edges.push((a.to_string(), id.into()));
        }
        id.into()
    }

    fn op(&mut self, op: OpKind, args: &[&str]) -> String {
        self.counter += 1;
        let id = format!(
            "{}{}",
            serde_json::to_value(op).unwrap().as_str().unwrap(),
            self.counter
        );
        self.named(&id, op, args)
    }

    /// Trigonometric function block: float-to-fixed, CORDIC, fixed-to-float.
    fn tfb(&mut self, kind: OpKind, args: &[&str]) -> String {
        let conv: Vec<String> = args.iter().map(|a| self.op(OpKind::F2fp, &[a])).collect();
        let conv: Vec<&str> = conv.iter().map(String::as_str).collect();
        let core = self.op(kind, &conv);
        self.op(OpKind::Fp2f, &[&core])
    }

    fn tfb_as(&mut self, id: &str, kind: OpKind, args: &[&str]) -> String {
        let conv: Vec<String> = args.iter().map(|a| self.op(OpKind::F2fp, &[a])).collect();
        let conv: Vec<&str> = conv.iter().map(String::as_str).collect();
        let core = self.op(kind, &conv);
        self.named(id, OpKind::Fp2f, &[&core])
    }

    fn output(&mut self, id: &str, op: OpKind, args: &[&str]) -> String {
        self.g.outputs.push(id.into());
        self.named(id, op, args)
    }

    fn finish(self) -> DataflowGraph {
        self.g
    }
}

use OpKind::{Add, Mul, Negate, TfbAcos, TfbAtan2, TfbSincos};

fn fk_graph() -> DataflowGraph {
    let mut b = Builder::new("fk");
    let t1 = b.input("theta1");
    let t2 = b.input("theta2");
    let t3 = b.input("theta3");
    let l1 = b.constant("L1");
    let l2 = b.constant("L2");
    let l3 = b.constant("L3");
    let l4 = b.constant("L4");

    // x = -sin1 * (L2 sin3 + L1 cos2)
    let s1 = b.tfb(TfbSincos, &[&t1]);
    let c2 = b.tfb(TfbSincos, &[&t2]);
    let s3 = b.tfb(TfbSincos, &[&t3]);
    let m1 = b.op(Mul, &[&l2, &s3]);
    let m2 = b.op(Mul, &[&l1, &c2]);
    let a = b.op(Add, &[&m1, &m2]);
    let m3 = b.op(Mul, &[&s1, &a]);
    b.output("x", Negate, &[&m3]);

    // y = -L2 cos3 + L1 sin2 + L3
    let c3 = b.tfb(TfbSincos, &[&t3]);
    let s2 = b.tfb(TfbSincos, &[&t2]);
    let m1 = b.op(Mul, &[&l2, &c3]);
    let n = b.op(Negate, &[&m1]);
    let m2 = b.op(Mul, &[&l1, &s2]);
    let a = b.op(Add, &[&n, &m2]);
    b.output("y", Add, &[&a, &l3]);

    // z = L2 cos1 sin3 + L1 cos1 cos2 - L4
    let c1 = b.tfb(TfbSincos, &[&t1]);
    let s3 = b.tfb(TfbSincos, &[&t3]);
    let c2 = b.tfb(TfbSincos, &[&t2]);
    let m1 = b.op(Mul, &[&l2, &c1]);
    let m2 = b.op(Mul, &[&m1, &s3]);
    let m3 = b.op(Mul, &[&l1, &c1]);
    let m4 = b.op(Mul, &[&m3, &c2]);
    let a = b.op(Add, &[&m2, &m4]);
    let n = b.op(Negate, &[&l4]);
    b.output("z", Add, &[&a, &n]);
    b.finish()
}

fn ik_graph() -> DataflowGraph {
    let mut b = Builder::new("ik");
    let x = b.input("x");
    let y = b.input("y");
    let z = b.input("z");
    let l1 = b.constant("L1");
    let l2 = b.constant("L2");
    let l3 = b.constant("L3");
    let l4 = b.constant("L4");
    let two = b.constant("2");
    let half_pi = b.constant("pi/2");

    // Stage 1: theta1, R and r in parallel.
    let zo = b.op(Add, &[&z, &l4]);
    let at = b.tfb(TfbAtan2, &[&x, &zo]);
    b.output("theta1", Negate, &[&at]);

    let xx = b.op(Mul, &[&x, &x]);
    let zo = b.op(Add, &[&z, &l4]);
    let zz = b.op(Mul, &[&zo, &zo]);
    let s = b.op(Add, &[&xx, &zz]);
    let big_r = b.named("R", OpKind::Sqrt, &[&s]);

    let xx = b.op(Mul, &[&x, &x]);
    let zo = b.op(Add, &[&z, &l4]);
    let zz = b.op(Mul, &[&zo, &zo]);
    let nl3 = b.op(Negate, &[&l3]);
    let yo = b.op(Add, &[&y, &nl3]);
    let yy = b.op(Mul, &[&yo, &yo]);
    let s1 = b.op(Add, &[&xx, &zz]);
    let s2 = b.op(Add, &[&s1, &yy]);
    let r = b.named("r", OpKind::Sqrt, &[&s2]);

    // Stage 2: gamma, beta and alpha in parallel.
    let l1l1 = b.op(Mul, &[&l1, &l1]);
    let l2l2 = b.op(Mul, &[&l2, &l2]);
    let rr = b.op(Mul, &[&r, &r]);
    let a1 = b.op(Add, &[&l1l1, &l2l2]);
    let num = b.op(Add, &[&a1, &rr]);
    let tl1 = b.op(Mul, &[&two, &l1]);
    let den = b.op(Mul, &[&tl1, &r]);
    let q = b.op(OpKind::Div, &[&num, &den]);
    let gamma = b.tfb_as("gamma", TfbAcos, &[&q]);

    let nl3 = b.op(Negate, &[&l3]);
    let yo = b.op(Add, &[&y, &nl3]);
    let beta = b.tfb_as("beta", TfbAtan2, &[&yo, &big_r]);

    let l1l1 = b.op(Mul, &[&l1, &l1]);
    let l2l2 = b.op(Mul, &[&l2, &l2]);
    let rr = b.op(Mul, &[&r, &r]);
    let nrr = b.op(Negate, &[&rr]);
    let a1 = b.op(Add, &[&l1l1, &l2l2]);
    let num = b.op(Add, &[&a1, &nrr]);
    let tl1 = b.op(Mul, &[&two, &l1]);
    let den = b.op(Mul, &[&tl1, &l2]);
    let q = b.op(OpKind::Div, &[&num, &den]);
    let alpha = b.tfb_as("alpha", TfbAcos, &[&q]);

    // Stage 3: theta2 and theta3.
    let t2 = b.output("theta2", Add, &[&gamma, &beta]);
    let t2a = b.op(Add, &[&t2, &alpha]);
    let nhp = b.op(Negate, &[&half_pi]);
    b.output("theta3", Add, &[&t2a, &nhp]);
    b.finish()
}

fn kff_graph() -> DataflowGraph {
    let mut b = Builder::new("kff");
    let t1 = b.input("theta1");
    let t2 = b.input("theta2");
    let t3 = b.input("theta3");
    let fx = b.input("Fx");
    let fy = b.input("Fy");
    let fz = b.input("Fz");
    let l1 = b.constant("L1");
    let l2 = b.constant("L2");

    // J11 = -cos1 (L2 sin3 + L1 cos2)
    let c1 = b.tfb(TfbSincos, &[&t1]);
    let s3 = b.tfb(TfbSincos, &[&t3]);
    let c2 = b.tfb(TfbSincos, &[&t2]);
    let m1 = b.op(Mul, &[&l2, &s3]);
    let m2 = b.op(Mul, &[&l1, &c2]);
    let a = b.op(Add, &[&m1, &m2]);
    let m3 = b.op(Mul, &[&c1, &a]);
    let j11 = b.named("J11", Negate, &[&m3]);

    let j21 = b.constant("J21");

    // J31 = -L1 cos2 sin1 - L2 sin3 sin1
    let s1 = b.tfb(TfbSincos, &[&t1]);
    let c2 = b.tfb(TfbSincos, &[&t2]);
    let s3 = b.tfb(TfbSincos, &[&t3]);
    let m1 = b.op(Mul, &[&l1, &c2]);
    let m2 = b.op(Mul, &[&m1, &s1]);
    let m3 = b.op(Mul, &[&l2, &s3]);
    let m4 = b.op(Mul, &[&m3, &s1]);
    let n1 = b.op(Negate, &[&m2]);
    let n2 = b.op(Negate, &[&m4]);
    let j31 = b.named("J31", Add, &[&n1, &n2]);

    // J12 = L1 sin1 sin2
    let s1 = b.tfb(TfbSincos, &[&t1]);
    let s2 = b.tfb(TfbSincos, &[&t2]);
    let m1 = b.op(Mul, &[&l1, &s1]);
    let j12 = b.named("J12", Mul, &[&m1, &s2]);

    // J22 = L1 cos2
    let c2 = b.tfb(TfbSincos, &[&t2]);
    let j22 = b.named("J22", Mul, &[&l1, &c2]);

    // J32 = -L1 sin2 cos1
    let s2 = b.tfb(TfbSincos, &[&t2]);
    let c1 = b.tfb(TfbSincos, &[&t1]);
    let m1 = b.op(Mul, &[&l1, &s2]);
    let m2 = b.op(Mul, &[&m1, &c1]);
    let j32 = b.named("J32", Negate, &[&m2]);

    // J13 = -L2 sin1 cos3
    let s1 = b.tfb(TfbSincos, &[&t1]);
    let c3 = b.tfb(TfbSincos, &[&t3]);
    let m1 = b.op(Mul, &[&l2, &s1]);
    let m2 = b.op(Mul, &[&m1, &c3]);
    let j13 = b.named("J13", Negate, &[&m2]);

    // J23 = L2 sin3
    let s3 = b.tfb(TfbSincos, &[&t3]);
    let j23 = b.named("J23", Mul, &[&l2, &s3]);

    // J33 = L2 cos3 cos1
    let c3 = b.tfb(TfbSincos, &[&t3]);
    let c1 = b.tfb(TfbSincos, &[&t1]);
    let m1 = b.op(Mul, &[&l2, &c3]);
    let j33 = b.named("J33", Mul, &[&m1, &c1]);

    let cols = [[j11, j21, j31], [j12, j22, j32], [j13, j23, j33]];
    for (k, col) in cols.iter().enumerate() {
        let p1 = b.op(Mul, &[&col[0], &fx]);
        let p2 = b.op(Mul, &[&col[1], &fy]);
        let p3 = b.op(Mul, &[&col[2], &fz]);
        let a = b.op(Add, &[&p1, &p2]);
        b.output(&format!("tau{}", k + 1), Add, &[&a, &p3]);
    }
    b.finish()
}

fn fbf_graph() -> DataflowGraph {
    let mut b = Builder::new("fbf");
    for axis in ["x", "y", "z"] {
        let obj = b.input(&format!("{axis}_obj"));
        let env = b.input(&format!("{axis}_env"));
        let h = b.constant(&format!("h{axis}"));
        let d = b.op(Add, &[&obj, &env]);
        b.output(&format!("F{axis}"), Mul, &[&h, &d]);
    }
    b.finish()
}

/// FK, IK, KFF and FBF circuits, keyed by lowercase module name.
pub fn builtin_graphs() -> BTreeMap<String, DataflowGraph> {
    [fk_graph(), ik_graph(), kff_graph(), fbf_graph()]
        .into_iter()
        .map(|g| (g.name.clone(), g))
        .collect()
}

/// Per-sample hardware time of master plus slave: FK and KFF on the master,
/// IK, FK and FBF on the slave.
pub fn t_hardware(module_ns: &BTreeMap<String, f64>) -> Result<f64, LatencyError> {
    let get = |m: &str| {
        module_ns
            .get(m)
            .copied()
            .ok_or_else(|| LatencyError::InvalidTargets(format!("missing module {m}")))
    };
    Ok(2.0 * get("fk")? + get("kff")? + get("ik")? + get("fbf")?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleFit {
    pub module: String,
    pub target_ns: f64,
    pub fitted_ns: f64,
    pub residual_ns: f64,
    pub relative_residual: f64,
    pub path: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub table: OpLatencyTable,
    pub modules: Vec<ModuleFit>,
    pub iterations: usize,
}

const MAX_CALIBRATION_ROUNDS: usize = 64;
const RIDGE: f64 = 1e-2;
const PROXIMAL_STEPS: usize = 8;

/// Fit a non-negative operator table so that each targeted graph's critical
/// path approaches its target latency (ns).
///
/// The critical path of a fixed table is linear in the table along its
/// path, so each round fixes the current critical paths, solves the
/// non-negative least-squares problem over their operator counts and
/// re-evaluates. Rounds stop when the paths stop changing; the best table
/// seen is returned.
pub fn calibrate(
    graphs: &BTreeMap<String, DataflowGraph>,
    targets: &BTreeMap<String, f64>,
) -> Result<CalibrationReport, LatencyError> {
    if targets.is_empty() {
        return Err(LatencyError::InvalidTargets("no targets given".into()));
    }
    let mut selected = Vec::with_capacity(targets.len());
    for (name, &t) in targets {
        if !(t.is_finite() && t > 0.0) {
            return Err(LatencyError::InvalidTargets(format!(
                "target for {name} must be positive, got {t}"
            )));
        }
        let g = graphs
            .get(name)
            .ok_or_else(|| LatencyError::InvalidTargets(format!("unknown module {name}")))?;
        g.validate()?;
        selected.push((g, t));
    }
    let b = DVector::from_iterator(
        selected.len() + 10,
        selected
            .iter()
            .map(|(_, t)| *t)
            .chain(std::iter::repeat_n(0.0, 10)),
    );

    let evaluate = |table: &OpLatencyTable| -> Result<(Vec<PathReport>, f64), LatencyError> {
        let paths = selected
            .iter()
            .map(|(g, _)| g.critical_path(table))
            .collect::<Result<Vec<_>, _>>()?;
        let sse = paths
            .iter()
            .zip(&selected)
            .map(|(p, (_, t))| (p.latency - t).powi(2))
            .sum();
        Ok((paths, sse))
    };

    let mut table = OpLatencyTable::uniform(1.0);
    let mut best: Option<(OpLatencyTable, f64)> = None;
    let mut rounds = 0;
    let mut prev_counts: Option<Vec<[u32; 10]>> = None;
    while rounds < MAX_CALIBRATION_ROUNDS {
        rounds += 1;
        let (paths, _) = evaluate(&table)?;
        let counts: Vec<[u32; 10]> = paths.iter().map(|p| p.op_counts).collect();
        if prev_counts.as_ref() == Some(&counts) {
            break;
        }
        let m = counts.len();
        if counts.iter().flatten().all(|c| *c == 0) {
            return Err(LatencyError::CalibrationDegenerate(
                "no timed operator lies on any critical path".into(),
            ));
        }
        // A light ridge term picks the smallest table among the many exact
        // fits instead of an arbitrary sparse vertex.
        let a = DMatrix::from_fn(m + 10, 10, |r, c| {
            if r < m {
                counts[r][c] as f64
            } else if r - m == c {
                RIDGE
            } else {
                0.0
            }
        });
        let mut x = nnls(&a, &b);
        // Re-centre the ridge on the previous solution so its pull toward
        // zero fades and the fit converges to an exact one nearby.
        for _ in 0..PROXIMAL_STEPS {
            let mut bk = b.clone();
            for c in 0..10 {
                bk[m + c] = RIDGE * x[c];
            }
            x = nnls(&a, &bk);
        }
        let mut v = [0.0; 10];
        v.copy_from_slice(x.as_slice());
        table = OpLatencyTable::from_vec(&v);
        let (_, sse) = evaluate(&table)?;
        if best.as_ref().is_none_or(|(_, s)| sse < *s) {
            best = Some((table, sse));
        }
        prev_counts = Some(counts);
    }
    let (table, _) = best.expect("at least one round");
    let (paths, _) = evaluate(&table)?;
    let modules = selected
        .iter()
        .zip(paths)
        .map(|((g, t), p)| ModuleFit {
            module: g.name.clone(),
            target_ns: *t,
            fitted_ns: p.latency,
            residual_ns: p.latency - t,
            relative_residual: (p.latency - t).abs() / t,
            path: p.nodes,
        })
        .collect();
    Ok(CalibrationReport {
        table,
        modules,
        iterations: rounds,
    })
}

/// Lawson-Hanson non-negative least squares: `min |Ax - b|` s.t. `x >= 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let tol = 1e-10 * a.norm().max(1.0) * b.norm().max(1.0);
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];

    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let mut z = DVector::zeros(n);
        if cols.is_empty() {
            return z;
        }
        let sub = DMatrix::from_fn(a.nrows(), cols.len(), |r, c| a[(r, cols[c])]);
        let sol = sub
            .svd(true, true)
            .solve(b, 1e-12)
            .expect("svd computed with u and v");
        for (k, &j) in cols.iter().enumerate() {
            z[j] = sol[k];
        }
        z
    };

    for _ in 0..(3 * n + 10) {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;

        loop {
            let z = solve_passive(&passive);
            if (0..n).all(|k| !passive[k] || z[k] > 0.0) {
                x = z;
                break;
            }
            // Step back toward the feasible region and drop the blocking
            // variables.
            let mut alpha = f64::INFINITY;
            for k in 0..n {
                if passive[k] && z[k] <= 0.0 {
                    alpha = alpha.min(x[k] / (x[k] - z[k]));
                }
            }
            x += (z - &x) * alpha;
            for k in 0..n {
                if passive[k] && x[k] <= tol {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
        }
    }
    x
}
