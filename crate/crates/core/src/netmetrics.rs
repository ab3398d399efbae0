//! Distances, node strengths, threshold asset graphs and sector indices.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::Serialize;

use crate::correlate::{pearson_matrix, CorrelationMatrix};
use crate::corpus::{ReturnPanel, SectorTaxonomy};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::matrix::{LabeledMatrix, Variable};
use crate::scalar::Scalar;

pub const CORRELATION_GRAPH_THRESHOLD: f64 = 0.8;
pub const TE_GRAPH_THRESHOLD: f64 = 0.7;

/// Symmetric, non-negative, zero-diagonal dissimilarities.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<S>(LabeledMatrix<S>);

impl<S: Scalar> DistanceMatrix<S> {
    pub fn from_matrix(matrix: LabeledMatrix<S>) -> Result<Self> {
        let n = matrix.len();
        for i in 0..n {
            if matrix.get(i, i) != S::zero() {
                return Err(Error::param("distance", format!("diagonal entry {i} is not zero")));
            }
            for j in 0..n {
                let v = matrix.get(i, j);
                if !(v >= S::zero()) || !v.is_finite() {
                    return Err(Error::param("distance", format!("entry ({i},{j}) is negative or non-finite")));
                }
                if v != matrix.get(j, i) {
                    return Err(Error::param("distance", format!("entry ({i},{j}) is not symmetric")));
                }
            }
        }
        Ok(DistanceMatrix(matrix))
    }

    pub fn matrix(&self) -> &LabeledMatrix<S> {
        &self.0
    }

    pub fn values(&self) -> &Array2<S> {
        self.0.values()
    }

    pub fn variables(&self) -> &[Variable] {
        self.0.variables()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.0.get(i, j)
    }
}

fn similarity_to_distance<S: Scalar>(v: S) -> S {
    (S::of(2.0) * (S::one() - v)).max(S::zero()).sqrt()
}

/// `d = sqrt(2 (1 − C))`, so d ∈ [0, 2].
pub fn correlation_distance<S: Scalar>(corr: &CorrelationMatrix<S>) -> DistanceMatrix<S> {
    let mut values = corr.values().mapv(similarity_to_distance);
    for i in 0..values.nrows() {
        values[[i, i]] = S::zero();
    }
    DistanceMatrix(LabeledMatrix::new(corr.variables().to_vec(), values).expect("square"))
}

/// Distance derived from column-normalized S21, plus how many off-diagonal inputs
/// exceeded 1 and were clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct TeDistance<S> {
    pub distance: DistanceMatrix<S>,
    pub clamped: usize,
}

/// Applies `sqrt(2 (1 − v))` with `v` clamped to [−1, 1], then keeps the smaller of
/// the two directed distances for every pair.
pub fn te_distance<S: Scalar>(norm_s21: &LabeledMatrix<S>) -> TeDistance<S> {
    let n = norm_s21.len();
    let mut clamped = 0;
    let mut directed = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = norm_s21.get(i, j);
            if v > S::one() || v < -S::one() {
                clamped += 1;
            }
            directed[[i, j]] = similarity_to_distance(v.max(-S::one()).min(S::one()));
        }
    }
    if clamped > 0 {
        tracing::warn!(clamped, "normalized transfer entropy above 1 clamped before distance");
    }
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                values[[i, j]] = directed[[i, j]].min(directed[[j, i]]);
            }
        }
    }
    let distance = DistanceMatrix(LabeledMatrix::new(norm_s21.variables().to_vec(), values).expect("square"));
    TeDistance { distance, clamped }
}

/// `NS_i = Σ_j C_ij`, self-term included.
pub fn node_strength<S: Scalar>(corr: &CorrelationMatrix<S>) -> Array1<S> {
    row_sums(corr.values())
}

fn row_sums<S: Scalar>(m: &Array2<S>) -> Array1<S> {
    m.rows().into_iter().map(|r| r.iter().copied().sum()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedStrengths<S> {
    /// Column sums: total weight arriving at each node.
    pub in_strength: Array1<S>,
    /// Row sums: total weight leaving each node.
    pub out_strength: Array1<S>,
}

/// With `M[i][j]` the weight from `i` to `j`: out = row sums, in = column sums.
pub fn in_out_node_strength<S: Scalar>(te: &LabeledMatrix<S>) -> DirectedStrengths<S> {
    let m = te.values();
    DirectedStrengths {
        in_strength: m.columns().into_iter().map(|c| c.iter().copied().sum()).collect(),
        out_strength: row_sums(m),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    /// Index into [`AssetGraph::nodes`].
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    /// Directed graphs only: the reverse edge is also present.
    pub reciprocal: bool,
}

/// Threshold-filtered network without isolated nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetGraph {
    pub nodes: Vec<Variable>,
    pub edges: Vec<Edge>,
    pub directed: bool,
}

impl AssetGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// Keeps every off-diagonal entry with weight ≥ `threshold` and drops isolated nodes.
/// Undirected graphs read the upper triangle only.
pub fn asset_graph<S: Scalar>(matrix: &LabeledMatrix<S>, threshold: S, directed: bool) -> Result<AssetGraph> {
    let n = matrix.len();
    if !directed && matrix.max_asymmetry() > S::of(1e-12) {
        return Err(Error::param("matrix", "undirected graph needs a symmetric matrix"));
    }
    let kept = |i: usize, j: usize| i != j && matrix.get(i, j) >= threshold;
    let mut raw = Vec::new();
    for i in 0..n {
        let start = if directed { 0 } else { i + 1 };
        for j in start..n {
            if kept(i, j) {
                raw.push((i, j, matrix.get(i, j).as_f64(), directed && kept(j, i)));
            }
        }
    }
    let mut used = vec![false; n];
    for &(i, j, _, _) in &raw {
        used[i] = true;
        used[j] = true;
    }
    let mut position = vec![usize::MAX; n];
    let mut nodes = Vec::new();
    for i in (0..n).filter(|&i| used[i]) {
        position[i] = nodes.len();
        nodes.push(matrix.variables()[i].clone());
    }
    let edges = raw
        .into_iter()
        .map(|(i, j, weight, reciprocal)| Edge { from: position[i], to: position[j], weight, reciprocal })
        .collect();
    Ok(AssetGraph { nodes, edges, directed })
}

/// Weakly connected components as node indices, largest first, ties broken by the
/// smallest member index. Members are sorted ascending.
pub fn connected_components(graph: &AssetGraph) -> Vec<Vec<usize>> {
    let n = graph.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in &graph.edges {
        let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    let mut comps: Vec<Vec<usize>> = groups.into_values().collect();
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    comps
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn sector_label(taxonomy: Option<&SectorTaxonomy>, ticker: &str) -> String {
    taxonomy.and_then(|t| t.get(ticker)).map(|c| c.sector.clone()).unwrap_or_default()
}

/// GraphML with `ticker`/`sector` node attributes and `weight`/`reciprocal` edge attributes.
pub fn to_graphml(graph: &AssetGraph, taxonomy: Option<&SectorTaxonomy>) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    out.push_str("  <key id=\"ticker\" for=\"node\" attr.name=\"ticker\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"sector\" for=\"node\" attr.name=\"sector\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    if graph.directed {
        out.push_str("  <key id=\"reciprocal\" for=\"edge\" attr.name=\"reciprocal\" attr.type=\"boolean\"/>\n");
    }
    let kind = if graph.directed { "directed" } else { "undirected" };
    let _ = writeln!(out, "  <graph id=\"G\" edgedefault=\"{kind}\">");
    for (i, v) in graph.nodes.iter().enumerate() {
        let _ = writeln!(out, "    <node id=\"n{i}\">");
        let _ = writeln!(out, "      <data key=\"ticker\">{}</data>", xml_escape(&v.to_string()));
        let _ = writeln!(out, "      <data key=\"sector\">{}</data>", xml_escape(&sector_label(taxonomy, &v.ticker)));
        out.push_str("    </node>\n");
    }
    for (k, e) in graph.edges.iter().enumerate() {
        let _ = writeln!(out, "    <edge id=\"e{k}\" source=\"n{}\" target=\"n{}\">", e.from, e.to);
        let _ = writeln!(out, "      <data key=\"weight\">{}</data>", e.weight);
        if graph.directed {
            let _ = writeln!(out, "      <data key=\"reciprocal\">{}</data>", e.reciprocal);
        }
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

/// Graphviz DOT. Reciprocal directed pairs are written once, without arrowheads.
pub fn to_dot(graph: &AssetGraph, taxonomy: Option<&SectorTaxonomy>) -> String {
    let mut out = String::new();
    let (kw, arrow) = if graph.directed { ("digraph", "->") } else { ("graph", "--") };
    let _ = writeln!(out, "{kw} assets {{");
    for (i, v) in graph.nodes.iter().enumerate() {
        let ticker = v.to_string();
        let _ = writeln!(
            out,
            "  n{i} [label=\"{}\", ticker=\"{}\", sector=\"{}\"];",
            ticker.replace('"', "\\\""),
            ticker.replace('"', "\\\""),
            sector_label(taxonomy, &v.ticker).replace('"', "\\\"")
        );
    }
    for e in &graph.edges {
        if e.reciprocal {
            if e.from > e.to {
                continue;
            }
            let _ = writeln!(
                out,
                "  n{} {arrow} n{} [weight={}, reciprocal=true, dir=none];",
                e.from, e.to, e.weight
            );
        } else {
            let _ = writeln!(out, "  n{} {arrow} n{} [weight={}];", e.from, e.to, e.weight);
        }
    }
    out.push_str("}\n");
    out
}

/// Sector index built from the leading eigenvector of the members' correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorIndex<S> {
    pub sector: String,
    pub members: Vec<String>,
    pub weights: Array1<S>,
}

/// One index series per sector: members' returns weighted by the leading
/// eigenvector of their correlation matrix, oriented so the weights sum positive.
pub fn sector_index<S: Scalar>(
    panel: &ReturnPanel<S>,
    taxonomy: &SectorTaxonomy,
) -> Result<(ReturnPanel<S>, Vec<SectorIndex<S>>)> {
    if panel.is_expanded() {
        return Err(Error::AlreadyExpanded);
    }
    let tickers = panel.tickers();
    let groups = taxonomy.group_by_sector(&tickers)?;
    if let Some((sector, members)) = groups.iter().find(|(_, m)| m.len() < 2) {
        return Err(Error::SmallSector { sector: sector.clone(), count: members.len() });
    }
    let groups: Vec<(String, Vec<String>)> = groups.into_iter().collect();
    let indices: Vec<SectorIndex<S>> = groups
        .par_iter()
        .map(|(sector, members)| {
            let cols: Vec<usize> = members
                .iter()
                .map(|t| panel.index_of(&Variable::new(t.clone())).expect("member in panel"))
                .collect();
            let sub = panel.select_columns(&cols);
            let corr = pearson_matrix(&sub)?;
            let eig = symmetric_eigen(corr.values());
            let mut weights = eig.vectors.column(0).to_owned();
            if weights.sum() < S::zero() {
                weights.mapv_inplace(|w| -w);
            }
            Ok(SectorIndex { sector: sector.clone(), members: members.clone(), weights })
        })
        .collect::<Result<_>>()?;

    let mut series = Array2::zeros((panel.n_rows(), indices.len()));
    for (k, idx) in indices.iter().enumerate() {
        for (member, &w) in idx.members.iter().zip(idx.weights.iter()) {
            let c = panel.index_of(&Variable::new(member.clone())).expect("member in panel");
            let mut out = series.column_mut(k);
            out.scaled_add(w, &panel.column(c));
        }
    }
    let names: Vec<Variable> = indices.iter().map(|i| Variable::new(i.sector.clone())).collect();
    let out = ReturnPanel::new(panel.dates().to_vec(), names, series)?;
    Ok((out, indices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Classification;
    use ndarray::array;

    fn vars(n: usize) -> Vec<Variable> {
        (0..n).map(|i| Variable::new(format!("v{i}"))).collect()
    }

    fn corr(values: Array2<f64>) -> CorrelationMatrix<f64> {
        let n = values.nrows();
        CorrelationMatrix::from_matrix(LabeledMatrix::new(vars(n), values).unwrap()).unwrap()
    }

    #[test]
    fn distance_endpoints() {
        let c = corr(array![[1.0, 0.0, -1.0], [0.0, 1.0, 1.0], [-1.0, 1.0, 1.0]]);
        let d = correlation_distance(&c);
        assert_eq!(d.get(0, 0), 0.0);
        assert!((d.get(0, 1) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(d.get(0, 2), 2.0);
        assert_eq!(d.get(1, 2), 0.0);
    }

    #[test]
    fn te_distance_takes_smaller_direction() {
        // v chosen so that d_01 = 0.5, d_10 = 0.7.
        let v01: f64 = 1.0 - 0.25 / 2.0;
        let v10: f64 = 1.0 - 0.49 / 2.0;
        let m = LabeledMatrix::new(vars(2), array![[1.0, v01], [v10, 1.0]]).unwrap();
        let td = te_distance(&m);
        assert!((td.distance.get(0, 1) - 0.5).abs() < 1e-12);
        assert_eq!(td.distance.get(0, 1), td.distance.get(1, 0));
        assert_eq!(td.clamped, 0);

        let ones = LabeledMatrix::new(vars(2), array![[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert_eq!(te_distance(&ones).distance.get(0, 1), 0.0);

        let over = LabeledMatrix::new(vars(2), array![[1.0, 1.3], [0.2, 1.0]]).unwrap();
        let td = te_distance(&over);
        assert_eq!(td.clamped, 1);
        assert_eq!(td.distance.get(0, 1), 0.0);
    }

    #[test]
    fn te_distance_symmetric_input_unchanged() {
        let m = LabeledMatrix::new(vars(3), array![[1.0f64, 0.2, 0.4], [0.2, 1.0, 0.6], [0.4, 0.6, 1.0]]).unwrap();
        let td = te_distance(&m);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { (2.0 * (1.0 - m.get(i, j))).sqrt() };
                assert!((td.distance.get(i, j) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn strengths() {
        let ns = node_strength(&corr(Array2::eye(3)));
        assert_eq!(ns.to_vec(), vec![1.0, 1.0, 1.0]);
        let ns = node_strength(&corr(Array2::from_elem((3, 3), 1.0)));
        assert_eq!(ns.to_vec(), vec![3.0, 3.0, 3.0]);

        let m = LabeledMatrix::new(vars(2), array![[0.0, 1.0], [0.0, 0.0]]).unwrap();
        let s = in_out_node_strength(&m);
        assert_eq!(s.out_strength.to_vec(), vec![1.0, 0.0]);
        assert_eq!(s.in_strength.to_vec(), vec![0.0, 1.0]);
        let z = in_out_node_strength(&LabeledMatrix::new(vars(2), Array2::<f64>::zeros((2, 2))).unwrap());
        assert!(z.in_strength.iter().chain(z.out_strength.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn graph_thresholds() {
        let ident = LabeledMatrix::new(vars(4), Array2::<f64>::eye(4)).unwrap();
        let g = asset_graph(&ident, 0.8, false).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (0, 0));
        assert!(connected_components(&g).is_empty());

        let mut m = Array2::from_elem((4, 4), 0.1);
        m.diag_mut().fill(1.0);
        m[[1, 3]] = 0.9;
        m[[3, 1]] = 0.9;
        let g = asset_graph(&LabeledMatrix::new(vars(4), m.clone()).unwrap(), 0.8, false).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.nodes, vec![Variable::new("v1"), Variable::new("v3")]);

        let full = asset_graph(&LabeledMatrix::new(vars(4), m).unwrap(), -1.0, false).unwrap();
        assert_eq!((full.node_count(), full.edge_count()), (4, 6));

        let asym = LabeledMatrix::new(vars(2), array![[1.0, 0.9], [0.1, 1.0]]).unwrap();
        assert!(asset_graph(&asym, 0.5, false).is_err());
    }

    #[test]
    fn directed_reciprocity() {
        let m = LabeledMatrix::new(vars(3), array![[1.0, 0.9, 0.8], [0.75, 1.0, 0.1], [0.1, 0.1, 1.0]]).unwrap();
        let g = asset_graph(&m, 0.7, true).unwrap();
        assert_eq!(g.edge_count(), 3);
        let recip: Vec<bool> = g.edges.iter().map(|e| e.reciprocal).collect();
        assert_eq!(recip, vec![true, false, true]);
        let dot = to_dot(&g, None);
        assert_eq!(dot.matches("dir=none").count(), 1);
        assert!(dot.starts_with("digraph"));
        let xml = to_graphml(&g, None);
        assert_eq!(xml.matches("<edge ").count(), 3);
        assert!(xml.contains("edgedefault=\"directed\""));
    }

    #[test]
    fn components_ordering() {
        let graph = |edges: &[(usize, usize)], n: usize| AssetGraph {
            nodes: vars(n),
            edges: edges.iter().map(|&(a, b)| Edge { from: a, to: b, weight: 1.0, reciprocal: false }).collect(),
            directed: false,
        };
        assert_eq!(connected_components(&graph(&[(0, 1), (2, 3)], 4)), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(connected_components(&graph(&[(0, 1), (1, 2)], 3)), vec![vec![0, 1, 2]]);
        assert_eq!(connected_components(&graph(&[(3, 4), (0, 2), (2, 1)], 5)), vec![vec![0, 1, 2], vec![3, 4]]);
    }

    #[test]
    fn graphml_carries_sector() {
        let mut tax = SectorTaxonomy::default();
        tax.insert("v0", Classification { sector: "Energy".into(), industry: "Oil".into(), subindustry: "x".into() });
        let m = LabeledMatrix::new(vars(2), array![[1.0, 0.9], [0.9, 1.0]]).unwrap();
        let g = asset_graph(&m, 0.8, false).unwrap();
        let xml = to_graphml(&g, Some(&tax));
        assert!(xml.contains("<data key=\"sector\">Energy</data>"));
        assert!(!xml.contains("reciprocal"));
        assert!(to_dot(&g, Some(&tax)).contains("n0 -- n1 [weight=0.9]"));
    }

    fn tax_for(groups: &[(&str, &[&str])]) -> SectorTaxonomy {
        let mut tax = SectorTaxonomy::default();
        for (sector, members) in groups {
            for m in *members {
                tax.insert(*m, Classification { sector: sector.to_string(), industry: String::new(), subindustry: String::new() });
            }
        }
        tax
    }

    #[test]
    fn two_identical_members_get_equal_weights() {
        let names = vec!["a".to_string(), "b".to_string()];
        let x = array![[0.01, 0.01], [-0.02, -0.02], [0.03, 0.03], [0.0, 0.0]];
        let panel = ReturnPanel::from_columns(&names, x).unwrap();
        let (index, meta) = sector_index(&panel, &tax_for(&[("Tech", &["a", "b"])])).unwrap();
        let w = &meta[0].weights;
        assert!((w[0] - 0.5f64.sqrt()).abs() < 1e-12 && (w[1] - 0.5f64.sqrt()).abs() < 1e-12, "{w}");
        let expect = [0.01f64, -0.02, 0.03, 0.0].map(|v| v * 2.0 * 0.5f64.sqrt());
        for (got, want) in index.column(0).iter().zip(expect) {
            assert!((got - want).abs() < 1e-14);
        }
        assert_eq!(index.variables()[0].ticker, "Tech");
    }

    #[test]
    fn small_sector_rejected() {
        let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let panel = ReturnPanel::from_columns(&names, array![[0.1, 0.2, 0.3], [0.2, 0.1, 0.0], [0.0, 0.3, 0.1]]).unwrap();
        let err = sector_index(&panel, &tax_for(&[("Tech", &["a", "b"]), ("Energy", &["c"])])).unwrap_err();
        assert!(matches!(err, Error::SmallSector { sector, count: 1 } if sector == "Energy"));
        let err = sector_index(&panel, &tax_for(&[("Tech", &["a", "b"])])).unwrap_err();
        assert!(matches!(err, Error::MissingTaxonomy { ticker } if ticker == "c"));
    }
}
