//! Serialized output documents: effect curves, benchmark tables, and
//! causal graphs (JSON + DOT).

use mintt::{BenchmarkReport, CausalGraph, EffectCurve};
use serde::Serialize;

/// Effect-curve document: the curve plus the fingerprint of the resolved
/// configuration that produced it.
#[derive(Serialize)]
pub struct EffectCurveDoc<'a> {
    pub query: &'a mintt::Query,
    pub xs: &'a [f64],
    pub effects: &'a [f64],
    pub provenance: mintt::Provenance,
    pub config_hash: &'a str,
}

impl<'a> EffectCurveDoc<'a> {
    pub fn new(curve: &'a EffectCurve, config_hash: &'a str) -> Self {
        Self {
            query: &curve.query,
            xs: &curve.xs,
            effects: &curve.effects,
            provenance: curve.provenance,
            config_hash,
        }
    }
}

#[derive(Serialize)]
struct GraphEdgeDoc {
    from: [usize; 2],
    to: [usize; 2],
    weight: f64,
}

/// Graph document: nodes are (component, lag) pairs with lag 0 the
/// response time; edges point forward in time.
#[derive(Serialize)]
pub struct GraphDoc {
    names: Vec<String>,
    nodes: Vec<[usize; 2]>,
    edges: Vec<GraphEdgeDoc>,
    threshold: f64,
    instantaneous: bool,
}

impl GraphDoc {
    pub fn new(graph: &CausalGraph) -> Self {
        let mut nodes = Vec::with_capacity(graph.l * (graph.s_max + 1));
        for c in 0..graph.l {
            for lag in 0..=graph.s_max {
                nodes.push([c, lag]);
            }
        }
        let edges = graph
            .edges
            .iter()
            .map(|e| GraphEdgeDoc {
                from: [e.from_component, e.lag],
                to: [e.to_component, 0],
                weight: e.weight,
            })
            .collect();
        Self {
            names: graph.names.clone(),
            nodes,
            edges,
            threshold: graph.threshold,
            instantaneous: graph.instantaneous,
        }
    }
}

pub fn to_json_line<T: Serialize>(doc: &T) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("document serializes");
    text.push('\n');
    text
}

fn node_label(name: &str, lag: usize) -> String {
    if lag == 0 {
        format!("{name}[t]")
    } else {
        format!("{name}[t-{lag}]")
    }
}

/// Graphviz rendering: every (component, lag) node, one edge per
/// surviving score, pen width proportional to the score between the
/// minimum and maximum surviving weights.
pub fn graph_to_dot(graph: &CausalGraph) -> String {
    let mut out = String::from("digraph causal_effects {\n  rankdir=RL;\n  node [shape=box];\n");
    for c in 0..graph.l {
        for lag in 0..=graph.s_max {
            out.push_str(&format!("  \"{}\";\n", node_label(&graph.names[c], lag)));
        }
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for e in &graph.edges {
        lo = lo.min(e.weight);
        hi = hi.max(e.weight);
    }
    for e in &graph.edges {
        let pen = if hi > lo {
            1.0 + 4.0 * (e.weight - lo) / (hi - lo)
        } else {
            3.0
        };
        out.push_str(&format!(
            "  \"{}\" -> \"{}\" [penwidth={:.3}, label=\"{:.3}\"];\n",
            node_label(&graph.names[e.from_component], e.lag),
            node_label(&graph.names[e.to_component], 0),
            pen,
            e.weight
        ));
    }
    out.push_str("}\n");
    out
}

/// One-row human-readable benchmark table (wall time included here; the
/// JSON report stays byte-reproducible).
pub fn benchmark_table(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    out.push_str(
        "model  method     transform  rule        n      p   mse         time/pair[s]  true effect range\n",
    );
    out.push_str(&format!(
        "{:<6} {:<10} {:<10} {:<11} {:<6} {:<3} {:<11.6} {:<13.3} [{:.4}, {:.4}]\n",
        report.model_id,
        match report.method {
            mintt::Method::MintT => "mint-t",
            mintt::Method::Reference => "reference",
        },
        report.transform,
        report.intervention_rule,
        report.n,
        report.p,
        report.mse,
        report.wall_time_per_pair_seconds,
        report.true_effect_range.0,
        report.true_effect_range.1,
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use mintt::GraphEdge;

    fn sample_graph() -> CausalGraph {
        CausalGraph {
            names: vec!["a".into(), "b".into()],
            l: 2,
            s_max: 2,
            threshold: 0.1,
            instantaneous: false,
            edges: vec![
                GraphEdge {
                    from_component: 0,
                    lag: 2,
                    to_component: 1,
                    weight: 0.5,
                },
                GraphEdge {
                    from_component: 1,
                    lag: 1,
                    to_component: 1,
                    weight: 0.25,
                },
            ],
        }
    }

    #[test]
    fn dot_contains_all_nodes_and_edges() {
        let dot = graph_to_dot(&sample_graph());
        let node_lines = dot
            .lines()
            .filter(|l| l.trim_end().ends_with("\";"))
            .count();
        assert_eq!(node_lines, 2 * 3);
        assert_eq!(dot.matches("->").count(), 2);
        assert!(dot.contains("\"a[t-2]\" -> \"b[t]\""));
        assert!(dot.contains("penwidth=5.000"));
        assert!(dot.contains("penwidth=1.000"));
    }

    #[test]
    fn graph_doc_lists_every_node() {
        let doc = GraphDoc::new(&sample_graph());
        assert_eq!(doc.nodes.len(), 2 * 3);
        assert_eq!(doc.edges.len(), 2);
        let json = to_json_line(&doc);
        assert!(json.contains("\"threshold\""));
    }
}
