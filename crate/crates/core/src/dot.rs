//! Graphviz export of a composed chain.

use std::fmt::Write;

use crate::chain::{GlobalChain, RecurrenceAnalysis};
use crate::product::ProductPosg;

fn node_label(chain: &GlobalChain, p: Option<&ProductPosg>, m: usize) -> String {
    let (sp, gd, ga) = chain.decode(m);
    match p {
        Some(p) => {
            let (s, q) = p.origin(sp);
            format!("m{m}\\n(s{s}, q{q}, {gd}, {ga})")
        }
        None => format!("m{m}"),
    }
}

fn node_line(out: &mut String, chain: &GlobalChain, p: Option<&ProductPosg>, m: usize, indent: &str) {
    let finite = chain.pairs().iter().any(|pr| pr.finite[m]);
    let infinite = chain.pairs().iter().any(|pr| pr.infinite[m]);
    let fill = match (infinite, finite) {
        (true, true) => ", style=filled, fillcolor=\"green:red\"",
        (true, false) => ", style=filled, fillcolor=green",
        (false, true) => ", style=filled, fillcolor=red",
        (false, false) => "",
    };
    let shape = if m == chain.initial() {
        ", shape=doublecircle"
    } else {
        ""
    };
    let _ = writeln!(
        out,
        "{indent}m{m} [label=\"{}\"{fill}{shape}];",
        node_label(chain, p, m)
    );
}

/// DOT digraph with one cluster per recurrent class. States in some
/// `K(i)` are green, states in some `L(i)` red.
pub fn export_dot(chain: &GlobalChain, analysis: &RecurrenceAnalysis, p: Option<&ProductPosg>) -> String {
    let mut out = String::from("digraph gmc {\n  rankdir=LR;\n  node [shape=circle];\n");
    for (k, class) in analysis.classes().iter().enumerate() {
        let tag = if analysis.is_feasible(k) {
            "feasible"
        } else {
            "infeasible"
        };
        let _ = writeln!(out, "  subgraph cluster_{k} {{\n    label=\"R{k} ({tag})\";");
        for &m in class {
            node_line(&mut out, chain, p, m, "    ");
        }
        out.push_str("  }\n");
    }
    for m in (0..chain.states()).filter(|&m| !analysis.is_recurrent(m)) {
        node_line(&mut out, chain, p, m, "  ");
    }
    for m in 0..chain.states() {
        for &(t, q) in chain.row(m) {
            if analysis.graph().has_edge(m, t) {
                let _ = writeln!(out, "  m{m} -> m{t} [label=\"{q:.4}\"];");
            }
        }
    }
    out.push_str("}\n");
    out
}
