//! Directed graphs in adjacency-list form, SCCs and reachability.

/// Adjacency lists stored contiguously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Digraph {
    /// Build from per-node successor lists. Duplicates are removed.
    pub fn from_adjacency(adj: Vec<Vec<usize>>) -> Digraph {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for mut succ in adj {
            succ.sort_unstable();
            succ.dedup();
            targets.extend(succ);
            offsets.push(targets.len());
        }
        Digraph { offsets, targets }
    }

    pub fn from_edges(nodes: usize, edges: &[(usize, usize)]) -> Digraph {
        let mut adj = vec![Vec::new(); nodes];
        for &(a, b) in edges {
            adj[a].push(b);
        }
        Digraph::from_adjacency(adj)
    }

    pub fn nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.successors(a).binary_search(&b).is_ok()
    }

    /// Nodes reachable from any of `sources` (sources included).
    pub fn reachable_from(&self, sources: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.nodes()];
        let mut stack = Vec::new();
        for &s in sources {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
        while let Some(v) = stack.pop() {
            for &w in self.successors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }
}

/// Strongly connected components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sccs {
    /// Component id of each node.
    pub component: Vec<usize>,
    /// Members of each component, ascending. Components are numbered in
    /// reverse topological order: every edge goes from a higher or equal id
    /// to a lower or equal one.
    pub members: Vec<Vec<usize>>,
}

impl Sccs {
    pub fn count(&self) -> usize {
        self.members.len()
    }

    /// Whether component `c` has no edge leaving it.
    pub fn is_sink(&self, g: &Digraph, c: usize) -> bool {
        self.members[c]
            .iter()
            .all(|&v| g.successors(v).iter().all(|&w| self.component[w] == c))
    }

    /// Component ids in topological order (sources first).
    pub fn topological_order(&self) -> Vec<usize> {
        (0..self.count()).rev().collect()
    }
}

/// Tarjan's algorithm with an explicit call stack, `O(V + E)`.
pub fn tarjan(g: &Digraph) -> Sccs {
    const UNVISITED: usize = usize::MAX;
    let n = g.nodes();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut component = vec![UNVISITED; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut next = 0;
    // (node, position in its successor list)
    let mut calls: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        calls.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = calls.last_mut() {
            let succ = g.successors(v);
            if *pos < succ.len() {
                let w = succ[*pos];
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let id = members.len();
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    component[w] = id;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                members.push(comp);
            }
        }
    }
    Sccs { component, members }
}
