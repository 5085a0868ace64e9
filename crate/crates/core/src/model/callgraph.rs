//! Call graph over function definitions, with `<module>` nodes for top-level
//! code and sentinel nodes for callees defined outside the project.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use super::{CallFact, FunctionDef};

/// Name suffix of the per-file node that owns top-level statements.
pub const MODULE_NODE: &str = "<module>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Function,
    Module,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphNode {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub kind: NodeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<(u32, u32)>,
    /// Resolved names of calls made inside loops of this node's body.
    pub calls_inside_loops: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CallEdge {
    pub caller: usize,
    pub callee: usize,
    pub in_loop: bool,
    /// Id of the call site.
    pub site: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CallGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<CallEdge>,
    #[serde(skip)]
    local: HashMap<(String, String), usize>,
    #[serde(skip)]
    modules: HashMap<String, usize>,
    #[serde(skip)]
    incoming: Vec<Vec<usize>>,
}

impl CallGraph {
    /// Node of a function (or the file's module node when `function` is None).
    pub fn node_of(&self, file: &str, function: Option<&str>) -> Option<usize> {
        match function {
            Some(f) => self.local.get(&(file.to_string(), f.to_string())).copied(),
            None => self.modules.get(file).copied(),
        }
    }

    /// Node that owns a call site.
    pub fn caller_of(&self, site: &CallFact) -> Option<usize> {
        self.node_of(&site.file, site.enclosing_function.as_deref())
            .or_else(|| self.node_of(&site.file, None))
    }

    pub fn node_by_name(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Edges entering `node`.
    pub fn incoming(&self, node: usize) -> impl Iterator<Item = &CallEdge> {
        self.incoming
            .get(node)
            .into_iter()
            .flatten()
            .map(|&e| &self.edges[e])
    }

    /// `(caller name, callee name, in_loop)` for every edge.
    pub fn edge_names(&self) -> Vec<(&str, &str, bool)> {
        self.edges
            .iter()
            .map(|e| {
                (
                    self.nodes[e.caller].name.as_str(),
                    self.nodes[e.callee].name.as_str(),
                    e.in_loop,
                )
            })
            .collect()
    }
}

/// Builds the graph. `files` lists every unit so that each gets a module node.
pub fn build_call_graph(files: &[String], functions: &[FunctionDef], calls: &[CallFact]) -> CallGraph {
    let mut g = CallGraph::default();
    for file in files {
        let module = super::parse::module_name(file);
        let id = g.nodes.len();
        g.nodes.push(GraphNode {
            name: format!("{module}.{MODULE_NODE}"),
            file: Some(file.clone()),
            kind: NodeKind::Module,
            span: None,
            calls_inside_loops: BTreeSet::new(),
        });
        g.modules.insert(file.clone(), id);
    }

    // Suffix index over qualified names. One-segment suffixes of methods are
    // left out: a bare name never resolves to a method.
    let mut by_suffix: HashMap<String, Vec<usize>> = HashMap::new();
    let mut exact: HashMap<String, Vec<usize>> = HashMap::new();
    for f in functions {
        let key = (f.file.clone(), f.qualified_name.clone());
        let id = match g.local.get(&key) {
            Some(&id) => {
                // Conditional redefinitions share one node covering all spans.
                let span = g.nodes[id].span.get_or_insert(f.span);
                span.0 = span.0.min(f.span.0);
                span.1 = span.1.max(f.span.1);
                continue;
            }
            None => g.nodes.len(),
        };
        g.nodes.push(GraphNode {
            name: f.qualified_name.clone(),
            file: Some(f.file.clone()),
            kind: NodeKind::Function,
            span: Some(f.span),
            calls_inside_loops: BTreeSet::new(),
        });
        g.local.insert(key, id);
        exact.entry(f.qualified_name.clone()).or_default().push(id);
        let segs: Vec<&str> = f.qualified_name.split('.').collect();
        let min_len = if f.class.is_some() { 2 } else { 1 };
        for k in min_len..segs.len() {
            by_suffix
                .entry(segs[segs.len() - k..].join("."))
                .or_default()
                .push(id);
        }
    }

    let mut externals: HashMap<String, usize> = HashMap::new();
    for call in calls {
        let Some(caller) = g.caller_of(call) else { continue };
        if call.lexical_loop_depth > 0 {
            g.nodes[caller]
                .calls_inside_loops
                .insert(call.resolved_name.clone());
        }
        let callee = match resolve_callee(&g, &exact, &by_suffix, call) {
            Resolution::Local(id) => id,
            Resolution::Ambiguous => continue,
            Resolution::External => {
                let name = call.resolved_name.clone();
                *externals.entry(name.clone()).or_insert_with(|| {
                    g.nodes.push(GraphNode {
                        name,
                        file: None,
                        kind: NodeKind::External,
                        span: None,
                        calls_inside_loops: BTreeSet::new(),
                    });
                    g.nodes.len() - 1
                })
            }
        };
        g.edges.push(CallEdge {
            caller,
            callee,
            in_loop: call.lexical_loop_depth > 0,
            site: call.id,
        });
    }

    g.incoming = vec![Vec::new(); g.nodes.len()];
    for (i, e) in g.edges.iter().enumerate() {
        g.incoming[e.callee].push(i);
    }
    g
}

enum Resolution {
    Local(usize),
    Ambiguous,
    External,
}

fn pick(g: &CallGraph, candidates: &[usize], file: &str) -> Resolution {
    match candidates {
        [] => Resolution::External,
        [one] => Resolution::Local(*one),
        many => {
            let same: Vec<usize> = many
                .iter()
                .copied()
                .filter(|&c| g.nodes[c].file.as_deref() == Some(file))
                .collect();
            match same.as_slice() {
                [one] => Resolution::Local(*one),
                _ => Resolution::Ambiguous,
            }
        }
    }
}

fn resolve_callee(
    g: &CallGraph,
    exact: &HashMap<String, Vec<usize>>,
    by_suffix: &HashMap<String, Vec<usize>>,
    call: &CallFact,
) -> Resolution {
    let name = call.resolved_name.trim_start_matches('.');
    if let (Some(rest), Some(class)) = (
        name.strip_prefix("self.").or_else(|| name.strip_prefix("cls.")),
        &call.enclosing_class,
    ) {
        if let Some(ids) = exact.get(&format!("{class}.{rest}")) {
            if let r @ Resolution::Local(_) = pick(g, ids, &call.file) {
                return r;
            }
        }
    }
    if let Some(ids) = exact.get(name) {
        return pick(g, ids, &call.file);
    }
    match by_suffix.get(name) {
        Some(ids) => pick(g, ids, &call.file),
        None => Resolution::External,
    }
}

/// Whether `site` runs inside a loop, either lexically or because a chain of
/// at most `max_depth` call edges, the first of which sits in a loop, leads
/// into the site's enclosing function.
pub fn loop_reachable(cg: &CallGraph, site: &CallFact, max_depth: u32) -> bool {
    if site.lexical_loop_depth > 0 {
        return true;
    }
    if max_depth == 0 {
        return false;
    }
    let Some(target) = cg.caller_of(site) else {
        return false;
    };
    let max = max_depth as usize;
    let mut dist = vec![usize::MAX; cg.nodes.len()];
    dist[target] = 0;
    let mut queue = VecDeque::from([target]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v];
        for e in cg.incoming(v) {
            if e.in_loop && d < max {
                return true;
            }
            if d + 1 < max && dist[e.caller] == usize::MAX {
                dist[e.caller] = d + 1;
                queue.push_back(e.caller);
            }
        }
    }
    false
}
