//! Fact extraction from one parsed unit.
//!
//! Two passes over the syntax tree: the first collects name bindings (import
//! aliases, client objects, string and dict constants), the second records
//! calls, attribute reads, definitions, loops and exception handlers with
//! every name expanded through those bindings.

use std::collections::{BTreeMap, HashMap};

use rustpython_parser::ast::{
    self, Constant, ExceptHandler, Expr, ExprContext, Ranged, Stmt,
};

use super::{
    AttributeAccessFact, CallFact, EnvRead, ExceptHandlerFact, FunctionDef, ImportFact, LoopKind,
    LoopSpan,
};
use crate::ingest::SourceText;

/// Facts of a single unit, in source order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UnitFacts {
    pub imports: Vec<ImportFact>,
    pub calls: Vec<CallFact>,
    pub attribute_accesses: Vec<AttributeAccessFact>,
    pub functions: Vec<FunctionDef>,
    pub loops: Vec<LoopSpan>,
    pub except_handlers: Vec<ExceptHandlerFact>,
    pub env_reads: Vec<EnvRead>,
}

/// Dotted module name for a workspace-relative path: `pkg/sub/m.py` →
/// `pkg.sub.m`; package `__init__` files take the package name.
pub fn module_name(path: &str) -> String {
    let stem = path
        .strip_suffix(".py")
        .or_else(|| path.strip_suffix(".ipynb"))
        .unwrap_or(path);
    let stem = stem.strip_suffix("/__init__").unwrap_or(stem);
    let name = stem.replace('/', ".");
    if name.is_empty() || name == "__init__" {
        "__init__".to_string()
    } else {
        name
    }
}

/// Extracts the facts of `st`, whose text parses to `suite`.
pub fn parse_unit(st: &SourceText, suite: &[Stmt]) -> UnitFacts {
    let mut walker = Walker::new(st);
    walker.collect_bindings(suite);
    walker.walk_body(suite);
    walker.out
}

struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    fn new(text: &str) -> Self {
        LineIndex {
            starts: std::iter::once(0)
                .chain(text.match_indices('\n').map(|(i, _)| i + 1))
                .collect(),
        }
    }

    /// 1-based line of a byte offset.
    fn line(&self, offset: usize) -> usize {
        self.starts.partition_point(|&s| s <= offset).max(1)
    }
}

#[derive(Default)]
struct Bindings {
    /// Import-bound names → full dotted path.
    imports: HashMap<String, String>,
    /// Variables and attribute chains bound to an import-derived call
    /// result; `None` marks conflicting bindings.
    objects: HashMap<String, Option<String>>,
    strings: HashMap<String, Option<String>>,
    dicts: HashMap<String, Option<Vec<String>>>,
}

fn bind<T: PartialEq>(map: &mut HashMap<String, Option<T>>, key: String, value: T) {
    match map.get_mut(&key) {
        None => {
            map.insert(key, Some(value));
        }
        Some(existing) => {
            if existing.as_ref() != Some(&value) {
                *existing = None;
            }
        }
    }
}

enum Scope {
    Function(String),
    Class(String),
}

struct Walker<'a> {
    st: &'a SourceText,
    index: LineIndex,
    module: String,
    bindings: Bindings,
    scopes: Vec<Scope>,
    depth: u32,
    loop_stack: Vec<u32>,
    next_loop: u32,
    out: UnitFacts,
}

/// Name of a callee expression, before and after alias expansion.
struct Callee {
    raw: String,
    resolved: String,
    segments: Vec<String>,
}

impl<'a> Walker<'a> {
    fn new(st: &'a SourceText) -> Self {
        Walker {
            st,
            index: LineIndex::new(&st.text),
            module: module_name(&st.path),
            bindings: Bindings::default(),
            scopes: Vec::new(),
            depth: 0,
            loop_stack: Vec::new(),
            next_loop: 0,
            out: UnitFacts::default(),
        }
    }

    fn line_at(&self, offset: usize) -> u32 {
        self.st.original_line(self.index.line(offset))
    }

    fn line_of<T: Ranged>(&self, node: &T) -> u32 {
        self.line_at(usize::from(node.start()))
    }

    fn end_line_of<T: Ranged>(&self, node: &T) -> u32 {
        let end = usize::from(node.end()).saturating_sub(1);
        self.line_at(end.max(usize::from(node.start())))
    }

    fn file(&self) -> String {
        self.st.path.clone()
    }

    fn qualify(&self, name: &str) -> String {
        let mut q = self.module.clone();
        for scope in &self.scopes {
            let (Scope::Function(n) | Scope::Class(n)) = scope;
            q.push('.');
            q.push_str(n);
        }
        q.push('.');
        q.push_str(name);
        q
    }

    fn enclosing_function(&self) -> Option<String> {
        let pos = self
            .scopes
            .iter()
            .rposition(|s| matches!(s, Scope::Function(_)))?;
        let mut q = self.module.clone();
        for scope in &self.scopes[..=pos] {
            let (Scope::Function(n) | Scope::Class(n)) = scope;
            q.push('.');
            q.push_str(n);
        }
        Some(q)
    }

    fn enclosing_class(&self) -> Option<String> {
        let pos = self
            .scopes
            .iter()
            .rposition(|s| matches!(s, Scope::Class(_)))?;
        let mut q = self.module.clone();
        for scope in &self.scopes[..=pos] {
            let (Scope::Function(n) | Scope::Class(n)) = scope;
            q.push('.');
            q.push_str(n);
        }
        Some(q)
    }

    // ---- pass 1: bindings -------------------------------------------------

    fn collect_bindings(&mut self, body: &[Stmt]) {
        // Imports first so that later assignments can be resolved through them.
        let mut imports = Vec::new();
        collect_imports(body, &mut imports);
        for stmt in imports {
            match stmt {
                Stmt::Import(s) => {
                    for alias in &s.names {
                        let path = alias.name.to_string();
                        let (bound, target) = match &alias.asname {
                            Some(a) => (a.to_string(), path.clone()),
                            None => {
                                let top = path.split('.').next().unwrap_or(&path).to_string();
                                (top.clone(), top)
                            }
                        };
                        self.bindings.imports.insert(bound, target);
                        self.out.imports.push(ImportFact {
                            module_path: path,
                            imported_name: None,
                            alias: alias.asname.as_ref().map(|a| a.to_string()),
                            file: self.file(),
                            line: self.line_of(s),
                        });
                    }
                }
                Stmt::ImportFrom(s) => {
                    let module = relative_module(s);
                    for alias in &s.names {
                        let name = alias.name.to_string();
                        if name != "*" {
                            let bound = alias.asname.as_ref().unwrap_or(&alias.name).to_string();
                            self.bindings
                                .imports
                                .insert(bound, format!("{module}.{name}"));
                        }
                        self.out.imports.push(ImportFact {
                            module_path: module.clone(),
                            imported_name: Some(name),
                            alias: alias.asname.as_ref().map(|a| a.to_string()),
                            file: self.file(),
                            line: self.line_of(s),
                        });
                    }
                }
                _ => {}
            }
        }
        self.collect_assignments(body);
    }

    fn collect_assignments(&mut self, body: &[Stmt]) {
        for stmt in body {
            match stmt {
                Stmt::Assign(s) => {
                    for target in &s.targets {
                        self.bind_target(target, &s.value);
                    }
                }
                Stmt::AnnAssign(s) => {
                    if let Some(v) = &s.value {
                        self.bind_target(&s.target, v);
                    }
                }
                Stmt::With(s) => {
                    for item in &s.items {
                        if let Some(vars) = &item.optional_vars {
                            self.bind_target(vars, &item.context_expr);
                        }
                    }
                }
                Stmt::AsyncWith(s) => {
                    for item in &s.items {
                        if let Some(vars) = &item.optional_vars {
                            self.bind_target(vars, &item.context_expr);
                        }
                    }
                }
                _ => {}
            }
            for child in child_bodies(stmt) {
                self.collect_assignments(child);
            }
        }
    }

    fn bind_target(&mut self, target: &Expr, value: &Expr) {
        let Some(key) = chain_key(target) else { return };
        match value {
            Expr::Call(call) => {
                let callee = self.callee(&call.func);
                if self.import_derived(&callee) {
                    bind(&mut self.bindings.objects, key, callee.resolved);
                }
            }
            Expr::Constant(c) => {
                if let Constant::Str(s) = &c.value {
                    bind(&mut self.bindings.strings, key, s.clone());
                }
            }
            Expr::Dict(d) => {
                let keys = dict_literal_keys(d);
                bind(&mut self.bindings.dicts, key, keys);
            }
            _ => {}
        }
    }

    /// Whether the callee's first segment expands through an import or an
    /// import-derived object binding.
    fn import_derived(&self, callee: &Callee) -> bool {
        let Some(first) = callee.segments.first() else {
            return false;
        };
        if self.bindings.imports.contains_key(first) {
            return true;
        }
        (1..=callee.segments.len()).any(|n| {
            matches!(
                self.bindings.objects.get(&callee.segments[..n].join(".")),
                Some(Some(_))
            )
        })
    }

    // ---- name resolution --------------------------------------------------

    /// Segments of a callee expression as written. Calls and subscripts in
    /// the receiver become `name()` / `name[]` segments.
    fn segments(&self, expr: &Expr, out: &mut Vec<String>) -> bool {
        match expr {
            Expr::Name(n) => {
                out.push(n.id.to_string());
                true
            }
            Expr::Attribute(a) => {
                let ok = self.segments(&a.value, out);
                out.push(a.attr.to_string());
                ok
            }
            Expr::Call(c) => {
                let ok = self.segments(&c.func, out);
                if let Some(last) = out.last_mut() {
                    last.push_str("()");
                }
                ok
            }
            Expr::Subscript(s) => {
                let ok = self.segments(&s.value, out);
                if let Some(last) = out.last_mut() {
                    last.push_str("[]");
                }
                ok
            }
            Expr::Constant(c) if matches!(c.value, Constant::Str(_)) => {
                out.push("<str>".into());
                false
            }
            _ => {
                out.push("<expr>".into());
                false
            }
        }
    }

    fn callee(&self, func: &Expr) -> Callee {
        let mut segments = Vec::new();
        self.segments(func, &mut segments);
        let raw = segments.join(".");
        // Suffixes only mark receiver shape; resolution works on bare names.
        let bare: Vec<String> = segments
            .iter()
            .map(|s| s.trim_end_matches("()").to_string())
            .collect();
        let resolved = self.expand(&bare);
        Callee {
            raw,
            resolved,
            segments: bare,
        }
    }

    /// Expands the longest bound prefix of `segments`.
    fn expand(&self, segments: &[String]) -> String {
        for n in (1..=segments.len()).rev() {
            let key = segments[..n].join(".");
            if let Some(Some(target)) = self.bindings.objects.get(&key) {
                return join_rest(target, &segments[n..]);
            }
        }
        if let Some(first) = segments.first() {
            if let Some(target) = self.bindings.imports.get(first) {
                return join_rest(target, &segments[1..]);
            }
        }
        segments.join(".")
    }

    fn resolve_expr(&self, expr: &Expr) -> String {
        self.callee(expr).resolved
    }

    fn string_value(&self, expr: &Expr) -> Option<String> {
        match expr {
            Expr::Constant(c) => match &c.value {
                Constant::Str(s) => Some(s.clone()),
                _ => None,
            },
            Expr::Name(n) => self.bindings.strings.get(n.id.as_str())?.clone(),
            _ => None,
        }
    }

    fn dict_keys(&self, expr: &Expr) -> Option<Vec<String>> {
        match expr {
            Expr::Dict(d) => Some(dict_literal_keys(d)),
            Expr::Name(n) => self.bindings.dicts.get(n.id.as_str())?.clone(),
            Expr::Call(c) => {
                // dict(key=...) spelled as a call
                (self.resolve_expr(&c.func) == "dict").then(|| {
                    c.keywords
                        .iter()
                        .filter_map(|k| k.arg.as_ref().map(|a| a.to_string()))
                        .collect()
                })
            }
            _ => None,
        }
    }

    // ---- pass 2: facts ----------------------------------------------------

    fn walk_body(&mut self, body: &[Stmt]) {
        for stmt in body {
            self.walk_stmt(stmt);
        }
    }

    fn walk_stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::FunctionDef(f) => self.walk_function(
                f.name.as_str(),
                &f.args,
                &f.body,
                &f.decorator_list,
                f.returns.as_deref(),
                stmt,
            ),
            Stmt::AsyncFunctionDef(f) => self.walk_function(
                f.name.as_str(),
                &f.args,
                &f.body,
                &f.decorator_list,
                f.returns.as_deref(),
                stmt,
            ),
            Stmt::ClassDef(c) => {
                for d in &c.decorator_list {
                    self.walk_expr(d);
                }
                for b in &c.bases {
                    self.walk_expr(b);
                }
                for k in &c.keywords {
                    self.walk_expr(&k.value);
                }
                self.scopes.push(Scope::Class(c.name.to_string()));
                self.walk_body(&c.body);
                self.scopes.pop();
            }
            Stmt::Return(s) => {
                if let Some(v) = &s.value {
                    self.walk_expr(v);
                }
            }
            Stmt::Delete(s) => s.targets.iter().for_each(|t| self.walk_expr(t)),
            Stmt::Assign(s) => {
                let names = assigned_names(&s.targets);
                self.walk_value(&s.value, names);
                for t in &s.targets {
                    self.walk_expr(t);
                }
            }
            Stmt::TypeAlias(s) => self.walk_expr(&s.value),
            Stmt::AugAssign(s) => {
                self.walk_expr(&s.target);
                self.walk_expr(&s.value);
            }
            Stmt::AnnAssign(s) => {
                if let Some(v) = &s.value {
                    self.walk_value(v, assigned_names(std::slice::from_ref(&s.target)));
                }
                self.walk_expr(&s.target);
            }
            Stmt::For(s) => self.walk_for(&s.target, &s.iter, &s.body, &s.orelse, stmt),
            Stmt::AsyncFor(s) => self.walk_for(&s.target, &s.iter, &s.body, &s.orelse, stmt),
            Stmt::While(s) => {
                self.enter_loop(LoopKind::While, stmt);
                self.walk_expr(&s.test);
                self.walk_body(&s.body);
                self.exit_loop();
                self.walk_body(&s.orelse);
            }
            Stmt::If(s) => {
                self.walk_expr(&s.test);
                self.walk_body(&s.body);
                self.walk_body(&s.orelse);
            }
            Stmt::With(s) => {
                for item in &s.items {
                    self.walk_expr(&item.context_expr);
                }
                self.walk_body(&s.body);
            }
            Stmt::AsyncWith(s) => {
                for item in &s.items {
                    self.walk_expr(&item.context_expr);
                }
                self.walk_body(&s.body);
            }
            Stmt::Match(s) => {
                self.walk_expr(&s.subject);
                for case in &s.cases {
                    if let Some(g) = &case.guard {
                        self.walk_expr(g);
                    }
                    self.walk_body(&case.body);
                }
            }
            Stmt::Raise(s) => {
                if let Some(e) = &s.exc {
                    self.walk_expr(e);
                }
                if let Some(c) = &s.cause {
                    self.walk_expr(c);
                }
            }
            Stmt::Try(s) => self.walk_try(&s.body, &s.handlers, &s.orelse, &s.finalbody),
            Stmt::TryStar(s) => self.walk_try(&s.body, &s.handlers, &s.orelse, &s.finalbody),
            Stmt::Assert(s) => {
                self.walk_expr(&s.test);
                if let Some(m) = &s.msg {
                    self.walk_expr(m);
                }
            }
            Stmt::Expr(s) => self.walk_expr(&s.value),
            Stmt::Import(_)
            | Stmt::ImportFrom(_)
            | Stmt::Global(_)
            | Stmt::Nonlocal(_)
            | Stmt::Pass(_)
            | Stmt::Break(_)
            | Stmt::Continue(_) => {}
        }
    }

    fn walk_function(
        &mut self,
        name: &str,
        args: &ast::Arguments,
        body: &[Stmt],
        decorators: &[Expr],
        returns: Option<&Expr>,
        node: &Stmt,
    ) {
        // Decorators, defaults and annotations run in the enclosing scope.
        for d in decorators {
            self.walk_expr(d);
        }
        self.walk_arguments(args);
        if let Some(r) = returns {
            self.walk_expr(r);
        }
        let decorator_names = decorators
            .iter()
            .map(|d| match d {
                Expr::Call(c) => self.resolve_expr(&c.func),
                other => self.resolve_expr(other),
            })
            .collect();
        let qualified_name = self.qualify(name);
        let class = match self.scopes.last() {
            Some(Scope::Class(_)) => self.enclosing_class(),
            _ => None,
        };
        self.out.functions.push(FunctionDef {
            qualified_name,
            file: self.file(),
            span: (self.line_of(node), self.end_line_of(node)),
            class,
            decorators: decorator_names,
        });
        self.scopes.push(Scope::Function(name.to_string()));
        let saved = (self.depth, std::mem::take(&mut self.loop_stack));
        self.depth = 0;
        self.walk_body(body);
        (self.depth, self.loop_stack) = saved;
        self.scopes.pop();
    }

    fn walk_arguments(&mut self, args: &ast::Arguments) {
        for a in args
            .posonlyargs
            .iter()
            .chain(&args.args)
            .chain(&args.kwonlyargs)
        {
            if let Some(d) = &a.default {
                self.walk_expr(d);
            }
        }
    }

    fn walk_for(&mut self, target: &Expr, iter: &Expr, body: &[Stmt], orelse: &[Stmt], node: &Stmt) {
        self.walk_expr(iter);
        self.enter_loop(LoopKind::For, node);
        self.walk_expr(target);
        self.walk_body(body);
        self.exit_loop();
        self.walk_body(orelse);
    }

    fn walk_try(
        &mut self,
        body: &[Stmt],
        handlers: &[ExceptHandler],
        orelse: &[Stmt],
        finalbody: &[Stmt],
    ) {
        self.walk_body(body);
        for h in handlers {
            let ExceptHandler::ExceptHandler(h) = h;
            let mut names = Vec::new();
            if let Some(t) = &h.type_ {
                match t.as_ref() {
                    Expr::Tuple(tuple) => {
                        names.extend(tuple.elts.iter().map(|e| self.resolve_expr(e)))
                    }
                    other => names.push(self.resolve_expr(other)),
                }
                self.walk_expr(t);
            }
            self.out.except_handlers.push(ExceptHandlerFact {
                exception_names: names,
                file: self.file(),
                line: self.line_of(h),
                enclosing_function: self.enclosing_function(),
            });
            self.walk_body(&h.body);
        }
        self.walk_body(orelse);
        self.walk_body(finalbody);
    }

    fn enter_loop<T: Ranged>(&mut self, kind: LoopKind, node: &T) {
        let id = self.next_loop;
        self.next_loop += 1;
        self.out.loops.push(LoopSpan {
            id,
            kind,
            file: self.file(),
            span: (self.line_of(node), self.end_line_of(node)),
        });
        self.loop_stack.push(id);
        self.depth += 1;
    }

    fn exit_loop(&mut self) {
        self.loop_stack.pop();
        self.depth -= 1;
    }

    /// Walks the value of an assignment, attaching target names to a call.
    fn walk_value(&mut self, value: &Expr, names: Vec<String>) {
        match value {
            Expr::Call(c) => self.walk_call(c, names),
            Expr::Await(a) => self.walk_value(&a.value, names),
            other => self.walk_expr(other),
        }
    }

    fn walk_call(&mut self, call: &ast::ExprCall, assigned_to: Vec<String>) {
        let callee = self.callee(&call.func);
        let mut receiver_chain = callee.raw.split('.').map(str::to_owned).collect::<Vec<_>>();
        receiver_chain.pop();

        let mut arg_symbols = Vec::new();
        for a in &call.args {
            collect_symbols(a, &mut arg_symbols);
        }
        for k in &call.keywords {
            collect_symbols(&k.value, &mut arg_symbols);
        }
        dedup_in_order(&mut arg_symbols);

        let string_args = call
            .args
            .iter()
            .filter_map(|a| self.string_value(a))
            .collect();
        let mut keyword_strings = BTreeMap::new();
        let mut keyword_dict_keys = BTreeMap::new();
        let mut argument_names = Vec::new();
        for k in &call.keywords {
            let Some(arg) = &k.arg else { continue };
            argument_names.push(arg.to_string());
            if let Some(s) = self.string_value(&k.value) {
                keyword_strings.insert(arg.to_string(), s);
            }
            if let Some(keys) = self.dict_keys(&k.value) {
                keyword_dict_keys.insert(arg.to_string(), keys);
            }
        }
        let line = self.line_of(call);
        let fact = CallFact {
            id: 0,
            resolved_name: callee.resolved.clone(),
            raw_name: callee.raw,
            receiver_chain,
            argument_names,
            positional_arity: call.args.len(),
            file: self.file(),
            line,
            enclosing_function: self.enclosing_function(),
            enclosing_class: self.enclosing_class(),
            lexical_loop_depth: self.depth,
            loop_ids: self.loop_stack.clone(),
            assigned_to,
            arg_symbols,
            string_args,
            keyword_strings,
            keyword_dict_keys,
        };
        self.record_env_read(&fact);
        // `.get("key")` reads a field of its receiver.
        if let Expr::Attribute(attr) = call.func.as_ref() {
            if attr.attr.as_str() == "get" {
                if let Some(key) = call.args.first().and_then(|a| self.string_value(a)) {
                    self.out.attribute_accesses.push(AttributeAccessFact {
                        base_expression_key: expr_key(&attr.value),
                        attribute: key,
                        file: self.file(),
                        line,
                    });
                }
            }
        }
        self.out.calls.push(fact);

        self.walk_expr(&call.func);
        for a in &call.args {
            self.walk_expr(a);
        }
        for k in &call.keywords {
            self.walk_expr(&k.value);
        }
    }

    fn record_env_read(&mut self, call: &CallFact) {
        let name = call.resolved_name.as_str();
        let env_call = matches!(
            name,
            "os.getenv" | "os.environ.get" | "os.environ.setdefault" | "os.environ.pop"
        );
        if env_call {
            if let Some(var) = call.string_args.first() {
                self.out.env_reads.push(EnvRead {
                    name: var.clone(),
                    file: call.file.clone(),
                    line: call.line,
                });
            }
        }
    }

    fn walk_comprehension(&mut self, node: &Expr, generators: &[ast::Comprehension], elts: &[&Expr]) {
        // The first iterable is evaluated once, in the enclosing scope; each
        // later clause runs once per item of the clauses before it.
        let saved_depth = self.depth;
        let saved_stack = self.loop_stack.len();
        for g in generators {
            self.walk_expr(&g.iter);
            self.enter_loop(LoopKind::Comprehension, node);
            self.walk_expr(&g.target);
            for cond in &g.ifs {
                self.walk_expr(cond);
            }
        }
        for e in elts {
            self.walk_expr(e);
        }
        self.depth = saved_depth;
        self.loop_stack.truncate(saved_stack);
    }

    fn walk_expr(&mut self, expr: &Expr) {
        match expr {
            Expr::Call(c) => self.walk_call(c, Vec::new()),
            Expr::BoolOp(e) => e.values.iter().for_each(|v| self.walk_expr(v)),
            Expr::NamedExpr(e) => {
                let names = assigned_names(std::slice::from_ref(&*e.target));
                self.walk_value(&e.value, names);
            }
            Expr::BinOp(e) => {
                self.walk_expr(&e.left);
                self.walk_expr(&e.right);
            }
            Expr::UnaryOp(e) => self.walk_expr(&e.operand),
            Expr::Lambda(e) => {
                self.walk_arguments(&e.args);
                let saved = (self.depth, std::mem::take(&mut self.loop_stack));
                self.depth = 0;
                self.walk_expr(&e.body);
                (self.depth, self.loop_stack) = saved;
            }
            Expr::IfExp(e) => {
                self.walk_expr(&e.test);
                self.walk_expr(&e.body);
                self.walk_expr(&e.orelse);
            }
            Expr::Dict(e) => {
                for k in e.keys.iter().flatten() {
                    self.walk_expr(k);
                }
                e.values.iter().for_each(|v| self.walk_expr(v));
            }
            Expr::Set(e) => e.elts.iter().for_each(|v| self.walk_expr(v)),
            Expr::ListComp(e) => self.walk_comprehension(expr, &e.generators, &[&e.elt]),
            Expr::SetComp(e) => self.walk_comprehension(expr, &e.generators, &[&e.elt]),
            Expr::GeneratorExp(e) => self.walk_comprehension(expr, &e.generators, &[&e.elt]),
            Expr::DictComp(e) => {
                self.walk_comprehension(expr, &e.generators, &[&e.key, &e.value])
            }
            Expr::Await(e) => self.walk_expr(&e.value),
            Expr::Yield(e) => {
                if let Some(v) = &e.value {
                    self.walk_expr(v);
                }
            }
            Expr::YieldFrom(e) => self.walk_expr(&e.value),
            Expr::Compare(e) => {
                self.walk_expr(&e.left);
                e.comparators.iter().for_each(|v| self.walk_expr(v));
            }
            Expr::FormattedValue(e) => {
                self.walk_expr(&e.value);
                if let Some(s) = &e.format_spec {
                    self.walk_expr(s);
                }
            }
            Expr::JoinedStr(e) => e.values.iter().for_each(|v| self.walk_expr(v)),
            Expr::Constant(_) | Expr::Name(_) => {}
            Expr::Attribute(e) => {
                if e.ctx == ExprContext::Load {
                    self.out.attribute_accesses.push(AttributeAccessFact {
                        base_expression_key: expr_key(&e.value),
                        attribute: e.attr.to_string(),
                        file: self.file(),
                        line: self.line_of(e),
                    });
                }
                self.walk_expr(&e.value);
            }
            Expr::Subscript(e) => {
                if e.ctx == ExprContext::Load {
                    if let Some(key) = self.string_value(&e.slice) {
                        self.out.attribute_accesses.push(AttributeAccessFact {
                            base_expression_key: expr_key(&e.value),
                            attribute: key.clone(),
                            file: self.file(),
                            line: self.line_of(e),
                        });
                        if self.resolve_expr(&e.value) == "os.environ" {
                            self.out.env_reads.push(EnvRead {
                                name: key,
                                file: self.file(),
                                line: self.line_of(e),
                            });
                        }
                    }
                }
                self.walk_expr(&e.value);
                self.walk_expr(&e.slice);
            }
            Expr::Starred(e) => self.walk_expr(&e.value),
            Expr::List(e) => e.elts.iter().for_each(|v| self.walk_expr(v)),
            Expr::Tuple(e) => e.elts.iter().for_each(|v| self.walk_expr(v)),
            Expr::Slice(e) => {
                for part in [&e.lower, &e.upper, &e.step].into_iter().flatten() {
                    self.walk_expr(part);
                }
            }
        }
    }
}

fn join_rest(target: &str, rest: &[String]) -> String {
    let mut s = target.to_string();
    for seg in rest {
        s.push('.');
        s.push_str(seg);
    }
    s
}

fn relative_module(s: &ast::StmtImportFrom) -> String {
    let dots = ".".repeat(s.level.as_ref().map_or(0, |l| l.to_usize()));
    match &s.module {
        Some(m) => format!("{dots}{m}"),
        None => dots,
    }
}

fn collect_imports<'s>(body: &'s [Stmt], out: &mut Vec<&'s Stmt>) {
    for stmt in body {
        if matches!(stmt, Stmt::Import(_) | Stmt::ImportFrom(_)) {
            out.push(stmt);
        }
        for child in child_bodies(stmt) {
            collect_imports(child, out);
        }
    }
}

/// Statement lists nested directly in `stmt`.
fn child_bodies(stmt: &Stmt) -> Vec<&[Stmt]> {
    match stmt {
        Stmt::FunctionDef(s) => vec![&s.body],
        Stmt::AsyncFunctionDef(s) => vec![&s.body],
        Stmt::ClassDef(s) => vec![&s.body],
        Stmt::For(s) => vec![&s.body, &s.orelse],
        Stmt::AsyncFor(s) => vec![&s.body, &s.orelse],
        Stmt::While(s) => vec![&s.body, &s.orelse],
        Stmt::If(s) => vec![&s.body, &s.orelse],
        Stmt::With(s) => vec![&s.body],
        Stmt::AsyncWith(s) => vec![&s.body],
        Stmt::Match(s) => s.cases.iter().map(|c| c.body.as_slice()).collect(),
        Stmt::Try(s) => try_bodies(&s.body, &s.handlers, &s.orelse, &s.finalbody),
        Stmt::TryStar(s) => try_bodies(&s.body, &s.handlers, &s.orelse, &s.finalbody),
        _ => Vec::new(),
    }
}

fn try_bodies<'s>(
    body: &'s [Stmt],
    handlers: &'s [ExceptHandler],
    orelse: &'s [Stmt],
    finalbody: &'s [Stmt],
) -> Vec<&'s [Stmt]> {
    let mut v = vec![body];
    for h in handlers {
        let ExceptHandler::ExceptHandler(h) = h;
        v.push(&h.body);
    }
    v.push(orelse);
    v.push(finalbody);
    v
}

/// Dotted key of a name or attribute chain (`self.client`).
fn chain_key(expr: &Expr) -> Option<String> {
    match expr {
        Expr::Name(n) => Some(n.id.to_string()),
        Expr::Attribute(a) => chain_key(&a.value).map(|base| format!("{base}.{}", a.attr)),
        _ => None,
    }
}

/// Stable textual key for the base of an attribute read.
fn expr_key(expr: &Expr) -> String {
    match expr {
        Expr::Name(n) => n.id.to_string(),
        Expr::Attribute(a) => format!("{}.{}", expr_key(&a.value), a.attr),
        Expr::Call(c) => format!("{}()", expr_key(&c.func)),
        Expr::Subscript(s) => format!("{}[]", expr_key(&s.value)),
        Expr::Await(a) => expr_key(&a.value),
        _ => "<expr>".to_string(),
    }
}

fn dict_literal_keys(d: &ast::ExprDict) -> Vec<String> {
    d.keys
        .iter()
        .flatten()
        .filter_map(|k| match k {
            Expr::Constant(c) => match &c.value {
                Constant::Str(s) => Some(s.clone()),
                _ => None,
            },
            _ => None,
        })
        .collect()
}

/// Targets of an assignment flattened in position order.
fn assigned_names(targets: &[Expr]) -> Vec<String> {
    let mut out = Vec::new();
    for t in targets {
        match t {
            Expr::Tuple(tuple) => flatten_targets(&tuple.elts, &mut out),
            Expr::List(list) => flatten_targets(&list.elts, &mut out),
            other => out.push(target_name(other)),
        }
    }
    out
}

fn flatten_targets(elts: &[Expr], out: &mut Vec<String>) {
    for e in elts {
        out.push(target_name(e));
    }
}

fn target_name(e: &Expr) -> String {
    match e {
        Expr::Name(n) => n.id.to_string(),
        Expr::Starred(s) => target_name(&s.value),
        _ => "_".to_string(),
    }
}

/// Variable names referenced in an argument expression, excluding callee
/// names and attribute names.
fn collect_symbols(expr: &Expr, out: &mut Vec<String>) {
    match expr {
        Expr::Name(n) => out.push(n.id.to_string()),
        Expr::Attribute(a) => collect_symbols(&a.value, out),
        Expr::Call(c) => {
            if let Expr::Attribute(a) = c.func.as_ref() {
                collect_symbols(&a.value, out);
            }
            for a in &c.args {
                collect_symbols(a, out);
            }
            for k in &c.keywords {
                collect_symbols(&k.value, out);
            }
        }
        Expr::Subscript(s) => {
            collect_symbols(&s.value, out);
            collect_symbols(&s.slice, out);
        }
        Expr::Starred(s) => collect_symbols(&s.value, out),
        Expr::List(l) => l.elts.iter().for_each(|e| collect_symbols(e, out)),
        Expr::Tuple(t) => t.elts.iter().for_each(|e| collect_symbols(e, out)),
        Expr::Set(t) => t.elts.iter().for_each(|e| collect_symbols(e, out)),
        Expr::Dict(d) => d.values.iter().for_each(|e| collect_symbols(e, out)),
        Expr::BinOp(b) => {
            collect_symbols(&b.left, out);
            collect_symbols(&b.right, out);
        }
        Expr::Await(a) => collect_symbols(&a.value, out),
        _ => {}
    }
}

fn dedup_in_order(v: &mut Vec<String>) {
    let mut seen = std::collections::HashSet::new();
    v.retain(|s| seen.insert(s.clone()));
}
