//! Syntax-error-tolerant preprocessing.
//!
//! The text is parsed repeatedly; each failure repairs exactly one line,
//! either by re-indenting it (indentation errors, once per line) or by
//! blanking it. A blamed block opener becomes an `if True:` placeholder so
//! that its suite keeps parsing. Line count never changes, so the origin map
//! stays aligned and only the `substituted` flags move.

use rustpython_parser::ast::Stmt;
use rustpython_parser::lexer::lex;
use rustpython_parser::{parse, Mode, ParseError, ParseErrorType, Tok};

use super::{IngestError, SourceText};

/// Result of sanitizing one unit.
#[derive(Debug, Clone)]
pub struct Sanitized {
    pub source: SourceText,
    /// Original line numbers whose content was removed.
    pub skipped: Vec<u32>,
    /// Original line numbers whose indentation was rewritten.
    pub reindented: Vec<u32>,
    /// `(original line, note)` per repair, in repair order.
    pub repairs: Vec<(u32, String)>,
    /// The parsed module body of `source.text`.
    pub suite: Vec<Stmt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LineState {
    Original,
    Reindented,
    Placeholder,
    Blanked,
}

/// Parses `text` as a module.
pub fn parse_module(text: &str, path: &str) -> Result<Vec<Stmt>, ParseError> {
    match parse(text, Mode::Module, path)? {
        rustpython_parser::ast::Mod::Module(m) => Ok(m.body),
        _ => Ok(Vec::new()),
    }
}

/// Makes `st` parseable by removing or re-indenting the lines the parser
/// blames, keeping the line count fixed.
pub fn sanitize_source(st: SourceText) -> Result<Sanitized, IngestError> {
    let mut lines: Vec<String> = st.text.lines().map(str::to_owned).collect();
    let mut states = vec![LineState::Original; lines.len()];
    let mut repairs = Vec::new();
    // Every line can be reindented once, turned into a placeholder once and
    // blanked once.
    let budget = 3 * lines.len() + 2;
    let unsalvageable = || IngestError::Unsalvageable {
        path: st.path.clone(),
    };

    let mut suite = None;
    for _ in 0..=budget {
        let text = join(&lines);
        let err = match parse_module(&text, &st.path) {
            Ok(body) => {
                suite = Some(body);
                break;
            }
            Err(e) => e,
        };
        if lines.is_empty() {
            return Err(unsalvageable());
        }
        let starts = line_starts(&text);
        let offset = usize::from(err.offset).min(text.len());
        let err_line = line_of(&starts, offset).min(lines.len() - 1);

        if is_indent_error(&err.error) {
            let target = first_code_line_from(&lines, err_line);
            if let Some(t) = target.filter(|&t| states[t] == LineState::Original) {
                let indent = reindent_target(&text, &starts, &lines, t);
                if let Some(indent) = indent.filter(|i| *i != leading_ws(&lines[t])) {
                    let body = lines[t].trim_start().to_string();
                    lines[t] = format!("{indent}{body}");
                    states[t] = LineState::Reindented;
                    repairs.push((
                        st.original_line(t + 1),
                        format!("{}; re-indented", err.error),
                    ));
                    continue;
                }
            }
        }

        let blamed = bracket_opener_line(&text, &starts, offset).unwrap_or(err_line);
        let Some(t) = nearest_removable(&lines, &states, blamed) else {
            return Err(unsalvageable());
        };
        let opener = states[t] != LineState::Placeholder && is_block_opener(&lines, t);
        if opener {
            lines[t] = format!("{}if True:", leading_ws(&lines[t]));
            states[t] = LineState::Placeholder;
        } else {
            lines[t].clear();
            states[t] = LineState::Blanked;
        }
        let action = if opener { "replaced by placeholder" } else { "skipped" };
        repairs.push((st.original_line(t + 1), format!("{}; {action}", err.error)));
    }
    let Some(suite) = suite else {
        return Err(unsalvageable());
    };

    let touched = states.iter().any(|s| *s != LineState::Original);
    let any_code = lines.iter().any(|l| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    });
    let removed = states
        .iter()
        .any(|s| matches!(s, LineState::Blanked | LineState::Placeholder));
    if removed && !any_code {
        return Err(unsalvageable());
    }

    let mut source = st;
    let mut skipped = Vec::new();
    let mut reindented = Vec::new();
    if touched {
        for (i, state) in states.iter().enumerate() {
            let origin = &mut source.origin[i];
            match state {
                LineState::Original => continue,
                LineState::Reindented => reindented.push(origin.line),
                LineState::Placeholder | LineState::Blanked => skipped.push(origin.line),
            }
            origin.substituted = true;
        }
        source.text = join(&lines);
    }
    Ok(Sanitized {
        source,
        skipped,
        reindented,
        repairs,
        suite,
    })
}

fn join(lines: &[String]) -> String {
    let mut text = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    text
}

fn is_indent_error(e: &ParseErrorType) -> bool {
    e.is_indentation_error() || e.is_tab_error()
}

fn line_starts(text: &str) -> Vec<usize> {
    std::iter::once(0)
        .chain(text.match_indices('\n').map(|(i, _)| i + 1))
        .collect()
}

fn line_of(starts: &[usize], offset: usize) -> usize {
    starts.partition_point(|&s| s <= offset).saturating_sub(1)
}

fn leading_ws(line: &str) -> &str {
    &line[..line.len() - line.trim_start().len()]
}

fn width(ws: &str) -> usize {
    ws.chars().fold(0, |w, c| if c == '\t' { w / 8 * 8 + 8 } else { w + 1 })
}

fn is_code(line: &str) -> bool {
    let t = line.trim();
    !t.is_empty() && !t.starts_with('#')
}

fn first_code_line_from(lines: &[String], from: usize) -> Option<usize> {
    (from..lines.len()).find(|&i| is_code(&lines[i]))
}

/// Indentation for line `t`: the level on the active indentation stack
/// (built from logical line starts before `t`) closest to the line's own
/// width, preferring the shallower level on ties.
fn reindent_target(text: &str, starts: &[usize], lines: &[String], t: usize) -> Option<String> {
    let limit = starts[t];
    let mut stack: Vec<(usize, String)> = vec![(0, String::new())];
    let mut at_start = true;
    for item in lex(text, Mode::Module) {
        let Ok((tok, range)) = item else { break };
        let pos = usize::from(range.start());
        if pos >= limit {
            break;
        }
        match tok {
            Tok::Newline => at_start = true,
            Tok::Indent | Tok::Dedent => {}
            _ if at_start => {
                at_start = false;
                let line = &lines[line_of(starts, pos)];
                let ws = leading_ws(line);
                let w = width(ws);
                while stack.last().is_some_and(|(top, _)| *top > w) {
                    stack.pop();
                }
                if stack.last().map(|(top, _)| *top) != Some(w) {
                    stack.push((w, ws.to_string()));
                }
            }
            _ => {}
        }
    }
    let own = width(leading_ws(&lines[t]));
    stack
        .into_iter()
        .min_by_key(|(w, _)| (w.abs_diff(own), *w))
        .map(|(_, ws)| ws)
}

/// Line of the innermost bracket still open at `offset`, if any.
fn bracket_opener_line(text: &str, starts: &[usize], offset: usize) -> Option<usize> {
    let mut stack = Vec::new();
    for item in lex(text, Mode::Module) {
        let Ok((tok, range)) = item else { break };
        let pos = usize::from(range.start());
        if pos >= offset {
            break;
        }
        match tok {
            Tok::Lpar | Tok::Lsqb | Tok::Lbrace => stack.push(line_of(starts, pos)),
            Tok::Rpar | Tok::Rsqb | Tok::Rbrace => {
                stack.pop();
            }
            _ => {}
        }
    }
    stack.pop()
}

fn removable(line: &str, state: LineState) -> bool {
    state != LineState::Blanked && is_code(line)
}

/// The blamed line itself when it still has code, else the closest such
/// line before it, else after it.
fn nearest_removable(lines: &[String], states: &[LineState], blamed: usize) -> Option<usize> {
    let ok = |i: usize| removable(&lines[i], states[i]);
    if ok(blamed) {
        return Some(blamed);
    }
    (0..blamed)
        .rev()
        .find(|&i| ok(i))
        .or_else(|| (blamed + 1..lines.len()).find(|&i| ok(i)))
}

fn strip_comment(line: &str) -> &str {
    if line.contains(['"', '\'']) {
        line
    } else {
        line.split('#').next().unwrap_or(line)
    }
}

fn is_block_opener(lines: &[String], t: usize) -> bool {
    if !strip_comment(&lines[t]).trim_end().ends_with(':') {
        return false;
    }
    let own = width(leading_ws(&lines[t]));
    lines[t + 1..]
        .iter()
        .find(|l| is_code(l))
        .is_some_and(|next| width(leading_ws(next)) > own)
}
