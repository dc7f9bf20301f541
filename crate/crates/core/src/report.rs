//! Rendering of slice results shared by the command line and the HTTP service.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde_json::{json, Value as Json};

use crate::parser::parse_position;
use crate::slicer::{Criterion, SliceResult, Target, UpdateMode};
use crate::syntax::{Document, NodeId, NodeKind, Position, Span};

pub fn target_kind(target: &Target) -> &'static str {
    match target {
        Target::ReturnValue => "return",
        Target::Postcondition(_) => "post",
        Target::StateVariable(_) => "state",
        Target::ExpressionAt(_) => "at",
    }
}

pub fn target_detail(target: &Target) -> Json {
    match target {
        Target::ReturnValue | Target::Postcondition(None) => Json::Null,
        Target::Postcondition(Some(k)) => json!(k),
        Target::StateVariable(v) => json!(v),
        Target::ExpressionAt(p) => json!(p.to_string()),
    }
}

/// Inverse of [`target_kind`]/[`target_detail`]. The error names the
/// offending selector.
pub fn target_from_parts(kind: &str, detail: Option<&Json>) -> Result<Target, String> {
    let detail = detail.filter(|d| !d.is_null());
    match kind {
        "return" => Ok(Target::ReturnValue),
        "post" => match detail {
            None => Ok(Target::Postcondition(None)),
            Some(d) => d
                .as_u64()
                .filter(|k| *k >= 1)
                .map(|k| Target::Postcondition(Some(k as usize)))
                .ok_or_else(|| format!("post: conjunct index must be a positive integer, got {d}")),
        },
        "state" => detail
            .and_then(Json::as_str)
            .map(|v| Target::StateVariable(v.to_string()))
            .ok_or_else(|| "state: detail must name a state variable".to_string()),
        "at" => {
            let text = detail
                .and_then(Json::as_str)
                .ok_or_else(|| "at: detail must be a \"line:column\" string".to_string())?;
            parse_position(text)
                .map(Target::ExpressionAt)
                .map_err(|e| format!("at: {}", e.message))
        }
        other => Err(format!("unknown target kind `{other}`")),
    }
}

pub fn position_json(p: Position) -> Json {
    json!({"line": p.line, "column": p.column})
}

pub fn span_json(s: Span) -> Json {
    json!({"start": position_json(s.start), "end": position_json(s.end)})
}

fn nodes_json(items: &[(NodeId, NodeKind, Span)]) -> Json {
    items
        .iter()
        .map(|(id, kind, span)| {
            json!({
                "nodeId": id.0,
                "kind": kind.as_str(),
                "start": position_json(span.start),
                "end": position_json(span.end),
            })
        })
        .collect()
}

/// Machine-readable slice. Keys are sorted, so the text is stable.
pub fn slice_json(
    file: &str,
    doc: &Document,
    criterion: &Criterion,
    mode: UpdateMode,
    result: &SliceResult,
) -> String {
    let body = json!({
        "file": file,
        "operation": criterion.operation,
        "criterion": {
            "kind": target_kind(&criterion.target),
            "detail": target_detail(&criterion.target),
        },
        "mode": mode.as_str(),
        "slice": nodes_json(&result.spans(doc)),
        "criterionNodes": nodes_json(&result.criterion_spans(doc)),
        "visitedDefinitions": result.visited_definitions.iter().collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&body).expect("json values serialize");
    text.push('\n');
    text
}

/// Marker per character: 0 none, 1 slice, 2 criterion.
type Marks = BTreeMap<u32, Vec<u8>>;

fn for_each_char(doc: &Document, span: Span, mut f: impl FnMut(Position, char, &mut u8), marks: &mut Marks) {
    let lines: Vec<&str> = doc.source.lines().collect();
    for line in span.start.line..=span.end.line {
        let Some(text) = lines.get(line as usize - 1) else { continue };
        let width = text.chars().count() as u32;
        let from = if line == span.start.line { span.start.column } else { 1 };
        let to = if line == span.end.line { span.end.column } else { width + 1 };
        let row = marks.entry(line).or_insert_with(|| vec![0; width as usize]);
        for (i, ch) in text.chars().enumerate() {
            let col = i as u32 + 1;
            if col >= from && col < to {
                f(Position::new(line, col), ch, &mut row[i]);
            }
        }
    }
}

/// Marks slice text. A character counts when the innermost statement or
/// slice node around it is in the slice, so an `if` in the slice does not
/// highlight branch statements that are not.
fn paint_slice(marks: &mut Marks, doc: &Document, nodes: &BTreeSet<NodeId>) {
    let frames: Vec<(Span, bool)> = doc
        .node_ids()
        .filter_map(|n| {
            let info = doc.info(n)?;
            let framing = info.kind.is_statement() || info.kind == NodeKind::DclItem;
            let sliced = nodes.contains(&n);
            (framing || sliced).then_some((info.span, sliced))
        })
        .collect();
    for n in nodes {
        let Some(span) = doc.span_of(*n) else { continue };
        for_each_char(
            doc,
            span,
            |pos, ch, cell| {
                // nested spans: the innermost starts last and ends first
                let innermost = frames
                    .iter()
                    .filter(|(s, _)| s.contains_pos(pos))
                    .min_by_key(|(s, _)| (Reverse(s.start), s.end));
                if !ch.is_whitespace() && innermost.is_some_and(|(_, sliced)| *sliced) {
                    *cell = (*cell).max(1);
                }
            },
            marks,
        );
    }
}

/// Source listing with slice lines marked `>` and criterion lines marked
/// `*`; carets underline slice text, `!` underlines criterion text.
pub fn annotate(doc: &Document, criterion: &Criterion, mode: UpdateMode, result: &SliceResult) -> String {
    let spans = result.spans(doc);
    let crit = result.criterion_spans(doc);
    let mut marks = BTreeMap::new();
    paint_slice(&mut marks, doc, &result.nodes);
    for (_, _, s) in &crit {
        for_each_char(doc, *s, |_, _, cell| *cell = 2, &mut marks);
    }
    let lines: Vec<&str> = doc.source.lines().collect();
    let width = lines.len().to_string().len();
    let mut out = String::new();
    let _ = writeln!(out, "slice of {criterion} ({} update)", mode.as_str());
    for (i, text) in lines.iter().enumerate() {
        let n = i as u32 + 1;
        let row = marks.get(&n).filter(|r| r.iter().any(|c| *c > 0));
        let gutter = match row {
            Some(r) if r.contains(&2) => '*',
            Some(_) => '>',
            None => ' ',
        };
        let _ = writeln!(out, "{gutter} {n:>width$} | {text}");
        if let Some(r) = row {
            let under: String = r
                .iter()
                .map(|c| match c {
                    2 => '!',
                    1 => '^',
                    _ => ' ',
                })
                .collect();
            let _ = writeln!(out, "  {:>width$} | {}", "", under.trim_end());
        }
    }
    let _ = writeln!(out, "slice spans:");
    for (id, kind, s) in &spans {
        let _ = writeln!(out, "  {s} {} #{}", kind.as_str(), id.0);
    }
    let _ = writeln!(out, "criterion spans:");
    for (id, kind, s) in &crit {
        let _ = writeln!(out, "  {s} {} #{}", kind.as_str(), id.0);
    }
    let defs: Vec<&str> = result.visited_definitions.iter().map(String::as_str).collect();
    let _ = writeln!(out, "visited definitions: {}", defs.join(", "));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_round_trip() {
        for t in [
            Target::ReturnValue,
            Target::Postcondition(None),
            Target::Postcondition(Some(2)),
            Target::StateVariable("NextId".into()),
            Target::ExpressionAt(Position::new(16, 9)),
        ] {
            let detail = target_detail(&t);
            assert_eq!(target_from_parts(target_kind(&t), Some(&detail)), Ok(t));
        }
    }

    #[test]
    fn bad_selectors_name_themselves() {
        assert!(target_from_parts("post", Some(&json!(0))).unwrap_err().starts_with("post"));
        assert!(target_from_parts("state", None).unwrap_err().starts_with("state"));
        assert!(target_from_parts("at", Some(&json!("x"))).unwrap_err().starts_with("at"));
        assert!(target_from_parts("nope", None).unwrap_err().contains("nope"));
    }
}
