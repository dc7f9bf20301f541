//! Parse a specification and look at its syntax tree.
//!
//! Run with `cargo run --example parse_document`

use vdmslice::syntax::{sexpr, smallest_node_covering, Position};
use vdmslice::Specification;

fn main() {
    let src = include_str!("../corpus/memberbook_bad.vdmsl");
    let spec = match Specification::parse(src) {
        Ok(s) => s,
        Err(e) => {
            for (span, msg) in e.diagnostics() {
                eprintln!("{span}: {msg}");
            }
            std::process::exit(1);
        }
    };
    let doc = &spec.document;
    println!("{} nodes, {} declarations", doc.node_ids().count(), spec.symbols.declarations().len());
    println!("state variables: {}", doc.state_field_names().join(", "));
    for op in &doc.operations {
        println!("operation {} at {}", op.name.name, op.span);
        if let Some(post) = &op.post {
            println!("  post {}", sexpr(vdmslice::syntax::NodeRef::Expr(post)));
        }
    }

    // what sits under the cursor at 16:19
    if let Some(node) = smallest_node_covering(doc, Position::new(16, 19)) {
        let chain: Vec<&str> = doc
            .ancestors(node.id())
            .into_iter()
            .filter_map(|a| doc.kind_of(a).map(|k| k.as_str()))
            .collect();
        println!("16:19 is `{}` inside {}", doc.text_of(node.span()), chain.join(" < "));
    }
}
