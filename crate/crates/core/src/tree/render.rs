use std::fmt::Write;

use crate::feature::{Constraint, FeatureSpace};
use crate::tree::{DecisionTree, NodePath};

/// Indented if/else rendering. The `if` branch is child 1, `else` child 0.
pub fn render_text(
    tree: &DecisionTree,
    space: Option<&FeatureSpace>,
    class_names: Option<[&str; 2]>,
) -> String {
    let mut out = String::new();
    render_node(tree, &NodePath::root(), 0, space, class_names, &mut out);
    out
}

fn render_node(
    tree: &DecisionTree,
    node: &NodePath,
    indent: usize,
    space: Option<&FeatureSpace>,
    class_names: Option<[&str; 2]>,
    out: &mut String,
) {
    let pad = "    ".repeat(indent);
    if tree.is_leaf(node) {
        let class = node.class().unwrap_or(0);
        let _ = match class_names {
            Some(names) => writeln!(out, "{pad}class {class} ({})", names[usize::from(class)]),
            None => writeln!(out, "{pad}class {class}"),
        };
        return;
    }
    let constraint = Constraint::all(tree.constraint_at(node).unwrap_or_default().iter().cloned());
    let _ = writeln!(out, "{pad}if {}:", constraint.display(space));
    render_node(tree, &node.child(true), indent + 1, space, class_names, out);
    let _ = writeln!(out, "{pad}else:");
    render_node(tree, &node.child(false), indent + 1, space, class_names, out);
}
