use super::{DomError, DomNode, DomTree};

/// Absolute positional path of `node`, which must be a node of `tree`
/// (identity, not structural equality).
pub fn compute_xpath(node: &DomNode, tree: &DomTree) -> Result<String, DomError> {
    tree.nodes()
        .find(|n| std::ptr::eq(*n, node))
        .map(|n| n.xpath.clone())
        .ok_or(DomError::NodeNotInTree)
}

/// Follows an absolute `/tag[i]/...` path from the root.
pub fn resolve_xpath<'a>(tree: &'a DomTree, path: &str) -> Option<&'a DomNode> {
    let mut steps = path.strip_prefix('/')?.split('/').map(parse_step);
    let (tag, idx) = steps.next()??;
    let root = tree.root();
    if tag != root.tag || idx != 1 {
        return None;
    }
    let mut node = root;
    for step in steps {
        let (tag, idx) = step?;
        node = node
            .children
            .iter()
            .filter(|c| c.tag == tag)
            .nth(idx.checked_sub(1)?)?;
    }
    Some(node)
}

fn parse_step(step: &str) -> Option<(&str, usize)> {
    let (tag, rest) = step.split_once('[')?;
    let idx = rest.strip_suffix(']')?.parse().ok()?;
    Some((tag, idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_html;

    #[test]
    fn root_path() {
        let tree = parse_html("<html><body></body></html>").unwrap();
        assert_eq!(compute_xpath(tree.root(), &tree).unwrap(), "/html[1]");
    }

    #[test]
    fn second_list_item() {
        let tree = parse_html("<html><body><ul><li>a</li><li>b</li></ul></body></html>").unwrap();
        let li = &tree.root().children[0].children[0].children[1];
        let path = compute_xpath(li, &tree).unwrap();
        assert_eq!(path, "/html[1]/body[1]/ul[1]/li[2]");
        assert!(std::ptr::eq(resolve_xpath(&tree, &path).unwrap(), li));
    }

    #[test]
    fn foreign_node_rejected() {
        let tree = parse_html("<div></div>").unwrap();
        let other = parse_html("<div></div>").unwrap();
        assert_eq!(compute_xpath(other.root(), &tree), Err(DomError::NodeNotInTree));
    }

    #[test]
    fn bad_paths_do_not_resolve() {
        let tree = parse_html("<div><a></a></div>").unwrap();
        for p in ["", "div[1]", "/div[2]", "/div[1]/a[0]", "/div[1]/a[2]", "/div[1]/a", "/span[1]"] {
            assert!(resolve_xpath(&tree, p).is_none(), "{p}");
        }
        assert!(resolve_xpath(&tree, "/div[1]/a[1]").is_some());
    }
}
