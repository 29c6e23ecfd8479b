use std::collections::HashMap;

use crate::datalog::RuleId;

/// Interned derivation label. Two occurrences of a tuple count separately
/// when their labels differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelId(u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Node {
    Stored { predicate: String, seq: usize },
    Derived { rule: RuleId, children: Vec<LabelId> },
}

#[derive(Debug, Default)]
pub(crate) struct LabelArena {
    nodes: Vec<Node>,
    index: HashMap<Node, LabelId>,
}

impl LabelArena {
    fn intern(&mut self, node: Node) -> LabelId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = LabelId(self.nodes.len() as u32);
        self.nodes.push(node.clone());
        self.index.insert(node, id);
        id
    }

    pub fn stored(&mut self, predicate: &str, seq: usize) -> LabelId {
        self.intern(Node::Stored {
            predicate: predicate.to_string(),
            seq,
        })
    }

    pub fn derived(&mut self, rule: RuleId, children: Vec<LabelId>) -> LabelId {
        self.intern(Node::Derived { rule, children })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::Origin;

    #[test]
    fn interning_is_structural() {
        let mut a = LabelArena::default();
        let s = a.stored("p", 0);
        let r = RuleId::new(Origin::User, 1);
        let d1 = a.derived(r, vec![s]);
        let d2 = a.derived(r, vec![s]);
        assert_eq!(d1, d2);
        assert_ne!(a.stored("p", 1), s);
        assert_eq!(a.len(), 3);
    }
}
