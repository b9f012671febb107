use serde::{Deserialize, Serialize};

use super::{Cdg, CdgError, ConceptNode, NodeId, ReplGroup};

pub const CDG_SCHEMA_VERSION: u32 = 1;

/// On-disk form of a [`Cdg`]. Nodes are listed in id order and precedence
/// edges as `[from, to]` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdgDocument {
    pub version: u32,
    pub nodes: Vec<ConceptNode>,
    #[serde(default)]
    pub prec: Vec<(NodeId, NodeId)>,
    #[serde(default)]
    pub repl: Vec<ReplGroup>,
}

impl From<&Cdg> for CdgDocument {
    fn from(g: &Cdg) -> Self {
        CdgDocument {
            version: CDG_SCHEMA_VERSION,
            nodes: g.nodes.values().cloned().collect(),
            prec: g.prec.iter().cloned().collect(),
            repl: g.repl.clone(),
        }
    }
}

impl CdgDocument {
    pub fn into_cdg(self) -> Result<Cdg, CdgError> {
        if self.version != CDG_SCHEMA_VERSION {
            return Err(CdgError::SchemaVersionMismatch(self.version));
        }
        let mut g = Cdg::new();
        for n in self.nodes {
            if g.nodes.contains_key(&n.id) {
                return Err(CdgError::MalformedDocument {
                    line: 0,
                    column: 0,
                    message: format!("duplicate node id {}", n.id),
                });
            }
            g.insert(n);
        }
        g.prec = self.prec.into_iter().collect();
        g.repl = self.repl;
        Ok(g)
    }
}

pub fn serialize(g: &Cdg) -> String {
    serde_json::to_string_pretty(&CdgDocument::from(g)).expect("CDG documents always serialize")
}

pub fn deserialize(text: &str) -> Result<Cdg, CdgError> {
    let doc: CdgDocument = serde_json::from_str(text).map_err(|e| CdgError::MalformedDocument {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.into_cdg()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Term;

    #[test]
    fn round_trip_keeps_everything() {
        let mut g = Cdg::new();
        g.insert(ConceptNode::computable("c1", "swap", 1, vec![Term::var("a"), Term::var("b")]));
        g.insert(
            ConceptNode::computable("s3", "assign", 0, vec![Term::var("t"), Term::var("a")]).member_of("c1").absorbed(),
        );
        g.insert(ConceptNode::computable("s4", "print", 0, vec![Term::var("a")]));
        g.add_prec("c1", "s4");
        g.repl.push(ReplGroup { lhs: vec![NodeId::new("c1")], rhs: vec![NodeId::new("s4")] });
        assert_eq!(deserialize(&serialize(&g)).unwrap(), g);
    }

    #[test]
    fn syntax_errors_carry_position() {
        match deserialize("{\n  \"version\": 1,\n  \"nodes\": [,]\n}") {
            Err(CdgError::MalformedDocument { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn other_versions_are_rejected() {
        assert_eq!(deserialize(r#"{"version": 2, "nodes": []}"#), Err(CdgError::SchemaVersionMismatch(2)));
    }
}
