use serde::{Deserialize, Serialize};

/// Program functions known to the executor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Function {
    Select,
    Relate,
    RelateInv,
    RelateName,
    RelateInvName,
    FilterV,
    FilterH,
    Filter,
    FilterNot,
    VerifyF,
    Verify,
    VerifyRel,
    VerifyRelInv,
    ChooseV,
    ChooseH,
    ChooseF,
    ChooseSubj,
    ChooseAttr,
    ChooseRelInv,
    QueryN,
    QueryV,
    QueryH,
    QueryF,
    Query,
    Exist,
    And,
    Or,
    Common,
    Different,
    Same,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    Select,
    Relate,
    Filter,
    Verify,
    Choose,
    Query,
    Logic,
}

use Function::*;

impl Function {
    pub const ALL: [Function; 30] = [
        Select, Relate, RelateInv, RelateName, RelateInvName, FilterV, FilterH, Filter, FilterNot, VerifyF, Verify,
        VerifyRel, VerifyRelInv, ChooseV, ChooseH, ChooseF, ChooseSubj, ChooseAttr, ChooseRelInv, QueryN, QueryV,
        QueryH, QueryF, Query, Exist, And, Or, Common, Different, Same,
    ];

    /// Parses a function name. `query_name` and `choose_rel` are accepted as
    /// aliases of `query_n` and `choose_rel_inv`.
    pub fn from_name(name: &str) -> Option<Function> {
        let n = name.trim().to_ascii_lowercase();
        let f = match n.as_str() {
            "select" => Select,
            "relate" => Relate,
            "relate_inv" => RelateInv,
            "relate_name" => RelateName,
            "relate_inv_name" => RelateInvName,
            "filter_v" => FilterV,
            "filter_h" => FilterH,
            "filter" => Filter,
            "filter_not" => FilterNot,
            "verify_f" => VerifyF,
            "verify" => Verify,
            "verify_rel" => VerifyRel,
            "verify_rel_inv" => VerifyRelInv,
            "choose_v" => ChooseV,
            "choose_h" => ChooseH,
            "choose_f" => ChooseF,
            "choose_subj" => ChooseSubj,
            "choose_attr" => ChooseAttr,
            "choose_rel_inv" | "choose_rel" => ChooseRelInv,
            "query_n" | "query_name" => QueryN,
            "query_v" => QueryV,
            "query_h" => QueryH,
            "query_f" => QueryF,
            "query" => Query,
            "exist" => Exist,
            "and" => And,
            "or" => Or,
            "common" => Common,
            "different" => Different,
            "same" => Same,
            _ => return None,
        };
        Some(f)
    }

    pub fn name(self) -> &'static str {
        match self {
            Select => "select",
            Relate => "relate",
            RelateInv => "relate_inv",
            RelateName => "relate_name",
            RelateInvName => "relate_inv_name",
            FilterV => "filter_v",
            FilterH => "filter_h",
            Filter => "filter",
            FilterNot => "filter_not",
            VerifyF => "verify_f",
            Verify => "verify",
            VerifyRel => "verify_rel",
            VerifyRelInv => "verify_rel_inv",
            ChooseV => "choose_v",
            ChooseH => "choose_h",
            ChooseF => "choose_f",
            ChooseSubj => "choose_subj",
            ChooseAttr => "choose_attr",
            ChooseRelInv => "choose_rel_inv",
            QueryN => "query_n",
            QueryV => "query_v",
            QueryH => "query_h",
            QueryF => "query_f",
            Query => "query",
            Exist => "exist",
            And => "and",
            Or => "or",
            Common => "common",
            Different => "different",
            Same => "same",
        }
    }

    pub fn kind(self) -> FunctionKind {
        match self {
            Select => FunctionKind::Select,
            Relate | RelateInv | RelateName | RelateInvName => FunctionKind::Relate,
            FilterV | FilterH | Filter | FilterNot => FunctionKind::Filter,
            VerifyF | Verify | VerifyRel | VerifyRelInv => FunctionKind::Verify,
            ChooseV | ChooseH | ChooseF | ChooseSubj | ChooseAttr | ChooseRelInv => FunctionKind::Choose,
            QueryN | QueryV | QueryH | QueryF | Query => FunctionKind::Query,
            Exist | And | Or | Common | Different | Same => FunctionKind::Logic,
        }
    }

    pub fn is_implemented(self) -> bool {
        !matches!(self, Common | Different | Same)
    }

    /// Answered from spatial query masks.
    pub fn uses_relation(self) -> bool {
        matches!(self, Relate | RelateInv | RelateName | RelateInvName | VerifyRel | VerifyRelInv | ChooseRelInv)
    }

    /// Answered by the attribute oracle.
    pub fn uses_oracle(self) -> bool {
        matches!(
            self,
            Filter | FilterNot | VerifyF | Verify | ChooseF | ChooseSubj | ChooseAttr | QueryF | Query
        )
    }

    /// Produces the final answer and stops the program.
    pub fn is_terminal(self) -> bool {
        matches!(self.kind(), FunctionKind::Choose | FunctionKind::Query)
    }

    /// Accepted argument counts, inclusive.
    pub fn arity(self) -> (usize, usize) {
        match self {
            Select | VerifyF | QueryN | QueryV | QueryH | QueryF | Exist => (1, 1),
            ChooseV | ChooseH => (1, 3),
            Relate | RelateInv | FilterV | FilterH | Filter | FilterNot | Verify | ChooseF | Query | And | Or => (2, 2),
            RelateName | RelateInvName | VerifyRel | VerifyRelInv | ChooseSubj => (3, 3),
            ChooseAttr | ChooseRelInv => (4, 4),
            Common | Different | Same => (0, usize::MAX),
        }
    }
}

impl std::fmt::Display for Function {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in Function::ALL {
            assert_eq!(Function::from_name(f.name()), Some(f));
        }
        assert_eq!(Function::from_name("query_name"), Some(QueryN));
        assert_eq!(Function::from_name("choose_rel"), Some(ChooseRelInv));
        assert_eq!(Function::from_name("zorp"), None);
    }

    #[test]
    fn terminal_functions() {
        assert!(QueryN.is_terminal() && ChooseAttr.is_terminal());
        assert!(!Relate.is_terminal() && !Verify.is_terminal());
        assert!(!Same.is_implemented());
    }
}
