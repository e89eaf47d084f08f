use serde::{Deserialize, Serialize};

/// Three-valued decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Holds,
    Fails,
    Undetermined,
}

impl Status {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Status::Holds
        } else {
            Status::Fails
        }
    }

    /// Kleene disjunction.
    pub fn or(self, other: Status) -> Status {
        match (self, other) {
            (Status::Holds, _) | (_, Status::Holds) => Status::Holds,
            (Status::Fails, Status::Fails) => Status::Fails,
            _ => Status::Undetermined,
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Holds => 0,
            Status::Fails => 1,
            Status::Undetermined => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::Status::*;

    #[test]
    fn kleene_or() {
        assert_eq!(Fails.or(Holds), Holds);
        assert_eq!(Fails.or(Undetermined), Undetermined);
        assert_eq!(Fails.or(Fails), Fails);
        assert_eq!(Undetermined.or(Holds), Holds);
    }
}
