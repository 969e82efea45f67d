use std::fmt;
use std::str::FromStr;

/// Seeded bugs for checking that conformance tests catch real defects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mutation {
    /// The master broadcasts `Commit` but keeps its own commit number.
    SkipCommitIncrement,
    /// A downloaded entry is appended after the local log instead of at its
    /// position.
    UnorderedCatchup,
    /// Backups accept `Prepare` messages from older views.
    AcceptStalePrepare,
    /// A replica that was in phase 2 stays there after a timeout.
    KeepPhase2OnTimeout,
    /// The master never sends `Prepare` to the highest-numbered backup.
    DropPrepareBroadcast,
}

impl Mutation {
    pub const ALL: [Mutation; 5] = [
        Mutation::SkipCommitIncrement,
        Mutation::UnorderedCatchup,
        Mutation::AcceptStalePrepare,
        Mutation::KeepPhase2OnTimeout,
        Mutation::DropPrepareBroadcast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::SkipCommitIncrement => "skip-commit-increment",
            Mutation::UnorderedCatchup => "unordered-catchup",
            Mutation::AcceptStalePrepare => "accept-stale-prepare",
            Mutation::KeepPhase2OnTimeout => "keep-phase2-on-timeout",
            Mutation::DropPrepareBroadcast => "drop-prepare-broadcast",
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Mutation::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<_> = Mutation::ALL.iter().map(|m| m.name()).collect();
            format!("unknown mutation {s:?}; expected one of {}", names.join(", "))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse_back() {
        for m in Mutation::ALL {
            assert_eq!(m.name().parse::<Mutation>(), Ok(m));
        }
        assert!("nope".parse::<Mutation>().is_err());
    }
}
