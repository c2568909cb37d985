use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};

use super::ObjectId;
use crate::error::{Error, Result};

/// Upper bound on any object payload (16 MiB).
pub const MAX_PAYLOAD: usize = 16 * 1024 * 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Blob,
    Tree,
    Commit,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 3] = [ObjectKind::Blob, ObjectKind::Tree, ObjectKind::Commit];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::Blob => "blob",
            ObjectKind::Tree => "tree",
            ObjectKind::Commit => "commit",
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blob" => Ok(ObjectKind::Blob),
            "tree" => Ok(ObjectKind::Tree),
            "commit" => Ok(ObjectKind::Commit),
            other => Err(Error::Format {
                what: "object kind".into(),
                reason: format!("unknown kind {other:?}"),
            }),
        }
    }
}

/// `<kind> <decimal len>\0<payload>`: the exact bytes that are hashed and stored on disk.
pub fn canonical_encode(kind: ObjectKind, payload: &[u8]) -> Vec<u8> {
    let header = format!("{} {}\0", kind.as_str(), payload.len());
    let mut out = Vec::with_capacity(header.len() + payload.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(payload);
    out
}

/// Splits a canonical encoding back into kind and payload, checking the declared length.
pub fn canonical_decode(bytes: &[u8]) -> Result<(ObjectKind, &[u8])> {
    let bad = |reason: &str| Error::Format {
        what: "canonical object".into(),
        reason: reason.into(),
    };
    let nul = bytes
        .iter()
        .position(|&b| b == 0)
        .ok_or_else(|| bad("missing header terminator"))?;
    let header = std::str::from_utf8(&bytes[..nul]).map_err(|_| bad("header is not ASCII"))?;
    let (kind, len) = header.split_once(' ').ok_or_else(|| bad("header lacks length"))?;
    let kind: ObjectKind = kind.parse()?;
    if len.is_empty() || !len.bytes().all(|b| b.is_ascii_digit()) || (len.len() > 1 && len.starts_with('0')) {
        return Err(bad("length is not a canonical decimal"));
    }
    let len: usize = len.parse().map_err(|_| bad("length overflows"))?;
    let payload = &bytes[nul + 1..];
    if payload.len() != len {
        return Err(bad("declared length does not match payload"));
    }
    Ok((kind, payload))
}

pub fn check_size(payload: &[u8]) -> Result<()> {
    if payload.len() > MAX_PAYLOAD {
        return Err(Error::PayloadTooLarge {
            size: payload.len(),
            limit: MAX_PAYLOAD,
        });
    }
    Ok(())
}

/// SHA-1 of the canonical encoding. Integrity only; not a security boundary.
pub fn hash_object(kind: ObjectKind, payload: &[u8]) -> Result<ObjectId> {
    check_size(payload)?;
    let mut hasher = Sha1::new();
    hasher.update(kind.as_str().as_bytes());
    hasher.update(b" ");
    hasher.update(payload.len().to_string().as_bytes());
    hasher.update([0u8]);
    hasher.update(payload);
    Ok(ObjectId::from_bytes(hasher.finalize().into()))
}

/// Checks size and, for trees and commits, the canonical body grammar.
pub fn validate_payload(kind: ObjectKind, payload: &[u8]) -> Result<()> {
    check_size(payload)?;
    match kind {
        ObjectKind::Blob => Ok(()),
        ObjectKind::Tree => Tree::parse(payload).map(drop),
        ObjectKind::Commit => Commit::parse(payload).map(drop),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawObject {
    pub kind: ObjectKind,
    pub payload: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Blob,
    Tree,
}

impl EntryKind {
    pub fn mode(self) -> &'static str {
        match self {
            EntryKind::Blob => "100644",
            EntryKind::Tree => "040000",
        }
    }

    pub fn object_kind(self) -> ObjectKind {
        match self {
            EntryKind::Blob => ObjectKind::Blob,
            EntryKind::Tree => ObjectKind::Tree,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TreeEntry {
    pub kind: EntryKind,
    pub name: String,
    pub id: ObjectId,
}

impl TreeEntry {
    pub fn blob(name: impl Into<String>, id: ObjectId) -> Self {
        TreeEntry {
            kind: EntryKind::Blob,
            name: name.into(),
            id,
        }
    }

    pub fn tree(name: impl Into<String>, id: ObjectId) -> Self {
        TreeEntry {
            kind: EntryKind::Tree,
            name: name.into(),
            id,
        }
    }
}

pub fn valid_entry_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && !name.bytes().any(|b| b == b'/' || b == 0 || b == b'\n')
}

/// Directory listing. Entries are strictly ascending by name bytes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tree {
    entries: Vec<TreeEntry>,
}

impl Tree {
    /// Builds a tree from entries in any order; fails on invalid or duplicate names.
    pub fn from_entries(mut entries: Vec<TreeEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.name.as_bytes().cmp(b.name.as_bytes()));
        Self::check(&entries)?;
        Ok(Tree { entries })
    }

    fn check(entries: &[TreeEntry]) -> Result<()> {
        for e in entries {
            if !valid_entry_name(&e.name) {
                return Err(Error::malformed(ObjectKind::Tree, format!("invalid entry name {:?}", e.name)));
            }
        }
        for pair in entries.windows(2) {
            if pair[0].name.as_bytes() >= pair[1].name.as_bytes() {
                return Err(Error::malformed(
                    ObjectKind::Tree,
                    format!("entries not strictly sorted at {:?}", pair[1].name),
                ));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[TreeEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&TreeEntry> {
        self.entries
            .binary_search_by(|e| e.name.as_bytes().cmp(name.as_bytes()))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// `<mode> <kind> <id> <name>` per entry, LF-joined, no trailing LF.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.entries.len() * 64);
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                out.push(b'\n');
            }
            out.extend_from_slice(e.kind.mode().as_bytes());
            out.push(b' ');
            out.extend_from_slice(e.kind.object_kind().as_str().as_bytes());
            out.push(b' ');
            out.extend_from_slice(e.id.to_hex().as_bytes());
            out.push(b' ');
            out.extend_from_slice(e.name.as_bytes());
        }
        out
    }

    pub fn parse(body: &[u8]) -> Result<Self> {
        if body.is_empty() {
            return Ok(Tree::default());
        }
        let text = std::str::from_utf8(body).map_err(|_| Error::malformed(ObjectKind::Tree, "not UTF-8"))?;
        let mut entries = Vec::new();
        for line in text.split('\n') {
            let mut parts = line.splitn(4, ' ');
            let (Some(mode), Some(kind), Some(id), Some(name)) = (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::malformed(ObjectKind::Tree, format!("short entry line {line:?}")));
            };
            let kind = match (mode, kind) {
                ("100644", "blob") => EntryKind::Blob,
                ("040000", "tree") => EntryKind::Tree,
                _ => {
                    return Err(Error::malformed(
                        ObjectKind::Tree,
                        format!("mode {mode:?} does not agree with kind {kind:?}"),
                    ))
                }
            };
            let id = ObjectId::from_hex(id).map_err(|_| Error::malformed(ObjectKind::Tree, format!("bad id {id:?}")))?;
            entries.push(TreeEntry {
                kind,
                name: name.to_owned(),
                id,
            });
        }
        Self::check(&entries)?;
        Ok(Tree { entries })
    }
}

pub fn valid_author(author: &str) -> bool {
    !author.is_empty() && !author.chars().any(|c| c.is_whitespace() || c.is_control())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Commit {
    pub tree: ObjectId,
    pub parents: Vec<ObjectId>,
    pub author: String,
    /// Client clock, unix seconds.
    pub authored_at: i64,
    pub message: String,
}

impl Commit {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("tree {}\n", self.tree);
        for p in &self.parents {
            out.push_str(&format!("parent {p}\n"));
        }
        out.push_str(&format!("author {} {}\n\n", self.author, self.authored_at));
        out.push_str(&self.message);
        out.into_bytes()
    }

    pub fn parse(body: &[u8]) -> Result<Self> {
        let bad = |reason: String| Error::malformed(ObjectKind::Commit, reason);
        let text = std::str::from_utf8(body).map_err(|_| bad("not UTF-8".into()))?;
        let (header, message) = text.split_once("\n\n").ok_or_else(|| bad("missing blank line".into()))?;
        let mut lines = header.split('\n');

        let tree = lines
            .next()
            .and_then(|l| l.strip_prefix("tree "))
            .ok_or_else(|| bad("first line must be `tree <id>`".into()))?;
        let tree = ObjectId::from_hex(tree).map_err(|_| bad(format!("bad tree id {tree:?}")))?;

        let mut parents = Vec::new();
        let mut author_line = None;
        for line in lines.by_ref() {
            if let Some(p) = line.strip_prefix("parent ") {
                parents.push(ObjectId::from_hex(p).map_err(|_| bad(format!("bad parent id {p:?}")))?);
            } else {
                author_line = Some(line);
                break;
            }
        }
        if lines.next().is_some() {
            return Err(bad("unexpected header line after author".into()));
        }
        if parents.len() > 2 {
            return Err(bad(format!("{} parents; at most 2 allowed", parents.len())));
        }
        let author_line = author_line
            .and_then(|l| l.strip_prefix("author "))
            .ok_or_else(|| bad("missing author line".into()))?;
        let (author, ts) = author_line
            .rsplit_once(' ')
            .ok_or_else(|| bad("author line lacks timestamp".into()))?;
        if !valid_author(author) {
            return Err(bad(format!("invalid author {author:?}")));
        }
        let authored_at: i64 = ts.parse().map_err(|_| bad(format!("bad timestamp {ts:?}")))?;
        if authored_at.to_string() != ts {
            return Err(bad(format!("non-canonical timestamp {ts:?}")));
        }
        if message.is_empty() {
            return Err(bad("empty message".into()));
        }
        Ok(Commit {
            tree,
            parents,
            author: author.to_owned(),
            authored_at,
            message: message.to_owned(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(n: u8) -> ObjectId {
        ObjectId::from_bytes([n; 20])
    }

    #[test]
    fn canonical_encoding_examples() {
        assert_eq!(canonical_encode(ObjectKind::Blob, b"hello"), b"blob 5\0hello");
        assert_eq!(canonical_encode(ObjectKind::Blob, b""), b"blob 0\0");
        assert_ne!(
            canonical_encode(ObjectKind::Tree, b"body"),
            canonical_encode(ObjectKind::Blob, b"body")
        );
    }

    #[test]
    fn decode_checks_length() {
        assert_eq!(canonical_decode(b"blob 5\0hello").unwrap(), (ObjectKind::Blob, &b"hello"[..]));
        assert!(canonical_decode(b"blob 4\0hello").is_err());
        assert!(canonical_decode(b"blob 05\0hello").is_err());
        assert!(canonical_decode(b"blub 5\0hello").is_err());
        assert!(canonical_decode(b"blob 5hello").is_err());
    }

    // Values computed with `printf 'blob 5\0hello' | sha1sum` and friends.
    #[test]
    fn frozen_hashes() {
        assert_eq!(
            hash_object(ObjectKind::Blob, b"hello").unwrap().to_hex(),
            "b6fc4c620b67d95f953a5c1c1230aaab5db5a1b0"
        );
        assert_eq!(
            hash_object(ObjectKind::Blob, b"").unwrap().to_hex(),
            "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
        );
        assert_eq!(
            hash_object(ObjectKind::Tree, b"").unwrap().to_hex(),
            "4b825dc642cb6eb9a060e54bf8d69288fbee4904"
        );
    }

    #[test]
    fn oversize_payload_rejected() {
        let big = vec![0u8; MAX_PAYLOAD + 1];
        assert!(matches!(hash_object(ObjectKind::Blob, &big), Err(Error::PayloadTooLarge { .. })));
        assert!(hash_object(ObjectKind::Blob, &big[..MAX_PAYLOAD]).is_ok());
    }

    #[test]
    fn tree_encoding_is_sorted_and_parses_back() {
        let tree = Tree::from_entries(vec![TreeEntry::tree("dir", id(2)), TreeEntry::blob("a.txt", id(1))]).unwrap();
        let body = tree.encode();
        let expected = format!("100644 blob {} a.txt\n040000 tree {} dir", id(1), id(2));
        assert_eq!(body, expected.as_bytes());
        assert_eq!(Tree::parse(&body).unwrap(), tree);
    }

    #[test]
    fn tree_rejects_unsorted_duplicate_and_bad_names() {
        let unsorted = format!("100644 blob {} b\n100644 blob {} a", id(1), id(2));
        assert!(Tree::parse(unsorted.as_bytes()).is_err());
        let dup = format!("100644 blob {} a\n100644 blob {} a", id(1), id(2));
        assert!(Tree::parse(dup.as_bytes()).is_err());
        let mismatch = format!("100644 tree {} a", id(1));
        assert!(Tree::parse(mismatch.as_bytes()).is_err());
        let trailing = format!("100644 blob {} a\n", id(1));
        assert!(Tree::parse(trailing.as_bytes()).is_err());
        for name in ["", ".", "..", "a/b"] {
            assert!(Tree::from_entries(vec![TreeEntry::blob(name, id(1))]).is_err(), "{name:?}");
        }
        assert!(Tree::from_entries(vec![TreeEntry::blob("x", id(1)), TreeEntry::tree("x", id(2))]).is_err());
    }

    #[test]
    fn tree_names_may_contain_spaces() {
        let tree = Tree::from_entries(vec![TreeEntry::blob("my file.txt", id(3))]).unwrap();
        assert_eq!(Tree::parse(&tree.encode()).unwrap(), tree);
    }

    #[test]
    fn commit_round_trip() {
        let c = Commit {
            tree: id(1),
            parents: vec![id(2), id(3)],
            author: "alice".into(),
            authored_at: 1_700_000_000,
            message: "merge\n\nwith body\n".into(),
        };
        let body = c.encode();
        assert!(body.starts_with(format!("tree {}\nparent {}\nparent {}\nauthor alice 1700000000\n\n", id(1), id(2), id(3)).as_bytes()));
        assert_eq!(Commit::parse(&body).unwrap(), c);
    }

    #[test]
    fn commit_grammar_violations() {
        let t = id(1);
        for body in [
            format!("tree {t}\nauthor a 1\n\n"),
            format!("tree {t}\nauthor a b 1\n\nmsg"),
            format!("tree {t}\nauthor a 01\n\nmsg"),
            format!("parent {t}\ntree {t}\nauthor a 1\n\nmsg"),
            format!("tree {t}\nparent {t}\nparent {t}\nparent {t}\nauthor a 1\n\nmsg"),
            format!("tree {t}\nauthor a 1\nparent {t}\n\nmsg"),
            format!("tree {t}\nauthor a 1\nmsg"),
        ] {
            assert!(Commit::parse(body.as_bytes()).is_err(), "{body:?}");
        }
    }
}
