//! Sparse radix-16 Merkle Patricia Trie keyed by [`IdHash`].
//!
//! Nodes are immutable and shared through `Arc`, so cloning a trie is cheap
//! and every mutation rebuilds only the path from the root to the touched
//! leaf. Keys all have 64 nibbles, so branches never carry values.
//!
//! Node encodings (hashed with SHA-256):
//!
//! ```text
//! leaf       0x00 | len-prefixed nibbles | len-prefixed canonical JSON value
//! extension  0x01 | len-prefixed nibbles | child hash
//! branch     0x02 | u16 child bitmap (BE) | hashes of present children
//! ```

use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{canonical_json, push_length_prefixed, Hash32};

use super::IdHash;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrieError {
    #[error("key {0} already present")]
    DuplicateKey(IdHash),
    #[error("key {0} not found")]
    NotFound(IdHash),
    #[error("snapshot root {claimed} does not match rebuilt root {actual}")]
    SnapshotRootMismatch { claimed: Hash32, actual: Hash32 },
}

const TAG_LEAF: u8 = 0;
const TAG_EXTENSION: u8 = 1;
const TAG_BRANCH: u8 = 2;

#[derive(Debug)]
enum Node<V> {
    Leaf { path: Vec<u8>, value: V, hash: Hash32 },
    Extension { path: Vec<u8>, child: Arc<Node<V>>, hash: Hash32 },
    Branch { children: Box<[Option<Arc<Node<V>>>; 16]>, hash: Hash32 },
}

impl<V: Serialize> Node<V> {
    fn hash(&self) -> Hash32 {
        match self {
            Node::Leaf { hash, .. } | Node::Extension { hash, .. } | Node::Branch { hash, .. } => *hash,
        }
    }

    fn leaf(path: Vec<u8>, value: V) -> Arc<Node<V>> {
        let hash = Hash32::digest(&encode_leaf(&path, &canonical_json(&value)));
        Arc::new(Node::Leaf { path, value, hash })
    }

    /// Wraps `child` in an extension when `path` is non-empty.
    fn extension(path: Vec<u8>, child: Arc<Node<V>>) -> Arc<Node<V>> {
        if path.is_empty() {
            return child;
        }
        let hash = Hash32::digest(&encode_extension(&path, &child.hash()));
        Arc::new(Node::Extension { path, child, hash })
    }

    fn branch(children: Box<[Option<Arc<Node<V>>>; 16]>) -> Arc<Node<V>> {
        let hashes: Vec<Option<Hash32>> = children.iter().map(|c| c.as_ref().map(|n| n.hash())).collect();
        let hash = Hash32::digest(&encode_branch(&hashes));
        Arc::new(Node::Branch { children, hash })
    }

    fn encode(&self) -> Vec<u8> {
        match self {
            Node::Leaf { path, value, .. } => encode_leaf(path, &canonical_json(value)),
            Node::Extension { path, child, .. } => encode_extension(path, &child.hash()),
            Node::Branch { children, .. } => {
                let hashes: Vec<Option<Hash32>> = children.iter().map(|c| c.as_ref().map(|n| n.hash())).collect();
                encode_branch(&hashes)
            }
        }
    }
}

fn encode_leaf(path: &[u8], value: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(value.len() + path.len() + 9);
    out.push(TAG_LEAF);
    push_length_prefixed(&mut out, path);
    push_length_prefixed(&mut out, value);
    out
}

fn encode_extension(path: &[u8], child: &Hash32) -> Vec<u8> {
    let mut out = Vec::with_capacity(path.len() + 37);
    out.push(TAG_EXTENSION);
    push_length_prefixed(&mut out, path);
    out.extend_from_slice(child.as_bytes());
    out
}

fn encode_branch(children: &[Option<Hash32>]) -> Vec<u8> {
    let mut bitmap = 0u16;
    let mut out = vec![TAG_BRANCH, 0, 0];
    for (i, c) in children.iter().enumerate() {
        if let Some(h) = c {
            bitmap |= 1 << i;
            out.extend_from_slice(h.as_bytes());
        }
    }
    out[1..3].copy_from_slice(&bitmap.to_be_bytes());
    out
}

fn common_prefix(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

fn empty_children<V>() -> Box<[Option<Arc<Node<V>>>; 16]> {
    Box::new(std::array::from_fn(|_| None))
}

/// Path from the root to a leaf, as raw node encodings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionProof {
    pub nodes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotLeaf<V> {
    pub id_hash: IdHash,
    pub account: V,
}

/// JSON export of the whole trie.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrieSnapshot<V> {
    pub root: Hash32,
    pub leaves: Vec<SnapshotLeaf<V>>,
}

#[derive(Debug)]
pub struct GlobalStateTrie<V> {
    root: Option<Arc<Node<V>>>,
    len: usize,
}

impl<V> Clone for GlobalStateTrie<V> {
    fn clone(&self) -> Self {
        GlobalStateTrie { root: self.root.clone(), len: self.len }
    }
}

impl<V> Default for GlobalStateTrie<V> {
    fn default() -> Self {
        GlobalStateTrie { root: None, len: 0 }
    }
}

impl<V: Serialize + Clone> GlobalStateTrie<V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Root digest; all zeros for the empty trie.
    pub fn root(&self) -> Hash32 {
        self.root.as_ref().map_or(Hash32::ZERO, |n| n.hash())
    }

    pub fn contains(&self, key: &IdHash) -> bool {
        self.get(key).is_some()
    }

    pub fn get(&self, key: &IdHash) -> Option<&V> {
        let nibbles = key.0.nibbles();
        let mut path: &[u8] = &nibbles;
        let mut node = self.root.as_deref()?;
        loop {
            match node {
                Node::Leaf { path: lp, value, .. } => return (lp.as_slice() == path).then_some(value),
                Node::Extension { path: ep, child, .. } => {
                    path = path.strip_prefix(ep.as_slice())?;
                    node = child;
                }
                Node::Branch { children, .. } => {
                    let (first, rest) = path.split_first()?;
                    node = children[*first as usize].as_deref()?;
                    path = rest;
                }
            }
        }
    }

    /// Inserts a new key. Existing keys are never overwritten.
    pub fn insert(&mut self, key: IdHash, value: V) -> Result<(), TrieError> {
        let nibbles = key.0.nibbles();
        let new_root = match self.root.take() {
            None => Node::leaf(nibbles, value),
            Some(root) => match Self::insert_at(&root, &nibbles, value) {
                Some(n) => n,
                None => {
                    self.root = Some(root);
                    return Err(TrieError::DuplicateKey(key));
                }
            },
        };
        self.root = Some(new_root);
        self.len += 1;
        Ok(())
    }

    // Returns None when the key already exists.
    fn insert_at(node: &Arc<Node<V>>, path: &[u8], value: V) -> Option<Arc<Node<V>>> {
        match node.as_ref() {
            Node::Leaf { path: lp, value: lv, .. } => {
                let c = common_prefix(lp, path);
                if c == lp.len() && c == path.len() {
                    return None;
                }
                let mut children = empty_children();
                children[lp[c] as usize] = Some(Node::leaf(lp[c + 1..].to_vec(), lv.clone()));
                children[path[c] as usize] = Some(Node::leaf(path[c + 1..].to_vec(), value));
                Some(Node::extension(path[..c].to_vec(), Node::branch(children)))
            }
            Node::Extension { path: ep, child, .. } => {
                let c = common_prefix(ep, path);
                if c == ep.len() {
                    let child = Self::insert_at(child, &path[c..], value)?;
                    return Some(Node::extension(ep.clone(), child));
                }
                let mut children = empty_children();
                children[ep[c] as usize] = Some(Node::extension(ep[c + 1..].to_vec(), child.clone()));
                children[path[c] as usize] = Some(Node::leaf(path[c + 1..].to_vec(), value));
                Some(Node::extension(path[..c].to_vec(), Node::branch(children)))
            }
            Node::Branch { children, .. } => {
                let idx = path[0] as usize;
                let mut next = children.clone();
                next[idx] = Some(match &children[idx] {
                    None => Node::leaf(path[1..].to_vec(), value),
                    Some(c) => Self::insert_at(c, &path[1..], value)?,
                });
                Some(Node::branch(next))
            }
        }
    }

    /// Replaces the value at an existing key with `f(old)`.
    pub fn update(&mut self, key: &IdHash, f: impl FnOnce(&mut V)) -> Result<(), TrieError> {
        let nibbles = key.0.nibbles();
        let root = self.root.as_ref().ok_or(TrieError::NotFound(*key))?;
        let new_root = Self::update_at(root, &nibbles, f).ok_or(TrieError::NotFound(*key))?;
        self.root = Some(new_root);
        Ok(())
    }

    fn update_at(node: &Arc<Node<V>>, path: &[u8], f: impl FnOnce(&mut V)) -> Option<Arc<Node<V>>> {
        match node.as_ref() {
            Node::Leaf { path: lp, value, .. } => {
                if lp.as_slice() != path {
                    return None;
                }
                let mut v = value.clone();
                f(&mut v);
                Some(Node::leaf(lp.clone(), v))
            }
            Node::Extension { path: ep, child, .. } => {
                let rest = path.strip_prefix(ep.as_slice())?;
                Some(Node::extension(ep.clone(), Self::update_at(child, rest, f)?))
            }
            Node::Branch { children, .. } => {
                let idx = path[0] as usize;
                let child = Self::update_at(children[idx].as_ref()?, &path[1..], f)?;
                let mut next = children.clone();
                next[idx] = Some(child);
                Some(Node::branch(next))
            }
        }
    }

    /// All (key, value) pairs in ascending key order.
    pub fn entries(&self) -> Vec<(IdHash, &V)> {
        let mut out = Vec::with_capacity(self.len);
        if let Some(root) = &self.root {
            let mut prefix = Vec::with_capacity(64);
            Self::collect(root, &mut prefix, &mut |nibbles, v, _| out.push((key_from_nibbles(nibbles), v)));
        }
        out
    }

    /// Number of nodes above each leaf (branches and extensions), in key order.
    pub fn leaf_depths(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len);
        if let Some(root) = &self.root {
            let mut prefix = Vec::with_capacity(64);
            Self::collect(root, &mut prefix, &mut |_, _, depth| out.push(depth));
        }
        out
    }

    fn collect<'a>(node: &'a Node<V>, prefix: &mut Vec<u8>, visit: &mut impl FnMut(&[u8], &'a V, usize)) {
        fn walk<'a, V>(node: &'a Node<V>, prefix: &mut Vec<u8>, depth: usize, visit: &mut impl FnMut(&[u8], &'a V, usize)) {
            match node {
                Node::Leaf { path, value, .. } => {
                    let n = prefix.len();
                    prefix.extend_from_slice(path);
                    visit(prefix, value, depth);
                    prefix.truncate(n);
                }
                Node::Extension { path, child, .. } => {
                    let n = prefix.len();
                    prefix.extend_from_slice(path);
                    walk(child, prefix, depth + 1, visit);
                    prefix.truncate(n);
                }
                Node::Branch { children, .. } => {
                    for (i, c) in children.iter().enumerate() {
                        if let Some(c) = c {
                            prefix.push(i as u8);
                            walk(c, prefix, depth + 1, visit);
                            prefix.pop();
                        }
                    }
                }
            }
        }
        walk(node, prefix, 0, visit)
    }

    /// Node encodings from the root down to the leaf holding `key`.
    pub fn inclusion_proof(&self, key: &IdHash) -> Result<InclusionProof, TrieError> {
        let nibbles = key.0.nibbles();
        let mut path: &[u8] = &nibbles;
        let mut nodes = Vec::new();
        let mut node = self.root.as_deref().ok_or(TrieError::NotFound(*key))?;
        loop {
            nodes.push(hex::encode(node.encode()));
            match node {
                Node::Leaf { path: lp, .. } => {
                    if lp.as_slice() != path {
                        return Err(TrieError::NotFound(*key));
                    }
                    return Ok(InclusionProof { nodes });
                }
                Node::Extension { path: ep, child, .. } => {
                    path = path.strip_prefix(ep.as_slice()).ok_or(TrieError::NotFound(*key))?;
                    node = child;
                }
                Node::Branch { children, .. } => {
                    node = children[path[0] as usize].as_deref().ok_or(TrieError::NotFound(*key))?;
                    path = &path[1..];
                }
            }
        }
    }

    pub fn snapshot(&self) -> TrieSnapshot<V> {
        TrieSnapshot {
            root: self.root(),
            leaves: self.entries().into_iter().map(|(id_hash, v)| SnapshotLeaf { id_hash, account: v.clone() }).collect(),
        }
    }

    /// Rebuilds a trie from a snapshot and checks the claimed root.
    pub fn from_snapshot(snapshot: TrieSnapshot<V>) -> Result<Self, TrieError> {
        let mut trie = GlobalStateTrie::new();
        for leaf in snapshot.leaves {
            trie.insert(leaf.id_hash, leaf.account)?;
        }
        if trie.root() != snapshot.root {
            return Err(TrieError::SnapshotRootMismatch { claimed: snapshot.root, actual: trie.root() });
        }
        Ok(trie)
    }
}

fn key_from_nibbles(nibbles: &[u8]) -> IdHash {
    let mut out = [0u8; 32];
    for (i, pair) in nibbles.chunks(2).enumerate() {
        out[i] = (pair[0] << 4) | pair[1];
    }
    IdHash(Hash32(out))
}

fn read_prefixed(bytes: &[u8]) -> Option<(&[u8], &[u8])> {
    let len = u32::from_be_bytes(bytes.get(..4)?.try_into().ok()?) as usize;
    let body = bytes.get(4..4 + len)?;
    Some((body, &bytes[4 + len..]))
}

/// Walks `proof` from `root` along `key`. Returns the leaf's value bytes
/// (canonical JSON) when the proof is valid.
pub fn verify_inclusion_value(root: &Hash32, key: &IdHash, proof: &InclusionProof) -> Option<Vec<u8>> {
    let nibbles = key.0.nibbles();
    let mut path: &[u8] = &nibbles;
    let mut expected = *root;
    for encoded in &proof.nodes {
        let bytes = hex::decode(encoded).ok()?;
        if Hash32::digest(&bytes) != expected {
            return None;
        }
        let (tag, body) = bytes.split_first()?;
        match *tag {
            TAG_LEAF => {
                let (lp, rest) = read_prefixed(body)?;
                let (value, rest) = read_prefixed(rest)?;
                return (rest.is_empty() && lp == path).then(|| value.to_vec());
            }
            TAG_EXTENSION => {
                let (ep, rest) = read_prefixed(body)?;
                path = path.strip_prefix(ep)?;
                expected = Hash32(rest.try_into().ok()?);
            }
            TAG_BRANCH => {
                let bitmap = u16::from_be_bytes(body.get(..2)?.try_into().ok()?);
                let (nib, rest_path) = path.split_first()?;
                if bitmap & (1 << nib) == 0 {
                    return None;
                }
                let slot = (bitmap & ((1u16 << nib) - 1)).count_ones() as usize;
                let start = 2 + slot * 32;
                expected = Hash32(body.get(start..start + 32)?.try_into().ok()?);
                path = rest_path;
            }
            _ => return None,
        }
    }
    None
}

pub fn verify_inclusion(root: &Hash32, key: &IdHash, proof: &InclusionProof) -> bool {
    verify_inclusion_value(root, key, proof).is_some()
}

/// Decodes a proven leaf value.
pub fn decode_proven_value<V: DeserializeOwned>(bytes: &[u8]) -> Option<V> {
    serde_json::from_slice(bytes).ok()
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use proptest::prelude::*;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn key(seed: u64) -> IdHash {
        IdHash(Hash32::digest(&seed.to_le_bytes()))
    }

    #[test]
    fn empty_trie_has_zero_root() {
        let t: GlobalStateTrie<u64> = GlobalStateTrie::new();
        assert_eq!(t.root(), Hash32::ZERO);
        assert!(t.get(&key(1)).is_none());
        assert!(matches!(t.inclusion_proof(&key(1)), Err(TrieError::NotFound(_))));
    }

    #[test]
    fn duplicate_insert_is_rejected_and_state_kept() {
        let mut t = GlobalStateTrie::new();
        t.insert(key(1), 10u64).unwrap();
        let root = t.root();
        assert_eq!(t.insert(key(1), 99), Err(TrieError::DuplicateKey(key(1))));
        assert_eq!(t.root(), root);
        assert_eq!(t.get(&key(1)), Some(&10));
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn update_changes_root_and_value() {
        let mut t = GlobalStateTrie::new();
        for i in 0..50 {
            t.insert(key(i), i).unwrap();
        }
        let before = t.root();
        t.update(&key(7), |v| *v += 1000).unwrap();
        assert_ne!(t.root(), before);
        assert_eq!(t.get(&key(7)), Some(&1007));
        assert_eq!(t.update(&key(999), |_| {}), Err(TrieError::NotFound(key(999))));
    }

    #[test]
    fn shared_prefix_keys_use_extensions() {
        let mut a = [0u8; 32];
        a[31] = 1;
        let mut b = [0u8; 32];
        b[31] = 2;
        let mut t = GlobalStateTrie::new();
        t.insert(IdHash(Hash32(a)), 1u8).unwrap();
        t.insert(IdHash(Hash32(b)), 2u8).unwrap();
        assert_eq!(t.leaf_depths(), vec![2, 2]);
        let proof = t.inclusion_proof(&IdHash(Hash32(b))).unwrap();
        assert_eq!(proof.nodes.len(), 3);
        assert!(verify_inclusion(&t.root(), &IdHash(Hash32(b)), &proof));
    }

    #[test]
    fn tampered_proof_nodes_fail() {
        let mut t = GlobalStateTrie::new();
        for i in 0..200 {
            t.insert(key(i), i).unwrap();
        }
        let k = key(42);
        let proof = t.inclusion_proof(&k).unwrap();
        assert!(verify_inclusion(&t.root(), &k, &proof));
        for n in 0..proof.nodes.len() {
            let mut bytes = hex::decode(&proof.nodes[n]).unwrap();
            let last = bytes.len() - 1;
            bytes[last] ^= 1;
            let mut bad = proof.clone();
            bad.nodes[n] = hex::encode(bytes);
            assert!(!verify_inclusion(&t.root(), &k, &bad), "tampered node {n} accepted");
        }
        // Wrong key with a valid path.
        assert!(!verify_inclusion(&t.root(), &key(43), &proof));
        // Truncated path.
        let mut short = proof.clone();
        short.nodes.pop();
        assert!(!verify_inclusion(&t.root(), &k, &short));
    }

    #[test]
    fn stale_root_rejects_proof() {
        let mut t = GlobalStateTrie::new();
        for i in 0..20 {
            t.insert(key(i), i).unwrap();
        }
        let proof = t.inclusion_proof(&key(3)).unwrap();
        t.insert(key(100), 100).unwrap();
        let fresh = t.inclusion_proof(&key(3)).unwrap();
        assert!(!verify_inclusion(&t.root(), &key(3), &proof));
        assert!(verify_inclusion(&t.root(), &key(3), &fresh));
    }

    #[test]
    fn absent_random_keys_are_not_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut t = GlobalStateTrie::new();
        let mut flat = BTreeMap::new();
        for i in 0..300u64 {
            let mut b = [0u8; 32];
            rng.fill_bytes(&mut b);
            t.insert(IdHash(Hash32(b)), i).unwrap();
            flat.insert(IdHash(Hash32(b)), i);
        }
        for _ in 0..300 {
            let mut b = [0u8; 32];
            rng.fill_bytes(&mut b);
            let k = IdHash(Hash32(b));
            assert_eq!(t.get(&k).is_some(), flat.contains_key(&k));
            assert!(matches!(t.inclusion_proof(&k), Err(TrieError::NotFound(_))));
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let mut t = GlobalStateTrie::new();
        for i in 0..64 {
            t.insert(key(i), format!("v{i}")).unwrap();
        }
        let snap = t.snapshot();
        let json = serde_json::to_string(&snap).unwrap();
        let back: TrieSnapshot<String> = serde_json::from_str(&json).unwrap();
        let rebuilt = GlobalStateTrie::from_snapshot(back.clone()).unwrap();
        assert_eq!(rebuilt.root(), t.root());
        let mut forged = back;
        forged.leaves[0].account = "evil".into();
        assert!(matches!(GlobalStateTrie::from_snapshot(forged), Err(TrieError::SnapshotRootMismatch { .. })));
    }

    #[test]
    fn proven_value_decodes() {
        let mut t = GlobalStateTrie::new();
        t.insert(key(5), 55u64).unwrap();
        t.insert(key(6), 66u64).unwrap();
        let bytes = verify_inclusion_value(&t.root(), &key(6), &t.inclusion_proof(&key(6)).unwrap()).unwrap();
        assert_eq!(decode_proven_value::<u64>(&bytes), Some(66));
    }

    proptest! {
        #[test]
        fn matches_flat_map(keys in proptest::collection::vec(0u64..500, 1..120)) {
            let mut t = GlobalStateTrie::new();
            let mut flat = BTreeMap::new();
            for k in &keys {
                let r = t.insert(key(*k), *k);
                prop_assert_eq!(r.is_ok(), flat.insert(key(*k), *k).is_none());
            }
            prop_assert_eq!(t.len(), flat.len());
            let entries: Vec<(IdHash, u64)> = t.entries().into_iter().map(|(k, v)| (k, *v)).collect();
            let expected: Vec<(IdHash, u64)> = flat.iter().map(|(k, v)| (*k, *v)).collect();
            prop_assert_eq!(entries, expected);
            for k in flat.keys() {
                prop_assert!(verify_inclusion(&t.root(), k, &t.inclusion_proof(k).unwrap()));
            }
        }

        #[test]
        fn root_is_insertion_order_independent(mut keys in proptest::collection::btree_set(0u64..10_000, 1..60)
            .prop_map(|s| s.into_iter().collect::<Vec<_>>()), seed in any::<u64>()) {
            let mut a = GlobalStateTrie::new();
            for k in &keys {
                a.insert(key(*k), *k).unwrap();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..keys.len()).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                keys.swap(i, j);
            }
            let mut b = GlobalStateTrie::new();
            for k in &keys {
                b.insert(key(*k), *k).unwrap();
            }
            prop_assert_eq!(a.root(), b.root());
        }
    }
}
