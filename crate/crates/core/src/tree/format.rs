//! Versioned binary tree format. All integers and floats are little-endian.
//!
//! ```text
//! header (39 bytes)
//!   magic    [u8; 4]  "PTRF"
//!   version  u16      1
//!   kind     u8       0 = rp, 1 = spill, 2 = virtual-spill
//!   n        u64      points in the indexed dataset
//!   d        u32      dimension
//!   n_o      u32      leaf capacity
//!   alpha    f64      0 for rp trees
//!   seed     u64
//! nodes, preorder (node, then left subtree, then right subtree)
//!   tag      u8       0 = leaf, 1 = perturbed split, 2 = spill split
//!   leaf:      count u64, then count × u64 row indices
//!   perturbed: d × f64 direction, f64 threshold
//!   spill:     d × f64 direction, f64 low, f64 median, f64 high
//! ```
//!
//! Floats are written bit-for-bit (`f64::to_le_bytes`), including the
//! infinite thresholds a spill node may carry, so a round trip reproduces
//! the tree exactly.

use std::io::{self, Read, Write};
use std::path::Path;

use super::{InternalNode, PartitionTree, SplitRule, Thresholds, TreeKind, TreeNode};
use crate::error::{Error, Result};
use crate::linalg::UnitDirection;

pub const TREE_MAGIC: [u8; 4] = *b"PTRF";
pub const FORMAT_VERSION: u16 = 1;

const TAG_LEAF: u8 = 0;
const TAG_PERTURBED: u8 = 1;
const TAG_SPILL: u8 = 2;

/// Deeper trees than this are rejected on read.
const MAX_DEPTH: usize = 4096;

pub fn write_tree<W: Write>(tree: &PartitionTree, w: &mut W) -> io::Result<()> {
    w.write_all(&TREE_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&[tree.kind.code()])?;
    w.write_all(&(tree.n as u64).to_le_bytes())?;
    w.write_all(&(tree.dim as u32).to_le_bytes())?;
    w.write_all(&(tree.leaf_capacity as u32).to_le_bytes())?;
    w.write_all(&tree.alpha.to_le_bytes())?;
    w.write_all(&tree.seed.to_le_bytes())?;

    let mut stack = vec![&tree.root];
    while let Some(node) = stack.pop() {
        match node {
            TreeNode::Leaf(ix) => {
                w.write_all(&[TAG_LEAF])?;
                w.write_all(&(ix.len() as u64).to_le_bytes())?;
                for &i in ix {
                    w.write_all(&(i as u64).to_le_bytes())?;
                }
            }
            TreeNode::Internal(inner) => {
                let tag = match inner.rule.thresholds {
                    Thresholds::Perturbed(_) => TAG_PERTURBED,
                    Thresholds::Spill { .. } => TAG_SPILL,
                };
                w.write_all(&[tag])?;
                for c in inner.rule.direction.as_slice() {
                    w.write_all(&c.to_le_bytes())?;
                }
                match inner.rule.thresholds {
                    Thresholds::Perturbed(v) => w.write_all(&v.to_le_bytes())?,
                    Thresholds::Spill { low, median, high } => {
                        for v in [low, median, high] {
                            w.write_all(&v.to_le_bytes())?;
                        }
                    }
                }
                stack.push(&inner.right);
                stack.push(&inner.left);
            }
        }
    }
    Ok(())
}

/// Reads a tree; `label` names the source in error messages.
pub fn read_tree<R: Read>(r: R, label: &Path) -> Result<PartitionTree> {
    let mut rd = Reader {
        inner: r,
        offset: 0,
        label,
    };
    let magic: [u8; 4] = rd.array()?;
    if magic != TREE_MAGIC {
        return Err(rd.error(format!("bad magic {magic:?}, expected \"PTRF\"")));
    }
    let version = u16::from_le_bytes(rd.array()?);
    if version != FORMAT_VERSION {
        return Err(rd.error(format!("unsupported tree format version {version}")));
    }
    let [code] = rd.array()?;
    let kind = TreeKind::from_code(code).ok_or_else(|| rd.error(format!("unknown tree kind {code}")))?;
    let n = rd.u64()? as usize;
    let dim = u32::from_le_bytes(rd.array()?) as usize;
    let leaf_capacity = u32::from_le_bytes(rd.array()?) as usize;
    let alpha = rd.f64()?;
    let seed = rd.u64()?;
    if dim == 0 || leaf_capacity == 0 {
        return Err(rd.error("dimension and leaf capacity must be nonzero".into()));
    }
    if kind != TreeKind::Rp && !(alpha > 0.0 && alpha < 0.5) {
        return Err(rd.error(format!("alpha {alpha} outside (0, 1/2)")));
    }

    let root = rd.node(kind, n, dim, 0)?;
    let mut trailing = [0u8; 1];
    match rd.inner.read(&mut trailing) {
        Ok(0) => {}
        Ok(_) => return Err(rd.error("trailing bytes after the last node".into())),
        Err(e) => return Err(Error::io(label, e)),
    }
    Ok(PartitionTree::from_parts(
        kind,
        alpha,
        leaf_capacity,
        seed,
        n,
        dim,
        root,
    ))
}

struct Reader<'a, R> {
    inner: R,
    offset: u64,
    label: &'a Path,
}

impl<R: Read> Reader<'_, R> {
    fn error(&self, message: String) -> Error {
        Error::parse(self.label, format!("{message} (byte offset {})", self.offset))
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        match self.inner.read_exact(&mut buf) {
            Ok(()) => {
                self.offset += N as u64;
                Ok(buf)
            }
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Err(self.error(format!(
                "unexpected end of data while reading {N} byte(s)"
            ))),
            Err(e) => Err(Error::io(self.label, e)),
        }
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn node(&mut self, kind: TreeKind, n: usize, dim: usize, depth: usize) -> Result<TreeNode> {
        if depth > MAX_DEPTH {
            return Err(self.error(format!("tree deeper than {MAX_DEPTH} levels")));
        }
        let [tag] = self.array()?;
        match tag {
            TAG_LEAF => {
                let count = self.u64()?;
                if count > n as u64 {
                    return Err(self.error(format!("leaf of {count} indices exceeds n = {n}")));
                }
                let mut ix = Vec::with_capacity(count as usize);
                for _ in 0..count {
                    let i = self.u64()?;
                    if i >= n as u64 {
                        return Err(self.error(format!("row index {i} out of range for n = {n}")));
                    }
                    ix.push(i as usize);
                }
                Ok(TreeNode::Leaf(ix))
            }
            TAG_PERTURBED | TAG_SPILL => {
                let expected = if kind == TreeKind::Rp { TAG_PERTURBED } else { TAG_SPILL };
                if tag != expected {
                    return Err(self.error(format!("split tag {tag} does not match a {kind} tree")));
                }
                let mut coords = Vec::with_capacity(dim);
                for _ in 0..dim {
                    coords.push(self.f64()?);
                }
                let direction = UnitDirection::new(coords).map_err(|e| self.error(e.to_string()))?;
                let thresholds = if tag == TAG_PERTURBED {
                    Thresholds::Perturbed(self.f64()?)
                } else {
                    let (low, median, high) = (self.f64()?, self.f64()?, self.f64()?);
                    if !(low <= median && median <= high) {
                        return Err(self.error("spill thresholds out of order".into()));
                    }
                    Thresholds::Spill { low, median, high }
                };
                let left = self.node(kind, n, dim, depth + 1)?;
                let right = self.node(kind, n, dim, depth + 1)?;
                Ok(TreeNode::Internal(Box::new(InternalNode {
                    rule: SplitRule {
                        direction,
                        thresholds,
                    },
                    left,
                    right,
                })))
            }
            other => Err(self.error(format!("unknown node tag {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{sample_doubling, DoublingParams};
    use crate::linalg::RngSeed;

    fn tree(kind: TreeKind) -> PartitionTree {
        let data = sample_doubling(&DoublingParams {
            intrinsic_dim: 3,
            ambient_dim: 4,
            n: 400,
            seed: RngSeed::new(1),
        })
        .unwrap();
        PartitionTree::build(kind, &data, 9, 0.2, 17).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        for kind in [TreeKind::Rp, TreeKind::Spill, TreeKind::VirtualSpill] {
            let t = tree(kind);
            let mut buf = Vec::new();
            write_tree(&t, &mut buf).unwrap();
            let back = read_tree(buf.as_slice(), Path::new("mem")).unwrap();
            assert_eq!(back, t);
            let mut again = Vec::new();
            write_tree(&back, &mut again).unwrap();
            assert_eq!(again, buf);
        }
    }

    #[test]
    fn header_layout() {
        let t = tree(TreeKind::Spill);
        let mut buf = Vec::new();
        write_tree(&t, &mut buf).unwrap();
        assert_eq!(&buf[0..4], b"PTRF");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
        assert_eq!(buf[6], 1);
        assert_eq!(u64::from_le_bytes(buf[7..15].try_into().unwrap()), 400);
        assert_eq!(u32::from_le_bytes(buf[15..19].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(buf[19..23].try_into().unwrap()), 9);
        assert_eq!(f64::from_le_bytes(buf[23..31].try_into().unwrap()), 0.2);
        assert_eq!(u64::from_le_bytes(buf[31..39].try_into().unwrap()), 17);
        assert_eq!(buf[39], TAG_SPILL);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let t = tree(TreeKind::Rp);
        let mut buf = Vec::new();
        write_tree(&t, &mut buf).unwrap();

        let err = read_tree(&buf[..buf.len() - 3], Path::new("t")).unwrap_err();
        assert!(err.to_string().contains("unexpected end"), "{err}");

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_tree(bad.as_slice(), Path::new("t")).is_err());

        let mut bad = buf.clone();
        bad[6] = 9;
        assert!(read_tree(bad.as_slice(), Path::new("t")).is_err());

        let mut bad = buf.clone();
        bad.push(0);
        assert!(read_tree(bad.as_slice(), Path::new("t")).is_err());
    }
}
