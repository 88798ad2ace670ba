//! The 16-spin reference instance: three mutually orthogonal memories and a
//! probe at Hamming distances 10, 8 and 2 from them.

use crate::spin::{MemorySet, SpinVector};

pub const MEMORIES_TEXT: &str = "\
# three orthogonal 16-spin memories
++++++++++++++++
++++++++--------
++++--------++++
";

pub const PROBE_TEXT: &str = "-+++--------+++-";

pub fn memories() -> MemorySet {
    MemorySet::parse(MEMORIES_TEXT).expect("reference memories are valid")
}

pub fn probe() -> SpinVector {
    PROBE_TEXT.parse().expect("reference probe is valid")
}
