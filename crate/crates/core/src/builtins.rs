//! Built-in example structures.
//!
//! Terms written with a descending wedge such as `2 e^{42}` appear here as
//! `-2 e[2,4]`, since the grammar requires `i < j`.

/// A named built-in structure file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Builtin {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

/// Flat quaternionic Heisenberg group, dimension 7.
pub const HEISENBERG_N1: &str = "\
name = heisenberg-n1
n = 1
de[5] = 2 e[1,2] + 2 e[3,4]
de[6] = 2 e[1,3] - 2 e[2,4]
de[7] = 2 e[1,4] + 2 e[2,3]
";

/// Flat quaternionic Heisenberg group, dimension 11 (two quaternionic blocks).
pub const HEISENBERG_N2: &str = "\
name = heisenberg-n2
n = 2
de[9] = 2 e[1,2] + 2 e[3,4] + 2 e[5,6] + 2 e[7,8]
de[10] = 2 e[1,3] - 2 e[2,4] + 2 e[5,7] - 2 e[6,8]
de[11] = 2 e[1,4] + 2 e[2,3] + 2 e[5,8] + 2 e[6,7]
";

/// Torsion-free, negative scalar curvature, conformally flat.
pub const G1: &str = "\
name = g1
n = 1
de[1] = 0
de[2] = -e[1,2] - 2 e[3,4] - 1/2 e[3,7] + 1/2 e[4,6]
de[3] = -e[1,3] + 2 e[2,4] + 1/2 e[2,7] - 1/2 e[4,5]
de[4] = -e[1,4] - 2 e[2,3] - 1/2 e[2,6] + 1/2 e[3,5]
de[5] = 2 e[1,2] + 2 e[3,4] - 1/2 e[6,7]
de[6] = 2 e[1,3] - 2 e[2,4] + 1/2 e[5,7]
de[7] = 2 e[1,4] + 2 e[2,3] - 1/2 e[5,6]
";

/// Nonzero torsion endomorphism.
pub const G3: &str = "\
name = g3
n = 1
de[1] = -3/2 e[1,3] + 3/2 e[2,4] - 3/4 e[2,5] + 1/4 e[3,6] - 1/4 e[4,7] + 1/8 e[5,7]
de[2] = -3/2 e[1,4] - 3/2 e[2,3] + 3/4 e[1,5] + 1/4 e[3,7] + 1/4 e[4,6] - 1/8 e[5,6]
de[3] = 0
de[4] = e[1,2] + e[3,4] + 1/2 e[1,7] - 1/2 e[2,6] + 1/4 e[6,7]
de[5] = 2 e[1,2] + 2 e[3,4] + e[1,7] - e[2,6] + 1/2 e[6,7]
de[6] = 2 e[1,3] - 2 e[2,4] + e[2,5]
de[7] = 2 e[1,4] + 2 e[2,3] - e[1,5]
";

pub const ALL: [Builtin; 4] = [
    Builtin { name: "heisenberg-n1", summary: "flat quaternionic Heisenberg group, n = 1", text: HEISENBERG_N1 },
    Builtin { name: "heisenberg-n2", summary: "flat quaternionic Heisenberg group, n = 2", text: HEISENBERG_N2 },
    Builtin { name: "g1", summary: "torsion-free, Scal < 0, W^qc = 0", text: G1 },
    Builtin { name: "g3", summary: "nonzero torsion endomorphism", text: G3 },
];

pub fn find(name: &str) -> Option<&'static Builtin> {
    ALL.iter().find(|b| b.name == name)
}
