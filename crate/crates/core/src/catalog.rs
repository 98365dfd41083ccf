//! Named trees with known invariants, used by tests and the CLI.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::tree::{parse_newick, PhyloTree};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogTree {
    pub name: String,
    pub newick: String,
    /// Known ML-degree, when one has been published or proved.
    pub ml_degree: Option<u64>,
    /// Known degree of the toric variety.
    pub toric_degree: Option<u64>,
}

impl CatalogTree {
    pub fn tree(&self) -> PhyloTree {
        // catalog entries are fixed strings covered by tests
        parse_newick(&self.newick).expect("catalog Newick is valid")
    }
}

fn entry(name: &str, newick: &str, mld: Option<u64>, deg: Option<u64>) -> CatalogTree {
    CatalogTree {
        name: name.into(),
        newick: newick.into(),
        ml_degree: mld,
        toric_degree: deg,
    }
}

/// `2^{n+1} − 2n − 3`, the ML-degree of the star tree with `n + 1` leaves.
pub fn star_ml_degree(n: usize) -> u64 {
    (1u64 << (n + 1)) - 2 * n as u64 - 3
}

pub fn star_newick(n: usize) -> String {
    let mut s = String::from("(");
    for i in 1..=n {
        s.push_str(&format!("{i},"));
    }
    s.push_str("0);");
    s
}

pub fn star(n: usize) -> CatalogTree {
    entry(
        &format!("star{n}"),
        &star_newick(n),
        Some(star_ml_degree(n)),
        None,
    )
}

/// The five-leaf tree with one non-root internal node of degree four.
pub fn fig1() -> CatalogTree {
    entry("fig1", "((1,2,3),4,0);", Some(11), None)
}

/// Binary caterpillar `(((1,2),3),…,n,0)`.
pub fn caterpillar(n: usize) -> CatalogTree {
    assert!(n >= 3, "caterpillar needs at least three non-root leaves");
    let mut s = String::from("(1,2)");
    for i in 3..n {
        s = format!("({s},{i})");
    }
    s = format!("({s},{n},0);");
    entry(&format!("caterpillar{n}"), &s, None, None)
}

/// The twelve seven-leaf topologies with at least two internal nodes,
/// with their toric degree and ML-degree.
pub fn seven_leaf_table() -> Vec<CatalogTree> {
    const ROWS: [(&str, u64, u64); 12] = [
        ("((1,2,3),4,5,6,0);", 93, 259),
        ("((1,2),3,4,5,6,0);", 95, 53),
        ("((1,2,3),(4,5,6),0);", 90, 221),
        ("((((1,2),3,4),5),6,0);", 51, 83),
        ("(((1,2,3),4,5),6,0);", 77, 181),
        ("(((1,2),3,4,5),6,0);", 47, 81),
        ("((((1,2,3),4),5),6,0);", 61, 115),
        ("((1,2),(3,4),(5,6),0);", 42, 63),
        ("(((1,2,3,4),5),6,0);", 60, 101),
        ("(((1,2),3),(4,(5,6)),0);", 42, 61),
        ("(((1,2),(3,4)),5,6,0);", 61, 99),
        ("(((1,2),(3,4)),(5,6),0);", 53, 61),
    ];
    ROWS.iter()
        .enumerate()
        .map(|(i, &(nw, deg, mld))| entry(&format!("seven{}", i + 1), nw, Some(mld), Some(deg)))
        .collect()
}

/// Stars with 3..=7 leaves, `fig1`, two caterpillars and the
/// seven-leaf table.
pub fn standard_catalog() -> Vec<CatalogTree> {
    let mut out: Vec<CatalogTree> = (2..=6).map(star).collect();
    out.push(fig1());
    out.push(caterpillar(4));
    out.push(caterpillar(5));
    out.extend(seven_leaf_table());
    out
}

pub fn find(name: &str) -> Option<CatalogTree> {
    standard_catalog().into_iter().find(|c| c.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_entries_parse() {
        let cat = standard_catalog();
        assert_eq!(cat.len(), 20);
        for c in &cat {
            let t = c.tree();
            assert!(t.n() >= 2, "{}", c.name);
        }
        for c in seven_leaf_table() {
            let t = c.tree();
            assert_eq!(t.num_leaves(), 7);
            assert!(t.num_internal() >= 2);
        }
    }

    #[test]
    fn seven_leaf_topologies_distinct() {
        let mut seen: Vec<String> = seven_leaf_table()
            .iter()
            .map(|c| c.tree().canonical().to_newick())
            .collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn star_formula_values() {
        let v: Vec<u64> = (2..=6).map(star_ml_degree).collect();
        assert_eq!(v, [1, 7, 21, 51, 113]);
        assert!(star(4).tree().is_star());
        assert_eq!(caterpillar(4).newick, "(((1,2),3),4,0);");
        assert_eq!(caterpillar(4).tree().num_internal(), 3);
    }
}
