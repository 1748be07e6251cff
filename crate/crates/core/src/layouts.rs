//! Registry of the six shipped maps.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gridworld::{parse_map, GridLayout};

pub const LAYOUT_NAMES: [&str; 6] = [
    "BasicVatGoalEnv",
    "BasicHumanVatGoalEnv",
    "SideHumanVatGoalEnv",
    "CShapeVatGoalEnv",
    "CShapeHumanVatGoalEnv",
    "SmashAndDetourEnv",
];

const MAP_TEXTS: [&str; 6] = [
    include_str!("../maps/BasicVatGoalEnv.txt"),
    include_str!("../maps/BasicHumanVatGoalEnv.txt"),
    include_str!("../maps/SideHumanVatGoalEnv.txt"),
    include_str!("../maps/CShapeVatGoalEnv.txt"),
    include_str!("../maps/CShapeHumanVatGoalEnv.txt"),
    include_str!("../maps/SmashAndDetourEnv.txt"),
];

pub fn map_text(name: &str) -> Result<&'static str> {
    LAYOUT_NAMES
        .iter()
        .position(|&n| n == name)
        .map(|i| MAP_TEXTS[i])
        .ok_or_else(|| Error::UnknownLayout(name.to_string()))
}

pub fn layout(name: &str) -> Result<Arc<GridLayout>> {
    parse_map(name, map_text(name)?).map(Arc::new)
}

pub fn all() -> Vec<Arc<GridLayout>> {
    LAYOUT_NAMES
        .iter()
        .map(|n| layout(n).expect("shipped maps parse"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{reset, CellKind};

    #[test]
    fn all_maps_parse() {
        for l in all() {
            assert_eq!(l.cells.iter().filter(|&&c| c == CellKind::Goal).count(), 1);
            assert!(l.humans_start.iter().all(|&h| l.cell(h) == CellKind::Vat));
            assert_eq!(l.cell(l.agent_start), CellKind::Empty);
        }
        assert!(layout("NoSuchEnv").is_err());
    }

    #[test]
    fn human_counts() {
        let humans: Vec<usize> = all().iter().map(|l| l.humans_start.len()).collect();
        assert_eq!(humans, vec![0, 1, 1, 0, 1, 1]);
        let s = reset(&layout("BasicHumanVatGoalEnv").unwrap());
        assert!(s.humans[0].trapped);
    }
}
