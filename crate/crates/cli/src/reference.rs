//! Built-in reference data: the national raw-score classifications and the
//! standard eight-item scale codes.
//!
//! These ship as defaults so the single-group command can resolve thresholds
//! from the scale id alone; explicit `--thresholds` always overrides them.

/// Raw-score ranges (inclusive) classifying food-insecurity levels for one
/// national scale and household type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdRow {
    pub scale: &'static str,
    pub with_children: bool,
    pub mild: (u32, u32),
    pub moderate: (u32, u32),
    pub severe: (u32, u32),
}

/// National classifications: ELCSA and EBIA run 8 items without children and
/// 15 with; EMSA runs 6 and 12.
pub const NATIONAL_THRESHOLDS: [ThresholdRow; 6] = [
    ThresholdRow {
        scale: "ELCSA",
        with_children: false,
        mild: (1, 3),
        moderate: (4, 6),
        severe: (7, 8),
    },
    ThresholdRow {
        scale: "ELCSA",
        with_children: true,
        mild: (1, 5),
        moderate: (6, 10),
        severe: (11, 15),
    },
    ThresholdRow {
        scale: "EMSA",
        with_children: false,
        mild: (1, 2),
        moderate: (3, 4),
        severe: (5, 6),
    },
    ThresholdRow {
        scale: "EMSA",
        with_children: true,
        mild: (1, 3),
        moderate: (4, 7),
        severe: (8, 12),
    },
    ThresholdRow {
        scale: "EBIA",
        with_children: false,
        mild: (1, 3),
        moderate: (4, 6),
        severe: (7, 8),
    },
    ThresholdRow {
        scale: "EBIA",
        with_children: true,
        mild: (1, 5),
        moderate: (6, 10),
        severe: (11, 15),
    },
];

/// Standard codes of the eight-item reference scale, mildest to most severe.
pub const REFERENCE_SCALE_CODES: [&str; 8] = [
    "WORRIED", "HEALTY", "FEWFOOD", "SKIPMEAL", "ATELESS", "RUNOUT", "HUNGRY", "WHLDAY",
];

/// Finds the classification row whose scale family prefixes the given scale
/// id (case-insensitive), e.g. "emsa-2018" matches EMSA.
pub fn lookup(scale_id: &str, with_children: bool) -> Option<&'static ThresholdRow> {
    let id = scale_id.to_uppercase();
    NATIONAL_THRESHOLDS
        .iter()
        .find(|row| row.with_children == with_children && id.starts_with(row.scale))
}

/// Lower raw-score thresholds (moderate, severe) of the without-children
/// module for the named scale family — the adult-form thresholds whose
/// children-scale equivalents the single-group study reports.
pub fn adult_lower_thresholds(scale_id: &str) -> Option<(u32, u32)> {
    lookup(scale_id, false).map(|row| (row.moderate.0, row.severe.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_ranges_are_contiguous_per_row() {
        for row in &NATIONAL_THRESHOLDS {
            assert_eq!(row.mild.0, 1);
            assert_eq!(row.moderate.0, row.mild.1 + 1);
            assert_eq!(row.severe.0, row.moderate.1 + 1);
        }
    }

    #[test]
    fn known_rows_match_the_published_classification() {
        let elcsa = lookup("ELCSA", false).unwrap();
        assert_eq!(elcsa.severe, (7, 8));
        assert_eq!(elcsa.moderate, (4, 6));
        let elcsa_c = lookup("ELCSA", true).unwrap();
        assert_eq!(elcsa_c.severe, (11, 15));
        let emsa = lookup("EMSA", false).unwrap();
        assert_eq!(emsa.severe.0, 5);
        assert_eq!(emsa.moderate, (3, 4));
        let emsa_c = lookup("EMSA", true).unwrap();
        assert_eq!(emsa_c.moderate, (4, 7));
        let ebia = lookup("EBIA", false).unwrap();
        assert_eq!(ebia.severe, (7, 8));
    }

    #[test]
    fn lookup_is_prefix_and_case_insensitive() {
        assert!(lookup("elcsa-guatemala", false).is_some());
        assert!(lookup("EMSA_2018", true).is_some());
        assert!(lookup("HFSSM", false).is_none());
    }

    #[test]
    fn adult_thresholds_are_the_lower_bounds() {
        assert_eq!(adult_lower_thresholds("ELCSA"), Some((4, 7)));
        assert_eq!(adult_lower_thresholds("EMSA"), Some((3, 5)));
        assert_eq!(adult_lower_thresholds("EBIA"), Some((4, 7)));
        assert_eq!(adult_lower_thresholds("FIES"), None);
    }
}
