use mtdfind_core::designs::{Design, DesignKind};

use crate::Verdict;

const COLUMNS: [u32; 6] = [3, 6, 9, 12, 15, 18];

/// (design, escalate if DLTs <=, de-escalate if DLTs >=) at the columns above.
const REFERENCE: [(DesignKind, [i64; 6], [i64; 6]); 3] = [
    (DesignKind::Mtpi, [0, 1, 1, 2, 2, 3], [2, 3, 4, 5, 7, 8]),
    (DesignKind::Keyboard, [0, 1, 2, 2, 3, 4], [2, 3, 4, 5, 6, 7]),
    (DesignKind::Boin, [0, 1, 2, 2, 3, 4], [2, 3, 4, 5, 6, 7]),
];

pub fn criterion_1() -> Verdict {
    let mut mismatches = Vec::new();
    let mut cells = 0;
    for (kind, escalate, deescalate) in REFERENCE {
        let table = Design::standard(kind, 0.3).unwrap().boundary_table(18).unwrap();
        for (i, &n) in COLUMNS.iter().enumerate() {
            let row = table.row(n).unwrap();
            cells += 2;
            if row.escalate_max != escalate[i] {
                mismatches.push(format!("{kind} E_{n}: got {} want {}", row.escalate_max, escalate[i]));
            }
            if row.deescalate_min != deescalate[i] {
                mismatches.push(format!("{kind} D_{n}: got {} want {}", row.deescalate_min, deescalate[i]));
            }
        }
    }
    let mut details = vec![format!("{} of {cells} cells match", cells - mismatches.len())];
    details.extend(mismatches.iter().cloned());
    Verdict::new(mismatches.is_empty(), details)
}
