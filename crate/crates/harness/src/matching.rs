//! Pairing of Panel-1 and Panel-2 paths that share a scatterer.

use crate::dataset::{MpcDataset, MpcRow};

#[derive(Debug, Clone, PartialEq)]
pub struct PathPair {
    pub path1: MpcRow,
    pub path2: MpcRow,
    /// Distance between the interaction points; zero for LoS.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeMatch {
    pub ue_id: u64,
    /// Pairs in Panel-1 `path_id` order.
    pub pairs: Vec<PathPair>,
    pub unpaired1: Vec<MpcRow>,
    pub unpaired2: Vec<MpcRow>,
}

/// One-to-one greedy assignment: candidate pairs `(i, j, d)` are taken in
/// increasing `(d, key1[i], key2[j])` order while both sides are free.
pub fn greedy_assign(
    candidates: Vec<(usize, usize, f64)>,
    keys1: &[u64],
    keys2: &[u64],
) -> Vec<(usize, usize, f64)> {
    let mut candidates = candidates;
    candidates.sort_by(|a, b| {
        a.2.total_cmp(&b.2)
            .then(keys1[a.0].cmp(&keys1[b.0]))
            .then(keys2[a.1].cmp(&keys2[b.1]))
    });
    let mut used1 = vec![false; keys1.len()];
    let mut used2 = vec![false; keys2.len()];
    let mut out = Vec::new();
    for (i, j, d) in candidates {
        if !used1[i] && !used2[j] {
            used1[i] = true;
            used2[j] = true;
            out.push((i, j, d));
        }
    }
    out
}

/// Pair each UE's paths whose interaction points lie within `epsilon`
/// meters (inclusive). LoS rows pair only with LoS rows.
pub fn match_shared_scatterers(ds: &MpcDataset, epsilon: f64) -> Vec<UeMatch> {
    ds.by_ue()
        .into_iter()
        .map(|(ue_id, rows)| {
            let (p1, p2) = (rows.panel1, rows.panel2);
            let mut candidates = Vec::new();
            for (i, a) in p1.iter().enumerate() {
                for (j, b) in p2.iter().enumerate() {
                    let d = match (a.point, b.point) {
                        (None, None) => 0.0,
                        (Some(x), Some(y)) => x.distance(y),
                        _ => continue,
                    };
                    if d <= epsilon {
                        candidates.push((i, j, d));
                    }
                }
            }
            let k1: Vec<u64> = p1.iter().map(|r| r.path_id).collect();
            let k2: Vec<u64> = p2.iter().map(|r| r.path_id).collect();
            let mut assigned = greedy_assign(candidates, &k1, &k2);
            assigned.sort_by_key(|&(i, _, _)| k1[i]);

            let mut taken1 = vec![false; p1.len()];
            let mut taken2 = vec![false; p2.len()];
            let pairs = assigned
                .iter()
                .map(|&(i, j, d)| {
                    taken1[i] = true;
                    taken2[j] = true;
                    PathPair {
                        path1: p1[i].clone(),
                        path2: p2[j].clone(),
                        distance: d,
                    }
                })
                .collect();
            let rest = |rows: &[MpcRow], taken: &[bool]| -> Vec<MpcRow> {
                rows.iter()
                    .zip(taken)
                    .filter(|(_, &t)| !t)
                    .map(|(r, _)| r.clone())
                    .collect()
            };
            UeMatch {
                ue_id,
                pairs,
                unpaired1: rest(&p1, &taken1),
                unpaired2: rest(&p2, &taken2),
            }
        })
        .collect()
}

/// Share of rows (both panels) that ended up in a pair.
pub fn pairing_fraction(matches: &[UeMatch]) -> Option<f64> {
    let paired: usize = matches.iter().map(|m| 2 * m.pairs.len()).sum();
    let total: usize = paired
        + matches
            .iter()
            .map(|m| m.unpaired1.len() + m.unpaired2.len())
            .sum::<usize>();
    (total > 0).then(|| paired as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use panelinfer::Point3;

    fn row(ue: u64, panel: u8, id: u64, point: Option<Point3>) -> MpcRow {
        MpcRow {
            ue_id: ue,
            panel_id: panel,
            path_id: id,
            gain: Complex64::new(1.0, 0.0),
            elev: -0.2,
            azim: 0.0,
            point,
            ue_position: None,
        }
    }

    fn p(x: f64, y: f64, z: f64) -> Option<Point3> {
        Some(Point3::new(x, y, z))
    }

    #[test]
    fn identical_points_all_pair() {
        let pts = [p(10.0, 0.0, 1.0), p(20.0, 5.0, 2.0), None];
        let mut rows = Vec::new();
        for (i, q) in pts.iter().enumerate() {
            rows.push(row(0, 1, i as u64, *q));
            rows.push(row(0, 2, i as u64, *q));
        }
        let m = match_shared_scatterers(&MpcDataset { rows }, 0.1);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].pairs.len(), 3);
        assert!(m[0].unpaired1.is_empty() && m[0].unpaired2.is_empty());
        for pair in &m[0].pairs {
            assert_eq!(pair.path1.path_id, pair.path2.path_id);
            assert_eq!(pair.distance, 0.0);
        }
    }

    #[test]
    fn vertical_offset_threshold() {
        let rows = vec![row(0, 1, 0, p(10.0, 0.0, 1.0)), row(0, 2, 0, p(10.0, 0.0, 1.12))];
        let ds = MpcDataset { rows };
        assert_eq!(match_shared_scatterers(&ds, 0.15)[0].pairs.len(), 1);
        let m = match_shared_scatterers(&ds, 0.10);
        assert!(m[0].pairs.is_empty());
        assert_eq!(m[0].unpaired1.len(), 1);
        assert_eq!(m[0].unpaired2.len(), 1);
    }

    #[test]
    fn nearest_first_and_one_to_one() {
        // Both Panel-2 points are within reach of Panel-1 path 0; the nearer
        // one goes to it and the other is left for path 1.
        let rows = vec![
            row(0, 1, 0, p(0.0, 0.0, 0.0)),
            row(0, 1, 1, p(0.0, 0.0, 0.3)),
            row(0, 2, 0, p(0.0, 0.0, 0.2)),
            row(0, 2, 1, p(0.0, 0.0, 0.05)),
        ];
        let m = &match_shared_scatterers(&MpcDataset { rows }, 0.25)[0];
        assert_eq!(m.pairs.len(), 2);
        assert_eq!((m.pairs[0].path1.path_id, m.pairs[0].path2.path_id), (0, 1));
        assert_eq!((m.pairs[1].path1.path_id, m.pairs[1].path2.path_id), (1, 0));
    }

    #[test]
    fn ties_go_to_lower_path_id() {
        let rows = vec![
            row(0, 1, 5, p(0.0, 0.0, 0.1)),
            row(0, 1, 2, p(0.0, 0.0, -0.1)),
            row(0, 2, 9, p(0.0, 0.0, 0.0)),
        ];
        let m = &match_shared_scatterers(&MpcDataset { rows }, 0.2)[0];
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].path1.path_id, 2);
        assert_eq!(m.unpaired1[0].path_id, 5);
    }

    #[test]
    fn los_never_pairs_with_scattered() {
        let rows = vec![row(0, 1, 0, None), row(0, 2, 0, p(0.0, 0.0, 0.0))];
        let m = &match_shared_scatterers(&MpcDataset { rows }, 100.0)[0];
        assert!(m.pairs.is_empty());
        assert_eq!(pairing_fraction(&[m.clone()]), Some(0.0));
    }

    #[test]
    fn ues_are_kept_apart() {
        let rows = vec![row(0, 1, 0, p(0.0, 0.0, 0.0)), row(1, 2, 0, p(0.0, 0.0, 0.0))];
        let m = match_shared_scatterers(&MpcDataset { rows }, 1.0);
        assert_eq!(m.len(), 2);
        assert!(m.iter().all(|u| u.pairs.is_empty()));
    }
}
