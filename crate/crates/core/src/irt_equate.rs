//! IRT true-score equating: anchor selection, Mean/Sigma linking, and
//! score-to-score equating through the test characteristic curves.

use crate::classical_equate::{EquatingTable, Method};
use crate::error::{Error, Result};
use crate::rasch::{invert_tcc, tcc, ItemParams};

/// Linear transformation θ* = A·θ + B carrying scale P onto scale Q.
#[derive(Debug, Clone)]
pub struct LinkingTransform {
    pub a: f64,
    pub b: f64,
    pub anchor_codes: Vec<String>,
    /// |A·bP_j + B − bQ_j| per anchor item, aligned with `anchor_codes`.
    pub displacements: Vec<f64>,
}

impl LinkingTransform {
    /// The identity link (same metric on both sides).
    pub fn identity() -> Self {
        LinkingTransform {
            a: 1.0,
            b: 0.0,
            anchor_codes: Vec::new(),
            displacements: Vec::new(),
        }
    }

    #[inline]
    pub fn apply(&self, theta: f64) -> f64 {
        self.a * theta + self.b
    }

    /// The reverse transformation Q → P: slope 1/A, intercept −B/A.
    pub fn inverse(&self) -> Self {
        LinkingTransform {
            a: 1.0 / self.a,
            b: -self.b / self.a,
            anchor_codes: self.anchor_codes.clone(),
            displacements: self.displacements.clone(),
        }
    }
}

/// Outcome of the iterative anchor purification.
#[derive(Debug, Clone)]
pub struct AnchorSelection {
    pub final_codes: Vec<String>,
    /// Items removed, in order, with the displacement that triggered removal.
    pub removals: Vec<(String, f64)>,
    pub tolerance: f64,
    pub link: LinkingTransform,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation (divide by n).
fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Mean/Sigma linking: A = sd(bQ)/sd(bP), B = mean(bQ) − A·mean(bP).
///
/// `bp` and `bq` are the severities of the same anchor items on the two
/// scales, aligned index by index. Errors when fewer than two anchors are
/// given or the source severities have zero spread.
pub fn mean_sigma_link(bp: &ItemParams, bq: &ItemParams) -> Result<LinkingTransform> {
    if bp.len() != bq.len() || bp.codes != bq.codes {
        return Err(Error::DegenerateAnchor(
            "anchor sets differ between the two scales".into(),
        ));
    }
    if bp.len() < 2 {
        return Err(Error::DegenerateAnchor(format!(
            "{} anchor item(s); at least 2 are required",
            bp.len()
        )));
    }
    let sd_p = sd(&bp.b);
    if sd_p <= 0.0 {
        return Err(Error::DegenerateAnchor(
            "anchor severities on the source scale have zero spread".into(),
        ));
    }
    let a = sd(&bq.b) / sd_p;
    let b = mean(&bq.b) - a * mean(&bp.b);
    let displacements =
        bp.b.iter()
            .zip(&bq.b)
            .map(|(&p, &q)| (a * p + b - q).abs())
            .collect();
    Ok(LinkingTransform {
        a,
        b,
        anchor_codes: bp.codes.clone(),
        displacements,
    })
}

/// Iterative anchor selection between two fitted forms.
///
/// Starts from the shared items minus those declared unique a priori, links
/// by Mean/Sigma, and removes the worst-displaced item while any displacement
/// exceeds `tol`. Ties go to the item with the larger source-scale severity
/// magnitude, then to the lexicographically first code. Errors with the full
/// removal trace if fewer than two candidates remain.
pub fn select_anchor(
    bx: &ItemParams,
    by: &ItemParams,
    shared: &[String],
    unique_a_priori: &[String],
    tol: f64,
) -> Result<AnchorSelection> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::Config(format!(
            "anchor tolerance must be positive, got {tol}"
        )));
    }
    let mut current: Vec<String> = shared
        .iter()
        .filter(|c| !unique_a_priori.contains(c))
        .cloned()
        .collect();
    let mut removals: Vec<(String, f64)> = Vec::new();

    loop {
        if current.len() < 2 {
            return Err(Error::AnchorExhausted {
                removals: removals.clone(),
            });
        }
        let bp = bx.subset(&current)?;
        let bq = by.subset(&current)?;
        let link = mean_sigma_link(&bp, &bq)?;

        let mut worst: Option<usize> = None;
        for (idx, &d) in link.displacements.iter().enumerate() {
            if d <= tol {
                continue;
            }
            worst = Some(match worst {
                None => idx,
                Some(w) => {
                    if prefer_removal(
                        d,
                        link.displacements[w],
                        bp.b[idx],
                        bp.b[w],
                        &current[idx],
                        &current[w],
                    ) {
                        idx
                    } else {
                        w
                    }
                }
            });
        }
        match worst {
            None => {
                return Ok(AnchorSelection {
                    final_codes: current,
                    removals,
                    tolerance: tol,
                    link,
                });
            }
            Some(idx) => {
                removals.push((current[idx].clone(), link.displacements[idx]));
                current.remove(idx);
            }
        }
    }
}

/// Whether the new candidate should be removed ahead of the current one:
/// larger displacement first; on an exact tie, larger severity magnitude on
/// the source scale; still tied, the lexicographically first code.
fn prefer_removal(
    d_new: f64,
    d_cur: f64,
    b_new: f64,
    b_cur: f64,
    code_new: &str,
    code_cur: &str,
) -> bool {
    if d_new != d_cur {
        return d_new > d_cur;
    }
    let (m_new, m_cur) = (b_new.abs(), b_cur.abs());
    if m_new != m_cur {
        return m_new > m_cur;
    }
    code_new < code_cur
}

/// IRT true-score equating from form X onto form Y through a link.
///
/// Interior scores invert the X characteristic curve, transform the ability,
/// and evaluate the Y curve; the extreme scores are mapped by convention to
/// the target extremes, since true scores 0 and J lie outside the curve's
/// open range.
pub fn irt_true_score_equate(
    bx: &ItemParams,
    by: &ItemParams,
    link: &LinkingTransform,
) -> Result<EquatingTable> {
    let jx = bx.len() as u32;
    let jy = by.len() as f64;
    let mut equated = Vec::with_capacity(jx as usize + 1);
    for x in 0..=jx {
        let e = if x == 0 {
            0.0
        } else if x == jx {
            jy
        } else {
            let theta = invert_tcc(x as f64, &bx.b)?;
            tcc(link.apply(theta), &by.b)
        };
        equated.push(e);
    }
    Ok(EquatingTable {
        method: Method::IrtTrueScore,
        source: String::new(),
        target: String::new(),
        equated,
        see: None,
    })
}

/// Maps a true-score threshold on the target form back to the source form:
/// the source score whose equated value is exactly `t`.
///
/// Used to express a threshold defined on form Y (e.g. a raw score on a
/// reference scale) as the equivalent real-valued raw score on form X:
/// x_t = tcc_X((θ_Y(t) − B)/A) where tcc_Y(θ_Y(t)) = t.
pub fn threshold_equivalent(
    bx: &ItemParams,
    by: &ItemParams,
    link: &LinkingTransform,
    t: f64,
) -> Result<f64> {
    let theta_y = invert_tcc(t, &by.b)?;
    let theta_x = (theta_y - link.b) / link.a;
    Ok(tcc(theta_x, &bx.b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(codes: &[&str], b: &[f64]) -> ItemParams {
        ItemParams {
            codes: codes.iter().map(|c| c.to_string()).collect(),
            b: b.to_vec(),
            se: vec![0.1; b.len()],
            mean_zero: false,
        }
    }

    #[test]
    fn link_recovers_pure_shift() {
        let bp = params(&["A", "B", "C"], &[-1.0, 0.0, 1.0]);
        let bq = params(&["A", "B", "C"], &[-0.5, 0.5, 1.5]);
        let link = mean_sigma_link(&bp, &bq).unwrap();
        assert_abs_diff_eq!(link.a, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(link.b, 0.5, epsilon = 1e-14);
        assert!(link.displacements.iter().all(|&d| d < 1e-13));
    }

    #[test]
    fn link_recovers_pure_scale() {
        let bp = params(&["A", "B", "C"], &[-2.0, 0.0, 2.0]);
        let bq = params(&["A", "B", "C"], &[-1.0, 0.0, 1.0]);
        let link = mean_sigma_link(&bp, &bq).unwrap();
        assert_abs_diff_eq!(link.a, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(link.b, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn identity_link_for_identical_anchors() {
        let bp = params(&["A", "B"], &[-0.7, 0.7]);
        let link = mean_sigma_link(&bp, &bp).unwrap();
        assert_eq!(link.a, 1.0);
        assert_eq!(link.b, 0.0);
        assert!(link.displacements.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn transformed_anchors_match_target_moments_exactly() {
        let bp = params(&["A", "B", "C", "D"], &[-1.3, -0.2, 0.4, 1.1]);
        let bq = params(&["A", "B", "C", "D"], &[-0.9, 0.3, 0.8, 2.2]);
        let link = mean_sigma_link(&bp, &bq).unwrap();
        let transformed: Vec<f64> = bp.b.iter().map(|&v| link.apply(v)).collect();
        assert_abs_diff_eq!(mean(&transformed), mean(&bq.b), epsilon = 1e-10);
        assert_abs_diff_eq!(sd(&transformed), sd(&bq.b), epsilon = 1e-10);
    }

    #[test]
    fn swapped_link_composes_to_identity() {
        let bp = params(&["A", "B", "C"], &[-1.1, 0.3, 0.9]);
        let bq = params(&["A", "B", "C"], &[-0.4, 0.9, 1.8]);
        let fwd = mean_sigma_link(&bp, &bq).unwrap();
        let back = mean_sigma_link(&bq, &bp).unwrap();
        assert_abs_diff_eq!(back.a, 1.0 / fwd.a, epsilon = 1e-12);
        assert_abs_diff_eq!(back.b, -fwd.b / fwd.a, epsilon = 1e-12);
        let inv = fwd.inverse();
        assert_abs_diff_eq!(inv.a, back.a, epsilon = 1e-12);
        assert_abs_diff_eq!(inv.b, back.b, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_anchor_spread_is_rejected() {
        let bp = params(&["A", "B"], &[0.5, 0.5]);
        let bq = params(&["A", "B"], &[-0.5, 0.5]);
        assert!(matches!(
            mean_sigma_link(&bp, &bq),
            Err(Error::DegenerateAnchor(_))
        ));
        let single = params(&["A"], &[0.0]);
        assert!(mean_sigma_link(&single, &single).is_err());
    }

    #[test]
    fn select_anchor_keeps_everything_when_forms_agree() {
        let codes = ["A", "B", "C", "D", "E", "F", "G"];
        let b = [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5];
        let bx = params(&codes, &b);
        let sel = select_anchor(
            &bx,
            &bx,
            &codes.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            &[],
            0.5,
        )
        .unwrap();
        assert_eq!(sel.final_codes.len(), 7);
        assert!(sel.removals.is_empty());
    }

    #[test]
    fn select_anchor_removes_the_planted_outlier() {
        let codes = ["A", "B", "C", "D", "E", "F", "G", "H"];
        let bx = params(&codes, &[-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 0.2]);
        // same severities except H, displaced by 2 logits
        let by = params(&codes, &[-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.2]);
        let shared: Vec<String> = codes.iter().map(|c| c.to_string()).collect();
        let sel = select_anchor(&bx, &by, &shared, &[], 0.5).unwrap();
        assert_eq!(sel.removals.len(), 1);
        assert_eq!(sel.removals[0].0, "H");
        assert_eq!(sel.final_codes.len(), 7);
        assert!(!sel.final_codes.contains(&"H".to_string()));
        assert!(sel.link.displacements.iter().all(|&d| d <= 0.5));
    }

    #[test]
    fn unique_a_priori_items_never_enter_the_anchor() {
        let codes = ["A", "B", "C", "D"];
        let bx = params(&codes, &[-1.0, -0.3, 0.3, 1.0]);
        let by = params(&codes, &[-1.0, -0.3, 0.3, 5.0]);
        let shared: Vec<String> = codes.iter().map(|c| c.to_string()).collect();
        let sel = select_anchor(&bx, &by, &shared, &["D".to_string()], 0.5).unwrap();
        assert!(!sel.final_codes.contains(&"D".to_string()));
        assert!(sel.removals.is_empty());
    }

    #[test]
    fn anchor_exhaustion_carries_the_removal_trace() {
        // After C is removed, the remaining pair is ordered oppositely on the
        // two scales, which a positive-slope link can never reconcile, so the
        // set shrinks below two items.
        let codes = ["A", "B", "C"];
        let bx = params(&codes, &[-1.0, 0.0, 1.0]);
        let by = params(&codes, &[1.0, 0.8, -0.3]);
        let shared: Vec<String> = codes.iter().map(|c| c.to_string()).collect();
        match select_anchor(&bx, &by, &shared, &[], 0.01) {
            Err(Error::AnchorExhausted { removals }) => {
                assert_eq!(removals.len(), 2);
                assert_eq!(removals[0].0, "C");
            }
            other => panic!("expected anchor exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn too_few_candidates_is_exhaustion_with_an_empty_trace() {
        let codes = ["A", "B"];
        let bx = params(&codes, &[-1.0, 1.0]);
        let shared: Vec<String> = codes.iter().map(|c| c.to_string()).collect();
        match select_anchor(&bx, &bx, &shared, &["B".to_string()], 0.5) {
            Err(Error::AnchorExhausted { removals }) => assert!(removals.is_empty()),
            other => panic!("expected anchor exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn removal_preference_orders_by_displacement_magnitude_then_code() {
        // displacement dominates
        assert!(prefer_removal(0.9, 0.8, 0.1, 2.0, "Z", "A"));
        assert!(!prefer_removal(0.8, 0.9, 2.0, 0.1, "A", "Z"));
        // tie: larger |b| wins
        assert!(prefer_removal(0.9, 0.9, -1.5, 1.0, "Z", "A"));
        assert!(!prefer_removal(0.9, 0.9, 0.5, -1.0, "A", "Z"));
        // full tie: lexicographically first code wins
        assert!(prefer_removal(0.9, 0.9, 1.0, -1.0, "A", "Z"));
        assert!(!prefer_removal(0.9, 0.9, 1.0, -1.0, "Z", "A"));
    }

    #[test]
    fn exact_displacement_tie_is_broken_deterministically() {
        // The scales differ only in the spread of the M/Z pair, so the
        // mirrored items A and K end up with bit-identical displacements
        // (negation symmetry) and equal |b|; the code order decides.
        let codes = ["M", "Z", "A", "K"];
        let bx = params(&codes, &[-1.0, 1.0, -0.25, 0.25]);
        let by = params(&codes, &[-2.0, 2.0, -0.25, 0.25]);
        let shared: Vec<String> = codes.iter().map(|c| c.to_string()).collect();
        let sel = select_anchor(&bx, &by, &shared, &[], 0.1).unwrap();
        assert_eq!(sel.removals[0].0, "A");
        assert_eq!(sel.final_codes, vec!["M".to_string(), "Z".to_string()]);
    }

    #[test]
    fn self_equating_is_the_identity() {
        let bx = params(&["A", "B", "C", "D"], &[-1.2, -0.4, 0.4, 1.2]);
        let t = irt_true_score_equate(&bx, &bx, &LinkingTransform::identity()).unwrap();
        assert_eq!(t.equated[0], 0.0);
        assert_eq!(t.equated[4], 4.0);
        for x in 1..4usize {
            assert_abs_diff_eq!(t.equated[x], x as f64, epsilon = 1e-8);
        }
    }

    #[test]
    fn positive_shift_raises_interior_equated_scores() {
        let bx = params(&["A", "B", "C", "D"], &[-1.2, -0.4, 0.4, 1.2]);
        let link = LinkingTransform {
            a: 1.0,
            b: 0.5,
            anchor_codes: vec![],
            displacements: vec![],
        };
        let t = irt_true_score_equate(&bx, &bx, &link).unwrap();
        for x in 1..4usize {
            assert!(t.equated[x] > x as f64);
        }
        assert_eq!(t.equated[0], 0.0);
        assert_eq!(t.equated[4], 4.0);
    }

    #[test]
    fn equated_scores_are_strictly_increasing_inside_the_range() {
        let bx = params(&["A", "B", "C", "D", "E"], &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        let by = params(&["P", "Q", "R"], &[-0.8, 0.1, 0.9]);
        let link = LinkingTransform {
            a: 1.3,
            b: -0.2,
            anchor_codes: vec![],
            displacements: vec![],
        };
        let t = irt_true_score_equate(&bx, &by, &link).unwrap();
        for x in 1..5usize {
            assert!(t.equated[x] > t.equated[x - 1] || (x == 4 && t.equated[4] >= t.equated[3]));
        }
        assert_eq!(t.equated.len(), 6);
        assert_eq!(t.equated[5], 3.0);
    }

    #[test]
    fn threshold_equivalent_inverts_the_equating() {
        let bx = params(&["A", "B", "C", "D"], &[-1.0, -0.2, 0.5, 1.3]);
        let by = params(&["P", "Q", "R", "S", "T"], &[-1.4, -0.6, 0.0, 0.7, 1.5]);
        let link = LinkingTransform {
            a: 0.9,
            b: 0.3,
            anchor_codes: vec![],
            displacements: vec![],
        };
        // x_t maps the Y threshold back to X: equating x_t forward through the
        // curves must hit the threshold again.
        for t in [1.0, 2.5, 4.2] {
            let x_t = threshold_equivalent(&bx, &by, &link, t).unwrap();
            let theta = invert_tcc(x_t, &bx.b).unwrap();
            assert_abs_diff_eq!(tcc(link.apply(theta), &by.b), t, epsilon = 1e-8);
        }
    }
}
