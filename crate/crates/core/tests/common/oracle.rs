//! Brute-force reference evaluators used only by tests.
//!
//! Nothing here calls into the geometry, matching or scoring code of the
//! library; each function is a literal transcription written from the
//! formulas and the scoring protocol.

use std::collections::BTreeMap;

use guardline::model::{BoundingBox, Frame};

#[derive(Debug, Clone, PartialEq)]
pub struct OraclePair {
    pub a: String,
    pub b: String,
    pub distance: f64,
    pub threshold: f64,
    pub violation: bool,
}

/// Nested-loop evaluation of the distance, threshold and decision formulas
/// over every unordered pair of persons with a usable shoulder line.
pub fn oracle_assess(frame: &Frame, lambda: f64, min_width: f64) -> Vec<OraclePair> {
    let n = frame.persons.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let pi = &frame.persons[i];
            let pj = &frame.persons[j];
            let (Some(si1), Some(si2)) = (pi.left_shoulder, pi.right_shoulder) else { continue };
            let (Some(sj1), Some(sj2)) = (pj.left_shoulder, pj.right_shoulder) else { continue };

            let wi = ((si1.x - si2.x) * (si1.x - si2.x) + (si1.y - si2.y) * (si1.y - si2.y)).sqrt();
            let wj = ((sj1.x - sj2.x) * (sj1.x - sj2.x) + (sj1.y - sj2.y) * (sj1.y - sj2.y)).sqrt();
            if wi < min_width || wj < min_width {
                continue;
            }

            // D = || (s1_i + s2_i)/2 - (s1_j + s2_j)/2 ||
            let cix = (si1.x + si2.x) / 2.0;
            let ciy = (si1.y + si2.y) / 2.0;
            let cjx = (sj1.x + sj2.x) / 2.0;
            let cjy = (sj1.y + sj2.y) / 2.0;
            let d = ((cix - cjx) * (cix - cjx) + (ciy - cjy) * (ciy - cjy)).sqrt();

            // T = lambda * (w_i + w_j) / 2
            let t = lambda * (wi + wj) / 2.0;

            // M = 1 if D < T else 0
            let m = d < t;

            let (a, b) = if pi.id <= pj.id { (pi.id.clone(), pj.id.clone()) } else { (pj.id.clone(), pi.id.clone()) };
            out.push(OraclePair { a, b, distance: d, threshold: t, violation: m });
        }
    }
    out.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
    out
}

/// Subject-level roll-up computed from oracle pairs: `Some(true)` violates,
/// `Some(false)` keeps, `None` unassessed.
pub fn oracle_statuses(frame: &Frame, pairs: &[OraclePair]) -> Vec<(String, Option<bool>)> {
    frame
        .persons
        .iter()
        .map(|p| {
            let mine: Vec<&OraclePair> = pairs.iter().filter(|q| q.a == p.id || q.b == p.id).collect();
            let status = if mine.is_empty() { None } else { Some(mine.iter().any(|q| q.violation)) };
            (p.id.clone(), status)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Accuracy oracle
// ---------------------------------------------------------------------------

/// A predicted entity as the oracle sees it: id, box, label string.
#[derive(Debug, Clone)]
pub struct OracleEntity {
    pub id: String,
    pub bbox: Option<BoundingBox>,
    pub label: Option<String>,
}

/// One frame flattened into per-task entity lists.
#[derive(Debug, Clone, Default)]
pub struct OracleFrame {
    pub frame_id: u64,
    pub mask: Vec<OracleEntity>,
    pub hand: Vec<OracleEntity>,
    pub distance: Vec<OracleEntity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub correct: u64,
    pub scored: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OracleRow {
    pub mask: Counts,
    pub hand: Counts,
    pub distance: Counts,
}

fn oracle_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let w = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let h = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = w * h;
    let union = (a.x_max - a.x_min) * (a.y_max - a.y_min) + (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Naive matcher: repeatedly scans every remaining (gt, pred) pair and takes
/// the best one until nothing at or above the threshold remains.
fn oracle_match(gt: &[OracleEntity], pred: &[OracleEntity], by_iou: Option<f64>) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    match by_iou {
        None => {
            for (gi, g) in gt.iter().enumerate() {
                for (pi, p) in pred.iter().enumerate() {
                    if g.id == p.id {
                        pairs.push((gi, pi));
                    }
                }
            }
        }
        Some(threshold) => {
            let mut gt_used = vec![false; gt.len()];
            let mut pred_used = vec![false; pred.len()];
            loop {
                let mut best: Option<(f64, usize, usize)> = None;
                for (gi, g) in gt.iter().enumerate() {
                    for (pi, p) in pred.iter().enumerate() {
                        if gt_used[gi] || pred_used[pi] {
                            continue;
                        }
                        let (Some(gb), Some(pb)) = (g.bbox, p.bbox) else { continue };
                        let v = oracle_iou(&gb, &pb);
                        if v < threshold {
                            continue;
                        }
                        let better = match best {
                            None => true,
                            Some((bv, bg, bp)) => {
                                v > bv || (v == bv && (&gt[gi].id, &pred[pi].id) < (&gt[bg].id, &pred[bp].id))
                            }
                        };
                        if better {
                            best = Some((v, gi, pi));
                        }
                    }
                }
                let Some((_, gi, pi)) = best else { break };
                gt_used[gi] = true;
                pred_used[pi] = true;
                pairs.push((gi, pi));
            }
        }
    }
    pairs
}

fn oracle_count(gt: &[OracleEntity], pred: &[OracleEntity], by_iou: Option<f64>) -> Counts {
    let mut c = Counts::default();
    for (gi, pi) in oracle_match(gt, pred, by_iou) {
        let (Some(gl), Some(pl)) = (&gt[gi].label, &pred[pi].label) else { continue };
        c.scored += 1;
        if gl == pl {
            c.correct += 1;
        }
    }
    c
}

/// Recounts every task from scratch. Ground-truth entities without a matched
/// prediction never reach the counters; predictions labelled `None`
/// (unassessed) are skipped.
pub fn oracle_accuracy(
    predicted: &[OracleFrame],
    truth: &[OracleFrame],
    by_iou: Option<f64>,
) -> OracleRow {
    let by_id: BTreeMap<u64, &OracleFrame> = predicted.iter().map(|f| (f.frame_id, f)).collect();
    let mut row = OracleRow::default();
    for g in truth {
        let Some(p) = by_id.get(&g.frame_id) else { continue };
        let m = oracle_count(&g.mask, &p.mask, by_iou);
        let h = oracle_count(&g.hand, &p.hand, by_iou);
        let d = oracle_count(&g.distance, &p.distance, by_iou);
        row.mask.correct += m.correct;
        row.mask.scored += m.scored;
        row.hand.correct += h.correct;
        row.hand.scored += h.scored;
        row.distance.correct += d.correct;
        row.distance.scored += d.scored;
    }
    row
}

pub fn pooled(rows: &[OracleRow]) -> OracleRow {
    let mut t = OracleRow::default();
    for r in rows {
        t.mask.correct += r.mask.correct;
        t.mask.scored += r.mask.scored;
        t.hand.correct += r.hand.correct;
        t.hand.scored += r.hand.scored;
        t.distance.correct += r.distance.correct;
        t.distance.scored += r.distance.scored;
    }
    t
}
