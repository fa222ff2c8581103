//! Which leaderboard differences are evident once metric uncertainty is
//! taken into account.
//!
//! Evidence comes from a [`ResolutionTable`]: `P_ε` between a system at a
//! given offset (noise relative to the optimum) and one whose expected score
//! is a relative `gap` worse. Since true offsets are unknown, verdicts are
//! given for every assumed offset of the winner.

use alloc::string::String;
use alloc::vec::Vec;

use crate::noisy::GapCurve;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LeaderboardEntry {
    pub label: String,
    pub rmse: f64,
    /// `(rmse − rmse_winner)/rmse`.
    pub relative_diff: f64,
}

impl LeaderboardEntry {
    /// Relative gap of expectations to the winner, `rmse/rmse_winner − 1`.
    pub fn gap(&self) -> f64 {
        1.0 / (1.0 - self.relative_diff) - 1.0
    }
}

/// Sort by score (stable) and compute differences to the winner.
pub fn rank_entries(scores: Vec<(String, f64)>) -> Result<Vec<LeaderboardEntry>> {
    if scores.len() < 2 {
        return Err(Error::Data("leaderboard needs at least 2 entries".into()));
    }
    if let Some((label, _)) = scores.iter().find(|(_, s)| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::Data(alloc::format!("entry {label}: score must be positive")));
    }
    let mut scores = scores;
    scores.sort_by(|a, b| a.1.total_cmp(&b.1));
    let best = scores[0].1;
    Ok(scores
        .into_iter()
        .map(|(label, rmse)| LeaderboardEntry { label, relative_diff: (rmse - best) / rmse, rmse })
        .collect())
}

/// `P_ε` over a grid of offsets × gaps; `None` where a gap was out of reach.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResolutionTable {
    pub offsets: Vec<f64>,
    pub gaps: Vec<f64>,
    /// `p_error[offset][gap]`
    pub p_error: Vec<Vec<Option<f64>>>,
    pub threshold: f64,
}

impl ResolutionTable {
    pub fn from_curves(curves: &[GapCurve], threshold: f64) -> Result<Self> {
        let first = curves.first().ok_or_else(|| Error::param("curves", "need at least one gap"))?;
        let offsets: Vec<f64> = first.points.iter().map(|p| p.offset).collect();
        if curves.iter().any(|c| c.points.iter().map(|p| p.offset).ne(offsets.iter().copied())) {
            return Err(Error::param("curves", "all gaps need the same offsets"));
        }
        if curves.windows(2).any(|w| w[1].gap <= w[0].gap) || !(first.gap >= 0.0) {
            return Err(Error::param("curves", "gaps must be increasing and non-negative"));
        }
        let p_error = (0..offsets.len())
            .map(|i| curves.iter().map(|c| c.points[i].p_error).collect())
            .collect();
        Ok(Self { offsets, gaps: curves.iter().map(|c| c.gap).collect(), p_error, threshold })
    }

    /// Smallest grid gap that is evident at offset `i`.
    pub fn required_gap(&self, i: usize) -> Option<f64> {
        self.gaps
            .iter()
            .zip(&self.p_error[i])
            .find(|(_, p)| p.is_some_and(|p| p < self.threshold))
            .map(|(g, _)| *g)
    }

    /// `P_ε` at offset `i` for an arbitrary gap, interpolating linearly
    /// between grid gaps; gap 0 means identical systems (`P_ε = ½`).
    pub fn p_error_at(&self, i: usize, gap: f64) -> Option<f64> {
        let mut prev = (0.0, Some(0.5));
        for (g, p) in self.gaps.iter().zip(&self.p_error[i]) {
            if gap <= *g {
                let (g0, p0) = prev;
                let (p0, p1) = (p0?, (*p)?);
                if *g == g0 {
                    return Some(p1);
                }
                return Some(p0 + (p1 - p0) * (gap - g0) / (g - g0));
            }
            prev = (*g, *p);
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Evident,
    NotEvident,
    /// The gap lies beyond the table and its last column is not evident.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntryVerdict {
    pub label: String,
    pub relative_diff: f64,
    pub gap: f64,
    pub p_error: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OffsetVerdicts {
    pub offset: f64,
    pub required_gap: Option<f64>,
    pub entries: Vec<EntryVerdict>,
}

/// The winner against the lowest-ranked entry.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WidestGapCase {
    pub label: String,
    pub relative_diff: f64,
    pub not_evident_offsets: Vec<f64>,
    pub evident_offsets: Vec<f64>,
}

/// Entries within `within` (relative) of the winner.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NearWinnerCase {
    pub within: f64,
    pub labels: Vec<String>,
    /// True if none of them is evidently worse at any offset.
    pub equivalent_at_all_offsets: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LeaderboardReport {
    pub winner: String,
    pub entries: Vec<LeaderboardEntry>,
    pub offsets: Vec<OffsetVerdicts>,
    pub widest_gap: WidestGapCase,
    pub near_winner: NearWinnerCase,
}

pub const NEAR_WINNER: f64 = 0.01;

pub fn analyze_leaderboard(entries: &[LeaderboardEntry], table: &ResolutionTable) -> Result<LeaderboardReport> {
    if entries.len() < 2 {
        return Err(Error::Data("leaderboard needs at least 2 entries".into()));
    }
    let offsets: Vec<OffsetVerdicts> = table
        .offsets
        .iter()
        .enumerate()
        .map(|(i, &offset)| OffsetVerdicts {
            offset,
            required_gap: table.required_gap(i),
            entries: entries[1..]
                .iter()
                .map(|e| {
                    let gap = e.gap();
                    let p = table.p_error_at(i, gap);
                    let verdict = match p {
                        Some(p) if p < table.threshold => Verdict::Evident,
                        Some(_) => Verdict::NotEvident,
                        None => match table.required_gap(i) {
                            Some(g) if gap >= g && table.gaps.last().is_some_and(|l| gap > *l) => Verdict::Evident,
                            _ => Verdict::Undetermined,
                        },
                    };
                    EntryVerdict { label: e.label.clone(), relative_diff: e.relative_diff, gap, p_error: p, verdict }
                })
                .collect(),
        })
        .collect();
    let last = entries.len() - 1;
    let widest = &entries[last];
    let (mut not_evident, mut evident) = (Vec::new(), Vec::new());
    for o in &offsets {
        match o.entries[last - 1].verdict {
            Verdict::Evident => evident.push(o.offset),
            _ => not_evident.push(o.offset),
        }
    }
    let near: Vec<usize> = (1..entries.len()).filter(|&k| entries[k].relative_diff < NEAR_WINNER).collect();
    let equivalent = offsets
        .iter()
        .all(|o| near.iter().all(|&k| o.entries[k - 1].verdict != Verdict::Evident));
    Ok(LeaderboardReport {
        winner: entries[0].label.clone(),
        entries: entries.to_vec(),
        offsets,
        widest_gap: WidestGapCase {
            label: widest.label.clone(),
            relative_diff: widest.relative_diff,
            not_evident_offsets: not_evident,
            evident_offsets: evident,
        },
        near_winner: NearWinnerCase {
            within: NEAR_WINNER,
            labels: near.iter().map(|&k| entries[k].label.clone()).collect(),
            equivalent_at_all_offsets: equivalent,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noisy::GapPoint;
    use alloc::string::ToString;
    use alloc::vec;

    fn netflix() -> Vec<LeaderboardEntry> {
        rank_entries(vec![
            ("Cinematch".to_string(), 0.9525),
            ("BellKor's Pragmatic Chaos".to_string(), 0.8567),
            ("The Ensemble".to_string(), 0.8567),
            ("Grand Prize Team".to_string(), 0.8582),
            ("BellKor".to_string(), 0.8624),
        ])
        .unwrap()
    }

    #[test]
    fn differences_match_the_table() {
        let e = netflix();
        assert_eq!(e[0].label, "BellKor's Pragmatic Chaos");
        assert_eq!(e[1].relative_diff, 0.0);
        assert!((e[3].relative_diff - 0.0066).abs() < 5e-5);
        assert!((e[4].relative_diff - 0.1006).abs() < 5e-5);
        assert!(rank_entries(vec![("x".to_string(), 1.0)]).is_err());
    }

    fn table() -> ResolutionTable {
        // offsets 0, 0.4; gaps 0.01, 0.1, 0.25
        let mk = |gap: f64, ps: [f64; 2]| GapCurve {
            gap,
            points: vec![
                GapPoint { offset: 0.0, p_needed: Some(0.1), p_error: Some(ps[0]), min: None, max: None },
                GapPoint { offset: 0.4, p_needed: Some(0.5), p_error: Some(ps[1]), min: None, max: None },
            ],
        };
        ResolutionTable::from_curves(&[mk(0.01, [0.45, 0.41]), mk(0.1, [0.12, 0.03]), mk(0.25, [0.001, 0.0])], 0.05)
            .unwrap()
    }

    #[test]
    fn verdicts_follow_the_table() {
        let r = analyze_leaderboard(&netflix(), &table()).unwrap();
        assert_eq!(r.widest_gap.not_evident_offsets, [0.0]);
        assert_eq!(r.widest_gap.evident_offsets, [0.4]);
        assert!(r.near_winner.equivalent_at_all_offsets);
        assert_eq!(r.near_winner.labels.len(), 3);
        assert_eq!(r.offsets[1].required_gap, Some(0.1));
    }

    #[test]
    fn large_gap_is_evident_everywhere() {
        let e = rank_entries(vec![("a".to_string(), 0.75), ("b".to_string(), 1.0)]).unwrap();
        let r = analyze_leaderboard(&e, &table()).unwrap();
        assert!(r.offsets.iter().all(|o| o.entries[0].verdict == Verdict::Evident));
    }
}
