//! SDBN click simulation.
//!
//! A simulated user scans the SERP top to bottom, clicks each document with a
//! probability conditioned on its relevance grade, and after a click stops
//! the whole session with a second grade-conditioned probability. Documents
//! after a stop are neither examined nor clicked.
//!
//! Four built-in behaviours are provided for both the 5-level (MSLR-style)
//! and 3-level (MQ2007-style) grade scales: `perfect`, `navigational`,
//! `informational`, and the adversarial `poison` user whose click
//! probabilities are the perfect user's reversed (most likely to click the
//! least relevant document, never stopping).

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

/// The four built-in user behaviours.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClickModelKind {
    Perfect,
    Navigational,
    Informational,
    Poison,
}

impl ClickModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ClickModelKind::Perfect => "perfect",
            ClickModelKind::Navigational => "navigational",
            ClickModelKind::Informational => "informational",
            ClickModelKind::Poison => "poison",
        }
    }
}

/// Per-grade click and stop probability tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickModel {
    /// P(click = 1 | rel), indexed by relevance grade.
    pub p_click: Vec<f64>,
    /// P(stop = 1 | click = 1, rel), indexed by relevance grade.
    pub p_stop: Vec<f64>,
}

/// Clicks produced by one simulated session.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickResult {
    /// One entry per displayed document; true = clicked.
    pub clicks: Vec<bool>,
    /// Position whose post-click stop ended the session, if any.
    pub stopped_at: Option<usize>,
}

impl ClickResult {
    pub fn any_click(&self) -> bool {
        self.clicks.iter().any(|&c| c)
    }
}

impl ClickModel {
    /// Probability tables for one of the built-in behaviours.
    pub fn builtin(kind: ClickModelKind, grade_levels: u8) -> Result<Self> {
        use ClickModelKind::*;
        let (p_click, p_stop): (&[f64], &[f64]) = match (kind, grade_levels) {
            (Perfect, 5) => (&[0.0, 0.2, 0.4, 0.8, 1.0], &[0.0; 5]),
            (Navigational, 5) => (&[0.05, 0.3, 0.5, 0.7, 0.95], &[0.2, 0.3, 0.5, 0.7, 0.9]),
            (Informational, 5) => (&[0.4, 0.6, 0.7, 0.8, 0.9], &[0.1, 0.2, 0.3, 0.4, 0.5]),
            (Poison, 5) => (&[1.0, 0.8, 0.4, 0.2, 0.0], &[0.0; 5]),
            (Perfect, 3) => (&[0.0, 0.5, 1.0], &[0.0; 3]),
            (Navigational, 3) => (&[0.05, 0.5, 0.95], &[0.2, 0.5, 0.9]),
            (Informational, 3) => (&[0.4, 0.7, 0.9], &[0.1, 0.3, 0.5]),
            (Poison, 3) => (&[1.0, 0.5, 0.0], &[0.0; 3]),
            _ => {
                return Err(Error::InvalidConfig(alloc::format!(
                    "no built-in click model for {} relevance levels",
                    grade_levels
                )))
            }
        };
        Ok(ClickModel {
            p_click: p_click.to_vec(),
            p_stop: p_stop.to_vec(),
        })
    }

    /// Custom probability tables, e.g. loaded from a config block.
    pub fn custom(p_click: Vec<f64>, p_stop: Vec<f64>) -> Result<Self> {
        if p_click.len() != p_stop.len() || p_click.is_empty() {
            return Err(Error::InvalidConfig(alloc::format!(
                "click/stop tables must be equal-length and non-empty ({} vs {})",
                p_click.len(),
                p_stop.len()
            )));
        }
        for &p in p_click.iter().chain(p_stop.iter()) {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "probability {p} outside [0, 1]"
                )));
            }
        }
        Ok(ClickModel { p_click, p_stop })
    }

    pub fn grade_levels(&self) -> u8 {
        self.p_click.len() as u8
    }

    /// Simulate one session over the displayed relevance grades.
    ///
    /// Consumes exactly one uniform draw per examined document plus one per
    /// click, in display order, so sessions replay bit-identically per seed.
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        displayed_relevances: &[u8],
        rng: &mut R,
    ) -> Result<ClickResult> {
        let levels = self.p_click.len() as u8;
        let mut clicks = alloc::vec![false; displayed_relevances.len()];
        let mut stopped_at = None;
        for (pos, &rel) in displayed_relevances.iter().enumerate() {
            if rel >= levels {
                return Err(Error::GradeOutOfRange { grade: rel, levels });
            }
            let clicked = rng.gen::<f64>() < self.p_click[rel as usize];
            clicks[pos] = clicked;
            if clicked && rng.gen::<f64>() < self.p_stop[rel as usize] {
                stopped_at = Some(pos);
                break;
            }
        }
        Ok(ClickResult { clicks, stopped_at })
    }
}
