//! Untargeted poisoning attacks: adversarial clicks (data poisoning), the
//! LIE mean-shift attack, and Fang's aggregator-tailored model poisoning.
//!
//! Model-poisoning attackers first train honestly, then replace their
//! submissions with crafted vectors computed from whatever before-attack
//! updates their knowledge level exposes: their own `m` updates under
//! partial knowledge, all `n` under full knowledge. Data poisoning never
//! touches updates at all; malicious clients simply click with the reversed
//! (`poison`) click model.

use alloc::vec::Vec;

use rand::Rng;

use crate::aggregate::krum_select;
use crate::click::ClickModel;
use crate::error::{Error, Result};
use crate::model::ParamVector;
use crate::stats;

/// Which attack the malicious coalition mounts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    None,
    /// Malicious clients click with the poison click model.
    DataPoison,
    /// All attackers submit `mu - z * sigma` over their own updates.
    Lie,
    /// Fang's crafted update tailored to Krum / Multi-Krum.
    FangKrum,
    /// Fang's crafted updates tailored to Trimmed Mean / Median.
    FangTrimmedMean,
}

impl AttackKind {
    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::DataPoison => "data_poison",
            AttackKind::Lie => "lie",
            AttackKind::FangKrum => "fang_krum",
            AttackKind::FangTrimmedMean => "fang_trmean",
        }
    }

    pub fn is_model_poisoning(&self) -> bool {
        matches!(
            self,
            AttackKind::Lie | AttackKind::FangKrum | AttackKind::FangTrimmedMean
        )
    }
}

/// What the attacker can read besides its own clients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Knowledge {
    /// Only the compromised clients' data and updates.
    Partial,
    /// All clients' before-attack updates (analysis-only assumption).
    Full,
}

impl Knowledge {
    pub fn name(&self) -> &'static str {
        match self {
            Knowledge::Partial => "partial",
            Knowledge::Full => "full",
        }
    }
}

/// The adversary: `m` colluding clients out of `n`, occupying the first `m`
/// client slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThreatModel {
    pub n: usize,
    pub m: usize,
    pub knowledge: Knowledge,
    pub attack: AttackKind,
}

impl ThreatModel {
    pub fn honest(n: usize) -> Self {
        ThreatModel {
            n,
            m: 0,
            knowledge: Knowledge::Partial,
            attack: AttackKind::None,
        }
    }

    /// Collusion stays below half the federation.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig(alloc::string::String::from(
                "federation needs at least one client",
            )));
        }
        if 2 * self.m >= self.n && self.m > 0 {
            return Err(Error::InvalidConfig(alloc::format!(
                "{} malicious of {} clients reaches the 50% collusion bound",
                self.m,
                self.n
            )));
        }
        if self.attack != AttackKind::None && self.m == 0 {
            return Err(Error::InvalidConfig(alloc::string::String::from(
                "an active attack needs at least one malicious client",
            )));
        }
        Ok(())
    }

    pub fn is_malicious(&self, client: usize) -> bool {
        self.attack != AttackKind::None && client < self.m
    }
}

/// Per-client click model assignment: under data poisoning the malicious
/// clients click with `poison`, everyone else with the experiment's benign
/// model. Model poisoning leaves all clicks benign (attackers train
/// honestly before crafting).
pub fn assign_click_models<'a>(
    threat: &ThreatModel,
    benign: &'a ClickModel,
    poison: &'a ClickModel,
) -> Vec<&'a ClickModel> {
    (0..threat.n)
        .map(|u| {
            if threat.attack == AttackKind::DataPoison && u < threat.m {
                poison
            } else {
                benign
            }
        })
        .collect()
}

/// What crafted updates may be computed from: the readable before-attack
/// updates (first `m` = the attackers' own; all `n` under full knowledge)
/// and the current broadcast model.
#[derive(Debug, Clone, Copy)]
pub struct AttackContext<'a> {
    pub known_updates: &'a [ParamVector],
    pub global_params: &'a ParamVector,
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// The LIE coefficient `z`: with `s = floor(n/2 + 1) - m` supporters needed,
/// `z = probit((n - m - s) / (n - m))`.
pub fn lie_z(n: usize, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::NoAttackers);
    }
    if m >= n {
        return Err(Error::InvalidConfig(alloc::format!(
            "{m} attackers cannot exceed the federation size {n}"
        )));
    }
    let s = ((n + 2) / 2) as i64 - m as i64;
    let benign = (n - m) as f64;
    let arg = (benign - s as f64) / benign;
    stats::standard_normal_quantile(arg)
}

/// Craft the LIE update `mu - z * sigma`, where `mu` and `sigma` are the
/// coordinate-wise mean and population standard deviation over the
/// attackers' own before-attack updates. Every malicious client submits
/// this same vector.
pub fn lie_craft(attacker_updates: &[ParamVector], n: usize, m: usize) -> Result<ParamVector> {
    if m == 0 || attacker_updates.is_empty() {
        return Err(Error::NoAttackers);
    }
    if attacker_updates.len() != m {
        return Err(Error::InvalidConfig(alloc::format!(
            "expected {m} attacker updates, got {}",
            attacker_updates.len()
        )));
    }
    let z = lie_z(n, m)?;
    let (mean, std) = stats::coordinate_mean_std(attacker_updates)?;
    Ok(ParamVector(
        mean.iter()
            .zip(std.iter())
            .map(|(mu, sd)| mu - z * sd)
            .collect(),
    ))
}

/// How the `m - 1` supporting copies of the Fang-Krum primary are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupporterMode {
    /// Perturb each copy by a random jitter of norm `1e-4 * |primary|`.
    Jittered,
    /// Submit exact copies.
    Identical,
}

/// Tunables of the Fang-Krum lambda search.
#[derive(Debug, Clone, Copy)]
pub struct FangKrumConfig {
    /// Initial lambda; defaults to the diameter of the known updates.
    pub lambda0: Option<f64>,
    pub supporter_mode: SupporterMode,
    pub max_halvings: u32,
    pub min_lambda: f64,
}

impl Default for FangKrumConfig {
    fn default() -> Self {
        FangKrumConfig {
            lambda0: None,
            supporter_mode: SupporterMode::Jittered,
            max_halvings: 60,
            min_lambda: 1e-5,
        }
    }
}

/// Result of crafting against Krum: the `m` submissions plus search
/// diagnostics for the trace log.
#[derive(Debug, Clone)]
pub struct FangKrumOutcome {
    pub updates: Vec<ParamVector>,
    pub lambda: f64,
    pub halvings: u32,
    /// False when the search exhausted without Krum selecting the crafted
    /// vector; the last candidate is submitted anyway.
    pub converged: bool,
}

const SUPPORTER_EPS: f64 = 1e-4;

/// Fang's attack on Krum / Multi-Krum: push the global model one `lambda`
/// step against the benign update direction, `w = w_g + lambda * s` with
/// `s = -sign(mu - w_g)`, halving `lambda` until Krum over the assembled
/// round (crafted updates plus the known or assumed benign ones) selects a
/// crafted vector.
pub fn fang_krum_craft<R: Rng + ?Sized>(
    ctx: &AttackContext<'_>,
    n: usize,
    m: usize,
    cfg: &FangKrumConfig,
    rng: &mut R,
) -> Result<FangKrumOutcome> {
    if m == 0 || ctx.known_updates.is_empty() {
        return Err(Error::NoAttackers);
    }
    if ctx.known_updates.len() != m && ctx.known_updates.len() != n {
        return Err(Error::InvalidConfig(alloc::format!(
            "attack context holds {} updates; expected {m} (partial) or {n} (full)",
            ctx.known_updates.len()
        )));
    }
    let dim = ctx.global_params.len();
    let (mean, _) = stats::coordinate_mean_std(ctx.known_updates)?;
    if mean.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: mean.len(),
        });
    }
    let direction: Vec<f64> = mean
        .iter()
        .zip(ctx.global_params.iter())
        .map(|(mu, wg)| -sign(mu - wg))
        .collect();

    // Benign stand-ins for the Krum check: the true benign updates under
    // full knowledge (everything past the attackers' own m), the attackers'
    // own honest updates under partial.
    let proxies: &[ParamVector] = if ctx.known_updates.len() > m {
        &ctx.known_updates[m..]
    } else {
        ctx.known_updates
    };

    let lambda0 = cfg.lambda0.unwrap_or_else(|| {
        let mut diameter = 0.0;
        for i in 0..ctx.known_updates.len() {
            for j in i + 1..ctx.known_updates.len() {
                let d = ctx.known_updates[i].distance(&ctx.known_updates[j]);
                if d > diameter {
                    diameter = d;
                }
            }
        }
        if diameter > 0.0 {
            diameter
        } else {
            1.0
        }
    });

    // jitter directions drawn once so the rng draw count does not depend on
    // how many halvings the search needs
    let jitter: Vec<Vec<f64>> = (0..m.saturating_sub(1))
        .map(|_| match cfg.supporter_mode {
            SupporterMode::Identical => alloc::vec![0.0; dim],
            SupporterMode::Jittered => {
                let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = crate::num::sqrt(raw.iter().map(|v| v * v).sum());
                if norm > 0.0 {
                    raw.iter().map(|v| v / norm).collect()
                } else {
                    raw
                }
            }
        })
        .collect();

    let assemble = |lambda: f64| -> Vec<ParamVector> {
        let mut primary = ctx.global_params.clone();
        for (p, d) in primary.iter_mut().zip(direction.iter()) {
            *p += lambda * d;
        }
        let eps = SUPPORTER_EPS * primary.norm();
        let mut set = Vec::with_capacity(m + proxies.len());
        set.push(primary.clone());
        for dir in &jitter {
            let mut sup = primary.clone();
            for (s, d) in sup.iter_mut().zip(dir.iter()) {
                *s += eps * d;
            }
            set.push(sup);
        }
        set.extend(proxies.iter().cloned());
        set
    };

    let mut lambda = lambda0;
    let mut halvings = 0u32;
    loop {
        let assembled = assemble(lambda);
        let accepted = match krum_select(&assembled, m) {
            Ok(winner) => winner < m,
            // assembled set too small to run the check (tiny partial-
            // knowledge coalitions); give up and flag
            Err(Error::TooFewClients { .. }) => break,
            Err(e) => return Err(e),
        };
        if accepted {
            let mut assembled = assembled;
            assembled.truncate(m);
            return Ok(FangKrumOutcome {
                updates: assembled,
                lambda,
                halvings,
                converged: true,
            });
        }
        if halvings >= cfg.max_halvings || lambda / 2.0 < cfg.min_lambda {
            break;
        }
        lambda /= 2.0;
        halvings += 1;
    }

    let mut last = assemble(lambda);
    last.truncate(m);
    Ok(FangKrumOutcome {
        updates: last,
        lambda,
        halvings,
        converged: false,
    })
}

/// Range scale for the Fang Trimmed-Mean / Median attack.
const FANG_TRMEAN_B: f64 = 2.0;

fn sample_in<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Fang's attack on Trimmed Mean / Median: per coordinate, submit values
/// just beyond the known maximum (when the reversed update direction is
/// positive) or minimum (when negative). Under full knowledge the true
/// coordinate extremes are used; under partial knowledge they are estimated
/// as `mu +/- 4 sigma` over the attackers' own updates and samples are drawn
/// from the `[mu + 3 sigma, mu + 4 sigma]` band (mirrored for the negative
/// direction). The `m` crafted vectors are sampled independently.
pub fn fang_trmean_craft<R: Rng + ?Sized>(
    ctx: &AttackContext<'_>,
    m: usize,
    knowledge: Knowledge,
    rng: &mut R,
) -> Result<Vec<ParamVector>> {
    if m == 0 || ctx.known_updates.is_empty() {
        return Err(Error::NoAttackers);
    }
    let dim = ctx.global_params.len();
    let (mean, std) = stats::coordinate_mean_std(ctx.known_updates)?;
    if mean.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: mean.len(),
        });
    }
    let (w_min, w_max) = stats::coordinate_min_max(ctx.known_updates)?;

    let mut crafted = Vec::with_capacity(m);
    for _ in 0..m {
        let mut values = Vec::with_capacity(dim);
        for j in 0..dim {
            let s_j = -sign(mean[j] - ctx.global_params[j]);
            let v = if s_j > 0.0 {
                match knowledge {
                    Knowledge::Full => {
                        let hi = w_max[j];
                        if hi > 0.0 {
                            sample_in(hi, FANG_TRMEAN_B * hi, rng)
                        } else {
                            sample_in(hi, hi / FANG_TRMEAN_B, rng)
                        }
                    }
                    Knowledge::Partial => {
                        sample_in(mean[j] + 3.0 * std[j], mean[j] + 4.0 * std[j], rng)
                    }
                }
            } else if s_j < 0.0 {
                match knowledge {
                    Knowledge::Full => {
                        let lo = w_min[j];
                        if lo < 0.0 {
                            sample_in(FANG_TRMEAN_B * lo, lo, rng)
                        } else {
                            sample_in(lo / FANG_TRMEAN_B, lo, rng)
                        }
                    }
                    Knowledge::Partial => {
                        sample_in(mean[j] - 4.0 * std[j], mean[j] - 3.0 * std[j], rng)
                    }
                }
            } else {
                mean[j]
            };
            values.push(v);
        }
        crafted.push(ParamVector(values));
    }
    Ok(crafted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::click::ClickModelKind;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pv(values: &[f64]) -> ParamVector {
        ParamVector(values.to_vec())
    }

    #[test]
    fn threat_model_rejects_majority_collusion() {
        let t = ThreatModel {
            n: 10,
            m: 5,
            knowledge: Knowledge::Partial,
            attack: AttackKind::DataPoison,
        };
        assert!(t.validate().is_err());
        let ok = ThreatModel { m: 4, ..t };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn click_assignment_follows_first_m_convention() {
        let benign = ClickModel::builtin(ClickModelKind::Informational, 5).unwrap();
        let poison = ClickModel::builtin(ClickModelKind::Poison, 5).unwrap();

        let honest = ThreatModel::honest(4);
        for model in assign_click_models(&honest, &benign, &poison) {
            assert_eq!(model, &benign);
        }

        let t = ThreatModel {
            n: 10,
            m: 4,
            knowledge: Knowledge::Partial,
            attack: AttackKind::DataPoison,
        };
        let assigned = assign_click_models(&t, &benign, &poison);
        for (u, model) in assigned.iter().enumerate() {
            if u < 4 {
                assert_eq!(*model, &poison);
            } else {
                assert_eq!(*model, &benign);
            }
        }

        // model poisoning trains honestly: no poison clicks
        let lie = ThreatModel {
            attack: AttackKind::Lie,
            ..t
        };
        for model in assign_click_models(&lie, &benign, &poison) {
            assert_eq!(model, &benign);
        }
    }

    #[test]
    fn lie_z_for_ten_clients_four_attackers() {
        // s = 2, quantile argument 4/6
        let z = lie_z(10, 4).unwrap();
        assert!((z - 0.43072729929545744).abs() < 1e-9);
    }

    #[test]
    fn lie_identical_updates_reproduce_the_update() {
        let ups = [pv(&[1.5, -2.0]), pv(&[1.5, -2.0]), pv(&[1.5, -2.0])];
        let crafted = lie_craft(&ups, 7, 3).unwrap();
        assert_eq!(crafted, pv(&[1.5, -2.0]));
    }

    #[test]
    fn lie_hand_example() {
        let ups = [pv(&[1.0]), pv(&[2.0]), pv(&[1.0]), pv(&[2.0])];
        let crafted = lie_craft(&ups, 10, 4).unwrap();
        // mu = 1.5, population sigma = 0.5, z = probit(2/3)
        assert!((crafted[0] - 1.2846363503522713).abs() < 1e-12);
    }

    #[test]
    fn lie_matches_two_pass_statistics_oracle() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let m = 4;
        let dim = 6;
        let ups: Vec<ParamVector> = (0..m)
            .map(|_| ParamVector((0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect()))
            .collect();
        let crafted = lie_craft(&ups, 10, m).unwrap();
        let z = lie_z(10, m).unwrap();
        for j in 0..dim {
            // independent two-pass mean/std
            let mean: f64 = ups.iter().map(|u| u[j]).sum::<f64>() / m as f64;
            let var: f64 = ups
                .iter()
                .map(|u| (u[j] - mean) * (u[j] - mean))
                .sum::<f64>()
                / m as f64;
            let want = mean - z * crate::num::sqrt(var);
            assert!((crafted[j] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn lie_rejects_empty_coalitions() {
        assert!(matches!(lie_craft(&[], 10, 0), Err(Error::NoAttackers)));
        assert!(lie_craft(&[pv(&[1.0])], 1, 1).is_err());
    }

    #[test]
    fn fang_krum_zero_deviation_keeps_global_model() {
        // w_g == mu everywhere -> s = 0 -> crafted = w_g at any lambda
        let known = alloc::vec![pv(&[1.0, 2.0]); 6];
        let wg = pv(&[1.0, 2.0]);
        let ctx = AttackContext {
            known_updates: &known,
            global_params: &wg,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let out = fang_krum_craft(&ctx, 6, 2, &FangKrumConfig::default(), &mut rng).unwrap();
        assert_eq!(out.updates.len(), 2);
        assert_eq!(out.updates[0], wg);
    }

    #[test]
    fn fang_krum_crafted_wins_on_clustered_instance() {
        // benign cluster at 1.0 +/- 0.1, w_g = 0.9, full knowledge
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let known: Vec<ParamVector> = (0..10)
            .map(|i| pv(&[1.0 + 0.02 * (i as f64 - 4.5)]))
            .collect();
        let wg = pv(&[0.9]);
        let ctx = AttackContext {
            known_updates: &known,
            global_params: &wg,
        };
        let out = fang_krum_craft(&ctx, 10, 4, &FangKrumConfig::default(), &mut rng).unwrap();
        assert!(out.converged, "search should succeed on a tight cluster");
        // assemble the real round and check with the krum oracle
        let mut round = out.updates.clone();
        round.extend(known[4..].iter().cloned());
        let winner = krum_select(&round, 4).unwrap();
        assert!(winner < 4, "krum picked update {winner}");
        assert_eq!(round[winner], out.updates[winner]);
    }

    #[test]
    fn fang_krum_counts_halvings() {
        // Constructed so the check rejects lambda = 10, 5, 2.5, 1.25, 0.625
        // and accepts 0.3125: benign spacing 0.05 puts the best benign Krum
        // score at 0.3; the crafted cluster scores ~(distance to nearest
        // benign), which drops below 0.3 only once lambda <= 0.3125.
        let attackers = alloc::vec![pv(&[0.925]); 4];
        let benign = [
            pv(&[0.8]),
            pv(&[0.85]),
            pv(&[0.9]),
            pv(&[0.95]),
            pv(&[1.0]),
            pv(&[1.05]),
        ];
        let mut known: Vec<ParamVector> = attackers.to_vec();
        known.extend(benign.iter().cloned());
        let wg = pv(&[0.9]);
        let ctx = AttackContext {
            known_updates: &known,
            global_params: &wg,
        };
        let cfg = FangKrumConfig {
            lambda0: Some(10.0),
            ..FangKrumConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let out = fang_krum_craft(&ctx, 10, 4, &cfg, &mut rng).unwrap();
        assert!(out.converged);
        assert_eq!(out.halvings, 5);
        assert!((out.lambda - 0.3125).abs() < 1e-12);
    }

    #[test]
    fn fang_krum_flags_hopeless_searches() {
        // benign all identical: their Krum scores are exactly zero, so no
        // crafted vector can ever win
        let known: Vec<ParamVector> = (0..8).map(|_| pv(&[1.0])).collect();
        let wg = pv(&[0.5]);
        let ctx = AttackContext {
            known_updates: &known,
            global_params: &wg,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let cfg = FangKrumConfig {
            lambda0: Some(1.0),
            ..FangKrumConfig::default()
        };
        let out = fang_krum_craft(&ctx, 8, 3, &cfg, &mut rng).unwrap();
        assert!(!out.converged);
        assert_eq!(out.updates.len(), 3);
    }

    #[test]
    fn fang_trmean_full_knowledge_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        // coordinate 0: mu < w_g so s = +1, w_max = 1.0 > 0 -> [1, 2]
        // coordinate 1: mu > w_g so s = -1, w_min = -1.0 < 0 -> [-2, -1]
        let known = [
            pv(&[0.5, -1.0]),
            pv(&[1.0, -0.2]),
            pv(&[0.7, -0.6]),
            pv(&[0.9, -0.8]),
        ];
        let wg = pv(&[2.0, -3.0]);
        let ctx = AttackContext {
            known_updates: &known,
            global_params: &wg,
        };
        for _ in 0..2_500 {
            let crafted = fang_trmean_craft(&ctx, 4, Knowledge::Full, &mut rng).unwrap();
            assert_eq!(crafted.len(), 4);
            for c in &crafted {
                assert!(
                    c[0] >= 1.0 && c[0] <= 2.0,
                    "coordinate 0 out of range: {}",
                    c[0]
                );
                assert!(
                    c[1] >= -2.0 && c[1] <= -1.0,
                    "coordinate 1 out of range: {}",
                    c[1]
                );
            }
        }
    }

    #[test]
    fn fang_trmean_crafted_vectors_differ() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let known = [pv(&[0.5]), pv(&[1.0]), pv(&[0.7])];
        let wg = pv(&[2.0]);
        let ctx = AttackContext {
            known_updates: &known,
            global_params: &wg,
        };
        let crafted = fang_trmean_craft(&ctx, 3, Knowledge::Full, &mut rng).unwrap();
        assert!(crafted[0] != crafted[1] || crafted[1] != crafted[2]);
    }

    #[test]
    fn fang_trmean_positive_direction_exceeds_known_maximum() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        for _ in 0..50 {
            let dim = 4;
            let known: Vec<ParamVector> = (0..5)
                .map(|_| ParamVector((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()))
                .collect();
            let wg = ParamVector((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let ctx = AttackContext {
                known_updates: &known,
                global_params: &wg,
            };
            let (mean, _) = stats::coordinate_mean_std(&known).unwrap();
            let (_, w_max) = stats::coordinate_min_max(&known).unwrap();
            let crafted = fang_trmean_craft(&ctx, 2, Knowledge::Full, &mut rng).unwrap();
            for c in &crafted {
                for j in 0..dim {
                    let s_j = -sign(mean[j] - wg[j]);
                    if s_j > 0.0 {
                        assert!(c[j] >= w_max[j]);
                        assert!(c[j] > mean[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn fang_trmean_partial_uses_sigma_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let known = [pv(&[1.0]), pv(&[2.0])]; // mu 1.5, sigma 0.5
        let wg = pv(&[9.0]); // s = +1
        let ctx = AttackContext {
            known_updates: &known,
            global_params: &wg,
        };
        for _ in 0..1000 {
            let crafted = fang_trmean_craft(&ctx, 2, Knowledge::Partial, &mut rng).unwrap();
            for c in &crafted {
                assert!(
                    c[0] >= 3.0 && c[0] <= 3.5,
                    "outside [mu+3s, mu+4s]: {}",
                    c[0]
                );
            }
        }
    }

    #[test]
    fn partial_crafting_is_a_function_of_attacker_data_only() {
        // identical attacker updates, global model and seed must give
        // identical crafted vectors regardless of anything else in the world
        let attackers = [pv(&[0.4, 0.6]), pv(&[0.5, 0.5])];
        let wg = pv(&[1.0, 0.0]);
        let ctx = AttackContext {
            known_updates: &attackers,
            global_params: &wg,
        };
        let a = {
            let mut rng = ChaCha8Rng::seed_from_u64(40);
            fang_trmean_craft(&ctx, 2, Knowledge::Partial, &mut rng).unwrap()
        };
        let b = {
            let mut rng = ChaCha8Rng::seed_from_u64(40);
            fang_trmean_craft(&ctx, 2, Knowledge::Partial, &mut rng).unwrap()
        };
        assert_eq!(a, b);
        let lie_a = lie_craft(&attackers, 10, 2).unwrap();
        let lie_b = lie_craft(&attackers, 10, 2).unwrap();
        assert_eq!(lie_a, lie_b);
    }
}
