use rand::Rng;

use super::corpus::Corpus;
use crate::error::{ensure, Error, Result};

/// A sample addressed by scenario position (in the corpus) and index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SampleRef {
    pub scenario: usize,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triplet {
    pub anchor: SampleRef,
    pub close: SampleRef,
    pub far: SampleRef,
}

/// Which partition of every scenario a sampler draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Partition {
    Train,
    Test,
}

#[derive(Clone, Debug)]
struct Pool {
    /// Member sample indices, sorted by timestamp (then index).
    members: Vec<usize>,
    times: Vec<f64>,
    /// Sample index → position in `members`, `u32::MAX` if absent.
    slot: Vec<u32>,
    close_window: f64,
    /// Members with at least one close candidate.
    anchors: Vec<usize>,
    skipped: Vec<usize>,
}

/// Draws anchors and their close/far partners. Close partners come from
/// the anchor's scenario with `0 < |Δt| ≤ T_c`; far partners are uniform
/// over the in-scenario samples with `|Δt| > T_c` together with every
/// sample of every other scenario.
#[derive(Clone, Debug)]
pub struct TripletSampler {
    pools: Vec<Pool>,
}

/// Bounds of the close window around time `t` in a sorted time array:
/// `[lo, hi)` has `|Δt| ≤ tc`, `[z0, z1)` has `Δt = 0`.
fn window(times: &[f64], t: f64, tc: f64) -> (usize, usize, usize, usize) {
    let lo = times.partition_point(|&x| t - x > tc);
    let hi = times.partition_point(|&x| x - t <= tc);
    let z0 = times.partition_point(|&x| x < t);
    let z1 = times.partition_point(|&x| x <= t);
    (lo, hi, z0, z1)
}

impl TripletSampler {
    /// `scenarios[s] = (timestamps of all samples, T_c, member indices)`.
    pub fn new(scenarios: Vec<(Vec<f64>, f64, Vec<usize>)>) -> Result<Self> {
        ensure!(!scenarios.is_empty(), "triplet sampler needs at least one scenario");
        let mut pools = Vec::with_capacity(scenarios.len());
        for (timestamps, close_window, mut members) in scenarios {
            ensure!(close_window > 0.0, "close window must be positive, got {close_window}");
            ensure!(members.iter().all(|&n| n < timestamps.len()), "member index out of range");
            if timestamps.iter().any(|t| !t.is_finite()) {
                return Err(Error::Data("non-finite timestamp".into()));
            }
            members.sort_by(|&a, &b| timestamps[a].total_cmp(&timestamps[b]).then(a.cmp(&b)));
            members.dedup();
            let times: Vec<f64> = members.iter().map(|&n| timestamps[n]).collect();
            let mut slot = vec![u32::MAX; timestamps.len()];
            for (k, &n) in members.iter().enumerate() {
                slot[n] = k as u32;
            }
            let (mut anchors, mut skipped) = (Vec::new(), Vec::new());
            for &n in &members {
                let (lo, hi, z0, z1) = window(&times, timestamps[n], close_window);
                if (hi - lo) > (z1 - z0) {
                    anchors.push(n);
                } else {
                    skipped.push(n);
                }
            }
            anchors.sort_unstable();
            skipped.sort_unstable();
            pools.push(Pool { members, times, slot, close_window, anchors, skipped });
        }
        Ok(TripletSampler { pools })
    }

    /// Sampler over one partition of every scenario in `corpus`.
    pub fn from_corpus(corpus: &Corpus, part: Partition) -> Result<Self> {
        let scenarios = corpus
            .scenarios()
            .iter()
            .enumerate()
            .map(|(s, d)| {
                let split = corpus.split(s);
                let members = match part {
                    Partition::Train => split.train.clone(),
                    Partition::Test => split.test.clone(),
                };
                (d.timestamps.clone(), d.spec.close_window, members)
            })
            .collect();
        Self::new(scenarios)
    }

    pub fn n_scenarios(&self) -> usize {
        self.pools.len()
    }

    /// Members that can never anchor a triplet, per scenario.
    pub fn skipped_anchors(&self) -> Vec<&[usize]> {
        self.pools.iter().map(|p| p.skipped.as_slice()).collect()
    }

    pub fn anchors(&self, s: usize) -> &[usize] {
        &self.pools[s].anchors
    }

    /// Draws one close and one far partner for `anchor`.
    pub fn sample_triplet<R: Rng + ?Sized>(&self, anchor: SampleRef, rng: &mut R) -> Result<Triplet> {
        let pool = self
            .pools
            .get(anchor.scenario)
            .ok_or_else(|| Error::Contract(format!("scenario {} out of range", anchor.scenario)))?;
        let slot = pool.slot.get(anchor.index).copied().unwrap_or(u32::MAX);
        ensure!(slot != u32::MAX, "sample {} is not in the sampler's partition", anchor.index);
        let t = pool.times[slot as usize];
        let (lo, hi, z0, z1) = window(&pool.times, t, pool.close_window);
        let n_close = (hi - lo) - (z1 - z0);
        if n_close == 0 {
            return Err(Error::Data(format!(
                "sample {} of scenario {} has no close candidate",
                anchor.index, anchor.scenario
            )));
        }
        let mut k = rng.random_range(0..n_close);
        let close_pos = if lo + k < z0 {
            lo + k
        } else {
            k -= z0 - lo;
            z1 + k
        };
        let close = SampleRef { scenario: anchor.scenario, index: pool.members[close_pos] };

        let own_far = lo + (pool.members.len() - hi);
        let others: usize = self
            .pools
            .iter()
            .enumerate()
            .filter(|&(s, _)| s != anchor.scenario)
            .map(|(_, p)| p.members.len())
            .sum();
        if own_far + others == 0 {
            return Err(Error::Data(format!("sample {} has no far candidate", anchor.index)));
        }
        let mut k = rng.random_range(0..own_far + others);
        let far = if k < own_far {
            let pos = if k < lo { k } else { hi + (k - lo) };
            SampleRef { scenario: anchor.scenario, index: pool.members[pos] }
        } else {
            k -= own_far;
            let mut found = None;
            for (s, p) in self.pools.iter().enumerate() {
                if s == anchor.scenario {
                    continue;
                }
                if k < p.members.len() {
                    found = Some(SampleRef { scenario: s, index: p.members[k] });
                    break;
                }
                k -= p.members.len();
            }
            found.expect("k lies inside the other pools")
        };
        Ok(Triplet { anchor, close, far })
    }

    /// `size` anchors, each from a uniformly chosen scenario and then a
    /// uniformly chosen anchorable sample of it.
    pub fn build_batch<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Result<Vec<SampleRef>> {
        let usable: Vec<usize> = (0..self.pools.len()).filter(|&s| !self.pools[s].anchors.is_empty()).collect();
        if usable.is_empty() {
            return Err(Error::Data("no scenario has an anchorable sample".into()));
        }
        Ok((0..size)
            .map(|_| {
                let s = usable[rng.random_range(0..usable.len())];
                let a = &self.pools[s].anchors;
                SampleRef { scenario: s, index: a[rng.random_range(0..a.len())] }
            })
            .collect())
    }

    /// Checks the defining predicate of the triplet sets.
    pub fn is_valid(&self, tr: &Triplet, timestamps: &[&[f64]]) -> bool {
        let tc = self.pools[tr.anchor.scenario].close_window;
        let ta = timestamps[tr.anchor.scenario][tr.anchor.index];
        let dc = (ta - timestamps[tr.close.scenario][tr.close.index]).abs();
        let close_ok = tr.close.scenario == tr.anchor.scenario && dc > 0.0 && dc <= tc;
        let far_ok = tr.far.scenario != tr.anchor.scenario
            || (ta - timestamps[tr.far.scenario][tr.far.index]).abs() > tc;
        close_ok && far_ok
    }
}
