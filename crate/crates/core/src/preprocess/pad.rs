use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::numkernel::Dims4;
use crate::scenegen::ScenarioSpec;
use crate::Tensor;

/// Per-axis maxima over every configured scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxDims {
    pub a_max: usize,
    pub b_max: usize,
    pub u_max: usize,
    pub w_max: usize,
}

impl MaxDims {
    pub fn from_specs<'a>(specs: impl IntoIterator<Item = &'a ScenarioSpec>) -> Result<Self> {
        let mut m = MaxDims { a_max: 0, b_max: 0, u_max: 0, w_max: 0 };
        for s in specs {
            m.a_max = m.a_max.max(s.n_ap);
            m.b_max = m.b_max.max(s.n_ap_ant);
            m.u_max = m.u_max.max(s.n_ue_ant);
            m.w_max = m.w_max.max(s.n_subc);
        }
        if m.a_max == 0 || m.b_max == 0 || m.u_max == 0 || m.w_max == 0 {
            return Err(Error::Config("max dims need at least one nonempty scenario".into()));
        }
        Ok(m)
    }

    pub fn dims(&self) -> Dims4 {
        [self.a_max, self.b_max, self.u_max, self.w_max]
    }

    pub fn check_fits(&self, dims: Dims4) -> Result<()> {
        ensure!(
            dims.iter().zip(self.dims()).all(|(&d, m)| d <= m),
            "tensor dims {dims:?} exceed max dims {:?}",
            self.dims()
        );
        Ok(())
    }
}

/// CSI tensor padded to [`MaxDims`], with padding masks and liveness
/// bookkeeping for the augmentations.
///
/// An entry `(a, b, u, w)` is live when its lane `(a, b, u)` is live and
/// subcarrier `w` is live. Non-live entries are exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedCsi {
    pub tensor: Tensor,
    /// Original extents along each axis (true = real, false = padding).
    pub ap_mask: Vec<bool>,
    pub ap_ant_mask: Vec<bool>,
    pub ue_ant_mask: Vec<bool>,
    pub subc_mask: Vec<bool>,
    /// Lane liveness, indexed `(a * b_max + b) * u_max + u`.
    pub(crate) lane_live: Vec<bool>,
    pub(crate) subc_live: Vec<bool>,
}

impl PaddedCsi {
    pub fn max_dims(&self) -> MaxDims {
        let [a_max, b_max, u_max, w_max] = self.tensor.dims();
        MaxDims { a_max, b_max, u_max, w_max }
    }

    /// Original `(A_s, B_s, U_s, W_s)`.
    pub fn source_dims(&self) -> Dims4 {
        let count = |m: &[bool]| m.iter().filter(|&&x| x).count();
        [
            count(&self.ap_mask),
            count(&self.ap_ant_mask),
            count(&self.ue_ant_mask),
            count(&self.subc_mask),
        ]
    }

    #[inline]
    pub(crate) fn lane_index(&self, a: usize, b: usize, u: usize) -> usize {
        let [_, nb, nu, _] = self.tensor.dims();
        (a * nb + b) * nu + u
    }

    #[inline]
    pub fn lane_is_live(&self, a: usize, b: usize, u: usize) -> bool {
        self.lane_live[self.lane_index(a, b, u)]
    }

    #[inline]
    pub fn subcarrier_is_live(&self, w: usize) -> bool {
        self.subc_live[w]
    }

    #[inline]
    pub fn is_live(&self, a: usize, b: usize, u: usize, w: usize) -> bool {
        self.lane_is_live(a, b, u) && self.subc_live[w]
    }

    /// Live lanes in storage order.
    pub fn live_lanes(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let [na, nb, nu, _] = self.tensor.dims();
        (0..na)
            .flat_map(move |a| (0..nb).flat_map(move |b| (0..nu).map(move |u| (a, b, u))))
            .filter(|&(a, b, u)| self.lane_is_live(a, b, u))
    }

    pub(crate) fn zero_lane(&mut self, a: usize, b: usize, u: usize) {
        let i = self.lane_index(a, b, u);
        self.lane_live[i] = false;
        self.tensor.lane_mut(a, b, u).iter_mut().for_each(|z| *z = Default::default());
    }
}

/// Places `t` at the leading indices of a `m`-shaped zero tensor.
pub fn zero_pad(t: &Tensor, m: &MaxDims) -> Result<PaddedCsi> {
    let dims = t.dims();
    m.check_fits(dims)?;
    let [na, nb, nu, nw] = dims;
    let mut out = Tensor::zeros(m.dims());
    for a in 0..na {
        for b in 0..nb {
            for u in 0..nu {
                out.lane_mut(a, b, u)[..nw].copy_from_slice(t.lane(a, b, u));
            }
        }
    }
    let mask = |n: usize, len: usize| (0..len).map(|i| i < n).collect::<Vec<_>>();
    let mut lane_live = vec![false; m.a_max * m.b_max * m.u_max];
    for a in 0..na {
        for b in 0..nb {
            for u in 0..nu {
                lane_live[(a * m.b_max + b) * m.u_max + u] = true;
            }
        }
    }
    Ok(PaddedCsi {
        tensor: out,
        ap_mask: mask(na, m.a_max),
        ap_ant_mask: mask(nb, m.b_max),
        ue_ant_mask: mask(nu, m.u_max),
        subc_mask: mask(nw, m.w_max),
        lane_live,
        subc_live: mask(nw, m.w_max),
    })
}
