use super::spec::Area;
use crate::error::{Error, Result};

/// Serpentine sweep over `area`: rows along x with pitch `spacing_m`,
/// alternating direction. Timestamps are the sample indices.
pub fn meander_trajectory(area: &Area, spacing_m: f64) -> Result<(Vec<[f64; 2]>, Vec<f64>)> {
    if !(spacing_m > 0.0) || !(area.width_m > 0.0 && area.height_m > 0.0) {
        return Err(Error::Config("trajectory needs positive spacing and a nondegenerate area".into()));
    }
    if spacing_m > area.width_m || spacing_m > area.height_m {
        return Err(Error::Config(format!(
            "spacing {spacing_m} m exceeds area side ({} m x {} m)",
            area.width_m, area.height_m
        )));
    }
    let steps = |side: f64| (side / spacing_m + 1e-9).floor() as usize + 1;
    let (nx, ny) = (steps(area.width_m), steps(area.height_m));
    let mut positions = Vec::with_capacity(nx * ny);
    for row in 0..ny {
        let y = row as f64 * spacing_m;
        for k in 0..nx {
            let col = if row % 2 == 0 { k } else { nx - 1 - k };
            positions.push([col as f64 * spacing_m, y]);
        }
    }
    let timestamps = (0..positions.len()).map(|n| n as f64).collect();
    Ok((positions, timestamps))
}
