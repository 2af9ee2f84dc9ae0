use std::fs;
use std::io::Write;
use std::path::Path;

use super::trace::DensityTrace;
use crate::error::{Error, Result};
use crate::lattice::{CountGrid, StateGrid};

/// White, black, mid-gray, light-gray; further states cycle through a few
/// saturated colours.
pub const DEFAULT_PALETTE: [[u8; 3]; 8] = [
    [255, 255, 255],
    [0, 0, 0],
    [128, 128, 128],
    [192, 192, 192],
    [200, 40, 40],
    [40, 120, 200],
    [40, 160, 60],
    [220, 170, 30],
];

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    let mut file = fs::File::create(tmp).map_err(|e| Error::io(tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::io(tmp, e))?;
    file.sync_all().map_err(|e| Error::io(tmp, e))?;
    drop(file);
    fs::rename(tmp, path).map_err(|e| Error::io(path, e))
}

pub fn emit_csv(trace: &DensityTrace, path: &Path) -> Result<()> {
    atomic_write(path, trace.to_csv().as_bytes())
}

/// Binary PPM, one pixel per site, rows top to bottom in `y` order.
pub fn ppm_bytes(grid: &StateGrid, palette: &[[u8; 3]]) -> Result<Vec<u8>> {
    if palette.len() < grid.alphabet() {
        return Err(Error::Config(format!(
            "palette has {} colours for {} states",
            palette.len(),
            grid.alphabet()
        )));
    }
    let g = grid.geometry();
    let mut out = format!("P6\n{} {}\n255\n", g.width(), g.height()).into_bytes();
    out.reserve(3 * g.sites());
    for &s in grid.states() {
        out.extend_from_slice(&palette[s as usize]);
    }
    Ok(out)
}

pub fn emit_snapshot(grid: &StateGrid, palette: &[[u8; 3]], path: &Path) -> Result<()> {
    atomic_write(path, &ppm_bytes(grid, palette)?)
}

/// Count grids are drawn by majority: empty 0, hawks ahead 1, otherwise 2.
pub fn count_snapshot_grid(grid: &CountGrid) -> StateGrid {
    let states = (0..grid.geometry().sites())
        .map(|s| match (grid.hawks(s), grid.doves(s)) {
            (0, 0) => 0,
            (h, d) if h > d => 1,
            _ => 2,
        })
        .collect();
    StateGrid::from_states(*grid.geometry(), 3, states).expect("codes below 3")
}
