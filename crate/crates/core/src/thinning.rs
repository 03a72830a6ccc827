//! Zhang–Suen morphological thinning.

pub mod dataset;

use crate::error::{Error, Result};
use crate::raster::BinaryImage;

pub use dataset::{generate_training_pairs, PairEntry, PairManifest, PairStatus};

/// Neighbour offsets P2..P9: N, NE, E, SE, S, SW, W, NW.
const RING: [(i64, i64); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

fn neighbourhood(img: &BinaryImage, x: i64, y: i64) -> [bool; 8] {
    RING.map(|(dx, dy)| img.get_signed(x + dx, y + dy))
}

/// Number of 0→1 transitions walking P2, P3, …, P9, P2.
fn transitions(n: &[bool; 8]) -> usize {
    (0..8).filter(|&i| !n[i] && n[(i + 1) % 8]).count()
}

fn deletable(n: &[bool; 8], first_pass: bool) -> bool {
    let count = n.iter().filter(|&&b| b).count();
    if !(2..=6).contains(&count) || transitions(n) != 1 {
        return false;
    }
    let [p2, _, p4, _, p6, _, p8, _] = *n;
    if first_pass {
        !(p2 && p4 && p6) && !(p4 && p6 && p8)
    } else {
        !(p2 && p4 && p8) && !(p2 && p6 && p8)
    }
}

/// Textbook Zhang–Suen: runs both sub-iterations until a full pass deletes
/// nothing. Pixels outside the image count as background.
///
/// Two known artefacts survive: a component that shrinks to a 2×2 square
/// is erased outright, and diagonal crossings can keep 2×2 blocks. [`thin`]
/// removes both.
pub fn zhang_suen(img: &BinaryImage) -> Result<BinaryImage> {
    let mut out = img.clone();
    zs_until_stable(&mut out, false)?;
    Ok(out)
}

/// Reduces foreground regions to 1-pixel-wide, 8-connected centerlines.
///
/// Zhang–Suen, except that a sub-iteration never deletes all remaining
/// pixels of a component, followed by removal of redundant pixels from
/// 2×2 blocks; the two alternate until neither changes anything.
pub fn thin(img: &BinaryImage) -> BinaryImage {
    // The cap cannot be reached: every non-final pass deletes a pixel.
    try_thin(img).expect("thinning converges")
}

pub fn try_thin(img: &BinaryImage) -> Result<BinaryImage> {
    let mut out = img.clone();
    loop {
        zs_until_stable(&mut out, true)?;
        if !prune_blocks(&mut out) {
            return Ok(out);
        }
    }
}

fn zs_until_stable(out: &mut BinaryImage, keep_components: bool) -> Result<()> {
    let max_passes = out.width() as usize * out.height() as usize + 1;
    let mut marked: Vec<(u32, u32)> = Vec::new();
    for _ in 0..max_passes {
        let mut changed = false;
        for first_pass in [true, false] {
            marked.clear();
            for (x, y) in out.iter_foreground() {
                if deletable(&neighbourhood(out, x as i64, y as i64), first_pass) {
                    marked.push((x, y));
                }
            }
            if keep_components {
                spare_last_pixels(out, &mut marked);
            }
            for &(x, y) in &marked {
                out.set(x, y, false);
            }
            changed |= !marked.is_empty();
        }
        if !changed {
            return Ok(());
        }
    }
    Err(Error::NoConvergence(max_passes))
}

/// Unmarks the first pixel, in raster order, of every 8-connected component
/// whose pixels are all marked.
fn spare_last_pixels(img: &BinaryImage, marked: &mut Vec<(u32, u32)>) {
    if marked.is_empty() {
        return;
    }
    let w = img.width() as usize;
    let label = component_labels(img);
    let components = label.iter().filter(|&&l| l != usize::MAX).max().map_or(0, |m| m + 1);
    let mut size = vec![0usize; components];
    for &l in label.iter().filter(|&&l| l != usize::MAX) {
        size[l] += 1;
    }
    let mut hit = vec![0usize; components];
    for &(x, y) in marked.iter() {
        hit[label[y as usize * w + x as usize]] += 1;
    }
    let mut spared = vec![false; components];
    // `marked` is in raster order, so the first hit is the top-left pixel.
    marked.retain(|&(x, y)| {
        let l = label[y as usize * w + x as usize];
        if hit[l] == size[l] && !spared[l] {
            spared[l] = true;
            return false;
        }
        true
    });
}

/// 8-connected component index per pixel, `usize::MAX` for background.
fn component_labels(img: &BinaryImage) -> Vec<usize> {
    let w = img.width() as i64;
    let mut label = vec![usize::MAX; img.foreground().len()];
    let mut next = 0;
    let mut stack = Vec::new();
    for (x, y) in img.iter_foreground() {
        let i = y as usize * w as usize + x as usize;
        if label[i] != usize::MAX {
            continue;
        }
        label[i] = next;
        stack.push((x as i64, y as i64));
        while let Some((cx, cy)) = stack.pop() {
            for (dx, dy) in RING {
                let (nx, ny) = (cx + dx, cy + dy);
                if img.get_signed(nx, ny) {
                    let j = (ny * w + nx) as usize;
                    if label[j] == usize::MAX {
                        label[j] = next;
                        stack.push((nx, ny));
                    }
                }
            }
        }
        next += 1;
    }
    label
}

/// A pixel whose removal changes no 8-connectivity: its foreground
/// neighbours form one 8-connected group and it has a 4-neighbour in the
/// background.
fn is_simple(n: &[bool; 8]) -> bool {
    let any_background_4 = [0, 2, 4, 6].iter().any(|&i| !n[i]);
    if !any_background_4 {
        return false;
    }
    // Walk the ring; a diagonal neighbour joins its two edge neighbours.
    let mut groups = 0;
    let mut seen = [false; 8];
    for start in 0..8 {
        if !n[start] || seen[start] {
            continue;
        }
        groups += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let steps: &[usize] = if i % 2 == 0 { &[1, 2, 6, 7] } else { &[1, 7] };
            for &s in steps {
                let j = (i + s) % 8;
                if n[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    groups == 1
}

fn in_block(img: &BinaryImage, x: i64, y: i64) -> bool {
    [(-1, -1), (0, -1), (-1, 0), (0, 0)].iter().any(|&(ox, oy)| {
        let (bx, by) = (x + ox, y + oy);
        img.get_signed(bx, by) && img.get_signed(bx + 1, by) && img.get_signed(bx, by + 1) && img.get_signed(bx + 1, by + 1)
    })
}

/// Deletes, one at a time in raster order, simple pixels that sit in a 2×2
/// block and have at least two neighbours. Returns whether anything went.
fn prune_blocks(img: &mut BinaryImage) -> bool {
    let mut changed = false;
    let coords: Vec<(u32, u32)> = img.iter_foreground().collect();
    for (x, y) in coords {
        let (sx, sy) = (x as i64, y as i64);
        if !in_block(img, sx, sy) {
            continue;
        }
        let n = neighbourhood(img, sx, sy);
        if n.iter().filter(|&&b| b).count() >= 2 && is_simple(&n) {
            img.set(x, y, false);
            changed = true;
        }
    }
    changed
}
