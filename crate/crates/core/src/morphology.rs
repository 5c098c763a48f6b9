//! Binary morphology and connected components on [`Bitmap`]s.
//!
//! Structuring elements are discs `{(dx, dy) : dx^2 + dy^2 <= r^2}`; radius 1
//! is the 4-neighbour cross. Pixels outside the raster count as unset.

use crate::raster::Bitmap;

/// Offsets of a disc of the given radius.
pub fn disc_offsets(radius: usize) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let mut offsets = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                offsets.push((dx, dy));
            }
        }
    }
    offsets
}

const SQUARE3: [(i64, i64); 9] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (0, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

fn dilate_with(mask: &Bitmap, offsets: &[(i64, i64)]) -> Bitmap {
    let (w, h) = mask.dimensions();
    let mut out = Bitmap::new(w, h);
    for (x, y) in mask.iter_set() {
        for &(dx, dy) in offsets {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                out.set(nx as usize, ny as usize, true);
            }
        }
    }
    out
}

fn erode_with(mask: &Bitmap, offsets: &[(i64, i64)]) -> Bitmap {
    let (w, h) = mask.dimensions();
    Bitmap::from_fn(w, h, |x, y| {
        mask.get(x, y)
            && offsets
                .iter()
                .all(|&(dx, dy)| mask.get_signed(x as i64 + dx, y as i64 + dy))
    })
}

pub fn dilate(mask: &Bitmap, radius: usize) -> Bitmap {
    if radius == 0 {
        return mask.clone();
    }
    dilate_with(mask, &disc_offsets(radius))
}

pub fn erode(mask: &Bitmap, radius: usize) -> Bitmap {
    if radius == 0 {
        return mask.clone();
    }
    erode_with(mask, &disc_offsets(radius))
}

/// Erosion by the 3x3 square (8-neighbourhood).
pub fn erode_square(mask: &Bitmap) -> Bitmap {
    erode_with(mask, &SQUARE3)
}

/// Dilation by the 3x3 square (8-neighbourhood).
pub fn dilate_square(mask: &Bitmap) -> Bitmap {
    dilate_with(mask, &SQUARE3)
}

pub fn open(mask: &Bitmap, radius: usize) -> Bitmap {
    dilate(&erode(mask, radius), radius)
}

pub fn close(mask: &Bitmap, radius: usize) -> Bitmap {
    erode(&dilate(mask, radius), radius)
}

/// Pixels of `mask` with at least one 8-neighbour outside it.
pub fn inner_boundary(mask: &Bitmap) -> Bitmap {
    mask.difference(&erode_square(mask))
}

/// Connected components of the set pixels, 8-connected when `eight` is true.
///
/// Components are listed in the order their first pixel appears in a
/// row-major scan; each holds its pixels in discovery order.
pub fn connected_components(mask: &Bitmap, eight: bool) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = mask.dimensions();
    let mut seen = vec![false; w * h];
    let mut components = Vec::new();
    let neighbours: &[(i64, i64)] = if eight {
        &[
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ]
    } else {
        &[(0, -1), (-1, 0), (1, 0), (0, 1)]
    };
    let mut stack = Vec::new();
    for (sx, sy) in mask.iter_set() {
        if seen[sy * w + sx] {
            continue;
        }
        seen[sy * w + sx] = true;
        let mut component = Vec::new();
        stack.push((sx, sy));
        while let Some((x, y)) = stack.pop() {
            component.push((x, y));
            for &(dx, dy) in neighbours {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if mask.get_signed(nx, ny) {
                    let i = ny as usize * w + nx as usize;
                    if !seen[i] {
                        seen[i] = true;
                        stack.push((nx as usize, ny as usize));
                    }
                }
            }
        }
        components.push(component);
    }
    components
}

/// Drops 8-connected components with fewer than `min_size` pixels.
pub fn remove_small_components(mask: &Bitmap, min_size: usize) -> Bitmap {
    if min_size <= 1 {
        return mask.clone();
    }
    let mut out = mask.clone();
    for component in connected_components(mask, true) {
        if component.len() < min_size {
            for (x, y) in component {
                out.set(x, y, false);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(w: usize, h: usize, x0: usize, y0: usize, side: usize) -> Bitmap {
        Bitmap::from_fn(w, h, |x, y| {
            (x0..x0 + side).contains(&x) && (y0..y0 + side).contains(&y)
        })
    }

    #[test]
    fn disc_of_radius_one_is_a_cross() {
        assert_eq!(disc_offsets(1).len(), 5);
        assert_eq!(disc_offsets(2).len(), 13);
    }

    #[test]
    fn erode_then_dilate_square_by_one_restores_it() {
        let s = square(20, 20, 5, 5, 8);
        assert_eq!(dilate_square(&erode_square(&s)), s);
        assert_eq!(erode_square(&s).count(), 36);
    }

    #[test]
    fn border_pixels_erode_away() {
        let full = Bitmap::from_fn(4, 4, |_, _| true);
        assert_eq!(erode_square(&full).count(), 4);
    }

    #[test]
    fn diagonal_neck_joins_under_eight_connectivity() {
        let b = Bitmap::from_fn(4, 4, |x, y| x == y);
        assert_eq!(connected_components(&b, true).len(), 1);
        assert_eq!(connected_components(&b, false).len(), 4);
    }

    #[test]
    fn small_components_are_removed() {
        let mut b = square(30, 30, 2, 2, 10);
        b.set(25, 25, true);
        b.set(26, 25, true);
        let cleaned = remove_small_components(&b, 10);
        assert_eq!(cleaned, square(30, 30, 2, 2, 10));
    }

    #[test]
    fn boundary_of_square_is_its_ring() {
        let s = square(10, 10, 2, 2, 5);
        assert_eq!(inner_boundary(&s).count(), 16);
    }
}
