//! 8-connected component labeling of binary masks.

use crate::imaging::BinaryMask;

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    width: usize,
    height: usize,
    /// Row-major pixel indices in scan order.
    pixels: Vec<usize>,
    /// Inclusive `(x0, y0, x1, y1)`.
    pub bbox: (usize, usize, usize, usize),
    pub centroid: (f64, f64),
}

impl Component {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    pub fn pixels(&self) -> &[usize] {
        &self.pixels
    }

    /// Raster index of the first pixel in scan order.
    pub fn first_pixel(&self) -> usize {
        self.pixels[0]
    }

    pub fn mask(&self) -> BinaryMask {
        let mut bits = vec![false; self.width * self.height];
        for &i in &self.pixels {
            bits[i] = true;
        }
        BinaryMask::new(self.width, self.height, bits).expect("component shape matches its mask")
    }

    pub fn touches_border(&self) -> bool {
        let (x0, y0, x1, y1) = self.bbox;
        x0 == 0 || y0 == 0 || x1 + 1 == self.width || y1 + 1 == self.height
    }
}

/// Components sorted by area, largest first; equal areas keep scan order.
pub fn connected_components(mask: &BinaryMask) -> Vec<Component> {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let mut seen = vec![false; bits.len()];
    let mut stack = Vec::new();
    let mut out = Vec::new();

    for start in 0..bits.len() {
        if !bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut pixels = Vec::new();
        while let Some(i) = stack.pop() {
            pixels.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if (dx, dy) == (0, 0) || nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if bits[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        pixels.sort_unstable();
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let (mut sx, mut sy) = (0.0, 0.0);
        for &i in &pixels {
            let (x, y) = (i % w, i / w);
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            sx += x as f64;
            sy += y as f64;
        }
        let n = pixels.len() as f64;
        out.push(Component {
            width: w,
            height: h,
            pixels,
            bbox: (x0, y0, x1, y1),
            centroid: (sx / n, sy / n),
        });
    }
    // stable: discovery order is scan order of each component's first pixel
    out.sort_by(|a, b| b.area().cmp(&a.area()));
    out
}
