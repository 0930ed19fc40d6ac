//! Map figures: renders a costmap raster to a binary PPM (P6) with planned
//! paths and registered footprints drawn on top.
//!
//! Image orientation matches the PGM writer: top row is the grid's north
//! edge. Free cells render light, lethal cells dark.

use crate::map::{bresenham, GridGeometry, ObjectRegistry, OccupancyGrid};

pub type Rgb = [u8; 3];

pub const PATH_COLORS: [(&str, Rgb); 2] = [("metric", [220, 40, 40]), ("semantic", [30, 120, 220])];
const FOOTPRINT_COLOR: Rgb = [40, 160, 60];

pub struct MapImage {
    pub width: u32,
    pub height: u32,
    pixels: Vec<u8>,
    geom: GridGeometry,
}

impl MapImage {
    /// Grayscale base layer: pixel = 255 - cell value.
    pub fn from_grid(grid: &OccupancyGrid) -> Self {
        let geom = grid.geometry().clone();
        let mut pixels = vec![0u8; geom.len() * 3];
        for j in 0..geom.height {
            for i in 0..geom.width {
                let v = 255 - grid.value_at(i, j);
                let p = Self::pixel_index(&geom, i, j);
                pixels[p..p + 3].copy_from_slice(&[v, v, v]);
            }
        }
        Self {
            width: geom.width,
            height: geom.height,
            pixels,
            geom,
        }
    }

    fn pixel_index(geom: &GridGeometry, i: u32, j: u32) -> usize {
        // north-up flip
        let row = geom.height - 1 - j;
        ((row * geom.width + i) * 3) as usize
    }

    fn put(&mut self, i: i64, j: i64, color: Rgb) {
        if i < 0 || j < 0 || i >= self.geom.width as i64 || j >= self.geom.height as i64 {
            return;
        }
        let p = Self::pixel_index(&self.geom, i as u32, j as u32);
        self.pixels[p..p + 3].copy_from_slice(&color);
    }

    fn put_dot(&mut self, i: i64, j: i64, color: Rgb) {
        for dj in -1..=1 {
            for di in -1..=1 {
                self.put(i + di, j + dj, color);
            }
        }
    }

    fn cell_of(&self, p: [f64; 2]) -> (i64, i64) {
        (
            ((p[0] - self.geom.origin[0]) / self.geom.resolution).floor() as i64,
            ((p[1] - self.geom.origin[1]) / self.geom.resolution).floor() as i64,
        )
    }

    /// Draws a polyline of map-frame waypoints.
    pub fn draw_path(&mut self, waypoints: &[[f64; 2]], color: Rgb) {
        for pair in waypoints.windows(2) {
            let a = self.cell_of(pair[0]);
            let b = self.cell_of(pair[1]);
            for (i, j) in bresenham(a, b) {
                self.put_dot(i, j, color);
            }
        }
        if let Some(first) = waypoints.first() {
            let (i, j) = self.cell_of(*first);
            self.put_dot(i, j, color);
        }
    }

    /// Outlines every registered footprint.
    pub fn draw_registry(&mut self, registry: &ObjectRegistry) {
        for rec in registry.records() {
            let vs = rec.footprint.vertices();
            for k in 0..vs.len() {
                let a = self.cell_of(vs[k]);
                let b = self.cell_of(vs[(k + 1) % vs.len()]);
                for (i, j) in bresenham(a, b) {
                    self.put(i, j, FOOTPRINT_COLOR);
                }
            }
        }
    }

    /// Binary PPM (P6) bytes.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Parses the run's paths.csv ("map,index,x,y") back into named waypoint
/// lists, preserving per-path order.
pub fn parse_paths_csv(text: &str) -> Vec<(String, Vec<[f64; 2]>)> {
    let mut out: Vec<(String, Vec<[f64; 2]>)> = Vec::new();
    for line in text.lines().skip(1) {
        let mut cols = line.split(',');
        let (Some(name), Some(_), Some(x), Some(y)) =
            (cols.next(), cols.next(), cols.next(), cols.next())
        else {
            continue;
        };
        let (Ok(x), Ok(y)) = (x.parse::<f64>(), y.parse::<f64>()) else {
            continue;
        };
        match out.iter_mut().find(|(n, _)| n == name) {
            Some((_, pts)) => pts.push([x, y]),
            None => out.push((name.to_string(), vec![[x, y]])),
        }
    }
    out
}

pub fn path_color(name: &str) -> Rgb {
    PATH_COLORS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| *c)
        .unwrap_or([200, 120, 30])
}
