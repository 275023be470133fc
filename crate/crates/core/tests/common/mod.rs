//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use ecoscapes::http::{HttpRequest, HttpResponse, MockTransport};
use image::{GrayImage, Luma, Rgb, RgbImage};
use rand::Rng;
use serde_json::json;

pub const ROSSTAL_GEOCODE: &str = include_str!("../../fixtures/nominatim_rosstal.json");
pub const GEO_URL: &str = "http://geo.test/search";
pub const SAT_URL: &str = "http://sat.test/v1";

/// A small manual image set with a vertical river band on the water map.
pub fn write_manual_set(root: &Path, location: &str) {
    let dir = root.join(location);
    std::fs::create_dir_all(&dir).unwrap();
    RgbImage::from_fn(64, 48, |x, y| Rgb([(x * 3) as u8, (y * 4) as u8, 90]))
        .save(dir.join("rgb.png"))
        .unwrap();
    RgbImage::from_fn(64, 48, |x, _| {
        let t = (x * 4) as u8;
        Rgb([255 - t, 255 - t / 2, 255])
    })
    .save(dir.join("moisture.png"))
    .unwrap();
    GrayImage::from_fn(64, 48, |x, y| {
        let river = (20..28).contains(&x);
        let speck = x == 50 && y == 10;
        Luma([if river || speck { 240 } else { 15 }])
    })
    .save(dir.join("water.png"))
    .unwrap();
}

/// Reflectance for the synthetic API scene: the left quarter is water.
pub fn synthetic_reflectance(code: &str, x: usize, width: usize) -> f64 {
    let water = x < width / 4;
    match (code, water) {
        ("B02", _) => 0.05,
        ("B03", true) => 0.08,
        ("B03", false) => 0.06,
        ("B04", _) => 0.07,
        ("B08", true) => 0.02,
        ("B08", false) => 0.30,
        ("B8A", true) => 0.03,
        ("B8A", false) => 0.28,
        ("B11", true) => 0.01,
        ("B11", false) => 0.18,
        _ => 0.0,
    }
}

pub fn process_response(req: &HttpRequest, width: usize, height: usize) -> HttpResponse {
    let body = req.body_json().unwrap();
    let code = body["bands"][0].as_str().unwrap().to_owned();
    let values: Vec<f64> = (0..width * height)
        .map(|i| synthetic_reflectance(&code, i % width, width))
        .collect();
    HttpResponse::json(&json!({
        "width": width,
        "height": height,
        "data_mask": vec![1u8; width * height],
        "bands": { code: values },
    }))
}

pub fn catalog_json(scenes: &[(&str, &str, f64)]) -> serde_json::Value {
    json!({
        "scenes": scenes
            .iter()
            .map(|(id, date, cloud)| json!({"id": id, "sensing_date": date, "cloud_fraction": cloud}))
            .collect::<Vec<_>>()
    })
}

/// Geocoder plus catalog plus process endpoints.
pub fn api_mock(
    scenes: &'static [(&'static str, &'static str, f64)],
    width: usize,
    height: usize,
) -> MockTransport {
    MockTransport::new()
        .route(GEO_URL, |_| HttpResponse::ok(ROSSTAL_GEOCODE))
        .route(&format!("{SAT_URL}/catalog/search"), move |_| {
            HttpResponse::json(&catalog_json(scenes))
        })
        .route(&format!("{SAT_URL}/process"), move |r| {
            process_response(r, width, height)
        })
}

// ---- normalized difference ----

pub fn nd_oracle(a: &[f64], b: &[f64], ma: &[bool], mb: &[bool]) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let s = a[i] + b[i];
        if !ma[i] || !mb[i] || s == 0.0 {
            out.push(None);
        } else {
            out.push(Some((a[i] - b[i]) / s));
        }
    }
    out
}

// ---- morphology ----

pub type Grid = Vec<Vec<bool>>;

pub fn brute_erode(g: &Grid, r: i64) -> Grid {
    window(g, r, true)
}

pub fn brute_dilate(g: &Grid, r: i64) -> Grid {
    window(g, r, false)
}

/// Out-of-frame neighbours are ignored (clipped window).
fn window(g: &Grid, r: i64, all: bool) -> Grid {
    let h = g.len() as i64;
    let w = g[0].len() as i64;
    let mut out = vec![vec![false; w as usize]; h as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = all;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (yy, xx) = (y + dy, x + dx);
                    if yy < 0 || yy >= h || xx < 0 || xx >= w {
                        continue;
                    }
                    let v = g[yy as usize][xx as usize];
                    if all {
                        acc &= v;
                    } else {
                        acc |= v;
                    }
                }
            }
            out[y as usize][x as usize] = acc;
        }
    }
    out
}

/// 8-connected components by flood fill; returns the member lists.
pub fn brute_components(g: &Grid) -> Vec<Vec<(usize, usize)>> {
    let h = g.len();
    let w = g[0].len();
    let mut seen = vec![vec![false; w]; h];
    let mut comps = Vec::new();
    for y0 in 0..h {
        for x0 in 0..w {
            if !g[y0][x0] || seen[y0][x0] {
                continue;
            }
            let mut comp = Vec::new();
            let mut q = VecDeque::from([(y0, x0)]);
            seen[y0][x0] = true;
            while let Some((y, x)) = q.pop_front() {
                comp.push((y, x));
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (yy, xx) = (y as i64 + dy, x as i64 + dx);
                        if yy < 0 || xx < 0 || yy >= h as i64 || xx >= w as i64 {
                            continue;
                        }
                        let (yy, xx) = (yy as usize, xx as usize);
                        if g[yy][xx] && !seen[yy][xx] {
                            seen[yy][xx] = true;
                            q.push_back((yy, xx));
                        }
                    }
                }
            }
            comps.push(comp);
        }
    }
    comps
}

pub fn brute_denoise(g: &Grid, r: i64, min_area_fraction: f64) -> Grid {
    let opened = brute_dilate(&brute_erode(g, r), r);
    let total = (g.len() * g[0].len()) as f64;
    let mut out = vec![vec![false; g[0].len()]; g.len()];
    for comp in brute_components(&opened) {
        if (comp.len() as f64) >= min_area_fraction * total {
            for (y, x) in comp {
                out[y][x] = true;
            }
        }
    }
    out
}

pub fn random_grid<R: Rng>(rng: &mut R, w: usize, h: usize, density: f64) -> Grid {
    (0..h)
        .map(|_| (0..w).map(|_| rng.random_bool(density)).collect())
        .collect()
}

pub fn flatten(g: &Grid) -> Vec<bool> {
    g.iter().flatten().copied().collect()
}

// ---- statistics ----

/// Tukey's depth rule: the median sits at depth (n+1)/2, each hinge at
/// depth (floor(median depth)+1)/2 counted from either end.
pub fn tukey_oracle(values: &[u8]) -> [f64; 5] {
    let mut v: Vec<f64> = values.iter().map(|&x| f64::from(x)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let at_depth = |d: f64, from_top: bool| {
        let pick = |k: f64| {
            let i = k as usize - 1;
            if from_top {
                v[v.len() - 1 - i]
            } else {
                v[i]
            }
        };
        (pick(d.floor()) + pick(d.ceil())) / 2.0
    };
    let median_depth = (n + 1.0) / 2.0;
    let hinge_depth = (median_depth.floor() + 1.0) / 2.0;
    [
        v[0],
        at_depth(hinge_depth, false),
        at_depth(median_depth, false),
        at_depth(hinge_depth, true),
        v[v.len() - 1],
    ]
}

// ---- DAGs ----

/// Random DAG over `n` nodes with ids shuffled so that id order and
/// topological order are unrelated. Returns (ids, hard edges, soft edges),
/// edges as (module, dependency).
pub struct RandomDag {
    pub ids: Vec<String>,
    pub hard: BTreeSet<(String, String)>,
    pub soft: BTreeSet<(String, String)>,
    /// Soft edges pointing at modules that are not registered.
    pub dangling_soft: BTreeSet<(String, String)>,
}

pub fn random_dag<R: Rng>(rng: &mut R, n: usize) -> RandomDag {
    let mut ids: Vec<String> = (0..n).map(|i| format!("m{i}")).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        ids.swap(i, j);
    }
    let mut hard = BTreeSet::new();
    let mut soft = BTreeSet::new();
    for later in 0..n {
        for earlier in 0..later {
            match rng.random_range(0..6) {
                0 | 1 => {
                    hard.insert((ids[later].clone(), ids[earlier].clone()));
                }
                2 => {
                    soft.insert((ids[later].clone(), ids[earlier].clone()));
                }
                _ => {}
            }
        }
    }
    let mut dangling_soft = BTreeSet::new();
    if n > 0 && rng.random_bool(0.3) {
        dangling_soft.insert((ids[rng.random_range(0..n)].clone(), "ghost".to_owned()));
    }
    RandomDag {
        ids,
        hard,
        soft,
        dangling_soft,
    }
}

/// Every hard edge and every soft edge to a registered module goes forward.
pub fn edges_respected(order: &[String], dag: &RandomDag) -> bool {
    let pos: BTreeMap<&str, usize> = order
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    order.len() == dag.ids.len()
        && dag
            .hard
            .iter()
            .chain(&dag.soft)
            .all(|(m, d)| pos[d.as_str()] < pos[m.as_str()])
}

/// Modules transitively reachable from `failed` along reversed hard edges.
pub fn hard_reachability(dag: &RandomDag, failed: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut q = VecDeque::from([failed.to_owned()]);
    while let Some(cur) = q.pop_front() {
        for (m, d) in &dag.hard {
            if *d == cur && out.insert(m.clone()) {
                q.push_back(m.clone());
            }
        }
    }
    out
}

/// Files under `dir` (recursive) mapped to their bytes, keyed by relative path.
pub fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let rel = p.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}
