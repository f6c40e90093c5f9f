use proptest::prelude::*;

use wireframe_core::annotate::{derive_junctions, render_target_heatmap, AnnotatedScene};
use wireframe_core::construct::{
    binarize, construct_wireframe, match_rays, rays_of, recover_unmatched, support_ratio,
    ConstructionParams,
};
use wireframe_core::eval::{
    junction_pr, line_pixel_pr, match_points, max_matching_exhaustive, EvalConfig, PrCounts,
};
use wireframe_core::geom::{
    build_incidence, junction_adjacency, segment_adjacency, segment_intersection, Branch,
    Intersection, Junction, Point, Segment,
};
use wireframe_core::gridcodec::{
    angle_to_bin, bin_to_angle, decode, encode, GridConfig, GridEncoding,
};
use wireframe_core::hough::{hough_segments, HoughParams};
use wireframe_core::loss::{
    full_mask, heatmap_l2_loss, junction_loss, junction_loss_with_grad, LossWeights,
};
use wireframe_core::raster::{rasterize_segment, BinaryMask, HeatMap};
use wireframe_core::synth::{random_scene, SceneParams};

fn point(lo: f64, hi: f64) -> impl Strategy<Value = Point> {
    (lo..hi, lo..hi).prop_map(|(x, y)| Point::new(x, y))
}

fn segment(lo: f64, hi: f64) -> impl Strategy<Value = Segment> {
    (point(lo, hi), point(lo, hi))
        .prop_filter("non-degenerate", |(a, b)| a.distance(*b) > 1e-3)
        .prop_map(|(a, b)| Segment::new(a, b).unwrap())
}

fn scene(size: usize, max_lines: usize) -> impl Strategy<Value = AnnotatedScene> {
    let s = size as f64;
    prop::collection::vec(segment(0.0, s), 0..=max_lines)
        .prop_map(move |lines| AnnotatedScene::new(size, size, lines).unwrap())
}

fn line_distance(s: &Segment, q: Point) -> f64 {
    (q - s.a).cross(s.direction()).abs() / s.length()
}

fn in_box(s: &Segment, q: Point, slack: f64) -> bool {
    let (x0, x1) = (s.a.x.min(s.b.x), s.a.x.max(s.b.x));
    let (y0, y1) = (s.a.y.min(s.b.y), s.a.y.max(s.b.y));
    q.x >= x0 - slack && q.x <= x1 + slack && q.y >= y0 - slack && q.y <= y1 + slack
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn intersection_is_symmetric_and_on_both_lines(s1 in segment(-100.0, 100.0), s2 in segment(-100.0, 100.0)) {
        let ab = segment_intersection(&s1, &s2);
        let ba = segment_intersection(&s2, &s1);
        prop_assert_eq!(ab, ba);
        if let Intersection::Point(q) = ab {
            prop_assert!(line_distance(&s1, q) <= 1e-9);
            prop_assert!(line_distance(&s2, q) <= 1e-9);
            prop_assert!(in_box(&s1, q, 1e-9) && in_box(&s2, q, 1e-9));
        }
    }

    #[test]
    fn adjacency_is_symmetric_psd_with_degree_diagonal(
        centers in prop::collection::vec(point(0.0, 20.0), 0..6),
        segs in prop::collection::vec(segment(0.0, 20.0), 0..6),
        tol in 0.0f64..3.0,
        x in prop::collection::vec(-3i64..=3, 6),
    ) {
        let w = build_incidence(&centers, &segs, tol);
        for (adj, n, degree) in [
            (junction_adjacency(&w), centers.len(), (0..centers.len()).map(|i| w.row(i).iter().map(|&v| v as u32).sum()).collect::<Vec<u32>>()),
            (segment_adjacency(&w), segs.len(), (0..segs.len()).map(|m| (0..centers.len()).map(|i| w.get(i, m) as u32).sum()).collect()),
        ] {
            prop_assert_eq!((adj.rows, adj.cols), (n, n));
            let mut quad = 0i64;
            for i in 0..n {
                prop_assert_eq!(adj.get(i, i), degree[i]);
                for j in 0..n {
                    prop_assert_eq!(adj.get(i, j), adj.get(j, i));
                    quad += x[i] * x[j] * adj.get(i, j) as i64;
                }
            }
            prop_assert!(quad >= 0);
        }
    }

    #[test]
    fn incidence_is_monotone_in_tol(
        centers in prop::collection::vec(point(0.0, 20.0), 0..6),
        segs in prop::collection::vec(segment(0.0, 20.0), 0..6),
        t1 in 0.0f64..3.0,
        dt in 0.0f64..3.0,
    ) {
        let a = build_incidence(&centers, &segs, t1);
        let b = build_incidence(&centers, &segs, t1 + dt);
        prop_assert!(a.data.iter().zip(&b.data).all(|(x, y)| x <= y));
    }

    #[test]
    fn derived_junctions_are_well_formed(sc in scene(64, 8), r in 0.5f64..4.0) {
        for j in derive_junctions(&sc, r) {
            let near = sc.lines.iter().filter(|s| s.distance_to_point(j.center) <= r + 1e-9).count();
            prop_assert!(near >= 2);
            prop_assert!(j.order() >= 2);
            for (i, a) in j.branches.iter().enumerate() {
                prop_assert!((0.0..360.0).contains(&a.angle));
                for b in &j.branches[i + 1..] {
                    let d = (a.angle - b.angle).abs();
                    prop_assert!(d.min(360.0 - d) > 1e-6);
                }
            }
        }
    }

    #[test]
    fn heatmap_support_and_values(sc in scene(48, 6)) {
        let h = render_target_heatmap(&sc);
        let mut union = BinaryMask::new(sc.width, sc.height);
        for s in &sc.lines {
            for (x, y) in rasterize_segment(s, sc.width, sc.height) {
                union.set(x, y, true);
            }
        }
        let lengths: Vec<f64> = sc.lines.iter().map(|s| s.length()).collect();
        for y in 0..sc.height {
            for x in 0..sc.width {
                let v = h.get(x, y);
                prop_assert_eq!(v != 0.0, union.get(x, y));
                prop_assert!(v == 0.0 || lengths.contains(&v));
            }
        }
    }

    #[test]
    fn bin_maps_are_inverse(theta in 0.0f64..360.0, k in 0usize..15, frac in -0.5f64..0.5) {
        let (bin, res) = angle_to_bin(theta, 15);
        let back = bin_to_angle(bin, res, 15);
        let d = (back - theta).abs();
        prop_assert!(d.min(360.0 - d) <= 1e-9);

        let res = frac * 24.0;
        let (k2, r2) = angle_to_bin(bin_to_angle(k, res, 15), 15);
        prop_assert_eq!(k2, k);
        prop_assert!((r2 - res).abs() <= 1e-9);
    }
}

/// Junction sets with at most one junction per cell and at most one branch
/// per bin.
fn collision_free(cfg: GridConfig, max_junctions: usize) -> impl Strategy<Value = Vec<Junction>> {
    let cells = cfg.cell_count();
    let bins = cfg.bins;
    prop::collection::btree_set(0..cells, 0..=max_junctions.min(cells))
        .prop_flat_map(move |chosen| {
            let per_junction = (
                0.0f64..1.0,
                0.0f64..1.0,
                prop::collection::btree_set(0..bins, 1..=bins.min(5)),
                prop::collection::vec(-0.49f64..0.49, bins),
            );
            (
                Just(chosen),
                prop::collection::vec(per_junction, max_junctions.min(cells) + 1),
            )
        })
        .prop_map(move |(chosen, params)| {
            chosen
                .iter()
                .zip(params)
                .map(|(&idx, (fx, fy, used, fracs))| {
                    let (row, col) = (idx / cfg.grid_w, idx % cfg.grid_w);
                    let center = Point::new(
                        (col as f64 + fx) * cfg.cell_width(),
                        (row as f64 + fy) * cfg.cell_height(),
                    );
                    let branches = used
                        .iter()
                        .map(|&b| {
                            Branch::new(bin_to_angle(b, fracs[b] * cfg.bin_width(), cfg.bins), 1.0)
                        })
                        .collect();
                    Junction::new(center, branches, 1.0)
                })
                .collect()
        })
}

fn small_grid() -> GridConfig {
    GridConfig {
        grid_h: 4,
        grid_w: 5,
        bins: 15,
        image_w: 100,
        image_h: 80,
    }
}

fn cmp_row_major(cfg: &GridConfig, a: &Junction, b: &Junction) -> std::cmp::Ordering {
    let ca = cfg.cell_of(a.center).unwrap();
    let cb = cfg.cell_of(b.center).unwrap();
    ca.cmp(&cb)
}

/// Grid with every confidence strictly inside the clamp range.
fn random_prediction(cfg: GridConfig) -> impl Strategy<Value = GridEncoding> {
    let k = cfg.bins;
    let cell = (
        0.05f64..0.95,
        -6.0f64..6.0,
        -6.0f64..6.0,
        prop::collection::vec(0.05f64..0.95, k),
        prop::collection::vec(-20.0f64..20.0, k),
    );
    prop::collection::vec(cell, cfg.cell_count()).prop_map(move |cells| {
        let mut g = GridEncoding::zeros(cfg);
        for (c, (cc, dx, dy, bc, br)) in g.cells.iter_mut().zip(cells) {
            c.center_conf = cc;
            c.dx = dx;
            c.dy = dy;
            c.bin_conf = bc;
            c.bin_residual = br;
        }
        g
    })
}

fn loss_weights() -> impl Strategy<Value = LossWeights> {
    (0.1f64..2.0, 0.01f64..1.0, 0.1f64..2.0, 0.01f64..1.0).prop_map(|(a, b, c, d)| LossWeights {
        conf_c: a,
        loc_c: b,
        conf_b: c,
        loc_b: d,
    })
}

/// Parameter `field` of cell `i`: center confidence, dx, dy, then the bin
/// confidences, then the bin residuals.
fn field_mut(g: &mut GridEncoding, i: usize, field: usize) -> &mut f64 {
    let k = g.config.bins;
    let c = &mut g.cells[i];
    match field {
        0 => &mut c.center_conf,
        1 => &mut c.dx,
        2 => &mut c.dy,
        f if f < 3 + k => &mut c.bin_conf[f - 3],
        f => &mut c.bin_residual[f - 3 - k],
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_round_trip(js in collision_free(small_grid(), 8), tau in 0.0f64..0.99) {
        let cfg = small_grid();
        let enc = encode(&js, &cfg).unwrap();
        let dec = decode(&enc, tau, tau);
        prop_assert_eq!(dec.len(), js.len());
        let mut expected = js.clone();
        expected.sort_by(|a, b| cmp_row_major(&cfg, a, b));
        for (d, e) in dec.iter().zip(&expected) {
            prop_assert!(d.center.distance(e.center) <= 1e-9);
            prop_assert!(d.order() <= cfg.bins);
            prop_assert_eq!(d.order(), e.order());
            let mut want: Vec<f64> = e.branches.iter().map(|b| b.angle).collect();
            want.sort_by(f64::total_cmp);
            for (got, w) in d.branches.iter().zip(&want) {
                let diff = (got.angle - w).abs();
                prop_assert!(diff.min(360.0 - diff) <= 1e-9);
            }
        }
    }

    #[test]
    fn encode_is_injective(a in collision_free(small_grid(), 4), b in collision_free(small_grid(), 4)) {
        let cfg = small_grid();
        let (ea, eb) = (encode(&a, &cfg).unwrap(), encode(&b, &cfg).unwrap());
        if ea == eb {
            let mut sa = a.clone();
            let mut sb = b.clone();
            sa.sort_by(|x, y| cmp_row_major(&cfg, x, y));
            sb.sort_by(|x, y| cmp_row_major(&cfg, x, y));
            prop_assert_eq!(sa.len(), sb.len());
            for (x, y) in sa.iter().zip(&sb) {
                prop_assert!(x.center.distance(y.center) <= 1e-9);
            }
        }
    }

    #[test]
    fn loss_terms_and_weighted_sum(pred in random_prediction(small_grid()), js in collision_free(small_grid(), 4), w in loss_weights()) {
        let mask = full_mask(&pred);
        let r = junction_loss(&pred, &js, &w, &mask).unwrap();
        for t in [r.conf_c, r.loc_c, r.conf_b, r.loc_b] {
            prop_assert!(t >= 0.0 && t.is_finite());
        }
        let sum = w.conf_c * r.conf_c + w.loc_c * r.loc_c + w.conf_b * r.conf_b + w.loc_b * r.loc_b;
        prop_assert!((r.total - sum).abs() <= 1e-12 * sum.abs().max(1.0));

        let mut rev = js.clone();
        rev.reverse();
        prop_assert_eq!(r, junction_loss(&pred, &rev, &w, &mask).unwrap());
    }

    #[test]
    fn loss_scales_linearly(pred in random_prediction(small_grid()), js in collision_free(small_grid(), 4), w in loss_weights(), s in prop::sample::select(vec![0.5f64, 2.0, 4.0, 0.25])) {
        let mask = full_mask(&pred);
        let (r1, g1) = junction_loss_with_grad(&pred, &js, &w, &mask).unwrap();
        let (r2, g2) = junction_loss_with_grad(&pred, &js, &w.scaled(s), &mask).unwrap();
        prop_assert_eq!(r2.total, r1.total * s);
        for (a, b) in g1.cells.iter().zip(&g2.cells) {
            prop_assert_eq!(b.center_conf, a.center_conf * s);
            prop_assert_eq!(b.dx, a.dx * s);
            prop_assert_eq!(b.dy, a.dy * s);
            for k in 0..a.bin_conf.len() {
                prop_assert_eq!(b.bin_conf[k], a.bin_conf[k] * s);
                prop_assert_eq!(b.bin_residual[k], a.bin_residual[k] * s);
            }
        }
    }

    #[test]
    fn loss_gradient_matches_finite_differences(pred in random_prediction(small_grid()), js in collision_free(small_grid(), 4), w in loss_weights()) {
        let mask = full_mask(&pred);
        let (_, grad) = junction_loss_with_grad(&pred, &js, &w, &mask).unwrap();
        let h = 1e-5;
        let total = |g: &GridEncoding| junction_loss(g, &js, &w, &mask).unwrap().total;
        let k = pred.config.bins;
        for i in 0..pred.cells.len() {
            for field in 0..(3 + 2 * k) {
                let base = *field_mut(&mut pred.clone(), i, field);
                let analytic = *field_mut(&mut grad.clone(), i, field);
                let mut plus = pred.clone();
                let mut minus = pred.clone();
                *field_mut(&mut plus, i, field) = base + h;
                *field_mut(&mut minus, i, field) = base - h;
                let fd = (total(&plus) - total(&minus)) / (2.0 * h);
                prop_assert!(rel_err(analytic, fd) <= 1e-4 || (analytic - fd).abs() <= 1e-9,
                    "cell {} field {}: analytic {} fd {}", i, field, analytic, fd);
            }
        }
    }

    #[test]
    fn heatmap_loss_is_symmetric(vals in prop::collection::vec((0.0f64..50.0, 0.0f64..50.0), 12)) {
        let (a, b): (Vec<f64>, Vec<f64>) = vals.into_iter().unzip();
        let a = HeatMap::from_values(4, 3, a).unwrap();
        let b = HeatMap::from_values(4, 3, b).unwrap();
        prop_assert_eq!(heatmap_l2_loss(&a, &b).unwrap().loss, heatmap_l2_loss(&b, &a).unwrap().loss);
    }
}

fn gt_inputs(seed: u64) -> (AnnotatedScene, Vec<Junction>, HeatMap) {
    let params = SceneParams {
        width: 128,
        height: 128,
        min_segments: 3,
        max_segments: 10,
        max_len: 80.0,
        ..SceneParams::default()
    };
    let sc = random_scene(&params, seed);
    let js = derive_junctions(&sc, 2.0);
    let h = render_target_heatmap(&sc);
    (sc, js, h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn construction_is_consistent(seed in 0u64..10_000, omega in prop::sample::select(vec![0.5f64, 10.0, 60.0])) {
        let (_, js, h) = gt_inputs(seed);
        let params = ConstructionParams { omega, ..ConstructionParams::default() };
        let wf = construct_wireframe(&js, &h, &params).unwrap();
        prop_assert_eq!(wf.segments.len(), wf.endpoints.len());
        for (s, &(a, b)) in wf.segments.iter().zip(&wf.endpoints) {
            prop_assert_eq!(s.a, wf.junctions[a].center);
            prop_assert_eq!(s.b, wf.junctions[b].center);
        }
        let centers: Vec<Point> = wf.junctions.iter().map(|j| j.center).collect();
        prop_assert_eq!(&wf.incidence, &build_incidence(&centers, &wf.segments, 1.0));
        prop_assert_eq!(&wf, &construct_wireframe(&js, &h, &params).unwrap());
    }

    #[test]
    fn each_ray_matches_at_most_once(seed in 0u64..10_000) {
        let (_, js, _) = gt_inputs(seed);
        let m = match_rays(&js, 12.0);
        for (r, p) in m.partner.iter().enumerate() {
            if let Some(q) = *p {
                prop_assert_eq!(m.partner[q], Some(r));
                prop_assert!(m.rays[q].junction != m.rays[r].junction);
            }
        }
        let mut pairs = m.pairs.clone();
        pairs.sort();
        pairs.dedup();
        prop_assert_eq!(pairs.len(), m.pairs.len());
        prop_assert_eq!(2 * m.pairs.len(), m.partner.iter().flatten().count());
    }

    #[test]
    fn kappa_in_unit_interval_and_monotone_in_omega(seed in 0u64..10_000, lo in 0.0f64..40.0, dhi in 0.0f64..40.0) {
        let (_, js, h) = gt_inputs(seed);
        let (m_lo, m_hi) = (binarize(&h, lo), binarize(&h, lo + dhi));
        prop_assert!(m_hi.bits.iter().zip(&m_lo.bits).all(|(a, b)| !*a || *b));
        let params = ConstructionParams::default();
        let rays = rays_of(&js);
        let rec = recover_unmatched(&rays, &m_lo, &[], &params);
        for (s, k) in rec.segments.iter().zip(&rec.kappas) {
            if let Some(k) = k {
                prop_assert!((0.0..=1.0).contains(k));
            }
            prop_assert!(support_ratio(s, &m_hi) <= support_ratio(s, &m_lo));
        }
    }

    #[test]
    fn hough_output_properties(seed in 0u64..10_000) {
        let (sc, _, _) = gt_inputs(seed);
        let mut mask = BinaryMask::new(sc.width, sc.height);
        for s in &sc.lines {
            for (x, y) in rasterize_segment(s, sc.width, sc.height) {
                mask.set(x, y, true);
            }
        }
        let p = HoughParams { seed, ..HoughParams::default() };
        let out = hough_segments(&mask, &p).unwrap();
        prop_assert_eq!(&out, &hough_segments(&mask, &p).unwrap());
        let set: Vec<(usize, usize)> = mask.pixels().collect();
        for s in &out {
            prop_assert!(s.length() >= p.min_length);
            let px = rasterize_segment(s, sc.width, sc.height);
            let near = px.iter().filter(|&&(x, y)| set.iter().any(|&(mx, my)| {
                let (dx, dy) = (mx as f64 - x as f64, my as f64 - y as f64);
                dx * dx + dy * dy <= 4.0
            })).count();
            prop_assert!(near as f64 >= 0.9 * px.len() as f64);
        }
    }
}

fn points(max: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(point(0.0, 10.0), 0..=max)
}

/// At most `max` points in a 16 x 16 window, in units of the tolerance.
fn sparse_points(max: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(point(0.0, 16.0), 0..=max)
}

#[test]
fn greedy_can_lose_two_matches_in_dense_clusters() {
    let g = [
        Point::new(7.164833104184401, 5.485159711495511),
        Point::new(5.175149260113956, 6.876007421126689),
        Point::new(5.965869671745574, 6.527050397286097),
        Point::new(1.8922686017678199, 5.885335717490169),
        Point::new(0.0, 4.303003589092441),
    ];
    let q = [
        Point::new(0.6355318283631651, 8.335763725506245),
        Point::new(7.048016377811794, 5.184438034436222),
        Point::new(9.105255914603473, 4.073288727426403),
        Point::new(2.490442827703717, 7.446021129476474),
    ];
    let tol = 2.874485315503777;
    assert_eq!(match_points(&g, &q, tol), 2);
    assert_eq!(max_matching_exhaustive(&g, &q, tol).unwrap(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn match_count_bounds_and_monotone(g in points(8), q in points(8), tol in 0.0f64..3.0, dt in 0.0f64..3.0) {
        let m = match_points(&g, &q, tol);
        prop_assert!(m <= g.len().min(q.len()));
        prop_assert!(match_points(&g, &q, tol + dt) >= m);
        // greedy is a maximal matching
        let best = max_matching_exhaustive(&g, &q, tol).unwrap();
        prop_assert!(m <= best && best <= 2 * m);
    }

    #[test]
    fn greedy_within_one_at_evaluation_density(g in sparse_points(8), q in sparse_points(8)) {
        let tol = 1.0;
        let m = match_points(&g, &q, tol);
        let best = max_matching_exhaustive(&g, &q, tol).unwrap();
        prop_assert!(m <= best && best - m <= 1);
    }

    #[test]
    fn junction_pr_properties(g in points(8), q in points(8)) {
        let cfg = EvalConfig::default();
        let js = |v: &[Point]| v.iter().map(|p| Junction::with_angles(*p, &[0.0, 90.0])).collect::<Vec<_>>();
        let c = junction_pr(&js(&g), &js(&q), &cfg, 100, 100);
        for v in [c.precision(), c.recall()] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if !q.is_empty() {
            prop_assert_eq!(c.precision() * q.len() as f64, c.matches as f64);
        }
        if !g.is_empty() {
            prop_assert_eq!(c.recall() * g.len() as f64, c.matches as f64);
            let same = junction_pr(&js(&g), &js(&g), &cfg, 100, 100);
            prop_assert_eq!((same.precision(), same.recall()), (1.0, 1.0));
        }
    }

    #[test]
    fn line_pr_order_and_split_invariance(
        segs in prop::collection::vec(((2i32..60, 2i32..60), (-3i32..=3, -3i32..=3), 2i32..12, 1i32..11), 1..5),
        pred in prop::collection::vec(segment(0.0, 64.0), 0..4),
    ) {
        let cfg = EvalConfig::default();
        // lattice segments split at a lattice point on them
        let mut whole = Vec::new();
        let mut halves = Vec::new();
        for ((x0, y0), (dx, dy), n, cut) in segs {
            let end = (x0 + n * dx, y0 + n * dy);
            if (dx, dy) == (0, 0) || !(0..64).contains(&end.0) || !(0..64).contains(&end.1) {
                continue;
            }
            let cut = cut.min(n - 1);
            let at = |t: i32| Point::new((x0 + t * dx) as f64, (y0 + t * dy) as f64);
            whole.push(Segment::new(at(0), at(n)).unwrap());
            halves.push(Segment::new(at(0), at(cut)).unwrap());
            halves.push(Segment::new(at(cut), at(n)).unwrap());
        }
        let base = line_pixel_pr(&whole, &pred, &cfg, 64, 64);
        prop_assert_eq!(base, line_pixel_pr(&halves, &pred, &cfg, 64, 64));
        let mut rev = whole.clone();
        rev.reverse();
        let mut prev = pred.clone();
        prev.reverse();
        prop_assert_eq!(base, line_pixel_pr(&rev, &prev, &cfg, 64, 64));
    }
}
