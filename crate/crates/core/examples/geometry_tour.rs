//! The planar geometry kernel: homographies, convex polygons with potential
//! areas, quad fitting and quad IoU.
//!
//! `cargo run --example geometry_tour`

use chromatag::geometry::{
    estimate_homography, fit_quad, potential_area, quad_iou, ConvexPolygon, Point2, PotentialArea,
    Quad,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let square = [
        Point2::new(-3.0, -3.0),
        Point2::new(3.0, -3.0),
        Point2::new(3.0, 3.0),
        Point2::new(-3.0, 3.0),
    ];
    let warped = [
        Point2::new(100.0, 80.0),
        Point2::new(190.0, 95.0),
        Point2::new(175.0, 170.0),
        Point2::new(95.0, 160.0),
    ];
    let h = estimate_homography(&square, &warped)?;
    let worst = square
        .iter()
        .zip(&warped)
        .map(|(s, w)| h.project(*s).map(|p| p.dist(*w)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!("homography self-residual: {worst:.2e} px");
    println!("tag center maps to {:?}", h.project(Point2::new(0.0, 0.0))?);

    // a hexagon cut from the square: each diagonal edge can grow back into
    // its missing corner
    let hexagon = ConvexPolygon::from_any_orientation(vec![
        Point2::new(-1.0, -3.0),
        Point2::new(3.0, -3.0),
        Point2::new(3.0, 1.0),
        Point2::new(1.0, 3.0),
        Point2::new(-3.0, 3.0),
        Point2::new(-3.0, -1.0),
    ])?;
    println!("hexagon area {:.1}", hexagon.area());
    for e in 0..hexagon.len() {
        match potential_area(&hexagon, e) {
            PotentialArea::Bounded { area, apex } => {
                println!("  edge {e}: potential {area:.1}, apex ({:.1}, {:.1})", apex.x, apex.y)
            }
            PotentialArea::Unbounded => println!("  edge {e}: unbounded"),
        }
    }

    // sample the warped square's boundary densely and recover its corners
    let mut ring = Vec::new();
    for k in 0..4 {
        let (a, b) = (warped[k], warped[(k + 1) % 4]);
        for t in 0..6 {
            let t = f64::from(t) / 6.0;
            ring.push(a * (1.0 - t) + b * t);
        }
    }
    let fitted = fit_quad(&ConvexPolygon::new(ring)?)?;
    println!("fit_quad corners:");
    for c in fitted.corners {
        println!("  ({:.3}, {:.3})", c.x, c.y);
    }

    let q = Quad::new(warped)?;
    let shifted = Quad::new(warped.map(|p| p + Point2::new(10.0, 0.0)))?;
    println!("IoU with itself {:.3}, shifted by 10 px {:.3}", quad_iou(&q, &q), quad_iou(&q, &shifted));
    Ok(())
}
