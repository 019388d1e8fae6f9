//! Gaze-contingent occlusion: how much of a hidden back surface an eye
//! movement reveals, and the two-disc detection stimulus.

use super::scene::{FixationOrbit, ObjectKind, Scene, SceneObject, Texture, RED};
use crate::error::{invalid, Error, Result};
use crate::eye_model::SchematicEyeModel;
use crate::gaze_transform::{
    eye_and_projection_nc, DisplayGeometry, EyeSide, EyeTransforms, GazeState, Ndc,
};

/// Angular diameter of both detection discs.
pub const STIMULUS_SIZE_DEG: f64 = 2.0;

/// Back disc solid red at `absolute_d` diopters, white-noise front disc
/// `relative_d` diopters closer, both subtending 2 degrees, plus the 16 degree
/// fixation orbit.
pub fn make_detection_stimulus(absolute_d: f64, relative_d: f64, seed: u64) -> Result<Scene> {
    if !(absolute_d > 0.0 && absolute_d.is_finite()) {
        return Err(invalid(format!("absolute distance must be positive, got {absolute_d} D")));
    }
    if !(relative_d >= 0.0 && relative_d.is_finite()) {
        return Err(invalid(format!("relative distance must be >= 0, got {relative_d} D")));
    }
    let back = SceneObject::disc(1.0 / absolute_d, STIMULUS_SIZE_DEG, Texture::Solid { color: RED })
        .named("back");
    let front = SceneObject::disc(
        1.0 / (absolute_d + relative_d),
        STIMULUS_SIZE_DEG,
        Texture::Noise { seed, cells: 32 },
    )
    .named("front");
    Ok(Scene {
        objects: vec![back, front],
        fixation_orbit: Some(FixationOrbit::DETECTION),
        ..Scene::default()
    })
}

/// Projected outline of a disc in tangent-plane units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedCircle {
    pub center: Ndc,
    pub radius: f64,
}

impl ProjectedCircle {
    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}

fn project_disc(obj: &SceneObject, t: &EyeTransforms, side: EyeSide, ipd: f64) -> Result<ProjectedCircle> {
    let c = side.center_of_rotation(ipd) + obj.center();
    let radius_m = obj.physical_size_m() / 2.0;
    let rim = c + crate::Vec3::new(radius_m, 0.0, 0.0);
    let to_tan = |p| -> Result<Ndc> { Ok(t.ndc_to_tangent(&t.ndc(p)?)) };
    let center = to_tan(&c)?;
    let radius = (to_tan(&rim)? - center).norm();
    Ok(ProjectedCircle { center, radius })
}

/// Area of the intersection of two circles.
pub fn circle_overlap_area(a: &ProjectedCircle, b: &ProjectedCircle) -> f64 {
    let d = (a.center - b.center).norm();
    let (r1, r2) = (a.radius, b.radius);
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return std::f64::consts::PI * r * r;
    }
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
    let k = ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(0.0).sqrt();
    r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * k
}

fn check_pair(front: &SceneObject, back: &SceneObject) -> Result<()> {
    let coaxial = front.kind == ObjectKind::Disc
        && back.kind == ObjectKind::Disc
        && front.azimuth_deg == back.azimuth_deg
        && front.elevation_deg == back.elevation_deg;
    if !coaxial {
        return Err(invalid("occlusion reveal needs two coaxial discs"));
    }
    if front.depth_m > back.depth_m {
        return Err(invalid("front disc is farther than the back disc"));
    }
    Ok(())
}

/// Fraction of the back disc's projected area left uncovered by the front
/// disc under `gaze_b`, given that the front disc covers it under `gaze_a`.
#[allow(clippy::too_many_arguments)]
pub fn occlusion_reveal_fraction(
    front: &SceneObject,
    back: &SceneObject,
    gaze_a: &GazeState,
    gaze_b: &GazeState,
    model: &SchematicEyeModel,
    geom: &DisplayGeometry,
    side: EyeSide,
) -> Result<f64> {
    occlusion_reveal_fraction_nc(front, back, gaze_a, gaze_b, model.nc_m(), geom, side)
}

#[allow(clippy::too_many_arguments)]
pub fn occlusion_reveal_fraction_nc(
    front: &SceneObject,
    back: &SceneObject,
    gaze_a: &GazeState,
    gaze_b: &GazeState,
    nc_m: f64,
    geom: &DisplayGeometry,
    side: EyeSide,
) -> Result<f64> {
    check_pair(front, back)?;
    let outlines = |g: &GazeState| -> Result<(ProjectedCircle, ProjectedCircle)> {
        let t = eye_and_projection_nc(g, nc_m, geom, side)?;
        Ok((project_disc(front, &t, side, g.ipd)?, project_disc(back, &t, side, g.ipd)?))
    };
    let (fa, ba) = outlines(gaze_a)?;
    let slack = 1e-12 * fa.radius.max(ba.radius);
    if (fa.center - ba.center).norm() + ba.radius > fa.radius + slack {
        return Err(Error::InvalidInput(
            "front disc does not fully occlude the back disc under the reference gaze".into(),
        ));
    }
    let (fb, bb) = outlines(gaze_b)?;
    let hidden = circle_overlap_area(&fb, &bb);
    Ok(((bb.area() - hidden) / bb.area()).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaze_transform::RenderMode;

    fn c(x: f64, y: f64, r: f64) -> ProjectedCircle {
        ProjectedCircle {
            center: Ndc::new(x, y),
            radius: r,
        }
    }

    /// Monte-Carlo oracle on a fine grid.
    fn grid_overlap(a: &ProjectedCircle, b: &ProjectedCircle) -> f64 {
        let n = 1000;
        let (x0, x1) = (a.center.x - a.radius, a.center.x + a.radius);
        let (y0, y1) = (a.center.y - a.radius, a.center.y + a.radius);
        let cell = (x1 - x0) * (y1 - y0) / (n * n) as f64;
        let mut hits = 0usize;
        for i in 0..n {
            for j in 0..n {
                let p = Ndc::new(x0 + (i as f64 + 0.5) / n as f64 * (x1 - x0), y0 + (j as f64 + 0.5) / n as f64 * (y1 - y0));
                if (p - a.center).norm() <= a.radius && (p - b.center).norm() <= b.radius {
                    hits += 1;
                }
            }
        }
        hits as f64 * cell
    }

    #[test]
    fn overlap_formula_matches_grid() {
        let cases = [
            (c(0.0, 0.0, 1.0), c(0.5, 0.2, 0.8)),
            (c(0.0, 0.0, 1.0), c(1.5, 0.0, 1.0)),
            (c(0.0, 0.0, 1.0), c(3.0, 0.0, 1.0)),
            (c(0.0, 0.0, 1.0), c(0.1, 0.0, 0.3)),
        ];
        for (a, b) in cases {
            let exact = circle_overlap_area(&a, &b);
            assert!((exact - grid_overlap(&a, &b)).abs() < 2e-3, "{a:?} {b:?}");
            assert!((exact - circle_overlap_area(&b, &a)).abs() < 1e-12);
        }
    }

    fn pair(abs_d: f64, rel_d: f64) -> (SceneObject, SceneObject) {
        let s = make_detection_stimulus(abs_d, rel_d, 1).unwrap();
        (s.objects[1].clone(), s.objects[0].clone())
    }

    fn g(az: f64) -> GazeState {
        GazeState::toward(EyeSide::Right, az, 0.0, 1.0, 0.064, RenderMode::OCULAR).unwrap()
    }

    #[test]
    fn reveal_examples() {
        let m = SchematicEyeModel::default();
        let geom = DisplayGeometry::default();
        let (f, b) = pair(1.0, 0.5);
        let r = |a: &GazeState, c: &GazeState, f: &SceneObject, b: &SceneObject| {
            occlusion_reveal_fraction(f, b, a, c, &m, &geom, EyeSide::Right).unwrap()
        };
        assert_eq!(r(&g(0.0), &g(0.0), &f, &b), 0.0);
        let (f0, b0) = pair(1.0, 0.0);
        assert_eq!(r(&g(0.0), &g(15.0), &f0, &b0), 0.0);
        let fr: Vec<f64> = [0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&rel| {
                let (f, b) = pair(1.0, rel);
                r(&g(0.0), &g(15.0), &f, &b)
            })
            .collect();
        assert!(fr[0] > 0.0);
        assert!(fr.windows(2).all(|w| w[1] > w[0]), "{fr:?}");
    }

    #[test]
    fn reveal_errors() {
        let m = SchematicEyeModel::default();
        let geom = DisplayGeometry::default();
        let (f, b) = pair(1.0, 0.5);
        let shifted = f.clone().at(3.0, 0.0);
        assert!(occlusion_reveal_fraction(&shifted, &b, &g(0.0), &g(5.0), &m, &geom, EyeSide::Right).is_err());
        assert!(occlusion_reveal_fraction(&b, &f, &g(0.0), &g(5.0), &m, &geom, EyeSide::Right).is_err());
        // reference gaze already reveals the back disc
        let (f, b) = pair(1.0, 1.0);
        assert!(occlusion_reveal_fraction(&f, &b, &g(30.0), &g(0.0), &m, &geom, EyeSide::Right).is_err());
    }

    #[test]
    fn stimulus_geometry() {
        let s = make_detection_stimulus(1.0, 1.0, 4).unwrap();
        assert_eq!(s.objects[0].depth_m, 1.0);
        assert_eq!(s.objects[1].depth_m, 0.5);
        assert!(s.objects.iter().all(|o| o.angular_size_deg == 2.0));
        assert_eq!(s.fixation_orbit.unwrap().radius_deg, 16.0);
        let t = make_detection_stimulus(1.0, 1.0, 5).unwrap();
        assert_ne!(s.objects[1].texture, t.objects[1].texture);
        assert_eq!(s.objects[1].depth_m, t.objects[1].depth_m);
        assert!(make_detection_stimulus(0.0, 1.0, 1).is_err());
        assert!(make_detection_stimulus(1.0, -0.1, 1).is_err());
    }
}
