use crate::camera::Camera;
use crate::geometry::{Box3D, Rect2};

/// Tight axis-aligned image rectangle of the box corners in front of the
/// near plane, clipped to the image. `None` when every corner is behind the
/// near plane or the clipped rectangle is empty.
pub fn project_box(bbox: &Box3D, cam: &Camera) -> Option<Rect2> {
    let mut rect: Option<Rect2> = None;
    for corner in bbox.corners() {
        let pc = cam.to_camera(&corner);
        if pc.z <= cam.near_clip {
            continue;
        }
        let uv = cam.project(&pc);
        rect = Some(match rect {
            None => Rect2::new(uv.x, uv.y, uv.x, uv.y),
            Some(r) => Rect2::new(r.min_x.min(uv.x), r.min_y.min(uv.y), r.max_x.max(uv.x), r.max_y.max(uv.y)),
        });
    }
    let bounds = Rect2::new(-0.5, -0.5, cam.width as f64 - 0.5, cam.height as f64 - 0.5);
    let clipped = rect?.intersection(&bounds);
    (clipped.max_x > clipped.min_x && clipped.max_y > clipped.min_y).then_some(clipped)
}

/// Objects (2D box, camera depth) that lie at least `fraction` inside the
/// agent's 2D box while being farther than the agent.
pub fn count_fully_occluded(agent: &Rect2, agent_depth: f64, others: &[(Rect2, f64)], fraction: f64) -> usize {
    others
        .iter()
        .filter(|(r, depth)| {
            let area = r.area();
            area > 0.0 && agent.intersection(r).area() >= fraction * area && agent_depth < *depth
        })
        .count()
}

/// Mean IoU between the agent's 2D box and the existing boxes, minus
/// `penalty` per fully occluded object. Zero with no existing boxes.
pub fn occlusion_score(agent: &Rect2, others: &[Rect2], fully_occluded: usize, penalty: f64) -> f64 {
    if others.is_empty() {
        return 0.0;
    }
    let mean = others.iter().map(|r| agent.iou(r)).sum::<f64>() / others.len() as f64;
    mean - penalty * fully_occluded as f64
}

/// Occlusion score of `agent_box` among `existing` as seen by `cam`.
pub fn occlusion_in_camera(
    agent_box: &Box3D,
    existing: &[Box3D],
    cam: &Camera,
    penalty: f64,
    fraction: f64,
) -> f64 {
    let Some(agent_rect) = project_box(agent_box, cam) else {
        return 0.0;
    };
    let agent_depth = cam.to_camera(&agent_box.center).z;
    let others: Vec<(Rect2, f64)> = existing
        .iter()
        .filter_map(|b| project_box(b, cam).map(|r| (r, cam.to_camera(&b.center).z)))
        .collect();
    let full = count_fully_occluded(&agent_rect, agent_depth, &others, fraction);
    let rects: Vec<Rect2> = others.into_iter().map(|(r, _)| r).collect();
    occlusion_score(&agent_rect, &rects, full, penalty)
}

#[cfg(test)]
mod tests {
    use nalgebra::Vector3;

    use super::*;
    use crate::gaussian::RigidTransform;

    fn cam() -> Camera {
        Camera::new("c", 100.0, 100.0, 64.0, 48.0, 128, 96, 0.1, RigidTransform::identity()).unwrap()
    }

    #[test]
    fn box_behind_camera_is_none() {
        let b = Box3D::new(Vector3::new(0.0, 0.0, -5.0), Vector3::repeat(1.0), 0.0, "x");
        assert_eq!(project_box(&b, &cam()), None);
    }

    #[test]
    fn unit_cube_on_axis() {
        // Camera frame z is the optical axis; world box yaw is about z, so a
        // cube is symmetric either way.
        let b = Box3D::new(Vector3::new(0.0, 0.0, 10.0), Vector3::repeat(1.0), 0.0, "x");
        let r = project_box(&b, &cam()).unwrap();
        let half = 100.0 * 0.5 / 9.5;
        assert!((r.center().x - 64.0).abs() < 1e-12);
        assert!((r.center().y - 48.0).abs() < 1e-12);
        assert!((r.min_x - (64.0 - half)).abs() < 1e-12);
        assert!((r.max_y - (48.0 + half)).abs() < 1e-12);
    }

    #[test]
    fn partially_outside_is_clipped() {
        let b = Box3D::new(Vector3::new(3.0, 0.0, 5.0), Vector3::repeat(1.0), 0.0, "x");
        let r = project_box(&b, &cam()).unwrap();
        assert_eq!(r.max_x, 127.5);
        assert!(r.min_x < 127.5);
    }

    #[test]
    fn score_cases() {
        let agent = Rect2::new(0.0, 0.0, 10.0, 10.0);
        assert_eq!(occlusion_score(&agent, &[], 0, 1.0), 0.0);
        assert_eq!(occlusion_score(&agent, &[Rect2::new(20.0, 20.0, 30.0, 30.0)], 0, 1.0), 0.0);
        assert_eq!(occlusion_score(&agent, &[agent], 0, 1.0), 1.0);
    }

    #[test]
    fn penalized_mean() {
        // IoU 0.5: a 10x10 box against the agent shifted to share 2/3 of it.
        let agent = Rect2::new(0.0, 0.0, 10.0, 10.0);
        let half = Rect2::new(10.0 / 3.0, 0.0, 10.0 + 10.0 / 3.0, 10.0);
        // IoU 0.1: a box fully inside the agent with a tenth of its area.
        let small = Rect2::new(1.0, 1.0, 1.0 + 10f64.sqrt(), 1.0 + 10f64.sqrt());
        assert!((agent.iou(&half) - 0.5).abs() < 1e-12);
        assert!((agent.iou(&small) - 0.1).abs() < 1e-12);
        let full = count_fully_occluded(&agent, 5.0, &[(half, 8.0), (small, 8.0)], 0.95);
        assert_eq!(full, 1);
        let score = occlusion_score(&agent, &[half, small], full, 1.0);
        assert!((score + 0.7).abs() < 1e-12);
        // A farther agent occludes nothing.
        assert_eq!(count_fully_occluded(&agent, 9.0, &[(small, 8.0)], 0.95), 0);
    }
}
