use facepose_core::poseclassify::decide;
use facepose_core::{
    classify_pose, ClassifierConfig, Corner, EyeCorners, Landmark, PoseClass, PoseInput,
};
use proptest::prelude::*;

fn lm((row, col): (usize, usize)) -> Landmark {
    Landmark {
        row,
        col,
        depth: 0.0,
    }
}

fn corner(p: (usize, usize)) -> Corner {
    Corner {
        landmark: lm(p),
        curvature: 0.0,
    }
}

#[derive(Debug, Clone, Copy)]
struct Config {
    nose_f: (usize, usize),
    nose_r: (usize, usize),
    eye_a: (usize, usize),
    eye_b: (usize, usize),
}

impl Config {
    fn input(&self) -> PoseInput {
        PoseInput {
            frontal_nose: lm(self.nose_f),
            rotated_nose: lm(self.nose_r),
            rotated_eyes: EyeCorners::new(corner(self.eye_a), corner(self.eye_b)),
            frontal_eyes: None,
        }
    }

    fn shifted(&self, dr: usize, dc: usize) -> Self {
        let s = |(r, c): (usize, usize)| (r + dr, c + dc);
        Config {
            nose_f: s(self.nose_f),
            nose_r: s(self.nose_r),
            eye_a: s(self.eye_a),
            eye_b: s(self.eye_b),
        }
    }
}

fn point() -> impl Strategy<Value = (usize, usize)> {
    (0usize..120, 0usize..120)
}

/// Mostly small displacements so every branch is exercised often.
fn config() -> impl Strategy<Value = Config> {
    (
        point(),
        0usize..12,
        0usize..12,
        any::<bool>(),
        any::<bool>(),
        point(),
        0usize..40,
        0usize..6,
    )
        .prop_map(|(nf, dr, dc, up, left, ea, sep, tilt)| {
            let nose_r = (
                if up {
                    nf.0 + dr
                } else {
                    nf.0.saturating_sub(dr)
                },
                if left {
                    nf.1.saturating_sub(dc)
                } else {
                    nf.1 + dc
                },
            );
            Config {
                nose_f: nf,
                nose_r,
                eye_a: ea,
                eye_b: (ea.0 + tilt, ea.1 + sep),
            }
        })
}

fn cfg(eps: f64) -> ClassifierConfig {
    ClassifierConfig::new(eps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn exactly_one_class_holds(c in config(), eps in 0.0f64..8.0) {
        let r = classify_pose(&c.input(), &cfg(eps));
        let tilted = r.eye_line_diff as f64 > eps;
        let moved = r.nose_dcol > 0 || r.nose_drow > 0;
        let predicates = [
            (PoseClass::RotatedZ, tilted),
            (PoseClass::RotatedY, !tilted && moved && r.nose_dcol >= r.nose_drow),
            (PoseClass::RotatedX, !tilted && r.nose_drow > r.nose_dcol),
            (PoseClass::Frontal, !tilted && !moved),
        ];
        let holding: Vec<PoseClass> = predicates.iter().filter(|p| p.1).map(|p| p.0).collect();
        prop_assert_eq!(holding, vec![r.pose]);
    }

    #[test]
    fn raising_epsilon_only_removes_z(c in config(), lo in 0.0f64..8.0, extra in 0.0f64..8.0) {
        let (a, b) = (classify_pose(&c.input(), &cfg(lo)), classify_pose(&c.input(), &cfg(lo + extra)));
        if b.pose == PoseClass::RotatedZ {
            prop_assert_eq!(a.pose, PoseClass::RotatedZ);
        }
        if a.pose != PoseClass::RotatedZ {
            prop_assert_eq!(a.pose, b.pose);
        }
    }

    #[test]
    fn translation_invariant(c in config(), dr in 0usize..500, dc in 0usize..500, eps in 0.0f64..8.0) {
        let a = classify_pose(&c.input(), &cfg(eps));
        let b = classify_pose(&c.shifted(dr, dc).input(), &cfg(eps));
        prop_assert_eq!(a.pose, b.pose);
        prop_assert_eq!((a.eye_line_diff, a.nose_dcol, a.nose_drow), (b.eye_line_diff, b.nose_dcol, b.nose_drow));
    }

    #[test]
    fn eye_order_irrelevant(c in config(), eps in 0.0f64..8.0) {
        let swapped = Config { eye_a: c.eye_b, eye_b: c.eye_a, ..c };
        prop_assert_eq!(classify_pose(&c.input(), &cfg(eps)), classify_pose(&swapped.input(), &cfg(eps)));
    }

    #[test]
    fn equal_displacement_is_y(d in 1usize..60, diff in 0usize..3, eps in 2.0f64..8.0) {
        prop_assert_eq!(decide(diff, d, d, eps), PoseClass::RotatedY);
    }
}
