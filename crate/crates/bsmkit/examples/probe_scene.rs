// temporary probe
use bsmkit::acoustics;
use bsmkit::design::{design_magls, DesignConfig};
use bsmkit::grid::{DirectionGrid, FrequencyGrid};
use bsmkit::imagls::{train_imagls, ImaglsConfig};

fn main() {
    let fs = 48000.0;
    let grid = FrequencyGrid::new(fs, 64).unwrap();
    let dirs = DirectionGrid::ring_plus_coarse(15.0, 45.0).unwrap();
    let layout = acoustics::semicircular_layout(3).unwrap();
    let sphere = acoustics::RigidSphereArraySpec::with_auto_order(0.1, layout, fs, 343.0).unwrap();
    let atf = acoustics::rigid_sphere_steering(&sphere, &grid, &dirs).unwrap();
    let head = acoustics::SphericalHeadHrtfSpec::default_with_ear_azimuth(fs, 100.0).unwrap();
    let hrtf = acoustics::spherical_head_hrtf(&head, &grid, &dirs).unwrap();
    let c = design_magls(&atf, &hrtf, &DesignConfig::default()).unwrap();
    for t in [100usize, 200] {
        for l2 in [0.0005, 0.005, 0.05] {
            let cfg = ImaglsConfig {
                lambda2: l2, iterations: t, ild_bands: 8,
                ild_direction_count: 49, seed: 42, ..Default::default()
            };
            let (_, s) = train_imagls(&atf, &hrtf, &c, &cfg).unwrap();
            let min_ild = s.history.iter().map(|h| h.ild).fold(f64::INFINITY, f64::min);
            let last = s.history.last().unwrap();
            println!("T={t} l2={l2}: min ILD {min_ild:.4}  last ild {:.4} mls {:.5}", last.ild, last.mls);
        }
    }
}
