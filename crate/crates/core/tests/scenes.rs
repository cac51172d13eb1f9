use std::path::PathBuf;

use waveray::bsdf::Material;
use waveray::render::{render, Mode, RenderConfig, Window};
use waveray::scene::{load_scene, Scene};

fn bundled(name: &str) -> Scene {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenes")
        .join(name);
    load_scene(&path).unwrap_or_else(|e| panic!("{e}"))
}

#[test]
fn bundled_scenes_load_without_warnings() {
    for name in [
        "grating-screen.ws",
        "grating-indirect.ws",
        "grating-view.ws",
        "furnace.ws",
        "direct.ws",
        "slab.ws",
    ] {
        let s = bundled(name);
        assert!(s.warnings.is_empty(), "{name}: {:?}", s.warnings);
        assert!(!s.emitters.is_empty(), "{name}");
    }
}

#[test]
fn grating_screen_has_two_gratings_and_a_screen() {
    let s = bundled("grating-screen.ws");
    assert_eq!(s.materials.len(), 3);
    let gratings = s
        .materials
        .iter()
        .filter(|(_, m)| matches!(m, Material::Grating(_)))
        .count();
    assert_eq!(gratings, 2);
    assert!(s.mesh_index("screen").is_some());
}

#[test]
fn slab_scene_carries_its_manifold_hint() {
    let s = bundled("slab.ws");
    let slab = s.mesh_index("slab").unwrap();
    assert_eq!(s.manifold_hints.len(), 1);
    assert_eq!(s.manifold_hints[0].chain, vec![slab, slab]);
}

#[test]
fn every_mode_renders_the_grating_screen_deterministically() {
    let s = bundled("grating-screen.ws");
    for mode in Mode::ALL {
        let cfg = RenderConfig {
            mode,
            spp: 2,
            seed: 4,
            resolution: Some((32, 32)),
            window: Some(Window {
                x: 0,
                y: 16,
                w: 32,
                h: 16,
            }),
            ..Default::default()
        };
        let a = render(&s, &cfg).unwrap();
        let b = render(
            &s,
            &RenderConfig {
                threads: Some(2),
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_eq!(a.rgb, b.rgb, "{mode}");
        assert!(a.rgb.iter().flatten().all(|v| v.is_finite()), "{mode}");
        assert!(a.radiance.iter().all(|&v| v >= 0.0), "{mode}");
        assert!(a.radiance.iter().any(|&v| v > 0.0), "{mode}");
        let c = render(&s, &RenderConfig { seed: 5, ..cfg }).unwrap();
        assert_ne!(a.radiance, c.radiance, "{mode}");
    }
}

#[test]
fn window_pixels_match_the_full_render() {
    let s = bundled("direct.ws");
    let cfg = RenderConfig {
        spp: 2,
        resolution: Some((16, 16)),
        ..Default::default()
    };
    let full = render(&s, &cfg).unwrap();
    let win = Window { x: 3, y: 5, w: 4, h: 2 };
    let part = render(
        &s,
        &RenderConfig {
            window: Some(win),
            ..cfg
        },
    )
    .unwrap();
    for (i, v) in part.rgb.iter().enumerate() {
        let (x, y) = (win.x + i % win.w, win.y + i / win.w);
        assert_eq!(*v, full.rgb[y * 16 + x]);
    }
}
