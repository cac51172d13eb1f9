use rand::Rng;

use super::{manifold, mis_weight, Context, Mode, RenderConfig};
use crate::bsdf::{Lobe, Material};
use crate::coherence::{diffusivity_from_coherence, BundleState, Interaction, InteractionFrame, LAMBERTIAN_SPREAD};
use crate::geometry::{Ray, RAY_EPSILON};
use crate::math::{Frame, Sym2, Vec3};
use crate::polarimetry::{frame_rotation, perpendicular, s_axis, MuellerMatrix, StokesVector};
use crate::scene::{EmitterKind, Scene};
use crate::spectral::cie::xyz_weight;
use crate::spectral::{sample_hero_wavelength, LAMBDA_RANGE};

/// One scattering event, stored in camera-to-light order.
#[derive(Clone, Copy, Debug)]
pub struct PathVertex {
    pub position: Vec3,
    /// Shading frame; for opaque materials `+z` faces the viewer side.
    pub frame: Frame,
    pub mesh: usize,
    /// Unit direction towards the camera side of the path.
    pub wo: Vec3,
    /// Unit direction towards the light side of the path.
    pub wi: Vec3,
    pub lobe: Lobe,
    /// Sampling factor: `|cos|/pdf` for non-delta lobes, `1/choice` for delta lobes.
    pub scale: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Endpoint {
    /// Radiance `profile·spectrum(λ)` arriving along `-wi` of the last vertex,
    /// emitted `distance` away.
    Emitter {
        emitter: usize,
        profile: f64,
        distance: f64,
    },
    /// Partially coherent connection of the last vertex, a grating, to a
    /// distant emitter, summed over all diffraction orders.
    Bundle { emitter: usize },
}

impl Endpoint {
    pub fn emitter(&self) -> usize {
        match *self {
            Endpoint::Emitter { emitter, .. } | Endpoint::Bundle { emitter } => emitter,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConnectionKind {
    /// The sampled path reached the emitter by itself.
    Organic,
    NextEvent,
    Manifold,
    Bundle,
}

/// A complete camera-to-light path.
#[derive(Clone, Debug)]
pub struct Connection {
    pub vertices: Vec<PathVertex>,
    pub endpoint: Endpoint,
    pub kind: ConnectionKind,
    /// MIS weight times the Russian roulette compensation.
    pub weight: f64,
}

impl Connection {
    /// True if the path is only valid at the wavelength it was traced with.
    pub fn is_dispersive(&self, scene: &Scene) -> bool {
        self.vertices.iter().any(|v| {
            let m = material(scene, v.mesh);
            m.is_grating() || (v.lobe.is_delta() && m.delta_is_dispersive(v.lobe))
        })
    }
}

pub(crate) fn material(scene: &Scene, mesh: usize) -> &Material {
    &scene.materials[scene.meshes[mesh].material].1
}

/// Angular diffusivity of the pc-baseline floor at `lambda`.
pub(crate) fn floor_diffusivity(cfg: &RenderConfig, lambda: f64) -> Sym2 {
    diffusivity_from_coherence(&cfg.theta_floor_matrix(), lambda).unwrap_or(Sym2::scalar(1e-12))
}

/// True if the material acts as a non-delta scatterer in this mode.
pub(crate) fn is_scattering(mat: &Material, mode: Mode) -> bool {
    !mat.is_purely_delta() || (mode == Mode::PcBaseline && mat.is_grating())
}

/// Non-delta density of sampling `wi` at a vertex, both local.
fn bsdf_pdf(mat: &Material, cfg: &RenderConfig, wi: Vec3, wo: Vec3, lambda: f64) -> f64 {
    match (cfg.mode, mat) {
        (Mode::PcBaseline, Material::Grating(g)) => g.lobe_pdf(wi, wo, lambda, &floor_diffusivity(cfg, lambda)),
        _ => mat.pdf(wi, wo, lambda),
    }
}

/// Scalar hero-wavelength value of a non-delta vertex, used to skip dead connections.
fn bsdf_m00(mat: &Material, cfg: &RenderConfig, wi: Vec3, wo: Vec3, lambda: f64) -> f64 {
    match (cfg.mode, mat) {
        (Mode::PcBaseline, Material::Grating(g)) => g.lobe_eval(wi, wo, lambda, &floor_diffusivity(cfg, lambda)).m00(),
        _ => mat.eval(wi, wo, lambda).m00(),
    }
}

/// Lobe each chain mesh must use for a manifold connection to apply.
pub(crate) fn chain_lobe(mat: &Material) -> Lobe {
    if mat.is_transmissive() {
        Lobe::DeltaRefract
    } else {
        Lobe::DeltaReflect
    }
}

struct Previous {
    position: Vec3,
    /// Non-delta density of the continuation; 0 after a delta lobe.
    pdf: f64,
    lobe: Lobe,
}

/// Backward sample stage for one camera ray at hero wavelength `lambda`.
/// Returns every light-connected path found.
pub fn trace_sample(scene: &Scene, cfg: &RenderConfig, ray: Ray, lambda: f64, rng: &mut impl Rng) -> Vec<Connection> {
    let mut out = Vec::new();
    let mut verts: Vec<PathVertex> = Vec::new();
    let mut ray = ray;
    let mut rr = 1.0;
    let mut throughput = 1.0;
    let mut prev: Option<Previous> = None;
    // Delta vertices since the last scattering vertex, for manifold bookkeeping.
    let mut chain: Vec<(usize, Lobe)> = Vec::new();
    let mut scattered = false;

    for depth in 0..=cfg.max_depth {
        let Some(hit) = scene.intersect(&ray) else {
            for (e, profile) in scene.background(ray.dir) {
                let after_order = matches!(
                    prev,
                    Some(Previous {
                        lobe: Lobe::GratingOrder(..),
                        ..
                    })
                );
                if cfg.mode == Mode::SampleSolve && after_order && scene.emitters[e].is_distant() {
                    continue;
                }
                let w = match &prev {
                    Some(p) if p.pdf > 0.0 => {
                        mis_weight(p.pdf, scene.emitter_pdf(e, p.position, ray.dir, None)).unwrap_or(0.0)
                    }
                    _ => 1.0,
                };
                out.push(Connection {
                    vertices: verts.clone(),
                    endpoint: Endpoint::Emitter {
                        emitter: e,
                        profile,
                        distance: f64::INFINITY,
                    },
                    kind: ConnectionKind::Organic,
                    weight: w * rr,
                });
            }
            break;
        };

        if let Some(e) = scene.emitter_of(&hit) {
            let front = ray.dir.dot(hit.normal) < 0.0;
            let handled_by_manifold = cfg.manifold
                && scattered
                && scene.manifold_hints.iter().any(|h| {
                    h.emitter == e
                        && h.chain.len() == chain.len()
                        && h.chain
                            .iter()
                            .zip(&chain)
                            .all(|(&m, &(cm, lobe))| m == cm && lobe == chain_lobe(material(scene, m)))
                });
            if front && !handled_by_manifold {
                let w = match &prev {
                    Some(p) if p.pdf > 0.0 => {
                        let pl = scene.emitter_pdf(e, p.position, ray.dir, Some((hit.position, hit.normal)));
                        mis_weight(p.pdf, pl).unwrap_or(0.0)
                    }
                    _ => 1.0,
                };
                out.push(Connection {
                    vertices: verts.clone(),
                    endpoint: Endpoint::Emitter {
                        emitter: e,
                        profile: 1.0,
                        distance: hit.t,
                    },
                    kind: ConnectionKind::Organic,
                    weight: w * rr,
                });
            }
        }
        if depth == cfg.max_depth {
            break;
        }

        let mat = material(scene, hit.mesh);
        let wo_world = -ray.dir;
        let mut frame = hit.frame;
        if !mat.is_transmissive() && frame.n.dot(wo_world) < 0.0 {
            frame = frame.flipped();
        }
        let wo = frame.to_local(wo_world);
        let scattering = is_scattering(mat, cfg.mode);
        let base = PathVertex {
            position: hit.position,
            frame,
            mesh: hit.mesh,
            wo: wo_world,
            wi: Vec3::ZERO,
            lobe: Lobe::Diffuse,
            scale: 1.0,
        };

        if scattering {
            next_event(scene, cfg, &verts, base, mat, lambda, rr, rng, &mut out);
            if cfg.manifold {
                for hint in &scene.manifold_hints {
                    let lobe = if cfg.mode == Mode::PcBaseline && mat.is_grating() {
                        Lobe::Glossy
                    } else {
                        Lobe::Diffuse
                    };
                    if let Some(mut c) = manifold::connect(scene, hint, PathVertex { lobe, ..base }, lambda, rng) {
                        let mut vertices = verts.clone();
                        vertices.append(&mut c.vertices);
                        c.vertices = vertices;
                        c.weight *= rr;
                        out.push(c);
                    }
                }
            }
        }
        if cfg.mode == Mode::SampleSolve && mat.is_grating() {
            bundle_connections(scene, &verts, base, mat, lambda, rr, &mut out);
        }

        let u = [rng.gen(), rng.gen(), rng.gen()];
        let sample = match (cfg.mode, mat) {
            (Mode::PcBaseline, Material::Grating(g)) => g.lobe_sample(wo, lambda, &floor_diffusivity(cfg, lambda), u),
            _ => mat.sample(wo, lambda, u),
        };
        let Some(s) = sample else { break };
        let delta = s.lobe.is_delta();
        let scale = if delta {
            1.0 / s.choice_prob
        } else {
            s.wi.z.abs() / s.pdf
        };
        if !(scale.is_finite() && scale > 0.0) {
            break;
        }
        throughput *= s.weight.m00();
        let wi_world = frame.to_world(s.wi);
        verts.push(PathVertex {
            wi: wi_world,
            lobe: s.lobe,
            scale,
            ..base
        });
        if delta {
            chain.push((hit.mesh, s.lobe));
        } else {
            chain.clear();
            scattered = true;
        }
        prev = Some(Previous {
            position: hit.position,
            pdf: if delta { 0.0 } else { s.pdf },
            lobe: s.lobe,
        });

        if depth + 1 >= cfg.rr_start {
            let q = throughput.min(1.0);
            if !(q > 0.0) || rng.gen::<f64>() >= q {
                break;
            }
            rr /= q;
            throughput /= q;
        }
        ray = Ray::new(hit.position, wi_world);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn next_event(
    scene: &Scene,
    cfg: &RenderConfig,
    verts: &[PathVertex],
    base: PathVertex,
    mat: &Material,
    lambda: f64,
    rr: f64,
    rng: &mut impl Rng,
    out: &mut Vec<Connection>,
) {
    let u = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
    let Some(es) = scene.sample_emitter(base.position, u) else {
        return;
    };
    let wi = base.frame.to_local(es.wi);
    let wo = base.frame.to_local(base.wo);
    if bsdf_m00(mat, cfg, wi, wo, lambda) <= 0.0 {
        return;
    }
    let t_max = if es.distance.is_finite() {
        es.distance - RAY_EPSILON
    } else {
        f64::INFINITY
    };
    if scene.occluded(&Ray::new(base.position, es.wi), t_max) {
        return;
    }
    let pdf_b = bsdf_pdf(mat, cfg, wi, wo, lambda);
    let Ok(w) = mis_weight(es.pdf, pdf_b) else { return };
    let lobe = if cfg.mode == Mode::PcBaseline && mat.is_grating() {
        Lobe::Glossy
    } else {
        Lobe::Diffuse
    };
    let mut vertices = verts.to_vec();
    vertices.push(PathVertex {
        wi: es.wi,
        lobe,
        scale: wi.z.abs() / es.pdf,
        ..base
    });
    out.push(Connection {
        vertices,
        endpoint: Endpoint::Emitter {
            emitter: es.emitter,
            profile: es.profile,
            distance: es.distance,
        },
        kind: ConnectionKind::NextEvent,
        weight: w * rr,
    });
}

fn bundle_connections(
    scene: &Scene,
    verts: &[PathVertex],
    base: PathVertex,
    mat: &Material,
    lambda: f64,
    rr: f64,
    out: &mut Vec<Connection>,
) {
    let Material::Grating(g) = mat else { return };
    let wo = base.frame.to_local(base.wo);
    for (e, emitter) in scene.emitters.iter().enumerate() {
        let EmitterKind::Distant { direction, omega, .. } = &emitter.kind else {
            continue;
        };
        let c = base.frame.to_local(*direction);
        if g.bundle_terms(c, wo, lambda, omega).is_empty() {
            continue;
        }
        let mut vertices = verts.to_vec();
        vertices.push(PathVertex {
            wi: *direction,
            lobe: Lobe::Glossy,
            scale: 1.0,
            ..base
        });
        out.push(Connection {
            vertices,
            endpoint: Endpoint::Bundle { emitter: e },
            kind: ConnectionKind::Bundle,
            weight: rr,
        });
    }
}

/// Forward solve stage: propagates Stokes vectors from the emitter to the
/// camera at wavelength `lambda` and returns the weighted contribution.
pub fn solve_path(scene: &Scene, cfg: &RenderConfig, conn: &Connection, lambda: f64) -> StokesVector {
    let n = conn.vertices.len();
    let emitter = &scene.emitters[conn.endpoint.emitter()];
    let spectrum = emitter.spectrum.eval(lambda);
    if n == 0 {
        return match conn.endpoint {
            Endpoint::Emitter { profile, .. } => StokesVector::unpolarized(profile * spectrum * conn.weight),
            Endpoint::Bundle { .. } => StokesVector::ZERO,
        };
    }

    // Stokes vector leaving the light-most vertex and its reference axis.
    let last = &conn.vertices[n - 1];
    let (mut stokes, mut axis, mut bundle, first) = match conn.endpoint {
        Endpoint::Emitter { profile, distance, .. } => {
            let light = StokesVector::unpolarized(profile * spectrum);
            let bundle = (cfg.mode == Mode::SampleSolve)
                .then(|| source_bundle(emitter, last.wi, distance, lambda))
                .flatten();
            (light, perpendicular(-last.wi), bundle, n)
        }
        Endpoint::Bundle { .. } => {
            let s = bundle_vertex(scene, emitter, last, lambda).scale(spectrum);
            let out_axis = last.frame.to_world(s_axis(Vec3::Z, last.frame.to_local(last.wo)));
            (s, out_axis, None, n - 1)
        }
    };

    for (i, v) in conn.vertices[..first].iter().enumerate().rev() {
        let mat = material(scene, v.mesh);
        let wi = v.frame.to_local(v.wi);
        let wo = v.frame.to_local(v.wo);
        let dir_in = -v.wi;
        let in_axis = v.frame.to_world(s_axis(Vec3::Z, -wi));
        stokes = frame_rotation(axis, in_axis, dir_in).apply(&stokes);

        let theta = bundle.as_ref().and_then(|b| b.theta().ok());
        let m = vertex_value(mat, cfg, v.lobe, wi, wo, lambda, theta.as_ref());
        stokes = m.apply(&stokes).scale(v.scale);
        axis = v.frame.to_world(s_axis(Vec3::Z, wo));

        if let Some(b) = bundle {
            let kind = interaction(mat, v.lobe, wi, lambda);
            let f = InteractionFrame {
                normal: v.frame.n,
                d_in: dir_in,
                d_out: v.wo,
            };
            let mut next = b.transform_at_interaction(kind, &f);
            if i > 0 {
                next = next.propagate_distance((conn.vertices[i - 1].position - v.position).length());
            }
            bundle = Some(next);
        }
    }
    stokes.scale(conn.weight)
}

fn source_bundle(emitter: &crate::scene::Emitter, wi: Vec3, distance: f64, lambda: f64) -> Option<BundleState> {
    let axis = perpendicular(-wi);
    match &emitter.kind {
        EmitterKind::Distant { solid_angle, .. } => BundleState::source_distant(*solid_angle, lambda, axis).ok(),
        EmitterKind::Envmap(m) => BundleState::source_distant(m.cluster_solid_angle(wi), lambda, axis).ok(),
        EmitterKind::Area { sourcing_area, .. } => {
            BundleState::source_area(*sourcing_area, distance, lambda, axis).ok()
        }
    }
}

fn interaction(mat: &Material, lobe: Lobe, wi: Vec3, lambda: f64) -> Interaction {
    match lobe {
        Lobe::DeltaRefract => {
            let Material::Dielectric { ior } = mat else {
                return Interaction::SpecularReflect;
            };
            let eta = ior.eval(lambda).re;
            if wi.z > 0.0 {
                Interaction::SpecularRefract { eta_i: 1.0, eta_t: eta }
            } else {
                Interaction::SpecularRefract { eta_i: eta, eta_t: 1.0 }
            }
        }
        Lobe::DeltaReflect | Lobe::GratingOrder(..) => Interaction::SpecularReflect,
        Lobe::Diffuse | Lobe::Glossy => Interaction::Diffractive {
            sigma: Sym2::scalar(LAMBERTIAN_SPREAD),
        },
    }
}

fn vertex_value(
    mat: &Material,
    cfg: &RenderConfig,
    lobe: Lobe,
    wi: Vec3,
    wo: Vec3,
    lambda: f64,
    theta: Option<&Sym2>,
) -> MuellerMatrix {
    if lobe.is_delta() {
        return mat.delta_value(lobe, wi, wo, lambda);
    }
    match (cfg.mode, mat, theta) {
        (Mode::PcBaseline, Material::Grating(g), _) => g.lobe_eval(wi, wo, lambda, &floor_diffusivity(cfg, lambda)),
        (Mode::SampleSolve, _, Some(theta)) => mat
            .eval_partially_coherent(wi, wo, theta, lambda)
            .unwrap_or_else(|_| mat.eval(wi, wo, lambda)),
        _ => mat.eval(wi, wo, lambda),
    }
}

/// Light leaving grating vertex `v` towards `v.wo` from a distant emitter,
/// per unit irradiance, summed over the visible diffraction orders.
fn bundle_vertex(scene: &Scene, emitter: &crate::scene::Emitter, v: &PathVertex, lambda: f64) -> StokesVector {
    let (
        Material::Grating(g),
        EmitterKind::Distant {
            direction, solid_angle, ..
        },
    ) = (material(scene, v.mesh), &emitter.kind)
    else {
        return StokesVector::ZERO;
    };
    let Ok(state) = BundleState::source_distant(*solid_angle, lambda, perpendicular(-*direction)) else {
        return StokesVector::ZERO;
    };
    let c = v.frame.to_local(*direction);
    let wo = v.frame.to_local(v.wo);
    let mut acc = StokesVector::ZERO;
    for (d, m) in g.bundle_terms(c, wo, lambda, &state.omega) {
        let d_world = v.frame.to_world(d);
        if scene.occluded(&Ray::new(v.position, d_world), f64::INFINITY) {
            continue;
        }
        // Terms carry 1/cos of the bundle axis; the radiance profile of a
        // distant emitter carries 1/(axis·d) instead.
        let s = m
            .scale(c.z / direction.dot(d_world))
            .apply(&StokesVector::unpolarized(1.0));
        for k in 0..4 {
            acc.0[k] += s.0[k];
        }
    }
    acc
}

/// Spectral and polarimetric estimate of one camera sample.
pub(crate) struct Estimate {
    pub xyz: [f64; 3],
    /// Spectral radiance averaged over the visible band.
    pub radiance: f64,
}

pub(crate) fn estimate(ctx: &Context<'_>, ray: Ray, rng: &mut impl Rng) -> Estimate {
    let (scene, cfg) = (ctx.scene, ctx.cfg);
    let (hero, p_hero) = sample_hero_wavelength(rng.gen());
    let mut est = Estimate {
        xyz: [0.0; 3],
        radiance: 0.0,
    };
    for conn in trace_sample(scene, cfg, ray, hero, rng) {
        let mut add = |lambda: f64, denom: f64| {
            let s0 = solve_path(scene, cfg, &conn, lambda).s0();
            if !s0.is_finite() || denom <= 0.0 {
                return;
            }
            let w = xyz_weight(lambda, s0 / denom);
            for k in 0..3 {
                est.xyz[k] += w[k];
            }
            est.radiance += s0 / (denom * LAMBDA_RANGE);
        };
        if conn.is_dispersive(scene) {
            add(hero, p_hero);
            continue;
        }
        let sampler = &ctx.samplers[conn.endpoint.emitter()];
        let secondaries: [f64; 3] = std::array::from_fn(|_| sampler.sample(rng.gen()).0);
        for l in std::iter::once(hero).chain(secondaries) {
            add(l, p_hero + 3.0 * sampler.pdf(l));
        }
    }
    est
}
