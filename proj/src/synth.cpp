#include "ltgs/synth.hpp"

#include <cmath>
#include <random>

namespace ltgs {

namespace {

constexpr double kTau = 6.283185307179586;

Vec3 object_spot(const SynthConfig& cfg, int object) {
    const double a = kTau * object / std::max(1, cfg.num_objects) + 0.35;
    const double r = 1.4;
    // Hovering keeps object undersides separable from the ground in the
    // instance label images.
    return Vec3(r * std::cos(a), 0.35, r * std::sin(a));
}

}  // namespace

Camera orbit_camera(const SynthConfig& cfg, double angle, double height_jitter) {
    const Vec3 eye(cfg.orbit_radius * std::cos(angle), cfg.orbit_height + height_jitter,
                   cfg.orbit_radius * std::sin(angle));
    const Vec3 target(0, 0.25, 0);
    const Vec3 f = (target - eye).normalized();
    const Vec3 r = f.cross(Vec3(0, 1, 0)).normalized();

    Camera cam;
    cam.width = cfg.width;
    cam.height = cfg.height;
    cam.fx = cam.fy = cfg.focal;
    cam.cx = cfg.width / 2.0;
    cam.cy = cfg.height / 2.0;
    Mat3 R;
    R.row(0) = r;
    R.row(1) = f.cross(r);  // image-down axis
    R.row(2) = f;
    cam.pose = {R, -(R * eye)};
    cam.validate();
    return cam;
}

SplatSet make_object(const SynthConfig& cfg, int label, uint64_t geometry_seed) {
    std::mt19937_64 geo_rng(geometry_seed);
    std::mt19937_64 look_rng(0x5eed'0000u + uint64_t(label));
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> uni(-1, 1);

    // Appearance: a stable base color per label, independent of geometry.
    const Vec3 base(0.35 + 0.3 * (0.5 + 0.5 * uni(look_rng)),
                    0.25 + 0.5 * (0.5 + 0.5 * uni(look_rng)),
                    0.3 + 0.4 * (0.5 + 0.5 * uni(look_rng)));

    SplatSet s;
    const double rad = cfg.object_radius;
    // Per-geometry anisotropy: different seeds produce visibly different
    // shapes, not just resampled blobs.
    std::uniform_real_distribution<double> ax(0.6, 1.35);
    const Vec3 aniso(ax(geo_rng), ax(geo_rng), ax(geo_rng));
    // Low-frequency color pattern over the local frame. Random per-splat
    // jitter averages away under alpha blending at this resolution; a smooth
    // spatial pattern survives it and makes every rotation photometrically
    // visible.
    std::array<Vec3, 3> pat_dir;
    for (auto& d : pat_dir) {
        d = Vec3(g(geo_rng), g(geo_rng), g(geo_rng));
        d.normalize();
    }
    for (int i = 0; i < cfg.splats_per_object; ++i) {
        Vec3 p(0.6 * g(geo_rng), 0.6 * g(geo_rng), 0.6 * g(geo_rng));
        if (p.norm() > 1.0) p /= p.norm();
        p = rad * aniso.cwiseProduct(p);
        p.y() += rad * aniso.y();  // rest the local origin at the base
        Quat q(g(geo_rng), g(geo_rng), g(geo_rng), g(geo_rng));
        q.normalize();
        Vec3 rgb = base;
        for (int a = 0; a < 3; ++a)
            rgb[a] += 0.25 * std::sin(2.2 * p.dot(pat_dir[std::size_t(a)]) / rad + 1.1 * a) +
                      0.06 * uni(geo_rng);
        std::array<double, 48> c = dc_only_coeffs(rgb.cwiseMax(0.05).cwiseMin(0.95));
        for (int j = 3; j < 12; ++j) c[std::size_t(j)] = 0.07 * uni(geo_rng);
        const Vec3 log_s = Vec3::Constant(std::log(rad * 0.18)) +
                           0.25 * Vec3(uni(geo_rng), uni(geo_rng), uni(geo_rng));
        s.push_back(p, q, log_s, logit(0.82), c, label);
    }
    return s;
}

LabelImage gt_instance_labels(const SplatSet& scene, const Camera& cam, const RasterConfig& rcfg) {
    auto [out, rec] = render_with_contributions(scene, cam, Visibility::all(), rcfg);
    LabelImage li(cam.width, cam.height);
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            double best_w = 0;
            for (const auto& e : rec.at(x, y)) {
                const double w = double(e.alpha_pix) * double(e.t_before);
                if (w > best_w) {
                    best_w = w;
                    li.at(x, y) = scene.labels[std::size_t(e.splat)];
                }
            }
        }
    return li;
}

ChronologyScript default_script(const SynthConfig& cfg) {
    ChronologyScript script;
    script.steps.resize(std::size_t(cfg.timesteps));
    auto move_edit = [](int obj, double yaw, const Vec3& t) {
        Edit e;
        e.object = obj;
        e.type = EditType::move;
        e.pose = axis_angle_transform(Vec3(0, yaw, 0), t);
        return e;
    };
    for (int t = 1; t <= cfg.timesteps; ++t) {
        auto& step = script.steps[std::size_t(t - 1)];
        const int k = (t - 1) % cfg.num_objects;
        switch ((t - 1) % 5) {
            case 0:
                step.push_back(move_edit(k, 0.7, Vec3(0.7, 0, -0.5)));
                break;
            case 1:
                step.push_back(move_edit(k, -0.6, Vec3(-0.8, 0, 0.45)));
                break;
            case 2: {
                Edit e;
                e.object = k;
                e.type = EditType::remove;
                step.push_back(e);
                break;
            }
            case 3: {
                Edit e;
                e.object = k;
                e.type = EditType::replace;
                e.replace_seed = cfg.seed ^ (0xabcdull + uint64_t(t) * 7919);
                step.push_back(e);
                break;
            }
            case 4:
                step.push_back(move_edit(k, 0.5, Vec3(0.5, 0, 0.6)));
                if (cfg.num_objects > 1)
                    step.push_back(move_edit((k + 1) % cfg.num_objects, -0.4, Vec3(-0.9, 0, 0.7)));
                break;
        }
    }
    return script;
}

SynthScene build_scene(const SynthConfig& cfg, const ChronologyScript& script) {
    if (int(script.steps.size()) != cfg.timesteps)
        throw std::invalid_argument("build_scene: script length != timesteps");
    SynthScene out;
    out.cfg = cfg;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uni(-1, 1);

    // Ground plane lattice with a smooth color pattern and mild jitter.
    const double e = cfg.ground_extent;
    const double pitch = 2.0 * e / (cfg.ground_grid - 1);
    SplatSet ground_full, ground_carved;
    std::vector<Vec3> spots;
    for (int k = 0; k < cfg.num_objects; ++k) spots.push_back(object_spot(cfg, k));
    for (int iz = 0; iz < cfg.ground_grid; ++iz)
        for (int ix = 0; ix < cfg.ground_grid; ++ix) {
            const double x = -e + ix * pitch + 0.15 * pitch * uni(rng);
            const double z = -e + iz * pitch + 0.15 * pitch * uni(rng);
            const Vec3 p(x, 0.02 * uni(rng), z);
            const Vec3 rgb(0.45 + 0.25 * std::sin(1.7 * x) * std::cos(1.3 * z),
                           0.45 + 0.25 * std::sin(1.1 * x + 2.0),
                           0.45 + 0.25 * std::cos(1.9 * z + 1.0));
            std::array<double, 48> c = dc_only_coeffs(rgb);
            const Vec3 log_s(std::log(pitch * 0.75), std::log(pitch * 0.35),
                             std::log(pitch * 0.75));
            ground_full.push_back(p, Quat::Identity(), log_s, logit(0.9), c, 0);
            bool carved = false;
            for (const auto& s : spots)
                if ((Vec2(x, z) - Vec2(s.x(), s.z())).norm() < cfg.carve_radius) carved = true;
            if (!carved)
                ground_carved.push_back(p, Quat::Identity(), log_s, logit(0.9), c, 0);
        }
    out.ground_full = ground_full;

    // Object states at t0.
    std::vector<ObjectState> state(std::size_t(cfg.num_objects));
    for (int k = 0; k < cfg.num_objects; ++k) {
        state[std::size_t(k)].present = true;
        state[std::size_t(k)].label = k + 1;
        state[std::size_t(k)].geometry_seed = cfg.seed * 1000 + uint64_t(k) + 17;
        // Yaw about the local origin, then translation to the spot.
        const double yaw = kTau * 0.5 * uni(rng);
        state[std::size_t(k)].pose = axis_angle_transform(Vec3(0, yaw, 0), spots[std::size_t(k)]);
    }

    auto scene_at = [&](const std::vector<ObjectState>& st, const SplatSet& ground) {
        SplatSet scene = ground;
        for (int k = 0; k < cfg.num_objects; ++k) {
            const auto& os = st[std::size_t(k)];
            if (!os.present) continue;
            scene.append(transform_splats(make_object(cfg, os.label, os.geometry_seed), os.pose));
        }
        return scene;
    };

    out.g0 = scene_at(state, ground_carved);

    std::mt19937_64 cam_rng(cfg.seed ^ 0xca3e5aull);
    std::uniform_real_distribution<double> jitter(-0.15, 0.15);

    for (int t = 0; t <= cfg.timesteps; ++t) {
        if (t >= 1)
            for (const auto& edit : script.steps[std::size_t(t - 1)]) {
                if (edit.object < 0 || edit.object >= cfg.num_objects)
                    throw std::invalid_argument("build_scene: edit object out of range");
                auto& os = state[std::size_t(edit.object)];
                switch (edit.type) {
                    case EditType::move:
                        os.pose = os.pose.compose(edit.pose);
                        break;
                    case EditType::remove:
                        os.present = false;
                        break;
                    case EditType::replace:
                        os.geometry_seed = edit.replace_seed;
                        os.label += 100;  // distinct instance, related appearance
                        break;
                }
            }

        TimestepData td;
        td.objects = state;
        td.scene = scene_at(state, ground_full);

        const int n_train = (t == 0) ? cfg.t0_cameras : cfg.update_cameras;
        for (int j = 0; j < n_train; ++j) {
            const double a = (t == 0) ? kTau * j / n_train
                                      : kTau * (j + 0.31 * t) / n_train + 0.2 * t;
            // Every third initial camera drops to a low ring so object
            // undersides get direct coverage.
            const double drop = (t == 0 && j % 3 == 2) ? cfg.orbit_height - 0.7 : 0.0;
            td.train_cams.push_back(orbit_camera(cfg, a, jitter(cam_rng) - drop));
        }
        for (int j = 0; j < cfg.eval_cameras; ++j) {
            const double a = kTau * (j + 0.5) / cfg.eval_cameras + 0.07 * (t + 1);
            td.eval_cams.push_back(orbit_camera(cfg, a, 0.1));
        }

        for (const auto& cam : td.train_cams) {
            auto r = render(td.scene, cam, Visibility::all());
            td.images.push_back(std::move(r.image));
            // Sensor-grade depth: the dominant surface rather than the
            // alpha-blended expectation.
            td.depths.push_back(dominant_depth(td.scene, cam, Visibility::all()));
            td.alphas.push_back(std::move(r.alpha_map));
            td.labels.push_back(gt_instance_labels(td.scene, cam));
        }
        out.timesteps.push_back(std::move(td));
    }
    return out;
}

}  // namespace ltgs
