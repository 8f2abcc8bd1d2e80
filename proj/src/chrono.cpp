#include "ltgs/chrono.hpp"

#include <cmath>
#include <numeric>

namespace ltgs {

std::size_t SceneChronology::parameter_count() const {
    std::size_t n = base.size();
    for (const auto& [first_t, frag] : background_fill) n += frag.size();
    return n;
}

SplatSet SceneChronology::compose_indexed(int t, std::vector<std::size_t>* param_index) const {
    if (t < 0 || t > timesteps) throw std::invalid_argument("compose: timestep out of range");
    SplatSet scene;
    if (param_index) param_index->clear();
    auto track = [&](const std::vector<std::size_t>& storage) {
        if (param_index) param_index->insert(param_index->end(), storage.begin(), storage.end());
    };

    // Background splats (and anything unlisted) pass through unchanged.
    std::vector<std::size_t> passthrough;
    for (std::size_t i = 0; i < base.size(); ++i) {
        bool object = false;
        for (const auto& oc : objects)
            if (oc.label == base.labels[i]) {
                object = true;
                break;
            }
        if (!object) passthrough.push_back(i);
    }
    scene = base.subset(passthrough);
    track(passthrough);

    for (const auto& oc : objects) {
        if (int(oc.visible.size()) != timesteps + 1 || int(oc.pose.size()) != timesteps + 1)
            throw std::invalid_argument("compose: object chronology length mismatch");
        if (!oc.visible[std::size_t(t)]) continue;
        const auto idx = base.indices_with_label(oc.label);
        scene.append(transform_splats(base.subset(idx), oc.pose[std::size_t(t)]));
        track(idx);
    }

    std::size_t fill_offset = base.size();
    for (const auto& [first_t, frag] : background_fill) {
        if (first_t <= t) {
            scene.append(frag);
            if (param_index)
                for (std::size_t i = 0; i < frag.size(); ++i)
                    param_index->push_back(fill_offset + i);
        }
        fill_offset += frag.size();
    }
    return scene;
}

SplatSet SceneChronology::compose(int t) const { return compose_indexed(t, nullptr); }

namespace {

struct AdamState {
    std::vector<double> m, v;
    int step = 0;

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    double update(std::size_t i, double g, const OptimizeConfig& cfg) {
        m[i] = cfg.adam_beta1 * m[i] + (1 - cfg.adam_beta1) * g;
        v[i] = cfg.adam_beta2 * v[i] + (1 - cfg.adam_beta2) * g * g;
        const double mh = m[i] / (1 - std::pow(cfg.adam_beta1, step));
        const double vh = v[i] / (1 - std::pow(cfg.adam_beta2, step));
        return mh / (std::sqrt(vh) + cfg.adam_eps);
    }
};

double view_loss(const SplatSet& scene, const Camera& cam, const Image& target, double lambda) {
    const auto out = render(scene, cam, Visibility::all());
    return photometric_loss(out.image, target, lambda).value;
}

}  // namespace

ChronologyOptResult optimize_chronology(const SceneChronology& ch_in,
                                        const std::vector<TrainingItem>& items,
                                        const OptimizeConfig& cfg) {
    if (items.empty()) throw std::invalid_argument("optimize_chronology: no training items");

    ChronologyOptResult res;
    res.chronology = ch_in;
    auto& ch = res.chronology;

    // Shared parameter store: pointers into base, then fills in map order.
    std::vector<double*> p_alpha;
    std::vector<std::array<double, 48>*> p_sh;
    auto adopt = [&](SplatSet& s) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            p_alpha.push_back(&s.logit_opacities[i]);
            p_sh.push_back(&s.sh_coeffs[i]);
        }
    };
    adopt(ch.base);
    for (auto& [first_t, frag] : ch.background_fill) adopt(frag);
    const std::size_t n = p_alpha.size();

    using Mat16 = Eigen::Matrix<double, kShCoeffs, kShCoeffs>;
    struct CachedObject {
        int label = 0;
        std::vector<std::size_t> comp_idx;
        Mat16 A;  // composed coeffs = A * base coeffs
    };
    struct CachedScene {
        SplatSet scene;
        std::vector<std::size_t> pidx;
        std::vector<uint8_t> rotated;  // SH refreshed through an object operator
        std::vector<CachedObject> objects;
        int pose_rr = 0;
    };
    std::map<int, CachedScene> cache;
    for (const auto& item : items) {
        if (cache.count(item.t)) continue;
        CachedScene c;
        c.scene = ch.compose_indexed(item.t, &c.pidx);
        c.rotated.assign(c.scene.size(), 0);
        for (const auto& oc : ch.objects) {
            if (!oc.visible[std::size_t(item.t)] || item.t == 0) continue;
            CachedObject co;
            co.label = oc.label;
            co.comp_idx = c.scene.indices_with_label(oc.label);
            co.A = sh_rotation_from_rotation(oc.pose[std::size_t(item.t)].R).inverse().M;
            for (auto i : co.comp_idx) c.rotated[i] = 1;
            if (!co.comp_idx.empty()) c.objects.push_back(std::move(co));
        }
        cache.emplace(item.t, std::move(c));
    }

    auto refresh = [&](CachedScene& c) {
        for (std::size_t i = 0; i < c.scene.size(); ++i) {
            c.scene.logit_opacities[i] = *p_alpha[c.pidx[i]];
            if (!c.rotated[i]) c.scene.sh_coeffs[i] = *p_sh[c.pidx[i]];
        }
        for (const auto& co : c.objects)
            for (auto i : co.comp_idx) {
                const auto& src = *p_sh[c.pidx[i]];
                for (int chan = 0; chan < 3; ++chan) {
                    Eigen::Matrix<double, kShCoeffs, 1> v;
                    for (int j = 0; j < kShCoeffs; ++j) v[j] = src[std::size_t(3 * j + chan)];
                    v = co.A * v;
                    for (int j = 0; j < kShCoeffs; ++j)
                        c.scene.sh_coeffs[i][std::size_t(3 * j + chan)] = v[j];
                }
            }
    };

    AdamState adam_alpha(n), adam_sh(n * 48);
    double lr_scale = 1.0;
    double prev_window = std::numeric_limits<double>::infinity();
    double window_acc = 0;
    int window_count = 0;

    for (int it = 0; it < cfg.iterations; ++it) {
        const auto& item = items[std::size_t(it) % items.size()];
        CachedScene& c = cache.at(item.t);
        refresh(c);

        auto [out, rec] = render_with_contributions(c.scene, item.cam, Visibility::all());
        const auto loss = photometric_loss(out.image, item.target, cfg.loss_lambda);
        res.loss_history.push_back(loss.value);
        if (loss.value == 0) continue;
        const auto grads = backward(c.scene, item.cam, Visibility::all(), loss.grad, rec);

        adam_alpha.step = adam_sh.step = it + 1;
        for (std::size_t i = 0; i < c.scene.size(); ++i) {
            const std::size_t p = c.pidx[i];
            *p_alpha[p] -= lr_scale * cfg.lr_opacity *
                           adam_alpha.update(p, grads.logit_opacity[i], cfg);
            std::array<double, 48> g = grads.sh[i];
            if (c.rotated[i]) {
                // Chain through the per-object SH rotation: dL/dc_base = A^T g.
                const Mat16* A = nullptr;
                for (const auto& co : c.objects)
                    if (c.scene.labels[i] == co.label) A = &co.A;
                for (int chan = 0; chan < 3; ++chan) {
                    Eigen::Matrix<double, kShCoeffs, 1> v;
                    for (int j = 0; j < kShCoeffs; ++j)
                        v[j] = grads.sh[i][std::size_t(3 * j + chan)];
                    v = A->transpose() * v;
                    for (int j = 0; j < kShCoeffs; ++j) g[std::size_t(3 * j + chan)] = v[j];
                }
            }
            for (int j = 0; j < 48; ++j) {
                const double lr = (j < 3) ? cfg.lr_dc : cfg.lr_rest;
                (*p_sh[p])[std::size_t(j)] -=
                    lr_scale * lr * adam_sh.update(p * 48 + std::size_t(j), g[std::size_t(j)], cfg);
            }
        }

        if (cfg.optimize_pose && !c.objects.empty()) {
            refresh(c);
            CachedObject& co = c.objects[std::size_t(c.pose_rr++) % c.objects.size()];
            Eigen::Matrix<double, 6, 1> g6;
            const double h = cfg.pose_fd_step;
            for (int d = 0; d < 6; ++d) {
                Vec3 w = Vec3::Zero(), tr = Vec3::Zero();
                if (d < 3)
                    w[d] = h;
                else
                    tr[d - 3] = h;
                const double plus =
                    view_loss(transform_splats(c.scene, co.comp_idx, axis_angle_transform(w, tr)),
                              item.cam, item.target, cfg.loss_lambda);
                const double minus =
                    view_loss(transform_splats(c.scene, co.comp_idx, axis_angle_transform(-w, -tr)),
                              item.cam, item.target, cfg.loss_lambda);
                g6[d] = (plus - minus) / (2 * h);
            }
            const Eigen::Matrix<double, 6, 1> step = -lr_scale * cfg.lr_pose * g6;
            const RigidTransform delta = axis_angle_transform(step.head<3>(), step.tail<3>());
            c.scene = transform_splats(c.scene, co.comp_idx, delta);
            for (auto& oc : ch.objects)
                if (oc.label == co.label) {
                    oc.pose[std::size_t(item.t)] = delta.compose(oc.pose[std::size_t(item.t)]);
                    co.A = sh_rotation_from_rotation(oc.pose[std::size_t(item.t)].R).inverse().M;
                }
        }

        window_acc += loss.value;
        if (++window_count == cfg.divergence_window) {
            const double mean = window_acc / window_count;
            if (mean > prev_window * cfg.divergence_slack) {
                ++res.divergence_trips;
                if (res.divergence_trips >= 2) {
                    res.aborted = true;
                    break;
                }
                lr_scale *= 0.5;
            }
            prev_window = mean;
            window_acc = 0;
            window_count = 0;
        }
    }
    return res;
}

OptimizeResult optimize_scene(const SplatSet& composed, const std::vector<Camera>& cams,
                              const std::vector<Image>& targets,
                              const std::vector<int>& movable_labels, const OptimizeConfig& cfg) {
    if (cams.empty() || cams.size() != targets.size())
        throw std::invalid_argument("optimize_scene: cams/targets mismatch");

    OptimizeResult res;
    res.scene = composed;
    for (int label : movable_labels) res.pose_deltas[label] = RigidTransform::identity();

    std::map<int, std::vector<std::size_t>> label_indices;
    for (int label : movable_labels) {
        label_indices[label] = composed.indices_with_label(label);
        if (label_indices[label].empty())
            throw std::invalid_argument("optimize_scene: movable label absent from scene");
    }

    const std::size_t n = composed.size();
    AdamState adam_alpha(n), adam_sh(n * 48);

    double lr_scale = 1.0;
    double prev_window = std::numeric_limits<double>::infinity();
    double window_acc = 0;
    int window_count = 0;

    // Baseline loss over every view for reporting.
    auto full_loss = [&](const SplatSet& s) {
        double acc = 0;
        for (std::size_t v = 0; v < cams.size(); ++v)
            acc += view_loss(s, cams[v], targets[v], cfg.loss_lambda);
        return acc / double(cams.size());
    };
    res.initial_loss = full_loss(res.scene);

    for (int it = 0; it < cfg.iterations; ++it) {
        const std::size_t v = std::size_t(it) % cams.size();
        auto [out, rec] = render_with_contributions(res.scene, cams[v], Visibility::all());
        const auto loss = photometric_loss(out.image, targets[v], cfg.loss_lambda);
        if (loss.value == 0) {
            // Exact fit on this view: the true gradient vanishes and the pose
            // finite differences would only measure rounding noise.
            res.loss_history.push_back(0);
            continue;
        }
        const auto grads = backward(res.scene, cams[v], Visibility::all(), loss.grad, rec);

        adam_alpha.step = adam_sh.step = it + 1;
        for (std::size_t i = 0; i < n; ++i) {
            res.scene.logit_opacities[i] -=
                lr_scale * cfg.lr_opacity * adam_alpha.update(i, grads.logit_opacity[i], cfg);
            for (int j = 0; j < 48; ++j) {
                const double lr = (j < 3) ? cfg.lr_dc : cfg.lr_rest;
                res.scene.sh_coeffs[i][std::size_t(j)] -=
                    lr_scale * lr *
                    adam_sh.update(i * 48 + std::size_t(j), grads.sh[i][std::size_t(j)], cfg);
            }
        }

        if (cfg.optimize_pose && !movable_labels.empty()) {
            // One object per iteration keeps the finite-difference cost bounded.
            const int label = movable_labels[std::size_t(it) % movable_labels.size()];
            const auto& idx = label_indices.at(label);
            Eigen::Matrix<double, 6, 1> g;
            const double h = cfg.pose_fd_step;
            for (int d = 0; d < 6; ++d) {
                Vec3 w = Vec3::Zero(), tr = Vec3::Zero();
                if (d < 3)
                    w[d] = h;
                else
                    tr[d - 3] = h;
                const auto plus =
                    view_loss(transform_splats(res.scene, idx, axis_angle_transform(w, tr)),
                              cams[v], targets[v], cfg.loss_lambda);
                const auto minus =
                    view_loss(transform_splats(res.scene, idx, axis_angle_transform(-w, -tr)),
                              cams[v], targets[v], cfg.loss_lambda);
                g[d] = (plus - minus) / (2 * h);
            }
            const Eigen::Matrix<double, 6, 1> step = -lr_scale * cfg.lr_pose * g;
            const RigidTransform delta =
                axis_angle_transform(step.head<3>(), step.tail<3>());
            res.scene = transform_splats(res.scene, idx, delta);
            res.pose_deltas[label] = delta.compose(res.pose_deltas[label]);
        }

        res.loss_history.push_back(loss.value);

        // Divergence guard on the windowed mean of the streaming loss.
        window_acc += loss.value;
        if (++window_count == cfg.divergence_window) {
            const double mean = window_acc / window_count;
            if (mean > prev_window * cfg.divergence_slack) {
                ++res.divergence_trips;
                if (res.divergence_trips >= 2) {
                    res.aborted = true;
                    break;
                }
                lr_scale *= 0.5;
            }
            prev_window = mean;
            window_acc = 0;
            window_count = 0;
        }
    }

    res.final_loss = full_loss(res.scene);
    return res;
}

}  // namespace ltgs
