#include "ltgs/pipeline.hpp"

#include <algorithm>
#include <set>

namespace ltgs {

namespace {

LabelImage remap_labels(const LabelImage& li, const std::map<int, int>& appearance) {
    LabelImage out = li;
    for (auto& v : out.data) {
        if (v == 0) continue;
        auto it = appearance.find(v);
        if (it != appearance.end()) v = it->second;
    }
    return out;
}

int dominant_label(const Mask& mask, const LabelImage& li) {
    std::map<int, int> votes;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y) && li.at(x, y) != 0) ++votes[li.at(x, y)];
    int best = 0, best_count = 0;
    for (const auto& [label, count] : votes)
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    return best;
}

// Per-view detection output for one timestep.
struct ViewDetection {
    RenderOutput render;         // composed(t-1) at the capture camera
    LabelImage rendered_labels;  // chronology labels
    FeatureMap feat_captured, feat_rendered;
    MaskProposalSet proposals;   // captured-label proposals then rendered-label
    ObjectMaskSet refined;
    std::vector<MaskSide> sides;  // by proposal provenance
    std::vector<Mask> eroded;     // un-dilated proposals eroded 1 px: silhouette
                                  // pixels carry blended, mid-air depths
    int captured_props = 0;       // proposals[0..captured_props) came from the capture
    PointMap points;              // captured geometry
    PointMap render_points;       // composed(t-1) geometry
};

// Variants (replace templates) share the base object's state slot.
int state_slot(int appearance_id) { return (appearance_id % 100) - 1; }

struct Cluster {
    MaskSide side = MaskSide::ambiguous;
    std::vector<MaskNode> members;
    std::vector<float> feature;
    int matched_label = 0;     // chronology label, 0 = unmatched
    double matched_sim = 0;    // similarity to the matched template
};

}  // namespace

Pipeline::Pipeline(const SynthScene& data, const PipelineConfig& cfg) : data_(data), cfg_(cfg) {
    ch_.base = data.g0;
    ch_.timesteps = int(data.timesteps.size()) - 1;
    std::set<int> labels(ch_.base.labels.begin(), ch_.base.labels.end());
    labels.erase(0);
    for (int label : labels) {
        ObjectChronology oc;
        oc.label = label;
        oc.visible.assign(std::size_t(ch_.timesteps) + 1, 1);
        oc.pose.assign(std::size_t(ch_.timesteps) + 1, RigidTransform::identity());
        ch_.objects.push_back(oc);
        appearance_[label] = label;
        next_label_ = std::max(next_label_, label + 1);
    }
}

SegmentationResult Pipeline::segment_initial() {
    const auto& t0 = data_.timesteps[0];
    SplatSet unlabeled = ch_.base;
    std::fill(unlabeled.labels.begin(), unlabeled.labels.end(), 0);

    SegmentationResult res;
    res.pre_filter =
        majority_vote_labels(unlabeled, t0.train_cams, t0.labels, cfg_.raster);
    res.post_filter =
        projection_filter(unlabeled, res.pre_filter, t0.train_cams, t0.labels, cfg_.raster.z_near);
    ch_.base.labels = res.post_filter;
    return res;
}

TimestepReport Pipeline::update(int t) {
    if (t != done_t_ + 1 || t > ch_.timesteps)
        throw std::invalid_argument("pipeline: timesteps must be processed in order");
    done_t_ = t;

    const auto& td = data_.timesteps[std::size_t(t)];
    const auto& prev_td = data_.timesteps[std::size_t(t - 1)];
    const int views = int(td.train_cams.size());

    // Carry every object forward by default; edits below override slot t.
    for (auto& oc : ch_.objects) {
        oc.visible[std::size_t(t)] = oc.visible[std::size_t(t - 1)];
        oc.pose[std::size_t(t)] = oc.pose[std::size_t(t - 1)];
    }

    TimestepReport report;
    report.t = t;

    const SplatSet composed_prev = ch_.compose(t - 1);

    // Stage 1: per-view change detection.
    std::vector<ViewDetection> det(static_cast<std::size_t>(views));
    for (int v = 0; v < views; ++v) {
        auto& d = det[std::size_t(v)];
        const Camera& cam = td.train_cams[std::size_t(v)];
        const uint64_t salt = uint64_t(t) * 1000 + uint64_t(v);

        d.render = render(composed_prev, cam, Visibility::all(), cfg_.raster);
        d.rendered_labels = gt_instance_labels(composed_prev, cam, cfg_.raster);
        d.feat_captured = synth_feature_map(td.labels[std::size_t(v)], cfg_.feature_noise,
                                            cfg_.providers, salt);
        d.feat_rendered = synth_feature_map(remap_labels(d.rendered_labels, appearance_),
                                            cfg_.feature_noise, cfg_.providers, 500000 + salt);

        const auto coarse = coarse_change_mask(td.images[std::size_t(v)], d.render.image,
                                               d.feat_captured, d.feat_rendered, cfg_.gamma);

        d.proposals = synth_masks(td.labels[std::size_t(v)], cfg_.providers, salt);
        d.captured_props = int(d.proposals.masks.size());
        const auto rendered_props = synth_masks(d.rendered_labels, cfg_.providers, salt + 7, 0);
        d.proposals.masks.insert(d.proposals.masks.end(), rendered_props.masks.begin(),
                                 rendered_props.masks.end());

        if (!coarse.degenerate)
            d.refined = refine_object_masks(coarse, d.proposals, d.feat_captured, d.feat_rendered,
                                            cfg_.refine);
        // A refined proposal from the capture covers an object's new state; one
        // from the render covers the model's stale footprint. Provenance stays
        // decisive where depth reasoning is not (a same-spot replace).
        for (const auto& om : d.refined.masks) {
            d.sides.push_back(om.proposal_index < d.captured_props ? MaskSide::capture
                                                                   : MaskSide::render);
            d.eroded.push_back(erode(d.proposals.masks[std::size_t(om.proposal_index)], 1));
        }
        if (std::getenv("LTGS_DEBUG")) {
            int flagged = 0;
            for (auto b : coarse.mask.data) flagged += b != 0;
            fprintf(stderr, "[dbg] t=%d v=%d degen=%d flagged=%d props=%zu refined=%zu\n", t, v,
                    int(coarse.degenerate), flagged, d.proposals.masks.size(),
                    d.refined.masks.size());
            for (std::size_t pi = 0; pi < d.proposals.masks.size(); ++pi) {
                const Mask& pm = d.proposals.masks[pi];
                int inter = 0;
                for (std::size_t i = 0; i < pm.data.size(); ++i)
                    inter += pm.data[i] && coarse.mask.data[i];
                const auto fc = mask_pool(pm, d.feat_captured);
                const auto fr = mask_pool(pm, d.feat_rendered);
                double cos = 0;
                for (std::size_t i = 0; i < fc.size(); ++i) cos += double(fc[i]) * double(fr[i]);
                if (inter > 0)
                    fprintf(stderr, "      prop %zu area=%d inter=%d ovp=%.2f cos=%.3f\n", pi,
                            pm.area(), inter, double(inter) / pm.area(), cos);
            }
        }
        d.points = synth_point_map(cam, td.depths[std::size_t(v)], td.alphas[std::size_t(v)]);
        d.render_points = synth_point_map(cam, dominant_depth(composed_prev, cam, Visibility::all(),
                                                              cfg_.raster),
                                          d.render.alpha_map);
    }

    // Stage 2: multi-view clustering of the refined masks. The two change
    // sides cluster separately so an old footprint overlapping the object's
    // new location cannot fuse with it; ambiguous masks may join either side.
    std::map<std::pair<int, int>, CorrespondenceSet> corr;
    for (int i = 0; i < views; ++i)
        for (int j = i + 1; j < views; ++j)
            corr[{i, j}] = synth_correspondences(
                td.train_cams[std::size_t(i)], td.depths[std::size_t(i)],
                td.train_cams[std::size_t(j)], td.depths[std::size_t(j)], cfg_.corr_dropout,
                cfg_.corr_jitter, cfg_.providers, uint64_t(t) * 777 + uint64_t(i) * 16 + uint64_t(j));

    std::vector<Cluster> clusters;
    {
        // Capture side: cross-view association via the correspondence graph.
        // Edges count correspondences between the un-dilated proposals: the
        // dilation rings cover background whose correspondences would bridge
        // unrelated objects.
        std::vector<std::vector<Mask>> masks_per_view(static_cast<std::size_t>(views));
        std::vector<std::vector<int>> orig_ids(static_cast<std::size_t>(views));
        for (int v = 0; v < views; ++v) {
            const auto& d = det[std::size_t(v)];
            for (std::size_t m = 0; m < d.refined.masks.size(); ++m) {
                if (d.sides[m] != MaskSide::capture) continue;
                const auto& om = d.refined.masks[m];
                masks_per_view[std::size_t(v)].push_back(
                    d.proposals.masks[std::size_t(om.proposal_index)]);
                orig_ids[std::size_t(v)].push_back(int(m));
            }
        }
        const auto graph = build_match_graph(masks_per_view, corr, cfg_.min_corr_count);
        const auto comps = connected_components(graph);
        for (const auto& cluster_nodes : comps.clusters) {
            Cluster c;
            c.side = MaskSide::capture;
            std::vector<std::vector<float>> feats;
            for (int node : cluster_nodes) {
                MaskNode mn = graph.nodes[std::size_t(node)];
                mn.mask_id = orig_ids[std::size_t(mn.view)][std::size_t(mn.mask_id)];
                feats.push_back(
                    det[std::size_t(mn.view)].refined.masks[std::size_t(mn.mask_id)].pooled_captured);
                c.members.push_back(mn);
            }
            c.feature = mean_feature(feats);
            clusters.push_back(std::move(c));
        }
    }
    {
        // Render side: the masks come from our own composed render, so they
        // group by the template that produced them. (The background visible
        // through a vacated footprint shifts with parallax, which makes
        // correspondence clustering unreliable exactly here.)
        std::map<int, Cluster> by_label;
        for (int v = 0; v < views; ++v) {
            const auto& d = det[std::size_t(v)];
            for (std::size_t m = 0; m < d.refined.masks.size(); ++m) {
                if (d.sides[m] != MaskSide::render) continue;
                const auto& om = d.refined.masks[m];
                const int label =
                    dominant_label(d.proposals.masks[std::size_t(om.proposal_index)],
                                   d.rendered_labels);
                if (label == 0) continue;
                auto& c = by_label[label];
                c.side = MaskSide::render;
                c.matched_label = label;
                c.members.push_back({v, int(m)});
            }
        }
        for (auto& [label, c] : by_label) {
            std::vector<std::vector<float>> feats;
            for (const MaskNode& mn : c.members)
                feats.push_back(
                    det[std::size_t(mn.view)].refined.masks[std::size_t(mn.mask_id)].pooled_rendered);
            c.feature = mean_feature(feats);
            clusters.push_back(std::move(c));
        }
    }
    for (const auto& c : clusters)
        (c.side == MaskSide::capture ? report.capture_clusters : report.render_clusters) += 1;

    // Stage 3: match clusters to the templates composed at t-1.
    std::vector<int> base_labels;
    std::vector<GroupInstance> base_instances;
    for (const auto& oc : ch_.objects) {
        if (!oc.visible[std::size_t(t - 1)]) continue;
        std::vector<std::vector<float>> feats;
        for (int v = 0; v < views; ++v) {
            const auto& d = det[std::size_t(v)];
            Mask m(d.rendered_labels.width, d.rendered_labels.height);
            for (std::size_t i = 0; i < m.data.size(); ++i)
                m.data[i] = d.rendered_labels.data[i] == oc.label;
            if (!m.empty()) feats.push_back(mask_pool(m, d.feat_rendered));
        }
        if (feats.empty()) continue;
        base_labels.push_back(oc.label);
        GroupInstance gi;
        gi.feature = mean_feature(feats);
        base_instances.push_back(std::move(gi));
    }

    auto assign_side = [&](MaskSide side) {
        std::vector<int> cluster_ids;
        std::vector<GroupInstance> group;
        for (std::size_t i = 0; i < clusters.size(); ++i)
            if (clusters[i].side == side) {
                cluster_ids.push_back(int(i));
                GroupInstance gi;
                gi.feature = clusters[i].feature;
                group.push_back(std::move(gi));
            }
        if (!group.empty() && !base_instances.empty()) {
            const auto S = cross_group_similarity(group, base_instances);
            const auto a = hungarian_assign(S, cfg_.tau_match);
            for (std::size_t r = 0; r < cluster_ids.size(); ++r)
                if (a.match[r] >= 0) {
                    auto& c = clusters[std::size_t(cluster_ids[r])];
                    c.matched_label = base_labels[std::size_t(a.match[r])];
                    c.matched_sim = S(int(r), a.match[r]);
                }
        }
    };
    if (cfg_.use_tracking) assign_side(MaskSide::capture);

    auto member_views = [&](const Cluster& c) {
        // Point-map views behind the eroded proposal masks of the members.
        std::vector<InitView> iv;
        for (const MaskNode& mn : c.members) {
            const auto& d = det[std::size_t(mn.view)];
            iv.push_back({&d.points, &d.eroded[std::size_t(mn.mask_id)],
                          &td.images[std::size_t(mn.view)]});
        }
        return iv;
    };

    auto hide_from = [&](int label) {
        for (auto& oc : ch_.objects)
            if (oc.label == label)
                for (int tt = t; tt <= ch_.timesteps; ++tt) oc.visible[std::size_t(tt)] = 0;
    };

    auto captured_appearance = [&](const Cluster& c) {
        int app = 0;
        for (const MaskNode& mn : c.members) {
            const auto& d = det[std::size_t(mn.view)];
            const auto& om = d.refined.masks[std::size_t(mn.mask_id)];
            const int l = dominant_label(om.mask, td.labels[std::size_t(mn.view)]);
            if (l != 0) app = l;
        }
        return app;
    };

    auto add_template = [&](const Cluster& c, int appearance_id) {
        const int label = next_label_++;
        SplatSet frag = init_from_pointmaps(member_views(c), label, cfg_.init);
        if (frag.size() == 0) {
            --next_label_;
            return 0;
        }
        ch_.base.append(frag);
        ObjectChronology oc;
        oc.label = label;
        oc.visible.assign(std::size_t(ch_.timesteps) + 1, 0);
        for (int tt = t; tt <= ch_.timesteps; ++tt) oc.visible[std::size_t(tt)] = 1;
        oc.pose.assign(std::size_t(ch_.timesteps) + 1, RigidTransform::identity());
        ch_.objects.push_back(oc);
        appearance_[label] = appearance_id != 0 ? appearance_id : label;
        return label;
    };

    // Stage 4: apply the per-object decisions.
    std::set<int> handled;
    for (auto& c : clusters) {
        if (c.side != MaskSide::capture || c.matched_label == 0) continue;
        const int label = c.matched_label;
        const int app = appearance_.at(label);
        handled.insert(label);

        // Source: surface points of the template as rendered at t-1, so both
        // point sets are surface samples and the Chamfer check compares like
        // with like. Target: captured points behind the cluster masks.
        std::vector<Vec3> source;
        for (int v = 0; v < views; ++v) {
            const auto& d = det[std::size_t(v)];
            Mask lm(d.rendered_labels.width, d.rendered_labels.height);
            for (std::size_t i = 0; i < lm.data.size(); ++i)
                lm.data[i] = d.rendered_labels.data[i] == label;
            lm = erode(lm, 1);
            for (std::size_t i = 0; i < lm.data.size(); ++i)
                if (lm.data[i] && d.render_points.confidence[i] > 1.0f)
                    source.push_back(d.render_points.points[i]);
        }
        std::vector<Vec3> target;
        for (const MaskNode& mn : c.members) {
            const auto& d = det[std::size_t(mn.view)];
            const Mask& pm = d.eroded[std::size_t(mn.mask_id)];
            for (int y = 0; y < pm.height; ++y)
                for (int x = 0; x < pm.width; ++x)
                    if (pm.at(x, y) && d.points.confidence[d.points.idx(x, y)] > 1.0f)
                        target.push_back(d.points.points[d.points.idx(x, y)]);
        }

        ObjectEvent ev;
        ev.label = label;
        if (source.size() >= 3 && target.size() >= 3) {
            const int slot = state_slot(app);
            const auto feats_source = synth_point_features(
                source, prev_td.objects[std::size_t(slot)].pose.inverse(), app,
                cfg_.feature_noise, cfg_.providers, uint64_t(t) * 31 + uint64_t(label));
            const auto feats_target = synth_point_features(
                target, td.objects[std::size_t(slot)].pose.inverse(), app, cfg_.feature_noise,
                cfg_.providers, uint64_t(t) * 37 + uint64_t(label));
            ev.registration = register_and_verify(source, feats_source, target, feats_target,
                                                  cfg_.tau_cd_rel, cfg_.ransac);
        }

        // Replacing an object in place can leave a registrable shell, so the
        // Chamfer check alone cannot separate a move from a swap. The semantic
        // pooled features can: a moved object keeps its appearance while a
        // swapped one only resembles it, so the same-object cosine threshold
        // used during mask refinement applies here too.
        const bool same_appearance = c.matched_sim >= cfg_.refine.tau_cos;

        // If the captured points already lie on the template's splats under
        // the carried-forward pose, the cluster is a rendering imperfection
        // (a faint point-map template, a misaligned rim), not an event; a
        // rim can even register to a near-identity transform, so this runs
        // before the fit is consulted.
        if (same_appearance && target.size() >= 3) {
            std::vector<Vec3> centers;
            const auto idx = ch_.base.indices_with_label(label);
            for (const auto& oc : ch_.objects)
                if (oc.label == label)
                    for (auto i : idx)
                        centers.push_back(oc.pose[std::size_t(t - 1)].apply(ch_.base.positions[i]));
            if (centers.size() >= 3 &&
                chamfer_distance(centers, target) <= cfg_.tau_cd_rel * bbox_diagonal(centers))
                continue;
        }

        // With the semantic test carrying the swap decision, a marginal
        // Chamfer on a same-appearance object still means the object itself:
        // commit the move when RANSAC settled on a solid consensus and let the
        // photometric polish tighten the pose.
        const bool fit_usable = ev.registration.success || ev.registration.inliers >= 10;

        if (fit_usable && same_appearance) {
            ev.type = EventType::moved;
            for (auto& oc : ch_.objects)
                if (oc.label == label) {
                    oc.pose[std::size_t(t)] =
                        ev.registration.transform.compose(oc.pose[std::size_t(t - 1)]);
                    oc.visible[std::size_t(t)] = 1;
                }
        } else {
            // The appearance or the geometry no longer matches the template.
            // Retire the old one and grow a replacement from the capture.
            ev.type = EventType::replaced;
            hide_from(label);
            ev.new_label = add_template(c, captured_appearance(c));
        }
        report.events.push_back(std::move(ev));
    }

    // Pixels claimed by a capture-side cluster are explained by an object's
    // new state and say nothing about what used to render behind them.
    std::vector<Mask> claimed(static_cast<std::size_t>(views));
    for (int v = 0; v < views; ++v)
        claimed[std::size_t(v)] =
            Mask(det[std::size_t(v)].points.width, det[std::size_t(v)].points.height);
    for (const auto& c : clusters) {
        if (c.side != MaskSide::capture) continue;
        for (const MaskNode& mn : c.members) {
            const auto& om = det[std::size_t(mn.view)].refined.masks[std::size_t(mn.mask_id)];
            auto& cm = claimed[std::size_t(mn.view)];
            for (std::size_t i = 0; i < cm.data.size(); ++i)
                if (om.mask.data[i]) cm.data[i] = 1;
        }
    }

    for (const auto& c : clusters) {
        if (c.side != MaskSide::render) continue;
        int label = c.matched_label;
        if (!cfg_.use_tracking) {
            // Without tracking, fall back to geometric overlap with the render.
            label = 0;
            for (const MaskNode& mn : c.members) {
                const auto& d = det[std::size_t(mn.view)];
                const auto& om = d.refined.masks[std::size_t(mn.mask_id)];
                const int l = dominant_label(om.mask, d.rendered_labels);
                if (l != 0) label = l;
            }
        }
        if (label == 0 || handled.count(label)) continue;
        // A misaligned rim or an occlusion by another object's new footprint
        // also shows up as a render-side cluster. Remove only when the
        // unclaimed part of the rendered footprint no longer looks like the
        // template in the capture; with no unclaimed pixels there is no
        // evidence of absence at all.
        {
            std::vector<std::vector<float>> feats;
            for (int v = 0; v < views; ++v) {
                const auto& d = det[std::size_t(v)];
                Mask m(d.rendered_labels.width, d.rendered_labels.height);
                for (std::size_t i = 0; i < m.data.size(); ++i)
                    m.data[i] = d.rendered_labels.data[i] == label && !claimed[std::size_t(v)].data[i];
                // The rim of the rendered footprint hangs over whatever is
                // behind the object in the capture; erode so the pooled
                // feature reflects the object body only.
                m = erode(m, 1);
                if (!m.empty()) feats.push_back(mask_pool(m, d.feat_captured));
            }
            if (feats.empty()) continue;
            auto it = std::find(base_labels.begin(), base_labels.end(), label);
            if (it != base_labels.end()) {
                const auto f = mean_feature(feats);
                const auto& g = base_instances[std::size_t(it - base_labels.begin())].feature;
                double cos = 0;
                for (std::size_t i = 0; i < f.size(); ++i) cos += double(f[i]) * double(g[i]);
                if (std::getenv("LTGS_DEBUG"))
                    fprintf(stderr, "[dbg] t=%d remove-guard label=%d cos=%.4f views=%zu\n", t,
                            label, cos, feats.size());
                if (cos >= cfg_.refine.tau_cos) continue;  // still there
            } else if (std::getenv("LTGS_DEBUG")) {
                fprintf(stderr, "[dbg] t=%d remove-guard label=%d not-in-base\n", t, label);
            }
        }
        handled.insert(label);
        ObjectEvent ev;
        ev.type = EventType::removed;
        ev.label = label;
        hide_from(label);
        report.events.push_back(std::move(ev));
    }

    for (const auto& c : clusters) {
        if (c.side != MaskSide::capture || c.matched_label != 0) continue;
        ObjectEvent ev;
        ev.type = EventType::added;
        ev.new_label = add_template(c, captured_appearance(c));
        if (ev.new_label != 0) report.events.push_back(std::move(ev));
    }

    // Stage 4b: photometric pose polish. Point correspondences at this image
    // resolution cap registration accuracy around a degree; a derivative-free
    // pattern search on the capture views tightens the pose well below that.
    auto polish_pose = [&](int label) {
        const SplatSet composed = ch_.compose(t);
        const auto idx = composed.indices_with_label(label);
        if (idx.empty()) return;
        const SplatSet obj = composed.subset(idx);
        Vec3 centroid = Vec3::Zero();
        for (const auto& p : obj.positions) centroid += p;
        centroid /= double(obj.size());

        auto eval = [&](const RigidTransform& d) {
            SplatSet scene = composed;
            const SplatSet moved = transform_splats(obj, d);
            for (std::size_t k = 0; k < idx.size(); ++k) {
                scene.positions[idx[k]] = moved.positions[k];
                scene.rotations[idx[k]] = moved.rotations[k];
                scene.sh_coeffs[idx[k]] = moved.sh_coeffs[k];
            }
            double loss = 0;
            for (int v = 0; v < views; ++v)
                loss += photometric_loss(
                            render(scene, td.train_cams[std::size_t(v)], Visibility::all(),
                                   cfg_.raster)
                                .image,
                            td.images[std::size_t(v)])
                            .value;
            return loss;
        };

        RigidTransform best_d = RigidTransform::identity();
        double best = eval(best_d);
        double step = 0.01;
        for (int it = 0; it < cfg_.pose_polish_iters && step > 1e-4; ++it) {
            bool improved = false;
            for (int dim = 0; dim < 6; ++dim)
                for (const double sgn : {1.0, -1.0}) {
                    Vec3 w = Vec3::Zero(), tr = Vec3::Zero();
                    if (dim < 3)
                        w[dim] = sgn * step;
                    else
                        tr[dim - 3] = sgn * step;
                    // Rotate about the object's centroid so the two step kinds
                    // stay decoupled.
                    RigidTransform d = axis_angle_transform(w, Vec3::Zero());
                    const Vec3 c = best_d.apply(centroid);
                    d.T = c - d.R * c + tr;
                    d = d.compose(best_d);
                    const double val = eval(d);
                    if (val < best - 1e-12) {
                        best = val;
                        best_d = d;
                        improved = true;
                    }
                }
            if (!improved) step *= 0.5;
        }
        for (auto& oc : ch_.objects)
            if (oc.label == label) oc.pose[std::size_t(t)] = best_d.compose(oc.pose[std::size_t(t)]);
    };
    // Two alternating rounds: with several objects moving at once, the first
    // pass for each runs against the others' coarse poses.
    if (cfg_.pose_polish_iters > 0)
        for (int round = 0; round < 2; ++round)
            for (const auto& ev : report.events)
                if (ev.type == EventType::moved) polish_pose(ev.label);

    // Stage 5: background fill behind vacated regions.
    if (cfg_.use_bg_init) {
        const SplatSet composed_now = ch_.compose(t);
        std::vector<Mask> fill_masks(static_cast<std::size_t>(views));
        std::vector<InitView> iv;
        for (int v = 0; v < views; ++v) {
            const auto& d = det[std::size_t(v)];
            const auto out = render(composed_now, td.train_cams[std::size_t(v)], Visibility::all(),
                                    cfg_.raster);
            Mask& m = fill_masks[std::size_t(v)];
            m = Mask(d.points.width, d.points.height);
            for (std::size_t i = 0; i < m.data.size(); ++i)
                m.data[i] = out.alpha_map[i] < 0.5f && td.alphas[std::size_t(v)][i] > 0.5f;
            // Exclude anything claimed by a capture-side cluster.
            for (const auto& c : clusters) {
                if (c.side != MaskSide::capture) continue;
                for (const MaskNode& mn : c.members) {
                    if (mn.view != v) continue;
                    const auto& om = det[std::size_t(v)].refined.masks[std::size_t(mn.mask_id)];
                    for (std::size_t i = 0; i < m.data.size(); ++i)
                        if (om.mask.data[i]) m.data[i] = 0;
                }
            }
            if (!m.empty())
                iv.push_back({&d.points, &m, &td.images[std::size_t(v)]});
        }
        if (!iv.empty()) {
            SplatSet frag = init_background_fill(iv, cfg_.init);
            report.fill_splats = frag.size();
            if (frag.size() > 0) ch_.background_fill[t] = std::move(frag);
        }
    }

    // Stage 6: fit the appearance of anything grown this timestep. Fresh
    // fragments start translucent; left as-is they ghost over later captures
    // and bias both change detection and the pose polish there.
    std::set<int> new_labels;
    for (const auto& ev : report.events)
        if (ev.new_label != 0) new_labels.insert(ev.new_label);
    if ((!new_labels.empty() || report.fill_splats > 0) && cfg_.fragment_fit_iters > 0) {
        std::vector<std::size_t> pidx;
        const SplatSet composed = ch_.compose_indexed(t, &pidx);
        OptimizeConfig ocfg = cfg_.optimize;
        ocfg.iterations = cfg_.fragment_fit_iters;
        ocfg.optimize_pose = false;
        const auto fit = optimize_scene(composed, td.train_cams, td.images, {}, ocfg);
        // New fragments compose at identity pose, so {opacity, SH} copy
        // straight back into storage.
        std::size_t fill_begin = ch_.base.size();
        for (const auto& [ft, frag] : ch_.background_fill) {
            if (ft == t) break;
            fill_begin += frag.size();
        }
        const std::size_t fill_end =
            fill_begin + (ch_.background_fill.count(t) ? ch_.background_fill[t].size() : 0);
        for (std::size_t j = 0; j < composed.size(); ++j) {
            const std::size_t s = pidx[j];
            if (s < ch_.base.size()) {
                if (!new_labels.count(ch_.base.labels[s])) continue;
                ch_.base.logit_opacities[s] = fit.scene.logit_opacities[j];
                ch_.base.sh_coeffs[s] = fit.scene.sh_coeffs[j];
            } else if (s >= fill_begin && s < fill_end) {
                auto& frag = ch_.background_fill[t];
                frag.logit_opacities[s - fill_begin] = fit.scene.logit_opacities[j];
                frag.sh_coeffs[s - fill_begin] = fit.scene.sh_coeffs[j];
            }
        }
    }
    return report;
}

std::vector<TrainingItem> Pipeline::training_items() const {
    std::vector<TrainingItem> items;
    if (cfg_.use_training_views) {
        const auto& t0 = data_.timesteps[0];
        const auto holdout = holdout_indices(int(t0.train_cams.size()), 8);
        const std::set<int> held(holdout.begin(), holdout.end());
        int kept = 0;
        for (int i = 0; i < int(t0.train_cams.size()); ++i) {
            if (held.count(i)) continue;
            if (kept++ % std::max(1, cfg_.t0_replay_stride) != 0) continue;
            TrainingItem item;
            item.t = 0;
            item.cam = t0.train_cams[std::size_t(i)];
            item.target = render(data_.g0, item.cam, Visibility::all(), cfg_.raster).image;
            items.push_back(std::move(item));
        }
    }
    for (int t = 1; t <= ch_.timesteps; ++t) {
        const auto& td = data_.timesteps[std::size_t(t)];
        for (std::size_t v = 0; v < td.train_cams.size(); ++v) {
            TrainingItem item;
            item.t = t;
            item.cam = td.train_cams[v];
            item.target = td.images[v];
            items.push_back(std::move(item));
        }
    }
    return items;
}

PipelineResult run_pipeline(const SynthScene& data, const PipelineConfig& cfg) {
    Pipeline p(data, cfg);
    PipelineResult res;
    res.segmentation = p.segment_initial();
    for (int t = 1; t < int(data.timesteps.size()); ++t) res.reports.push_back(p.update(t));
    res.chronology = p.chronology();
    res.optimized = optimize_chronology(res.chronology, p.training_items(), cfg.optimize);
    return res;
}

std::vector<TimestepEval> evaluate_chronology(const SynthScene& data, const SceneChronology& ch,
                                              const RasterConfig& rcfg) {
    std::vector<TimestepEval> evals;
    {
        const auto& t0 = data.timesteps[0];
        std::vector<Camera> cams;
        std::vector<Image> targets;
        for (int i : holdout_indices(int(t0.train_cams.size()), 8)) {
            cams.push_back(t0.train_cams[std::size_t(i)]);
            targets.push_back(t0.images[std::size_t(i)]);
        }
        const auto r = evaluate_views(ch.compose(0), cams, targets, rcfg);
        evals.push_back({0, r.mean_psnr, r.mean_ssim});
    }
    for (int t = 1; t <= ch.timesteps; ++t) {
        const auto& td = data.timesteps[std::size_t(t)];
        std::vector<Image> targets;
        for (const auto& cam : td.eval_cams)
            targets.push_back(render(td.scene, cam, Visibility::all(), rcfg).image);
        const auto r = evaluate_views(ch.compose(t), td.eval_cams, targets, rcfg);
        evals.push_back({t, r.mean_psnr, r.mean_ssim});
    }
    return evals;
}

}  // namespace ltgs
