#pragma once

#include "ltgs/change.hpp"
#include "ltgs/chrono.hpp"
#include "ltgs/metrics.hpp"
#include "ltgs/registration.hpp"
#include "ltgs/segment.hpp"
#include "ltgs/synth.hpp"
#include "ltgs/track.hpp"

namespace ltgs {

struct PipelineConfig {
    SynthConfig synth;
    ProviderConfig providers;
    // Otsu keeps the flagged set tight when only one small object changed, so
    // a changed proposal often covers it with well under half its area. The
    // pooled-cosine filter already rejects unchanged proposals, which lets the
    // overlap gate run much looser than the refinement default.
    RefineConfig refine = [] {
        RefineConfig r;
        r.tau_iou = 0.1;
        return r;
    }();
    OptimizeConfig optimize;
    RasterConfig raster;
    InitConfig init;
    // Point maps carry splat-scale depth noise; a wider inlier band than the
    // registration default lets the final refit average over most
    // correspondences instead of a thin shell of them.
    RansacConfig ransac = [] {
        RansacConfig r;
        r.inlier_threshold_rel = 0.04;
        return r;
    }();

    double gamma = 0.7;        // semantic/photometric fusion weight
    int min_corr_count = 8;    // match-graph edge threshold
    double tau_match = 0.6;    // instance-to-template similarity cutoff
    double tau_cd_rel = 0.09;  // Chamfer verification, fraction of bbox diagonal

    // Provider degradation knobs (criterion harness).
    double feature_noise = 0.0;
    double corr_dropout = 0.0;
    double corr_jitter = 0.0;

    int t0_replay_stride = 4;   // every k-th initial camera becomes a replay target
    int pose_polish_iters = 60;  // photometric pattern-search budget per moved object
    int fragment_fit_iters = 150;  // appearance fit for fragments grown in a timestep

    // Ablation toggles.
    bool use_tracking = true;
    bool use_bg_init = true;
    bool use_training_views = true;
};

enum class EventType { moved, removed, replaced, added };

struct ObjectEvent {
    EventType type = EventType::moved;
    int label = 0;      // chronology label the event applies to (0 for added)
    int new_label = 0;  // template created by replace/add
    RegistrationResult registration;
};

struct TimestepReport {
    int t = 0;
    int capture_clusters = 0, render_clusters = 0;
    std::vector<ObjectEvent> events;
    std::size_t fill_splats = 0;
};

struct SegmentationResult {
    std::vector<int> pre_filter, post_filter;
};

// Orchestrates the update loop over one synthetic chronology. The raw
// TimestepData fields (labels, depths, alphas, object states) feed only the
// stand-in providers; the decisions themselves consume provider outputs.
class Pipeline {
public:
    Pipeline(const SynthScene& data, const PipelineConfig& cfg);

    // Re-derives per-splat instance labels of the initial reconstruction by
    // majority voting + projection filtering and installs the filtered labels
    // into the chronology base.
    SegmentationResult segment_initial();

    // Processes timestep t (1-based, in order): change detection, multi-view
    // clustering, template matching, registration, and background fill.
    TimestepReport update(int t);

    // Captures at t >= 1 plus optional replayed initial-camera renders of G0.
    std::vector<TrainingItem> training_items() const;

    const SceneChronology& chronology() const { return ch_; }
    const std::map<int, int>& appearance() const { return appearance_; }

private:
    const SynthScene& data_;
    PipelineConfig cfg_;
    SceneChronology ch_;
    std::map<int, int> appearance_;  // chronology label -> provider appearance id
    int next_label_ = 1;
    int done_t_ = 0;
};

struct PipelineResult {
    SegmentationResult segmentation;
    std::vector<TimestepReport> reports;
    SceneChronology chronology;  // pre-optimization
    ChronologyOptResult optimized;
};

PipelineResult run_pipeline(const SynthScene& data, const PipelineConfig& cfg);

struct TimestepEval {
    int t = 0;
    double psnr = 0, ssim = 0;
};

// Held-out evaluation: t0 uses every-8th initial camera against the captured
// images; later timesteps use the dedicated eval orbit against ground-truth
// renders.
std::vector<TimestepEval> evaluate_chronology(const SynthScene& data, const SceneChronology& ch,
                                              const RasterConfig& rcfg = {});

}  // namespace ltgs
