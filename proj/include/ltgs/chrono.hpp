#pragma once

#include "ltgs/raster.hpp"
#include "ltgs/ssim.hpp"

#include <map>

namespace ltgs {

// Lifecycle of one tracked object across the chronology. pose[t] maps the
// object's splats from their pose in the base reconstruction to timestep t;
// visible[t] = 0 removes the object from that timestep's composition.
struct ObjectChronology {
    int label = 0;
    std::vector<uint8_t> visible;        // size timesteps + 1
    std::vector<RigidTransform> pose;    // size timesteps + 1, pose[0] = identity
};

struct SceneChronology {
    SplatSet base;  // labeled reconstruction at t0 (objects at t0 poses)
    std::vector<ObjectChronology> objects;
    std::map<int, SplatSet> background_fill;  // first timestep -> label-0 fragment
    int timesteps = 0;

    // Scene at timestep t: background + fills discovered at <= t + visible
    // objects moved to their pose[t].
    SplatSet compose(int t) const;

    // Shared learnable storage: base splats first, then fill fragments in
    // first-timestep order. The same storage index appears in every timestep
    // where the splat is composed.
    std::size_t parameter_count() const;
    SplatSet compose_indexed(int t, std::vector<std::size_t>* param_index) const;
};

struct OptimizeConfig {
    int iterations = 160;
    double lr_dc = 0.01;
    double lr_rest = 0.002;
    double lr_opacity = 0.05;
    double lr_pose = 2e-3;
    double loss_lambda = 0.2;       // photometric SSIM mixing weight
    bool optimize_pose = true;
    double pose_fd_step = 1e-3;     // central difference step, both axes
    int divergence_window = 50;
    double divergence_slack = 1.05;  // windowed mean may grow by 5%
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
};

struct OptimizeResult {
    SplatSet scene;  // optimized working scene (objects at refined poses)
    std::map<int, RigidTransform> pose_deltas;  // accumulated refinement per label
    std::vector<double> loss_history;
    double initial_loss = 0, final_loss = 0;
    int divergence_trips = 0;
    bool aborted = false;
};

// One supervised view: compose(t) rendered from cam should match target.
struct TrainingItem {
    int t = 0;
    Camera cam;
    Image target;
};

struct ChronologyOptResult {
    SceneChronology chronology;
    std::vector<double> loss_history;
    int divergence_trips = 0;
    bool aborted = false;
};

// Joint refinement of the whole chronology: Adam on the shared {opacity
// logit, SH} storage (base + fills) plus finite-difference steps on the
// per-timestep object poses. One training item per iteration, round-robin;
// pose[0] and invisible timesteps are never touched.
ChronologyOptResult optimize_chronology(const SceneChronology& ch,
                                        const std::vector<TrainingItem>& items,
                                        const OptimizeConfig& cfg = {});

// Fits the composed scene to the captures by Adam on {opacity logits, SH
// coefficients} plus finite-difference gradient steps on the rigid pose of
// each listed object. Cameras are visited round-robin; the run is
// deterministic for fixed inputs.
OptimizeResult optimize_scene(const SplatSet& composed, const std::vector<Camera>& cams,
                              const std::vector<Image>& targets,
                              const std::vector<int>& movable_labels,
                              const OptimizeConfig& cfg = {});

}  // namespace ltgs
