#pragma once

#include "ltgs/raster.hpp"
#include "ltgs/splat.hpp"

namespace ltgs {

struct SynthConfig {
    int width = 80, height = 60;
    double focal = 70;
    int num_objects = 5;
    int splats_per_object = 130;
    int ground_grid = 36;       // ground plane is a ground_grid^2 lattice
    double ground_extent = 2.5;
    double object_radius = 0.28;
    double carve_radius = 0.32;  // footprint hole under each object spot
    int t0_cameras = 40;
    int update_cameras = 3;  // sparse captures per later timestep
    int eval_cameras = 5;
    int timesteps = 5;  // update steps after t0
    double orbit_radius = 4.2, orbit_height = 2.6;
    uint64_t seed = 1;
};

enum class EditType { move, remove, replace };

// One scripted object event at a timestep. Edits are cumulative: an object
// moved at t stays at its new pose until edited again.
struct Edit {
    int object = 0;  // 0-based object index; instance label is object + 1
    EditType type = EditType::move;
    RigidTransform pose;        // world pose delta applied to the current pose
    uint64_t replace_seed = 0;  // new geometry for EditType::replace
};

struct ChronologyScript {
    std::vector<std::vector<Edit>> steps;  // steps[t - 1] applies at timestep t
};

// Ground-truth state of one object at one timestep.
struct ObjectState {
    bool present = true;
    RigidTransform pose;         // object-local -> world
    uint64_t geometry_seed = 0;  // changes only on replace
    int label = 0;               // instance label; replace bumps it by 100
};

struct TimestepData {
    SplatSet scene;  // full ground truth at this timestep
    std::vector<Camera> train_cams, eval_cams;
    std::vector<Image> images;                 // captures, one per train cam
    std::vector<std::vector<float>> depths;    // dominant-surface GT depth per train cam
    std::vector<std::vector<float>> alphas;
    std::vector<LabelImage> labels;            // per-pixel instance labels
    std::vector<ObjectState> objects;
};

struct SynthScene {
    SynthConfig cfg;
    SplatSet g0;             // initial reconstruction handed to the pipeline:
                             // carved ground + labeled objects at their t0 poses
    SplatSet ground_full;    // complete ground, for reference only
    std::vector<TimestepData> timesteps;  // index 0 = t0
};

// Deterministic look-at camera on the orbit circle.
Camera orbit_camera(const SynthConfig& cfg, double angle, double height_jitter = 0.0);

// Object splat blob in its local frame (base on y = 0, centered at the origin).
// The appearance (colors) is keyed on the instance label, the geometry on
// geometry_seed. A replace installs a new instance label (old + 100) with new
// geometry, standing in for a similar but distinct object.
SplatSet make_object(const SynthConfig& cfg, int label, uint64_t geometry_seed);

// Instance labels from the frontmost high-weight contributor per pixel.
LabelImage gt_instance_labels(const SplatSet& scene, const Camera& cam,
                              const RasterConfig& rcfg = {});

// Mixed edit schedule covering moves, repeat moves, a removal, and a replace.
ChronologyScript default_script(const SynthConfig& cfg);

SynthScene build_scene(const SynthConfig& cfg, const ChronologyScript& script);

}  // namespace ltgs
