#pragma once

#include "ltgs/image.hpp"
#include "ltgs/splat.hpp"
#include "ltgs/types.hpp"

#include <filesystem>
#include <string>

namespace ltgs::io {

// Binary little-endian PLY. Property order per vertex: x y z, qw qx qy qz,
// log_sx log_sy log_sz, logit_opacity, f_dc_0..2, f_rest_0..44, label.
// 59 float64 properties plus the int32 label, so save/load round-trips
// bit-exactly. See docs/formats.md.
void save_splats(const std::filesystem::path& path, const SplatSet& set);
SplatSet load_splats(const std::filesystem::path& path);

// Raw tensor container: one text header line "ltgs-tensor <dtype> <dim0>
// <dim1> ..." followed by packed little-endian data.
void save_image(const std::filesystem::path& path, const Image& img);
Image load_image(const std::filesystem::path& path);

void save_plane(const std::filesystem::path& path, const std::vector<float>& plane, int width,
                int height);
std::vector<float> load_plane(const std::filesystem::path& path, int* width = nullptr,
                              int* height = nullptr);

void save_labels(const std::filesystem::path& path, const LabelImage& labels);
LabelImage load_labels(const std::filesystem::path& path);

void save_mask(const std::filesystem::path& path, const Mask& mask);
Mask load_mask(const std::filesystem::path& path);

// 8-bit PPM preview (values clamped to [0,1]); lossy, for inspection only.
void save_ppm(const std::filesystem::path& path, const Image& img);

void save_cameras_json(const std::filesystem::path& path, const std::vector<Camera>& cams);
std::vector<Camera> load_cameras_json(const std::filesystem::path& path);

void save_transform_json(const std::filesystem::path& path, const RigidTransform& t);
RigidTransform load_transform_json(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// FNV-1a 64-bit over the file bytes, hex encoded; used in stage manifests.
std::string file_hash(const std::filesystem::path& path);

}  // namespace ltgs::io
