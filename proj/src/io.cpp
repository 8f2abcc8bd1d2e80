#include "ltgs/io.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <sstream>

namespace ltgs::io {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    return f;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary) {
    std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    return f;
}

template <typename T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("truncated binary stream");
    return v;
}

void save_tensor(const std::filesystem::path& path, const std::string& dtype,
                 const std::vector<long>& dims, const void* data, std::size_t bytes) {
    auto f = open_out(path, true);
    f << "ltgs-tensor " << dtype;
    for (long d : dims) f << " " << d;
    f << "\n";
    f.write(static_cast<const char*>(data), std::streamsize(bytes));
}

std::vector<long> load_tensor_header(std::istream& is, const std::string& want_dtype) {
    std::string line;
    std::getline(is, line);
    std::istringstream ss(line);
    std::string magic, dtype;
    ss >> magic >> dtype;
    if (magic != "ltgs-tensor") throw std::runtime_error("not a tensor file");
    if (dtype != want_dtype)
        throw std::runtime_error("tensor dtype mismatch: got " + dtype + ", want " + want_dtype);
    std::vector<long> dims;
    long d;
    while (ss >> d) dims.push_back(d);
    return dims;
}

}  // namespace

void save_splats(const std::filesystem::path& path, const SplatSet& set) {
    auto f = open_out(path, true);
    f << "ply\nformat binary_little_endian 1.0\n";
    f << "element vertex " << set.size() << "\n";
    const char* names[] = {"x",       "y",       "z",       "qw",      "qx",
                           "qy",      "qz",      "log_sx",  "log_sy",  "log_sz",
                           "logit_opacity"};
    for (const char* n : names) f << "property double " << n << "\n";
    for (int i = 0; i < 3; ++i) f << "property double f_dc_" << i << "\n";
    for (int i = 0; i < 45; ++i) f << "property double f_rest_" << i << "\n";
    f << "property int label\nend_header\n";

    for (std::size_t i = 0; i < set.size(); ++i) {
        for (int k = 0; k < 3; ++k) write_raw(f, set.positions[i][k]);
        const Quat& q = set.rotations[i];
        write_raw(f, q.w());
        write_raw(f, q.x());
        write_raw(f, q.y());
        write_raw(f, q.z());
        for (int k = 0; k < 3; ++k) write_raw(f, set.log_scales[i][k]);
        write_raw(f, set.logit_opacities[i]);
        // DC coefficients first (channel-major), then the rest, matching the
        // usual splat PLY layout.
        for (int ch = 0; ch < 3; ++ch) write_raw(f, set.sh_coeffs[i][std::size_t(ch)]);
        for (int j = 1; j < kShCoeffs; ++j)
            for (int ch = 0; ch < 3; ++ch) write_raw(f, set.sh_coeffs[i][std::size_t(3 * j + ch)]);
        write_raw(f, int32_t(set.labels[i]));
    }
}

SplatSet load_splats(const std::filesystem::path& path) {
    auto f = open_in(path, true);
    std::string line;
    std::size_t count = 0;
    std::vector<std::string> props;
    bool header_done = false;
    while (std::getline(f, line)) {
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "element") {
            std::string kind;
            ss >> kind >> count;
            if (kind != "vertex") throw std::runtime_error("unexpected ply element: " + kind);
        } else if (tok == "property") {
            std::string type, name;
            ss >> type >> name;
            props.push_back(type + ":" + name);
        } else if (tok == "end_header") {
            header_done = true;
            break;
        }
    }
    if (!header_done) throw std::runtime_error("ply header missing end_header: " + path.string());
    if (props.size() != 60 || props.front() != "double:x" || props.back() != "int:label")
        throw std::runtime_error("unexpected splat ply layout: " + path.string());

    SplatSet set;
    set.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        for (int k = 0; k < 3; ++k) set.positions[i][k] = read_raw<double>(f);
        const double qw = read_raw<double>(f), qx = read_raw<double>(f), qy = read_raw<double>(f),
                     qz = read_raw<double>(f);
        set.rotations[i] = Quat(qw, qx, qy, qz);
        for (int k = 0; k < 3; ++k) set.log_scales[i][k] = read_raw<double>(f);
        set.logit_opacities[i] = read_raw<double>(f);
        for (int ch = 0; ch < 3; ++ch) set.sh_coeffs[i][std::size_t(ch)] = read_raw<double>(f);
        for (int j = 1; j < kShCoeffs; ++j)
            for (int ch = 0; ch < 3; ++ch)
                set.sh_coeffs[i][std::size_t(3 * j + ch)] = read_raw<double>(f);
        set.labels[i] = read_raw<int32_t>(f);
    }
    return set;
}

void save_image(const std::filesystem::path& path, const Image& img) {
    save_tensor(path, "float32", {img.height, img.width, img.channels}, img.data.data(),
                img.data.size() * sizeof(float));
}

Image load_image(const std::filesystem::path& path) {
    auto f = open_in(path, true);
    const auto dims = load_tensor_header(f, "float32");
    if (dims.size() != 3) throw std::runtime_error("image tensor must be rank 3");
    Image img(static_cast<int>(dims[1]), static_cast<int>(dims[0]), static_cast<int>(dims[2]));
    f.read(reinterpret_cast<char*>(img.data.data()),
           std::streamsize(img.data.size() * sizeof(float)));
    if (!f) throw std::runtime_error("truncated image tensor: " + path.string());
    return img;
}

void save_plane(const std::filesystem::path& path, const std::vector<float>& plane, int width,
                int height) {
    if (plane.size() != std::size_t(width) * height)
        throw std::invalid_argument("save_plane: size mismatch");
    save_tensor(path, "float32", {height, width}, plane.data(), plane.size() * sizeof(float));
}

std::vector<float> load_plane(const std::filesystem::path& path, int* width, int* height) {
    auto f = open_in(path, true);
    const auto dims = load_tensor_header(f, "float32");
    if (dims.size() != 2) throw std::runtime_error("plane tensor must be rank 2");
    std::vector<float> plane(std::size_t(dims[0]) * dims[1]);
    f.read(reinterpret_cast<char*>(plane.data()), std::streamsize(plane.size() * sizeof(float)));
    if (!f) throw std::runtime_error("truncated plane tensor: " + path.string());
    if (width) *width = int(dims[1]);
    if (height) *height = int(dims[0]);
    return plane;
}

void save_labels(const std::filesystem::path& path, const LabelImage& labels) {
    save_tensor(path, "int32", {labels.height, labels.width}, labels.data.data(),
                labels.data.size() * sizeof(int32_t));
}

LabelImage load_labels(const std::filesystem::path& path) {
    auto f = open_in(path, true);
    const auto dims = load_tensor_header(f, "int32");
    if (dims.size() != 2) throw std::runtime_error("label tensor must be rank 2");
    LabelImage li(static_cast<int>(dims[1]), static_cast<int>(dims[0]));
    f.read(reinterpret_cast<char*>(li.data.data()), std::streamsize(li.data.size() * 4));
    if (!f) throw std::runtime_error("truncated label tensor: " + path.string());
    return li;
}

void save_mask(const std::filesystem::path& path, const Mask& mask) {
    // Run-length encoded text: width height, then alternating run lengths
    // starting with zeros.
    auto f = open_out(path, false);
    f << "ltgs-mask " << mask.width << " " << mask.height << "\n";
    std::size_t i = 0;
    uint8_t cur = 0;
    std::size_t run = 0;
    for (; i < mask.data.size(); ++i) {
        const uint8_t v = mask.data[i] != 0;
        if (v == cur) {
            ++run;
        } else {
            f << run << " ";
            cur = v;
            run = 1;
        }
    }
    f << run << "\n";
}

Mask load_mask(const std::filesystem::path& path) {
    auto f = open_in(path, false);
    std::string magic;
    int w, h;
    f >> magic >> w >> h;
    if (magic != "ltgs-mask") throw std::runtime_error("not a mask file: " + path.string());
    Mask m(w, h);
    std::size_t i = 0;
    uint8_t cur = 0;
    std::size_t run;
    while (f >> run) {
        for (std::size_t k = 0; k < run; ++k, ++i) {
            if (i >= m.data.size()) throw std::runtime_error("mask runs overflow: " + path.string());
            m.data[i] = cur;
        }
        cur = !cur;
    }
    if (i != m.data.size()) throw std::runtime_error("mask runs underflow: " + path.string());
    return m;
}

void save_ppm(const std::filesystem::path& path, const Image& img) {
    if (img.channels != 3) throw std::invalid_argument("save_ppm: need 3 channels");
    auto f = open_out(path, true);
    f << "P6\n" << img.width << " " << img.height << "\n255\n";
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const float v = std::min(1.f, std::max(0.f, img.at(x, y, c)));
                f.put(char(int(v * 255.f + 0.5f)));
            }
}

namespace {

json camera_to_json(const Camera& cam) {
    json j;
    j["width"] = cam.width;
    j["height"] = cam.height;
    j["fx"] = cam.fx;
    j["fy"] = cam.fy;
    j["cx"] = cam.cx;
    j["cy"] = cam.cy;
    std::vector<double> R(9), T(3);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) R[std::size_t(3 * r + c)] = cam.pose.R(r, c);
    for (int k = 0; k < 3; ++k) T[std::size_t(k)] = cam.pose.T[k];
    j["R"] = R;
    j["T"] = T;
    return j;
}

Camera camera_from_json(const json& j) {
    Camera cam;
    cam.width = j.at("width");
    cam.height = j.at("height");
    cam.fx = j.at("fx");
    cam.fy = j.at("fy");
    cam.cx = j.at("cx");
    cam.cy = j.at("cy");
    const auto R = j.at("R").get<std::vector<double>>();
    const auto T = j.at("T").get<std::vector<double>>();
    if (R.size() != 9 || T.size() != 3) throw std::runtime_error("bad camera json");
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) cam.pose.R(r, c) = R[std::size_t(3 * r + c)];
    for (int k = 0; k < 3; ++k) cam.pose.T[k] = T[std::size_t(k)];
    cam.validate();
    return cam;
}

}  // namespace

void save_cameras_json(const std::filesystem::path& path, const std::vector<Camera>& cams) {
    json j = json::array();
    for (const auto& c : cams) j.push_back(camera_to_json(c));
    write_text(path, j.dump(2) + "\n");
}

std::vector<Camera> load_cameras_json(const std::filesystem::path& path) {
    const json j = json::parse(read_text(path));
    std::vector<Camera> cams;
    for (const auto& e : j) cams.push_back(camera_from_json(e));
    return cams;
}

void save_transform_json(const std::filesystem::path& path, const RigidTransform& t) {
    json j;
    std::vector<double> R(9), T(3);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) R[std::size_t(3 * r + c)] = t.R(r, c);
    for (int k = 0; k < 3; ++k) T[std::size_t(k)] = t.T[k];
    j["R"] = R;
    j["T"] = T;
    write_text(path, j.dump(2) + "\n");
}

RigidTransform load_transform_json(const std::filesystem::path& path) {
    const json j = json::parse(read_text(path));
    const auto R = j.at("R").get<std::vector<double>>();
    const auto T = j.at("T").get<std::vector<double>>();
    if (R.size() != 9 || T.size() != 3) throw std::runtime_error("bad transform json");
    RigidTransform t;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t.R(r, c) = R[std::size_t(3 * r + c)];
    for (int k = 0; k < 3; ++k) t.T[k] = T[std::size_t(k)];
    return t;
}

std::string read_text(const std::filesystem::path& path) {
    auto f = open_in(path, true);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto f = open_out(path, true);
    f << text;
}

std::string file_hash(const std::filesystem::path& path) {
    const std::string bytes = read_text(path);
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace ltgs::io
