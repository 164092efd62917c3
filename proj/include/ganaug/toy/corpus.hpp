#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "ganaug/core/check.hpp"
#include "ganaug/core/pnm.hpp"
#include "ganaug/core/rng.hpp"
#include "ganaug/core/tensor.hpp"
#include "ganaug/data/manifest.hpp"

namespace ganaug::toy {

// Procedural corpus with known ground truth. Class is the blob shape family
// (lobed vs ellipse), "imaging modality" is a rendering style domain:
//   SYNTH_A  warm palette, smooth shading
//   SYNTH_B  cool palette with a vessel-like texture overlay
// Shape controls mean luminance (blob >= 0.53, background <= 0.30) and style
// controls warmth (mean R-B), so both oracles are exact on unedited renders.
struct ToyParams {
    int image_size = 64;  // 32, 64 or 128
    int n_videos = 20;
    int frames_per_video = 10;
    uint64_t seed = 1;

    void validate() const {
        check_arg(image_size == 32 || image_size == 64 || image_size == 128, "image_size must be 32, 64 or 128");
        check_arg(n_videos >= 10, "n_videos must be >= 10");
        check_arg(frames_per_video >= 1, "frames_per_video must be >= 1");
    }
};

inline const char* kLabelLobed = "neoplastic";
inline const char* kLabelRound = "non_neoplastic";
inline const char* kModalityWarm = "SYNTH_A";
inline const char* kModalityCool = "SYNTH_B";

constexpr float kBlobLuminanceMin = 0.53f;
constexpr float kBackgroundLuminanceMax = 0.30f;
constexpr float kSegmentationThreshold = 0.465f;  // midpoint; shared with the shape oracle

namespace detail {

struct ShapeInstance {
    bool lobed = false;
    double cx = 0, cy = 0;   // center in [-1,1] coords
    double r0 = 0.5;         // base radius
    int petals = 4;          // lobed only
    double amp = 0.2;        // lobed petal amplitude
    double phase = 0;        // lobed petal phase
    double aspect = 1.0;     // ellipse only
    double angle = 0;        // base orientation
};

struct FrameView {
    double rot = 0, dx = 0, dy = 0, scale = 1.0;  // viewpoint jitter
    bool cool = false;                            // modality
    double palette_jitter = 0;
    double mottle_phase1 = 0, mottle_phase2 = 0;
    double vessel_phase1 = 0, vessel_phase2 = 0;
};

inline ShapeInstance sample_shape(Rng rng, bool lobed) {
    ShapeInstance s;
    s.lobed = lobed;
    s.cx = rng.uniform(-0.15, 0.15);
    s.cy = rng.uniform(-0.15, 0.15);
    s.r0 = rng.uniform(0.36, 0.55);
    s.petals = static_cast<int>(rng.uniform_int(3, 6));
    s.amp = rng.uniform(0.12, 0.40);
    s.aspect = rng.uniform(0.70, 1.30);
    s.angle = rng.uniform(0, 2 * M_PI);
    s.phase = rng.uniform(0, 2 * M_PI);
    return s;
}

inline FrameView sample_view(Rng rng) {
    FrameView f;
    f.rot = rng.uniform(-0.20, 0.20);
    f.dx = rng.uniform(-0.12, 0.12);
    f.dy = rng.uniform(-0.12, 0.12);
    f.scale = rng.uniform(0.90, 1.10);
    f.cool = rng.coin();
    f.palette_jitter = rng.uniform(-0.02, 0.02);
    f.mottle_phase1 = rng.uniform(0, 2 * M_PI);
    f.mottle_phase2 = rng.uniform(0, 2 * M_PI);
    f.vessel_phase1 = rng.uniform(0, 2 * M_PI);
    f.vessel_phase2 = rng.uniform(0, 2 * M_PI);
    return f;
}

inline bool inside_shape(const ShapeInstance& s, const FrameView& f, double u, double v) {
    // frame jitter then base orientation, both inverse-applied to the pixel
    double px = (u - s.cx - f.dx) / f.scale;
    double py = (v - s.cy - f.dy) / f.scale;
    const double ca = std::cos(-(s.angle + f.rot)), sa = std::sin(-(s.angle + f.rot));
    const double qx = ca * px - sa * py;
    const double qy = sa * px + ca * py;
    if (s.lobed) {
        const double r = std::sqrt(qx * qx + qy * qy);
        const double theta = std::atan2(qy, qx);
        return r <= s.r0 * (1.0 + s.amp * std::cos(s.petals * theta + s.phase));
    }
    const double rx = s.r0, ry = s.r0 * s.aspect;
    return (qx / rx) * (qx / rx) + (qy / ry) * (qy / ry) <= 1.0;
}

struct Rgb {
    double r, g, b;
};

inline Rgb shade_pixel(const ShapeInstance& s, const FrameView& f, double u, double v, bool inside) {
    const double d2 = u * u + v * v;
    const double mottle = 0.02 * std::sin(5.1 * u + f.mottle_phase1) * std::sin(4.3 * v + f.mottle_phase2);
    Rgb c{};
    if (inside) {
        // inner shading keeps mean luminance >= kBlobLuminanceMin
        const double dxc = u - s.cx - f.dx, dyc = v - s.cy - f.dy;
        const double inner = std::max(0.0, 1.0 - (dxc * dxc + dyc * dyc) / (s.r0 * s.r0 * 1.9));
        const double lift = 0.05 * inner + f.palette_jitter;
        if (f.cool)
            c = {0.40 + lift, 0.78 + lift, 0.86 + lift};
        else
            c = {0.88 + lift, 0.56 + lift, 0.44 + lift};
    } else {
        const double shade = -0.04 * d2 + mottle + f.palette_jitter;
        if (f.cool)
            c = {0.10 + shade, 0.22 + shade, 0.30 + shade};
        else
            c = {0.36 + shade, 0.20 + shade, 0.12 + shade};
    }
    if (f.cool) {
        // vessel bands shift chroma only; mean of (r,g,b) is unchanged so the
        // luminance segmentation stays exact
        const double t = std::sin(9.0 * u + 2.3 * std::sin(5.0 * v + f.vessel_phase1)) *
                         std::cos(6.5 * v + 1.9 * std::sin(4.0 * u + f.vessel_phase2));
        if (std::abs(t) < 0.18) {
            c.r -= 0.05;
            c.g -= 0.02;
            c.b += 0.07;
        }
    }
    return c;
}

}  // namespace detail

// Deterministic render of one frame; mask_out (optional) receives the binary
// shape mask using the same inside test as the image.
inline TensorF render_frame(const ToyParams& params, const detail::ShapeInstance& shape,
                            const detail::FrameView& view, TensorF* mask_out = nullptr) {
    const int S = params.image_size;
    TensorF img(1, 3, S, S);
    if (mask_out != nullptr) mask_out->resize(1, 1, S, S);
    for (int y = 0; y < S; ++y) {
        const double v = (y + 0.5) / S * 2.0 - 1.0;
        for (int x = 0; x < S; ++x) {
            const double u = (x + 0.5) / S * 2.0 - 1.0;
            const bool inside = detail::inside_shape(shape, view, u, v);
            const auto c = detail::shade_pixel(shape, view, u, v, inside);
            img.at(0, 0, y, x) = static_cast<float>(std::clamp(c.r, 0.0, 1.0));
            img.at(0, 1, y, x) = static_cast<float>(std::clamp(c.g, 0.0, 1.0));
            img.at(0, 2, y, x) = static_cast<float>(std::clamp(c.b, 0.0, 1.0));
            if (mask_out != nullptr) mask_out->at(0, 0, y, x) = inside ? 1.0f : 0.0f;
        }
    }
    return img;
}

inline std::string mask_path_for(const std::string& image_path) {
    std::filesystem::path p(image_path);
    p.replace_extension();
    return p.string() + "_mask.pgm";
}

// Writes n_videos x frames_per_video images (plus masks) under out_dir and
// returns the manifest (also saved as out_dir/corpus.manifest). Each video has
// one fixed shape instance rendered from jittered viewpoints; modality is
// assigned per frame. Byte-identical on re-run with equal params.
inline data::Manifest build_corpus(const ToyParams& params, const std::filesystem::path& out_dir) {
    params.validate();
    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "images");

    data::Manifest manifest;
    manifest.vocabulary.labels = {kLabelLobed, kLabelRound};
    manifest.vocabulary.modalities = {"WLI", "NBI", "DYED", kModalityWarm, kModalityCool};
    manifest.provenance.command =
        format_msg("corpus build --size ", params.image_size, " --videos ", params.n_videos, " --frames ",
                   params.frames_per_video, " --seed ", params.seed);
    manifest.provenance.seed = params.seed;
    manifest.root = out_dir;

    Rng root(params.seed);
    for (int vi = 0; vi < params.n_videos; ++vi) {
        const bool lobed = (vi % 2 == 0);  // alternation keeps class counts within +-1 video
        const auto shape = detail::sample_shape(root.child("video").child(static_cast<uint64_t>(vi)), lobed);
        for (int fi = 0; fi < params.frames_per_video; ++fi) {
            const auto view = detail::sample_view(
                root.child("video").child(static_cast<uint64_t>(vi)).child("frame").child(static_cast<uint64_t>(fi)));
            char name[64];
            std::snprintf(name, sizeof(name), "images/v%03d_f%03d.ppm", vi, fi);
            TensorF mask;
            const TensorF img = render_frame(params, shape, view, &mask);
            write_ppm(out_dir / name, img);
            write_pgm(out_dir / mask_path_for(name), mask);

            data::ImageRecord rec;
            rec.path = name;
            rec.label = lobed ? kLabelLobed : kLabelRound;
            rec.modality = view.cool ? kModalityCool : kModalityWarm;
            rec.video_id = format_msg("v", vi);
            rec.origin = data::Origin::real;
            manifest.records.push_back(std::move(rec));
        }
    }
    manifest.validate();
    manifest.save(out_dir / "corpus.manifest");
    return manifest;
}

}  // namespace ganaug::toy
