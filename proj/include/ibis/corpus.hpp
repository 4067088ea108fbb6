#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ibis/mask.hpp"

namespace ibis {

struct Sample {
    std::string id;
    Image image;  // 8-bit grayscale
    Mask gt;
    std::string object_name;
    std::string modality;
};

struct ShapeParams {
    Index height = 96;
    Index width = 96;
    int min_ellipses = 1;
    int max_ellipses = 3;
    double min_semi_axis = 12.0;
    double max_semi_axis = 26.0;
    double min_aspect = 0.7;  // minor / major semi-axis
    double hole_probability = 0.2;
    double hole_scale = 0.25;  // hole semi-axes relative to the host ellipse
    int foreground_intensity = 170;
    int background_intensity = 70;
    double texture_amplitude = 15.0;
    double noise_sigma = 6.0;

    // Rejects zero-area or non-fitting shapes.
    void validate() const;
};

inline const std::vector<std::string> kObjectNames{"lesion", "nodule", "cyst", "polyp", "mass", "gland"};
inline const std::vector<std::string> kModalities{"CT", "MRI", "ultrasound", "X-ray", "PET"};

// Deterministic under `seed`; sample i draws from its own sub-stream.
std::vector<Sample> make_synthetic_corpus(int n, std::uint64_t seed, const ShapeParams& params = {});

}  // namespace ibis
