#pragma once

#include <vector>

#include "ganaug/core/pnm.hpp"
#include "ganaug/core/resize.hpp"
#include "ganaug/core/tensor.hpp"
#include "ganaug/data/manifest.hpp"

namespace ganaug::data {

inline TensorF load_image(const Manifest& m, const ImageRecord& rec, int size) {
    TensorF img = read_pnm(m.resolve(rec));
    check(img.c == 3, "expected RGB image: ", rec.path);
    if (img.h != size || img.w != size) img = resize_bilinear(img, size, size);
    return img;
}

inline TensorF load_image_batch(const Manifest& m, const std::vector<int>& indices, int size) {
    TensorF batch(static_cast<int>(indices.size()), 3, size, size);
    for (size_t i = 0; i < indices.size(); ++i) {
        const TensorF img = load_image(m, m.records[static_cast<size_t>(indices[i])], size);
        std::copy(img.v.begin(), img.v.end(), batch.sample(static_cast<int>(i)));
    }
    return batch;
}

// whole-corpus preload; desk-scale corpora fit in memory comfortably
inline TensorF load_all_images(const Manifest& m, int size) {
    std::vector<int> idx(m.records.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    return load_image_batch(m, idx, size);
}

inline TensorF slice_samples(const TensorF& all, const std::vector<int>& indices) {
    TensorF batch(static_cast<int>(indices.size()), all.c, all.h, all.w);
    for (size_t i = 0; i < indices.size(); ++i)
        std::copy(all.sample(indices[i]), all.sample(indices[i]) + all.sample_size(), batch.sample(static_cast<int>(i)));
    return batch;
}

}  // namespace ganaug::data
