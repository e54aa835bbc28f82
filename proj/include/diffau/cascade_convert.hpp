#pragma once

// Boundary between the double-precision DSP grids and the float32 torch
// tensors used by the score models.

#include <torch/torch.h>

#include "diffau/tensors.hpp"

namespace diffau {

inline torch::Tensor to_tensor(const RealGrid& g) {
    torch::Tensor t = torch::empty({g.channels, g.bins, g.frames}, torch::kFloat32);
    float* dst = t.data_ptr<float>();
    for (size_t i = 0; i < g.data.size(); ++i) dst[i] = static_cast<float>(g.data[i]);
    return t;
}

inline RealGrid from_tensor(const torch::Tensor& t) {
    if (t.dim() != 3) throw std::invalid_argument("from_tensor: expected a (C, F, T) tensor");
    torch::Tensor c = t.detach().to(torch::kFloat32).contiguous();
    RealGrid g(static_cast<int>(c.size(0)), static_cast<int>(c.size(1)), static_cast<int>(c.size(2)));
    const float* src = c.data_ptr<float>();
    for (size_t i = 0; i < g.data.size(); ++i) g.data[i] = static_cast<double>(src[i]);
    return g;
}

}  // namespace diffau
