#pragma once

// Conditional score network for one cascade block: a time-conditioned
// U-Net that takes the noisy missing channels concatenated with the
// current-order conditioning channels and returns a score estimate of the
// missing channels' shape. The raw network predicts a noise-like quantity;
// dividing by sigma(t) yields the score (VE parameterization).

#include <torch/torch.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "diffau/amplitude.hpp"
#include "diffau/sde_schedule.hpp"
#include "diffau/stft.hpp"

namespace diffau {

struct ScoreModelConfig {
    int block_order = 1;      // N: maps order N -> N+1
    int base_width = 32;
    int depth = 3;            // resolution levels
    int time_embed_dim = 128;

    int cond_channels() const { return 2 * num_sh_channels(block_order); }
    int out_channels() const { return 2 * (2 * block_order + 3); }
    int in_channels() const { return cond_channels() + out_channels(); }
    int pad_multiple() const { return 1 << depth; }

    void validate() const {
        if (block_order != 1 && block_order != 2) throw config_error("model: block_order must be 1 or 2");
        if (base_width < 4) throw config_error("model: base_width too small");
        if (depth < 2 || depth > 5) throw config_error("model: depth must be in [2, 5]");
        if (time_embed_dim < 8 || time_embed_dim % 2 != 0)
            throw config_error("model: time_embed_dim must be even and >= 8");
    }

    friend bool operator==(const ScoreModelConfig&, const ScoreModelConfig&) = default;
};

namespace nn {

inline torch::Tensor sinusoidal_embedding(const torch::Tensor& t, int dim) {
    const int half = dim / 2;
    torch::Tensor freqs = torch::exp(torch::linspace(0.0, std::log(1000.0), half, t.options()));
    torch::Tensor args = t.unsqueeze(-1) * freqs.unsqueeze(0) * kTwoPi;
    return torch::cat({args.sin(), args.cos()}, -1);
}

inline torch::nn::GroupNorm make_norm(int channels) {
    const int groups = std::max(1, std::min(8, channels / 4));
    return torch::nn::GroupNorm(torch::nn::GroupNormOptions(groups, channels));
}

struct ResBlockImpl : torch::nn::Module {
    torch::nn::GroupNorm norm1{nullptr}, norm2{nullptr};
    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
    torch::nn::Linear time_proj{nullptr};
    torch::nn::Conv2d skip{nullptr};
    bool has_skip = false;

    ResBlockImpl(int cin, int cout, int tdim) {
        norm1 = register_module("norm1", make_norm(cin));
        conv1 = register_module("conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(cin, cout, 3).padding(1)));
        time_proj = register_module("time_proj", torch::nn::Linear(tdim, cout));
        norm2 = register_module("norm2", make_norm(cout));
        conv2 = register_module("conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(cout, cout, 3).padding(1)));
        if (cin != cout) {
            skip = register_module("skip", torch::nn::Conv2d(torch::nn::Conv2dOptions(cin, cout, 1)));
            has_skip = true;
        }
    }

    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& temb) {
        torch::Tensor h = conv1(torch::silu(norm1(x)));
        h = h + time_proj(torch::silu(temb)).unsqueeze(-1).unsqueeze(-1);
        h = conv2(torch::silu(norm2(h)));
        return h + (has_skip ? skip(x) : x);
    }
};
TORCH_MODULE(ResBlock);

struct ScoreUNetImpl : torch::nn::Module {
    ScoreModelConfig cfg;
    torch::nn::Linear time_fc1{nullptr}, time_fc2{nullptr};
    torch::nn::Conv2d conv_in{nullptr}, conv_out{nullptr};
    torch::nn::GroupNorm norm_out{nullptr};
    std::vector<ResBlock> enc_blocks;
    std::vector<torch::nn::Conv2d> downs;
    std::vector<ResBlock> dec_blocks;
    std::vector<torch::nn::Conv2d> ups;
    std::vector<int> widths;

    explicit ScoreUNetImpl(const ScoreModelConfig& config) : cfg(config) {
        cfg.validate();
        const int tdim = cfg.time_embed_dim;
        time_fc1 = register_module("time_fc1", torch::nn::Linear(tdim, tdim));
        time_fc2 = register_module("time_fc2", torch::nn::Linear(tdim, tdim));

        widths.resize(static_cast<size_t>(cfg.depth));
        for (int i = 0; i < cfg.depth; ++i) widths[static_cast<size_t>(i)] = cfg.base_width << std::min(i, 2);

        conv_in = register_module(
            "conv_in", torch::nn::Conv2d(torch::nn::Conv2dOptions(cfg.in_channels(), widths[0], 3).padding(1)));

        // encoder: two residual units per level, strided conv between levels
        for (int lvl = 0; lvl < cfg.depth; ++lvl) {
            const int w = widths[static_cast<size_t>(lvl)];
            enc_blocks.push_back(register_module("enc" + std::to_string(lvl) + "a", ResBlock(w, w, tdim)));
            enc_blocks.push_back(register_module("enc" + std::to_string(lvl) + "b", ResBlock(w, w, tdim)));
            if (lvl + 1 < cfg.depth) {
                const int wn = widths[static_cast<size_t>(lvl) + 1];
                downs.push_back(register_module(
                    "down" + std::to_string(lvl),
                    torch::nn::Conv2d(torch::nn::Conv2dOptions(w, wn, 3).stride(2).padding(1))));
            }
        }
        // decoder: nearest-neighbor upsample + conv, skip concatenation
        for (int lvl = cfg.depth - 2; lvl >= 0; --lvl) {
            const int w_hi = widths[static_cast<size_t>(lvl) + 1];
            const int w = widths[static_cast<size_t>(lvl)];
            ups.push_back(register_module("up" + std::to_string(lvl),
                                          torch::nn::Conv2d(torch::nn::Conv2dOptions(w_hi, w, 3).padding(1))));
            dec_blocks.push_back(register_module("dec" + std::to_string(lvl) + "a", ResBlock(2 * w, w, tdim)));
            dec_blocks.push_back(register_module("dec" + std::to_string(lvl) + "b", ResBlock(w, w, tdim)));
        }

        norm_out = register_module("norm_out", make_norm(widths[0]));
        conv_out = register_module(
            "conv_out", torch::nn::Conv2d(torch::nn::Conv2dOptions(widths[0], cfg.out_channels(), 3).padding(1)));
        // zero init: the untrained score is identically zero
        torch::NoGradGuard no_grad;
        conv_out->weight.zero_();
        conv_out->bias.zero_();
    }

    // x: (B, in_channels, F, T); t: (B,) in [t_eps, 1]
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& t) {
        torch::Tensor temb = sinusoidal_embedding(t, cfg.time_embed_dim);
        temb = time_fc2(torch::silu(time_fc1(temb)));

        const int64_t f_in = x.size(2), t_in = x.size(3);
        const int64_t mult = cfg.pad_multiple();
        const int64_t pad_f = (mult - f_in % mult) % mult;
        const int64_t pad_t = (mult - t_in % mult) % mult;
        torch::Tensor h = torch::constant_pad_nd(x, {0, pad_t, 0, pad_f}, 0.0);

        std::vector<torch::Tensor> skips;
        h = conv_in(h);
        for (int lvl = 0; lvl < cfg.depth; ++lvl) {
            h = enc_blocks[static_cast<size_t>(2 * lvl)](h, temb);
            h = enc_blocks[static_cast<size_t>(2 * lvl + 1)](h, temb);
            if (lvl + 1 < cfg.depth) {
                skips.push_back(h);
                h = downs[static_cast<size_t>(lvl)](h);
            }
        }
        for (size_t d = 0; d < ups.size(); ++d) {
            h = at::upsample_nearest2d(h, {h.size(2) * 2, h.size(3) * 2});
            h = ups[d](h);
            torch::Tensor skip = skips[skips.size() - 1 - d];
            h = dec_blocks[2 * d](torch::cat({h, skip}, 1), temb);
            h = dec_blocks[2 * d + 1](h, temb);
        }
        h = conv_out(torch::silu(norm_out(h)));
        return h.slice(2, 0, f_in).slice(3, 0, t_in);
    }
};
TORCH_MODULE(ScoreUNet);

}  // namespace nn

// Trainable state of one block plus the front-end metadata that inference
// must share with training.
struct ScoreModelParams {
    ScoreModelConfig config;
    STFTConfig stft_config;
    AmplitudeTransformParams amplitude;
    NoiseSchedule schedule;
    nn::ScoreUNet net{nullptr};

    int64_t parameter_count() const {
        int64_t n = 0;
        for (const auto& p : net->parameters()) n += p.numel();
        return n;
    }
};

inline ScoreModelParams init_params(const ScoreModelConfig& cfg, const STFTConfig& stft_cfg,
                                    const AmplitudeTransformParams& amp, const NoiseSchedule& sched,
                                    std::uint64_t seed) {
    cfg.validate();
    stft_cfg.validate();
    amp.validate();
    sched.validate();
    torch::manual_seed(seed);
    ScoreModelParams params{cfg, stft_cfg, amp, sched, nn::ScoreUNet(cfg)};
    return params;
}

// Batched score evaluation: x_t (B, out, F, T), y (B, cond, F, T).
inline torch::Tensor score_eval_batch(const ScoreModelParams& params, const torch::Tensor& x_t,
                                      const torch::Tensor& y, const torch::Tensor& t) {
    if (x_t.dim() != 4 || y.dim() != 4) throw std::invalid_argument("score_eval: expected 4-d batched tensors");
    if (x_t.size(1) != params.config.out_channels() || y.size(1) != params.config.cond_channels() ||
        x_t.size(2) != y.size(2) || x_t.size(3) != y.size(3))
        throw std::invalid_argument("score_eval: tensor shapes do not match the model config");
    torch::Tensor raw = params.net->forward(torch::cat({x_t, y}, 1), t);
    torch::Tensor sigma_t =
        params.schedule.sigma_min * torch::pow(params.schedule.sigma_max / params.schedule.sigma_min, t);
    return raw / sigma_t.reshape({-1, 1, 1, 1});
}

// Single-item evaluation per the operation contract: x_t (out, F, T).
inline torch::Tensor score_eval(const ScoreModelParams& params, const torch::Tensor& x_t, const torch::Tensor& y,
                                double t) {
    if (!(t >= params.schedule.t_eps && t <= 1.0))
        throw std::invalid_argument("score_eval: t outside [t_eps, 1]");
    if (x_t.dim() != 3 || y.dim() != 3) throw std::invalid_argument("score_eval: expected 3-d (C, F, T) tensors");
    torch::Tensor tt = torch::full({1}, t, x_t.options());
    return score_eval_batch(params, x_t.unsqueeze(0), y.unsqueeze(0), tt).squeeze(0);
}

// ---------------------------------------------------------------------------
// Checkpoint container: magic, format version, JSON metadata (all configs),
// then named float32 tensors with explicit shapes. Loading validates the
// magic/version, rebuilds the module from the embedded config and fills
// every parameter by name; the payload round-trips bit-exactly.

inline constexpr char kCheckpointMagic[8] = {'D', 'A', 'U', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline nlohmann::json config_to_json(const ScoreModelParams& p) {
    return {{"model",
             {{"block_order", p.config.block_order},
              {"base_width", p.config.base_width},
              {"depth", p.config.depth},
              {"time_embed_dim", p.config.time_embed_dim}}},
            {"stft",
             {{"window_length", p.stft_config.window_length},
              {"hop", p.stft_config.hop},
              {"fft_size", p.stft_config.fft_size},
              {"window", p.stft_config.window}}},
            {"amplitude", {{"alpha", p.amplitude.alpha}, {"beta", p.amplitude.beta}}},
            {"schedule",
             {{"sigma_min", p.schedule.sigma_min},
              {"sigma_max", p.schedule.sigma_max},
              {"t_eps", p.schedule.t_eps}}}};
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw checkpoint_error(std::string("checkpoint truncated while reading ") + what);
    return v;
}

}  // namespace detail

inline void save_checkpoint(const ScoreModelParams& params, const std::filesystem::path& path) {
    const std::string meta = detail::config_to_json(params).dump();
    auto named = params.net->named_parameters();
    atomic_write(path, [&](std::ostream& out) {
        out.write(kCheckpointMagic, 8);
        detail::write_pod(out, kCheckpointVersion);
        detail::write_pod(out, static_cast<std::uint64_t>(meta.size()));
        out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
        detail::write_pod(out, static_cast<std::uint64_t>(named.size()));
        for (const auto& item : named) {
            torch::Tensor t = item.value().detach().to(torch::kFloat32).contiguous();
            detail::write_pod(out, static_cast<std::uint32_t>(item.key().size()));
            out.write(item.key().data(), static_cast<std::streamsize>(item.key().size()));
            detail::write_pod(out, static_cast<std::uint32_t>(t.dim()));
            for (int64_t d = 0; d < t.dim(); ++d) detail::write_pod(out, static_cast<std::int64_t>(t.size(d)));
            const std::uint64_t bytes = static_cast<std::uint64_t>(t.numel()) * 4;
            detail::write_pod(out, bytes);
            out.write(reinterpret_cast<const char*>(t.data_ptr<float>()), static_cast<std::streamsize>(bytes));
        }
    });
}

inline ScoreModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw checkpoint_error("cannot open checkpoint: " + path.string());

    char magic[8] = {};
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw checkpoint_error("not a checkpoint file: " + path.string());
    const auto version = detail::read_pod<std::uint32_t>(in, "version");
    if (version != kCheckpointVersion)
        throw checkpoint_error("unsupported checkpoint version " + std::to_string(version));

    const auto meta_len = detail::read_pod<std::uint64_t>(in, "metadata length");
    std::string meta(meta_len, '\0');
    in.read(meta.data(), static_cast<std::streamsize>(meta_len));
    if (!in) throw checkpoint_error("checkpoint truncated while reading metadata");

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(meta);
    } catch (const nlohmann::json::exception& e) {
        throw checkpoint_error(std::string("corrupt checkpoint metadata: ") + e.what());
    }

    ScoreModelParams params;
    try {
        params.config.block_order = j.at("model").at("block_order").get<int>();
        params.config.base_width = j.at("model").at("base_width").get<int>();
        params.config.depth = j.at("model").at("depth").get<int>();
        params.config.time_embed_dim = j.at("model").at("time_embed_dim").get<int>();
        params.stft_config.window_length = j.at("stft").at("window_length").get<int>();
        params.stft_config.hop = j.at("stft").at("hop").get<int>();
        params.stft_config.fft_size = j.at("stft").at("fft_size").get<int>();
        params.stft_config.window = j.at("stft").at("window").get<std::string>();
        params.amplitude.alpha = j.at("amplitude").at("alpha").get<double>();
        params.amplitude.beta = j.at("amplitude").at("beta").get<double>();
        params.schedule.sigma_min = j.at("schedule").at("sigma_min").get<double>();
        params.schedule.sigma_max = j.at("schedule").at("sigma_max").get<double>();
        params.schedule.t_eps = j.at("schedule").at("t_eps").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw checkpoint_error(std::string("checkpoint metadata missing fields: ") + e.what());
    }
    params.net = nn::ScoreUNet(params.config);

    auto named = params.net->named_parameters();
    const auto n_tensors = detail::read_pod<std::uint64_t>(in, "tensor count");
    if (n_tensors != named.size())
        throw checkpoint_error("checkpoint parameter count does not match the model");
    torch::NoGradGuard no_grad;
    for (std::uint64_t i = 0; i < n_tensors; ++i) {
        const auto name_len = detail::read_pod<std::uint32_t>(in, "name length");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw checkpoint_error("checkpoint truncated while reading a tensor name");
        const auto ndim = detail::read_pod<std::uint32_t>(in, "rank");
        std::vector<int64_t> dims(ndim);
        for (auto& d : dims) d = detail::read_pod<std::int64_t>(in, "dims");
        const auto bytes = detail::read_pod<std::uint64_t>(in, "data length");

        torch::Tensor* dst = named.find(name);
        if (dst == nullptr) throw checkpoint_error("checkpoint has unknown parameter '" + name + "'");
        if (dst->sizes() != torch::IntArrayRef(dims))
            throw checkpoint_error("checkpoint shape mismatch for '" + name + "'");
        if (bytes != static_cast<std::uint64_t>(dst->numel()) * 4)
            throw checkpoint_error("checkpoint size mismatch for '" + name + "'");
        torch::Tensor buf = torch::empty(dims, torch::kFloat32);
        in.read(reinterpret_cast<char*>(buf.data_ptr<float>()), static_cast<std::streamsize>(bytes));
        if (!in) throw checkpoint_error("checkpoint truncated while reading tensor data");
        dst->copy_(buf);
    }
    return params;
}

}  // namespace diffau
