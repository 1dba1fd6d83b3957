#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ltree/autodiff/parameter.hpp"
#include "ltree/nn/optim.hpp"

namespace ltree::app
{

inline constexpr std::uint32_t checkpoint_version = 1;

struct NamedTensor
{
    std::string name;
    Tensor<float> value;

    bool operator==(const NamedTensor&) const = default;
};

// Training snapshot. On disk (all integers and floats little-endian):
//   "LTREECKP" u32 version
//   u64 n, config text (key=value lines)
//   f64 best dev score, u64 epoch, f64 learning rate
//   u64 #params, then per tensor:
//       u32 n, name, u8 dtype (0 = float32), u32 rank, u64 dims[rank],
//       u64 #bytes, data
//   u8 has optimizer; if set: f64 lr, beta1, beta2, epsilon, u64 step,
//       u64 #moments, first moments then second moments (tensor records)
//   u32 CRC-32 of every preceding byte
struct Checkpoint
{
    std::uint32_t version = checkpoint_version;
    std::string config_text;
    double best_dev_score = 0.0;
    std::uint64_t epoch = 0;
    double learning_rate = 0.0;
    std::vector<NamedTensor> parameters;
    bool has_optimizer = false;
    nn::AdamState<float> optimizer;

    // Copies named parameter values into `store`; throws FormatError when a
    // name is missing or a shape differs.
    void restore_parameters(ParameterStore<float>& store) const;
};

Checkpoint make_checkpoint(
    const ParameterStore<float>& store,
    const nn::AdamState<float>* optimizer,
    const std::string& config_text,
    double best_dev_score,
    std::uint64_t epoch,
    double learning_rate
);

std::vector<std::uint8_t> serialize(const Checkpoint& checkpoint);
// Throws FormatError on bad magic, unsupported version, truncation or a
// checksum mismatch.
Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

bool operator==(const Checkpoint& a, const Checkpoint& b);

}
