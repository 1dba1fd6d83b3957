#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "ltree/listops/listops.hpp"
#include "ltree/model/tagger.hpp"

namespace ltree::app
{

// Dataset sizes and generator bounds for one task profile.
struct DataProfile
{
    std::string name;
    std::size_t train = 0;
    std::size_t dev = 0;
    std::size_t test = 0;
    listops::GeneratorConfig generator;
};

// "small" (10k/1k/1k, at most 40 words), "default" (90k/1k/1k, at most 60
// words) and "tiny" (500/100/100, at most 20 words; for smoke tests).
// Throws ConfigError for any other name.
DataProfile data_profile(std::string_view name);

enum class Estimator
{
    monte_carlo, // one Gumbel-perturbed structure per example
    zero_noise   // G = 0 during training as well
};

// Flat experiment description. Every field has a key=value spelling; see
// apply() for the accepted keys.
struct RunConfig
{
    std::string profile = "small";
    StructureMode structure = StructureMode::latent_tree;
    Estimator estimator = Estimator::monte_carlo;
    ParseMode relaxation = ParseMode::relaxed;
    double temperature = 1.0;
    std::uint64_t seed = 1;
    std::uint64_t data_seed = 1;
    std::size_t samples = 1;

    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip_norm = 5.0;
    std::size_t lr_patience = 5;
    double lr_decay = 0.9;
    bool restore_optimizer = false;

    std::size_t epochs = 100;
    std::size_t updates_per_epoch = 100;
    std::size_t batch_size = 64;
    double dropout = 0.0;

    std::size_t gcn_layers = 1;
    bool distance_bias = true;
    // ReLU on the last layer of the head/modifier attention MLPs.
    bool attention_output_relu = true;

    std::filesystem::path data_dir = "data/small";
    std::filesystem::path output_dir = "runs/default";

    // Sets one field from its textual form; throws ConfigError for unknown
    // keys or unparsable values.
    void apply(std::string_view key, std::string_view value);

    // Throws ConfigError when an invariant is violated (epochs >= 1, ...).
    void validate() const;

    // Noise and relaxation actually used during training; structure modes
    // without a parser ignore both.
    StructureOptions training_structure() const;
    StructureOptions evaluation_structure() const { return StructureOptions::evaluation(structure); }

    TaggerSpec model_spec() const;

    // Canonical key=value text, one field per line, sorted by key.
    std::string to_text() const;
    std::map<std::string, std::string> to_map() const;
};

std::string to_string(Estimator e);
Estimator estimator_from_string(std::string_view name);
// "forward-relaxed" / "straight-through" (aliases "relaxed", "st").
ParseMode relaxation_from_string(std::string_view name);
std::string relaxation_name(ParseMode mode);

// Parses key=value lines; '#' starts a comment, blank lines are ignored.
// Later keys override earlier ones.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

// Applies "key=value" overrides in order.
void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides);

}
