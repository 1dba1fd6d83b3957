#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ltree/app/config.hpp"
#include "ltree/listops/listops.hpp"

namespace ltree::app
{

struct Manifest
{
    std::string profile;
    std::uint64_t seed = 0;
    std::size_t train = 0;
    std::size_t dev = 0;
    std::size_t test = 0;
    listops::GeneratorConfig generator;
};

// Writes train.jsonl, dev.jsonl, test.jsonl and manifest.json into `dir`
// (created if needed). Split s uses generator stream s, so the bytes depend
// only on (profile, seed).
Manifest generate_dataset(const DataProfile& profile, std::uint64_t seed, const std::filesystem::path& dir);

Manifest read_manifest(const std::filesystem::path& dir);

// Model-ready view of an example.
struct EncodedExample
{
    std::vector<std::size_t> tokens; // vocabulary ids, root first
    std::vector<int> heads;          // per word
    std::vector<int> tags;           // label index per word
};

EncodedExample encode(const listops::Example& example, const listops::Vocabulary& vocab, const listops::LabelSet& labels);
std::vector<EncodedExample> encode_all(
    const std::vector<listops::Example>& examples,
    const listops::Vocabulary& vocab,
    const listops::LabelSet& labels
);

// Throws InvalidArgument (mapped to exit code 2 by the CLI) when the file is
// missing.
std::vector<listops::Example> load_split(const std::filesystem::path& dir, const std::string& split);

}
